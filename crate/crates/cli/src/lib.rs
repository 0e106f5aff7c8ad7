//! `magpixel` command line and local API service.

pub mod ops;
pub mod service;

use std::ffi::OsString;
use std::fs;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use magpixel::mechanics::SolverOptions;
use nalgebra::Vector3;

use ops::OpError;

#[derive(Parser)]
#[command(
    name = "magpixel",
    version,
    about = "Design, reprogram, simulate and image magnetic pixel films",
    after_help = "Fields are in mT as x,y,z without spaces; lengths in mm.\n\
                  Exit codes: 0 success, 1 validation error, 2 solver non-convergence, 3 I/O error.\n\
                  Errors are printed on one line as `error[kind]: message`."
)]
struct Cli {
    /// Seed for randomized steps.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a named template as `.mpx`.
    Template {
        #[arg(long)]
        name: String,
        /// Grid size, e.g. 16x16; the template default when omitted.
        #[arg(long, value_parser = ops::parse_dims)]
        dims: Option<(usize, usize)>,
        /// Output path; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check an `.mpx` against the encoding rules.
    Validate {
        #[arg(long)]
        encoding: PathBuf,
    },
    /// Apply a `.mps` session to an encoding.
    Reprogram {
        #[arg(long)]
        encoding: PathBuf,
        #[arg(long)]
        session: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the folded equilibrium and write the mesh and load trace.
    Simulate {
        #[arg(long)]
        encoding: PathBuf,
        /// Applied field, mT; the document's own field when omitted.
        #[arg(long, value_parser = ops::parse_field, allow_hyphen_values = true)]
        field: Option<Vector3<f64>>,
        /// Include self-weight for a film of this density, g/cm³.
        #[arg(long, value_name = "DENSITY")]
        gravity: Option<f64>,
        /// Continuation intervals between zero and full field.
        #[arg(long, default_value_t = 20)]
        steps: usize,
        /// Newton iteration cap per continuation step.
        #[arg(long, default_value_t = 200)]
        max_iterations: usize,
        /// Reading recorded in the trace, e.g. `max_z_displacement`.
        #[arg(long)]
        query: Option<String>,
        /// OBJ mesh output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// CSV trace output.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Render Bz above the film as PGM or CSV (by extension).
    Imagemap {
        #[arg(long)]
        encoding: PathBuf,
        /// Plane height above the film mid-plane, mm.
        #[arg(long)]
        z: f64,
        #[arg(long, value_parser = ops::parse_dims)]
        res: (usize, usize),
        #[arg(long)]
        out: PathBuf,
    },
    /// Design an encoding for the targets in a `.mpt`.
    Invert {
        #[arg(long)]
        targets: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// CSV optimizer trace output.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        starts: usize,
        #[arg(long, default_value_t = 100)]
        max_iterations: usize,
    },
    /// Host the local HTTP API until interrupted.
    Serve {
        #[arg(long, default_value_t = 8787)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
    },
}

fn read(path: &Path) -> Result<String, OpError> {
    fs::read_to_string(path).map_err(|e| OpError::io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), OpError> {
    fs::write(path, bytes).map_err(|e| OpError::io(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), OpError> {
    match out {
        Some(p) => write(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Runs one invocation and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            let first = e.to_string().lines().next().unwrap_or_default().trim_start_matches("error: ").to_string();
            eprintln!("{}", OpError::validation(first).line());
            return ops::ErrorKind::Validation.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.line());
            e.kind.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<(), OpError> {
    match cli.command {
        Command::Template { name, dims, out } => emit(out.as_deref(), &ops::template_text(&name, dims)?),
        Command::Validate { encoding } => {
            let violations = ops::validate_text(&read(&encoding)?)?;
            if violations.is_empty() {
                println!("ok");
                Ok(())
            } else {
                let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
                Err(OpError::validation(list.join("; ")))
            }
        }
        Command::Reprogram { encoding, session, out } => {
            let r = ops::reprogram_text(&read(&encoding)?, &read(&session)?)?;
            for (step, n) in &r.notices {
                eprintln!("notice: step {step}: {n}");
            }
            emit(out.as_deref(), &r.mpx)
        }
        Command::Simulate { encoding, field, gravity, steps, max_iterations, query, out, trace } => {
            let options = SolverOptions { steps, max_iterations, ..SolverOptions::default() };
            let sim = ops::simulate_text(&read(&encoding)?, field, gravity, &options, query.as_deref())?;
            if let Some(p) = out {
                write(&p, sim.obj.as_bytes())?;
            }
            if let Some(p) = trace {
                write(&p, sim.trace_csv.as_bytes())?;
            }
            println!("{} = {:.6}", sim.query, sim.displacement);
            Ok(())
        }
        Command::Imagemap { encoding, z, res, out } => {
            let map = ops::imagemap_text(&read(&encoding)?, z, res)?;
            match out.extension().and_then(|e| e.to_str()) {
                Some("pgm") => write(&out, &map.to_pgm()),
                Some("csv") => write(&out, map.to_csv().as_bytes()),
                _ => Err(OpError::validation(format!("{}: output must end in .pgm or .csv", out.display()))),
            }
        }
        Command::Invert { targets, out, trace, starts, max_iterations } => {
            let base = targets.parent().map(Path::to_path_buf).unwrap_or_default();
            let mask_source = |rel: &str| fs::read_to_string(base.join(rel)).map_err(|e| e.to_string());
            let inv = ops::invert_text(&read(&targets)?, mask_source, cli.seed, starts, max_iterations)?;
            write(&out, inv.mpx.as_bytes())?;
            if let Some(p) = trace {
                write(&p, inv.trace_csv.as_bytes())?;
            }
            println!("loss = {:.6e}, converged = {}, iterations = {}", inv.loss, inv.converged, inv.iterations);
            Ok(())
        }
        Command::Serve { port, host } => {
            let rt = tokio::runtime::Runtime::new().map_err(|e| OpError::io(e.to_string()))?;
            rt.block_on(service::serve(SocketAddr::new(host, port)))
        }
    }
}
