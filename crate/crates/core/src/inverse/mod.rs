//! Inverse design: per-pixel magnetization directions chosen so that the
//! equilibrium under a given field matches target measurements.
//!
//! Each active pixel carries a tilt `(a, b)`: the direction is the point at
//! geodesic distance `r = |(a, b)|` from +z along the azimuth of `(a, b)`,
//!
//! ```text
//! u = (a·sin r / r, b·sin r / r, cos r)
//! ```
//!
//! which is smooth at +z (the natural starting point). Tilts are wrapped
//! back into `r < π` after each step; the wrapped tilt gives the same
//! direction.
//!
//! The loss `Σ w_i (m_i − d_i)²` is minimized by Levenberg–Marquardt from
//! several starts. Residual Jacobians come from implicit differentiation of
//! the equilibrium (`H dq = −∂g/∂p`) or from central differences.

mod targets;

pub use targets::{parse_targets, serialize_targets, TargetDocument};

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::field::FieldSource;
use crate::lattice::{EncodingMatrix, FilmSpec, LatticeError, MagVector, PixelMask, PlateRef};
use crate::mechanics::{measure, solve, EnergySetup, MechanicsError, Model, Query, Solution, SolverOptions};

/// Central-difference step on the tilt parameters, rad.
pub const FD_STEP: f64 = 1e-4;

/// Largest tilt change in one optimizer step, rad.
const MAX_STEP: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InverseError {
    #[error("no targets given")]
    NoTargets,
    #[error("target {index}: weight must be positive and finite")]
    NonPositiveWeight { index: usize },
    #[error("target {index}: {message}")]
    InvalidTarget { index: usize, message: String },
    #[error("invalid design parameters: {0}")]
    InvalidParameters(String),
    #[error(transparent)]
    Mechanics(#[from] MechanicsError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Target {
    pub query: Query,
    pub value: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpec {
    pub mask: PixelMask,
    pub field: FieldSource,
    /// Anchor policy handed to the solver; empty means free-floating.
    pub anchors: Vec<PlateRef>,
    pub targets: Vec<Target>,
}

impl TargetSpec {
    /// Checks weights and that every query names plates and hinges of the
    /// mask's hinge graph.
    pub fn validate(&self, film: &FilmSpec) -> Result<(), InverseError> {
        if self.targets.is_empty() {
            return Err(InverseError::NoTargets);
        }
        let model = Model::new(&self.setup(EncodingMatrix::uniform(self.mask.clone(), MagVector::UP, 0.0), film))?;
        for (index, t) in self.targets.iter().enumerate() {
            if !(t.weight > 0.0 && t.weight.is_finite()) {
                return Err(InverseError::NonPositiveWeight { index });
            }
            if !t.value.is_finite() {
                return Err(InverseError::InvalidTarget { index, message: "value must be finite".into() });
            }
            t.query.check(&model).map_err(|e| InverseError::InvalidTarget { index, message: e.to_string() })?;
        }
        Ok(())
    }

    fn setup(&self, encoding: EncodingMatrix, film: &FilmSpec) -> EnergySetup {
        EnergySetup::new(encoding, *film, self.field).with_anchors(self.anchors.clone())
    }

    fn pixels(&self) -> Vec<(usize, usize)> {
        self.mask.active_cells().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientMode {
    Implicit,
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignOptions {
    pub starts: usize,
    pub seed: u64,
    pub max_iterations: usize,
    /// Stop once the loss is at or below this.
    pub loss_tolerance: f64,
    pub gradient: GradientMode,
    pub solver: SolverOptions,
}

impl Default for DesignOptions {
    fn default() -> Self {
        Self {
            starts: 4,
            seed: 0,
            max_iterations: 100,
            loss_tolerance: 1e-12,
            gradient: GradientMode::Implicit,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub start: usize,
    pub iteration: usize,
    pub loss: f64,
    pub damping: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub encoding: EncodingMatrix,
    /// Tilts `(a, b)` per active pixel, row-major.
    pub params: Vec<f64>,
    pub loss: f64,
    pub iterations: usize,
    /// False when the loss tolerance was not reached; the result is then the
    /// best point found.
    pub converged: bool,
    /// Index of the winning start.
    pub start: usize,
    /// Accepted iterates of every start, in start order.
    pub trace: Vec<TraceRow>,
}

impl Design {
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("start,iteration,loss,damping\n");
        for r in &self.trace {
            let _ = writeln!(s, "{},{},{:.9e},{:.3e}", r.start, r.iteration, r.loss, r.damping);
        }
        s
    }
}

/// Unit direction of a tilt and its derivatives along `a` and `b`.
pub fn tilt_direction(a: f64, b: f64) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
    let r2 = a * a + b * b;
    let r = r2.sqrt();
    // s = sin r / r, t = s'(r) / r
    let (s, t) = if r < 1e-4 {
        (1.0 - r2 / 6.0 + r2 * r2 / 120.0, -1.0 / 3.0 + r2 / 30.0)
    } else {
        let s = r.sin() / r;
        (s, (r.cos() - s) / r2)
    };
    let u = Vector3::new(a * s, b * s, r.cos());
    let du_da = Vector3::new(s + a * a * t, a * b * t, -a * s);
    let du_db = Vector3::new(a * b * t, s + b * b * t, -b * s);
    (u, du_da, du_db)
}

/// Tilt of a unit direction; the inverse of [`tilt_direction`] for `r < π`.
pub fn direction_tilt(u: Vector3<f64>) -> (f64, f64) {
    let h = u.x.hypot(u.y);
    if h == 0.0 {
        return if u.z >= 0.0 { (0.0, 0.0) } else { (std::f64::consts::PI, 0.0) };
    }
    let r = h.atan2(u.z);
    (u.x / h * r, u.y / h * r)
}

fn wrap(params: &mut [f64]) {
    use std::f64::consts::{PI, TAU};
    for ab in params.chunks_mut(2) {
        let r = ab[0].hypot(ab[1]);
        if r >= PI {
            // same direction, reached the other way round
            let rr = r.rem_euclid(TAU);
            let (target, sign) = if rr > PI { (TAU - rr, -1.0) } else { (rr, 1.0) };
            let k = sign * target / r;
            ab[0] *= k;
            ab[1] *= k;
        }
    }
}

fn check_params(spec: &TargetSpec, params: &[f64]) -> Result<(), InverseError> {
    let n = 2 * spec.mask.active_count();
    if params.len() != n {
        return Err(InverseError::InvalidParameters(format!("expected {n} values, got {}", params.len())));
    }
    for (k, ab) in params.chunks(2).enumerate() {
        if !(ab[0].is_finite() && ab[1].is_finite()) || ab[0].hypot(ab[1]) >= std::f64::consts::PI {
            return Err(InverseError::InvalidParameters(format!("pixel {k}: tilt must be finite with |(a, b)| < π")));
        }
    }
    Ok(())
}

/// Encoding with the tilted directions; split pixels get one direction for
/// both triangles.
pub fn encoding_from_params(spec: &TargetSpec, film: &FilmSpec, params: &[f64]) -> Result<EncodingMatrix, InverseError> {
    check_params(spec, params)?;
    let mut e = EncodingMatrix::uniform(spec.mask.clone(), MagVector::UP, film.remanence_default);
    for (k, (r, c)) in spec.pixels().into_iter().enumerate() {
        let (u, _, _) = tilt_direction(params[2 * k], params[2 * k + 1]);
        e.set(r, c, Some(MagVector::from_direction(u)?));
    }
    Ok(e)
}

/// Tilts reproducing `e`'s pixel vectors; split pixels use triangle `A`.
pub fn params_from_encoding(spec: &TargetSpec, e: &EncodingMatrix) -> Result<Vec<f64>, InverseError> {
    let mut out = Vec::with_capacity(2 * spec.mask.active_count());
    for (r, c) in spec.pixels() {
        let v = e.get(r, c).ok_or_else(|| InverseError::InvalidParameters(format!("pixel ({r}, {c}) has no vector")))?;
        let (a, b) = direction_tilt(v.direction()?);
        out.extend([a, b]);
    }
    Ok(out)
}

struct Evaluation {
    solution: Solution,
    residuals: DVector<f64>,
}

impl Evaluation {
    fn loss(&self) -> f64 {
        self.residuals.norm_squared()
    }
}

fn evaluate(spec: &TargetSpec, film: &FilmSpec, params: &[f64], solver: &SolverOptions) -> Result<Evaluation, InverseError> {
    let e = encoding_from_params(spec, film, params)?;
    let solution = solve(&spec.setup(e, film), solver)?;
    let mut residuals = DVector::zeros(spec.targets.len());
    for (i, t) in spec.targets.iter().enumerate() {
        let m = measure(&solution.model, &solution.state, &t.query)?;
        residuals[i] = t.weight.sqrt() * (m - t.value);
    }
    Ok(Evaluation { solution, residuals })
}

/// Forward measurements of `params`, one per target.
pub fn forward_measurements(spec: &TargetSpec, film: &FilmSpec, params: &[f64], solver: &SolverOptions) -> Result<Vec<f64>, InverseError> {
    let e = encoding_from_params(spec, film, params)?;
    let sol = solve(&spec.setup(e, film), solver)?;
    spec.targets.iter().map(|t| Ok(measure(&sol.model, &sol.state, &t.query)?)).collect()
}

/// `∂(√w_i · m_i)/∂p` by differentiating the equilibrium condition.
fn implicit_jacobian(spec: &TargetSpec, params: &[f64], ev: &Evaluation) -> Result<DMatrix<f64>, InverseError> {
    let model = &ev.solution.model;
    let q = &ev.solution.state.coords;
    let n = model.n_coords();
    let np = params.len();
    let nt = spec.targets.len();
    if n == 0 {
        return Ok(DMatrix::zeros(nt, np));
    }

    // measurement sensitivities to the coordinates
    let h = 1e-6;
    let mut dm = DMatrix::zeros(nt, n);
    let mut x = q.clone();
    for j in 0..n {
        x[j] = q[j] + h;
        let sp = model.state(x.clone())?;
        x[j] = q[j] - h;
        let sm = model.state(x.clone())?;
        x[j] = q[j];
        for (i, t) in spec.targets.iter().enumerate() {
            dm[(i, j)] = t.weight.sqrt() * (measure(model, &sp, &t.query)? - measure(model, &sm, &t.query)?) / (2.0 * h);
        }
    }

    // ∂g/∂p through the plate moments
    let pixel: std::collections::HashMap<(usize, usize), usize> = spec.pixels().into_iter().enumerate().map(|(k, rc)| (rc, k)).collect();
    let mut dg = DMatrix::zeros(n, np);
    for (p, plate) in model.graph.plates.iter().enumerate() {
        let scale = model.moments[p].norm();
        if scale == 0.0 {
            continue;
        }
        let k = pixel[&(plate.id.row, plate.id.col)];
        let (_, du_da, du_db) = tilt_direction(params[2 * k], params[2 * k + 1]);
        let ga = model.zeeman_gradient_for_moment(q, p, du_da * scale)?;
        let gb = model.zeeman_gradient_for_moment(q, p, du_db * scale)?;
        for j in 0..n {
            dg[(j, 2 * k)] += ga[j];
            dg[(j, 2 * k + 1)] += gb[j];
        }
    }

    let hess = model.hessian(q)?;
    let dq = match hess.clone().cholesky() {
        Some(c) => c.solve(&dg),
        None => hess
            .lu()
            .solve(&dg)
            .ok_or_else(|| InverseError::Mechanics(MechanicsError::InconsistentState("singular Hessian at the equilibrium".into())))?,
    };
    Ok(-(dm * dq))
}

fn fd_jacobian(spec: &TargetSpec, film: &FilmSpec, params: &[f64], solver: &SolverOptions) -> Result<DMatrix<f64>, InverseError> {
    let np = params.len();
    let mut jac = DMatrix::zeros(spec.targets.len(), np);
    let mut x = params.to_vec();
    for k in 0..np {
        x[k] = params[k] + FD_STEP;
        wrap(&mut x);
        let rp = evaluate(spec, film, &x, solver)?.residuals;
        x.copy_from_slice(params);
        x[k] = params[k] - FD_STEP;
        wrap(&mut x);
        let rm = evaluate(spec, film, &x, solver)?.residuals;
        x.copy_from_slice(params);
        jac.set_column(k, &((rp - rm) / (2.0 * FD_STEP)));
    }
    Ok(jac)
}

fn jacobian(spec: &TargetSpec, film: &FilmSpec, params: &[f64], ev: &Evaluation, mode: GradientMode, solver: &SolverOptions) -> Result<DMatrix<f64>, InverseError> {
    match mode {
        GradientMode::Implicit => implicit_jacobian(spec, params, ev),
        GradientMode::FiniteDifference => fd_jacobian(spec, film, params, solver),
    }
}

/// Loss `Σ w_i (m_i − d_i)²` and its gradient over the tilt parameters.
pub fn loss_and_gradient(
    params: &[f64],
    spec: &TargetSpec,
    film: &FilmSpec,
    mode: GradientMode,
    solver: &SolverOptions,
) -> Result<(f64, Vec<f64>), InverseError> {
    spec.validate(film)?;
    let ev = evaluate(spec, film, params, solver)?;
    let jac = jacobian(spec, film, params, &ev, mode, solver)?;
    let grad = jac.transpose() * &ev.residuals * 2.0;
    Ok((ev.loss(), grad.as_slice().to_vec()))
}

struct StartResult {
    params: Vec<f64>,
    loss: f64,
    iterations: usize,
    converged: bool,
    trace: Vec<TraceRow>,
}

fn levenberg_marquardt(spec: &TargetSpec, film: &FilmSpec, p0: Vec<f64>, options: &DesignOptions, start: usize) -> Result<StartResult, InverseError> {
    let solver = &options.solver;
    let mut p = p0;
    let mut ev = evaluate(spec, film, &p, solver)?;
    let mut loss = ev.loss();
    let mut trace = vec![TraceRow { start, iteration: 0, loss, damping: 0.0 }];
    let mut damping = 0.0;
    let mut iterations = 0;
    while iterations < options.max_iterations && loss > options.loss_tolerance {
        let jac = jacobian(spec, film, &p, &ev, options.gradient, solver)?;
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &ev.residuals;
        if g.amax() == 0.0 {
            break;
        }
        if damping == 0.0 {
            damping = 1e-3 * jtj.diagonal().amax().max(1e-12);
        }
        let n = p.len();
        let mut accepted = false;
        for _ in 0..30 {
            let a = &jtj + DMatrix::identity(n, n) * damping;
            let Some(chol) = a.cholesky() else {
                damping *= 4.0;
                continue;
            };
            let mut step = -chol.solve(&g);
            let norm = step.norm();
            if norm > MAX_STEP {
                step *= MAX_STEP / norm;
            }
            let mut trial: Vec<f64> = p.iter().zip(step.iter()).map(|(x, d)| x + d).collect();
            wrap(&mut trial);
            match evaluate(spec, film, &trial, solver) {
                Ok(t) if t.loss() < loss => {
                    p = trial;
                    loss = t.loss();
                    ev = t;
                    damping = (damping / 3.0).max(1e-15);
                    accepted = true;
                    break;
                }
                Ok(_) | Err(InverseError::Mechanics(MechanicsError::NoConvergence { .. })) => damping *= 4.0,
                Err(e) => return Err(e),
            }
        }
        if !accepted {
            break;
        }
        iterations += 1;
        trace.push(TraceRow { start, iteration: iterations, loss, damping });
    }
    Ok(StartResult { converged: loss <= options.loss_tolerance, params: p, loss, iterations, trace })
}

/// Starting tilts: start 0 is uniform +z; the others are random directions
/// drawn from a ChaCha stream keyed by `seed` and the start index.
pub fn start_params(spec: &TargetSpec, seed: u64, start: usize) -> Vec<f64> {
    let n = spec.mask.active_count();
    if start == 0 {
        return vec![0.0; 2 * n];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(start as u64);
    let mut out = Vec::with_capacity(2 * n);
    for _ in 0..n {
        // uniform on the sphere, cap around −z excluded
        let z: f64 = rng.random_range(-0.95..1.0);
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let r = z.acos();
        out.extend([r * phi.cos(), r * phi.sin()]);
    }
    out
}

/// Multi-start design. Starts run in parallel; the lowest loss wins, ties go
/// to the lower start index, so the result depends only on the inputs.
pub fn design_encoding(spec: &TargetSpec, film: &FilmSpec, options: &DesignOptions) -> Result<Design, InverseError> {
    spec.validate(film)?;
    let starts = options.starts.max(1);
    let runs: Vec<Result<StartResult, InverseError>> = (0..starts)
        .into_par_iter()
        .map(|s| levenberg_marquardt(spec, film, start_params(spec, options.seed, s), options, s))
        .collect();
    let mut best: Option<(usize, &StartResult)> = None;
    let mut first_error = None;
    for (s, run) in runs.iter().enumerate() {
        match run {
            Ok(r) => {
                if best.is_none_or(|(_, b)| r.loss < b.loss) {
                    best = Some((s, r));
                }
            }
            Err(e) => {
                first_error.get_or_insert_with(|| e.clone());
            }
        }
    }
    let Some((start, b)) = best else {
        return Err(first_error.expect("at least one start ran"));
    };
    let trace = runs.iter().filter_map(|r| r.as_ref().ok()).flat_map(|r| r.trace.iter().copied()).collect();
    Ok(Design {
        encoding: encoding_from_params(spec, film, &b.params)?,
        params: b.params.clone(),
        loss: b.loss,
        iterations: b.iterations,
        converged: b.converged,
        start,
        trace,
    })
}
