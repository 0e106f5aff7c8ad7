//! Operations shared by the command line and the service. Everything takes
//! and returns document text, so both front ends emit identical bytes.

use std::fmt;

use magpixel::encode::{parse, parse_with_violations, serialize, template, EncodeError, EncodingDocument, FormatError, MechanicsHints, TEMPLATE_NAMES};
use magpixel::field::{film_field_map, FieldError, FieldMap, FieldSource};
use magpixel::inverse::{design_encoding, parse_targets, DesignOptions, InverseError};
use magpixel::lattice::{FilmSpec, PixelMask, PlateRef, Violation};
use magpixel::mechanics::{measure, solve, to_obj, trace_csv, EnergySetup, MechanicsError, Pose, Query, SolverOptions};
use magpixel::reprogram::{apply_session, parse_session, Notice, ReprogramError};
use nalgebra::Vector3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    NoConvergence,
    Io,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Validation => 1,
            ErrorKind::NoConvergence => 2,
            ErrorKind::Io => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorKind::Validation => "validation",
            ErrorKind::NoConvergence => "no_convergence",
            ErrorKind::Io => "io",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpError {
    pub kind: ErrorKind,
    pub message: String,
}

impl OpError {
    pub fn validation(message: impl Into<String>) -> Self {
        Self { kind: ErrorKind::Validation, message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self { kind: ErrorKind::Io, message: message.into() }
    }

    /// `error[kind]: message` on one line.
    pub fn line(&self) -> String {
        format!("error[{}]: {}", self.kind.as_str(), self.message.replace(['\n', '\r'], " "))
    }
}

impl fmt::Display for OpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.line())
    }
}

impl From<FormatError> for OpError {
    fn from(e: FormatError) -> Self {
        Self::validation(e.to_string())
    }
}

impl From<EncodeError> for OpError {
    fn from(e: EncodeError) -> Self {
        Self::validation(e.to_string())
    }
}

impl From<FieldError> for OpError {
    fn from(e: FieldError) -> Self {
        Self::validation(e.to_string())
    }
}

impl From<ReprogramError> for OpError {
    fn from(e: ReprogramError) -> Self {
        Self::validation(e.to_string())
    }
}

impl From<MechanicsError> for OpError {
    fn from(e: MechanicsError) -> Self {
        let kind = match e {
            MechanicsError::NoConvergence { .. } => ErrorKind::NoConvergence,
            _ => ErrorKind::Validation,
        };
        Self { kind, message: e.to_string() }
    }
}

impl From<InverseError> for OpError {
    fn from(e: InverseError) -> Self {
        match e {
            InverseError::Mechanics(m) => m.into(),
            other => Self::validation(other.to_string()),
        }
    }
}

/// `"16x16"` as (rows, cols).
pub fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (r, c) = s.split_once('x').ok_or_else(|| format!("dimensions {s:?} must look like 16x16"))?;
    let r: usize = r.parse().map_err(|_| format!("bad row count in {s:?}"))?;
    let c: usize = c.parse().map_err(|_| format!("bad column count in {s:?}"))?;
    if r == 0 || c == 0 {
        return Err(format!("dimensions {s:?} must be positive"));
    }
    Ok((r, c))
}

/// `"x,y,z"` in mT, no spaces.
pub fn parse_field(s: &str) -> Result<Vector3<f64>, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 || s.contains(char::is_whitespace) {
        return Err(format!("field {s:?} must be three comma-separated numbers without spaces"));
    }
    let mut v = Vector3::zeros();
    for (k, p) in parts.iter().enumerate() {
        v[k] = p.parse::<f64>().map_err(|_| format!("field component {p:?} is not a number"))?;
        if !v[k].is_finite() {
            return Err(format!("field component {p:?} is not finite"));
        }
    }
    Ok(v)
}

pub fn template_names() -> &'static [&'static str] {
    &TEMPLATE_NAMES
}

/// Canonical `.mpx` of a named template; `dims` defaults to the template's own.
pub fn template_text(name: &str, dims: Option<(usize, usize)>) -> Result<String, OpError> {
    let dims = match dims {
        Some(d) => d,
        None => name.parse::<magpixel::encode::TemplateName>()?.default_dims(),
    };
    Ok(serialize(&template(name, dims)?))
}

/// Rule violations of an `.mpx`; syntax and film errors fail outright.
pub fn validate_text(mpx: &str) -> Result<Vec<Violation>, OpError> {
    Ok(parse_with_violations(mpx)?.1)
}

pub struct Reprogrammed {
    pub mpx: String,
    pub notices: Vec<(usize, Notice)>,
}

pub fn reprogram_text(mpx: &str, mps: &str) -> Result<Reprogrammed, OpError> {
    let mut doc = parse(mpx)?;
    let session = parse_session(mps)?;
    let (encoding, notices) = apply_session(&doc.encoding, &session)?;
    doc.encoding = encoding;
    Ok(Reprogrammed { mpx: serialize(&doc), notices })
}

pub struct Simulation {
    pub obj: String,
    pub trace_csv: String,
    pub query: Query,
    /// Reading of `query` at the final field.
    pub displacement: f64,
    pub plates: Vec<PlateRef>,
    pub poses: Vec<Pose>,
}

/// Equilibrium under `field` (the document's own field when `None`). The
/// default reading is the probe centroid displacement when the document
/// names a probe, else the largest vertical displacement. `gravity` is a
/// film density in g/cm³.
pub fn simulate_text(
    mpx: &str,
    field: Option<Vector3<f64>>,
    gravity: Option<f64>,
    options: &SolverOptions,
    query: Option<&str>,
) -> Result<Simulation, OpError> {
    let doc = parse(mpx)?;
    let hints = doc.mechanics.clone().unwrap_or(MechanicsHints { anchors: vec![], probe: vec![], field: Vector3::zeros() });
    let field = field.unwrap_or(hints.field);
    let query = match query {
        Some(q) => q.parse::<Query>()?,
        None if hints.probe.is_empty() => Query::MaxZDisplacement,
        None => Query::CentroidDisplacement(hints.probe.clone()),
    };
    if options.steps == 0 || options.max_iterations == 0 {
        return Err(OpError::validation("steps and max_iterations must be at least 1"));
    }
    let mut setup = EnergySetup::new(doc.encoding, doc.film, FieldSource::uniform(field)).with_anchors(hints.anchors);
    setup.gravity = gravity;
    let sol = solve(&setup, options)?;
    let displacement = measure(&sol.model, &sol.state, &query)?;
    Ok(Simulation {
        obj: to_obj(&sol.model, &sol.state)?,
        trace_csv: trace_csv(&sol, &query)?,
        query,
        displacement,
        plates: sol.model.graph.plates.iter().map(|p| p.id).collect(),
        poses: sol.state.poses.clone(),
    })
}

pub fn imagemap_text(mpx: &str, z: f64, res: (usize, usize)) -> Result<FieldMap, OpError> {
    let doc = parse(mpx)?;
    Ok(film_field_map(&doc.encoding, &doc.film, z, res)?)
}

pub struct Inversion {
    pub mpx: String,
    pub trace_csv: String,
    pub loss: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Design from an `.mpt`. `mask_source` supplies the `.mpx` text named by
/// `mask_from`. Failing to reach the loss tolerance is not an error.
pub fn invert_text(
    mpt: &str,
    mask_source: impl FnOnce(&str) -> Result<String, String>,
    seed: u64,
    starts: usize,
    max_iterations: usize,
) -> Result<Inversion, OpError> {
    let load = |path: &str| -> Result<PixelMask, String> {
        let text = mask_source(path)?;
        parse(&text).map(|d| d.encoding.mask).map_err(|e| e.to_string())
    };
    let doc = parse_targets(mpt, load)?;
    let film = FilmSpec::default();
    let spec = doc.spec();
    let options = DesignOptions { seed, starts, max_iterations, ..DesignOptions::default() };
    let design = design_encoding(&spec, &film, &options)?;
    let mut out = EncodingDocument::new(&doc.label, film, design.encoding.clone());
    out.mechanics = Some(MechanicsHints { anchors: doc.anchors.clone(), probe: vec![], field: doc.field_mt });
    Ok(Inversion {
        mpx: serialize(&out),
        trace_csv: design.trace_csv(),
        loss: design.loss,
        converged: design.converged,
        iterations: design.iterations,
    })
}
