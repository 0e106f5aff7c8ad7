//! `.mpx` encoding documents: canonical TOML with sorted keys and fixed
//! decimals. See `docs/format.md`.

use std::fmt::Write as _;

use nalgebra::Vector3;
use serde::Deserialize;
use thiserror::Error;

use crate::lattice::{validate_encoding, EncodingMatrix, FilmSpec, MagVector, PixelMask, PlateRef, Violation};

pub const FORMAT_VERSION: &str = "1.0";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormatError {
    #[error("malformed document at line {line}, column {column}: {message}")]
    MalformedDocument { line: usize, column: usize, message: String },
    #[error("unsupported format_version {0:?} (supported: \"1.0\")")]
    UnsupportedVersion(String),
    #[error("document does not validate: {0}")]
    ValidationFailed(String),
}

/// How a template is meant to be driven and read: the first anchor is
/// pinned, the rest slide on the ground plane; `probe` names the plates whose
/// centroid displacement is reported.
#[derive(Debug, Clone, PartialEq)]
pub struct MechanicsHints {
    pub anchors: Vec<PlateRef>,
    pub probe: Vec<PlateRef>,
    /// mT.
    pub field: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodingDocument {
    pub format_version: String,
    pub label: String,
    pub film: FilmSpec,
    pub encoding: EncodingMatrix,
    pub mechanics: Option<MechanicsHints>,
}

impl EncodingDocument {
    pub fn new(label: impl Into<String>, film: FilmSpec, encoding: EncodingMatrix) -> Self {
        Self { format_version: FORMAT_VERSION.into(), label: label.into(), film, encoding, mechanics: None }
    }
}

pub(crate) fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if (c as u32) < 0x20 || c as u32 == 0x7f => {
                let _ = write!(out, "\\u{:04X}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub(crate) fn angle(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" { "0.000000".into() } else { s }
}

pub(crate) fn float(v: f64) -> String {
    format!("{v:?}")
}

pub(crate) fn string_list<S: AsRef<str>>(items: &[S]) -> String {
    let parts: Vec<String> = items.iter().map(|s| quote(s.as_ref())).collect();
    format!("[{}]", parts.join(", "))
}

/// Canonical text: top-level keys, then `[encoding]`, `[film]`, `[mechanics]`
/// with keys sorted inside each table; angles with six decimals.
pub fn serialize(d: &EncodingDocument) -> String {
    let e = &d.encoding;
    let (rows, cols) = e.dims();
    let mut s = String::new();
    let _ = writeln!(s, "format_version = {}", quote(&d.format_version));
    let _ = writeln!(s, "label = {}", quote(&d.label));
    s.push_str("\n[encoding]\ncells = [\n");
    for r in 0..rows {
        for c in 0..cols {
            if let Some(v) = e.get(r, c) {
                let _ = writeln!(s, "  [{r}, {c}, {}, {}, {}],", angle(v.alpha), angle(v.beta), angle(v.gamma));
            }
        }
    }
    s.push_str("]\n");
    let _ = writeln!(s, "cols = {cols}");
    s.push_str("mask = [\n");
    for row in e.mask.to_rows() {
        let _ = writeln!(s, "  {},", quote(&row));
    }
    s.push_str("]\n");
    let parts: Vec<_> = e.part_b_vectors().collect();
    if !parts.is_empty() {
        s.push_str("parts = [\n");
        for ((r, c), v) in parts {
            let _ = writeln!(s, "  [{r}, {c}, {}, {}, {}],", angle(v.alpha), angle(v.beta), angle(v.gamma));
        }
        s.push_str("]\n");
    }
    let _ = writeln!(s, "remanence = {}", float(e.remanence));
    let _ = writeln!(s, "rows = {rows}");

    let f = &d.film;
    s.push_str("\n[film]\n");
    let _ = writeln!(s, "core_thickness = {}", float(f.core_thickness));
    let _ = writeln!(s, "film_thickness = {}", float(f.film_thickness));
    let _ = writeln!(s, "hinge_stiffness = {}", float(f.hinge_stiffness));
    let _ = writeln!(s, "pixel_edge = {}", float(f.pixel_edge));
    let _ = writeln!(s, "remanence_default = {}", float(f.remanence_default));
    let _ = writeln!(s, "shell_thickness = {}", float(f.shell_thickness));

    if let Some(m) = &d.mechanics {
        s.push_str("\n[mechanics]\n");
        let anchors: Vec<String> = m.anchors.iter().map(|p| p.to_string()).collect();
        let probe: Vec<String> = m.probe.iter().map(|p| p.to_string()).collect();
        let _ = writeln!(s, "anchors = {}", string_list(&anchors));
        let _ = writeln!(s, "field_mt = [{}, {}, {}]", float(m.field.x), float(m.field.y), float(m.field.z));
        let _ = writeln!(s, "probe = {}", string_list(&probe));
    }
    s
}

#[derive(Deserialize)]
struct VersionOnly {
    format_version: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    format_version: String,
    label: String,
    encoding: RawEncoding,
    film: RawFilm,
    mechanics: Option<RawMechanics>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEncoding {
    rows: usize,
    cols: usize,
    remanence: f64,
    mask: Vec<String>,
    cells: Vec<(usize, usize, f64, f64, f64)>,
    #[serde(default)]
    parts: Vec<(usize, usize, f64, f64, f64)>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFilm {
    pixel_edge: f64,
    film_thickness: f64,
    core_thickness: f64,
    shell_thickness: f64,
    hinge_stiffness: f64,
    remanence_default: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMechanics {
    anchors: Vec<String>,
    probe: Vec<String>,
    field_mt: [f64; 3],
}

pub(crate) fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.chars().rev().take_while(|&c| c != '\n').count() + 1;
    (line, column)
}

pub(crate) fn malformed(text: &str, err: toml::de::Error) -> FormatError {
    let (line, column) = err.span().map(|s| line_column(text, s.start)).unwrap_or((0, 0));
    FormatError::MalformedDocument { line, column, message: err.message().to_string() }
}

/// Parses the version first so a future document reports
/// [`FormatError::UnsupportedVersion`] rather than unknown fields.
pub(crate) fn check_version(text: &str) -> Result<(), FormatError> {
    let v: VersionOnly = toml::from_str(text).map_err(|e| malformed(text, e))?;
    if v.format_version != FORMAT_VERSION {
        return Err(FormatError::UnsupportedVersion(v.format_version));
    }
    Ok(())
}

pub(crate) fn invalid(msg: impl Into<String>) -> FormatError {
    FormatError::ValidationFailed(msg.into())
}

pub(crate) fn plate_refs(items: &[String]) -> Result<Vec<PlateRef>, FormatError> {
    items.iter().map(|s| s.parse::<PlateRef>().map_err(invalid)).collect()
}

pub fn parse(text: &str) -> Result<EncodingDocument, FormatError> {
    let (doc, violations) = parse_with_violations(text)?;
    if !violations.is_empty() {
        let text: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(invalid(text.join("; ")));
    }
    Ok(doc)
}

/// Like [`parse`], but encoding-rule violations are returned next to the
/// document instead of failing it. Syntax, version, film and mechanics
/// errors still fail.
pub fn parse_with_violations(text: &str) -> Result<(EncodingDocument, Vec<Violation>), FormatError> {
    check_version(text)?;
    let raw: RawDocument = toml::from_str(text).map_err(|e| malformed(text, e))?;
    let enc = raw.encoding;
    let mask = PixelMask::from_rows(&enc.mask).map_err(|e| invalid(e.to_string()))?;
    if mask.dims() != (enc.rows, enc.cols) {
        return Err(invalid(format!("mask is {}x{} but rows/cols say {}x{}", mask.rows(), mask.cols(), enc.rows, enc.cols)));
    }
    let mut cells = vec![None; enc.rows * enc.cols];
    for &(r, c, a, b, g) in &enc.cells {
        if r >= enc.rows || c >= enc.cols {
            return Err(invalid(format!("cell ({r}, {c}) is outside the grid")));
        }
        let slot = &mut cells[r * enc.cols + c];
        if slot.is_some() {
            return Err(invalid(format!("cell ({r}, {c}) is listed twice")));
        }
        *slot = Some(MagVector::new(a, b, g));
    }
    let mut encoding = EncodingMatrix::from_parts(mask, cells, enc.remanence);
    for &(r, c, a, b, g) in &enc.parts {
        if encoding.part_b_vectors().any(|(k, _)| k == (r, c)) {
            return Err(invalid(format!("part of cell ({r}, {c}) is listed twice")));
        }
        encoding.set_part_b(r, c, MagVector::new(a, b, g));
    }
    let violations = validate_encoding(&encoding);
    let f = raw.film;
    let film = FilmSpec {
        pixel_edge: f.pixel_edge,
        film_thickness: f.film_thickness,
        core_thickness: f.core_thickness,
        shell_thickness: f.shell_thickness,
        hinge_stiffness: f.hinge_stiffness,
        remanence_default: f.remanence_default,
    };
    film.validate().map_err(|e| invalid(e.to_string()))?;
    let mechanics = match raw.mechanics {
        None => None,
        Some(m) => {
            let field = Vector3::from(m.field_mt);
            if !field.iter().all(|c| c.is_finite()) {
                return Err(invalid("field_mt must be finite"));
            }
            Some(MechanicsHints { anchors: plate_refs(&m.anchors)?, probe: plate_refs(&m.probe)?, field })
        }
    };
    Ok((EncodingDocument { format_version: raw.format_version, label: raw.label, film, encoding, mechanics }, violations))
}
