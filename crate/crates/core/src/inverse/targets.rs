//! `.mpt` target files: a mask (inline rows or `mask_from` naming an `.mpx`
//! file), a uniform field, optional anchors, and `[[target]]` entries with
//! `query`, `value` and `weight`.

use std::fmt::Write as _;

use nalgebra::Vector3;
use serde::Deserialize;

use super::{Target, TargetSpec};
use crate::encode::format::{check_version, float, invalid, malformed, plate_refs, quote, string_list};
use crate::encode::{FormatError, FORMAT_VERSION};
use crate::field::FieldSource;
use crate::lattice::{FilmSpec, PixelMask};
use crate::mechanics::Query;

#[derive(Debug, Clone, PartialEq)]
pub struct TargetDocument {
    pub label: String,
    /// Source file of the mask, kept so the canonical output refers to it again.
    pub mask_from: Option<String>,
    /// mT.
    pub field_mt: Vector3<f64>,
    pub mask: PixelMask,
    pub anchors: Vec<crate::lattice::PlateRef>,
    pub targets: Vec<Target>,
}

impl TargetDocument {
    pub fn spec(&self) -> TargetSpec {
        TargetSpec {
            mask: self.mask.clone(),
            field: FieldSource::uniform(self.field_mt),
            anchors: self.anchors.clone(),
            targets: self.targets.clone(),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTargets {
    #[allow(dead_code)]
    format_version: String,
    #[serde(default)]
    label: String,
    mask: Option<Vec<String>>,
    mask_from: Option<String>,
    field_mt: [f64; 3],
    #[serde(default)]
    anchors: Vec<String>,
    #[serde(default)]
    target: Vec<RawTarget>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTarget {
    query: String,
    value: f64,
    #[serde(default = "unit_weight")]
    weight: f64,
}

fn unit_weight() -> f64 {
    1.0
}

pub fn serialize_targets(d: &TargetDocument) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "format_version = {}", quote(FORMAT_VERSION));
    let _ = writeln!(out, "label = {}", quote(&d.label));
    match &d.mask_from {
        Some(path) => {
            let _ = writeln!(out, "mask_from = {}", quote(path));
        }
        None => {
            let _ = writeln!(out, "mask = {}", string_list(&d.mask.to_rows()));
        }
    }
    let b = d.field_mt;
    let _ = writeln!(out, "field_mt = [{}, {}, {}]", float(b.x), float(b.y), float(b.z));
    let anchors: Vec<String> = d.anchors.iter().map(|a| a.to_string()).collect();
    let _ = writeln!(out, "anchors = {}", string_list(&anchors));
    for t in &d.targets {
        out.push_str("\n[[target]]\n");
        let _ = writeln!(out, "query = {}", quote(&t.query.to_string()));
        let _ = writeln!(out, "value = {}", float(t.value));
        let _ = writeln!(out, "weight = {}", float(t.weight));
    }
    out
}

/// `load_mask` resolves `mask_from`; it is not called for inline masks.
pub fn parse_targets(text: &str, load_mask: impl FnOnce(&str) -> Result<PixelMask, String>) -> Result<TargetDocument, FormatError> {
    check_version(text)?;
    let raw: RawTargets = toml::from_str(text).map_err(|e| malformed(text, e))?;
    let mask = match (&raw.mask, &raw.mask_from) {
        (Some(rows), None) => PixelMask::from_rows(rows).map_err(|e| invalid(e.to_string()))?,
        (None, Some(path)) => load_mask(path).map_err(|e| invalid(format!("mask_from {path:?}: {e}")))?,
        _ => return Err(invalid("give exactly one of `mask` or `mask_from`")),
    };
    let field_mt = Vector3::from(raw.field_mt);
    if !field_mt.iter().all(|v| v.is_finite()) {
        return Err(invalid("field_mt must be finite"));
    }
    let mut targets = Vec::with_capacity(raw.target.len());
    for (i, t) in raw.target.into_iter().enumerate() {
        let query: Query = t.query.parse().map_err(|e| invalid(format!("target {i}: {e}")))?;
        targets.push(Target { query, value: t.value, weight: t.weight });
    }
    let doc = TargetDocument { label: raw.label, mask_from: raw.mask_from, field_mt, mask, anchors: plate_refs(&raw.anchors)?, targets };
    doc.spec().validate(&FilmSpec::default()).map_err(|e| invalid(e.to_string()))?;
    Ok(doc)
}
