//! `.mps` session scripts. Same conventions as `.mpx`: TOML, versioned,
//! keys sorted, canonical output. Each `[[step]]` selects either `cells`
//! (list of `[row, col]`) or `rect` (`[r0, r1, c0, c1]`, half-open); the
//! canonical form always lists cells.

use std::fmt::Write as _;

use nalgebra::Vector3;
use serde::Deserialize;

use super::{ReprogramStep, Session};
use crate::encode::format::{check_version, float, invalid, malformed, quote};
use crate::encode::{FormatError, Region, FORMAT_VERSION};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSession {
    #[allow(dead_code)]
    format_version: String,
    #[serde(default)]
    label: String,
    #[serde(default)]
    step: Vec<RawStep>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStep {
    cells: Option<Vec<(usize, usize)>>,
    rect: Option<(usize, usize, usize, usize)>,
    direction: [f64; 3],
    temperature_c: f64,
}

pub fn serialize_session(s: &Session) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "format_version = {}", quote(FORMAT_VERSION));
    let _ = writeln!(out, "label = {}", quote(&s.label));
    for step in &s.steps {
        out.push_str("\n[[step]]\n");
        let cells: Vec<String> = step.selection.iter().map(|(r, c)| format!("[{r}, {c}]")).collect();
        let _ = writeln!(out, "cells = [{}]", cells.join(", "));
        let d = step.programming_direction;
        let _ = writeln!(out, "direction = [{}, {}, {}]", float(d.x), float(d.y), float(d.z));
        let _ = writeln!(out, "temperature_c = {}", float(step.peak_temperature));
    }
    out
}

pub fn parse_session(text: &str) -> Result<Session, FormatError> {
    check_version(text)?;
    let raw: RawSession = toml::from_str(text).map_err(|e| malformed(text, e))?;
    let mut steps = Vec::with_capacity(raw.step.len());
    for (i, st) in raw.step.into_iter().enumerate() {
        let selection = match (st.cells, st.rect) {
            (Some(cells), None) => Region::new(cells),
            (None, Some((r0, r1, c0, c1))) => Region::rect(r0, r1, c0, c1),
            _ => return Err(invalid(format!("step {i}: give exactly one of `cells` or `rect`"))),
        };
        let step = ReprogramStep::new(selection, Vector3::from(st.direction), st.temperature_c)
            .map_err(|e| invalid(format!("step {i}: {e}")))?;
        steps.push(step);
    }
    Ok(Session { label: raw.label, steps })
}
