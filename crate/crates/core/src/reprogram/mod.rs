//! Thermo-magnetic reprogramming: selected pixels are heated past the
//! gallium melting point, their particles align with the programming field,
//! and the new direction locks in on cooling.
//!
//! Threshold model only: a selected pixel is liquid iff the step's peak
//! temperature reaches [`MELTING_POINT`]; neighbours are never affected.

mod script;

pub use script::{parse_session, serialize_session};

use nalgebra::Vector3;
use thiserror::Error;

use crate::encode::{EncodeError, Region};
use crate::lattice::{angles_from_direction, EncodingMatrix, LatticeError, MagVector, DIRECTION_TOLERANCE};

/// Gallium melting point, °C.
pub const MELTING_POINT: f64 = 29.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Solid,
    Liquid,
}

/// Liquid at or above the melting point.
pub fn melt_state(temperature: f64) -> Phase {
    if temperature >= MELTING_POINT {
        Phase::Liquid
    } else {
        Phase::Solid
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReprogramError {
    #[error("selection is empty")]
    EmptySelection,
    #[error("programming direction is not a unit vector (|u| - 1 = {deviation:e})")]
    NonUnitDirection { deviation: f64 },
    #[error("peak temperature must be finite")]
    NonFiniteTemperature,
    #[error("cell ({row}, {col}) has been removed")]
    CellRemoved { row: usize, col: usize },
    #[error("cell ({row}, {col}) is outside the {rows}x{cols} grid")]
    OutOfBounds { row: usize, col: usize, rows: usize, cols: usize },
    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<ReprogramError>,
    },
}

/// Reported when a step changes nothing because the film stayed solid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Notice {
    NoMelt { temperature: f64 },
}

impl std::fmt::Display for Notice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Notice::NoMelt { temperature } => {
                write!(f, "NoMelt: peak {temperature} °C is below the {MELTING_POINT} °C melting point; encoding unchanged")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReprogramStep {
    pub selection: Region,
    /// Unit vector of the programming field.
    pub programming_direction: Vector3<f64>,
    /// °C.
    pub peak_temperature: f64,
}

impl ReprogramStep {
    pub fn new(selection: Region, programming_direction: Vector3<f64>, peak_temperature: f64) -> Result<Self, ReprogramError> {
        let s = Self { selection, programming_direction, peak_temperature };
        s.check()?;
        Ok(s)
    }

    pub fn check(&self) -> Result<(), ReprogramError> {
        if self.selection.is_empty() {
            return Err(ReprogramError::EmptySelection);
        }
        let deviation = self.programming_direction.norm() - 1.0;
        if !(deviation.abs() <= DIRECTION_TOLERANCE) {
            return Err(ReprogramError::NonUnitDirection { deviation });
        }
        if !self.peak_temperature.is_finite() {
            return Err(ReprogramError::NonFiniteTemperature);
        }
        Ok(())
    }

    /// Vector written into every selected pixel.
    pub fn target_vector(&self) -> Result<MagVector, ReprogramError> {
        let (alpha, beta, gamma) = angles_from_direction(self.programming_direction).map_err(|e| match e {
            LatticeError::NonUnitDirection { deviation } => ReprogramError::NonUnitDirection { deviation },
            _ => ReprogramError::NonUnitDirection { deviation: f64::NAN },
        })?;
        Ok(MagVector::new(alpha, beta, gamma))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Session {
    pub label: String,
    pub steps: Vec<ReprogramStep>,
}

/// One heat–align–cool cycle. A solid step returns `e` unchanged with a
/// [`Notice::NoMelt`]; the selection is checked either way.
pub fn apply_step(e: &EncodingMatrix, s: &ReprogramStep) -> Result<(EncodingMatrix, Option<Notice>), ReprogramError> {
    s.check()?;
    s.selection.check_against(&e.mask).map_err(|err| match err {
        EncodeError::CellRemoved { row, col } => ReprogramError::CellRemoved { row, col },
        EncodeError::OutOfBounds { row, col, rows, cols } => ReprogramError::OutOfBounds { row, col, rows, cols },
        other => unreachable!("region check returned {other}"),
    })?;
    if melt_state(s.peak_temperature) == Phase::Solid {
        return Ok((e.clone(), Some(Notice::NoMelt { temperature: s.peak_temperature })));
    }
    let v = s.target_vector()?;
    let mut out = e.clone();
    for (r, c) in s.selection.iter() {
        out.set(r, c, Some(v));
    }
    Ok((out, None))
}

/// Steps applied in order. Notices carry the index of their step; errors are
/// wrapped in [`ReprogramError::AtStep`].
pub fn apply_session(e: &EncodingMatrix, s: &Session) -> Result<(EncodingMatrix, Vec<(usize, Notice)>), ReprogramError> {
    let mut cur = e.clone();
    let mut notices = Vec::new();
    for (i, step) in s.steps.iter().enumerate() {
        let (next, notice) = apply_step(&cur, step).map_err(|err| ReprogramError::AtStep { step: i, source: Box::new(err) })?;
        cur = next;
        notices.extend(notice.map(|n| (i, n)));
    }
    Ok((cur, notices))
}
