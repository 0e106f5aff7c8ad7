//! Encoding compiler: contouring a robot outline out of the pixel array,
//! region-wise vector assignment, scenario templates and the `.mpx` format.

pub(crate) mod format;
mod templates;

pub use format::{parse, parse_with_violations, serialize, EncodingDocument, FormatError, MechanicsHints, FORMAT_VERSION};
pub use templates::{template, TemplateName, TEMPLATE_NAMES};

use std::collections::BTreeSet;

use thiserror::Error;

use crate::lattice::{Cell, EncodingMatrix, LatticeError, MagVector, PixelMask};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EncodeError {
    #[error("mask is {found:?} but the encoding is {expected:?}")]
    DimensionMismatch { expected: (usize, usize), found: (usize, usize) },
    #[error("no active cell remains")]
    EmptyMask,
    #[error("cell ({row}, {col}) has been removed")]
    CellRemoved { row: usize, col: usize },
    #[error("cell ({row}, {col}) is outside the {rows}x{cols} grid")]
    OutOfBounds { row: usize, col: usize, rows: usize, cols: usize },
    #[error("unknown template `{0}`")]
    UnknownTemplate(String),
    #[error("template {name} does not support {rows}x{cols}: {expected}")]
    UnsupportedDims { name: String, rows: usize, cols: usize, expected: String },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// A set of lattice cells, kept sorted and duplicate-free.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Region {
    cells: BTreeSet<(usize, usize)>,
}

impl Region {
    pub fn new<I: IntoIterator<Item = (usize, usize)>>(cells: I) -> Self {
        Self { cells: cells.into_iter().collect() }
    }

    /// Rows `r0..r1`, columns `c0..c1`.
    pub fn rect(r0: usize, r1: usize, c0: usize, c1: usize) -> Self {
        Self::new((r0..r1).flat_map(|r| (c0..c1).map(move |c| (r, c))))
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.cells.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, cell: (usize, usize)) -> bool {
        self.cells.contains(&cell)
    }

    /// Every cell lies on the grid and is active.
    pub fn check_against(&self, mask: &PixelMask) -> Result<(), EncodeError> {
        let (rows, cols) = mask.dims();
        for (row, col) in self.iter() {
            if !mask.in_bounds(row, col) {
                return Err(EncodeError::OutOfBounds { row, col, rows, cols });
            }
            if !mask.is_active(row, col) {
                return Err(EncodeError::CellRemoved { row, col });
            }
        }
        Ok(())
    }
}

impl FromIterator<(usize, usize)> for Region {
    fn from_iter<I: IntoIterator<Item = (usize, usize)>>(iter: I) -> Self {
        Self::new(iter)
    }
}

/// Cuts the robot outline out of the film: cells inactive in `mask` lose
/// their vectors. Cells already removed stay removed.
pub fn apply_contour(e: &EncodingMatrix, mask: &PixelMask) -> Result<EncodingMatrix, EncodeError> {
    if mask.dims() != e.dims() {
        return Err(EncodeError::DimensionMismatch { expected: e.dims(), found: mask.dims() });
    }
    let mut out = e.clone();
    let (rows, cols) = e.dims();
    for r in 0..rows {
        for c in 0..cols {
            if !mask.is_active(r, c) {
                out.mask.set(r, c, Cell::Removed);
                out.set(r, c, None);
            }
        }
    }
    if out.mask.active_count() == 0 {
        return Err(EncodeError::EmptyMask);
    }
    Ok(out)
}

/// Sets every cell of `region` to `v`; other cells are untouched.
pub fn encode_region(e: &EncodingMatrix, region: &Region, v: MagVector) -> Result<EncodingMatrix, EncodeError> {
    v.check()?;
    region.check_against(&e.mask)?;
    let mut out = e.clone();
    for (r, c) in region.iter() {
        out.set(r, c, Some(v));
    }
    Ok(out)
}
