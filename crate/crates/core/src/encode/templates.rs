//! Scenario encodings for the demonstrated motion classes.
//!
//! The published designs are pictograms without numeric angles, so every
//! vector below is our choice, made to reproduce the motion class. Each
//! template also records anchors, a probe plate set and the field it is
//! documented under. Fold signs follow the mechanics convention: positive
//! when both plates rise toward the film normal (+z).

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;

use super::format::{EncodingDocument, MechanicsHints};
use super::EncodeError;
use crate::lattice::{Cell, Diagonal, EncodingMatrix, FilmSpec, MagVector, Part, PixelMask, PlateRef};

/// Field magnitude used by every template, mT.
const TEMPLATE_FIELD: f64 = 54.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TemplateName {
    IBend,
    ITwist,
    YStand,
    RingFold,
    RingWave,
    ZPlatform,
    CrossFan,
    CrossStand,
    OrigamiParallel,
    OrigamiDiagonal,
    OrigamiPyramid,
    OrigamiDouble,
}

pub const TEMPLATE_NAMES: [&str; 12] = [
    "i-bend",
    "i-twist",
    "y-stand",
    "ring-fold",
    "ring-wave",
    "z-platform",
    "cross-fan",
    "cross-stand",
    "origami-parallel",
    "origami-diagonal",
    "origami-pyramid",
    "origami-double",
];

const ALL: [TemplateName; 12] = [
    TemplateName::IBend,
    TemplateName::ITwist,
    TemplateName::YStand,
    TemplateName::RingFold,
    TemplateName::RingWave,
    TemplateName::ZPlatform,
    TemplateName::CrossFan,
    TemplateName::CrossStand,
    TemplateName::OrigamiParallel,
    TemplateName::OrigamiDiagonal,
    TemplateName::OrigamiPyramid,
    TemplateName::OrigamiDouble,
];

impl TemplateName {
    pub fn all() -> &'static [TemplateName] {
        &ALL
    }

    pub fn as_str(self) -> &'static str {
        TEMPLATE_NAMES[ALL.iter().position(|&t| t == self).unwrap()]
    }

    pub fn default_dims(self) -> (usize, usize) {
        use TemplateName::*;
        match self {
            IBend | ITwist => (8, 2),
            YStand => (8, 5),
            RingFold | RingWave => (6, 6),
            ZPlatform => (16, 16),
            CrossFan | CrossStand => (7, 7),
            OrigamiParallel | OrigamiDiagonal | OrigamiPyramid | OrigamiDouble => (2, 2),
        }
    }

    /// Human-readable dims rule, used in `UnsupportedDims`.
    pub fn dims_rule(self) -> &'static str {
        use TemplateName::*;
        match self {
            IBend => "even rows 4..=64, cols 1..=4",
            ITwist => "even rows 6..=64, cols 2",
            YStand => "rows 6..=64, odd cols 5..=31",
            RingFold | RingWave => "square, even side 4..=32",
            ZPlatform => "square, side a multiple of 8 from 8 to 32",
            CrossFan | CrossStand => "square, odd side 3..=63",
            OrigamiParallel | OrigamiDiagonal | OrigamiPyramid | OrigamiDouble => "2x2 (eight triangular plates)",
        }
    }

    fn dims_ok(self, rows: usize, cols: usize) -> bool {
        use TemplateName::*;
        match self {
            IBend => rows.is_multiple_of(2) && (4..=64).contains(&rows) && (1..=4).contains(&cols),
            ITwist => rows.is_multiple_of(2) && (6..=64).contains(&rows) && cols == 2,
            YStand => (6..=64).contains(&rows) && cols % 2 == 1 && (5..=31).contains(&cols),
            RingFold | RingWave => rows == cols && rows.is_multiple_of(2) && (4..=32).contains(&rows),
            ZPlatform => rows == cols && rows.is_multiple_of(8) && (8..=32).contains(&rows),
            CrossFan | CrossStand => rows == cols && rows % 2 == 1 && (3..=63).contains(&rows),
            OrigamiParallel | OrigamiDiagonal | OrigamiPyramid | OrigamiDouble => (rows, cols) == (2, 2),
        }
    }
}

impl fmt::Display for TemplateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateName {
    type Err = EncodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TEMPLATE_NAMES
            .iter()
            .position(|&n| n == s)
            .map(|i| ALL[i])
            .ok_or_else(|| EncodeError::UnknownTemplate(s.to_string()))
    }
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// In-plane or tilted direction, angles rounded to the file precision.
fn dir(x: f64, y: f64, z: f64) -> MagVector {
    let v = MagVector::from_direction(Vector3::new(x, y, z)).expect("template directions are non-zero");
    MagVector::new(round6(v.alpha), round6(v.beta), round6(v.gamma))
}

const UP: MagVector = MagVector::UP;
const DOWN: MagVector = MagVector::DOWN;

fn w(r: usize, c: usize) -> PlateRef {
    PlateRef::whole(r, c)
}

fn field_z() -> Vector3<f64> {
    Vector3::new(0.0, 0.0, TEMPLATE_FIELD)
}

struct Built {
    encoding: EncodingMatrix,
    anchors: Vec<PlateRef>,
    probe: Vec<PlateRef>,
    field: Vector3<f64>,
}

/// Builds the named scenario at the requested lattice size.
pub fn template(name: &str, dims: (usize, usize)) -> Result<EncodingDocument, EncodeError> {
    let t: TemplateName = name.parse()?;
    let (rows, cols) = dims;
    if !t.dims_ok(rows, cols) {
        return Err(EncodeError::UnsupportedDims { name: name.to_string(), rows, cols, expected: t.dims_rule().to_string() });
    }
    let film = FilmSpec::default();
    let m = film.remanence_default;
    use TemplateName::*;
    let b = match t {
        IBend => i_bend(rows, cols, m),
        ITwist => i_twist(rows, m),
        YStand => y_stand(rows, cols, m),
        RingFold => ring_fold(rows, m),
        RingWave => ring_wave(rows, m),
        ZPlatform => z_platform(rows, m),
        CrossFan => cross(rows, m, false),
        CrossStand => cross(rows, m, true),
        OrigamiParallel => origami_parallel(m),
        OrigamiDiagonal => origami_diagonal(m),
        OrigamiPyramid => origami_pyramid(m),
        OrigamiDouble => origami_double(m),
    }?;
    let mut doc = EncodingDocument::new(format!("{name} {rows}x{cols}"), film, b.encoding);
    doc.mechanics = Some(MechanicsHints { anchors: b.anchors, probe: b.probe, field: b.field });
    Ok(doc)
}

/// I-shaped strip. Rows below the middle are +z, the rest −z. The
/// field runs along the strip (+x), transverse to both halves, so the halves
/// rotate in opposite senses about the middle and the strip curls into a U:
/// every fold along the strip is ≥ 0. The plate just before the middle is
/// pinned. Probe: the far end.
fn i_bend(rows: usize, cols: usize, m: f64) -> Result<Built, EncodeError> {
    let mut e = EncodingMatrix::uniform(PixelMask::full(rows, cols)?, UP, m);
    for r in rows / 2..rows {
        for c in 0..cols {
            e.set(r, c, Some(DOWN));
        }
    }
    Ok(Built {
        encoding: e,
        anchors: vec![w(rows / 2 - 1, 0)],
        probe: vec![w(rows - 1, 0)],
        field: Vector3::new(TEMPLATE_FIELD, 0.0, 0.0),
    })
}

/// I-shaped strip. Column 0 is +z. Column 1 points +y in the first
/// half and −y in the second, so under +z the long-axis folds between the
/// columns are positive in the first half and negative in the second. The
/// two middle rows are split along both diagonals through their center,
/// which lets the strip change fold sense there. Anchor (0,0).
fn i_twist(rows: usize, m: f64) -> Result<Built, EncodeError> {
    let h = rows / 2;
    let mask = PixelMask::from_fn(rows, 2, |r, c| match (r + 1 == h, r == h, c) {
        (true, _, 0) | (_, true, 1) => Cell::Split(Diagonal::Main),
        (true, _, 1) | (_, true, 0) => Cell::Split(Diagonal::Anti),
        _ => Cell::Whole,
    })?;
    let mut e = EncodingMatrix::uniform(mask, UP, m);
    for r in 0..rows {
        e.set(r, 1, Some(if r < h { dir(0.0, 1.0, 0.0) } else { dir(0.0, -1.0, 0.0) }));
    }
    Ok(Built { encoding: e, anchors: vec![w(0, 0)], probe: vec![w(rows - 1, 1)], field: field_z() })
}

/// Y-shaped robot standing. Two arms (first and last column, rows
/// above the bar) and the bar (row `rows/2 − 1`) are +z and anchored at the
/// arm tips; the stem (middle column below the bar) points +x, toward its
/// free end, so it lifts off the ground: the stem root carries the largest
/// fold, positive.
fn y_stand(rows: usize, cols: usize, m: f64) -> Result<Built, EncodeError> {
    let bar = rows / 2 - 1;
    let mid = cols / 2;
    let mask = PixelMask::from_fn(rows, cols, |r, c| {
        let active = (r < bar && (c == 0 || c == cols - 1)) || r == bar || (r > bar && c == mid);
        if active { Cell::Whole } else { Cell::Removed }
    })?;
    let mut e = EncodingMatrix::uniform(mask, UP, m);
    for r in bar + 1..rows {
        e.set(r, mid, Some(dir(1.0, 0.0, 0.0)));
    }
    Ok(Built {
        encoding: e,
        anchors: vec![w(0, 0), w(0, cols - 1)],
        probe: vec![w(rows - 1, mid)],
        field: field_z(),
    })
}

fn ring_mask(n: usize) -> Result<PixelMask, EncodeError> {
    Ok(PixelMask::from_fn(n, n, |r, c| {
        if r == 0 || c == 0 || r == n - 1 || c == n - 1 { Cell::Whole } else { Cell::Removed }
    })?)
}

/// Ring folding in half. Columns left of the middle are +z and
/// anchored at (0,0); the right half points +y, away from the middle line,
/// and swings up about it: both folds crossing the middle column line are
/// positive.
fn ring_fold(n: usize, m: f64) -> Result<Built, EncodeError> {
    let h = n / 2;
    let mut e = EncodingMatrix::uniform(ring_mask(n)?, UP, m);
    for (r, c) in e.mask.active_cells().collect::<Vec<_>>() {
        if c >= h {
            e.set(r, c, Some(dir(0.0, 1.0, 0.0)));
        }
    }
    Ok(Built { encoding: e, anchors: vec![w(0, 0)], probe: vec![w(0, n - 1)], field: field_z() })
}

/// Ring with higher-order (saddle) bending. Each quadrant carries
/// an in-plane diagonal vector following the gradient of `x² − y²` about the
/// ring center, so along the sides running in x the ring sags into a valley
/// and along the sides running in y it humps into a ridge. Folds across the
/// middle row line are positive, folds across the middle column line
/// negative. Free-floating.
fn ring_wave(n: usize, m: f64) -> Result<Built, EncodeError> {
    let h = n / 2;
    let mut e = EncodingMatrix::uniform(ring_mask(n)?, UP, m);
    for (r, c) in e.mask.active_cells().collect::<Vec<_>>() {
        let sx = if r < h { -1.0 } else { 1.0 };
        let sy = if c < h { 1.0 } else { -1.0 };
        e.set(r, c, Some(dir(sx, sy, 0.0)));
    }
    Ok(Built { encoding: e, anchors: vec![], probe: vec![w(0, 0), w(n - 1, n - 1)], field: field_z() })
}

/// Flexible z-axis platform. A central `n/4` square platform is +z;
/// four arms, two pixels wide, run from the platform to the border with
/// in-plane vectors pointing toward the platform, so each arm tilts up from
/// its grounded tip and lifts the platform. The arm-tip pixels are anchors:
/// the first is pinned, the others may slide on the ground. Probe: the
/// platform.
fn z_platform(n: usize, m: f64) -> Result<Built, EncodeError> {
    let p = n / 4;
    let lo = (n - p) / 2;
    let hi = lo + p;
    let (a0, a1) = (n / 2 - 1, n / 2 + 1);
    let on_platform = |r: usize, c: usize| (lo..hi).contains(&r) && (lo..hi).contains(&c);
    let mask = PixelMask::from_fn(n, n, |r, c| {
        if on_platform(r, c) || (a0..a1).contains(&c) || (a0..a1).contains(&r) { Cell::Whole } else { Cell::Removed }
    })?;
    let mut e = EncodingMatrix::uniform(mask, UP, m);
    for (r, c) in e.mask.active_cells().collect::<Vec<_>>() {
        if on_platform(r, c) {
            continue;
        }
        let v = if r < lo {
            dir(1.0, 0.0, 0.0)
        } else if r >= hi {
            dir(-1.0, 0.0, 0.0)
        } else if c < lo {
            dir(0.0, 1.0, 0.0)
        } else {
            dir(0.0, -1.0, 0.0)
        };
        e.set(r, c, Some(v));
    }
    let mut anchors = Vec::new();
    for k in a0..a1 {
        anchors.push(w(0, k));
    }
    for k in a0..a1 {
        anchors.extend([w(n - 1, k), w(k, 0), w(k, n - 1)]);
    }
    let probe = (lo..hi).flat_map(|r| (lo..hi).map(move |c| w(r, c))).collect();
    Ok(Built { encoding: e, anchors, probe, field: field_z() })
}

/// Cross-shaped robot. One-pixel arms around a pinned +z center.
///
/// Fan: the arms along x point outward and fold up (positive),
/// the arms along y point inward and fold down (negative), alternating
/// around the center like fan blades.
///
/// Stand: every arm points inward, so all four fold down
/// (negative) and the robot rises onto its arm tips.
fn cross(n: usize, m: f64, stand: bool) -> Result<Built, EncodeError> {
    let h = n / 2;
    let mask = PixelMask::from_fn(n, n, |r, c| if r == h || c == h { Cell::Whole } else { Cell::Removed })?;
    let mut e = EncodingMatrix::uniform(mask, UP, m);
    let outward_x = if stand { -1.0 } else { 1.0 };
    for r in 0..n {
        if r != h {
            let s = if r < h { -1.0 } else { 1.0 };
            e.set(r, h, Some(dir(s * outward_x, 0.0, 0.0)));
        }
    }
    for c in 0..n {
        if c != h {
            let s = if c < h { 1.0 } else { -1.0 };
            e.set(h, c, Some(dir(0.0, s, 0.0)));
        }
    }
    Ok(Built { encoding: e, anchors: vec![w(h, h)], probe: vec![w(0, h), w(h, 0)], field: field_z() })
}

/// 2×2 patch split along both diagonals into eight triangles. Cell
/// corners `(r, c)` sit at `(2r, 2c)` mm, the center at (2, 2).
fn origami_mask() -> Result<PixelMask, EncodeError> {
    Ok(PixelMask::from_rows(&["da", "ad"])?)
}

fn t(r: usize, c: usize, part: Part) -> PlateRef {
    PlateRef::tri(r, c, part)
}

/// Parallel folding. Row 0 is +z and held on the ground; row 1
/// points +x, away from the middle line x = 2 mm, and swings up about it as
/// one body. The two half-lines of x = 2 carry the two largest folds, both
/// positive; the hinges folding at least a quarter as much as the largest
/// are those two only.
fn origami_parallel(m: f64) -> Result<Built, EncodeError> {
    let mut e = EncodingMatrix::uniform(origami_mask()?, UP, m);
    e.set(1, 0, Some(dir(1.0, 0.0, 0.0)));
    e.set(1, 1, Some(dir(1.0, 0.0, 0.0)));
    let anchors = vec![t(0, 0, Part::B), t(0, 0, Part::A), t(0, 1, Part::A), t(0, 1, Part::B)];
    Ok(Built { encoding: e, anchors, probe: vec![t(1, 0, Part::B), t(1, 1, Part::A)], field: field_z() })
}

/// Diagonal folding. The four triangles on the x < y side of the
/// main diagonal are +z and held on the ground; the other four point along (1, −1),
/// away from the diagonal, and swing up about it. The two half-diagonals of
/// the main diagonal carry the two largest folds, both positive. The flap is
/// not rigid: it also bends about the lower-right half of the anti-diagonal
/// by about a quarter of the main fold. Under the quarter-of-the-largest rule
/// of parallel folding the two active sets share no hinge.
fn origami_diagonal(m: f64) -> Result<Built, EncodeError> {
    let away = dir(1.0, -1.0, 0.0);
    let mut e = EncodingMatrix::uniform(origami_mask()?, UP, m);
    e.set(0, 0, Some(away));
    e.set_part_b(0, 0, UP);
    e.set(1, 0, Some(away));
    e.set(1, 1, Some(away));
    e.set_part_b(1, 1, UP);
    let anchors = vec![t(0, 1, Part::A), t(0, 0, Part::B), t(0, 1, Part::B), t(1, 1, Part::B)];
    Ok(Built { encoding: e, anchors, probe: vec![t(1, 0, Part::A), t(1, 0, Part::B)], field: field_z() })
}

/// Pyramid. Every triangle points inward, perpendicular to its
/// outer edge, so each wants its inner apex up and the center rises. A flat
/// vertex cannot close into a convex cone, so the middle lines take mixed
/// signs; the signature is the four half-diagonals folding as equal ridges
/// (negative). Free-floating.
fn origami_pyramid(m: f64) -> Result<Built, EncodeError> {
    let mut e = EncodingMatrix::uniform(origami_mask()?, UP, m);
    let (px, nx, py, ny) = (dir(1.0, 0.0, 0.0), dir(-1.0, 0.0, 0.0), dir(0.0, 1.0, 0.0), dir(0.0, -1.0, 0.0));
    // (cell, A inward, B inward)
    for (r, c, a, b) in [(0, 0, py, px), (0, 1, px, ny), (1, 0, py, nx), (1, 1, nx, ny)] {
        e.set(r, c, Some(a));
        e.set_part_b(r, c, b);
    }
    Ok(Built { encoding: e, anchors: vec![], probe: vec![t(0, 0, Part::A)], field: field_z() })
}

/// Diagonal double folding. The wedges on the x = 0 and x = 4 mm
/// sides are +z; the wedges on the y = 0 and y = 4 mm sides point outward
/// along ∓y and lift, creasing the square along both diagonals: all four
/// half-diagonals fold as valleys (positive). Free-floating.
fn origami_double(m: f64) -> Result<Built, EncodeError> {
    let mut e = EncodingMatrix::uniform(origami_mask()?, UP, m);
    let (py, ny) = (dir(0.0, 1.0, 0.0), dir(0.0, -1.0, 0.0));
    e.set(0, 0, Some(ny));
    e.set_part_b(0, 0, UP);
    e.set(0, 1, Some(UP));
    e.set_part_b(0, 1, py);
    e.set(1, 0, Some(ny));
    e.set_part_b(1, 0, UP);
    e.set(1, 1, Some(UP));
    e.set_part_b(1, 1, py);
    Ok(Built { encoding: e, anchors: vec![], probe: vec![t(0, 0, Part::A)], field: field_z() })
}
