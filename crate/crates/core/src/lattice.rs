//! Pixel lattice data model: per-pixel magnetization directions, the active
//! pixel mask and the film constants.
//!
//! Lattice convention: pixel `(row, col)` occupies the square
//! `[row·e, (row+1)·e] × [col·e, (col+1)·e]` in the film plane, where `e` is
//! the pixel edge. Rows advance along +x, columns along +y and the film
//! normal is +z.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::Vector3;
use thiserror::Error;

/// Tolerance on `cos²α + cos²β + cos²γ = 1` accepted at input boundaries.
pub const DIRECTION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("direction cosines do not form a unit vector (|Σcos² - 1| = {deviation:.3e})")]
    NonUnitDirection { deviation: f64 },
    #[error("angle {value} deg is outside [0, 180]")]
    AngleOutOfRange { value: f64 },
    #[error("invalid encoding: {}", format_violations(.0))]
    InvalidEncoding(Vec<Violation>),
    #[error("invalid film spec: {0}")]
    InvalidFilm(String),
    #[error("invalid mask: {0}")]
    InvalidMask(String),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

/// One pixel's magnetization direction as the angles (degrees) it makes with
/// the x, y and z axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagVector {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl MagVector {
    pub const UP: MagVector = MagVector { alpha: 90.0, beta: 90.0, gamma: 0.0 };
    pub const DOWN: MagVector = MagVector { alpha: 90.0, beta: 90.0, gamma: 180.0 };

    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self { alpha, beta, gamma }
    }

    /// Builds the vector from any non-zero direction (normalized first).
    pub fn from_direction(d: Vector3<f64>) -> Result<Self, LatticeError> {
        let n = d.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(LatticeError::NonUnitDirection { deviation: 1.0 });
        }
        let (alpha, beta, gamma) = angles_from_direction(d / n)?;
        Ok(Self { alpha, beta, gamma })
    }

    /// Direction cosines, without checking the unit-norm identity.
    pub fn cosines(&self) -> Vector3<f64> {
        Vector3::new(
            self.alpha.to_radians().cos(),
            self.beta.to_radians().cos(),
            self.gamma.to_radians().cos(),
        )
    }

    /// Checked unit direction.
    pub fn direction(&self) -> Result<Vector3<f64>, LatticeError> {
        direction_from_angles(self.alpha, self.beta, self.gamma)
    }

    pub fn check(&self) -> Result<(), LatticeError> {
        self.direction().map(|_| ())
    }
}

/// `(cos α, cos β, cos γ)`; rejects angles outside [0, 180] and triples that
/// violate the direction-cosine identity by more than [`DIRECTION_TOLERANCE`].
pub fn direction_from_angles(alpha: f64, beta: f64, gamma: f64) -> Result<Vector3<f64>, LatticeError> {
    for a in [alpha, beta, gamma] {
        if !(0.0..=180.0).contains(&a) {
            return Err(LatticeError::AngleOutOfRange { value: a });
        }
    }
    let u = Vector3::new(alpha.to_radians().cos(), beta.to_radians().cos(), gamma.to_radians().cos());
    let deviation = (u.norm_squared() - 1.0).abs();
    if deviation > DIRECTION_TOLERANCE {
        return Err(LatticeError::NonUnitDirection { deviation });
    }
    Ok(u)
}

/// Inverse of [`direction_from_angles`]: `arccos` of each component, degrees.
pub fn angles_from_direction(u: Vector3<f64>) -> Result<(f64, f64, f64), LatticeError> {
    let deviation = (u.norm() - 1.0).abs();
    if !(deviation <= DIRECTION_TOLERANCE) {
        return Err(LatticeError::NonUnitDirection { deviation });
    }
    let ac = |c: f64| c.clamp(-1.0, 1.0).acos().to_degrees();
    Ok((ac(u.x), ac(u.y), ac(u.z)))
}

/// Diagonal used to split a pixel into two triangular plates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Diagonal {
    /// From corner `(row, col)` to `(row+1, col+1)`.
    Main,
    /// From corner `(row+1, col)` to `(row, col+1)`.
    Anti,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cell {
    Removed,
    Whole,
    Split(Diagonal),
}

impl Cell {
    pub fn is_active(self) -> bool {
        !matches!(self, Cell::Removed)
    }

    pub fn to_char(self) -> char {
        match self {
            Cell::Removed => '0',
            Cell::Whole => '1',
            Cell::Split(Diagonal::Main) => 'd',
            Cell::Split(Diagonal::Anti) => 'a',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            '0' => Some(Cell::Removed),
            '1' => Some(Cell::Whole),
            'd' => Some(Cell::Split(Diagonal::Main)),
            'a' => Some(Cell::Split(Diagonal::Anti)),
            _ => None,
        }
    }
}

/// Which pixels of the `rows × cols` array remain after contouring, and
/// which of those are split into triangles.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PixelMask {
    rows: usize,
    cols: usize,
    cells: Vec<Cell>,
}

impl PixelMask {
    pub fn full(rows: usize, cols: usize) -> Result<Self, LatticeError> {
        Self::filled(rows, cols, Cell::Whole)
    }

    pub fn empty(rows: usize, cols: usize) -> Result<Self, LatticeError> {
        Self::filled(rows, cols, Cell::Removed)
    }

    fn filled(rows: usize, cols: usize, cell: Cell) -> Result<Self, LatticeError> {
        if rows == 0 || cols == 0 {
            return Err(LatticeError::InvalidMask(format!("dimensions {rows}x{cols} must be at least 1x1")));
        }
        Ok(Self { rows, cols, cells: vec![cell; rows * cols] })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Cell) -> Result<Self, LatticeError> {
        let mut m = Self::empty(rows, cols)?;
        for r in 0..rows {
            for c in 0..cols {
                m.cells[r * cols + c] = f(r, c);
            }
        }
        Ok(m)
    }

    /// Parses one string per row using `0`, `1`, `d`, `a`.
    pub fn from_rows<S: AsRef<str>>(rows: &[S]) -> Result<Self, LatticeError> {
        let n = rows.first().map(|r| r.as_ref().chars().count()).unwrap_or(0);
        let mut m = Self::empty(rows.len(), n)?;
        for (r, line) in rows.iter().enumerate() {
            let line = line.as_ref();
            if line.chars().count() != n {
                return Err(LatticeError::InvalidMask(format!("row {r} has {} cells, expected {n}", line.chars().count())));
            }
            for (c, ch) in line.chars().enumerate() {
                m.cells[r * n + c] = Cell::from_char(ch)
                    .ok_or_else(|| LatticeError::InvalidMask(format!("unknown mask symbol {ch:?} at ({r},{c})")))?;
            }
        }
        Ok(m)
    }

    pub fn to_rows(&self) -> Vec<String> {
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self.cell(r, c).to_char()).collect())
            .collect()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn in_bounds(&self, r: usize, c: usize) -> bool {
        r < self.rows && c < self.cols
    }

    pub fn cell(&self, r: usize, c: usize) -> Cell {
        self.cells[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, cell: Cell) {
        self.cells[r * self.cols + c] = cell;
    }

    pub fn is_active(&self, r: usize, c: usize) -> bool {
        self.cell(r, c).is_active()
    }

    pub fn active_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_active()).count()
    }

    /// Active cells in row-major order.
    pub fn active_cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.rows * self.cols)
            .filter(|&i| self.cells[i].is_active())
            .map(|i| (i / self.cols, i % self.cols))
    }
}

/// Half of a diagonally split pixel, or the whole pixel.
///
/// For a `Main` split, part `A` holds corner `(row+1, col)` and `B` holds
/// `(row, col+1)`. For an `Anti` split, `A` holds `(row, col)` and `B` holds
/// `(row+1, col+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Part {
    Whole,
    A,
    B,
}

/// Names one rigid plate: `"r,c"` for a whole pixel, `"r,ca"` / `"r,cb"` for
/// a triangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PlateRef {
    pub row: usize,
    pub col: usize,
    pub part: Part,
}

impl PlateRef {
    pub fn whole(row: usize, col: usize) -> Self {
        Self { row, col, part: Part::Whole }
    }

    pub fn tri(row: usize, col: usize, part: Part) -> Self {
        Self { row, col, part }
    }
}

impl fmt::Display for PlateRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let suffix = match self.part {
            Part::Whole => "",
            Part::A => "a",
            Part::B => "b",
        };
        write!(f, "{},{}{}", self.row, self.col, suffix)
    }
}

impl std::str::FromStr for PlateRef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (r, rest) = s.split_once(',').ok_or_else(|| format!("plate reference {s:?} must look like r,c"))?;
        let (c, part) = match rest.strip_suffix('a') {
            Some(c) => (c, Part::A),
            None => match rest.strip_suffix('b') {
                Some(c) => (c, Part::B),
                None => (rest, Part::Whole),
            },
        };
        let row = r.trim().parse().map_err(|_| format!("bad row in plate reference {s:?}"))?;
        let col = c.trim().parse().map_err(|_| format!("bad column in plate reference {s:?}"))?;
        Ok(Self { row, col, part })
    }
}

/// Per-pixel magnetization directions over a mask, scaled by a common
/// remanent magnetization magnitude (kA/m).
///
/// A diagonally split pixel normally magnetizes both triangles alike; its
/// `B` triangle may instead carry its own vector (see [`Self::set_part`]).
#[derive(Debug, Clone, PartialEq)]
pub struct EncodingMatrix {
    pub mask: PixelMask,
    cells: Vec<Option<MagVector>>,
    part_b: BTreeMap<(usize, usize), MagVector>,
    pub remanence: f64,
}

impl EncodingMatrix {
    /// Raw constructor: no invariant checks, see [`validate_encoding`].
    pub fn from_parts(mask: PixelMask, cells: Vec<Option<MagVector>>, remanence: f64) -> Self {
        Self { mask, cells, part_b: BTreeMap::new(), remanence }
    }

    /// Every active cell set to `v`.
    pub fn uniform(mask: PixelMask, v: MagVector, remanence: f64) -> Self {
        let cells = mask.cells.iter().map(|c| c.is_active().then_some(v)).collect();
        Self { mask, cells, part_b: BTreeMap::new(), remanence }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.mask.dims()
    }

    pub fn get(&self, r: usize, c: usize) -> Option<MagVector> {
        self.cells.get(r * self.mask.cols + c).copied().flatten()
    }

    /// Sets the whole pixel, both triangles included.
    pub fn set(&mut self, r: usize, c: usize, v: Option<MagVector>) {
        let i = r * self.mask.cols + c;
        self.cells[i] = v;
        self.part_b.remove(&(r, c));
    }

    pub fn cells(&self) -> &[Option<MagVector>] {
        &self.cells
    }

    /// Vector carried by one plate of the pixel.
    pub fn get_part(&self, r: usize, c: usize, part: Part) -> Option<MagVector> {
        match part {
            Part::B => self.part_b.get(&(r, c)).copied().or_else(|| self.get(r, c)),
            _ => self.get(r, c),
        }
    }

    /// Gives triangle `B` of a split pixel its own vector; `A` keeps the
    /// pixel vector set by [`Self::set`].
    pub fn set_part_b(&mut self, r: usize, c: usize, v: MagVector) {
        self.part_b.insert((r, c), v);
    }

    /// Pixels whose `B` triangle differs from the pixel vector, row-major.
    pub fn part_b_vectors(&self) -> impl Iterator<Item = ((usize, usize), MagVector)> + '_ {
        self.part_b.iter().map(|(&k, &v)| (k, v))
    }
}

/// What went wrong, and where, in an encoding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rule {
    NonUnitDirection,
    AngleOutOfRange,
    VectorOnRemovedCell,
    PartOnUnsplitCell,
    MissingVector,
    NegativeRemanence,
    CellCountMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub cell: Option<(usize, usize)>,
    pub rule: Rule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.cell {
            Some((r, c)) => write!(f, "{:?} at ({r},{c})", self.rule),
            None => write!(f, "{:?}", self.rule),
        }
    }
}

/// Lists every broken invariant of `e`; empty iff the encoding is valid.
pub fn validate_encoding(e: &EncodingMatrix) -> Vec<Violation> {
    let mut out = Vec::new();
    if !(e.remanence >= 0.0 && e.remanence.is_finite()) {
        out.push(Violation { cell: None, rule: Rule::NegativeRemanence });
    }
    let (rows, cols) = e.mask.dims();
    if e.cells.len() != rows * cols {
        out.push(Violation { cell: None, rule: Rule::CellCountMismatch });
        return out;
    }
    for r in 0..rows {
        for c in 0..cols {
            let active = e.mask.is_active(r, c);
            match (active, e.get(r, c)) {
                (false, Some(_)) => out.push(Violation { cell: Some((r, c)), rule: Rule::VectorOnRemovedCell }),
                (true, None) => out.push(Violation { cell: Some((r, c)), rule: Rule::MissingVector }),
                (true, Some(v)) => match v.check() {
                    Ok(()) => {}
                    Err(LatticeError::AngleOutOfRange { .. }) => {
                        out.push(Violation { cell: Some((r, c)), rule: Rule::AngleOutOfRange })
                    }
                    Err(_) => out.push(Violation { cell: Some((r, c)), rule: Rule::NonUnitDirection }),
                },
                (false, None) => {}
            }
        }
    }
    for (&(r, c), v) in &e.part_b {
        if !e.mask.in_bounds(r, c) || !matches!(e.mask.cell(r, c), Cell::Split(_)) {
            out.push(Violation { cell: Some((r, c)), rule: Rule::PartOnUnsplitCell });
            continue;
        }
        match v.check() {
            Ok(()) => {}
            Err(LatticeError::AngleOutOfRange { .. }) => out.push(Violation { cell: Some((r, c)), rule: Rule::AngleOutOfRange }),
            Err(_) => out.push(Violation { cell: Some((r, c)), rule: Rule::NonUnitDirection }),
        }
    }
    out
}

pub fn ensure_valid(e: &EncodingMatrix) -> Result<(), LatticeError> {
    let v = validate_encoding(e);
    if v.is_empty() {
        Ok(())
    } else {
        Err(LatticeError::InvalidEncoding(v))
    }
}

/// Magnetization grid `M = m·A` in kA/m (row-major); removed cells are zero.
/// A split pixel with distinct triangles reports the mean of the two.
pub fn magnetization_of(e: &EncodingMatrix) -> Result<Vec<Vector3<f64>>, LatticeError> {
    ensure_valid(e)?;
    let cols = e.mask.cols;
    Ok(e.cells
        .iter()
        .enumerate()
        .map(|(i, v)| match (v, e.part_b.get(&(i / cols, i % cols))) {
            (Some(a), Some(b)) => (a.cosines() + b.cosines()) * (0.5 * e.remanence),
            (Some(v), None) => v.cosines() * e.remanence,
            (None, _) => Vector3::zeros(),
        })
        .collect())
}

/// Hinge stiffness per unit hinge length (µJ·rad⁻²·mm⁻¹) calibrated so the
/// z-platform template lifts its platform by 3.1 mm at 54.5 mT with the
/// default remanence. Regenerate with `mechanics::calibrate_hinge_stiffness`.
pub const CALIBRATED_HINGE_STIFFNESS: f64 = 47.28152;

/// Default remanent magnetization (kA/m). Uncalibrated: only the product with
/// the hinge stiffness is pinned by the platform displacement.
pub const DEFAULT_REMANENCE: f64 = 64.0;

/// Film geometry (mm) and material constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilmSpec {
    pub pixel_edge: f64,
    pub film_thickness: f64,
    pub core_thickness: f64,
    pub shell_thickness: f64,
    /// µJ per rad² per mm of hinge.
    pub hinge_stiffness: f64,
    /// kA/m.
    pub remanence_default: f64,
}

impl Default for FilmSpec {
    fn default() -> Self {
        Self {
            pixel_edge: 2.0,
            film_thickness: 0.8,
            core_thickness: 0.6,
            shell_thickness: 0.1,
            hinge_stiffness: CALIBRATED_HINGE_STIFFNESS,
            remanence_default: DEFAULT_REMANENCE,
        }
    }
}

impl FilmSpec {
    pub fn validate(&self) -> Result<(), LatticeError> {
        let lengths = [
            ("pixel_edge", self.pixel_edge),
            ("film_thickness", self.film_thickness),
            ("core_thickness", self.core_thickness),
            ("shell_thickness", self.shell_thickness),
        ];
        for (name, v) in lengths {
            if !(v > 0.0 && v.is_finite()) {
                return Err(LatticeError::InvalidFilm(format!("{name} must be positive, got {v}")));
            }
        }
        if self.core_thickness + 2.0 * self.shell_thickness > self.film_thickness + 1e-9 {
            return Err(LatticeError::InvalidFilm(format!(
                "core {} + 2 x shell {} exceeds film thickness {}",
                self.core_thickness, self.shell_thickness, self.film_thickness
            )));
        }
        if !(self.hinge_stiffness > 0.0 && self.hinge_stiffness.is_finite()) {
            return Err(LatticeError::InvalidFilm("hinge_stiffness must be positive".into()));
        }
        if !(self.remanence_default >= 0.0 && self.remanence_default.is_finite()) {
            return Err(LatticeError::InvalidFilm("remanence_default must be non-negative".into()));
        }
        Ok(())
    }

    /// Magnetic core volume of a full pixel, mm³.
    pub fn pixel_core_volume(&self) -> f64 {
        self.pixel_edge * self.pixel_edge * self.core_thickness
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Vector3<f64>, b: Vector3<f64>, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn axis_directions() {
        assert!(close(direction_from_angles(0.0, 90.0, 90.0).unwrap(), Vector3::x(), 1e-15));
        assert!(close(direction_from_angles(90.0, 90.0, 0.0).unwrap(), Vector3::z(), 1e-15));
        let u = direction_from_angles(60.0, 60.0, 45.0).unwrap();
        assert!(close(u, Vector3::new(0.5, 0.5, std::f64::consts::FRAC_1_SQRT_2), 1e-8));
    }

    #[test]
    fn inverse_angles() {
        let (a, b, g) = angles_from_direction(Vector3::z()).unwrap();
        assert_eq!((a, b, g), (90.0, 90.0, 0.0));
        let (a, b, g) = angles_from_direction(Vector3::x()).unwrap();
        assert_eq!((a, b, g), (0.0, 90.0, 90.0));
        let (a, b, g) = angles_from_direction(Vector3::new(0.5, 0.5, 0.5f64.sqrt())).unwrap();
        assert!((a - 60.0).abs() < 1e-9 && (b - 60.0).abs() < 1e-9 && (g - 45.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_non_unit() {
        assert!(matches!(direction_from_angles(0.0, 0.0, 0.0), Err(LatticeError::NonUnitDirection { .. })));
        assert!(matches!(angles_from_direction(Vector3::new(1.0, 1.0, 0.0)), Err(LatticeError::NonUnitDirection { .. })));
        assert!(matches!(direction_from_angles(-1.0, 90.0, 90.0), Err(LatticeError::AngleOutOfRange { .. })));
    }

    #[test]
    fn magnetization_scaling() {
        let mask = PixelMask::from_rows(&["10"]).unwrap();
        let e = EncodingMatrix::uniform(mask.clone(), MagVector::UP, 64.0);
        let m = magnetization_of(&e).unwrap();
        assert!(close(m[0], Vector3::new(0.0, 0.0, 64.0), 1e-12));
        assert_eq!(m[1], Vector3::zeros());
        let zero = EncodingMatrix::uniform(mask, MagVector::UP, 0.0);
        assert!(magnetization_of(&zero).unwrap().iter().all(|v| *v == Vector3::zeros()));
    }

    #[test]
    fn violations_are_located() {
        let mask = PixelMask::from_rows(&["111", "110"]).unwrap();
        let mut e = EncodingMatrix::uniform(mask, MagVector::UP, 64.0);
        assert!(validate_encoding(&e).is_empty());
        e.set(0, 0, Some(MagVector::new(0.0, 0.0, 0.0)));
        e.set(1, 2, Some(MagVector::UP));
        let v = validate_encoding(&e);
        assert_eq!(
            v,
            vec![
                Violation { cell: Some((0, 0)), rule: Rule::NonUnitDirection },
                Violation { cell: Some((1, 2)), rule: Rule::VectorOnRemovedCell },
            ]
        );
    }

    #[test]
    fn plate_refs_parse() {
        assert_eq!("3,4".parse::<PlateRef>().unwrap(), PlateRef::whole(3, 4));
        assert_eq!("0,1b".parse::<PlateRef>().unwrap(), PlateRef::tri(0, 1, Part::B));
        assert_eq!(PlateRef::tri(2, 0, Part::A).to_string(), "2,0a");
        assert!("3".parse::<PlateRef>().is_err());
    }

    #[test]
    fn film_bounds() {
        FilmSpec::default().validate().unwrap();
        let bad = FilmSpec { core_thickness: 0.7, ..FilmSpec::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn mask_text_round_trip() {
        let rows = ["1d0", "a11"];
        let m = PixelMask::from_rows(&rows).unwrap();
        assert_eq!(m.to_rows(), rows);
        assert_eq!(m.active_count(), 5);
        assert!(PixelMask::from_rows(&["1x"]).is_err());
        assert!(PixelMask::full(0, 3).is_err());
    }
}
