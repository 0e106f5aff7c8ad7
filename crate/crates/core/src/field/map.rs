use std::fmt::Write as _;

use nalgebra::Vector3;
use rayon::prelude::*;

use super::{dipole_field, FieldError};
use crate::lattice::{magnetization_of, EncodingMatrix, FilmSpec};

/// Normal field component `Bz` (mT) sampled on a plane above the film.
///
/// Samples are cell-centered on the film footprint: sample `(i, j)` sits at
/// `x = (i + ½)·Lx/px`, `y = (j + ½)·Ly/py`. Values are row-major in `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldMap {
    pub z: f64,
    pub resolution: (usize, usize),
    pub values: Vec<f64>,
}

impl FieldMap {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.resolution.1 + j]
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Binary 16-bit PGM, big-endian samples, width = `py`, height = `px`.
    /// The header comment records the mT values mapped to 0 and 65535.
    pub fn to_pgm(&self) -> Vec<u8> {
        let (px, py) = self.resolution;
        let (lo, hi) = self.min_max();
        let mut out = format!("P5\n# magpixel Bz map z_mm={} min_mT={:e} max_mT={:e}\n{py} {px}\n65535\n", self.z, lo, hi)
            .into_bytes();
        out.reserve(self.values.len() * 2);
        for &v in &self.values {
            out.extend_from_slice(&quantize(v, lo, hi).to_be_bytes());
        }
        out
    }

    /// One line per sample row, 9 significant digits, mT.
    pub fn to_csv(&self) -> String {
        let (_, py) = self.resolution;
        let mut s = String::new();
        for row in self.values.chunks(py) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.8e}")).collect();
            let _ = writeln!(s, "{}", line.join(","));
        }
        s
    }

    /// Cells whose value is at least half the map maximum.
    pub fn threshold_half_max(&self) -> Vec<bool> {
        let (_, hi) = self.min_max();
        self.values.iter().map(|&v| v >= 0.5 * hi).collect()
    }
}

pub(crate) fn quantize(v: f64, lo: f64, hi: f64) -> u16 {
    if hi > lo {
        (((v - lo) / (hi - lo)) * 65535.0).round().clamp(0.0, 65535.0) as u16
    } else {
        0
    }
}

/// Point dipole standing in for one magnetized pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelDipole {
    /// Pixel center, mm (film mid-plane at z = 0).
    pub position: Vector3<f64>,
    /// A·m².
    pub moment: Vector3<f64>,
}

/// One dipole per active pixel: `M·V` at the pixel center, row-major order.
pub fn pixel_dipoles(e: &EncodingMatrix, film: &FilmSpec) -> Result<Vec<PixelDipole>, FieldError> {
    let mag = magnetization_of(e)?;
    let (_, cols) = e.dims();
    // kA/m · mm³ → A·m²
    let volume = film.pixel_core_volume() * 1e-6;
    Ok(e.mask
        .active_cells()
        .map(|(r, c)| PixelDipole {
            position: Vector3::new((r as f64 + 0.5) * film.pixel_edge, (c as f64 + 0.5) * film.pixel_edge, 0.0),
            moment: mag[r * cols + c] * volume,
        })
        .collect())
}

fn check_plane(film: &FilmSpec, z: f64, res: (usize, usize)) -> Result<(), FieldError> {
    let half_thickness = film.film_thickness / 2.0;
    if !(z > half_thickness) {
        return Err(FieldError::PlaneIntersectsFilm { z, half_thickness });
    }
    if res.0 == 0 || res.1 == 0 {
        return Err(FieldError::InvalidSource("map resolution must be at least 1x1".into()));
    }
    Ok(())
}

fn sample_point(e: &EncodingMatrix, film: &FilmSpec, z: f64, res: (usize, usize), i: usize, j: usize) -> Vector3<f64> {
    let (rows, cols) = e.dims();
    let lx = rows as f64 * film.pixel_edge;
    let ly = cols as f64 * film.pixel_edge;
    Vector3::new((i as f64 + 0.5) * lx / res.0 as f64, (j as f64 + 0.5) * ly / res.1 as f64, z)
}

/// Superposed `Bz` of every pixel dipole on the plane at height `z` (mm).
/// Rows are evaluated in parallel; each sample sums dipoles in row-major order.
pub fn film_field_map(e: &EncodingMatrix, film: &FilmSpec, z: f64, res: (usize, usize)) -> Result<FieldMap, FieldError> {
    check_plane(film, z, res)?;
    let dipoles = pixel_dipoles(e, film)?;
    let values: Vec<f64> = (0..res.0)
        .into_par_iter()
        .flat_map_iter(|i| {
            let dipoles = &dipoles;
            (0..res.1).map(move |j| {
                let p = sample_point(e, film, z, res, i, j);
                dipoles.iter().fold(0.0, |acc, d| acc + dipole_field(d.moment, p - d.position).z)
            })
        })
        .collect();
    Ok(FieldMap { z, resolution: res, values })
}

/// Reference double loop over samples and lattice cells.
pub fn film_field_map_naive(e: &EncodingMatrix, film: &FilmSpec, z: f64, res: (usize, usize)) -> Result<FieldMap, FieldError> {
    check_plane(film, z, res)?;
    let mag = magnetization_of(e)?;
    let (rows, cols) = e.dims();
    let volume = film.pixel_core_volume() * 1e-6;
    let mut values = Vec::with_capacity(res.0 * res.1);
    for i in 0..res.0 {
        for j in 0..res.1 {
            let p = sample_point(e, film, z, res, i, j);
            let mut bz = 0.0;
            for r in 0..rows {
                for c in 0..cols {
                    if !e.mask.is_active(r, c) {
                        continue;
                    }
                    let center = Vector3::new((r as f64 + 0.5) * film.pixel_edge, (c as f64 + 0.5) * film.pixel_edge, 0.0);
                    bz += dipole_field(mag[r * cols + c] * volume, p - center).z;
                }
            }
            values.push(bz);
        }
    }
    Ok(FieldMap { z, resolution: res, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{MagVector, PixelMask};

    #[test]
    fn empty_film_images_to_zero() {
        let e = EncodingMatrix::uniform(PixelMask::full(3, 3).unwrap(), MagVector::UP, 0.0);
        let m = film_field_map(&e, &FilmSpec::default(), 1.0, (6, 6)).unwrap();
        assert!(m.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn plane_must_clear_film() {
        let e = EncodingMatrix::uniform(PixelMask::full(1, 1).unwrap(), MagVector::UP, 64.0);
        let err = film_field_map(&e, &FilmSpec::default(), 0.4, (1, 1)).unwrap_err();
        assert!(matches!(err, FieldError::PlaneIntersectsFilm { .. }));
    }

    #[test]
    fn csv_and_pgm_shapes() {
        let e = EncodingMatrix::uniform(PixelMask::full(2, 3).unwrap(), MagVector::UP, 64.0);
        let m = film_field_map(&e, &FilmSpec::default(), 1.0, (2, 3)).unwrap();
        let csv = m.to_csv();
        assert_eq!(csv.lines().count(), 2);
        assert_eq!(csv.lines().next().unwrap().split(',').count(), 3);
        let pgm = m.to_pgm();
        let header_end = pgm.windows(7).position(|w| w == b"\n65535\n").unwrap() + 7;
        assert_eq!(pgm.len() - header_end, 12);
        assert!(String::from_utf8_lossy(&pgm[..header_end]).contains("\n3 2\n"));
    }
}
