//! Applied-field sources and magnetic imaging of encoded films.
//!
//! Units: positions in mm, flux density in mT, dipole moments in A·m².

pub mod cuboid;
mod map;

pub use map::{film_field_map, film_field_map_naive, pixel_dipoles, FieldMap, PixelDipole};

use nalgebra::{Matrix3, Rotation3, Vector3};
use thiserror::Error;

/// Vacuum permeability, T·m/A.
pub const MU0: f64 = 4.0e-7 * std::f64::consts::PI;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("query point ({x:.4}, {y:.4}, {z:.4}) mm lies inside the magnet body")]
    InsideMagnet { x: f64, y: f64, z: f64 },
    #[error("imaging plane z = {z} mm intersects the film (half thickness {half_thickness} mm)")]
    PlaneIntersectsFilm { z: f64, half_thickness: f64 },
    #[error("target {target} mT exceeds the on-axis field at the pole face ({surface:.3} mT); no standoff reaches it")]
    TargetAboveSurfaceField { target: f64, surface: f64 },
    #[error("invalid field source: {0}")]
    InvalidSource(String),
    #[error(transparent)]
    Lattice(#[from] crate::lattice::LatticeError),
}

/// Spatially uniform applied field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformField {
    pub b: Vector3<f64>,
}

impl UniformField {
    pub fn new(b: Vector3<f64>) -> Result<Self, FieldError> {
        if !b.iter().all(|c| c.is_finite()) {
            return Err(FieldError::InvalidSource("field components must be finite".into()));
        }
        Ok(Self { b })
    }
}

/// Cube permanent magnet polarized along its local +z (pole) axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubeMagnet {
    /// Edge length, mm.
    pub edge: f64,
    /// Remanent flux density, mT.
    pub residual_flux_density: f64,
    /// Center position, mm.
    pub position: Vector3<f64>,
    /// Local-to-world rotation.
    pub orientation: Rotation3<f64>,
}

impl Default for CubeMagnet {
    /// N52 cube, 24 mm edge, nominal 1450 mT remanence, at the origin.
    fn default() -> Self {
        Self {
            edge: 24.0,
            residual_flux_density: 1450.0,
            position: Vector3::zeros(),
            orientation: Rotation3::identity(),
        }
    }
}

impl CubeMagnet {
    pub fn validate(&self) -> Result<(), FieldError> {
        if !(self.edge > 0.0 && self.edge.is_finite()) {
            return Err(FieldError::InvalidSource("edge must be positive".into()));
        }
        if !(self.residual_flux_density > 0.0 && self.residual_flux_density.is_finite()) {
            return Err(FieldError::InvalidSource("residual flux density must be positive".into()));
        }
        Ok(())
    }

    fn half(&self) -> Vector3<f64> {
        Vector3::repeat(self.edge / 2.0)
    }

    fn to_local(&self, p: Vector3<f64>) -> Vector3<f64> {
        self.orientation.inverse() * (p - self.position)
    }

    pub fn field_at(&self, p: Vector3<f64>) -> Result<Vector3<f64>, FieldError> {
        let local = self.to_local(p);
        if cuboid::is_inside(local, self.half()) {
            return Err(FieldError::InsideMagnet { x: p.x, y: p.y, z: p.z });
        }
        Ok(self.orientation * cuboid::prism_field(local, self.half(), self.residual_flux_density))
    }

    /// Point-dipole moment `Br·V/μ0`, A·m², along the pole axis.
    pub fn dipole_moment(&self) -> Vector3<f64> {
        let volume = (self.edge * 1e-3).powi(3);
        self.orientation * Vector3::z() * (self.residual_flux_density * 1e-3 * volume / MU0)
    }

    /// On-axis pole-face `Bz` at `standoff` mm above the +z face.
    pub fn face_center_field(&self, standoff: f64) -> f64 {
        let half = self.half();
        let p = Vector3::new(0.0, 0.0, half.z + standoff.max(0.0));
        cuboid::prism_field(p, half, self.residual_flux_density).z
    }

    /// Standoff (mm, ≥ 0) at which the pole-axis field equals `target` mT.
    pub fn calibrate_standoff(&self, target: f64) -> Result<f64, FieldError> {
        let surface = self.face_center_field(0.0);
        if !(target > 0.0) || target > surface {
            return Err(FieldError::TargetAboveSurfaceField { target, surface });
        }
        let mut hi = self.edge;
        while self.face_center_field(hi) > target {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.face_center_field(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-13 * self.edge {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Applied field driving the film.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldSource {
    Uniform(UniformField),
    Cube(CubeMagnet),
}

impl FieldSource {
    pub fn uniform(b: Vector3<f64>) -> Self {
        FieldSource::Uniform(UniformField { b })
    }

    pub fn zero() -> Self {
        Self::uniform(Vector3::zeros())
    }

    pub fn field_at(&self, p: Vector3<f64>) -> Result<Vector3<f64>, FieldError> {
        match self {
            FieldSource::Uniform(u) => Ok(u.b),
            FieldSource::Cube(m) => m.field_at(p),
        }
    }

    /// `∂B_i/∂x_j` in mT/mm; central differences for the magnet.
    pub fn jacobian(&self, p: Vector3<f64>) -> Result<Matrix3<f64>, FieldError> {
        match self {
            FieldSource::Uniform(_) => Ok(Matrix3::zeros()),
            FieldSource::Cube(m) => {
                let h = 1e-5 * m.edge;
                let mut j = Matrix3::zeros();
                for k in 0..3 {
                    let mut dp = Vector3::zeros();
                    dp[k] = h;
                    let col = (m.field_at(p + dp)? - m.field_at(p - dp)?) / (2.0 * h);
                    j.set_column(k, &col);
                }
                Ok(j)
            }
        }
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self, FieldSource::Uniform(_))
    }

    /// The same source with its strength multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        match *self {
            FieldSource::Uniform(u) => FieldSource::uniform(u.b * factor),
            FieldSource::Cube(m) => FieldSource::Cube(CubeMagnet {
                residual_flux_density: m.residual_flux_density * factor,
                ..m
            }),
        }
    }

    /// Characteristic strength: |B| for a uniform field, remanence for a magnet.
    pub fn magnitude(&self) -> f64 {
        match self {
            FieldSource::Uniform(u) => u.b.norm(),
            FieldSource::Cube(m) => m.residual_flux_density,
        }
    }

    /// Source of the given strength with the same direction or geometry.
    pub fn with_magnitude(&self, magnitude: f64) -> Self {
        let m = self.magnitude();
        if m == 0.0 {
            return *self;
        }
        self.scaled(magnitude / m)
    }

    pub fn rotated(&self, r: &Rotation3<f64>) -> Self {
        match *self {
            FieldSource::Uniform(u) => FieldSource::uniform(r * u.b),
            FieldSource::Cube(m) => FieldSource::Cube(CubeMagnet {
                position: r * m.position,
                orientation: r * m.orientation,
                ..m
            }),
        }
    }
}

/// Field (mT) at offset `r` (mm) from a point dipole `m` (A·m²).
pub fn dipole_field(m: Vector3<f64>, r: Vector3<f64>) -> Vector3<f64> {
    let d = r.norm();
    let rhat = r / d;
    let d_m = d * 1e-3;
    // μ0/4π · (3(m·r̂)r̂ − m)/r³, converted T → mT
    (rhat * (3.0 * m.dot(&rhat)) - m) * (MU0 / (4.0 * std::f64::consts::PI) / (d_m * d_m * d_m) * 1e3)
}
