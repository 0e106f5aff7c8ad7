//! One-off calibration of the hinge stiffness against the platform lift.

use super::solver::{solve, SolverOptions};
use super::{measure, EnergySetup, MechanicsError, Query};
use crate::encode::template;
use crate::field::FieldSource;
use crate::lattice::FilmSpec;

/// Platform lift reported for the z-axis platform, mm.
pub const PLATFORM_DISPLACEMENT: f64 = 3.1;
/// Field at which that lift was reported, mT.
pub const PLATFORM_FIELD: f64 = 54.5;

/// Platform centroid displacement of the 16×16 z-platform template at
/// `field` mT along +z with the given hinge stiffness.
pub fn platform_displacement(hinge_stiffness: f64, field: f64, options: &SolverOptions) -> Result<f64, MechanicsError> {
    let doc = template("z-platform", (16, 16)).expect("z-platform template exists");
    let hints = doc.mechanics.expect("template carries mechanics hints");
    let film = FilmSpec { hinge_stiffness, ..doc.film };
    let setup = EnergySetup::new(doc.encoding, film, FieldSource::uniform(hints.field.normalize() * field)).with_anchors(hints.anchors);
    let sol = solve(&setup, options)?;
    measure(&sol.model, &sol.state, &Query::CentroidDisplacement(hints.probe))
}

/// Hinge stiffness (µJ·rad⁻²·mm⁻¹) at which the platform lifts
/// [`PLATFORM_DISPLACEMENT`] at [`PLATFORM_FIELD`], by bisection in log
/// stiffness (the lift falls monotonically with stiffness).
pub fn calibrate_hinge_stiffness(options: &SolverOptions) -> Result<f64, MechanicsError> {
    let lift = |s: f64| platform_displacement(s, PLATFORM_FIELD, options);
    let (mut lo, mut hi) = (0.1f64.ln(), 1e4f64.ln());
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if lift(mid.exp())? > PLATFORM_DISPLACEMENT {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}
