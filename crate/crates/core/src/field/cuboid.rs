//! Field of a uniformly polarized rectangular prism by the magnetic
//! surface-charge method.
//!
//! The prism has half-sizes `(a, b, c)`, is centered on the origin and carries
//! polarization `J` along +z. Its two pole faces are uniformly charged sheets
//! at `z = ±c`; each sheet integral has a closed form in `atan`/`asinh`.

use std::f64::consts::FRAC_PI_2;

use nalgebra::Vector3;

/// `∫∫ (r - r')/|r - r'|³ dA'` over the rectangle `[-a,a]×[-b,b]` lying in the
/// plane `z = z0`. `exterior` is the side (+1/-1) used as the limit when the
/// point lies in the sheet plane.
fn sheet_integral(p: Vector3<f64>, a: f64, b: f64, z0: f64, exterior: f64) -> Vector3<f64> {
    let w = p.z - z0;
    let us = [p.x + a, p.x - a];
    let vs = [p.y + b, p.y - b];
    let mut out = Vector3::zeros();
    for (iu, &u) in us.iter().enumerate() {
        for (iv, &v) in vs.iter().enumerate() {
            let sign = if (iu + iv) % 2 == 0 { 1.0 } else { -1.0 };
            let r = (u * u + v * v + w * w).sqrt();
            let rho_u = (u * u + w * w).sqrt().max(f64::MIN_POSITIVE);
            let rho_v = (v * v + w * w).sqrt().max(f64::MIN_POSITIVE);
            out.x -= sign * (v / rho_u).asinh();
            out.y -= sign * (u / rho_v).asinh();
            out.z += sign
                * if w != 0.0 {
                    (u * v / (w * r)).atan()
                } else if u * v == 0.0 {
                    0.0
                } else {
                    exterior * FRAC_PI_2 * (u * v).signum()
                };
        }
    }
    out
}

/// True if `p` lies strictly inside the prism.
pub fn is_inside(p: Vector3<f64>, half: Vector3<f64>) -> bool {
    p.x.abs() < half.x && p.y.abs() < half.y && p.z.abs() < half.z
}

/// Flux density (units of `polarization`) at `p`, in the prism's local frame.
/// Inside the body the polarization itself is added, so the result is the
/// total B field everywhere.
pub fn prism_field(p: Vector3<f64>, half: Vector3<f64>, polarization: f64) -> Vector3<f64> {
    let top = sheet_integral(p, half.x, half.y, half.z, 1.0);
    let bottom = sheet_integral(p, half.x, half.y, -half.z, -1.0);
    let mut b = (top - bottom) * (polarization / (4.0 * std::f64::consts::PI));
    if is_inside(p, half) {
        b.z += polarization;
    }
    b
}

/// Closed-form on-axis `Bz` at height `z` above the center, for `|z| > c`.
pub fn on_axis_bz(z: f64, half: Vector3<f64>, polarization: f64) -> f64 {
    let (a, b, c) = (half.x, half.y, half.z);
    let term = |d: f64| (a * b / (d * (a * a + b * b + d * d).sqrt())).atan();
    polarization / std::f64::consts::PI * (term(z - c) - term(z + c))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn face_center_constant() {
        let half = Vector3::new(1.0, 1.0, 1.0);
        let c0 = prism_field(Vector3::new(0.0, 0.0, 1.0), half, 1.0).z;
        // π/2 - atan(1/(2√6)), divided by π
        let expected = 0.5 - (1.0 / (2.0 * 6f64.sqrt())).atan() / std::f64::consts::PI;
        assert!((c0 - expected).abs() < 1e-14, "{c0} vs {expected}");
        assert!((c0 - 0.4359).abs() < 1e-4);
    }

    #[test]
    fn matches_on_axis_closed_form() {
        let half = Vector3::new(12.0, 12.0, 12.0);
        for z in [12.5, 15.0, 30.0, 100.0] {
            let b = prism_field(Vector3::new(0.0, 0.0, z), half, 1450.0);
            let bz = on_axis_bz(z, half, 1450.0);
            assert!((b.z - bz).abs() < 1e-10 * bz.abs());
            assert!(b.x.abs() < 1e-12 * bz.abs() && b.y.abs() < 1e-12 * bz.abs());
        }
    }

    #[test]
    fn continuous_across_face() {
        let half = Vector3::new(1.0, 1.5, 0.5);
        let p = Vector3::new(0.3, -0.2, 0.5);
        let out = prism_field(p + Vector3::new(0.0, 0.0, 1e-9), half, 1.0);
        let inn = prism_field(p - Vector3::new(0.0, 0.0, 1e-9), half, 1.0);
        assert!((out.z - inn.z).abs() < 1e-6);
    }

    #[test]
    fn center_field_is_two_thirds_for_cube() {
        let half = Vector3::new(1.0, 1.0, 1.0);
        let b = prism_field(Vector3::zeros(), half, 3.0);
        assert!((b.z - 2.0).abs() < 1e-12);
    }
}
