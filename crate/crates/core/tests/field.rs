mod common;

use common::{iou, lettering, rel_err};
use magpixel::field::*;
use magpixel::lattice::*;
use nalgebra::{Matrix3, Rotation3, Vector3};
use proptest::prelude::*;
use std::f64::consts::PI;

fn cube() -> CubeMagnet {
    CubeMagnet::default()
}

#[test]
fn uniform_source_is_constant() {
    let s = FieldSource::uniform(Vector3::new(0.0, 0.0, 54.5));
    for p in [Vector3::zeros(), Vector3::new(-40.0, 3.0, 1e3)] {
        assert_eq!(s.field_at(p).unwrap(), Vector3::new(0.0, 0.0, 54.5));
    }
    assert!(UniformField::new(Vector3::new(f64::NAN, 0.0, 0.0)).is_err());
}

#[test]
fn on_axis_field_is_axial() {
    let m = cube();
    for z in [12.5, 15.0, 30.0, 100.0] {
        let b = m.field_at(Vector3::new(0.0, 0.0, z)).unwrap();
        assert!(b.x.abs().max(b.y.abs()) < 1e-12 * b.z.abs(), "{z}: {b:?}");
    }
}

#[test]
fn face_center_constant() {
    // on-axis charge-sheet closed form with a = b = c, evaluated at the face
    let c0 = 0.5 - (1.0 / (2.0 * 6f64.sqrt())).atan() / PI;
    assert!((cube().face_center_field(0.0) - c0 * 1450.0).abs() < 1e-9);
    assert!((c0 - 0.4359).abs() < 1e-4);
}

#[test]
fn far_field_matches_point_dipole() {
    let m = cube();
    let moment = m.dipole_moment();
    for dir in [Vector3::z(), Vector3::x(), Vector3::new(1.0, -2.0, 0.5).normalize()] {
        let p = dir * (10.0 * m.edge);
        let b = m.field_at(p).unwrap();
        let d = dipole_field(moment, p);
        assert!((b - d).norm() < 0.01 * d.norm(), "{dir:?}: {b:?} vs {d:?}");
    }
}

#[test]
fn cuboid_field_is_curl_and_divergence_free() {
    let m = CubeMagnet { orientation: Rotation3::from_euler_angles(0.3, -0.2, 1.1), ..cube() };
    let h = 1e-3;
    // outside the circumscribed sphere of the cube, whatever its orientation
    for p in [Vector3::new(0.0, 0.0, 22.0), Vector3::new(23.0, 5.0, -2.0), Vector3::new(-20.0, 18.0, 9.0), Vector3::new(3.0, -12.5, 22.0)] {
        let mut j = Matrix3::zeros();
        for k in 0..3 {
            let mut dp = Vector3::zeros();
            dp[k] = h;
            j.set_column(k, &((m.field_at(p + dp).unwrap() - m.field_at(p - dp).unwrap()) / (2.0 * h)));
        }
        let scale = m.field_at(p).unwrap().norm();
        let div = j.trace();
        let curl = Vector3::new(j[(2, 1)] - j[(1, 2)], j[(0, 2)] - j[(2, 0)], j[(1, 0)] - j[(0, 1)]);
        assert!(div.abs() < 1e-6 * scale, "{p:?}: div {div}");
        assert!(curl.norm() < 1e-6 * scale, "{p:?}: curl {curl:?}");
    }
}

#[test]
fn interior_queries_rejected() {
    assert!(matches!(cube().field_at(Vector3::new(5.0, -5.0, 0.0)), Err(FieldError::InsideMagnet { .. })));
}

#[test]
fn standoff_calibration() {
    let m = cube();
    for target in [100.0, 300.0, 600.0] {
        let s = m.calibrate_standoff(target).unwrap();
        assert!(s >= 0.0);
        assert!((m.face_center_field(s) - target).abs() < 0.1);
    }
    // the pole face of a nominal N52 cube reads about 632 mT, below 735
    assert!(matches!(m.calibrate_standoff(735.0), Err(FieldError::TargetAboveSurfaceField { .. })));
}

fn single_pixel(m: f64) -> EncodingMatrix {
    EncodingMatrix::uniform(PixelMask::full(1, 1).unwrap(), MagVector::UP, m)
}

#[test]
fn single_dipole_on_axis() {
    let film = FilmSpec::default();
    let e = single_pixel(64.0);
    for z in [1.0, 2.5, 7.0] {
        let map = film_field_map(&e, &film, z, (1, 1)).unwrap();
        let moment = 64e3 * film.pixel_edge * film.pixel_edge * film.core_thickness * 1e-9;
        let zm = z * 1e-3;
        let oracle = 4e-7 * PI * moment / (2.0 * PI * zm * zm * zm) * 1e3;
        assert!(rel_err(map.values[0], oracle) < 1e-12, "{z}: {} vs {oracle}", map.values[0]);
        let far = film_field_map(&e, &film, 2.0 * z, (1, 1)).unwrap();
        assert!((far.values[0] / map.values[0] - 0.125).abs() < 1e-9);
    }
}

#[test]
fn plane_inside_film_rejected() {
    let e = single_pixel(64.0);
    assert!(matches!(film_field_map(&e, &FilmSpec::default(), 0.3, (4, 4)), Err(FieldError::PlaneIntersectsFilm { .. })));
}

fn vector() -> impl Strategy<Value = MagVector> {
    (-1.0f64..1.0, 0.0f64..std::f64::consts::TAU).prop_map(|(z, phi)| {
        let s = (1.0 - z * z).sqrt();
        MagVector::from_direction(Vector3::new(s * phi.cos(), s * phi.sin(), z)).unwrap()
    })
}

fn random_film(rows: usize, cols: usize) -> impl Strategy<Value = EncodingMatrix> {
    (prop::collection::vec(vector(), rows * cols), prop::collection::vec(any::<bool>(), rows * cols), 1.0f64..200.0).prop_map(
        move |(v, keep, m)| {
            let mask = PixelMask::from_fn(rows, cols, |r, c| if keep[r * cols + c] { Cell::Whole } else { Cell::Removed }).unwrap();
            let cells = (0..rows * cols).map(|i| keep[i].then_some(v[i])).collect();
            EncodingMatrix::from_parts(mask, cells, m)
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fast_map_matches_naive(e in random_film(8, 8), z in 0.5f64..6.0) {
        let film = FilmSpec::default();
        let fast = film_field_map(&e, &film, z, (24, 24)).unwrap();
        let naive = film_field_map_naive(&e, &film, z, (24, 24)).unwrap();
        for (a, b) in fast.values.iter().zip(&naive.values) {
            prop_assert!(rel_err(*a, *b) <= 1e-12, "{} vs {}", a, b);
        }
    }

    #[test]
    fn superposition_of_disjoint_films(e in random_film(6, 6), split in prop::collection::vec(any::<bool>(), 36)) {
        let film = FilmSpec::default();
        let part = |keep: bool| {
            let mut out = e.clone();
            for (r, c) in e.mask.active_cells() {
                if split[r * 6 + c] != keep {
                    out.set(r, c, None);
                    out.mask.set(r, c, Cell::Removed);
                }
            }
            out
        };
        let whole = film_field_map(&e, &film, 1.5, (12, 12)).unwrap();
        let a = film_field_map(&part(true), &film, 1.5, (12, 12)).unwrap();
        let b = film_field_map(&part(false), &film, 1.5, (12, 12)).unwrap();
        let scale = whole.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 0..whole.values.len() {
            prop_assert!((whole.values[k] - a.values[k] - b.values[k]).abs() <= 1e-12 * scale);
        }
    }
}

#[test]
fn lettering_is_recovered() {
    let (e, strokes) = lettering("CAS", 64.0);
    let (rows, cols) = e.dims();
    let map = film_field_map(&e, &FilmSpec::default(), 1.0, (rows, cols)).unwrap();
    let score = iou(&map.threshold_half_max(), &strokes);
    assert!(score >= 0.8, "IoU {score}");
}

#[test]
fn map_exports() {
    let (e, _) = lettering("C", 64.0);
    let map = film_field_map(&e, &FilmSpec::default(), 1.0, (9, 7)).unwrap();
    let csv = map.to_csv();
    let first: Vec<f64> = csv.lines().next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(first.len(), 7);
    for (j, v) in first.iter().enumerate() {
        assert!(rel_err(*v, map.get(0, j)) < 1e-8);
    }
    let pgm = map.to_pgm();
    assert!(pgm.starts_with(b"P5\n# magpixel Bz map"));
    let (lo, hi) = map.min_max();
    let body = &pgm[pgm.len() - 2 * 63..];
    let k = map.values.iter().position(|&v| v == hi).unwrap();
    assert_eq!(u16::from_be_bytes([body[2 * k], body[2 * k + 1]]), 65535);
    let k = map.values.iter().position(|&v| v == lo).unwrap();
    assert_eq!(u16::from_be_bytes([body[2 * k], body[2 * k + 1]]), 0);
}
