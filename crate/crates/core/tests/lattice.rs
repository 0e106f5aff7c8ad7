use magpixel::lattice::*;
use nalgebra::Vector3;
use proptest::prelude::*;

fn unit() -> impl Strategy<Value = Vector3<f64>> {
    (-1.0f64..1.0, 0.0f64..std::f64::consts::TAU).prop_map(|(z, phi)| {
        let s = (1.0 - z * z).sqrt();
        Vector3::new(s * phi.cos(), s * phi.sin(), z)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn direction_is_unit(u in unit()) {
        let v = MagVector::from_direction(u).unwrap();
        let d = v.direction().unwrap();
        prop_assert!((d.norm() - 1.0).abs() < 1e-9);
        let c = v.cosines();
        prop_assert!((c.norm_squared() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn angles_round_trip(u in unit()) {
        let (a, b, g) = angles_from_direction(u).unwrap();
        let back = angles_from_direction(direction_from_angles(a, b, g).unwrap()).unwrap();
        prop_assert!((back.0 - a).abs() < 1e-9 && (back.1 - b).abs() < 1e-9 && (back.2 - g).abs() < 1e-9);
        prop_assert!((direction_from_angles(a, b, g).unwrap() - u).norm() < 1e-12);
    }
}

fn random_encoding(rows: usize, cols: usize, dirs: &[Vector3<f64>], keep: &[bool], m: f64) -> EncodingMatrix {
    let mut mask = PixelMask::full(rows, cols).unwrap();
    for (i, &k) in keep.iter().enumerate() {
        if !k {
            mask.set(i / cols, i % cols, Cell::Removed);
        }
    }
    let cells = (0..rows * cols)
        .map(|i| keep[i].then(|| MagVector::from_direction(dirs[i]).unwrap()))
        .collect();
    EncodingMatrix::from_parts(mask, cells, m)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn magnetization_linear_in_remanence(
        dirs in prop::collection::vec(unit(), 12),
        keep in prop::collection::vec(any::<bool>(), 12),
        m in 0.0f64..500.0,
    ) {
        let e = random_encoding(3, 4, &dirs, &keep, m);
        let mut twice = e.clone();
        twice.remanence = 2.0 * m;
        let a = magnetization_of(&e).unwrap();
        let b = magnetization_of(&twice).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(x * 2.0, *y);
        }
    }

    #[test]
    fn injected_violations_are_reported(
        dirs in prop::collection::vec(unit(), 12),
        keep in prop::collection::vec(any::<bool>(), 12),
        target in 0usize..12,
        kind in 0usize..3,
    ) {
        let mut e = random_encoding(3, 4, &dirs, &keep, 64.0);
        prop_assert!(validate_encoding(&e).is_empty());
        let (r, c) = (target / 4, target % 4);
        let expected = match (kind, keep[target]) {
            (0, true) => { e.set(r, c, Some(MagVector::new(0.0, 0.0, 0.0))); Rule::NonUnitDirection }
            (1, true) => { e.set(r, c, Some(MagVector::new(190.0, 90.0, 90.0))); Rule::AngleOutOfRange }
            (_, true) => { e.set(r, c, None); Rule::MissingVector }
            (_, false) => { e.set(r, c, Some(MagVector::UP)); Rule::VectorOnRemovedCell }
        };
        prop_assert_eq!(validate_encoding(&e), vec![Violation { cell: Some((r, c)), rule: expected }]);
    }
}

#[test]
fn split_parts_validate_and_average() {
    let mask = PixelMask::from_rows(&["d1"]).unwrap();
    let mut e = EncodingMatrix::uniform(mask, MagVector::UP, 10.0);
    e.set_part_b(0, 0, MagVector::new(0.0, 90.0, 90.0));
    assert!(validate_encoding(&e).is_empty());
    let m = magnetization_of(&e).unwrap();
    assert!((m[0] - Vector3::new(5.0, 0.0, 5.0)).norm() < 1e-12);
    assert_eq!(e.get_part(0, 0, Part::A), Some(MagVector::UP));

    e.set_part_b(0, 1, MagVector::UP);
    assert_eq!(validate_encoding(&e), vec![Violation { cell: Some((0, 1)), rule: Rule::PartOnUnsplitCell }]);

    // setting the whole pixel drops the separate triangle
    e.set(0, 0, Some(MagVector::DOWN));
    assert_eq!(e.get_part(0, 0, Part::B), Some(MagVector::DOWN));
}

#[test]
fn negative_remanence_rejected() {
    let e = EncodingMatrix::uniform(PixelMask::full(1, 1).unwrap(), MagVector::UP, -1.0);
    assert_eq!(validate_encoding(&e), vec![Violation { cell: None, rule: Rule::NegativeRemanence }]);
    assert!(matches!(magnetization_of(&e), Err(LatticeError::InvalidEncoding(_))));
}

#[test]
fn film_defaults() {
    let f = FilmSpec::default();
    assert_eq!((f.pixel_edge, f.film_thickness, f.core_thickness, f.shell_thickness), (2.0, 0.8, 0.6, 0.1));
    assert_eq!(f.remanence_default, 64.0);
    assert!(f.core_thickness + 2.0 * f.shell_thickness <= f.film_thickness + 1e-9);
}
