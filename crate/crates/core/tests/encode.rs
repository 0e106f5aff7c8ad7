use magpixel::encode::*;
use magpixel::lattice::*;
use nalgebra::Vector3;
use proptest::prelude::*;

fn plus() -> PixelMask {
    PixelMask::from_rows(&["010", "111", "010"]).unwrap()
}

#[test]
fn contour_examples() {
    let e = EncodingMatrix::uniform(PixelMask::full(3, 3).unwrap(), MagVector::UP, 64.0);
    assert_eq!(apply_contour(&e, &PixelMask::full(3, 3).unwrap()).unwrap(), e);

    let cut = apply_contour(&e, &plus()).unwrap();
    assert_eq!(cut.mask.active_count(), 5);
    assert_eq!(cut.cells().iter().filter(|v| v.is_none()).count(), 4);
    assert!(validate_encoding(&cut).is_empty());

    assert_eq!(apply_contour(&e, &PixelMask::empty(3, 3).unwrap()), Err(EncodeError::EmptyMask));
    assert!(matches!(apply_contour(&e, &PixelMask::full(2, 3).unwrap()), Err(EncodeError::DimensionMismatch { .. })));
}

#[test]
fn contour_keeps_removed_cells_removed() {
    let e = EncodingMatrix::uniform(plus(), MagVector::UP, 64.0);
    let out = apply_contour(&e, &PixelMask::full(3, 3).unwrap()).unwrap();
    assert_eq!(out, e);
}

#[test]
fn region_examples() {
    let e = EncodingMatrix::uniform(PixelMask::full(8, 2).unwrap(), MagVector::DOWN, 64.0);
    assert_eq!(encode_region(&e, &Region::default(), MagVector::UP).unwrap(), e);

    let all = Region::rect(0, 8, 0, 2);
    let up = encode_region(&e, &all, MagVector::UP).unwrap();
    assert!(up.cells().iter().all(|v| *v == Some(MagVector::UP)));

    // region I vertical, region II horizontal
    let x = MagVector::new(0.0, 90.0, 90.0);
    let bilayer = encode_region(&encode_region(&e, &Region::rect(0, 4, 0, 2), MagVector::UP).unwrap(), &Region::rect(4, 8, 0, 2), x).unwrap();
    for r in 0..8 {
        for c in 0..2 {
            assert_eq!(bilayer.get(r, c), Some(if r < 4 { MagVector::UP } else { x }));
        }
    }
}

#[test]
fn region_errors() {
    let e = EncodingMatrix::uniform(plus(), MagVector::UP, 64.0);
    assert_eq!(encode_region(&e, &Region::new([(0, 0)]), MagVector::UP), Err(EncodeError::CellRemoved { row: 0, col: 0 }));
    assert_eq!(
        encode_region(&e, &Region::new([(1, 5)]), MagVector::UP),
        Err(EncodeError::OutOfBounds { row: 1, col: 5, rows: 3, cols: 3 })
    );
    assert!(matches!(encode_region(&e, &Region::new([(1, 1)]), MagVector::new(0.0, 0.0, 0.0)), Err(EncodeError::Lattice(_))));
}

fn mask_strategy(rows: usize, cols: usize) -> impl Strategy<Value = PixelMask> {
    prop::collection::vec(0u8..4, rows * cols).prop_filter_map("empty mask", move |codes| {
        let m = PixelMask::from_fn(rows, cols, |r, c| match codes[r * cols + c] {
            0 => Cell::Removed,
            1 => Cell::Split(Diagonal::Main),
            2 => Cell::Split(Diagonal::Anti),
            _ => Cell::Whole,
        })
        .unwrap();
        (m.active_count() > 0).then_some(m)
    })
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

fn vector() -> impl Strategy<Value = MagVector> {
    (-1.0f64..1.0, 0.0f64..std::f64::consts::TAU).prop_map(|(z, phi)| {
        let s = (1.0 - z * z).sqrt();
        let v = MagVector::from_direction(Vector3::new(s * phi.cos(), s * phi.sin(), z)).unwrap();
        MagVector::new(round6(v.alpha), round6(v.beta), round6(v.gamma))
    })
}

fn encoding(rows: usize, cols: usize) -> impl Strategy<Value = EncodingMatrix> {
    (
        mask_strategy(rows, cols),
        prop::collection::vec(vector(), rows * cols),
        prop::collection::vec(prop::option::of(vector()), rows * cols),
        0.0f64..1000.0,
    )
        .prop_map(move |(mask, a, b, m)| {
            let cells = (0..rows * cols).map(|i| mask.is_active(i / cols, i % cols).then_some(a[i])).collect();
            let mut e = EncodingMatrix::from_parts(mask, cells, m);
            for (i, v) in b.into_iter().enumerate() {
                let (r, c) = (i / cols, i % cols);
                if let (Some(v), Cell::Split(_)) = (v, e.mask.cell(r, c)) {
                    e.set_part_b(r, c, v);
                }
            }
            e
        })
}

fn document() -> impl Strategy<Value = EncodingDocument> {
    (1usize..6, 1usize..6)
        .prop_flat_map(|(r, c)| {
            (
                encoding(r, c),
                ".{0,12}",
                (0.5f64..3.0, 0.0f64..500.0, 0.0f64..100.0),
                prop::option::of((prop::collection::vec((0..r, 0..c), 0..3), (-100.0f64..100.0, -100.0f64..100.0, -100.0f64..100.0))),
            )
        })
        .prop_map(|(encoding, label, (edge, stiffness, remanence), hints)| {
            let film = FilmSpec { pixel_edge: edge, hinge_stiffness: stiffness, remanence_default: remanence, ..FilmSpec::default() };
            let mut d = EncodingDocument::new(label, film, encoding);
            d.mechanics = hints.map(|(cells, (x, y, z))| {
                let refs: Vec<PlateRef> = cells.into_iter().map(|(r, c)| PlateRef::whole(r, c)).collect();
                MechanicsHints { anchors: refs.clone(), probe: refs, field: Vector3::new(x, y, z) }
            });
            d
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn round_trip(d in document()) {
        let text = serialize(&d);
        let back = parse(&text).unwrap();
        prop_assert_eq!(&back, &d);
        prop_assert_eq!(serialize(&back), text);
    }

    #[test]
    fn contour_idempotent(e in encoding(4, 4), mask in mask_strategy(4, 4)) {
        if let Ok(once) = apply_contour(&e, &mask) {
            prop_assert_eq!(apply_contour(&once, &mask).unwrap(), once);
        }
    }

    #[test]
    fn region_write_is_local(e in encoding(4, 5), v in vector(), pick in prop::collection::vec(any::<bool>(), 20)) {
        let region: Region = e.mask.active_cells().filter(|&(r, c)| pick[r * 5 + c]).collect();
        let out = encode_region(&e, &region, v).unwrap();
        for r in 0..4 {
            for c in 0..5 {
                if region.contains((r, c)) {
                    prop_assert_eq!(out.get(r, c), Some(v));
                    prop_assert_eq!(out.get_part(r, c, Part::B), Some(v));
                } else {
                    prop_assert_eq!(out.get(r, c).map(|m| m.alpha.to_bits()), e.get(r, c).map(|m| m.alpha.to_bits()));
                    prop_assert_eq!(out.get_part(r, c, Part::B), e.get_part(r, c, Part::B));
                }
            }
        }
        prop_assert!(validate_encoding(&out).is_empty());
    }
}

#[test]
fn angles_have_six_decimals() {
    let mut e = EncodingMatrix::uniform(PixelMask::full(1, 1).unwrap(), MagVector::UP, 64.0);
    e.set(0, 0, Some(MagVector::new(60.0, 60.0, 45.0)));
    let text = serialize(&EncodingDocument::new("x", FilmSpec::default(), e));
    assert!(text.contains("[0, 0, 60.000000, 60.000000, 45.000000]"), "{text}");
}

#[test]
fn future_version_rejected() {
    let d = template("i-bend", (8, 2)).unwrap();
    let text = serialize(&d).replace("format_version = \"1.0\"", "format_version = \"99.0\"");
    assert_eq!(parse(&text), Err(FormatError::UnsupportedVersion("99.0".into())));
}

#[test]
fn truncated_document_is_malformed() {
    let text = serialize(&template("z-platform", (16, 16)).unwrap());
    for cut in [text.len() / 3, text.len() / 2, text.len() - 30] {
        let mut at = cut;
        while !text.is_char_boundary(at) {
            at -= 1;
        }
        match parse(&text[..at]) {
            Err(FormatError::MalformedDocument { line, .. }) => assert!(line >= 1),
            other => panic!("cut at {at}: {other:?}"),
        }
    }
}

#[test]
fn unknown_field_rejected() {
    let text = serialize(&template("i-bend", (8, 2)).unwrap()).replace("[film]\n", "[film]\ncolour = 3\n");
    match parse(&text) {
        Err(FormatError::MalformedDocument { line, message, .. }) => {
            assert!(message.contains("colour"), "{message}");
            assert_eq!(text.lines().nth(line - 1).unwrap(), "colour = 3");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn invalid_vectors_fail_validation() {
    let text = serialize(&template("i-bend", (8, 2)).unwrap()).replacen("90.000000, 90.000000, 0.000000", "0.000000, 0.000000, 0.000000", 1);
    assert!(matches!(parse(&text), Err(FormatError::ValidationFailed(m)) if m.contains("NonUnitDirection")));
}

#[test]
fn every_template_validates() {
    for name in TEMPLATE_NAMES {
        let t: TemplateName = name.parse().unwrap();
        let d = template(name, t.default_dims()).unwrap();
        assert!(validate_encoding(&d.encoding).is_empty(), "{name}");
        assert_eq!(parse(&serialize(&d)).unwrap(), d, "{name}");
        let h = d.mechanics.as_ref().unwrap();
        for p in h.anchors.iter().chain(&h.probe) {
            assert!(d.encoding.mask.is_active(p.row, p.col), "{name}: {p}");
        }
    }
}

#[test]
fn template_dims_and_names() {
    assert!(matches!(template("hexapod", (8, 2)), Err(EncodeError::UnknownTemplate(_))));
    assert!(matches!(template("i-bend", (7, 2)), Err(EncodeError::UnsupportedDims { .. })));
    assert!(matches!(template("z-platform", (16, 12)), Err(EncodeError::UnsupportedDims { .. })));
    for (name, dims) in [("i-bend", (16, 3)), ("z-platform", (24, 24)), ("cross-fan", (9, 9)), ("ring-wave", (8, 8))] {
        assert!(validate_encoding(&template(name, dims).unwrap().encoding).is_empty(), "{name}");
    }
}

#[test]
fn template_shapes() {
    let z = template("z-platform", (16, 16)).unwrap();
    // platform 4x4 plus four 2-wide arms of 6 cells
    assert_eq!(z.encoding.mask.active_count(), 16 + 4 * 12);
    assert_eq!(z.encoding.get(7, 7), Some(MagVector::UP));

    let o = template("origami-parallel", (2, 2)).unwrap();
    let plates = magpixel::mechanics::build_hinge_graph(&o.encoding.mask, &o.film).unwrap().plates.len();
    assert_eq!(plates, 8);
}
