use magpixel::encode::{parse, serialize, template, EncodingDocument, FormatError, Region};
use magpixel::lattice::*;
use magpixel::reprogram::*;
use nalgebra::Vector3;
use proptest::prelude::*;

fn step(selection: Region, d: Vector3<f64>, t: f64) -> ReprogramStep {
    ReprogramStep::new(selection, d, t).unwrap()
}

fn strip() -> EncodingMatrix {
    EncodingMatrix::uniform(PixelMask::full(8, 2).unwrap(), MagVector::UP, 64.0)
}

#[test]
fn melting_threshold() {
    assert_eq!(melt_state(25.0), Phase::Solid);
    assert_eq!(melt_state(29.6), Phase::Liquid);
    assert_eq!(melt_state(29.599999), Phase::Solid);
    assert_eq!(melt_state(40.0), Phase::Liquid);
}

#[test]
fn sub_melt_step_is_a_no_op() {
    let e = strip();
    let (out, notice) = apply_step(&e, &step(Region::rect(0, 8, 0, 2), Vector3::x(), 25.0)).unwrap();
    assert_eq!(out, e);
    assert_eq!(notice, Some(Notice::NoMelt { temperature: 25.0 }));
}

#[test]
fn uniform_alignment() {
    let e = EncodingMatrix::uniform(PixelMask::from_rows(&["1d1", "010"]).unwrap(), MagVector::DOWN, 64.0);
    let mut e = e;
    e.set_part_b(0, 1, MagVector::new(0.0, 90.0, 90.0));
    let all: Region = e.mask.active_cells().collect();
    let (out, notice) = apply_step(&e, &step(all, Vector3::z(), 40.0)).unwrap();
    assert!(notice.is_none());
    for (r, c) in out.mask.active_cells() {
        assert_eq!(out.get(r, c), Some(MagVector::UP));
        assert_eq!(out.get_part(r, c, Part::B), Some(MagVector::UP));
    }
    assert_eq!(out.mask, e.mask);
}

#[test]
fn bilayer_regions() {
    let (out, _) = apply_step(&strip(), &step(Region::rect(4, 8, 0, 2), Vector3::x(), 40.0)).unwrap();
    for r in 0..8 {
        for c in 0..2 {
            let v = out.get(r, c).unwrap();
            if r < 4 {
                assert_eq!(v, MagVector::UP);
            } else {
                assert_eq!((v.alpha, v.beta, v.gamma), (0.0, 90.0, 90.0));
            }
        }
    }
}

#[test]
fn selection_errors() {
    let e = EncodingMatrix::uniform(PixelMask::from_rows(&["10"]).unwrap(), MagVector::UP, 64.0);
    // checked even when the film stays solid
    let removed = step(Region::new([(0, 1)]), Vector3::z(), 20.0);
    assert_eq!(apply_step(&e, &removed), Err(ReprogramError::CellRemoved { row: 0, col: 1 }));
    let outside = step(Region::new([(3, 0)]), Vector3::z(), 40.0);
    assert_eq!(apply_step(&e, &outside), Err(ReprogramError::OutOfBounds { row: 3, col: 0, rows: 1, cols: 2 }));

    assert_eq!(ReprogramStep::new(Region::default(), Vector3::z(), 40.0), Err(ReprogramError::EmptySelection));
    assert!(matches!(ReprogramStep::new(Region::new([(0, 0)]), Vector3::new(1.0, 1.0, 0.0), 40.0), Err(ReprogramError::NonUnitDirection { .. })));
    assert_eq!(ReprogramStep::new(Region::new([(0, 0)]), Vector3::z(), f64::NAN), Err(ReprogramError::NonFiniteTemperature));
}

#[test]
fn session_errors_carry_step_index() {
    let e = EncodingMatrix::uniform(PixelMask::from_rows(&["10"]).unwrap(), MagVector::UP, 64.0);
    let s = Session {
        label: String::new(),
        steps: vec![step(Region::new([(0, 0)]), Vector3::x(), 40.0), step(Region::new([(0, 1)]), Vector3::z(), 40.0)],
    };
    match apply_session(&e, &s) {
        Err(ReprogramError::AtStep { step: 1, source }) => assert_eq!(*source, ReprogramError::CellRemoved { row: 0, col: 1 }),
        other => panic!("{other:?}"),
    }
}

#[test]
fn empty_session_is_identity() {
    let e = strip();
    assert_eq!(apply_session(&e, &Session::default()).unwrap(), (e, vec![]));
}

fn canonical(e: &EncodingMatrix) -> String {
    serialize(&EncodingDocument::new("film", FilmSpec::default(), e.clone()))
}

fn unit() -> impl Strategy<Value = Vector3<f64>> {
    (-1.0f64..1.0, 0.0f64..std::f64::consts::TAU).prop_map(|(z, phi)| {
        let s = (1.0 - z * z).sqrt();
        Vector3::new(s * phi.cos(), s * phi.sin(), z)
    })
}

fn session(rows: usize, cols: usize) -> impl Strategy<Value = Session> {
    prop::collection::vec((prop::collection::vec((0..rows, 0..cols), 1..6), unit(), 15.0f64..60.0), 0..5).prop_map(|steps| Session {
        label: "s".into(),
        steps: steps.into_iter().map(|(cells, d, t)| step(Region::new(cells), d, t)).collect(),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn repeatable_programming(a in session(8, 2), b in session(8, 2)) {
        let base = strip();
        let (e1, _) = apply_session(&base, &a).unwrap();
        let (e2, _) = apply_session(&e1, &b).unwrap();
        let (again, _) = apply_session(&e2, &a).unwrap();
        // E_a may leave cells untouched that E_b rewrote; compare on the cells E_a owns
        let owned: Region = a.steps.iter().filter(|s| melt_state(s.peak_temperature) == Phase::Liquid).flat_map(|s| s.selection.iter()).collect();
        for (r, c) in owned.iter() {
            prop_assert_eq!(again.get(r, c), e1.get(r, c));
        }
        prop_assert_eq!(again.mask, base.mask);
    }

    #[test]
    fn liquid_steps_write_the_direction(d in unit(), cells in prop::collection::vec((0usize..8, 0usize..2), 1..10)) {
        let s = step(Region::new(cells), d, 40.0);
        let (out, _) = apply_step(&strip(), &s).unwrap();
        let (a, b, g) = angles_from_direction(d).unwrap();
        for (r, c) in s.selection.iter() {
            let v = out.get(r, c).unwrap();
            prop_assert!((v.alpha - a).abs() <= 1e-9 && (v.beta - b).abs() <= 1e-9 && (v.gamma - g).abs() <= 1e-9);
        }
    }

    #[test]
    fn disjoint_steps_commute(d1 in unit(), d2 in unit(), split in 1usize..7) {
        let s1 = step(Region::rect(0, split, 0, 2), d1, 40.0);
        let s2 = step(Region::rect(split, 8, 0, 2), d2, 45.0);
        let ab = apply_session(&strip(), &Session { label: String::new(), steps: vec![s1.clone(), s2.clone()] }).unwrap().0;
        let ba = apply_session(&strip(), &Session { label: String::new(), steps: vec![s2, s1] }).unwrap().0;
        prop_assert_eq!(canonical(&ab), canonical(&ba));
    }

    #[test]
    fn script_round_trip(s in session(8, 2)) {
        let text = serialize_session(&s);
        let back = parse_session(&text).unwrap();
        prop_assert_eq!(&back, &s);
        prop_assert_eq!(serialize_session(&back), text);
    }
}

#[test]
fn e1_e2_e1_is_bit_identical() {
    // E1: bilayer; E2: everything in-plane along y
    let base = template("i-bend", (8, 2)).unwrap().encoding;
    let e1 = Session {
        label: "E1".into(),
        steps: vec![step(Region::rect(0, 4, 0, 2), Vector3::z(), 40.0), step(Region::rect(4, 8, 0, 2), Vector3::x(), 40.0)],
    };
    let e2 = Session { label: "E2".into(), steps: vec![step(Region::rect(0, 8, 0, 2), Vector3::y(), 40.0)] };
    let first = apply_session(&base, &e1).unwrap().0;
    let second = apply_session(&first, &e2).unwrap().0;
    let third = apply_session(&second, &e1).unwrap().0;
    assert_ne!(canonical(&first), canonical(&second));
    assert_eq!(canonical(&first), canonical(&third));
    assert_eq!(parse(&canonical(&third)).unwrap().encoding, first);
}

#[test]
fn script_forms() {
    let text = r#"format_version = "1.0"
label = "demo"

[[step]]
rect = [0, 2, 0, 2]
direction = [0.0, 0.0, 1.0]
temperature_c = 40.0

[[step]]
cells = [[3, 1], [3, 0]]
direction = [1.0, 0.0, 0.0]
temperature_c = 25.0
"#;
    let s = parse_session(text).unwrap();
    assert_eq!(s.steps.len(), 2);
    assert_eq!(s.steps[0].selection.len(), 4);
    assert_eq!(s.steps[1].selection.iter().collect::<Vec<_>>(), vec![(3, 0), (3, 1)]);
    let (_, notices) = apply_session(&strip(), &s).unwrap();
    assert_eq!(notices, vec![(1, Notice::NoMelt { temperature: 25.0 })]);

    let both = text.replacen("rect = [0, 2, 0, 2]", "rect = [0, 2, 0, 2]\ncells = [[0, 0]]", 1);
    assert!(matches!(parse_session(&both), Err(FormatError::ValidationFailed(m)) if m.starts_with("step 0")));
    let bad_dir = text.replacen("[0.0, 0.0, 1.0]", "[0.0, 2.0, 1.0]", 1);
    assert!(matches!(parse_session(&bad_dir), Err(FormatError::ValidationFailed(_))));
    let unknown = text.replacen("temperature_c = 25.0", "temperature_c = 25.0\npower = 3", 1);
    assert!(matches!(parse_session(&unknown), Err(FormatError::MalformedDocument { .. })));
    assert!(matches!(parse_session(&text.replace("\"1.0\"", "\"99.0\"")), Err(FormatError::UnsupportedVersion(_))));
}
