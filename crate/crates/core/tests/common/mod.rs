#![allow(dead_code)]

use magpixel::lattice::{EncodingMatrix, MagVector, PixelMask};

/// 5×7 strokes, top row first.
const GLYPHS: [(char, [&str; 7]); 3] = [
    ('C', [".###.", "#...#", "#....", "#....", "#....", "#...#", ".###."]),
    ('A', [".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"]),
    ('S', [".####", "#....", "#....", ".###.", "....#", "....#", "####."]),
];

/// Letters written +z on their strokes with a one-pixel margin and a blank
/// column between letters; everything else is cut away. Returns the
/// encoding and the stroke mask (row-major).
pub fn lettering(text: &str, remanence: f64) -> (EncodingMatrix, Vec<bool>) {
    let rows = 9;
    let cols = 1 + text.chars().count() * 6;
    let mut strokes = vec![false; rows * cols];
    for (k, ch) in text.chars().enumerate() {
        let glyph = GLYPHS.iter().find(|(c, _)| *c == ch).expect("glyph").1;
        for (r, line) in glyph.iter().enumerate() {
            for (c, b) in line.bytes().enumerate() {
                if b == b'#' {
                    strokes[(r + 1) * cols + 1 + 6 * k + c] = true;
                }
            }
        }
    }
    let mask = PixelMask::from_fn(rows, cols, |r, c| {
        if strokes[r * cols + c] { magpixel::lattice::Cell::Whole } else { magpixel::lattice::Cell::Removed }
    })
    .unwrap();
    (EncodingMatrix::uniform(mask, MagVector::UP, remanence), strokes)
}

pub fn iou(a: &[bool], b: &[bool]) -> f64 {
    let inter = a.iter().zip(b).filter(|(x, y)| **x && **y).count();
    let union = a.iter().zip(b).filter(|(x, y)| **x || **y).count();
    inter as f64 / union as f64
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
