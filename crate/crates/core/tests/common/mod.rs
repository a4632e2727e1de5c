#![allow(dead_code)]

use rectmoment::{gen_guillotine, BoxSpec, Instance, Layout, Placement};

/// Nine squares 1, 4, 7, 8, 9, 10, 14, 15, 18 tiling a 32 × 33 box.
pub fn nine_squares() -> (Instance, Layout) {
    // (side, x_lo, y_lo) in the 33-wide orientation, transposed below
    let squares = [
        (18.0, 0.0, 0.0),
        (15.0, 18.0, 0.0),
        (7.0, 18.0, 15.0),
        (8.0, 25.0, 15.0),
        (14.0, 0.0, 18.0),
        (4.0, 14.0, 18.0),
        (10.0, 14.0, 22.0),
        (1.0, 24.0, 22.0),
        (9.0, 24.0, 23.0),
    ];
    let sides: Vec<(f64, f64)> = squares.iter().map(|&(s, _, _)| (s, s)).collect();
    let inst = Instance::new(&sides, BoxSpec::new(32.0, 33.0).unwrap(), true).unwrap();
    let placements = squares
        .iter()
        .map(|&(s, x, y)| Placement::new(y, x, y + s, x + s))
        .collect();
    (inst, Layout::new(placements))
}

/// Random guillotine fixture `seed`: up to 20 rectangles in a box with sides
/// in `[1, 4)`.
pub fn guillotine_fixture(seed: u64) -> (Instance, Layout) {
    let cuts = (seed % 20) as usize;
    let w = 1.0 + (seed.wrapping_mul(2_654_435_761) % 300) as f64 / 100.0;
    let h = 1.0 + (seed.wrapping_mul(40_503) % 300) as f64 / 100.0;
    gen_guillotine(seed, cuts, BoxSpec::new(w, h).unwrap())
}

/// 200 guillotine fixtures plus the nine-square fixture.
pub fn fixture_corpus() -> Vec<(Instance, Layout)> {
    let mut v: Vec<_> = (0..200).map(guillotine_fixture).collect();
    v.push(nine_squares());
    v
}
