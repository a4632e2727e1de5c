//! Exhaustive packing search for small integer instances.
//!
//! The box is a grid of at most 64 unit cells held in a `u64` bitset
//! (row-major, bit `y·A + x`). The search always fills the lowest, then
//! leftmost, empty cell: some rectangle must have its lower-left corner
//! there, so trying every unused rectangle shape in that spot is exhaustive.

use crate::error::{PackError, Result};
use crate::instance::{BoxSpec, Instance, Layout, Placement};

pub const CELL_BUDGET: u64 = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutcome {
    pub feasible: bool,
    pub witness: Option<Layout>,
}

/// Grid occupancy during the search.
#[derive(Debug, Clone)]
pub struct GridState {
    pub width: u32,
    pub height: u32,
    pub occupancy: u64,
    /// `(shape index, x, y, w, h)` in placement order.
    pub placed: Vec<(usize, u32, u32, u32, u32)>,
}

impl GridState {
    fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            occupancy: 0,
            placed: Vec::new(),
        }
    }

    fn full_mask(&self) -> u64 {
        let cells = self.width * self.height;
        if cells == 64 {
            u64::MAX
        } else {
            (1u64 << cells) - 1
        }
    }

    fn first_empty(&self) -> Option<(u32, u32)> {
        let free = !self.occupancy & self.full_mask();
        (free != 0).then(|| {
            let bit = free.trailing_zeros();
            (bit % self.width, bit / self.width)
        })
    }

    fn mask(&self, x: u32, y: u32, w: u32, h: u32) -> Option<u64> {
        if x + w > self.width || y + h > self.height {
            return None;
        }
        let row = if w == 64 { u64::MAX } else { (1u64 << w) - 1 };
        Some((y..y + h).fold(0, |m, r| m | (row << (r * self.width + x))))
    }
}

fn as_int(v: f64) -> Result<u32> {
    if v.fract() != 0.0 || v < 1.0 || v > u32::MAX as f64 {
        return Err(PackError::NonInteger(v));
    }
    Ok(v as u32)
}

struct Shape {
    w: u32,
    h: u32,
    ids: Vec<usize>,
}

pub fn oracle_feasible(inst: &Instance) -> Result<OracleOutcome> {
    let bbox = inst.bbox();
    let (bw, bh) = (as_int(bbox.width)?, as_int(bbox.height)?);
    let cells = bw as u64 * bh as u64;
    if cells > CELL_BUDGET {
        return Err(PackError::CellBudget {
            cells,
            budget: CELL_BUDGET,
        });
    }
    let rotate = inst.rotation_allowed();
    let mut shapes: Vec<Shape> = Vec::new();
    let mut area = 0u64;
    for (i, r) in inst.rects().iter().enumerate() {
        let (mut w, mut h) = (as_int(r.width)?, as_int(r.height)?);
        area += w as u64 * h as u64;
        if rotate && w > h {
            std::mem::swap(&mut w, &mut h);
        }
        match shapes.iter_mut().find(|s| s.w == w && s.h == h) {
            Some(s) => s.ids.push(i),
            None => shapes.push(Shape { w, h, ids: vec![i] }),
        }
    }
    let infeasible = OracleOutcome {
        feasible: false,
        witness: None,
    };
    if area != cells {
        return Ok(infeasible);
    }
    let mut remaining: Vec<usize> = shapes.iter().map(|s| s.ids.len()).collect();
    let mut grid = GridState::new(bw, bh);
    if !search(&mut grid, &shapes, &mut remaining, rotate) {
        return Ok(infeasible);
    }

    let mut placements = vec![Placement::new(0.0, 0.0, 0.0, 0.0); inst.len()];
    let mut next_id = vec![0usize; shapes.len()];
    for &(s, x, y, w, h) in &grid.placed {
        let idx = shapes[s].ids[next_id[s]];
        next_id[s] += 1;
        placements[idx] = Placement::new(x as f64, y as f64, (x + w) as f64, (y + h) as f64);
    }
    Ok(OracleOutcome {
        feasible: true,
        witness: Some(Layout::new(placements)),
    })
}

fn search(grid: &mut GridState, shapes: &[Shape], remaining: &mut [usize], rotate: bool) -> bool {
    let Some((x, y)) = grid.first_empty() else {
        return true;
    };
    for s in 0..shapes.len() {
        if remaining[s] == 0 {
            continue;
        }
        let (w, h) = (shapes[s].w, shapes[s].h);
        let turns: &[(u32, u32)] = if rotate && w != h {
            &[(w, h), (h, w)]
        } else {
            &[(w, h)]
        };
        for &(w, h) in turns {
            let Some(mask) = grid.mask(x, y, w, h) else {
                continue;
            };
            if grid.occupancy & mask != 0 {
                continue;
            }
            grid.occupancy |= mask;
            grid.placed.push((s, x, y, w, h));
            remaining[s] -= 1;
            if search(grid, shapes, remaining, rotate) {
                return true;
            }
            remaining[s] += 1;
            grid.placed.pop();
            grid.occupancy &= !mask;
        }
    }
    false
}

/// Every multiset of integer rectangles `w ≤ h ≤ max_side` whose total area
/// equals `A·B`, for each box `1 ≤ A ≤ B ≤ max_box`. Rotation is allowed in
/// every emitted instance; boxes are listed once per unordered side pair.
pub fn enumerate_small_family(max_box: u32, max_side: u32) -> impl Iterator<Item = Instance> {
    let shapes: Vec<(u32, u32)> = (1..=max_side)
        .flat_map(|w| (w..=max_side).map(move |h| (w, h)))
        .collect();
    let mut out = Vec::new();
    for a in 1..=max_box {
        for b in a..=max_box {
            let bbox = BoxSpec::new(a as f64, b as f64).expect("positive box");
            let mut counts = vec![0u32; shapes.len()];
            multisets(&shapes, 0, a * b, &mut counts, &mut |counts| {
                let sides: Vec<(f64, f64)> = shapes
                    .iter()
                    .zip(counts)
                    .flat_map(|(&(w, h), &c)| std::iter::repeat_n((w as f64, h as f64), c as usize))
                    .collect();
                out.push(Instance::new(&sides, bbox, true).expect("valid sides"));
            });
        }
    }
    out.into_iter()
}

fn multisets(
    shapes: &[(u32, u32)],
    i: usize,
    area: u32,
    counts: &mut [u32],
    emit: &mut dyn FnMut(&[u32]),
) {
    if area == 0 {
        emit(counts);
        return;
    }
    if i == shapes.len() {
        return;
    }
    let unit = shapes[i].0 * shapes[i].1;
    let max = area / unit;
    // larger counts of earlier shapes first
    for c in (0..=max).rev() {
        counts[i] = c;
        multisets(shapes, i + 1, area - c * unit, counts, emit);
    }
    counts[i] = 0;
}
