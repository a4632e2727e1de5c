//! Geometric verification of layouts.
//!
//! A layout is a perfect packing when every placement lies inside the box,
//! placements are pairwise interior-disjoint (shared edges are legal), each
//! placement has the instance's sides (either orientation when rotation is
//! allowed) and the covered area equals the box area.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{PackError, Result};
use crate::instance::{
    parse_raw_instance, parse_raw_layout, BoxSpec, Instance, Layout, Placement, Scalar,
};
use crate::moment::{Mode, MomentSystem};

pub const DEFAULT_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub pass: bool,
    /// `(rect id, overhang)` in instance units.
    pub containment_violations: Vec<(usize, f64)>,
    /// `(id, id, overlap area)`.
    pub overlap_violations: Vec<(usize, usize, f64)>,
    /// `(rect id, |Δx + Δy − w − l|, |Δx·Δy − w·l|)`.
    pub size_violations: Vec<(usize, f64, f64)>,
    /// Rectangles placed rotated although the instance forbids rotation.
    pub orientation_violations: Vec<usize>,
    /// `Σ Δx·Δy − A·B`.
    pub area_gap: f64,
    pub tol: f64,
}

pub fn verify_layout(inst: &Instance, layout: &Layout, tol: f64) -> Result<VerificationReport> {
    layout.check_cardinality(inst)?;
    let bbox = inst.bbox();
    let scale = bbox.scale();
    let len_tol = tol * scale;

    let mut containment_violations = Vec::new();
    let mut size_violations = Vec::new();
    let mut orientation_violations = Vec::new();
    for (r, p) in inst.rects().iter().zip(&layout.placements) {
        let overhang = [-p.x_lo, p.x_hi - bbox.width, -p.y_lo, p.y_hi - bbox.height]
            .into_iter()
            .fold(0.0_f64, f64::max);
        if overhang > len_tol || !p.coords().iter().all(|v| v.is_finite()) {
            containment_violations.push((r.id, overhang));
        }
        let sum_err = (p.dx() + p.dy() - r.width - r.height).abs();
        let prod_err = (p.dx() * p.dy() - r.width * r.height).abs();
        if !(sum_err <= len_tol && prod_err <= len_tol * scale) || !p.is_ordered() {
            size_violations.push((r.id, sum_err, prod_err));
        } else if !inst.rotation_allowed()
            && !((p.dx() - r.width).abs() <= len_tol && (p.dy() - r.height).abs() <= len_tol)
        {
            orientation_violations.push(r.id);
        }
    }

    let mut overlap_violations = Vec::new();
    let ids: Vec<usize> = inst.rects().iter().map(|r| r.id).collect();
    for i in 0..layout.len() {
        for j in i + 1..layout.len() {
            let area = overlap_area(&layout.placements[i], &layout.placements[j]);
            if area > len_tol * len_tol {
                overlap_violations.push((ids[i], ids[j], area));
            }
        }
    }

    let area_gap = layout.placements.iter().map(Placement::area).sum::<f64>() - bbox.area();
    let pass = containment_violations.is_empty()
        && overlap_violations.is_empty()
        && size_violations.is_empty()
        && orientation_violations.is_empty()
        && area_gap.abs() <= tol * bbox.area();
    Ok(VerificationReport {
        pass,
        containment_violations,
        overlap_violations,
        size_violations,
        orientation_violations,
        area_gap,
        tol,
    })
}

/// Area of the intersection of two closed boxes; zero when they only touch.
pub fn overlap_area(p: &Placement, q: &Placement) -> f64 {
    let w = (p.x_hi.min(q.x_hi) - p.x_lo.max(q.x_lo)).max(0.0);
    let h = (p.y_hi.min(q.y_hi) - p.y_lo.max(q.y_lo)).max(0.0);
    w * h
}

/// Signed corner count: `+1` at lower-left and upper-right corners, `−1` at
/// upper-left and lower-right. In a perfect packing every coincident group of
/// corners cancels except at the four box corners, which keep the box's own
/// signs. Points within `tol·scale` are clustered together.
pub fn corner_cancellation(layout: &Layout, bbox: BoxSpec, tol: f64) -> bool {
    let cell = tol * bbox.scale();
    let mut clusters = CornerClusters::new(cell);
    for p in &layout.placements {
        clusters.add(p.x_lo, p.y_lo, 1);
        clusters.add(p.x_hi, p.y_hi, 1);
        clusters.add(p.x_lo, p.y_hi, -1);
        clusters.add(p.x_hi, p.y_lo, -1);
    }
    // cancel the box's own signed corners
    clusters.add(0.0, 0.0, -1);
    clusters.add(bbox.width, bbox.height, -1);
    clusters.add(0.0, bbox.height, 1);
    clusters.add(bbox.width, 0.0, 1);
    clusters.sums.iter().all(|&(_, _, s)| s == 0)
}

/// Grid hash over cells of side `cell`; a point joins the first cluster in
/// its 3×3 cell neighbourhood whose seed lies within `cell` (Chebyshev).
struct CornerClusters {
    cell: f64,
    grid: HashMap<(i64, i64), Vec<usize>>,
    sums: Vec<(f64, f64, i64)>,
}

impl CornerClusters {
    fn new(cell: f64) -> Self {
        Self {
            cell,
            grid: HashMap::new(),
            sums: Vec::new(),
        }
    }

    fn key(&self, x: f64, y: f64) -> (i64, i64) {
        if self.cell > 0.0 {
            (
                (x / self.cell).floor() as i64,
                (y / self.cell).floor() as i64,
            )
        } else {
            // exact matching; -0.0 and 0.0 coincide
            ((x + 0.0).to_bits() as i64, (y + 0.0).to_bits() as i64)
        }
    }

    fn add(&mut self, x: f64, y: f64, sign: i64) {
        let (kx, ky) = self.key(x, y);
        let found = if self.cell > 0.0 {
            let mut hit = None;
            'search: for ox in -1..=1 {
                for oy in -1..=1 {
                    if let Some(list) = self.grid.get(&(kx + ox, ky + oy)) {
                        for &c in list {
                            let (cx, cy, _) = self.sums[c];
                            if (cx - x).abs() <= self.cell && (cy - y).abs() <= self.cell {
                                hit = Some(c);
                                break 'search;
                            }
                        }
                    }
                }
            }
            hit
        } else {
            self.grid.get(&(kx, ky)).map(|l| l[0])
        };
        match found {
            Some(c) => self.sums[c].2 += sign,
            None => {
                self.sums.push((x, y, sign));
                self.grid
                    .entry((kx, ky))
                    .or_default()
                    .push(self.sums.len() - 1);
            }
        }
    }
}

/// Largest absolute normalized moment residual of a concrete layout over
/// `1 ≤ s1, s2 ≤ smax`. Constraint rows are not included.
pub fn moment_residual_of_layout(inst: &Instance, layout: &Layout, smax: usize) -> Result<f64> {
    let sys = MomentSystem::build_unchecked(inst, smax, Mode::Rotatable)?;
    let vars = sys.layout_to_vars(layout)?;
    Ok(sys.residual(&vars)?.moment_max_abs())
}

// ---------------------------------------------------------------------------
// Exact verification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct ExactInstance {
    pub box_width: BigRational,
    pub box_height: BigRational,
    pub rects: Vec<(BigRational, BigRational)>,
    pub rotation_allowed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactLayout {
    /// `[x_lo, y_lo, x_hi, y_hi]` per placement.
    pub placements: Vec<[BigRational; 4]>,
}

/// Exact value of a decimal literal (`-12.5e-3`), an integer, or `p/q`.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let s = text.trim();
    let bad = || PackError::NonRational(s.to_string());
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(p, q));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.trim_start_matches(['-', '+']).is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !frac_part.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = digits.parse().map_err(|_| bad())?;
    let shift = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let value = if shift >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, shift as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, (-shift) as usize))
    };
    Ok(value)
}

fn scalar_rational(s: &Scalar) -> Result<BigRational> {
    parse_rational(&s.text())
}

impl ExactInstance {
    pub fn parse(text: &str) -> Result<Self> {
        let raw = parse_raw_instance(text)?;
        let box_width = scalar_rational(&raw.bbox[0])?;
        let box_height = scalar_rational(&raw.bbox[1])?;
        if !box_width.is_positive() || !box_height.is_positive() {
            return Err(PackError::NonPositiveBox);
        }
        let mut rects = Vec::with_capacity(raw.rects.len());
        for (i, [w, h]) in raw.rects.iter().enumerate() {
            let (w, h) = (scalar_rational(w)?, scalar_rational(h)?);
            if !w.is_positive() || !h.is_positive() {
                return Err(PackError::NonPositiveSide { id: i + 1 });
            }
            rects.push((w, h));
        }
        Ok(Self {
            box_width,
            box_height,
            rects,
            rotation_allowed: raw.rotation,
        })
    }

    /// Exact image of a floating-point instance.
    pub fn from_instance(inst: &Instance) -> Result<Self> {
        let bbox = inst.bbox();
        Ok(Self {
            box_width: exact_f64(bbox.width)?,
            box_height: exact_f64(bbox.height)?,
            rects: inst
                .rects()
                .iter()
                .map(|r| Ok((exact_f64(r.width)?, exact_f64(r.height)?)))
                .collect::<Result<_>>()?,
            rotation_allowed: inst.rotation_allowed(),
        })
    }
}

impl ExactLayout {
    pub fn parse(text: &str) -> Result<Self> {
        let raw = parse_raw_layout(text)?;
        let placements = raw
            .placements
            .iter()
            .map(|c| {
                Ok([
                    scalar_rational(&c[0])?,
                    scalar_rational(&c[1])?,
                    scalar_rational(&c[2])?,
                    scalar_rational(&c[3])?,
                ])
            })
            .collect::<Result<_>>()?;
        Ok(Self { placements })
    }

    pub fn from_layout(layout: &Layout) -> Result<Self> {
        let placements = layout
            .placements
            .iter()
            .map(|p| {
                Ok([
                    exact_f64(p.x_lo)?,
                    exact_f64(p.y_lo)?,
                    exact_f64(p.x_hi)?,
                    exact_f64(p.y_hi)?,
                ])
            })
            .collect::<Result<_>>()?;
        Ok(Self { placements })
    }
}

fn exact_f64(v: f64) -> Result<BigRational> {
    BigRational::from_float(v).ok_or(PackError::NonFinite("coordinate"))
}

/// Perfect-packing check in exact rational arithmetic with zero tolerance.
pub fn verify_exact(inst: &ExactInstance, layout: &ExactLayout) -> Result<bool> {
    if inst.rects.len() != layout.placements.len() {
        return Err(PackError::CardinalityMismatch {
            expected: inst.rects.len(),
            got: layout.placements.len(),
        });
    }
    let zero = BigRational::zero();
    let (bw, bh) = (&inst.box_width, &inst.box_height);
    let mut covered = BigRational::zero();
    for ((w, h), [x_lo, y_lo, x_hi, y_hi]) in inst.rects.iter().zip(&layout.placements) {
        if x_lo < &zero || y_lo < &zero || x_hi > bw || y_hi > bh {
            return Ok(false);
        }
        let dx = x_hi - x_lo;
        let dy = y_hi - y_lo;
        let upright = &dx == w && &dy == h;
        let turned = &dx == h && &dy == w;
        if !(upright || (inst.rotation_allowed && turned)) {
            return Ok(false);
        }
        covered += dx * dy;
    }
    if covered != bw * bh {
        return Ok(false);
    }
    let ps = &layout.placements;
    for i in 0..ps.len() {
        for j in i + 1..ps.len() {
            let [a0, b0, a1, b1] = &ps[i];
            let [c0, d0, c1, d1] = &ps[j];
            let overlap_x = a1.min(c1) > a0.max(c0);
            let overlap_y = b1.min(d1) > b0.max(d0);
            if overlap_x && overlap_y {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `p/q` text of an exact value.
pub fn rational_text(v: &BigRational) -> String {
    if v.denom().is_one() {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}
