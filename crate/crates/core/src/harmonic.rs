//! Moment identities for the rectangles `(1/n, 1/(n+1))` in the unit square.
//!
//! Integrating a polynomial weight `f` over a perfect packing gives the same
//! value as integrating it over the box. For quadratic `f` the integral over
//! one rectangle is `area·f(center) + area·(c_xx·Δx² + c_yy·Δy²)/12`, so the
//! area-weighted sum of `f` at the rectangle centers is fixed. With
//! `area_n = 1/(n(n+1))` this yields six identities.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{PackError, Result};
use crate::instance::Layout;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IdentityId {
    XFirst,
    YFirst,
    XyCross,
    SumSquares,
    SumOfSumSq,
    DiffSq,
}

impl IdentityId {
    pub const ALL: [IdentityId; 6] = [
        IdentityId::XFirst,
        IdentityId::YFirst,
        IdentityId::XyCross,
        IdentityId::SumSquares,
        IdentityId::SumOfSumSq,
        IdentityId::DiffSq,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IdentityId::XFirst => "X_FIRST",
            IdentityId::YFirst => "Y_FIRST",
            IdentityId::XyCross => "XY_CROSS",
            IdentityId::SumSquares => "SUM_SQUARES",
            IdentityId::SumOfSumSq => "SUM_OF_SUM_SQ",
            IdentityId::DiffSq => "DIFF_SQ",
        }
    }

    /// Human-readable closed form.
    pub fn closed_form(self) -> &'static str {
        match self {
            IdentityId::XFirst | IdentityId::YFirst => "1/2",
            IdentityId::XyCross => "1/4",
            IdentityId::SumSquares => "1/3 + pi^2/36",
            IdentityId::SumOfSumSq => "5/6 + pi^2/36",
            IdentityId::DiffSq => "pi^2/36 - 1/6",
        }
    }

    /// Weight `f(x, y) = cxx·x² + cyy·y² + cxy·xy + cx·x + cy·y`.
    fn weight(self) -> Quadratic {
        let q = |cxx, cyy, cxy, cx, cy| Quadratic {
            cxx,
            cyy,
            cxy,
            cx,
            cy,
        };
        match self {
            IdentityId::XFirst => q(0.0, 0.0, 0.0, 1.0, 0.0),
            IdentityId::YFirst => q(0.0, 0.0, 0.0, 0.0, 1.0),
            IdentityId::XyCross => q(0.0, 0.0, 1.0, 0.0, 0.0),
            IdentityId::SumSquares => q(1.0, 1.0, 0.0, 0.0, 0.0),
            IdentityId::SumOfSumSq => q(1.0, 1.0, 2.0, 0.0, 0.0),
            IdentityId::DiffSq => q(1.0, 1.0, -2.0, 0.0, 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Quadratic {
    cxx: f64,
    cyy: f64,
    cxy: f64,
    cx: f64,
    cy: f64,
}

impl Quadratic {
    fn at(&self, x: f64, y: f64) -> f64 {
        self.cxx * x * x + self.cyy * y * y + self.cxy * x * y + self.cx * x + self.cy * y
    }

    /// Integral over the unit square from `∫∫ x^i y^j = 1/((i+1)(j+1))`.
    fn unit_square_integral(&self) -> f64 {
        let m = |i: i32, j: i32| 1.0 / f64::from((i + 1) * (j + 1));
        self.cxx * m(2, 0)
            + self.cyy * m(0, 2)
            + self.cxy * m(1, 1)
            + self.cx * m(1, 0)
            + self.cy * m(0, 1)
    }
}

/// Closed-form right-hand side.
pub fn rhs_constant(id: IdentityId) -> f64 {
    let pi2_36 = PI * PI / 36.0;
    match id {
        IdentityId::XFirst | IdentityId::YFirst => 0.5,
        IdentityId::XyCross => 0.25,
        IdentityId::SumSquares => 1.0 / 3.0 + pi2_36,
        IdentityId::SumOfSumSq => 5.0 / 6.0 + pi2_36,
        IdentityId::DiffSq => pi2_36 - 1.0 / 6.0,
    }
}

/// Right-hand side from the box integral of the weight minus the
/// within-rectangle corrections `area_n·(Δx² + Δy²)/12`, summed over
/// `n ≤ n_trunc` with the remainder estimated by `∫_{N+½}^∞ 2 t⁻⁴ dt`.
pub fn rhs_derive(id: IdentityId, n_trunc: usize) -> Result<f64> {
    if n_trunc < 1 {
        return Err(PackError::InvalidArgument(
            "n_trunc must be at least 1".into(),
        ));
    }
    let f = id.weight();
    let box_integral = f.unit_square_integral();
    if f.cxx == 0.0 && f.cyy == 0.0 {
        return Ok(box_integral);
    }
    // the derived identities all weight x² and y² equally, so the correction
    // does not depend on how each rectangle is oriented
    debug_assert_eq!(f.cxx, f.cyy);
    let mut second_moments = 0.0;
    for n in (1..=n_trunc).rev() {
        let n = n as f64;
        let (w, h) = (1.0 / n, 1.0 / (n + 1.0));
        second_moments += w * h * (w * w + h * h);
    }
    let tail_start = n_trunc as f64 + 0.5;
    second_moments += 2.0 / (3.0 * tail_start.powi(3));
    Ok(box_integral - f.cxx * second_moments / 12.0)
}

/// The `(x ± y)²` relations between the closed forms.
pub fn rhs_consistency() -> bool {
    consistency_residuals(rhs_constant)
        .iter()
        .all(|d| d.abs() <= 1e-15)
}

/// `[SUM_OF_SUM_SQ − (SUM_SQUARES + 2·XY_CROSS), DIFF_SQ − (SUM_SQUARES − 2·XY_CROSS)]` for any table of values.
pub fn consistency_residuals(value: impl Fn(IdentityId) -> f64) -> [f64; 2] {
    let sq = value(IdentityId::SumSquares);
    let xy = value(IdentityId::XyCross);
    [
        value(IdentityId::SumOfSumSq) - (sq + 2.0 * xy),
        value(IdentityId::DiffSq) - (sq - 2.0 * xy),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityEval {
    pub id: IdentityId,
    pub lhs_partial: f64,
    pub rhs_constant: f64,
    pub n: usize,
}

impl IdentityEval {
    pub fn gap(&self) -> f64 {
        self.rhs_constant - self.lhs_partial
    }
}

const SIZE_TOL: f64 = 1e-9;

/// `Σ_{n ≤ N} f(center_n)/(n(n+1))` for a layout of the first `N` harmonic
/// rectangles in order. Only the sizes are checked; the layout need not be a
/// packing.
pub fn identity_partial(layout: &Layout, id: IdentityId) -> Result<IdentityEval> {
    let f = id.weight();
    let mut lhs = 0.0;
    for (i, p) in layout.placements.iter().enumerate() {
        let n = (i + 1) as f64;
        let (w, h) = (1.0 / n, 1.0 / (n + 1.0));
        let upright = (p.dx() - w).abs() <= SIZE_TOL && (p.dy() - h).abs() <= SIZE_TOL;
        let turned = (p.dx() - h).abs() <= SIZE_TOL && (p.dy() - w).abs() <= SIZE_TOL;
        if !(upright || turned) {
            return Err(PackError::InvalidArgument(format!(
                "placement {} is not a 1/{} × 1/{} rectangle",
                i + 1,
                i + 1,
                i + 2
            )));
        }
        lhs += w * h * f.at(p.cx(), p.cy());
    }
    Ok(IdentityEval {
        id,
        lhs_partial: lhs,
        rhs_constant: rhs_constant(id),
        n: layout.len(),
    })
}
