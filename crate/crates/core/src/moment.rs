//! Truncated moment system over layout variables.
//!
//! All lengths are divided by `scale = max(A, B)`. Equation `(s1, s2)` reads
//!
//! ```text
//! r = Σ_n (x_hi^s1 − x_lo^s1)(y_hi^s2 − y_lo^s2) / (a^s1 b^s2) − 1
//! ```
//!
//! with `a = A/scale`, `b = B/scale`, for `1 ≤ s1, s2 ≤ smax`. In
//! fixed-orientation mode the variables are `(x_lo, y_lo)` per rectangle and
//! the sizes are substituted. In rotatable mode the variables are all four
//! corner coordinates and each rectangle contributes two constraint rows
//!
//! ```text
//! c1 = Δx + Δy − (w + l)/scale,    c2 = Δx·Δy − w·l/scale²
//! ```
//!
//! whose common roots are exactly `{Δx, Δy} = {w, l}`.

use nalgebra::DMatrix;

use crate::error::{PackError, Result};
use crate::instance::{Instance, Layout, Placement};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    FixedOrientation,
    Rotatable,
}

impl Mode {
    /// Rotatable when the instance allows it, fixed otherwise.
    pub fn for_instance(inst: &Instance) -> Self {
        if inst.rotation_allowed() {
            Mode::Rotatable
        } else {
            Mode::FixedOrientation
        }
    }

    pub fn vars_per_rect(self) -> usize {
        match self {
            Mode::FixedOrientation => 2,
            Mode::Rotatable => 4,
        }
    }
}

/// `max(3, ceil(sqrt(var_count)) + 1)`, so that `smax² ≥ var_count`.
pub fn default_smax(var_count: usize) -> usize {
    let root = (var_count as f64).sqrt().ceil() as usize;
    (root + 1).max(3)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualVector {
    pub moment_part: Vec<f64>,
    pub constraint_part: Vec<f64>,
}

impl ResidualVector {
    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.moment_part
            .iter()
            .chain(&self.constraint_part)
            .copied()
    }

    pub fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn moment_max_abs(&self) -> f64 {
        self.moment_part.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn norm(&self) -> f64 {
        self.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct MomentSystem {
    instance: Instance,
    smax: usize,
    mode: Mode,
    scale: f64,
    /// Normalized box sides.
    a: f64,
    b: f64,
    /// Normalized rectangle sides.
    sides: Vec<(f64, f64)>,
    equations: Vec<(usize, usize)>,
    /// `1 / (a^s1 b^s2)` per equation.
    weights: Vec<f64>,
}

/// `base^0 ..= base^smax` by repeated multiplication.
fn powers(base: f64, smax: usize, out: &mut Vec<f64>) {
    out.clear();
    let mut p = 1.0;
    out.push(p);
    for _ in 0..smax {
        p *= base;
        out.push(p);
    }
}

impl MomentSystem {
    pub fn build(inst: &Instance, smax: usize, mode: Mode) -> Result<Self> {
        if mode == Mode::Rotatable && !inst.rotation_allowed() {
            return Err(PackError::ModeMismatch);
        }
        Self::build_unchecked(inst, smax, mode)
    }

    /// Builds with the default truncation order for the mode.
    pub fn build_default(inst: &Instance, mode: Mode) -> Result<Self> {
        Self::build(inst, default_smax(mode.vars_per_rect() * inst.len()), mode)
    }

    /// Skips the rotation-flag check; used to evaluate moments of arbitrary
    /// corner layouts.
    pub(crate) fn build_unchecked(inst: &Instance, smax: usize, mode: Mode) -> Result<Self> {
        if smax < 1 {
            return Err(PackError::InvalidTruncation);
        }
        let bbox = inst.bbox();
        let scale = bbox.scale();
        let (a, b) = (bbox.width / scale, bbox.height / scale);
        let sides = inst
            .rects()
            .iter()
            .map(|r| (r.width / scale, r.height / scale))
            .collect();
        let mut equations = Vec::with_capacity(smax * smax);
        let mut weights = Vec::with_capacity(smax * smax);
        let (mut pa, mut pb) = (Vec::new(), Vec::new());
        powers(a, smax, &mut pa);
        powers(b, smax, &mut pb);
        for (s1, a_pow) in pa.iter().enumerate().skip(1) {
            for (s2, b_pow) in pb.iter().enumerate().skip(1) {
                equations.push((s1, s2));
                weights.push(1.0 / (a_pow * b_pow));
            }
        }
        Ok(Self {
            instance: inst.clone(),
            smax,
            mode,
            scale,
            a,
            b,
            sides,
            equations,
            weights,
        })
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn smax(&self) -> usize {
        self.smax
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Normalized box sides `(A/scale, B/scale)`.
    pub fn normalized_box(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    /// Normalized rectangle sides.
    pub fn normalized_sides(&self) -> &[(f64, f64)] {
        &self.sides
    }

    pub fn equations(&self) -> &[(usize, usize)] {
        &self.equations
    }

    pub fn equation_count(&self) -> usize {
        self.equations.len()
    }

    pub fn constraint_count(&self) -> usize {
        match self.mode {
            Mode::FixedOrientation => 0,
            Mode::Rotatable => 2 * self.sides.len(),
        }
    }

    pub fn var_count(&self) -> usize {
        self.mode.vars_per_rect() * self.sides.len()
    }

    pub fn row_count(&self) -> usize {
        self.equation_count() + self.constraint_count()
    }

    fn check_vars(&self, vars: &[f64]) -> Result<()> {
        if vars.len() != self.var_count() {
            return Err(PackError::DimensionMismatch {
                expected: self.var_count(),
                got: vars.len(),
            });
        }
        if vars.iter().any(|v| !v.is_finite()) {
            return Err(PackError::NonFinite("variables"));
        }
        Ok(())
    }

    /// Normalized corners `[x_lo, y_lo, x_hi, y_hi]` of rectangle `n`.
    pub(crate) fn corners(&self, vars: &[f64], n: usize) -> [f64; 4] {
        match self.mode {
            Mode::FixedOrientation => {
                let (x, y) = (vars[2 * n], vars[2 * n + 1]);
                let (w, h) = self.sides[n];
                [x, y, x + w, y + h]
            }
            Mode::Rotatable => {
                let v = &vars[4 * n..4 * n + 4];
                [v[0], v[1], v[2], v[3]]
            }
        }
    }

    pub fn residual(&self, vars: &[f64]) -> Result<ResidualVector> {
        self.check_vars(vars)?;
        let mut out = vec![0.0; self.row_count()];
        self.residual_into(vars, &mut out);
        let constraint_part = out.split_off(self.equation_count());
        Ok(ResidualVector {
            moment_part: out,
            constraint_part,
        })
    }

    /// Residual rows written into `out` (length `row_count`). No validation.
    pub(crate) fn residual_into(&self, vars: &[f64], out: &mut [f64]) {
        let m = self.smax;
        let neq = self.equation_count();
        out[..neq].fill(0.0);
        let (mut xh, mut xl, mut yh, mut yl) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        let mut dx = vec![0.0; m + 1];
        let mut dy = vec![0.0; m + 1];
        for n in 0..self.sides.len() {
            let [x_lo, y_lo, x_hi, y_hi] = self.corners(vars, n);
            powers(x_hi, m, &mut xh);
            powers(x_lo, m, &mut xl);
            powers(y_hi, m, &mut yh);
            powers(y_lo, m, &mut yl);
            for k in 1..=m {
                dx[k] = xh[k] - xl[k];
                dy[k] = yh[k] - yl[k];
            }
            for (row, &(s1, s2)) in self.equations.iter().enumerate() {
                out[row] += dx[s1] * dy[s2];
            }
        }
        for (row, w) in self.weights.iter().enumerate() {
            out[row] = out[row] * w - 1.0;
        }
        if self.mode == Mode::Rotatable {
            for (n, &(w, h)) in self.sides.iter().enumerate() {
                let [x_lo, y_lo, x_hi, y_hi] = self.corners(vars, n);
                let (ddx, ddy) = (x_hi - x_lo, y_hi - y_lo);
                out[neq + 2 * n] = ddx + ddy - (w + h);
                out[neq + 2 * n + 1] = ddx * ddy - w * h;
            }
        }
    }

    pub fn jacobian(&self, vars: &[f64]) -> Result<DMatrix<f64>> {
        self.check_vars(vars)?;
        let mut jac = DMatrix::zeros(self.row_count(), self.var_count());
        self.jacobian_into(vars, &mut jac);
        Ok(jac)
    }

    pub(crate) fn jacobian_into(&self, vars: &[f64], jac: &mut DMatrix<f64>) {
        let m = self.smax;
        let neq = self.equation_count();
        jac.fill(0.0);
        let (mut xh, mut xl, mut yh, mut yl) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        let mut dx = vec![0.0; m + 1];
        let mut dy = vec![0.0; m + 1];
        // d(t^s)/dt = s t^(s-1)
        let mut gxh = vec![0.0; m + 1];
        let mut gxl = vec![0.0; m + 1];
        let mut gyh = vec![0.0; m + 1];
        let mut gyl = vec![0.0; m + 1];
        for n in 0..self.sides.len() {
            let [x_lo, y_lo, x_hi, y_hi] = self.corners(vars, n);
            powers(x_hi, m, &mut xh);
            powers(x_lo, m, &mut xl);
            powers(y_hi, m, &mut yh);
            powers(y_lo, m, &mut yl);
            for k in 1..=m {
                dx[k] = xh[k] - xl[k];
                dy[k] = yh[k] - yl[k];
                let s = k as f64;
                gxh[k] = s * xh[k - 1];
                gxl[k] = s * xl[k - 1];
                gyh[k] = s * yh[k - 1];
                gyl[k] = s * yl[k - 1];
            }
            for (row, (&(s1, s2), w)) in self.equations.iter().zip(&self.weights).enumerate() {
                let d_xhi = gxh[s1] * dy[s2] * w;
                let d_xlo = -gxl[s1] * dy[s2] * w;
                let d_yhi = dx[s1] * gyh[s2] * w;
                let d_ylo = -dx[s1] * gyl[s2] * w;
                match self.mode {
                    Mode::FixedOrientation => {
                        jac[(row, 2 * n)] = d_xhi + d_xlo;
                        jac[(row, 2 * n + 1)] = d_yhi + d_ylo;
                    }
                    Mode::Rotatable => {
                        jac[(row, 4 * n)] = d_xlo;
                        jac[(row, 4 * n + 1)] = d_ylo;
                        jac[(row, 4 * n + 2)] = d_xhi;
                        jac[(row, 4 * n + 3)] = d_yhi;
                    }
                }
            }
            if self.mode == Mode::Rotatable {
                let (ddx, ddy) = (x_hi - x_lo, y_hi - y_lo);
                let (r1, r2, c) = (neq + 2 * n, neq + 2 * n + 1, 4 * n);
                jac[(r1, c)] = -1.0;
                jac[(r1, c + 1)] = -1.0;
                jac[(r1, c + 2)] = 1.0;
                jac[(r1, c + 3)] = 1.0;
                jac[(r2, c)] = -ddy;
                jac[(r2, c + 1)] = -ddx;
                jac[(r2, c + 2)] = ddy;
                jac[(r2, c + 3)] = ddx;
            }
        }
    }

    /// Normalized variable vector for a layout in instance units.
    pub fn layout_to_vars(&self, layout: &Layout) -> Result<Vec<f64>> {
        layout.check_cardinality(&self.instance)?;
        let s = self.scale;
        let per = self.mode.vars_per_rect();
        let mut vars = Vec::with_capacity(per * layout.len());
        for p in &layout.placements {
            match self.mode {
                Mode::FixedOrientation => vars.extend([p.x_lo / s, p.y_lo / s]),
                Mode::Rotatable => vars.extend([p.x_lo / s, p.y_lo / s, p.x_hi / s, p.y_hi / s]),
            }
        }
        Ok(vars)
    }

    /// Layout in instance units. Fixed mode rebuilds the upper corners from
    /// the rectangle sides.
    pub fn vars_to_layout(&self, vars: &[f64]) -> Result<Layout> {
        if vars.len() != self.var_count() {
            return Err(PackError::DimensionMismatch {
                expected: self.var_count(),
                got: vars.len(),
            });
        }
        let s = self.scale;
        let placements = match self.mode {
            Mode::FixedOrientation => vars
                .chunks_exact(2)
                .zip(self.instance.rects())
                .map(|(v, r)| {
                    let (x, y) = (v[0] * s, v[1] * s);
                    Placement::new(x, y, x + r.width, y + r.height)
                })
                .collect(),
            Mode::Rotatable => vars
                .chunks_exact(4)
                .map(|v| Placement::new(v[0] * s, v[1] * s, v[2] * s, v[3] * s))
                .collect(),
        };
        Ok(Layout::new(placements))
    }

    /// Clamps variables into the normalized box. Fixed mode keeps each
    /// rectangle inside; rotatable mode clamps every corner and swaps
    /// `lo`/`hi` pairs that crossed.
    pub fn project(&self, vars: &mut [f64]) {
        match self.mode {
            Mode::FixedOrientation => {
                for (v, &(w, h)) in vars.chunks_exact_mut(2).zip(&self.sides) {
                    v[0] = v[0].min(self.a - w).max(0.0);
                    v[1] = v[1].min(self.b - h).max(0.0);
                }
            }
            Mode::Rotatable => {
                for v in vars.chunks_exact_mut(4) {
                    v[0] = v[0].clamp(0.0, self.a);
                    v[2] = v[2].clamp(0.0, self.a);
                    v[1] = v[1].clamp(0.0, self.b);
                    v[3] = v[3].clamp(0.0, self.b);
                    if v[0] > v[2] {
                        v.swap(0, 2);
                    }
                    if v[1] > v[3] {
                        v.swap(1, 3);
                    }
                }
            }
        }
    }
}
