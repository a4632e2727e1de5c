//! Damped least-squares search for zeros of the moment system.
//!
//! Each start runs Levenberg–Marquardt on the normalized variables,
//! projecting every trial point back into the box. Converged candidates are
//! handed to the geometric verifier; only a verified layout counts as a
//! packing.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{PackError, Result};
use crate::instance::{check_area, Instance, Layout, Placement};
use crate::moment::{default_smax, Mode, MomentSystem};
use crate::verifier::{verify_layout, DEFAULT_TOL};

/// Starts evaluated together before checking for a verified winner.
const START_BATCH: usize = 8;
const LAMBDA_MIN: f64 = 1e-20;
const LAMBDA_MAX: f64 = 1e20;

#[derive(Debug, Clone, PartialEq)]
pub enum InitStrategy {
    /// Every start drawn uniformly inside the box.
    UniformRandom,
    /// Start 0 is the shelf heuristic, the rest are random.
    ShelfGreedy,
    /// Start 0 is the given layout, the rest are random.
    UserLayout(Layout),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub max_iters: usize,
    pub restarts: usize,
    pub seed: u64,
    pub residual_tol: f64,
    pub step_tol: f64,
    pub lm_lambda0: f64,
    pub init_strategy: InitStrategy,
    /// Tolerance handed to [`verify_layout`].
    pub verify_tol: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            restarts: 64,
            seed: 0,
            residual_tol: 1e-10,
            step_tol: 1e-12,
            lm_lambda0: 1e-3,
            init_strategy: InitStrategy::ShelfGreedy,
            verify_tol: DEFAULT_TOL,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if self.restarts < 1 {
            return Err(PackError::InvalidArgument(
                "restarts must be at least 1".into(),
            ));
        }
        if !(positive(self.residual_tol)
            && positive(self.step_tol)
            && positive(self.lm_lambda0)
            && positive(self.verify_tol))
        {
            return Err(PackError::InvalidArgument(
                "tolerances must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ResidualTol,
    StepTol,
    MaxIters,
    NonFinite,
}

/// Result of one Levenberg–Marquardt run.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleSolve {
    pub vars: Vec<f64>,
    /// Residual 2-norm at the start and after every accepted step.
    pub history: Vec<f64>,
    pub iterations: usize,
    pub residual_inf: f64,
    pub termination: Termination,
}

impl SingleSolve {
    pub fn converged(&self) -> bool {
        self.termination == Termination::ResidualTol
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn two_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn solve_single(sys: &MomentSystem, x0: &[f64], cfg: &SolveConfig) -> Result<SingleSolve> {
    let n = sys.var_count();
    if x0.len() != n {
        return Err(PackError::DimensionMismatch {
            expected: n,
            got: x0.len(),
        });
    }
    let rows = sys.row_count();
    let mut x = x0.to_vec();
    sys.project(&mut x);
    let mut r = vec![0.0; rows];
    sys.residual_into(&x, &mut r);
    let finish = |vars, history, iterations, r: &[f64], termination| SingleSolve {
        vars,
        history,
        iterations,
        residual_inf: inf_norm(r),
        termination,
    };
    if r.iter().any(|v| !v.is_finite()) {
        return Ok(finish(x, vec![], 0, &r, Termination::NonFinite));
    }
    let mut norm = two_norm(&r);
    let mut history = vec![norm];
    if inf_norm(&r) <= cfg.residual_tol {
        return Ok(finish(x, history, 0, &r, Termination::ResidualTol));
    }

    let mut jac = DMatrix::zeros(rows, n);
    let mut lambda = cfg.lm_lambda0;
    let mut trial = vec![0.0; n];
    let mut r_trial = vec![0.0; rows];
    let mut fresh_jacobian = true;
    let mut normal = DMatrix::zeros(n, n);
    let mut gradient = DVector::zeros(n);

    for iter in 1..=cfg.max_iters {
        if fresh_jacobian {
            sys.jacobian_into(&x, &mut jac);
            normal = jac.tr_mul(&jac);
            gradient = jac.tr_mul(&DVector::from_column_slice(&r));
            fresh_jacobian = false;
        }
        let mut damped = normal.clone();
        for i in 0..n {
            damped[(i, i)] += lambda;
        }
        let Some(chol) = damped.cholesky() else {
            lambda = (lambda * 4.0).min(LAMBDA_MAX);
            continue;
        };
        let step = chol.solve(&(-&gradient));
        if step.iter().any(|v| !v.is_finite()) {
            return Ok(finish(x, history, iter, &r, Termination::NonFinite));
        }
        for i in 0..n {
            trial[i] = x[i] + step[i];
        }
        sys.project(&mut trial);
        sys.residual_into(&trial, &mut r_trial);
        if r_trial.iter().any(|v| !v.is_finite()) {
            return Ok(finish(x, history, iter, &r, Termination::NonFinite));
        }
        let trial_norm = two_norm(&r_trial);
        if trial_norm < norm {
            let moved = x
                .iter()
                .zip(&trial)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            std::mem::swap(&mut x, &mut trial);
            std::mem::swap(&mut r, &mut r_trial);
            norm = trial_norm;
            history.push(norm);
            lambda = (lambda * 0.5).max(LAMBDA_MIN);
            fresh_jacobian = true;
            if inf_norm(&r) <= cfg.residual_tol {
                return Ok(finish(x, history, iter, &r, Termination::ResidualTol));
            }
            if moved <= cfg.step_tol {
                return Ok(finish(x, history, iter, &r, Termination::StepTol));
            }
        } else {
            lambda *= 4.0;
            if step.norm() <= cfg.step_tol || lambda > LAMBDA_MAX {
                return Ok(finish(x, history, iter, &r, Termination::StepTol));
            }
        }
    }
    Ok(finish(x, history, cfg.max_iters, &r, Termination::MaxIters))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    ConvergedVerified,
    ConvergedUnverified,
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    /// Why the search stopped without a packing (`"area"` for the area gate).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub best_layout: Layout,
    /// Infinity norm of the residual in normalized units.
    pub final_residual_inf: f64,
    /// Iterations spent over starts `0..=start_index`.
    pub iterations_total: usize,
    pub start_index: usize,
    pub smax: usize,
    pub mode: &'static str,
    #[serde(rename = "wall_time_secs", serialize_with = "secs")]
    pub wall_time: Duration,
}

fn secs<S: Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::FixedOrientation => "fixed",
        Mode::Rotatable => "rotatable",
    }
}

/// Shelf heuristic: rectangles sorted by decreasing height are laid left to
/// right, opening a new shelf when a row is full. Placements are clamped into
/// the box and may overlap when the instance is over-full.
pub fn init_shelf_greedy(inst: &Instance) -> Layout {
    let bbox = inst.bbox();
    let mut order: Vec<usize> = (0..inst.len()).collect();
    let rects = inst.rects();
    order.sort_by(|&i, &j| rects[j].height.total_cmp(&rects[i].height));
    let mut placements = vec![Placement::new(0.0, 0.0, 0.0, 0.0); inst.len()];
    let (mut x, mut y, mut shelf) = (0.0_f64, 0.0_f64, 0.0_f64);
    for i in order {
        let r = rects[i];
        if x > 0.0 && x + r.width > bbox.width * (1.0 + 1e-12) {
            y += shelf;
            x = 0.0;
            shelf = 0.0;
        }
        let x_lo = x.min(bbox.width - r.width).max(0.0);
        let y_lo = y.min(bbox.height - r.height).max(0.0);
        placements[i] = Placement::new(x_lo, y_lo, x_lo + r.width, y_lo + r.height);
        x += r.width;
        shelf = shelf.max(r.height);
    }
    Layout::new(placements)
}

fn start_rng(seed: u64, start_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(start_index as u64);
    rng
}

fn random_start(sys: &MomentSystem, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (a, b) = sys.normalized_box();
    let mut vars = Vec::with_capacity(sys.var_count());
    for &(w, h) in sys.normalized_sides() {
        let (w, h) = match sys.mode() {
            Mode::Rotatable if rng.random_bool(0.5) => (h, w),
            _ => (w, h),
        };
        let x = rng.random::<f64>() * (a - w).max(0.0);
        let y = rng.random::<f64>() * (b - h).max(0.0);
        match sys.mode() {
            Mode::FixedOrientation => vars.extend([x, y]),
            Mode::Rotatable => vars.extend([x, y, x + w, y + h]),
        }
    }
    sys.project(&mut vars);
    vars
}

fn initial_point(sys: &MomentSystem, cfg: &SolveConfig, start_index: usize) -> Result<Vec<f64>> {
    match (&cfg.init_strategy, start_index) {
        (InitStrategy::ShelfGreedy, 0) => sys.layout_to_vars(&init_shelf_greedy(sys.instance())),
        (InitStrategy::UserLayout(layout), 0) => sys.layout_to_vars(layout),
        _ => Ok(random_start(sys, &mut start_rng(cfg.seed, start_index))),
    }
}

struct StartOutcome {
    index: usize,
    solve: SingleSolve,
    layout: Layout,
    verified: bool,
}

type AxisCoords = fn(&mut Placement) -> [&mut f64; 2];

/// Merges corner coordinates that agree to within `radius` onto one shared
/// value, so edges that meet numerically meet exactly. Box sides anchor their
/// groups; other groups take their mean.
pub fn snap_layout(layout: &Layout, bbox: crate::instance::BoxSpec, radius: f64) -> Layout {
    let mut out = layout.clone();
    let axes: [(AxisCoords, f64); 2] = [
        (|p| [&mut p.x_lo, &mut p.x_hi], bbox.width),
        (|p| [&mut p.y_lo, &mut p.y_hi], bbox.height),
    ];
    for (coords, side) in axes {
        let mut values: Vec<f64> = out
            .placements
            .iter_mut()
            .flat_map(|p| coords(p).map(|v| *v))
            .collect();
        values.extend([0.0, side]);
        values.sort_by(f64::total_cmp);
        let mut groups: Vec<(f64, f64, f64)> = Vec::new(); // (first, last, representative)
        let mut start = 0;
        for i in 1..=values.len() {
            if i == values.len() || values[i] - values[i - 1] > radius {
                let group = &values[start..i];
                let rep = if group.contains(&0.0) {
                    0.0
                } else if group.contains(&side) {
                    side
                } else {
                    group.iter().sum::<f64>() / group.len() as f64
                };
                groups.push((group[0], group[group.len() - 1], rep));
                start = i;
            }
        }
        for p in &mut out.placements {
            for v in coords(p) {
                let g = groups.partition_point(|g| g.1 < *v);
                *v = groups[g].2;
            }
        }
    }
    out
}

fn run_start(sys: &MomentSystem, cfg: &SolveConfig, index: usize) -> Result<StartOutcome> {
    let x0 = initial_point(sys, cfg, index)?;
    let solve = solve_single(sys, &x0, cfg)?;
    let mut layout = sys.vars_to_layout(&solve.vars)?;
    if solve.converged() {
        let bbox = sys.instance().bbox();
        layout = snap_layout(&layout, bbox, cfg.verify_tol * bbox.scale());
    }
    let verified =
        solve.converged() && verify_layout(sys.instance(), &layout, cfg.verify_tol)?.pass;
    Ok(StartOutcome {
        index,
        solve,
        layout,
        verified,
    })
}

/// Multi-start search. Starts are independent and run in parallel batches;
/// the reported solution is the verified one with the lowest start index, so
/// the outcome does not depend on scheduling.
pub fn solve_multistart(
    inst: &Instance,
    cfg: &SolveConfig,
    smax: Option<usize>,
    mode: Mode,
) -> Result<SolveReport> {
    cfg.validate()?;
    let clock = Instant::now();
    let smax = smax.unwrap_or_else(|| default_smax(mode.vars_per_rect() * inst.len()));
    let sys = MomentSystem::build(inst, smax, mode)?;

    let area = check_area(inst, inst.default_area_tol());
    if !area.is_exact() {
        let vars = initial_point(&sys, cfg, 0)?;
        return Ok(SolveReport {
            status: SolveStatus::Exhausted,
            reason: Some("area".into()),
            best_layout: sys.vars_to_layout(&vars)?,
            final_residual_inf: (area.delta() / inst.bbox().area()).abs(),
            iterations_total: 0,
            start_index: 0,
            smax,
            mode: mode_name(mode),
            wall_time: clock.elapsed(),
        });
    }

    let mut outcomes: Vec<StartOutcome> = Vec::with_capacity(cfg.restarts);
    let mut winner = None;
    let mut next = 0;
    while next < cfg.restarts && winner.is_none() {
        let end = (next + START_BATCH).min(cfg.restarts);
        let batch = (next..end)
            .into_par_iter()
            .map(|i| run_start(&sys, cfg, i))
            .collect::<Result<Vec<_>>>()?;
        outcomes.extend(batch);
        winner = outcomes.iter().position(|o| o.verified);
        next = end;
    }

    let report = |o: &StartOutcome, status, reason: Option<&str>, iterations_total| SolveReport {
        status,
        reason: reason.map(str::to_string),
        best_layout: o.layout.clone(),
        final_residual_inf: o.solve.residual_inf,
        iterations_total,
        start_index: o.index,
        smax,
        mode: mode_name(mode),
        wall_time: clock.elapsed(),
    };
    if let Some(w) = winner {
        let iterations = outcomes[..=w].iter().map(|o| o.solve.iterations).sum();
        return Ok(report(
            &outcomes[w],
            SolveStatus::ConvergedVerified,
            None,
            iterations,
        ));
    }
    let iterations = outcomes.iter().map(|o| o.solve.iterations).sum();
    let best_of = |converged_only: bool| {
        outcomes
            .iter()
            .filter(|o| {
                o.solve.residual_inf.is_finite() && (!converged_only || o.solve.converged())
            })
            .min_by(|a, b| {
                a.solve
                    .residual_inf
                    .total_cmp(&b.solve.residual_inf)
                    .then(a.index.cmp(&b.index))
            })
    };
    if let Some(best) = best_of(true) {
        return Ok(report(
            best,
            SolveStatus::ConvergedUnverified,
            Some("verification"),
            iterations,
        ));
    }
    let best = best_of(false).unwrap_or(&outcomes[0]);
    Ok(report(
        best,
        SolveStatus::Exhausted,
        Some("restarts"),
        iterations,
    ))
}
