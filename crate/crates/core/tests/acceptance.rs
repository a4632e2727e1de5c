//! Acceptance criteria, one PASS/FAIL line each. Runs as a plain binary so
//! the verdict lines are always printed; any failure exits non-zero.

mod common;

use std::time::{Duration, Instant};

use rayon::prelude::*;
use rectmoment::harmonic::{consistency_residuals, rhs_constant, rhs_derive, IdentityId};
use rectmoment::moment::{Mode, MomentSystem};
use rectmoment::verifier::DEFAULT_TOL;
use rectmoment::*;

// Thresholds, pinned.
const C1_DERIVED_TOL: f64 = 1e-6;
const C1_N_TRUNC: usize = 1_000_000;
const C1_TIME: Duration = Duration::from_secs(10);
const C2_TOL: f64 = 1e-15;
const C3_RESIDUAL: f64 = 1e-9;
const C3_TIME: Duration = Duration::from_secs(30);
const C4_DELTA: f64 = 1e-3;
const C4_FLOOR: f64 = 1e-5;
const C4_RATE: f64 = 0.99;
const C5_REL: f64 = 1e-6;
const C5_POINTS: usize = 100;
const C5_FIXTURES: u64 = 20;
const C6_RESTARTS: usize = 200;
const C6_TIME: Duration = Duration::from_secs(60);
const C6_RATE: f64 = 0.90;
const C6_CORPUS: u64 = 60;
const C7_RESTARTS: usize = 8;
const C7_MAX_ITERS: usize = 300;

struct Verdict {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn criterion_1() -> Verdict {
    // closed forms as stated by the identities themselves
    let pi2 = std::f64::consts::PI.powi(2);
    let expected = [
        0.5,
        0.5,
        0.25,
        1.0 / 3.0 + pi2 / 36.0,
        5.0 / 6.0 + pi2 / 36.0,
        pi2 / 36.0 - 1.0 / 6.0,
    ];
    let clock = Instant::now();
    let mut worst: f64 = 0.0;
    let mut closed_ok = true;
    for (id, want) in IdentityId::ALL.into_iter().zip(expected) {
        closed_ok &= rhs_constant(id) == want;
        let derived = rhs_derive(id, C1_N_TRUNC).unwrap();
        worst = worst.max((derived - rhs_constant(id)).abs());
    }
    let elapsed = clock.elapsed();
    Verdict {
        id: "C1 harmonic constants",
        pass: closed_ok && worst <= C1_DERIVED_TOL && elapsed < C1_TIME,
        detail: format!("max |derived - closed| = {worst:.3e} at N = {C1_N_TRUNC}, {elapsed:.2?}"),
    }
}

fn criterion_2() -> Verdict {
    let [plus, minus] = consistency_residuals(rhs_constant);
    Verdict {
        id: "C2 consistency relations",
        pass: plus.abs() <= C2_TOL && minus.abs() <= C2_TOL && harmonic::rhs_consistency(),
        detail: format!("SUM_OF_SUM_SQ-(SUM_SQUARES+2XY_CROSS) = {plus:.1e}, DIFF_SQ-(SUM_SQUARES-2XY_CROSS) = {minus:.1e}"),
    }
}

/// Worst residual per fixture over smax 2..=8 and the corner verdicts.
fn moment_scan(corpus: &[(Instance, Layout)]) -> (Vec<f64>, Vec<bool>) {
    corpus
        .iter()
        .map(|(inst, layout)| {
            let worst = (2..=8)
                .map(|s| moment_residual_of_layout(inst, layout, s).unwrap())
                .fold(0.0, f64::max);
            (worst, corner_cancellation(layout, inst.bbox(), DEFAULT_TOL))
        })
        .unzip()
}

fn criterion_3(corpus: &[(Instance, Layout)]) -> (Verdict, Vec<f64>) {
    let clock = Instant::now();
    let (residuals, corners) = moment_scan(corpus);
    let elapsed = clock.elapsed();
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    let corners_ok = corners.iter().all(|&c| c);
    let v = Verdict {
        id: "C3 perfect packing => zero moments",
        pass: worst <= C3_RESIDUAL && corners_ok && elapsed < C3_TIME,
        detail: format!(
            "{} fixtures, max residual {worst:.2e}, corner cancellation {}, {elapsed:.2?}",
            corpus.len(),
            if corners_ok { "all true" } else { "FAILED" }
        ),
    };
    (v, residuals)
}

fn criterion_4(corpus: &[(Instance, Layout)]) -> Verdict {
    let mut total = 0usize;
    let mut raised = 0usize;
    let mut weakest = f64::INFINITY;
    for (inst, layout) in corpus {
        let delta = C4_DELTA * inst.bbox().scale();
        for i in 0..layout.len() {
            for coord in 0..4 {
                for sign in [1.0, -1.0] {
                    let mut moved = layout.clone();
                    let p = &mut moved.placements[i];
                    let target = match coord {
                        0 => &mut p.x_lo,
                        1 => &mut p.y_lo,
                        2 => &mut p.x_hi,
                        _ => &mut p.y_hi,
                    };
                    *target += sign * delta;
                    // smax = 3 rows are a subset of every larger truncation
                    let r = moment_residual_of_layout(inst, &moved, 3).unwrap();
                    weakest = weakest.min(r);
                    total += 1;
                    raised += usize::from(r > C4_FLOOR);
                }
            }
        }
    }
    let rate = raised as f64 / total as f64;
    Verdict {
        id: "C4 sensitivity",
        pass: rate >= C4_RATE,
        detail: format!(
            "{raised}/{total} perturbations above {C4_FLOOR:e} ({:.2}%), weakest {weakest:.2e}",
            100.0 * rate
        ),
    }
}

fn splitmix(state: &mut u64) -> f64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    ((z ^ (z >> 31)) >> 11) as f64 / (1u64 << 53) as f64
}

fn criterion_5() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for seed in 0..C5_FIXTURES {
        let (inst, _) = common::guillotine_fixture(seed + 1000);
        let mode = if seed % 2 == 0 {
            Mode::Rotatable
        } else {
            Mode::FixedOrientation
        };
        let sys = MomentSystem::build_default(&inst, mode).unwrap();
        let (a, b) = sys.normalized_box();
        let mut state = seed;
        for _ in 0..C5_POINTS {
            let vars: Vec<f64> = (0..sys.var_count())
                .map(|k| splitmix(&mut state) * if k % 2 == 0 { a } else { b })
                .collect();
            worst = worst.max(fd_relative_error(&sys, &vars));
            checked += 1;
        }
    }
    Verdict {
        id: "C5 Jacobian vs finite differences",
        pass: worst <= C5_REL,
        detail: format!("{checked} points, worst relative error {worst:.2e}"),
    }
}

fn fd_relative_error(sys: &MomentSystem, vars: &[f64]) -> f64 {
    let jac = sys.jacobian(vars).unwrap();
    let h = 1e-6;
    let scale = jac.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let mut worst: f64 = 0.0;
    for c in 0..vars.len() {
        let (mut up, mut down) = (vars.to_vec(), vars.to_vec());
        up[c] += h;
        down[c] -= h;
        let ru: Vec<f64> = sys.residual(&up).unwrap().iter().collect();
        let rd: Vec<f64> = sys.residual(&down).unwrap().iter().collect();
        for r in 0..ru.len() {
            worst = worst.max(((ru[r] - rd[r]) / (2.0 * h) - jac[(r, c)]).abs() / scale);
        }
    }
    worst
}

fn named_instances() -> Vec<(&'static str, Instance)> {
    let b = |w, h| BoxSpec::new(w, h).unwrap();
    vec![
        (
            "two 1x2 in 2x2",
            Instance::new(&[(1.0, 2.0); 2], b(2.0, 2.0), true).unwrap(),
        ),
        (
            "three 1x2 in 2x3",
            Instance::new(&[(1.0, 2.0); 3], b(2.0, 3.0), true).unwrap(),
        ),
        (
            "four 2x2 in 4x4",
            Instance::new(&[(2.0, 2.0); 4], b(4.0, 4.0), true).unwrap(),
        ),
    ]
}

fn small_guillotine(seed: u64) -> Instance {
    let w = 1.0 + (seed % 4) as f64 * 0.5;
    let h = 1.0 + (seed % 3) as f64 * 0.75;
    gen_guillotine(seed, (seed % 5) as usize, BoxSpec::new(w, h).unwrap()).0
}

fn solve_default(inst: &Instance) -> SolveReport {
    let cfg = SolveConfig {
        restarts: C6_RESTARTS,
        ..SolveConfig::default()
    };
    solve_multistart(inst, &cfg, None, Mode::for_instance(inst)).unwrap()
}

fn criterion_6() -> (Verdict, Vec<Layout>) {
    let mut layouts = Vec::new();
    let mut slowest = Duration::ZERO;
    let mut named_ok = true;
    let mut notes = Vec::new();
    for (name, inst) in named_instances() {
        let report = solve_default(&inst);
        slowest = slowest.max(report.wall_time);
        let ok = report.status == SolveStatus::ConvergedVerified && report.wall_time < C6_TIME;
        if !ok {
            notes.push(format!("{name}: {:?}", report.status));
        }
        named_ok &= ok;
        layouts.push(report.best_layout);
    }
    let mut verified = 0;
    for seed in 0..C6_CORPUS {
        let report = solve_default(&small_guillotine(seed));
        slowest = slowest.max(report.wall_time);
        if report.status == SolveStatus::ConvergedVerified && report.wall_time < C6_TIME {
            verified += 1;
        }
        layouts.push(report.best_layout);
    }
    let rate = verified as f64 / C6_CORPUS as f64;
    let v = Verdict {
        id: "C6 solver success at desk scale",
        pass: named_ok && rate >= C6_RATE && slowest < C6_TIME,
        detail: format!(
            "named instances {}; guillotine N<=5: {verified}/{C6_CORPUS} verified ({:.0}%), slowest {slowest:.2?}{}",
            if named_ok { "all verified" } else { "FAILED" },
            100.0 * rate,
            if notes.is_empty() { String::new() } else { format!(" [{}]", notes.join("; ")) }
        ),
    };
    (v, layouts)
}

fn criterion_7() -> Verdict {
    let family: Vec<Instance> = enumerate_small_family(4, 4).collect();
    let cfg = SolveConfig {
        restarts: C7_RESTARTS,
        max_iters: C7_MAX_ITERS,
        ..SolveConfig::default()
    };
    let rows: Vec<(bool, bool, bool)> = family
        .par_iter()
        .map(|inst| {
            let oracle = oracle_feasible(inst).unwrap();
            let witness_ok = oracle.witness.as_ref().is_none_or(|w| {
                verify_exact(
                    &ExactInstance::from_instance(inst).unwrap(),
                    &ExactLayout::from_layout(w).unwrap(),
                )
                .unwrap()
            });
            let report = solve_multistart(inst, &cfg, None, Mode::for_instance(inst)).unwrap();
            (
                oracle.feasible,
                report.status == SolveStatus::ConvergedVerified,
                witness_ok,
            )
        })
        .collect();
    let unsound = rows
        .iter()
        .filter(|&&(feasible, solved, _)| solved && !feasible)
        .count();
    let bad_witness = rows.iter().filter(|r| !r.2).count();
    let feasible = rows.iter().filter(|r| r.0).count();
    let solved = rows.iter().filter(|r| r.1).count();
    Verdict {
        id: "C7 oracle soundness end-to-end",
        pass: unsound == 0 && bad_witness == 0,
        detail: format!(
            "{} instances, {feasible} oracle-feasible, solver verified {solved}, unsound {unsound}, bad witnesses {bad_witness}",
            rows.len()
        ),
    }
}

fn bitwise(layouts: &[Layout]) -> Vec<u64> {
    layouts
        .iter()
        .flat_map(|l| {
            l.placements
                .iter()
                .flat_map(|p| p.coords().map(f64::to_bits))
        })
        .collect()
}

fn criterion_8(residuals_first: &[f64], layouts_first: &[Layout]) -> Verdict {
    let corpus = common::fixture_corpus();
    let (residuals_again, _) = moment_scan(&corpus);
    let same_residuals = residuals_first
        .iter()
        .zip(&residuals_again)
        .all(|(a, b)| a.to_bits() == b.to_bits());
    let corpus_again = common::fixture_corpus();
    let same_fixtures = corpus
        .iter()
        .zip(&corpus_again)
        .all(|(a, b)| bitwise(std::slice::from_ref(&a.1)) == bitwise(std::slice::from_ref(&b.1)));
    let (_, layouts_again) = criterion_6();
    let same_layouts = bitwise(layouts_first) == bitwise(&layouts_again);
    Verdict {
        id: "C8 determinism",
        pass: same_residuals && same_fixtures && same_layouts,
        detail: format!(
            "fixtures {same_fixtures}, residuals {same_residuals}, solver layouts {same_layouts} ({} layouts)",
            layouts_first.len()
        ),
    }
}

fn main() {
    let corpus = common::fixture_corpus();
    let mut verdicts = vec![criterion_1(), criterion_2()];
    let (c3, residuals) = criterion_3(&corpus);
    verdicts.push(c3);
    verdicts.push(criterion_4(&corpus));
    verdicts.push(criterion_5());
    let (c6, layouts) = criterion_6();
    verdicts.push(c6);
    verdicts.push(criterion_7());
    verdicts.push(criterion_8(&residuals, &layouts));

    let mut failed = 0;
    for v in &verdicts {
        println!(
            "[{}] {}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.id,
            v.detail
        );
        failed += usize::from(!v.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        verdicts.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
