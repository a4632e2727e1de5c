//! `rectmoment` command-line tool.
//!
//! Exit codes: 0 success or verified, 1 clean negative, 2 usage or input error.

mod render;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rectmoment::harmonic::rhs_derive;
use rectmoment::moment::default_smax;
use rectmoment::verifier::DEFAULT_TOL;
use rectmoment::*;
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(
    name = "rectmoment",
    version,
    about = "Rectangle packing through moment equations"
)]
struct Cli {
    /// Print a human-readable table instead of JSON.
    #[arg(long, global = true)]
    table: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate instances.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Solve an instance with the multi-start moment solver.
    Solve(SolveArgs),
    /// Check a layout against an instance.
    Verify(VerifyArgs),
    /// Compare the harmonic identities with series-derived values.
    Identities {
        #[arg(long, default_value_t = 1_000_000)]
        n_trunc: usize,
    },
    /// Draw a layout as SVG.
    Render(RenderArgs),
}

#[derive(Subcommand)]
enum GenKind {
    /// Random guillotine dissection of a box, with its layout.
    Guillotine {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        cuts: usize,
        #[arg(long, default_value_t = 1.0)]
        width: f64,
        #[arg(long, default_value_t = 1.0)]
        height: f64,
        /// Instance output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Layout output file.
        #[arg(long)]
        layout_out: Option<PathBuf>,
    },
    /// Rectangles 1/n × 1/(n+1) for n = 1..N in the unit square.
    Harmonic {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Every integer instance with exact area in boxes up to max-box.
    Family {
        #[arg(long)]
        max_box: u32,
        #[arg(long, default_value_t = 4)]
        max_side: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Auto,
    Fixed,
    Rotatable,
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long)]
    smax: Option<usize>,
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    mode: ModeArg,
    #[arg(long, default_value_t = 64)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Verification tolerance, relative to the box scale.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    /// Layout output file; defaults to `<instance>.layout.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    instance: PathBuf,
    layout: PathBuf,
    /// Decide with exact rational arithmetic.
    #[arg(long)]
    exact: bool,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Truncation for the reported moment residual.
    #[arg(long)]
    smax: Option<usize>,
}

#[derive(Args)]
struct RenderArgs {
    instance: PathBuf,
    layout: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 100.0)]
    px_per_unit: f64,
    /// Write rectangle ids at the centers.
    #[arg(long)]
    labels: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Gen { kind } => cmd_gen(kind),
        Command::Solve(args) => cmd_solve(args, cli.table),
        Command::Verify(args) => cmd_verify(args, cli.table),
        Command::Identities { n_trunc } => cmd_identities(*n_trunc, cli.table),
        Command::Render(args) => cmd_render(args),
    }
}

/// `PACK_SEED` takes precedence over the flag.
fn effective_seed(flag: u64) -> Result<u64> {
    match std::env::var("PACK_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .with_context(|| format!("PACK_SEED is not an integer: {v:?}")),
        Err(_) => Ok(flag),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn load_instance(path: &Path) -> Result<Instance> {
    parse_instance(&read(path)?).with_context(|| format!("invalid instance {}", path.display()))
}

fn load_layout(path: &Path) -> Result<Layout> {
    parse_layout(&read(path)?).with_context(|| format!("invalid layout {}", path.display()))
}

fn as_value(text: &str) -> Value {
    serde_json::from_str(text).expect("serializer emits JSON")
}

fn emit(out: Option<&Path>, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(path) => write(path, &text),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn cmd_gen(kind: &GenKind) -> Result<bool> {
    match kind {
        GenKind::Guillotine {
            seed,
            cuts,
            width,
            height,
            out,
            layout_out,
        } => {
            let bbox = BoxSpec::new(*width, *height)?;
            let (inst, layout) = gen_guillotine(effective_seed(*seed)?, *cuts, bbox);
            let inst_json = as_value(&serialize_instance(&inst));
            let layout_json = as_value(&serialize_layout(&layout));
            match (out, layout_out) {
                (None, None) => emit(
                    None,
                    &json!({ "instance": inst_json, "layout": layout_json }),
                )?,
                _ => {
                    emit(out.as_deref(), &inst_json)?;
                    if let Some(path) = layout_out {
                        emit(Some(path), &layout_json)?;
                    }
                }
            }
        }
        GenKind::Harmonic { n, out } => {
            emit(
                out.as_deref(),
                &as_value(&serialize_instance(&harmonic_prefix(*n)?)),
            )?;
        }
        GenKind::Family {
            max_box,
            max_side,
            out,
        } => {
            if !(1..=8).contains(max_box) || !(1..=8).contains(max_side) {
                bail!("--max-box and --max-side must lie in 1..=8");
            }
            let all: Vec<Value> = enumerate_small_family(*max_box, *max_side)
                .map(|i| as_value(&serialize_instance(&i)))
                .collect();
            emit(out.as_deref(), &Value::Array(all))?;
        }
    }
    Ok(true)
}

fn default_layout_path(instance: &Path) -> PathBuf {
    let stem = instance
        .file_stem()
        .map_or("instance".into(), |s| s.to_string_lossy());
    instance.with_file_name(format!("{stem}.layout.json"))
}

fn cmd_solve(args: &SolveArgs, table: bool) -> Result<bool> {
    let inst = load_instance(&args.instance)?;
    let mode = match args.mode {
        ModeArg::Auto => Mode::for_instance(&inst),
        ModeArg::Fixed => Mode::FixedOrientation,
        ModeArg::Rotatable => Mode::Rotatable,
    };
    let cfg = SolveConfig {
        restarts: args.restarts,
        seed: effective_seed(args.seed)?,
        verify_tol: args.tol,
        max_iters: args.max_iters,
        ..SolveConfig::default()
    };
    let report = solve_multistart(&inst, &cfg, args.smax, mode)?;
    let verified = report.status == SolveStatus::ConvergedVerified;
    if verified {
        let path = args
            .out
            .clone()
            .unwrap_or_else(|| default_layout_path(&args.instance));
        write(&path, &serialize_layout(&report.best_layout))?;
    }
    if table {
        println!(
            "status          {}",
            serde_json::to_value(report.status)?.as_str().unwrap_or("?")
        );
        if let Some(reason) = &report.reason {
            println!("reason          {reason}");
        }
        println!("mode            {}", report.mode);
        println!("smax            {}", report.smax);
        println!("start index     {}", report.start_index);
        println!("iterations      {}", report.iterations_total);
        println!("residual (inf)  {:.3e}", report.final_residual_inf);
        println!("wall time       {:.3} s", report.wall_time.as_secs_f64());
    } else {
        print_json(&report)?;
    }
    Ok(verified)
}

#[derive(Serialize)]
struct VerifyOutput {
    #[serde(flatten)]
    report: VerificationReport,
    corner_cancellation: bool,
    max_moment_residual: f64,
    smax: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact: Option<bool>,
}

fn cmd_verify(args: &VerifyArgs, table: bool) -> Result<bool> {
    if !(args.tol >= 0.0 && args.tol.is_finite()) {
        bail!("--tol must be a non-negative number");
    }
    let inst_text = read(&args.instance)?;
    let layout_text = read(&args.layout)?;
    let inst = parse_instance(&inst_text)
        .with_context(|| format!("invalid instance {}", args.instance.display()))?;
    let layout = parse_layout(&layout_text)
        .with_context(|| format!("invalid layout {}", args.layout.display()))?;
    layout.check_cardinality(&inst)?;
    let report = verify_layout(&inst, &layout, args.tol)?;
    let smax = args.smax.unwrap_or_else(|| default_smax(4 * inst.len()));
    let exact = if args.exact {
        Some(verify_exact(
            &ExactInstance::parse(&inst_text)?,
            &ExactLayout::parse(&layout_text)?,
        )?)
    } else {
        None
    };
    let out = VerifyOutput {
        corner_cancellation: corner_cancellation(&layout, inst.bbox(), args.tol),
        max_moment_residual: moment_residual_of_layout(&inst, &layout, smax)?,
        smax,
        exact,
        report,
    };
    let pass = out.exact.unwrap_or(out.report.pass);
    if table {
        print_verify_table(&out, pass);
    } else {
        print_json(&out)?;
    }
    Ok(pass)
}

fn print_verify_table(out: &VerifyOutput, pass: bool) {
    let r = &out.report;
    println!(
        "verdict              {}",
        if pass { "PASS" } else { "FAIL" }
    );
    if let Some(exact) = out.exact {
        println!("exact                {exact}");
    }
    println!("tolerance            {:e}", r.tol);
    println!("area gap             {:.3e}", r.area_gap);
    println!("corner cancellation  {}", out.corner_cancellation);
    println!(
        "moment residual      {:.3e} (smax {})",
        out.max_moment_residual, out.smax
    );
    for (id, overhang) in &r.containment_violations {
        println!("containment          rect {id} overhangs by {overhang:.3e}");
    }
    for (i, j, area) in &r.overlap_violations {
        println!("overlap              rects {i} and {j} share area {area:.3e}");
    }
    for (id, sum_err, prod_err) in &r.size_violations {
        println!(
            "size                 rect {id} sum error {sum_err:.3e}, product error {prod_err:.3e}"
        );
    }
    for id in &r.orientation_violations {
        println!("orientation          rect {id} is turned");
    }
}

fn cmd_identities(n_trunc: usize, table: bool) -> Result<bool> {
    let mut rows = Vec::new();
    for id in IdentityId::ALL {
        let closed = harmonic::rhs_constant(id);
        let derived = rhs_derive(id, n_trunc)?;
        rows.push((id, closed, derived, (derived - closed).abs()));
    }
    if table {
        println!(
            "{:<14} {:<14} {:>20} {:>20} {:>10}",
            "id", "closed form", "closed value", "derived", "|diff|"
        );
        for (id, closed, derived, diff) in &rows {
            println!(
                "{:<14} {:<14} {closed:>20.15} {derived:>20.15} {diff:>10.2e}",
                id.name(),
                id.closed_form()
            );
        }
    } else {
        let list: Vec<Value> = rows
            .iter()
            .map(|(id, closed, derived, diff)| {
                json!({
                    "id": id.name(),
                    "closed_form": id.closed_form(),
                    "closed_value": closed,
                    "derived": derived,
                    "abs_diff": diff,
                })
            })
            .collect();
        print_json(&json!({ "n_trunc": n_trunc, "identities": list }))?;
    }
    Ok(true)
}

fn cmd_render(args: &RenderArgs) -> Result<bool> {
    if !(args.px_per_unit > 0.0 && args.px_per_unit.is_finite()) {
        bail!("--px-per-unit must be positive");
    }
    let inst = load_instance(&args.instance)?;
    let layout = load_layout(&args.layout)?;
    layout.check_cardinality(&inst)?;
    write(
        &args.out,
        &render::svg(&inst, &layout, args.px_per_unit, args.labels),
    )?;
    Ok(true)
}
