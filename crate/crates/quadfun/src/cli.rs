//! The `quadfun` command line. Machine output (JSON, CSV) goes to stdout or
//! files; human-readable tables go to stderr.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 infinite estimand or
//! rate.

use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use quadfun_core::densities::{exact_norms, Regime};
use quadfun_core::estimators::{
    distance_sq, inner_product_from_samples, norm_sq, select_zeta_closed_form, select_zeta_lecam,
};
use quadfun_core::harness::run_worst_case_sweep;
use quadfun_core::theory::{
    bias_bound, format_rate, lower_bound_rate, minimax_rate, mse_bound, variance_terms, BoundMode,
    Norms,
};
use quadfun_core::{EstimateReport, SampleSet};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::io::{
    json_num, read_density, read_samples, read_samples_from, round9, write_results, ExperimentFile,
};
use crate::parallel::{run_mse_study_parallel, threads_from_env};
use crate::spec::parse_weight_spec;

#[derive(Debug, Parser)]
#[command(
    name = "quadfun",
    version,
    about = "Estimate quadratic Fourier functionals of distributions on the torus"
)]
#[command(color = clap::ColorChoice::Never)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate an inner product, squared norm or squared distance from samples
    Estimate(EstimateArgs),
    /// Print the minimax rate for a pair of weight nets
    Rates(RatesArgs),
    /// Evaluate the bias, variance and MSE bounds for given norms
    Bounds(BoundsArgs),
    /// Solve for the truncation radius
    SolveZeta(SolveZetaArgs),
    /// Lower bound on the minimax MSE and a sweep of worst-case densities
    Lowerbound(LowerboundArgs),
    /// Run a Monte Carlo MSE study from a JSON config
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    Inner,
    Norm,
    Distance,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RegimeArg {
    Smooth,
    Unsmooth,
}

impl From<RegimeArg> for Regime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::Smooth => Regime::Smooth,
            RegimeArg::Unsmooth => Regime::Unsmooth,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Product,
    Norm,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SolveRule {
    Lecam,
    ClosedForm,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// Functional to estimate
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Weight spec `kind[:param][@rule]`, e.g. sobolev:1.5 or constant@exclude_origin
    #[arg(long)]
    weights: String,
    /// Truncation: an integer radius, `closed-form` or `lecam` (both need --b)
    #[arg(long)]
    zeta: String,
    /// Smoothness net used by the closed-form and lecam truncation rules
    #[arg(long)]
    b: Option<String>,
    /// CSV of samples from P, one point per row; `-` reads stdin
    #[arg(long)]
    samples_x: PathBuf,
    /// CSV of samples from Q (required for inner and distance)
    #[arg(long)]
    samples_y: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RatesArgs {
    /// Estimand weight spec
    #[arg(long)]
    a: String,
    /// Smoothness weight spec
    #[arg(long)]
    b: String,
    /// Dimension of the torus
    #[arg(short = 'D', long = "dimension")]
    dimension: usize,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    /// Estimand weight spec
    #[arg(long)]
    a: String,
    /// Smoothness weight spec
    #[arg(long)]
    b: String,
    /// Dimension of the torus
    #[arg(short = 'D', long = "dimension")]
    dimension: usize,
    /// Truncation radius
    #[arg(long)]
    zeta: u64,
    /// Sample size
    #[arg(long)]
    n: u64,
    /// Product bound for two distributions or norm bound with Q = P
    #[arg(long, value_enum, default_value = "product")]
    mode: ModeArg,
    /// Density fixture (JSON) for P; its exact norms replace the norm flags
    #[arg(long)]
    p: Option<PathBuf>,
    /// Density fixture for Q, defaults to P
    #[arg(long)]
    q: Option<PathBuf>,
    /// Value for every norm not set individually
    #[arg(long, default_value_t = 1.0)]
    norm: f64,
    /// L2 norm of P
    #[arg(long)]
    l2_p: Option<f64>,
    /// L2 norm of Q
    #[arg(long)]
    l2_q: Option<f64>,
    /// b-norm of P
    #[arg(long)]
    b_p: Option<f64>,
    /// b-norm of Q
    #[arg(long)]
    b_q: Option<f64>,
    /// a-norm of P
    #[arg(long)]
    a_p: Option<f64>,
    /// a-norm of Q
    #[arg(long)]
    a_q: Option<f64>,
}

#[derive(Debug, Args)]
struct SolveZetaArgs {
    /// Smoothness weight spec
    #[arg(long)]
    b: String,
    /// Estimand weight spec, needed by the closed-form rule
    #[arg(long)]
    a: Option<String>,
    /// Dimension of the torus
    #[arg(short = 'D', long = "dimension")]
    dimension: usize,
    /// Sample size
    #[arg(long)]
    n: u64,
    /// Truncation rule
    #[arg(long, value_enum, default_value = "lecam")]
    rule: SolveRule,
}

#[derive(Debug, Args)]
struct LowerboundArgs {
    /// Estimand weight spec
    #[arg(long)]
    a: String,
    /// Smoothness weight spec
    #[arg(long)]
    b: String,
    /// Dimension of the torus
    #[arg(short = 'D', long = "dimension")]
    dimension: usize,
    /// Sample size
    #[arg(long)]
    n: u64,
    /// Smallest truncation radius in the sweep
    #[arg(long, default_value_t = 1)]
    zeta_min: u64,
    /// Largest truncation radius in the sweep
    #[arg(long, default_value_t = 12)]
    zeta_max: u64,
    /// Worst-case construction to sweep
    #[arg(long, value_enum, default_value = "smooth")]
    regime: RegimeArg,
    /// Seed for the random sign patterns
    #[arg(long, default_value_t = 0)]
    tau_seed: u64,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Experiment config (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Results CSV; a JSON sidecar is written next to it
    #[arg(long, default_value = "results.csv")]
    out: PathBuf,
    /// Worker threads, 0 for automatic (overrides QUADFUN_THREADS)
    #[arg(long)]
    threads: Option<usize>,
}

/// Parses `argv` (program name first) and runs one subcommand.
pub fn run_cli<I, T>(
    argv: I,
    stdin: &mut dyn Read,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    1
                }
            };
        }
    };
    let mut out = Output {
        stdout,
        stderr,
        code: 0,
    };
    match run(cli.command, stdin, &mut out) {
        Ok(()) => out.code,
        Err(e) => {
            let _ = writeln!(out.stderr, "error: {e}");
            e.exit_code()
        }
    }
}

struct Output<'a> {
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
    code: i32,
}

impl Output<'_> {
    fn json(&mut self, v: &Value) -> Result<()> {
        let text = serde_json::to_string_pretty(v).expect("json");
        writeln!(self.stdout, "{text}").map_err(|e| Error::io("<stdout>", e))
    }

    fn human(&mut self, line: impl AsRef<str>) {
        let _ = writeln!(self.stderr, "{}", line.as_ref());
    }
}

fn run(command: Command, stdin: &mut dyn Read, out: &mut Output<'_>) -> Result<()> {
    match command {
        Command::Estimate(args) => estimate(args, stdin, out),
        Command::Rates(args) => rates(args, out),
        Command::Bounds(args) => bounds(args, out),
        Command::SolveZeta(args) => solve_zeta(args, out),
        Command::Lowerbound(args) => lowerbound(args, out),
        Command::Experiment(args) => experiment(args, out),
    }
}

fn load_samples(path: &Path, dimension: Option<usize>, stdin: &mut dyn Read) -> Result<SampleSet> {
    if path == Path::new("-") {
        read_samples_from(stdin, Path::new("<stdin>"), dimension)
    } else {
        read_samples(path, dimension)
    }
}

fn split_error(e: quadfun_core::Error) -> Error {
    match e {
        quadfun_core::Error::SampleSize { needed: 2, .. } => Error::SplitSampleSize,
        e => e.into(),
    }
}

fn estimate(args: EstimateArgs, stdin: &mut dyn Read, out: &mut Output<'_>) -> Result<()> {
    let x = load_samples(&args.samples_x, None, stdin)?;
    let d = x.dimension();
    let y = match &args.samples_y {
        Some(path) => Some(load_samples(path, Some(d), stdin)?),
        None => None,
    };
    let a = parse_weight_spec(&args.weights, d)?;
    let n = y.as_ref().map_or(x.len(), |y| x.len().min(y.len())) as u64;
    let zeta = match args.zeta.as_str() {
        "closed-form" | "lecam" => {
            let b = args
                .b
                .as_deref()
                .ok_or_else(|| Error::Usage(format!("--zeta {} needs --b", args.zeta)))?;
            let b = parse_weight_spec(b, d)?;
            if n == 0 {
                return Err(quadfun_core::Error::SampleSize { needed: 1, got: 0 }.into());
            }
            if args.zeta == "lecam" {
                select_zeta_lecam(&b, n, d)?.zeta
            } else {
                select_zeta_closed_form(a.kind(), b.kind(), d, n)?
            }
        }
        s => s.parse::<u64>().map_err(|_| {
            Error::Usage(format!(
                "--zeta must be an integer, `closed-form` or `lecam`, not `{s}`"
            ))
        })?,
    };
    let set = a.truncation_set(zeta, d)?;
    let need_y = || {
        y.as_ref()
            .ok_or_else(|| Error::Usage("--samples-y is required for this kind".into()))
    };
    let report = match args.kind {
        KindArg::Inner => inner_product_from_samples(&x, need_y()?, &a, &set)?,
        KindArg::Norm => norm_sq(&x, &a, &set).map_err(split_error)?,
        KindArg::Distance => distance_sq(&x, need_y()?, &a, &set).map_err(split_error)?,
    };
    let report = EstimateReport {
        value: round9(report.value),
        imaginary_residual: round9(report.imaginary_residual),
        ..report
    };
    out.human(format!(
        "{:?} = {} (zeta {}, {} terms)",
        report.kind, report.value, report.truncation, report.term_count
    ));
    out.json(&serde_json::to_value(report).expect("json"))
}

fn rates(args: RatesArgs, out: &mut Output<'_>) -> Result<()> {
    let a = parse_weight_spec(&args.a, args.dimension)?;
    let b = parse_weight_spec(&args.b, args.dimension)?;
    let rate = minimax_rate(a.kind(), b.kind(), args.dimension)?;
    let text = format_rate(&rate);
    out.human(format!(
        "a = {a}, b = {b}, D = {}: {text} ({})",
        args.dimension,
        rate.regime.name()
    ));
    out.json(&json!({
        "a": a.to_string(),
        "b": b.to_string(),
        "dimension": args.dimension,
        "exponent": json_num(rate.exponent),
        "regime": rate.regime.name(),
        "scale": rate.scale,
        "rate": text,
        "note": rate.log_factor_note,
    }))?;
    if rate.is_inconsistent() {
        out.code = 3;
    }
    Ok(())
}

fn bounds(args: BoundsArgs, out: &mut Output<'_>) -> Result<()> {
    let d = args.dimension;
    let a = parse_weight_spec(&args.a, d)?;
    let b = parse_weight_spec(&args.b, d)?;
    let norms = match &args.p {
        Some(p_path) => {
            let p = read_density(p_path)?;
            let q = match &args.q {
                Some(q_path) => read_density(q_path)?,
                None => p.clone(),
            };
            exact_norms(&p, &q, &a, &b)?
        }
        None => {
            if args.q.is_some() {
                return Err(Error::Usage("--q needs --p".into()));
            }
            let v = args.norm;
            Norms {
                l2_p: args.l2_p.unwrap_or(v),
                l2_q: args.l2_q.unwrap_or(v),
                b_p: args.b_p.unwrap_or(v),
                b_q: args.b_q.unwrap_or(v),
                a_p: args.a_p.unwrap_or(v),
                a_q: args.a_q.unwrap_or(v),
            }
        }
    };
    let mode = match args.mode {
        ModeArg::Product => BoundMode::Product,
        ModeArg::Norm => BoundMode::Norm,
    };
    let effective = match mode {
        BoundMode::Product => norms,
        BoundMode::Norm => norms.collapsed(),
    };
    let set = a.truncation_set(args.zeta, d)?;
    let bias = bias_bound(effective.b_p, effective.b_q, &a, &b, args.zeta, d)?;
    if bias.is_infinite() {
        out.human(format!(
            "a = {a}, b = {b}: inconsistent pair, bias and MSE are infinite"
        ));
        out.json(&json!({ "zeta": args.zeta, "n": args.n, "mode": mode, "bias": "INF", "variance": null, "mse": "INF" }))?;
        out.code = 3;
        return Ok(());
    }
    let var = variance_terms(&effective, &a, &b, &set, args.n)?;
    let mse = mse_bound(&norms, &a, &b, &set, args.zeta, args.n, mode)?;
    out.human(format!(
        "bias <= {}  variance <= {}  mse <= {}",
        json_num(bias),
        json_num(var.total()),
        json_num(mse)
    ));
    out.json(&json!({
        "zeta": args.zeta,
        "n": args.n,
        "mode": mode,
        "norms": {
            "l2_p": json_num(effective.l2_p), "l2_q": json_num(effective.l2_q),
            "b_p": json_num(effective.b_p), "b_q": json_num(effective.b_q),
            "a_p": json_num(effective.a_p), "a_q": json_num(effective.a_q),
        },
        "bias": json_num(bias),
        "variance": {
            "quadratic": json_num(var.quadratic),
            "cross": json_num(var.cross),
            "linear": json_num(var.linear),
            "total": json_num(var.total()),
        },
        "mse": json_num(mse),
    }))
}

fn solve_zeta(args: SolveZetaArgs, out: &mut Output<'_>) -> Result<()> {
    let d = args.dimension;
    let b = parse_weight_spec(&args.b, d)?;
    let v = match args.rule {
        SolveRule::Lecam => {
            let sol = select_zeta_lecam(&b, args.n, d)?;
            json!({
                "rule": "lecam",
                "zeta": sol.zeta,
                "strength": json_num(sol.strength),
                "monotone": sol.monotone,
            })
        }
        SolveRule::ClosedForm => {
            let a = args
                .a
                .as_deref()
                .ok_or_else(|| Error::Usage("--rule closed-form needs --a".into()))?;
            let a = parse_weight_spec(a, d)?;
            json!({ "rule": "closed_form", "zeta": select_zeta_closed_form(a.kind(), b.kind(), d, args.n)? })
        }
    };
    out.human(format!("zeta = {}", v["zeta"]));
    out.json(&v)
}

fn sweep_grid(lo: u64, hi: u64) -> Result<Vec<u64>> {
    if lo == 0 || lo > hi {
        return Err(Error::Usage(format!("bad truncation range {lo}..={hi}")));
    }
    Ok((lo..=hi).collect())
}

fn lowerbound(args: LowerboundArgs, out: &mut Output<'_>) -> Result<()> {
    let d = args.dimension;
    let a = parse_weight_spec(&args.a, d)?;
    let b = parse_weight_spec(&args.b, d)?;
    let lb = lower_bound_rate(&a, &b, args.n, d)?;
    let grid = sweep_grid(args.zeta_min, args.zeta_max)?;
    let rows = run_worst_case_sweep(&b, &a, d, &grid, args.n, args.regime.into(), args.tau_seed)?;
    out.human(format!(
        "lower bound {} ({} branch, zeta {})",
        json_num(lb.value),
        lb.branch.name(),
        lb.zeta
    ));
    out.human("zeta  valid  alt  random        c           gap          tv");
    for r in &rows {
        out.human(format!(
            "{:>4}  {:>5}  {:>3}  {:>2}/{:<2}  {:>11}  {:>11}  {:>11}",
            r.zeta,
            r.valid,
            if r.valid_alternating { "yes" } else { "no" },
            r.valid_random,
            quadfun_core::harness::RANDOM_SIGN_DRAWS,
            json_num(r.c).to_string(),
            json_num(r.gap).to_string(),
            json_num(r.tv_bound).to_string(),
        ));
    }
    let sweep: Vec<Value> = rows
        .iter()
        .map(|r| {
            json!({
                "zeta": r.zeta,
                "regime": r.regime.name(),
                "valid": r.valid,
                "valid_alternating": r.valid_alternating,
                "valid_random": r.valid_random,
                "c": json_num(r.c),
                "analytic_level": json_num(r.analytic_level),
                "gap": json_num(r.gap),
                "tv_bound": json_num(r.tv_bound),
                "claims_hold": r.claims_hold,
                "error": r.error,
            })
        })
        .collect();
    out.json(&json!({
        "n": args.n,
        "lower_bound": {
            "value": json_num(lb.value),
            "branch": lb.branch.name(),
            "zeta": lb.zeta,
            "a_sum": json_num(lb.a_sum),
            "b_sum": json_num(lb.b_sum),
            "monotone": lb.monotone,
        },
        "sweep": sweep,
    }))
}

fn experiment(args: ExperimentArgs, out: &mut Output<'_>) -> Result<()> {
    let file = ExperimentFile::read(&args.config)?;
    let base = args.config.parent().unwrap_or(Path::new("."));
    let config = file.to_config(base)?;
    let threads = args.threads.filter(|&t| t > 0).or_else(|| {
        if args.threads.is_some() {
            None
        } else {
            threads_from_env()
        }
    });
    let result = run_mse_study_parallel(&config, threads)?;
    let echo = serde_json::to_value(&file).expect("json");
    let sidecar = write_results(&args.out, &result, &echo)?;
    out.human("        n  zeta           mse    mse_stderr");
    for r in &result.rows {
        out.human(format!(
            "{:>9}  {:>4}  {:>12}  {:>12}",
            r.n,
            r.zeta,
            json_num(r.mse).to_string(),
            json_num(r.mse_stderr).to_string()
        ));
    }
    let fit = result.fit.map(|f| json!({ "slope": json_num(f.slope), "slope_stderr": json_num(f.slope_stderr), "intercept": json_num(f.intercept) }));
    out.json(&json!({
        "csv": args.out,
        "sidecar": sidecar,
        "rows": result.rows.len(),
        "fit": fit,
    }))
}
