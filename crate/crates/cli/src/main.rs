use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use rpr2_core::fredholm::{self, fmt9, Problem, RatioConfig};
use rpr2_core::gapgen::{self, Rule};
use rpr2_core::stepopt::{self, StepSearchConfig};
use rpr2_core::{hardness, hermite, moments, pipeline, GridFunction, StepFunction};

/// Cells used to discretize the `slin:` shorthand.
const SLIN_CELLS: usize = 600;

#[derive(Parser, Debug)]
#[command(name = "rpr2", version, about = "RPR² rounding experiments for MAX NAE-SAT")]
struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, env = "RPR2_THREADS", default_value_t = 0)]
    threads: usize,

    /// Write the main result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Manifest path; defaults to `<out>.manifest.json`, or stderr without `--out`.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
enum Command {
    /// Approximation ratio of the best rounding function against hard distributions.
    Ratio(RatioArgs),
    /// Completeness/soundness curve (lower envelope over the (α, ρ) grid).
    Curve(CurveArgs),
    /// Hardness bounds.
    #[command(subcommand)]
    Bound(BoundCmd),
    /// Integrality-gap instances.
    #[command(subcommand)]
    Gap(GapCmd),
    /// Optimize step functions for a set of clause sizes.
    Stepopt(StepoptArgs),
    /// Add one breakpoint to a function and sweep its position.
    Sweep(SweepArgs),
    /// Hermite coefficient geometry.
    #[command(subcommand)]
    Hermite(HermiteCmd),
    /// Round a vector solution of an NAE instance.
    Round(RoundArgs),
    /// Numeric witnesses.
    #[command(subcommand)]
    Witness(WitnessCmd),
    /// Re-run the command recorded in a manifest.
    Replay {
        manifest: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
enum ProblemArg {
    Maxcut,
    Nae3,
}

impl From<ProblemArg> for Problem {
    fn from(p: ProblemArg) -> Self {
        match p {
            ProblemArg::Maxcut => Problem::MaxCut,
            ProblemArg::Nae3 => Problem::Nae3,
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct RatioArgs {
    #[arg(long, value_enum)]
    problem: ProblemArg,
    /// Cells of the refined solve.
    #[arg(long = "N", default_value_t = 600)]
    cells: usize,
    /// Points per axis of the coarse (α, ρ) grid.
    #[arg(long, default_value_t = 500)]
    grid: usize,
    /// Cells used on the coarse grid.
    #[arg(long, default_value_t = 100)]
    grid_cells: usize,
    #[arg(long, default_value_t = 3)]
    rounds: usize,
    /// Also write the optimal grid function as CSV.
    #[arg(long)]
    f_out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct CurveArgs {
    #[arg(long, value_enum)]
    problem: ProblemArg,
    #[arg(long, default_value_t = 60)]
    alphas: usize,
    #[arg(long, default_value_t = 60)]
    rhos: usize,
    #[arg(long = "N", default_value_t = 100)]
    cells: usize,
    /// Completeness buckets of the envelope.
    #[arg(long, default_value_t = 50)]
    buckets: usize,
}

#[derive(Subcommand, Debug, Serialize)]
enum BoundCmd {
    /// The MAX NAE-{3,5}-SAT bound 3(√21 − 4)/2.
    Nae35,
}

#[derive(Args, Debug, Serialize, Clone)]
struct GapParams {
    #[arg(long, default_value_t = 48)]
    n: usize,
    #[arg(long, default_value_t = 100_000)]
    m3: usize,
    #[arg(long, default_value_t = 100_000)]
    m5: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Debug, Serialize)]
enum GapCmd {
    /// Write the instance and its vector solution.
    Gen {
        #[command(flatten)]
        params: GapParams,
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        vectors: PathBuf,
    },
    /// Regenerate an instance and score an assignment rule on it.
    Eval {
        #[command(flatten)]
        params: GapParams,
        /// Rule probability for all-positive vectors (default: tuned).
        #[arg(long, requires = "p2")]
        p1: Option<f64>,
        #[arg(long, requires = "p1")]
        p2: Option<f64>,
        #[arg(long, default_value_t = 20)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        eval_seed: u64,
    },
}

#[derive(Args, Debug, Serialize)]
struct StepoptArgs {
    /// Clause sizes, comma separated.
    #[arg(long = "K", value_delimiter = ',', required = true)]
    ks: Vec<u32>,
    #[arg(long, default_value_t = 2)]
    steps: usize,
    /// Restrict values to ±1.
    #[arg(long)]
    pm1: bool,
    #[arg(long, default_value_t = 64)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Serialize)]
struct SweepArgs {
    /// Rounding function spec.
    #[arg(long)]
    base: String,
    #[arg(long = "K", value_delimiter = ',', required = true)]
    ks: Vec<u32>,
    /// `start:end:step`.
    #[arg(long, default_value = "3:10:0.01")]
    range: String,
}

#[derive(Subcommand, Debug, Serialize)]
enum HermiteCmd {
    /// Boundary of the (c₁, c₃) coefficient region.
    Boundary {
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 720)]
        angles: usize,
    },
}

#[derive(Args, Debug, Serialize)]
struct RoundArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    vectors: PathBuf,
    /// Rounding function spec.
    #[arg(long)]
    f: String,
    #[arg(long, default_value_t = 100)]
    rounds: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Debug, Serialize)]
enum WitnessCmd {
    /// Four vectors with positive biases where interval rounding has E[x₁x₂x₃x₄] < 0.
    F4neg {
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
        #[arg(long, default_value_t = 100_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
struct RunManifest {
    subcommand: String,
    /// Arguments as passed, for `replay`.
    argv: Vec<String>,
    params: Value,
    seeds: Vec<u64>,
    version: String,
    outputs: Vec<PathBuf>,
    started_unix: u64,
    wall_clock_secs: f64,
}

enum Failure {
    Usage(String),
    Numeric(String),
}

impl From<rpr2_core::Error> for Failure {
    fn from(e: rpr2_core::Error) -> Self {
        Failure::Numeric(e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// `slin:<s>`, `sign`, `zero`, inline JSON `{"a": [...], "b": [...]}`, or a path to such JSON.
fn parse_f_spec(spec: &str) -> CliResult<StepFunction> {
    if let Some(s) = spec.strip_prefix("slin:") {
        let slope: f64 = s.parse().map_err(|_| usage(format!("bad slope in {spec:?}")))?;
        if !(slope > 0.0 && slope.is_finite()) {
            return Err(usage(format!("slope must be positive, got {slope}")));
        }
        return Ok(GridFunction::slinear(SLIN_CELLS, slope)?.to_step_function()?);
    }
    match spec {
        "sign" => return Ok(StepFunction::sign()),
        "zero" => return Ok(StepFunction::zero()),
        _ => {}
    }
    let text = if spec.trim_start().starts_with('{') {
        spec.to_string()
    } else {
        fs::read_to_string(spec).map_err(|e| usage(format!("reading f spec {spec}: {e}")))?
    };
    serde_json::from_str::<StepFunction>(&text)
        .map_err(|e| usage(format!("bad rounding function: {e}")))
        .and_then(|f| StepFunction::new(f.breakpoints().to_vec(), f.values().to_vec()).map_err(|e| usage(e.to_string())))
}

fn parse_range(s: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| usage(format!("bad range {s:?}")))?;
    let [start, end, step] = parts[..] else {
        return Err(usage(format!("range {s:?} must be start:end:step")));
    };
    if !(step > 0.0 && start <= end && start.is_finite() && end.is_finite()) {
        return Err(usage(format!("bad range {s:?}")));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|i| start + step * i as f64).collect())
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| usage(format!("reading {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| Failure::Numeric(format!("writing {}: {e}", path.display())))
}

/// Serializes with every float rounded to nine significant digits.
fn round9(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap();
            fmt9(x).parse::<f64>().ok().and_then(serde_json::Number::from_f64).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round9).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round9(v))).collect()),
        other => other,
    }
}

fn to_json(v: Value) -> String {
    serde_json::to_string_pretty(&round9(v)).expect("json values serialize") + "\n"
}

fn estimate(e: &rpr2_core::MomentEstimate) -> Value {
    json!({"value": e.value, "std_error": e.std_error, "samples": e.samples})
}

struct Output {
    text: String,
    extra_files: Vec<PathBuf>,
    seeds: Vec<u64>,
}

impl Output {
    fn new(text: String) -> Self {
        Self { text, extra_files: vec![], seeds: vec![] }
    }
}

fn run_ratio(a: &RatioArgs) -> CliResult<Output> {
    let cfg = RatioConfig { grid: a.grid, grid_cells: a.grid_cells, rounds: a.rounds, cells: a.cells, ..Default::default() };
    let r = fredholm::approx_ratio(a.problem.into(), &cfg)?;
    let fit = fredholm::slinear_fit(&r.solution.f)?;
    let mut out = Output::new(to_json(json!({
        "problem": r.problem.to_string(),
        "ratio": r.ratio,
        "alpha": r.alpha,
        "rho": r.rho,
        "rho0_variant": r.variant.map(|v| v.to_string()),
        "grid_ratio": r.grid_ratio,
        "cells": a.cells,
        "lambda": r.solution.lambda,
        "residual": r.solution.residual,
        "soundness": r.solution.soundness,
        "completeness": r.solution.completeness,
        "consistent": r.solution.consistent,
        "slinear": {"slope": fit.slope, "max_deviation": fit.max_deviation, "interior_cells": fit.interior_cells},
    })));
    if let Some(p) = &a.f_out {
        write(p, &fredholm::grid_function_csv(&r.solution.f)?)?;
        out.extra_files.push(p.clone());
    }
    Ok(out)
}

fn run_curve(a: &CurveArgs) -> CliResult<Output> {
    if a.alphas == 0 || a.rhos == 0 || a.buckets == 0 {
        return Err(usage("--alphas, --rhos and --buckets must be positive"));
    }
    let alphas: Vec<f64> = (1..=a.alphas).map(|i| i as f64 / a.alphas as f64).collect();
    let rhos: Vec<f64> = (0..a.rhos).map(|i| -1.0 + i as f64 / a.rhos as f64).collect();
    let pts = fredholm::curve(a.problem.into(), &alphas, &rhos, a.cells, a.buckets)?;
    Ok(Output::new(fredholm::curve_csv(&pts)))
}

fn run_bound() -> CliResult<Output> {
    let b = hardness::nae35_bound()?;
    Ok(Output::new(to_json(json!({
        "bound": b.bound,
        "p_star": b.p_star,
        "f2_star": b.f2_star,
        "residual": b.residual,
    }))))
}

fn run_gap(cmd: &GapCmd) -> CliResult<Output> {
    match cmd {
        GapCmd::Gen { params: g, instance, vectors } => {
            let inst = gapgen::gen_gap_instance(g.n, g.m3, g.m5, g.seed)?;
            inst.verify_biases()?;
            let (nae, vars) = inst.to_nae();
            write(instance, &nae.to_text())?;
            write(vectors, &gapgen::vectors_text(g.n, &vars))?;
            let mut out = Output::new(to_json(json!({
                "n": g.n,
                "variables": vars.len(),
                "three_clauses": inst.three.len(),
                "five_clauses": inst.five.len(),
                "total_weight": inst.total_weight(),
                "five_clause_weight": gapgen::five_clause_weight(),
                "biases_verified": true,
                "instance": instance,
                "vectors": vectors,
            })));
            out.extra_files = vec![instance.clone(), vectors.clone()];
            out.seeds = vec![g.seed];
            Ok(out)
        }
        GapCmd::Eval { params: g, p1, p2, trials, eval_seed } => {
            let inst = gapgen::gen_gap_instance(g.n, g.m3, g.m5, g.seed)?;
            let rule = match (p1, p2) {
                (Some(p1), Some(p2)) => Rule::Probabilistic { p1: *p1, p2: *p2 },
                _ => Rule::tuned(),
            };
            let e = gapgen::evaluate_gap(&inst, &rule, *trials, *eval_seed)?;
            let (p1, p2) = match rule {
                Rule::Probabilistic { p1, p2 } => (p1, p2),
                Rule::Map(_) => unreachable!("the CLI only builds probabilistic rules"),
            };
            let mut out = Output::new(to_json(json!({
                "p1": p1,
                "p2": p2,
                "fraction": e.fraction,
                "std_error": e.std_error,
                "trials": e.trials,
                "f2": estimate(&e.f2),
                "f4": estimate(&e.f4),
                "predicted": e.predicted,
                "target": hardness::nae35_bound()?.bound,
            })));
            out.seeds = vec![g.seed, *eval_seed];
            Ok(out)
        }
    }
}

fn run_stepopt(a: &StepoptArgs) -> CliResult<Output> {
    let mut cfg = StepSearchConfig::new(a.ks.clone(), a.steps, a.pm1);
    cfg.restarts = a.restarts;
    cfg.seed = a.seed;
    let r = stepopt::optimize_step(&cfg)?;
    let nbp = a.steps - 1;
    let mut header = vec!["K".to_string(), "steps".into(), "pm1".into(), "objective".into()];
    header.extend((1..=nbp).map(|i| format!("a_{i}")));
    header.extend((0..=nbp).map(|i| format!("b_{i}")));
    header.extend(r.per_k.iter().map(|(k, _)| format!("alpha_{k}")));
    let ks: Vec<String> = a.ks.iter().map(u32::to_string).collect();
    let mut row = vec![ks.join(" "), a.steps.to_string(), a.pm1.to_string(), fmt9(r.objective)];
    row.extend(r.f.breakpoints().iter().map(|&x| fmt9(x)));
    row.extend(r.f.values().iter().map(|&x| fmt9(x)));
    row.extend(r.per_k.iter().map(|&(_, v)| fmt9(v)));
    let mut out = Output::new(format!("{}\n{}\n", header.join(","), row.join(",")));
    out.seeds = vec![a.seed];
    Ok(out)
}

fn run_sweep(a: &SweepArgs) -> CliResult<Output> {
    let f = parse_f_spec(&a.base)?;
    let positions = parse_range(&a.range)?;
    let rows = stepopt::breakpoint_sweep(&f, &positions, &a.ks)?;
    let mut s = String::from("a");
    for k in &a.ks {
        s.push_str(&format!(",alpha_{k}"));
    }
    s.push('\n');
    for r in rows {
        s.push_str(&fmt9(r.a));
        for v in r.alphas {
            s.push(',');
            s.push_str(&fmt9(v));
        }
        s.push('\n');
    }
    Ok(Output::new(s))
}

fn run_hermite(cmd: &HermiteCmd) -> CliResult<Output> {
    let HermiteCmd::Boundary { k, angles } = cmd;
    if *k != 2 {
        return Err(usage(format!("only --k 2 (the (c1, c3) plane) is supported, got {k}")));
    }
    Ok(Output::new(hermite::boundary_csv(&hermite::p2_boundary(*angles)?)))
}

fn run_round(a: &RoundArgs) -> CliResult<Output> {
    let f = parse_f_spec(&a.f)?;
    let inst = pipeline::parse_instance(&read(&a.instance)?).map_err(|e| usage(format!("{}: {e}", a.instance.display())))?;
    let vecs = pipeline::parse_vectors(&read(&a.vectors)?).map_err(|e| usage(format!("{}: {e}", a.vectors.display())))?;
    let r = pipeline::best_of_rounds(&inst, &vecs, &f, a.rounds, a.seed)?;
    let mut out = Output::new(to_json(json!({
        "fraction": r.best_fraction,
        "mean": r.mean(),
        "std_error": r.std_error(),
        "baseline": pipeline::random_baseline(&inst),
        "rounds": a.rounds,
        "seed": a.seed,
        "f_spec": a.f,
    })));
    out.seeds = vec![a.seed];
    Ok(out)
}

fn run_witness(cmd: &WitnessCmd) -> CliResult<Output> {
    let WitnessCmd::F4neg { delta, eps, samples, seed } = cmd;
    let w = moments::f4_negative_witness(*delta, *eps, *samples, *seed)?;
    let z99 = 2.326;
    let mut out = Output::new(to_json(json!({
        "delta": w.delta,
        "eps": w.eps,
        "bias_first": w.bias_first,
        "bias_rest": w.bias_rest,
        "bias_error": w.bias_error,
        "f4": estimate(&w.estimate),
        "upper_99": w.estimate.upper_bound(z99),
        "negative_at_99": w.estimate.upper_bound(z99) < 0.0,
    })));
    out.seeds = vec![*seed];
    Ok(out)
}

fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::Ratio(_) => "ratio",
        Command::Curve(_) => "curve",
        Command::Bound(_) => "bound nae35",
        Command::Gap(GapCmd::Gen { .. }) => "gap gen",
        Command::Gap(GapCmd::Eval { .. }) => "gap eval",
        Command::Stepopt(_) => "stepopt",
        Command::Sweep(_) => "sweep",
        Command::Hermite(_) => "hermite boundary",
        Command::Round(_) => "round",
        Command::Witness(_) => "witness f4neg",
        Command::Replay { .. } => "replay",
    }
}

fn execute(cli: Cli, argv: Vec<String>) -> CliResult<()> {
    if let Command::Replay { manifest } = &cli.command {
        let m: RunManifest =
            serde_json::from_str(&read(manifest)?).map_err(|e| usage(format!("bad manifest {}: {e}", manifest.display())))?;
        let mut inner = Cli::try_parse_from(&m.argv).map_err(|e| usage(e.to_string()))?;
        if matches!(inner.command, Command::Replay { .. }) {
            return Err(usage("a manifest cannot replay another replay"));
        }
        if cli.out.is_some() {
            inner.out = cli.out;
        }
        if cli.manifest.is_some() {
            inner.manifest = cli.manifest;
        }
        inner.threads = cli.threads;
        return execute(inner, m.argv);
    }

    if cli.threads > 0 {
        // fails only if a pool exists already, which is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    let started = Instant::now();
    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let out = match &cli.command {
        Command::Ratio(a) => run_ratio(a)?,
        Command::Curve(a) => run_curve(a)?,
        Command::Bound(BoundCmd::Nae35) => run_bound()?,
        Command::Gap(c) => run_gap(c)?,
        Command::Stepopt(a) => run_stepopt(a)?,
        Command::Sweep(a) => run_sweep(a)?,
        Command::Hermite(c) => run_hermite(c)?,
        Command::Round(a) => run_round(a)?,
        Command::Witness(c) => run_witness(c)?,
        Command::Replay { .. } => unreachable!(),
    };

    let mut outputs = Vec::new();
    match &cli.out {
        Some(p) => {
            write(p, &out.text)?;
            outputs.push(p.clone());
        }
        None => print!("{}", out.text),
    }
    outputs.extend(out.extra_files);
    let manifest = RunManifest {
        subcommand: subcommand_name(&cli.command).to_string(),
        argv,
        params: serde_json::to_value(&cli.command).expect("arguments serialize"),
        seeds: out.seeds,
        version: env!("CARGO_PKG_VERSION").to_string(),
        outputs,
        started_unix,
        wall_clock_secs: started.elapsed().as_secs_f64(),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    let path = cli.manifest.clone().or_else(|| {
        cli.out.as_ref().map(|p| {
            let mut s = p.clone().into_os_string();
            s.push(".manifest.json");
            PathBuf::from(s)
        })
    });
    match path {
        Some(p) => write(&p, &text)?,
        None => eprint!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Numeric(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
