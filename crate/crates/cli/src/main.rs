use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use num_bigint::BigUint;

use mcfil::attack::{
    export_benchmarks, first_query_leakage, plot_data, run_attack_with, trace_csv, trace_json, AttackConfig,
    AttackState, BruteForcePolicy, Status, MANIFEST_FILE,
};
use mcfil::counting::ApproxParams;
use mcfil::functionalities::{by_name, random_bits, Functionality};
use mcfil::oracle::{parse_hex, serve, LocalOracle, Oracle, SubprocessOracle};
use mcfil::rng;
use mcfil::sat::Backend;

const EXIT_ERROR: u8 = 1;
const EXIT_BRUTE_FORCE: u8 = 2;
const EXIT_EXHAUSTED: u8 = 3;
const EXIT_USAGE: u8 = 64;

/// Largest target width accepted with --exact-trace.
const EXACT_TRACE_MAX_WIDTH: u32 = 10;

#[derive(Parser)]
#[command(
    name = "mcfil",
    version,
    about = "Measure what a two-party functionality leaks about the other party's input"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the adaptive attack against a hidden target or an external oracle.
    Attack(RunArgs),
    /// Analyse the first query only: outcomes, selection and per-answer leakage.
    Leakage(LeakageArgs),
    /// Run an attack and write every iteration's synthesis instance as DIMACS.
    Export(ExportArgs),
    /// Answer oracle queries for a fixed target on stdin/stdout.
    Serve(ServeArgs),
}

#[derive(Args, Clone)]
struct FuncArgs {
    /// Built-in functionality name.
    #[arg(long, env = "MCFIL_FUNC")]
    func: String,
    #[arg(long, env = "MCFIL_WIDTH")]
    width: Option<u32>,
    /// Functionality parameter, e.g. --param dim=4. Repeatable.
    #[arg(long = "param", value_name = "K=V", env = "MCFIL_PARAM", value_delimiter = ',', value_parser = parse_param)]
    params: Vec<(String, u64)>,
    /// Bucket size for bucketed_mean.
    #[arg(long, env = "MCFIL_BUCKET")]
    bucket: Option<u64>,
}

#[derive(Args, Clone)]
struct SolveArgs {
    #[arg(long, env = "MCFIL_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "MCFIL_EPSILON", default_value_t = 0.8)]
    epsilon: f64,
    #[arg(long, env = "MCFIL_DELTA", default_value_t = 0.2)]
    delta: f64,
    /// Upper bound on parallel solver and counting jobs.
    #[arg(long, env = "MCFIL_WORKERS", default_value_t = 1)]
    workers: usize,
    /// `builtin`, or `ext:<command>` with {cnf_path} in the command.
    #[arg(long, env = "MCFIL_BACKEND", default_value = "builtin")]
    backend: String,
    /// Copies of the query circuit per outcome class during synthesis.
    #[arg(long, env = "MCFIL_REPLICAS")]
    replicas: Option<usize>,
}

#[derive(Args, Clone)]
#[group(required = true, multiple = false)]
struct TargetArgs {
    /// Hidden target in hex.
    #[arg(long, env = "MCFIL_TARGET")]
    target: Option<String>,
    /// Draw the hidden target from the seed.
    #[arg(long, env = "MCFIL_TARGET_RANDOM")]
    target_random: bool,
    /// Command speaking the hex line protocol.
    #[arg(long, env = "MCFIL_ORACLE_CMD")]
    oracle_cmd: Option<String>,
}

#[derive(Args, Clone)]
struct RunArgs {
    #[command(flatten)]
    func: FuncArgs,
    #[command(flatten)]
    solve: SolveArgs,
    #[command(flatten)]
    target: TargetArgs,
    /// Query budget; defaults to four times the target width.
    #[arg(long, env = "MCFIL_MAX_ITERS")]
    max_iters: Option<usize>,
    #[arg(long, env = "MCFIL_ON_BRUTEFORCE", default_value = "stop")]
    on_bruteforce: BruteForcePolicy,
    /// CSV trace, or JSON if the path ends in .json. Plot data goes next to it as .dat.
    #[arg(long, env = "MCFIL_TRACE")]
    trace: Option<PathBuf>,
    #[arg(long, env = "MCFIL_EXPORT_CNF")]
    export_cnf: Option<PathBuf>,
    /// Count survivors exactly (small widths only).
    #[arg(long, env = "MCFIL_EXACT_TRACE")]
    exact_trace: bool,
    /// Write zero elapsed times so traces depend only on the inputs.
    #[arg(long, env = "MCFIL_DETERMINISTIC_TRACE")]
    deterministic_trace: bool,
}

#[derive(Args)]
struct LeakageArgs {
    #[command(flatten)]
    func: FuncArgs,
    #[command(flatten)]
    solve: SolveArgs,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Output directory.
    #[arg(long, env = "MCFIL_OUT")]
    out: PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    #[command(flatten)]
    func: FuncArgs,
    #[arg(long)]
    target: String,
}

/// A configuration problem, reported with the usage exit code.
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn parse_param(s: &str) -> Result<(String, u64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected K=V, got {s:?}"))?;
    let v = v
        .trim()
        .parse()
        .map_err(|_| format!("parameter {k} needs an unsigned integer, got {v:?}"))?;
    Ok((k.trim().to_string(), v))
}

impl FuncArgs {
    fn build(&self) -> Result<Functionality> {
        let mut p: BTreeMap<String, u64> = self.params.iter().cloned().collect();
        if let Some(b) = self.bucket {
            p.insert("bucket".into(), b);
        }
        by_name(&self.func, self.width, &p).map_err(|e| usage(e.to_string()))
    }
}

impl SolveArgs {
    fn config(&self) -> Result<AttackConfig> {
        if self.workers == 0 {
            return Err(usage("--workers must be at least 1"));
        }
        let mut cfg = AttackConfig::default().with_seed(self.seed);
        cfg.solver.backend = Backend::parse(&self.backend).map_err(|e| usage(e.to_string()))?;
        cfg.approx = ApproxParams {
            epsilon: self.epsilon,
            delta: self.delta,
        };
        cfg.approx.validate().map_err(|e| usage(e.to_string()))?;
        cfg.workers = self.workers;
        if let Some(r) = self.replicas {
            cfg.replicas = r;
        }
        // rayon's global pool bounds every parallel job in the analysis
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build_global()
            .context("configuring worker pool")?;
        Ok(cfg)
    }
}

impl RunArgs {
    fn config(&self, func: &Functionality) -> Result<AttackConfig> {
        let mut cfg = self.solve.config()?;
        cfg.max_iters = self.max_iters;
        cfg.on_bruteforce = self.on_bruteforce;
        cfg.deterministic = self.deterministic_trace;
        if self.exact_trace {
            if func.target_width() > EXACT_TRACE_MAX_WIDTH {
                return Err(usage(format!(
                    "--exact-trace needs target width <= {EXACT_TRACE_MAX_WIDTH}, got {}",
                    func.target_width()
                )));
            }
            cfg.exact_trace = true;
        }
        cfg.validate(func.target_width()).map_err(|e| usage(e.to_string()))?;
        Ok(cfg)
    }

    /// The oracle plus, for local targets, the hidden value.
    fn oracle(&self, func: &Functionality) -> Result<(Box<dyn Oracle>, Option<BigUint>)> {
        let tw = func.target_width();
        let t = &self.target;
        if let Some(cmd) = &t.oracle_cmd {
            let argv = shlex::split(cmd).ok_or_else(|| usage(format!("cannot split --oracle-cmd {cmd:?}")))?;
            if argv.is_empty() {
                return Err(usage("--oracle-cmd is empty"));
            }
            return Ok((Box::new(SubprocessOracle::spawn(&argv)?), None));
        }
        let target = if t.target_random {
            random_bits(&mut rng::stream(self.solve.seed, "target", 0), tw)
        } else {
            let s = t.target.as_deref().expect("target group is required");
            let v = parse_hex(s.trim()).ok_or_else(|| usage(format!("--target is not hex: {s:?}")))?;
            if v.bits() > tw as u64 {
                return Err(usage(format!("--target {s} does not fit in {tw} bits")));
            }
            v
        };
        Ok((Box::new(LocalOracle::new(func.clone(), target.clone())), Some(target)))
    }
}

fn ask_on_stdin(state: &AttackState) -> bool {
    eprint!(
        "after {} queries no query separates the candidates by outcome class; continue by brute force? [y/N] ",
        state.history.len()
    );
    let _ = io::stderr().flush();
    let mut line = String::new();
    match io::stdin().lock().read_line(&mut line) {
        Ok(n) if n > 0 => matches!(line.trim().to_ascii_lowercase().as_str(), "y" | "yes"),
        _ => false,
    }
}

fn write_traces(path: &Path, state: &AttackState) -> Result<()> {
    let body = if path.extension().is_some_and(|e| e == "json") {
        trace_json(state)
    } else {
        trace_csv(state)
    };
    std::fs::write(path, body).with_context(|| format!("writing {}", path.display()))?;
    let plot = path.with_extension("dat");
    std::fs::write(&plot, plot_data(state)).with_context(|| format!("writing {}", plot.display()))?;
    Ok(())
}

fn run(args: &RunArgs) -> Result<(Functionality, AttackState, Option<BigUint>)> {
    let func = args.func.build()?;
    let cfg = args.config(&func)?;
    let (mut oracle, hidden) = args.oracle(&func)?;
    let state = run_attack_with(&func, oracle.as_mut(), &cfg, &mut ask_on_stdin).map_err(|e| usage(e.to_string()))?;
    for n in &state.notices {
        eprintln!("notice: {n}");
    }
    if let Some(e) = &state.error {
        eprintln!("error: {e}");
    }
    if let Some(p) = &args.trace {
        write_traces(p, &state)?;
    }
    if let Some(dir) = &args.export_cnf {
        export_benchmarks(&state, dir)?;
    }
    Ok((func, state, hidden))
}

fn cmd_attack(args: &RunArgs) -> Result<u8> {
    let (func, state, hidden) = run(args)?;
    println!("functionality: {} (target {} bits)", func.name, func.target_width());
    println!("status: {}", state.status);
    println!("queries: {}", state.history.len());
    if let Some(r) = state.history.last() {
        println!("remaining: {}", r.remaining.count);
    }
    if let Some(w) = &state.witness {
        println!("witness: {w:x}");
    }
    if let Some(t) = hidden {
        println!("hidden: {t:x}");
    }
    Ok(match state.status {
        Status::Unique => 0,
        Status::BruteForce => EXIT_BRUTE_FORCE,
        Status::Exhausted => EXIT_EXHAUSTED,
        Status::Running | Status::Aborted => EXIT_ERROR,
    })
}

fn cmd_export(args: &ExportArgs) -> Result<u8> {
    let (_, state, _) = run(&args.run)?;
    let files = export_benchmarks(&state, &args.out)?;
    for f in &files {
        println!("{}", f.display());
    }
    println!("{}", args.out.join(MANIFEST_FILE).display());
    Ok(if state.status == Status::Aborted { EXIT_ERROR } else { 0 })
}

fn list(v: &[BigUint]) -> String {
    let mut v = v.to_vec();
    v.sort();
    if v.is_empty() {
        "none".into()
    } else {
        v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
    }
}

fn cmd_leakage(args: &LeakageArgs) -> Result<u8> {
    let func = args.func.build()?;
    let cfg = args.solve.config()?;
    cfg.validate(func.target_width()).map_err(|e| usage(e.to_string()))?;
    let report = first_query_leakage(&func, &cfg)?;
    let values = report.outcomes.values();
    println!("functionality: {} (target {} bits)", func.name, func.target_width());
    println!(
        "outcomes: {}{}",
        list(&values),
        if report.outcomes.complete { "" } else { " (truncated)" }
    );
    if values.len() <= 1 {
        println!("no leakage: single outcome");
        return Ok(0);
    }
    println!("selected: {}", list(&report.selected));
    println!("dropped: {}", list(&report.dropped));
    let Some(q) = &report.query else {
        println!("no leakage: no query reaches two outcome classes");
        return Ok(0);
    };
    println!("query: {q} (k_max {})", report.k_max.unwrap_or(0));
    for l in &report.leakage {
        let lg = l.eliminated.log2();
        if lg.is_finite() {
            println!("outcome {}: eliminates ~2^{lg:.2} candidates", l.outcome);
        } else {
            println!("outcome {}: eliminates 0 candidates", l.outcome);
        }
    }
    Ok(0)
}

fn cmd_serve(args: &ServeArgs) -> Result<u8> {
    let func = args.func.build()?;
    let t = parse_hex(args.target.trim()).ok_or_else(|| usage(format!("--target is not hex: {:?}", args.target)))?;
    if t.bits() > func.target_width() as u64 {
        return Err(usage(format!("--target does not fit in {} bits", func.target_width())));
    }
    serve(&func, &t, io::stdin().lock(), io::stdout().lock())?;
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let res = match &cli.cmd {
        Cmd::Attack(a) => cmd_attack(a),
        Cmd::Leakage(a) => cmd_leakage(a),
        Cmd::Export(a) => cmd_export(a),
        Cmd::Serve(a) => cmd_serve(a),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::from(EXIT_ERROR)
            }
        }
    }
}
