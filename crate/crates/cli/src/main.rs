//! `creditnet`: generate networks, run liquidity simulations, verify the
//! exact oracles against closed forms, and evaluate formulas.

mod config;

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use creditnet_core::closed_form::{
    bankruptcy_bound, centralized_failure, complete_cut_bound, complete_forest_count, cycle_class_count,
    cycle_pair_success, cycle_success_uniform, cycle_success_upper_bound, reference_curve, star_success_uniform,
    to_f64, tree_success_uniform, BigRational, CurveKind,
};
use creditnet_core::sim::{
    ensemble_rows, run_ensemble, sweep, write_csv, ConvergenceConfig, CsvRow, EnsembleResult, Family, LambdaSpec,
    SweepAxis, SweepConfig,
};
use creditnet_core::verify::{run_suite, Suite};
use creditnet_core::{edgelist, generate, CreditNetwork, Error, InitialState, TopologyKind, TopologySpec, TransactionMatrix};

use config::Config;

const THREADS_ENV: &str = "CREDITNET_THREADS";

#[derive(Debug)]
pub enum CliError {
    /// Exit code 1.
    Verification(usize),
    /// Exit code 2.
    Invalid(String),
    /// Exit code 3.
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Invalid(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Verification(n) => write!(f, "{n} verification check(s) failed"),
            CliError::Invalid(msg) => write!(f, "invalid input: {msg}"),
            CliError::Io(msg) => write!(f, "i/o error: {msg}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(msg) => CliError::Io(msg),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

fn io_error(e: std::io::Error) -> CliError {
    CliError::Io(e.to_string())
}

#[derive(Parser, Debug)]
#[command(name = "creditnet", version, about = "Credit-network liquidity experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a generated network as an edge list.
    Generate(GenerateArgs),
    /// Run simulation ensembles or sweeps and write CSV.
    Simulate(SimulateArgs),
    /// Check the exact oracles against closed forms.
    Verify(VerifyArgs),
    /// Evaluate a closed-form expression.
    Analyze(AnalyzeArgs),
}

#[derive(Args, Debug, Default)]
struct TopologyArgs {
    /// line, star, cycle, complete, erdos-renyi or barabasi-albert.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// Credit per edge.
    #[arg(long)]
    c: Option<u32>,
    /// Edge probability (erdos-renyi).
    #[arg(long)]
    p: Option<f64>,
    /// Edges per arriving node (barabasi-albert).
    #[arg(long)]
    d: Option<usize>,
    /// random, balanced or low-id.
    #[arg(long)]
    init: Option<String>,
    /// Resample disconnected erdos-renyi graphs.
    #[arg(long)]
    connected_only: bool,
}

const TOPOLOGY_KEYS: &[&str] = &["kind", "n", "c", "p", "d", "init", "connected-only"];

impl TopologyArgs {
    fn merge(&mut self, cfg: &Config) -> Result<(), CliError> {
        self.kind = self.kind.take().or(cfg.string("kind")?);
        self.n = self.n.or(cfg.uint("n")?);
        self.c = self.c.or(cfg.uint("c")?);
        self.p = self.p.or(cfg.float("p")?);
        self.d = self.d.or(cfg.uint("d")?);
        self.init = self.init.take().or(cfg.string("init")?);
        self.connected_only |= cfg.flag("connected-only")?;
        Ok(())
    }

    fn family(&self) -> Result<Family, CliError> {
        match self.kind.as_deref() {
            Some("erdos-renyi" | "gnp") => Ok(Family::ErdosRenyi),
            Some("barabasi-albert" | "ba") => Ok(Family::BarabasiAlbert),
            Some(other) => Err(CliError::Invalid(format!("sweeps need a random family, got {other:?}"))),
            None => Err(CliError::Invalid("--kind is required".into())),
        }
    }

    fn init(&self) -> Result<InitialState, CliError> {
        Ok(self.init.as_deref().map(str::parse).transpose()?.unwrap_or_default())
    }

    fn spec(&self, seed: u64) -> Result<TopologySpec, CliError> {
        let need = |flag: &str| CliError::Invalid(format!("--{flag} is required"));
        let kind = match self.kind.as_deref().ok_or_else(|| need("kind"))? {
            "line" => TopologyKind::Line,
            "star" => TopologyKind::Star,
            "cycle" => TopologyKind::Cycle,
            "complete" => TopologyKind::Complete,
            "erdos-renyi" | "gnp" => TopologyKind::ErdosRenyi {
                p: self.p.ok_or_else(|| need("p"))?,
            },
            "barabasi-albert" | "ba" => TopologyKind::BarabasiAlbert {
                d: self.d.ok_or_else(|| need("d"))?,
            },
            other => return Err(CliError::Invalid(format!("unknown topology kind {other:?}"))),
        };
        let spec = TopologySpec::new(kind, self.n.ok_or_else(|| need("n"))?, self.c.ok_or_else(|| need("c"))?)
            .with_init(self.init()?)
            .with_seed(seed)
            .connected_only(self.connected_only);
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[command(flatten)]
    topology: TopologyArgs,
    /// Defaults to 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    topology: TopologyArgs,
    /// Simulate on this edge-list network instead of generating one.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Transaction matrix file: n rows of n rates. Uniform when absent.
    #[arg(long)]
    lambda: Option<PathBuf>,
    /// Base seed; run i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    window: Option<u64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    max_steps: Option<u64>,
    /// density, capacity, size or size-fixed-np.
    #[arg(long)]
    sweep: Option<String>,
    /// Comma-separated grid values for the sweep axis.
    #[arg(long)]
    grid: Option<String>,
    /// Average degree for density and capacity sweeps, held np for
    /// size-fixed-np; derived from --p or --d when absent.
    #[arg(long)]
    density: Option<f64>,
    /// CSV output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

const SIMULATE_KEYS: &[&str] = &[
    "input", "lambda", "seed", "runs", "window", "epsilon", "max-steps", "sweep", "grid", "density", "out",
];

#[derive(Args, Debug)]
struct VerifyArgs {
    /// cycles, trees, centralized, bankruptcy, forests, stationary, complete
    /// or all.
    #[arg(long, default_value = "all")]
    suite: String,
    /// Print only failures and the summary.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// centralized-failure, cycle-success, cycle-class-count, cycle-bound,
    /// tree-success, star-success, bankruptcy-bound, complete-cut-bound or
    /// reference.
    formula: String,
    /// Curve name for `reference`; line or star for `tree-success`.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    c: Option<u32>,
    /// Total centralized credit.
    #[arg(long = "C")]
    total: Option<u64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    d: Option<usize>,
    /// Hop distance of a single cycle pair.
    #[arg(long)]
    l: Option<usize>,
    /// Transaction regime; only uniform has closed forms.
    #[arg(long, default_value = "uniform")]
    regime: String,
    /// Edge-list network for tree-success and bankruptcy-bound.
    #[arg(long)]
    input: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("creditnet: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Analyze(args) => cmd_analyze(args),
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Invalid(format!("{THREADS_ENV} must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Invalid(e.to_string()))
}

fn emit(out: Option<&Path>, text: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => std::io::stdout().write_all(text).map_err(io_error),
    }
}

fn cmd_generate(mut args: GenerateArgs) -> Result<(), CliError> {
    let keys: Vec<&str> = TOPOLOGY_KEYS.iter().copied().chain(["seed", "out"]).collect();
    let cfg = Config::load(args.config.as_deref(), "generate", &keys)?;
    args.topology.merge(&cfg)?;
    let seed = args.seed.or(cfg.uint("seed")?).unwrap_or(0);
    let out = args.out.or(cfg.string("out")?.map(PathBuf::from));
    let (network, state) = generate(&args.topology.spec(seed)?)?;
    emit(out.as_deref(), edgelist::format(&network, &state).as_bytes())
}

fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Invalid(format!("bad grid value {v:?}")))
        })
        .collect()
}

fn read_lambda(path: &Path) -> Result<TransactionMatrix, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let rows: Vec<Vec<f64>> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.split_whitespace()
                .map(|x| x.parse::<f64>().map_err(|_| CliError::Invalid(format!("bad rate {x:?}"))))
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(CliError::Invalid("transaction matrix must be square".into()));
    }
    Ok(TransactionMatrix::explicit(n, rows.concat())?)
}

fn summarize(e: &EnsembleResult) {
    let converged = e.runs.iter().filter(|r| r.converged).count();
    eprintln!(
        "{} n={} param={} c={}: mean {:.4} std {:.4} over {} runs ({converged} converged, mean steps {:.0})",
        e.topology,
        e.n,
        e.param,
        e.c,
        e.mean(),
        e.std(),
        e.runs.len(),
        e.mean_converged_steps()
    );
    for (seed, err) in &e.failures {
        eprintln!("  run with seed {seed} failed: {err}");
    }
}

fn cmd_simulate(mut args: SimulateArgs) -> Result<(), CliError> {
    let keys: Vec<&str> = TOPOLOGY_KEYS.iter().chain(SIMULATE_KEYS).copied().collect();
    let cfg = Config::load(args.config.as_deref(), "simulate", &keys)?;
    args.topology.merge(&cfg)?;
    let seed = args
        .seed
        .or(cfg.uint("seed")?)
        .ok_or_else(|| CliError::Invalid("--seed is required for simulate".into()))?;
    let runs = args.runs.or(cfg.uint("runs")?).unwrap_or(1);
    let defaults = ConvergenceConfig::default();
    let conv = ConvergenceConfig {
        window: args.window.or(cfg.uint("window")?).unwrap_or(defaults.window),
        epsilon: args.epsilon.or(cfg.float("epsilon")?).unwrap_or(defaults.epsilon),
        max_steps: args.max_steps.or(cfg.uint("max-steps")?).unwrap_or(defaults.max_steps),
    };
    conv.validate()?;
    let input = args.input.or(cfg.string("input")?.map(PathBuf::from));
    let lambda_path = args.lambda.or(cfg.string("lambda")?.map(PathBuf::from));
    let sweep_axis = args.sweep.or(cfg.string("sweep")?);
    let grid = args.grid.or(cfg.string("grid")?);
    let density = args.density.or(cfg.float("density")?);
    let out = args.out.or(cfg.string("out")?.map(PathBuf::from));

    let lambda = match &lambda_path {
        Some(path) => LambdaSpec::Explicit(read_lambda(path)?),
        None => LambdaSpec::Uniform,
    };

    let mut rows: Vec<CsvRow> = Vec::new();
    if let Some(axis) = sweep_axis {
        if input.is_some() || lambda_path.is_some() {
            return Err(CliError::Invalid("sweeps generate their own networks with uniform transactions".into()));
        }
        let axis: SweepAxis = axis.parse()?;
        let grid = parse_grid(&grid.ok_or_else(|| CliError::Invalid("--grid is required with --sweep".into()))?)?;
        let topo = &args.topology;
        let family = topo.family()?;
        let n = topo.n.ok_or_else(|| CliError::Invalid("--n is required".into()))?;
        let density = match (density, family) {
            (Some(k), _) => k,
            (None, Family::ErdosRenyi) => {
                let p = topo.p.ok_or_else(|| CliError::Invalid("--density or --p is required".into()))?;
                if axis == SweepAxis::SizeFixedNp {
                    p * n as f64
                } else {
                    p * (n as f64 - 1.0)
                }
            }
            (None, Family::BarabasiAlbert) => {
                2.0 * topo.d.ok_or_else(|| CliError::Invalid("--density or --d is required".into()))? as f64
            }
        };
        let config = SweepConfig {
            family,
            n,
            c: topo.c.unwrap_or(1),
            density,
            init: topo.init()?,
            connected_only: topo.connected_only,
            conv,
            runs,
            base_seed: seed,
        };
        for (value, result) in sweep(axis, &grid, &config) {
            match result {
                Ok(ensemble) => {
                    summarize(&ensemble);
                    rows.extend(ensemble_rows(&ensemble));
                }
                Err(e) => eprintln!("grid point {value} skipped: {e}"),
            }
        }
    } else if let Some(path) = input {
        let (network, initial) = edgelist::read(&path)?;
        let matrix = lambda.matrix(network.node_count())?;
        let ensemble = run_on_network(&network, &initial, &matrix, &conv, runs, seed)?;
        summarize(&ensemble);
        rows.extend(ensemble_rows(&ensemble));
    } else {
        let spec = args.topology.spec(seed)?;
        let ensemble = run_ensemble(&spec, &lambda, &conv, runs, seed)?;
        summarize(&ensemble);
        rows.extend(ensemble_rows(&ensemble));
    }

    let mut buf = Vec::new();
    write_csv(&mut buf, &rows)?;
    emit(out.as_deref(), &buf)
}

/// Repeated runs on one fixed network, each with its own transaction seed.
fn run_on_network(
    network: &CreditNetwork,
    initial: &creditnet_core::NetworkState,
    lambda: &TransactionMatrix,
    conv: &ConvergenceConfig,
    runs: usize,
    seed: u64,
) -> Result<EnsembleResult, CliError> {
    use rayon::prelude::*;
    if runs == 0 {
        return Err(CliError::Invalid("--runs must be at least 1".into()));
    }
    let results = (0..runs as u64)
        .into_par_iter()
        .map(|i| {
            let mut state = initial.clone();
            creditnet_core::sim::run_to_convergence(network, &mut state, lambda, conv, seed.wrapping_add(i))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EnsembleResult {
        topology: "file".into(),
        n: network.node_count(),
        param: 0.0,
        c: network.edges().iter().map(|e| e.total).max().unwrap_or(0),
        runs: results,
        failures: Vec::new(),
    })
}

fn cmd_verify(args: VerifyArgs) -> Result<(), CliError> {
    let suite: Suite = args.suite.parse()?;
    let report = run_suite(suite);
    let mut out = std::io::stdout().lock();
    for check in &report.checks {
        if !args.quiet || !check.passed {
            writeln!(out, "{check}").map_err(io_error)?;
        }
    }
    for skipped in &report.skipped {
        writeln!(out, "SKIP {skipped}").map_err(io_error)?;
    }
    writeln!(
        out,
        "{} checks, {} failed, {} skipped",
        report.checks.len(),
        report.failures(),
        report.skipped.len()
    )
    .map_err(io_error)?;
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::Verification(report.failures()))
    }
}

fn require<T>(value: Option<T>, flag: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Invalid(format!("--{flag} is required")))
}

/// Failure of the centralized system with the same total credit as a
/// network of `edges` edges of capacity `c` on `n` nodes.
fn centralized_row(n: usize, edges: usize, c: u32) -> Result<String, CliError> {
    let total = edges as u64 * u64::from(c);
    let f = centralized_failure(n, total)?;
    Ok(format!(
        "centralized equivalent (C={total}): failure {} ({})",
        *f.numer() as f64 / *f.denom() as f64,
        f
    ))
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    if args.regime != "uniform" {
        return Err(CliError::Invalid(format!(
            "no closed form for regime {:?}; only uniform is supported",
            args.regime
        )));
    }
    let mut lines: Vec<String> = Vec::new();
    let exact = |label: &str, x: &BigRational| format!("{label} {} (exact {x})", to_f64(x));
    match args.formula.as_str() {
        "centralized-failure" => {
            let n = require(args.n, "n")?;
            let f = centralized_failure(n, require(args.total, "C")?)?;
            lines.push(format!("{} (exact {f})", *f.numer() as f64 / *f.denom() as f64));
        }
        "cycle-success" => {
            let (n, c) = (require(args.n, "n")?, require(args.c, "c")?);
            let success = match args.l {
                Some(l) => cycle_pair_success(n, c, l)?,
                None => cycle_success_uniform(n, c)?,
            };
            lines.push(exact("success", &success));
            lines.push(format!("failure {}", 1.0 - to_f64(&success)));
            lines.push(centralized_row(n, n, c)?);
        }
        "cycle-class-count" => {
            lines.push(cycle_class_count(require(args.n, "n")?, require(args.c, "c")?)?.to_string());
        }
        "cycle-bound" => {
            let bound = cycle_success_upper_bound(require(args.n, "n")?, require(args.c, "c")?)?;
            lines.push(exact("success upper bound", &bound));
        }
        "star-success" => {
            let (n, c) = (require(args.n, "n")?, require(args.c, "c")?);
            let success = star_success_uniform(n, c)?;
            lines.push(exact("success", &success));
            lines.push(format!("failure {}", 1.0 - to_f64(&success)));
            lines.push(centralized_row(n, n - 1, c)?);
        }
        "tree-success" => {
            let (network, c) = analyze_network(&args)?;
            let success = tree_success_uniform(&network, c)?;
            lines.push(exact("success", &success));
            lines.push(format!("failure {}", 1.0 - to_f64(&success)));
            lines.push(centralized_row(network.node_count(), network.edge_count(), c)?);
        }
        "bankruptcy-bound" => {
            let (network, _) = analyze_network(&args)?;
            let b = bankruptcy_bound(&network);
            for (v, (d, bound)) in b.credit.iter().zip(&b.bound).enumerate() {
                lines.push(format!("node {v}: d={d} bound {bound}"));
            }
            lines.push(format!("harmonic mean {}", b.harmonic_mean));
            lines.push(format!("arithmetic mean {}", b.arithmetic_mean));
        }
        "complete-cut-bound" => {
            let (n, c) = (require(args.n, "n")?, require(args.c, "c")?);
            let bound = complete_cut_bound(n, c, complete_forest_count)?;
            lines.push(exact("pair failure upper bound", &bound));
            lines.push(centralized_row(n, n * (n - 1) / 2, c)?);
        }
        "reference" => {
            let kind: CurveKind = require(args.kind.as_deref(), "kind")?.parse()?;
            lines.push(reference_curve(kind, args.n, args.p, args.d, args.c.unwrap_or(1))?.to_string());
        }
        other => return Err(CliError::Invalid(format!("unknown formula {other:?}"))),
    }
    let mut out = std::io::stdout().lock();
    for line in lines {
        writeln!(out, "{line}").map_err(io_error)?;
    }
    Ok(())
}

/// The network for network-valued formulas: `--input`, or a line or star
/// built from `--kind`, `--n` and `--c`.
fn analyze_network(args: &AnalyzeArgs) -> Result<(CreditNetwork, u32), CliError> {
    if let Some(path) = &args.input {
        let (network, _) = edgelist::read(path)?;
        let c = network.edges().first().map_or(1, |e| e.total);
        return Ok((network, c));
    }
    let kind = match require(args.kind.as_deref(), "kind")? {
        "line" => TopologyKind::Line,
        "star" => TopologyKind::Star,
        "cycle" => TopologyKind::Cycle,
        "complete" => TopologyKind::Complete,
        other => return Err(CliError::Invalid(format!("unsupported network kind {other:?}"))),
    };
    let c = require(args.c, "c")?;
    let (network, _) = generate(&TopologySpec::new(kind, require(args.n, "n")?, c))?;
    Ok((network, c))
}
