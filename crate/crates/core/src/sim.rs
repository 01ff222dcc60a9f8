//! Monte Carlo simulation of repeated unit transactions.
//!
//! A run samples ordered pairs from the transaction matrix and routes unit
//! payments until the success rates of two consecutive windows agree within
//! `epsilon`. Ensembles repeat runs over independently generated networks
//! (seeds `base_seed + i`) in parallel.

use std::io;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lambda::TransactionMatrix;
use crate::network::{CreditNetwork, NetworkState, Transaction};
use crate::rng::{seeded_rng, Stream};
use crate::routing::Router;
use crate::topology::{generate, InitialState, TopologyKind, TopologySpec};

pub const CSV_HEADER: [&str; 8] = ["topology", "n", "param", "c", "seed", "steps", "converged", "success_rate"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceConfig {
    /// Steps per window.
    pub window: u64,
    /// Largest allowed difference between consecutive window success rates.
    pub epsilon: f64,
    pub max_steps: u64,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            window: 1000,
            epsilon: 0.002,
            max_steps: 10_000_000,
        }
    }
}

impl ConvergenceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::InvalidSpec("window must be at least 1".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidSpec(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_steps < self.window {
            return Err(Error::InvalidSpec("max_steps must cover at least one window".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimRunResult {
    pub seed: u64,
    pub steps: u64,
    pub successes: u64,
    /// Cumulative successes over cumulative steps.
    pub success_rate: f64,
    pub converged: bool,
}

/// One unit transaction drawn from `lambda`; true on success.
pub fn step<R: Rng + ?Sized>(
    router: &mut Router,
    network: &CreditNetwork,
    state: &mut NetworkState,
    lambda: &TransactionMatrix,
    rng: &mut R,
) -> bool {
    let (payer, payee) = lambda.sample(rng);
    router.transact(network, state, &Transaction { payer, payee, value: 1 })
}

fn check_lambda(network: &CreditNetwork, lambda: &TransactionMatrix) -> Result<()> {
    if lambda.node_count() != network.node_count() {
        return Err(Error::InvalidLambda(format!(
            "matrix over {} nodes for a network of {}",
            lambda.node_count(),
            network.node_count()
        )));
    }
    Ok(())
}

/// Runs until two consecutive windows agree or `max_steps` is reached. The
/// transaction stream is seeded from `seed`; `state` is left at the final
/// state of the run.
pub fn run_to_convergence(
    network: &CreditNetwork,
    state: &mut NetworkState,
    lambda: &TransactionMatrix,
    conv: &ConvergenceConfig,
    seed: u64,
) -> Result<SimRunResult> {
    conv.validate()?;
    check_lambda(network, lambda)?;
    state.check_invariants(network)?;
    let mut rng = seeded_rng(seed, Stream::Transactions);
    let mut router = Router::new(network.node_count());
    let mut steps = 0;
    let mut successes = 0;
    let mut previous: Option<f64> = None;
    let mut converged = false;

    while steps + conv.window <= conv.max_steps {
        let mut window_successes = 0;
        for _ in 0..conv.window {
            if step(&mut router, network, state, lambda, &mut rng) {
                window_successes += 1;
            }
        }
        debug_assert!(state.check_invariants(network).is_ok(), "credit not conserved");
        steps += conv.window;
        successes += window_successes;
        let rate = window_successes as f64 / conv.window as f64;
        if previous.is_some_and(|p| (rate - p).abs() <= conv.epsilon) {
            converged = true;
            break;
        }
        previous = Some(rate);
    }

    Ok(SimRunResult {
        seed,
        steps,
        successes,
        success_rate: successes as f64 / steps as f64,
        converged,
    })
}

/// Runs `burn_in` unrecorded steps and then `steps` recorded ones.
pub fn run_fixed(
    network: &CreditNetwork,
    state: &mut NetworkState,
    lambda: &TransactionMatrix,
    burn_in: u64,
    steps: u64,
    seed: u64,
) -> Result<SimRunResult> {
    check_lambda(network, lambda)?;
    state.check_invariants(network)?;
    if steps == 0 {
        return Err(Error::InvalidSpec("need at least one recorded step".into()));
    }
    let mut rng = seeded_rng(seed, Stream::Transactions);
    let mut router = Router::new(network.node_count());
    for _ in 0..burn_in {
        step(&mut router, network, state, lambda, &mut rng);
    }
    let successes = (0..steps)
        .filter(|_| step(&mut router, network, state, lambda, &mut rng))
        .count() as u64;
    Ok(SimRunResult {
        seed,
        steps,
        successes,
        success_rate: successes as f64 / steps as f64,
        converged: true,
    })
}

/// Transaction regime for ensembles, whose networks may differ in size.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum LambdaSpec {
    #[default]
    Uniform,
    Explicit(TransactionMatrix),
}

impl LambdaSpec {
    pub fn matrix(&self, n: usize) -> Result<TransactionMatrix> {
        match self {
            LambdaSpec::Uniform => TransactionMatrix::uniform(n),
            LambdaSpec::Explicit(m) if m.node_count() == n => Ok(m.clone()),
            LambdaSpec::Explicit(m) => Err(Error::InvalidLambda(format!(
                "matrix over {} nodes for networks of {n}",
                m.node_count()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub topology: String,
    pub n: usize,
    pub param: f64,
    pub c: u32,
    pub runs: Vec<SimRunResult>,
    /// Runs that could not be set up, by seed.
    pub failures: Vec<(u64, Error)>,
}

impl EnsembleResult {
    fn rates(&self) -> impl Iterator<Item = f64> + Clone + '_ {
        self.runs.iter().map(|r| r.success_rate)
    }

    pub fn mean(&self) -> f64 {
        mean(self.rates())
    }

    /// Sample standard deviation of the per-run success rates.
    pub fn std(&self) -> f64 {
        std(self.rates())
    }

    pub fn mean_steps(&self) -> f64 {
        mean(self.runs.iter().map(|r| r.steps as f64))
    }

    pub fn std_steps(&self) -> f64 {
        std(self.runs.iter().map(|r| r.steps as f64))
    }

    pub fn converged_fraction(&self) -> f64 {
        mean(self.runs.iter().map(|r| if r.converged { 1.0 } else { 0.0 }))
    }

    /// Mean step count over converged runs only.
    pub fn mean_converged_steps(&self) -> f64 {
        mean(self.runs.iter().filter(|r| r.converged).map(|r| r.steps as f64))
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = xs.fold((0.0, 0usize), |(s, k), x| (s + x, k + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

fn std(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = mean(xs.clone());
    let (sq, count) = xs.fold((0.0, 0usize), |(s, k), x| (s + (x - m).powi(2), k + 1));
    match count {
        0 => f64::NAN,
        1 => 0.0,
        k => (sq / (k - 1) as f64).sqrt(),
    }
}

/// Generates `runs` networks from `spec` with seeds `base_seed + i` and runs
/// each to convergence. Runs are independent and execute on the current
/// rayon pool; results are in seed order.
pub fn run_ensemble(
    spec: &TopologySpec,
    lambda: &LambdaSpec,
    conv: &ConvergenceConfig,
    runs: usize,
    base_seed: u64,
) -> Result<EnsembleResult> {
    if runs == 0 {
        return Err(Error::InvalidSpec("an ensemble needs at least one run".into()));
    }
    spec.validate()?;
    conv.validate()?;
    let matrix = lambda.matrix(spec.n)?;
    let outcomes: Vec<(u64, Result<SimRunResult>)> = (0..runs as u64)
        .into_par_iter()
        .map(|i| {
            let seed = base_seed.wrapping_add(i);
            let outcome = generate(&spec.clone().with_seed(seed))
                .and_then(|(net, mut state)| run_to_convergence(&net, &mut state, &matrix, conv, seed));
            (seed, outcome)
        })
        .collect();

    let mut result = EnsembleResult {
        topology: spec.kind.name().to_string(),
        n: spec.n,
        param: spec.kind.param(),
        c: spec.c,
        runs: Vec::with_capacity(runs),
        failures: Vec::new(),
    };
    for (seed, outcome) in outcomes {
        match outcome {
            Ok(run) => result.runs.push(run),
            Err(e) => result.failures.push((seed, e)),
        }
    }
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    ErdosRenyi,
    BarabasiAlbert,
}

impl Family {
    /// The family member with average degree about `avg_degree`: `p = k/(n-1)`
    /// for G(n, p) and `d = round(k/2)` for preferential attachment.
    pub fn with_avg_degree(self, n: usize, avg_degree: f64) -> TopologyKind {
        match self {
            Family::ErdosRenyi => TopologyKind::ErdosRenyi {
                p: (avg_degree / (n as f64 - 1.0)).min(1.0),
            },
            Family::BarabasiAlbert => TopologyKind::BarabasiAlbert {
                d: ((avg_degree / 2.0).round() as usize).max(1),
            },
        }
    }

    /// The family member with `np` held at `np`: `p = np/n`, `d = round(np/2)`.
    pub fn with_fixed_np(self, n: usize, np: f64) -> TopologyKind {
        match self {
            Family::ErdosRenyi => TopologyKind::ErdosRenyi {
                p: (np / n as f64).min(1.0),
            },
            Family::BarabasiAlbert => TopologyKind::BarabasiAlbert {
                d: ((np / 2.0).round() as usize).max(1),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Grid values are average degrees at fixed `n`.
    Density,
    /// Grid values are capacities at fixed `n` and density.
    Capacity,
    /// Grid values are sizes at fixed `p` or `d`.
    Size,
    /// Grid values are sizes with `np` held at the base density.
    SizeFixedNp,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "density" => Ok(SweepAxis::Density),
            "capacity" => Ok(SweepAxis::Capacity),
            "size" => Ok(SweepAxis::Size),
            "size-fixed-np" | "size_fixed_np" => Ok(SweepAxis::SizeFixedNp),
            other => Err(Error::InvalidSpec(format!("unknown sweep axis {other:?}"))),
        }
    }
}

/// Fixed parameters of a sweep. `density` is an average degree for the
/// density and capacity axes and the held `np` for the fixed-np axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub family: Family,
    pub n: usize,
    pub c: u32,
    pub density: f64,
    pub init: InitialState,
    pub connected_only: bool,
    pub conv: ConvergenceConfig,
    pub runs: usize,
    pub base_seed: u64,
}

impl SweepConfig {
    /// The topology at one grid point.
    pub fn spec_at(&self, axis: SweepAxis, value: f64) -> Result<TopologySpec> {
        let positive_int = |v: f64| {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::InvalidSpec(format!("grid value {v} must be a positive integer")))
            }
        };
        let (kind, n, c) = match axis {
            SweepAxis::Density => (self.family.with_avg_degree(self.n, value), self.n, self.c),
            SweepAxis::Capacity => (
                self.family.with_avg_degree(self.n, self.density),
                self.n,
                positive_int(value)? as u32,
            ),
            SweepAxis::Size => {
                let n = positive_int(value)?;
                (self.family.with_avg_degree(self.n, self.density), n, self.c)
            }
            SweepAxis::SizeFixedNp => {
                let n = positive_int(value)?;
                (self.family.with_fixed_np(n, self.density), n, self.c)
            }
        };
        let spec = TopologySpec::new(kind, n, c)
            .with_init(self.init)
            .connected_only(self.connected_only);
        spec.validate()?;
        Ok(spec)
    }
}

/// One ensemble per grid point. A point that cannot be set up is reported
/// with its error and the sweep continues.
pub fn sweep(axis: SweepAxis, grid: &[f64], config: &SweepConfig) -> Vec<(f64, Result<EnsembleResult>)> {
    grid.iter()
        .map(|&value| {
            let result = config.spec_at(axis, value).and_then(|spec| {
                run_ensemble(&spec, &LambdaSpec::Uniform, &config.conv, config.runs, config.base_seed)
            });
            (value, result)
        })
        .collect()
}

/// Which row a CSV line is: one run, or an ensemble summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RowKind {
    Run { seed: u64, steps: u64, converged: bool },
    /// `steps` is the mean step count, `converged` the converged fraction.
    Mean { steps: f64, converged: f64 },
    /// `steps` is the std of the step count; `converged` is unused.
    Std { steps: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub topology: String,
    pub n: usize,
    pub param: f64,
    pub c: u32,
    pub kind: RowKind,
    pub success_rate: f64,
}

impl CsvRow {
    fn fields(&self) -> [String; 8] {
        let (seed, steps, converged) = match self.kind {
            RowKind::Run { seed, steps, converged } => (seed.to_string(), steps.to_string(), converged.to_string()),
            RowKind::Mean { steps, converged } => ("mean".into(), steps.to_string(), converged.to_string()),
            RowKind::Std { steps } => ("std".into(), steps.to_string(), String::new()),
        };
        [
            self.topology.clone(),
            self.n.to_string(),
            self.param.to_string(),
            self.c.to_string(),
            seed,
            steps,
            converged,
            self.success_rate.to_string(),
        ]
    }
}

/// Per-run rows followed by the `mean` and `std` summary rows.
pub fn ensemble_rows(ensemble: &EnsembleResult) -> Vec<CsvRow> {
    let row = |kind, success_rate| CsvRow {
        topology: ensemble.topology.clone(),
        n: ensemble.n,
        param: ensemble.param,
        c: ensemble.c,
        kind,
        success_rate,
    };
    let mut rows: Vec<CsvRow> = ensemble
        .runs
        .iter()
        .map(|r| {
            row(
                RowKind::Run {
                    seed: r.seed,
                    steps: r.steps,
                    converged: r.converged,
                },
                r.success_rate,
            )
        })
        .collect();
    rows.push(row(
        RowKind::Mean {
            steps: ensemble.mean_steps(),
            converged: ensemble.converged_fraction(),
        },
        ensemble.mean(),
    ));
    rows.push(row(RowKind::Std { steps: ensemble.std_steps() }, ensemble.std()));
    rows
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io.to_string()),
        other => Error::Parse {
            line: 0,
            message: format!("{other:?}"),
        },
    }
}

pub fn write_csv<W: io::Write>(out: W, rows: &[CsvRow]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(CSV_HEADER).map_err(csv_error)?;
    for row in rows {
        writer.write_record(row.fields()).map_err(csv_error)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_csv_file(path: impl AsRef<Path>, rows: &[CsvRow]) -> Result<()> {
    write_csv(std::fs::File::create(path)?, rows)
}

pub fn read_csv<R: io::Read>(input: R) -> Result<Vec<CsvRow>> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers().map_err(csv_error)?;
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Parse {
            line: 1,
            message: format!("unexpected header {header:?}"),
        });
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(csv_error)?;
        let field = |k: usize| record.get(k).unwrap_or("");
        let bad = |what: &str| Error::Parse {
            line,
            message: format!("invalid {what}"),
        };
        let float = |k: usize, what: &str| field(k).parse::<f64>().map_err(|_| bad(what));
        let kind = match field(4) {
            "mean" => RowKind::Mean {
                steps: float(5, "steps")?,
                converged: float(6, "converged")?,
            },
            "std" => RowKind::Std { steps: float(5, "steps")? },
            seed => RowKind::Run {
                seed: seed.parse().map_err(|_| bad("seed"))?,
                steps: field(5).parse().map_err(|_| bad("steps"))?,
                converged: field(6).parse().map_err(|_| bad("converged"))?,
            },
        };
        rows.push(CsvRow {
            topology: field(0).to_string(),
            n: field(1).parse().map_err(|_| bad("n"))?,
            param: float(2, "param")?,
            c: field(3).parse().map_err(|_| bad("c"))?,
            kind,
            success_rate: float(7, "success_rate")?,
        });
    }
    Ok(rows)
}
