//! Oracle-versus-formula verification suites over the standard small
//! instances: lines, stars, cycles and complete graphs with `c` in 1..=3.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::{BigRational, Ratio};

use crate::closed_form::{
    centralized_failure, centralized_state_count, complete_cut_bound, complete_forest_count, cycle_class_count,
    cycle_pair_success, tree_success_uniform,
};
use crate::error::{Error, Result};
use crate::lambda::TransactionMatrix;
use crate::network::CreditNetwork;
use crate::oracle::centralized::enumerate_centralized;
use crate::oracle::{count_forests, ExactOracle, OracleConfig, StationaryResult, DEFAULT_UNIT_EDGE_CAP};
use crate::topology::{generate, TopologyKind, TopologySpec};

/// Largest allowed deviation of π from uniform.
pub const UNIFORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Cycles,
    Trees,
    Centralized,
    Bankruptcy,
    Forests,
    Stationary,
    Complete,
    All,
}

impl Suite {
    fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "cycles" => Suite::Cycles,
            "trees" => Suite::Trees,
            "centralized" => Suite::Centralized,
            "bankruptcy" => Suite::Bankruptcy,
            "forests" => Suite::Forests,
            "stationary" => Suite::Stationary,
            "complete" => Suite::Complete,
            "all" => Suite::All,
            other => return Err(Error::InvalidSpec(format!("unknown suite {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub expected: String,
    pub computed: String,
    pub passed: bool,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: expected {}, computed {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.expected,
            self.computed
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub checks: Vec<Check>,
    /// Instances skipped because they exceed a cap, with the reason.
    pub skipped: Vec<String>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }

    fn check(&mut self, name: String, expected: impl fmt::Display, computed: impl fmt::Display, passed: bool) {
        self.checks.push(Check {
            name,
            expected: expected.to_string(),
            computed: computed.to_string(),
            passed,
        });
    }

    fn equal<T: fmt::Display + PartialEq>(&mut self, name: String, expected: T, computed: T) {
        let passed = expected == computed;
        self.check(name, expected, computed, passed);
    }
}

/// Every instance of the standard suite as `(kind, n, c)`.
pub fn suite_instances() -> Vec<(TopologyKind, usize, u32)> {
    let mut out = Vec::new();
    for c in 1..=3 {
        out.extend((3..=5).map(|n| (TopologyKind::Line, n, c)));
        out.extend((3..=6).map(|n| (TopologyKind::Star, n, c)));
        out.extend((3..=5).map(|n| (TopologyKind::Cycle, n, c)));
        out.extend((3..=5).map(|n| (TopologyKind::Complete, n, c)));
    }
    out
}

pub fn instance_name(kind: TopologyKind, n: usize, c: u32) -> String {
    format!("{}({n}, c={c})", kind.name())
}

fn big(r: Ratio<u64>) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

/// Oracle and uniform stationary solution of one instance.
pub struct Instance {
    pub kind: TopologyKind,
    pub n: usize,
    pub c: u32,
    pub network: CreditNetwork,
    pub oracle: ExactOracle,
    pub result: StationaryResult,
}

impl Instance {
    pub fn build(kind: TopologyKind, n: usize, c: u32) -> Result<Self> {
        let (network, initial) = generate(&TopologySpec::new(kind, n, c))?;
        let config = OracleConfig::default();
        let oracle = ExactOracle::build(&network, &config)?;
        let lambda = TransactionMatrix::uniform(n)?;
        let result = oracle.stationary(&lambda, Some(&initial), &config.stationary)?;
        Ok(Self {
            kind,
            n,
            c,
            network,
            oracle,
            result,
        })
    }

    pub fn name(&self) -> String {
        instance_name(self.kind, self.n, self.c)
    }

    /// Exact success of `s -> t`, valid once π is confirmed uniform.
    pub fn pair_success_exact(&self, s: usize, t: usize) -> BigRational {
        big(self.oracle.feasible_class_fraction(s, t))
    }

    /// Exact uniform-Λ success probability.
    pub fn success_exact(&self) -> BigRational {
        let n = self.n;
        let mut total = BigRational::from_integer(BigInt::from(0));
        for s in 0..n {
            for t in 0..n {
                if s != t {
                    total += self.pair_success_exact(s, t);
                }
            }
        }
        total / BigRational::from_integer(BigInt::from(n * (n - 1)))
    }
}

/// Runs `suite` and collects every check.
pub fn run_suite(suite: Suite) -> Report {
    let mut report = Report::default();
    let needs_instances = [
        Suite::Cycles,
        Suite::Trees,
        Suite::Bankruptcy,
        Suite::Forests,
        Suite::Stationary,
    ]
    .iter()
    .any(|&s| suite.includes(s));

    if needs_instances {
        for (kind, n, c) in suite_instances() {
            let relevant = match kind {
                TopologyKind::Cycle => suite.includes(Suite::Cycles),
                TopologyKind::Line | TopologyKind::Star => suite.includes(Suite::Trees),
                _ => false,
            } || suite.includes(Suite::Bankruptcy)
                || suite.includes(Suite::Forests)
                || suite.includes(Suite::Stationary);
            if !relevant {
                continue;
            }
            match Instance::build(kind, n, c) {
                Ok(instance) => instance_checks(suite, &instance, &mut report),
                Err(e @ (Error::StateSpaceTooLarge { .. } | Error::ForestCapExceeded { .. })) => {
                    report.skipped.push(format!("{}: {e}", instance_name(kind, n, c)))
                }
                Err(e) => report.check(instance_name(kind, n, c), "oracle builds", e, false),
            }
        }
    }
    if suite.includes(Suite::Centralized) {
        centralized_checks(&mut report);
    }
    if suite.includes(Suite::Complete) {
        complete_scaling_checks(&mut report);
    }
    report
}

fn instance_checks(suite: Suite, inst: &Instance, report: &mut Report) {
    let name = inst.name();
    let deviation = inst.result.max_uniform_deviation();
    let uniform = deviation <= UNIFORM_TOLERANCE;
    let all_classes = inst.result.accessible().len() == inst.oracle.class_count();

    if suite.includes(Suite::Stationary) {
        report.check(
            format!("{name} stationary uniform"),
            format!("deviation <= {UNIFORM_TOLERANCE:e}"),
            format!("{deviation:e}"),
            uniform && all_classes,
        );
    }

    let forests = count_forests(&inst.network, None, DEFAULT_UNIT_EDGE_CAP);
    if suite.includes(Suite::Forests) {
        match &forests {
            Ok(f) => report.equal(format!("{name} forests = classes"), *f, inst.oracle.class_count() as u128),
            Err(e) => report.skipped.push(format!("{name} forests: {e}")),
        }
    }

    if inst.kind == TopologyKind::Cycle && suite.includes(Suite::Cycles) {
        match cycle_class_count(inst.n, inst.c) {
            Ok(k) => report.equal(format!("{name} class count"), k, BigUint::from(inst.oracle.class_count())),
            Err(e) => report.check(format!("{name} class count"), "formula", e, false),
        }
        for s in 0..inst.n {
            for t in 0..inst.n {
                if s == t {
                    continue;
                }
                let l = (t + inst.n - s) % inst.n;
                let formula = cycle_pair_success(inst.n, inst.c, l).expect("valid cycle");
                let exact = inst.pair_success_exact(s, t);
                let numeric = inst.oracle.pair_success(&inst.result, s, t);
                let to_f64 = crate::closed_form::to_f64(&formula);
                report.check(
                    format!("{name} pair {s}->{t} success"),
                    &formula,
                    format!("{exact} ({numeric})"),
                    uniform && exact == formula && (numeric - to_f64).abs() <= UNIFORM_TOLERANCE,
                );
            }
        }
    }

    if matches!(inst.kind, TopologyKind::Line | TopologyKind::Star) && suite.includes(Suite::Trees) {
        report.check(
            format!("{name} state-level uniform"),
            format!("{} singleton classes, deviation <= {UNIFORM_TOLERANCE:e}", inst.oracle.space().len()),
            format!("{} classes, {deviation:e}", inst.oracle.class_count()),
            uniform && all_classes && inst.oracle.class_count() as u64 == inst.oracle.space().len(),
        );
        let formula = tree_success_uniform(&inst.network, inst.c).expect("tree");
        let exact = inst.success_exact();
        let numeric = inst.result.success_probability();
        let passed =
            uniform && exact == formula && (numeric - crate::closed_form::to_f64(&formula)).abs() <= UNIFORM_TOLERANCE;
        report.check(format!("{name} success"), &formula, format!("{exact} ({numeric})"), passed);
    }

    if suite.includes(Suite::Bankruptcy) {
        let Ok(total) = forests else {
            report.skipped.push(format!("{name} bankruptcy: forest cap"));
            return;
        };
        for v in 0..inst.n {
            let without = match count_forests(&inst.network, Some(v), DEFAULT_UNIT_EDGE_CAP) {
                Ok(f) => f,
                Err(e) => {
                    report.skipped.push(format!("{name} bankruptcy of {v}: {e}"));
                    continue;
                }
            };
            let expected = Ratio::new(without, total);
            let exact = inst.oracle.bankrupt_class_fraction(v);
            let exact = Ratio::new(u128::from(*exact.numer()), u128::from(*exact.denom()));
            let numeric = inst.result.bankruptcy[v];
            let as_f64 = without as f64 / total as f64;
            let d = inst.network.incident_credit(v);
            report.check(
                format!("{name} bankruptcy of {v}"),
                format!("{expected} <= 1/{}", d + 1),
                format!("{exact} ({numeric})"),
                uniform
                    && exact == expected
                    && (numeric - as_f64).abs() <= UNIFORM_TOLERANCE
                    && expected <= Ratio::new(1, u128::from(d) + 1),
            );
        }
    }
}

fn centralized_checks(report: &mut Report) {
    let config = Default::default();
    for n in 2..=6 {
        for credit in 0..=8u64 {
            let name = format!("centralized(n={n}, C={credit})");
            let chain = match enumerate_centralized(n, credit, &config) {
                Ok(chain) => chain,
                Err(e) => {
                    report.check(name, "chain solves", e, false);
                    continue;
                }
            };
            let count = centralized_state_count(n, credit).expect("n >= 2");
            report.equal(format!("{name} states"), count, BigUint::from(chain.state_count()));
            let formula = centralized_failure(n, credit).expect("n >= 2");
            let formula = Ratio::new(u128::from(*formula.numer()), u128::from(*formula.denom()));
            let exact = chain.exact_failure();
            let as_f64 = *formula.numer() as f64 / *formula.denom() as f64;
            report.check(
                format!("{name} failure"),
                formula,
                format!("{exact} ({})", chain.failure_probability),
                exact == formula
                    && chain.max_uniform_deviation() <= UNIFORM_TOLERANCE
                    && (chain.failure_probability - as_f64).abs() <= UNIFORM_TOLERANCE,
            );
        }
    }
}

/// Oracle failure times `nc` over the small complete graphs, and the cut-sum
/// bound against the exact pair failure.
fn complete_scaling_checks(report: &mut Report) {
    let mut scaled = Vec::new();
    for (n, c) in [(3, 1), (3, 2), (4, 1), (4, 2), (5, 1)] {
        let inst = match Instance::build(TopologyKind::Complete, n, c) {
            Ok(inst) => inst,
            Err(e) => {
                report.check(instance_name(TopologyKind::Complete, n, c), "oracle builds", e, false);
                continue;
            }
        };
        scaled.push(inst.result.failure_probability * (n as f64) * f64::from(c));
        let pair_failure = BigRational::from_integer(BigInt::from(1)) - inst.pair_success_exact(0, 1);
        match complete_cut_bound(n, c, complete_forest_count) {
            Ok(bound) => report.check(
                format!("{} cut bound", inst.name()),
                format!(">= {pair_failure}"),
                &bound,
                bound >= pair_failure,
            ),
            Err(e) => report.skipped.push(format!("{} cut bound: {e}", inst.name())),
        }
    }
    if !scaled.is_empty() {
        let lo = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = scaled.iter().cloned().fold(0.0, f64::max);
        report.check(
            "complete failure x nc spread".into(),
            "max/min <= 2",
            format!("{:.4} ({lo:.4}..{hi:.4})", hi / lo),
            hi / lo <= 2.0,
        );
    }
}
