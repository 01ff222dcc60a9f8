//! Closed-form liquidity results for trees, cycles, complete graphs and the
//! centralized baseline, plus the reference curves used by the simulation
//! studies. Exact values are `BigRational`s.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
pub use num_rational::{BigRational, Ratio};
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::lambda::TransactionMatrix;
use crate::network::CreditNetwork;
use crate::oracle::forests::{count_forests, DEFAULT_UNIT_EDGE_CAP};

fn rational(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// `r = c / (c + 1)`: probability that one edge of capacity `c` can carry a
/// unit in a given direction under the uniform distribution on its splits.
pub fn edge_ratio(c: u32) -> BigRational {
    rational(u64::from(c), u64::from(c) + 1)
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

fn check_capacity(c: u32) -> Result<()> {
    if c == 0 {
        return Err(Error::InvalidFormula("capacity must be at least 1".into()));
    }
    Ok(())
}

fn check_uniform_tree(tree: &CreditNetwork, c: u32) -> Result<()> {
    check_capacity(c)?;
    if !tree.is_tree() {
        return Err(Error::InvalidFormula("network is not a tree".into()));
    }
    if let Some(e) = tree.edges().iter().find(|e| e.total != c) {
        return Err(Error::InvalidFormula(format!(
            "edge ({}, {}) has total {} instead of {c}",
            e.u, e.v, e.total
        )));
    }
    Ok(())
}

/// Steady-state success probability on a tree: `Σ λ_st r^dist(s,t)`.
pub fn tree_success(tree: &CreditNetwork, c: u32, lambda: &TransactionMatrix) -> Result<f64> {
    check_uniform_tree(tree, c)?;
    if lambda.node_count() != tree.node_count() {
        return Err(Error::InvalidFormula("transaction matrix size differs from the tree".into()));
    }
    let r = f64::from(c) / (f64::from(c) + 1.0);
    let mut total = 0.0;
    for s in 0..tree.node_count() {
        let dist = tree.hop_distances(s);
        for t in 0..tree.node_count() {
            if s != t {
                let l = dist[t].expect("trees are connected") as i32;
                total += lambda.rate(s, t) * r.powi(l);
            }
        }
    }
    Ok(total)
}

/// [`tree_success`] under uniform transactions, exactly.
pub fn tree_success_uniform(tree: &CreditNetwork, c: u32) -> Result<BigRational> {
    check_uniform_tree(tree, c)?;
    let n = tree.node_count();
    if n < 2 {
        return Err(Error::InvalidFormula("need at least two nodes".into()));
    }
    let r = edge_ratio(c);
    let mut total = BigRational::zero();
    for s in 0..n {
        for (t, d) in tree.hop_distances(s).into_iter().enumerate() {
            if s != t {
                total += num_traits::pow(r.clone(), d.expect("trees are connected"));
            }
        }
    }
    Ok(total / BigRational::from_integer(BigInt::from(n * (n - 1))))
}

/// Uniform success on the star with `n` nodes (hub included):
/// `r (2(n-1) + (n-1)(n-2) r) / (n(n-1))`.
pub fn star_success_uniform(n: usize, c: u32) -> Result<BigRational> {
    check_capacity(c)?;
    if n < 2 {
        return Err(Error::InvalidFormula("star needs at least two nodes".into()));
    }
    let r = edge_ratio(c);
    let m = BigRational::from_integer(BigInt::from(n - 1));
    let hub_pairs = BigRational::from_integer(BigInt::from(2)) * &m;
    let leaf_pairs = &m * BigRational::from_integer(BigInt::from(n - 2));
    Ok(r.clone() * (hub_pairs + leaf_pairs * r) / BigRational::from_integer(BigInt::from(n * (n - 1))))
}

fn check_cycle(n: usize, c: u32) -> Result<()> {
    check_capacity(c)?;
    if n < 3 {
        return Err(Error::InvalidFormula(format!("cycle needs at least 3 nodes, got {n}")));
    }
    Ok(())
}

/// Success probability for a pair at hop distance `l` on the `n`-cycle:
/// `(r^l + r^(n-l) - 2 r^n) / (1 - r^n)`.
pub fn cycle_pair_success(n: usize, c: u32, l: usize) -> Result<BigRational> {
    check_cycle(n, c)?;
    if l == 0 || l >= n {
        return Err(Error::InvalidFormula(format!("distance {l} outside 1..{n}")));
    }
    let r = edge_ratio(c);
    let rn = num_traits::pow(r.clone(), n);
    let two = BigRational::from_integer(BigInt::from(2));
    Ok((num_traits::pow(r.clone(), l) + num_traits::pow(r, n - l) - two * &rn) / (BigRational::one() - rn))
}

/// Cycle success averaged over `lambda`, with nodes `0..n` in cycle order.
pub fn cycle_success(n: usize, c: u32, lambda: &TransactionMatrix) -> Result<f64> {
    check_cycle(n, c)?;
    if lambda.node_count() != n {
        return Err(Error::InvalidFormula("transaction matrix size differs from the cycle".into()));
    }
    let per_distance: Vec<f64> = (1..n)
        .map(|l| cycle_pair_success(n, c, l).map(|x| to_f64(&x)))
        .collect::<Result<_>>()?;
    let mut total = 0.0;
    for s in 0..n {
        for t in 0..n {
            if s != t {
                total += lambda.rate(s, t) * per_distance[(t + n - s) % n - 1];
            }
        }
    }
    Ok(total)
}

/// [`cycle_success`] under uniform transactions, exactly. Every distance
/// `1..n` is equally likely.
pub fn cycle_success_uniform(n: usize, c: u32) -> Result<BigRational> {
    let mut total = BigRational::zero();
    for l in 1..n {
        total += cycle_pair_success(n, c, l)?;
    }
    Ok(total / BigRational::from_integer(BigInt::from(n - 1)))
}

/// Upper bound `2r / ((n-1)(1-r))` on uniform cycle success.
pub fn cycle_success_upper_bound(n: usize, c: u32) -> Result<BigRational> {
    check_cycle(n, c)?;
    let r = edge_ratio(c);
    let two = BigRational::from_integer(BigInt::from(2));
    Ok(two * &r / (BigRational::from_integer(BigInt::from(n - 1)) * (BigRational::one() - r)))
}

/// Number of classes on the `n`-cycle: `(c+1)^(n-1) (1 - r^n) / (1 - r)`.
pub fn cycle_class_count(n: usize, c: u32) -> Result<BigUint> {
    check_cycle(n, c)?;
    let r = edge_ratio(c);
    let base = BigRational::from_integer(num_traits::pow(BigInt::from(c + 1), n - 1));
    let value = base * (BigRational::one() - num_traits::pow(r.clone(), n)) / (BigRational::one() - r);
    if !value.is_integer() {
        return Err(Error::InvalidFormula(format!("class count {value} is not an integer")));
    }
    Ok(value.to_integer().to_biguint().expect("positive"))
}

/// Failure probability `(n-1)/(C+n-1)` of the centralized system.
pub fn centralized_failure(n_leaves: usize, total_credit: u64) -> Result<Ratio<u64>> {
    if n_leaves < 2 {
        return Err(Error::InvalidFormula(format!("need at least 2 leaves, got {n_leaves}")));
    }
    let n = n_leaves as u64 - 1;
    Ok(Ratio::new(n, total_credit + n))
}

/// States of the centralized chain: `C(C+n-1, n-1)`.
pub fn centralized_state_count(n_leaves: usize, total_credit: u64) -> Result<BigUint> {
    if n_leaves == 0 {
        return Err(Error::InvalidFormula("need at least one leaf".into()));
    }
    Ok(binomial(total_credit + n_leaves as u64 - 1, n_leaves as u64 - 1))
}

fn binomial(n: u64, k: u64) -> BigUint {
    let k = k.min(n - k);
    (0..k).fold(BigUint::one(), |acc, i| acc * (n - i) / (i + 1))
}

/// Per-node bankruptcy bounds and the degree means that govern them.
#[derive(Debug, Clone, PartialEq)]
pub struct BankruptcyBound {
    /// Total credit incident on each node.
    pub credit: Vec<u64>,
    /// `1 / (d_v + 1)` per node.
    pub bound: Vec<Ratio<u64>>,
    /// Harmonic mean of the `d_v`; zero when some node has none.
    pub harmonic_mean: f64,
    pub arithmetic_mean: f64,
}

pub fn bankruptcy_bound(network: &CreditNetwork) -> BankruptcyBound {
    let n = network.node_count();
    let credit: Vec<u64> = (0..n).map(|v| network.incident_credit(v)).collect();
    let bound = credit.iter().map(|&d| Ratio::new(1, d + 1)).collect();
    let harmonic_mean = if n == 0 || credit.contains(&0) {
        0.0
    } else {
        n as f64 / credit.iter().map(|&d| 1.0 / d as f64).sum::<f64>()
    };
    let arithmetic_mean = if n == 0 {
        0.0
    } else {
        credit.iter().sum::<u64>() as f64 / n as f64
    };
    BankruptcyBound {
        credit,
        bound,
        harmonic_mean,
        arithmetic_mean,
    }
}

/// Forests of the complete graph on `k` nodes with capacity `c`.
pub fn complete_forest_count(k: usize, c: u32) -> Result<u128> {
    let net = CreditNetwork::new(k, (0..k).flat_map(|u| (u + 1..k).map(move |v| (u, v, c))))?;
    count_forests(&net, None, DEFAULT_UNIT_EDGE_CAP)
}

/// Cut-sum bound on the failure probability of a fixed pair in `K_{n;c}`:
/// `(1/a_n) Σ_{k=1}^{n-1} C(n-2, k-1) a_k a_{n-k}`, where `a_k` is the
/// forest count supplied by `forests(k)`.
pub fn complete_cut_bound(n: usize, c: u32, mut forests: impl FnMut(usize, u32) -> Result<u128>) -> Result<BigRational> {
    check_capacity(c)?;
    if n < 2 {
        return Err(Error::InvalidFormula("need at least two nodes".into()));
    }
    let a: Vec<BigInt> = (0..=n)
        .map(|k| if k == 0 { Ok(BigInt::one()) } else { forests(k, c).map(BigInt::from) })
        .collect::<Result<_>>()?;
    let mut sum = BigInt::zero();
    for k in 1..n {
        sum += BigInt::from(binomial(n as u64 - 2, k as u64 - 1)) * &a[k] * &a[n - k];
    }
    Ok(BigRational::new(sum, a[n].clone()))
}

/// Named reference curves for the simulation studies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReferenceCurve {
    /// `1 - 2/(npc)`, success on G(n, p).
    GnpConjecture { n: usize, p: f64, c: u32 },
    /// `1 - 1/(dc)`, success on BA graphs (the G(n, p) curve at equal
    /// density `np = 2d`).
    BaConjecture { d: usize, c: u32 },
    /// `(n-1)/(C(n,2) c + n-1)`, failure of the centralized equivalent of
    /// `K_{n;c}`.
    CompleteCentralized { n: usize, c: u32 },
    /// `(n-1)/(C(n,2) p c + n-1)`.
    GnpCentralized { n: usize, p: f64, c: u32 },
    /// `(n-1)/(n d c + n-1)`.
    BaCentralized { n: usize, d: usize, c: u32 },
}

impl ReferenceCurve {
    pub fn name(&self) -> &'static str {
        match self {
            ReferenceCurve::GnpConjecture { .. } => "gnp",
            ReferenceCurve::BaConjecture { .. } => "ba",
            ReferenceCurve::CompleteCentralized { .. } => "complete-centralized",
            ReferenceCurve::GnpCentralized { .. } => "gnp-centralized",
            ReferenceCurve::BaCentralized { .. } => "ba-centralized",
        }
    }

    /// Evaluates the curve. Success curves are clamped at zero where the
    /// expression goes negative for very sparse parameters.
    pub fn evaluate(&self) -> Result<f64> {
        let positive = |x: f64, what: &str| {
            if x > 0.0 && x.is_finite() {
                Ok(x)
            } else {
                Err(Error::InvalidFormula(format!("{what} must be positive, got {x}")))
            }
        };
        let value = match *self {
            ReferenceCurve::GnpConjecture { n, p, c } => {
                let npc = positive(n as f64, "n")? * positive(p, "p")? * positive(f64::from(c), "c")?;
                (1.0 - 2.0 / npc).max(0.0)
            }
            ReferenceCurve::BaConjecture { d, c } => {
                let dc = positive(d as f64, "d")? * positive(f64::from(c), "c")?;
                (1.0 - 1.0 / dc).max(0.0)
            }
            ReferenceCurve::CompleteCentralized { n, c } => {
                let n = positive(n as f64, "n")?;
                let pairs = n * (n - 1.0) / 2.0;
                (n - 1.0) / (pairs * positive(f64::from(c), "c")? + n - 1.0)
            }
            ReferenceCurve::GnpCentralized { n, p, c } => {
                let n = positive(n as f64, "n")?;
                let pairs = n * (n - 1.0) / 2.0;
                (n - 1.0) / (pairs * positive(p, "p")? * positive(f64::from(c), "c")? + n - 1.0)
            }
            ReferenceCurve::BaCentralized { n, d, c } => {
                let n = positive(n as f64, "n")?;
                (n - 1.0) / (n * positive(d as f64, "d")? * positive(f64::from(c), "c")? + n - 1.0)
            }
        };
        if value.is_nan() {
            return Err(Error::InvalidFormula(format!("{} is undefined here", self.name())));
        }
        Ok(value)
    }
}

impl fmt::Display for ReferenceCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Curve names as accepted on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    Gnp,
    Ba,
    CompleteCentralized,
    GnpCentralized,
    BaCentralized,
}

impl FromStr for CurveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gnp" | "gnp-conjecture" => Ok(CurveKind::Gnp),
            "ba" | "ba-conjecture" => Ok(CurveKind::Ba),
            "complete-centralized" => Ok(CurveKind::CompleteCentralized),
            "gnp-centralized" => Ok(CurveKind::GnpCentralized),
            "ba-centralized" => Ok(CurveKind::BaCentralized),
            other => Err(Error::InvalidFormula(format!("unknown reference curve {other:?}"))),
        }
    }
}

/// Evaluates a reference curve by name; parameters a curve does not use are
/// ignored, missing ones are errors.
pub fn reference_curve(kind: CurveKind, n: Option<usize>, p: Option<f64>, d: Option<usize>, c: u32) -> Result<f64> {
    let need = |name: &str| Error::InvalidFormula(format!("curve needs --{name}"));
    let curve = match kind {
        CurveKind::Gnp => ReferenceCurve::GnpConjecture {
            n: n.ok_or_else(|| need("n"))?,
            p: p.ok_or_else(|| need("p"))?,
            c,
        },
        CurveKind::Ba => ReferenceCurve::BaConjecture {
            d: d.ok_or_else(|| need("d"))?,
            c,
        },
        CurveKind::CompleteCentralized => ReferenceCurve::CompleteCentralized {
            n: n.ok_or_else(|| need("n"))?,
            c,
        },
        CurveKind::GnpCentralized => ReferenceCurve::GnpCentralized {
            n: n.ok_or_else(|| need("n"))?,
            p: p.ok_or_else(|| need("p"))?,
            c,
        },
        CurveKind::BaCentralized => ReferenceCurve::BaCentralized {
            n: n.ok_or_else(|| need("n"))?,
            d: d.ok_or_else(|| need("d"))?,
            c,
        },
    };
    curve.evaluate()
}
