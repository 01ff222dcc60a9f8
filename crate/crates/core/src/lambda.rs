//! Transaction rate matrices: the probability `λ_st` that a given time step
//! attempts a payment from `s` to `t`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::network::NodeId;

const SUM_TOLERANCE: f64 = 1e-9;
const SYMMETRY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum TransactionMatrix {
    /// `λ_st = 1 / (n (n - 1))` for every ordered pair.
    Uniform { n: usize },
    /// Dense row-major rates with zero diagonal summing to one.
    Explicit {
        n: usize,
        rates: Vec<f64>,
        cumulative: Vec<f64>,
        symmetric: bool,
    },
}

impl TransactionMatrix {
    pub fn uniform(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidLambda(format!("need at least 2 nodes, got {n}")));
        }
        Ok(Self::Uniform { n })
    }

    /// Validates and wraps an `n x n` row-major rate matrix.
    pub fn explicit(n: usize, rates: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidLambda(format!("need at least 2 nodes, got {n}")));
        }
        if rates.len() != n * n {
            return Err(Error::InvalidLambda(format!(
                "expected {} rates, got {}",
                n * n,
                rates.len()
            )));
        }
        if let Some(bad) = rates.iter().find(|r| !r.is_finite() || **r < 0.0) {
            return Err(Error::InvalidLambda(format!("rate {bad} is negative or not finite")));
        }
        if let Some(v) = (0..n).find(|&v| rates[v * n + v] != 0.0) {
            return Err(Error::InvalidLambda(format!("λ_{v}{v} must be zero")));
        }
        let total: f64 = rates.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidLambda(format!("rates sum to {total}, not 1")));
        }
        let symmetric = (0..n).all(|s| {
            (0..n).all(|t| (rates[s * n + t] - rates[t * n + s]).abs() <= SYMMETRY_TOLERANCE)
        });
        let mut acc = 0.0;
        let cumulative = rates
            .iter()
            .map(|r| {
                acc += r;
                acc
            })
            .collect();
        Ok(Self::Explicit {
            n,
            rates,
            cumulative,
            symmetric,
        })
    }

    /// All mass on the single ordered pair `(payer, payee)`.
    pub fn single_pair(n: usize, payer: NodeId, payee: NodeId) -> Result<Self> {
        if payer >= n || payee >= n || payer == payee {
            return Err(Error::InvalidLambda(format!("bad pair ({payer}, {payee}) for {n} nodes")));
        }
        let mut rates = vec![0.0; n * n];
        rates[payer * n + payee] = 1.0;
        Self::explicit(n, rates)
    }

    pub fn node_count(&self) -> usize {
        match self {
            Self::Uniform { n } | Self::Explicit { n, .. } => *n,
        }
    }

    pub fn rate(&self, payer: NodeId, payee: NodeId) -> f64 {
        match self {
            Self::Uniform { n } => {
                if payer == payee {
                    0.0
                } else {
                    1.0 / (*n as f64 * (*n as f64 - 1.0))
                }
            }
            Self::Explicit { n, rates, .. } => rates[payer * n + payee],
        }
    }

    pub fn is_symmetric(&self) -> bool {
        match self {
            Self::Uniform { .. } => true,
            Self::Explicit { symmetric, .. } => *symmetric,
        }
    }

    /// Every off-diagonal rate positive; sufficient for an ergodic chain.
    pub fn all_positive(&self) -> bool {
        let n = self.node_count();
        (0..n).all(|s| (0..n).all(|t| s == t || self.rate(s, t) > 0.0))
    }

    /// Ordered pairs with positive rate, in row-major order.
    pub fn support(&self) -> Vec<(NodeId, NodeId, f64)> {
        let n = self.node_count();
        (0..n)
            .flat_map(|s| (0..n).map(move |t| (s, t)))
            .filter(|&(s, t)| s != t)
            .map(|(s, t)| (s, t, self.rate(s, t)))
            .filter(|&(_, _, r)| r > 0.0)
            .collect()
    }

    /// Draws an ordered pair `(payer, payee)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (NodeId, NodeId) {
        match self {
            Self::Uniform { n } => loop {
                let s = rng.gen_range(0..*n);
                let t = rng.gen_range(0..*n);
                if s != t {
                    return (s, t);
                }
            },
            Self::Explicit { n, rates, cumulative, .. } => {
                let total = *cumulative.last().expect("nonempty");
                let u = rng.gen::<f64>() * total;
                let idx = cumulative.partition_point(|&c| c <= u).min(rates.len() - 1);
                // rounding can land past the last positive cell
                let idx = (0..=idx).rev().find(|&i| rates[i] > 0.0).expect("rates sum to one");
                (idx / n, idx % n)
            }
        }
    }
}
