//! Direct enumeration of the centralized (bank and leaves) chain.

use std::collections::HashMap;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::oracle::stationary::{stationary_distribution, SparseChain, StationaryConfig};

/// Enumerated centralized chain under uniform transactions between leaves.
#[derive(Debug, Clone)]
pub struct CentralizedChain {
    pub leaves: usize,
    pub total_credit: u64,
    /// Every credit vector with the given total, in lexicographic order.
    pub states: Vec<Vec<u64>>,
    pub pi: Vec<f64>,
    pub residual: f64,
    /// Stationary failure probability summed from π.
    pub failure_probability: f64,
}

impl CentralizedChain {
    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    /// Failure probability as an exact ratio, assuming the uniform stationary
    /// distribution that the numerical solve confirms: blocked (state, payer)
    /// combinations over all of them.
    pub fn exact_failure(&self) -> Ratio<u128> {
        let bankrupt: u128 = self
            .states
            .iter()
            .map(|s| s.iter().filter(|&&x| x == 0).count() as u128)
            .sum();
        Ratio::new(bankrupt, self.states.len() as u128 * self.leaves as u128)
    }

    pub fn max_uniform_deviation(&self) -> f64 {
        let k = self.pi.len() as f64;
        self.pi.iter().map(|p| (p - 1.0 / k).abs()).fold(0.0, f64::max)
    }
}

fn compositions(total: u64, parts: usize, prefix: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
    if parts == 1 {
        prefix.push(total);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for first in 0..=total {
        prefix.push(first);
        compositions(total - first, parts - 1, prefix, out);
        prefix.pop();
    }
}

/// Builds and solves the centralized chain for `leaves` leaves sharing
/// `total_credit` units.
pub fn enumerate_centralized(leaves: usize, total_credit: u64, config: &StationaryConfig) -> Result<CentralizedChain> {
    if leaves < 2 {
        return Err(Error::InvalidSpec(format!("centralized chain needs at least 2 leaves, got {leaves}")));
    }
    let mut states = Vec::new();
    compositions(total_credit, leaves, &mut Vec::with_capacity(leaves), &mut states);
    let index: HashMap<&[u64], usize> = states.iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect();

    let rate = 1.0 / (leaves * (leaves - 1)) as f64;
    let mut rows = Vec::with_capacity(states.len());
    for (i, state) in states.iter().enumerate() {
        let mut row = Vec::with_capacity(leaves * (leaves - 1));
        let mut next = state.clone();
        for s in 0..leaves {
            for t in 0..leaves {
                if s == t {
                    continue;
                }
                if state[s] == 0 {
                    row.push((i, rate));
                } else {
                    next[s] -= 1;
                    next[t] += 1;
                    row.push((index[next.as_slice()], rate));
                    next[s] += 1;
                    next[t] -= 1;
                }
            }
        }
        rows.push(row);
    }
    let chain = SparseChain::new(rows)?;
    let solved = stationary_distribution(&chain, 0, config)?;
    let failure_probability = states
        .iter()
        .zip(&solved.pi)
        .map(|(s, p)| p * s.iter().filter(|&&x| x == 0).count() as f64 / leaves as f64)
        .sum();

    Ok(CentralizedChain {
        leaves,
        total_credit,
        states,
        pi: solved.pi,
        residual: solved.residual,
        failure_probability,
    })
}
