//! The centralized currency baseline: a bank at the root of a star, leaves
//! trusting the bank without limit, transactions only between leaves.

use crate::error::{Error, Result};
use crate::network::{CreditNetwork, NetworkState, NodeId};

/// Per-leaf credit extended by the bank. Leaf-to-bank credit is unbounded and
/// not represented.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CentralizedSystem {
    credits: Vec<u64>,
}

impl CentralizedSystem {
    pub fn new(credits: Vec<u64>) -> Result<Self> {
        if credits.is_empty() {
            return Err(Error::InvalidSpec("centralized system needs at least one leaf".into()));
        }
        Ok(Self { credits })
    }

    pub fn leaf_count(&self) -> usize {
        self.credits.len()
    }

    pub fn credits(&self) -> &[u64] {
        &self.credits
    }

    /// Total credit `C` the bank has extended.
    pub fn total_credit(&self) -> u64 {
        self.credits.iter().sum()
    }

    pub fn is_bankrupt(&self, leaf: NodeId) -> Result<bool> {
        self.credits
            .get(leaf)
            .map(|&c| c == 0)
            .ok_or(Error::UnknownNode { node: leaf, n: self.credits.len() })
    }

    /// Unit payment from `payer` to `payee`; fails exactly when the payer is
    /// bankrupt.
    pub fn transact(&mut self, payer: NodeId, payee: NodeId) -> Result<bool> {
        let n = self.credits.len();
        for node in [payer, payee] {
            if node >= n {
                return Err(Error::UnknownNode { node, n });
            }
        }
        if payer == payee {
            return Err(Error::InvalidTransaction(format!(
                "payer and payee are both leaf {payer}"
            )));
        }
        if self.credits[payer] == 0 {
            return Ok(false);
        }
        self.credits[payer] -= 1;
        self.credits[payee] += 1;
        Ok(true)
    }
}

/// Standalone centralized model with the given leaf credits.
pub fn centralized_chain(n_leaves: usize, credits: &[u64]) -> Result<CentralizedSystem> {
    if n_leaves == 0 {
        return Err(Error::InvalidSpec("centralized system needs at least one leaf".into()));
    }
    if credits.len() != n_leaves {
        return Err(Error::InvalidSpec(format!(
            "{} credits for {n_leaves} leaves",
            credits.len()
        )));
    }
    CentralizedSystem::new(credits.to_vec())
}

/// The centralized system giving every node the same credit it has available
/// in `initial`: `c_ru = sum_v c_vu`.
pub fn equivalent_centralized(network: &CreditNetwork, initial: &NetworkState) -> CentralizedSystem {
    let credits = (0..network.node_count())
        .map(|u| initial.available_credit(network, u).expect("node in range"))
        .collect();
    CentralizedSystem { credits }
}
