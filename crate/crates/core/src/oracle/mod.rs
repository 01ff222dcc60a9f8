//! Exhaustive ground truth for small networks.
//!
//! The oracle enumerates every state, groups states into cycle-reachability
//! classes by score vector, tabulates where each unit transaction takes each
//! class, and solves the class-level chain for its stationary distribution.
//! Exact failure, success and bankruptcy probabilities follow by summation.

pub mod centralized;
pub mod classes;
pub mod forests;
pub mod states;
pub mod stationary;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::lambda::TransactionMatrix;
use crate::network::{CreditNetwork, NetworkState, NodeId, Transaction};
use crate::routing::Router;

pub use classes::{directed_cycles, partition_classes, verify_cycle_reachability, ClassPartition};
pub use forests::{count_forests, DEFAULT_UNIT_EDGE_CAP};
pub use states::{enumerate_states, StateSpace, DEFAULT_STATE_CAP};
pub use stationary::{stationary_distribution, SolveMethod, SparseChain, Stationary, StationaryConfig};

const INFEASIBLE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub state_cap: u64,
    /// Members per class re-checked for identical feasibility and targets.
    pub representatives_per_class: usize,
    /// Classes whose cycle-reachability is confirmed by search; 0 disables.
    pub verify_classes: usize,
    pub stationary: StationaryConfig,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            state_cap: DEFAULT_STATE_CAP,
            representatives_per_class: 16,
            verify_classes: 0,
            stationary: StationaryConfig::default(),
        }
    }
}

/// Class structure and unit-transaction table of one network.
#[derive(Debug, Clone)]
pub struct ExactOracle {
    network: CreditNetwork,
    space: StateSpace,
    partition: ClassPartition,
    /// `targets[class * n * n + s * n + t]`: class after a unit payment from
    /// `s` to `t`, or `INFEASIBLE`.
    targets: Vec<u32>,
}

impl ExactOracle {
    pub fn build(network: &CreditNetwork, config: &OracleConfig) -> Result<Self> {
        let space = enumerate_states(network, config.state_cap)?;
        let partition = partition_classes(network, &space);
        if config.verify_classes > 0 {
            verify_cycle_reachability(network, &space, &partition, config.verify_classes)?;
        }
        let n = network.node_count();
        let k = partition.class_count();
        let mut targets = vec![INFEASIBLE; k * n * n];
        let mut router = Router::new(n);
        let mut row = vec![INFEASIBLE; n * n];

        for class in 0..k {
            let members = partition.members(class);
            let reps = config.representatives_per_class.max(1).min(members.len());
            let stride = members.len() / reps;
            for r in 0..reps {
                let index = members[r * stride];
                let state = space.decode(network, index);
                for s in 0..n {
                    for t in 0..n {
                        if s == t {
                            continue;
                        }
                        let txn = Transaction { payer: s, payee: t, value: 1 };
                        let mut next = state.clone();
                        let target = if router.transact(network, &mut next, &txn) {
                            let target = partition.class_of_state(space.encode(&next));
                            let mut expected = partition.key(class).clone();
                            expected.0[s] += 1;
                            expected.0[t] -= 1;
                            if partition.key(target) != &expected {
                                return Err(Error::ClassVerification(format!(
                                    "payment {s}->{t} from class {class} changed scores beyond its endpoints"
                                )));
                            }
                            target as u32
                        } else {
                            INFEASIBLE
                        };
                        let slot = s * n + t;
                        if r == 0 {
                            row[slot] = target;
                        } else if row[slot] != target {
                            return Err(Error::ClassVerification(format!(
                                "states {} and {index} of class {class} disagree on payment {s}->{t}",
                                members[0]
                            )));
                        }
                    }
                }
            }
            targets[class * n * n..(class + 1) * n * n].copy_from_slice(&row);
        }

        Ok(Self {
            network: network.clone(),
            space,
            partition,
            targets,
        })
    }

    pub fn network(&self) -> &CreditNetwork {
        &self.network
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn partition(&self) -> &ClassPartition {
        &self.partition
    }

    pub fn class_count(&self) -> usize {
        self.partition.class_count()
    }

    pub fn class_of(&self, state: &NetworkState) -> usize {
        self.partition.class_of_state(self.space.encode(state))
    }

    /// Class reached by a unit payment from `payer` to `payee`, if feasible.
    pub fn target(&self, class: usize, payer: NodeId, payee: NodeId) -> Option<usize> {
        let n = self.network.node_count();
        match self.targets[class * n * n + payer * n + payee] {
            INFEASIBLE => None,
            t => Some(t as usize),
        }
    }

    pub fn is_feasible(&self, class: usize, payer: NodeId, payee: NodeId) -> bool {
        self.target(class, payer, payee).is_some()
    }

    /// A node is bankrupt in a class when all its incident credit points
    /// outward.
    pub fn is_bankrupt(&self, class: usize, node: NodeId) -> bool {
        u64::from(self.partition.key(class).0[node]) == self.network.incident_credit(node)
    }

    /// Class-level transition matrix: feasible transactions move to their
    /// target class, infeasible mass stays on the diagonal.
    pub fn class_chain(&self, lambda: &TransactionMatrix) -> Result<SparseChain> {
        let n = self.network.node_count();
        if lambda.node_count() != n {
            return Err(Error::InvalidLambda(format!(
                "matrix over {} nodes for a network of {n}",
                lambda.node_count()
            )));
        }
        let support = lambda.support();
        let rows = (0..self.class_count())
            .map(|class| {
                support
                    .iter()
                    .map(|&(s, t, rate)| (self.target(class, s, t).unwrap_or(class), rate))
                    .collect()
            })
            .collect();
        SparseChain::new(rows)
    }

    /// Stationary behaviour under `lambda`, restricted to the classes
    /// accessible from `initial` (state index 0 when absent).
    pub fn stationary(
        &self,
        lambda: &TransactionMatrix,
        initial: Option<&NetworkState>,
        config: &StationaryConfig,
    ) -> Result<StationaryResult> {
        let chain = self.class_chain(lambda)?;
        let start = match initial {
            Some(state) => {
                state.check_invariants(&self.network)?;
                self.class_of(state)
            }
            None => self.partition.class_of_state(0),
        };
        let stationary = stationary_distribution(&chain, start, config)?;
        let pi = &stationary.pi;

        let failure_probability = stationary
            .accessible
            .iter()
            .map(|&class| {
                let blocked: f64 = lambda
                    .support()
                    .iter()
                    .filter(|&&(s, t, _)| !self.is_feasible(class, s, t))
                    .map(|&(_, _, r)| r)
                    .sum();
                pi[class] * blocked
            })
            .sum();
        let bankruptcy = (0..self.network.node_count())
            .map(|v| {
                stationary
                    .accessible
                    .iter()
                    .filter(|&&class| self.is_bankrupt(class, v))
                    .map(|&class| pi[class])
                    .sum()
            })
            .collect();

        Ok(StationaryResult {
            chain,
            stationary,
            failure_probability,
            bankruptcy,
        })
    }

    /// Stationary probability that a unit payment `payer -> payee` succeeds.
    pub fn pair_success(&self, result: &StationaryResult, payer: NodeId, payee: NodeId) -> f64 {
        result
            .stationary
            .accessible
            .iter()
            .filter(|&&class| self.is_feasible(class, payer, payee))
            .map(|&class| result.stationary.pi[class])
            .sum()
    }

    /// Fraction of all classes in which `payer -> payee` is feasible, as an
    /// exact ratio. Equals the stationary success probability whenever the
    /// stationary distribution is uniform over all classes.
    pub fn feasible_class_fraction(&self, payer: NodeId, payee: NodeId) -> Ratio<u64> {
        let feasible = (0..self.class_count())
            .filter(|&c| self.is_feasible(c, payer, payee))
            .count() as u64;
        Ratio::new(feasible, self.class_count() as u64)
    }

    /// Fraction of all classes in which `node` is bankrupt, exactly.
    pub fn bankrupt_class_fraction(&self, node: NodeId) -> Ratio<u64> {
        let bankrupt = (0..self.class_count()).filter(|&c| self.is_bankrupt(c, node)).count() as u64;
        Ratio::new(bankrupt, self.class_count() as u64)
    }

    /// Checks reciprocity at class level: `(s, t)` maps `i -> j` exactly when
    /// `(t, s)` maps `j -> i`.
    pub fn check_reciprocity(&self) -> Result<()> {
        let n = self.network.node_count();
        for class in 0..self.class_count() {
            for s in 0..n {
                for t in 0..n {
                    if s == t {
                        continue;
                    }
                    if let Some(j) = self.target(class, s, t) {
                        if self.target(j, t, s) != Some(class) {
                            return Err(Error::ClassVerification(format!(
                                "payment {s}->{t} maps class {class} to {j} but {t}->{s} does not map back"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Stationary solution of the class chain together with the derived
/// probabilities.
#[derive(Debug, Clone)]
pub struct StationaryResult {
    pub chain: SparseChain,
    pub stationary: Stationary,
    pub failure_probability: f64,
    /// Per-node stationary bankruptcy probability.
    pub bankruptcy: Vec<f64>,
}

impl StationaryResult {
    pub fn pi(&self) -> &[f64] {
        &self.stationary.pi
    }

    pub fn accessible(&self) -> &[usize] {
        &self.stationary.accessible
    }

    pub fn success_probability(&self) -> f64 {
        1.0 - self.failure_probability
    }

    /// Largest deviation of π from uniform over the accessible classes.
    pub fn max_uniform_deviation(&self) -> f64 {
        let k = self.stationary.accessible.len() as f64;
        self.stationary
            .accessible
            .iter()
            .map(|&c| (self.stationary.pi[c] - 1.0 / k).abs())
            .fold(0.0, f64::max)
    }
}

/// Long-run probability that a transaction drawn from `lambda` fails.
pub fn exact_failure_probability(network: &CreditNetwork, lambda: &TransactionMatrix) -> Result<f64> {
    let config = OracleConfig::default();
    let oracle = ExactOracle::build(network, &config)?;
    Ok(oracle.stationary(lambda, None, &config.stationary)?.failure_probability)
}

/// Long-run probability that `node` has no credit extended to it.
pub fn exact_bankruptcy_probability(network: &CreditNetwork, lambda: &TransactionMatrix, node: NodeId) -> Result<f64> {
    network.check_node(node)?;
    let config = OracleConfig::default();
    let oracle = ExactOracle::build(network, &config)?;
    Ok(oracle.stationary(lambda, None, &config.stationary)?.bankruptcy[node])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{generate, TopologyKind, TopologySpec};

    fn oracle(kind: TopologyKind, n: usize, c: u32) -> ExactOracle {
        let (net, _) = generate(&TopologySpec::new(kind, n, c)).unwrap();
        ExactOracle::build(&net, &OracleConfig::default()).unwrap()
    }

    fn uniform_result(o: &ExactOracle) -> StationaryResult {
        let lambda = TransactionMatrix::uniform(o.network().node_count()).unwrap();
        o.stationary(&lambda, None, &StationaryConfig::default()).unwrap()
    }

    #[test]
    fn triangle_failure_is_three_sevenths() {
        let o = oracle(TopologyKind::Cycle, 3, 1);
        let r = uniform_result(&o);
        assert!(r.max_uniform_deviation() < 1e-12);
        assert!((r.failure_probability - 3.0 / 7.0).abs() < 1e-12);
        // each ordered pair is blocked in exactly 3 of 7 classes
        for s in 0..3 {
            for t in 0..3 {
                if s != t {
                    assert_eq!(o.feasible_class_fraction(s, t), Ratio::new(4, 7));
                }
            }
        }
    }

    #[test]
    fn line_failure_is_seven_twelfths() {
        let o = oracle(TopologyKind::Line, 3, 1);
        let r = uniform_result(&o);
        assert_eq!(o.class_count(), 4);
        assert!((r.failure_probability - 7.0 / 12.0).abs() < 1e-12);
        for &p in r.pi() {
            assert!((p - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn triangle_bankruptcy_two_sevenths() {
        let o = oracle(TopologyKind::Cycle, 3, 1);
        let r = uniform_result(&o);
        for v in 0..3 {
            assert!((r.bankruptcy[v] - 2.0 / 7.0).abs() < 1e-12);
            assert!(r.bankruptcy[v] <= 1.0 / 3.0);
        }
    }

    #[test]
    fn leaf_bankruptcy_in_tree() {
        for c in 1..=3u32 {
            let o = oracle(TopologyKind::Star, 4, c);
            let r = uniform_result(&o);
            for leaf in 1..4 {
                assert!((r.bankruptcy[leaf] - 1.0 / f64::from(c + 1)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn symmetric_lambda_gives_symmetric_class_chain() {
        let o = oracle(TopologyKind::Complete, 4, 1);
        let rates = vec![
            0.0, 0.10, 0.05, 0.05, //
            0.10, 0.0, 0.10, 0.05, //
            0.05, 0.10, 0.0, 0.05, //
            0.05, 0.05, 0.05, 0.0,
        ];
        let total: f64 = rates.iter().sum();
        let rates: Vec<f64> = rates.iter().map(|r| r / total).collect();
        let lambda = TransactionMatrix::explicit(4, rates).unwrap();
        let chain = o.class_chain(&lambda).unwrap();
        for i in 0..chain.len() {
            for &(j, p) in chain.row(i) {
                assert!((chain.get(j, i) - p).abs() < 1e-15);
            }
        }
        let r = o.stationary(&lambda, None, &StationaryConfig::default()).unwrap();
        assert!(r.max_uniform_deviation() < 1e-12);
    }

    #[test]
    fn tree_class_chain_is_state_chain() {
        let o = oracle(TopologyKind::Line, 4, 2);
        assert_eq!(o.class_count() as u64, o.space().len());
    }

    #[test]
    fn rows_sum_to_one() {
        let o = oracle(TopologyKind::Cycle, 3, 1);
        let chain = o.class_chain(&TransactionMatrix::uniform(3).unwrap()).unwrap();
        for i in 0..chain.len() {
            let total: f64 = chain.row(i).iter().map(|&(_, p)| p).sum();
            assert!((total - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn reciprocity_holds() {
        for (kind, n, c) in [
            (TopologyKind::Cycle, 4, 2),
            (TopologyKind::Complete, 4, 1),
            (TopologyKind::Star, 4, 2),
        ] {
            oracle(kind, n, c).check_reciprocity().unwrap();
        }
    }

    #[test]
    fn directed_triangle_orientations() {
        // every orientation of the unit triangle: payments along a fully
        // directed 3-cycle succeed whichever hop they use
        let o = oracle(TopologyKind::Cycle, 3, 1);
        let net = o.network().clone();
        for index in 0..o.space().len() {
            let state = o.space().decode(&net, index);
            let scores = state.score_vector(&net);
            if scores.0 == vec![1, 1, 1] {
                let class = o.class_of(&state);
                for x in 0..3 {
                    for y in 0..3 {
                        if x != y && state.capacity(&net, x, y) == 1 {
                            assert!(o.is_feasible(class, y, x));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn degenerate_lambda_is_reducible() {
        let o = oracle(TopologyKind::Line, 3, 1);
        let lambda = TransactionMatrix::single_pair(3, 0, 2).unwrap();
        let err = o.stationary(&lambda, None, &StationaryConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Reducible { .. }), "{err:?}");
    }

    #[test]
    fn symmetric_partial_lambda_restricts_to_accessible_classes() {
        // only nodes 0 and 1 trade; edge (1, 2) never changes
        let o = oracle(TopologyKind::Line, 3, 2);
        let mut rates = vec![0.0; 9];
        rates[1] = 0.5;
        rates[3] = 0.5;
        let lambda = TransactionMatrix::explicit(3, rates).unwrap();
        let r = o.stationary(&lambda, None, &StationaryConfig::default()).unwrap();
        assert_eq!(r.accessible().len(), 3);
        assert!(r.max_uniform_deviation() < 1e-12);
    }

    #[test]
    fn free_functions() {
        let (net, _) = generate(&TopologySpec::new(TopologyKind::Cycle, 3, 1)).unwrap();
        let lambda = TransactionMatrix::uniform(3).unwrap();
        assert!((exact_failure_probability(&net, &lambda).unwrap() - 3.0 / 7.0).abs() < 1e-12);
        assert!((exact_bankruptcy_probability(&net, &lambda, 1).unwrap() - 2.0 / 7.0).abs() < 1e-12);
    }
}
