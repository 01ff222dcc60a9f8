//! Static topology and dynamic credit state of a credit network.
//!
//! Edge capacities follow the IOU convention: `c_uv` is the credit line node
//! `u` extends to node `v`, denominated in `v`'s currency. Every undirected
//! edge has a fixed total `c_uv + c_vu`; payments only move credit between
//! the two directions.

use std::fmt;

use crate::error::{Error, Result};

pub type NodeId = usize;

/// An undirected edge with canonical ordering `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub u: NodeId,
    pub v: NodeId,
    pub total: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Neighbor {
    pub node: NodeId,
    pub edge: usize,
}

/// Node set plus undirected edges carrying a fixed total credit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CreditNetwork {
    n: usize,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<Neighbor>>,
}

impl CreditNetwork {
    /// Builds a network from `(u, v, total)` triples. Endpoints may be given
    /// in either order; they are stored canonically.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (NodeId, NodeId, u32)>) -> Result<Self> {
        let mut canonical = Vec::new();
        for (a, b, total) in edges {
            for node in [a, b] {
                if node >= n {
                    return Err(Error::UnknownNode { node, n });
                }
            }
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            if total == 0 {
                return Err(Error::ZeroTotalEdge(a.min(b), a.max(b)));
            }
            canonical.push(Edge {
                u: a.min(b),
                v: a.max(b),
                total,
            });
        }

        let mut adjacency = vec![Vec::new(); n];
        for (idx, e) in canonical.iter().enumerate() {
            adjacency[e.u].push(Neighbor { node: e.v, edge: idx });
            adjacency[e.v].push(Neighbor { node: e.u, edge: idx });
        }
        for (node, list) in adjacency.iter_mut().enumerate() {
            list.sort_unstable_by_key(|nb| nb.node);
            if let Some(w) = list.windows(2).find(|w| w[0].node == w[1].node) {
                return Err(Error::DuplicateEdge(node.min(w[0].node), node.max(w[0].node)));
            }
        }

        Ok(Self {
            n,
            edges: canonical,
            adjacency,
        })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, idx: usize) -> Edge {
        self.edges[idx]
    }

    /// Neighbors of `node` in ascending id order.
    pub fn neighbors(&self, node: NodeId) -> &[Neighbor] {
        &self.adjacency[node]
    }

    pub fn check_node(&self, node: NodeId) -> Result<()> {
        if node < self.n {
            Ok(())
        } else {
            Err(Error::UnknownNode { node, n: self.n })
        }
    }

    /// Index of the edge joining `a` and `b`, if any.
    pub fn edge_between(&self, a: NodeId, b: NodeId) -> Option<usize> {
        let list = self.adjacency.get(a)?;
        list.binary_search_by_key(&b, |nb| nb.node)
            .ok()
            .map(|pos| list[pos].edge)
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.adjacency[node].len()
    }

    /// Total credit on all edges incident to `node` (`d_v`).
    pub fn incident_credit(&self, node: NodeId) -> u64 {
        self.adjacency[node]
            .iter()
            .map(|nb| u64::from(self.edges[nb.edge].total))
            .sum()
    }

    /// Sum of all edge totals; constant across every state.
    pub fn total_credit(&self) -> u64 {
        self.edges.iter().map(|e| u64::from(e.total)).sum()
    }

    /// Number of states of the induced Markov chain, `prod (total_e + 1)`.
    pub fn state_space_size(&self) -> u128 {
        self.edges
            .iter()
            .try_fold(1u128, |acc, e| acc.checked_mul(u128::from(e.total) + 1))
            .unwrap_or(u128::MAX)
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(x) = stack.pop() {
            for nb in &self.adjacency[x] {
                if !seen[nb.node] {
                    seen[nb.node] = true;
                    count += 1;
                    stack.push(nb.node);
                }
            }
        }
        count == self.n
    }

    /// True when the network is connected and acyclic.
    pub fn is_tree(&self) -> bool {
        self.n >= 1 && self.edges.len() + 1 == self.n && self.is_connected()
    }

    /// Hop distances from `source` over the undirected topology.
    pub fn hop_distances(&self, source: NodeId) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n];
        let mut queue = std::collections::VecDeque::new();
        dist[source] = Some(0);
        queue.push_back(source);
        while let Some(x) = queue.pop_front() {
            let next = dist[x].map(|d| d + 1);
            for nb in &self.adjacency[x] {
                if dist[nb.node].is_none() {
                    dist[nb.node] = next;
                    queue.push_back(nb.node);
                }
            }
        }
        dist
    }

    /// The same topology with `node` and its incident edges removed. Node ids
    /// above `node` shift down by one.
    pub fn without_node(&self, node: NodeId) -> Result<Self> {
        self.check_node(node)?;
        let relabel = |x: NodeId| if x > node { x - 1 } else { x };
        CreditNetwork::new(
            self.n - 1,
            self.edges
                .iter()
                .filter(|e| e.u != node && e.v != node)
                .map(|e| (relabel(e.u), relabel(e.v), e.total)),
        )
    }
}

/// Per-edge credit split; the state of the induced Markov chain.
///
/// `splits[e] = [c_uv, c_vu]` for canonical edge `e = (u, v)`, `u < v`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NetworkState {
    splits: Vec<[u32; 2]>,
}

impl NetworkState {
    /// Builds a state, checking every split against the network's totals.
    pub fn new(network: &CreditNetwork, splits: Vec<[u32; 2]>) -> Result<Self> {
        let state = Self { splits };
        state.check_invariants(network)?;
        Ok(state)
    }

    /// Builds a state from the canonical-direction capacities `c_uv` alone.
    pub fn from_forward(network: &CreditNetwork, forward: &[u32]) -> Result<Self> {
        if forward.len() != network.edge_count() {
            return Err(Error::StateMismatch(format!(
                "{} forward capacities for {} edges",
                forward.len(),
                network.edge_count()
            )));
        }
        let mut splits = Vec::with_capacity(forward.len());
        for (e, &f) in network.edges().iter().zip(forward) {
            if f > e.total {
                return Err(Error::StateMismatch(format!(
                    "capacity {f} exceeds total {} on edge ({}, {})",
                    e.total, e.u, e.v
                )));
            }
            splits.push([f, e.total - f]);
        }
        Ok(Self { splits })
    }

    pub fn splits(&self) -> &[[u32; 2]] {
        &self.splits
    }

    /// `(c_uv, c_vu)` of canonical edge `idx`.
    pub fn split(&self, idx: usize) -> (u32, u32) {
        let [a, b] = self.splits[idx];
        (a, b)
    }

    /// Capacity of directed edge `from -> to` given its undirected edge index.
    #[inline]
    pub fn directed_capacity(&self, network: &CreditNetwork, edge: usize, from: NodeId) -> u32 {
        let e = network.edges[edge];
        if from == e.u {
            self.splits[edge][0]
        } else {
            self.splits[edge][1]
        }
    }

    /// Capacity `c_{from,to}`; zero if there is no edge.
    pub fn capacity(&self, network: &CreditNetwork, from: NodeId, to: NodeId) -> u32 {
        network
            .edge_between(from, to)
            .map_or(0, |e| self.directed_capacity(network, e, from))
    }

    /// Moves `amount` of credit from direction `from -> to` to `to -> from`.
    /// Caller guarantees capacity.
    #[inline]
    pub(crate) fn shift(&mut self, network: &CreditNetwork, edge: usize, from: NodeId, amount: u32) {
        let (consumed, created) = if from == network.edges[edge].u { (0, 1) } else { (1, 0) };
        self.splits[edge][consumed] -= amount;
        self.splits[edge][created] += amount;
    }

    /// Verifies that every split is integral, nonnegative and sums to its
    /// edge total.
    pub fn check_invariants(&self, network: &CreditNetwork) -> Result<()> {
        if self.splits.len() != network.edge_count() {
            return Err(Error::StateMismatch(format!(
                "{} splits for {} edges",
                self.splits.len(),
                network.edge_count()
            )));
        }
        for (e, s) in network.edges().iter().zip(&self.splits) {
            if u64::from(s[0]) + u64::from(s[1]) != u64::from(e.total) {
                return Err(Error::StateMismatch(format!(
                    "edge ({}, {}) split {}+{} != total {}",
                    e.u, e.v, s[0], s[1], e.total
                )));
            }
        }
        Ok(())
    }

    /// Total unused credit extended to `node`: `sum_u c_{u,node}`.
    pub fn available_credit(&self, network: &CreditNetwork, node: NodeId) -> Result<u64> {
        network.check_node(node)?;
        Ok(network
            .neighbors(node)
            .iter()
            .map(|nb| u64::from(self.directed_capacity(network, nb.edge, nb.node)))
            .sum())
    }

    /// A bankrupt node has no credit extended to it and cannot pay anyone.
    pub fn is_bankrupt(&self, network: &CreditNetwork, node: NodeId) -> Result<bool> {
        Ok(self.available_credit(network, node)? == 0)
    }

    /// Per-node total outgoing capacity.
    pub fn score_vector(&self, network: &CreditNetwork) -> ScoreVector {
        let mut scores = vec![0u32; network.node_count()];
        for (e, s) in network.edges().iter().zip(&self.splits) {
            scores[e.u] += s[0];
            scores[e.v] += s[1];
        }
        ScoreVector(scores)
    }

    /// Canonical-direction capacities `c_uv`, one per edge.
    pub fn forward(&self) -> Vec<u32> {
        self.splits.iter().map(|s| s[0]).collect()
    }
}

/// Generalized score vector: total outgoing capacity per node.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ScoreVector(pub Vec<u32>);

impl ScoreVector {
    pub fn total(&self) -> u64 {
        self.0.iter().map(|&x| u64::from(x)).sum()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }
}

// lets maps keyed by score vector be probed with a plain slice
impl std::borrow::Borrow<[u32]> for ScoreVector {
    fn borrow(&self) -> &[u32] {
        &self.0
    }
}

impl fmt::Display for ScoreVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ">")
    }
}

/// A payment of `value` units from `payer` to `payee`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Transaction {
    pub payer: NodeId,
    pub payee: NodeId,
    pub value: u32,
}

impl Transaction {
    pub fn new(payer: NodeId, payee: NodeId, value: u32) -> Result<Self> {
        if payer == payee {
            return Err(Error::InvalidTransaction(format!(
                "payer and payee are both node {payer}"
            )));
        }
        if value == 0 {
            return Err(Error::InvalidTransaction("payment value must be at least 1".into()));
        }
        Ok(Self { payer, payee, value })
    }

    /// Unit payment, the only kind the repeated-transaction model uses.
    pub fn unit(payer: NodeId, payee: NodeId) -> Result<Self> {
        Self::new(payer, payee, 1)
    }

    pub fn reversed(&self) -> Self {
        Self {
            payer: self.payee,
            payee: self.payer,
            value: self.value,
        }
    }
}

/// One row of an edge list: `(u, v, c_uv, c_vu)`.
pub type EdgeSpec = (NodeId, NodeId, i64, i64);

/// Builds a network and its initial state from `(u, v, c_uv, c_vu)` rows.
/// The node count is one more than the largest id mentioned, or `n` when
/// given and larger.
pub fn build_network(n: Option<usize>, rows: &[EdgeSpec]) -> Result<(CreditNetwork, NetworkState)> {
    let max_id = rows.iter().map(|&(u, v, _, _)| u.max(v) + 1).max().unwrap_or(0);
    let n = n.unwrap_or(0).max(max_id);

    let mut triples = Vec::with_capacity(rows.len());
    let mut directed = Vec::with_capacity(rows.len());
    for &(a, b, c_ab, c_ba) in rows {
        if a == b {
            return Err(Error::SelfLoop(a));
        }
        if c_ab < 0 || c_ba < 0 {
            return Err(Error::NegativeCapacity(a.min(b), a.max(b)));
        }
        let total = c_ab + c_ba;
        if total == 0 {
            return Err(Error::ZeroTotalEdge(a.min(b), a.max(b)));
        }
        let total = u32::try_from(total)
            .map_err(|_| Error::InvalidSpec(format!("edge ({a}, {b}) total {total} overflows")))?;
        triples.push((a, b, total));
        // store in canonical orientation
        let (c_uv, c_vu) = if a < b { (c_ab, c_ba) } else { (c_ba, c_ab) };
        directed.push([c_uv as u32, c_vu as u32]);
    }
    let network = CreditNetwork::new(n, triples)?;
    let state = NetworkState::new(&network, directed)?;
    Ok((network, state))
}

#[cfg(test)]
mod tests {
    use super::*;

    // Illustrative three-node example: u=0, v=1, w=2 with c1 = 2, c2 = 1.
    fn three_node_path() -> (CreditNetwork, NetworkState) {
        build_network(None, &[(0, 1, 2, 0), (1, 2, 1, 0)]).unwrap()
    }

    #[test]
    fn builds_path_example() {
        let (net, state) = three_node_path();
        assert_eq!(net.node_count(), 3);
        assert_eq!(net.edge(0).total, 2);
        assert_eq!(net.edge(1).total, 1);
        assert_eq!(state.split(0), (2, 0));
        assert_eq!(state.split(1), (1, 0));
    }

    #[test]
    fn rejects_zero_total_edge() {
        assert_eq!(
            build_network(None, &[(0, 1, 0, 0)]).unwrap_err(),
            Error::ZeroTotalEdge(0, 1)
        );
    }

    #[test]
    fn rejects_duplicate_edge() {
        assert_eq!(
            build_network(None, &[(0, 1, 1, 0), (0, 1, 0, 1)]).unwrap_err(),
            Error::DuplicateEdge(0, 1)
        );
        assert_eq!(
            build_network(None, &[(0, 1, 1, 0), (1, 0, 0, 1)]).unwrap_err(),
            Error::DuplicateEdge(0, 1)
        );
    }

    #[test]
    fn rejects_self_loop_and_negative() {
        assert_eq!(build_network(None, &[(2, 2, 1, 0)]).unwrap_err(), Error::SelfLoop(2));
        assert_eq!(
            build_network(None, &[(0, 1, -1, 2)]).unwrap_err(),
            Error::NegativeCapacity(0, 1)
        );
    }

    #[test]
    fn reversed_rows_are_canonicalized() {
        let (net, state) = build_network(None, &[(1, 0, 3, 1)]).unwrap();
        assert_eq!(net.edge(0), Edge { u: 0, v: 1, total: 4 });
        // c_10 = 3, so c_01 = 1
        assert_eq!(state.split(0), (1, 3));
        assert_eq!(state.capacity(&net, 1, 0), 3);
    }

    #[test]
    fn available_credit_and_bankruptcy() {
        let (net, state) = three_node_path();
        assert_eq!(state.available_credit(&net, 0).unwrap(), 0);
        assert_eq!(state.available_credit(&net, 1).unwrap(), 2);
        assert!(state.is_bankrupt(&net, 0).unwrap());
        assert!(!state.is_bankrupt(&net, 1).unwrap());
        assert!(matches!(
            state.available_credit(&net, 7),
            Err(Error::UnknownNode { node: 7, n: 3 })
        ));

        let (tri, tri_state) =
            build_network(None, &[(0, 1, 1, 1), (1, 2, 1, 1), (0, 2, 1, 1)]).unwrap();
        for v in 0..3 {
            assert_eq!(tri_state.available_credit(&tri, v).unwrap(), 2);
        }
    }

    #[test]
    fn single_node_is_bankrupt() {
        let (net, state) = build_network(Some(1), &[]).unwrap();
        assert!(state.is_bankrupt(&net, 0).unwrap());
    }

    #[test]
    fn score_vector_of_example() {
        let (net, state) = three_node_path();
        assert_eq!(state.score_vector(&net), ScoreVector(vec![2, 1, 0]));
        assert_eq!(state.score_vector(&net).total(), net.total_credit());
    }

    #[test]
    fn reversed_state_keeps_total_credit() {
        let (net, state) =
            build_network(None, &[(0, 1, 3, 1), (1, 2, 0, 2), (0, 2, 1, 1), (2, 3, 5, 0)]).unwrap();
        let flipped: Vec<[u32; 2]> = state.splits().iter().map(|s| [s[1], s[0]]).collect();
        let flipped = NetworkState::new(&net, flipped).unwrap();
        assert_eq!(
            state.score_vector(&net).total(),
            flipped.score_vector(&net).total()
        );
    }

    #[test]
    fn transaction_validation() {
        assert!(Transaction::new(1, 1, 1).is_err());
        assert!(Transaction::new(0, 1, 0).is_err());
        assert_eq!(Transaction::unit(0, 1).unwrap().reversed(), Transaction::unit(1, 0).unwrap());
    }

    #[test]
    fn state_space_and_removal() {
        let net = CreditNetwork::new(3, [(0, 1, 1), (1, 2, 1), (0, 2, 1)]).unwrap();
        assert_eq!(net.state_space_size(), 8);
        let reduced = net.without_node(1).unwrap();
        assert_eq!(reduced.node_count(), 2);
        assert_eq!(reduced.edges(), &[Edge { u: 0, v: 1, total: 1 }]);
        assert!(!net.is_tree());
        assert!(reduced.is_tree());
    }
}
