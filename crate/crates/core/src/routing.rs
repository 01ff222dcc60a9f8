//! Payment routing.
//!
//! A payment from `s` to `t` travels as IOUs from payer to payee, which
//! consumes credit along a directed path *from `t` to `s`*: every hop
//! `x -> y` on that path needs `c_xy >= p`, and routing moves `p` units from
//! `c_xy` to `c_yx`.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::network::{CreditNetwork, NetworkState, NodeId, Transaction};

/// Breadth-first router with reusable scratch space.
///
/// Neighbors are expanded in ascending id order, so among hop-shortest paths
/// the lexicographically smallest node sequence is found.
#[derive(Debug, Clone)]
pub struct Router {
    parent: Vec<usize>,
    parent_edge: Vec<usize>,
    stamp: Vec<u32>,
    epoch: u32,
    queue: Vec<usize>,
}

impl Router {
    pub fn new(n: usize) -> Self {
        Self {
            parent: vec![0; n],
            parent_edge: vec![0; n],
            stamp: vec![0; n],
            epoch: 0,
            queue: Vec::with_capacity(n),
        }
    }

    fn reset(&mut self, n: usize) {
        if self.stamp.len() != n {
            *self = Self::new(n);
        }
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
    }

    /// Runs the search; true when `txn.payer` is reachable from `txn.payee`.
    fn search(&mut self, network: &CreditNetwork, state: &NetworkState, txn: &Transaction) -> bool {
        self.reset(network.node_count());
        let (source, target) = (txn.payee, txn.payer);
        self.queue.clear();
        self.queue.push(source);
        self.stamp[source] = self.epoch;
        let mut head = 0;
        while head < self.queue.len() {
            let x = self.queue[head];
            head += 1;
            for nb in network.neighbors(x) {
                if self.stamp[nb.node] == self.epoch
                    || state.directed_capacity(network, nb.edge, x) < txn.value
                {
                    continue;
                }
                self.stamp[nb.node] = self.epoch;
                self.parent[nb.node] = x;
                self.parent_edge[nb.node] = nb.edge;
                if nb.node == target {
                    return true;
                }
                self.queue.push(nb.node);
            }
        }
        false
    }

    /// Hop-shortest feasible path `payee = x_0 -> ... -> x_k = payer`.
    pub fn shortest_path(
        &mut self,
        network: &CreditNetwork,
        state: &NetworkState,
        txn: &Transaction,
    ) -> Option<Vec<NodeId>> {
        if !self.search(network, state, txn) {
            return None;
        }
        let mut path = vec![txn.payer];
        let mut x = txn.payer;
        while x != txn.payee {
            x = self.parent[x];
            path.push(x);
        }
        path.reverse();
        Some(path)
    }

    /// Routes `txn` along the shortest feasible path if one exists. A failed
    /// transaction leaves the state untouched.
    pub fn transact(&mut self, network: &CreditNetwork, state: &mut NetworkState, txn: &Transaction) -> bool {
        if !self.search(network, state, txn) {
            return false;
        }
        let mut x = txn.payer;
        while x != txn.payee {
            let from = self.parent[x];
            state.shift(network, self.parent_edge[x], from, txn.value);
            x = from;
        }
        true
    }
}

fn validate(network: &CreditNetwork, txn: &Transaction) -> Result<()> {
    network.check_node(txn.payer)?;
    network.check_node(txn.payee)?;
    if txn.payer == txn.payee || txn.value == 0 {
        return Err(Error::InvalidTransaction(format!("{txn:?}")));
    }
    Ok(())
}

/// Hop-shortest directed credit path from payee to payer with capacity at
/// least the payment value on every hop; ties go to the lexicographically
/// smallest node sequence.
pub fn shortest_feasible_path(
    network: &CreditNetwork,
    state: &NetworkState,
    txn: &Transaction,
) -> Result<Option<Vec<NodeId>>> {
    validate(network, txn)?;
    Ok(Router::new(network.node_count()).shortest_path(network, state, txn))
}

/// Some feasible simple path from payee to payer, found by depth-first search
/// with a random neighbor order. Not necessarily shortest.
pub fn random_feasible_path<R: Rng + ?Sized>(
    network: &CreditNetwork,
    state: &NetworkState,
    txn: &Transaction,
    rng: &mut R,
) -> Result<Option<Vec<NodeId>>> {
    validate(network, txn)?;
    let mut visited = vec![false; network.node_count()];
    visited[txn.payee] = true;
    let mut path = vec![txn.payee];
    let mut frontier = vec![shuffled_moves(network, state, txn.payee, txn.value, rng)];

    // Depth-first search with a global visited set: the stack always holds a
    // simple path, and any node that failed to reach the payer once cannot
    // reach it later either.
    while let Some(options) = frontier.last_mut() {
        match options.pop() {
            Some(next) if !visited[next] => {
                visited[next] = true;
                path.push(next);
                if next == txn.payer {
                    return Ok(Some(path));
                }
                frontier.push(shuffled_moves(network, state, next, txn.value, rng));
            }
            Some(_) => {}
            None => {
                frontier.pop();
                path.pop();
            }
        }
    }
    Ok(None)
}

fn shuffled_moves<R: Rng + ?Sized>(
    network: &CreditNetwork,
    state: &NetworkState,
    from: NodeId,
    value: u32,
    rng: &mut R,
) -> Vec<NodeId> {
    let mut moves: Vec<NodeId> = network
        .neighbors(from)
        .iter()
        .filter(|nb| state.directed_capacity(network, nb.edge, from) >= value)
        .map(|nb| nb.node)
        .collect();
    moves.shuffle(rng);
    moves
}

/// Routes `value` units along `path` (node sequence in credit direction,
/// payee first). Hops are applied in order; on any shortfall the state is
/// restored and an error returned. A closed path (first node equal to last)
/// is a cycle routing.
pub fn execute_payment(
    network: &CreditNetwork,
    state: &mut NetworkState,
    path: &[NodeId],
    value: u32,
) -> Result<()> {
    for &x in path {
        network.check_node(x)?;
    }
    let mut applied: Vec<(usize, NodeId)> = Vec::with_capacity(path.len());
    let mut outcome = Ok(());
    for hop in path.windows(2) {
        let (from, to) = (hop[0], hop[1]);
        let Some(edge) = network.edge_between(from, to) else {
            outcome = Err(Error::MissingEdge(from, to));
            break;
        };
        let available = state.directed_capacity(network, edge, from);
        if available < value {
            outcome = Err(Error::InfeasiblePath {
                from,
                to,
                available: u64::from(available),
                needed: u64::from(value),
            });
            break;
        }
        state.shift(network, edge, from, value);
        applied.push((edge, from));
    }
    if outcome.is_err() {
        for &(edge, from) in applied.iter().rev() {
            let to = {
                let e = network.edge(edge);
                if e.u == from {
                    e.v
                } else {
                    e.u
                }
            };
            state.shift(network, edge, to, value);
        }
    }
    outcome
}

/// Attempts `txn`; returns whether it succeeded. A failure leaves the state
/// unchanged (a self-loop of the chain).
pub fn transact(network: &CreditNetwork, state: &mut NetworkState, txn: &Transaction) -> Result<bool> {
    validate(network, txn)?;
    Ok(Router::new(network.node_count()).transact(network, state, txn))
}

/// Maximum credit flow from `payee` to `payer`, i.e. the largest payment
/// that could be split across paths.
///
/// The state itself is the residual graph of the credit flow problem, so
/// this is Edmonds-Karp run on a scratch copy of the state.
pub fn max_credit_flow(network: &CreditNetwork, state: &NetworkState, payer: NodeId, payee: NodeId) -> Result<u64> {
    network.check_node(payer)?;
    network.check_node(payee)?;
    if payer == payee {
        return Err(Error::InvalidTransaction(format!(
            "payer and payee are both node {payer}"
        )));
    }
    let mut residual = state.clone();
    let mut flow = 0u64;
    let n = network.node_count();
    let mut parent: Vec<Option<(NodeId, usize)>> = vec![None; n];
    loop {
        parent.iter_mut().for_each(|p| *p = None);
        let mut seen = vec![false; n];
        seen[payee] = true;
        let mut queue = VecDeque::from([payee]);
        while let Some(x) = queue.pop_front() {
            if x == payer {
                break;
            }
            for nb in network.neighbors(x) {
                if !seen[nb.node] && residual.directed_capacity(network, nb.edge, x) > 0 {
                    seen[nb.node] = true;
                    parent[nb.node] = Some((x, nb.edge));
                    queue.push_back(nb.node);
                }
            }
        }
        if !seen[payer] {
            return Ok(flow);
        }
        let mut bottleneck = u32::MAX;
        let mut x = payer;
        while let Some((from, edge)) = parent[x] {
            bottleneck = bottleneck.min(residual.directed_capacity(network, edge, from));
            x = from;
        }
        let mut x = payer;
        while let Some((from, edge)) = parent[x] {
            residual.shift(network, edge, from, bottleneck);
            x = from;
        }
        flow += u64::from(bottleneck);
    }
}
