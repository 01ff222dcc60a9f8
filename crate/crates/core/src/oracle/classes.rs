//! Partition of the state space into cycle-reachability classes, keyed by
//! generalized score vector.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::network::{CreditNetwork, NodeId, ScoreVector};
use crate::oracle::states::StateSpace;
use crate::routing::execute_payment;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassPartition {
    keys: Vec<ScoreVector>,
    lookup: HashMap<ScoreVector, u32>,
    class_of: Vec<u32>,
    offsets: Vec<usize>,
    members: Vec<u64>,
}

impl ClassPartition {
    pub fn class_count(&self) -> usize {
        self.keys.len()
    }

    pub fn key(&self, class: usize) -> &ScoreVector {
        &self.keys[class]
    }

    pub fn keys(&self) -> &[ScoreVector] {
        &self.keys
    }

    pub fn class_of_state(&self, index: u64) -> usize {
        self.class_of[index as usize] as usize
    }

    pub fn class_of_scores(&self, scores: &ScoreVector) -> Option<usize> {
        self.lookup.get(scores).map(|&c| c as usize)
    }

    /// State indices of `class`, ascending.
    pub fn members(&self, class: usize) -> &[u64] {
        &self.members[self.offsets[class]..self.offsets[class + 1]]
    }
}

/// Groups every state by its score vector.
pub fn partition_classes(network: &CreditNetwork, space: &StateSpace) -> ClassPartition {
    let mut keys: Vec<ScoreVector> = Vec::new();
    let mut lookup: HashMap<ScoreVector, u32> = HashMap::new();
    let mut class_of = Vec::with_capacity(space.len() as usize);
    let mut digits = vec![0u32; network.edge_count()];
    let mut scores = vec![0u32; network.node_count()];

    for index in 0..space.len() {
        space.decode_into(index, &mut digits);
        scores.iter_mut().for_each(|s| *s = 0);
        for (e, &f) in network.edges().iter().zip(&digits) {
            scores[e.u] += f;
            scores[e.v] += e.total - f;
        }
        let class = match lookup.get(scores.as_slice()) {
            Some(&c) => c,
            None => {
                let c = keys.len() as u32;
                let key = ScoreVector(scores.clone());
                keys.push(key.clone());
                lookup.insert(key, c);
                c
            }
        };
        class_of.push(class);
    }

    let mut counts = vec![0usize; keys.len() + 1];
    for &c in &class_of {
        counts[c as usize + 1] += 1;
    }
    for i in 1..counts.len() {
        counts[i] += counts[i - 1];
    }
    let offsets = counts.clone();
    let mut cursor = counts;
    let mut members = vec![0u64; class_of.len()];
    for (index, &c) in class_of.iter().enumerate() {
        members[cursor[c as usize]] = index as u64;
        cursor[c as usize] += 1;
    }

    ClassPartition {
        keys,
        lookup,
        class_of,
        offsets,
        members,
    }
}

/// Every directed simple cycle of length at least three, as closed node
/// sequences `x_0, ..., x_k = x_0`.
pub fn directed_cycles(network: &CreditNetwork, limit: usize) -> Result<Vec<Vec<NodeId>>> {
    let mut cycles = Vec::new();
    let n = network.node_count();
    for start in 0..n {
        let mut path = vec![start];
        let mut on_path = vec![false; n];
        on_path[start] = true;
        extend_cycles(network, start, &mut path, &mut on_path, &mut cycles, limit)?;
    }
    Ok(cycles)
}

fn extend_cycles(
    network: &CreditNetwork,
    start: NodeId,
    path: &mut Vec<NodeId>,
    on_path: &mut [bool],
    out: &mut Vec<Vec<NodeId>>,
    limit: usize,
) -> Result<()> {
    let last = *path.last().expect("nonempty");
    for nb in network.neighbors(last) {
        if nb.node == start && path.len() >= 3 {
            let mut cycle = path.clone();
            cycle.push(start);
            out.push(cycle);
            if out.len() > limit {
                return Err(Error::ClassVerification(format!("more than {limit} directed cycles")));
            }
        } else if nb.node > start && !on_path[nb.node] {
            on_path[nb.node] = true;
            path.push(nb.node);
            extend_cycles(network, start, path, on_path, out, limit)?;
            path.pop();
            on_path[nb.node] = false;
        }
    }
    Ok(())
}

/// Confirms for up to `sample` classes (spread evenly over class ids) that
/// every member is reachable from the first member by routing unit payments
/// around feasible directed cycles, and that nothing outside the class is.
pub fn verify_cycle_reachability(
    network: &CreditNetwork,
    space: &StateSpace,
    partition: &ClassPartition,
    sample: usize,
) -> Result<usize> {
    let cycles = directed_cycles(network, 100_000)?;
    let k = partition.class_count();
    let step = (k / sample.max(1)).max(1);
    let mut checked = 0;
    for class in (0..k).step_by(step).take(sample) {
        let members = partition.members(class);
        let mut reached: HashSet<u64> = HashSet::new();
        let mut queue = vec![members[0]];
        reached.insert(members[0]);
        while let Some(index) = queue.pop() {
            let state = space.decode(network, index);
            for cycle in &cycles {
                let mut next = state.clone();
                if execute_payment(network, &mut next, cycle, 1).is_ok() {
                    let idx = space.encode(&next);
                    if reached.insert(idx) {
                        if partition.class_of_state(idx) != class {
                            return Err(Error::ClassVerification(format!(
                                "cycle routing left class {class} (score {})",
                                partition.key(class)
                            )));
                        }
                        queue.push(idx);
                    }
                }
            }
        }
        if reached.len() != members.len() {
            return Err(Error::ClassVerification(format!(
                "class {class} has {} states but only {} are cycle-reachable from its first member",
                members.len(),
                reached.len()
            )));
        }
        checked += 1;
    }
    Ok(checked)
}
