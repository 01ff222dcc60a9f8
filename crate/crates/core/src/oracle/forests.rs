//! Forest counting on the labeled unit-edge multigraph.
//!
//! An edge of total credit `c` is `c` distinguishable unit edges; two copies
//! of the same edge close a 2-cycle. Counting is literal backtracking over
//! the unit edges with a rollback union-find, kept deliberately naive so it
//! can serve as an independent check on the class enumeration.

use crate::error::{Error, Result};
use crate::network::{CreditNetwork, NodeId};

pub const DEFAULT_UNIT_EDGE_CAP: usize = 40;

struct RollbackUnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
    history: Vec<(usize, usize)>,
}

impl RollbackUnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
            history: Vec::new(),
        }
    }

    fn find(&self, mut x: usize) -> usize {
        while self.parent[x] != x {
            x = self.parent[x];
        }
        x
    }

    /// Joins the components of `a` and `b`; false if already joined.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        self.history.push((ra, rb));
        true
    }

    fn undo(&mut self) {
        let (ra, rb) = self.history.pop().expect("undo without union");
        self.parent[rb] = rb;
        self.size[ra] -= self.size[rb];
    }
}

/// Number of acyclic subsets of labeled unit edges. With `excluded`, the
/// node and its incident edges are removed first (forests on the remaining
/// nodes).
pub fn count_forests(network: &CreditNetwork, excluded: Option<NodeId>, cap: usize) -> Result<u128> {
    if let Some(v) = excluded {
        network.check_node(v)?;
    }
    let units: Vec<(NodeId, NodeId)> = network
        .edges()
        .iter()
        .filter(|e| Some(e.u) != excluded && Some(e.v) != excluded)
        .flat_map(|e| std::iter::repeat((e.u, e.v)).take(e.total as usize))
        .collect();
    if units.len() > cap {
        return Err(Error::ForestCapExceeded {
            units: units.len(),
            cap,
        });
    }
    let mut uf = RollbackUnionFind::new(network.node_count());
    Ok(count_from(&units, 0, &mut uf))
}

fn count_from(units: &[(NodeId, NodeId)], next: usize, uf: &mut RollbackUnionFind) -> u128 {
    if next == units.len() {
        return 1;
    }
    // without this unit edge
    let mut total = count_from(units, next + 1, uf);
    let (a, b) = units[next];
    if uf.union(a, b) {
        total += count_from(units, next + 1, uf);
        uf.undo();
    }
    total
}
