//! Seeded construction of the standard graph families with a chosen initial
//! credit orientation.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::network::{CreditNetwork, NetworkState, NodeId};
use crate::rng::{seeded_rng, Stream};

/// Retries allowed when a connected Erdős–Rényi sample is required.
pub const MAX_CONNECT_RETRIES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TopologyKind {
    Line,
    /// Hub is node 0.
    Star,
    Cycle,
    Complete,
    ErdosRenyi { p: f64 },
    /// Preferential attachment; every arriving node adds `d` edges.
    BarabasiAlbert { d: usize },
}

impl TopologyKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Line => "line",
            Self::Star => "star",
            Self::Cycle => "cycle",
            Self::Complete => "complete",
            Self::ErdosRenyi { .. } => "erdos-renyi",
            Self::BarabasiAlbert { .. } => "barabasi-albert",
        }
    }

    /// The family parameter (`p` or `d`), zero for deterministic families.
    pub fn param(&self) -> f64 {
        match *self {
            Self::ErdosRenyi { p } => p,
            Self::BarabasiAlbert { d } => d as f64,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialState {
    /// Each edge's full credit points one way, chosen by a fair coin.
    #[default]
    RandomUnidirectional,
    /// `(c/2, c/2)` on every edge; requires even `c`.
    Balanced,
    /// Full credit on the direction into the lower id: `c_vu = c` for `u < v`.
    AllTowardLowId,
}

impl FromStr for InitialState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" | "random-unidirectional" | "random_unidirectional" => Ok(Self::RandomUnidirectional),
            "balanced" => Ok(Self::Balanced),
            "low-id" | "all-toward-low-id" | "all_toward_low_id" => Ok(Self::AllTowardLowId),
            other => Err(Error::InvalidSpec(format!("unknown initial state {other:?}"))),
        }
    }
}

impl fmt::Display for InitialState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::RandomUnidirectional => "random-unidirectional",
            Self::Balanced => "balanced",
            Self::AllTowardLowId => "all-toward-low-id",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopologySpec {
    pub kind: TopologyKind,
    pub n: usize,
    pub c: u32,
    pub init: InitialState,
    pub seed: u64,
    /// Resample disconnected Erdős–Rényi graphs (up to
    /// [`MAX_CONNECT_RETRIES`] times) instead of returning them.
    pub connected_only: bool,
}

impl TopologySpec {
    pub fn new(kind: TopologyKind, n: usize, c: u32) -> Self {
        Self {
            kind,
            n,
            c,
            init: InitialState::default(),
            seed: 0,
            connected_only: false,
        }
    }

    pub fn with_init(mut self, init: InitialState) -> Self {
        self.init = init;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn connected_only(mut self, yes: bool) -> Self {
        self.connected_only = yes;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if self.n < 2 {
            return bad(format!("n must be at least 2, got {}", self.n));
        }
        if self.c < 1 {
            return bad("c must be at least 1".into());
        }
        if self.init == InitialState::Balanced && self.c % 2 != 0 {
            return bad(format!("balanced initial state needs even c, got {}", self.c));
        }
        match self.kind {
            TopologyKind::Cycle if self.n < 3 => bad(format!("cycle needs n >= 3, got {}", self.n)),
            TopologyKind::ErdosRenyi { p } if !(p > 0.0 && p <= 1.0) => {
                bad(format!("edge probability must be in (0, 1], got {p}"))
            }
            TopologyKind::BarabasiAlbert { d } if d < 1 || d >= self.n => {
                bad(format!("attachment count must satisfy 1 <= d < n, got d={d}, n={}", self.n))
            }
            _ => Ok(()),
        }
    }
}

/// Builds the network and its initial state; a pure function of `spec`.
pub fn generate(spec: &TopologySpec) -> Result<(CreditNetwork, NetworkState)> {
    spec.validate()?;
    let mut rng = seeded_rng(spec.seed, Stream::Topology);
    let n = spec.n;
    let pairs = match spec.kind {
        TopologyKind::Line => (1..n).map(|v| (v - 1, v)).collect(),
        TopologyKind::Star => (1..n).map(|v| (0, v)).collect(),
        TopologyKind::Cycle => {
            let mut p: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
            p.push((0, n - 1));
            p
        }
        TopologyKind::Complete => complete_pairs(n),
        TopologyKind::ErdosRenyi { p } => {
            let mut attempt = 0;
            loop {
                let pairs = erdos_renyi_pairs(n, p, &mut rng);
                attempt += 1;
                if !spec.connected_only || is_connected(n, &pairs) {
                    break pairs;
                }
                if attempt >= MAX_CONNECT_RETRIES {
                    return Err(Error::Disconnected(attempt));
                }
            }
        }
        TopologyKind::BarabasiAlbert { d } => barabasi_albert_pairs(n, d, &mut rng),
    };

    let c = spec.c;
    let network = CreditNetwork::new(n, pairs.iter().map(|&(u, v)| (u, v, c)))?;
    let forward: Vec<u32> = match spec.init {
        InitialState::RandomUnidirectional => {
            (0..network.edge_count()).map(|_| if rng.gen_bool(0.5) { c } else { 0 }).collect()
        }
        InitialState::Balanced => vec![c / 2; network.edge_count()],
        InitialState::AllTowardLowId => vec![0; network.edge_count()],
    };
    let state = NetworkState::from_forward(&network, &forward)?;
    Ok((network, state))
}

fn complete_pairs(n: usize) -> Vec<(NodeId, NodeId)> {
    (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect()
}

fn erdos_renyi_pairs(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Vec<(NodeId, NodeId)> {
    let mut pairs = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                pairs.push((u, v));
            }
        }
    }
    pairs
}

/// Complete seed graph on `d + 1` nodes; each later node attaches to `d`
/// distinct existing nodes sampled proportionally to degree.
fn barabasi_albert_pairs(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Vec<(NodeId, NodeId)> {
    let mut pairs = complete_pairs(d + 1);
    // every edge endpoint once: uniform draws from this list are
    // degree-proportional
    let mut endpoints: Vec<NodeId> = pairs.iter().flat_map(|&(u, v)| [u, v]).collect();
    let mut chosen = Vec::with_capacity(d);
    for arriving in d + 1..n {
        chosen.clear();
        while chosen.len() < d {
            let target = endpoints[rng.gen_range(0..endpoints.len())];
            if !chosen.contains(&target) {
                chosen.push(target);
            }
        }
        for &target in &chosen {
            pairs.push((target, arriving));
            endpoints.push(target);
            endpoints.push(arriving);
        }
    }
    pairs
}

fn is_connected(n: usize, pairs: &[(NodeId, NodeId)]) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut components = n;
    for &(u, v) in pairs {
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        if a != b {
            parent[a] = b;
            components -= 1;
        }
    }
    components <= 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycle_low_id() {
        let spec = TopologySpec::new(TopologyKind::Cycle, 3, 1).with_init(InitialState::AllTowardLowId);
        let (net, state) = generate(&spec).unwrap();
        assert_eq!(net.edge_count(), 3);
        assert_eq!(net.state_space_size(), 8);
        for (idx, e) in net.edges().iter().enumerate() {
            assert_eq!(state.capacity(&net, e.v, e.u), 1);
            assert_eq!(state.split(idx), (0, 1));
        }
    }

    #[test]
    fn dense_erdos_renyi_is_complete_and_balanced() {
        let spec = TopologySpec::new(TopologyKind::ErdosRenyi { p: 1.0 }, 5, 2)
            .with_init(InitialState::Balanced)
            .with_seed(11);
        let (net, state) = generate(&spec).unwrap();
        assert_eq!(net.edge_count(), 10);
        assert!(state.splits().iter().all(|s| *s == [1, 1]));
    }

    #[test]
    fn barabasi_albert_edge_count() {
        for seed in 0..5 {
            let spec = TopologySpec::new(TopologyKind::BarabasiAlbert { d: 5 }, 100, 1).with_seed(seed);
            let (net, _) = generate(&spec).unwrap();
            assert_eq!(net.edge_count(), 15 + 470);
            assert!(net.is_connected());
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let spec = TopologySpec::new(TopologyKind::ErdosRenyi { p: 0.1 }, 60, 3).with_seed(7);
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let other = generate(&spec.with_seed(8)).unwrap();
        assert_ne!(generate(&spec).unwrap(), other);
    }

    #[test]
    fn invalid_specs() {
        let base = TopologySpec::new(TopologyKind::Line, 4, 1);
        assert!(generate(&TopologySpec { n: 1, ..base }).is_err());
        assert!(generate(&TopologySpec { c: 0, ..base }).is_err());
        assert!(generate(&base.with_init(InitialState::Balanced)).is_err());
        assert!(generate(&TopologySpec { kind: TopologyKind::ErdosRenyi { p: 0.0 }, ..base }).is_err());
        assert!(generate(&TopologySpec { kind: TopologyKind::ErdosRenyi { p: 1.5 }, ..base }).is_err());
        assert!(generate(&TopologySpec { kind: TopologyKind::BarabasiAlbert { d: 4 }, ..base }).is_err());
        assert!(generate(&TopologySpec { kind: TopologyKind::Cycle, n: 2, ..base }).is_err());
    }

    #[test]
    fn connected_only_fails_when_impossible() {
        let spec = TopologySpec::new(TopologyKind::ErdosRenyi { p: 1e-9 }, 30, 1).connected_only(true);
        assert_eq!(generate(&spec).unwrap_err(), Error::Disconnected(MAX_CONNECT_RETRIES));
    }

    #[test]
    fn fixed_families() {
        let (line, _) = generate(&TopologySpec::new(TopologyKind::Line, 5, 2)).unwrap();
        assert!(line.is_tree());
        let (star, _) = generate(&TopologySpec::new(TopologyKind::Star, 5, 2)).unwrap();
        assert!(star.is_tree());
        assert_eq!(star.degree(0), 4);
        let (k, _) = generate(&TopologySpec::new(TopologyKind::Complete, 6, 1)).unwrap();
        assert_eq!(k.edge_count(), 15);
    }

    #[test]
    fn initial_state_parsing() {
        assert_eq!("low-id".parse::<InitialState>().unwrap(), InitialState::AllTowardLowId);
        assert_eq!("balanced".parse::<InitialState>().unwrap(), InitialState::Balanced);
        assert!("sideways".parse::<InitialState>().is_err());
    }
}
