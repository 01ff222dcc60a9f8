//! Credit networks: routing, steady-state liquidity, exact small-instance
//! oracles and Monte Carlo simulation.
//!
//! A network is an undirected graph whose edges hold a fixed amount of
//! credit split between the two directions. A payment from `s` to `t` is
//! routed along the shortest directed credit path from `t` to `s`, shifting
//! credit along every hop.

pub mod centralized;
pub mod closed_form;
pub mod edgelist;
pub mod error;
pub mod lambda;
pub mod network;
pub mod oracle;
pub mod rng;
pub mod routing;
pub mod sim;
pub mod topology;
pub mod verify;

pub use centralized::{centralized_chain, equivalent_centralized, CentralizedSystem};
pub use error::{Error, Result};
pub use lambda::TransactionMatrix;
pub use network::{build_network, CreditNetwork, Edge, EdgeSpec, NetworkState, NodeId, ScoreVector, Transaction};
pub use oracle::{ExactOracle, OracleConfig, StationaryResult};
pub use routing::{execute_payment, max_credit_flow, random_feasible_path, shortest_feasible_path, transact, Router};
pub use topology::{generate, InitialState, TopologyKind, TopologySpec};
