//! Mixed-radix indexing of every state of a network.
//!
//! Digit `e` of an index is `c_uv` of canonical edge `e`, in `0..=total_e`;
//! edge 0 is the least significant digit.

use crate::error::{Error, Result};
use crate::network::{CreditNetwork, NetworkState};

/// Default cap on the number of enumerated states.
pub const DEFAULT_STATE_CAP: u64 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSpace {
    radices: Vec<u32>,
    size: u64,
}

impl StateSpace {
    pub fn new(network: &CreditNetwork, cap: u64) -> Result<Self> {
        let required = network.state_space_size();
        if required > u128::from(cap) {
            return Err(Error::StateSpaceTooLarge {
                required,
                cap: u128::from(cap),
            });
        }
        Ok(Self {
            radices: network.edges().iter().map(|e| e.total + 1).collect(),
            size: required as u64,
        })
    }

    pub fn len(&self) -> u64 {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    /// Writes the forward capacities of state `index` into `digits`.
    pub fn decode_into(&self, mut index: u64, digits: &mut [u32]) {
        for (d, &radix) in digits.iter_mut().zip(&self.radices) {
            *d = (index % u64::from(radix)) as u32;
            index /= u64::from(radix);
        }
    }

    pub fn decode(&self, network: &CreditNetwork, index: u64) -> NetworkState {
        let mut digits = vec![0; self.radices.len()];
        self.decode_into(index, &mut digits);
        NetworkState::from_forward(network, &digits).expect("digits within radix")
    }

    pub fn encode(&self, state: &NetworkState) -> u64 {
        state
            .splits()
            .iter()
            .zip(&self.radices)
            .rev()
            .fold(0u64, |acc, (s, &radix)| acc * u64::from(radix) + u64::from(s[0]))
    }

    /// Every state in index order.
    pub fn iter<'a>(&'a self, network: &'a CreditNetwork) -> impl Iterator<Item = NetworkState> + 'a {
        (0..self.size).map(move |i| self.decode(network, i))
    }
}

/// Enumerates the complete state space, refusing spaces above `cap`.
pub fn enumerate_states(network: &CreditNetwork, cap: u64) -> Result<StateSpace> {
    StateSpace::new(network, cap)
}
