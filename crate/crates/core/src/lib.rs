//! First-passage percolation on the triangular lattice at criticality.
//!
//! Sites are `Z^2` with the six neighbors `(±1, 0)`, `(0, ±1)`, `(1, -1)`,
//! `(-1, 1)`. Each site carries a weight `t(v) = F^{-1}(omega(v))` with
//! `F(0) = 1/2`; zero-weight sites are open, the rest closed.

pub mod circuits;
pub mod error;
pub mod estimators;
pub mod lattice;
pub mod passage;
pub mod rng;
pub mod weights;

pub use circuits::{Circuit, CircuitHierarchy, Status};
pub use error::{Error, Result};
pub use lattice::{LatticeBox, Site};
pub use passage::PassageResult;
pub use rng::{derive_seed, CounterRng, PRNG_ALGORITHM};
pub use weights::{DistributionSpec, SiteLaw, WeightField, WeightKind};
