//! Branching Brownian motion with complex-valued energies.
//!
//! A continuous-time binary Galton–Watson tree carries a pair of
//! correlated Brownian motions `(X, Y)`; the partition function
//! `X(t) = sum_k exp(sigma x_k(t) + i tau y_k(t))` is evaluated in log space.

pub mod bbm;
pub mod cli;
pub mod config;
pub mod error;
pub mod expsum;
pub mod gw;
pub mod observables;
pub mod oracles;
pub mod phase;
pub mod report;
pub mod rng;
pub mod stats;

pub use bbm::{BarrierFlags, BarrierSpec, BbmForest, PathRecord, Population, Snapshot};
pub use error::{Error, Result};
pub use expsum::ComplexExpSum;
pub use gw::{GwTree, NodeRecord, OffspringLaw, DEFAULT_NODE_CAP};
pub use observables::Beta;
pub use phase::{classify, clt_scaling, PhaseLabel, ScalingRule};
pub use rng::Substream;
