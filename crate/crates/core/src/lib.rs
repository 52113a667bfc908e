//! Multicast light-tree computation for WDM networks with sparse light
//! splitting.
//!
//! The crate builds shortest-path trees ([`spt`]), removes multicast
//! incapable branching nodes from them ([`mib`]), reconnects the cut
//! destinations into a set of light-trees ([`forest`]) and wraps the whole
//! thing into five end-to-end routing algorithms ([`algorithms`]). The
//! [`harness`] module drives the comparison experiments.

pub mod algorithms;
pub mod cli;
pub mod error;
pub mod forest;
pub mod harness;
pub mod mib;
pub mod network;
pub mod reference;
pub mod spt;

pub use error::{Error, Result};
pub use network::{Metric, NetworkGraph, NodeId, Splitting, Weight};
