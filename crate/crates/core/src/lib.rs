//! Exact small-instance simulation of non-interactive quantum zero-knowledge
//! proof systems with shared EPR pairs.
//!
//! The crate evaluates the protocols and reductions around the
//! closeness-to-identity problem on dense state vectors and density
//! operators, and ships independent oracles (brute-force enumeration,
//! explicit eigendecompositions, numeric search) to check them.
//!
//! Layers, bottom-up:
//! - [`qcore`]: states, partial traces, trace distance, fidelity,
//!   purification and Uhlmann unitaries.
//! - [`circuits`] and [`channel`]: gate-level circuits with a text format,
//!   and branching channels evaluated exactly.
//! - [`problems`]: promise-problem instances, exact deciders and graph
//!   utilities.
//! - [`protocol`]: the verifier/prover machine, honest and cheating provers,
//!   and the zero-knowledge audit.
//! - [`reductions`]: amplification, protocol construction and the reductions
//!   from protocols, graph non-automorphism and BQP.
//! - [`cli`]: the `niqzk` command-line front end and its reports.

pub mod channel;
pub mod circuits;
pub mod cli;
pub mod error;
pub mod files;
pub mod par;
pub mod problems;
pub mod protocol;
pub mod qcore;
pub mod random;
pub mod reductions;
pub mod report;

pub use error::{Error, Result};
