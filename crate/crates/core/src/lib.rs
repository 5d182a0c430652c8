//! Orbital-optimised variational quantum deflation by exact state-vector
//! simulation.
//!
//! The crate is organised bottom-up:
//!
//! - [`hamio`]: molecular integrals and FCIDUMP parsing;
//! - [`fockspace`]: occupation-number vectors, ladder operators and the
//!   exterior extension `U(m)` of a single-particle map;
//! - [`fci`]: sector-restricted full CI with a Davidson eigensolver;
//! - [`ansatz`]: Trotterised UCCSD state preparation;
//! - [`orbopt`]: orbital blocks, RDMs, rotated energies, overlaps and their
//!   gradients;
//! - [`drivers`]: the state-specific and state-averaged solvers.
//!
//! Kernels that fan out over independent rows run on rayon when the
//! `parallel` feature is enabled (the default); see [`par`].

pub mod ansatz;
pub mod checks;
pub mod drivers;
pub mod error;
pub mod fci;
pub mod fockspace;
pub mod hamio;
pub mod linalg;
pub mod optim;
pub mod oracle;
pub mod orbopt;
pub mod par;

pub use error::{Error, Result};
pub use hamio::{parse_fcidump, MolecularIntegrals};
