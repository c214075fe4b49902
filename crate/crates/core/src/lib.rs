//! Feedback master equations for quantum systems monitored by homodyne
//! detection behind a passive interferometer, with instantaneous local
//! feedback.
//!
//! The crate builds the effective Hamiltonian and jump operators of a setup,
//! assembles the Liouvillian, solves for steady states, evaluates
//! entanglement measures, and checks the master equation against a direct
//! simulation of the measurement-and-feedback cycle.

pub mod error;
pub mod fme;
pub mod liouvillian;
pub mod measures;
pub mod oracle;
pub mod protocols;
pub mod qops;
pub mod sparse;

pub use error::{Error, Result};
pub use fme::{build_model, combine_models, locc_check, FmeModel, FmeSetup, SiteOperator};
pub use liouvillian::{evolve, spectral_gap, steady_state, Liouvillian, SteadyState};
pub use qops::{DensityMatrix, HilbertSpec, Operator, C64};
