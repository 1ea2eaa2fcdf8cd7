//! Noise budgets for a three-optical-mode, one-mechanical-mode optomechanical
//! transducer read out through its two modulation sidebands.
//!
//! The pumped centre mode at `ω0` scatters a mechanical force signal into the
//! sideband modes `ω± = ω0 ± ωm`. Their output amplitude quadratures are
//! recorded separately and combined afterwards. This crate
//!
//! - solves the linearised quadrature equations at each spectral frequency
//!   ([`freqdomain`]),
//! - forms fixed and optimal combinations of the two outputs and refers their
//!   noise to the signal force ([`combine`]),
//! - computes the transverse-mode overlaps that set the coupling asymmetry
//!   ([`overlap`]),
//! - checks all of the above against a stochastic time-domain simulation
//!   ([`oracle`]),
//! - and drives sweeps and reproducible scenarios from JSON configs ([`cli`]).
//!
//! Rates are dimensionless, normally in units of the mechanical half-linewidth.

pub mod cli;
pub mod combine;
pub mod error;
pub mod freqdomain;
pub mod model;
pub mod optimize;
pub mod oracle;
pub mod overlap;

pub use combine::{
    alpha_beta_weights, amplification_gain, analytic_reference, beta_combination, force_referred_psd,
    optimal_weights, sql, CombinationWeights, NoiseBudgetRow, ReferenceCase,
};
pub use error::{Error, Result};
pub use freqdomain::{output_transfer, system_solve, InputChannel, TransferSet};
pub use model::{derive_couplings, DerivedCouplings, SystemParams};
