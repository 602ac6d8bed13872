//! Cascaded channel estimation for IRS-assisted mmWave MIMO links.
//!
//! The crate covers the whole estimation chain:
//!
//! - [`channel_model`]: geometric multipath channels, IRS phase profiles and
//!   the scalar pilot observation model;
//! - [`beam_training`]: hierarchical IRS beam search with user-side sweeping,
//!   giving coarse angle estimates;
//! - [`agmp`]: adaptive-grid matching pursuit around those estimates, plus a
//!   full-grid OMP reference;
//! - [`evaluation`]: NMSE and spectral-efficiency metrics, comparison schemes
//!   and a seeded Monte-Carlo sweep harness;
//! - [`cli`]: configuration parsing and CSV output for the `irs-chanest`
//!   binary.
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod agmp;
pub mod beam_training;
pub mod channel_model;
pub mod cli;
pub mod error;
pub mod evaluation;
pub mod linalg;

pub use error::{Error, Result};
