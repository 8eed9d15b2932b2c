//! Multi-sideband RABBITT phase toolkit.
//!
//! * [`phases`]: analytic phases of multi-photon ionization paths.
//! * [`synth`] and [`fit`]: synthetic delay scans and sideband phase extraction.
//! * [`tdse`]: radial time-dependent Schrödinger solver for hydrogen, used as the reference.
//! * [`cli`]: the `rabbitt` command-line front end.

pub mod cli;
pub mod error;
pub mod fit;
pub mod manifest;
pub mod phases;
pub mod scan;
pub mod specfun;
pub mod synth;
pub mod tdse;
pub mod units;

pub use error::{Error, Result};
