//! Finite-scale verification of spectral triples on crossed products.
//!
//! Modules build on each other bottom-up: [`opalg`] operators, [`groups`]
//! models and weights, [`triples`] containers and checks, [`crossed`] and
//! [`realcx`] constructions on the crossed product, [`hochschild`] chains, and
//! [`harness`] fixtures and reports.

pub mod error;
pub mod groups;
pub mod harness;
pub mod hochschild;
pub mod crossed;
pub mod opalg;
pub mod realcx;
pub mod report;
pub mod triples;

pub use error::{Error, Result};
