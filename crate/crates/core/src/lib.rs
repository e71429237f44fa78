//! Connectivity and link-lifetime models for nodes on a one-dimensional
//! service strip, Monte Carlo oracles that check them, and a small
//! discrete-event simulator for AODV, DSR and FSR.

pub mod connectivity;
pub mod linktime;
pub mod mc;
pub mod config;
pub mod error;
pub mod harness;
pub mod numeric;
pub mod protocols;
pub mod sim;

pub use error::{ConfigError, HarnessError, ModelError, SimError};
