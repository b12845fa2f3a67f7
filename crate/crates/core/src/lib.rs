//! Simulation and error analysis for the narrow-line light-shift gate on trapped-ion clock qubits.
//!
//! Frequencies are angular (rad/s) and times are in seconds throughout the library; the
//! configuration layer accepts ordinary frequencies in Hz and converts them.

pub mod crystal;
pub mod error;
pub mod error_budget;
pub mod evolve;
pub mod hamiltonian;
pub mod linalg;
pub mod pulse;
pub mod setup;
pub mod srb;
pub mod units;

pub use error::{Error, Result};
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
