//! Time evolution of the ion register through a gate schedule and the quantities derived from it.

pub mod calibrate;
pub mod leakage;
pub mod integrator;
pub mod process;
pub mod propagate;
pub mod staged;
pub mod state;
pub mod transient;
mod tableau;

pub use calibrate::{calibrate, Calibration, CalibrationOptions};
pub use integrator::{IntegratorOptions, IntegratorStats};
pub use process::{gate_process, phase_at, FidelityPair, GateResult, ProcessOptions};
pub use propagate::{propagate, propagate_observed, trajectory, Propagation, PropagationOptions, Trajectory};
pub use state::QuantumState;
pub use leakage::{leakage_experiment, LeakageResult};
pub use staged::{staged_error, RadialStage, StageOne, StagedError, StagedOptions};
pub use transient::{moving_average, transient_populations, Channel, ChannelTrace, TransientOptions, Transients};
