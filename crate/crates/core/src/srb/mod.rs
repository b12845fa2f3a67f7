//! Symmetric-subspace randomized benchmarking with a fixed 1/3 asymptote.

pub mod compile;
pub mod fit;
pub mod gap;
pub mod group;
mod lm;
pub mod sequence;

pub use compile::{catalog, compile_clifford, ls_gate, Catalog, CompileOptions, NativeOp, NativeSequence};
pub use fit::{fit_srb, FitOptions, SrbFit, ASYMPTOTE};
pub use gap::{calibrate_gap, gap_benchmark, GapPoint};
pub use group::{clifford_group, phase_distance, CliffordGroup, QutritClifford, GROUP_ORDER};
pub use sequence::{
    generate_sequence, run_srb, sequence_seed, survival, CliffordSequence, LsChannel, SrbDataset, SrbNoise,
    SrbRecord, SrbSettings,
};
