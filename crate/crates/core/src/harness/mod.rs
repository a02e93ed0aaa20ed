//! Experiment orchestration: configuration files, the solver-versus-formula
//! sweep, solver histories, the verification suites and flat-file output.

mod config;
mod histories;
mod output;
mod sweep;
mod verify;

pub use config::{
    Experiment, GridBlock, HistoriesBlock, ModelBlock, Num, PacketBlock, RunBlock, RunConfig,
    Shape, StartTime, SweepEntry,
};
pub use histories::{run_histories, HistoriesRun};
pub use output::{
    write_comparison_csv, write_history_csv, write_manifest, write_recursion_csv,
    write_spectrum_csv, write_state_spectrum_csv, write_sweep_csv, GridInfo, Manifest,
};
pub use sweep::{
    compare_point, evolve_until_settled, run_sweep, ComparisonRecord, SettledRun, SweepPoint,
    MAX_REFINEMENTS, STATIONARY_TOLERANCE, STATIONARY_WINDOW,
};
pub use verify::{run_verify, SuiteResult, VerifyReport};

#[cfg(test)]
mod tests;
