//! Experiment harness: structured configuration with file + override
//! loading, seeded sweeps over distance or transmit power, CSV emission and
//! the TDE/FDE timing benchmarks.

mod bench;
mod config;
mod sweep;

pub use bench::{
    benchmark, fde_k_scaling, fit_loglog_slope, tde_build_scaling, time_fde_receive,
    time_matched, time_tde_receive, BenchConfig, BenchReport,
};
pub use config::{parse_ini, ExperimentConfig, Overrides, SweepAxis};
pub use sweep::{emit_csv, parse_csv, run_sweep, write_csv_file, SweepResult, SweepRow};
