//! Experiment configuration, drivers and the verification suite.

pub mod config;
pub mod drivers;
pub mod verify;

pub use config::{GeometrySpec, QuadratureConfig, RunConfig};
pub use drivers::{
    fit_slopes, loglog_slope, run_bench_assembly, run_disk_convergence, run_self_convergence, write_csv, ConvergenceRecord,
    ExperimentReport, Slopes,
};
pub use verify::{run_verification_suite, Check, VerificationReport};
