//! Experiment orchestration: λ-sweeps, slope fits, phase-diagram output, the
//! verification suite and key-value configuration files.

mod config;
mod diagram;
mod sweep;
mod verify;

pub use config::{load_kv, parse_kv, KvConfig};
pub use diagram::{
    emit_phase_diagram, region_components, slice_rows, DiagramFormat, DiagramSlice, SliceCell,
};
pub use sweep::{
    fit_slope, sweep_theta, sweep_theta_with, ExperimentConfig, FitBand, FitPoint, SlopeFit,
    SweepRow, SWEEP_CSV_HEADER,
};
pub use verify::{enumeration_bound_check, verify_all, CheckResult, VerifyCounts, VerifyReport};

use crate::error::{Error, Result};

/// Run `f` on a dedicated pool with `workers` threads, or on the global pool for `None`.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(Error::BadRange("worker count must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Io(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}
