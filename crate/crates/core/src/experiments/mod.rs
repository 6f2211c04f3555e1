//! The named experiments and their dispatcher.
//!
//! Each runner simulates `paths` independent paths (path `i` uses stream `i`
//! of the master seed), reduces per-path statistics in stream order and
//! returns an [`ExperimentReport`]. Worker count never changes the result.

mod argmax;
pub mod config;
mod estimation;
mod fixed_time;
pub mod report;
mod simulate;
mod supremum;

use std::time::Instant;

use rayon::ThreadPoolBuilder;

pub use argmax::run_argmax_boundary;
pub use config::ExperimentConfig;
pub use estimation::{grid_maximum, run_sup_estimation, GridMaximum};
pub use fixed_time::run_zoom_at_fixed_time;
pub use report::{Check, EpsilonSummary, ExperimentReport, Relation, SampleRow, Timing};
pub use simulate::run_simulate;
pub use supremum::run_zoom_at_supremum;

use crate::error::{Error, Result};
use crate::rng::{lanes, SeedPlan};
use crate::stats::{ks_one_sample, EmpiricalDistribution, KSResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    Simulate,
    ZoomFixed,
    ZoomSup,
    EstimateSup,
    Argmax,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::Simulate,
        ExperimentKind::ZoomFixed,
        ExperimentKind::ZoomSup,
        ExperimentKind::EstimateSup,
        ExperimentKind::Argmax,
    ];

    /// The four verification experiments run by `all`, in order.
    pub const VERIFICATION: [ExperimentKind; 4] = [
        ExperimentKind::ZoomFixed,
        ExperimentKind::ZoomSup,
        ExperimentKind::EstimateSup,
        ExperimentKind::Argmax,
    ];

    /// Report and file stem.
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::ZoomFixed => "zoom_fixed",
            ExperimentKind::ZoomSup => "zoom_sup",
            ExperimentKind::EstimateSup => "estimate_sup",
            ExperimentKind::Argmax => "argmax",
        }
    }

    /// Accepts both `zoom_sup` and `zoom-sup`.
    pub fn from_name(name: &str) -> Result<Self> {
        let norm = name.replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| Error::Config(format!("unknown experiment '{name}'")))
    }
}

/// Validates `config` and runs the experiment on a pool of `config.threads`
/// workers (machine parallelism when unset).
pub fn run_experiment(kind: ExperimentKind, config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate(kind)?;
    let pool = ThreadPoolBuilder::new()
        .num_threads(config.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let threads = pool.current_num_threads();
    let start = Instant::now();
    let mut report = pool.install(|| match kind {
        ExperimentKind::Simulate => run_simulate(config),
        ExperimentKind::ZoomFixed => run_zoom_at_fixed_time(config),
        ExperimentKind::ZoomSup => run_zoom_at_supremum(config),
        ExperimentKind::EstimateSup => run_sup_estimation(config),
        ExperimentKind::Argmax => run_argmax_boundary(config),
    })?;
    let wall = start.elapsed().as_secs_f64().max(1e-9);
    let steps = config.paths as f64 * config.n_steps()? as f64;
    report.timing = Timing {
        wall_seconds: wall,
        threads,
        paths_per_second: config.paths as f64 / wall,
        fine_steps_per_second: steps / wall,
    };
    Ok(report)
}

/// Seeds of path `i`.
pub(crate) fn path_seeds(config: &ExperimentConfig, i: u64) -> SeedPlan {
    SeedPlan::new(config.seed, i).lane(lanes::PATH)
}

/// Collects per-path results in stream order, stopping at the first error.
pub(crate) fn collect<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    results.into_iter().collect()
}

pub(crate) fn ks_against<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<KSResult> {
    ks_one_sample(&EmpiricalDistribution::new(samples.to_vec())?, cdf)
}

pub(crate) fn push_samples(report: &mut ExperimentReport, epsilon: f64, statistic: &str, values: &[f64]) {
    report.samples.extend(values.iter().enumerate().map(|(i, &value)| SampleRow {
        path_id: i as u64,
        epsilon,
        statistic: statistic.to_string(),
        value,
    }));
}

/// `(id, value)` pairs with the same path order, restricted to kept paths.
pub(crate) fn push_indexed_samples(
    report: &mut ExperimentReport,
    epsilon: f64,
    statistic: &str,
    ids: &[u64],
    values: &[f64],
) {
    report.samples.extend(ids.iter().zip(values).map(|(&path_id, &value)| SampleRow {
        path_id,
        epsilon,
        statistic: statistic.to_string(),
        value,
    }));
}
