//! Euler–Maruyama paths on a uniform fine grid, and subgrids of it.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::DiffusionModel;
use crate::rng::SeedPlan;

/// Values of a trajectory on the grid `start_time + k * step`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Path {
    pub step: f64,
    pub start_time: f64,
    pub values: Vec<f64>,
    pub model_name: String,
    pub seed: SeedPlan,
}

impl Path {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of grid steps.
    pub fn n_steps(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    /// Length of the covered time span, `step * (len - 1)`.
    pub fn horizon(&self) -> f64 {
        self.step * self.n_steps() as f64
    }

    pub fn time(&self, index: usize) -> f64 {
        self.start_time + self.step * index as f64
    }

    /// Writes `(t, x)` rows with a header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,x")?;
        for (k, x) in self.values.iter().enumerate() {
            writeln!(out, "{},{}", self.time(k), x)?;
        }
        Ok(())
    }
}

/// Simulates one Euler–Maruyama path with `n_steps` steps of size `horizon / n_steps`.
///
/// The k-th increment uses the k-th standard normal of `seeds.rng()`, so the
/// result depends only on the arguments.
pub fn simulate_path(model: &DiffusionModel, horizon: f64, n_steps: usize, seeds: SeedPlan) -> Result<Path> {
    let mut values = Vec::new();
    let dt = simulate_into(model, horizon, n_steps, seeds, &mut values)?;
    Ok(Path {
        step: dt,
        start_time: 0.0,
        values,
        model_name: model.name.clone(),
        seed: seeds,
    })
}

/// Same values as [`simulate_path`], written into a reusable buffer.
/// Returns the step size.
pub fn simulate_into(
    model: &DiffusionModel,
    horizon: f64,
    n_steps: usize,
    seeds: SeedPlan,
    values: &mut Vec<f64>,
) -> Result<f64> {
    if n_steps == 0 {
        return Err(Error::InvalidArgument("n_steps must be at least 1".into()));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    let dt = horizon / n_steps as f64;
    let sqrt_dt = dt.sqrt();
    let mut rng = seeds.rng();
    values.clear();
    values.reserve(n_steps + 1);
    let mut x = model.initial_value;
    values.push(x);
    for k in 0..n_steps {
        let z: f64 = rng.sample(StandardNormal);
        x += model.drift(x) * dt + model.diffusion(x) * sqrt_dt * z;
        if !x.is_finite() {
            return Err(Error::NonFinite { step: k + 1, value: x });
        }
        values.push(x);
    }
    Ok(dt)
}

/// Runs `work` for stream indices `0..n` on the current rayon pool.
///
/// Output order follows the stream index, so results do not depend on the
/// number of workers.
pub fn par_map_streams<T, F>(n: usize, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..n as u64).into_par_iter().map(work).collect()
}

/// Keeps the values at `offset, offset + stride, ...`.
pub fn restrict_to_subgrid(path: &Path, stride: usize, offset: usize) -> Result<Path> {
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be at least 1".into()));
    }
    if offset >= path.len() {
        return Err(Error::InvalidArgument(format!(
            "empty subgrid: offset {offset} beyond path of length {}",
            path.len()
        )));
    }
    Ok(Path {
        step: path.step * stride as f64,
        start_time: path.time(offset),
        values: path.values[offset..].iter().step_by(stride).copied().collect(),
        model_name: path.model_name.clone(),
        seed: path.seed,
    })
}

/// Integer ratio `coarse / fine` when the coarse step is a multiple of the fine one.
pub fn grid_ratio(coarse: f64, fine: f64) -> Result<usize> {
    let ratio = coarse / fine;
    let rounded = ratio.round();
    if rounded < 1.0 || (ratio - rounded).abs() > 1e-6 * rounded.max(1.0) {
        return Err(Error::GridMisalignment(format!(
            "{coarse} is not an integer multiple of the fine step {fine}"
        )));
    }
    Ok(rounded as usize)
}
