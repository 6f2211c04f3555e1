//! Flat `key = value` experiment configuration with `#` comments.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::Serialize;

use super::ExperimentKind;
use crate::error::{Error, Result};
use crate::model::{builtin_model, DiffusionModel, Interval};
use crate::simulate::grid_ratio;

/// Model parameter keys forwarded to [`builtin_model`].
const MODEL_PARAMS: [&str; 4] = ["sigma0", "mu0", "theta", "x0"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub model: String,
    pub params: BTreeMap<String, f64>,
    pub horizon: f64,
    /// Fine grid step.
    pub dt: f64,
    pub eps: Vec<f64>,
    pub paths: usize,
    pub seed: u64,
    /// Minimum `eps / dt`.
    pub resolution: f64,
    pub truncation: usize,
    pub reference_samples: usize,
    /// Fixed zoom time; defaults to the middle of the horizon.
    pub zoom_time: Option<f64>,
    /// Rescaled window of the fixed-time zoom.
    pub window: f64,
    pub marginal_times: Vec<f64>,
    pub alpha: f64,
    pub slices: usize,
    pub ks_tol: f64,
    pub full_error_tol: f64,
    pub arcsine_tol: f64,
    pub boundary_fraction: f64,
    pub uniform_tol: f64,
    pub slope_min: f64,
    pub slope_max: f64,
    pub max_excluded: f64,
    pub route_check: bool,
    pub scale_halfwidth: f64,
    pub scale_tol: f64,
    pub dump_paths: usize,
    /// Worker count; not part of the reproducible echo.
    #[serde(skip)]
    pub threads: Option<usize>,
    #[serde(skip)]
    pub output_dir: Option<PathBuf>,
}

fn params(kv: &[(&str, f64)]) -> BTreeMap<String, f64> {
    kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

impl ExperimentConfig {
    /// Baseline shared by every experiment.
    fn base() -> Self {
        Self {
            model: "bm".into(),
            params: params(&[("sigma0", 1.0)]),
            horizon: 1.0,
            dt: 1e-5,
            eps: vec![1e-2],
            paths: 2000,
            seed: 0xD1FF,
            resolution: 100.0,
            truncation: 8,
            reference_samples: 100_000,
            zoom_time: None,
            window: 1.0,
            marginal_times: vec![0.25, 1.0],
            alpha: 0.001,
            slices: 4,
            ks_tol: 0.05,
            full_error_tol: 0.07,
            arcsine_tol: 0.02,
            boundary_fraction: 0.01,
            uniform_tol: 0.03,
            slope_min: 0.45,
            slope_max: 0.55,
            max_excluded: 0.2,
            route_check: false,
            scale_halfwidth: 6.0,
            scale_tol: 1e-10,
            dump_paths: 0,
            threads: None,
            output_dir: None,
        }
    }

    /// Defaults of each experiment, matching its reference run.
    pub fn defaults_for(kind: ExperimentKind) -> Self {
        let base = Self::base();
        match kind {
            ExperimentKind::Simulate => Self {
                dt: 1e-3,
                eps: vec![1e-1],
                paths: 10,
                dump_paths: 10,
                ..base
            },
            ExperimentKind::ZoomFixed => Self {
                model: "gbm".into(),
                params: params(&[("sigma0", 0.5), ("x0", 1.0)]),
                eps: vec![1e-3],
                paths: 5000,
                ..base
            },
            ExperimentKind::ZoomSup => base,
            ExperimentKind::EstimateSup => Self {
                dt: 2f64.powi(-22),
                eps: (6..=12).map(|k| 2f64.powi(-k)).collect(),
                paths: 4000,
                ..base
            },
            ExperimentKind::Argmax => Self {
                dt: 1e-4,
                eps: vec![],
                paths: 10_000,
                ..base
            },
        }
    }

    /// Applies `key = value` lines; unknown keys are errors.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value, got '{line}'", lineno + 1)))?;
            self.set(k.trim(), v.trim())
                .map_err(|e| Error::Config(format!("line {}: {}", lineno + 1, strip_prefix(&e))))?;
        }
        Ok(())
    }

    /// Applies one `key=value` override.
    pub fn apply_override(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override must be key=value, got '{kv}'")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("{key}: invalid {what} '{value}'"));
        let real = || parse_real(value).ok_or_else(|| bad("number"));
        let count = || parse_count(value).ok_or_else(|| bad("count"));
        match key {
            "model" => self.model = value.to_string(),
            k if MODEL_PARAMS.contains(&k) => {
                self.params.insert(k.to_string(), real()?);
            }
            "horizon" => self.horizon = real()?,
            "dt" => self.dt = real()?,
            "eps" => self.eps = parse_list(value).ok_or_else(|| bad("list"))?,
            "paths" => self.paths = count()?,
            "seed" => self.seed = parse_seed(value).ok_or_else(|| bad("seed"))?,
            "resolution" => self.resolution = real()?,
            "truncation" => self.truncation = count()?,
            "reference_samples" => self.reference_samples = count()?,
            "zoom_time" => self.zoom_time = Some(real()?),
            "window" => self.window = real()?,
            "marginal_times" => self.marginal_times = parse_list(value).ok_or_else(|| bad("list"))?,
            "alpha" => self.alpha = real()?,
            "slices" => self.slices = count()?,
            "ks_tol" => self.ks_tol = real()?,
            "full_error_tol" => self.full_error_tol = real()?,
            "arcsine_tol" => self.arcsine_tol = real()?,
            "boundary_fraction" => self.boundary_fraction = real()?,
            "uniform_tol" => self.uniform_tol = real()?,
            "slope_min" => self.slope_min = real()?,
            "slope_max" => self.slope_max = real()?,
            "max_excluded" => self.max_excluded = real()?,
            "route_check" => self.route_check = parse_bool(value).ok_or_else(|| bad("boolean"))?,
            "scale_halfwidth" => self.scale_halfwidth = real()?,
            "scale_tol" => self.scale_tol = real()?,
            "dump_paths" => self.dump_paths = count()?,
            "threads" => self.threads = Some(count()?).filter(|&t| t > 0),
            "output_dir" => self.output_dir = Some(PathBuf::from(value)),
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn build_model(&self) -> Result<DiffusionModel> {
        builtin_model(&self.model, &self.params)
    }

    /// Number of fine steps over the horizon.
    pub fn n_steps(&self) -> Result<usize> {
        grid_ratio(self.horizon, self.dt)
    }

    /// `eps / dt` for every epsilon.
    pub fn strides(&self) -> Result<Vec<usize>> {
        self.eps.iter().map(|&e| grid_ratio(e, self.dt)).collect()
    }

    /// Epsilons sorted from largest to smallest with their strides.
    pub fn eps_descending(&self) -> Result<Vec<(f64, usize)>> {
        let mut v: Vec<(f64, usize)> = self.eps.iter().copied().zip(self.strides()?).collect();
        v.sort_by(|a, b| b.0.total_cmp(&a.0));
        Ok(v)
    }

    /// Interval on which the scale function is tabulated.
    pub fn scale_interval(&self, model: &DiffusionModel) -> Interval {
        let x0 = model.initial_value;
        let lo = (x0 - self.scale_halfwidth).max(model.known_range.lo);
        let hi = (x0 + self.scale_halfwidth).min(model.known_range.hi);
        Interval::new(lo, hi)
    }

    pub fn zoom_time(&self) -> f64 {
        self.zoom_time.unwrap_or(0.5 * self.horizon)
    }

    /// Checks grid alignment, the resolution rule and basic ranges.
    pub fn validate(&self, kind: ExperimentKind) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        positive("horizon", self.horizon)?;
        positive("dt", self.dt)?;
        positive("window", self.window)?;
        positive("resolution", self.resolution)?;
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must be in (0, 1), got {}", self.alpha)));
        }
        if self.paths == 0 {
            return Err(Error::Config("paths must be at least 1".into()));
        }
        self.build_model()?;
        let n = self.n_steps().map_err(|e| Error::Config(format!("horizon/dt: {}", strip_prefix(&e))))?;
        let needs_eps = !matches!(kind, ExperimentKind::Argmax | ExperimentKind::Simulate);
        if needs_eps && self.eps.is_empty() {
            return Err(Error::Config("eps must list at least one value".into()));
        }
        if needs_eps {
            for &e in &self.eps {
                positive("eps", e)?;
                let stride = grid_ratio(e, self.dt)
                    .map_err(|err| Error::Config(format!("eps: {}", strip_prefix(&err))))?;
                if (stride as f64) < self.resolution {
                    return Err(Error::Config(format!(
                        "eps = {e} gives eps/dt = {stride} below the resolution ratio {}",
                        self.resolution
                    )));
                }
                if n % stride != 0 {
                    return Err(Error::Config(format!(
                        "eps = {e} does not divide the horizon grid ({n} steps)"
                    )));
                }
            }
        }
        match kind {
            ExperimentKind::ZoomFixed => {
                let t = self.zoom_time();
                for &e in &self.eps {
                    if e * self.window > t.min(self.horizon - t) + 1e-12 {
                        return Err(Error::Config(format!(
                            "eps * window = {} does not fit around zoom_time {t}",
                            e * self.window
                        )));
                    }
                }
                grid_ratio(t, self.dt).map_err(|e| Error::Config(format!("zoom_time: {}", strip_prefix(&e))))?;
            }
            ExperimentKind::ZoomSup => {
                if self.marginal_times.is_empty() || self.marginal_times.iter().any(|&t| !(t > 0.0)) {
                    return Err(Error::Config("marginal_times must be positive".into()));
                }
            }
            ExperimentKind::EstimateSup => {
                if self.truncation == 0 {
                    return Err(Error::Config("truncation must be at least 1".into()));
                }
            }
            ExperimentKind::Argmax | ExperimentKind::Simulate => {}
        }
        if self.slices < 2 {
            return Err(Error::Config("slices must be at least 2".into()));
        }
        Ok(())
    }
}

fn strip_prefix(e: &Error) -> String {
    let s = e.to_string();
    s.strip_prefix("config: ").map(str::to_string).unwrap_or(s)
}

/// Reals, plus `2^k` powers such as `2^-6`.
fn parse_real(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Some((base, exp)) = s.split_once('^') {
        let b: f64 = base.trim().parse().ok()?;
        let e: i32 = exp.trim().parse().ok()?;
        return Some(b.powi(e));
    }
    s.parse().ok().filter(|v: &f64| v.is_finite())
}

/// Counts accept `1e5` style.
fn parse_count(s: &str) -> Option<usize> {
    if let Ok(v) = s.parse::<usize>() {
        return Some(v);
    }
    let v = parse_real(s)?;
    (v >= 0.0 && v.fract() == 0.0 && v <= 1e15).then_some(v as usize)
}

fn parse_list(s: &str) -> Option<Vec<f64>> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(parse_real).collect()
}

fn parse_seed(s: &str) -> Option<u64> {
    let s = s.trim();
    match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16).ok(),
        None => s.parse().ok(),
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "true" | "1" | "yes" => Some(true),
        "false" | "0" | "no" => Some(false),
        _ => None,
    }
}

/// Parses a decimal or `0x` hexadecimal seed.
pub fn parse_seed_value(s: &str) -> Option<u64> {
    parse_seed(s)
}
