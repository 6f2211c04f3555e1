//! Estimating the supremum from observations on a shifted equidistant grid.

use std::cell::RefCell;

use rand::Rng;

use super::report::{Check, EpsilonSummary, ExperimentReport, Relation};
use super::{collect, ks_against, path_seeds, push_indexed_samples, ExperimentConfig};
use crate::error::{Error, Result};
use crate::model::DiffusionModel;
use crate::pathops::last_argmax;
use crate::reference::{limit_sup_over_shifted_grid, ReferenceLaw};
use crate::rng::{lanes, SeedPlan};
use crate::simulate::{par_map_streams, simulate_into};
use crate::stats::{ks_two_sample, mixing_diagnostic, rate_fit, EmpiricalDistribution, MIN_SLICE};

/// Maximum of a fine-grid path over the subgrid `offset + stride * k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridMaximum {
    pub max: f64,
    /// First subgrid index at or after the argmax, if it lies on the path.
    pub first_after_argmax: Option<usize>,
}

/// Subgrid maximum and the first sample at or after `argmax_index`.
pub fn grid_maximum(values: &[f64], stride: usize, offset: usize, argmax_index: usize) -> Result<GridMaximum> {
    if stride == 0 || offset >= values.len() {
        return Err(Error::InvalidArgument(format!(
            "subgrid with stride {stride} and offset {offset} is empty on {} points",
            values.len()
        )));
    }
    let max = values[offset..].iter().step_by(stride).copied().fold(f64::NEG_INFINITY, f64::max);
    let first = if argmax_index <= offset {
        offset
    } else {
        offset + (argmax_index - offset).div_ceil(stride) * stride
    };
    Ok(GridMaximum {
        max,
        first_after_argmax: (first < values.len()).then_some(first),
    })
}

/// Statistics of one path at one epsilon.
#[derive(Debug, Clone, Copy)]
struct EpsStats {
    /// `eps^{-1/2} (M - sup)`.
    error: f64,
    /// `eps^{-1/2} (X_first_after - sup)`, when that sample exists.
    lower: Option<f64>,
    violation: bool,
    /// Argmax at least `K eps` away from both ends.
    interior: bool,
    /// `{-m / eps}` on the deterministic grid.
    fractional_offset: f64,
    deterministic_error: f64,
}

struct PathStats {
    sup: f64,
    sigma: f64,
    per_eps: Vec<EpsStats>,
}

fn rms(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x * x, n + 1));
    (s / n as f64).sqrt()
}

/// Simulates path `i` into `values` and evaluates every epsilon.
fn path_stats(
    config: &ExperimentConfig,
    model: &DiffusionModel,
    eps: &[(f64, usize)],
    n: usize,
    i: u64,
    values: &mut Vec<f64>,
) -> Result<PathStats> {
    simulate_into(model, config.horizon, n, path_seeds(config, i), values)?;
    let (m, top) = last_argmax(values).expect("simulated paths are non-empty");
    let k_trunc = config.truncation;
    let mut offsets = SeedPlan::new(config.seed, i).lane(lanes::SAMPLE_OFFSET).rng();
    let mut per_eps = Vec::with_capacity(eps.len());
    for &(e, stride) in eps {
        let offset = offsets.random_range(0..stride);
        let scale = e.powf(-0.5);
        let g = grid_maximum(values, stride, offset, m)?;
        let error = (g.max - top) * scale;
        let lower = g.first_after_argmax.map(|k| (values[k] - top) * scale);
        let violation = !(error <= 0.0 && lower.is_none_or(|l| error >= l));
        let reach = k_trunc * stride;
        let det = grid_maximum(values, stride, 0, m)?;
        per_eps.push(EpsStats {
            error,
            lower,
            violation,
            interior: m >= reach && m + reach <= n,
            fractional_offset: ((stride - m % stride) % stride) as f64 / stride as f64,
            deterministic_error: (det.max - top) * scale,
        });
    }
    Ok(PathStats {
        sup: top,
        sigma: model.diffusion(top),
        per_eps,
    })
}

pub fn run_sup_estimation(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let model = config.build_model()?;
    let n = config.n_steps()?;
    let eps: Vec<(f64, usize)> = config.eps_descending()?;
    let k_trunc = config.truncation;

    thread_local! {
        // Fine paths can exceed the allocator's mmap threshold; reuse one per worker.
        static BUFFER: RefCell<Vec<f64>> = const { RefCell::new(Vec::new()) };
    }
    let per_path = collect(par_map_streams(config.paths, |i| -> Result<PathStats> {
        BUFFER.with_borrow_mut(|values| path_stats(config, &model, &eps, n, i, values))
    }))?;

    let reference: Vec<f64> = collect(par_map_streams(config.reference_samples, |i| {
        limit_sup_over_shifted_grid(1.0, k_trunc, SeedPlan::new(config.seed, i).lane(lanes::REFERENCE))
    }))?;
    let reference = EmpiricalDistribution::new(reference)?;

    let mut report = ExperimentReport::new("estimate_sup", config);
    let total = per_path.len();
    let mut total_violations = 0usize;
    let mut rate_points = Vec::with_capacity(eps.len());
    for (j, &(e, stride)) in eps.iter().enumerate() {
        let at = |p: &PathStats| p.per_eps[j];
        let violations = per_path.iter().filter(|p| at(p).violation).count();
        total_violations += violations;

        let kept: Vec<(u64, f64, f64)> = per_path
            .iter()
            .enumerate()
            .filter_map(|(i, p)| at(p).lower.map(|l| (i as u64, l, p.sigma)))
            .collect();
        let excluded = total - kept.len();
        if excluded as f64 > config.max_excluded * total as f64 {
            return Err(Error::TooManyExcluded {
                excluded,
                total,
                limit: config.max_excluded,
            });
        }
        let mut s = EpsilonSummary {
            epsilon: e,
            stride,
            paths_used: kept.len(),
            excluded,
            ..Default::default()
        };

        let errors: Vec<f64> = per_path.iter().map(|p| at(p).error).collect();
        let unscaled_rms = rms(errors.iter().copied()) * e.sqrt();
        rate_points.push((e, unscaled_rms));
        s.values.insert("rms_error".into(), unscaled_rms);
        s.values.insert("scaled_rms_error".into(), rms(errors.iter().copied()));
        s.values.insert(
            "deterministic_grid_rms_error".into(),
            rms(per_path.iter().map(|p| at(p).deterministic_error)) * e.sqrt(),
        );
        s.values.insert("sandwich_violations".into(), violations as f64);

        // Lower bound, sign-flipped and normalized, against the B_U law.
        let ids: Vec<u64> = kept.iter().map(|k| k.0).collect();
        let lower: Vec<f64> = kept.iter().map(|k| -k.1 / k.2).collect();
        s.ks.insert("lower_bound_vs_bessel_u".into(), ks_against(&lower, |x| ReferenceLaw::BesselU.cdf(x))?);

        let interior: Vec<f64> = per_path
            .iter()
            .filter(|p| at(p).interior)
            .map(|p| at(p).error / p.sigma)
            .collect();
        s.values.insert("full_error_excluded".into(), (total - interior.len()) as f64);
        let full = EmpiricalDistribution::new(interior)?;
        s.ks.insert("full_error_vs_limit".into(), ks_two_sample(&full, &reference)?);

        let fractions: Vec<f64> = per_path.iter().map(|p| at(p).fractional_offset).collect();
        s.ks.insert("deterministic_offset_vs_uniform".into(), ks_against(&fractions, |x| x.clamp(0.0, 1.0))?);

        if kept.len() >= config.slices * MIN_SLICE {
            let pairs: Vec<(f64, f64)> = kept.iter().map(|k| (-k.1 / k.2, per_path[k.0 as usize].sup)).collect();
            s.mixing.insert("lower_bound_vs_sup".into(), mixing_diagnostic(&pairs, config.slices)?);
        }

        let all_ids: Vec<u64> = (0..total as u64).collect();
        push_indexed_samples(&mut report, e, "scaled_error", &all_ids, &errors);
        push_indexed_samples(&mut report, e, "lower_bound", &ids, &kept.iter().map(|k| k.1).collect::<Vec<_>>());
        push_indexed_samples(&mut report, e, "fractional_offset", &all_ids, &fractions);
        report.per_epsilon.push(s);
    }

    report.push_check(Check::new(
        "estimate_sup.sandwich_violations",
        "0 >= scaled error >= scaled lower-bound term on every path",
        None,
        total_violations as f64,
        Relation::AtMost,
        0.0,
    ));
    if rate_points.len() >= 4 {
        let fit = rate_fit(&rate_points)?;
        report.summary.insert("rate_slope".into(), fit.slope);
        report.summary.insert("rate_slope_half_width".into(), fit.slope_half_width);
        report.summary.insert("rate_intercept".into(), fit.intercept);
        report.push_check(Check::within(
            "estimate_sup.rate_slope",
            "rms estimation error decays like eps^{1/2}",
            None,
            fit.slope,
            config.slope_min,
            config.slope_max,
        ));
    } else {
        report
            .notes
            .push(format!("rate fit skipped: {} epsilon values, at least 4 needed", rate_points.len()));
    }

    let last = report.per_epsilon.last().cloned().expect("validated eps list is non-empty");
    let e = Some(last.epsilon);
    report.push_check(Check::new(
        "estimate_sup.lower_bound_bessel_u_ks",
        "sign-flipped normalized lower-bound term follows the B_U law",
        e,
        last.ks["lower_bound_vs_bessel_u"].statistic,
        Relation::Less,
        config.ks_tol,
    ));
    report.push_check(
        Check::new(
            "estimate_sup.full_error_limit_ks",
            "normalized full error agrees with the truncated shifted-grid limit",
            e,
            last.ks["full_error_vs_limit"].statistic,
            Relation::Less,
            config.full_error_tol,
        )
        .conjectural(),
    );
    report.notes.push(format!(
        "the full-error limit is conjectural; compared against max over |i| <= {k_trunc} with {} reference draws",
        config.reference_samples
    ));
    report.push_check(Check::new(
        "estimate_sup.deterministic_offset_uniform_ks",
        "fractional offset of the argmax on the deterministic grid is uniform",
        e,
        last.ks["deterministic_offset_vs_uniform"].statistic,
        Relation::Less,
        config.uniform_tol,
    ));
    if let Some(m) = last.mixing.get("lower_bound_vs_sup") {
        report.push_check(
            Check::not_rejected(
                "estimate_sup.lower_bound_mixing",
                "lower-bound limit independent of the supremum",
                e,
                m.min_p_value,
                config.alpha,
            )
            .recorded_only(),
        );
    }
    report.summary.insert("sandwich_violations".into(), total_violations as f64);
    Ok(report)
}
