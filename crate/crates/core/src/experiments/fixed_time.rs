//! Zoom at a fixed time: rescaled increments against the standard normal.

use super::report::{Check, EpsilonSummary, ExperimentReport, Relation};
use super::{collect, ks_against, path_seeds, push_samples, ExperimentConfig};
use crate::error::Result;
use crate::pathops::zoom_fixed;
use crate::reference::normal_cdf;
use crate::simulate::{par_map_streams, simulate_path};
use crate::stats::mixing_diagnostic;

struct PathStats {
    x_at_time: f64,
    /// Normalized forward and backward marginals, one per epsilon.
    forward: Vec<f64>,
    backward: Vec<f64>,
}

pub fn run_zoom_at_fixed_time(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let model = config.build_model()?;
    let n = config.n_steps()?;
    let t = config.zoom_time();
    let w = config.window;
    let eps = config.eps_descending()?;

    let per_path = collect(par_map_streams(config.paths, |i| -> Result<PathStats> {
        let path = simulate_path(&model, config.horizon, n, path_seeds(config, i))?;
        let k = (t / config.dt).round() as usize;
        let x = path.values[k];
        // Marginal at rescaled time `window`, divided by sigma(X_T) sqrt(window).
        let norm = model.diffusion(x) * w.sqrt();
        let mut forward = Vec::with_capacity(eps.len());
        let mut backward = Vec::with_capacity(eps.len());
        for &(e, _) in &eps {
            let z = zoom_fixed(&path, t, e, w)?;
            forward.push(z.post.values[z.post.values.len() - 1] / norm);
            backward.push(z.pre.values[z.pre.values.len() - 1] / norm);
        }
        Ok(PathStats {
            x_at_time: x,
            forward,
            backward,
        })
    }))?;

    let mut report = ExperimentReport::new("zoom_fixed", config);
    let x_at: Vec<f64> = per_path.iter().map(|p| p.x_at_time).collect();
    let mut forward_ks = Vec::new();
    for (j, &(e, stride)) in eps.iter().enumerate() {
        let fwd: Vec<f64> = per_path.iter().map(|p| p.forward[j]).collect();
        let bwd: Vec<f64> = per_path.iter().map(|p| p.backward[j]).collect();
        let mut s = EpsilonSummary {
            epsilon: e,
            stride,
            paths_used: fwd.len(),
            ..Default::default()
        };
        let kf = ks_against(&fwd, normal_cdf)?;
        let kb = ks_against(&bwd, normal_cdf)?;
        forward_ks.push(kf.statistic);
        s.ks.insert("forward_vs_normal".into(), kf);
        s.ks.insert("backward_vs_normal".into(), kb);
        let pairs = |v: &[f64], c: &[f64]| v.iter().copied().zip(c.iter().copied()).collect::<Vec<_>>();
        if fwd.len() >= config.slices * crate::stats::MIN_SLICE {
            s.mixing.insert("forward_vs_x_at_time".into(), mixing_diagnostic(&pairs(&fwd, &x_at), config.slices)?);
            s.mixing.insert("backward_vs_x_at_time".into(), mixing_diagnostic(&pairs(&bwd, &x_at), config.slices)?);
            s.mixing.insert("forward_vs_backward".into(), mixing_diagnostic(&pairs(&fwd, &bwd), config.slices)?);
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        s.values.insert("forward_mean".into(), mean(&fwd));
        s.values.insert("backward_mean".into(), mean(&bwd));
        push_samples(&mut report, e, "forward", &fwd);
        push_samples(&mut report, e, "backward", &bwd);
        report.per_epsilon.push(s);
    }
    push_samples(&mut report, 0.0, "x_at_time", &x_at);

    let last = report.per_epsilon.last().cloned().expect("validated eps list is non-empty");
    let e = Some(last.epsilon);
    for (key, id) in [("forward_vs_normal", "zoom_fixed.forward_normal_ks"), ("backward_vs_normal", "zoom_fixed.backward_normal_ks")] {
        let ks = &last.ks[key];
        report.push_check(Check::new(
            id,
            "normalized rescaled increment is standard normal at the smallest epsilon",
            e,
            ks.statistic,
            Relation::Less,
            config.ks_tol,
        ));
    }
    for (key, id, claim) in [
        ("forward_vs_x_at_time", "zoom_fixed.forward_mixing", "forward limit independent of X at the zoom time"),
        ("backward_vs_x_at_time", "zoom_fixed.backward_mixing", "backward limit independent of X at the zoom time"),
        ("forward_vs_backward", "zoom_fixed.forward_backward_independence", "forward and backward limits independent"),
    ] {
        if let Some(m) = last.mixing.get(key) {
            report.push_check(Check::not_rejected(id, claim, e, m.min_p_value, config.alpha));
        }
    }
    if forward_ks.len() > 1 {
        // Only a drift makes the distance depend on epsilon; without one the
        // sequence is pure sampling noise and is recorded only.
        let drift_present = model.drift(model.initial_value) != 0.0;
        let worst = forward_ks.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        let check = Check::new(
            "zoom_fixed.ks_decreasing",
            "forward KS distance decreases as epsilon shrinks",
            None,
            worst,
            Relation::Less,
            0.0,
        );
        report.push_check(if drift_present { check } else { check.recorded_only() });
    }
    report.summary.insert("zoom_time".into(), t);
    Ok(report)
}
