//! Location of the supremum: arcsine law and the boundary mass at the horizon.

use super::report::{Check, ExperimentReport, Relation};
use super::{collect, ks_against, path_seeds, push_samples, ExperimentConfig};
use crate::error::Result;
use crate::pathops::supremum;
use crate::reference::arcsine_cdf;
use crate::simulate::{par_map_streams, simulate_path};

pub fn run_argmax_boundary(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let model = config.build_model()?;
    let n = config.n_steps()?;
    let records = collect(par_map_streams(config.paths, |i| {
        let path = simulate_path(&model, config.horizon, n, path_seeds(config, i))?;
        supremum(&path)
    }))?;

    let mut report = ExperimentReport::new("argmax", config);
    let fractions: Vec<f64> = records.iter().map(|r| r.argmax_time / config.horizon).collect();
    let at_end = records.iter().filter(|r| r.argmax_index == n).count();
    let at_start = records.iter().filter(|r| r.argmax_index == 0).count();
    let end_fraction = at_end as f64 / records.len() as f64;
    // Arcsine mass of the last fine cell.
    let last_cell_mass = 1.0 - arcsine_cdf(1.0 - 1.0 / n as f64)?;

    let ks = ks_against(&fractions, |x| arcsine_cdf(x.clamp(0.0, 1.0)).unwrap_or(0.0))?;
    let arcsine = Check::new(
        "argmax.arcsine_ks",
        "argmax location of Brownian motion follows the arcsine law",
        None,
        ks.statistic,
        Relation::Less,
        config.arcsine_tol,
    );
    if model.name == "bm" {
        report.push_check(arcsine);
    } else {
        report.push_check(arcsine.recorded_only());
        report.notes.push(format!(
            "model '{}' is not driftless Brownian motion; the arcsine comparison is recorded, not asserted",
            model.name
        ));
    }
    report.push_check(Check::new(
        "argmax.boundary_fraction",
        "the supremum is almost never attained at the horizon",
        None,
        end_fraction,
        Relation::AtMost,
        config.boundary_fraction,
    ));

    report.summary.insert("arcsine_ks".into(), ks.statistic);
    report.summary.insert("arcsine_p_value".into(), ks.p_value);
    report.summary.insert("fraction_at_horizon".into(), end_fraction);
    report.summary.insert("fraction_at_start".into(), at_start as f64 / records.len() as f64);
    report.summary.insert("arcsine_last_cell_mass".into(), last_cell_mass);
    report.summary.insert("mean_argmax_fraction".into(), fractions.iter().sum::<f64>() / fractions.len() as f64);
    push_samples(&mut report, 0.0, "argmax_fraction", &fractions);
    Ok(report)
}
