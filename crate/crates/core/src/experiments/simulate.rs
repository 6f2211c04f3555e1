//! Plain path simulation with CSV dumps.

use super::report::ExperimentReport;
use super::{collect, path_seeds, push_samples, ExperimentConfig};
use crate::error::Result;
use crate::pathops::supremum;
use crate::scale::build_scale;
use crate::simulate::{par_map_streams, simulate_path};

pub fn run_simulate(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let model = config.build_model()?;
    let n = config.n_steps()?;
    let dumped = config.dump_paths.min(config.paths);
    let results = collect(par_map_streams(config.paths, |i| -> Result<(f64, f64, f64, Option<String>)> {
        let path = simulate_path(&model, config.horizon, n, path_seeds(config, i))?;
        let rec = supremum(&path)?;
        let csv = if (i as usize) < dumped {
            let mut buf = Vec::new();
            path.write_csv(&mut buf)?;
            Some(String::from_utf8(buf).expect("ascii csv"))
        } else {
            None
        };
        Ok((path.values[n], rec.sup_value, rec.argmax_time, csv))
    }))?;

    let mut report = ExperimentReport::new("simulate", config);
    let terminal: Vec<f64> = results.iter().map(|r| r.0).collect();
    let sups: Vec<f64> = results.iter().map(|r| r.1).collect();
    let argmax: Vec<f64> = results.iter().map(|r| r.2).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let sd = |v: &[f64]| {
        let m = mean(v);
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len().max(2) - 1) as f64).sqrt()
    };
    report.summary.insert("terminal_mean".into(), mean(&terminal));
    report.summary.insert("terminal_sd".into(), sd(&terminal));
    report.summary.insert("sup_mean".into(), mean(&sups));
    report.summary.insert("argmax_mean".into(), mean(&argmax));
    push_samples(&mut report, 0.0, "terminal", &terminal);
    push_samples(&mut report, 0.0, "sup", &sups);
    push_samples(&mut report, 0.0, "argmax_time", &argmax);
    for (i, r) in results.into_iter().enumerate() {
        if let Some(csv) = r.3 {
            report.artifacts.push((format!("path_{i:05}.csv"), csv));
        }
    }

    match build_scale(&model, config.scale_interval(&model), config.scale_tol) {
        Ok(scale) => {
            let mut table = Vec::new();
            scale.write_table(&mut table, 1001)?;
            report
                .artifacts
                .push(("scale_table.csv".into(), String::from_utf8(table).expect("ascii table")));
        }
        Err(e) => report.notes.push(format!("scale table not written: {e}")),
    }
    Ok(report)
}
