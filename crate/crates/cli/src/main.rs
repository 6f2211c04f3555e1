//! `diffzoom` command-line front end.
//!
//! Exit status: 0 when every asserted check passes, 1 on a failed check or a
//! runtime error, 2 on a configuration error. Errors print one line
//! `error[CODE]: message` on stderr.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use diffzoom::experiments::config::parse_seed_value;
use diffzoom::experiments::{run_experiment, ExperimentConfig, ExperimentKind, ExperimentReport};
use diffzoom::reference::ReferenceLaw;
use diffzoom::Error;

const SEED_ENV: &str = "DIFFZOOM_SEED";
const REFERENCE_SCHEMA: &str = "diffzoom.reference/1";

#[derive(Parser)]
#[command(name = "diffzoom", version, about = "Zoom-in limit laws of simulated diffusions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate paths and dump them as CSV.
    Simulate(RunArgs),
    /// Zoom at a fixed time against the standard normal.
    ZoomFixed(RunArgs),
    /// Zoom at the supremum against Bessel-3.
    ZoomSup(RunArgs),
    /// Supremum estimation error on shifted grids.
    EstimateSup(RunArgs),
    /// Argmax location against the arcsine law.
    Argmax(RunArgs),
    /// Tabulate a reference CDF.
    Reference(ReferenceArgs),
    /// Run zoom-fixed, zoom-sup, estimate-sup and argmax in sequence.
    All(RunArgs),
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `key=value` applied after the file; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Master seed (decimal or 0x hex); beats the file and the environment.
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct ReferenceArgs {
    /// normal, uniform, bessel3, besselU or arcsine.
    #[arg(long)]
    law: String,
    /// Time of the Bessel-3 marginal.
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long)]
    xmin: Option<f64>,
    #[arg(long, default_value_t = 5.0)]
    xmax: f64,
    #[arg(long, default_value_t = 500)]
    points: usize,
    /// Write here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => run(&[ExperimentKind::Simulate], &a),
        Command::ZoomFixed(a) => run(&[ExperimentKind::ZoomFixed], &a),
        Command::ZoomSup(a) => run(&[ExperimentKind::ZoomSup], &a),
        Command::EstimateSup(a) => run(&[ExperimentKind::EstimateSup], &a),
        Command::Argmax(a) => run(&[ExperimentKind::Argmax], &a),
        Command::All(a) => run(&ExperimentKind::VERIFICATION, &a),
        Command::Reference(a) => reference(&a).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(if e.is_config_error() { 2 } else { 1 })
        }
    }
}

/// Defaults, then the file, then `DIFFZOOM_SEED`, then overrides, then flags.
fn build_config(kind: ExperimentKind, args: &RunArgs) -> diffzoom::Result<ExperimentConfig> {
    let mut config = ExperimentConfig::defaults_for(kind);
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|e| match e.kind() {
            io::ErrorKind::NotFound => Error::ConfigNotFound(path.display().to_string()),
            _ => Error::Config(format!("{}: {e}", path.display())),
        })?;
        config
            .apply_text(&text)
            .map_err(|e| Error::Config(format!("{}: {}", path.display(), e.to_string().trim_start_matches("config: "))))?;
    }
    if let Ok(v) = std::env::var(SEED_ENV) {
        config.seed = parse_seed_value(&v).ok_or_else(|| Error::Config(format!("{SEED_ENV}: invalid seed '{v}'")))?;
    }
    for o in &args.overrides {
        config.apply_override(o)?;
    }
    if let Some(s) = &args.seed {
        config.seed = parse_seed_value(s).ok_or_else(|| Error::Config(format!("--seed: invalid seed '{s}'")))?;
    }
    if let Some(t) = args.threads {
        config.threads = Some(t).filter(|&t| t > 0);
    }
    if let Some(dir) = &args.output_dir {
        config.output_dir = Some(dir.clone());
    }
    Ok(config)
}

fn output_dir(config: &ExperimentConfig) -> PathBuf {
    config.output_dir.clone().unwrap_or_else(|| PathBuf::from("diffzoom_out"))
}

/// Builds every configuration first so that a bad key fails before any run.
fn run(kinds: &[ExperimentKind], args: &RunArgs) -> diffzoom::Result<bool> {
    let configs = kinds
        .iter()
        .map(|&k| {
            let c = build_config(k, args)?;
            c.validate(k)?;
            Ok((k, c))
        })
        .collect::<diffzoom::Result<Vec<_>>>()?;
    let mut all_passed = true;
    for (kind, config) in configs {
        let report = run_experiment(kind, &config)?;
        write_report(&report, &output_dir(&config))?;
        all_passed &= report.passed;
    }
    Ok(all_passed)
}

fn write_report(report: &ExperimentReport, dir: &Path) -> diffzoom::Result<()> {
    let files = report.write_to(dir)?;
    println!("{}", report.headline());
    for c in report.checks.iter().filter(|c| c.asserted && !c.passed) {
        println!("  failed {}: statistic {} vs {}", c.id, c.statistic, c.threshold);
    }
    println!("  wrote {}", files[0].display());
    Ok(())
}

fn reference(args: &ReferenceArgs) -> diffzoom::Result<()> {
    let law = ReferenceLaw::from_name(&args.law, args.t)?;
    if args.points < 2 {
        return Err(Error::Config(format!("--points must be at least 2, got {}", args.points)));
    }
    let support = law.support();
    let xmin = args.xmin.unwrap_or(if support.lo.is_finite() { support.lo } else { -args.xmax });
    if !(xmin.is_finite() && args.xmax.is_finite() && xmin < args.xmax) {
        return Err(Error::Config(format!("need xmin < xmax, got {xmin} and {}", args.xmax)));
    }
    let mut out = String::new();
    out.push_str(&format!("# schema={REFERENCE_SCHEMA} law={}\nx,cdf\n", law.name()));
    for i in 0..args.points {
        let x = xmin + (args.xmax - xmin) * i as f64 / (args.points - 1) as f64;
        out.push_str(&format!("{x},{}\n", law.cdf(x)));
    }
    match &args.output {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(p, out)?;
        }
        None => io::stdout().write_all(out.as_bytes())?,
    }
    Ok(())
}
