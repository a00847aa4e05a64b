//! `solve`: runs the adaptive loop for one configuration and writes the
//! convergence table, a summary and optional VTK snapshots.
//!
//! Exit status: 0 when the run ends normally, 1 on I/O or solver errors,
//! 2 on usage errors, 3 when the loop aborts (element budget, fixed-point
//! non-convergence, failed linear solve).

use std::path::PathBuf;
use std::process::ExitCode;

use boussinesq::config::ProblemConfig;
use boussinesq::io::{run_experiment, RunManifest};
use boussinesq::Error;
use clap::Parser;

#[derive(Parser, Debug)]
#[command(name = "solve", version, about = "Adaptive FEM for the Boussinesq system with a point heat source")]
struct Args {
    /// key = value configuration file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = ["square", "lshape"])]
    domain: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    gx: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    gy: Option<f64>,
    /// Strength of the point heat source.
    #[arg(long, allow_hyphen_values = true)]
    hsource: Option<f64>,
    /// Source location as X,Y.
    #[arg(long)]
    z: Option<String>,
    #[arg(long, value_parser = ["th", "mini", "taylor_hood"])]
    element: Option<String>,
    #[arg(long)]
    adapt_max: Option<usize>,
    #[arg(long)]
    picard_tol: Option<f64>,
    #[arg(long)]
    marking_frac: Option<f64>,
    /// Any other configuration key, as KEY=VALUE. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Write a VTK snapshot every N iterations.
    #[arg(long, value_name = "N")]
    vtk_every: Option<usize>,
}

fn build_config(args: &Args) -> Result<ProblemConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => ProblemConfig::from_file(path)?,
        None => ProblemConfig::default(),
    };
    let mut overrides: Vec<(&str, String)> = Vec::new();
    let mut push = |key, value: Option<String>| {
        if let Some(v) = value {
            overrides.push((key, v));
        }
    };
    push("domain", args.domain.clone());
    push("alpha", args.alpha.map(|v| v.to_string()));
    push("nu", args.nu.map(|v| v.to_string()));
    push("kappa", args.kappa.map(|v| v.to_string()));
    push("gx", args.gx.map(|v| v.to_string()));
    push("gy", args.gy.map(|v| v.to_string()));
    push("h_strength", args.hsource.map(|v| v.to_string()));
    push("z", args.z.clone());
    push("element", args.element.clone());
    push("adapt_max", args.adapt_max.map(|v| v.to_string()));
    push("picard_tol", args.picard_tol.map(|v| v.to_string()));
    push("marking_fraction", args.marking_frac.map(|v| v.to_string()));
    for (key, value) in overrides {
        cfg.set(key, &value)?;
    }
    for kv in &args.set {
        let (key, value) =
            kv.split_once('=').ok_or_else(|| Error::InvalidConfig(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(key, value)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match build_config(&args) {
        Ok(cfg) => cfg,
        Err(e @ Error::Io { .. }) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
        Err(e) => {
            eprintln!("usage error: {e}");
            return ExitCode::from(2);
        }
    };
    let manifest = match RunManifest::new(cfg, &args.out, args.vtk_every) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(if matches!(e, Error::Io { .. }) { 1 } else { 2 });
        }
    };
    let report = match run_experiment(&manifest) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    print!("{}", report.summary());
    if report.outcome.stop.is_success() {
        ExitCode::SUCCESS
    } else {
        eprintln!("run aborted: {}", report.outcome.stop);
        ExitCode::from(3)
    }
}
