//! `qctx`: run the named context-dependence experiments from layered TOML
//! configuration and write CSV tables plus a manifest.

mod config;
mod error;
mod runner;
mod units;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{resolve, Config, ConfigError, Experiment, Source};
use error::CliError;

#[derive(Parser)]
#[command(name = "qctx", version, about = "Finite-sample context-dependence tests and unitarity estimates for noisy gate sequences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write `<name>.csv` and `<name>.manifest.json`.
    Run(RunArgs),
    /// Check a configuration without running it.
    Validate {
        /// Config file, or an experiment name to check its defaults.
        config: String,
        #[command(flatten)]
        layers: Layers,
    },
    /// List the available experiments.
    List,
}

#[derive(Args)]
struct Layers {
    /// `section.key=value`, applied after the config file; repeatable.
    #[arg(short = 's', long = "set", visible_alias = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment name, e.g. fig5 or table1.
    experiment: Option<String>,
    /// TOML file layered over the experiment defaults.
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    layers: Layers,
    /// Coupling angle; sets `toy.phi` for the toy model and `model.phi` otherwise.
    #[arg(long, allow_hyphen_values = true)]
    phi: Option<String>,
    /// Frame-search trials (`search.trials`).
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Shots per probability (`sampling.n_s`).
    #[arg(long = "n-s")]
    n_s: Option<String>,
    /// Number of hypothetical experiments (`sampling.experiments`).
    #[arg(short = 'r', long = "experiments")]
    experiments: Option<String>,
    /// Output directory (`output_dir`).
    #[arg(short, long)]
    out: Option<PathBuf>,
}

fn read_source(path: &Path) -> Result<Source, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    Ok(Source { path: Some(path.display().to_string()), text })
}

fn with_path(src: Option<&Source>, e: ConfigError) -> CliError {
    match src.and_then(|s| s.path.clone()) {
        Some(p) => CliError::Config(ConfigError { msg: format!("{}: {}", p, e.msg), ..e }),
        None => CliError::Config(e),
    }
}

fn run(args: RunArgs) -> Result<(), CliError> {
    let src = args.config.as_deref().map(read_source).transpose()?;
    let exp = args.experiment.as_deref().map(|s| s.parse::<Experiment>().map_err(|m| CliError::Config(ConfigError::new(m)))).transpose()?;
    let named = match (exp, &src) {
        (Some(e), _) => Some(e),
        (None, Some(s)) => resolve(None, Some(s), &[]).map(|(e, _)| e).ok(),
        (None, None) => None,
    };
    let mut overrides = Vec::new();
    if let Some(p) = args.phi {
        let key = if named == Some(Experiment::ToyModel) { "toy.phi" } else { "model.phi" };
        overrides.push(format!("{key}={p}"));
    }
    for (key, v) in [("search.trials", args.trials), ("seed", args.seed), ("sampling.n_s", args.n_s), ("sampling.experiments", args.experiments)] {
        if let Some(v) = v {
            overrides.push(format!("{key}={v}"));
        }
    }
    overrides.extend(args.layers.overrides);
    if let Some(o) = &args.out {
        overrides.push(format!("output_dir={}", toml::Value::String(o.display().to_string())));
    }
    let (_, cfg) = resolve(exp, src.as_ref(), &overrides).map_err(|e| with_path(src.as_ref(), e))?;
    set_threads(&cfg);
    let files = runner::run(&cfg, Path::new(&cfg.output_dir))?;
    for f in files {
        println!("{}", Path::new(&cfg.output_dir).join(f).display());
    }
    Ok(())
}

fn set_threads(cfg: &Config) {
    if cfg.sampling.threads > 0 {
        // Fails only if the pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.sampling.threads as usize).build_global();
    }
}

/// Condition number above which `validate` warns.
const COND_LIMIT: f64 = 1e12;

fn validate(target: &str, layers: Layers) -> Result<bool, CliError> {
    let path = Path::new(target);
    let (src, exp) = if path.exists() { (Some(read_source(path)?), None) } else { (None, Some(target.parse::<Experiment>().map_err(|m| CliError::Config(ConfigError::new(m)))?)) };
    let mut ok = true;
    let mut line = |status: &str, what: &str, detail: String| {
        ok &= status != "FAIL";
        println!("{status:<4}  {what}: {detail}");
    };
    let cfg = match resolve(exp, src.as_ref(), &layers.overrides) {
        Ok((_, c)) => {
            line("ok", "config", format!("experiment {}, sha256 {}", c.experiment, runner::config_hash(&c)));
            c
        }
        Err(e) => {
            let what = if e.field.as_deref() == Some("model.n_z") { "stationarity" } else { "config" };
            line("FAIL", what, with_path(src.as_ref(), e).to_string());
            return Ok(false);
        }
    };
    let p = cfg.zz_params()?;
    line(
        "ok",
        "units",
        format!("t_g = {}, gamma1 = {}, gamma_phi = {}, gamma3 = {}", units::format_time(p.t_g), units::format_rate(p.gamma1_a), units::format_rate(p.gammaphi_a), units::format_rate(p.gamma3_a)),
    );
    match cfg.stationarity_mismatch()? {
        Some((err, want)) => line("ok", "stationarity", format!("n_z = {} matches (g1 - g3)/(g1 + g3) = {want} within {err:.1e}", cfg.model.n_z)),
        None => line("ok", "stationarity", format!("gamma3 derived from n_z = {}", cfg.model.n_z)),
    }
    for (label, ideal, noisy) in runner::frames(&cfg)? {
        let status = if ideal.abs() > 1e-12 && noisy.abs() > 1e-12 { "ok" } else { "FAIL" };
        line(status, "frame", format!("{label}: det P0 = {ideal:.6e} ideal, {noisy:.6e} configured"));
    }
    if let Some(d) = runner::longest_design(&cfg)? {
        let (x, p) = (d.xs.last().copied().unwrap_or(0.0), d.truth.last().expect("nonempty design"));
        let cond = p.entries.condition1();
        let status = if cond.is_finite() && cond < COND_LIMIT { "ok" } else { "WARN" };
        line(status, "length", format!("cond(P) = {cond:.3e} at the longest sequence x = {x} (limit {COND_LIMIT:e})"));
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::List => {
            for e in Experiment::ALL {
                let name = match e.alias() {
                    Some(a) => format!("{}/{a}", e.name()),
                    None => e.name().to_string(),
                };
                println!("{name:<20} {}", e.summary());
            }
            Ok(())
        }
        Command::Run(args) => run(args),
        Command::Validate { config, layers } => match validate(&config, layers) {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(2),
            Err(e) => Err(e),
        },
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
