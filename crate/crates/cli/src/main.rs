//! Command-line front end: parses a JSON configuration, dispatches to the
//! solvers, and writes CSV/JSON reports atomically.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration error,
//! 3 numeric/geometry error.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use steklov_thin::convergence::{
    run_sweep, thickness_profile, thin_spectrum, SweepConfig, SweepReport,
};
use steklov_thin::curve::{build_arclength_curve, ArclengthCurve, CurveError};
use steklov_thin::fermiform::{
    assemble_thin_form, build_basis, write_forms_binary, ThinProblemSpec,
};
use steklov_thin::fourier::TrigSeries;
use steklov_thin::limit1d::{assemble_limit_with_mass, limit_spectrum};
use steklov_thin::selftest::run_all;

use config::{RunConfig, ThicknessSection};

#[derive(Parser)]
#[command(
    name = "steklov-thin",
    about = "Biharmonic Steklov eigenvalues on thin tubular neighborhoods of planar curves",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration file.
    #[arg(long, global = true, default_value = "config.json")]
    config: PathBuf,
    /// Output directory for report files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads for sweep thickness points.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Report format written by `limit` and `thin` (`sweep` always writes both).
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Print perimeter, curvature range, Gauss-Bonnet residual, max_epsilon.
    CurveInfo,
    /// Solve the 1D limit eigenproblem and write lambda_k.
    Limit,
    /// Solve one thin problem and write theta_k.
    Thin,
    /// Run a thickness sweep and write the full report.
    Sweep,
    /// Run the built-in verification suite.
    Selftest,
}

enum Failure {
    Config(String),
    Numeric(String),
    Verification,
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numeric(_) => 3,
            Failure::Verification => 1,
        }
    }
}

impl From<steklov_thin::Error> for Failure {
    fn from(err: steklov_thin::Error) -> Self {
        match &err {
            steklov_thin::Error::Curve(CurveError::InvalidSpec(_)) => {
                Failure::Config(err.to_string())
            }
            _ => Failure::Numeric(err.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            match &failure {
                Failure::Config(msg) => eprintln!("config error: {msg}"),
                Failure::Numeric(msg) => eprintln!("error: {msg}"),
                Failure::Verification => eprintln!("verification failed"),
            }
            ExitCode::from(failure.code())
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    let config = config::load(&cli.config).map_err(Failure::Config)?;
    match cli.command {
        Command::CurveInfo => cmd_curve_info(&config),
        Command::Limit => cmd_limit(cli, &config),
        Command::Thin => cmd_thin(cli, &config),
        Command::Sweep => cmd_sweep(cli, &config),
        Command::Selftest => cmd_selftest(&config),
    }
}

fn build_curve(config: &RunConfig) -> Result<ArclengthCurve, Failure> {
    build_arclength_curve(&config.curve, config.resolution)
        .map_err(|e| Failure::from(steklov_thin::Error::from(e)))
}

fn profile_from(curve: &ArclengthCurve, section: &Option<ThicknessSection>) -> Option<TrigSeries> {
    section
        .as_ref()
        .map(|t| thickness_profile(curve, t.constant, &t.cos, &t.sin))
}

fn cmd_curve_info(config: &RunConfig) -> Result<(), Failure> {
    let curve = build_curve(config)?;
    let (kappa_min, kappa_max) = curve.kappa_range();
    println!("perimeter: {}", curve.perimeter);
    println!("kappa_min: {kappa_min}");
    println!("kappa_max: {kappa_max}");
    println!("gauss_bonnet_residual: {:e}", curve.gauss_bonnet_residual());
    println!("max_epsilon: {}", curve.max_epsilon());
    Ok(())
}

fn cmd_limit(cli: &Cli, config: &RunConfig) -> Result<(), Failure> {
    let section = config.limit.clone().unwrap_or_default();
    let curve = build_curve(config)?;
    let profile = profile_from(&curve, &section.thickness);
    let op = assemble_limit_with_mass(&curve, section.modes, profile.as_ref(), section.mass_factor)
        .map_err(|e| Failure::from(steklov_thin::Error::from(e)))?;
    let spectrum = limit_spectrum(&op, section.k_max + 1, section.b)
        .map_err(|e| Failure::from(steklov_thin::Error::from(e)))?;

    let mut csv = String::from("k,lambda\n");
    for (k, lambda) in spectrum.eigenvalues.iter().enumerate() {
        csv.push_str(&format!("{k},{lambda}\n"));
    }
    write_atomic(&cli.out.join("limit.csv"), &csv)?;
    println!("wrote {}", cli.out.join("limit.csv").display());
    if cli.format == Format::Json {
        let doc = serde_json::json!({
            "version": config::CONFIG_VERSION,
            "seed": config.seed,
            "curve": config.curve,
            "modes": section.modes,
            "b": section.b,
            "mass_factor": op.mass_factor,
            "eigenvalues": spectrum.eigenvalues,
        });
        let mut text = serde_json::to_string_pretty(&doc).expect("document serializes");
        text.push('\n');
        write_atomic(&cli.out.join("limit.json"), &text)?;
        println!("wrote {}", cli.out.join("limit.json").display());
    }
    Ok(())
}

fn cmd_thin(cli: &Cli, config: &RunConfig) -> Result<(), Failure> {
    let section = config
        .thin
        .as_ref()
        .ok_or_else(|| Failure::Config("config has no `thin` section".into()))?;
    let curve = build_curve(config)?;
    let profile = profile_from(&curve, &section.thickness);
    let spec = ThinProblemSpec {
        curve: &curve,
        epsilon: section.epsilon,
        mu: section.mu,
        b: section.b,
        thickness: profile.as_ref(),
    };
    spec.validate()
        .map_err(|e| Failure::from(steklov_thin::Error::from(e)))?;
    let basis = build_basis(section.m_s, section.n_t)
        .map_err(|e| Failure::from(steklov_thin::Error::from(e)))?;

    if let Some(dump) = &section.dump_forms {
        let forms = assemble_thin_form(&spec, &basis)
            .map_err(|e| Failure::from(steklov_thin::Error::from(e)))?;
        let path = cli.out.join(dump);
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent).map_err(|e| {
                    Failure::Numeric(format!("cannot create {}: {e}", parent.display()))
                })?;
            }
        }
        write_forms_binary(&path, &forms)
            .map_err(|e| Failure::Numeric(format!("cannot write forms dump: {e}")))?;
        println!("wrote {}", path.display());
    }

    let thin = thin_spectrum(&spec, &basis, section.k_max)
        .map_err(|e| Failure::from(steklov_thin::Error::from(e)))?;

    let mut csv = String::from("epsilon,k,theta,lambda_limit,abs_error,rate,gap,flatness\n");
    for (k, theta) in thin.thetas.iter().enumerate() {
        csv.push_str(&format!("{},{k},{theta},,,,,\n", section.epsilon));
    }
    write_atomic(&cli.out.join("thin.csv"), &csv)?;
    println!("wrote {}", cli.out.join("thin.csv").display());
    if cli.format == Format::Json {
        let doc = serde_json::json!({
            "version": config::CONFIG_VERSION,
            "seed": config.seed,
            "curve": config.curve,
            "epsilon": section.epsilon,
            "mu": section.mu,
            "b": section.b,
            "m_s": section.m_s,
            "n_t": section.n_t,
            "thetas": thin.thetas,
        });
        let mut text = serde_json::to_string_pretty(&doc).expect("document serializes");
        text.push('\n');
        write_atomic(&cli.out.join("thin.json"), &text)?;
        println!("wrote {}", cli.out.join("thin.json").display());
    }
    Ok(())
}

/// JSON document written by `sweep`: the report plus provenance.
#[derive(Debug, Serialize, Deserialize)]
pub struct SweepDocument {
    pub version: u32,
    pub seed: u64,
    pub report: SweepReport,
}

fn cmd_sweep(cli: &Cli, config: &RunConfig) -> Result<(), Failure> {
    let section = config.sweep.clone().unwrap_or_default();
    let mut sweep = SweepConfig::new(config.curve.clone());
    sweep.resolution = config.resolution;
    sweep.epsilons = section.epsilons.clone();
    sweep.mu = section.mu;
    sweep.b = section.b;
    sweep.fourier_modes = section.m_s;
    sweep.elements = section.n_t;
    sweep.limit_modes = section.limit_modes;
    sweep.k_max = section.k_max;
    sweep.threads = cli.threads;
    let report = run_sweep(&sweep).map_err(|e| Failure::from(steklov_thin::Error::from(e)))?;

    write_atomic(&cli.out.join("sweep.csv"), &report.to_csv())?;
    let document = SweepDocument {
        version: config::CONFIG_VERSION,
        seed: config.seed,
        report,
    };
    let mut json = serde_json::to_string_pretty(&document).expect("document serializes");
    json.push('\n');
    write_atomic(&cli.out.join("sweep.json"), &json)?;
    println!("wrote {}", cli.out.join("sweep.csv").display());
    println!("wrote {}", cli.out.join("sweep.json").display());
    Ok(())
}

fn cmd_selftest(config: &RunConfig) -> Result<(), Failure> {
    let report = run_all(config.seed);
    for line in report.render_lines() {
        println!("{line}");
    }
    if report.all_passed() {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

/// Writes through a temporary sibling and renames into place.
fn write_atomic(path: &Path, contents: &str) -> Result<(), Failure> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| {
                Failure::Numeric(format!("cannot create {}: {e}", parent.display()))
            })?;
        }
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents)
        .map_err(|e| Failure::Numeric(format!("cannot write {}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path)
        .map_err(|e| Failure::Numeric(format!("cannot rename into {}: {e}", path.display())))?;
    Ok(())
}
