//! Batch front end for the information-geometry toolkit.
//!
//! Subcommands: `geometry | geodesic | jacobi | ige | spectrum`. Each run
//! resolves its configuration from flags (optionally seeded by a
//! `--config` JSON file, flags winning), writes a `manifest.json` echoing
//! the resolved configuration, and emits a `report.json` plus plot-ready
//! CSV traces. Outputs are byte-identical across reruns of the same
//! configuration and seed.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 numerical failure.

mod config;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use config::{
    load_config, write_json, write_text, GeodesicConfig, GeometryConfig, IgeConfig, JacobiConfig,
    Manifest, SectorSelection, SpectrumConfig,
};
use infogeo::dynamics::{
    estimate_lambda_j, gaussian_geodesic_initial_state, initial_jacobi_from_family,
    integrate_geodesic, integrate_jlc, jacobi_intensity, GaussianGeodesicParams, GeodesicState,
    Tolerances,
};
use infogeo::geometry::{analytic_metric, curvature_report, FdPolicy};
use infogeo::ige::{fit_growth, ige_trace, GrowthReport};
use infogeo::models::{DensityFamily, FamilySpec, ParamPoint};
use infogeo::spectra::{analyze_chain, FitReport, SpinChainSpec};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "infogeo",
    version,
    about = "information-geometry toolkit runner"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Curvature report (scalar, Ricci, sectional samples, Weyl) at a point.
    Geometry(GeometryArgs),
    /// Integrate a geodesic and dump the trajectory.
    Geodesic(GeodesicArgs),
    /// Integrate the Jacobi deviation equation on the product-Gaussian
    /// manifold and estimate the growth exponent.
    Jacobi(JacobiArgs),
    /// Volume growth along a geodesic: entropy trace, growth fit, regime.
    Ige(IgeArgs),
    /// Diagonalize an Ising chain and fit its level-spacing distribution.
    Spectrum(SpectrumArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// JSON config (bare config object or a previous manifest).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long)]
    out_dir: PathBuf,
    /// RNG seed recorded in the manifest.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker-thread cap for fan-out work.
    #[arg(long)]
    threads: Option<usize>,
}

/// Family selector shared by the model-driven subcommands.
#[derive(Args, Clone, Default)]
struct ModelArgs {
    /// gaussian-product | correlated-gaussian | exponential | weibull |
    /// wigner-dyson | integrable | chaotic
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    l: Option<usize>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    means: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    stds: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    phi: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    lambda_scale: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    shape_n: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    mu_a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    mu_b: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    sigma_b: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    mu_x: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    sigma_x: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    mu_y: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    sigma_y: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    r: Option<f64>,
}

impl ModelArgs {
    fn to_spec(&self) -> Result<Option<FamilySpec>> {
        let Some(name) = &self.model else {
            return Ok(None);
        };
        let spec = match name.as_str() {
            "gaussian-product" => {
                let l = self.l.unwrap_or(1);
                let means = self.means.clone().unwrap_or_else(|| vec![0.0; 3 * l]);
                let stds = self.stds.clone().unwrap_or_else(|| vec![1.0; 3 * l]);
                FamilySpec::GaussianProduct { l, means, stds }
            }
            "correlated-gaussian" => FamilySpec::CorrelatedGaussian {
                mu_x: self.mu_x.unwrap_or(0.0),
                sigma_x: self.sigma_x.unwrap_or(1.0),
                mu_y: self.mu_y.unwrap_or(0.0),
                sigma_y: self.sigma_y.unwrap_or(1.0),
                r: self.r.unwrap_or(0.0),
            },
            "exponential" => FamilySpec::Exponential {
                theta: self.theta.unwrap_or(1.0),
            },
            "weibull" => FamilySpec::Weibull {
                lambda_scale: self.lambda_scale.unwrap_or(1.0),
                shape_n: self.shape_n.unwrap_or(2.0),
            },
            "wigner-dyson" => FamilySpec::WignerDyson {
                phi: self.phi.unwrap_or(1.0),
            },
            "integrable" | "integrable-composite" => FamilySpec::IntegrableComposite {
                mu_a: self.mu_a.unwrap_or(1.0),
                mu_b: self.mu_b.unwrap_or(1.0),
            },
            "chaotic" | "chaotic-composite" => FamilySpec::ChaoticComposite {
                mu_a_p: self.mu_a.unwrap_or(1.0),
                mu_b_p: self.mu_b.unwrap_or(0.0),
                sigma_b_p: self.sigma_b.unwrap_or(1.0),
            },
            other => bail!("unknown model `{other}`"),
        };
        Ok(Some(spec))
    }
}

#[derive(Args)]
struct GeometryArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Chart point (comma-separated coordinates).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    point: Option<Vec<f64>>,
}

#[derive(Args)]
struct GeodesicArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    initial: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    velocity: Option<Vec<f64>>,
    /// Closed-form block amplitude (product-Gaussian models).
    #[arg(long, allow_negative_numbers = true)]
    xi: Option<f64>,
    /// Closed-form block rate (product-Gaussian models).
    #[arg(long, allow_negative_numbers = true)]
    rate: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    tau_max: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    abs_tol: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    rel_tol: Option<f64>,
    #[arg(long)]
    grid_points: Option<usize>,
}

#[derive(Args)]
struct JacobiArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    l: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    xi: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    rate: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    tau_max: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    abs_tol: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    rel_tol: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    tail_fraction: Option<f64>,
}

#[derive(Args)]
struct IgeArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, allow_negative_numbers = true)]
    xi: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    rate: Option<f64>,
    /// Exponential rates for scale coordinates (comma-separated).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    rates: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    tau_max: Option<f64>,
    #[arg(long)]
    grid_points: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    tail_fraction: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    abs_tol: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    rel_tol: Option<f64>,
}

#[derive(Args)]
struct SpectrumArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// regular (transverse field) or chaotic (tilted field).
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    hx: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    hy: Option<f64>,
    /// full | even | odd | larger | both
    #[arg(long)]
    sector: Option<String>,
}

/// Failures after configuration resolution are numerical (exit 3);
/// everything before is configuration (exit 2).
enum RunError {
    Config(anyhow::Error),
    Numerical(anyhow::Error),
}

trait IntoRunError<T> {
    fn config_err(self) -> Result<T, RunError>;
    fn numerical_err(self) -> Result<T, RunError>;
}

impl<T, E: Into<anyhow::Error>> IntoRunError<T> for Result<T, E> {
    fn config_err(self) -> Result<T, RunError> {
        self.map_err(|e| RunError::Config(e.into()))
    }

    fn numerical_err(self) -> Result<T, RunError> {
        self.map_err(|e| RunError::Numerical(e.into()))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are not configuration errors.
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(2);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    let outcome = match cli.command {
        Command::Geometry(args) => run_geometry(args),
        Command::Geodesic(args) => run_geodesic(args),
        Command::Jacobi(args) => run_jacobi(args),
        Command::Ige(args) => run_ige(args),
        Command::Spectrum(args) => run_spectrum(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(RunError::Config(e)) => {
            eprintln!("configuration error: {e:#}");
            ExitCode::from(2)
        }
        Err(RunError::Numerical(e)) => {
            eprintln!("numerical failure: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn prepare_out_dir(common: &CommonArgs) -> Result<PathBuf, RunError> {
    std::fs::create_dir_all(&common.out_dir)
        .with_context(|| format!("creating output directory {}", common.out_dir.display()))
        .config_err()?;
    Ok(common.out_dir.clone())
}

fn emit_manifest<C: Serialize>(
    dir: &Path,
    subcommand: &str,
    common: &CommonArgs,
    config: &C,
) -> Result<(u64, usize), RunError> {
    let seed = common.seed.unwrap_or(0);
    let threads = common.threads.unwrap_or(1).max(1);
    let manifest = Manifest::new(subcommand, seed, threads, config);
    write_json(dir, "manifest.json", &manifest).config_err()?;
    Ok((seed, threads))
}

fn run_geometry(args: GeometryArgs) -> Result<(), RunError> {
    let from_file: Option<GeometryConfig> = match &args.common.config {
        Some(path) => Some(load_config(path).config_err()?),
        None => None,
    };
    let model = match args.model.to_spec().config_err()? {
        Some(m) => m,
        None => from_file
            .as_ref()
            .map(|c| c.model.clone())
            .ok_or_else(|| RunError::Config(anyhow!("--model or --config required")))?,
    };
    let point = args
        .point
        .clone()
        .or_else(|| from_file.as_ref().and_then(|c| c.point.clone()));
    let config = GeometryConfig { model, point };

    let dir = prepare_out_dir(&args.common)?;
    emit_manifest(&dir, "geometry", &args.common, &config)?;

    let family = config.model.build().config_err()?;
    let field = analytic_metric(family.as_ref()).config_err()?;
    let point = match &config.point {
        Some(coords) => ParamPoint::new(coords.clone()).config_err()?,
        None => family.base_point(),
    };
    let report = curvature_report(&field, &point, &FdPolicy::default()).numerical_err()?;
    write_json(&dir, "report.json", &report).numerical_err()?;
    println!(
        "geometry: scalar = {:.6} at {:?} (weyl max |W| = {:.3e})",
        report.scalar, report.point, report.weyl_max_abs
    );
    Ok(())
}

#[derive(Serialize)]
struct GeodesicReport {
    chart_dim: usize,
    tau_end: f64,
    accepted_steps: usize,
    max_speed_drift: f64,
    final_point: Vec<f64>,
    final_velocity: Vec<f64>,
}

fn run_geodesic(args: GeodesicArgs) -> Result<(), RunError> {
    let from_file: Option<GeodesicConfig> = match &args.common.config {
        Some(path) => Some(load_config(path).config_err()?),
        None => None,
    };
    let model = match args.model.to_spec().config_err()? {
        Some(m) => m,
        None => from_file
            .as_ref()
            .map(|c| c.model.clone())
            .ok_or_else(|| RunError::Config(anyhow!("--model or --config required")))?,
    };
    let f = from_file.as_ref();
    let config = GeodesicConfig {
        model,
        initial_point: args
            .initial
            .clone()
            .or_else(|| f.and_then(|c| c.initial_point.clone())),
        initial_velocity: args
            .velocity
            .clone()
            .or_else(|| f.and_then(|c| c.initial_velocity.clone())),
        xi: args.xi.or_else(|| f.and_then(|c| c.xi)),
        rate: args.rate.or_else(|| f.and_then(|c| c.rate)),
        tau_max: args
            .tau_max
            .or_else(|| f.map(|c| c.tau_max))
            .ok_or_else(|| RunError::Config(anyhow!("--tau-max required")))?,
        abs_tol: args
            .abs_tol
            .or_else(|| f.map(|c| c.abs_tol))
            .unwrap_or(1e-9),
        rel_tol: args
            .rel_tol
            .or_else(|| f.map(|c| c.rel_tol))
            .unwrap_or(1e-9),
        grid_points: args
            .grid_points
            .or_else(|| f.map(|c| c.grid_points))
            .unwrap_or(512),
    };

    let dir = prepare_out_dir(&args.common)?;
    emit_manifest(&dir, "geodesic", &args.common, &config)?;

    let family = config.model.build().config_err()?;
    let field = analytic_metric(family.as_ref()).config_err()?;
    let initial = resolve_initial_state(&config, family.as_ref()).config_err()?;
    let tol = Tolerances {
        abs: config.abs_tol,
        rel: config.rel_tol,
    };
    let trajectory = integrate_geodesic(&field, &initial, config.tau_max, &tol).numerical_err()?;
    let end = trajectory.state_at(trajectory.end_tau()).numerical_err()?;
    let report = GeodesicReport {
        chart_dim: field.chart_dim(),
        tau_end: trajectory.end_tau(),
        accepted_steps: trajectory.len(),
        max_speed_drift: trajectory.max_speed_drift(),
        final_point: end.point.coords().to_vec(),
        final_velocity: end.velocity.clone(),
    };
    write_json(&dir, "report.json", &report).numerical_err()?;
    write_text(
        &dir,
        "trajectory.csv",
        &trajectory.to_csv(Some(&field)).numerical_err()?,
    )
    .numerical_err()?;
    println!(
        "geodesic: {} accepted steps to tau = {}, speed drift {:.3e}",
        report.accepted_steps, report.tau_end, report.max_speed_drift
    );
    Ok(())
}

fn resolve_initial_state(
    config: &GeodesicConfig,
    family: &dyn DensityFamily,
) -> Result<GeodesicState> {
    if let (Some(point), Some(velocity)) = (&config.initial_point, &config.initial_velocity) {
        return Ok(GeodesicState::new(
            0.0,
            ParamPoint::new(point.clone())?,
            velocity.clone(),
        )?);
    }
    if let (Some(xi), Some(rate)) = (config.xi, config.rate) {
        if family.name() != "gaussian-product" {
            bail!("closed-form initial conditions (--xi/--rate) apply to gaussian-product models");
        }
        let params = GaussianGeodesicParams::new(xi, rate)?;
        return Ok(gaussian_geodesic_initial_state(
            &params,
            family.micro_dim(),
        )?);
    }
    bail!("provide either --initial and --velocity, or --xi and --rate");
}

#[derive(Serialize)]
struct JacobiReport {
    chart_dim: usize,
    tau_end: f64,
    lambda_j: f64,
    configured_rate: f64,
    relative_error: f64,
    final_intensity: f64,
}

fn run_jacobi(args: JacobiArgs) -> Result<(), RunError> {
    let f: Option<JacobiConfig> = match &args.common.config {
        Some(path) => Some(load_config(path).config_err()?),
        None => None,
    };
    let rate = args
        .rate
        .or_else(|| f.as_ref().map(|c| c.rate))
        .ok_or_else(|| RunError::Config(anyhow!("--rate required")))?;
    let config = JacobiConfig {
        l: args.l.or_else(|| f.as_ref().map(|c| c.l)).unwrap_or(1),
        xi: args.xi.or_else(|| f.as_ref().map(|c| c.xi)).unwrap_or(2.0),
        rate,
        tau_max: args
            .tau_max
            .or_else(|| f.as_ref().map(|c| c.tau_max))
            .unwrap_or(10.0 / rate),
        abs_tol: args
            .abs_tol
            .or_else(|| f.as_ref().map(|c| c.abs_tol))
            .unwrap_or(1e-9),
        rel_tol: args
            .rel_tol
            .or_else(|| f.as_ref().map(|c| c.rel_tol))
            .unwrap_or(1e-9),
        tail_fraction: args
            .tail_fraction
            .or_else(|| f.as_ref().map(|c| c.tail_fraction))
            .unwrap_or(0.5),
    };

    let dir = prepare_out_dir(&args.common)?;
    emit_manifest(&dir, "jacobi", &args.common, &config)?;

    let family = infogeo::models::GaussianProductModel::new(
        config.l,
        vec![0.0; 3 * config.l],
        vec![1.0; 3 * config.l],
    )
    .config_err()?;
    let field = analytic_metric(&family).config_err()?;
    let n_blocks = 3 * config.l;
    let xi = config.xi;
    let initial_family =
        move |lam: f64| -> Result<GeodesicState, infogeo::dynamics::DynamicsError> {
            gaussian_geodesic_initial_state(&GaussianGeodesicParams::new(xi, lam)?, n_blocks)
        };
    let tol = Tolerances {
        abs: config.abs_tol,
        rel: config.rel_tol,
    };
    let base = integrate_geodesic(
        &field,
        &initial_family(config.rate).numerical_err()?,
        config.tau_max,
        &tol,
    )
    .numerical_err()?;
    let d_lam = 1e-5 * config.rate;
    let j0 = initial_jacobi_from_family(&initial_family, config.rate, d_lam).numerical_err()?;
    let jlc = integrate_jlc(&field, &base, &j0, &tol).numerical_err()?;

    let mut series = Vec::new();
    for &tau in &jlc.grid() {
        let state = jlc.state_at(tau).numerical_err()?;
        let j = jlc.jacobi_at(tau).numerical_err()?;
        series.push((
            tau,
            jacobi_intensity(&field, &state.point, &j).numerical_err()?,
        ));
    }
    let lambda_j = estimate_lambda_j(&series, config.tail_fraction).numerical_err()?;
    let report = JacobiReport {
        chart_dim: field.chart_dim(),
        tau_end: jlc.end_tau(),
        lambda_j,
        configured_rate: config.rate,
        relative_error: (lambda_j - config.rate).abs() / config.rate,
        final_intensity: series.last().map(|p| p.1).unwrap_or(f64::NAN),
    };
    write_json(&dir, "report.json", &report).numerical_err()?;
    write_text(
        &dir,
        "trajectory.csv",
        &jlc.to_csv(Some(&field)).numerical_err()?,
    )
    .numerical_err()?;
    println!(
        "jacobi: lambda_J = {:.6} vs configured {:.6} ({:.2}% off)",
        report.lambda_j,
        report.configured_rate,
        100.0 * report.relative_error
    );
    Ok(())
}

fn run_ige(args: IgeArgs) -> Result<(), RunError> {
    let f: Option<IgeConfig> = match &args.common.config {
        Some(path) => Some(load_config(path).config_err()?),
        None => None,
    };
    let model = match args.model.to_spec().config_err()? {
        Some(m) => m,
        None => f
            .as_ref()
            .map(|c| c.model.clone())
            .ok_or_else(|| RunError::Config(anyhow!("--model or --config required")))?,
    };
    let config = IgeConfig {
        model,
        xi: args.xi.or_else(|| f.as_ref().and_then(|c| c.xi)),
        rate: args.rate.or_else(|| f.as_ref().and_then(|c| c.rate)),
        rates: args
            .rates
            .clone()
            .or_else(|| f.as_ref().and_then(|c| c.rates.clone())),
        tau_max: args
            .tau_max
            .or_else(|| f.as_ref().map(|c| c.tau_max))
            .ok_or_else(|| RunError::Config(anyhow!("--tau-max required")))?,
        grid_points: args
            .grid_points
            .or_else(|| f.as_ref().map(|c| c.grid_points))
            .unwrap_or(512),
        tail_fraction: args
            .tail_fraction
            .or_else(|| f.as_ref().map(|c| c.tail_fraction))
            .unwrap_or(0.5),
        abs_tol: args
            .abs_tol
            .or_else(|| f.as_ref().map(|c| c.abs_tol))
            .unwrap_or(1e-9),
        rel_tol: args
            .rel_tol
            .or_else(|| f.as_ref().map(|c| c.rel_tol))
            .unwrap_or(1e-9),
    };
    if config.grid_points < 32 {
        return Err(RunError::Config(anyhow!("--grid-points must be >= 32")));
    }

    let dir = prepare_out_dir(&args.common)?;
    emit_manifest(&dir, "ige", &args.common, &config)?;

    let family = config.model.build().config_err()?;
    let field = analytic_metric(family.as_ref()).config_err()?;
    let initial = ige_initial_state(&config, family.as_ref()).config_err()?;
    let tol = Tolerances {
        abs: config.abs_tol,
        rel: config.rel_tol,
    };
    let geodesic = integrate_geodesic(&field, &initial, config.tau_max, &tol).numerical_err()?;
    let grid: Vec<f64> = (0..config.grid_points)
        .map(|k| config.tau_max * k as f64 / (config.grid_points - 1) as f64)
        .collect();
    let trace = ige_trace(&field, &geodesic, &grid).numerical_err()?;
    let fit = fit_growth(&trace, config.tail_fraction).numerical_err()?;
    let report = GrowthReport::from_fit(&fit);
    write_json(&dir, "report.json", &report).numerical_err()?;
    write_text(&dir, "trace.csv", &trace.to_csv()).numerical_err()?;
    match (&report.classification, report.ambiguous) {
        (Some(regime), _) => println!(
            "ige: {:?} (model {:?}, slope {:.4}, log coefficient {:.4}, residual ratio {:.2})",
            regime, report.model, report.slope, report.coefficient, report.residual_ratio
        ),
        (None, true) => println!(
            "ige: ambiguous fit (residual ratio {:.3}); both growth models reported",
            report.residual_ratio
        ),
        _ => {}
    }
    Ok(())
}

/// Initial conditions per model: closed-form block states where a
/// (mean, std) block exists, exponential rates on scale coordinates.
fn ige_initial_state(config: &IgeConfig, family: &dyn DensityFamily) -> Result<GeodesicState> {
    match family.name() {
        "gaussian-product" => {
            let xi = config.xi.unwrap_or(2.0);
            let rate = config
                .rate
                .ok_or_else(|| anyhow!("--rate required for gaussian-product"))?;
            let params = GaussianGeodesicParams::new(xi, rate)?;
            Ok(gaussian_geodesic_initial_state(
                &params,
                family.micro_dim(),
            )?)
        }
        "integrable-composite" => {
            let rates = config.rates.clone().unwrap_or_else(|| vec![0.5, 0.5]);
            if rates.len() != 2 {
                bail!("integrable composite needs two exponential rates");
            }
            let base = family.base_point();
            let velocity: Vec<f64> = base
                .coords()
                .iter()
                .zip(&rates)
                .map(|(c, v)| c * v)
                .collect();
            Ok(GeodesicState::new(0.0, base, velocity)?)
        }
        "chaotic-composite" => {
            let xi = config.xi.unwrap_or(2.0);
            let rate = config
                .rate
                .ok_or_else(|| anyhow!("--rate required for the chaotic composite block"))?;
            let spacing_rate = config
                .rates
                .as_ref()
                .and_then(|r| r.first().copied())
                .unwrap_or(0.3);
            let params = GaussianGeodesicParams::new(xi, rate)?;
            let (mu0, sigma0) = infogeo::dynamics::analytic_gaussian_geodesic(&params, 0.0);
            let (dmu0, dsigma0) =
                infogeo::dynamics::analytic_gaussian_geodesic_velocity(&params, 0.0);
            let base = family.base_point();
            let mu_a0 = base.coords()[0];
            Ok(GeodesicState::new(
                0.0,
                ParamPoint::new(vec![mu_a0, mu0, sigma0])?,
                vec![spacing_rate * mu_a0, dmu0, dsigma0],
            )?)
        }
        other => bail!("ige initial conditions are not defined for model `{other}`"),
    }
}

fn run_spectrum(args: SpectrumArgs) -> Result<(), RunError> {
    let f: Option<SpectrumConfig> = match &args.common.config {
        Some(path) => Some(load_config(path).config_err()?),
        None => None,
    };
    let preset = match args.preset.as_deref() {
        Some("regular") => Some((0.0, 2.0)),
        Some("chaotic") => Some((1.0, 1.0)),
        Some(other) => {
            return Err(RunError::Config(anyhow!(
                "unknown preset `{other}` (regular|chaotic)"
            )))
        }
        None => None,
    };
    let n = args
        .n
        .or_else(|| f.as_ref().map(|c| c.n))
        .ok_or_else(|| RunError::Config(anyhow!("--n required")))?;
    let (hx, hy) = match preset {
        Some(p) => p,
        None => (
            args.hx
                .or_else(|| f.as_ref().map(|c| c.hx))
                .ok_or_else(|| RunError::Config(anyhow!("--hx/--hy or --preset required")))?,
            args.hy
                .or_else(|| f.as_ref().map(|c| c.hy))
                .ok_or_else(|| RunError::Config(anyhow!("--hx/--hy or --preset required")))?,
        ),
    };
    let sector = match &args.sector {
        Some(s) => SectorSelection::parse(s).config_err()?,
        None => f
            .as_ref()
            .map(|c| c.sector)
            .unwrap_or(SectorSelection::Larger),
    };
    let config = SpectrumConfig { n, hx, hy, sector };

    let dir = prepare_out_dir(&args.common)?;
    let (_, threads) = emit_manifest(&dir, "spectrum", &args.common, &config)?;

    let spec = SpinChainSpec::new(config.n, config.hx, config.hy).config_err()?;
    match config.sector.single() {
        Some(choice) => {
            let (report, spectrum, sample) = analyze_chain(&spec, choice).numerical_err()?;
            write_json(&dir, "report.json", &report).numerical_err()?;
            write_text(&dir, "spectrum.csv", &spectrum.to_csv()).numerical_err()?;
            write_text(&dir, "spacings.csv", &sample.to_csv()).numerical_err()?;
            print_fit(&report);
        }
        None => {
            // Both parity sectors, fanned out when a second worker is allowed.
            let run_even = || analyze_chain(&spec, infogeo::spectra::SectorChoice::Even);
            let run_odd = || analyze_chain(&spec, infogeo::spectra::SectorChoice::Odd);
            let (even, odd) = if threads > 1 {
                std::thread::scope(|scope| {
                    let even = scope.spawn(run_even);
                    let odd = scope.spawn(run_odd);
                    (
                        even.join().expect("even worker"),
                        odd.join().expect("odd worker"),
                    )
                })
            } else {
                (run_even(), run_odd())
            };
            let (even_report, even_spectrum, even_sample) = even.numerical_err()?;
            let (odd_report, odd_spectrum, odd_sample) = odd.numerical_err()?;
            #[derive(Serialize)]
            struct BothReports {
                even: FitReport,
                odd: FitReport,
            }
            write_json(
                &dir,
                "report.json",
                &BothReports {
                    even: even_report.clone(),
                    odd: odd_report.clone(),
                },
            )
            .numerical_err()?;
            write_text(&dir, "spectrum_even.csv", &even_spectrum.to_csv()).numerical_err()?;
            write_text(&dir, "spacings_even.csv", &even_sample.to_csv()).numerical_err()?;
            write_text(&dir, "spectrum_odd.csv", &odd_spectrum.to_csv()).numerical_err()?;
            write_text(&dir, "spacings_odd.csv", &odd_sample.to_csv()).numerical_err()?;
            print_fit(&even_report);
            print_fit(&odd_report);
        }
    }
    Ok(())
}

fn print_fit(report: &FitReport) {
    println!(
        "spectrum: n = {}, H({}, {}), sector {} ({} levels): beta = {:.4}, KS(poisson) = {:.4}, KS(goe) = {:.4}",
        report.n, report.hx, report.hy, report.sector, report.levels, report.beta,
        report.ks_poisson, report.ks_goe
    );
}
