//! Resolved run configurations, their JSON manifests, and flag merging.
//!
//! Every run writes `manifest.json` echoing the fully resolved configuration
//! and the toolkit version; pointing `--config` at a previous manifest (or
//! at a bare config object) reproduces the run.

use anyhow::{bail, Context, Result};
use infogeo::models::FamilySpec;
use infogeo::spectra::SectorChoice;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeometryConfig {
    pub model: FamilySpec,
    /// Chart point; defaults to the model's base point.
    #[serde(default)]
    pub point: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeodesicConfig {
    pub model: FamilySpec,
    #[serde(default)]
    pub initial_point: Option<Vec<f64>>,
    #[serde(default)]
    pub initial_velocity: Option<Vec<f64>>,
    /// Closed-form block initial conditions (product-Gaussian models).
    #[serde(default)]
    pub xi: Option<f64>,
    #[serde(default)]
    pub rate: Option<f64>,
    pub tau_max: f64,
    #[serde(default = "default_tol")]
    pub abs_tol: f64,
    #[serde(default = "default_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JacobiConfig {
    /// Number of microvariable triples (chart dimension 6l).
    pub l: usize,
    pub xi: f64,
    pub rate: f64,
    pub tau_max: f64,
    #[serde(default = "default_tol")]
    pub abs_tol: f64,
    #[serde(default = "default_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_tail_fraction")]
    pub tail_fraction: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IgeConfig {
    pub model: FamilySpec,
    /// Closed-form block initial conditions where a (mean, std) block is
    /// present (product-Gaussian and the chaotic composite).
    #[serde(default)]
    pub xi: Option<f64>,
    #[serde(default)]
    pub rate: Option<f64>,
    /// Per-coordinate exponential rates for scale coordinates (the
    /// integrable composite and the chaotic spacing coordinate).
    #[serde(default)]
    pub rates: Option<Vec<f64>>,
    pub tau_max: f64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_tail_fraction")]
    pub tail_fraction: f64,
    #[serde(default = "default_tol")]
    pub abs_tol: f64,
    #[serde(default = "default_tol")]
    pub rel_tol: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumConfig {
    pub n: usize,
    pub hx: f64,
    pub hy: f64,
    pub sector: SectorSelection,
}

/// Sector selection for spacing fits; `Both` fans the two parity sectors
/// out across worker threads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SectorSelection {
    Full,
    Even,
    Odd,
    Larger,
    Both,
}

impl SectorSelection {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "full" => Self::Full,
            "even" => Self::Even,
            "odd" => Self::Odd,
            "larger" => Self::Larger,
            "both" => Self::Both,
            other => bail!("unknown sector `{other}` (full|even|odd|larger|both)"),
        })
    }

    pub fn single(self) -> Option<SectorChoice> {
        match self {
            Self::Full => Some(SectorChoice::Full),
            Self::Even => Some(SectorChoice::Even),
            Self::Odd => Some(SectorChoice::Odd),
            Self::Larger => Some(SectorChoice::Larger),
            Self::Both => None,
        }
    }
}

fn default_tol() -> f64 {
    1e-9
}

fn default_grid_points() -> usize {
    512
}

fn default_tail_fraction() -> f64 {
    0.5
}

/// Manifest written next to every run's outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest<C> {
    pub version: String,
    pub subcommand: String,
    pub seed: u64,
    pub threads: usize,
    pub config: C,
}

impl<C: Serialize> Manifest<C> {
    pub fn new(subcommand: &str, seed: u64, threads: usize, config: C) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            seed,
            threads,
            config,
        }
    }
}

/// Load a config of type `C` from a JSON file that holds either the bare
/// config object or a manifest wrapping one.
pub fn load_config<C: DeserializeOwned>(path: &Path) -> Result<C> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let inner = match value.get("config") {
        Some(c) => c.clone(),
        None => value,
    };
    serde_json::from_value(inner).with_context(|| format!("interpreting {}", path.display()))
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(dir.join(name), text)
        .with_context(|| format!("writing {}/{name}", dir.display()))
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    std::fs::write(dir.join(name), text)
        .with_context(|| format!("writing {}/{name}", dir.display()))
}
