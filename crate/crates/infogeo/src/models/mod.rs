//! Parametric probability families over chart coordinates.
//!
//! Every family exposes a log-density, the score (gradient of the log-density
//! in the chart coordinates), seeded sampling, a truncated integration
//! support, and an optional closed-form Fisher metric. Families factorize
//! into independent blocks wherever their density is a product; quadrature
//! routines exploit the block structure instead of integrating the full
//! microspace at once.

mod composite;
mod functionals;
mod gaussian;
mod transform;
mod univariate;

pub use composite::{ChaoticComposite, IntegrableComposite};
pub use functionals::{
    normalization_report, relative_entropy, relative_entropy_uniform, NormalizationReport,
    UniformReference,
};
pub use gaussian::{CorrelatedGaussianModel, GaussianProductModel};
pub use transform::{pushforward, MonotoneMap, PushforwardFamily};
pub use univariate::{ExponentialModel, WeibullModel, WignerDysonModel};

use crate::geometry::{Domain, MetricField};
use crate::quadrature::QuadError;
use serde::{Deserialize, Serialize};
use std::ops::Range;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("parameter point outside the family domain: {0}")]
    OutOfDomain(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("microstate {0:?} outside the family support")]
    OutOfSupport(Vec<f64>),
    #[error("invalid sample request: {0}")]
    InvalidSampleRequest(String),
    #[error("incompatible families: {0}")]
    Incompatible(String),
    #[error("non-invertible map: {0}")]
    NonInvertibleMap(String),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error("malformed family JSON: {0}")]
    Json(String),
}

/// A point on the chart of a statistical manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamPoint {
    coords: Vec<f64>,
}

impl ParamPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self, ModelError> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(ModelError::InvalidParameter(format!(
                "non-finite chart coordinate in {coords:?}"
            )));
        }
        Ok(Self { coords })
    }

    pub fn chart_dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Copy with one coordinate replaced; used by per-coordinate quadrature.
    pub fn with_coord(&self, index: usize, value: f64) -> Self {
        let mut coords = self.coords.clone();
        coords[index] = value;
        Self { coords }
    }
}

impl From<ParamPoint> for Vec<f64> {
    fn from(p: ParamPoint) -> Self {
        p.coords
    }
}

/// One independent factor of a product density: which microstate slots it
/// owns and which chart coordinates parametrize it.
#[derive(Debug, Clone)]
pub struct FactorBlock {
    pub micro: Range<usize>,
    pub chart: Range<usize>,
}

/// A parametric family of densities over a fixed microspace.
///
/// `params` always carries the full chart coordinates; the struct fields of
/// the concrete families double as the base point (see [`base_point`]) and
/// as structural constants that are not chart coordinates (the correlation
/// `r`, the Weibull shape `n`).
///
/// [`base_point`]: DensityFamily::base_point
pub trait DensityFamily: Send + Sync {
    fn name(&self) -> &'static str;

    fn chart_dim(&self) -> usize;

    fn micro_dim(&self) -> usize;

    /// Chart point assembled from the constructor fields.
    fn base_point(&self) -> ParamPoint;

    /// Open chart domain (positivity constraints and the like).
    fn chart_domain(&self) -> Domain;

    /// Natural log of the density at microstate `x`. Microstates outside the
    /// support yield `-inf`; chart points outside the domain are an error.
    fn log_density(&self, params: &ParamPoint, x: &[f64]) -> Result<f64, ModelError>;

    /// Gradient of the log-density in the chart coordinates at fixed `x`.
    fn score(&self, params: &ParamPoint, x: &[f64]) -> Result<Vec<f64>, ModelError>;

    /// Draw `count` microstates; identical seeds give identical sequences.
    fn sample(
        &self,
        params: &ParamPoint,
        seed: u64,
        count: usize,
    ) -> Result<Vec<Vec<f64>>, ModelError>;

    /// Finite integration box per microstate slot, truncated far enough out
    /// that the discarded tail mass is negligible at crate tolerances.
    fn truncated_support(&self, params: &ParamPoint) -> Result<Vec<(f64, f64)>, ModelError>;

    /// Independence structure of the density; defaults to a single block.
    fn factor_blocks(&self) -> Vec<FactorBlock> {
        vec![FactorBlock {
            micro: 0..self.micro_dim(),
            chart: 0..self.chart_dim(),
        }]
    }

    /// A high-density microstate (per-slot means) used as the anchor when
    /// integrating one factor with the others held fixed.
    fn typical_microstate(&self, params: &ParamPoint) -> Result<Vec<f64>, ModelError>;

    /// Closed-form Fisher metric over the chart, when one is known.
    fn closed_form_metric(&self) -> Option<MetricField> {
        None
    }

    fn check_params(&self, params: &ParamPoint) -> Result<(), ModelError> {
        if params.chart_dim() != self.chart_dim() {
            return Err(ModelError::OutOfDomain(format!(
                "chart dimension mismatch: family {} expects {}, got {}",
                self.name(),
                self.chart_dim(),
                params.chart_dim()
            )));
        }
        if !self.chart_domain().contains(params.coords()) {
            return Err(ModelError::OutOfDomain(format!(
                "{:?} violates the {} domain",
                params.coords(),
                self.name()
            )));
        }
        Ok(())
    }
}

/// JSON descriptor for the built-in families:
/// `{"family": "<name>", "params": {...}}` with field names matching the
/// family constructors.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "kebab-case")]
pub enum FamilySpec {
    GaussianProduct {
        l: usize,
        means: Vec<f64>,
        stds: Vec<f64>,
    },
    CorrelatedGaussian {
        mu_x: f64,
        sigma_x: f64,
        mu_y: f64,
        sigma_y: f64,
        r: f64,
    },
    Exponential {
        theta: f64,
    },
    Weibull {
        lambda_scale: f64,
        shape_n: f64,
    },
    WignerDyson {
        phi: f64,
    },
    IntegrableComposite {
        #[serde(rename = "mu_A")]
        mu_a: f64,
        #[serde(rename = "mu_B")]
        mu_b: f64,
    },
    ChaoticComposite {
        #[serde(rename = "mu_A_p")]
        mu_a_p: f64,
        #[serde(rename = "mu_B_p")]
        mu_b_p: f64,
        #[serde(rename = "sigma_B_p")]
        sigma_b_p: f64,
    },
}

impl FamilySpec {
    pub fn build(&self) -> Result<Box<dyn DensityFamily>, ModelError> {
        Ok(match self.clone() {
            FamilySpec::GaussianProduct { l, means, stds } => {
                Box::new(GaussianProductModel::new(l, means, stds)?)
            }
            FamilySpec::CorrelatedGaussian {
                mu_x,
                sigma_x,
                mu_y,
                sigma_y,
                r,
            } => Box::new(CorrelatedGaussianModel::new(
                mu_x, sigma_x, mu_y, sigma_y, r,
            )?),
            FamilySpec::Exponential { theta } => Box::new(ExponentialModel::new(theta)?),
            FamilySpec::Weibull {
                lambda_scale,
                shape_n,
            } => Box::new(WeibullModel::new(lambda_scale, shape_n)?),
            FamilySpec::WignerDyson { phi } => Box::new(WignerDysonModel::new(phi)?),
            FamilySpec::IntegrableComposite { mu_a, mu_b } => {
                Box::new(IntegrableComposite::new(mu_a, mu_b)?)
            }
            FamilySpec::ChaoticComposite {
                mu_a_p,
                mu_b_p,
                sigma_b_p,
            } => Box::new(ChaoticComposite::new(mu_a_p, mu_b_p, sigma_b_p)?),
        })
    }
}

/// Build a family from its JSON descriptor.
pub fn family_from_json(json: &str) -> Result<Box<dyn DensityFamily>, ModelError> {
    let spec: FamilySpec =
        serde_json::from_str(json).map_err(|e| ModelError::Json(e.to_string()))?;
    spec.build()
}

pub(crate) fn require_positive(value: f64, what: &str) -> Result<(), ModelError> {
    if !(value.is_finite() && value > 0.0) {
        return Err(ModelError::InvalidParameter(format!(
            "{what} must be a positive finite real, got {value}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn param_point_rejects_non_finite() {
        assert!(ParamPoint::new(vec![1.0, f64::NAN]).is_err());
        assert!(ParamPoint::new(vec![1.0, f64::INFINITY]).is_err());
        assert_eq!(ParamPoint::new(vec![1.0, 2.0]).unwrap().chart_dim(), 2);
    }

    #[test]
    fn family_json_round_trip() {
        let json = r#"{"family":"exponential","params":{"theta":2.0}}"#;
        let family = family_from_json(json).unwrap();
        assert_eq!(family.name(), "exponential");
        assert_eq!(family.chart_dim(), 1);

        let json = r#"{"family":"chaotic-composite","params":{"mu_A_p":1.0,"mu_B_p":0.0,"sigma_B_p":1.0}}"#;
        let family = family_from_json(json).unwrap();
        assert_eq!(family.chart_dim(), 3);
    }

    #[test]
    fn family_json_rejects_bad_params() {
        let json = r#"{"family":"exponential","params":{"theta":-1.0}}"#;
        assert!(family_from_json(json).is_err());
        let json = r#"{"family":"no-such-family","params":{}}"#;
        assert!(family_from_json(json).is_err());
    }
}
