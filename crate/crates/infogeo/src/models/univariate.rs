//! One-parameter spacing families on the positive half-line.

use super::{require_positive, DensityFamily, ModelError, ParamPoint};
use crate::geometry::{Domain, MetricField};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use std::f64::consts::PI;

fn half_line_domain() -> Domain {
    Domain::new(vec![(0.0, f64::INFINITY)])
}

/// 1x1 metric `k / x^2` on the half-line, with exact derivatives.
fn scalar_metric(name: &'static str, k: f64) -> MetricField {
    MetricField::analytic(
        half_line_domain(),
        name,
        move |p: &ParamPoint| DMatrix::from_element(1, 1, k / p.coords()[0].powi(2)),
        move |p: &ParamPoint, _| DMatrix::from_element(1, 1, -2.0 * k / p.coords()[0].powi(3)),
    )
    .with_hessian(move |p: &ParamPoint, _, _| {
        DMatrix::from_element(1, 1, 6.0 * k / p.coords()[0].powi(4))
    })
}

fn draw_uniforms(seed: u64, count: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.gen::<f64>()).collect()
}

/// Exponential spacing family `p(x|theta) = exp(-x/theta) / theta`.
#[derive(Debug, Clone)]
pub struct ExponentialModel {
    pub theta: f64,
}

impl ExponentialModel {
    pub fn new(theta: f64) -> Result<Self, ModelError> {
        require_positive(theta, "theta")?;
        Ok(Self { theta })
    }
}

impl DensityFamily for ExponentialModel {
    fn name(&self) -> &'static str {
        "exponential"
    }

    fn chart_dim(&self) -> usize {
        1
    }

    fn micro_dim(&self) -> usize {
        1
    }

    fn base_point(&self) -> ParamPoint {
        ParamPoint::new(vec![self.theta]).expect("validated")
    }

    fn chart_domain(&self) -> Domain {
        half_line_domain()
    }

    fn log_density(&self, params: &ParamPoint, x: &[f64]) -> Result<f64, ModelError> {
        self.check_params(params)?;
        let theta = params.coords()[0];
        if x[0] < 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(-theta.ln() - x[0] / theta)
    }

    fn score(&self, params: &ParamPoint, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.check_params(params)?;
        let theta = params.coords()[0];
        Ok(vec![-1.0 / theta + x[0] / (theta * theta)])
    }

    fn sample(
        &self,
        params: &ParamPoint,
        seed: u64,
        count: usize,
    ) -> Result<Vec<Vec<f64>>, ModelError> {
        self.check_params(params)?;
        if count == 0 {
            return Err(ModelError::InvalidSampleRequest(
                "count must be >= 1".into(),
            ));
        }
        let theta = params.coords()[0];
        Ok(draw_uniforms(seed, count)
            .into_iter()
            .map(|u| vec![-theta * (1.0 - u).ln()])
            .collect())
    }

    fn truncated_support(&self, params: &ParamPoint) -> Result<Vec<(f64, f64)>, ModelError> {
        self.check_params(params)?;
        Ok(vec![(0.0, 40.0 * params.coords()[0])])
    }

    fn typical_microstate(&self, params: &ParamPoint) -> Result<Vec<f64>, ModelError> {
        self.check_params(params)?;
        Ok(vec![params.coords()[0]])
    }

    fn closed_form_metric(&self) -> Option<MetricField> {
        Some(scalar_metric("exponential", 1.0))
    }
}

/// Weibull family with fixed shape `n` and scale chart coordinate `Lambda`.
#[derive(Debug, Clone)]
pub struct WeibullModel {
    pub lambda_scale: f64,
    pub shape_n: f64,
}

impl WeibullModel {
    pub fn new(lambda_scale: f64, shape_n: f64) -> Result<Self, ModelError> {
        require_positive(lambda_scale, "lambda_scale")?;
        require_positive(shape_n, "shape_n")?;
        Ok(Self {
            lambda_scale,
            shape_n,
        })
    }
}

impl DensityFamily for WeibullModel {
    fn name(&self) -> &'static str {
        "weibull"
    }

    fn chart_dim(&self) -> usize {
        1
    }

    fn micro_dim(&self) -> usize {
        1
    }

    fn base_point(&self) -> ParamPoint {
        ParamPoint::new(vec![self.lambda_scale]).expect("validated")
    }

    fn chart_domain(&self) -> Domain {
        half_line_domain()
    }

    fn log_density(&self, params: &ParamPoint, x: &[f64]) -> Result<f64, ModelError> {
        self.check_params(params)?;
        let lam = params.coords()[0];
        let n = self.shape_n;
        if x[0] <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        let z = x[0] / lam;
        Ok(n.ln() - lam.ln() + (n - 1.0) * z.ln() - z.powf(n))
    }

    fn score(&self, params: &ParamPoint, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.check_params(params)?;
        let lam = params.coords()[0];
        let n = self.shape_n;
        let z = x[0] / lam;
        Ok(vec![(-n + n * z.powf(n)) / lam])
    }

    fn sample(
        &self,
        params: &ParamPoint,
        seed: u64,
        count: usize,
    ) -> Result<Vec<Vec<f64>>, ModelError> {
        self.check_params(params)?;
        if count == 0 {
            return Err(ModelError::InvalidSampleRequest(
                "count must be >= 1".into(),
            ));
        }
        let lam = params.coords()[0];
        let n = self.shape_n;
        Ok(draw_uniforms(seed, count)
            .into_iter()
            .map(|u| vec![lam * (-(1.0 - u).ln()).powf(1.0 / n)])
            .collect())
    }

    fn truncated_support(&self, params: &ParamPoint) -> Result<Vec<(f64, f64)>, ModelError> {
        self.check_params(params)?;
        let lam = params.coords()[0];
        // Heavy tails below shape 1 need a wider box than 40 scales to keep
        // the discarded mass exp(-(T/lam)^n) negligible.
        let stretch = 74.0f64.powf(1.0 / self.shape_n).max(40.0);
        Ok(vec![(0.0, lam * stretch)])
    }

    fn typical_microstate(&self, params: &ParamPoint) -> Result<Vec<f64>, ModelError> {
        self.check_params(params)?;
        Ok(vec![params.coords()[0]])
    }

    fn closed_form_metric(&self) -> Option<MetricField> {
        Some(scalar_metric("weibull", self.shape_n * self.shape_n))
    }
}

/// Wigner–Dyson spacing family `q(y|phi) = pi y / (2 phi^2) exp(-pi y^2 / (4 phi^2))`.
#[derive(Debug, Clone)]
pub struct WignerDysonModel {
    pub phi: f64,
}

impl WignerDysonModel {
    pub fn new(phi: f64) -> Result<Self, ModelError> {
        require_positive(phi, "phi")?;
        Ok(Self { phi })
    }
}

impl DensityFamily for WignerDysonModel {
    fn name(&self) -> &'static str {
        "wigner-dyson"
    }

    fn chart_dim(&self) -> usize {
        1
    }

    fn micro_dim(&self) -> usize {
        1
    }

    fn base_point(&self) -> ParamPoint {
        ParamPoint::new(vec![self.phi]).expect("validated")
    }

    fn chart_domain(&self) -> Domain {
        half_line_domain()
    }

    fn log_density(&self, params: &ParamPoint, x: &[f64]) -> Result<f64, ModelError> {
        self.check_params(params)?;
        let phi = params.coords()[0];
        if x[0] <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        Ok((PI / 2.0).ln() + x[0].ln() - 2.0 * phi.ln() - PI * x[0] * x[0] / (4.0 * phi * phi))
    }

    fn score(&self, params: &ParamPoint, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.check_params(params)?;
        let phi = params.coords()[0];
        Ok(vec![
            -2.0 / phi + PI * x[0] * x[0] / (2.0 * phi * phi * phi),
        ])
    }

    fn sample(
        &self,
        params: &ParamPoint,
        seed: u64,
        count: usize,
    ) -> Result<Vec<Vec<f64>>, ModelError> {
        self.check_params(params)?;
        if count == 0 {
            return Err(ModelError::InvalidSampleRequest(
                "count must be >= 1".into(),
            ));
        }
        let phi = params.coords()[0];
        Ok(draw_uniforms(seed, count)
            .into_iter()
            .map(|u| vec![2.0 * phi * (-(1.0 - u).ln() / PI).sqrt()])
            .collect())
    }

    fn truncated_support(&self, params: &ParamPoint) -> Result<Vec<(f64, f64)>, ModelError> {
        self.check_params(params)?;
        Ok(vec![(0.0, 40.0 * params.coords()[0])])
    }

    fn typical_microstate(&self, params: &ParamPoint) -> Result<Vec<f64>, ModelError> {
        self.check_params(params)?;
        Ok(vec![params.coords()[0]])
    }

    fn closed_form_metric(&self) -> Option<MetricField> {
        Some(scalar_metric("wigner-dyson", 4.0))
    }
}
