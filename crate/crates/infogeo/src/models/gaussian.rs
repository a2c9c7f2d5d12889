//! Product-of-Gaussians families: the uncorrelated product model whose chart
//! interleaves (mean, std) pairs, and the fixed-correlation bivariate model.

use super::{require_positive, DensityFamily, FactorBlock, ModelError, ParamPoint};
use crate::geometry::{Domain, MetricField};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const LOG_TWO_PI: f64 = 1.837_877_066_409_345_6;

/// Product of independent one-dimensional Gaussians.
///
/// Chart coordinates interleave per component: `[mu_1, sigma_1, mu_2, ...]`.
/// The canonical constructor takes `l` groups of three microvariables (3l
/// components, 6l chart coordinates); [`from_components`] admits any number
/// of components, which the curvature and geodesic test fixtures use for
/// single-block manifolds.
///
/// [`from_components`]: GaussianProductModel::from_components
#[derive(Debug, Clone)]
pub struct GaussianProductModel {
    components: Vec<(f64, f64)>,
}

impl GaussianProductModel {
    pub fn new(l: usize, means: Vec<f64>, stds: Vec<f64>) -> Result<Self, ModelError> {
        if l == 0 {
            return Err(ModelError::InvalidParameter("l must be >= 1".into()));
        }
        if means.len() != 3 * l || stds.len() != 3 * l {
            return Err(ModelError::InvalidParameter(format!(
                "expected 3l = {} means and stds, got {} and {}",
                3 * l,
                means.len(),
                stds.len()
            )));
        }
        Self::from_components(means.into_iter().zip(stds).collect())
    }

    /// Product Gaussian with an arbitrary number of (mean, std) components.
    pub fn from_components(components: Vec<(f64, f64)>) -> Result<Self, ModelError> {
        if components.is_empty() {
            return Err(ModelError::InvalidParameter(
                "at least one Gaussian component required".into(),
            ));
        }
        for &(mean, std) in &components {
            if !mean.is_finite() {
                return Err(ModelError::InvalidParameter(format!(
                    "non-finite mean {mean}"
                )));
            }
            require_positive(std, "std")?;
        }
        Ok(Self { components })
    }

    /// Single (mean, std) component: one microvariable, a 2-dim chart.
    pub fn single(mean: f64, std: f64) -> Result<Self, ModelError> {
        Self::from_components(vec![(mean, std)])
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    fn block_domain(n_components: usize) -> Domain {
        let mut bounds = Vec::with_capacity(2 * n_components);
        for _ in 0..n_components {
            bounds.push((f64::NEG_INFINITY, f64::INFINITY));
            bounds.push((0.0, f64::INFINITY));
        }
        Domain::new(bounds)
    }
}

impl DensityFamily for GaussianProductModel {
    fn name(&self) -> &'static str {
        "gaussian-product"
    }

    fn chart_dim(&self) -> usize {
        2 * self.components.len()
    }

    fn micro_dim(&self) -> usize {
        self.components.len()
    }

    fn base_point(&self) -> ParamPoint {
        let coords = self.components.iter().flat_map(|&(m, s)| [m, s]).collect();
        ParamPoint::new(coords).expect("validated at construction")
    }

    fn chart_domain(&self) -> Domain {
        Self::block_domain(self.components.len())
    }

    fn log_density(&self, params: &ParamPoint, x: &[f64]) -> Result<f64, ModelError> {
        self.check_params(params)?;
        let c = params.coords();
        let mut total = 0.0;
        for (k, &xk) in x.iter().enumerate().take(self.micro_dim()) {
            let (mu, sigma) = (c[2 * k], c[2 * k + 1]);
            let z = (xk - mu) / sigma;
            total += -0.5 * LOG_TWO_PI - sigma.ln() - 0.5 * z * z;
        }
        Ok(total)
    }

    fn score(&self, params: &ParamPoint, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.check_params(params)?;
        let c = params.coords();
        let mut s = vec![0.0; self.chart_dim()];
        for (k, &xk) in x.iter().enumerate().take(self.micro_dim()) {
            let (mu, sigma) = (c[2 * k], c[2 * k + 1]);
            let d = xk - mu;
            s[2 * k] = d / (sigma * sigma);
            s[2 * k + 1] = (d * d - sigma * sigma) / (sigma * sigma * sigma);
        }
        Ok(s)
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
        let c = params.coords();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normals: Vec<Normal<f64>> = (0..self.micro_dim())
            .map(|k| Normal::new(c[2 * k], c[2 * k + 1]).expect("positive std"))
            .collect();
        Ok((0..count)
            .map(|_| normals.iter().map(|n| n.sample(&mut rng)).collect())
            .collect())
    }

    fn truncated_support(&self, params: &ParamPoint) -> Result<Vec<(f64, f64)>, ModelError> {
        self.check_params(params)?;
        let c = params.coords();
        Ok((0..self.micro_dim())
            .map(|k| {
                let (mu, sigma) = (c[2 * k], c[2 * k + 1]);
                (mu - 12.0 * sigma, mu + 12.0 * sigma)
            })
            .collect())
    }

    fn factor_blocks(&self) -> Vec<FactorBlock> {
        (0..self.micro_dim())
            .map(|k| FactorBlock {
                micro: k..k + 1,
                chart: 2 * k..2 * k + 2,
            })
            .collect()
    }

    fn typical_microstate(&self, params: &ParamPoint) -> Result<Vec<f64>, ModelError> {
        self.check_params(params)?;
        let c = params.coords();
        Ok((0..self.micro_dim()).map(|k| c[2 * k]).collect())
    }

    fn closed_form_metric(&self) -> Option<MetricField> {
        let n_components = self.components.len();
        let dim = 2 * n_components;
        let eval = move |p: &ParamPoint| {
            let c = p.coords();
            let mut g = DMatrix::zeros(dim, dim);
            for k in 0..n_components {
                let s2 = c[2 * k + 1] * c[2 * k + 1];
                g[(2 * k, 2 * k)] = 1.0 / s2;
                g[(2 * k + 1, 2 * k + 1)] = 2.0 / s2;
            }
            g
        };
        let deriv = move |p: &ParamPoint, rho: usize| {
            let c = p.coords();
            let mut dg = DMatrix::zeros(dim, dim);
            if rho % 2 == 1 {
                let k = rho / 2;
                let s3 = c[2 * k + 1].powi(3);
                dg[(2 * k, 2 * k)] = -2.0 / s3;
                dg[(2 * k + 1, 2 * k + 1)] = -4.0 / s3;
            }
            dg
        };
        let hess = move |p: &ParamPoint, nu: usize, rho: usize| {
            let c = p.coords();
            let mut h = DMatrix::zeros(dim, dim);
            if nu == rho && nu % 2 == 1 {
                let k = nu / 2;
                let s4 = c[2 * k + 1].powi(4);
                h[(2 * k, 2 * k)] = 6.0 / s4;
                h[(2 * k + 1, 2 * k + 1)] = 12.0 / s4;
            }
            h
        };
        Some(
            MetricField::analytic(
                Self::block_domain(n_components),
                "gaussian-product",
                eval,
                deriv,
            )
            .with_hessian(hess),
        )
    }
}

/// Bivariate Gaussian with fixed correlation `r`; chart coordinates are
/// `(mu_x, sigma_x, mu_y, sigma_y)`.
#[derive(Debug, Clone)]
pub struct CorrelatedGaussianModel {
    pub mu_x: f64,
    pub sigma_x: f64,
    pub mu_y: f64,
    pub sigma_y: f64,
    r: f64,
}

/// Distance from |r| = 1 below which the model is rejected outright.
const CORRELATION_GUARD: f64 = 1e-3;

impl CorrelatedGaussianModel {
    pub fn new(
        mu_x: f64,
        sigma_x: f64,
        mu_y: f64,
        sigma_y: f64,
        r: f64,
    ) -> Result<Self, ModelError> {
        require_positive(sigma_x, "sigma_x")?;
        require_positive(sigma_y, "sigma_y")?;
        if !mu_x.is_finite() || !mu_y.is_finite() {
            return Err(ModelError::InvalidParameter("non-finite mean".into()));
        }
        if !r.is_finite() || r.abs() >= 1.0 - CORRELATION_GUARD {
            return Err(ModelError::InvalidParameter(format!(
                "correlation r = {r} must satisfy |r| < {}",
                1.0 - CORRELATION_GUARD
            )));
        }
        Ok(Self {
            mu_x,
            sigma_x,
            mu_y,
            sigma_y,
            r,
        })
    }

    pub fn correlation(&self) -> f64 {
        self.r
    }

    fn metric_eval(r: f64) -> impl Fn(&ParamPoint) -> DMatrix<f64> {
        move |p: &ParamPoint| {
            let c = p.coords();
            let (sx, sy) = (c[1], c[3]);
            let q = 1.0 - r * r;
            let mut g = DMatrix::zeros(4, 4);
            g[(0, 0)] = 1.0 / (sx * sx * q);
            g[(2, 2)] = 1.0 / (sy * sy * q);
            g[(1, 1)] = (2.0 - r * r) / (sx * sx * q);
            g[(3, 3)] = (2.0 - r * r) / (sy * sy * q);
            g[(0, 2)] = -r / (sx * sy * q);
            g[(2, 0)] = g[(0, 2)];
            g[(1, 3)] = -(r * r) / (sx * sy * q);
            g[(3, 1)] = g[(1, 3)];
            g
        }
    }
}

impl DensityFamily for CorrelatedGaussianModel {
    fn name(&self) -> &'static str {
        "correlated-gaussian"
    }

    fn chart_dim(&self) -> usize {
        4
    }

    fn micro_dim(&self) -> usize {
        2
    }

    fn base_point(&self) -> ParamPoint {
        ParamPoint::new(vec![self.mu_x, self.sigma_x, self.mu_y, self.sigma_y])
            .expect("validated at construction")
    }

    fn chart_domain(&self) -> Domain {
        Domain::new(vec![
            (f64::NEG_INFINITY, f64::INFINITY),
            (0.0, f64::INFINITY),
            (f64::NEG_INFINITY, f64::INFINITY),
            (0.0, f64::INFINITY),
        ])
    }

    fn log_density(&self, params: &ParamPoint, x: &[f64]) -> Result<f64, ModelError> {
        self.check_params(params)?;
        let c = params.coords();
        let (mx, sx, my, sy) = (c[0], c[1], c[2], c[3]);
        let r = self.r;
        let q = 1.0 - r * r;
        let u = (x[0] - mx) / sx;
        let v = (x[1] - my) / sy;
        Ok(-LOG_TWO_PI
            - sx.ln()
            - sy.ln()
            - 0.5 * q.ln()
            - (u * u - 2.0 * r * u * v + v * v) / (2.0 * q))
    }

    fn score(&self, params: &ParamPoint, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.check_params(params)?;
        let c = params.coords();
        let (mx, sx, my, sy) = (c[0], c[1], c[2], c[3]);
        let r = self.r;
        let q = 1.0 - r * r;
        let u = (x[0] - mx) / sx;
        let v = (x[1] - my) / sy;
        Ok(vec![
            (u - r * v) / (sx * q),
            (-1.0 + (u * u - r * u * v) / q) / sx,
            (v - r * u) / (sy * q),
            (-1.0 + (v * v - r * u * v) / q) / sy,
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
        let c = params.coords();
        let (mx, sx, my, sy) = (c[0], c[1], c[2], c[3]);
        let r = self.r;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let unit = Normal::new(0.0, 1.0).expect("unit normal");
        Ok((0..count)
            .map(|_| {
                let zx: f64 = unit.sample(&mut rng);
                let zy: f64 = unit.sample(&mut rng);
                let x = mx + sx * zx;
                let y = my + sy * (r * zx + (1.0 - r * r).sqrt() * zy);
                vec![x, y]
            })
            .collect())
    }

    fn truncated_support(&self, params: &ParamPoint) -> Result<Vec<(f64, f64)>, ModelError> {
        self.check_params(params)?;
        let c = params.coords();
        Ok(vec![
            (c[0] - 12.0 * c[1], c[0] + 12.0 * c[1]),
            (c[2] - 12.0 * c[3], c[2] + 12.0 * c[3]),
        ])
    }

    fn typical_microstate(&self, params: &ParamPoint) -> Result<Vec<f64>, ModelError> {
        self.check_params(params)?;
        let c = params.coords();
        Ok(vec![c[0], c[2]])
    }

    fn closed_form_metric(&self) -> Option<MetricField> {
        let r = self.r;
        let eval = Self::metric_eval(r);
        let deriv = move |p: &ParamPoint, rho: usize| {
            let c = p.coords();
            let (sx, sy) = (c[1], c[3]);
            let q = 1.0 - r * r;
            let mut dg = DMatrix::zeros(4, 4);
            match rho {
                1 => {
                    dg[(0, 0)] = -2.0 / (sx * sx * sx * q);
                    dg[(1, 1)] = -2.0 * (2.0 - r * r) / (sx * sx * sx * q);
                    dg[(0, 2)] = r / (sx * sx * sy * q);
                    dg[(2, 0)] = dg[(0, 2)];
                    dg[(1, 3)] = r * r / (sx * sx * sy * q);
                    dg[(3, 1)] = dg[(1, 3)];
                }
                3 => {
                    dg[(2, 2)] = -2.0 / (sy * sy * sy * q);
                    dg[(3, 3)] = -2.0 * (2.0 - r * r) / (sy * sy * sy * q);
                    dg[(0, 2)] = r / (sx * sy * sy * q);
                    dg[(2, 0)] = dg[(0, 2)];
                    dg[(1, 3)] = r * r / (sx * sy * sy * q);
                    dg[(3, 1)] = dg[(1, 3)];
                }
                _ => {}
            }
            dg
        };
        // Every entry is k * sx^-p * sy^-q for constant k; second derivatives
        // follow the power laws entry by entry.
        let hess = move |p: &ParamPoint, nu: usize, rho: usize| {
            let c = p.coords();
            let (sx, sy) = (c[1], c[3]);
            let q = 1.0 - r * r;
            let (a, b, e) = (1.0 / q, -r / q, -(r * r) / q);
            let mut h = DMatrix::zeros(4, 4);
            match (nu.min(rho), nu.max(rho)) {
                (1, 1) => {
                    h[(0, 0)] = 6.0 * a / sx.powi(4);
                    h[(1, 1)] = 6.0 * (2.0 - r * r) / q / sx.powi(4);
                    h[(0, 2)] = 2.0 * b / (sx.powi(3) * sy);
                    h[(2, 0)] = h[(0, 2)];
                    h[(1, 3)] = 2.0 * e / (sx.powi(3) * sy);
                    h[(3, 1)] = h[(1, 3)];
                }
                (3, 3) => {
                    h[(2, 2)] = 6.0 * a / sy.powi(4);
                    h[(3, 3)] = 6.0 * (2.0 - r * r) / q / sy.powi(4);
                    h[(0, 2)] = 2.0 * b / (sx * sy.powi(3));
                    h[(2, 0)] = h[(0, 2)];
                    h[(1, 3)] = 2.0 * e / (sx * sy.powi(3));
                    h[(3, 1)] = h[(1, 3)];
                }
                (1, 3) => {
                    h[(0, 2)] = b / (sx * sx * sy * sy);
                    h[(2, 0)] = h[(0, 2)];
                    h[(1, 3)] = e / (sx * sx * sy * sy);
                    h[(3, 1)] = h[(1, 3)];
                }
                _ => {}
            }
            h
        };
        Some(
            MetricField::analytic(self.chart_domain(), "correlated-gaussian", eval, deriv)
                .with_hessian(hess),
        )
    }
}
