//! Composite spacing-plus-bath families: an integrable model coupling two
//! exponential factors and a chaotic model coupling a Wigner–Dyson spacing
//! factor to a Gaussian field factor.

use super::{require_positive, DensityFamily, FactorBlock, ModelError, ParamPoint};
use crate::geometry::{Domain, MetricField};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::PI;

const LOG_TWO_PI: f64 = 1.837_877_066_409_345_6;

/// Poisson level spacing times an exponential field bath; chart `(mu_A, mu_B)`.
#[derive(Debug, Clone)]
pub struct IntegrableComposite {
    pub mu_a: f64,
    pub mu_b: f64,
}

impl IntegrableComposite {
    pub fn new(mu_a: f64, mu_b: f64) -> Result<Self, ModelError> {
        require_positive(mu_a, "mu_A")?;
        require_positive(mu_b, "mu_B")?;
        Ok(Self { mu_a, mu_b })
    }
}

impl DensityFamily for IntegrableComposite {
    fn name(&self) -> &'static str {
        "integrable-composite"
    }

    fn chart_dim(&self) -> usize {
        2
    }

    fn micro_dim(&self) -> usize {
        2
    }

    fn base_point(&self) -> ParamPoint {
        ParamPoint::new(vec![self.mu_a, self.mu_b]).expect("validated")
    }

    fn chart_domain(&self) -> Domain {
        Domain::new(vec![(0.0, f64::INFINITY), (0.0, f64::INFINITY)])
    }

    fn log_density(&self, params: &ParamPoint, x: &[f64]) -> Result<f64, ModelError> {
        self.check_params(params)?;
        let c = params.coords();
        if x[0] < 0.0 || x[1] < 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(-c[0].ln() - x[0] / c[0] - c[1].ln() - x[1] / c[1])
    }

    fn score(&self, params: &ParamPoint, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.check_params(params)?;
        let c = params.coords();
        Ok(vec![
            -1.0 / c[0] + x[0] / (c[0] * c[0]),
            -1.0 / c[1] + x[1] / (c[1] * c[1]),
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
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..count)
            .map(|_| {
                let ua: f64 = rng.gen();
                let ub: f64 = rng.gen();
                vec![-c[0] * (1.0 - ua).ln(), -c[1] * (1.0 - ub).ln()]
            })
            .collect())
    }

    fn truncated_support(&self, params: &ParamPoint) -> Result<Vec<(f64, f64)>, ModelError> {
        self.check_params(params)?;
        let c = params.coords();
        Ok(vec![(0.0, 40.0 * c[0]), (0.0, 40.0 * c[1])])
    }

    fn factor_blocks(&self) -> Vec<FactorBlock> {
        vec![
            FactorBlock {
                micro: 0..1,
                chart: 0..1,
            },
            FactorBlock {
                micro: 1..2,
                chart: 1..2,
            },
        ]
    }

    fn typical_microstate(&self, params: &ParamPoint) -> Result<Vec<f64>, ModelError> {
        self.check_params(params)?;
        Ok(params.coords().to_vec())
    }

    fn closed_form_metric(&self) -> Option<MetricField> {
        let eval = |p: &ParamPoint| {
            let c = p.coords();
            DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
                1.0 / (c[0] * c[0]),
                1.0 / (c[1] * c[1]),
            ]))
        };
        let deriv = |p: &ParamPoint, rho: usize| {
            let c = p.coords();
            let mut dg = DMatrix::zeros(2, 2);
            dg[(rho, rho)] = -2.0 / (c[rho] * c[rho] * c[rho]);
            dg
        };
        let hess = |p: &ParamPoint, nu: usize, rho: usize| {
            let c = p.coords();
            let mut h = DMatrix::zeros(2, 2);
            if nu == rho {
                h[(nu, nu)] = 6.0 / c[nu].powi(4);
            }
            h
        };
        Some(
            MetricField::analytic(self.chart_domain(), "integrable-composite", eval, deriv)
                .with_hessian(hess),
        )
    }
}

/// Wigner–Dyson level spacing times a Gaussian field bath; chart
/// `(mu_A', mu_B', sigma_B')`.
#[derive(Debug, Clone)]
pub struct ChaoticComposite {
    pub mu_a_p: f64,
    pub mu_b_p: f64,
    pub sigma_b_p: f64,
}

impl ChaoticComposite {
    pub fn new(mu_a_p: f64, mu_b_p: f64, sigma_b_p: f64) -> Result<Self, ModelError> {
        require_positive(mu_a_p, "mu_A_p")?;
        require_positive(sigma_b_p, "sigma_B_p")?;
        if !mu_b_p.is_finite() {
            return Err(ModelError::InvalidParameter("non-finite mu_B_p".into()));
        }
        Ok(Self {
            mu_a_p,
            mu_b_p,
            sigma_b_p,
        })
    }
}

impl DensityFamily for ChaoticComposite {
    fn name(&self) -> &'static str {
        "chaotic-composite"
    }

    fn chart_dim(&self) -> usize {
        3
    }

    fn micro_dim(&self) -> usize {
        2
    }

    fn base_point(&self) -> ParamPoint {
        ParamPoint::new(vec![self.mu_a_p, self.mu_b_p, self.sigma_b_p]).expect("validated")
    }

    fn chart_domain(&self) -> Domain {
        Domain::new(vec![
            (0.0, f64::INFINITY),
            (f64::NEG_INFINITY, f64::INFINITY),
            (0.0, f64::INFINITY),
        ])
    }

    fn log_density(&self, params: &ParamPoint, x: &[f64]) -> Result<f64, ModelError> {
        self.check_params(params)?;
        let c = params.coords();
        let (mu_a, mu_b, sig_b) = (c[0], c[1], c[2]);
        if x[0] <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        let zy = (x[1] - mu_b) / sig_b;
        let wd =
            (PI / 2.0).ln() + x[0].ln() - 2.0 * mu_a.ln() - PI * x[0] * x[0] / (4.0 * mu_a * mu_a);
        let gauss = -0.5 * LOG_TWO_PI - sig_b.ln() - 0.5 * zy * zy;
        Ok(wd + gauss)
    }

    fn score(&self, params: &ParamPoint, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.check_params(params)?;
        let c = params.coords();
        let (mu_a, mu_b, sig_b) = (c[0], c[1], c[2]);
        let d = x[1] - mu_b;
        Ok(vec![
            -2.0 / mu_a + PI * x[0] * x[0] / (2.0 * mu_a * mu_a * mu_a),
            d / (sig_b * sig_b),
            (d * d - sig_b * sig_b) / (sig_b * sig_b * sig_b),
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
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bath = Normal::new(c[1], c[2]).expect("positive sigma");
        Ok((0..count)
            .map(|_| {
                let u: f64 = rng.gen();
                let xa = 2.0 * c[0] * (-(1.0 - u).ln() / PI).sqrt();
                vec![xa, bath.sample(&mut rng)]
            })
            .collect())
    }

    fn truncated_support(&self, params: &ParamPoint) -> Result<Vec<(f64, f64)>, ModelError> {
        self.check_params(params)?;
        let c = params.coords();
        Ok(vec![
            (0.0, 40.0 * c[0]),
            (c[1] - 12.0 * c[2], c[1] + 12.0 * c[2]),
        ])
    }

    fn factor_blocks(&self) -> Vec<FactorBlock> {
        vec![
            FactorBlock {
                micro: 0..1,
                chart: 0..1,
            },
            FactorBlock {
                micro: 1..2,
                chart: 1..3,
            },
        ]
    }

    fn typical_microstate(&self, params: &ParamPoint) -> Result<Vec<f64>, ModelError> {
        self.check_params(params)?;
        let c = params.coords();
        Ok(vec![c[0], c[1]])
    }

    fn closed_form_metric(&self) -> Option<MetricField> {
        let eval = |p: &ParamPoint| {
            let c = p.coords();
            DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
                4.0 / (c[0] * c[0]),
                1.0 / (c[2] * c[2]),
                2.0 / (c[2] * c[2]),
            ]))
        };
        let deriv = |p: &ParamPoint, rho: usize| {
            let c = p.coords();
            let mut dg = DMatrix::zeros(3, 3);
            match rho {
                0 => dg[(0, 0)] = -8.0 / (c[0] * c[0] * c[0]),
                2 => {
                    dg[(1, 1)] = -2.0 / (c[2] * c[2] * c[2]);
                    dg[(2, 2)] = -4.0 / (c[2] * c[2] * c[2]);
                }
                _ => {}
            }
            dg
        };
        let hess = |p: &ParamPoint, nu: usize, rho: usize| {
            let c = p.coords();
            let mut h = DMatrix::zeros(3, 3);
            if nu == rho {
                match nu {
                    0 => h[(0, 0)] = 24.0 / c[0].powi(4),
                    2 => {
                        h[(1, 1)] = 6.0 / c[2].powi(4);
                        h[(2, 2)] = 12.0 / c[2].powi(4);
                    }
                    _ => {}
                }
            }
            h
        };
        Some(
            MetricField::analytic(self.chart_domain(), "chaotic-composite", eval, deriv)
                .with_hessian(hess),
        )
    }
}
