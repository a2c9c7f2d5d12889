//! Change of the random variable: monotone maps and pushforward densities.

use super::{DensityFamily, FactorBlock, ModelError, ParamPoint};
use crate::geometry::{Domain, MetricField};
use std::sync::Arc;

type ScalarFn = dyn Fn(f64) -> f64 + Send + Sync;

/// Strictly monotone, differentiable map of a one-dimensional random
/// variable, with explicit inverse and derivative.
#[derive(Clone)]
pub struct MonotoneMap {
    forward: Arc<ScalarFn>,
    inverse: Arc<ScalarFn>,
    derivative: Arc<ScalarFn>,
    domain: (f64, f64),
    codomain: (f64, f64),
}

impl std::fmt::Debug for MonotoneMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MonotoneMap")
            .field("domain", &self.domain)
            .field("codomain", &self.codomain)
            .finish()
    }
}

impl MonotoneMap {
    pub fn new(
        domain: (f64, f64),
        codomain: (f64, f64),
        forward: impl Fn(f64) -> f64 + Send + Sync + 'static,
        inverse: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            forward: Arc::new(forward),
            inverse: Arc::new(inverse),
            derivative: Arc::new(derivative),
            domain,
            codomain,
        }
    }

    pub fn identity() -> Self {
        Self::new(
            (f64::NEG_INFINITY, f64::INFINITY),
            (f64::NEG_INFINITY, f64::INFINITY),
            |x| x,
            |y| y,
            |_| 1.0,
        )
    }

    /// Power-law map `y = (x / zeta)^(1/n)` on the positive half-line.
    pub fn power_law(zeta: f64, n: f64) -> Result<Self, ModelError> {
        if !(zeta.is_finite() && zeta > 0.0 && n.is_finite() && n > 0.0) {
            return Err(ModelError::InvalidParameter(format!(
                "power-law map needs positive zeta and n, got ({zeta}, {n})"
            )));
        }
        Ok(Self::new(
            (0.0, f64::INFINITY),
            (0.0, f64::INFINITY),
            move |x| (x / zeta).powf(1.0 / n),
            move |y| zeta * y.powf(n),
            move |x| (x / zeta).powf(1.0 / n - 1.0) / (n * zeta),
        ))
    }

    pub fn forward(&self, x: f64) -> f64 {
        (self.forward)(x)
    }

    pub fn inverse(&self, y: f64) -> f64 {
        (self.inverse)(y)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        (self.derivative)(x)
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn codomain(&self) -> (f64, f64) {
        self.codomain
    }

    /// Round-trip and derivative checks on a grid spanning `(lo, hi)`.
    fn validate_on(&self, lo: f64, hi: f64) -> Result<(), ModelError> {
        let steps = 33;
        for k in 1..steps {
            let x = lo + (hi - lo) * k as f64 / steps as f64;
            if x <= self.domain.0 || x >= self.domain.1 {
                continue;
            }
            let y = self.forward(x);
            let back = self.inverse(y);
            let scale = x.abs().max(1.0);
            if !back.is_finite() || (back - x).abs() > 1e-10 * scale {
                return Err(ModelError::NonInvertibleMap(format!(
                    "inverse(forward({x})) = {back}"
                )));
            }
            let d = self.derivative(x);
            if !d.is_finite() || d == 0.0 {
                return Err(ModelError::NonInvertibleMap(format!(
                    "derivative vanishes at x = {x}"
                )));
            }
        }
        Ok(())
    }
}

/// Density of a mapped random variable `y = f(x)`:
/// `p_new(y) = p_old(f^-1(y)) / |f'(f^-1(y))|`.
///
/// The map does not involve the chart coordinates, so scores, sampling and
/// the Fisher metric transfer from the base family unchanged.
pub struct PushforwardFamily {
    base: Arc<dyn DensityFamily>,
    map: MonotoneMap,
}

/// Push a one-dimensional family through a monotone map, validating
/// invertibility over the family's truncated support at `params`.
pub fn pushforward(
    base: Arc<dyn DensityFamily>,
    params: &ParamPoint,
    map: MonotoneMap,
) -> Result<PushforwardFamily, ModelError> {
    if base.micro_dim() != 1 {
        return Err(ModelError::Incompatible(format!(
            "pushforward requires a one-dimensional microspace, family {} has {}",
            base.name(),
            base.micro_dim()
        )));
    }
    let (lo, hi) = base.truncated_support(params)?[0];
    map.validate_on(lo, hi)?;
    Ok(PushforwardFamily { base, map })
}

impl PushforwardFamily {
    pub fn map(&self) -> &MonotoneMap {
        &self.map
    }
}

impl DensityFamily for PushforwardFamily {
    fn name(&self) -> &'static str {
        "pushforward"
    }

    fn chart_dim(&self) -> usize {
        self.base.chart_dim()
    }

    fn micro_dim(&self) -> usize {
        1
    }

    fn base_point(&self) -> ParamPoint {
        self.base.base_point()
    }

    fn chart_domain(&self) -> Domain {
        self.base.chart_domain()
    }

    fn log_density(&self, params: &ParamPoint, x: &[f64]) -> Result<f64, ModelError> {
        let y = x[0];
        if y <= self.map.codomain().0 || y >= self.map.codomain().1 {
            self.base.check_params(params)?;
            return Ok(f64::NEG_INFINITY);
        }
        let back = self.map.inverse(y);
        if !back.is_finite() {
            self.base.check_params(params)?;
            return Ok(f64::NEG_INFINITY);
        }
        let jac = self.map.derivative(back).abs();
        Ok(self.base.log_density(params, &[back])? - jac.ln())
    }

    fn score(&self, params: &ParamPoint, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        // The Jacobian is parameter-independent, so the score is the base
        // score at the pulled-back microstate.
        let back = self.map.inverse(x[0]);
        if !back.is_finite() {
            return Err(ModelError::OutOfSupport(x.to_vec()));
        }
        self.base.score(params, &[back])
    }

    fn sample(
        &self,
        params: &ParamPoint,
        seed: u64,
        count: usize,
    ) -> Result<Vec<Vec<f64>>, ModelError> {
        Ok(self
            .base
            .sample(params, seed, count)?
            .into_iter()
            .map(|x| vec![self.map.forward(x[0])])
            .collect())
    }

    fn truncated_support(&self, params: &ParamPoint) -> Result<Vec<(f64, f64)>, ModelError> {
        let (lo, hi) = self.base.truncated_support(params)?[0];
        let (a, b) = (self.map.forward(lo), self.map.forward(hi));
        Ok(vec![if a <= b { (a, b) } else { (b, a) }])
    }

    fn factor_blocks(&self) -> Vec<FactorBlock> {
        self.base.factor_blocks()
    }

    fn typical_microstate(&self, params: &ParamPoint) -> Result<Vec<f64>, ModelError> {
        let base_typical = self.base.typical_microstate(params)?;
        Ok(vec![self.map.forward(base_typical[0])])
    }

    fn closed_form_metric(&self) -> Option<MetricField> {
        // Fisher metric is invariant under transformations of the random
        // variable.
        self.base.closed_form_metric()
    }
}
