//! Metric fields over chart domains and the Fisher metric pipelines.
//!
//! A [`MetricField`] couples a chart domain with an evaluator producing the
//! symmetric positive-definite metric matrix at a point, plus an optional
//! exact derivative callback that tightens every finite-difference consumer
//! downstream (Christoffel symbols, curvature, geodesics).

mod curvature;

pub use curvature::{
    christoffel, christoffel_with_grad, curvature, curvature_report, killing_residual,
    riemann_from_christoffel, sectional_curvature, sectional_from_bundle, ChristoffelValue,
    CurvatureBundle, CurvatureReport, FdPolicy, SectionalSample, Tensor3, Tensor4,
};

use crate::models::{DensityFamily, ModelError, ParamPoint};
use crate::quadrature::{integrate, integrate2, QuadError, QuadSpec};
use nalgebra::{Cholesky, DMatrix};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("point outside the metric domain: {0}")]
    OutOfDomain(String),
    #[error("point within {margin:e} of the domain boundary (coordinate {coord} = {value})")]
    BoundaryTooClose {
        coord: usize,
        value: f64,
        margin: f64,
    },
    #[error("finite-difference stencil leaves the domain at coordinate {coord}")]
    StencilOutsideDomain { coord: usize },
    #[error("singular metric: {0}")]
    SingularMetric(String),
    #[error("metric matrix failed validation: {0}")]
    InvalidMetric(String),
    #[error("singular reparametrization Jacobian (det = {det:e})")]
    SingularJacobian { det: f64 },
    #[error("degenerate tangent plane (denominator {denominator:e})")]
    DegeneratePlane { denominator: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// Open box domain for chart coordinates; infinite bounds admitted.
#[derive(Debug, Clone)]
pub struct Domain {
    bounds: Vec<(f64, f64)>,
}

impl Domain {
    pub fn new(bounds: Vec<(f64, f64)>) -> Self {
        Self { bounds }
    }

    pub fn unbounded(dim: usize) -> Self {
        Self {
            bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    /// Strict interior test.
    pub fn contains(&self, coords: &[f64]) -> bool {
        coords.len() == self.bounds.len()
            && coords
                .iter()
                .zip(&self.bounds)
                .all(|(&c, &(lo, hi))| c > lo && c < hi)
    }

    /// Distance to the nearest finite boundary face; infinite when none.
    pub fn boundary_distance(&self, coords: &[f64]) -> f64 {
        coords
            .iter()
            .zip(&self.bounds)
            .map(|(&c, &(lo, hi))| {
                let d_lo = if lo.is_finite() {
                    c - lo
                } else {
                    f64::INFINITY
                };
                let d_hi = if hi.is_finite() {
                    hi - c
                } else {
                    f64::INFINITY
                };
                d_lo.min(d_hi)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Where a metric field came from; carried for reporting only.
#[derive(Debug, Clone)]
pub enum Provenance {
    Analytic { family: String },
    Quadrature { family: String, rel_tol: f64 },
    Pullback { base: Box<Provenance> },
    Explicit { label: String },
}

/// Validated metric matrix at a chart point.
#[derive(Debug, Clone)]
pub struct MetricValue {
    pub point: ParamPoint,
    pub matrix: DMatrix<f64>,
}

impl MetricValue {
    /// Validates symmetry (1e-12 relative to the largest entry) and positive
    /// definiteness via a Cholesky factorization.
    pub fn new(point: ParamPoint, matrix: DMatrix<f64>) -> Result<Self, GeometryError> {
        let n = matrix.nrows();
        if n != matrix.ncols() || n != point.chart_dim() {
            return Err(GeometryError::InvalidMetric(format!(
                "shape {}x{} does not match chart dimension {}",
                matrix.nrows(),
                matrix.ncols(),
                point.chart_dim()
            )));
        }
        let scale = matrix.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        for i in 0..n {
            for j in (i + 1)..n {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > 1e-12 * scale {
                    return Err(GeometryError::InvalidMetric(format!(
                        "asymmetry at ({i},{j}): {} vs {}",
                        matrix[(i, j)],
                        matrix[(j, i)]
                    )));
                }
            }
        }
        if Cholesky::new(matrix.clone()).is_none() {
            return Err(GeometryError::InvalidMetric(
                "matrix is not positive definite".into(),
            ));
        }
        Ok(Self { point, matrix })
    }

    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        let n = self.matrix.nrows();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += self.matrix[(i, j)] * a[i] * b[j];
            }
        }
        acc
    }

    pub fn norm(&self, v: &[f64]) -> f64 {
        self.inner(v, v).max(0.0).sqrt()
    }
}

type Evaluator = dyn Fn(&ParamPoint) -> Result<DMatrix<f64>, GeometryError> + Send + Sync;
type DerivativeFn = dyn Fn(&ParamPoint, usize) -> DMatrix<f64> + Send + Sync;
type HessianFn = dyn Fn(&ParamPoint, usize, usize) -> DMatrix<f64> + Send + Sync;

/// A metric tensor field over a chart domain.
#[derive(Clone)]
pub struct MetricField {
    chart_dim: usize,
    domain: Domain,
    provenance: Provenance,
    evaluator: Arc<Evaluator>,
    derivative: Option<Arc<DerivativeFn>>,
    second_derivative: Option<Arc<HessianFn>>,
}

impl std::fmt::Debug for MetricField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MetricField")
            .field("chart_dim", &self.chart_dim)
            .field("provenance", &self.provenance)
            .finish()
    }
}

impl MetricField {
    /// Closed-form field with exact coordinate derivatives.
    pub fn analytic(
        domain: Domain,
        family: &str,
        eval: impl Fn(&ParamPoint) -> DMatrix<f64> + Send + Sync + 'static,
        deriv: impl Fn(&ParamPoint, usize) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            chart_dim: domain.dim(),
            domain,
            provenance: Provenance::Analytic {
                family: family.to_string(),
            },
            evaluator: Arc::new(move |p| Ok(eval(p))),
            derivative: Some(Arc::new(deriv)),
            second_derivative: None,
        }
    }

    /// Attach exact second derivatives `d_nu d_rho g`; lets the curvature
    /// stack skip nested finite differences entirely, which matters close to
    /// domain boundaries where stencils would leave the chart.
    pub fn with_hessian(
        mut self,
        hess: impl Fn(&ParamPoint, usize, usize) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        self.second_derivative = Some(Arc::new(hess));
        self
    }

    /// Field defined by an explicit formula; derivatives fall back to
    /// finite differences.
    pub fn explicit(
        domain: Domain,
        label: &str,
        eval: impl Fn(&ParamPoint) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            chart_dim: domain.dim(),
            domain,
            provenance: Provenance::Explicit {
                label: label.to_string(),
            },
            evaluator: Arc::new(move |p| Ok(eval(p))),
            derivative: None,
            second_derivative: None,
        }
    }

    /// Fisher metric evaluated by quadrature at every requested point.
    pub fn from_quadrature(family: Arc<dyn DensityFamily>, spec: QuadSpec) -> Self {
        let domain = family.chart_domain();
        let name = family.name().to_string();
        let rel_tol = spec.rel_tol;
        let evaluator = {
            let family = Arc::clone(&family);
            move |p: &ParamPoint| fisher_matrix(family.as_ref(), p, &spec)
        };
        Self {
            chart_dim: domain.dim(),
            domain,
            provenance: Provenance::Quadrature {
                family: name,
                rel_tol,
            },
            evaluator: Arc::new(evaluator),
            derivative: None,
            second_derivative: None,
        }
    }

    pub fn chart_dim(&self) -> usize {
        self.chart_dim
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn has_exact_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    pub fn has_exact_hessian(&self) -> bool {
        self.second_derivative.is_some()
    }

    /// Exact second derivative `d_nu d_rho g` when the field carries one.
    pub fn second_partial(
        &self,
        point: &ParamPoint,
        nu: usize,
        rho: usize,
    ) -> Option<DMatrix<f64>> {
        self.second_derivative.as_ref().map(|h| h(point, nu, rho))
    }

    fn check_point(&self, point: &ParamPoint) -> Result<(), GeometryError> {
        if !self.domain.contains(point.coords()) {
            return Err(GeometryError::OutOfDomain(format!(
                "{:?} outside domain {:?}",
                point.coords(),
                self.domain.bounds
            )));
        }
        Ok(())
    }

    /// Raw metric matrix at an in-domain point.
    pub fn matrix(&self, point: &ParamPoint) -> Result<DMatrix<f64>, GeometryError> {
        self.check_point(point)?;
        (self.evaluator)(point)
    }

    /// Validated metric value (symmetry and positive definiteness).
    pub fn value(&self, point: &ParamPoint) -> Result<MetricValue, GeometryError> {
        let m = self.matrix(point)?;
        MetricValue::new(point.clone(), m)
    }

    /// Partial derivative of the metric along coordinate `rho`, exact when
    /// the field carries a derivative callback, otherwise a central
    /// difference with the policy step.
    pub fn partial(
        &self,
        point: &ParamPoint,
        rho: usize,
        policy: &FdPolicy,
    ) -> Result<DMatrix<f64>, GeometryError> {
        self.check_point(point)?;
        if let Some(deriv) = &self.derivative {
            return Ok(deriv(point, rho));
        }
        let h = policy.step(point.coords()[rho]);
        let up = point.with_coord(rho, point.coords()[rho] + h);
        let dn = point.with_coord(rho, point.coords()[rho] - h);
        if !self.domain.contains(up.coords()) || !self.domain.contains(dn.coords()) {
            return Err(GeometryError::StencilOutsideDomain { coord: rho });
        }
        let gu = (self.evaluator)(&up)?;
        let gd = (self.evaluator)(&dn)?;
        Ok((gu - gd) / (2.0 * h))
    }

    /// Square root of the metric determinant (the volume element density).
    pub fn sqrt_det(&self, point: &ParamPoint) -> Result<f64, GeometryError> {
        let g = self.matrix(point)?;
        let chol = Cholesky::new(g)
            .ok_or_else(|| GeometryError::SingularMetric(format!("at {:?}", point.coords())))?;
        let mut s = 1.0;
        let l = chol.l();
        for i in 0..l.nrows() {
            s *= l[(i, i)];
        }
        Ok(s)
    }

    /// Inverse metric via symmetric positive-definite factorization.
    pub fn inverse_at(&self, point: &ParamPoint) -> Result<DMatrix<f64>, GeometryError> {
        let g = self.matrix(point)?;
        Cholesky::new(g)
            .map(|c| c.inverse())
            .ok_or_else(|| GeometryError::SingularMetric(format!("at {:?}", point.coords())))
    }
}

/// Fisher metric at a point, computed by adaptive quadrature of the score
/// covariance over the family's truncated support.
pub fn fisher_metric(
    family: &dyn DensityFamily,
    params: &ParamPoint,
    spec: &QuadSpec,
) -> Result<MetricValue, GeometryError> {
    let matrix = fisher_matrix(family, params, spec)?;
    MetricValue::new(params.clone(), matrix)
}

fn fisher_matrix(
    family: &dyn DensityFamily,
    params: &ParamPoint,
    spec: &QuadSpec,
) -> Result<DMatrix<f64>, GeometryError> {
    family.check_params(params)?;
    let n = family.chart_dim();
    let typical = family.typical_microstate(params)?;
    let bounds = family.truncated_support(params)?;
    let mut g = DMatrix::zeros(n, n);

    // Pure-relative tolerance: block factors can carry tiny constant
    // prefactors from the frozen coordinates, which cancel on division.
    let relative_only = QuadSpec {
        rel_tol: spec.rel_tol,
        abs_tol: f64::MIN_POSITIVE,
        max_intervals: spec.max_intervals,
    };

    for block in family.factor_blocks() {
        let chart: Vec<usize> = block.chart.clone().collect();
        if chart.is_empty() {
            continue;
        }
        match block.micro.len() {
            1 => {
                let d = block.micro.start;
                let (lo, hi) = bounds[d];
                let weight = |x: f64| -> f64 {
                    let mut micro = typical.clone();
                    micro[d] = x;
                    match family.log_density(params, &micro) {
                        Ok(lp) if lp.is_finite() => lp.exp(),
                        _ => 0.0,
                    }
                };
                let moment = |x: f64, i: usize, j: usize| -> f64 {
                    let w = weight(x);
                    if w == 0.0 {
                        return 0.0;
                    }
                    let mut micro = typical.clone();
                    micro[d] = x;
                    match family.score(params, &micro) {
                        Ok(s) => w * s[i] * s[j],
                        Err(_) => 0.0,
                    }
                };
                let z = integrate(weight, lo, hi, &relative_only)?.value;
                fill_block(
                    &mut g,
                    &chart,
                    z,
                    spec,
                    &relative_only,
                    |i, j, entry_spec| {
                        integrate(|x| moment(x, i, j), lo, hi, entry_spec).map(|r| r.value)
                    },
                )?;
            }
            2 => {
                let (d0, d1) = (block.micro.start, block.micro.start + 1);
                let (lo0, hi0) = bounds[d0];
                let (lo1, hi1) = bounds[d1];
                let weight = |x: f64, y: f64| -> f64 {
                    let mut micro = typical.clone();
                    micro[d0] = x;
                    micro[d1] = y;
                    match family.log_density(params, &micro) {
                        Ok(lp) if lp.is_finite() => lp.exp(),
                        _ => 0.0,
                    }
                };
                let moment = |x: f64, y: f64, i: usize, j: usize| -> f64 {
                    let w = weight(x, y);
                    if w == 0.0 {
                        return 0.0;
                    }
                    let mut micro = typical.clone();
                    micro[d0] = x;
                    micro[d1] = y;
                    match family.score(params, &micro) {
                        Ok(s) => w * s[i] * s[j],
                        Err(_) => 0.0,
                    }
                };
                let z = integrate2(weight, lo0, hi0, lo1, hi1, &relative_only)?.value;
                fill_block(
                    &mut g,
                    &chart,
                    z,
                    spec,
                    &relative_only,
                    |i, j, entry_spec| {
                        integrate2(|x, y| moment(x, y, i, j), lo0, hi0, lo1, hi1, entry_spec)
                            .map(|r| r.value)
                    },
                )?;
            }
            len => {
                return Err(GeometryError::Unsupported(format!(
                    "factor block with {len} microstate slots"
                )))
            }
        }
    }
    Ok(g)
}

/// Fill the symmetric block entries: diagonals first at pure-relative
/// tolerance, then off-diagonals with an absolute floor scaled by the
/// Cauchy–Schwarz bound sqrt(g_ii g_jj) so exact zeros converge.
fn fill_block(
    g: &mut DMatrix<f64>,
    chart: &[usize],
    z: f64,
    spec: &QuadSpec,
    relative_only: &QuadSpec,
    mut entry: impl FnMut(usize, usize, &QuadSpec) -> Result<f64, QuadError>,
) -> Result<(), GeometryError> {
    if !(z.is_finite() && z > 0.0) {
        return Err(GeometryError::SingularMetric(format!(
            "factor normalization {z} is not positive"
        )));
    }
    for &i in chart {
        let raw = entry(i, i, relative_only)?;
        g[(i, i)] = raw / z;
    }
    for (a, &i) in chart.iter().enumerate() {
        for &j in chart.iter().skip(a + 1) {
            let floor = spec.rel_tol * (g[(i, i)] * g[(j, j)]).sqrt() * z;
            let entry_spec = QuadSpec {
                rel_tol: spec.rel_tol,
                abs_tol: floor.max(f64::MIN_POSITIVE),
                max_intervals: spec.max_intervals,
            };
            let raw = entry(i, j, &entry_spec)?;
            g[(i, j)] = raw / z;
            g[(j, i)] = g[(i, j)];
        }
    }
    Ok(())
}

/// Closed-form Fisher metric field for the built-in families.
pub fn analytic_metric(family: &dyn DensityFamily) -> Result<MetricField, GeometryError> {
    family.closed_form_metric().ok_or_else(|| {
        GeometryError::Unsupported(format!(
            "family {} has no closed-form Fisher metric",
            family.name()
        ))
    })
}

type ChartMap = dyn Fn(&ParamPoint) -> ParamPoint + Send + Sync;
type JacobianFn = dyn Fn(&ParamPoint) -> DMatrix<f64> + Send + Sync;

/// Invertible coordinate change `new chart -> old chart` with its Jacobian
/// `d(old)/d(new)`.
#[derive(Clone)]
pub struct Reparametrization {
    forward: Arc<ChartMap>,
    jacobian: Arc<JacobianFn>,
    domain: Domain,
}

impl Reparametrization {
    pub fn new(
        domain: Domain,
        forward: impl Fn(&ParamPoint) -> ParamPoint + Send + Sync + 'static,
        jacobian: impl Fn(&ParamPoint) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            forward: Arc::new(forward),
            jacobian: Arc::new(jacobian),
            domain,
        }
    }

    pub fn identity(domain: Domain) -> Self {
        let dim = domain.dim();
        Self::new(
            domain,
            |p: &ParamPoint| p.clone(),
            move |_| DMatrix::identity(dim, dim),
        )
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn map(&self, p: &ParamPoint) -> ParamPoint {
        (self.forward)(p)
    }

    pub fn jacobian_at(&self, p: &ParamPoint) -> DMatrix<f64> {
        (self.jacobian)(p)
    }
}

/// Pull a metric field back along a reparametrization of the chart.
pub fn pullback_metric(
    base: &MetricField,
    reparam: &Reparametrization,
) -> Result<MetricField, GeometryError> {
    if reparam.domain().dim() != base.chart_dim() {
        return Err(GeometryError::Unsupported(format!(
            "reparametrization dimension {} does not match chart dimension {}",
            reparam.domain().dim(),
            base.chart_dim()
        )));
    }
    let base_field = base.clone();
    let reparam = reparam.clone();
    let domain = reparam.domain().clone();
    let provenance = Provenance::Pullback {
        base: Box::new(base.provenance().clone()),
    };
    let evaluator = move |p: &ParamPoint| -> Result<DMatrix<f64>, GeometryError> {
        let jac = reparam.jacobian_at(p);
        let det = jac.clone().lu().determinant();
        if !det.is_finite() || det.abs() < 1e-300 {
            return Err(GeometryError::SingularJacobian { det });
        }
        let mapped = reparam.map(p);
        let g = base_field.matrix(&mapped)?;
        Ok(jac.transpose() * g * jac)
    };
    Ok(MetricField {
        chart_dim: domain.dim(),
        domain,
        provenance,
        evaluator: Arc::new(evaluator),
        derivative: None,
        second_derivative: None,
    })
}
