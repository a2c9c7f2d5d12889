//! Geodesic flow and Jacobi-field integration on metric fields.
//!
//! The integrator is an adaptive Dormand–Prince 5(4) pair with dense output
//! by cubic Hermite interpolation on accepted steps. Geodesics integrate
//! `d2Theta + Gamma(dTheta, dTheta) = 0`; the Jacobi equation integrates the
//! full linearized deviation system with the explicit covariant-derivative
//! expansion (Gamma, Gamma-derivative and Riemann terms), so exponentially
//! decaying pieces are kept and asymptotics are extracted by fitting.

use crate::geometry::{
    christoffel, christoffel_with_grad, riemann_from_christoffel, FdPolicy, GeometryError,
    MetricField,
};
use crate::models::{ModelError, ParamPoint};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("invalid initial state: {0}")]
    InvalidInitial(String),
    #[error("trajectory exits the metric domain; last valid tau = {last_tau}")]
    DomainExit { last_tau: f64 },
    #[error("step size underflow at tau = {tau}; system too stiff at this tolerance")]
    StepUnderflow { tau: f64 },
    #[error("tau = {tau} outside the trajectory range [{lo}, {hi}]")]
    OutsideTrajectory { tau: f64, lo: f64, hi: f64 },
    #[error("growth fit needs at least {need} tail points, found {have}")]
    InsufficientTail { have: usize, need: usize },
    #[error("intensity series has no positive entries in the tail window")]
    NonPositiveSeries,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Absolute and relative local error tolerances for the integrator.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            abs: 1e-9,
            rel: 1e-9,
        }
    }
}

/// Point and velocity on a geodesic at affine parameter `tau`.
#[derive(Debug, Clone)]
pub struct GeodesicState {
    pub tau: f64,
    pub point: ParamPoint,
    pub velocity: Vec<f64>,
}

impl GeodesicState {
    pub fn new(tau: f64, point: ParamPoint, velocity: Vec<f64>) -> Result<Self, DynamicsError> {
        if velocity.len() != point.chart_dim() {
            return Err(DynamicsError::InvalidInitial(format!(
                "velocity dimension {} does not match chart dimension {}",
                velocity.len(),
                point.chart_dim()
            )));
        }
        if !tau.is_finite() || velocity.iter().any(|v| !v.is_finite()) {
            return Err(DynamicsError::InvalidInitial(
                "non-finite components".into(),
            ));
        }
        Ok(Self {
            tau,
            point,
            velocity,
        })
    }
}

/// Separation vector between neighboring geodesics and its tau-derivative.
#[derive(Debug, Clone)]
pub struct JacobiField {
    pub j: Vec<f64>,
    pub djdtau: Vec<f64>,
}

#[derive(Debug, Clone)]
struct Node {
    tau: f64,
    y: Vec<f64>,
    dy: Vec<f64>,
}

/// Integrated solution: accepted steps with dense in-between evaluation.
#[derive(Debug, Clone)]
pub struct Trajectory {
    chart_dim: usize,
    has_jacobi: bool,
    nodes: Vec<Node>,
    max_speed_drift: f64,
}

impl Trajectory {
    pub fn chart_dim(&self) -> usize {
        self.chart_dim
    }

    pub fn has_jacobi(&self) -> bool {
        self.has_jacobi
    }

    pub fn start_tau(&self) -> f64 {
        self.nodes.first().map(|n| n.tau).unwrap_or(f64::NAN)
    }

    pub fn end_tau(&self) -> f64 {
        self.nodes.last().map(|n| n.tau).unwrap_or(f64::NAN)
    }

    /// Strictly increasing grid of accepted step times.
    pub fn grid(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.tau).collect()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Largest relative drift of g(v, v) over the accepted nodes, filled in
    /// by the geodesic integrators.
    pub fn max_speed_drift(&self) -> f64 {
        self.max_speed_drift
    }

    fn interpolate(&self, tau: f64) -> Result<Vec<f64>, DynamicsError> {
        let (lo, hi) = (self.start_tau(), self.end_tau());
        if !(tau >= lo - 1e-12 && tau <= hi + 1e-12) {
            return Err(DynamicsError::OutsideTrajectory { tau, lo, hi });
        }
        let tau = tau.clamp(lo, hi);
        let idx = self
            .nodes
            .partition_point(|n| n.tau <= tau)
            .min(self.nodes.len() - 1)
            .max(1);
        let (a, b) = (&self.nodes[idx - 1], &self.nodes[idx]);
        let h = b.tau - a.tau;
        if h <= 0.0 {
            return Ok(a.y.clone());
        }
        let s = (tau - a.tau) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        Ok((0..a.y.len())
            .map(|i| h00 * a.y[i] + h10 * h * a.dy[i] + h01 * b.y[i] + h11 * h * b.dy[i])
            .collect())
    }

    /// Geodesic state at `tau` by dense interpolation.
    pub fn state_at(&self, tau: f64) -> Result<GeodesicState, DynamicsError> {
        let n = self.chart_dim;
        let y = self.interpolate(tau)?;
        let point = ParamPoint::new(y[..n].to_vec())
            .map_err(|e| DynamicsError::InvalidInitial(e.to_string()))?;
        GeodesicState::new(tau, point, y[n..2 * n].to_vec())
    }

    /// Jacobi field at `tau`; present only on JLC trajectories.
    pub fn jacobi_at(&self, tau: f64) -> Result<JacobiField, DynamicsError> {
        if !self.has_jacobi {
            return Err(DynamicsError::Unsupported(
                "trajectory carries no Jacobi block".into(),
            ));
        }
        let n = self.chart_dim;
        let y = self.interpolate(tau)?;
        Ok(JacobiField {
            j: y[2 * n..3 * n].to_vec(),
            djdtau: y[3 * n..4 * n].to_vec(),
        })
    }

    /// CSV dump: tau, coordinates, velocities, then Jacobi components and
    /// the metric intensity when present. 17 significant digits.
    pub fn to_csv(&self, field: Option<&MetricField>) -> Result<String, DynamicsError> {
        let n = self.chart_dim;
        let mut out = String::new();
        out.push_str("tau");
        for i in 0..n {
            out.push_str(&format!(",theta_{i}"));
        }
        for i in 0..n {
            out.push_str(&format!(",dtheta_{i}"));
        }
        if self.has_jacobi {
            for i in 0..n {
                out.push_str(&format!(",j_{i}"));
            }
            out.push_str(",j_norm");
        }
        out.push('\n');
        for node in &self.nodes {
            out.push_str(&format!("{:.16e}", node.tau));
            for v in &node.y[..2 * n] {
                out.push_str(&format!(",{v:.16e}"));
            }
            if self.has_jacobi {
                for v in &node.y[2 * n..3 * n] {
                    out.push_str(&format!(",{v:.16e}"));
                }
                let point = ParamPoint::new(node.y[..n].to_vec())
                    .map_err(|e| DynamicsError::InvalidInitial(e.to_string()))?;
                let j = JacobiField {
                    j: node.y[2 * n..3 * n].to_vec(),
                    djdtau: node.y[3 * n..4 * n].to_vec(),
                };
                let norm = match field {
                    Some(f) => jacobi_intensity(f, &point, &j)?,
                    None => f64::NAN,
                };
                out.push_str(&format!(",{norm:.16e}"));
            }
            out.push('\n');
        }
        Ok(out)
    }
}

// Dormand–Prince 5(4) tableau.
const DP_C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [&[f64]; 6] = [
    &[1.0 / 5.0],
    &[3.0 / 40.0, 9.0 / 40.0],
    &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
    &[
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
    ],
    &[
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
    ],
    &[
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

enum RhsOutcome {
    Ok,
    OutOfDomain,
}

/// Adaptive Dormand–Prince integration from `t0` to `t_end`, recording every
/// accepted step. The right-hand side may reject a state as out-of-domain,
/// which shrinks the step and eventually reports a `DomainExit`.
fn integrate_adaptive(
    mut rhs: impl FnMut(f64, &[f64], &mut [f64]) -> Result<RhsOutcome, DynamicsError>,
    t0: f64,
    y0: Vec<f64>,
    t_end: f64,
    tol: &Tolerances,
) -> Result<Vec<Node>, DynamicsError> {
    let dim = y0.len();
    let span = t_end - t0;
    if !(span > 0.0) {
        return Err(DynamicsError::InvalidInitial(format!(
            "tau_end {t_end} must exceed initial tau {t0}"
        )));
    }

    let mut f0 = vec![0.0; dim];
    match rhs(t0, &y0, &mut f0)? {
        RhsOutcome::Ok => {}
        RhsOutcome::OutOfDomain => {
            return Err(DynamicsError::InvalidInitial(
                "initial state outside the metric domain".into(),
            ))
        }
    }

    let mut nodes = vec![Node {
        tau: t0,
        y: y0.clone(),
        dy: f0.clone(),
    }];
    let mut t = t0;
    let mut y = y0;
    let mut f = f0;
    let mut h = (span / 100.0).clamp(1e-6, 0.1);
    let h_min = 1e-13 * span.max(1.0);
    let max_steps = 2_000_000usize;

    for _ in 0..max_steps {
        if t >= t_end - 1e-14 * span {
            return Ok(nodes);
        }
        h = h.min(t_end - t);

        let mut stages: Vec<Vec<f64>> = Vec::with_capacity(7);
        stages.push(f.clone());
        let mut rejected_by_domain = false;
        let mut ytmp = vec![0.0; dim];
        for s in 0..6 {
            for i in 0..dim {
                let mut acc = 0.0;
                for (j, a) in DP_A[s].iter().enumerate() {
                    acc += a * stages[j][i];
                }
                ytmp[i] = y[i] + h * acc;
            }
            let mut fs = vec![0.0; dim];
            match rhs(t + DP_C[s] * h, &ytmp, &mut fs)? {
                RhsOutcome::Ok => stages.push(fs),
                RhsOutcome::OutOfDomain => {
                    rejected_by_domain = true;
                    break;
                }
            }
        }

        if rejected_by_domain {
            h *= 0.5;
            if h < h_min {
                return Err(DynamicsError::DomainExit { last_tau: t });
            }
            continue;
        }

        // 5th-order solution; stage 7 (FSAL) was evaluated at it.
        let mut y5 = vec![0.0; dim];
        for i in 0..dim {
            let mut acc = 0.0;
            for (j, a) in DP_A[5].iter().enumerate() {
                acc += a * stages[j][i];
            }
            y5[i] = y[i] + h * acc;
        }
        let mut err_acc = 0.0;
        for i in 0..dim {
            let mut e = 0.0;
            for (j, b4) in DP_B4.iter().enumerate() {
                let b5 = if j < 6 { DP_A[5][j] } else { 0.0 };
                e += (b5 - b4) * stages[j][i];
            }
            e *= h;
            let scale = tol.abs + tol.rel * y[i].abs().max(y5[i].abs());
            err_acc += (e / scale) * (e / scale);
        }
        let err_norm = (err_acc / dim as f64).sqrt();

        if err_norm <= 1.0 {
            t += h;
            y = y5;
            f = stages[6].clone();
            nodes.push(Node {
                tau: t,
                y: y.clone(),
                dy: f.clone(),
            });
            let factor = if err_norm == 0.0 {
                5.0
            } else {
                (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
            };
            h *= factor;
        } else {
            h *= (0.9 * err_norm.powf(-0.2)).clamp(0.1, 0.9);
            if h < h_min {
                return Err(DynamicsError::StepUnderflow { tau: t });
            }
        }
    }
    Err(DynamicsError::StepUnderflow { tau: t })
}

fn geodesic_rhs(
    field: &MetricField,
    policy: &FdPolicy,
    y: &[f64],
    dy: &mut [f64],
) -> Result<RhsOutcome, DynamicsError> {
    let n = field.chart_dim();
    let point = match ParamPoint::new(y[..n].to_vec()) {
        Ok(p) => p,
        Err(_) => return Ok(RhsOutcome::OutOfDomain),
    };
    if !field.domain().contains(point.coords()) {
        return Ok(RhsOutcome::OutOfDomain);
    }
    let gamma = match christoffel(field, &point, policy) {
        Ok(c) => c.gamma,
        Err(GeometryError::OutOfDomain(_)) | Err(GeometryError::StencilOutsideDomain { .. }) => {
            return Ok(RhsOutcome::OutOfDomain)
        }
        Err(e) => return Err(e.into()),
    };
    let v = &y[n..2 * n];
    dy[..n].copy_from_slice(v);
    for mu in 0..n {
        let mut acc = 0.0;
        for a in 0..n {
            for b in 0..n {
                acc += gamma.get(mu, a, b) * v[a] * v[b];
            }
        }
        dy[n + mu] = -acc;
    }
    Ok(RhsOutcome::Ok)
}

fn speed_drift(field: &MetricField, nodes: &[Node], n: usize) -> Result<f64, DynamicsError> {
    let mut initial = None;
    let mut worst: f64 = 0.0;
    for node in nodes {
        let point = ParamPoint::new(node.y[..n].to_vec())
            .map_err(|e| DynamicsError::InvalidInitial(e.to_string()))?;
        let g = field.matrix(&point)?;
        let v = &node.y[n..2 * n];
        let mut speed = 0.0;
        for i in 0..n {
            for j in 0..n {
                speed += g[(i, j)] * v[i] * v[j];
            }
        }
        match initial {
            None => initial = Some(speed),
            Some(s0) => {
                if s0.abs() > 0.0 {
                    worst = worst.max((speed - s0).abs() / s0.abs());
                }
            }
        }
    }
    Ok(worst)
}

/// Integrate the geodesic equation from `initial` up to `tau_end`.
///
/// The conserved speed g(v, v) is monitored over accepted nodes and its
/// largest relative drift is stored on the returned trajectory.
pub fn integrate_geodesic(
    field: &MetricField,
    initial: &GeodesicState,
    tau_end: f64,
    tol: &Tolerances,
) -> Result<Trajectory, DynamicsError> {
    let n = field.chart_dim();
    if initial.point.chart_dim() != n {
        return Err(DynamicsError::InvalidInitial(format!(
            "state dimension {} vs field dimension {n}",
            initial.point.chart_dim()
        )));
    }
    if !field.domain().contains(initial.point.coords()) {
        return Err(DynamicsError::InvalidInitial(
            "initial point outside the metric domain".into(),
        ));
    }
    let policy = FdPolicy::default();
    let mut y0 = initial.point.coords().to_vec();
    y0.extend_from_slice(&initial.velocity);
    let nodes = integrate_adaptive(
        |_, y, dy| geodesic_rhs(field, &policy, y, dy),
        initial.tau,
        y0,
        tau_end,
        tol,
    )?;
    let max_speed_drift = speed_drift(field, &nodes, n)?;
    Ok(Trajectory {
        chart_dim: n,
        has_jacobi: false,
        nodes,
        max_speed_drift,
    })
}

/// Closed-form geodesic parameters for one (mean, std) block: amplitude
/// `xi`, rate `lam`, and std offset `c` (zero in the reference solution).
#[derive(Debug, Clone, Copy)]
pub struct GaussianGeodesicParams {
    pub xi: f64,
    pub lam: f64,
    pub c: f64,
}

impl GaussianGeodesicParams {
    pub fn new(xi: f64, lam: f64) -> Result<Self, DynamicsError> {
        if !(xi.is_finite() && xi > 0.0 && lam.is_finite() && lam > 0.0) {
            return Err(DynamicsError::InvalidInitial(format!(
                "xi and lam must be positive, got ({xi}, {lam})"
            )));
        }
        Ok(Self { xi, lam, c: 0.0 })
    }
}

/// Closed-form (mean, std) block geodesic:
/// `mu = (xi^2 / 2 lam) / D`, `sigma = xi e^(-lam tau) / D + c` with
/// `D = e^(-2 lam tau) + xi^2 / (8 lam^2)`.
pub fn analytic_gaussian_geodesic(p: &GaussianGeodesicParams, tau: f64) -> (f64, f64) {
    let d = (-2.0 * p.lam * tau).exp() + p.xi * p.xi / (8.0 * p.lam * p.lam);
    let mu = p.xi * p.xi / (2.0 * p.lam) / d;
    let sigma = p.xi * (-p.lam * tau).exp() / d + p.c;
    (mu, sigma)
}

/// Exact tau-derivatives of [`analytic_gaussian_geodesic`].
pub fn analytic_gaussian_geodesic_velocity(p: &GaussianGeodesicParams, tau: f64) -> (f64, f64) {
    let e2 = (-2.0 * p.lam * tau).exp();
    let d = e2 + p.xi * p.xi / (8.0 * p.lam * p.lam);
    let dmu = p.xi * p.xi * e2 / (d * d);
    let dsigma =
        p.xi * p.lam * (-p.lam * tau).exp() * (e2 - p.xi * p.xi / (8.0 * p.lam * p.lam)) / (d * d);
    (dmu, dsigma)
}

/// Initial state at tau = 0 for `n_blocks` identical (mean, std) blocks of
/// the closed-form geodesic.
pub fn gaussian_geodesic_initial_state(
    p: &GaussianGeodesicParams,
    n_blocks: usize,
) -> Result<GeodesicState, DynamicsError> {
    let (mu, sigma) = analytic_gaussian_geodesic(p, 0.0);
    let (dmu, dsigma) = analytic_gaussian_geodesic_velocity(p, 0.0);
    let mut coords = Vec::with_capacity(2 * n_blocks);
    let mut velocity = Vec::with_capacity(2 * n_blocks);
    for _ in 0..n_blocks {
        coords.push(mu);
        coords.push(sigma);
        velocity.push(dmu);
        velocity.push(dsigma);
    }
    let point =
        ParamPoint::new(coords).map_err(|e| DynamicsError::InvalidInitial(e.to_string()))?;
    GeodesicState::new(0.0, point, velocity)
}

fn jlc_rhs(
    field: &MetricField,
    policy: &FdPolicy,
    y: &[f64],
    dy: &mut [f64],
) -> Result<RhsOutcome, DynamicsError> {
    let n = field.chart_dim();
    let point = match ParamPoint::new(y[..n].to_vec()) {
        Ok(p) => p,
        Err(_) => return Ok(RhsOutcome::OutOfDomain),
    };
    if !field.domain().contains(point.coords()) {
        return Ok(RhsOutcome::OutOfDomain);
    }
    let (gamma, grad) = match christoffel_with_grad(field, &point, policy) {
        Ok(v) => v,
        Err(GeometryError::OutOfDomain(_))
        | Err(GeometryError::StencilOutsideDomain { .. })
        | Err(GeometryError::BoundaryTooClose { .. }) => return Ok(RhsOutcome::OutOfDomain),
        Err(e) => return Err(e.into()),
    };
    let riemann = riemann_from_christoffel(&gamma, &grad);

    let v = &y[n..2 * n];
    let j = &y[2 * n..3 * n];
    let w = &y[3 * n..4 * n]; // dJ/dtau

    // Geodesic acceleration, reused inside the deviation equation.
    let mut accel = vec![0.0; n];
    for mu in 0..n {
        let mut acc = 0.0;
        for a in 0..n {
            for b in 0..n {
                acc += gamma.get(mu, a, b) * v[a] * v[b];
            }
        }
        accel[mu] = -acc;
    }

    for i in 0..n {
        dy[i] = v[i];
        dy[n + i] = accel[i];
        dy[2 * n + i] = w[i];
    }

    // The covariant second derivative expanded in ordinary derivatives:
    //   d2J = -( 2 Gamma J' v  +  Gamma J a  +  dGamma v v J
    //            + Gamma Gamma J v v )  +  R^mu_{nu rho sigma} v^nu J^rho v^sigma,
    // with the Riemann contraction sign fixed by the sinh-growth behavior
    // on constant-negative-curvature blocks.
    for mu in 0..n {
        let mut acc = 0.0;
        for a in 0..n {
            for b in 0..n {
                let gab = gamma.get(mu, a, b);
                acc += 2.0 * gab * w[a] * v[b];
                acc += gab * j[a] * accel[b];
                for nu in 0..n {
                    acc += grad[nu].get(mu, a, b) * v[nu] * v[b] * j[a];
                }
            }
        }
        // Gamma^mu_{alpha beta} Gamma^alpha_{rho sigma} v^sigma v^beta J^rho
        for alpha in 0..n {
            for beta in 0..n {
                let gmab = gamma.get(mu, alpha, beta);
                if gmab == 0.0 {
                    continue;
                }
                for rho in 0..n {
                    for sigma in 0..n {
                        acc += gmab * gamma.get(alpha, rho, sigma) * v[sigma] * v[beta] * j[rho];
                    }
                }
            }
        }
        let mut riem = 0.0;
        for nu in 0..n {
            for rho in 0..n {
                for sigma in 0..n {
                    riem += riemann.get(mu, nu, rho, sigma) * v[nu] * j[rho] * v[sigma];
                }
            }
        }
        dy[3 * n + mu] = -acc + riem;
    }
    Ok(RhsOutcome::Ok)
}

/// Integrate the Jacobi–Levi-Civita deviation equation along the geodesic
/// defined by `base`'s initial state, carrying the Jacobi block through the
/// same adaptive run. The result covers the same tau span as `base`.
pub fn integrate_jlc(
    field: &MetricField,
    base: &Trajectory,
    j0: &JacobiField,
    tol: &Tolerances,
) -> Result<Trajectory, DynamicsError> {
    let n = field.chart_dim();
    if base.is_empty() {
        return Err(DynamicsError::InvalidInitial(
            "empty base trajectory".into(),
        ));
    }
    if base.chart_dim() != n || j0.j.len() != n || j0.djdtau.len() != n {
        return Err(DynamicsError::InvalidInitial(
            "Jacobi block dimension mismatch".into(),
        ));
    }
    let start = base.state_at(base.start_tau())?;
    let policy = FdPolicy::default();
    let mut y0 = start.point.coords().to_vec();
    y0.extend_from_slice(&start.velocity);
    y0.extend_from_slice(&j0.j);
    y0.extend_from_slice(&j0.djdtau);
    let nodes = integrate_adaptive(
        |_, y, dy| jlc_rhs(field, &policy, y, dy),
        start.tau,
        y0,
        base.end_tau(),
        tol,
    )?;
    let max_speed_drift = speed_drift(field, &nodes, n)?;
    Ok(Trajectory {
        chart_dim: n,
        has_jacobi: true,
        nodes,
        max_speed_drift,
    })
}

/// Closed-form isotropic Jacobi intensity for constant negative sectional
/// curvature `k`: `J(tau) = omega0 sinh(sqrt(-k) tau) / sqrt(-k)` with
/// J(0) = 0, J'(0) = omega0.
pub fn isotropic_jacobi(k: f64, omega0: f64, tau: f64) -> Result<f64, DynamicsError> {
    if !(k < 0.0) {
        return Err(DynamicsError::Unsupported(format!(
            "isotropic closed form covers the unstable branch k < 0 only, got {k}"
        )));
    }
    let s = (-k).sqrt();
    Ok(omega0 / s * (s * tau).sinh())
}

fn difference_states(a: &GeodesicState, b: &GeodesicState, d_lam: f64) -> JacobiField {
    let n = a.point.chart_dim();
    JacobiField {
        j: (0..n)
            .map(|i| (a.point.coords()[i] - b.point.coords()[i]) / (2.0 * d_lam))
            .collect(),
        djdtau: (0..n)
            .map(|i| (a.velocity[i] - b.velocity[i]) / (2.0 * d_lam))
            .collect(),
    }
}

/// Central-difference Jacobi data of the family at its initial time; the
/// matching initial condition for [`integrate_jlc`].
pub fn initial_jacobi_from_family(
    initial_family: &dyn Fn(f64) -> Result<GeodesicState, DynamicsError>,
    lam0: f64,
    d_lam: f64,
) -> Result<JacobiField, DynamicsError> {
    let plus = initial_family(lam0 + d_lam)?;
    let minus = initial_family(lam0 - d_lam)?;
    Ok(difference_states(&plus, &minus, d_lam))
}

/// Jacobi fields by central finite differences of a one-parameter family of
/// geodesics: integrates the `lam0 +/- d_lam` members and differences their
/// states on the grid. Serves as the independent oracle for
/// [`integrate_jlc`].
pub fn jacobi_from_family(
    field: &MetricField,
    initial_family: &dyn Fn(f64) -> Result<GeodesicState, DynamicsError>,
    lam0: f64,
    d_lam: f64,
    tau_grid: &[f64],
    tol: &Tolerances,
) -> Result<Vec<JacobiField>, DynamicsError> {
    if tau_grid.is_empty() {
        return Err(DynamicsError::InvalidInitial("empty tau grid".into()));
    }
    let start_plus = initial_family(lam0 + d_lam)?;
    let start_minus = initial_family(lam0 - d_lam)?;
    let t0 = start_plus.tau;
    let tau_end = *tau_grid.last().unwrap();
    if tau_end <= t0 {
        // Degenerate grid at the initial time: no integration needed.
        return Ok(tau_grid
            .iter()
            .map(|_| difference_states(&start_plus, &start_minus, d_lam))
            .collect());
    }
    let plus = integrate_geodesic(field, &start_plus, tau_end, tol)?;
    let minus = integrate_geodesic(field, &start_minus, tau_end, tol)?;
    let mut out = Vec::with_capacity(tau_grid.len());
    for &tau in tau_grid {
        let sp = plus.state_at(tau)?;
        let sm = minus.state_at(tau)?;
        out.push(difference_states(&sp, &sm, d_lam));
    }
    Ok(out)
}

/// Metric norm of the separation vector: `(g_{mu nu} J^mu J^nu)^(1/2)`.
pub fn jacobi_intensity(
    field: &MetricField,
    point: &ParamPoint,
    j: &JacobiField,
) -> Result<f64, DynamicsError> {
    let g = field.matrix(point)?;
    let n = g.nrows();
    let mut acc = 0.0;
    for a in 0..n {
        for b in 0..n {
            acc += g[(a, b)] * j.j[a] * j.j[b];
        }
    }
    Ok(acc.max(0.0).sqrt())
}

/// Least-squares slope of `ln ||J||` against tau over the trailing
/// `tail_fraction` of the series; the growth rate the limit definition
/// extracts. Non-positive intensities are excluded (the zero initial
/// condition).
pub fn estimate_lambda_j(series: &[(f64, f64)], tail_fraction: f64) -> Result<f64, DynamicsError> {
    const MIN_POINTS: usize = 8;
    if series.is_empty() {
        return Err(DynamicsError::InsufficientTail {
            have: 0,
            need: MIN_POINTS,
        });
    }
    let frac = tail_fraction.clamp(0.0, 1.0);
    let tau_min = series.first().unwrap().0;
    let tau_max = series.last().unwrap().0;
    let cutoff = tau_max - frac * (tau_max - tau_min);
    let tail: Vec<(f64, f64)> = series
        .iter()
        .filter(|(tau, j)| *tau >= cutoff && *j > 0.0 && j.is_finite())
        .map(|&(tau, j)| (tau, j.ln()))
        .collect();
    if tail.is_empty() {
        return Err(DynamicsError::NonPositiveSeries);
    }
    if tail.len() < MIN_POINTS {
        return Err(DynamicsError::InsufficientTail {
            have: tail.len(),
            need: MIN_POINTS,
        });
    }
    Ok(least_squares_slope(&tail))
}

pub(crate) fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}
