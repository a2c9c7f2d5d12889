//! Statistical volumes along geodesics and entropic growth classification.
//!
//! The volume swept between the initial macrostate and the macrostate at
//! `tau` is a product of one-dimensional integrals of the volume density
//! `sqrt(det g)` (valid for the diagonal, per-coordinate-separable metrics
//! of all built-in models). Its running time average defines the entropy
//! series `S(tau) = log <dV>_tau`, whose asymptote is fitted against linear
//! and logarithmic growth models; the better model names the regime.

use crate::dynamics::{least_squares_slope, DynamicsError, Trajectory};
use crate::geometry::{GeometryError, MetricField};
use crate::models::ParamPoint;
use crate::quadrature::{integrate, QuadError, QuadSpec};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IgeError {
    #[error("unsupported metric: {0}")]
    Unsupported(String),
    #[error("grid not covered by the geodesic: {0}")]
    GridNotCovered(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("growth fit needs at least {need} tail points with finite entropy, found {have}")]
    InsufficientTail { have: usize, need: usize },
    #[error("ambiguous regime: residual ratio {ratio:.3} is within 10% of 1")]
    Ambiguous { ratio: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// Volume element density `sqrt(det g)` at a point.
pub fn volume_element(field: &MetricField, point: &ParamPoint) -> Result<f64, IgeError> {
    Ok(field.sqrt_det(point)?)
}

/// Largest off-diagonal magnitude relative to the diagonal scale; the
/// region-volume factorization only holds for diagonal metrics.
fn assert_diagonal(field: &MetricField, point: &ParamPoint) -> Result<(), IgeError> {
    let g = field.matrix(point)?;
    let n = g.nrows();
    let diag_scale = (0..n).map(|i| g[(i, i)].abs()).fold(0.0f64, f64::max);
    for i in 0..n {
        for j in 0..n {
            if i != j && g[(i, j)].abs() > 1e-9 * diag_scale {
                return Err(IgeError::Unsupported(format!(
                    "metric has off-diagonal entry g[{i}][{j}] = {}; region volumes are defined for diagonal metrics only",
                    g[(i, j)]
                )));
            }
        }
    }
    Ok(())
}

/// Volume of the coordinate box spanned by `start` and `end`:
/// the product over coordinates of `|integral of sqrt(det g)|` along each
/// coordinate, divided by `sqrt(det g)(start)^(n-1)` so the per-coordinate
/// factors of the separable volume density multiply out exactly.
pub fn region_volume(
    field: &MetricField,
    start: &ParamPoint,
    end: &ParamPoint,
) -> Result<f64, IgeError> {
    let n = field.chart_dim();
    if start.chart_dim() != n || end.chart_dim() != n {
        return Err(IgeError::Unsupported(format!(
            "endpoint dimensions {} / {} do not match the chart dimension {n}",
            start.chart_dim(),
            end.chart_dim()
        )));
    }
    assert_diagonal(field, start)?;
    assert_diagonal(field, end)?;

    let reference_density = field.sqrt_det(start)?;
    if !(reference_density.is_finite() && reference_density > 0.0) {
        return Err(IgeError::Unsupported(format!(
            "volume density at the start point is {reference_density}"
        )));
    }
    let spec = QuadSpec {
        rel_tol: 1e-10,
        abs_tol: f64::MIN_POSITIVE,
        max_intervals: 4096,
    };
    let mut volume = 1.0;
    for mu in 0..n {
        let (a, b) = (start.coords()[mu], end.coords()[mu]);
        if a == b {
            return Ok(0.0);
        }
        let result = integrate(
            |u| {
                let p = start.with_coord(mu, u);
                field.sqrt_det(&p).unwrap_or(f64::NAN)
            },
            a,
            b,
            &spec,
        )?;
        volume *= result.value.abs();
    }
    Ok(volume / reference_density.powi(n as i32 - 1))
}

/// Sampled volume growth along a geodesic: the swept volume, its running
/// time average, and the entropy series `S = log <dV>`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VolumeTrace {
    pub grid: Vec<f64>,
    pub delta_v: Vec<f64>,
    pub avg_v: Vec<f64>,
    pub ige: Vec<f64>,
}

impl VolumeTrace {
    /// CSV dump with 17 significant digits: tau, dV, avg V, S.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tau,delta_v,avg_v,ige\n");
        for i in 0..self.grid.len() {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e}\n",
                self.grid[i], self.delta_v[i], self.avg_v[i], self.ige[i]
            ));
        }
        out
    }
}

/// Compute Delta V, its running trapezoid time average, and the entropy
/// series over `grid`. The grid must start at the geodesic's initial tau
/// (where the swept volume vanishes) and be strictly increasing.
pub fn ige_trace(
    field: &MetricField,
    geodesic: &Trajectory,
    grid: &[f64],
) -> Result<VolumeTrace, IgeError> {
    if grid.len() < 2 {
        return Err(IgeError::InvalidGrid(
            "need at least two grid points".into(),
        ));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(IgeError::InvalidGrid(
            "grid must be strictly increasing".into(),
        ));
    }
    let t0 = geodesic.start_tau();
    if (grid[0] - t0).abs() > 1e-12 {
        return Err(IgeError::InvalidGrid(format!(
            "grid must start at the geodesic's initial tau {t0}, got {}",
            grid[0]
        )));
    }
    if *grid.last().unwrap() > geodesic.end_tau() + 1e-12 {
        return Err(IgeError::GridNotCovered(format!(
            "grid extends to {} but the geodesic ends at {}",
            grid.last().unwrap(),
            geodesic.end_tau()
        )));
    }

    let start = geodesic.state_at(t0).map_err(IgeError::from)?.point;
    let mut delta_v = Vec::with_capacity(grid.len());
    for &tau in grid {
        let end = geodesic.state_at(tau).map_err(IgeError::from)?.point;
        delta_v.push(region_volume(field, &start, &end)?);
    }

    let mut avg_v = Vec::with_capacity(grid.len());
    let mut ige = Vec::with_capacity(grid.len());
    let mut running = 0.0;
    for i in 0..grid.len() {
        if i == 0 {
            avg_v.push(0.0);
            ige.push(f64::NEG_INFINITY);
            continue;
        }
        running += 0.5 * (delta_v[i - 1] + delta_v[i]) * (grid[i] - grid[i - 1]);
        let elapsed = grid[i] - grid[0];
        let mean = running / elapsed;
        avg_v.push(mean);
        ige.push(mean.ln());
    }
    Ok(VolumeTrace {
        grid: grid.to_vec(),
        delta_v,
        avg_v,
        ige,
    })
}

/// Which asymptotic growth model fits the entropy series better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GrowthModel {
    Linear,
    Logarithmic,
}

/// Least-squares fits of `S = a tau + b` and `S = c log tau + d` over the
/// tail window, with the better (smaller tail RMS) model selected.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthFit {
    pub model: GrowthModel,
    pub slope: f64,
    pub intercept_linear: f64,
    pub coefficient: f64,
    pub intercept_log: f64,
    pub rms_linear: f64,
    pub rms_log: f64,
    pub window: (f64, f64),
}

fn fit_two_parameter(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let slope = least_squares_slope(points);
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let intercept = mean_y - slope * mean_x;
    let rms = (points
        .iter()
        .map(|&(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum::<f64>()
        / n)
        .sqrt();
    (slope, intercept, rms)
}

/// Fit the tail of an entropy series against the linear and logarithmic
/// growth models; both fits are always reported.
pub fn fit_growth(trace: &VolumeTrace, tail_fraction: f64) -> Result<GrowthFit, IgeError> {
    const MIN_POINTS: usize = 16;
    let frac = tail_fraction.clamp(0.0, 1.0);
    let tau_min = *trace.grid.first().unwrap_or(&0.0);
    let tau_max = *trace.grid.last().unwrap_or(&0.0);
    let cutoff = tau_max - frac * (tau_max - tau_min);
    let tail: Vec<(f64, f64)> = trace
        .grid
        .iter()
        .zip(&trace.ige)
        .filter(|(&tau, &s)| tau >= cutoff && tau > 0.0 && s.is_finite())
        .map(|(&tau, &s)| (tau, s))
        .collect();
    if tail.len() < MIN_POINTS {
        return Err(IgeError::InsufficientTail {
            have: tail.len(),
            need: MIN_POINTS,
        });
    }

    let (slope, intercept_linear, rms_linear) = fit_two_parameter(&tail);
    let log_points: Vec<(f64, f64)> = tail.iter().map(|&(x, y)| (x.ln(), y)).collect();
    let (coefficient, intercept_log, rms_log) = fit_two_parameter(&log_points);

    let model = if rms_linear <= rms_log {
        GrowthModel::Linear
    } else {
        GrowthModel::Logarithmic
    };
    Ok(GrowthFit {
        model,
        slope,
        intercept_linear,
        coefficient,
        intercept_log,
        rms_linear,
        rms_log,
        window: (tail.first().unwrap().0, tail.last().unwrap().0),
    })
}

/// Entropic regime implied by the asymptotic growth of the entropy series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Regular,
    Chaotic,
}

/// Regime call with the residual-ratio margin backing it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegimeCall {
    pub regime: Regime,
    pub residual_ratio: f64,
}

/// Classify the regime from a growth fit: logarithmic growth is regular,
/// linear growth chaotic. A residual ratio within 10% of 1 is flagged as
/// ambiguous instead of silently picking a side.
pub fn classify_regime(fit: &GrowthFit) -> Result<RegimeCall, IgeError> {
    let (better, worse) = match fit.model {
        GrowthModel::Linear => (fit.rms_linear, fit.rms_log),
        GrowthModel::Logarithmic => (fit.rms_log, fit.rms_linear),
    };
    let ratio = if better == 0.0 {
        f64::INFINITY
    } else {
        worse / better
    };
    if ratio < 1.1 {
        return Err(IgeError::Ambiguous { ratio });
    }
    let regime = match fit.model {
        GrowthModel::Linear => Regime::Chaotic,
        GrowthModel::Logarithmic => Regime::Regular,
    };
    Ok(RegimeCall {
        regime,
        residual_ratio: ratio,
    })
}

/// Serializable growth report for the batch front end.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthReport {
    pub model: GrowthModel,
    pub slope: f64,
    pub coefficient: f64,
    pub intercept_linear: f64,
    pub intercept_log: f64,
    pub rms_linear: f64,
    pub rms_log: f64,
    pub window: (f64, f64),
    pub classification: Option<Regime>,
    pub residual_ratio: f64,
    pub ambiguous: bool,
}

impl GrowthReport {
    pub fn from_fit(fit: &GrowthFit) -> Self {
        let call = classify_regime(fit);
        let (classification, residual_ratio, ambiguous) = match call {
            Ok(c) => (Some(c.regime), c.residual_ratio, false),
            Err(IgeError::Ambiguous { ratio }) => (None, ratio, true),
            Err(_) => (None, f64::NAN, true),
        };
        Self {
            model: fit.model,
            slope: fit.slope,
            coefficient: fit.coefficient,
            intercept_linear: fit.intercept_linear,
            intercept_log: fit.intercept_log,
            rms_linear: fit.rms_linear,
            rms_log: fit.rms_log,
            window: fit.window,
            classification,
            residual_ratio,
            ambiguous,
        }
    }
}
