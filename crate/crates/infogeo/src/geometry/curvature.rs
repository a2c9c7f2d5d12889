//! Christoffel symbols and the curvature stack by finite differences.
//!
//! Index conventions:
//! Gamma^rho_{mu nu} = (1/2) g^{rho sigma} (d_mu g_{sigma nu} + d_nu g_{mu sigma} - d_sigma g_{mu nu}),
//! R^alpha_{beta rho sigma} = d_sigma Gamma^alpha_{beta rho} - d_rho Gamma^alpha_{beta sigma}
//!                            + Gamma^alpha_{lambda sigma} Gamma^lambda_{beta rho}
//!                            - Gamma^alpha_{lambda rho} Gamma^lambda_{beta sigma},
//! Ricci_{mu nu} = R^alpha_{mu nu alpha},  R = g^{mu nu} Ricci_{mu nu}.
//! This contraction reproduces the constant scalar -1 per Gaussian
//! (mean, std) block, which pins the sign convention used everywhere else.

use super::{GeometryError, MetricField, MetricValue};
use crate::models::ParamPoint;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Boundary margin below which curvature evaluation refuses to run: the
/// metric blows up there and FD stencils would be garbage.
pub const BOUNDARY_MARGIN: f64 = 1e-6;

/// Finite-difference step policy: metric derivatives at `base_step`
/// (relative to the coordinate magnitude), Christoffel derivatives at
/// `nested_factor` times that.
#[derive(Debug, Clone, Copy)]
pub struct FdPolicy {
    pub base_step: f64,
    pub nested_factor: f64,
}

impl Default for FdPolicy {
    fn default() -> Self {
        Self {
            base_step: 1e-5,
            nested_factor: 10.0,
        }
    }
}

impl FdPolicy {
    pub fn step(&self, coord: f64) -> f64 {
        self.base_step * coord.abs().max(1.0)
    }

    pub fn nested_step(&self, coord: f64) -> f64 {
        self.nested_factor * self.step(coord)
    }
}

/// Dense rank-3 array indexed as `t[i][j][k]`.
#[derive(Debug, Clone)]
pub struct Tensor3 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.n + j) * self.n + k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        self.data[(i * self.n + j) * self.n + k] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Dense rank-4 array indexed as `t[i][j][k][l]`.
#[derive(Debug, Clone)]
pub struct Tensor4 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n * n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.data[((i * self.n + j) * self.n + k) * self.n + l]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        self.data[((i * self.n + j) * self.n + k) * self.n + l] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Christoffel symbols of the second kind at a point.
#[derive(Debug, Clone)]
pub struct ChristoffelValue {
    pub point: ParamPoint,
    pub gamma: Tensor3,
}

/// Riemann/Ricci/scalar/Weyl bundle at a point.
#[derive(Debug, Clone)]
pub struct CurvatureBundle {
    pub point: ParamPoint,
    pub metric: MetricValue,
    /// `R^alpha_{beta rho sigma}` (first index raised).
    pub riemann: Tensor4,
    /// Fully lowered `R_{mu nu rho sigma}`.
    pub riemann_lower: Tensor4,
    pub ricci: DMatrix<f64>,
    pub scalar: f64,
    /// Projective Weyl (anisotropy) tensor: the Riemann tensor minus its
    /// constant-curvature part, lowered indices.
    pub weyl_projective: Tensor4,
}

fn guard_point(field: &MetricField, point: &ParamPoint) -> Result<(), GeometryError> {
    if !field.domain().contains(point.coords()) {
        return Err(GeometryError::OutOfDomain(format!("{:?}", point.coords())));
    }
    let dist = field.domain().boundary_distance(point.coords());
    if dist < BOUNDARY_MARGIN {
        let coords = point.coords();
        let coord = field
            .domain()
            .bounds()
            .iter()
            .enumerate()
            .find(|(i, &(lo, hi))| {
                let c = coords[*i];
                (lo.is_finite() && c - lo < BOUNDARY_MARGIN)
                    || (hi.is_finite() && hi - c < BOUNDARY_MARGIN)
            })
            .map(|(i, _)| i)
            .unwrap_or(0);
        return Err(GeometryError::BoundaryTooClose {
            coord,
            value: point.coords()[coord],
            margin: BOUNDARY_MARGIN,
        });
    }
    Ok(())
}

fn christoffel_at(
    field: &MetricField,
    point: &ParamPoint,
    policy: &FdPolicy,
) -> Result<Tensor3, GeometryError> {
    let n = field.chart_dim();
    let ginv = field.inverse_at(point)?;
    let mut dg = Vec::with_capacity(n);
    for rho in 0..n {
        dg.push(field.partial(point, rho, policy)?);
    }
    let mut gamma = Tensor3::zeros(n);
    for rho in 0..n {
        for mu in 0..n {
            for nu in mu..n {
                let mut acc = 0.0;
                for sigma in 0..n {
                    acc += ginv[(rho, sigma)]
                        * (dg[mu][(sigma, nu)] + dg[nu][(mu, sigma)] - dg[sigma][(mu, nu)]);
                }
                let v = 0.5 * acc;
                gamma.set(rho, mu, nu, v);
                gamma.set(rho, nu, mu, v);
            }
        }
    }
    Ok(gamma)
}

/// Christoffel symbols `Gamma^rho_{mu nu}` at an interior point.
///
/// No boundary margin is enforced here: geodesic right-hand sides evaluate
/// Gamma arbitrarily close to the boundary through exact derivative
/// callbacks. FD stencils that would leave the domain still error out.
pub fn christoffel(
    field: &MetricField,
    point: &ParamPoint,
    policy: &FdPolicy,
) -> Result<ChristoffelValue, GeometryError> {
    if !field.domain().contains(point.coords()) {
        return Err(GeometryError::OutOfDomain(format!("{:?}", point.coords())));
    }
    Ok(ChristoffelValue {
        point: point.clone(),
        gamma: christoffel_at(field, point, policy)?,
    })
}

/// Christoffel symbols together with their coordinate gradient
/// `d_nu Gamma^i_{jk}`: exact when the field carries first and second
/// metric derivatives, nested central differences otherwise.
pub fn christoffel_with_grad(
    field: &MetricField,
    point: &ParamPoint,
    policy: &FdPolicy,
) -> Result<(Tensor3, Vec<Tensor3>), GeometryError> {
    guard_point(field, point)?;
    if field.has_exact_derivative() && field.has_exact_hessian() {
        return christoffel_grad_exact(field, point, policy);
    }
    let n = field.chart_dim();
    let gamma = christoffel_at(field, point, policy)?;
    let mut grad = Vec::with_capacity(n);
    for nu in 0..n {
        let h = policy.nested_step(point.coords()[nu]);
        let up = point.with_coord(nu, point.coords()[nu] + h);
        let dn = point.with_coord(nu, point.coords()[nu] - h);
        if !field.domain().contains(up.coords()) || !field.domain().contains(dn.coords()) {
            return Err(GeometryError::StencilOutsideDomain { coord: nu });
        }
        let gu = christoffel_at(field, &up, policy)?;
        let gd = christoffel_at(field, &dn, policy)?;
        let mut d = Tensor3::zeros(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    d.set(i, j, k, (gu.get(i, j, k) - gd.get(i, j, k)) / (2.0 * h));
                }
            }
        }
        grad.push(d);
    }
    Ok((gamma, grad))
}

/// d_eta Gamma^rho_{mu nu} from exact metric derivatives:
/// d(G^-1) = -G^-1 (dg) G^-1 applied to the Levi-Civita formula.
fn christoffel_grad_exact(
    field: &MetricField,
    point: &ParamPoint,
    policy: &FdPolicy,
) -> Result<(Tensor3, Vec<Tensor3>), GeometryError> {
    let n = field.chart_dim();
    let ginv = field.inverse_at(point)?;
    let mut dg = Vec::with_capacity(n);
    for rho in 0..n {
        dg.push(field.partial(point, rho, policy)?);
    }

    let t_of = |sigma: usize, mu: usize, nu: usize| -> f64 {
        dg[mu][(sigma, nu)] + dg[nu][(mu, sigma)] - dg[sigma][(mu, nu)]
    };

    let mut gamma = Tensor3::zeros(n);
    for rho in 0..n {
        for mu in 0..n {
            for nu in mu..n {
                let mut acc = 0.0;
                for sigma in 0..n {
                    acc += ginv[(rho, sigma)] * t_of(sigma, mu, nu);
                }
                let v = 0.5 * acc;
                gamma.set(rho, mu, nu, v);
                gamma.set(rho, nu, mu, v);
            }
        }
    }

    let mut grad = Vec::with_capacity(n);
    for eta in 0..n {
        let dginv = -(&ginv) * &dg[eta] * &ginv;
        let hess = |a: usize, b: usize| -> DMatrix<f64> {
            field
                .second_partial(point, a, b)
                .expect("exact hessian checked by caller")
        };
        let mut hmat = Vec::with_capacity(n);
        for b in 0..n {
            hmat.push(hess(eta, b));
        }
        let dt_of = |sigma: usize, mu: usize, nu: usize| -> f64 {
            hmat[mu][(sigma, nu)] + hmat[nu][(mu, sigma)] - hmat[sigma][(mu, nu)]
        };
        let mut d = Tensor3::zeros(n);
        for rho in 0..n {
            for mu in 0..n {
                for nu in mu..n {
                    let mut acc = 0.0;
                    for sigma in 0..n {
                        acc += dginv[(rho, sigma)] * t_of(sigma, mu, nu)
                            + ginv[(rho, sigma)] * dt_of(sigma, mu, nu);
                    }
                    let v = 0.5 * acc;
                    d.set(rho, mu, nu, v);
                    d.set(rho, nu, mu, v);
                }
            }
        }
        grad.push(d);
    }
    Ok((gamma, grad))
}

/// Riemann tensor (first index raised) from Christoffel symbols and their
/// gradient.
pub fn riemann_from_christoffel(gamma: &Tensor3, grad: &[Tensor3]) -> Tensor4 {
    let n = gamma.dim();
    let mut r = Tensor4::zeros(n);
    for alpha in 0..n {
        for beta in 0..n {
            for rho in 0..n {
                for sigma in 0..n {
                    let mut v =
                        grad[sigma].get(alpha, beta, rho) - grad[rho].get(alpha, beta, sigma);
                    for lambda in 0..n {
                        v += gamma.get(alpha, lambda, sigma) * gamma.get(lambda, beta, rho)
                            - gamma.get(alpha, lambda, rho) * gamma.get(lambda, beta, sigma);
                    }
                    r.set(alpha, beta, rho, sigma, v);
                }
            }
        }
    }
    r
}

/// Full curvature bundle at an interior point.
pub fn curvature(
    field: &MetricField,
    point: &ParamPoint,
    policy: &FdPolicy,
) -> Result<CurvatureBundle, GeometryError> {
    let (gamma, grad) = christoffel_with_grad(field, point, policy)?;
    let n = field.chart_dim();
    let metric = field.value(point)?;
    let ginv = field.inverse_at(point)?;
    let riemann = riemann_from_christoffel(&gamma, &grad);

    let mut riemann_lower = Tensor4::zeros(n);
    for mu in 0..n {
        for beta in 0..n {
            for rho in 0..n {
                for sigma in 0..n {
                    let mut v = 0.0;
                    for alpha in 0..n {
                        v += metric.matrix[(mu, alpha)] * riemann.get(alpha, beta, rho, sigma);
                    }
                    riemann_lower.set(mu, beta, rho, sigma, v);
                }
            }
        }
    }

    let mut ricci = DMatrix::zeros(n, n);
    for mu in 0..n {
        for nu in 0..n {
            let mut v = 0.0;
            for alpha in 0..n {
                v += riemann.get(alpha, mu, nu, alpha);
            }
            ricci[(mu, nu)] = v;
        }
    }

    let mut scalar = 0.0;
    for mu in 0..n {
        for nu in 0..n {
            scalar += ginv[(mu, nu)] * ricci[(mu, nu)];
        }
    }

    // Constant-curvature part removed with the sign arrangement that
    // annihilates every 2-dim field under the Riemann convention above.
    let mut weyl = Tensor4::zeros(n);
    if n > 1 {
        let k = scalar / (n as f64 * (n as f64 - 1.0));
        let g = &metric.matrix;
        for mu in 0..n {
            for nu in 0..n {
                for rho in 0..n {
                    for sigma in 0..n {
                        let cc = g[(mu, sigma)] * g[(nu, rho)] - g[(mu, rho)] * g[(nu, sigma)];
                        weyl.set(
                            mu,
                            nu,
                            rho,
                            sigma,
                            riemann_lower.get(mu, nu, rho, sigma) - k * cc,
                        );
                    }
                }
            }
        }
    }

    Ok(CurvatureBundle {
        point: point.clone(),
        metric,
        riemann,
        riemann_lower,
        ricci,
        scalar,
        weyl_projective: weyl,
    })
}

/// Sectional curvature of the plane spanned by tangent vectors `a` and `b`,
/// computed from an existing bundle.
pub fn sectional_from_bundle(
    bundle: &CurvatureBundle,
    a: &[f64],
    b: &[f64],
) -> Result<f64, GeometryError> {
    let n = bundle.riemann_lower.dim();
    let g = &bundle.metric.matrix;
    let mut numerator = 0.0;
    for mu in 0..n {
        for nu in 0..n {
            for rho in 0..n {
                for sigma in 0..n {
                    numerator += bundle.riemann_lower.get(mu, nu, rho, sigma)
                        * a[mu]
                        * b[nu]
                        * a[rho]
                        * b[sigma];
                }
            }
        }
    }
    let gab = quadratic(g, a, b);
    let gaa = quadratic(g, a, a);
    let gbb = quadratic(g, b, b);
    let denominator = gab * gab - gaa * gbb;
    if denominator.abs() < 1e-12 {
        return Err(GeometryError::DegeneratePlane { denominator });
    }
    Ok(numerator / denominator)
}

fn quadratic(g: &DMatrix<f64>, a: &[f64], b: &[f64]) -> f64 {
    let n = g.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += g[(i, j)] * a[i] * b[j];
        }
    }
    acc
}

/// Sectional curvature of the plane spanned by `a` and `b` at a point.
pub fn sectional_curvature(
    field: &MetricField,
    point: &ParamPoint,
    a: &[f64],
    b: &[f64],
    policy: &FdPolicy,
) -> Result<f64, GeometryError> {
    let bundle = curvature(field, point, policy)?;
    sectional_from_bundle(&bundle, a, b)
}

/// Symmetrized covariant derivative `D_mu K_nu + D_nu K_mu` of a vector
/// field given by its contravariant components; the zero matrix flags a
/// Killing direction at the point.
pub fn killing_residual(
    field: &MetricField,
    point: &ParamPoint,
    k_field: &dyn Fn(&ParamPoint) -> Vec<f64>,
    policy: &FdPolicy,
) -> Result<DMatrix<f64>, GeometryError> {
    guard_point(field, point)?;
    let n = field.chart_dim();
    let gamma = christoffel_at(field, point, policy)?;

    let lower = |p: &ParamPoint| -> Result<Vec<f64>, GeometryError> {
        let g = field.matrix(p)?;
        let k = k_field(p);
        if k.len() != n {
            return Err(GeometryError::Unsupported(format!(
                "vector field returned {} components on a {n}-dim chart",
                k.len()
            )));
        }
        Ok((0..n)
            .map(|nu| (0..n).map(|rho| g[(nu, rho)] * k[rho]).sum())
            .collect())
    };

    let k_lower = lower(point)?;
    // dK[mu][nu] = d_mu K_nu by central differences.
    let mut dk = vec![vec![0.0; n]; n];
    for mu in 0..n {
        let h = policy.step(point.coords()[mu]);
        let up = point.with_coord(mu, point.coords()[mu] + h);
        let dn = point.with_coord(mu, point.coords()[mu] - h);
        if !field.domain().contains(up.coords()) || !field.domain().contains(dn.coords()) {
            return Err(GeometryError::StencilOutsideDomain { coord: mu });
        }
        let ku = lower(&up)?;
        let kd = lower(&dn)?;
        for nu in 0..n {
            dk[mu][nu] = (ku[nu] - kd[nu]) / (2.0 * h);
        }
    }

    let mut resid = DMatrix::zeros(n, n);
    for mu in 0..n {
        for nu in 0..n {
            let mut v = dk[mu][nu] + dk[nu][mu];
            for rho in 0..n {
                v -= 2.0 * gamma.get(rho, mu, nu) * k_lower[rho];
            }
            resid[(mu, nu)] = v;
        }
    }
    Ok(resid)
}

/// Serializable curvature summary: scalar, Ricci matrix, sectional samples
/// over coordinate planes, and the largest projective-Weyl component.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub point: Vec<f64>,
    pub scalar: f64,
    pub ricci: Vec<Vec<f64>>,
    pub sectional_samples: Vec<SectionalSample>,
    pub weyl_max_abs: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SectionalSample {
    pub plane: [usize; 2],
    pub value: f64,
}

pub fn curvature_report(
    field: &MetricField,
    point: &ParamPoint,
    policy: &FdPolicy,
) -> Result<CurvatureReport, GeometryError> {
    let bundle = curvature(field, point, policy)?;
    let n = field.chart_dim();
    let mut sectional_samples = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let mut a = vec![0.0; n];
            let mut b = vec![0.0; n];
            a[i] = 1.0;
            b[j] = 1.0;
            sectional_samples.push(SectionalSample {
                plane: [i, j],
                value: sectional_from_bundle(&bundle, &a, &b)?,
            });
        }
    }
    Ok(CurvatureReport {
        point: point.coords().to_vec(),
        scalar: bundle.scalar,
        ricci: (0..n)
            .map(|i| (0..n).map(|j| bundle.ricci[(i, j)]).collect())
            .collect(),
        sectional_samples,
        weyl_max_abs: bundle.weyl_projective.max_abs(),
    })
}
