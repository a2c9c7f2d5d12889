//! Integral functionals over families: normalization and moment checks,
//! and the relative entropy against a reference density.

use super::{DensityFamily, FactorBlock, ModelError, ParamPoint};
use crate::geometry::Domain;
use crate::quadrature::{integrate, integrate2, QuadSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Normalization integral plus first and second central moments per
/// microstate slot.
#[derive(Debug, Clone)]
pub struct NormalizationReport {
    pub integral: f64,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

fn pure_relative(spec: &QuadSpec) -> QuadSpec {
    QuadSpec {
        rel_tol: spec.rel_tol,
        abs_tol: f64::MIN_POSITIVE,
        max_intervals: spec.max_intervals,
    }
}

struct BlockDensity<'a> {
    family: &'a dyn DensityFamily,
    params: &'a ParamPoint,
    anchor: Vec<f64>,
    block: FactorBlock,
    bounds: Vec<(f64, f64)>,
}

impl<'a> BlockDensity<'a> {
    /// Unnormalized block weight: the full density with the other slots
    /// frozen at the anchor microstate. Division by `mass()` recovers the
    /// exact block marginal because the frozen factors are constant.
    fn weight(&self, x: &[f64]) -> f64 {
        let mut micro = self.anchor.clone();
        for (offset, slot) in self.block.micro.clone().enumerate() {
            micro[slot] = x[offset];
        }
        match self.family.log_density(self.params, &micro) {
            Ok(lp) if lp.is_finite() => lp.exp(),
            _ => 0.0,
        }
    }

    fn integrate_weighted(
        &self,
        f: impl Fn(&[f64]) -> f64,
        spec: &QuadSpec,
    ) -> Result<f64, ModelError> {
        match self.block.micro.len() {
            1 => {
                let (lo, hi) = self.bounds[self.block.micro.start];
                Ok(integrate(
                    |x| {
                        let w = self.weight(&[x]);
                        if w == 0.0 {
                            0.0
                        } else {
                            w * f(&[x])
                        }
                    },
                    lo,
                    hi,
                    spec,
                )?
                .value)
            }
            2 => {
                let (lo0, hi0) = self.bounds[self.block.micro.start];
                let (lo1, hi1) = self.bounds[self.block.micro.start + 1];
                Ok(integrate2(
                    |x, y| {
                        let w = self.weight(&[x, y]);
                        if w == 0.0 {
                            0.0
                        } else {
                            w * f(&[x, y])
                        }
                    },
                    lo0,
                    hi0,
                    lo1,
                    hi1,
                    spec,
                )?
                .value)
            }
            len => Err(ModelError::Incompatible(format!(
                "quadrature over a {len}-dimensional factor block is unsupported"
            ))),
        }
    }

    fn mass(&self, spec: &QuadSpec) -> Result<f64, ModelError> {
        self.integrate_weighted(|_| 1.0, spec)
    }
}

fn blocks_of<'a>(
    family: &'a dyn DensityFamily,
    params: &'a ParamPoint,
) -> Result<Vec<BlockDensity<'a>>, ModelError> {
    family.check_params(params)?;
    let anchor = family.typical_microstate(params)?;
    let bounds = family.truncated_support(params)?;
    Ok(family
        .factor_blocks()
        .into_iter()
        .map(|block| BlockDensity {
            family,
            params,
            anchor: anchor.clone(),
            block,
            bounds: bounds.clone(),
        })
        .collect())
}

/// Quadrature check of `integral(p) = 1` plus per-slot means and standard
/// deviations.
pub fn normalization_report(
    family: &dyn DensityFamily,
    params: &ParamPoint,
    spec: &QuadSpec,
) -> Result<NormalizationReport, ModelError> {
    let blocks = blocks_of(family, params)?;
    let rel = pure_relative(spec);
    let anchor = family.typical_microstate(params)?;
    let log_p_anchor = family.log_density(params, &anchor)?;
    if !log_p_anchor.is_finite() {
        return Err(ModelError::InvalidParameter(
            "anchor microstate has zero density".into(),
        ));
    }

    let mut integral = 1.0;
    let mut means = vec![0.0; family.micro_dim()];
    let mut stds = vec![0.0; family.micro_dim()];
    let n_blocks = blocks.len();
    for b in &blocks {
        let mass = b.mass(&rel)?;
        if !(mass.is_finite() && mass > 0.0) {
            return Err(ModelError::InvalidParameter(format!(
                "block mass {mass} is not positive"
            )));
        }
        integral *= mass;
        for (offset, slot) in b.block.micro.clone().enumerate() {
            let m1 = b.integrate_weighted(|x| x[offset], &moment_spec(spec, mass))? / mass;
            let m2 = b.integrate_weighted(|x| (x[offset] - m1) * (x[offset] - m1), &rel)? / mass;
            means[slot] = m1;
            stds[slot] = m2.max(0.0).sqrt();
        }
    }
    // Frozen factors contribute p(anchor)^(B-1) across the B block passes.
    integral /= log_p_anchor.exp().powi(n_blocks as i32 - 1);
    Ok(NormalizationReport {
        integral,
        means,
        stds,
    })
}

/// First-moment integrands change sign, so give them an absolute floor at
/// the scale of the block mass instead of a pure-relative target.
fn moment_spec(spec: &QuadSpec, mass: f64) -> QuadSpec {
    QuadSpec {
        rel_tol: spec.rel_tol,
        abs_tol: (spec.rel_tol * mass).max(f64::MIN_POSITIVE),
        max_intervals: spec.max_intervals,
    }
}

/// Relative entropy `S = -integral(p log(p/m))`, i.e. minus the
/// Kullback–Leibler divergence of `p` from the reference `m`. Zero iff the
/// densities coincide almost everywhere; divergent integrals surface as
/// quadrature errors.
pub fn relative_entropy(
    p_family: &dyn DensityFamily,
    p_params: &ParamPoint,
    m_family: &dyn DensityFamily,
    m_params: &ParamPoint,
    spec: &QuadSpec,
) -> Result<f64, ModelError> {
    if p_family.micro_dim() != m_family.micro_dim() {
        return Err(ModelError::Incompatible(format!(
            "microspace dimensions differ: {} vs {}",
            p_family.micro_dim(),
            m_family.micro_dim()
        )));
    }
    let p_blocks = blocks_of(p_family, p_params)?;
    let m_blocks = blocks_of(m_family, m_params)?;
    if p_blocks.len() != m_blocks.len()
        || p_blocks
            .iter()
            .zip(&m_blocks)
            .any(|(a, b)| a.block.micro != b.block.micro)
    {
        return Err(ModelError::Incompatible(
            "factor structures do not align between the two families".into(),
        ));
    }

    let rel = pure_relative(spec);
    let mut kl = 0.0;
    for (pb, mb) in p_blocks.iter().zip(&m_blocks) {
        let zp = pb.mass(&rel)?;
        let zm = mb.mass(&rel)?;
        if !(zp.is_finite() && zp > 0.0 && zm.is_finite() && zm > 0.0) {
            return Err(ModelError::InvalidParameter(
                "non-positive block mass in relative entropy".into(),
            ));
        }
        // integral of p_b log(p_b / m_b) with both block densities exactly
        // normalized by their masses.
        let log_ratio_shift = zp.ln() - zm.ln();
        let contribution = pb.integrate_weighted(
            |x| {
                let wp = pb.weight(x);
                let wm = mb.weight(x);
                if wm == 0.0 {
                    // p-mass where m vanishes: divergent by convention.
                    return f64::INFINITY;
                }
                wp.ln() - wm.ln() - log_ratio_shift
            },
            &moment_spec(spec, zp),
        )? / zp;
        kl += contribution;
    }
    Ok(-kl)
}

/// Uniform density on a box, the default reference for [`relative_entropy`].
#[derive(Debug, Clone)]
pub struct UniformReference {
    bounds: Vec<(f64, f64)>,
}

impl UniformReference {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self, ModelError> {
        if bounds.is_empty() {
            return Err(ModelError::InvalidParameter(
                "uniform reference needs at least one interval".into(),
            ));
        }
        for &(lo, hi) in &bounds {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(ModelError::InvalidParameter(format!(
                    "invalid uniform interval ({lo}, {hi})"
                )));
            }
        }
        Ok(Self { bounds })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self, ModelError> {
        Self::new(vec![(lo, hi)])
    }
}

impl DensityFamily for UniformReference {
    fn name(&self) -> &'static str {
        "uniform-reference"
    }

    fn chart_dim(&self) -> usize {
        0
    }

    fn micro_dim(&self) -> usize {
        self.bounds.len()
    }

    fn base_point(&self) -> ParamPoint {
        ParamPoint::new(Vec::new()).expect("empty point")
    }

    fn chart_domain(&self) -> Domain {
        Domain::new(Vec::new())
    }

    fn log_density(&self, _params: &ParamPoint, x: &[f64]) -> Result<f64, ModelError> {
        let mut ld = 0.0;
        for (&xi, &(lo, hi)) in x.iter().zip(&self.bounds) {
            if xi < lo || xi > hi {
                return Ok(f64::NEG_INFINITY);
            }
            ld -= (hi - lo).ln();
        }
        Ok(ld)
    }

    fn score(&self, _params: &ParamPoint, _x: &[f64]) -> Result<Vec<f64>, ModelError> {
        Ok(Vec::new())
    }

    fn sample(
        &self,
        _params: &ParamPoint,
        seed: u64,
        count: usize,
    ) -> Result<Vec<Vec<f64>>, ModelError> {
        if count == 0 {
            return Err(ModelError::InvalidSampleRequest(
                "count must be >= 1".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..count)
            .map(|_| {
                self.bounds
                    .iter()
                    .map(|&(lo, hi)| lo + (hi - lo) * rng.gen::<f64>())
                    .collect()
            })
            .collect())
    }

    fn truncated_support(&self, _params: &ParamPoint) -> Result<Vec<(f64, f64)>, ModelError> {
        Ok(self.bounds.clone())
    }

    fn factor_blocks(&self) -> Vec<FactorBlock> {
        (0..self.bounds.len())
            .map(|d| FactorBlock {
                micro: d..d + 1,
                chart: 0..0,
            })
            .collect()
    }

    fn typical_microstate(&self, _params: &ParamPoint) -> Result<Vec<f64>, ModelError> {
        Ok(self
            .bounds
            .iter()
            .map(|&(lo, hi)| 0.5 * (lo + hi))
            .collect())
    }
}

/// Relative entropy against a uniform reference on the given interval,
/// replicated across every microstate slot of `p`.
pub fn relative_entropy_uniform(
    p_family: &dyn DensityFamily,
    p_params: &ParamPoint,
    interval: (f64, f64),
    spec: &QuadSpec,
) -> Result<f64, ModelError> {
    let reference = UniformReference::new(vec![interval; p_family.micro_dim()])?;
    relative_entropy(
        p_family,
        p_params,
        &reference,
        &reference.base_point(),
        spec,
    )
}
