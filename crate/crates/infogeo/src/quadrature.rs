//! Adaptive Gauss–Kronrod quadrature on finite intervals.
//!
//! A 7-point Gauss / 15-point Kronrod pair supplies the per-interval value
//! and an embedded error estimate; the interval with the largest estimated
//! error is bisected until the global estimate meets the requested tolerance.
//! Unbounded supports are handled by the callers, which truncate them far
//! enough out that the discarded tail mass is negligible against every test
//! tolerance in this crate.

use thiserror::Error;

/// Abscissae of the 15-point Kronrod rule on [-1, 1] (non-negative half).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_47,
    0.0,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

/// Weights of the embedded 7-point Gauss rule (odd-indexed Kronrod nodes).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances and budget for one adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_intervals: 2048,
        }
    }
}

impl QuadSpec {
    /// Spec for the inner integral of an iterated 2-D integration, one order
    /// tighter than the outer pass so the inner error stays subdominant.
    pub fn tightened(&self) -> Self {
        Self {
            rel_tol: self.rel_tol * 0.1,
            abs_tol: self.abs_tol * 0.1,
            max_intervals: self.max_intervals,
        }
    }
}

/// Converged integral value with its accumulated error estimate.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Debug, Error)]
pub enum QuadError {
    #[error("quadrature did not converge: estimated error {achieved:e} over {intervals} intervals (requested {requested:e})")]
    NonConvergent {
        achieved: f64,
        requested: f64,
        intervals: usize,
    },
    #[error("integrand returned a non-finite value at x = {x}")]
    NonFiniteIntegrand { x: f64 },
    #[error("invalid integration interval [{a}, {b}]")]
    BadInterval { a: f64, b: f64 },
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<(f64, f64), QuadError> {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);

    let mut kronrod = 0.0;
    let mut gauss = 0.0;
    for (i, (&x, &wk)) in XGK.iter().zip(WGK.iter()).enumerate() {
        // The center node (i == 7) is counted once; symmetric pairs twice.
        let (fa, fb) = if x == 0.0 {
            (f(mid), 0.0)
        } else {
            (f(mid - half * x), f(mid + half * x))
        };
        if !fa.is_finite() || !fb.is_finite() {
            let x_bad = if fa.is_finite() {
                mid + half * x
            } else {
                mid - half * x
            };
            return Err(QuadError::NonFiniteIntegrand { x: x_bad });
        }
        let s = fa + fb;
        kronrod += wk * s;
        if i % 2 == 1 {
            // Odd Kronrod indices (and the center, i == 7) are the Gauss nodes.
            gauss += WG[i / 2] * s;
        }
    }

    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    Ok((value, error))
}

/// Adaptively integrate `f` over the finite interval `[a, b]`.
///
/// The interval may be given in either orientation; the result carries the
/// usual sign. Returns an error when the error estimate cannot be pushed
/// below `max(abs_tol, rel_tol * |integral|)` within the interval budget.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    spec: &QuadSpec,
) -> Result<QuadResult, QuadError> {
    if !a.is_finite() || !b.is_finite() {
        return Err(QuadError::BadInterval { a, b });
    }
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            intervals: 0,
        });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };

    let (value, error) = gauss_kronrod(&f, lo, hi)?;
    let mut segments = vec![Segment {
        a: lo,
        b: hi,
        value,
        error,
    }];

    loop {
        let total: f64 = segments.iter().map(|s| s.value).sum();
        let err: f64 = segments.iter().map(|s| s.error).sum();
        let target = spec.abs_tol.max(spec.rel_tol * total.abs());
        if err <= target {
            return Ok(QuadResult {
                value: sign * total,
                error: err,
                intervals: segments.len(),
            });
        }
        if segments.len() >= spec.max_intervals {
            return Err(QuadError::NonConvergent {
                achieved: err,
                requested: target,
                intervals: segments.len(),
            });
        }

        let worst = segments
            .iter()
            .enumerate()
            .max_by(|(_, s), (_, t)| s.error.partial_cmp(&t.error).expect("finite errors"))
            .map(|(i, _)| i)
            .expect("nonempty segment list");
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // Interval at floating-point resolution; keep its estimate.
            segments.push(seg);
            return Err(QuadError::NonConvergent {
                achieved: err,
                requested: target,
                intervals: segments.len(),
            });
        }
        let (v1, e1) = gauss_kronrod(&f, seg.a, mid)?;
        let (v2, e2) = gauss_kronrod(&f, mid, seg.b)?;
        segments.push(Segment {
            a: seg.a,
            b: mid,
            value: v1,
            error: e1,
        });
        segments.push(Segment {
            a: mid,
            b: seg.b,
            value: v2,
            error: e2,
        });
    }
}

/// Iterated 2-D integration over the rectangle `[ax, bx] x [ay, by]`.
///
/// The inner (x) integral runs at a tightened tolerance for every outer (y)
/// node. Inner failures surface as `NonFiniteIntegrand` at the outer node.
pub fn integrate2<F: Fn(f64, f64) -> f64>(
    f: F,
    ax: f64,
    bx: f64,
    ay: f64,
    by: f64,
    spec: &QuadSpec,
) -> Result<QuadResult, QuadError> {
    let inner_spec = spec.tightened();
    integrate(
        |y| match integrate(|x| f(x, y), ax, bx, &inner_spec) {
            Ok(r) => r.value,
            Err(_) => f64::NAN,
        },
        ay,
        by,
        spec,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| 3.0 * x * x, 0.0, 2.0, &QuadSpec::default()).unwrap();
        assert_relative_eq!(r.value, 8.0, max_relative = 1e-14);
    }

    #[test]
    fn oriented_interval_flips_sign() {
        let r = integrate(|x| x, 1.0, 0.0, &QuadSpec::default()).unwrap();
        assert_relative_eq!(r.value, -0.5, max_relative = 1e-14);
    }

    #[test]
    fn gaussian_mass_on_truncated_support() {
        let r = integrate(
            |x| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt(),
            -12.0,
            12.0,
            &QuadSpec::default(),
        )
        .unwrap();
        assert_relative_eq!(r.value, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn sharp_peak_needs_subdivision() {
        // 1/sigma^2-type integrand over five decades of scale.
        let r = integrate(|x| x.powi(-2), 1e-5, 1.0, &QuadSpec::default()).unwrap();
        assert_relative_eq!(r.value, 1e5 - 1.0, max_relative = 1e-9);
        assert!(r.intervals > 4);
    }

    #[test]
    fn empty_interval_is_zero() {
        let r = integrate(|x| x.exp(), 1.5, 1.5, &QuadSpec::default()).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let err = integrate(|x| 1.0 / x, -1.0, 1.0, &QuadSpec::default());
        assert!(matches!(
            err,
            Err(QuadError::NonFiniteIntegrand { .. }) | Err(QuadError::NonConvergent { .. })
        ));
    }

    #[test]
    fn product_density_normalizes_in_2d() {
        // Unit bivariate normal with correlation 0.5.
        let r = 0.5f64;
        let norm = 1.0 / (2.0 * std::f64::consts::PI * (1.0 - r * r).sqrt());
        let q = integrate2(
            |x, y| norm * (-(x * x - 2.0 * r * x * y + y * y) / (2.0 * (1.0 - r * r))).exp(),
            -12.0,
            12.0,
            -12.0,
            12.0,
            &QuadSpec {
                rel_tol: 1e-9,
                ..QuadSpec::default()
            },
        )
        .unwrap();
        assert_relative_eq!(q.value, 1.0, max_relative = 1e-8);
    }
}
