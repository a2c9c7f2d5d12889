//! Invariant checks across modules: normalization and score identities at
//! random parameter points, random-variable invariance of the Fisher
//! metric, curvature symmetries, scalar invariance under pullback, entropy
//! slopes over the (l, rate) cross, and algebraic properties under
//! randomized inputs.

use infogeo::dynamics::{
    gaussian_geodesic_initial_state, integrate_geodesic, GaussianGeodesicParams, Tolerances,
};
use infogeo::geometry::{
    analytic_metric, curvature, fisher_metric, pullback_metric, Domain, FdPolicy, Reparametrization,
};
use infogeo::ige::{fit_growth, ige_trace, GrowthModel};
use infogeo::models::{
    normalization_report, pushforward, ChaoticComposite, CorrelatedGaussianModel, DensityFamily,
    ExponentialModel, GaussianProductModel, IntegrableComposite, MonotoneMap, ParamPoint,
    WeibullModel, WignerDysonModel,
};
use infogeo::quadrature::{integrate, QuadSpec};
use infogeo::spectra::{ks_statistic, mean_normalized_spacings, LsdModel, SpacingSample};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn random_in(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.gen::<f64>()
}

struct FamilyCase {
    label: &'static str,
    family: Box<dyn DensityFamily>,
    ranges: Vec<(f64, f64)>,
}

fn family_cases() -> Vec<FamilyCase> {
    vec![
        FamilyCase {
            label: "gaussian-product(l=1)",
            family: Box::new(GaussianProductModel::new(1, vec![0.0; 3], vec![1.0; 3]).unwrap()),
            ranges: vec![
                (-2.0, 2.0),
                (0.4, 2.5),
                (-2.0, 2.0),
                (0.4, 2.5),
                (-2.0, 2.0),
                (0.4, 2.5),
            ],
        },
        FamilyCase {
            label: "correlated-gaussian(r=0.6)",
            family: Box::new(CorrelatedGaussianModel::new(0.0, 1.0, 0.0, 1.0, 0.6).unwrap()),
            ranges: vec![(-1.5, 1.5), (0.5, 2.0), (-1.5, 1.5), (0.5, 2.0)],
        },
        FamilyCase {
            label: "exponential",
            family: Box::new(ExponentialModel::new(1.0).unwrap()),
            ranges: vec![(0.2, 5.0)],
        },
        FamilyCase {
            label: "weibull(n=0.7)",
            family: Box::new(WeibullModel::new(1.0, 0.7).unwrap()),
            ranges: vec![(0.3, 3.0)],
        },
        FamilyCase {
            label: "wigner-dyson",
            family: Box::new(WignerDysonModel::new(1.0).unwrap()),
            ranges: vec![(0.3, 4.0)],
        },
        FamilyCase {
            label: "integrable-composite",
            family: Box::new(IntegrableComposite::new(1.0, 1.0).unwrap()),
            ranges: vec![(0.3, 4.0), (0.3, 4.0)],
        },
        FamilyCase {
            label: "chaotic-composite",
            family: Box::new(ChaoticComposite::new(1.0, 0.0, 1.0).unwrap()),
            ranges: vec![(0.3, 4.0), (-2.0, 2.0), (0.4, 2.5)],
        },
    ]
}

#[test]
fn normalization_holds_at_random_parameter_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    // 100 random in-domain points shared across the family list.
    let spec = QuadSpec {
        rel_tol: 1e-9,
        ..QuadSpec::default()
    };
    let cases = family_cases();
    let per_family = 100 / cases.len() + 1;
    for case in &cases {
        for _ in 0..per_family {
            let coords: Vec<f64> = case
                .ranges
                .iter()
                .map(|&(lo, hi)| random_in(&mut rng, lo, hi))
                .collect();
            let point = ParamPoint::new(coords).unwrap();
            let rep = normalization_report(case.family.as_ref(), &point, &spec)
                .unwrap_or_else(|e| panic!("{}: {e}", case.label));
            assert!(
                (rep.integral - 1.0).abs() < 1e-6,
                "{} at {:?}: integral {}",
                case.label,
                point.coords(),
                rep.integral
            );
        }
    }
}

#[test]
fn score_expectation_vanishes() {
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    let quad = QuadSpec {
        rel_tol: 1e-9,
        abs_tol: 1e-12,
        max_intervals: 2048,
    };
    for case in &family_cases() {
        for _ in 0..5 {
            let coords: Vec<f64> = case
                .ranges
                .iter()
                .map(|&(lo, hi)| random_in(&mut rng, lo, hi))
                .collect();
            let params = ParamPoint::new(coords).unwrap();
            let family = case.family.as_ref();
            let typical = family.typical_microstate(&params).unwrap();
            let bounds = family.truncated_support(&params).unwrap();
            for block in family.factor_blocks() {
                if block.micro.len() != 1 {
                    continue; // 2-D blocks are covered through their Fisher tests
                }
                let d = block.micro.start;
                let (lo, hi) = bounds[d];
                let z = integrate(
                    |x| {
                        let mut micro = typical.clone();
                        micro[d] = x;
                        family
                            .log_density(&params, &micro)
                            .map(|lp| if lp.is_finite() { lp.exp() } else { 0.0 })
                            .unwrap_or(0.0)
                    },
                    lo,
                    hi,
                    &quad,
                )
                .unwrap()
                .value;
                for i in block.chart.clone() {
                    let m = integrate(
                        |x| {
                            let mut micro = typical.clone();
                            micro[d] = x;
                            let lp = family.log_density(&params, &micro).unwrap();
                            if !lp.is_finite() {
                                return 0.0;
                            }
                            lp.exp() * family.score(&params, &micro).unwrap()[i]
                        },
                        lo,
                        hi,
                        &quad,
                    )
                    .unwrap()
                    .value;
                    assert!(
                        (m / z).abs() < 1e-6,
                        "{}: E[score_{i}] = {} at {:?}",
                        case.label,
                        m / z,
                        params.coords()
                    );
                }
            }
        }
    }
}

#[test]
fn monte_carlo_score_mean_is_within_standard_error() {
    // Sampling route for the score identity on the Wigner-Dyson family.
    let family = WignerDysonModel::new(1.0).unwrap();
    let p = family.base_point();
    let draws = family.sample(&p, 314, 100_000).unwrap();
    let scores: Vec<f64> = draws
        .iter()
        .map(|x| family.score(&p, x).unwrap()[0])
        .collect();
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let var = scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0);
    let stderr = (var / n).sqrt();
    assert!(
        mean.abs() < 3.0 * stderr,
        "score mean {mean} vs standard error {stderr}"
    );
}

#[test]
fn fisher_metric_invariant_under_random_variable_maps() {
    let mut rng = ChaCha8Rng::seed_from_u64(300);
    let spec = QuadSpec {
        rel_tol: 1e-9,
        ..QuadSpec::default()
    };
    for _ in 0..6 {
        let theta = random_in(&mut rng, 0.5, 3.0);
        let zeta = random_in(&mut rng, 0.4, 2.0);
        let n = random_in(&mut rng, 0.8, 2.5);
        let base = Arc::new(ExponentialModel::new(theta).unwrap());
        let params = base.base_point();
        let direct = fisher_metric(base.as_ref(), &params, &spec).unwrap();
        let mapped = pushforward(
            base.clone(),
            &params,
            MonotoneMap::power_law(zeta, n).unwrap(),
        )
        .unwrap();
        let transformed = fisher_metric(&mapped, &params, &spec).unwrap();
        let a = direct.matrix[(0, 0)];
        let b = transformed.matrix[(0, 0)];
        assert!(
            (a - b).abs() <= 1e-6 * a.abs().max(1.0),
            "theta={theta}, zeta={zeta}, n={n}: {a} vs {b}"
        );
    }
}

#[test]
fn exponential_to_wigner_dyson_pushforward_pointwise() {
    let mut rng = ChaCha8Rng::seed_from_u64(400);
    for _ in 0..5 {
        let d_spacing = random_in(&mut rng, 0.4, 2.5);
        let theta = random_in(&mut rng, 0.5, 2.0);
        let lambda = 2.0 * d_spacing / std::f64::consts::PI.sqrt();
        let zeta = theta / (lambda * lambda);
        let base = Arc::new(ExponentialModel::new(theta).unwrap());
        let params = base.base_point();
        let pushed =
            pushforward(base, &params, MonotoneMap::power_law(zeta, 2.0).unwrap()).unwrap();
        let wd = WignerDysonModel::new(d_spacing).unwrap();
        let wd_params = wd.base_point();
        for k in 1..=200 {
            let y = 0.02 * k as f64 * d_spacing;
            let a = pushed.log_density(&params, &[y]).unwrap();
            let b = wd.log_density(&wd_params, &[y]).unwrap();
            assert!(
                (a - b).abs() < 1e-10,
                "D={d_spacing}, theta={theta}, y={y}: {a} vs {b}"
            );
        }
    }
}

#[test]
fn sampling_is_deterministic_across_families() {
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    for case in &family_cases() {
        let coords: Vec<f64> = case
            .ranges
            .iter()
            .map(|&(lo, hi)| random_in(&mut rng, lo, hi))
            .collect();
        let params = ParamPoint::new(coords).unwrap();
        let a = case.family.sample(&params, 9001, 257).unwrap();
        let b = case.family.sample(&params, 9001, 257).unwrap();
        assert_eq!(a, b, "{}", case.label);
        let c = case.family.sample(&params, 9002, 257).unwrap();
        assert_ne!(a, c, "{}: different seeds must differ", case.label);
    }
}

#[test]
fn riemann_first_and_last_pair_antisymmetry() {
    // Generic anisotropic 4-dim case: the fixed-correlation Gaussian.
    let family = CorrelatedGaussianModel::new(0.3, 1.1, -0.2, 0.8, 0.5).unwrap();
    let field = analytic_metric(&family).unwrap();
    let bundle = curvature(&field, &family.base_point(), &FdPolicy::default()).unwrap();
    let n = 4;
    let scale = bundle.riemann_lower.max_abs().max(1.0);
    for mu in 0..n {
        for nu in 0..n {
            for rho in 0..n {
                for sigma in 0..n {
                    let r = bundle.riemann_lower.get(mu, nu, rho, sigma);
                    let swap_last = bundle.riemann_lower.get(mu, nu, sigma, rho);
                    assert!(
                        (r + swap_last).abs() < 1e-6 * scale,
                        "last-pair antisymmetry at ({mu},{nu},{rho},{sigma})"
                    );
                    let swap_first = bundle.riemann_lower.get(nu, mu, rho, sigma);
                    assert!(
                        (r + swap_first).abs() < 1e-6 * scale,
                        "first-pair antisymmetry at ({mu},{nu},{rho},{sigma}): {r} vs {swap_first}"
                    );
                }
            }
        }
    }
    // Ricci symmetry rides along.
    for mu in 0..n {
        for nu in 0..n {
            assert!(
                (bundle.ricci[(mu, nu)] - bundle.ricci[(nu, mu)]).abs() < 1e-6,
                "Ricci symmetry at ({mu},{nu})"
            );
        }
    }
}

#[test]
fn weyl_vanishes_on_two_dimensional_fields() {
    let fields: Vec<(&str, infogeo::geometry::MetricField)> = vec![
        (
            "gaussian block",
            analytic_metric(&GaussianProductModel::single(0.0, 1.0).unwrap()).unwrap(),
        ),
        (
            "integrable composite",
            analytic_metric(&IntegrableComposite::new(1.0, 1.0).unwrap()).unwrap(),
        ),
    ];
    let points = [vec![0.4, 1.3], vec![1.9, 0.7]];
    for (label, field) in &fields {
        for coords in &points {
            let p = ParamPoint::new(coords.clone()).unwrap();
            let bundle = curvature(field, &p, &FdPolicy::default()).unwrap();
            assert!(
                bundle.weyl_projective.max_abs() < 1e-6,
                "{label} at {coords:?}: max |W| = {}",
                bundle.weyl_projective.max_abs()
            );
        }
    }
}

#[test]
fn scalar_curvature_is_invariant_under_pullback() {
    // Log-reparametrize the sigma coordinate of the Gaussian block.
    let family = GaussianProductModel::single(0.0, 1.0).unwrap();
    let base = analytic_metric(&family).unwrap();
    let reparam = Reparametrization::new(
        Domain::unbounded(2),
        |p: &ParamPoint| ParamPoint::new(vec![p.coords()[0], p.coords()[1].exp()]).unwrap(),
        |p: &ParamPoint| DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, p.coords()[1].exp()]),
    );
    let pulled = pullback_metric(&base, &reparam).unwrap();
    for &(mu, u) in &[(0.0, 0.0), (1.2, -0.4), (-0.7, 0.9)] {
        let hat = ParamPoint::new(vec![mu, u]).unwrap();
        let orig = ParamPoint::new(vec![mu, u.exp()]).unwrap();
        let s_pulled = curvature(&pulled, &hat, &FdPolicy::default())
            .unwrap()
            .scalar;
        let s_base = curvature(&base, &orig, &FdPolicy::default())
            .unwrap()
            .scalar;
        assert!(
            (s_pulled - s_base).abs() < 1e-4,
            "scalar at mu={mu}, u={u}: {s_pulled} vs {s_base}"
        );
    }
}

#[test]
fn entropy_slope_band_over_l_rate_cross() {
    // Remaining (l, rate) combinations; the acceptance suite carries
    // (1, 0.5) and (2, 0.3).
    for &(l, lam) in &[(1usize, 0.3), (2usize, 0.5)] {
        let family = GaussianProductModel::new(l, vec![0.0; 3 * l], vec![1.0; 3 * l]).unwrap();
        let field = analytic_metric(&family).unwrap();
        let params = GaussianGeodesicParams::new(2.0, lam).unwrap();
        let initial = gaussian_geodesic_initial_state(&params, 3 * l).unwrap();
        let tau_end = 20.0 / lam;
        let geo = integrate_geodesic(&field, &initial, tau_end, &Tolerances::default()).unwrap();
        let grid: Vec<f64> = (0..512).map(|k| tau_end * k as f64 / 511.0).collect();
        let trace = ige_trace(&field, &geo, &grid).unwrap();
        let fit = fit_growth(&trace, 0.5).unwrap();
        let expected = 3.0 * l as f64 * lam;
        assert_eq!(fit.model, GrowthModel::Linear, "l={l}, lam={lam}");
        assert!(
            fit.slope >= 0.95 * expected && fit.slope <= 1.05 * expected,
            "l={l}, lam={lam}: slope {} outside [0.95, 1.05] x {expected}",
            fit.slope
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quadrature_integrates_cubics_exactly(
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        c in -3.0f64..3.0,
        lo in -5.0f64..0.0,
        hi in 0.1f64..5.0,
    ) {
        let f = |x: f64| a * x * x * x + b * x + c;
        let exact = a * (hi.powi(4) - lo.powi(4)) / 4.0 + b * (hi * hi - lo * lo) / 2.0 + c * (hi - lo);
        let got = integrate(f, lo, hi, &QuadSpec::default()).unwrap().value;
        prop_assert!((got - exact).abs() < 1e-10 * exact.abs().max(1.0));
    }

    #[test]
    fn pushforward_density_matches_change_of_variable(
        theta in 0.5f64..3.0,
        zeta in 0.4f64..2.0,
        n in 0.6f64..2.5,
        ys in proptest::collection::vec(0.05f64..4.0, 8),
    ) {
        let base = Arc::new(ExponentialModel::new(theta).unwrap());
        let params = base.base_point();
        let map = MonotoneMap::power_law(zeta, n).unwrap();
        let pushed = pushforward(base.clone(), &params, map.clone()).unwrap();
        for &y in &ys {
            let x = map.inverse(y);
            let direct = base.log_density(&params, &[x]).unwrap() - map.derivative(x).abs().ln();
            let got = pushed.log_density(&params, &[y]).unwrap();
            prop_assert!((got - direct).abs() < 1e-10);
        }
    }

    #[test]
    fn mean_normalized_spacings_have_unit_mean(
        mut levels in proptest::collection::vec(-50.0f64..50.0, 33..120),
    ) {
        levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
        levels.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        prop_assume!(levels.len() >= 3);
        let spacings = mean_normalized_spacings(&levels);
        let mean = spacings.iter().sum::<f64>() / spacings.len() as f64;
        prop_assert!((mean - 1.0).abs() < 1e-10);
    }

    #[test]
    fn ks_statistic_is_bounded_and_permutation_invariant(
        mut xs in proptest::collection::vec(0.001f64..6.0, 16..64),
    ) {
        let sample = SpacingSample::from_spacings(xs.clone());
        let d = ks_statistic(&sample, &LsdModel::Goe).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        xs.reverse();
        let d2 = ks_statistic(&SpacingSample::from_spacings(xs), &LsdModel::Goe).unwrap();
        prop_assert!((d - d2).abs() < 1e-12);
    }

    #[test]
    fn metric_norm_is_homogeneous(
        sigma in 0.3f64..3.0,
        j0 in -4.0f64..4.0,
        j1 in -4.0f64..4.0,
        scale in -5.0f64..5.0,
    ) {
        let family = GaussianProductModel::single(0.0, 1.0).unwrap();
        let field = analytic_metric(&family).unwrap();
        let p = ParamPoint::new(vec![0.0, sigma]).unwrap();
        let value = field.value(&p).unwrap();
        let base = value.norm(&[j0, j1]);
        let scaled = value.norm(&[scale * j0, scale * j1]);
        prop_assert!((scaled - scale.abs() * base).abs() < 1e-9 * (1.0 + base));
    }
}
