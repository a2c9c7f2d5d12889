//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (visible under `cargo test -- --nocapture`). Criteria cover curvature
//! constants, metric pipeline agreement, geodesic and Jacobi oracles,
//! entropic growth rates and regime classification, spectral regime
//! discrimination, and spacing-surmise self-consistency.

use infogeo::dynamics::{
    analytic_gaussian_geodesic, analytic_gaussian_geodesic_velocity, estimate_lambda_j,
    gaussian_geodesic_initial_state, initial_jacobi_from_family, integrate_geodesic, integrate_jlc,
    isotropic_jacobi, jacobi_from_family, jacobi_intensity, DynamicsError, GaussianGeodesicParams,
    GeodesicState, JacobiField, Tolerances,
};
use infogeo::geometry::{
    analytic_metric, curvature, fisher_metric, pullback_metric, Domain, FdPolicy, Reparametrization,
};
use infogeo::ige::{classify_regime, fit_growth, ige_trace, GrowthModel, Regime};
use infogeo::models::{
    ChaoticComposite, CorrelatedGaussianModel, DensityFamily, ExponentialModel,
    GaussianProductModel, IntegrableComposite, ParamPoint, WeibullModel, WignerDysonModel,
};
use infogeo::quadrature::{integrate, QuadSpec};
use infogeo::spectra::{
    analyze_chain, fit_brody, lsd_pdf, sample_lsd, LsdModel, SectorChoice, SpacingSample,
    SpinChainSpec,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn report(criterion: usize, name: &str, failures: Vec<String>) {
    if failures.is_empty() {
        println!("criterion {criterion} ({name}): PASS");
    } else {
        println!("criterion {criterion} ({name}): FAIL");
        for f in &failures {
            println!("  - {f}");
        }
        panic!(
            "criterion {criterion} ({name}) failed:\n{}",
            failures.join("\n")
        );
    }
}

fn uniform_grid(t0: f64, t1: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|k| t0 + (t1 - t0) * k as f64 / (points - 1) as f64)
        .collect()
}

#[test]
fn criterion_01_product_manifold_curvature_constants() {
    let mut failures = Vec::new();
    let start = Instant::now();
    for l in 1..=3usize {
        let family = GaussianProductModel::new(l, vec![0.2; 3 * l], vec![1.3; 3 * l]).unwrap();
        let field = analytic_metric(&family).unwrap();
        let bundle = curvature(&field, &family.base_point(), &FdPolicy::default()).unwrap();
        let expected = -3.0 * l as f64;
        if (bundle.scalar - expected).abs() > 1e-4 {
            failures.push(format!(
                "l = {l}: scalar {} differs from {expected} by more than 1e-4",
                bundle.scalar
            ));
        }
    }
    let elapsed = start.elapsed();
    if elapsed.as_secs_f64() > 10.0 {
        failures.push(format!("l in 1..=3 took {elapsed:?}, budget is 10 s"));
    }
    report(1, "product-manifold scalar = -3l", failures);
}

#[test]
fn criterion_02_correlated_gaussian_scalar_target_table() {
    // Target table from the source closed form
    // R(r) = -(8 (r^2 - 2) + 2 r^2 (3 r^2 - 2)) / (8 (r^2 - 1)).
    // The direct curvature of the correlated Fisher metric is -2 for every
    // admissible r (confirmed symbolically and by the quadrature/analytic
    // metric agreement in criterion 3), so the nonzero-r rows of this table
    // are expected to fail; see the review notes accompanying the build.
    let closed_form =
        |r: f64| -(8.0 * (r * r - 2.0) + 2.0 * r * r * (3.0 * r * r - 2.0)) / (8.0 * (r * r - 1.0));
    let mut failures = Vec::new();
    for &r in &[-0.9, -0.5, 0.0, 0.5, 0.9] {
        let family = CorrelatedGaussianModel::new(0.0, 1.0, 0.0, 1.0, r).unwrap();
        let field = analytic_metric(&family).unwrap();
        let bundle = curvature(&field, &family.base_point(), &FdPolicy::default()).unwrap();
        let target = closed_form(r);
        if (bundle.scalar - target).abs() > 1e-4 {
            failures.push(format!(
                "r = {r}: computed scalar {:.6} vs closed-form target {:.6} (direct curvature of this metric is -2 for every r)",
                bundle.scalar, target
            ));
        }
    }
    report(
        2,
        "correlated-Gaussian scalar vs closed-form table",
        failures,
    );
}

struct AgreementCase {
    label: String,
    family: Box<dyn DensityFamily>,
    points: Vec<ParamPoint>,
}

fn random_points(rng: &mut ChaCha8Rng, ranges: &[(f64, f64)], count: usize) -> Vec<ParamPoint> {
    (0..count)
        .map(|_| {
            ParamPoint::new(
                ranges
                    .iter()
                    .map(|&(lo, hi)| lo + (hi - lo) * rng.gen::<f64>())
                    .collect(),
            )
            .unwrap()
        })
        .collect()
}

#[test]
fn criterion_03_metric_pipelines_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut cases: Vec<AgreementCase> = vec![AgreementCase {
        label: "gaussian-product(l=1)".into(),
        family: Box::new(GaussianProductModel::new(1, vec![0.0; 3], vec![1.0; 3]).unwrap()),
        points: random_points(
            &mut rng,
            &[
                (-2.0, 2.0),
                (0.5, 2.5),
                (-2.0, 2.0),
                (0.5, 2.5),
                (-2.0, 2.0),
                (0.5, 2.5),
            ],
            50,
        ),
    }];
    cases.push(AgreementCase {
        label: "correlated-gaussian(r=0.5)".into(),
        family: Box::new(CorrelatedGaussianModel::new(0.0, 1.0, 0.0, 1.0, 0.5).unwrap()),
        points: random_points(
            &mut rng,
            &[(-1.5, 1.5), (0.6, 2.0), (-1.5, 1.5), (0.6, 2.0)],
            50,
        ),
    });
    cases.push(AgreementCase {
        label: "exponential".into(),
        family: Box::new(ExponentialModel::new(1.0).unwrap()),
        points: random_points(&mut rng, &[(0.3, 5.0)], 50),
    });
    cases.push(AgreementCase {
        label: "weibull(n=2)".into(),
        family: Box::new(WeibullModel::new(1.0, 2.0).unwrap()),
        points: random_points(&mut rng, &[(0.3, 3.0)], 50),
    });
    cases.push(AgreementCase {
        label: "weibull(n=0.8)".into(),
        family: Box::new(WeibullModel::new(1.0, 0.8).unwrap()),
        points: random_points(&mut rng, &[(0.3, 3.0)], 50),
    });
    cases.push(AgreementCase {
        label: "wigner-dyson".into(),
        family: Box::new(WignerDysonModel::new(1.0).unwrap()),
        points: random_points(&mut rng, &[(0.3, 4.0)], 50),
    });
    cases.push(AgreementCase {
        label: "integrable-composite".into(),
        family: Box::new(IntegrableComposite::new(1.0, 1.0).unwrap()),
        points: random_points(&mut rng, &[(0.3, 4.0), (0.3, 4.0)], 50),
    });
    cases.push(AgreementCase {
        label: "chaotic-composite".into(),
        family: Box::new(ChaoticComposite::new(1.0, 0.0, 1.0).unwrap()),
        points: random_points(&mut rng, &[(0.3, 4.0), (-2.0, 2.0), (0.4, 2.5)], 50),
    });

    let quad = QuadSpec {
        rel_tol: 1e-9,
        ..QuadSpec::default()
    };
    let mut failures = Vec::new();
    for case in &cases {
        let analytic = analytic_metric(case.family.as_ref()).unwrap();
        let mut worst: f64 = 0.0;
        for point in &case.points {
            let a = analytic.value(point).unwrap();
            let q = fisher_metric(case.family.as_ref(), point, &quad).unwrap();
            let n = a.matrix.nrows();
            for i in 0..n {
                for j in 0..n {
                    let denom = a.matrix[(i, j)].abs().max(1.0);
                    worst = worst.max((a.matrix[(i, j)] - q.matrix[(i, j)]).abs() / denom);
                }
            }
        }
        if worst > 1e-6 {
            failures.push(format!(
                "{}: worst quadrature/analytic discrepancy {worst:.3e} exceeds 1e-6",
                case.label
            ));
        }
    }

    // Pullback route: theta(phi) = 4 phi^2 lam / pi applied to 1/theta^2
    // must give exactly 4/phi^2.
    let lam = 0.7;
    let base = analytic_metric(&ExponentialModel::new(1.0).unwrap()).unwrap();
    let reparam = Reparametrization::new(
        Domain::new(vec![(0.0, f64::INFINITY)]),
        move |p: &ParamPoint| {
            ParamPoint::new(vec![
                4.0 * p.coords()[0].powi(2) * lam / std::f64::consts::PI,
            ])
            .unwrap()
        },
        move |p: &ParamPoint| {
            DMatrix::from_element(1, 1, 8.0 * p.coords()[0] * lam / std::f64::consts::PI)
        },
    );
    let pulled = pullback_metric(&base, &reparam).unwrap();
    for &phi in &[0.4, 1.0, 1.7, 3.1] {
        let g = pulled.matrix(&ParamPoint::new(vec![phi]).unwrap()).unwrap();
        let expected = 4.0 / (phi * phi);
        if (g[(0, 0)] - expected).abs() > 1e-10 * expected.max(1.0) {
            failures.push(format!(
                "pullback at phi = {phi}: {} vs {expected}",
                g[(0, 0)]
            ));
        }
    }
    report(
        3,
        "quadrature vs analytic metrics, pullback route",
        failures,
    );
}

#[test]
fn criterion_04_geodesic_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let family = GaussianProductModel::single(0.0, 1.0).unwrap();
    let field = analytic_metric(&family).unwrap();
    let tol = Tolerances {
        abs: 1e-11,
        rel: 1e-11,
    };
    let mut failures = Vec::new();
    for case in 0..20 {
        let xi = 0.8 + 2.7 * rng.gen::<f64>();
        let lam = 0.25 + 0.95 * rng.gen::<f64>();
        let params = GaussianGeodesicParams::new(xi, lam).unwrap();
        let initial = gaussian_geodesic_initial_state(&params, 1).unwrap();
        let traj = match integrate_geodesic(&field, &initial, 5.0, &tol) {
            Ok(t) => t,
            Err(e) => {
                failures.push(format!("case {case} (xi={xi:.3}, lam={lam:.3}): {e}"));
                continue;
            }
        };
        let mut worst: f64 = 0.0;
        for k in 0..=100 {
            let tau = 0.05 * k as f64;
            let s = traj.state_at(tau).unwrap();
            let (mu, sigma) = analytic_gaussian_geodesic(&params, tau);
            worst = worst.max((s.point.coords()[0] - mu).abs());
            worst = worst.max((s.point.coords()[1] - sigma).abs());
        }
        if worst > 1e-6 {
            failures.push(format!(
                "case {case} (xi={xi:.3}, lam={lam:.3}): worst deviation {worst:.3e}"
            ));
        }
        if traj.max_speed_drift() > 1e-6 {
            failures.push(format!(
                "case {case}: speed drift {:.3e} exceeds 1e-6",
                traj.max_speed_drift()
            ));
        }
    }
    report(4, "numeric geodesics reproduce the closed form", failures);
}

#[test]
fn criterion_05_jacobi_growth_and_oracle() {
    let family = GaussianProductModel::new(1, vec![0.0; 3], vec![1.0; 3]).unwrap();
    let field = analytic_metric(&family).unwrap();
    let xi = 2.0;
    let tol = Tolerances::default();
    let mut failures = Vec::new();

    for &lam in &[0.3, 0.5] {
        let initial_family = |l: f64| -> Result<GeodesicState, DynamicsError> {
            gaussian_geodesic_initial_state(&GaussianGeodesicParams::new(xi, l)?, 3)
        };
        let tau_end = 10.0 / lam;
        let base = match integrate_geodesic(&field, &initial_family(lam).unwrap(), tau_end, &tol) {
            Ok(t) => t,
            Err(e) => {
                failures.push(format!("lam = {lam}: geodesic failed: {e}"));
                continue;
            }
        };
        let j0 = initial_jacobi_from_family(&initial_family, lam, 1e-5 * lam).unwrap();
        let jlc = match integrate_jlc(&field, &base, &j0, &tol) {
            Ok(t) => t,
            Err(e) => {
                failures.push(format!("lam = {lam}: deviation equation failed: {e}"));
                continue;
            }
        };
        let mut series = Vec::new();
        for &tau in &jlc.grid() {
            let state = jlc.state_at(tau).unwrap();
            let j = jlc.jacobi_at(tau).unwrap();
            series.push((tau, jacobi_intensity(&field, &state.point, &j).unwrap()));
        }
        let fitted = estimate_lambda_j(&series, 0.5).unwrap();
        if (fitted - lam).abs() > 0.05 * lam {
            failures.push(format!(
                "lam = {lam}: fitted intensity exponent {fitted:.5} outside the 5% band"
            ));
        }

        // Finite-difference family oracle over tau <= 3.
        let grid = uniform_grid(0.0, 3.0, 31);
        let oracle = jacobi_from_family(&field, &initial_family, lam, 1e-4, &grid, &tol).unwrap();
        for (k, &tau) in grid.iter().enumerate().skip(1) {
            let state = jlc.state_at(tau).unwrap();
            let j = jlc.jacobi_at(tau).unwrap();
            let a = jacobi_intensity(&field, &state.point, &j).unwrap();
            let b = jacobi_intensity(&field, &state.point, &oracle[k]).unwrap();
            if (a - b).abs() > 1e-3 * b.abs().max(1e-12) {
                failures.push(format!(
                    "lam = {lam}, tau = {tau:.2}: deviation-equation intensity {a:.8} vs family oracle {b:.8}"
                ));
                break;
            }
        }
    }
    report(5, "Jacobi intensity growth and family oracle", failures);
}

#[test]
fn criterion_06_entropy_growth_slope() {
    let mut failures = Vec::new();
    for &(l, lam) in &[(1usize, 0.5), (2usize, 0.3)] {
        let start = Instant::now();
        let family = GaussianProductModel::new(l, vec![0.0; 3 * l], vec![1.0; 3 * l]).unwrap();
        let field = analytic_metric(&family).unwrap();
        let params = GaussianGeodesicParams::new(2.0, lam).unwrap();
        let initial = gaussian_geodesic_initial_state(&params, 3 * l).unwrap();
        let tau_end = 20.0 / lam;
        let geo = integrate_geodesic(&field, &initial, tau_end, &Tolerances::default()).unwrap();
        let grid = uniform_grid(0.0, tau_end, 512);
        let trace = ige_trace(&field, &geo, &grid).unwrap();
        let fit = fit_growth(&trace, 0.5).unwrap();
        let expected = 3.0 * l as f64 * lam;
        if fit.model != GrowthModel::Linear {
            failures.push(format!("l = {l}, lam = {lam}: selected {:?}", fit.model));
        }
        if (fit.slope - expected).abs() > 0.05 * expected {
            failures.push(format!(
                "l = {l}, lam = {lam}: slope {:.4} outside 5% of {expected}",
                fit.slope
            ));
        }
        let elapsed = start.elapsed();
        if elapsed.as_secs_f64() > 60.0 {
            failures.push(format!(
                "l = {l}, lam = {lam}: configuration took {elapsed:?}, budget 60 s"
            ));
        }
    }
    report(6, "entropy slope = 3 l lambda", failures);
}

#[test]
fn criterion_07_regime_classification() {
    let mut failures = Vec::new();

    // Integrable composite: logarithmic growth with coefficient 2.
    {
        let family = IntegrableComposite::new(1.0, 1.0).unwrap();
        let field = analytic_metric(&family).unwrap();
        let initial = GeodesicState::new(
            0.0,
            ParamPoint::new(vec![1.0, 1.0]).unwrap(),
            vec![0.4, 0.25],
        )
        .unwrap();
        let geo = integrate_geodesic(&field, &initial, 50.0, &Tolerances::default()).unwrap();
        let trace = ige_trace(&field, &geo, &uniform_grid(0.0, 50.0, 512)).unwrap();
        let fit = fit_growth(&trace, 0.5).unwrap();
        match classify_regime(&fit) {
            Ok(call) if call.regime == Regime::Regular => {
                if (fit.coefficient - 2.0).abs() > 0.2 {
                    failures.push(format!(
                        "integrable: log coefficient {:.4} outside 10% of 2",
                        fit.coefficient
                    ));
                }
                if call.residual_ratio < 2.0 {
                    failures.push(format!(
                        "integrable: residual ratio {:.3} below 2",
                        call.residual_ratio
                    ));
                }
            }
            other => failures.push(format!("integrable: classification {other:?}")),
        }
    }

    // Chaotic composite: linear growth at the Gaussian-block rate.
    {
        let lam = 0.5;
        let family = ChaoticComposite::new(1.0, 0.0, 1.0).unwrap();
        let field = analytic_metric(&family).unwrap();
        let params = GaussianGeodesicParams::new(2.0, lam).unwrap();
        let (mu0, sigma0) = analytic_gaussian_geodesic(&params, 0.0);
        let (dmu0, dsigma0) = analytic_gaussian_geodesic_velocity(&params, 0.0);
        let initial = GeodesicState::new(
            0.0,
            ParamPoint::new(vec![1.0, mu0, sigma0]).unwrap(),
            vec![0.3, dmu0, dsigma0],
        )
        .unwrap();
        let geo = integrate_geodesic(&field, &initial, 40.0, &Tolerances::default()).unwrap();
        let trace = ige_trace(&field, &geo, &uniform_grid(0.0, 40.0, 512)).unwrap();
        let fit = fit_growth(&trace, 0.5).unwrap();
        match classify_regime(&fit) {
            Ok(call) if call.regime == Regime::Chaotic => {
                if (fit.slope - lam).abs() > 0.1 * lam {
                    failures.push(format!(
                        "chaotic: slope {:.4} outside 10% of the block rate {lam}",
                        fit.slope
                    ));
                }
                if call.residual_ratio < 2.0 {
                    failures.push(format!(
                        "chaotic: residual ratio {:.3} below 2",
                        call.residual_ratio
                    ));
                }
            }
            other => failures.push(format!("chaotic: classification {other:?}")),
        }
    }
    report(7, "regular vs chaotic regime classification", failures);
}

#[test]
fn criterion_08_isotropic_deviation_closed_form() {
    let family = GaussianProductModel::single(0.0, 1.0).unwrap();
    let field = analytic_metric(&family).unwrap();
    let initial = GeodesicState::new(
        0.0,
        ParamPoint::new(vec![0.0, 1.0]).unwrap(),
        vec![1.0, 0.0],
    )
    .unwrap();
    let base = integrate_geodesic(&field, &initial, 4.0, &Tolerances::default()).unwrap();
    let j0 = JacobiField {
        j: vec![0.0, 0.0],
        djdtau: vec![0.0, 1.0 / 2.0f64.sqrt()],
    };
    let jlc = integrate_jlc(&field, &base, &j0, &Tolerances::default()).unwrap();
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for k in 1..=40 {
        let tau = 0.1 * k as f64;
        let state = jlc.state_at(tau).unwrap();
        let j = jlc.jacobi_at(tau).unwrap();
        let norm = jacobi_intensity(&field, &state.point, &j).unwrap();
        let expected = isotropic_jacobi(-0.5, 1.0, tau).unwrap();
        worst = worst.max((norm - expected).abs() / expected.max(1.0));
    }
    if worst > 1e-4 {
        failures.push(format!(
            "worst deviation from sqrt(2) sinh(tau/sqrt(2)): {worst:.3e}"
        ));
    }
    report(
        8,
        "constant-curvature block deviation matches sinh",
        failures,
    );
}

#[test]
fn criterion_09_spectral_discrimination() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let (regular, _, _) =
        analyze_chain(&SpinChainSpec::regular(10).unwrap(), SectorChoice::Larger).unwrap();
    let (chaotic, _, _) =
        analyze_chain(&SpinChainSpec::chaotic(10).unwrap(), SectorChoice::Larger).unwrap();
    if regular.beta > 0.35 {
        failures.push(format!(
            "regular preset H(0, 2): beta {:.4} exceeds 0.35",
            regular.beta
        ));
    }
    if chaotic.beta < 0.6 {
        failures.push(format!(
            "chaotic preset H(1, 1): beta {:.4} below 0.6",
            chaotic.beta
        ));
    }
    let elapsed = start.elapsed();
    if elapsed.as_secs_f64() > 120.0 {
        failures.push(format!("full run took {elapsed:?}, budget 120 s"));
    }
    report(9, "n = 10 chain spacing-regime separation", failures);
}

#[test]
fn criterion_10_surmise_self_consistency() {
    let mut failures = Vec::new();
    let spec = QuadSpec {
        rel_tol: 1e-12,
        ..QuadSpec::default()
    };
    for model in [
        LsdModel::Poisson,
        LsdModel::Goe,
        LsdModel::Gue,
        LsdModel::Gse,
        LsdModel::Brody(0.5),
    ] {
        let mass = integrate(|t| lsd_pdf(&model, t).unwrap(), 0.0, 60.0, &spec)
            .unwrap()
            .value;
        if (mass - 1.0).abs() > 1e-8 {
            failures.push(format!("{model:?}: normalization {mass}"));
        }
    }
    for k in 0..=500 {
        let theta = 0.01 * k as f64;
        let brody = lsd_pdf(&LsdModel::Brody(1.0), theta).unwrap();
        let goe = lsd_pdf(&LsdModel::Goe, theta).unwrap();
        if (brody - goe).abs() > 1e-12 {
            failures.push(format!(
                "Brody(1) vs GOE at theta = {theta}: {brody} vs {goe}"
            ));
            break;
        }
    }
    for &beta_true in &[0.0, 0.5, 1.0] {
        let draws = sample_lsd(&LsdModel::Brody(beta_true), 11, 5000).unwrap();
        let (beta_hat, _) = fit_brody(&SpacingSample::from_spacings(draws)).unwrap();
        if (beta_hat - beta_true).abs() > 0.1 {
            failures.push(format!(
                "Brody MLE at beta = {beta_true}: fitted {beta_hat:.4}"
            ));
        }
    }
    report(10, "spacing-surmise self-consistency", failures);
}
