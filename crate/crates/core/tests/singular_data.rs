use isojet::embedding::{
    build_singular_data, perturbation_estimate, singular_ambient_dim, singular_metric_order, SingularOptions,
};
use isojet::metric::{check_admissible, MetricJet};
use isojet::verify::{constraint_residual, singular_rank_certificate};
use isojet::{Jet, Rational, Scalar};

fn q(n: i64, d: i64) -> Rational {
    Rational::from_ratio(n, d)
}

/// (x1² + x2²) dx2² + dx1²
fn model2(order: usize) -> MetricJet<Rational> {
    MetricJet::from_fn(2, |i, j| match (i, j) {
        (0, 0) => Jet::one(2, order),
        (1, 1) => Jet::from_terms(2, order, [(vec![2, 0], q(1, 1)), (vec![0, 2], q(1, 1))]),
        _ => Jet::zero(2, order),
    })
    .unwrap()
}

/// (x1² + x2² + x3²) dx3² + dx1² + dx2² + 2 g12 dx1 dx2
fn metric3(order: usize, g12: Jet<Rational>) -> MetricJet<Rational> {
    MetricJet::from_fn(3, |i, j| match (i, j) {
        (0, 0) | (1, 1) => Jet::one(3, order),
        (2, 2) => Jet::from_terms(3, order, [(vec![2, 0, 0], q(1, 1)), (vec![0, 2, 0], q(1, 1)), (vec![0, 0, 2], q(1, 1))]),
        (0, 1) => g12.clone(),
        _ => Jet::zero(3, order),
    })
    .unwrap()
}

/// g12 = (x1² + x2²) x3 / 2, so h12 = −(x1² + x2²)/4 is a multiple of ‖x'‖².
fn model3(order: usize) -> MetricJet<Rational> {
    metric3(
        order,
        Jet::from_terms(3, order, [(vec![2, 0, 1], q(1, 2)), (vec![0, 2, 1], q(1, 2))]),
    )
}

#[test]
fn model_metric_in_the_plane() {
    let k = 4;
    let g = model2(singular_metric_order(2, k));
    let a = check_admissible(&g, 1).unwrap();
    let sd = build_singular_data(&a, k, &SingularOptions::default()).unwrap();
    assert_eq!(sd.data.ambient(), singular_ambient_dim(2));
    // h = 0 forces N = 0 and G = sqrt(F) = 1
    assert!(sd.normal_field.iter().all(Jet::is_zero));
    assert_eq!(sd.g_factor, Jet::one(1, sd.g_factor.order()));
    let report = constraint_residual(&sd.data, &g, k, 0.0).unwrap();
    assert!(report.pass, "{report:?}");
    let cert = singular_rank_certificate(&sd);
    assert!(cert.pass, "{cert:?}");
}

#[test]
fn admissible_metric_in_three_dimensions() {
    let k = 4;
    let g = model3(singular_metric_order(3, k));
    let a = check_admissible(&g, 1).unwrap();
    let sd = build_singular_data(&a, k, &SingularOptions::default()).unwrap();
    assert_eq!(sd.data.ambient(), 7);
    let report = constraint_residual(&sd.data, &g, k, 0.0).unwrap();
    assert!(report.pass, "{report:?}");
    let cert = singular_rank_certificate(&sd);
    assert!(cert.pass, "{cert:?}");
    // the normal field is quadratic at the origin and not identically zero
    assert!(sd.normal_field.iter().all(|c| c.valuation().map_or(true, |v| v >= 2)));
    assert!(sd.normal_field.iter().any(|c| !c.is_zero()));
}

#[test]
fn non_analytic_normal_length_is_reported() {
    // h12 = −x2²/4: ‖N‖² is a quartic that ‖x'‖² does not divide
    let k = 4;
    let g = metric3(singular_metric_order(3, k), Jet::monomial(3, singular_metric_order(3, k), &[0, 2, 1], q(1, 2)));
    let a = check_admissible(&g, 1).unwrap();
    let err = build_singular_data(&a, k, &SingularOptions::default()).unwrap_err();
    assert!(matches!(err, isojet::Error::NotDivisible { degree: 4, .. }), "{err}");
}

#[test]
fn perturbing_u1_breaks_the_tangency_constraint() {
    let k = 3;
    let g = model2(singular_metric_order(2, k));
    let a = check_admissible(&g, 1).unwrap();
    let mut sd = build_singular_data(&a, k, &SingularOptions::default()).unwrap();
    let x1 = Jet::var(1, k, 0);
    sd.data.u1[1] = &sd.data.u1[1] + &x1;
    let report = constraint_residual(&sd.data, &g, k, 0.0).unwrap();
    assert!(!report.pass);
    assert!(report.failing().contains(&"u1_tangent[1]"), "{:?}", report.failing());
}

#[test]
fn perturbation_gradient_products_scale_like_eps_squared() {
    for eps in [0.25, 0.125] {
        let est = perturbation_estimate(2, eps, 9);
        assert!(est.samples > 0);
        assert!(est.constant <= 2.0 + 1e-12, "{est:?}");
    }
}
