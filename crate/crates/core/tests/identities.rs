use birman_core::corpus::default_corpus;
use birman_core::exact::{constant_a_f64, Alpha};
use birman_core::quadrature::{integrate, QuadOptions};
use birman_core::testfunctions::{bump, zero, Descriptor, JetFunction};
use birman_core::verifier::{
    check_ibp_identity, check_poincare, check_transform_identity, verify_inequality, LogKind, ProblemParams, Side,
    Status, VerifyError,
};
use birman_core::weights::{log_identity_check, Depth};
use birman_core::Rational;

fn exterior_ln(m: u32, n: u32, alpha: Alpha) -> ProblemParams {
    ProblemParams {
        m,
        ell: m,
        depth: Depth::Finite(n),
        alpha,
        rho: Rational::from(16),
        anchor: Rational::from(1),
        side: Side::Exterior,
        kind: LogKind::Ln,
        d: 1,
    }
}

#[test]
fn ibp_for_first_order_by_hand() {
    // m = 1, α = 0: ∫ f′² = −∫ f″ f, checked against a separate quadrature of f′².
    let f = bump(0.2, 0.8, 2).unwrap();
    let c = check_ibp_identity(1, &Alpha::zero(), &f, &QuadOptions::default()).unwrap();
    let direct = integrate(|x| Ok::<_, ()>(f.eval_jet(x, 1).derivative(1).powi(2)), 0.2, 0.8, &QuadOptions::default())
        .unwrap()
        .value();
    assert!((c.left - direct).abs() < 1e-12 * direct);
    assert!(c.residual < 1e-10);
}

#[test]
fn ibp_over_corpus() {
    let opts = QuadOptions::default();
    for m in 1..=3 {
        for alpha in ["0", "1/2", "-1", "2", "7/3"] {
            let a: Alpha = alpha.parse().unwrap();
            for f in default_corpus(Side::Interior, 1.0, 2 * m as usize).unwrap() {
                let c = check_ibp_identity(m, &a, &f, &opts).unwrap();
                assert!(c.residual <= 1e-8, "m={m} α={alpha}: {c:?}");
            }
        }
    }
}

#[test]
fn ibp_needs_double_order_jets() {
    let f = bump(0.2, 0.8, 2).unwrap();
    assert!(matches!(
        check_ibp_identity(2, &Alpha::zero(), &f, &QuadOptions::default()),
        Err(VerifyError::JetOrder { .. })
    ));
}

#[test]
fn transform_identity_examples() {
    let opts = QuadOptions::default();
    for (m, n, alpha) in [(1, 0, "0"), (2, 0, "-1/2"), (1, 1, "0"), (2, 2, "1/2"), (2, 1, "-1/2"), (1, 2, "5/2")] {
        let p = exterior_ln(m, n, alpha.parse().unwrap());
        for f in default_corpus(Side::Exterior, 16.0, m as usize).unwrap() {
            let c = check_transform_identity(&p, &f, &opts).unwrap();
            assert!(c.residual <= 1e-8, "m={m} N={n} α={alpha}: {c:?}");
            assert!(c.left > 0.0);
        }
    }
}

#[test]
fn transform_identity_preconditions() {
    let f = bump(20.0, 40.0, 2).unwrap();
    let opts = QuadOptions::default();
    // Exceptional α
    let p = exterior_ln(2, 1, Alpha::int(3));
    assert!(matches!(check_transform_identity(&p, &f, &opts), Err(VerifyError::Precondition(_))));
    // ℓ < m
    let mut p = exterior_ln(2, 1, Alpha::zero());
    p.ell = 1;
    assert!(matches!(check_transform_identity(&p, &f, &opts), Err(VerifyError::Precondition(_))));
    // N = ∞
    let mut p = exterior_ln(1, 1, Alpha::zero());
    p.depth = Depth::Infinite;
    assert!(check_transform_identity(&p, &f, &opts).is_err());
}

#[test]
fn log_identity_over_range() {
    for n in 1..=4u32 {
        let e_n = (0..n).fold(0f64, |acc, _| acc.exp());
        for k in 1..=20 {
            let x = e_n * (1.0 + k as f64).powi(3);
            assert!(log_identity_check(n, x).unwrap() <= 1e-12, "N = {n}, x = {x}");
        }
        assert!(log_identity_check(n, e_n * 0.999).is_err());
    }
}

#[test]
fn poincare_a_branch() {
    let opts = QuadOptions::default();
    let rho = Rational::from(1);
    for (k, m) in [(0, 1), (0, 2), (1, 2), (1, 3)] {
        for alpha in ["0", "1/2"] {
            let a: Alpha = alpha.parse().unwrap();
            for f in default_corpus(Side::Interior, 1.0, m as usize).unwrap() {
                let r = check_poincare(k, m, &a, &rho, &f, &opts).unwrap();
                assert_eq!(r.status, Status::Pass, "k={k} m={m} α={alpha}");
                let c = constant_a_f64(m - k, &a);
                assert!((r.rhs_terms[0].value / c).is_finite());
            }
        }
    }
}

#[test]
fn poincare_exceptional_is_unsupported() {
    let f = bump(0.1, 0.9, 2).unwrap();
    let r = check_poincare(0, 1, &Alpha::int(1), &Rational::from(1), &f, &QuadOptions::default()).unwrap();
    assert_eq!(r.status, Status::Unsupported);
    assert!(check_poincare(2, 2, &Alpha::zero(), &Rational::from(1), &f, &QuadOptions::default()).is_err());
}

#[test]
fn zero_function_gives_equality() {
    let p = exterior_ln(2, 1, Alpha::zero());
    let f = zero(20.0, 40.0, 2).unwrap();
    let r = verify_inequality(&p, &f, &QuadOptions::default()).unwrap();
    assert_eq!(r.status, Status::Equality);
    assert_eq!(r.lhs.value, 0.0);
    assert_eq!(r.rhs_total, 0.0);
}

#[test]
fn support_must_sit_inside_interval() {
    let p = exterior_ln(1, 1, Alpha::zero());
    let opts = QuadOptions::default();
    for (a, b) in [(10.0, 40.0), (16.0, 20.0)] {
        let f = bump(a, b, 1).unwrap();
        assert!(matches!(verify_inequality(&p, &f, &opts), Err(VerifyError::Support { .. })));
    }
    let unbounded = JetFunction::new(Descriptor::Power { p: 1.0 }, 1).unwrap();
    assert!(matches!(verify_inequality(&p, &unbounded, &opts), Err(VerifyError::Support { .. })));
}

#[test]
fn sums_of_disjoint_bumps_verify() {
    let p = exterior_ln(2, 2, Alpha::from_ratio(1, 2).unwrap());
    let d = Descriptor::Sum {
        terms: vec![Descriptor::Bump { a: 20.0, b: 30.0 }, Descriptor::Bump { a: 50.0, b: 90.0 }.times(-2.0)],
    };
    let f = JetFunction::new(d, 2).unwrap();
    assert_eq!(f.support(), (20.0, 90.0));
    let opts = QuadOptions::default();
    let whole = verify_inequality(&p, &f, &opts).unwrap();
    let a = verify_inequality(&p, &bump(20.0, 30.0, 2).unwrap(), &opts).unwrap();
    let b = verify_inequality(&p, &bump(50.0, 90.0, 2).unwrap(), &opts).unwrap();
    let want = a.lhs.value + 4.0 * b.lhs.value;
    assert!((whole.lhs.value - want).abs() < 1e-9 * want);
    assert_eq!(whole.status, Status::Pass);
}
