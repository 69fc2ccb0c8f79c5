use hermitia::forms::{
    bundle_identity_suite, identity_suite, second_hermitian_ricci, BundleContext, ConnectionJet, FormContext, FormJet,
};
use hermitia::jets::{Jet, JetMatrix};
use hermitia::metric::{MetricField, MetricJet};
use hermitia::normal_form::{random_normal_form, Scales};
use hermitia::sampling::rng;
use hermitia::Error;
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn hopf_jet(z: &[Complex64], order: usize) -> MetricJet {
    MetricField::hopf(z.len()).metric_jet(z, order).unwrap()
}

fn print(report: &hermitia::forms::IdentityReport) {
    for (name, r) in &report.residuals {
        println!("{name:60} {r:.3e}");
    }
}

#[test]
fn flat_metric_has_vanishing_residuals() {
    let mj = MetricField::flat(2).metric_jet(&[c(0.3, 0.1), c(-0.2, 0.5)], 2).unwrap();
    let report = identity_suite(&mj, 4, 11).unwrap();
    print(&report);
    assert!(report.passes(1e-13));
    let ctx = FormContext::new(&mj).unwrap();
    let phi = FormJet::random(2, 1, 2, (1, 1), &mut rng(1));
    assert_eq!(ctx.tau().unwrap().apply(&phi).max_abs(), 0.0);

    let conn = ConnectionJet::trivial(2, 2, 2);
    let report = bundle_identity_suite(&mj, &conn, 4, 12).unwrap();
    assert!(report.passes(1e-13));
}

#[test]
fn hopf_suites_hold() {
    let mj = hopf_jet(&[c(1.0, 0.3), c(-0.4, 0.2)], 2);
    let report = identity_suite(&mj, 20, 3).unwrap();
    print(&report);
    assert!(report.passes(1e-9));

    let mut g = rng(21);
    for conn in [ConnectionJet::random_unitary(2, 2, 2, 0.5, &mut g), ConnectionJet::random_orthogonal(2, 2, 2, 0.5, &mut g)] {
        let report = bundle_identity_suite(&mj, &conn, 20, 4).unwrap();
        print(&report);
        assert!(report.passes(1e-9));
    }
}

#[test]
fn normal_form_suite_holds() {
    let nf = random_normal_form(3, &mut rng(31), Scales::default(), &[]).unwrap();
    let report = identity_suite(&nf.jet(2).unwrap(), 20, 5).unwrap();
    print(&report);
    assert!(report.passes(1e-9));
}

#[test]
fn torsion_operator_on_hopf_constant_function() {
    let mj = hopf_jet(&[c(1.0, 0.0), c(0.0, 0.0)], 2);
    let ctx = FormContext::new(&mj).unwrap();
    let one = FormJet::function(Jet::real(2, 1, 1.0));
    let c1 = ctx.c().apply(&one);
    assert!((c1.get(0b01, 0).constant_term() - c(-1.0, 0.0)).norm() < 1e-14);
    assert!(c1.get(0b10, 0).constant_term().norm() < 1e-14);

    let s = FormJet::section(vec![Jet::constant(2, 1, c(0.7, -0.2)), Jet::constant(2, 1, c(0.1, 0.4))]);
    let t = ctx.tau().unwrap().apply(&s);
    for a in 0..2 {
        let expected = -s.get(0, a).constant_term();
        assert!((t.get(0b01, a).constant_term() - expected).norm() < 1e-14);
        assert!(t.get(0b10, a).constant_term().norm() < 1e-14);
    }
    let bc = BundleContext::new(&mj, ConnectionJet::trivial(2, 2, 2)).unwrap();
    let (r1, r2) = bc.torsion_on_section(&s).unwrap();
    assert!(r1.max_abs() < 1e-14 && r2.max_abs() < 1e-14);
}

#[test]
fn lambda_of_l_one_at_identity_metric() {
    for n in 1..=4 {
        let mj = MetricField::flat(n).metric_jet(&vec![c(0.0, 0.0); n], 1).unwrap();
        let ctx = FormContext::new(&mj).unwrap();
        let one = FormJet::function(Jet::real(n, 1, 1.0));
        let l1 = ctx.l().apply(&one);
        let norm2 = l1.inner_at_base(&l1, &mj, &nalgebra::DMatrix::identity(1, 1));
        let back = ctx.lambda().apply(&l1).get(0, 0).constant_term();
        assert!((back - c(n as f64, 0.0)).norm() < 1e-14);
        assert!((back - norm2).norm() < 1e-14);
    }
}

#[test]
fn kahler_metrics_have_no_torsion_operators() {
    let field = MetricField::kahler_torus(2, &[(vec![1, 0, 0, 1], c(0.01, 0.005)), (vec![0, 1, 1, 0], c(-0.004, 0.002))]).unwrap();
    let mj = field.metric_jet(&[c(0.13, 0.27), c(0.61, 0.05)], 2).unwrap();
    let ctx = FormContext::new(&mj).unwrap();
    let mut g = rng(41);
    for p in 0..=2 {
        for q in 0..=2 {
            let phi = FormJet::random(2, 1, 2, (p, q), &mut g);
            for op in [ctx.tau().unwrap(), ctx.a(), ctx.b(), ctx.c()] {
                assert!(op.apply(&phi).max_abs() < 1e-12);
            }
            let d1 = ctx.d1().apply(&phi).unwrap();
            assert!((&d1 - &ctx.del().apply(&phi).unwrap()).max_abs() < 1e-12);
            let d0 = ctx.delta2_zero().apply(&phi).unwrap();
            assert!((&d0 - &ctx.delbar_star().apply(&phi).unwrap()).max_abs() < 1e-12);
        }
    }
}

#[test]
fn chern_tangent_connection() {
    let mj = hopf_jet(&[c(1.0, 0.0), c(0.0, 0.0)], 3);
    let conn = ConnectionJet::chern_tangent(&mj).unwrap();
    let ricci = second_hermitian_ricci(&conn, &mj).unwrap();
    assert!((ricci - nalgebra::DMatrix::<Complex64>::identity(2, 2)).camax() < 1e-12);

    let bc = BundleContext::new(&mj, conn).unwrap();
    let phi = FormJet::random(2, 2, 2, (1, 0), &mut rng(51));
    let plain = bc.forms.delbar().apply(&phi).unwrap();
    assert!((&bc.delbar_e(&phi).unwrap() - &plain).max_abs() < 1e-12);
}

#[test]
fn second_ricci_routes_agree_for_line_bundles() {
    let mj = hopf_jet(&[c(0.8, -0.5), c(0.3, 0.9)], 2);
    let mut g = rng(61);
    for _ in 0..3 {
        let conn = ConnectionJet::random_unitary(2, 1, 3, 0.7, &mut g);
        let bc = BundleContext::new(&mj, conn.clone()).unwrap();
        let a = second_hermitian_ricci(&conn, &mj).unwrap();
        let b = bc.second_ricci_by_operators().unwrap();
        assert!(a[(0, 0)].norm() > 1e-3);
        assert!((a - b).camax() < 1e-12);
    }
    let zero = ConnectionJet::trivial(2, 3, 2);
    assert_eq!(second_hermitian_ricci(&zero, &mj).unwrap().camax(), 0.0);
}

#[test]
fn incompatible_connection_is_rejected() {
    let (n, r, order) = (2, 2, 2);
    let mut theta: Vec<JetMatrix> = (0..2 * n).map(|_| JetMatrix::from_fn(r, r, |_, _| Jet::zero(n, order))).collect();
    theta[0].set(0, 1, Jet::real(n, order, 0.5));
    let metric = JetMatrix::identity(r, n, order);
    match ConnectionJet::new(theta.clone(), metric.clone()) {
        Err(Error::Precondition(msg)) => assert!(!msg.is_empty()),
        other => panic!("expected a precondition error, got {other:?}"),
    }
    let forged = ConnectionJet { n, rank: r, theta, metric };
    let mj = hopf_jet(&[c(1.0, 0.0), c(0.5, 0.0)], 2);
    assert!(matches!(bundle_identity_suite(&mj, &forged, 2, 1), Err(Error::Precondition(_))));
}
