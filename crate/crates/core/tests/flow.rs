use hermitia::connection::Kind;
use hermitia::curvature::CurvatureSet;
use hermitia::flow::{
    diagnostics, hopf_self_similar, run, step_with, theta2_discrete, theta2_sampled, FlowConfig, FlowState,
};
use hermitia::metric::{complex_coords, FourierTerm, MetricField};
use nalgebra::DMatrix;
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn kahler_start() -> MetricField {
    MetricField::kahler_torus(2, &[(vec![1, 0, 0, 1], c(0.004, 0.002)), (vec![0, 1, -1, 0], c(-0.003, 0.001))]).unwrap()
}

fn hopf_oracle(z: &[Complex64]) -> DMatrix<Complex64> {
    let n = z.len();
    let r2: f64 = z.iter().map(|w| w.norm_sqr()).sum();
    DMatrix::identity(n, n) * c((n as f64 - 1.0) / r2, 0.0)
}

fn order(errors: &[(f64, f64)]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln()).collect()
}

#[test]
fn flat_torus_follows_the_linear_ode() {
    let out = run(&MetricField::flat(2), 0.1, 0.1, 8, FlowConfig { dt: None, cadence: 16 }).unwrap();
    let want = (0.01f64).exp();
    let fin = &out.final_state;
    assert!((fin.t - 0.1).abs() < 1e-15);
    let mut worst: f64 = 0.0;
    for s in 0..fin.sites() {
        worst = worst.max((fin.metric_at(s) - DMatrix::identity(2, 2) * c(want, 0.0)).camax() / want);
    }
    println!("relative error {worst:.3e} after {} steps", fin.steps);
    assert!(worst <= 1e-8);
    for snap in &out.snapshots {
        assert!(snap.kahler_defect < 1e-13);
        assert!((snap.einstein_residual - 0.1 * snap.max_eig).abs() < 1e-13);
    }
}

#[test]
fn flat_start_without_growth_is_stationary() {
    let out = run(&MetricField::flat(1), 0.0, 0.05, 8, FlowConfig { dt: Some(0.01), cadence: 1 }).unwrap();
    assert_eq!(out.snapshots.len(), 6);
    for s in &out.snapshots {
        assert!((s.min_eig - 1.0).abs() < 1e-15 && (s.max_eig - 1.0).abs() < 1e-15);
        assert!(s.kahler_defect < 1e-13 && s.einstein_residual < 1e-13);
    }
}

#[test]
fn time_stepping_is_fourth_order() {
    let state = FlowState::from_field(&MetricField::flat(1), 8, 3.0, FlowConfig::default()).unwrap();
    let errors: Vec<(f64, f64)> = [0.05f64, 0.025, 0.0125]
        .iter()
        .map(|&dt| {
            let mut s = state.clone();
            for _ in 0..(0.4f64 / dt).round() as usize {
                s = step_with(&s, dt).unwrap();
            }
            (dt, (s.metric_at(0)[(0, 0)].re - (1.2f64).exp()).abs())
        })
        .collect();
    let rates = order(&errors);
    println!("{errors:?} {rates:?}");
    assert!(rates.iter().all(|r| (r - 4.0).abs() < 0.3));
}

#[test]
fn hopf_fixed_point_has_no_einstein_residual() {
    for n in 2..=4 {
        let mu = (n as f64 - 1.0) / 4.0;
        for t in [0.0, 0.5, 3.0] {
            assert_eq!(hopf_self_similar(n, 1.0, mu, t).unwrap().c, 1.0);
        }
        let z: Vec<Complex64> = (0..n).map(|k| c(0.9 - 0.2 * k as f64, 0.3 + 0.1 * k as f64)).collect();
        let mj = MetricField::hopf(n).metric_jet(&z, 2).unwrap();
        let theta = CurvatureSet::new(&mj).unwrap().second(Kind::Chern);
        let h = mj.h0();
        assert!((theta - h * c(mu, 0.0)).camax() <= 1e-10);
    }
}

#[test]
fn discrete_theta2_converges_at_fourth_order_on_hopf_data() {
    let field = MetricField::hopf(2);
    let points = [[c(1.2, 0.3), c(-0.4, 0.6)], [c(0.2, -1.1), c(0.9, 0.4)], [c(-0.7, -0.7), c(0.5, -0.9)]];
    let errors: Vec<(f64, f64)> = [16usize, 24, 32]
        .iter()
        .map(|&g| {
            let dx = 1.0 / g as f64;
            let worst = points
                .iter()
                .map(|z| (theta2_sampled(&field, z, dx).unwrap() - hopf_oracle(z)).camax())
                .fold(0.0, f64::max);
            (dx, worst)
        })
        .collect();
    let rates = order(&errors);
    println!("{errors:?} {rates:?}");
    assert!(rates.iter().all(|r| (r - 4.0).abs() < 0.3));
}

#[test]
fn discrete_theta2_converges_to_the_jet_pipeline() {
    let field = kahler_start();
    let x = [0.25, 0.5, 0.0, 0.75];
    let z = complex_coords(&x);
    let exact = CurvatureSet::new(&field.metric_jet(&z, 2).unwrap()).unwrap().second(Kind::Chern);
    let errors: Vec<(f64, f64)> = [8usize, 12, 16]
        .iter()
        .map(|&g| {
            let state = FlowState::from_field(&field, g, 0.0, FlowConfig::default()).unwrap();
            let idx: usize = x.iter().enumerate().map(|(a, v)| (v * g as f64).round() as usize * g.pow(a as u32)).sum();
            (1.0 / g as f64, (theta2_discrete(&state, idx).unwrap() - &exact).camax())
        })
        .collect();
    let rates = order(&errors);
    println!("{errors:?} {rates:?}");
    assert!(rates.iter().all(|r| (r - 4.0).abs() < 0.5));
}

#[test]
fn kahler_structure_is_preserved() {
    let start = std::time::Instant::now();
    let out = run(&kahler_start(), 0.0, 0.01, 12, FlowConfig { dt: None, cadence: 1 }).unwrap();
    let worst = out.snapshots.iter().map(|s| s.kahler_defect).fold(0.0, f64::max);
    println!(
        "steps {} dt {:.3e} worst defect {worst:.3e} initial {:.3e} wall {:.1}s",
        out.final_state.steps,
        out.dt,
        out.snapshots[0].kahler_defect,
        start.elapsed().as_secs_f64()
    );
    assert!(worst <= 1e-6);
    assert!(out.snapshots.iter().all(|s| s.min_eig > 0.0));
}

#[test]
fn non_kahler_start_runs_to_the_horizon() {
    let terms = vec![
        FourierTerm { freq: vec![0, 0, 0, 0], amp: DMatrix::identity(2, 2) },
        FourierTerm { freq: vec![1, 0, 0, 0], amp: DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.05, 0.0), c(0.0, 0.0), c(0.0, 0.0)]) },
        FourierTerm { freq: vec![-1, 0, 0, 0], amp: DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 0.0), c(0.05, 0.0), c(0.0, 0.0)]) },
    ];
    let field = MetricField::torus(2, terms).unwrap();
    let out = run(&field, 0.0, 2e-3, 8, FlowConfig { dt: None, cadence: 4 }).unwrap();
    let first = out.snapshots[0];
    assert!(first.kahler_defect > 1e-2);
    assert!((out.final_state.t - 2e-3).abs() < 1e-15);
    assert!(out.snapshots.iter().all(|s| s.min_eig > 0.0 && s.kahler_defect.is_finite()));
    let last = diagnostics(&out.final_state).unwrap();
    assert_eq!(last.step, out.final_state.steps);
}
