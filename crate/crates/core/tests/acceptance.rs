//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::time::Instant;

use hermitia::connection::Kind;
use hermitia::curvature::{complexified_ricci, complexified_ricci_bianchi, CurvatureSet};
use hermitia::flow::{self, hopf_self_similar, theta2_sampled, FlowConfig};
use hermitia::forms::{bundle_identity_suite, identity_suite, ConnectionJet};
use hermitia::hopf::{oracle_suite, BismutRicciForm};
use hermitia::metric::{FourierTerm, MetricField, MetricJet};
use hermitia::normal_form::{random_normal_form, Constraint, Scales};
use hermitia::normal_point::{balanced_formulas, general_formulas, lc_minus_induced, skt_formulas, skt_relations, FormulaReport};
use hermitia::positivity::hopf_checklist;
use hermitia::sampling::{annulus_point, rng, torus_point, unit_vector};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn min_eig(m: &DMatrix<Complex64>) -> f64 {
    hermitia::metric::min_eigenvalue(&((m + m.adjoint()) * c(0.5, 0.0)))
}

fn random_kahler_torus(seed: u64) -> MetricField {
    let mut g = rng(seed);
    let potential: Vec<(Vec<i32>, Complex64)> = (0..3)
        .map(|_| {
            let mut m: Vec<i32> = (0..4).map(|_| g.random_range(-1..=1)).collect();
            if m.iter().all(|&k| k == 0) {
                m[0] = 1;
            }
            (m, c(g.random_range(-0.002..0.002), g.random_range(-0.002..0.002)))
        })
        .collect();
    MetricField::kahler_torus(2, &potential).expect("small potentials keep the metric positive")
}

fn non_kahler_torus() -> MetricField {
    let off = |a: Complex64| DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), a, c(0.0, 0.0), c(0.0, 0.0)]);
    MetricField::torus(
        2,
        vec![
            FourierTerm { freq: vec![0, 0, 0, 0], amp: DMatrix::identity(2, 2) },
            FourierTerm { freq: vec![1, 0, 0, 0], amp: off(c(0.1, 0.05)) },
            FourierTerm { freq: vec![-1, 0, 0, 0], amp: off(c(0.1, 0.05)).adjoint() },
        ],
    )
    .unwrap()
}

fn normal_jet(n: usize, seed: u64, constraints: &[Constraint]) -> MetricJet {
    random_normal_form(n, &mut rng(seed), Scales::default(), constraints).unwrap().jet(2).unwrap()
}

fn hopf_golden() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut forms = Vec::new();
    let mut ok = true;
    for n in 2..=4 {
        let s = oracle_suite(n, 50, 1000 + n as u64).unwrap();
        worst = worst.max(s.max_residual());
        let form = s.matched_form(1e-10);
        let (name, residual) = match form {
            Some(BismutRicciForm::Corrected) => ("corrected", s.bismut_ricci_corrected),
            Some(BismutRicciForm::Printed) => ("printed", s.bismut_ricci_printed),
            None => ("none", s.bismut_ricci_corrected.min(s.bismut_ricci_printed)),
        };
        ok &= form.is_some();
        forms.push(format!("n={n}: Bismut Ricci matches the {name} form ({residual:.1e}; printed {:.1e})", s.bismut_ricci_printed));
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: ok && worst <= 1e-10 && secs <= 30.0,
        detail: format!("max residual {worst:.2e} over 3x50 points; {}; {secs:.1}s", forms.join("; ")),
    }
}

fn kahler_coincidence() -> Outcome {
    let mut tensors: f64 = 0.0;
    let mut riccis: f64 = 0.0;
    for seed in 0..5 {
        let field = random_kahler_torus(200 + seed);
        let mut g = rng(300 + seed);
        for _ in 0..20 {
            let set = CurvatureSet::new(&field.metric_jet(&torus_point(&mut g, 2), 2).unwrap()).unwrap();
            let lc = set.tensor(Kind::LeviCivita);
            for k in [Kind::Chern, Kind::Induced, Kind::Bismut] {
                tensors = tensors.max(set.tensor(k).distance(lc));
            }
            let variants = set.ricci_variants();
            for (_, m) in &variants {
                riccis = riccis.max((m - &variants[0].1).camax());
            }
        }
    }
    Outcome {
        pass: tensors <= 1e-9 && riccis <= 1e-9,
        detail: format!("5 Kähler tori x 20 points: tensor gap {tensors:.2e}, Ricci spread {riccis:.2e}"),
    }
}

fn induced_comparison() -> Outcome {
    let mut contraction = f64::NEG_INFINITY;
    let mut first = f64::INFINITY;
    let mut second = f64::INFINITY;
    let mut strict = 0usize;
    for m in 0..20u64 {
        let n = 2 + (m % 2) as usize;
        let nf = random_normal_form(n, &mut rng(400 + m), Scales::default(), &[]).unwrap();
        let mut g = rng(500 + m);
        let z = annulus_point(&mut g, n, 0.0, 0.1);
        let mj = nf.field.metric_jet(&z, 2).unwrap();
        let set = CurvatureSet::new(&mj).unwrap();
        for _ in 0..100 {
            let (u, v) = (unit_vector(&mut g, n), unit_vector(&mut g, n));
            let val = lc_minus_induced(&set, &u, &v).re;
            contraction = contraction.max(val);
            if val < -1e-8 {
                strict += 1;
            }
        }
        let r = set.hermitian_ricci();
        first = first.min(min_eig(&(set.first(Kind::Induced) - &r)));
        second = second.min(min_eig(&(set.second(Kind::Induced) - &r)));
    }
    Outcome {
        pass: contraction <= 1e-12 && first >= -1e-10 && second >= -1e-10,
        detail: format!(
            "20 normal-form metrics x 100 (u,v): max (R - R^)(u,u,v,v) {contraction:.2e} ({strict} strictly negative), \
             min eig(R^1 - R) {first:.2e}, min eig(R^2 - R) {second:.2e}"
        ),
    }
}

fn bianchi_routes() -> Outcome {
    let mut jets: Vec<(&str, MetricJet)> = Vec::new();
    let mut g = rng(600);
    for n in 2..=4 {
        jets.push(("hopf", MetricField::hopf(n).metric_jet(&annulus_point(&mut g, n, 1.0, 2.0), 2).unwrap()));
    }
    jets.push(("kahler torus", random_kahler_torus(601).metric_jet(&torus_point(&mut g, 2), 2).unwrap()));
    jets.push(("non-kahler torus", non_kahler_torus().metric_jet(&torus_point(&mut g, 2), 2).unwrap()));
    for seed in 0..4 {
        jets.push(("normal form", normal_jet(2 + (seed % 2) as usize, 610 + seed, &[])));
    }
    jets.push(("balanced normal form", normal_jet(3, 620, &[Constraint::Balanced])));
    jets.push(("skt normal form", normal_jet(3, 621, &[Constraint::Skt])));
    let worst = jets
        .iter()
        .map(|(_, mj)| {
            let set = CurvatureSet::new(mj).unwrap();
            (complexified_ricci(&set.full, mj) - complexified_ricci_bianchi(&set.full, mj)).camax()
        })
        .fold(0.0, f64::max);
    Outcome { pass: worst <= 1e-10, detail: format!("{} metrics: max route gap {worst:.2e}", jets.len()) }
}

fn identity_suites() -> Outcome {
    let start = Instant::now();
    let mut g = rng(700);
    let cases: Vec<(&str, MetricJet)> = vec![
        ("flat", MetricField::flat(2).metric_jet(&[c(0.3, 0.1), c(-0.2, 0.5)], 2).unwrap()),
        ("hopf n=2", MetricField::hopf(2).metric_jet(&annulus_point(&mut g, 2, 1.0, 2.0), 2).unwrap()),
        ("hopf n=3", MetricField::hopf(3).metric_jet(&annulus_point(&mut g, 3, 1.0, 2.0), 2).unwrap()),
        ("normal form n=3", normal_jet(3, 701, &[])),
    ];
    let mut parts = Vec::new();
    let mut worst: f64 = 0.0;
    for (k, (name, mj)) in cases.iter().enumerate() {
        let scalar = identity_suite(mj, 20, 710 + k as u64).unwrap();
        let conn = ConnectionJet::random_unitary(mj.n(), 2, 2, 0.5, &mut g);
        let bundle = bundle_identity_suite(mj, &conn, 20, 720 + k as u64).unwrap();
        let r = scalar.max_residual().max(bundle.max_residual());
        worst = worst.max(r);
        parts.push(format!("{name} {r:.1e}"));
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: worst <= 1e-9 && secs <= 120.0,
        detail: format!("20 random forms per identity, bundle rank 2: {}; {secs:.1}s", parts.join(", ")),
    }
}

fn worst_of(reports: &[FormulaReport], keep: impl Fn(&str) -> bool) -> (f64, String) {
    let mut worst = (0.0, String::new());
    for r in reports {
        for (name, v) in &r.residuals {
            if keep(name) && *v > worst.0 {
                worst = (*v, name.clone());
            }
        }
    }
    worst
}

fn normal_form_formulas() -> Outcome {
    let general: Vec<FormulaReport> = (0..10).map(|s| general_formulas(&normal_jet(2 + (s % 2) as usize, 800 + s, &[])).unwrap()).collect();
    let balanced_jets: Vec<MetricJet> = (0..10).map(|s| normal_jet(3, 820 + s, &[Constraint::Balanced])).collect();
    let skt_jets: Vec<MetricJet> = (0..10).map(|s| normal_jet(2 + (s % 2) as usize, 840 + s, &[Constraint::Skt])).collect();
    let balanced: Vec<FormulaReport> = balanced_jets.iter().map(|mj| balanced_formulas(mj).unwrap()).collect();
    let skt: Vec<FormulaReport> = skt_jets.iter().map(|mj| skt_formulas(mj).unwrap()).collect();
    let trace = skt_jets.iter().map(|mj| skt_relations(mj).unwrap()).fold((0.0f64, 0.0f64), |(a, b), r| {
        (a.max(r.trace_identity_residual), b.max(r.trace_identity_residual_lc))
    });

    let printed = |name: &str| !name.ends_with("-derived");
    let (g, gn) = worst_of(&general, |_| true);
    let (b, bn) = worst_of(&balanced, printed);
    let (s, sn) = worst_of(&skt, printed);
    let (bd, _) = worst_of(&balanced, |n| n.ends_with("-derived"));
    let (sd, _) = worst_of(&skt, |n| n.ends_with("-derived"));
    let within = |v: f64| if v <= 1e-9 { "ok" } else { "EXCEEDS" };
    Outcome {
        pass: g <= 1e-9 && b <= 1e-9 && s <= 1e-9 && trace.0 <= 1e-9,
        detail: format!(
            "general formulas {g:.1e} [{gn}] {}; balanced printed {b:.1e} [{bn}] {}, balanced B2 traced from the Bismut tensor {bd:.1e}; \
             SKT printed {s:.1e} [{sn}] {}, SKT B1 traced {sd:.1e}; SKT trace identity with R^1 {:.1e} {} (first LC trace {:.1e})",
            within(g),
            within(b),
            within(s),
            trace.0,
            within(trace.0),
            trace.1
        ),
    }
}

fn hopf_positivity() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for n in [2, 3] {
        let list = hopf_checklist(n, 100, 900 + n as u64).unwrap();
        ok &= list.passes();
        let failed: Vec<String> = list.lines().into_iter().filter(|(_, good)| !good).map(|(t, _)| t).collect();
        parts.push(format!(
            "n={n}: {} (Griffiths min {:.2e}, SKT {})",
            if failed.is_empty() { "all clauses hold".to_string() } else { format!("failing: {}", failed.join("; ")) },
            list.griffiths_minimum,
            list.skt
        ));
    }
    Outcome { pass: ok, detail: format!("100 points each; {}", parts.join("; ")) }
}

fn flow_checks() -> Outcome {
    let flat = flow::run(&MetricField::flat(2), 0.1, 0.1, 8, FlowConfig { dt: None, cadence: 1000 }).unwrap();
    let want = 0.01f64.exp();
    let fin = &flat.final_state;
    let rel = (0..fin.sites())
        .map(|s| (fin.metric_at(s) - DMatrix::identity(2, 2) * c(want, 0.0)).camax() / want)
        .fold(0.0, f64::max);

    let fixed = (2..=4).all(|n| {
        let mu = (n as f64 - 1.0) / 4.0;
        [0.0, 0.3, 1.0, 10.0].iter().all(|&t| hopf_self_similar(n, 1.0, mu, t).unwrap().c == 1.0)
    });

    let field = MetricField::hopf(2);
    let mut g = rng(950);
    let points: Vec<Vec<Complex64>> = (0..3).map(|_| annulus_point(&mut g, 2, 1.0, 2.0)).collect();
    let errors: Vec<f64> = [16.0, 24.0, 32.0]
        .iter()
        .map(|&grid: &f64| {
            points
                .iter()
                .map(|z| {
                    let r2: f64 = z.iter().map(|w| w.norm_sqr()).sum();
                    let oracle = DMatrix::identity(2, 2) * c(1.0 / r2, 0.0);
                    (theta2_sampled(&field, z, 1.0 / grid).unwrap() - oracle).camax()
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let orders = [(errors[0] / errors[1]).ln() / 1.5f64.ln(), (errors[1] / errors[2]).ln() / (32.0f64 / 24.0).ln()];
    let fourth = orders.iter().all(|p| (p - 4.0).abs() <= 0.3);

    let start = Instant::now();
    let kahler = random_kahler_torus(960);
    let run = flow::run(&kahler, 0.0, 0.01, 12, FlowConfig { dt: None, cadence: 1 }).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let defect = run.snapshots.iter().map(|s| s.kahler_defect).fold(0.0, f64::max);
    let initial = run.snapshots[0].kahler_defect;
    let fine = flow::run(&kahler, 0.0, 0.01, 16, FlowConfig { dt: None, cadence: usize::MAX }).unwrap();
    let defect_fine = fine.snapshots.iter().map(|s| s.kahler_defect).fold(0.0, f64::max);
    let order = (defect / defect_fine).ln() / (16.0f64 / 12.0).ln();

    Outcome {
        pass: rel <= 1e-8 && fixed && fourth && defect <= 1e-6 && secs <= 300.0,
        detail: format!(
            "(a) flat rel error {rel:.1e}; (b) fixed point exact: {fixed}, Hopf stencil errors {:.1e}/{:.1e}/{:.1e} orders {:.2}/{:.2}; \
             (c) N=12: spectral Kähler defect {initial:.1e} at t=0, max {defect:.1e} over {} steps ({secs:.1}s); \
             N=16: max {defect_fine:.1e}, observed order {order:.2}",
            errors[0], errors[1], errors[2], orders[0], orders[1], run.final_state.steps
        ),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("Hopf closed forms vs jet pipeline", hopf_golden),
        ("Kähler coincidence of connections and Ricci forms", kahler_coincidence),
        ("Levi-Civita vs induced curvature comparison", induced_comparison),
        ("complexified Ricci: direct vs Bianchi route", bianchi_routes),
        ("operator identity suite", identity_suites),
        ("normal-form Ricci formulas", normal_form_formulas),
        ("Hopf positivity checklist", hopf_positivity),
        ("curvature flow", flow_checks),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let out = check();
        if !out.pass {
            failed += 1;
        }
        println!("criterion {} {}: {name}: {}", k + 1, if out.pass { "PASS" } else { "FAIL" }, out.detail);
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
