//! Residual reports for the commutator identities of the form calculus.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use super::{gram_entry, AlgebraicOp, BundleContext, ConnectionJet, FormContext, FormJet};
use crate::error::Result;
use crate::jets::{Jet, Wirtinger};
use crate::metric::MetricJet;
use crate::sampling::{rng, SeededRng};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Largest residual of each identity over the tested forms.
#[derive(Debug, Clone)]
pub struct IdentityReport {
    pub seed: u64,
    pub trials: usize,
    pub forms_tested: usize,
    pub residuals: Vec<(String, f64)>,
}

impl IdentityReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.1).fold(0.0, f64::max)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.residuals.iter().find(|r| r.0 == name).map(|r| r.1)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual() <= tol
    }

    fn merge(&mut self, name: &str, v: f64) {
        match self.residuals.iter_mut().find(|r| r.0 == name) {
            Some(r) => r.1 = r.1.max(v),
            None => self.residuals.push((name.to_string(), v)),
        }
    }
}

fn random_bidegree(n: usize, r: &mut SeededRng) -> (usize, usize) {
    (r.random_range(0..=n), r.random_range(0..=n))
}

/// Basis forms with coefficient `1 + x_s` for a slot `s` rotating over the variables.
fn monomial_forms(n: usize, rank: usize, order: usize) -> Vec<FormJet> {
    let mut out = Vec::new();
    for m in 0..1 << (2 * n) {
        let s = m % (2 * n);
        let which = if s < n { Wirtinger::Holomorphic } else { Wirtinger::Antiholomorphic };
        let coeff = &Jet::real(n, order, 1.0) + &Jet::variable(n, order, which, s % n);
        let mut f = FormJet::zero(n, rank, order);
        f.set(m, m % rank, coeff);
        out.push(f);
    }
    out
}

type Check<'a> = Box<dyn Fn(&FormJet) -> Result<FormJet> + Sync + 'a>;

fn commutator_apply(a: &AlgebraicOp, b: &AlgebraicOp, phi: &FormJet) -> FormJet {
    &a.apply(&b.apply(phi)) - &b.apply(&a.apply(phi))
}

fn run(report: &mut IdentityReport, checks: &[(&str, Check)], forms: &[FormJet]) -> Result<()> {
    let rows: Vec<Vec<f64>> = forms
        .par_iter()
        .map(|f| checks.iter().map(|(_, c)| c(f).map(|r| r.max_abs())).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    for row in rows {
        for ((name, _), v) in checks.iter().zip(row) {
            report.merge(name, v);
        }
    }
    Ok(())
}

/// Largest deviation between the closed-form `Λ` and the Gram-matrix adjoint
/// of `L` at the base point.
pub fn lambda_adjoint_defect(ctx: &FormContext) -> f64 {
    let n = ctx.n();
    let dim = 1 << (2 * n);
    let basis = |m: usize| {
        let mut f = FormJet::zero(n, 1, 0);
        f.set(m, 0, Jet::real(n, 0, 1.0));
        f
    };
    let matrix = |op: &AlgebraicOp| {
        let mut out = DMatrix::zeros(dim, dim);
        for b in 0..dim {
            let img = op.apply(&basis(b));
            for c in 0..dim {
                out[(c, b)] = img.get(c, 0).constant_term();
            }
        }
        out
    };
    let hinv = ctx.mj.hinv0();
    let g = DMatrix::from_fn(dim, dim, |c, b| gram_entry(n, &hinv, b, c));
    let Some(ginv) = g.clone().try_inverse() else {
        return f64::INFINITY;
    };
    let l = matrix(&ctx.l());
    let adjoint = ginv * l.adjoint() * g;
    (adjoint - matrix(&ctx.lambda())).camax()
}

/// `|⟨Tφ, ψ⟩ − ⟨φ, T*ψ⟩|` at the base point, worst over `T ∈ {L, A, B, C, τ}`.
fn adjoint_duality_defect(ctx: &FormContext, pairs: &[(FormJet, FormJet)]) -> Result<f64> {
    let ops = [ctx.l(), ctx.a(), ctx.b(), ctx.c(), ctx.tau()?];
    let k = DMatrix::identity(1, 1);
    let mut worst: f64 = 0.0;
    for t in &ops {
        let ts = ctx.star(t);
        for (phi, psi) in pairs {
            let lhs = t.apply(phi).inner_at_base(psi, &ctx.mj, &k);
            let rhs = phi.inner_at_base(&ts.apply(psi), &ctx.mj, &k);
            worst = worst.max((lhs - rhs).norm());
        }
    }
    Ok(worst)
}

/// A form with random coefficients in every bidegree.
fn random_mixed(n: usize, order: usize, r: &mut SeededRng) -> FormJet {
    let mut out = FormJet::zero(n, 1, order);
    for p in 0..=n {
        for q in 0..=n {
            out = &out + &FormJet::random(n, 1, order, (p, q), r);
        }
    }
    out
}

/// Residuals of the torsion-operator identities on random forms and on a
/// spanning set of basis forms, for the metric jet `mj`.
pub fn identity_suite(mj: &MetricJet, trials: usize, seed: u64) -> Result<IdentityReport> {
    let ctx = FormContext::new(mj)?;
    let n = ctx.n();
    let order = mj.order;
    let mut r = rng(seed);
    let mut forms: Vec<FormJet> =
        (0..trials.max(1)).map(|_| FormJet::random(n, 1, order, random_bidegree(n, &mut r), &mut r)).collect();
    let pairs: Vec<(FormJet, FormJet)> = (0..3).map(|_| (random_mixed(n, 0, &mut r), random_mixed(n, 0, &mut r))).collect();
    forms.extend(monomial_forms(n, 1, order));

    let lambda = ctx.lambda();
    let l = ctx.l();
    let (a, b, c) = (ctx.a(), ctx.b(), ctx.c());
    let tau = ctx.tau()?;
    let (abs, bbs, cbs) = (ctx.bar_star(&a), ctx.bar_star(&b), ctx.bar_star(&c));
    let (tau_bar, tau_star, tau_bar_star) = (ctx.bar(&tau), ctx.star(&tau), ctx.bar_star(&tau));
    let (del, delbar) = (ctx.del(), ctx.delbar());
    let (d1, d2) = (ctx.d1(), ctx.d2());
    let (del_star, delbar_star) = (ctx.del_star(), ctx.delbar_star());
    let delta2 = ctx.delta2();
    let delta2_zero = ctx.delta2_zero();
    let b_half = b.scale_real(0.5);
    let bbar_half = ctx.bar(&b).scale_real(0.5);
    let abc = a.plus(&b).plus(&c);
    let lambda_b_rhs = abs.scale_real(2.0).plus(&bbs).plus(&cbs).scale(I);

    let checks: Vec<(&str, Check)> = vec![
        ("tau = A + B + C", Box::new(|f| Ok(&tau.apply(f) - &abc.apply(f)))),
        ("[Lambda, A] = -i Bbar*", Box::new(|f| Ok(&commutator_apply(&lambda, &a, f) + &bbs.apply(f).scale(I)))),
        ("[Lambda, B] = -i(2Abar* + Bbar* + Cbar*)", Box::new(|f| Ok(&commutator_apply(&lambda, &b, f) + &lambda_b_rhs.apply(f)))),
        ("[Lambda, C] = -i Cbar*", Box::new(|f| Ok(&commutator_apply(&lambda, &c, f) + &cbs.apply(f).scale(I)))),
        ("del = D' - B/2", Box::new(|f| Ok(&(&del.apply(f)? - &d1.apply(f)?) + &b_half.apply(f)))),
        ("delbar = D'' - Bbar/2", Box::new(|f| Ok(&(&delbar.apply(f)? - &d2.apply(f)?) + &bbar_half.apply(f)))),
        ("delta'' = formal adjoint of D''", Box::new(|f| Ok(&delta2.apply(f)? - &ctx.formal_adjoint_apply(&d2, f)?))),
        ("delbar* = formal adjoint of delbar", Box::new(|f| Ok(&delbar_star.apply(f)? - &ctx.formal_adjoint_apply(&delbar, f)?))),
        ("del* = formal adjoint of del", Box::new(|f| Ok(&del_star.apply(f)? - &ctx.formal_adjoint_apply(&del, f)?))),
        (
            "[Lambda, D'] = i delta''_0",
            Box::new(|f| Ok(&(&lambda.apply(&d1.apply(f)?) - &d1.apply(&lambda.apply(f))?) - &delta2_zero.apply(f)?.scale(I))),
        ),
        (
            "[Lambda, del] = i(delbar* + taubar*)",
            Box::new(|f| {
                let lhs = &lambda.apply(&del.apply(f)?) - &del.apply(&lambda.apply(f))?;
                Ok(&lhs - &(&delbar_star.apply(f)? + &tau_bar_star.apply(f)).scale(I))
            }),
        ),
        (
            "[Lambda, delbar] = -i(del* + tau*)",
            Box::new(|f| {
                let lhs = &lambda.apply(&delbar.apply(f)?) - &delbar.apply(&lambda.apply(f))?;
                Ok(&lhs + &(&del_star.apply(f)? + &tau_star.apply(f)).scale(I))
            }),
        ),
        (
            "[delbar*, L] = i(del + tau)",
            Box::new(|f| {
                let lhs = &delbar_star.apply(&l.apply(f))? - &l.apply(&delbar_star.apply(f)?);
                Ok(&lhs - &(&del.apply(f)? + &tau.apply(f)).scale(I))
            }),
        ),
        (
            "[del*, L] = -i(delbar + taubar)",
            Box::new(|f| {
                let lhs = &del_star.apply(&l.apply(f))? - &l.apply(&del_star.apply(f)?);
                Ok(&lhs + &(&delbar.apply(f)? + &tau_bar.apply(f)).scale(I))
            }),
        ),
    ];
    let mut report = IdentityReport { seed, trials, forms_tested: forms.len(), residuals: Vec::new() };
    run(&mut report, &checks, &forms)?;

    let omega = FormJet::kahler_form(mj);
    let dbar_star_omega = delbar_star.apply(&omega)?;
    let via_lambda = lambda.apply(&del.apply(&omega)?).scale(I);
    let mut via_eta = FormJet::zero(n, 1, order - 1);
    for (j, e) in ctx.eta().into_iter().enumerate() {
        via_eta.set(1 << j, 0, e.scale(I));
    }
    report.merge("delbar* omega = i Lambda(del omega)", (&dbar_star_omega - &via_lambda).max_abs());
    report.merge("delbar* omega = i eta_l dz^l", (&dbar_star_omega - &via_eta).max_abs());
    report.merge("Lambda = L* (Gram adjoint)", lambda_adjoint_defect(&ctx));
    report.merge("pointwise adjoint duality", adjoint_duality_defect(&ctx, &pairs)?);
    Ok(report)
}

/// Residuals of the bundle-valued identities for the connection `conn`.
pub fn bundle_identity_suite(mj: &MetricJet, conn: &ConnectionJet, trials: usize, seed: u64) -> Result<IdentityReport> {
    let bc = BundleContext::new(mj, conn.clone())?;
    let (worst, at) = conn.compatibility_defect()?;
    if worst > 1e-10 {
        return Err(crate::Error::Precondition(format!("connection is not metric compatible at {at} (defect {worst:.3e})")));
    }
    let ctx = &bc.forms;
    let (n, rank) = (ctx.n(), conn.rank);
    let order = mj.order.max(2);
    let mut r = rng(seed);
    let forms: Vec<FormJet> =
        (0..trials.max(1)).map(|_| FormJet::random(n, rank, order, random_bidegree(n, &mut r), &mut r)).collect();

    let lambda = ctx.lambda();
    let l = ctx.l();
    let tau = ctx.tau()?;
    let (tau_bar, tau_star, tau_bar_star) = (ctx.bar(&tau), ctx.star(&tau), ctx.bar_star(&tau));
    let checks: Vec<(&str, Check)> = vec![
        (
            "[delbar_E*, L] = i(del_E + tau)",
            Box::new(|f| {
                let lhs = &bc.delbar_e_star(&l.apply(f))? - &l.apply(&bc.delbar_e_star(f)?);
                Ok(&lhs - &(&bc.del_e(f)? + &tau.apply(f)).scale(I))
            }),
        ),
        (
            "[del_E*, L] = -i(delbar_E + taubar)",
            Box::new(|f| {
                let lhs = &bc.del_e_star(&l.apply(f))? - &l.apply(&bc.del_e_star(f)?);
                Ok(&lhs + &(&bc.delbar_e(f)? + &tau_bar.apply(f)).scale(I))
            }),
        ),
        (
            "[Lambda, del_E] = i(delbar_E* + taubar*)",
            Box::new(|f| {
                let lhs = &lambda.apply(&bc.del_e(f)?) - &bc.del_e(&lambda.apply(f))?;
                Ok(&lhs - &(&bc.delbar_e_star(f)? + &tau_bar_star.apply(f)).scale(I))
            }),
        ),
        (
            "[Lambda, delbar_E] = -i(del_E* + tau*)",
            Box::new(|f| {
                let lhs = &lambda.apply(&bc.delbar_e(f)?) - &bc.delbar_e(&lambda.apply(f))?;
                Ok(&lhs + &(&bc.del_e_star(f)? + &tau_star.apply(f)).scale(I))
            }),
        ),
    ];
    let mut report = IdentityReport { seed, trials, forms_tested: forms.len(), residuals: Vec::new() };
    run(&mut report, &checks, &forms)?;

    for _ in 0..trials.max(1) {
        let phi = FormJet::random(n, 1, order, random_bidegree(n, &mut r), &mut r);
        let s = FormJet::random(n, rank, order, (0, 0), &mut r);
        let lhs = bc.curvature_operator(&phi.wedge(&s)?)?;
        let rhs = phi.wedge(&bc.curvature_operator(&s)?)?;
        report.merge("curvature operator is tensorial", (&lhs - &rhs).max_abs());

        let p = r.random_range(0..n);
        let qb = r.random_range(0..n - p);
        let q = r.random_range(0..=n);
        let pb = r.random_range(0..=n - q);
        let chi = FormJet::random(n, rank, order, (p, q), &mut r);
        let psi = FormJet::random(n, rank, order, (pb, qb), &mut r);
        let sign = if (p + q) % 2 == 0 { 1.0 } else { -1.0 };
        let lhs = ctx.del().apply(&bc.pairing(&chi, &psi)?)?;
        let rhs = &bc.pairing(&bc.del_e(&chi)?, &psi)? + &bc.pairing(&chi, &bc.delbar_e(&psi)?)?.scale(Complex64::new(sign, 0.0));
        report.merge("del{phi, psi} = {del_E phi, psi} +- {phi, delbar_E psi}", (&lhs - &rhs).max_abs());

        let (t, tb) = bc.torsion_on_section(&s)?;
        report.merge("tau(s) = -2i (delbar* omega) s", t.max_abs());
        report.merge("taubar(s) = 2i (del* omega) s", tb.max_abs());
    }
    let ricci = second_ricci_gap(&bc)?;
    report.merge("second Ricci: closed form = operator route", ricci);
    Ok(report)
}

fn second_ricci_gap(bc: &BundleContext) -> Result<f64> {
    let a = super::second_hermitian_ricci(&bc.conn, &bc.forms.mj)?;
    let b = bc.second_ricci_by_operators()?;
    Ok((a - b).camax())
}
