//! Pointwise structure classification: Kähler, balanced and SKT defects,
//! the torsion 1-form and the Laplacian comparison.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::connection::{self, ChristoffelTable};
use crate::error::{Error, Result};
use crate::jets::Jet;
use crate::metric::{MetricField, MetricJet};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Default tolerance for classifying a defect as zero.
pub const DEFAULT_TOL: f64 = 1e-9;

/// `f_{i j̄ k} = ∂h_{i j̄}/∂z^k − ∂h_{k j̄}/∂z^i` as `f[i][j][k]`, with its largest modulus.
pub fn kahler_defect(mj: &MetricJet) -> Result<(f64, Vec<Complex64>)> {
    need(mj, 1)?;
    let n = mj.n();
    let mut f = Vec::with_capacity(n * n * n);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let v = mj.h.get(i, j).d_at_base(k) - mj.h.get(k, j).d_at_base(i);
                worst = worst.max(v.norm());
                f.push(v);
            }
        }
    }
    Ok((worst, f))
}

fn need(mj: &MetricJet, k: usize) -> Result<()> {
    if mj.order < k {
        return Err(Error::OrderExhausted(format!("needs a metric jet of order {k}, got {}", mj.order)));
    }
    Ok(())
}

/// Torsion 1-form `η_ℓ = Σ_j Γ_{ℓ j̄}^{j̄}` as jets.
pub fn torsion_form_jets(lc: &ChristoffelTable) -> Vec<Jet> {
    let n = lc.n();
    (0..n)
        .map(|l| {
            let mut acc = Jet::zero(n, lc.order());
            for j in 0..n {
                acc += lc.get(l, n + j, n + j);
            }
            acc
        })
        .collect()
}

/// `η_ℓ` at the base point. The metric is balanced exactly where η vanishes.
pub fn balanced_torsion(mj: &MetricJet) -> Result<Vec<Complex64>> {
    need(mj, 1)?;
    let lc = connection::levi_civita(mj)?;
    Ok(torsion_form_jets(&lc).iter().map(|j| j.constant_term()).collect())
}

/// `Σ_i Γ_{ℓ̄ i}^i`, the conjugate of `η_ℓ` reached through the unbarred trace.
pub fn torsion_form_conjugate_route(lc: &ChristoffelTable) -> Vec<Complex64> {
    let n = lc.n();
    (0..n).map(|l| (0..n).map(|i| lc.value(n + l, i, i)).sum()).collect()
}

/// Residual matrix of `Λ(∂∂̄ω) = 0` contracted with the metric:
/// `h^{k l̄}(∂_k∂_l̄ h_{i j̄} + ∂_i∂_j̄ h_{k l̄} − ∂_k∂_j̄ h_{i l̄} − ∂_i∂_l̄ h_{k j̄})`.
pub fn skt_residual(mj: &MetricJet) -> Result<DMatrix<Complex64>> {
    skt_with(mj, &mj.hinv0())
}

/// The same expression with plain sums over k, as written for points where `h = δ`.
pub fn skt_residual_plain(mj: &MetricJet) -> Result<DMatrix<Complex64>> {
    let n = mj.n();
    skt_with(mj, &DMatrix::identity(n, n))
}

fn skt_with(mj: &MetricJet, w: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    need(mj, 2)?;
    let n = mj.n();
    let d2 = |a: usize, b: usize, p: usize, q: usize| mj.h.get(p, q).d2_at_base(a, n + b);
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let mut s = ZERO;
        for k in 0..n {
            for l in 0..n {
                let wk = w[(k, l)];
                if wk == ZERO {
                    continue;
                }
                s += wk * (d2(k, l, i, j) + d2(i, j, k, l) - d2(k, j, i, l) - d2(i, l, k, j));
            }
        }
        s
    }))
}

/// `(Δ_∂̄ f, Δ_∂ f, −h^{i j̄}∂_i∂_j̄ f)` at the base point.
pub fn laplacian_compare(mj: &MetricJet, f: &Jet) -> Result<[Complex64; 3]> {
    need(mj, 1)?;
    if f.order() < 2 {
        return Err(Error::OrderExhausted("the Laplacians need a function jet of order 2".into()));
    }
    let n = mj.n();
    let lc = connection::levi_civita(mj)?;
    let hi = mj.hinv0();
    let mut canonical = ZERO;
    for i in 0..n {
        for j in 0..n {
            canonical -= hi[(i, j)] * f.d2_at_base(i, n + j);
        }
    }
    let mut dbar = canonical;
    let mut d = canonical;
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                dbar += hi[(i, j)] * lc.value(i, n + j, n + l) * f.d_at_base(n + l) * 2.0;
                d += hi[(i, j)] * lc.value(n + j, i, l) * f.d_at_base(l) * 2.0;
            }
        }
    }
    Ok([dbar, d, canonical])
}

/// `h^{i j̄} Γ_{i j̄}^{ℓ̄}` and the torsion route `−h^{k ℓ̄} η_k`, which agree on every metric.
pub fn barred_trace_routes(mj: &MetricJet) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let lc = connection::levi_civita(mj)?;
    let direct = connection::barred_trace(&lc, mj);
    let eta: Vec<Complex64> = torsion_form_jets(&lc).iter().map(|j| j.constant_term()).collect();
    let hi = mj.hinv0();
    let n = mj.n();
    let via = (0..n).map(|l| -(0..n).map(|k| hi[(k, l)] * eta[k]).sum::<Complex64>()).collect();
    Ok((direct, via))
}

#[derive(Debug, Clone)]
pub struct StructureReport {
    pub point: Vec<Complex64>,
    pub kahler_defect: f64,
    pub balanced_defect: f64,
    pub skt_defect: f64,
    /// The SKT residual with plain sums over the trace index.
    pub skt_plain_defect: f64,
    pub tol: f64,
}

impl StructureReport {
    pub fn kahler(&self) -> bool {
        self.kahler_defect <= self.tol
    }

    pub fn balanced(&self) -> bool {
        self.balanced_defect <= self.tol
    }

    pub fn skt(&self) -> bool {
        self.skt_defect <= self.tol
    }
}

pub fn classify(mj: &MetricJet, tol: f64) -> Result<StructureReport> {
    let (k, _) = kahler_defect(mj)?;
    let eta = balanced_torsion(mj)?;
    Ok(StructureReport {
        point: mj.point.clone(),
        kahler_defect: k,
        balanced_defect: eta.iter().fold(0.0, |m, v| m.max(v.norm())),
        skt_defect: skt_residual(mj)?.camax(),
        skt_plain_defect: skt_residual_plain(mj)?.camax(),
        tol,
    })
}

/// Verdict over sampled points; a condition holds if it holds at every sample.
#[derive(Debug, Clone)]
pub struct FieldClassification {
    pub samples: usize,
    pub kahler: bool,
    pub balanced: bool,
    pub skt: bool,
    pub max_kahler_defect: f64,
    pub max_balanced_defect: f64,
    pub max_skt_defect: f64,
    pub reports: Vec<StructureReport>,
}

pub fn classify_field(field: &MetricField, points: &[Vec<Complex64>], tol: f64) -> Result<FieldClassification> {
    use rayon::prelude::*;
    let reports = points
        .par_iter()
        .map(|z| classify(&field.metric_jet(z, 2)?, tol))
        .collect::<Result<Vec<_>>>()?;
    let mx = |f: fn(&StructureReport) -> f64| reports.iter().map(f).fold(0.0, f64::max);
    let (k, b, s) = (mx(|r| r.kahler_defect), mx(|r| r.balanced_defect), mx(|r| r.skt_defect));
    Ok(FieldClassification {
        samples: reports.len(),
        kahler: k <= tol,
        balanced: b <= tol,
        skt: s <= tol,
        max_kahler_defect: k,
        max_balanced_defect: b,
        max_skt_defect: s,
        reports,
    })
}

/// Outcome of checking that a balanced SKT point is Kähler.
#[derive(Debug, Clone, PartialEq)]
pub enum KahlerForcing {
    /// The point is not both balanced and SKT.
    Skipped { balanced_defect: f64, skt_defect: f64 },
    /// `¼ Σ |f_{i j̄ k}|²`, equal to `Σ |∂h_{k q̄}/∂z^i|²` at a normal point.
    Checked { norm: f64 },
}

pub fn balanced_skt_forces_kahler(mj: &MetricJet, tol: f64) -> Result<KahlerForcing> {
    let r = classify(mj, tol)?;
    if !(r.balanced() && r.skt()) {
        return Ok(KahlerForcing::Skipped { balanced_defect: r.balanced_defect, skt_defect: r.skt_defect });
    }
    let (_, f) = kahler_defect(mj)?;
    Ok(KahlerForcing::Checked { norm: f.iter().map(|v| v.norm_sqr()).sum::<f64>() / 4.0 })
}
