//! Curvature formulas at a point where `h = δ` and `Γ_{ij}^k = 0`, written
//! directly in first and second derivatives of the metric, and their
//! comparison with the connection-based pipeline.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::connection::{self, Kind};
use crate::curvature::{CurvatureSet, CurvatureTensor};
use crate::error::{Error, Result};
use crate::metric::MetricJet;
use crate::normal_form::Derivatives;

type M = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Largest deviation from `h = δ` and `Γ_{ij}^k = 0` at the base point.
pub fn normality_defect(mj: &MetricJet) -> Result<f64> {
    let n = mj.n();
    let mut worst = (mj.h0() - M::identity(n, n)).camax();
    let lc = connection::levi_civita(mj)?;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                worst = worst.max(lc.value(i, j, k).norm());
            }
        }
    }
    Ok(worst)
}

fn require_normal(mj: &MetricJet) -> Result<()> {
    let d = normality_defect(mj)?;
    if d > 1e-12 {
        return Err(Error::Precondition(format!("not a normal point: defect {d:.3e}")));
    }
    Ok(())
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn sum(n: usize, f: impl Fn(usize) -> Complex64) -> Complex64 {
    (0..n).map(f).sum()
}

fn sum2(n: usize, f: impl Fn(usize, usize) -> Complex64) -> Complex64 {
    (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).map(|(a, b)| f(a, b)).sum()
}

fn tensor(kind: Kind, d: &Derivatives, f: impl Fn(usize, usize, usize, usize) -> Complex64) -> CurvatureTensor {
    CurvatureTensor::from_fn(kind, d.n, Vec::new(), f)
}

/// Formula set evaluated from the derivative tables.
pub struct NormalPoint {
    pub d: Derivatives,
}

impl NormalPoint {
    pub fn new(mj: &MetricJet) -> Result<Self> {
        Ok(Self { d: Derivatives::new(mj)? })
    }

    fn n(&self) -> usize {
        self.d.n
    }

    /// Levi-Civita `R_{i j̄ k l̄}` where only `h = δ` is assumed.
    pub fn lc_unit_metric(&self) -> CurvatureTensor {
        let d = &self.d;
        let n = self.n();
        tensor(Kind::LeviCivita, d, |i, j, k, l| {
            let second = -(d.dd(k, j, i, l) + d.dd(i, l, k, j)) * 0.5;
            let first = sum(n, |q| {
                d.d(i, k, q) * d.db(j, q, l) + d.d(k, i, q) * d.db(l, q, j) + d.d(k, i, q) * d.db(j, q, l)
                    + d.d(i, k, q) * d.db(l, q, j)
                    + d.d(i, q, l) * d.db(q, k, j)
                    + d.d(k, q, j) * d.db(q, i, l)
                    + d.d(q, i, l) * d.db(j, k, q)
                    + d.d(q, k, j) * d.db(l, i, q)
                    - d.d(i, q, l) * d.db(j, k, q)
                    - d.d(k, q, j) * d.db(l, i, q)
                    - d.d(q, i, l) * d.db(q, k, j)
                    - d.d(q, k, j) * d.db(q, i, l)
            }) * 0.25;
            second + first
        })
    }

    /// Levi-Civita `R_{i j̄ k l̄}` at a normal point.
    pub fn lc(&self) -> CurvatureTensor {
        let d = &self.d;
        let n = self.n();
        tensor(Kind::LeviCivita, d, |i, j, k, l| {
            -(d.dd(k, j, i, l) + d.dd(i, l, k, j)) * 0.5
                - sum(n, |q| d.d(i, q, l) * d.db(j, k, q) + d.d(k, q, j) * d.db(l, i, q))
        })
    }

    /// Hermitian-Ricci `h^{i j̄} R_{i j̄ k l̄}` as a matrix in (k, l).
    pub fn hermitian_ricci(&self) -> M {
        let d = &self.d;
        let n = self.n();
        M::from_fn(n, n, |k, l| {
            -sum(n, |s| d.dd(k, s, s, l) + d.dd(s, l, k, s)) * 0.5
                - sum2(n, |q, s| d.d(s, q, l) * d.db(s, k, q) + d.d(s, k, q) * d.db(s, q, l))
        })
    }

    /// `h^{i j̄} R_{k j̄ i l̄}` as a matrix in (k, l).
    pub fn mixed_trace(&self) -> M {
        let d = &self.d;
        let n = self.n();
        M::from_fn(n, n, |k, l| {
            -sum(n, |s| d.dd(s, s, k, l) + d.dd(k, l, s, s)) * 0.5
                - sum2(n, |q, s| d.d(k, q, l) * d.db(s, s, q) + d.d(s, q, s) * d.db(l, k, q))
        })
    }

    /// Complexified Ricci `𝓡_{k l̄}`.
    pub fn complexified_ricci(&self) -> M {
        let d = &self.d;
        let n = self.n();
        M::from_fn(n, n, |k, l| {
            sum(n, |s| d.dd(k, s, s, l) + d.dd(s, l, k, s)) * 0.5 - sum(n, |s| d.dd(s, s, k, l) + d.dd(k, l, s, s))
                + sum2(n, |q, s| d.d(s, q, l) * d.db(s, k, q) + d.d(s, k, q) * d.db(s, q, l))
                - sum2(n, |q, s| d.d(k, q, l) * d.db(s, s, q) + d.d(s, q, s) * d.db(l, k, q)) * 2.0
        })
    }

    /// Curvature of the induced connection, `R̂_{i j̄ k l̄}`.
    pub fn induced(&self) -> CurvatureTensor {
        let d = &self.d;
        let n = self.n();
        tensor(Kind::Induced, d, |i, j, k, l| {
            -(d.dd(k, j, i, l) + d.dd(i, l, k, j)) * 0.5 - sum(n, |q| d.d(i, q, l) * d.db(j, k, q))
        })
    }

    fn induced_second_order(&self, i: usize, j: usize) -> Complex64 {
        let d = &self.d;
        -sum(self.n(), |k| d.dd(k, j, i, k) + d.dd(i, k, k, j)) * 0.5
    }

    pub fn induced_first(&self) -> M {
        let d = &self.d;
        let n = self.n();
        M::from_fn(n, n, |i, j| self.induced_second_order(i, j) - sum2(n, |k, q| d.d(i, q, k) * d.db(j, k, q)))
    }

    pub fn induced_second(&self) -> M {
        let d = &self.d;
        let n = self.n();
        M::from_fn(n, n, |i, j| self.induced_second_order(i, j) - sum2(n, |k, q| d.db(k, i, q) * d.d(k, q, j)))
    }

    /// `R̂⁽¹⁾ − R̂⁽²⁾` from first derivatives alone.
    pub fn induced_ricci_gap(&self) -> M {
        let d = &self.d;
        let n = self.n();
        M::from_fn(n, n, |i, j| sum2(n, |k, q| d.db(k, i, q) * d.d(k, q, j) - d.d(k, i, q) * d.db(k, q, j)))
    }

    /// Chern `Θ_{i j̄ k l̄}` where only `h = δ` is assumed.
    pub fn chern(&self) -> CurvatureTensor {
        let d = &self.d;
        let n = self.n();
        tensor(Kind::Chern, d, |i, j, k, l| -d.dd(i, j, k, l) + sum(n, |p| d.db(j, p, l) * d.d(i, k, p)))
    }

    /// Bismut `B_{i j̄ α β̄}` at a normal point, with the given weight on the
    /// `∂̄h ∂h` term (printed as −4).
    pub fn bismut_weighted(&self, weight: f64) -> CurvatureTensor {
        let d = &self.d;
        let n = self.n();
        tensor(Kind::Bismut, d, |i, j, a, b| {
            -(d.dd(a, j, i, b) + d.dd(i, b, a, j) - d.dd(i, j, a, b)) + sum(n, |g| d.d(i, a, g) * d.db(j, g, b))
                + sum(n, |g| d.db(j, a, g) * d.d(i, g, b)) * weight
        })
    }

    pub fn bismut(&self) -> CurvatureTensor {
        self.bismut_weighted(-4.0)
    }

    fn traces(&self) -> Traces {
        let d = &self.d;
        let n = self.n();
        Traces {
            a: M::from_fn(n, n, |k, l| sum(n, |i| d.dd(k, l, i, i))),
            l: M::from_fn(n, n, |k, l| sum(n, |i| d.dd(i, i, k, l))),
            p: M::from_fn(n, n, |k, l| sum2(n, |i, q| d.db(i, q, l) * d.d(i, k, q))),
            q: M::from_fn(n, n, |k, l| sum2(n, |i, q| d.db(i, k, q) * d.d(i, q, l))),
            c: M::from_fn(n, n, |k, l| sum2(n, |i, q| d.d(k, q, l) * d.db(i, i, q) + d.d(i, q, i) * d.db(l, k, q))),
        }
    }

    /// Ricci matrices of a balanced metric at a normal point, as printed in the
    /// source formulas. The `-derived` entry is the expression obtained by
    /// tracing the Bismut tensor formula under the balanced relations.
    pub fn balanced_riccis(&self) -> Vec<(&'static str, M)> {
        let t = self.traces();
        let one = -&t.a + &t.p;
        vec![
            ("chern-first", one.clone()),
            ("induced-first", one.clone()),
            ("bismut-first", one),
            ("chern-second", -&t.l + &t.p),
            ("induced-second", -&t.a + &t.p * re(2.0) - &t.q),
            ("bismut-second", -&t.a + &t.p * re(5.0) - &t.q * re(4.0)),
            ("bismut-second-derived", &t.l - &t.a * re(2.0) + &t.p * re(5.0) - &t.q * re(4.0)),
            ("hermitian-ricci", -&t.a + &t.p - &t.q),
            ("complexified-ricci", -&t.l - (&t.p - &t.q)),
        ]
    }

    /// Ricci matrices of an SKT metric at a normal point, with the traced
    /// Bismut expression as a `-derived` entry.
    pub fn skt_riccis(&self) -> Vec<(&'static str, M)> {
        let t = self.traces();
        let half = -(&t.l + &t.a) * re(0.5);
        vec![
            ("chern-first", -&t.a + &t.p),
            ("chern-second", -&t.l + &t.p),
            ("induced-first", &half - &t.p),
            ("induced-second", &half - &t.q),
            ("bismut-first", -&t.l + &t.p - &t.q * re(4.0)),
            ("bismut-first-derived", -&t.l - &t.p * re(3.0)),
            ("bismut-second", -&t.a + &t.p - &t.q * re(4.0)),
            ("hermitian-ricci", &half - &t.p - &t.q),
            ("complexified-ricci", &half + &t.p + &t.q - &t.c * re(2.0)),
        ]
    }

    /// Trace identities of a balanced normal point: the two sums of first
    /// derivatives, and the three second-derivative sums with the correction.
    pub fn balanced_symmetry_residuals(&self) -> [f64; 3] {
        let d = &self.d;
        let n = self.n();
        let mut first: f64 = 0.0;
        for i in 0..n {
            first = first.max(sum(n, |s| d.db(s, s, i)).norm()).max(sum(n, |s| d.db(i, s, s)).norm());
        }
        let t = self.traces();
        let lhs = M::from_fn(n, n, |k, l| sum(n, |i| d.dd(k, i, i, l)));
        let mid = M::from_fn(n, n, |k, l| sum(n, |i| d.dd(i, l, k, i)));
        let rhs = &t.a - &t.p * re(2.0);
        [first, (&lhs - &mid).camax(), (&lhs - rhs).camax()]
    }
}

struct Traces {
    /// `Σ_i ∂_k∂_l̄ h_{i ī}`.
    a: M,
    /// `Σ_i ∂_i∂_ī h_{k l̄}`.
    l: M,
    /// `Σ ∂_ī h_{q l̄} ∂_i h_{k q̄}`.
    p: M,
    /// `Σ ∂_ī h_{k q̄} ∂_i h_{q l̄}`.
    q: M,
    /// `Σ (∂_k h_{q l̄} ∂_ī h_{i q̄} + ∂_i h_{q ī} ∂_l̄ h_{k q̄})`.
    c: M,
}

/// Named residuals of a formula check.
#[derive(Debug, Clone, Default)]
pub struct FormulaReport {
    pub residuals: Vec<(String, f64)>,
}

impl FormulaReport {
    fn push(&mut self, name: impl Into<String>, r: f64) {
        self.residuals.push((name.into(), r));
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|(_, r)| *r).fold(0.0, f64::max)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.residuals.iter().find(|(n, _)| n == name).map(|(_, r)| *r)
    }
}

fn pipeline_ricci(set: &CurvatureSet, name: &str) -> M {
    match name {
        "chern-first" => set.first(Kind::Chern),
        "chern-second" => set.second(Kind::Chern),
        "induced-first" => set.first(Kind::Induced),
        "induced-second" => set.second(Kind::Induced),
        "bismut-first" | "bismut-first-derived" => set.first(Kind::Bismut),
        "bismut-second" | "bismut-second-derived" => set.second(Kind::Bismut),
        "hermitian-ricci" => set.hermitian_ricci(),
        "complexified-ricci" => set.complexified_ricci(),
        _ => unreachable!("unknown Ricci matrix {name}"),
    }
}

/// Compares the general normal-point formulas with the pipeline.
pub fn general_formulas(mj: &MetricJet) -> Result<FormulaReport> {
    require_normal(mj)?;
    let np = NormalPoint::new(mj)?;
    let set = CurvatureSet::new(mj)?;
    let mut r = FormulaReport::default();
    let lc = set.tensor(Kind::LeviCivita);
    r.push("lc-unit-metric", np.lc_unit_metric().distance(lc));
    r.push("lc", np.lc().distance(lc));
    r.push("hermitian-ricci", (np.hermitian_ricci() - set.hermitian_ricci()).camax());
    let n = mj.n();
    let mixed = M::from_fn(n, n, |k, l| sum(n, |i| lc.get(k, i, i, l)));
    r.push("mixed-trace", (np.mixed_trace() - mixed).camax());
    r.push("complexified-ricci", (np.complexified_ricci() - set.complexified_ricci()).camax());
    r.push("induced", np.induced().distance(set.tensor(Kind::Induced)));
    r.push("induced-first", (np.induced_first() - set.first(Kind::Induced)).camax());
    r.push("induced-second", (np.induced_second() - set.second(Kind::Induced)).camax());
    let gap = set.first(Kind::Induced) - set.second(Kind::Induced);
    r.push("induced-ricci-gap", (np.induced_ricci_gap() - gap).camax());
    r.push("chern", np.chern().distance(set.tensor(Kind::Chern)));
    r.push("bismut", np.bismut().distance(set.tensor(Kind::Bismut)));
    Ok(r)
}

fn ricci_report(mj: &MetricJet, formulas: Vec<(&'static str, M)>) -> Result<FormulaReport> {
    let set = CurvatureSet::new(mj)?;
    let mut r = FormulaReport::default();
    for (name, m) in formulas {
        r.push(name, (m - pipeline_ricci(&set, name)).camax());
    }
    Ok(r)
}

/// Compares the balanced-point Ricci formulas with the pipeline.
pub fn balanced_formulas(mj: &MetricJet) -> Result<FormulaReport> {
    require_normal(mj)?;
    let np = NormalPoint::new(mj)?;
    let mut r = ricci_report(mj, np.balanced_riccis())?;
    let [a, b, c] = np.balanced_symmetry_residuals();
    r.push("first-derivative-traces", a);
    r.push("second-derivative-traces", b);
    r.push("second-derivative-correction", c);
    Ok(r)
}

/// Compares the SKT-point Ricci formulas with the pipeline.
pub fn skt_formulas(mj: &MetricJet) -> Result<FormulaReport> {
    require_normal(mj)?;
    let np = NormalPoint::new(mj)?;
    ricci_report(mj, np.skt_riccis())
}

/// Inequalities and the trace identity on SKT metrics.
#[derive(Debug, Clone)]
pub struct SktRelations {
    /// Smallest eigenvalue of `Θ⁽¹⁾ − B⁽²⁾`.
    pub chern_first_minus_bismut_second: f64,
    /// Smallest eigenvalue of `Θ⁽²⁾ − B⁽¹⁾`.
    pub chern_second_minus_bismut_first: f64,
    /// `max |Θ⁽²⁾ + B⁽²⁾ − Θ⁽¹⁾ − R̂⁽¹⁾|`.
    pub trace_identity_residual: f64,
    /// The same with the first trace of the Levi-Civita tensor in place of `R̂⁽¹⁾`.
    pub trace_identity_residual_lc: f64,
}

pub fn skt_relations(mj: &MetricJet) -> Result<SktRelations> {
    let set = CurvatureSet::new(mj)?;
    let (c1, c2) = (set.first(Kind::Chern), set.second(Kind::Chern));
    let (b1, b2) = (set.first(Kind::Bismut), set.second(Kind::Bismut));
    let r1 = set.first(Kind::Induced);
    let lam = |m: M| crate::metric::min_eigenvalue(&((&m + m.adjoint()) * Complex64::new(0.5, 0.0)));
    Ok(SktRelations {
        chern_first_minus_bismut_second: lam(&c1 - &b2),
        chern_second_minus_bismut_first: lam(&c2 - &b1),
        trace_identity_residual: (&c2 + &b2 - &c1 - &r1).camax(),
        trace_identity_residual_lc: (&c2 + &b2 - &c1 - set.first(Kind::LeviCivita)).camax(),
    })
}

/// `⟨(R − R̂)(u, ū, v, v̄)⟩`, which is never positive.
pub fn lc_minus_induced(set: &CurvatureSet, u: &[Complex64], v: &[Complex64]) -> Complex64 {
    let lc = set.tensor(Kind::LeviCivita);
    let ind = set.tensor(Kind::Induced);
    let mut acc = ZERO;
    let n = u.len();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    acc += (lc.get(i, j, k, l) - ind.get(i, j, k, l)) * u[i] * u[j].conj() * v[k] * v[l].conj();
                }
            }
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normal_form::{random_normal_form, Constraint, Scales};
    use crate::sampling::rng;

    fn jet(n: usize, seed: u64, c: &[Constraint]) -> MetricJet {
        random_normal_form(n, &mut rng(seed), Scales::default(), c).unwrap().jet(2).unwrap()
    }

    #[test]
    fn general_formulas_match_pipeline() {
        for seed in 0..3 {
            let r = general_formulas(&jet(3, seed, &[])).unwrap();
            assert!(r.max_residual() < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn printed_bismut_weight_is_the_only_one_that_fits() {
        let mj = jet(2, 4, &[]);
        let np = NormalPoint::new(&mj).unwrap();
        let b = CurvatureSet::new(&mj).unwrap().bismut;
        assert!(np.bismut_weighted(-4.0).distance(&b) < 1e-12);
        assert!(np.bismut_weighted(-1.0).distance(&b) > 1e-3);
    }

    #[test]
    fn balanced_derived_forms_match() {
        let r = balanced_formulas(&jet(3, 6, &[Constraint::Balanced])).unwrap();
        for (name, v) in &r.residuals {
            if name != "bismut-second" {
                assert!(*v < 1e-11, "{name}: {v}");
            }
        }
        assert!(r.get("bismut-second").unwrap() > 1e-3);
    }

    #[test]
    fn skt_derived_forms_match() {
        let mj = jet(3, 7, &[Constraint::Skt]);
        let r = skt_formulas(&mj).unwrap();
        for (name, v) in &r.residuals {
            if name != "bismut-first" {
                assert!(*v < 1e-11, "{name}: {v}");
            }
        }
        assert!(r.get("bismut-first").unwrap() > 1e-3);
        let rel = skt_relations(&mj).unwrap();
        assert!(rel.chern_first_minus_bismut_second > -1e-10);
        assert!(rel.chern_second_minus_bismut_first > -1e-10);
    }

    #[test]
    fn rejects_points_that_are_not_normal() {
        let z = vec![Complex64::new(1.0, 0.0), ZERO];
        let mj = crate::metric::MetricField::hopf(2).metric_jet(&z, 2).unwrap();
        assert!(matches!(general_formulas(&mj), Err(Error::Precondition(_))));
    }
}
