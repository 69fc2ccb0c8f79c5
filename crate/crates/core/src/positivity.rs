//! Eigenvalue positivity of Hermitian matrices, Griffiths sampling, and sign
//! checks of the curvature hypotheses behind the vanishing theorems.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::connection::Kind;
use crate::curvature::{CurvatureSet, CurvatureTensor};
use crate::error::{Error, Result};
use crate::forms::{second_hermitian_ricci, ConnectionJet};
use crate::metric::{MetricField, MetricJet};
use crate::sampling::{annulus_point, rng, unit_vector};
use crate::structure;

pub const DEFAULT_TOL: f64 = 1e-10;

/// Sign class of a sum of eigenvalues at a tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Positive,
    Nonnegative,
    /// Both nonnegative and nonpositive.
    Zero,
    Nonpositive,
    Negative,
    Indefinite,
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Sign::Positive => "positive",
            Sign::Nonnegative => "nonnegative",
            Sign::Zero => "zero",
            Sign::Nonpositive => "nonpositive",
            Sign::Negative => "negative",
            Sign::Indefinite => "indefinite",
        };
        f.write_str(s)
    }
}

impl Sign {
    /// Classifies a family of reals by its smallest and largest member.
    pub fn from_range(low: f64, high: f64, tol: f64) -> Sign {
        classify(low, high, tol)
    }
}

fn classify(low: f64, high: f64, tol: f64) -> Sign {
    if low > tol {
        Sign::Positive
    } else if high < -tol {
        Sign::Negative
    } else if low >= -tol && high <= tol {
        Sign::Zero
    } else if low >= -tol {
        Sign::Nonnegative
    } else if high <= tol {
        Sign::Nonpositive
    } else {
        Sign::Indefinite
    }
}

/// p-positivity of a Hermitian matrix: `verdicts[p − 1]` classifies every sum
/// of p eigenvalues.
#[derive(Debug, Clone)]
pub struct PositivityReport {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub verdicts: Vec<Sign>,
    pub point: Vec<Complex64>,
    pub tol: f64,
}

impl PositivityReport {
    /// Sum of the p smallest eigenvalues.
    pub fn lowest_sum(&self, p: usize) -> f64 {
        self.eigenvalues[..p].iter().sum()
    }

    /// Sum of the p largest eigenvalues.
    pub fn highest_sum(&self, p: usize) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - p..].iter().sum()
    }

    pub fn verdict(&self, p: usize) -> Sign {
        self.verdicts[p - 1]
    }

    pub fn positive(&self, p: usize) -> bool {
        self.lowest_sum(p) > self.tol
    }

    pub fn nonnegative(&self, p: usize) -> bool {
        self.lowest_sum(p) >= -self.tol
    }

    pub fn negative(&self, p: usize) -> bool {
        self.highest_sum(p) < -self.tol
    }

    pub fn nonpositive(&self, p: usize) -> bool {
        self.highest_sum(p) <= self.tol
    }
}

fn hermitian_part(m: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    if !m.is_square() {
        return Err(Error::Structural(format!("expected a square matrix, got {}x{}", m.nrows(), m.ncols())));
    }
    let defect = (m - m.adjoint()).camax();
    let scale = m.camax().max(1.0);
    if defect > 1e-12 * scale {
        return Err(Error::Structural(format!("matrix is not Hermitian (defect {defect:.3e})")));
    }
    Ok((m + m.adjoint()) * Complex64::new(0.5, 0.0))
}

fn sorted_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let mut e: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

fn report_from(eigenvalues: Vec<f64>, point: Vec<Complex64>, tol: f64) -> PositivityReport {
    let r = eigenvalues.len();
    let verdicts = (1..=r)
        .map(|p| {
            let low: f64 = eigenvalues[..p].iter().sum();
            let high: f64 = eigenvalues[r - p..].iter().sum();
            classify(low, high, tol)
        })
        .collect();
    PositivityReport { eigenvalues, verdicts, point, tol }
}

/// p-positivity from the eigenvalues of the coefficient matrix.
pub fn p_positivity(m: &DMatrix<Complex64>, tol: f64) -> Result<PositivityReport> {
    p_positivity_at(m, Vec::new(), tol)
}

pub fn p_positivity_at(m: &DMatrix<Complex64>, point: Vec<Complex64>, tol: f64) -> Result<PositivityReport> {
    Ok(report_from(sorted_eigenvalues(&hermitian_part(m)?), point, tol))
}

/// p-positivity of the endomorphism `K⁻¹m`, i.e. eigenvalues measured in a
/// frame orthonormal for the positive definite `k`.
pub fn p_positivity_relative(m: &DMatrix<Complex64>, k: &DMatrix<Complex64>, point: Vec<Complex64>, tol: f64) -> Result<PositivityReport> {
    let m = hermitian_part(m)?;
    let chol = hermitian_part(k)?
        .cholesky()
        .ok_or_else(|| Error::Domain("fiber metric is not positive definite".into()))?;
    let linv = chol
        .l()
        .try_inverse()
        .ok_or_else(|| Error::Domain("fiber metric is singular".into()))?;
    let w = &linv * m * linv.adjoint();
    let w = (&w + w.adjoint()) * Complex64::new(0.5, 0.0);
    Ok(report_from(sorted_eigenvalues(&w), point, tol))
}

/// Smallest and largest sum of p eigenvalues over all index subsets.
pub fn subset_sum_extremes(eigenvalues: &[f64], p: usize) -> (f64, f64) {
    let r = eigenvalues.len();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for mask in 0u32..(1 << r) {
        if mask.count_ones() as usize != p {
            continue;
        }
        let s: f64 = (0..r).filter(|&i| mask >> i & 1 == 1).map(|i| eigenvalues[i]).sum();
        lo = lo.min(s);
        hi = hi.max(s);
    }
    (lo, hi)
}

/// Sampled Griffiths form `R_{i j̄ k l̄}u^iū^jv^kv̄^l / (|u|²|v|²)`.
#[derive(Debug, Clone)]
pub struct GriffithsReport {
    pub minimum: f64,
    pub maximum: f64,
    /// `(u, v)` attaining the minimum.
    pub witness: (Vec<Complex64>, Vec<Complex64>),
    /// Largest imaginary part met; nonzero only for non-Hermitian tensors.
    pub max_imaginary: f64,
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
}

impl GriffithsReport {
    pub fn verdict(&self) -> Sign {
        classify(self.minimum, self.maximum, self.tol)
    }

    pub fn semipositive(&self) -> bool {
        self.minimum >= -self.tol
    }
}

/// Evaluates the Griffiths form on coordinate pairs `(e_i, e_k)`, on
/// `(e_i ± e_k)/√2`-type pairs, and on `trials` random unit pairs.
pub fn griffiths_sample(t: &CurvatureTensor, trials: usize, seed: u64) -> GriffithsReport {
    let n = t.n;
    let mut candidates: Vec<Vec<Complex64>> = Vec::new();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n {
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        e[i] = Complex64::new(1.0, 0.0);
        candidates.push(e);
        for k in i + 1..n {
            for phase in [Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(0.0, -1.0)] {
                let mut e = vec![Complex64::new(0.0, 0.0); n];
                e[i] = Complex64::new(s, 0.0);
                e[k] = phase * s;
                candidates.push(e);
            }
        }
    }
    let mut pairs: Vec<(Vec<Complex64>, Vec<Complex64>)> = Vec::new();
    for u in &candidates {
        for v in &candidates {
            pairs.push((u.clone(), v.clone()));
        }
    }
    let mut g = rng(seed);
    for _ in 0..trials {
        pairs.push((unit_vector(&mut g, n), unit_vector(&mut g, n)));
    }
    let values: Vec<Complex64> = pairs.par_iter().map(|(u, v)| t.contract(u, v)).collect();
    let mut best = 0;
    let (mut minimum, mut maximum, mut max_imaginary) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for (idx, val) in values.iter().enumerate() {
        if val.re < minimum {
            minimum = val.re;
            best = idx;
        }
        maximum = maximum.max(val.re);
        max_imaginary = max_imaginary.max(val.im.abs());
    }
    GriffithsReport { minimum, maximum, witness: pairs.swap_remove(best), max_imaginary, trials, seed, tol: DEFAULT_TOL }
}

/// Curvature sign conditions under which holomorphic or harmonic sections vanish.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    /// `Tr_ω R^E` nonpositive everywhere: every ∂̄_E-closed section is parallel.
    ParallelSections,
    /// `Tr_ω R^E` nonpositive everywhere and negative somewhere: no ∂̄_E-harmonic sections.
    NoHarmonicSections,
    /// `Tr_ω R^E` p-nonpositive everywhere and p-negative somewhere: no
    /// harmonic sections of `Λ^q E` for `p ≤ q ≤ rank`.
    NoHarmonicExteriorSections(usize),
    /// `Θ⁽²⁾` nonpositive everywhere and negative somewhere: no holomorphic vector fields.
    NoHolomorphicVectorFields,
    /// `Θ⁽²⁾` nonnegative everywhere and positive somewhere: no holomorphic
    /// p-forms for `p ≥ 1`.
    NoHolomorphicForms,
    /// `Θ⁽²⁾` p-nonnegative everywhere and p-positive somewhere: no holomorphic
    /// q-forms for `q ≥ p`.
    NoHolomorphicFormsAbove(usize),
}

impl Hypothesis {
    /// `(p, sign)` where sign is +1 for the nonnegative family, −1 for the nonpositive one.
    fn shape(&self) -> (usize, f64) {
        match *self {
            Hypothesis::ParallelSections | Hypothesis::NoHarmonicSections => (1, -1.0),
            Hypothesis::NoHarmonicExteriorSections(p) => (p, -1.0),
            Hypothesis::NoHolomorphicVectorFields => (1, -1.0),
            Hypothesis::NoHolomorphicForms => (1, 1.0),
            Hypothesis::NoHolomorphicFormsAbove(p) => (p, 1.0),
        }
    }

    fn needs_strict_point(&self) -> bool {
        !matches!(self, Hypothesis::ParallelSections)
    }

    pub fn describe(&self) -> String {
        match self {
            Hypothesis::ParallelSections => "Tr_w R^E nonpositive (closed sections are parallel)".into(),
            Hypothesis::NoHarmonicSections => "Tr_w R^E nonpositive, negative somewhere (no harmonic sections)".into(),
            Hypothesis::NoHarmonicExteriorSections(p) => {
                format!("Tr_w R^E {p}-nonpositive, {p}-negative somewhere (no harmonic sections of exterior powers of degree >= {p})")
            }
            Hypothesis::NoHolomorphicVectorFields => "Theta2 nonpositive, negative somewhere (no holomorphic vector fields)".into(),
            Hypothesis::NoHolomorphicForms => "Theta2 nonnegative, positive somewhere (no holomorphic p-forms, p >= 1)".into(),
            Hypothesis::NoHolomorphicFormsAbove(p) => {
                format!("Theta2 {p}-nonnegative, {p}-positive somewhere (no holomorphic q-forms, q >= {p})")
            }
        }
    }
}

pub const HYPOTHESIS_DISCLAIMER: &str =
    "checks the curvature sign hypothesis at the sampled points only; no cohomology is computed and no vanishing is concluded";

/// A curvature matrix at a sample point together with the fiber metric it is measured against.
#[derive(Debug, Clone)]
pub struct CurvatureSample {
    pub point: Vec<Complex64>,
    pub matrix: DMatrix<Complex64>,
    pub fiber_metric: DMatrix<Complex64>,
}

#[derive(Debug, Clone)]
pub struct HypothesisReport {
    pub hypothesis: Hypothesis,
    pub samples: usize,
    /// The weak (everywhere) condition held at every sample.
    pub everywhere: bool,
    /// The strict condition held at some sample.
    pub somewhere_strict: bool,
    pub holds: bool,
    /// First sample violating the weak condition, with the offending eigenvalue sum.
    pub violation: Option<(Vec<Complex64>, f64)>,
    /// A sample where the strict condition holds.
    pub strict_point: Option<Vec<Complex64>>,
    /// Extreme relevant eigenvalue sum across samples (the worst case for the weak condition).
    pub worst_sum: f64,
    pub seed: Option<u64>,
    pub tol: f64,
}

impl HypothesisReport {
    pub fn summary(&self) -> String {
        let verdict = if self.holds {
            format!("HOLDS at all {} samples", self.samples)
        } else if !self.everywhere {
            let (z, s) = self.violation.as_ref().map(|(z, s)| (format!("{z:?}"), *s)).unwrap_or_default();
            format!("FAILS: weak condition violated at z = {z} (eigenvalue sum {s:.6e})")
        } else {
            format!("FAILS: weak condition holds at all {} samples but the strict one holds nowhere", self.samples)
        };
        format!("hypothesis [{}] {}; {}", self.hypothesis.describe(), verdict, HYPOTHESIS_DISCLAIMER)
    }
}

pub fn vanishing_hypothesis_report(
    samples: &[CurvatureSample],
    hypothesis: Hypothesis,
    seed: Option<u64>,
    tol: f64,
) -> Result<HypothesisReport> {
    let (p, sign) = hypothesis.shape();
    let mut everywhere = true;
    let mut violation = None;
    let mut strict_point = None;
    let mut worst = f64::INFINITY;
    for s in samples {
        let r = p_positivity_relative(&(&s.matrix * Complex64::new(sign, 0.0)), &s.fiber_metric, s.point.clone(), tol)?;
        if p > r.eigenvalues.len() || p == 0 {
            return Err(Error::Precondition(format!("p = {p} outside 1..={}", r.eigenvalues.len())));
        }
        let low = r.lowest_sum(p);
        worst = worst.min(low);
        if !r.nonnegative(p) && everywhere {
            everywhere = false;
            violation = Some((s.point.clone(), sign * low));
        }
        if r.positive(p) && strict_point.is_none() {
            strict_point = Some(s.point.clone());
        }
    }
    let somewhere_strict = strict_point.is_some();
    let holds = everywhere && (somewhere_strict || !hypothesis.needs_strict_point()) && !samples.is_empty();
    Ok(HypothesisReport {
        hypothesis,
        samples: samples.len(),
        everywhere,
        somewhere_strict,
        holds,
        violation,
        strict_point,
        worst_sum: sign * worst,
        seed,
        tol,
    })
}

/// `Θ⁽²⁾` of the Chern connection on T^{1,0}, measured against h.
pub fn chern_second_samples(field: &MetricField, points: &[Vec<Complex64>]) -> Result<Vec<CurvatureSample>> {
    points
        .par_iter()
        .map(|z| {
            let mj = field.metric_jet(z, 2)?;
            let cs = CurvatureSet::new(&mj)?;
            Ok(CurvatureSample { point: z.clone(), matrix: cs.second(Kind::Chern), fiber_metric: mj.h0() })
        })
        .collect()
}

/// `Tr_ω R^E` for connections given at their base points, measured against the fiber metric.
pub fn connection_second_samples(data: &[(ConnectionJet, MetricJet)]) -> Result<Vec<CurvatureSample>> {
    data.iter()
        .map(|(conn, mj)| {
            Ok(CurvatureSample {
                point: mj.point.clone(),
                matrix: second_hermitian_ricci(conn, mj)?,
                fiber_metric: conn.metric.constant(),
            })
        })
        .collect()
}

/// Positivity properties of the standard Hopf metric, evaluated through the
/// jet pipeline at sampled points.
#[derive(Debug, Clone)]
pub struct HopfChecklist {
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    /// `Θ⁽²⁾` 1-positive at every sample.
    pub chern_second_positive: bool,
    /// `Θ⁽¹⁾` nonnegative at every sample.
    pub chern_first_nonnegative: bool,
    /// Largest distance between the eigenvalues of `Θ⁽¹⁾` and `{0, n/|z|², …}`.
    pub chern_first_eigen_residual: f64,
    pub griffiths_minimum: f64,
    pub hermitian_ricci_nonnegative: bool,
    pub hermitian_ricci_2_positive: bool,
    pub bismut_first_nonpositive: bool,
    pub bismut_first_2_negative: bool,
    pub bismut_first_max_abs: f64,
    pub skt: bool,
    /// First sample where any clause failed.
    pub witness: Option<Vec<Complex64>>,
}

impl HopfChecklist {
    pub fn passes(&self) -> bool {
        let bismut = if self.n == 2 {
            self.bismut_first_max_abs <= 1e-10
        } else {
            self.bismut_first_nonpositive && self.bismut_first_2_negative
        };
        self.chern_second_positive
            && self.chern_first_nonnegative
            && self.chern_first_eigen_residual <= 1e-10
            && self.griffiths_minimum >= -1e-12
            && self.hermitian_ricci_nonnegative
            && self.hermitian_ricci_2_positive
            && bismut
            && self.skt == (self.n == 2)
    }

    pub fn lines(&self) -> Vec<(String, bool)> {
        let bismut = if self.n == 2 {
            (format!("B1 vanishes identically (max |B1| = {:.3e})", self.bismut_first_max_abs), self.bismut_first_max_abs <= 1e-10)
        } else {
            ("B1 nonpositive and 2-negative".to_string(), self.bismut_first_nonpositive && self.bismut_first_2_negative)
        };
        vec![
            ("Theta2 positive".to_string(), self.chern_second_positive),
            (
                format!("Theta1 nonnegative with eigenvalues {{0, n/|z|^2}} (residual {:.3e})", self.chern_first_eigen_residual),
                self.chern_first_nonnegative && self.chern_first_eigen_residual <= 1e-10,
            ),
            (format!("Griffiths semipositive (minimum {:.3e})", self.griffiths_minimum), self.griffiths_minimum >= -1e-12),
            (
                "Hermitian-Ricci nonnegative and 2-positive".to_string(),
                self.hermitian_ricci_nonnegative && self.hermitian_ricci_2_positive,
            ),
            bismut,
            (format!("SKT = {}", self.skt), self.skt == (self.n == 2)),
        ]
    }
}

/// Evaluates the Hopf positivity checklist at `samples` points with
/// `1 ≤ |z| ≤ 2`.
pub fn hopf_checklist(n: usize, samples: usize, seed: u64) -> Result<HopfChecklist> {
    if n < 2 {
        return Err(Error::Domain("the Hopf checklist needs n ≥ 2".into()));
    }
    let mut g = rng(seed);
    let points: Vec<Vec<Complex64>> = (0..samples).map(|_| annulus_point(&mut g, n, 1.0, 2.0)).collect();
    let field = MetricField::hopf(n);
    let tol = DEFAULT_TOL;
    struct Row {
        ok: [bool; 8],
        eig_residual: f64,
        griffiths: f64,
        bismut_abs: f64,
    }
    let rows = points
        .par_iter()
        .enumerate()
        .map(|(idx, z)| -> Result<Row> {
            let mj = field.metric_jet(z, 2)?;
            let cs = CurvatureSet::new(&mj)?;
            let r2: f64 = z.iter().map(|w| w.norm_sqr()).sum();
            let second = p_positivity(&cs.second(Kind::Chern), tol)?;
            let first = p_positivity(&cs.first(Kind::Chern), tol)?;
            let mut expected = vec![n as f64 / r2; n];
            expected[0] = 0.0;
            let eig_residual = first.eigenvalues.iter().zip(&expected).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            let griffiths = griffiths_sample(&cs.chern, 64, seed.wrapping_add(idx as u64)).minimum;
            let ricci = p_positivity(&cs.hermitian_ricci(), tol)?;
            let b1 = cs.first(Kind::Bismut);
            let bismut = p_positivity(&b1, tol)?;
            let skt = structure::classify(&mj, structure::DEFAULT_TOL)?.skt();
            Ok(Row {
                ok: [
                    second.positive(1),
                    first.nonnegative(1),
                    ricci.nonnegative(1),
                    ricci.positive(2),
                    bismut.nonpositive(1),
                    bismut.negative(2),
                    skt,
                    true,
                ],
                eig_residual,
                griffiths,
                bismut_abs: b1.camax(),
            })
        })
        .collect::<Result<Vec<Row>>>()?;
    let all = |k: usize| rows.iter().all(|r| r.ok[k]);
    let expect_bismut_negative = n > 2;
    let witness = rows
        .iter()
        .position(|r| {
            !(r.ok[0] && r.ok[1] && r.ok[2] && r.ok[3] && r.eig_residual <= 1e-10 && r.griffiths >= -1e-12)
                || (expect_bismut_negative && !(r.ok[4] && r.ok[5]))
        })
        .map(|i| points[i].clone());
    Ok(HopfChecklist {
        n,
        samples,
        seed,
        chern_second_positive: all(0),
        chern_first_nonnegative: all(1),
        chern_first_eigen_residual: rows.iter().map(|r| r.eig_residual).fold(0.0, f64::max),
        griffiths_minimum: rows.iter().map(|r| r.griffiths).fold(f64::INFINITY, f64::min),
        hermitian_ricci_nonnegative: all(2),
        hermitian_ricci_2_positive: all(3),
        bismut_first_nonpositive: all(4),
        bismut_first_2_negative: all(5),
        bismut_first_max_abs: rows.iter().map(|r| r.bismut_abs).fold(0.0, f64::max),
        skt: all(6),
        witness,
    })
}
