//! Hermitian metric fields on a chart and their jets at a point.
//!
//! A metric is stored as the matrix `h[i][j] = h_{i j̄}`. Its inverse is kept
//! in the index placement `hinv[k][l] = h^{k l̄}`, normalized by
//! `Σ_l h^{k l̄} h_{j l̄} = δ_{kj}`, which makes `hinv` the inverse of `hᵀ`.
//!
//! Torus metrics use real coordinates `x ∈ [0,1)^{2n}` with
//! `z^j = x^j + √−1·x^{n+j}` and Fourier modes `e^{2π√−1 m·x}`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::jets::{Jet, JetMatrix, Wirtinger};

/// Eigenvalue floor used when certifying positive definiteness.
pub const POSITIVITY_FLOOR: f64 = 1e-10;

/// Tolerance of the conjugate-pair condition on Fourier amplitudes.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Polynomial term `C · z^α z̄^β` of a metric expanded at the origin.
#[derive(Debug, Clone)]
pub struct PolyTerm {
    pub alpha: Vec<u8>,
    pub beta: Vec<u8>,
    pub coeff: DMatrix<Complex64>,
}

/// Fourier mode `A · e^{2π√−1 m·x}` of a torus metric.
#[derive(Debug, Clone)]
pub struct FourierTerm {
    pub freq: Vec<i32>,
    pub amp: DMatrix<Complex64>,
}

#[derive(Debug, Clone)]
pub enum MetricKind {
    Flat,
    /// `4δ_{ij}/|z|²` on ℂⁿ∖{0}.
    Hopf,
    /// Polynomial metric, normalized to the identity at the origin.
    NormalForm(Vec<PolyTerm>),
    TorusFourier(Vec<FourierTerm>),
    Scaled(Box<MetricField>, f64),
}

#[derive(Debug, Clone)]
pub struct MetricField {
    n: usize,
    kind: MetricKind,
}

/// Jets of `h_{i j̄}` and `h^{k l̄}` at a point.
#[derive(Debug, Clone)]
pub struct MetricJet {
    pub point: Vec<Complex64>,
    pub h: JetMatrix,
    pub hinv: JetMatrix,
    pub order: usize,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Wirtinger rates `(a, b)` with `e^{2π√−1 m·x} = exp(Σ a_j z^j + b_j z̄^j)`.
pub fn fourier_rates(freq: &[i32]) -> Vec<Complex64> {
    let n = freq.len() / 2;
    let mut rates = vec![Complex64::default(); 2 * n];
    for j in 0..n {
        let (mr, mi) = (freq[j] as f64, freq[n + j] as f64);
        rates[j] = c(PI * mi, PI * mr);
        rates[n + j] = c(-PI * mi, PI * mr);
    }
    rates
}

/// Real torus coordinates of a complex point.
pub fn real_coords(z: &[Complex64]) -> Vec<f64> {
    z.iter().map(|w| w.re).chain(z.iter().map(|w| w.im)).collect()
}

/// Complex point with real coordinates `x`.
pub fn complex_coords(x: &[f64]) -> Vec<Complex64> {
    let n = x.len() / 2;
    (0..n).map(|j| c(x[j], x[n + j])).collect()
}

fn phase(freq: &[i32], x: &[f64]) -> Complex64 {
    let t: f64 = freq.iter().zip(x).map(|(&m, &xi)| m as f64 * xi).sum();
    Complex64::from_polar(1.0, 2.0 * PI * t)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &DMatrix<Complex64>) -> f64 {
    let herm = (m + m.adjoint()) * c(0.5, 0.0);
    herm.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

impl MetricField {
    pub fn flat(n: usize) -> Self {
        Self { n, kind: MetricKind::Flat }
    }

    pub fn hopf(n: usize) -> Self {
        Self { n, kind: MetricKind::Hopf }
    }

    /// Polynomial metric; the terms must pair up under conjugation.
    pub fn normal_form(n: usize, terms: Vec<PolyTerm>) -> Result<Self> {
        for t in &terms {
            if t.alpha.len() != n || t.beta.len() != n || t.coeff.shape() != (n, n) {
                return Err(Error::Structural("polynomial term has wrong shape".into()));
            }
        }
        let field = Self { n, kind: MetricKind::NormalForm(terms) };
        field.check_polynomial_symmetry()?;
        Ok(field)
    }

    /// Torus metric from Fourier modes, checking the conjugate-pair condition.
    /// Positivity is not checked here; see [`MetricField::validate_on_grid`].
    pub fn torus(n: usize, terms: Vec<FourierTerm>) -> Result<Self> {
        for t in &terms {
            if t.freq.len() != 2 * n || t.amp.shape() != (n, n) {
                return Err(Error::Structural("Fourier term has wrong shape".into()));
            }
        }
        check_conjugate_pairs(&terms)?;
        Ok(Self { n, kind: MetricKind::TorusFourier(terms) })
    }

    /// Kähler torus metric `δ + ∂∂̄φ` for the real potential
    /// `φ = Σ c_m e^{2π√−1 m·x}`; each `(m, c_m)` is completed by `(−m, conj c_m)`.
    pub fn kahler_torus(n: usize, potential: &[(Vec<i32>, Complex64)]) -> Result<Self> {
        let mut terms = vec![FourierTerm { freq: vec![0; 2 * n], amp: DMatrix::identity(n, n) }];
        let mut add = |freq: Vec<i32>, cm: Complex64| {
            let r = fourier_rates(&freq);
            let amp = DMatrix::from_fn(n, n, |i, j| cm * r[i] * r[n + j]);
            if let Some(t) = terms.iter_mut().find(|t| t.freq == freq) {
                t.amp += amp;
            } else {
                terms.push(FourierTerm { freq, amp });
            }
        };
        for (m, cm) in potential {
            if m.len() != 2 * n {
                return Err(Error::Structural("potential frequency has wrong length".into()));
            }
            if m.iter().all(|&k| k == 0) {
                continue;
            }
            add(m.clone(), *cm);
            add(m.iter().map(|k| -k).collect(), cm.conj());
        }
        Self::torus(n, terms)
    }

    pub fn scaled(base: MetricField, factor: f64) -> Result<Self> {
        if !(factor > 0.0) {
            return Err(Error::Domain(format!("scale factor must be positive, got {factor}")));
        }
        Ok(Self { n: base.n, kind: MetricKind::Scaled(Box::new(base), factor) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &MetricKind {
        &self.kind
    }

    pub fn is_torus(&self) -> bool {
        match &self.kind {
            MetricKind::TorusFourier(_) | MetricKind::Flat => true,
            MetricKind::Scaled(b, _) => b.is_torus(),
            _ => false,
        }
    }

    fn check_polynomial_symmetry(&self) -> Result<()> {
        let MetricKind::NormalForm(terms) = &self.kind else { return Ok(()) };
        let sum = |alpha: &[u8], beta: &[u8]| {
            let mut m = DMatrix::zeros(self.n, self.n);
            for t in terms.iter().filter(|t| t.alpha == alpha && t.beta == beta) {
                m += &t.coeff;
            }
            m
        };
        for t in terms {
            let a = sum(&t.alpha, &t.beta);
            let b = sum(&t.beta, &t.alpha);
            if (&a - b.adjoint()).camax() > HERMITIAN_TOL * (1.0 + a.camax()) {
                return Err(Error::Validation(format!(
                    "polynomial term z^{:?} z̄^{:?} lacks its conjugate partner",
                    t.alpha, t.beta
                )));
            }
        }
        Ok(())
    }

    fn check_domain(&self, z: &[Complex64]) -> Result<()> {
        if z.len() != self.n {
            return Err(Error::Structural(format!(
                "point has {} coordinates, metric has dimension {}",
                z.len(),
                self.n
            )));
        }
        if matches!(self.kind, MetricKind::Hopf) && z.iter().all(|w| w.norm_sqr() == 0.0) {
            return Err(Error::Domain("the Hopf metric is undefined at z = 0".into()));
        }
        if let MetricKind::Scaled(b, _) = &self.kind {
            return b.check_domain(z);
        }
        Ok(())
    }

    /// `h_{i j̄}(z)` without the positivity check.
    pub fn evaluate_raw(&self, z: &[Complex64]) -> Result<DMatrix<Complex64>> {
        self.check_domain(z)?;
        let n = self.n;
        Ok(match &self.kind {
            MetricKind::Flat => DMatrix::identity(n, n),
            MetricKind::Hopf => {
                let r2: f64 = z.iter().map(|w| w.norm_sqr()).sum();
                DMatrix::identity(n, n) * c(4.0 / r2, 0.0)
            }
            MetricKind::NormalForm(terms) => {
                let mut h = DMatrix::zeros(n, n);
                for t in terms {
                    let mut mono = c(1.0, 0.0);
                    for k in 0..n {
                        mono *= z[k].powu(t.alpha[k] as u32) * z[k].conj().powu(t.beta[k] as u32);
                    }
                    h += &t.coeff * mono;
                }
                h
            }
            MetricKind::TorusFourier(terms) => {
                let x = real_coords(z);
                let mut h = DMatrix::zeros(n, n);
                for t in terms {
                    h += &t.amp * phase(&t.freq, &x);
                }
                h
            }
            MetricKind::Scaled(b, f) => b.evaluate_raw(z)? * c(*f, 0.0),
        })
    }

    /// `h_{i j̄}(z)`, required to be positive definite.
    pub fn evaluate(&self, z: &[Complex64]) -> Result<DMatrix<Complex64>> {
        let h = self.evaluate_raw(z)?;
        let lam = min_eigenvalue(&h);
        if !(lam > POSITIVITY_FLOOR) {
            return Err(Error::Positivity {
                point: z.iter().flat_map(|w| [w.re, w.im]).collect(),
                min_eig: lam,
            });
        }
        Ok(h)
    }

    /// Taylor jet of `h_{i j̄}` at `z`, exact through degree `order`.
    pub fn h_jet(&self, z: &[Complex64], order: usize) -> Result<JetMatrix> {
        self.check_domain(z)?;
        let n = self.n;
        let shift = |k: usize, w: Wirtinger| {
            let p = if w == Wirtinger::Holomorphic { z[k] } else { z[k].conj() };
            &Jet::constant(n, order, p) + &Jet::variable(n, order, w, k)
        };
        Ok(match &self.kind {
            MetricKind::Flat => JetMatrix::identity(n, n, order),
            MetricKind::Hopf => {
                let mut r2 = Jet::zero(n, order);
                for k in 0..n {
                    r2 += &(&shift(k, Wirtinger::Holomorphic) * &shift(k, Wirtinger::Antiholomorphic));
                }
                let f = r2.try_inverse()?.scale_real(4.0);
                JetMatrix::from_fn(n, n, |i, j| if i == j { f.clone() } else { Jet::zero(n, order) })
            }
            MetricKind::NormalForm(terms) => {
                let zs: Vec<Jet> = (0..n).map(|k| shift(k, Wirtinger::Holomorphic)).collect();
                let zb: Vec<Jet> = (0..n).map(|k| shift(k, Wirtinger::Antiholomorphic)).collect();
                let mut out = JetMatrix::from_fn(n, n, |_, _| Jet::zero(n, order));
                for t in terms {
                    let mut mono = Jet::real(n, order, 1.0);
                    for k in 0..n {
                        for _ in 0..t.alpha[k] {
                            mono = &mono * &zs[k];
                        }
                        for _ in 0..t.beta[k] {
                            mono = &mono * &zb[k];
                        }
                    }
                    for i in 0..n {
                        for j in 0..n {
                            if t.coeff[(i, j)] != Complex64::default() {
                                let v = out.get(i, j) + &(&mono * t.coeff[(i, j)]);
                                out.set(i, j, v);
                            }
                        }
                    }
                }
                out
            }
            MetricKind::TorusFourier(terms) => {
                let x = real_coords(z);
                let mut out = JetMatrix::from_fn(n, n, |_, _| Jet::zero(n, order));
                for t in terms {
                    let e = Jet::exp_linear(n, order, phase(&t.freq, &x), &fourier_rates(&t.freq));
                    for i in 0..n {
                        for j in 0..n {
                            if t.amp[(i, j)] != Complex64::default() {
                                let v = out.get(i, j) + &(&e * t.amp[(i, j)]);
                                out.set(i, j, v);
                            }
                        }
                    }
                }
                out
            }
            MetricKind::Scaled(b, f) => b.h_jet(z, order)?.map(|j| j.scale_real(*f)),
        })
    }

    /// Jets of the metric and its inverse at `z`.
    pub fn metric_jet(&self, z: &[Complex64], order: usize) -> Result<MetricJet> {
        let h = self.h_jet(z, order)?;
        MetricJet::from_h(z.to_vec(), h)
    }

    /// Checks positivity on the regular grid with `per_axis` points per real axis
    /// of the unit cube; the first failing point is reported.
    pub fn validate_on_grid(&self, per_axis: usize) -> Result<()> {
        let dims = 2 * self.n;
        let total = per_axis.pow(dims as u32);
        for idx in 0..total {
            let mut rem = idx;
            let x: Vec<f64> = (0..dims)
                .map(|_| {
                    let k = rem % per_axis;
                    rem /= per_axis;
                    k as f64 / per_axis as f64
                })
                .collect();
            let h = self.evaluate_raw(&complex_coords(&x))?;
            let lam = min_eigenvalue(&h);
            if !(lam > POSITIVITY_FLOOR) {
                return Err(Error::Positivity { point: x, min_eig: lam });
            }
        }
        Ok(())
    }
}

impl MetricJet {
    /// Builds the inverse jets from `h`, rejecting a non-positive base value.
    pub fn from_h(point: Vec<Complex64>, h: JetMatrix) -> Result<Self> {
        let h0 = h.constant();
        let lam = min_eigenvalue(&h0);
        if !(lam > POSITIVITY_FLOOR) || (&h0 - h0.adjoint()).camax() > 1e-10 * (1.0 + h0.camax()) {
            return Err(Error::Positivity {
                point: point.iter().flat_map(|w| [w.re, w.im]).collect(),
                min_eig: lam,
            });
        }
        let hinv = h.transpose().inverse()?;
        let order = h.order();
        Ok(Self { point, h, hinv, order })
    }

    pub fn n(&self) -> usize {
        self.h.rows()
    }

    /// `h_{i j̄}` at the base point.
    pub fn h0(&self) -> DMatrix<Complex64> {
        self.h.constant()
    }

    /// `h^{k l̄}` at the base point.
    pub fn hinv0(&self) -> DMatrix<Complex64> {
        self.hinv.constant()
    }

    /// `∂h_{i j̄}/∂z^k` (or z̄^k) as jets of order K−1.
    pub fn dh(&self, which: Wirtinger, k: usize) -> Result<JetMatrix> {
        self.h.try_map(|j| j.wirtinger(which, k))
    }
}

fn check_conjugate_pairs(terms: &[FourierTerm]) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for t in terms {
        if !seen.insert(t.freq.clone()) {
            return Err(Error::Hermitian {
                freq: t.freq.clone(),
                detail: "frequency listed twice".into(),
            });
        }
    }
    for t in terms {
        let neg: Vec<i32> = t.freq.iter().map(|k| -k).collect();
        let Some(partner) = terms.iter().find(|s| s.freq == neg) else {
            if t.amp.camax() == 0.0 {
                continue;
            }
            return Err(Error::Hermitian {
                freq: t.freq.clone(),
                detail: format!("no amplitude for the conjugate frequency {neg:?}"),
            });
        };
        let gap = (&partner.amp - t.amp.adjoint()).camax();
        if gap > HERMITIAN_TOL * (1.0 + t.amp.camax()) {
            return Err(Error::Hermitian {
                freq: t.freq.clone(),
                detail: format!("amplitude at {neg:?} differs from the adjoint by {gap:e}"),
            });
        }
    }
    Ok(())
}

/// Parses the torus metric text format.
///
/// ```text
/// # comment
/// dim <n>
/// freq <m_1> .. <m_2n> ; <re_11> <im_11> <re_12> <im_12> ... <re_nn> <im_nn>
/// ```
///
/// Blank lines and `#` comments are ignored. Exactly one `dim` line must come
/// first, and every `freq` line must carry 2n integers, a `;`, and 2n² reals.
pub fn parse_torus_metric(text: &str) -> Result<(usize, Vec<FourierTerm>)> {
    let mut n: Option<usize> = None;
    let mut terms = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let err = |msg: String| Error::Parse { line: line_no, msg };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut words = line.split_whitespace();
        match words.next() {
            Some("dim") => {
                if n.is_some() {
                    return Err(err("duplicate dim line".into()));
                }
                let v = words.next().ok_or_else(|| err("missing dimension".into()))?;
                let d: usize = v.parse().map_err(|_| err(format!("bad dimension {v:?}")))?;
                if d == 0 {
                    return Err(err("dimension must be positive".into()));
                }
                if let Some(extra) = words.next() {
                    return Err(err(format!("trailing token {extra:?}")));
                }
                n = Some(d);
            }
            Some("freq") => {
                let d = n.ok_or_else(|| err("freq line before dim".into()))?;
                let rest: Vec<&str> = words.collect();
                let split = rest
                    .iter()
                    .position(|w| *w == ";")
                    .ok_or_else(|| err("missing ';' separator".into()))?;
                let (fw, aw) = (&rest[..split], &rest[split + 1..]);
                if fw.len() != 2 * d {
                    return Err(err(format!("expected {} frequency integers, got {}", 2 * d, fw.len())));
                }
                if aw.len() != 2 * d * d {
                    return Err(err(format!("expected {} amplitude reals, got {}", 2 * d * d, aw.len())));
                }
                let freq = fw
                    .iter()
                    .map(|w| w.parse::<i32>().map_err(|_| err(format!("bad integer {w:?}"))))
                    .collect::<Result<Vec<_>>>()?;
                let vals = aw
                    .iter()
                    .map(|w| {
                        w.parse::<f64>()
                            .ok()
                            .filter(|v| v.is_finite())
                            .ok_or_else(|| err(format!("bad real {w:?}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let amp = DMatrix::from_fn(d, d, |i, j| {
                    let k = 2 * (i * d + j);
                    c(vals[k], vals[k + 1])
                });
                terms.push(FourierTerm { freq, amp });
            }
            Some(other) => return Err(err(format!("unknown directive {other:?}"))),
            None => unreachable!(),
        }
    }
    let n = n.ok_or_else(|| Error::Parse { line: 0, msg: "missing dim line".into() })?;
    Ok((n, terms))
}

/// Reads a torus metric file and validates the conjugate-pair condition and
/// positivity on the 5^{2n} grid.
pub fn ingest_torus_metric(path: impl AsRef<Path>) -> Result<MetricField> {
    let text = std::fs::read_to_string(path)?;
    let (n, terms) = parse_torus_metric(&text)?;
    let field = MetricField::torus(n, terms)?;
    field.validate_on_grid(5)?;
    Ok(field)
}

/// Serializes Fourier modes in the format read by [`parse_torus_metric`].
pub fn format_torus_metric(n: usize, terms: &[FourierTerm]) -> String {
    let mut s = format!("dim {n}\n");
    for t in terms {
        s.push_str("freq");
        for m in &t.freq {
            let _ = write!(s, " {m}");
        }
        s.push_str(" ;");
        for i in 0..n {
            for j in 0..n {
                let a = t.amp[(i, j)];
                let _ = write!(s, " {:e} {:e}", a.re, a.im);
            }
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hopf_at_unit_point() {
        let f = MetricField::hopf(2);
        let h = f.evaluate(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!((h - DMatrix::identity(2, 2) * c(4.0, 0.0)).camax() < 1e-15);
        assert!(matches!(f.evaluate(&[c(0.0, 0.0); 2]), Err(Error::Domain(_))));
    }

    #[test]
    fn hopf_first_derivative() {
        let mj = MetricField::hopf(2).metric_jet(&[c(1.0, 0.0), c(0.0, 0.0)], 2).unwrap();
        let d = mj.dh(Wirtinger::Holomorphic, 0).unwrap();
        assert!((d.get(0, 0).constant_term() - c(-4.0, 0.0)).norm() < 1e-14);
        assert!(d.get(0, 1).constant_term().norm() < 1e-14);
    }

    #[test]
    fn inverse_placement() {
        let z = [c(0.3, -0.2), c(0.1, 0.4)];
        let f = MetricField::kahler_torus(2, &[(vec![1, 0, 0, 1], c(0.01, 0.005))]).unwrap();
        let mj = f.metric_jet(&z, 2).unwrap();
        let (h, hi) = (mj.h0(), mj.hinv0());
        for k in 0..2 {
            for j in 0..2 {
                let s: Complex64 = (0..2).map(|l| hi[(k, l)] * h[(j, l)]).sum();
                let want = if k == j { 1.0 } else { 0.0 };
                assert!((s - want).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn parse_rejects_trailing_garbage() {
        let bad = "dim 1\nfreq 0 0 ; 1 0 junk\n";
        assert!(matches!(parse_torus_metric(bad), Err(Error::Parse { line: 2, .. })));
        let bad = "dim 1 2\n";
        assert!(matches!(parse_torus_metric(bad), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn format_round_trip() {
        let f = MetricField::kahler_torus(1, &[(vec![1, 2], c(0.003, -0.001))]).unwrap();
        let MetricKind::TorusFourier(terms) = f.kind() else { unreachable!() };
        let (_, back) = parse_torus_metric(&format_torus_metric(1, terms)).unwrap();
        assert_eq!(back.len(), terms.len());
        for (a, b) in terms.iter().zip(&back) {
            assert_eq!(a.freq, b.freq);
            assert!((&a.amp - &b.amp).camax() < 1e-15);
        }
    }
}
