//! Pointwise exterior algebra of (p,q)-forms with jet coefficients, optionally
//! valued in a trivialized vector bundle of rank r.
//!
//! A basis element is a bit mask over the 2n generators: bit `a < n` is
//! `dz^a`, bit `n + b` is `dz̄^b`, and the wedge is taken in increasing bit
//! order, so `dz^I ∧ dz̄^J` carries no extra sign. The pointwise product is
//! `⟨dz^i, dz^k⟩ = h^{i k̄}`, `⟨dz̄^j, dz̄^l⟩ = h^{l j̄}`, extended to wedge
//! products by Gram determinants.

mod algebra;
mod bundle;
mod operators;
mod suite;

pub use algebra::{AlgebraicOp, Factor, Word};
pub use bundle::{second_hermitian_ricci, BundleContext, ConnectionJet};
pub use operators::{FirstOrderOp, FormContext, OperatorName};
pub use suite::{bundle_identity_suite, identity_suite, IdentityReport};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::jets::{Jet, JetMatrix};
use crate::metric::MetricJet;
use crate::sampling::SeededRng;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Sign of moving generator `a` to the front of the wedge `mask`.
pub(crate) fn sign_before(mask: usize, a: usize) -> f64 {
    if (mask & ((1 << a) - 1)).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Mask of `dz^I ∧ dz̄^J`.
pub fn mask_of(n: usize, holo: &[usize], anti: &[usize]) -> usize {
    holo.iter().fold(0, |m, &i| m | 1 << i) | anti.iter().fold(0, |m, &j| m | 1 << (n + j))
}

/// `(p, q)` of a basis mask.
pub fn mask_bidegree(n: usize, mask: usize) -> (usize, usize) {
    let low = (1 << n) - 1;
    ((mask & low).count_ones() as usize, (mask >> n).count_ones() as usize)
}

/// All masks of bidegree `(p, q)` in increasing order.
pub fn masks_of_bidegree(n: usize, p: usize, q: usize) -> Vec<usize> {
    (0..1 << (2 * n)).filter(|&m| mask_bidegree(n, m) == (p, q)).collect()
}

fn bits(mask: usize) -> impl Iterator<Item = usize> {
    (0..usize::BITS as usize).filter(move |a| mask >> a & 1 == 1)
}

/// An element of `⊕ Ω^{p,q} ⊗ E` near a point, stored densely over all masks.
#[derive(Clone, Debug)]
pub struct FormJet {
    n: usize,
    rank: usize,
    coeffs: Vec<Jet>,
}

impl FormJet {
    pub fn zero(n: usize, rank: usize, order: usize) -> Self {
        Self { n, rank, coeffs: vec![Jet::zero(n, order); rank << (2 * n)] }
    }

    /// The scalar 0-form `f`.
    pub fn function(f: Jet) -> Self {
        let mut out = Self::zero(f.n(), 1, f.order());
        out.coeffs[0] = f;
        out
    }

    /// The E-valued 0-form with components `s`.
    pub fn section(s: Vec<Jet>) -> Self {
        let n = s[0].n();
        let order = s.iter().map(Jet::order).min().unwrap_or(0);
        let mut out = Self::zero(n, s.len(), order);
        for (a, j) in s.into_iter().enumerate() {
            out.coeffs[a] = j;
        }
        out
    }

    /// `Σ c_{I J} dz^I ∧ dz̄^J` with Gaussian jet coefficients of bidegree `(p, q)`.
    pub fn random(n: usize, rank: usize, order: usize, bidegree: (usize, usize), rng: &mut SeededRng) -> Self {
        let mut out = Self::zero(n, rank, order);
        for m in masks_of_bidegree(n, bidegree.0, bidegree.1) {
            for a in 0..rank {
                out.coeffs[m * rank + a] = random_jet(n, order, rng);
            }
        }
        out
    }

    /// The Kähler form `ω = (√−1/2) h_{i j̄} dz^i ∧ dz̄^j`.
    pub fn kahler_form(mj: &MetricJet) -> Self {
        let n = mj.n();
        let mut out = Self::zero(n, 1, mj.order);
        for i in 0..n {
            for j in 0..n {
                out.coeffs[mask_of(n, &[i], &[j])] = mj.h.get(i, j).scale(Complex64::new(0.0, 0.5));
            }
        }
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn order(&self) -> usize {
        self.coeffs.iter().map(Jet::order).min().unwrap_or(0)
    }

    pub fn masks(&self) -> usize {
        1 << (2 * self.n)
    }

    pub fn get(&self, mask: usize, alpha: usize) -> &Jet {
        &self.coeffs[mask * self.rank + alpha]
    }

    pub fn set(&mut self, mask: usize, alpha: usize, v: Jet) {
        self.coeffs[mask * self.rank + alpha] = v;
    }

    pub(crate) fn add_to(&mut self, mask: usize, alpha: usize, v: &Jet) {
        self.coeffs[mask * self.rank + alpha] += v;
    }

    /// The single bidegree carried by the nonzero coefficients, if there is one.
    pub fn bidegree(&self) -> Option<(usize, usize)> {
        let mut found = None;
        for m in 0..self.masks() {
            if (0..self.rank).all(|a| self.get(m, a).is_zero()) {
                continue;
            }
            let b = mask_bidegree(self.n, m);
            match found {
                None => found = Some(b),
                Some(f) if f != b => return None,
                _ => {}
            }
        }
        found
    }

    /// The `(p, q)` component.
    pub fn component(&self, p: usize, q: usize) -> Self {
        let mut out = Self::zero(self.n, self.rank, self.order());
        for m in masks_of_bidegree(self.n, p, q) {
            for a in 0..self.rank {
                out.set(m, a, self.get(m, a).clone());
            }
        }
        out
    }

    /// Largest modulus among all Taylor coefficients.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(Jet::max_abs).fold(0.0, f64::max)
    }

    pub fn truncate(&self, order: usize) -> Self {
        Self { n: self.n, rank: self.rank, coeffs: self.coeffs.iter().map(|j| j.truncate(order)).collect() }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|j| j.scale(c))
    }

    pub fn map(&self, f: impl Fn(&Jet) -> Jet) -> Self {
        Self { n: self.n, rank: self.rank, coeffs: self.coeffs.iter().map(f).collect() }
    }

    /// Coefficientwise derivative along variable slot `s`.
    pub fn d_coeff(&self, s: usize) -> Result<Self> {
        Ok(Self { n: self.n, rank: self.rank, coeffs: self.coeffs.iter().map(|j| j.d(s)).collect::<Result<_>>()? })
    }

    /// Complex conjugate: `conj(c dz^I ∧ dz̄^J) = (−1)^{|I||J|} c̄ dz^J ∧ dz̄^I`.
    pub fn conj(&self) -> Self {
        let n = self.n;
        let low = (1 << n) - 1;
        let mut out = Self::zero(n, self.rank, self.order());
        for m in 0..self.masks() {
            let (hi, lo) = (m >> n, m & low);
            let target = hi | lo << n;
            let (p, q) = mask_bidegree(n, m);
            let s = if (p * q) % 2 == 0 { 1.0 } else { -1.0 };
            for a in 0..self.rank {
                out.set(target, a, self.get(m, a).conj().scale_real(s));
            }
        }
        out
    }

    /// `self ∧ other`; one factor must be scalar, the result has the other's rank.
    pub fn wedge(&self, other: &FormJet) -> Result<Self> {
        if self.n != other.n || (self.rank != 1 && other.rank != 1) {
            return Err(Error::Structural("wedge needs a scalar factor over the same chart".into()));
        }
        let rank = self.rank.max(other.rank);
        let mut out = Self::zero(self.n, rank, self.order().min(other.order()));
        for m1 in 0..self.masks() {
            for m2 in 0..other.masks() {
                if m1 & m2 != 0 {
                    continue;
                }
                let s = if bits(m2).map(|b| (m1 >> b).count_ones()).sum::<u32>() % 2 == 0 { 1.0 } else { -1.0 };
                for a in 0..rank {
                    let x = self.get(m1, if self.rank == 1 { 0 } else { a });
                    let y = other.get(m2, if other.rank == 1 { 0 } else { a });
                    if x.is_zero() || y.is_zero() {
                        continue;
                    }
                    out.add_to(m1 | m2, a, &(x * y).scale_real(s));
                }
            }
        }
        Ok(out)
    }

    /// Componentwise product with the bundle endomorphism `m` (`m[β][α]`).
    pub fn apply_endomorphism(&self, m: &JetMatrix) -> Self {
        let mut out = Self::zero(self.n, self.rank, self.order().min(m.order()));
        for mask in 0..self.masks() {
            for b in 0..self.rank {
                for a in 0..self.rank {
                    let x = self.get(mask, a);
                    if x.is_zero() {
                        continue;
                    }
                    out.add_to(mask, b, &(m.get(b, a) * x));
                }
            }
        }
        out
    }

    /// Pointwise inner product at the base point, with fiber metric `k`
    /// (`k[α][β] = ⟨e_α, e_β⟩`).
    pub fn inner_at_base(&self, other: &FormJet, mj: &MetricJet, k: &DMatrix<Complex64>) -> Complex64 {
        let hinv = mj.hinv0();
        let mut s = ZERO;
        for m1 in 0..self.masks() {
            for m2 in 0..other.masks() {
                if mask_bidegree(self.n, m1) != mask_bidegree(self.n, m2) {
                    continue;
                }
                let g = gram_entry(self.n, &hinv, m1, m2);
                if g == ZERO {
                    continue;
                }
                for a in 0..self.rank {
                    for b in 0..self.rank {
                        s += self.get(m1, a).constant_term() * other.get(m2, b).constant_term().conj() * g * k[(a, b)];
                    }
                }
            }
        }
        s
    }
}

impl std::ops::Add for &FormJet {
    type Output = FormJet;
    fn add(self, rhs: &FormJet) -> FormJet {
        combine(self, rhs, 1.0)
    }
}

impl std::ops::Sub for &FormJet {
    type Output = FormJet;
    fn sub(self, rhs: &FormJet) -> FormJet {
        combine(self, rhs, -1.0)
    }
}

fn combine(a: &FormJet, b: &FormJet, s: f64) -> FormJet {
    assert_eq!((a.n, a.rank), (b.n, b.rank), "forms over different bundles");
    FormJet { n: a.n, rank: a.rank, coeffs: a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x + &y.scale_real(s)).collect() }
}

pub(crate) fn random_jet(n: usize, order: usize, rng: &mut SeededRng) -> Jet {
    Jet::from_fn(n, order, |_| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im)
    })
}

fn det(m: &DMatrix<Complex64>) -> Complex64 {
    if m.nrows() == 0 {
        Complex64::new(1.0, 0.0)
    } else {
        m.determinant()
    }
}

/// `⟨e_{m1}, e_{m2}⟩` at a point where `h^{i k̄} = hinv[(i, k)]`.
pub(crate) fn gram_entry(n: usize, hinv: &DMatrix<Complex64>, m1: usize, m2: usize) -> Complex64 {
    let low = (1 << n) - 1;
    let (i1, j1): (Vec<usize>, Vec<usize>) = (bits(m1 & low).collect(), bits(m1 >> n).collect());
    let (i2, j2): (Vec<usize>, Vec<usize>) = (bits(m2 & low).collect(), bits(m2 >> n).collect());
    if i1.len() != i2.len() || j1.len() != j2.len() {
        return ZERO;
    }
    let a = DMatrix::from_fn(i1.len(), i1.len(), |r, s| hinv[(i1[r], i2[s])]);
    let b = DMatrix::from_fn(j1.len(), j1.len(), |r, s| hinv[(j2[s], j1[r])]);
    det(&a) * det(&b)
}

/// Jet-valued determinant of a small square array of jets.
pub(crate) fn jet_det(m: &[Vec<Jet>], n: usize, order: usize) -> Jet {
    match m.len() {
        0 => Jet::real(n, order, 1.0),
        1 => m[0][0].clone(),
        k => {
            let mut acc = Jet::zero(n, order);
            for c in 0..k {
                let minor: Vec<Vec<Jet>> =
                    m[1..].iter().map(|row| row.iter().enumerate().filter(|(s, _)| *s != c).map(|(_, j)| j.clone()).collect()).collect();
                let t = &m[0][c] * &jet_det(&minor, n, order);
                if c % 2 == 0 {
                    acc += &t;
                } else {
                    acc -= &t;
                }
            }
            acc
        }
    }
}

/// Gram matrix `G[c][b] = ⟨e_b, e_c⟩` over the masks of one bidegree, as jets.
pub(crate) fn gram_jets(mj: &MetricJet, masks: &[usize]) -> JetMatrix {
    let n = mj.n();
    let low = (1 << n) - 1;
    JetMatrix::from_fn(masks.len(), masks.len(), |c, b| {
        let (mb, mc) = (masks[b], masks[c]);
        let (i1, j1): (Vec<usize>, Vec<usize>) = (bits(mb & low).collect(), bits(mb >> n).collect());
        let (i2, j2): (Vec<usize>, Vec<usize>) = (bits(mc & low).collect(), bits(mc >> n).collect());
        let a: Vec<Vec<Jet>> = i1.iter().map(|&r| i2.iter().map(|&s| mj.hinv.get(r, s).clone()).collect()).collect();
        let bb: Vec<Vec<Jet>> = j1.iter().map(|&r| j2.iter().map(|&s| mj.hinv.get(s, r).clone()).collect()).collect();
        &jet_det(&a, n, mj.order) * &jet_det(&bb, n, mj.order)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::MetricField;
    use crate::sampling::rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn conjugation_is_an_involution() {
        let mut r = rng(5);
        let f = FormJet::random(2, 1, 2, (2, 1), &mut r);
        assert!((&f.conj().conj() - &f).max_abs() < 1e-15);
        assert_eq!(f.conj().bidegree(), Some((1, 2)));
    }

    #[test]
    fn wedge_is_graded_commutative() {
        let mut r = rng(6);
        let a = FormJet::random(3, 1, 2, (1, 0), &mut r);
        let b = FormJet::random(3, 1, 2, (1, 1), &mut r);
        let d = FormJet::random(3, 1, 2, (0, 1), &mut r);
        assert!((&a.wedge(&b).unwrap() - &b.wedge(&a).unwrap()).max_abs() < 1e-13);
        assert!((&a.wedge(&d).unwrap() + &d.wedge(&a).unwrap()).max_abs() < 1e-13);
        assert_eq!(a.wedge(&b).unwrap().bidegree(), Some((2, 1)));
    }

    #[test]
    fn wedge_matches_exterior_multiplication() {
        let mut r = rng(8);
        let theta = &FormJet::random(3, 1, 2, (1, 0), &mut r) + &FormJet::random(3, 1, 2, (0, 1), &mut r);
        let phi = FormJet::random(3, 1, 2, (1, 1), &mut r);
        let slots = (0..6).map(|a| (a, theta.get(1 << a, 0).clone())).collect();
        let via_op = AlgebraicOp::wedge(slots).apply(&phi);
        assert!((&theta.wedge(&phi).unwrap() - &via_op).max_abs() < 1e-13);
        let dz0 = FormJet::zero(3, 1, 0);
        let mut dz1 = dz0.clone();
        let mut dz0 = dz0;
        dz0.set(1, 0, Jet::real(3, 0, 1.0));
        dz1.set(2, 0, Jet::real(3, 0, 1.0));
        assert_eq!(dz0.wedge(&dz1).unwrap().get(3, 0).constant_term().re, 1.0);
        assert_eq!(dz1.wedge(&dz0).unwrap().get(3, 0).constant_term().re, -1.0);
    }

    #[test]
    fn conjugation_respects_wedge() {
        let mut r = rng(7);
        let a = FormJet::random(2, 1, 2, (1, 0), &mut r);
        let b = FormJet::random(2, 1, 2, (0, 1), &mut r);
        let lhs = a.wedge(&b).unwrap().conj();
        let rhs = a.conj().wedge(&b.conj()).unwrap();
        assert!((&lhs - &rhs).max_abs() < 1e-13);
    }

    #[test]
    fn gram_jets_match_pointwise_gram() {
        let z = vec![c(1.0, 0.3), c(-0.2, 0.5)];
        let mj = MetricField::hopf(2).metric_jet(&z, 2).unwrap();
        let masks = masks_of_bidegree(2, 1, 1);
        let g = gram_jets(&mj, &masks).constant();
        let hinv = mj.hinv0();
        for (c_, &mc) in masks.iter().enumerate() {
            for (b, &mb) in masks.iter().enumerate() {
                assert!((g[(c_, b)] - gram_entry(2, &hinv, mb, mc)).norm() < 1e-15);
            }
        }
    }
}
