//! Algebraic (zeroth-order) operators as sums of words in wedges and contractions.

use num_complex::Complex64;

use super::{sign_before, FormJet};
use crate::jets::Jet;
use crate::metric::MetricJet;

/// One elementary factor. Slot lists are sparse `(slot, coefficient)` pairs
/// over the 2n generators.
#[derive(Clone, Debug)]
pub enum Factor {
    /// `θ ∧ ·` with `θ = Σ θ_a e^a`.
    Wedge(Vec<(usize, Jet)>),
    /// Contraction `I_v` with `v = Σ v^a ∂_a`.
    Contract(Vec<(usize, Jet)>),
    /// Multiplication by a function.
    Multiply(Jet),
}

/// `coeff · f_1 ∘ f_2 ∘ … ∘ f_m`; the last factor acts first.
#[derive(Clone, Debug)]
pub struct Word {
    pub coeff: Complex64,
    pub factors: Vec<Factor>,
}

#[derive(Clone, Debug, Default)]
pub struct AlgebraicOp {
    pub words: Vec<Word>,
}

fn bar_slot(n: usize, a: usize) -> usize {
    if a < n {
        a + n
    } else {
        a - n
    }
}

impl Factor {
    fn apply(&self, phi: &FormJet) -> FormJet {
        let (n, rank) = (phi.n(), phi.rank());
        match self {
            Factor::Multiply(f) => phi.map(|j| if j.is_zero() { j.truncate(f.order()) } else { f * j }),
            Factor::Wedge(theta) => {
                let order = theta.iter().map(|(_, j)| j.order()).min().unwrap_or(phi.order()).min(phi.order());
                let mut out = FormJet::zero(n, rank, order);
                for m in 0..phi.masks() {
                    for (a, t) in theta {
                        if m >> a & 1 == 1 {
                            continue;
                        }
                        let s = sign_before(m, *a);
                        for al in 0..rank {
                            let x = phi.get(m, al);
                            if x.is_zero() {
                                continue;
                            }
                            out.add_to(m | 1 << a, al, &(t * x).scale_real(s));
                        }
                    }
                }
                out
            }
            Factor::Contract(v) => {
                let order = v.iter().map(|(_, j)| j.order()).min().unwrap_or(phi.order()).min(phi.order());
                let mut out = FormJet::zero(n, rank, order);
                for m in 0..phi.masks() {
                    for (a, t) in v {
                        if m >> a & 1 == 0 {
                            continue;
                        }
                        let s = sign_before(m, *a);
                        for al in 0..rank {
                            let x = phi.get(m, al);
                            if x.is_zero() {
                                continue;
                            }
                            out.add_to(m ^ 1 << a, al, &(t * x).scale_real(s));
                        }
                    }
                }
                out
            }
        }
    }

    /// Pointwise adjoint: `(θ∧)* = I_{θ♯}`, `(I_v)* = v♭ ∧`.
    fn adjoint(&self, mj: &MetricJet) -> Factor {
        let n = mj.n();
        let hinv = &mj.hinv;
        let h = &mj.h;
        match self {
            Factor::Multiply(f) => Factor::Multiply(f.conj()),
            Factor::Wedge(theta) => {
                let mut v: Vec<Option<Jet>> = vec![None; 2 * n];
                for (a, t) in theta {
                    let tc = t.conj();
                    for m in 0..n {
                        let (slot, w) = if *a < n { (m, hinv.get(m, *a)) } else { (n + m, hinv.get(a - n, m)) };
                        let term = &tc * w;
                        v[slot] = Some(match v[slot].take() {
                            Some(acc) => &acc + &term,
                            None => term,
                        });
                    }
                }
                Factor::Contract(v.into_iter().enumerate().filter_map(|(s, j)| j.map(|j| (s, j))).collect())
            }
            Factor::Contract(vec) => {
                let mut theta: Vec<Option<Jet>> = vec![None; 2 * n];
                for (a, t) in vec {
                    let tc = t.conj();
                    for k in 0..n {
                        let (slot, w) = if *a < n { (k, h.get(k, *a)) } else { (n + k, h.get(a - n, k)) };
                        let term = &tc * w;
                        theta[slot] = Some(match theta[slot].take() {
                            Some(acc) => &acc + &term,
                            None => term,
                        });
                    }
                }
                Factor::Wedge(theta.into_iter().enumerate().filter_map(|(s, j)| j.map(|j| (s, j))).collect())
            }
        }
    }

    fn conj(&self, n: usize) -> Factor {
        let flip = |v: &Vec<(usize, Jet)>| v.iter().map(|(a, j)| (bar_slot(n, *a), j.conj())).collect();
        match self {
            Factor::Multiply(f) => Factor::Multiply(f.conj()),
            Factor::Wedge(t) => Factor::Wedge(flip(t)),
            Factor::Contract(v) => Factor::Contract(flip(v)),
        }
    }
}

impl Word {
    pub fn apply(&self, phi: &FormJet) -> FormJet {
        let mut cur = phi.clone();
        for f in self.factors.iter().rev() {
            cur = f.apply(&cur);
        }
        if self.coeff == Complex64::new(1.0, 0.0) {
            cur
        } else {
            cur.scale(self.coeff)
        }
    }
}

impl AlgebraicOp {
    pub fn zero() -> Self {
        Self { words: Vec::new() }
    }

    pub fn word(coeff: Complex64, factors: Vec<Factor>) -> Self {
        Self { words: vec![Word { coeff, factors }] }
    }

    pub fn wedge(theta: Vec<(usize, Jet)>) -> Self {
        Self::word(Complex64::new(1.0, 0.0), vec![Factor::Wedge(theta)])
    }

    pub fn apply(&self, phi: &FormJet) -> FormJet {
        let mut out = FormJet::zero(phi.n(), phi.rank(), phi.order());
        let mut first = true;
        for w in &self.words {
            let r = w.apply(phi);
            out = if first { r } else { &out + &r };
            first = false;
        }
        out
    }

    pub fn plus(&self, other: &Self) -> Self {
        Self { words: self.words.iter().chain(&other.words).cloned().collect() }
    }

    pub fn minus(&self, other: &Self) -> Self {
        self.plus(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { words: self.words.iter().map(|w| Word { coeff: w.coeff * c, factors: w.factors.clone() }).collect() }
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(Complex64::new(c, 0.0))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        let mut words = Vec::with_capacity(self.words.len() * other.words.len());
        for a in &self.words {
            for b in &other.words {
                words.push(Word { coeff: a.coeff * b.coeff, factors: a.factors.iter().chain(&b.factors).cloned().collect() });
            }
        }
        Self { words }
    }

    /// `[self, other] = self ∘ other − other ∘ self`.
    pub fn commutator(&self, other: &Self) -> Self {
        self.compose(other).minus(&other.compose(self))
    }

    /// Pointwise adjoint with respect to the metric.
    pub fn adjoint(&self, mj: &MetricJet) -> Self {
        Self {
            words: self
                .words
                .iter()
                .map(|w| Word { coeff: w.coeff.conj(), factors: w.factors.iter().rev().map(|f| f.adjoint(mj)).collect() })
                .collect(),
        }
    }

    /// The conjugate operator `φ ↦ conj(T conj(φ))`.
    pub fn conj(&self, n: usize) -> Self {
        Self {
            words: self
                .words
                .iter()
                .map(|w| Word { coeff: w.coeff.conj(), factors: w.factors.iter().map(|f| f.conj(n)).collect() })
                .collect(),
        }
    }
}
