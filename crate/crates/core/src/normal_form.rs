//! Polynomial metrics in normal form at the origin, `h = I + O(|z|)` with
//! `Γ_{ij}^k(0) = 0`, and a solver imposing balanced or SKT conditions there.
//!
//! The linear part is `Σ_k T_{k i l} z^k` in `h_{i l̄}` (plus its conjugate) with
//! `T` antisymmetric in its first two indices, so the first derivatives carry
//! the torsion while the symmetric Christoffel part vanishes.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::jets::space;
use crate::metric::{MetricField, MetricJet, PolyTerm};
use crate::sampling::SeededRng;
use crate::structure;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
enum Block {
    /// `T_{i j l}` for `i < j` and every `l`: 2n reals.
    Torsion { i: usize, j: usize },
    /// Coefficient of `z^α z̄^β` with `(α, β) ≠ (β, α)`: 2n² reals.
    Pair { alpha: Vec<u8>, beta: Vec<u8> },
    /// Hermitian coefficient of `|z^α|²`: n² reals.
    SelfConjugate { alpha: Vec<u8> },
}

/// Amplitudes of the random parts of a normal-form metric.
#[derive(Debug, Clone, Copy)]
pub struct Scales {
    pub torsion: f64,
    pub quadratic: f64,
    pub cubic: f64,
}

impl Default for Scales {
    fn default() -> Self {
        Self { torsion: 0.3, quadratic: 0.3, cubic: 0.1 }
    }
}

/// Conditions imposed at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    /// `η = 0` together with all first derivatives of η.
    Balanced,
    /// The contracted `Λ(∂∂̄ω)` residual vanishes.
    Skt,
}

/// Real parametrization of the normal-form family in dimension n.
#[derive(Debug, Clone)]
pub struct NormalFormFamily {
    n: usize,
    blocks: Vec<(Block, usize, usize)>,
    len: usize,
}

impl NormalFormFamily {
    pub fn new(n: usize) -> Self {
        let mut blocks = Vec::new();
        let mut len = 0;
        let mut push = |b: Block, size: usize, degree: usize| {
            blocks.push((b, len, degree));
            len += size;
        };
        for i in 0..n {
            for j in i + 1..n {
                push(Block::Torsion { i, j }, 2 * n, 1);
            }
        }
        let sp = space(n, 3);
        for degree in 2..=3 {
            for e in sp.exponents() {
                if e.iter().map(|&x| x as usize).sum::<usize>() != degree {
                    continue;
                }
                let (alpha, beta) = (e[..n].to_vec(), e[n..].to_vec());
                if alpha == beta {
                    push(Block::SelfConjugate { alpha }, n * n, degree);
                } else if (&alpha, &beta) < (&beta, &alpha) {
                    push(Block::Pair { alpha, beta }, 2 * n * n, degree);
                }
            }
        }
        Self { n, blocks, len }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of real parameters.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn degree_range(&self, degrees: &[usize]) -> Vec<usize> {
        let mut idx = Vec::new();
        for (b, off, deg) in &self.blocks {
            if degrees.contains(deg) {
                idx.extend(*off..*off + self.block_len(b));
            }
        }
        idx
    }

    fn block_len(&self, b: &Block) -> usize {
        let n = self.n;
        match b {
            Block::Torsion { .. } => 2 * n,
            Block::Pair { .. } => 2 * n * n,
            Block::SelfConjugate { .. } => n * n,
        }
    }

    /// Gaussian parameters with the given amplitudes per degree.
    pub fn random(&self, rng: &mut SeededRng, scales: Scales) -> DVector<f64> {
        let mut p = DVector::zeros(self.len);
        for (b, off, deg) in &self.blocks {
            let s = match deg {
                1 => scales.torsion,
                2 => scales.quadratic,
                _ => scales.cubic,
            };
            for k in 0..self.block_len(b) {
                let g: f64 = StandardNormal.sample(rng);
                p[off + k] = s * g;
            }
        }
        p
    }

    /// The polynomial terms encoded by `p`, including the identity at degree 0.
    pub fn terms(&self, p: &DVector<f64>) -> Vec<PolyTerm> {
        self.terms_through(p, 3)
    }

    fn terms_through(&self, p: &DVector<f64>, max_degree: usize) -> Vec<PolyTerm> {
        let n = self.n;
        let c = |k: usize| Complex64::new(p[k], p[k + 1]);
        let mut out = vec![PolyTerm { alpha: vec![0; n], beta: vec![0; n], coeff: DMatrix::identity(n, n) }];
        let mut lin: Vec<DMatrix<Complex64>> = vec![DMatrix::zeros(n, n); n];
        for (b, off, _) in self.blocks.iter().filter(|(_, _, d)| *d <= max_degree) {
            match b {
                Block::Torsion { i, j } => {
                    for l in 0..n {
                        let t = c(off + 2 * l);
                        lin[*i][(*j, l)] += t;
                        lin[*j][(*i, l)] -= t;
                    }
                }
                Block::Pair { alpha, beta } => {
                    let m = DMatrix::from_fn(n, n, |r, s| c(off + 2 * (r * n + s)));
                    out.push(PolyTerm { alpha: beta.clone(), beta: alpha.clone(), coeff: m.adjoint() });
                    out.push(PolyTerm { alpha: alpha.clone(), beta: beta.clone(), coeff: m });
                }
                Block::SelfConjugate { alpha } => {
                    let mut m = DMatrix::zeros(n, n);
                    let mut k = *off;
                    for r in 0..n {
                        m[(r, r)] = Complex64::new(p[k], 0.0);
                        k += 1;
                        for s in r + 1..n {
                            m[(r, s)] = c(k);
                            m[(s, r)] = c(k).conj();
                            k += 2;
                        }
                    }
                    out.push(PolyTerm { alpha: alpha.clone(), beta: alpha.clone(), coeff: m });
                }
            }
        }
        for (k, m) in lin.into_iter().enumerate() {
            let mut alpha = vec![0; n];
            alpha[k] = 1;
            let zero = vec![0; n];
            out.push(PolyTerm { alpha: alpha.clone(), beta: zero.clone(), coeff: m.clone() });
            out.push(PolyTerm { alpha: zero, beta: alpha, coeff: m.adjoint() });
        }
        out
    }

    pub fn field(&self, p: &DVector<f64>) -> Result<MetricField> {
        MetricField::normal_form(self.n, self.terms(p))
    }

    /// Real residual vector of the constraints at the origin.
    pub fn residual(&self, p: &DVector<f64>, constraints: &[Constraint]) -> Result<DVector<f64>> {
        let field = MetricField::normal_form(self.n, self.terms_through(p, 2))?;
        let mj = field.metric_jet(&vec![ZERO; self.n], 2)?;
        let mut out: Vec<Complex64> = Vec::new();
        for c in constraints {
            match c {
                Constraint::Balanced => {
                    let lc = crate::connection::levi_civita(&mj)?;
                    for eta in structure::torsion_form_jets(&lc) {
                        out.push(eta.constant_term());
                        for s in 0..2 * self.n {
                            out.push(eta.d_at_base(s));
                        }
                    }
                }
                Constraint::Skt => out.extend(structure::skt_residual(&mj)?.iter().copied()),
            }
        }
        Ok(DVector::from_iterator(2 * out.len(), out.iter().flat_map(|v| [v.re, v.im])))
    }

    /// Gauss–Newton projection of `p` onto the constraint set, moving only the
    /// linear and quadratic parameters.
    pub fn solve(&self, mut p: DVector<f64>, constraints: &[Constraint], tol: f64) -> Result<(DVector<f64>, f64)> {
        let active = self.degree_range(&[1, 2]);
        let step = 1e-3;
        let mut r = self.residual(&p, constraints)?;
        for _ in 0..80 {
            if r.amax() <= tol {
                return Ok((p, r.amax()));
            }
            let mut jac = DMatrix::zeros(r.len(), active.len());
            for (col, &k) in active.iter().enumerate() {
                let mut plus = p.clone();
                plus[k] += step;
                let mut minus = p.clone();
                minus[k] -= step;
                let d = (self.residual(&plus, constraints)? - self.residual(&minus, constraints)?) / (2.0 * step);
                jac.set_column(col, &d);
            }
            let dp = jac
                .svd(true, true)
                .solve(&r, 1e-12)
                .map_err(|e| Error::Validation(format!("normal-form solve: {e}")))?;
            for (col, &k) in active.iter().enumerate() {
                p[k] -= dp[col];
            }
            r = self.residual(&p, constraints)?;
        }
        let worst = r.amax();
        if worst <= tol {
            Ok((p, worst))
        } else {
            Err(Error::Validation(format!("normal-form constraints not met: residual {worst:.3e}")))
        }
    }
}

/// A normal-form metric together with its jet at the origin.
#[derive(Debug, Clone)]
pub struct NormalFormMetric {
    pub field: MetricField,
    pub params: DVector<f64>,
    pub constraint_residual: f64,
}

impl NormalFormMetric {
    pub fn jet(&self, order: usize) -> Result<MetricJet> {
        self.field.metric_jet(&vec![ZERO; self.field.n()], order)
    }
}

/// Random normal-form metric satisfying `constraints` at the origin.
pub fn random_normal_form(
    n: usize,
    rng: &mut SeededRng,
    scales: Scales,
    constraints: &[Constraint],
) -> Result<NormalFormMetric> {
    let fam = NormalFormFamily::new(n);
    let p0 = fam.random(rng, scales);
    let (params, res) = if constraints.is_empty() { (p0, 0.0) } else { fam.solve(p0, constraints, 1e-13)? };
    Ok(NormalFormMetric { field: fam.field(&params)?, params, constraint_residual: res })
}

/// First and second derivatives of `h` at a point, indexed from 0.
#[derive(Debug, Clone)]
pub struct Derivatives {
    pub n: usize,
    d: Vec<Complex64>,
    db: Vec<Complex64>,
    dd: Vec<Complex64>,
}

impl Derivatives {
    pub fn new(mj: &MetricJet) -> Result<Self> {
        if mj.order < 2 {
            return Err(Error::OrderExhausted("derivative tables need a metric jet of order 2".into()));
        }
        let n = mj.n();
        let mut d = Vec::with_capacity(n * n * n);
        let mut db = Vec::with_capacity(n * n * n);
        let mut dd = Vec::with_capacity(n.pow(4));
        for a in 0..n {
            for k in 0..n {
                for l in 0..n {
                    d.push(mj.h.get(k, l).d_at_base(a));
                    db.push(mj.h.get(k, l).d_at_base(n + a));
                }
            }
        }
        for a in 0..n {
            for b in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        dd.push(mj.h.get(k, l).d2_at_base(a, n + b));
                    }
                }
            }
        }
        Ok(Self { n, d, db, dd })
    }

    /// `∂h_{k l̄}/∂z^a`.
    pub fn d(&self, a: usize, k: usize, l: usize) -> Complex64 {
        self.d[(a * self.n + k) * self.n + l]
    }

    /// `∂h_{k l̄}/∂z̄^a`.
    pub fn db(&self, a: usize, k: usize, l: usize) -> Complex64 {
        self.db[(a * self.n + k) * self.n + l]
    }

    /// `∂²h_{k l̄}/∂z^a∂z̄^b`.
    pub fn dd(&self, a: usize, b: usize, k: usize, l: usize) -> Complex64 {
        self.dd[((a * self.n + b) * self.n + k) * self.n + l]
    }
}
