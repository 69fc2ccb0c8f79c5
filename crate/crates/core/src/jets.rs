//! Truncated power series in the 2n commuting variables z¹..zⁿ, z̄¹..z̄ⁿ.
//!
//! A [`Jet`] of order K stores every coefficient of total degree at most K.
//! Variable slots `0..n` are the holomorphic coordinates and slots `n..2n`
//! their conjugates. Monomials are enumerated degree by degree, so the
//! coefficient vector of order K−1 is a prefix of the one of order K.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Truncation order used when a caller does not ask for one.
pub const DEFAULT_ORDER: usize = 3;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Wirtinger {
    Holomorphic,
    Antiholomorphic,
}

impl Wirtinger {
    /// Variable slot of coordinate `index` (0-based) in a chart of dimension `n`.
    pub fn slot(self, n: usize, index: usize) -> usize {
        match self {
            Wirtinger::Holomorphic => index,
            Wirtinger::Antiholomorphic => n + index,
        }
    }

    pub fn conj(self) -> Self {
        match self {
            Wirtinger::Holomorphic => Wirtinger::Antiholomorphic,
            Wirtinger::Antiholomorphic => Wirtinger::Holomorphic,
        }
    }
}

/// Enumeration of the monomials of total degree ≤ K in 2n variables together
/// with the index tables used by multiplication, differentiation and conjugation.
pub struct MonomialSpace {
    n: usize,
    order: usize,
    exps: Vec<Vec<u8>>,
    degree_end: Vec<usize>,
    lookup: HashMap<Vec<u8>, usize>,
    products: Vec<Vec<(u32, u32)>>,
    derivs: Vec<Vec<(u32, u32, f64)>>,
    conj: Vec<u32>,
}

impl MonomialSpace {
    fn build(n: usize, order: usize) -> Self {
        let vars = 2 * n;
        let mut exps = Vec::new();
        let mut degree_end = Vec::with_capacity(order + 1);
        for d in 0..=order {
            let mut cur = vec![0u8; vars];
            push_degree(0, d, &mut cur, &mut exps);
            degree_end.push(exps.len());
        }
        let lookup: HashMap<Vec<u8>, usize> =
            exps.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        let degree = |e: &[u8]| e.iter().map(|&x| x as usize).sum::<usize>();

        let mut products = Vec::with_capacity(exps.len());
        for a in &exps {
            let da = degree(a);
            let mut row = Vec::new();
            for (ib, b) in exps.iter().enumerate() {
                if da + degree(b) > order {
                    break;
                }
                let sum: Vec<u8> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                row.push((ib as u32, lookup[&sum] as u32));
            }
            products.push(row);
        }

        let mut derivs = Vec::with_capacity(vars);
        for v in 0..vars {
            let mut table = Vec::new();
            for (src, e) in exps.iter().enumerate() {
                if e[v] > 0 {
                    let mut lowered = e.clone();
                    lowered[v] -= 1;
                    table.push((src as u32, lookup[&lowered] as u32, e[v] as f64));
                }
            }
            derivs.push(table);
        }

        let conj = exps
            .iter()
            .map(|e| {
                let mut s = e[n..].to_vec();
                s.extend_from_slice(&e[..n]);
                lookup[&s] as u32
            })
            .collect();

        Self { n, order, exps, degree_end, lookup, products, derivs, conj }
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn exponents(&self) -> &[Vec<u8>] {
        &self.exps
    }

    /// Number of monomials of degree at most `d`.
    pub fn count_up_to(&self, d: usize) -> usize {
        self.degree_end[d.min(self.order)]
    }

    pub fn index_of(&self, exps: &[u8]) -> Option<usize> {
        self.lookup.get(exps).copied()
    }
}

fn push_degree(pos: usize, remaining: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if pos + 1 == cur.len() {
        cur[pos] = remaining as u8;
        out.push(cur.clone());
        return;
    }
    for e in (0..=remaining).rev() {
        cur[pos] = e as u8;
        push_degree(pos + 1, remaining - e, cur, out);
    }
    cur[pos] = 0;
}

/// Shared monomial table for `(n, order)`.
pub fn space(n: usize, order: usize) -> Arc<MonomialSpace> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<MonomialSpace>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(s) = cache.lock().expect("jet space cache poisoned").get(&(n, order)) {
        return s.clone();
    }
    let built = Arc::new(MonomialSpace::build(n, order));
    cache
        .lock()
        .expect("jet space cache poisoned")
        .entry((n, order))
        .or_insert(built)
        .clone()
}

/// Truncated power series in the displacement from a base point.
#[derive(Clone)]
pub struct Jet {
    space: Arc<MonomialSpace>,
    coeffs: Vec<Complex64>,
}

impl Jet {
    pub fn zero(n: usize, order: usize) -> Self {
        let space = space(n, order);
        let coeffs = vec![ZERO; space.len()];
        Self { space, coeffs }
    }

    pub fn constant(n: usize, order: usize, c: Complex64) -> Self {
        let mut j = Self::zero(n, order);
        j.coeffs[0] = c;
        j
    }

    pub fn real(n: usize, order: usize, x: f64) -> Self {
        Self::constant(n, order, Complex64::new(x, 0.0))
    }

    /// The coordinate displacement z^i − p^i (or its conjugate).
    pub fn variable(n: usize, order: usize, which: Wirtinger, index: usize) -> Self {
        let mut j = Self::zero(n, order);
        if order >= 1 {
            let mut e = vec![0u8; 2 * n];
            e[which.slot(n, index)] = 1;
            let k = j.space.lookup[&e];
            j.coeffs[k] = ONE;
        }
        j
    }

    /// Coefficients given as a function of the exponent vector.
    pub fn from_fn(n: usize, order: usize, mut f: impl FnMut(&[u8]) -> Complex64) -> Self {
        let space = space(n, order);
        let coeffs = space.exps.iter().map(|e| f(e)).collect();
        Self { space, coeffs }
    }

    /// `c · exp(Σ_v a_v x_v)` where `x_v` runs over the 2n variable slots.
    pub fn exp_linear(n: usize, order: usize, c: Complex64, a: &[Complex64]) -> Self {
        assert_eq!(a.len(), 2 * n, "exp_linear needs one rate per variable slot");
        Self::from_fn(n, order, |e| {
            let mut v = c;
            for (slot, &k) in e.iter().enumerate() {
                for m in 1..=k {
                    v *= a[slot] / m as f64;
                }
            }
            v
        })
    }

    pub fn n(&self) -> usize {
        self.space.n
    }

    pub fn order(&self) -> usize {
        self.space.order
    }

    pub fn space(&self) -> &Arc<MonomialSpace> {
        &self.space
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn constant_term(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// Coefficient of z^α z̄^β; zero when the degree exceeds the order.
    pub fn coeff(&self, alpha: &[u8], beta: &[u8]) -> Complex64 {
        let e: Vec<u8> = alpha.iter().chain(beta).copied().collect();
        self.space.index_of(&e).map_or(ZERO, |k| self.coeffs[k])
    }

    pub fn set_coeff(&mut self, alpha: &[u8], beta: &[u8], c: Complex64) -> Result<()> {
        let e: Vec<u8> = alpha.iter().chain(beta).copied().collect();
        let k = self.space.index_of(&e).ok_or_else(|| {
            Error::Structural(format!("monomial {e:?} exceeds order {}", self.order()))
        })?;
        self.coeffs[k] = c;
        Ok(())
    }

    /// Derivative along slot `s` at the base point.
    pub fn d_at_base(&self, s: usize) -> Complex64 {
        if self.order() == 0 {
            return ZERO;
        }
        self.coeffs[1 + s]
    }

    /// Second derivative along slots `s` and `t` at the base point.
    pub fn d2_at_base(&self, s: usize, t: usize) -> Complex64 {
        if self.order() < 2 {
            return ZERO;
        }
        let mut e = vec![0u8; 2 * self.n()];
        e[s] += 1;
        e[t] += 1;
        let f = if s == t { 2.0 } else { 1.0 };
        self.coeffs[self.space.lookup[&e]] * f
    }

    /// Nonzero terms as (exponent vector, coefficient).
    pub fn terms(&self) -> impl Iterator<Item = (&[u8], Complex64)> {
        self.space
            .exps
            .iter()
            .zip(&self.coeffs)
            .filter(|(_, c)| **c != ZERO)
            .map(|(e, c)| (e.as_slice(), *c))
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == ZERO)
    }

    fn check_same(&self, other: &Jet, what: &str) -> Result<()> {
        if self.n() != other.n() || self.order() != other.order() {
            return Err(Error::Structural(format!(
                "{what}: (n, K) = ({}, {}) vs ({}, {})",
                self.n(),
                self.order(),
                other.n(),
                other.order()
            )));
        }
        Ok(())
    }

    /// Truncated Cauchy product; both operands must share (n, K).
    pub fn try_mul(&self, other: &Jet) -> Result<Jet> {
        self.check_same(other, "jet product")?;
        Ok(self.mul_truncating(other))
    }

    pub fn try_add(&self, other: &Jet) -> Result<Jet> {
        self.check_same(other, "jet sum")?;
        Ok(self + other)
    }

    fn mul_truncating(&self, other: &Jet) -> Jet {
        assert_eq!(self.n(), other.n(), "jets over different charts");
        let sp = if self.order() <= other.order() { &self.space } else { &other.space };
        let mut out = vec![ZERO; sp.len()];
        for (a, row) in sp.products.iter().enumerate() {
            let ca = self.coeffs[a];
            if ca == ZERO {
                continue;
            }
            for &(b, c) in row {
                out[c as usize] += ca * other.coeffs[b as usize];
            }
        }
        Jet { space: sp.clone(), coeffs: out }
    }

    /// Drop every term of degree above `order`.
    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.order() {
            return self.clone();
        }
        let sp = space(self.n(), order);
        let coeffs = self.coeffs[..sp.len()].to_vec();
        Jet { space: sp, coeffs }
    }

    pub fn conj(&self) -> Jet {
        let mut out = vec![ZERO; self.coeffs.len()];
        for (k, &t) in self.space.conj.iter().enumerate() {
            out[t as usize] = self.coeffs[k].conj();
        }
        Jet { space: self.space.clone(), coeffs: out }
    }

    pub fn scale(&self, c: Complex64) -> Jet {
        Jet { space: self.space.clone(), coeffs: self.coeffs.iter().map(|x| x * c).collect() }
    }

    pub fn scale_real(&self, c: f64) -> Jet {
        Jet { space: self.space.clone(), coeffs: self.coeffs.iter().map(|x| x * c).collect() }
    }

    /// Derivative along variable slot `slot` (0..2n); the result has order K−1.
    pub fn d(&self, slot: usize) -> Result<Jet> {
        if self.order() == 0 {
            return Err(Error::OrderExhausted(format!(
                "differentiating a jet of order 0 along slot {slot}"
            )));
        }
        let sp = space(self.n(), self.order() - 1);
        let mut out = vec![ZERO; sp.len()];
        for &(src, dst, f) in &self.space.derivs[slot] {
            out[dst as usize] += self.coeffs[src as usize] * f;
        }
        Ok(Jet { space: sp, coeffs: out })
    }

    /// ∂/∂z^index or ∂/∂z̄^index, with a 0-based index.
    pub fn wirtinger(&self, which: Wirtinger, index: usize) -> Result<Jet> {
        if index >= self.n() {
            return Err(Error::Structural(format!(
                "coordinate index {index} out of range for n = {}",
                self.n()
            )));
        }
        self.d(which.slot(self.n(), index))
    }

    pub fn dz(&self, index: usize) -> Result<Jet> {
        self.wirtinger(Wirtinger::Holomorphic, index)
    }

    pub fn dzbar(&self, index: usize) -> Result<Jet> {
        self.wirtinger(Wirtinger::Antiholomorphic, index)
    }

    /// Multiplicative inverse through degree K.
    pub fn try_inverse(&self) -> Result<Jet> {
        let c0 = self.coeffs[0];
        if c0 == ZERO {
            return Err(Error::SingularSeries);
        }
        let inv0 = ONE / c0;
        let mut u = self.scale(inv0);
        u.coeffs[0] = ZERO;
        let one = Jet::constant(self.n(), self.order(), ONE);
        let mut r = one.clone();
        for _ in 0..self.order() {
            r = &one - &u.mul_truncating(&r);
        }
        Ok(r.scale(inv0))
    }

    /// Principal logarithm through degree K.
    pub fn try_ln(&self) -> Result<Jet> {
        let c0 = self.coeffs[0];
        if c0 == ZERO {
            return Err(Error::SingularSeries);
        }
        let mut u = self.scale(ONE / c0);
        u.coeffs[0] = ZERO;
        let mut out = Jet::constant(self.n(), self.order(), c0.ln());
        let mut power = u.clone();
        for m in 1..=self.order() {
            let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
            out += &power.scale_real(sign / m as f64);
            power = power.mul_truncating(&u);
        }
        Ok(out)
    }

    /// Value of the series at displacement `w` (z = p + w, z̄ = p̄ + w̄).
    pub fn eval_offset(&self, w: &[Complex64]) -> Complex64 {
        let n = self.n();
        assert_eq!(w.len(), n);
        let vals: Vec<Complex64> = w.iter().copied().chain(w.iter().map(|x| x.conj())).collect();
        let mut s = ZERO;
        for (e, c) in self.space.exps.iter().zip(&self.coeffs) {
            if *c == ZERO {
                continue;
            }
            let mut t = *c;
            for (slot, &k) in e.iter().enumerate() {
                for _ in 0..k {
                    t *= vals[slot];
                }
            }
            s += t;
        }
        s
    }
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Jet(n={}, K={})[", self.n(), self.order())?;
        let mut first = true;
        for (e, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({:.6e}{:+.6e}i){:?}", c.re, c.im, e)?;
        }
        write!(f, "]")
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.n() == other.n() && self.order() == other.order() && self.coeffs == other.coeffs
    }
}

fn add_truncating(a: &Jet, b: &Jet, sign: f64) -> Jet {
    assert_eq!(a.n(), b.n(), "jets over different charts");
    let sp = if a.order() <= b.order() { &a.space } else { &b.space };
    let coeffs = (0..sp.len()).map(|k| a.coeffs[k] + b.coeffs[k] * sign).collect();
    Jet { space: sp.clone(), coeffs }
}

// Operator forms truncate to the lower order of the two operands; a product
// known to order k in one factor is only known to order k. Use `try_mul` and
// `try_add` when mismatched orders must be rejected.
impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        add_truncating(self, rhs, 1.0)
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        add_truncating(self, rhs, -1.0)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.mul_truncating(rhs)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale_real(-1.0)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        &self + &rhs
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        &self - &rhs
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        &self * &rhs
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        -&self
    }
}

impl Mul<Complex64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: Complex64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale_real(rhs)
    }
}

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        if rhs.order() < self.order() {
            *self = self.truncate(rhs.order());
        }
        assert_eq!(self.n(), rhs.n(), "jets over different charts");
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
    }
}

impl SubAssign<&Jet> for Jet {
    fn sub_assign(&mut self, rhs: &Jet) {
        if rhs.order() < self.order() {
            *self = self.truncate(rhs.order());
        }
        assert_eq!(self.n(), rhs.n(), "jets over different charts");
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a -= b;
        }
    }
}

/// Dense matrix of jets, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct JetMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Jet>,
}

impl JetMatrix {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Jet) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Self { rows, cols, entries }
    }

    pub fn identity(size: usize, n: usize, order: usize) -> Self {
        Self::from_fn(size, size, |i, j| Jet::real(n, order, if i == j { 1.0 } else { 0.0 }))
    }

    /// Constant matrix lifted to jets.
    pub fn from_constant(m: &DMatrix<Complex64>, n: usize, order: usize) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| Jet::constant(n, order, m[(i, j)]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Jet {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Jet) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn entries(&self) -> &[Jet] {
        &self.entries
    }

    pub fn order(&self) -> usize {
        self.entries.iter().map(Jet::order).min().unwrap_or(0)
    }

    pub fn map(&self, f: impl Fn(&Jet) -> Jet) -> Self {
        Self { rows: self.rows, cols: self.cols, entries: self.entries.iter().map(f).collect() }
    }

    pub fn try_map(&self, f: impl Fn(&Jet) -> Result<Jet>) -> Result<Self> {
        let entries = self.entries.iter().map(f).collect::<Result<Vec<_>>>()?;
        Ok(Self { rows: self.rows, cols: self.cols, entries })
    }

    pub fn constant(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).constant_term())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn mul(&self, other: &JetMatrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Structural(format!(
                "matrix product {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self::from_fn(self.rows, other.cols, |i, j| {
            let mut acc = self.get(i, 0) * other.get(0, j);
            for k in 1..self.cols {
                acc += &(self.get(i, k) * other.get(k, j));
            }
            acc
        }))
    }

    /// Largest deviation from Hermitian symmetry over all coefficients.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in 0..self.cols {
                worst = worst.max((self.get(i, j) - &self.get(j, i).conj()).max_abs());
            }
        }
        worst
    }

    fn square(&self, what: &str) -> Result<usize> {
        if self.rows != self.cols || self.rows == 0 {
            return Err(Error::Structural(format!(
                "{what} of a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        Ok(self.rows)
    }

    /// Gauss–Jordan inverse with pivots chosen by the largest constant term.
    pub fn inverse(&self) -> Result<Self> {
        let size = self.square("inverse")?;
        let (n, order) = (self.entries[0].n(), self.order());
        let mut a: Vec<Vec<Jet>> = (0..size)
            .map(|i| (0..size).map(|j| self.get(i, j).truncate(order)).collect())
            .collect();
        let mut inv: Vec<Vec<Jet>> = (0..size)
            .map(|i| (0..size).map(|j| Jet::real(n, order, if i == j { 1.0 } else { 0.0 })).collect())
            .collect();
        for col in 0..size {
            let pivot = (col..size)
                .max_by(|&r, &s| {
                    a[r][col].constant_term().norm().total_cmp(&a[s][col].constant_term().norm())
                })
                .expect("nonempty pivot range");
            if a[pivot][col].constant_term().norm() == 0.0 {
                return Err(Error::SingularSeries);
            }
            a.swap(col, pivot);
            inv.swap(col, pivot);
            let p = a[col][col].try_inverse()?;
            for j in 0..size {
                a[col][j] = &a[col][j] * &p;
                inv[col][j] = &inv[col][j] * &p;
            }
            for r in 0..size {
                if r == col || a[r][col].is_zero() {
                    continue;
                }
                let f = a[r][col].clone();
                for j in 0..size {
                    let t = &f * &a[col][j];
                    a[r][j] -= &t;
                    let t = &f * &inv[col][j];
                    inv[r][j] -= &t;
                }
            }
        }
        Ok(Self { rows: size, cols: size, entries: inv.into_iter().flatten().collect() })
    }

    /// Determinant by elimination with constant-term pivoting.
    pub fn determinant(&self) -> Result<Jet> {
        let size = self.square("determinant")?;
        let (n, order) = (self.entries[0].n(), self.order());
        let mut a: Vec<Vec<Jet>> = (0..size)
            .map(|i| (0..size).map(|j| self.get(i, j).truncate(order)).collect())
            .collect();
        let mut det = Jet::real(n, order, 1.0);
        for col in 0..size {
            let pivot = (col..size)
                .max_by(|&r, &s| {
                    a[r][col].constant_term().norm().total_cmp(&a[s][col].constant_term().norm())
                })
                .expect("nonempty pivot range");
            if a[pivot][col].constant_term().norm() == 0.0 {
                return Ok(Jet::zero(n, order));
            }
            if pivot != col {
                a.swap(col, pivot);
                det = -&det;
            }
            det = &det * &a[col][col];
            let p = a[col][col].try_inverse()?;
            for r in col + 1..size {
                if a[r][col].is_zero() {
                    continue;
                }
                let f = &a[r][col] * &p;
                for j in col..size {
                    let t = &f * &a[col][j];
                    a[r][j] -= &t;
                }
            }
        }
        Ok(det)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn monomial_counts_are_binomial() {
        // C(2n+K, K)
        assert_eq!(space(1, 3).len(), 10);
        assert_eq!(space(2, 3).len(), 35);
        assert_eq!(space(4, 3).len(), 165);
        assert_eq!(space(2, 2).count_up_to(1), 5);
    }

    #[test]
    fn lower_order_is_prefix() {
        let big = space(2, 4);
        let small = space(2, 2);
        assert_eq!(&big.exponents()[..small.len()], small.exponents());
    }

    #[test]
    fn difference_of_squares() {
        let one = Jet::real(1, 2, 1.0);
        let z = Jet::variable(1, 2, Wirtinger::Holomorphic, 0);
        let p = (&one + &z).try_mul(&(&one - &z)).unwrap();
        assert_eq!(p.coeff(&[0], &[0]), c(1.0, 0.0));
        assert_eq!(p.coeff(&[1], &[0]), c(0.0, 0.0));
        assert_eq!(p.coeff(&[2], &[0]), c(-1.0, 0.0));
    }

    #[test]
    fn mismatched_orders_are_structural_errors() {
        let a = Jet::real(1, 2, 1.0);
        let b = Jet::real(1, 3, 1.0);
        assert!(matches!(a.try_mul(&b), Err(Error::Structural(_))));
        let d = Jet::real(2, 2, 1.0);
        assert!(matches!(a.try_mul(&d), Err(Error::Structural(_))));
    }

    #[test]
    fn wirtinger_monomial_rules() {
        let z = Jet::variable(1, 3, Wirtinger::Holomorphic, 0);
        let zb = Jet::variable(1, 3, Wirtinger::Antiholomorphic, 0);
        let d = (&z * &zb).dz(0).unwrap();
        assert_eq!(d.order(), 2);
        assert_eq!(d, zb.truncate(2));
        assert!((&z * &z).dzbar(0).unwrap().is_zero());
        assert!(matches!(Jet::real(1, 0, 1.0).dz(0), Err(Error::OrderExhausted(_))));
    }

    #[test]
    fn inverse_of_one_plus_modulus_squared() {
        let z = Jet::variable(1, 4, Wirtinger::Holomorphic, 0);
        let zb = Jet::variable(1, 4, Wirtinger::Antiholomorphic, 0);
        let r = &z * &zb;
        let a = &Jet::real(1, 4, 1.0) + &r;
        let inv = a.try_inverse().unwrap();
        let expected = &(&Jet::real(1, 4, 1.0) - &r) + &(&r * &r);
        assert!((&inv - &expected).max_abs() < 1e-15);
        assert!((&(&a * &inv) - &Jet::real(1, 4, 1.0)).max_abs() < 1e-15);
        assert!(matches!(r.try_inverse(), Err(Error::SingularSeries)));
        assert_eq!(Jet::real(1, 4, 2.0).try_inverse().unwrap(), Jet::real(1, 4, 0.5));
    }

    #[test]
    fn geometric_partial_sum_against_schoolbook_convolution() {
        let k = 6;
        let z = Jet::variable(1, k, Wirtinger::Holomorphic, 0);
        let zb = Jet::variable(1, k, Wirtinger::Antiholomorphic, 0);
        let r = &z * &zb;
        let one = Jet::real(1, k, 1.0);
        let mut s = one.clone();
        let mut p = one.clone();
        for _ in 0..3 {
            p = &p * &r;
            s += &p;
        }
        let prod = s.try_mul(&(&one + &r)).unwrap();

        // schoolbook: coefficient lists in powers of r = z z̄
        let a = [1.0, 1.0, 1.0, 1.0];
        let b = [1.0, 1.0];
        let mut conv = [0.0; 5];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                conv[i + j] += x * y;
            }
        }
        for (m, &cm) in conv.iter().enumerate() {
            let expect = if 2 * m <= k { cm } else { 0.0 };
            assert_eq!(prod.coeff(&[m as u8], &[m as u8]), c(expect, 0.0), "power {m}");
        }
        assert_eq!(prod.terms().count(), 4);
    }

    #[test]
    fn exp_linear_matches_series() {
        let a = [c(0.3, -0.2), c(-0.1, 0.5)];
        let e = Jet::exp_linear(1, 9, c(2.0, 0.0), &a);
        let w = [c(0.01, 0.02)];
        let exact = 2.0 * (a[0] * w[0] + a[1] * w[0].conj()).exp();
        assert!((e.eval_offset(&w) - exact).norm() < 1e-13, "{} vs {}", e.eval_offset(&w), exact);
    }

    #[test]
    fn matrix_inverse_and_determinant() {
        let (n, k) = (2, 3);
        let z = Jet::variable(n, k, Wirtinger::Holomorphic, 0);
        let zb = Jet::variable(n, k, Wirtinger::Antiholomorphic, 1);
        let m = JetMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => &Jet::real(n, k, 2.0) + &z,
            (0, 1) => zb.clone(),
            (1, 0) => z.scale(c(0.0, 1.0)),
            _ => &Jet::real(n, k, 3.0) + &(&z * &zb),
        });
        let inv = m.inverse().unwrap();
        let id = m.mul(&inv).unwrap();
        let eye = JetMatrix::identity(2, n, k);
        for (x, y) in id.entries().iter().zip(eye.entries()) {
            assert!((x - y).max_abs() < 1e-14);
        }
        let det = m.determinant().unwrap();
        let direct = &(m.get(0, 0) * m.get(1, 1)) - &(m.get(0, 1) * m.get(1, 0));
        assert!((&det - &direct).max_abs() < 1e-14);
    }

    #[test]
    fn logarithm_inverts_exponential() {
        let a = [c(0.3, -0.2), c(-0.1, 0.5), c(0.2, 0.0), c(0.0, -0.4)];
        let e = Jet::exp_linear(2, 4, c(1.5, 0.5), &a);
        let l = e.try_ln().unwrap();
        let mut expect = Jet::constant(2, 4, c(1.5, 0.5).ln());
        for (s, r) in a.iter().enumerate() {
            let w = if s < 2 { Wirtinger::Holomorphic } else { Wirtinger::Antiholomorphic };
            expect += &Jet::variable(2, 4, w, s % 2).scale(*r);
        }
        assert!((&l - &expect).max_abs() < 1e-14);
    }

    #[test]
    fn base_point_derivatives() {
        let z = Jet::variable(2, 3, Wirtinger::Holomorphic, 1);
        let zb = Jet::variable(2, 3, Wirtinger::Antiholomorphic, 0);
        let f = &(&z * &z).scale_real(3.0) + &(&z * &zb).scale(c(0.0, 2.0));
        assert_eq!(f.d2_at_base(1, 1), c(6.0, 0.0));
        assert_eq!(f.d2_at_base(1, 2), c(0.0, 2.0));
        assert_eq!(f.d2_at_base(2, 1), c(0.0, 2.0));
        assert_eq!(zb.d_at_base(2), c(1.0, 0.0));
        assert_eq!(f.dz(1).unwrap().d_at_base(1), f.d2_at_base(1, 1));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn jet(n: usize, k: usize) -> impl Strategy<Value = Jet> {
            let len = space(n, k).len();
            proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len).prop_map(move |v| {
                let mut j = Jet::zero(n, k);
                for (dst, (re, im)) in j.coeffs_mut().iter_mut().zip(v) {
                    *dst = c(re, im);
                }
                j
            })
        }

        proptest! {
            #[test]
            fn product_is_commutative_and_associative(a in jet(2, 3), b in jet(2, 3), d in jet(2, 3)) {
                prop_assert!((&(&a * &b) - &(&b * &a)).max_abs() < 1e-13);
                let l = &(&a * &b) * &d;
                let r = &a * &(&b * &d);
                prop_assert!((&l - &r).max_abs() < 1e-12);
            }

            #[test]
            fn leibniz_rule(a in jet(2, 3), b in jet(2, 3), slot in 0usize..4) {
                let lhs = (&a * &b).d(slot).unwrap();
                let rhs = &(&a.d(slot).unwrap() * &b.truncate(2)) + &(&a.truncate(2) * &b.d(slot).unwrap());
                prop_assert!((&lhs - &rhs).max_abs() < 1e-12);
            }

            #[test]
            fn conjugation_swaps_wirtinger_directions(a in jet(2, 3), i in 0usize..2) {
                let lhs = a.dz(i).unwrap().conj();
                let rhs = a.conj().dzbar(i).unwrap();
                prop_assert!((&lhs - &rhs).max_abs() < 1e-15);
            }

            #[test]
            fn inverse_is_two_sided(a in jet(2, 3)) {
                prop_assume!(a.constant_term().norm() > 0.2);
                let inv = a.try_inverse().unwrap();
                let one = Jet::real(2, 3, 1.0);
                prop_assert!((&(&a * &inv) - &one).max_abs() < 1e-9 * (1.0 + inv.max_abs()));
            }
        }
    }
}
