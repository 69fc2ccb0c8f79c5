//! Curvature tensors of the four connections and their Ricci and scalar contractions.
//!
//! Every tensor is stored in the order `(i, j̄, k, l̄)`: for a connection on
//! T^{1,0} with curvature `R(∂_i, ∂_j̄) ∂_k = R_{i j̄ k}^s ∂_s`, the stored value
//! is `R_{i j̄ k l̄} = R_{i j̄ k}^s h_{s l̄}`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::connection::{self, complexify, ChristoffelTable, Kind};
use crate::error::{Error, Result};
use crate::metric::MetricJet;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `R_{i j̄ k l̄}` at a point for one connection.
#[derive(Debug, Clone)]
pub struct CurvatureTensor {
    pub kind: Kind,
    pub n: usize,
    pub point: Vec<Complex64>,
    data: Vec<Complex64>,
}

impl CurvatureTensor {
    pub fn from_fn(kind: Kind, n: usize, point: Vec<Complex64>, mut f: impl FnMut(usize, usize, usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(n.pow(4));
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        data.push(f(i, j, k, l));
                    }
                }
            }
        }
        Self { kind, n, point, data }
    }

    /// `R_{i j̄ k l̄}`.
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> Complex64 {
        let n = self.n;
        self.data[((i * n + j) * n + k) * n + l]
    }

    pub fn components(&self) -> &[Complex64] {
        &self.data
    }

    /// Largest `|conj(R_{i j̄ k l̄}) − R_{j ī l k̄}|`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        worst = worst.max((self.get(i, j, k, l).conj() - self.get(j, i, l, k)).norm());
                    }
                }
            }
        }
        worst
    }

    /// Largest `|R_{i j̄ k l̄} − R_{k l̄ i j̄}|`.
    pub fn pair_symmetry_defect(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        worst = worst.max((self.get(i, j, k, l) - self.get(k, l, i, j)).norm());
                    }
                }
            }
        }
        worst
    }

    /// Largest componentwise distance to another tensor.
    pub fn distance(&self, other: &CurvatureTensor) -> f64 {
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| m.max(a.norm()))
    }

    /// `R_{i j̄ k l̄} u^i ū^j v^k v̄^l`.
    pub fn contract(&self, u: &[Complex64], v: &[Complex64]) -> Complex64 {
        let n = self.n;
        let mut s = ZERO;
        for i in 0..n {
            for j in 0..n {
                let uu = u[i] * u[j].conj();
                for k in 0..n {
                    for l in 0..n {
                        s += self.get(i, j, k, l) * uu * v[k] * v[l].conj();
                    }
                }
            }
        }
        s
    }
}

/// The full complexified Riemann tensor `R_{ABCD}` over 2n slots.
#[derive(Debug, Clone)]
pub struct RiemannFull {
    pub n: usize,
    data: Vec<Complex64>,
}

impl RiemannFull {
    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> Complex64 {
        let m = 2 * self.n;
        self.data[((a * m + b) * m + c) * m + d]
    }

    /// The `(i, j̄, k, l̄)` slice as a Levi-Civita curvature tensor.
    pub fn hermitian_slice(&self, point: Vec<Complex64>) -> CurvatureTensor {
        let n = self.n;
        CurvatureTensor::from_fn(Kind::LeviCivita, n, point, |i, j, k, l| self.get(i, n + j, k, n + l))
    }

    /// Largest `|R_{ABCD} − R_{CDAB}|`.
    pub fn pair_symmetry_defect(&self) -> f64 {
        let m = 2 * self.n;
        let mut worst: f64 = 0.0;
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    for d in 0..m {
                        worst = worst.max((self.get(a, b, c, d) - self.get(c, d, a, b)).norm());
                    }
                }
            }
        }
        worst
    }
}

fn need_order(mj: &MetricJet, what: &str) -> Result<()> {
    if mj.order < 2 {
        return Err(Error::OrderExhausted(format!(
            "{what} needs a metric jet of order at least 2, got {}",
            mj.order
        )));
    }
    Ok(())
}

/// `R_{ABCD} = R_{ABC}^E G_{ED}` with
/// `R_{ABC}^D = ∂_AΓ_{BC}^D − ∂_BΓ_{AC}^D − Γ_{AC}^FΓ_{FB}^D + Γ_{BC}^FΓ_{AF}^D`.
pub fn riemann_full(mj: &MetricJet) -> Result<RiemannFull> {
    need_order(mj, "the Levi-Civita curvature")?;
    let lc = connection::levi_civita(mj)?;
    Ok(riemann_from_table(&lc, mj))
}

pub(crate) fn riemann_from_table(lc: &ChristoffelTable, mj: &MetricJet) -> RiemannFull {
    let n = mj.n();
    let m = 2 * n;
    let idx3 = |a: usize, b: usize, c: usize| (a * m + b) * m + c;
    let mut gam = vec![ZERO; m * m * m];
    let mut dgam = vec![ZERO; m * m * m * m];
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                let j = lc.get(a, b, c);
                gam[idx3(a, b, c)] = j.constant_term();
                for s in 0..m {
                    dgam[idx3(a, b, c) * m + s] = j.d_at_base(s);
                }
            }
        }
    }
    let d = |s: usize, a: usize, b: usize, c: usize| dgam[idx3(a, b, c) * m + s];
    let cx = complexify(mj);
    let g0: Vec<Complex64> = cx.g.iter().map(|e| e.as_ref().map_or(ZERO, |j| j.constant_term())).collect();
    let mut up = vec![ZERO; m * m * m * m];
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                for dd in 0..m {
                    let mut v = d(a, b, c, dd) - d(b, a, c, dd);
                    for f in 0..m {
                        v -= gam[idx3(a, c, f)] * gam[idx3(f, b, dd)];
                        v += gam[idx3(b, c, f)] * gam[idx3(a, f, dd)];
                    }
                    up[idx3(a, b, c) * m + dd] = v;
                }
            }
        }
    }
    let mut data = vec![ZERO; m * m * m * m];
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                for dd in 0..m {
                    let mut v = ZERO;
                    for e in 0..m {
                        let ge = g0[e * m + dd];
                        if ge != ZERO {
                            v += up[idx3(a, b, c) * m + e] * ge;
                        }
                    }
                    data[idx3(a, b, c) * m + dd] = v;
                }
            }
        }
    }
    RiemannFull { n, data }
}

/// Levi-Civita curvature `R_{i j̄ k l̄}`.
pub fn curvature_lc(mj: &MetricJet) -> Result<CurvatureTensor> {
    Ok(riemann_full(mj)?.hermitian_slice(mj.point.clone()))
}

/// Curvature of a connection on T^{1,0} along the direction pair `(a, b)`:
/// `R_{ab k}^l = ∂_aΓ_{bk}^l − ∂_bΓ_{ak}^l − Γ_{ak}^sΓ_{bs}^l + Γ_{bk}^sΓ_{as}^l`,
/// lowered with `h_{s l̄}`. Returned as `out[k][l]`.
pub fn tangent_curvature_block(t: &ChristoffelTable, mj: &MetricJet, a: usize, b: usize) -> DMatrix<Complex64> {
    let n = mj.n();
    assert_eq!(t.fiber(), n, "tangent curvature needs a connection on T^(1,0)");
    let h0 = mj.h0();
    let mut up = DMatrix::zeros(n, n);
    for k in 0..n {
        for l in 0..n {
            let mut v = t.get(b, k, l).d_at_base(a) - t.get(a, k, l).d_at_base(b);
            for s in 0..n {
                v -= t.value(a, k, s) * t.value(b, s, l);
                v += t.value(b, k, s) * t.value(a, s, l);
            }
            up[(k, l)] = v;
        }
    }
    let mut out = DMatrix::zeros(n, n);
    for k in 0..n {
        for l in 0..n {
            out[(k, l)] = (0..n).map(|s| up[(k, s)] * h0[(s, l)]).sum();
        }
    }
    out
}

/// The `(i, j̄, k, l̄)` curvature of a connection on T^{1,0}.
pub fn tangent_curvature(t: &ChristoffelTable, mj: &MetricJet) -> CurvatureTensor {
    let n = mj.n();
    let blocks: Vec<DMatrix<Complex64>> = (0..n * n)
        .map(|ij| tangent_curvature_block(t, mj, ij / n, n + ij % n))
        .collect();
    CurvatureTensor::from_fn(t.kind(), n, mj.point.clone(), |i, j, k, l| blocks[i * n + j][(k, l)])
}

/// Curvature of the connection induced on T^{1,0} by the Levi-Civita connection.
pub fn curvature_induced(mj: &MetricJet) -> Result<CurvatureTensor> {
    need_order(mj, "the induced curvature")?;
    let lc = connection::levi_civita(mj)?;
    Ok(tangent_curvature(&connection::induced(&lc), mj))
}

/// Chern curvature `Θ_{i j̄ k l̄} = −∂_i∂_j̄ h_{k l̄} + h^{p q̄} ∂_j̄h_{p l̄} ∂_i h_{k q̄}`.
pub fn curvature_chern(mj: &MetricJet) -> Result<CurvatureTensor> {
    need_order(mj, "the Chern curvature")?;
    let n = mj.n();
    let hi = mj.hinv0();
    let d = |s: usize, k: usize, l: usize| mj.h.get(k, l).d_at_base(s);
    let d2 = |s: usize, t: usize, k: usize, l: usize| mj.h.get(k, l).d2_at_base(s, t);
    Ok(CurvatureTensor::from_fn(Kind::Chern, n, mj.point.clone(), |i, j, k, l| {
        let mut v = -d2(i, n + j, k, l);
        for p in 0..n {
            for q in 0..n {
                v += hi[(p, q)] * d(n + j, p, l) * d(i, k, q);
            }
        }
        v
    }))
}

/// Bismut curvature from its connection coefficients.
pub fn curvature_bismut(mj: &MetricJet) -> Result<CurvatureTensor> {
    need_order(mj, "the Bismut curvature")?;
    Ok(tangent_curvature(&connection::bismut(mj)?, mj))
}

pub fn curvature(mj: &MetricJet, kind: Kind) -> Result<CurvatureTensor> {
    match kind {
        Kind::LeviCivita => curvature_lc(mj),
        Kind::Induced => curvature_induced(mj),
        Kind::Chern => curvature_chern(mj),
        Kind::Bismut => curvature_bismut(mj),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RicciFlavor {
    /// `R_{k l̄} = h^{i j̄} R_{i j̄ k l̄}` of the Levi-Civita tensor.
    HermitianRicci,
    /// `𝓡_{k l̄} = h^{i j̄}(R_{k j̄ i l̄} + R_{k i j̄ l̄})`.
    ComplexifiedRicci,
    /// Trace over the bundle indices: `h^{k l̄} X_{i j̄ k l̄}`.
    First,
    /// Trace over the form indices: `h^{i j̄} X_{i j̄ k l̄}`.
    Second,
}

/// A Ricci-type contraction, stored as `m[(a, b)] = X_{a b̄}`.
#[derive(Debug, Clone)]
pub struct RicciMatrix {
    pub flavor: RicciFlavor,
    pub kind: Kind,
    pub matrix: DMatrix<Complex64>,
    pub point: Vec<Complex64>,
}

impl RicciMatrix {
    pub fn hermitian_defect(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).camax()
    }

    /// `h^{a b̄} X_{a b̄}`.
    pub fn trace(&self, mj: &MetricJet) -> Complex64 {
        trace_with(&mj.hinv0(), &self.matrix)
    }
}

pub(crate) fn trace_with(hinv: &DMatrix<Complex64>, m: &DMatrix<Complex64>) -> Complex64 {
    let n = m.nrows();
    let mut s = ZERO;
    for a in 0..n {
        for b in 0..n {
            s += hinv[(a, b)] * m[(a, b)];
        }
    }
    s
}

/// `h^{k l̄} X_{i j̄ k l̄}` as a matrix in `(i, j)`.
pub fn first_trace(t: &CurvatureTensor, hinv: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = t.n;
    DMatrix::from_fn(n, n, |i, j| {
        let mut s = ZERO;
        for k in 0..n {
            for l in 0..n {
                s += hinv[(k, l)] * t.get(i, j, k, l);
            }
        }
        s
    })
}

/// `h^{i j̄} X_{i j̄ k l̄}` as a matrix in `(k, l)`.
pub fn second_trace(t: &CurvatureTensor, hinv: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = t.n;
    DMatrix::from_fn(n, n, |k, l| {
        let mut s = ZERO;
        for i in 0..n {
            for j in 0..n {
                s += hinv[(i, j)] * t.get(i, j, k, l);
            }
        }
        s
    })
}

/// Ricci contraction of a tensor. The complexified flavor needs the full
/// Riemann tensor and recomputes it from `mj`.
pub fn ricci(t: &CurvatureTensor, mj: &MetricJet, flavor: RicciFlavor) -> Result<RicciMatrix> {
    let hi = mj.hinv0();
    let matrix = match flavor {
        RicciFlavor::HermitianRicci | RicciFlavor::ComplexifiedRicci if t.kind != Kind::LeviCivita => {
            return Err(Error::Incompatible(format!(
                "{flavor:?} is defined for the Levi-Civita tensor, not {}",
                t.kind.name()
            )))
        }
        RicciFlavor::HermitianRicci | RicciFlavor::Second => second_trace(t, &hi),
        RicciFlavor::First => first_trace(t, &hi),
        RicciFlavor::ComplexifiedRicci => complexified_ricci(&riemann_full(mj)?, mj),
    };
    Ok(RicciMatrix { flavor, kind: t.kind, matrix, point: mj.point.clone() })
}

/// `𝓡_{k l̄} = h^{i j̄}(R_{k j̄ i l̄} + R_{k i j̄ l̄})`.
pub fn complexified_ricci(full: &RiemannFull, mj: &MetricJet) -> DMatrix<Complex64> {
    let n = mj.n();
    let hi = mj.hinv0();
    DMatrix::from_fn(n, n, |k, l| {
        let mut s = ZERO;
        for i in 0..n {
            for j in 0..n {
                s += hi[(i, j)] * (full.get(k, n + j, i, n + l) + full.get(k, i, n + j, n + l));
            }
        }
        s
    })
}

/// The same contraction after the first Bianchi identity:
/// `h^{i j̄}(2R_{k j̄ i l̄} − R_{k l̄ i j̄})`.
pub fn complexified_ricci_bianchi(full: &RiemannFull, mj: &MetricJet) -> DMatrix<Complex64> {
    let n = mj.n();
    let hi = mj.hinv0();
    DMatrix::from_fn(n, n, |k, l| {
        let mut s = ZERO;
        for i in 0..n {
            for j in 0..n {
                s += hi[(i, j)] * (full.get(k, n + j, i, n + l) * 2.0 - full.get(k, n + l, i, n + j));
            }
        }
        s
    })
}

/// `−∂²log det(h)/∂z^i∂z̄^j`, an independent route to the first Ricci-Chern form.
pub fn ricci_first_chern_logdet(mj: &MetricJet) -> Result<RicciMatrix> {
    need_order(mj, "the log-determinant Ricci form")?;
    let n = mj.n();
    let ld = mj.h.determinant()?.try_ln()?;
    let matrix = DMatrix::from_fn(n, n, |i, j| -ld.d2_at_base(i, n + j));
    Ok(RicciMatrix { flavor: RicciFlavor::First, kind: Kind::Chern, matrix, point: mj.point.clone() })
}

/// Scalar contractions at a point.
#[derive(Debug, Clone)]
pub struct ScalarReport {
    /// `h^{k l̄} 𝓡_{k l̄}`
    pub s_h: Complex64,
    /// `h^{k l̄} R_{k l̄}`
    pub s: Complex64,
    pub s_lc: Complex64,
    pub s_ch: Complex64,
    pub s_bm: Complex64,
    pub point: Vec<Complex64>,
}

impl ScalarReport {
    pub fn values(&self) -> [(&'static str, Complex64); 5] {
        [("s_h", self.s_h), ("S", self.s), ("S_LC", self.s_lc), ("S_CH", self.s_ch), ("S_BM", self.s_bm)]
    }

    pub fn max_imaginary(&self) -> f64 {
        self.values().iter().fold(0.0, |m, (_, v)| m.max(v.im.abs()))
    }
}

/// All curvature tensors and contractions at one point.
#[derive(Debug, Clone)]
pub struct CurvatureSet {
    pub full: RiemannFull,
    pub lc: CurvatureTensor,
    pub induced: CurvatureTensor,
    pub chern: CurvatureTensor,
    pub bismut: CurvatureTensor,
    pub hinv: DMatrix<Complex64>,
}

impl CurvatureSet {
    pub fn new(mj: &MetricJet) -> Result<Self> {
        need_order(mj, "curvature")?;
        let lc_table = connection::levi_civita(mj)?;
        let full = riemann_from_table(&lc_table, mj);
        Ok(Self {
            lc: full.hermitian_slice(mj.point.clone()),
            induced: tangent_curvature(&connection::induced(&lc_table), mj),
            chern: curvature_chern(mj)?,
            bismut: curvature_bismut(mj)?,
            hinv: mj.hinv0(),
            full,
        })
    }

    pub fn tensor(&self, kind: Kind) -> &CurvatureTensor {
        match kind {
            Kind::LeviCivita => &self.lc,
            Kind::Induced => &self.induced,
            Kind::Chern => &self.chern,
            Kind::Bismut => &self.bismut,
        }
    }

    /// `R_{k l̄}`
    pub fn hermitian_ricci(&self) -> DMatrix<Complex64> {
        second_trace(&self.lc, &self.hinv)
    }

    /// `𝓡_{k l̄}`
    pub fn complexified_ricci(&self) -> DMatrix<Complex64> {
        let n = self.lc.n;
        DMatrix::from_fn(n, n, |k, l| {
            let mut s = ZERO;
            for i in 0..n {
                for j in 0..n {
                    s += self.hinv[(i, j)] * (self.full.get(k, n + j, i, n + l) + self.full.get(k, i, n + j, n + l));
                }
            }
            s
        })
    }

    pub fn first(&self, kind: Kind) -> DMatrix<Complex64> {
        first_trace(self.tensor(kind), &self.hinv)
    }

    pub fn second(&self, kind: Kind) -> DMatrix<Complex64> {
        second_trace(self.tensor(kind), &self.hinv)
    }

    pub fn scalars(&self) -> ScalarReport {
        let tr = |m: &DMatrix<Complex64>| trace_with(&self.hinv, m);
        ScalarReport {
            s_h: tr(&self.complexified_ricci()),
            s: tr(&self.hermitian_ricci()),
            s_lc: tr(&self.first(Kind::Induced)),
            s_ch: tr(&self.first(Kind::Chern)),
            s_bm: tr(&self.first(Kind::Bismut)),
            point: self.lc.point.clone(),
        }
    }

    /// The eight Ricci-type matrices with their conventional names.
    pub fn ricci_variants(&self) -> Vec<(&'static str, DMatrix<Complex64>)> {
        vec![
            ("complexified", self.complexified_ricci()),
            ("hermitian", self.hermitian_ricci()),
            ("induced-first", self.first(Kind::Induced)),
            ("induced-second", self.second(Kind::Induced)),
            ("chern-first", self.first(Kind::Chern)),
            ("chern-second", self.second(Kind::Chern)),
            ("bismut-first", self.first(Kind::Bismut)),
            ("bismut-second", self.second(Kind::Bismut)),
        ]
    }
}

/// Scalar curvatures at a point.
pub fn scalars(mj: &MetricJet) -> Result<ScalarReport> {
    Ok(CurvatureSet::new(mj)?.scalars())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::MetricField;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn hopf_unit(n: usize) -> MetricJet {
        let mut z = vec![c(0.0, 0.0); n];
        z[0] = c(1.0, 0.0);
        MetricField::hopf(n).metric_jet(&z, 3).unwrap()
    }

    #[test]
    fn hopf_chern_values() {
        let t = curvature_chern(&hopf_unit(2)).unwrap();
        assert!((t.get(1, 1, 0, 0) - c(4.0, 0.0)).norm() < 1e-13);
        assert!(t.get(0, 0, 0, 0).norm() < 1e-13);
    }

    #[test]
    fn hopf_levi_civita_value() {
        let t = curvature_lc(&hopf_unit(2)).unwrap();
        assert!((t.get(0, 1, 1, 0) - c(1.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn chern_formula_matches_connection_route() {
        let mj = MetricField::hopf(3).metric_jet(&[c(0.4, 0.3), c(-0.7, 0.2), c(0.1, 0.9)], 2).unwrap();
        let direct = curvature_chern(&mj).unwrap();
        let generic = tangent_curvature(&connection::chern(&mj).unwrap(), &mj);
        assert!(direct.distance(&generic) < 1e-12);
    }

    #[test]
    fn hopf_ricci_matrices() {
        let mj = hopf_unit(2);
        let set = CurvatureSet::new(&mj).unwrap();
        let close = |m: DMatrix<Complex64>, d: [f64; 2]| {
            (m - DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(d[0], 0.0), c(d[1], 0.0)]))).camax()
        };
        assert!(close(set.first(Kind::Chern), [0.0, 2.0]) < 1e-13);
        assert!(close(set.second(Kind::Chern), [1.0, 1.0]) < 1e-13);
        assert!(close(set.hermitian_ricci(), [0.0, 0.5]) < 1e-13);
        let logdet = ricci_first_chern_logdet(&mj).unwrap();
        assert!(close(logdet.matrix, [0.0, 2.0]) < 1e-12);
    }

    #[test]
    fn flavor_kind_mismatch_is_rejected() {
        let mj = hopf_unit(2);
        let t = curvature_chern(&mj).unwrap();
        assert!(matches!(ricci(&t, &mj, RicciFlavor::HermitianRicci), Err(Error::Incompatible(_))));
    }

    #[test]
    fn order_one_is_rejected() {
        let mj = MetricField::flat(2).metric_jet(&[c(0.0, 0.0); 2], 1).unwrap();
        assert!(matches!(curvature_chern(&mj), Err(Error::OrderExhausted(_))));
    }
}
