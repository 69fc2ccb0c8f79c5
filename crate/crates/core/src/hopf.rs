//! Closed forms for the canonical metric `4δ_{ij}/|z|²` on ℂⁿ∖{0}, used as a
//! golden oracle for the jet pipeline.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::connection::{self, Kind};
use crate::curvature::{CurvatureSet, CurvatureTensor};
use crate::error::{Error, Result};
use crate::jets::DEFAULT_ORDER;
use crate::metric::MetricField;

fn d(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// Which closed form to use for the Bismut Ricci curvatures: the printed
/// `(2−n)(δ_{ij}|z|² − z̄^i z^j)/(4|z|²)` or the `|z|⁴` denominator obtained by
/// tracing the Bismut tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BismutRicciForm {
    Printed,
    Corrected,
}

#[derive(Debug, Clone)]
pub struct HopfPoint {
    pub n: usize,
    pub z: Vec<Complex64>,
    r2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Metric,
    Dh,
    D2h,
    Christoffel,
    ChernTensor,
    ChernFirst,
    ChernSecond,
    LcTensor,
    HermitianRicci,
    BismutTensor,
    BismutFirst,
    BismutSecond,
}

#[derive(Debug, Clone)]
pub enum OracleValue {
    Matrix(DMatrix<Complex64>),
    Tensor(CurvatureTensor),
    /// Flattened array with its index ranges.
    Array(Vec<usize>, Vec<Complex64>),
}

impl HopfPoint {
    pub fn new(z: Vec<Complex64>) -> Result<Self> {
        let n = z.len();
        let r2: f64 = z.iter().map(|w| w.norm_sqr()).sum();
        if n < 1 || r2 == 0.0 {
            return Err(Error::Domain("a Hopf point needs z ≠ 0".into()));
        }
        Ok(Self { n, z, r2 })
    }

    pub fn modulus_squared(&self) -> f64 {
        self.r2
    }

    fn zb(&self, i: usize) -> Complex64 {
        self.z[i].conj()
    }

    pub fn metric(&self) -> DMatrix<Complex64> {
        DMatrix::identity(self.n, self.n) * Complex64::new(4.0 / self.r2, 0.0)
    }

    /// `∂h_{k l̄}/∂z^i = −4δ_{kl} z̄^i/|z|⁴`, as `[i][k][l]`.
    pub fn dh(&self, i: usize, k: usize, l: usize) -> Complex64 {
        -self.zb(i) * (4.0 * d(k, l) / self.r2.powi(2))
    }

    /// `∂h_{k l̄}/∂z̄^j = −4δ_{kl} z^j/|z|⁴`.
    pub fn dhbar(&self, j: usize, k: usize, l: usize) -> Complex64 {
        -self.z[j] * (4.0 * d(k, l) / self.r2.powi(2))
    }

    /// `∂²h_{k l̄}/∂z^i∂z̄^j = −4δ_{kl}(δ_{ij}|z|² − 2z̄^i z^j)/|z|⁶`.
    pub fn d2h(&self, i: usize, j: usize, k: usize, l: usize) -> Complex64 {
        -(Complex64::new(d(i, j) * self.r2, 0.0) - self.zb(i) * self.z[j] * 2.0) * (4.0 * d(k, l) / self.r2.powi(3))
    }

    /// Levi-Civita `Γ_{ik}^l = −(δ_{il}z̄^k + δ_{kl}z̄^i)/(2|z|²)`.
    pub fn gamma(&self, i: usize, k: usize, l: usize) -> Complex64 {
        -(self.zb(k) * d(i, l) + self.zb(i) * d(k, l)) / (2.0 * self.r2)
    }

    /// Levi-Civita `Γ_{j̄ k}^l = (δ_{jk}z^l − δ_{kl}z^j)/(2|z|²)`.
    pub fn gamma_mixed(&self, j: usize, k: usize, l: usize) -> Complex64 {
        (self.z[l] * d(j, k) - self.z[j] * d(k, l)) / (2.0 * self.r2)
    }

    /// `Θ_{i j̄ k l̄} = 4δ_{kl}(δ_{ij}|z|² − z^j z̄^i)/|z|⁶`.
    pub fn chern_tensor(&self) -> CurvatureTensor {
        let r2 = self.r2;
        CurvatureTensor::from_fn(Kind::Chern, self.n, self.z.clone(), |i, j, k, l| {
            (Complex64::new(d(i, j) * r2, 0.0) - self.z[j] * self.zb(i)) * (4.0 * d(k, l) / r2.powi(3))
        })
    }

    /// `Θ⁽¹⁾_{k l̄} = n(δ_{kl}|z|² − z^l z̄^k)/|z|⁴`.
    pub fn chern_first(&self) -> DMatrix<Complex64> {
        let (n, r2) = (self.n as f64, self.r2);
        DMatrix::from_fn(self.n, self.n, |k, l| {
            (Complex64::new(d(k, l) * r2, 0.0) - self.z[l] * self.zb(k)) * (n / r2.powi(2))
        })
    }

    /// `Θ⁽²⁾_{k l̄} = (n−1)δ_{kl}/|z|²`.
    pub fn chern_second(&self) -> DMatrix<Complex64> {
        DMatrix::identity(self.n, self.n) * Complex64::new((self.n as f64 - 1.0) / self.r2, 0.0)
    }

    /// Eigenvalues of `Θ⁽¹⁾` with respect to the identity: `0` once and `n/|z|²` with multiplicity n−1.
    pub fn chern_first_eigenvalues(&self) -> Vec<f64> {
        let mut v = vec![self.n as f64 / self.r2; self.n];
        v[0] = 0.0;
        v
    }

    /// `R_{i j̄ k}^l = δ_{il}δ_{jk}/(2|z|²) − (δ_{il}z^j z̄^k + δ_{jk}z^l z̄^i)/(4|z|⁴)`.
    pub fn lc_mixed(&self, i: usize, j: usize, k: usize, l: usize) -> Complex64 {
        let r2 = self.r2;
        Complex64::new(d(i, l) * d(j, k) / (2.0 * r2), 0.0)
            - (self.z[j] * self.zb(k) * d(i, l) + self.z[l] * self.zb(i) * d(j, k)) / (4.0 * r2 * r2)
    }

    /// `R_{i j̄ k l̄} = 2δ_{il}δ_{jk}/|z|⁴ − (δ_{il}z^j z̄^k + δ_{jk}z^l z̄^i)/|z|⁶`.
    pub fn lc_tensor(&self) -> CurvatureTensor {
        let r2 = self.r2;
        CurvatureTensor::from_fn(Kind::LeviCivita, self.n, self.z.clone(), |i, j, k, l| {
            Complex64::new(2.0 * d(i, l) * d(j, k) / r2.powi(2), 0.0)
                - (self.z[j] * self.zb(k) * d(i, l) + self.z[l] * self.zb(i) * d(j, k)) / r2.powi(3)
        })
    }

    /// `R_{k l̄} = (δ_{kl}|z|² − z^l z̄^k)/(2|z|⁴)`.
    pub fn hermitian_ricci(&self) -> DMatrix<Complex64> {
        let r2 = self.r2;
        DMatrix::from_fn(self.n, self.n, |k, l| {
            (Complex64::new(d(k, l) * r2, 0.0) - self.z[l] * self.zb(k)) / (2.0 * r2 * r2)
        })
    }

    /// `B_{i j̄ k}^l = (δ_{jk}δ_{il} − δ_{kl}δ_{ij})/|z|² + (δ_{ij}z̄^k z^l + δ_{kl}z̄^i z^j − δ_{il}z̄^k z^j − δ_{jk}z̄^i z^l)/|z|⁴`.
    pub fn bismut_mixed(&self, i: usize, j: usize, k: usize, l: usize) -> Complex64 {
        let r2 = self.r2;
        let zb = |a: usize| self.zb(a);
        let z = &self.z;
        Complex64::new((d(j, k) * d(i, l) - d(k, l) * d(i, j)) / r2, 0.0)
            + (zb(k) * z[l] * d(i, j) + zb(i) * z[j] * d(k, l) - zb(k) * z[j] * d(i, l) - zb(i) * z[l] * d(j, k))
                / (r2 * r2)
    }

    /// `B_{i j̄ k l̄} = B_{i j̄ k}^s h_{s l̄}`.
    pub fn bismut_tensor(&self) -> CurvatureTensor {
        let f = 4.0 / self.r2;
        CurvatureTensor::from_fn(Kind::Bismut, self.n, self.z.clone(), |i, j, k, l| self.bismut_mixed(i, j, k, l) * f)
    }

    /// `B⁽¹⁾ = B⁽²⁾ = (2−n)(δ_{ij}|z|² − z̄^i z^j)` over `4|z|²` (printed) or `|z|⁴` (corrected).
    pub fn bismut_ricci(&self, form: BismutRicciForm) -> DMatrix<Complex64> {
        let r2 = self.r2;
        let den = match form {
            BismutRicciForm::Printed => 4.0 * r2,
            BismutRicciForm::Corrected => r2 * r2,
        };
        let f = (2.0 - self.n as f64) / den;
        DMatrix::from_fn(self.n, self.n, |i, j| (Complex64::new(d(i, j) * r2, 0.0) - self.zb(i) * self.z[j]) * f)
    }

    pub fn oracle(&self, q: Quantity, form: BismutRicciForm) -> OracleValue {
        let n = self.n;
        let arr3 = |f: &dyn Fn(usize, usize, usize) -> Complex64| {
            let mut v = Vec::with_capacity(n * n * n);
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        v.push(f(a, b, c));
                    }
                }
            }
            v
        };
        match q {
            Quantity::Metric => OracleValue::Matrix(self.metric()),
            Quantity::Dh => OracleValue::Array(vec![n, n, n], arr3(&|i, k, l| self.dh(i, k, l))),
            Quantity::D2h => {
                let mut v = Vec::with_capacity(n.pow(4));
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            for l in 0..n {
                                v.push(self.d2h(i, j, k, l));
                            }
                        }
                    }
                }
                OracleValue::Array(vec![n, n, n, n], v)
            }
            Quantity::Christoffel => {
                let mut v = arr3(&|i, k, l| self.gamma(i, k, l));
                v.extend(arr3(&|j, k, l| self.gamma_mixed(j, k, l)));
                OracleValue::Array(vec![2, n, n, n], v)
            }
            Quantity::ChernTensor => OracleValue::Tensor(self.chern_tensor()),
            Quantity::ChernFirst => OracleValue::Matrix(self.chern_first()),
            Quantity::ChernSecond => OracleValue::Matrix(self.chern_second()),
            Quantity::LcTensor => OracleValue::Tensor(self.lc_tensor()),
            Quantity::HermitianRicci => OracleValue::Matrix(self.hermitian_ricci()),
            Quantity::BismutTensor => OracleValue::Tensor(self.bismut_tensor()),
            Quantity::BismutFirst | Quantity::BismutSecond => OracleValue::Matrix(self.bismut_ricci(form)),
        }
    }
}

/// Residuals of the pipeline against the closed forms at one point.
#[derive(Debug, Clone)]
pub struct OracleReport {
    pub point: Vec<Complex64>,
    /// `(quantity, max componentwise residual)`.
    pub residuals: Vec<(&'static str, f64)>,
    pub bismut_ricci_printed: f64,
    pub bismut_ricci_corrected: f64,
}

impl OracleReport {
    pub fn matched_form(&self, tol: f64) -> Option<BismutRicciForm> {
        if self.bismut_ricci_corrected <= tol {
            Some(BismutRicciForm::Corrected)
        } else if self.bismut_ricci_printed <= tol {
            Some(BismutRicciForm::Printed)
        } else {
            None
        }
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, (_, r)| m.max(*r))
    }
}

fn mat_gap(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).camax()
}

/// Computes every quantity through the jet pipeline and compares it with the closed forms.
pub fn oracle_vs_pipeline(p: &HopfPoint) -> Result<OracleReport> {
    let n = p.n;
    let mj = MetricField::hopf(n).metric_jet(&p.z, DEFAULT_ORDER)?;
    let set = CurvatureSet::new(&mj)?;
    let lc = connection::levi_civita(&mj)?;
    let mut residuals = Vec::new();

    residuals.push(("metric", mat_gap(&mj.h0(), &p.metric())));
    let mut dh: f64 = 0.0;
    let mut d2: f64 = 0.0;
    for i in 0..n {
        for k in 0..n {
            for l in 0..n {
                let hj = mj.h.get(k, l);
                dh = dh.max((hj.d_at_base(i) - p.dh(i, k, l)).norm());
                dh = dh.max((hj.d_at_base(n + i) - p.dhbar(i, k, l)).norm());
                for j in 0..n {
                    d2 = d2.max((hj.d2_at_base(i, n + j) - p.d2h(i, j, k, l)).norm());
                }
            }
        }
    }
    residuals.push(("dh", dh));
    residuals.push(("d2h", d2));

    let mut g: f64 = 0.0;
    for a in 0..n {
        for k in 0..n {
            for l in 0..n {
                g = g.max((lc.value(a, k, l) - p.gamma(a, k, l)).norm());
                g = g.max((lc.value(n + a, k, l) - p.gamma_mixed(a, k, l)).norm());
            }
        }
    }
    residuals.push(("christoffel", g));

    residuals.push(("chern-tensor", set.chern.distance(&p.chern_tensor())));
    residuals.push(("chern-first", mat_gap(&set.first(Kind::Chern), &p.chern_first())));
    residuals.push(("chern-second", mat_gap(&set.second(Kind::Chern), &p.chern_second())));

    let mut mixed: f64 = 0.0;
    let f = p.r2 / 4.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    mixed = mixed.max((set.lc.get(i, j, k, l) * f - p.lc_mixed(i, j, k, l)).norm());
                }
            }
        }
    }
    residuals.push(("lc-mixed", mixed));
    residuals.push(("lc-tensor", set.lc.distance(&p.lc_tensor())));
    residuals.push(("hermitian-ricci", mat_gap(&set.hermitian_ricci(), &p.hermitian_ricci())));
    residuals.push(("bismut-tensor", set.bismut.distance(&p.bismut_tensor())));

    let b1 = set.first(Kind::Bismut);
    let b2 = set.second(Kind::Bismut);
    let gap = |form| {
        let o = p.bismut_ricci(form);
        mat_gap(&b1, &o).max(mat_gap(&b2, &o))
    };
    Ok(OracleReport {
        point: p.z.clone(),
        residuals,
        bismut_ricci_printed: gap(BismutRicciForm::Printed),
        bismut_ricci_corrected: gap(BismutRicciForm::Corrected),
    })
}

/// Maximum residual of each quantity over many points, with the Bismut Ricci
/// forms tracked separately.
#[derive(Debug, Clone)]
pub struct OracleSummary {
    pub n: usize,
    pub points: usize,
    pub residuals: Vec<(&'static str, f64)>,
    pub bismut_ricci_printed: f64,
    pub bismut_ricci_corrected: f64,
}

impl OracleSummary {
    pub fn from_reports(n: usize, reports: &[OracleReport]) -> Self {
        let mut residuals: Vec<(&'static str, f64)> =
            reports.first().map(|r| r.residuals.iter().map(|(k, _)| (*k, 0.0)).collect()).unwrap_or_default();
        let (mut bp, mut bc) = (0.0f64, 0.0f64);
        for r in reports {
            for (slot, (_, v)) in residuals.iter_mut().zip(&r.residuals) {
                slot.1 = slot.1.max(*v);
            }
            bp = bp.max(r.bismut_ricci_printed);
            bc = bc.max(r.bismut_ricci_corrected);
        }
        Self { n, points: reports.len(), residuals, bismut_ricci_printed: bp, bismut_ricci_corrected: bc }
    }

    /// The closed form that matches at every point, preferring the corrected one.
    pub fn matched_form(&self, tol: f64) -> Option<BismutRicciForm> {
        if self.bismut_ricci_corrected <= tol {
            Some(BismutRicciForm::Corrected)
        } else if self.bismut_ricci_printed <= tol {
            Some(BismutRicciForm::Printed)
        } else {
            None
        }
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, (_, r)| m.max(*r))
    }
}

/// Runs [`oracle_vs_pipeline`] at `count` seeded points with `1 ≤ |z| ≤ 2`.
pub fn oracle_suite(n: usize, count: usize, seed: u64) -> Result<OracleSummary> {
    use rayon::prelude::*;
    let mut rng = crate::sampling::rng(seed);
    let pts: Vec<Vec<Complex64>> = (0..count).map(|_| crate::sampling::annulus_point(&mut rng, n, 1.0, 2.0)).collect();
    let reports = pts
        .into_par_iter()
        .map(|z| oracle_vs_pipeline(&HopfPoint::new(z)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(OracleSummary::from_reports(n, &reports))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn unit_point_values() {
        let p = HopfPoint::new(vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!((p.chern_tensor().get(1, 1, 0, 0) - c(4.0, 0.0)).norm() < 1e-15);
        assert!((p.hermitian_ricci()[(1, 1)] - c(0.5, 0.0)).norm() < 1e-15);
        let p3 = HopfPoint::new(vec![c(0.0, 2.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!((p3.metric() - DMatrix::identity(3, 3)).camax() < 1e-15);
        assert!((p3.chern_second() - DMatrix::identity(3, 3) * c(0.5, 0.0)).camax() < 1e-15);
    }

    #[test]
    fn pipeline_matches_closed_forms() {
        for n in [2, 3] {
            let mut rng = crate::sampling::rng(11 + n as u64);
            for _ in 0..5 {
                let z = crate::sampling::annulus_point(&mut rng, n, 1.0, 2.0);
                let r = oracle_vs_pipeline(&HopfPoint::new(z).unwrap()).unwrap();
                for (name, v) in &r.residuals {
                    assert!(*v < 1e-10, "n={n} {name}: {v}");
                }
            }
        }
    }
}
