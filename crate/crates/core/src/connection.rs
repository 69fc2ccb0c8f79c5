//! Christoffel symbols of the complexified Levi-Civita connection and the
//! connection coefficients of the induced, Chern and Bismut connections.
//!
//! A table stores `Γ_{AB}^C` with `∇_{∂_A} ∂_B = Γ_{AB}^C ∂_C`. The direction
//! index `A` runs over the 2n slots (`0..n` holomorphic, `n..2n` barred). For
//! the Levi-Civita table `B` and `C` also run over 2n slots; for connections
//! on T^{1,0} they run over `0..n`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::jets::{Jet, JetMatrix, Wirtinger};
use crate::metric::MetricJet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    LeviCivita,
    Induced,
    Chern,
    Bismut,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::LeviCivita => "levi-civita",
            Kind::Induced => "induced",
            Kind::Chern => "chern",
            Kind::Bismut => "bismut",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChristoffelTable {
    kind: Kind,
    n: usize,
    fiber: usize,
    entries: Vec<Jet>,
}

impl ChristoffelTable {
    fn build(kind: Kind, n: usize, fiber: usize, mut f: impl FnMut(usize, usize, usize) -> Jet) -> Self {
        let mut entries = Vec::with_capacity(2 * n * fiber * fiber);
        for a in 0..2 * n {
            for b in 0..fiber {
                for c in 0..fiber {
                    entries.push(f(a, b, c));
                }
            }
        }
        Self { kind, n, fiber, entries }
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Range of the fiber indices: 2n for Levi-Civita, n otherwise.
    pub fn fiber(&self) -> usize {
        self.fiber
    }

    /// `Γ_{AB}^C`.
    pub fn get(&self, a: usize, b: usize, c: usize) -> &Jet {
        &self.entries[(a * self.fiber + b) * self.fiber + c]
    }

    /// `Γ_{AB}^C` at the base point.
    pub fn value(&self, a: usize, b: usize, c: usize) -> Complex64 {
        self.get(a, b, c).constant_term()
    }

    /// Connection matrix along direction `a`: `m[b][c] = Γ_{ab}^c`.
    pub fn matrix(&self, a: usize) -> JetMatrix {
        JetMatrix::from_fn(self.fiber, self.fiber, |b, c| self.get(a, b, c).clone())
    }

    pub fn order(&self) -> usize {
        self.entries[0].order()
    }

    /// Largest deviation of `conj(Γ_{AB}^C)` from `Γ_{ĀB̄}^{C̄}` at the base
    /// point; only meaningful for the Levi-Civita table.
    pub fn conjugation_defect(&self) -> f64 {
        let bar = |a: usize| if a < self.n { a + self.n } else { a - self.n };
        let mut worst: f64 = 0.0;
        for a in 0..2 * self.n {
            for b in 0..self.fiber {
                for c in 0..self.fiber {
                    let d = self.get(a, b, c).conj() - self.get(bar(a), bar(b), bar(c)).clone();
                    worst = worst.max(d.max_abs());
                }
            }
        }
        worst
    }

    /// Largest asymmetry `|Γ_{AB}^C − Γ_{BA}^C|` (Levi-Civita only).
    pub fn torsion_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..self.fiber {
            for b in 0..self.fiber {
                for c in 0..self.fiber {
                    worst = worst.max((self.get(a, b, c) - self.get(b, a, c)).max_abs());
                }
            }
        }
        worst
    }
}

/// The complexified metric `G_{AB}` over 2n slots, with its inverse `G^{AB}`.
pub(crate) struct Complexified {
    pub g: Vec<Option<Jet>>,
    pub ginv: Vec<Option<Jet>>,
}

pub(crate) fn complexify(mj: &MetricJet) -> Complexified {
    let n = mj.n();
    let m = 2 * n;
    let mut g = vec![None; m * m];
    let mut ginv = vec![None; m * m];
    for i in 0..n {
        for j in 0..n {
            g[i * m + n + j] = Some(mj.h.get(i, j).clone());
            g[(n + j) * m + i] = Some(mj.h.get(i, j).clone());
            ginv[i * m + n + j] = Some(mj.hinv.get(i, j).clone());
            ginv[(n + i) * m + j] = Some(mj.hinv.get(j, i).clone());
        }
    }
    Complexified { g, ginv }
}

fn need_order(mj: &MetricJet, k: usize, what: &str) -> Result<()> {
    if mj.order < k {
        return Err(Error::OrderExhausted(format!(
            "{what} needs a metric jet of order at least {k}, got {}",
            mj.order
        )));
    }
    Ok(())
}

/// Christoffel symbols of the complexified Levi-Civita connection,
/// `Γ_{AB}^C = ½ G^{CE}(∂_B G_{AE} + ∂_A G_{BE} − ∂_E G_{AB})`.
pub fn levi_civita(mj: &MetricJet) -> Result<ChristoffelTable> {
    need_order(mj, 1, "the Levi-Civita connection")?;
    let n = mj.n();
    let m = 2 * n;
    let cx = complexify(mj);
    let k = mj.order - 1;
    let mut dg: Vec<Vec<Option<Jet>>> = Vec::with_capacity(m);
    for s in 0..m {
        dg.push(cx.g.iter().map(|e| e.as_ref().map(|j| j.d(s))).map(|r| r.transpose()).collect::<Result<_>>()?);
    }
    let lowered = |a: usize, b: usize, e: usize| -> Jet {
        let mut acc = Jet::zero(n, k);
        if let Some(x) = &dg[b][a * m + e] {
            acc += x;
        }
        if let Some(x) = &dg[a][b * m + e] {
            acc += x;
        }
        if let Some(x) = &dg[e][a * m + b] {
            acc -= x;
        }
        acc
    };
    let table = ChristoffelTable::build(Kind::LeviCivita, n, m, |a, b, c| {
        let mut acc = Jet::zero(n, k);
        for e in 0..m {
            if let Some(gi) = &cx.ginv[c * m + e] {
                acc += &(gi * &lowered(a, b, e));
            }
        }
        acc.scale_real(0.5)
    });
    if cfg!(debug_assertions) {
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    debug_assert!(table.get(i, j, n + l).max_abs() < 1e-12 * (1.0 + mj.h.get(0, 0).max_abs()));
                    debug_assert!(table.get(n + i, n + j, l).max_abs() < 1e-12 * (1.0 + mj.h.get(0, 0).max_abs()));
                }
            }
        }
    }
    Ok(table)
}

/// Restriction of the Levi-Civita connection to T^{1,0}: `Γ_{Ak}^l` with k, l unbarred.
pub fn induced(lc: &ChristoffelTable) -> ChristoffelTable {
    assert_eq!(lc.kind, Kind::LeviCivita);
    ChristoffelTable::build(Kind::Induced, lc.n, lc.n, |a, k, l| lc.get(a, k, l).clone())
}

fn raise(mj: &MetricJet, kind: Kind, lowered: impl Fn(usize, usize, usize) -> Result<Jet>) -> Result<ChristoffelTable> {
    let n = mj.n();
    let mut low = Vec::with_capacity(2 * n * n * n);
    for a in 0..2 * n {
        for b in 0..n {
            for q in 0..n {
                low.push(lowered(a, b, q)?);
            }
        }
    }
    let k = mj.order - 1;
    Ok(ChristoffelTable::build(kind, n, n, |a, b, c| {
        let mut acc = Jet::zero(n, k);
        for q in 0..n {
            acc += &(mj.hinv.get(c, q) * &low[(a * n + b) * n + q]);
        }
        acc
    }))
}

/// Chern connection: `Γ_{ik}^l = h^{l q̄} ∂h_{k q̄}/∂z^i`, zero in barred directions.
pub fn chern(mj: &MetricJet) -> Result<ChristoffelTable> {
    need_order(mj, 1, "the Chern connection")?;
    let n = mj.n();
    let k = mj.order - 1;
    raise(mj, Kind::Chern, |a, b, q| {
        if a < n {
            mj.h.get(b, q).dz(a)
        } else {
            Ok(Jet::zero(n, k))
        }
    })
}

/// Bismut connection, lowered as
/// `Γ̃_{iαβ̄} = ∂h_{iβ̄}/∂z^α` and `Γ̃_{j̄αβ̄} = ∂h_{αβ̄}/∂z̄^j − ∂h_{αj̄}/∂z̄^β`.
pub fn bismut(mj: &MetricJet) -> Result<ChristoffelTable> {
    need_order(mj, 1, "the Bismut connection")?;
    let n = mj.n();
    raise(mj, Kind::Bismut, |a, alpha, beta| {
        if a < n {
            mj.h.get(a, beta).dz(alpha)
        } else {
            let j = a - n;
            Ok(mj.h.get(alpha, beta).dzbar(j)? - mj.h.get(alpha, j).dzbar(beta)?)
        }
    })
}

/// Connection table of the given kind.
pub fn connection(mj: &MetricJet, kind: Kind) -> Result<ChristoffelTable> {
    match kind {
        Kind::LeviCivita => levi_civita(mj),
        Kind::Induced => Ok(induced(&levi_civita(mj)?)),
        Kind::Chern => chern(mj),
        Kind::Bismut => bismut(mj),
    }
}

/// `Γ_{īj}^k` from the closed form `½ h^{k l̄}(∂h_{j l̄}/∂z̄^i − ∂h_{j ī}/∂z̄^l)`.
pub fn mixed_symbol_closed_form(mj: &MetricJet, i: usize, j: usize, k: usize) -> Result<Jet> {
    need_order(mj, 1, "the mixed Christoffel symbol")?;
    let n = mj.n();
    let mut acc = Jet::zero(n, mj.order - 1);
    for l in 0..n {
        let t = mj.h.get(j, l).dzbar(i)? - mj.h.get(j, i).dzbar(l)?;
        acc += &(mj.hinv.get(k, l) * &t);
    }
    Ok(acc.scale_real(0.5))
}

/// `h^{i j̄} Γ_{i j̄}^{ℓ̄}` at the base point, the barred trace of the Levi-Civita symbols.
pub fn barred_trace(lc: &ChristoffelTable, mj: &MetricJet) -> Vec<Complex64> {
    let n = lc.n;
    let hi = mj.hinv0();
    (0..n)
        .map(|l| {
            let mut s = Complex64::default();
            for i in 0..n {
                for j in 0..n {
                    s += hi[(i, j)] * lc.value(i, n + j, n + l);
                }
            }
            s
        })
        .collect()
}

/// First derivatives `∂h_{ij̄}/∂z^k` at the base point, indexed `[k][i][j]`.
pub fn dh_values(mj: &MetricJet, which: Wirtinger) -> Result<Vec<Vec<Vec<Complex64>>>> {
    let n = mj.n();
    (0..n)
        .map(|k| {
            let d = mj.dh(which, k)?;
            Ok((0..n).map(|i| (0..n).map(|j| d.get(i, j).constant_term()).collect()).collect())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::MetricField;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn hopf_symbols_at_unit_point() {
        let mj = MetricField::hopf(2).metric_jet(&[c(1.0, 0.0), c(0.0, 0.0)], 2).unwrap();
        let lc = levi_civita(&mj).unwrap();
        assert!((lc.value(0, 0, 0) - c(-1.0, 0.0)).norm() < 1e-14);
        // Γ^2_{1̄2}: direction 1̄, acting on ∂_2, output ∂_2.
        assert!((lc.value(2, 1, 1) - c(-0.5, 0.0)).norm() < 1e-14);
        let ch = chern(&mj).unwrap();
        assert!((ch.value(0, 0, 0) - c(-1.0, 0.0)).norm() < 1e-14);
        let bm = bismut(&mj).unwrap();
        // lowered Γ̃_{11 1̄} = h_{11̄} Γ̃_{11}^1 = 4 Γ̃_{11}^1
        assert!((bm.value(0, 0, 0) * 4.0 - c(-4.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn flat_tables_vanish() {
        let mj = MetricField::flat(3).metric_jet(&[c(0.2, 0.1); 3], 2).unwrap();
        for kind in [Kind::LeviCivita, Kind::Induced, Kind::Chern, Kind::Bismut] {
            let t = connection(&mj, kind).unwrap();
            assert!(t.entries.iter().all(|j| j.is_zero()));
        }
    }

    #[test]
    fn order_zero_is_rejected() {
        let mj = MetricField::flat(2).metric_jet(&[c(0.0, 0.0); 2], 0).unwrap();
        assert!(matches!(levi_civita(&mj), Err(Error::OrderExhausted(_))));
    }
}
