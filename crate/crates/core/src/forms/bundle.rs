//! Forms valued in a trivialized vector bundle with a metric connection.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{random_jet, AlgebraicOp, Factor, FormContext, FormJet};
use crate::connection;
use crate::error::{Error, Result};
use crate::jets::{Jet, JetMatrix};
use crate::metric::MetricJet;
use crate::sampling::SeededRng;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Connection `∇_A e_α = Σ_β Θ_A[β][α] e_β` on a frame `e_α` with fiber metric
/// `K[α][β] = ⟨e_α, e_β⟩`.
#[derive(Clone, Debug)]
pub struct ConnectionJet {
    pub n: usize,
    pub rank: usize,
    /// One matrix per direction slot `0..2n`.
    pub theta: Vec<JetMatrix>,
    pub metric: JetMatrix,
}

impl ConnectionJet {
    /// Validates metric compatibility and builds the connection.
    pub fn new(theta: Vec<JetMatrix>, metric: JetMatrix) -> Result<Self> {
        let rank = metric.rows();
        let n = metric.get(0, 0).n();
        if theta.len() != 2 * n || theta.iter().any(|t| t.rows() != rank || t.cols() != rank) {
            return Err(Error::Structural(format!("need {} connection matrices of size {rank}", 2 * n)));
        }
        let c = Self { n, rank, theta, metric };
        let (worst, at) = c.compatibility_defect()?;
        if worst > 1e-10 {
            return Err(Error::Precondition(format!("connection is not metric compatible at {at} (defect {worst:.3e})")));
        }
        Ok(c)
    }

    pub fn trivial(n: usize, rank: usize, order: usize) -> Self {
        let zero = JetMatrix::from_fn(rank, rank, |_, _| Jet::zero(n, order));
        Self { n, rank, theta: vec![zero; 2 * n], metric: JetMatrix::identity(rank, n, order) }
    }

    /// Unitary frame with `Θ_k` Gaussian and `Θ_k̄ = −Θ_k^†`.
    pub fn random_unitary(n: usize, rank: usize, order: usize, scale: f64, rng: &mut SeededRng) -> Self {
        let holo: Vec<JetMatrix> =
            (0..n).map(|_| JetMatrix::from_fn(rank, rank, |_, _| random_jet(n, order, rng).scale_real(scale))).collect();
        let anti: Vec<JetMatrix> = holo.iter().map(|t| t.conj_transpose().map(|j| -j)).collect();
        Self { n, rank, theta: holo.into_iter().chain(anti).collect(), metric: JetMatrix::identity(rank, n, order) }
    }

    /// Real orthonormal frame: `Θ_k` skew-symmetric and `Θ_k̄ = conj(Θ_k)`.
    pub fn random_orthogonal(n: usize, rank: usize, order: usize, scale: f64, rng: &mut SeededRng) -> Self {
        let holo: Vec<JetMatrix> = (0..n)
            .map(|_| {
                let m = JetMatrix::from_fn(rank, rank, |_, _| random_jet(n, order, rng).scale_real(scale));
                JetMatrix::from_fn(rank, rank, |a, b| m.get(a, b) - m.get(b, a))
            })
            .collect();
        let anti: Vec<JetMatrix> = holo.iter().map(|t| t.map(Jet::conj)).collect();
        Self { n, rank, theta: holo.into_iter().chain(anti).collect(), metric: JetMatrix::identity(rank, n, order) }
    }

    /// `E = T^{1,0}M` with the Chern connection in the coordinate frame.
    pub fn chern_tangent(mj: &MetricJet) -> Result<Self> {
        let n = mj.n();
        let ch = connection::chern(mj)?;
        let theta = (0..2 * n).map(|a| JetMatrix::from_fn(n, n, |g, al| ch.get(a, al, g).clone())).collect();
        Self::new(theta, mj.h.clone())
    }

    /// Largest coefficient of `∂_A K_{αβ̄} − ⟨Θ_A e_α, e_β⟩ − ⟨e_α, Θ_Ā e_β⟩`,
    /// with the place where it occurs.
    pub fn compatibility_defect(&self) -> Result<(f64, String)> {
        let (n, r) = (self.n, self.rank);
        let mut worst = (0.0, String::from("nowhere"));
        for a in 0..2 * n {
            let abar = if a < n { a + n } else { a - n };
            for al in 0..r {
                for be in 0..r {
                    let mut d = self.metric.get(al, be).d(a)?;
                    for g in 0..r {
                        d -= &(self.theta[a].get(g, al) * self.metric.get(g, be));
                        d -= &(&self.theta[abar].get(g, be).conj() * self.metric.get(al, g));
                    }
                    let v = d.max_abs();
                    if v > worst.0 {
                        let dir = if a < n { format!("z{}", a + 1) } else { format!("z̄{}", a - n + 1) };
                        worst = (v, format!("direction {dir}, fiber entry ({}, {})", al + 1, be + 1));
                    }
                }
            }
        }
        Ok(worst)
    }

    /// `R_{i j̄} = [∇_i, ∇_{j̄}]` as endomorphism jets, indexed `i * n + j`.
    pub fn curvature(&self) -> Result<Vec<JetMatrix>> {
        let n = self.n;
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let (ti, tj) = (&self.theta[i], &self.theta[n + j]);
                let a = tj.try_map(|x| x.d(i))?;
                let b = ti.try_map(|x| x.d(n + j))?;
                let c = ti.mul(tj)?;
                let d = tj.mul(ti)?;
                out.push(JetMatrix::from_fn(self.rank, self.rank, |p, q| {
                    &(&(a.get(p, q) - b.get(p, q)) + c.get(p, q)) - d.get(p, q)
                }));
            }
        }
        Ok(out)
    }
}

/// `R_{α β̄} = h^{i j̄} R_{i j̄ α β̄}` at the base point, with the fiber index
/// lowered by the bundle metric.
pub fn second_hermitian_ricci(conn: &ConnectionJet, mj: &MetricJet) -> Result<DMatrix<Complex64>> {
    let r = conn.curvature()?;
    Ok(contract_curvature(conn, mj, |i, j, g, a| r[i * conn.n + j].get(g, a).constant_term()))
}

fn contract_curvature(
    conn: &ConnectionJet,
    mj: &MetricJet,
    r: impl Fn(usize, usize, usize, usize) -> Complex64,
) -> DMatrix<Complex64> {
    let (n, rank) = (conn.n, conn.rank);
    let hinv = mj.hinv0();
    let k = conn.metric.constant();
    DMatrix::from_fn(rank, rank, |a, b| {
        let mut s = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                for g in 0..rank {
                    s += hinv[(i, j)] * r(i, j, g, a) * k[(g, b)];
                }
            }
        }
        s
    })
}

/// Operators on E-valued forms over a fixed metric and connection.
#[derive(Clone, Debug)]
pub struct BundleContext {
    pub forms: FormContext,
    pub conn: ConnectionJet,
}

impl BundleContext {
    pub fn new(mj: &MetricJet, conn: ConnectionJet) -> Result<Self> {
        if conn.n != mj.n() {
            return Err(Error::Structural("connection and metric live on different charts".into()));
        }
        Ok(Self { forms: FormContext::new(mj)?, conn })
    }

    fn unit(&self, slot: usize) -> AlgebraicOp {
        AlgebraicOp::wedge(vec![(slot, Jet::real(self.conn.n, self.forms.mj.order, 1.0))])
    }

    fn twisted(&self, first: &FormJet, slots: std::ops::Range<usize>, phi: &FormJet) -> FormJet {
        let mut out = first.clone();
        for s in slots {
            out = &out + &self.unit(s).apply(&phi.apply_endomorphism(&self.conn.theta[s]));
        }
        out
    }

    /// `∂_E = Σ dz^k ∧ (∂_k + Θ_k)`.
    pub fn del_e(&self, phi: &FormJet) -> Result<FormJet> {
        let base = self.forms.del().apply(phi)?;
        Ok(self.twisted(&base, 0..self.conn.n, phi))
    }

    /// `∂̄_E = Σ dz̄^k ∧ (∂_k̄ + Θ_k̄)`.
    pub fn delbar_e(&self, phi: &FormJet) -> Result<FormJet> {
        let n = self.conn.n;
        let base = self.forms.delbar().apply(phi)?;
        Ok(self.twisted(&base, n..2 * n, phi))
    }

    /// `∂̄_E* φ = ∂̄*φ − h^{i j̄} Θ_i (I_{j̄} φ)`.
    pub fn delbar_e_star(&self, phi: &FormJet) -> Result<FormJet> {
        let n = self.conn.n;
        let mut out = self.forms.delbar_star().apply(phi)?;
        for i in 0..n {
            let v = (0..n).map(|j| (n + j, -self.forms.mj.hinv.get(i, j))).collect();
            let c = AlgebraicOp::word(Complex64::new(1.0, 0.0), vec![Factor::Contract(v)]).apply(phi);
            out = &out + &c.apply_endomorphism(&self.conn.theta[i]);
        }
        Ok(out)
    }

    /// `∂_E* φ = ∂*φ − h^{j ī} Θ_ī (I_j φ)`.
    pub fn del_e_star(&self, phi: &FormJet) -> Result<FormJet> {
        let n = self.conn.n;
        let mut out = self.forms.del_star().apply(phi)?;
        for i in 0..n {
            let v = (0..n).map(|j| (j, -self.forms.mj.hinv.get(j, i))).collect();
            let c = AlgebraicOp::word(Complex64::new(1.0, 0.0), vec![Factor::Contract(v)]).apply(phi);
            out = &out + &c.apply_endomorphism(&self.conn.theta[n + i]);
        }
        Ok(out)
    }

    /// `(∂_E∂̄_E + ∂̄_E∂_E) φ`.
    pub fn curvature_operator(&self, phi: &FormJet) -> Result<FormJet> {
        let a = self.del_e(&self.delbar_e(phi)?)?;
        let b = self.delbar_e(&self.del_e(phi)?)?;
        Ok(&a + &b)
    }

    /// The sesquilinear pairing `{φ, ψ} = φ^α ∧ conj(ψ^β) K_{α β̄}`.
    pub fn pairing(&self, phi: &FormJet, psi: &FormJet) -> Result<FormJet> {
        let r = self.conn.rank;
        let comp = |f: &FormJet, a: usize| {
            let mut out = FormJet::zero(f.n(), 1, f.order());
            for m in 0..f.masks() {
                out.set(m, 0, f.get(m, a).clone());
            }
            out
        };
        let mut out = FormJet::zero(phi.n(), 1, phi.order().min(psi.order()));
        for a in 0..r {
            for b in 0..r {
                let k = self.conn.metric.get(a, b).clone();
                let w = comp(phi, a).wedge(&comp(psi, b).conj())?;
                out = &out + &w.map(|j| &k * j);
            }
        }
        Ok(out)
    }

    /// Curvature `R_{i j̄}` read off `(∂_E∂̄_E + ∂̄_E∂_E) e_α`, contracted to the
    /// second Ricci matrix; an operator-level route to [`second_hermitian_ricci`].
    pub fn second_ricci_by_operators(&self) -> Result<DMatrix<Complex64>> {
        let (n, rank) = (self.conn.n, self.conn.rank);
        let order = self.forms.mj.order.max(2);
        let mut table = vec![Complex64::new(0.0, 0.0); n * n * rank * rank];
        for a in 0..rank {
            let s = FormJet::section((0..rank).map(|b| Jet::real(n, order, if a == b { 1.0 } else { 0.0 })).collect());
            let r = self.curvature_operator(&s)?;
            for i in 0..n {
                for j in 0..n {
                    let m = super::mask_of(n, &[i], &[j]);
                    for g in 0..rank {
                        table[((i * n + j) * rank + g) * rank + a] = r.get(m, g).constant_term();
                    }
                }
            }
        }
        Ok(contract_curvature(&self.conn, &self.forms.mj, |i, j, g, a| table[((i * n + j) * rank + g) * rank + a]))
    }

    /// `τ(s) + 2√−1 (∂̄*ω)·s` and `τ̄(s) − 2√−1 (∂*ω)·s` on a section.
    pub fn torsion_on_section(&self, s: &FormJet) -> Result<(FormJet, FormJet)> {
        let f = &self.forms;
        let omega = FormJet::kahler_form(&f.mj);
        let tau = f.tau()?;
        let a = &tau.apply(s) + &f.delbar_star().apply(&omega)?.scale(I * 2.0).wedge(s)?;
        let b = &f.bar(&tau).apply(s) - &f.del_star().apply(&omega)?.scale(I * 2.0).wedge(s)?;
        Ok((a, b))
    }
}
