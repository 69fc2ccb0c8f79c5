//! The operators of the Bochner-formula calculus on scalar forms.

use num_complex::Complex64;

use super::{gram_jets, masks_of_bidegree, AlgebraicOp, Factor, FormJet};
use crate::connection::{self, ChristoffelTable};
use crate::error::{Error, Result};
use crate::jets::{Jet, JetMatrix};
use crate::metric::MetricJet;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `Σ_A M_A ∂_A + M_0` with algebraic `M_A`, `M_0`.
#[derive(Clone, Debug, Default)]
pub struct FirstOrderOp {
    pub symbol: Vec<(usize, AlgebraicOp)>,
    pub zeroth: AlgebraicOp,
}

impl FirstOrderOp {
    pub fn algebraic(op: AlgebraicOp) -> Self {
        Self { symbol: Vec::new(), zeroth: op }
    }

    pub fn apply(&self, phi: &FormJet) -> Result<FormJet> {
        let mut out = self.zeroth.apply(phi);
        for (s, m) in &self.symbol {
            out = &out + &m.apply(&phi.d_coeff(*s)?);
        }
        Ok(out)
    }

    pub fn plus(&self, other: &Self) -> Self {
        Self {
            symbol: self.symbol.iter().chain(&other.symbol).cloned().collect(),
            zeroth: self.zeroth.plus(&other.zeroth),
        }
    }

    pub fn plus_algebraic(&self, op: &AlgebraicOp) -> Self {
        Self { symbol: self.symbol.clone(), zeroth: self.zeroth.plus(op) }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { symbol: self.symbol.iter().map(|(s, m)| (*s, m.scale(c))).collect(), zeroth: self.zeroth.scale(c) }
    }

    /// `m ∘ self`.
    pub fn after(&self, m: &AlgebraicOp) -> Self {
        Self { symbol: self.symbol.iter().map(|(s, a)| (*s, m.compose(a))).collect(), zeroth: m.compose(&self.zeroth) }
    }

    /// The conjugate operator `φ ↦ conj(P conj(φ))`.
    pub fn conj(&self, n: usize) -> Self {
        let bar = |s: usize| if s < n { s + n } else { s - n };
        Self { symbol: self.symbol.iter().map(|(s, m)| (bar(*s), m.conj(n))).collect(), zeroth: self.zeroth.conj(n) }
    }
}

/// Names of the scalar operators reachable through [`FormContext::apply`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorName {
    L,
    Lambda,
    Del,
    DelBar,
    Nabla1(usize),
    Nabla2(usize),
    D1,
    D2,
    Delta1Zero,
    Delta2Zero,
    Delta1,
    Delta2,
    DelStar,
    DelBarStar,
    A,
    B,
    C,
    ABarStar,
    BBarStar,
    CBarStar,
    Tau,
    TauBar,
    TauStar,
    TauBarStar,
}

impl OperatorName {
    pub fn parse(s: &str) -> Option<Self> {
        use OperatorName::*;
        Some(match s {
            "L" => L,
            "Lambda" => Lambda,
            "del" => Del,
            "delbar" => DelBar,
            "D1" => D1,
            "D2" => D2,
            "delta1_0" => Delta1Zero,
            "delta2_0" => Delta2Zero,
            "delta1" => Delta1,
            "delta2" => Delta2,
            "del_star" => DelStar,
            "delbar_star" => DelBarStar,
            "A" => A,
            "B" => B,
            "C" => C,
            "Abar_star" => ABarStar,
            "Bbar_star" => BBarStar,
            "Cbar_star" => CBarStar,
            "tau" => Tau,
            "taubar" => TauBar,
            "tau_star" => TauStar,
            "taubar_star" => TauBarStar,
            _ => return None,
        })
    }
}

/// Metric data and operator constructors at one base point.
#[derive(Clone, Debug)]
pub struct FormContext {
    pub mj: MetricJet,
    pub lc: ChristoffelTable,
}

impl FormContext {
    pub fn new(mj: &MetricJet) -> Result<Self> {
        if mj.order < 1 {
            return Err(Error::OrderExhausted("form operators need a metric jet of order 1".into()));
        }
        Ok(Self { mj: mj.clone(), lc: connection::levi_civita(mj)? })
    }

    pub fn n(&self) -> usize {
        self.mj.n()
    }

    fn one(&self) -> Jet {
        Jet::constant(self.n(), self.mj.order, ONE)
    }

    fn unit(&self, slot: usize) -> Vec<(usize, Jet)> {
        vec![(slot, self.one())]
    }

    fn gamma(&self, a: usize, b: usize, c: usize) -> &Jet {
        self.lc.get(a, b, c)
    }

    /// `η_ℓ = Σ_j Γ_{ℓ j̄}^{j̄}` as jets.
    pub fn eta(&self) -> Vec<Jet> {
        crate::structure::torsion_form_jets(&self.lc)
    }

    /// `L = 2ω ∧ = √−1 h_{i j̄} dz^i ∧ dz̄^j ∧`.
    pub fn l(&self) -> AlgebraicOp {
        let n = self.n();
        let mut op = AlgebraicOp::zero();
        for i in 0..n {
            let row = (0..n).map(|j| (n + j, self.mj.h.get(i, j).clone())).collect();
            op = op.plus(&AlgebraicOp::word(I, vec![Factor::Wedge(self.unit(i)), Factor::Wedge(row)]));
        }
        op
    }

    /// `Λ = √−1 h^{i j̄} I_i I_{j̄}`.
    pub fn lambda(&self) -> AlgebraicOp {
        let n = self.n();
        let mut op = AlgebraicOp::zero();
        for i in 0..n {
            let v = (0..n).map(|j| (n + j, self.mj.hinv.get(i, j).clone())).collect();
            op = op.plus(&AlgebraicOp::word(I, vec![Factor::Contract(self.unit(i)), Factor::Contract(v)]));
        }
        op
    }

    /// `2∂ω` as a form.
    pub fn two_del_omega(&self) -> Result<FormJet> {
        Ok(self.del().apply(&FormJet::kahler_form(&self.mj))?.scale(ONE * 2.0))
    }

    /// `(2∂ω) ∧ = √−1 ∂_k h_{i j̄} dz^k ∧ dz^i ∧ dz̄^j ∧`.
    pub fn two_del_omega_wedge(&self) -> Result<AlgebraicOp> {
        let n = self.n();
        let mut op = AlgebraicOp::zero();
        for k in 0..n {
            for i in 0..n {
                if i == k {
                    continue;
                }
                let row = (0..n).map(|j| Ok((n + j, self.mj.h.get(i, j).dz(k)?))).collect::<Result<_>>()?;
                op = op.plus(&AlgebraicOp::word(
                    I,
                    vec![Factor::Wedge(self.unit(k)), Factor::Wedge(self.unit(i)), Factor::Wedge(row)],
                ));
            }
        }
        Ok(op)
    }

    /// `τ = [Λ, 2∂ω]`.
    pub fn tau(&self) -> Result<AlgebraicOp> {
        Ok(self.lambda().commutator(&self.two_del_omega_wedge()?))
    }

    /// `A = −h^{k ℓ̄} h_{i m̄} Γ_{s ℓ̄}^{m̄} dz^s ∧ dz^i I_k`.
    pub fn a(&self) -> AlgebraicOp {
        let n = self.n();
        let mut op = AlgebraicOp::zero();
        for s in 0..n {
            for k in 0..n {
                let row = (0..n)
                    .map(|i| {
                        let mut acc = Jet::zero(n, self.mj.order - 1);
                        for l in 0..n {
                            for m in 0..n {
                                acc += &(&(self.mj.hinv.get(k, l) * self.mj.h.get(i, m)) * self.gamma(s, n + l, n + m));
                            }
                        }
                        (i, acc)
                    })
                    .collect();
                op = op.plus(&AlgebraicOp::word(
                    -ONE,
                    vec![Factor::Wedge(self.unit(s)), Factor::Wedge(row), Factor::Contract(self.unit(k))],
                ));
            }
        }
        op
    }

    /// `B = −2 Γ_{i j̄}^{ℓ̄} dz^i ∧ dz̄^j ∧ I_{ℓ̄}`.
    pub fn b(&self) -> AlgebraicOp {
        let n = self.n();
        let mut op = AlgebraicOp::zero();
        for i in 0..n {
            for l in 0..n {
                let row = (0..n).map(|j| (n + j, self.gamma(i, n + j, n + l).clone())).collect();
                op = op.plus(&AlgebraicOp::word(
                    ONE * -2.0,
                    vec![Factor::Wedge(self.unit(i)), Factor::Wedge(row), Factor::Contract(self.unit(n + l))],
                ));
            }
        }
        op
    }

    /// `C = 2η_j dz^j ∧`.
    pub fn c(&self) -> AlgebraicOp {
        let theta = self.eta().into_iter().enumerate().map(|(j, e)| (j, e.scale_real(2.0))).collect();
        AlgebraicOp::wedge(theta)
    }

    pub fn star(&self, op: &AlgebraicOp) -> AlgebraicOp {
        op.adjoint(&self.mj)
    }

    pub fn bar(&self, op: &AlgebraicOp) -> AlgebraicOp {
        op.conj(self.n())
    }

    /// `conj(T)*`.
    pub fn bar_star(&self, op: &AlgebraicOp) -> AlgebraicOp {
        self.star(&self.bar(op))
    }

    /// `∂ = Σ dz^i ∧ ∂_i`.
    pub fn del(&self) -> FirstOrderOp {
        FirstOrderOp { symbol: (0..self.n()).map(|i| (i, AlgebraicOp::wedge(self.unit(i)))).collect(), zeroth: AlgebraicOp::zero() }
    }

    /// `∂̄ = Σ dz̄^j ∧ ∂_{j̄}`.
    pub fn delbar(&self) -> FirstOrderOp {
        self.del().conj(self.n())
    }

    /// Zeroth-order part of the bidegree-preserving Levi-Civita derivative
    /// along slot `a`: `dz^k ↦ −Γ_{a m}^k dz^m`, `dz̄^l ↦ −Γ_{a m̄}^{l̄} dz̄^m`.
    fn connection_part(&self, a: usize) -> AlgebraicOp {
        let n = self.n();
        let mut op = AlgebraicOp::zero();
        for k in 0..n {
            let holo = (0..n).map(|m| (m, -self.gamma(a, m, k))).collect();
            let anti = (0..n).map(|m| (n + m, -self.gamma(a, n + m, n + k))).collect();
            op = op.plus(&AlgebraicOp::word(ONE, vec![Factor::Wedge(holo), Factor::Contract(self.unit(k))]));
            op = op.plus(&AlgebraicOp::word(ONE, vec![Factor::Wedge(anti), Factor::Contract(self.unit(n + k))]));
        }
        op
    }

    fn covariant(&self, a: usize) -> FirstOrderOp {
        FirstOrderOp { symbol: vec![(a, AlgebraicOp::word(ONE, vec![]))], zeroth: self.connection_part(a) }
    }

    /// `∇'_i`.
    pub fn nabla1(&self, i: usize) -> FirstOrderOp {
        self.covariant(i)
    }

    /// `∇''_{j̄}`.
    pub fn nabla2(&self, j: usize) -> FirstOrderOp {
        self.covariant(self.n() + j)
    }

    /// `D' = dz^i ∧ ∇'_i`.
    pub fn d1(&self) -> FirstOrderOp {
        (0..self.n()).fold(FirstOrderOp::default(), |acc, i| acc.plus(&self.nabla1(i).after(&AlgebraicOp::wedge(self.unit(i)))))
    }

    /// `D'' = dz̄^j ∧ ∇''_{j̄}`.
    pub fn d2(&self) -> FirstOrderOp {
        let n = self.n();
        (0..n).fold(FirstOrderOp::default(), |acc, j| acc.plus(&self.nabla2(j).after(&AlgebraicOp::wedge(self.unit(n + j)))))
    }

    /// `δ'_0 = −h^{i j̄} I_i ∇''_{j̄}`.
    pub fn delta1_zero(&self) -> FirstOrderOp {
        let n = self.n();
        (0..n).fold(FirstOrderOp::default(), |acc, j| {
            let v = (0..n).map(|i| (i, -self.mj.hinv.get(i, j))).collect();
            acc.plus(&self.nabla2(j).after(&AlgebraicOp::word(ONE, vec![Factor::Contract(v)])))
        })
    }

    /// `δ''_0 = −h^{j ī} I_{ī} ∇'_j`.
    pub fn delta2_zero(&self) -> FirstOrderOp {
        let n = self.n();
        (0..n).fold(FirstOrderOp::default(), |acc, j| {
            let v = (0..n).map(|i| (n + i, -self.mj.hinv.get(j, i))).collect();
            acc.plus(&self.nabla1(j).after(&AlgebraicOp::word(ONE, vec![Factor::Contract(v)])))
        })
    }

    /// `δ' = δ'_0 − C*/2`.
    pub fn delta1(&self) -> FirstOrderOp {
        self.delta1_zero().plus_algebraic(&self.star(&self.c()).scale_real(-0.5))
    }

    /// `δ'' = δ''_0 − C̄*/2`.
    pub fn delta2(&self) -> FirstOrderOp {
        self.delta2_zero().plus_algebraic(&self.bar_star(&self.c()).scale_real(-0.5))
    }

    /// `∂* = δ'_0 − (B* + C*)/2`.
    pub fn del_star(&self) -> FirstOrderOp {
        self.delta1_zero().plus_algebraic(&self.star(&self.b().plus(&self.c())).scale_real(-0.5))
    }

    /// `∂̄* = δ''_0 − (B̄* + C̄*)/2`.
    pub fn delbar_star(&self) -> FirstOrderOp {
        self.delta2_zero().plus_algebraic(&self.bar_star(&self.b().plus(&self.c())).scale_real(-0.5))
    }

    /// Formal adjoint of `p` with respect to `∫⟨·,·⟩ ω^n/n!`, applied to `psi`:
    /// `−G⁻¹ μ⁻¹ Σ_A ∂_Ā(μ G M_A* ψ) + M_0* ψ` with `μ = det h` and `G` the Gram matrix.
    pub fn formal_adjoint_apply(&self, p: &FirstOrderOp, psi: &FormJet) -> Result<FormJet> {
        let n = self.n();
        let mu = self.mj.h.determinant()?;
        let mu_inv = mu.try_inverse()?;
        let mut out = self.star(&p.zeroth).apply(psi);
        for (s, m) in &p.symbol {
            let chi = self.star(m).apply(psi);
            let weighted = self.gram_apply(&chi, false)?.map(|j| if j.is_zero() { j.clone() } else { &mu * j });
            let bar = if *s < n { s + n } else { s - n };
            let d = weighted.d_coeff(bar)?.map(|j| if j.is_zero() { j.clone() } else { &mu_inv * j });
            out = &out - &self.gram_apply(&d, true)?;
        }
        Ok(out)
    }

    fn gram_apply(&self, phi: &FormJet, inverse: bool) -> Result<FormJet> {
        let n = self.n();
        let mut out = FormJet::zero(n, phi.rank(), phi.order().min(self.mj.order));
        for p in 0..=n {
            for q in 0..=n {
                let masks = masks_of_bidegree(n, p, q);
                if masks.iter().all(|&m| (0..phi.rank()).all(|a| phi.get(m, a).is_zero())) {
                    continue;
                }
                let mut g: JetMatrix = gram_jets(&self.mj, &masks);
                if inverse {
                    g = g.inverse()?;
                }
                for a in 0..phi.rank() {
                    for (c, &mc) in masks.iter().enumerate() {
                        for (b, &mb) in masks.iter().enumerate() {
                            let x = phi.get(mb, a);
                            if !x.is_zero() {
                                out.add_to(mc, a, &(g.get(c, b) * x));
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Applies a named operator.
    pub fn apply(&self, name: OperatorName, phi: &FormJet) -> Result<FormJet> {
        use OperatorName::*;
        let alg = |op: AlgebraicOp| Ok(op.apply(phi));
        match name {
            L => alg(self.l()),
            Lambda => alg(self.lambda()),
            Del => self.del().apply(phi),
            DelBar => self.delbar().apply(phi),
            Nabla1(i) => self.nabla1(i).apply(phi),
            Nabla2(j) => self.nabla2(j).apply(phi),
            D1 => self.d1().apply(phi),
            D2 => self.d2().apply(phi),
            Delta1Zero => self.delta1_zero().apply(phi),
            Delta2Zero => self.delta2_zero().apply(phi),
            Delta1 => self.delta1().apply(phi),
            Delta2 => self.delta2().apply(phi),
            DelStar => self.del_star().apply(phi),
            DelBarStar => self.delbar_star().apply(phi),
            A => alg(self.a()),
            B => alg(self.b()),
            C => alg(self.c()),
            ABarStar => alg(self.bar_star(&self.a())),
            BBarStar => alg(self.bar_star(&self.b())),
            CBarStar => alg(self.bar_star(&self.c())),
            Tau => alg(self.tau()?),
            TauBar => alg(self.bar(&self.tau()?)),
            TauStar => alg(self.star(&self.tau()?)),
            TauBarStar => alg(self.bar_star(&self.tau()?)),
        }
    }
}
