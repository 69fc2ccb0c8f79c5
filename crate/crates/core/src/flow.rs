//! The curvature flow `∂h/∂t = −Θ⁽²⁾ + μh` on periodic grids over the torus
//! `[0,1)^{2n}`, and its exact reduction on the Hopf family.
//!
//! Grid sites are indexed by `Σ_a idx_a N^a` over the real axes
//! `x_0..x_{n−1} = Re z`, `x_n..x_{2n−1} = Im z`; site `idx` sits at `x = idx/N`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::metric::{complex_coords, min_eigenvalue, FourierTerm, MetricField};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Smallest supported points per axis.
pub const MIN_GRID: usize = 8;

const FIRST: [(isize, f64); 4] = [(-2, 1.0 / 12.0), (-1, -2.0 / 3.0), (1, 2.0 / 3.0), (2, -1.0 / 12.0)];
const SECOND: [(isize, f64); 5] = [(-2, -1.0 / 12.0), (-1, 4.0 / 3.0), (0, -2.5), (1, 4.0 / 3.0), (2, -1.0 / 12.0)];

/// Fourth-order central differences of `h` in the real coordinates at one point.
#[derive(Debug, Clone)]
pub struct LocalDerivatives {
    n: usize,
    pub h: DMatrix<Complex64>,
    /// `∂h/∂x_a`.
    pub d: Vec<DMatrix<Complex64>>,
    /// `∂²h/∂x_a∂x_b` at `a * 2n + b`; empty when only first derivatives were taken.
    pub dd: Vec<DMatrix<Complex64>>,
}

impl LocalDerivatives {
    /// `sample(offset, w, acc)` must add `w · h(x₀ + offset·dx)` to `acc`.
    pub fn new(n: usize, dx: f64, second: bool, sample: impl Fn(&[isize], f64, &mut DMatrix<Complex64>)) -> Self {
        let axes = 2 * n;
        let mut off = vec![0isize; axes];
        let mut h = DMatrix::zeros(n, n);
        sample(&off, 1.0, &mut h);
        let mut d = Vec::with_capacity(axes);
        for a in 0..axes {
            let mut acc = DMatrix::zeros(n, n);
            for (o, w) in FIRST {
                off[a] = o;
                sample(&off, w / dx, &mut acc);
            }
            off[a] = 0;
            d.push(acc);
        }
        let mut dd = Vec::new();
        if second {
            dd = vec![DMatrix::zeros(n, n); axes * axes];
            let dx2 = dx * dx;
            for a in 0..axes {
                let mut acc = DMatrix::zeros(n, n);
                for (o, w) in SECOND {
                    off[a] = o;
                    sample(&off, w / dx2, &mut acc);
                }
                off[a] = 0;
                dd[a * axes + a] = acc;
                for b in a + 1..axes {
                    let mut acc = DMatrix::zeros(n, n);
                    for (o, w) in FIRST {
                        for (p, v) in FIRST {
                            off[a] = o;
                            off[b] = p;
                            sample(&off, w * v / dx2, &mut acc);
                        }
                    }
                    off[a] = 0;
                    off[b] = 0;
                    dd[b * axes + a] = acc.clone();
                    dd[a * axes + b] = acc;
                }
            }
        }
        Self { n, h, d, dd }
    }

    /// `∂h/∂z^i`.
    pub fn dz(&self, i: usize) -> DMatrix<Complex64> {
        (&self.d[i] - &self.d[self.n + i] * I) * Complex64::new(0.5, 0.0)
    }

    /// `∂h/∂z̄^j`.
    pub fn dzbar(&self, j: usize) -> DMatrix<Complex64> {
        (&self.d[j] + &self.d[self.n + j] * I) * Complex64::new(0.5, 0.0)
    }

    /// `∂²h/∂z^i∂z̄^j`.
    pub fn dz_dzbar(&self, i: usize, j: usize) -> DMatrix<Complex64> {
        let (n, axes) = (self.n, 2 * self.n);
        let at = |a: usize, b: usize| &self.dd[a * axes + b];
        (at(i, j) + at(n + i, n + j) + (at(i, n + j) - at(n + i, j)) * I) * Complex64::new(0.25, 0.0)
    }

    /// `Θ⁽²⁾_{k l̄} = −h^{i j̄}∂_i∂_j̄h_{k l̄} + h^{i j̄}h^{p q̄}∂_ih_{k q̄}∂_j̄h_{p l̄}`, symmetrized.
    pub fn theta2(&self) -> Result<DMatrix<Complex64>> {
        let n = self.n;
        let hinv_t = self.h.clone().try_inverse().ok_or_else(|| Error::Domain("singular metric at a grid site".into()))?;
        let hinv = hinv_t.transpose();
        let dz: Vec<_> = (0..n).map(|i| self.dz(i)).collect();
        let dzb: Vec<_> = (0..n).map(|j| self.dzbar(j)).collect();
        let mut out = DMatrix::zeros(n, n);
        for i in 0..n {
            let left = &dz[i] * &hinv_t;
            for j in 0..n {
                let w = hinv[(i, j)];
                out -= self.dz_dzbar(i, j) * w;
                out += &left * &dzb[j] * w;
            }
        }
        Ok((&out + out.adjoint()) * Complex64::new(0.5, 0.0))
    }

    /// `max |∂h_{i j̄}/∂z^k − ∂h_{k j̄}/∂z^i|`.
    pub fn kahler_defect(&self) -> f64 {
        let n = self.n;
        let dz: Vec<_> = (0..n).map(|i| self.dz(i)).collect();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    worst = worst.max((dz[k][(i, j)] - dz[i][(k, j)]).norm());
                }
            }
        }
        worst
    }
}

/// `Θ⁽²⁾` by finite differences of a metric field around `z`, with spacing `dx`
/// in every real coordinate.
pub fn theta2_sampled(field: &MetricField, z: &[Complex64], dx: f64) -> Result<DMatrix<Complex64>> {
    let n = field.n();
    let x0: Vec<f64> = z.iter().map(|w| w.re).chain(z.iter().map(|w| w.im)).collect();
    let fail = std::cell::Cell::new(None);
    let der = LocalDerivatives::new(n, dx, true, |off, w, acc| {
        let x: Vec<f64> = x0.iter().zip(off).map(|(x, o)| x + *o as f64 * dx).collect();
        match field.evaluate(&complex_coords(&x)) {
            Ok(h) => *acc += h * Complex64::new(w, 0.0),
            Err(e) => fail.set(Some(e)),
        }
    });
    if let Some(e) = fail.into_inner() {
        return Err(e);
    }
    der.theta2()
}

#[derive(Debug, Clone, Copy)]
pub struct FlowConfig {
    /// Fixed time step; `None` uses `0.1·Δx²·min eig(h)` from the initial grid.
    pub dt: Option<f64>,
    /// Steps between diagnostic snapshots.
    pub cadence: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self { dt: None, cadence: 1 }
    }
}

/// Per-site metrics on an `N^{2n}` lattice.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub n: usize,
    pub grid: usize,
    /// Row-major `n×n` blocks, one per site.
    pub h: Vec<Complex64>,
    pub t: f64,
    pub mu: f64,
    pub steps: usize,
    pub config: FlowConfig,
}

impl FlowState {
    pub fn from_field(field: &MetricField, grid: usize, mu: f64, config: FlowConfig) -> Result<Self> {
        if !field.is_torus() {
            return Err(Error::Incompatible(
                "the grid flow needs a torus metric; the Hopf family is flowed through hopf_self_similar".into(),
            ));
        }
        if grid < MIN_GRID {
            return Err(Error::Precondition(format!("grid needs at least {MIN_GRID} points per axis, got {grid}")));
        }
        let n = field.n();
        let sites = grid.pow(2 * n as u32);
        let mut state = Self { n, grid, h: vec![Complex64::new(0.0, 0.0); sites * n * n], t: 0.0, mu, steps: 0, config };
        let blocks = (0..sites)
            .into_par_iter()
            .map(|s| field.evaluate(&complex_coords(&state.site_coords(s))))
            .collect::<Result<Vec<_>>>()?;
        for (s, b) in blocks.iter().enumerate() {
            state.set_site(s, b);
        }
        Ok(state)
    }

    pub fn sites(&self) -> usize {
        self.grid.pow(2 * self.n as u32)
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.grid as f64
    }

    /// Real coordinates of a site.
    pub fn site_coords(&self, site: usize) -> Vec<f64> {
        let mut s = site;
        (0..2 * self.n)
            .map(|_| {
                let i = s % self.grid;
                s /= self.grid;
                i as f64 / self.grid as f64
            })
            .collect()
    }

    pub fn metric_at(&self, site: usize) -> DMatrix<Complex64> {
        let n2 = self.n * self.n;
        DMatrix::from_row_slice(self.n, self.n, &self.h[site * n2..(site + 1) * n2])
    }

    fn set_site(&mut self, site: usize, m: &DMatrix<Complex64>) {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                self.h[site * n * n + i * n + j] = m[(i, j)];
            }
        }
    }

    fn neighbor(&self, site: usize, offset: &[isize]) -> usize {
        let g = self.grid as isize;
        let (mut out, mut rest, mut stride) = (0isize, site as isize, 1isize);
        for o in offset {
            let i = rest % g;
            rest /= g;
            out += (i + o).rem_euclid(g) * stride;
            stride *= g;
        }
        out as usize
    }

    fn derivatives(&self, h: &[Complex64], site: usize, second: bool) -> LocalDerivatives {
        let n = self.n;
        let n2 = n * n;
        LocalDerivatives::new(n, self.dx(), second, |off, w, acc| {
            let s = self.neighbor(site, off);
            let block = &h[s * n2..(s + 1) * n2];
            for i in 0..n {
                for j in 0..n {
                    acc[(i, j)] += block[i * n + j] * w;
                }
            }
        })
    }

    pub fn min_eigenvalue(&self) -> f64 {
        (0..self.sites()).into_par_iter().map(|s| min_eigenvalue(&self.metric_at(s))).reduce(|| f64::INFINITY, f64::min)
    }

    /// `0.1·Δx²·min eig(h)`.
    pub fn default_dt(&self) -> f64 {
        0.1 * self.dx() * self.dx() * self.min_eigenvalue()
    }

    fn rhs(&self, h: &[Complex64]) -> Result<Vec<Complex64>> {
        let n2 = self.n * self.n;
        let blocks = (0..self.sites())
            .into_par_iter()
            .map(|s| {
                let der = self.derivatives(h, s, true);
                Ok(der.h.clone() * Complex64::new(self.mu, 0.0) - der.theta2()?)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut out = Vec::with_capacity(h.len());
        for b in blocks {
            out.extend(b.transpose().iter().copied());
        }
        debug_assert_eq!(out.len(), self.sites() * n2);
        Ok(out)
    }
}

/// `Θ⁽²⁾` at a site of the grid.
pub fn theta2_discrete(state: &FlowState, site: usize) -> Result<DMatrix<Complex64>> {
    if state.grid < MIN_GRID {
        return Err(Error::Precondition(format!("grid needs at least {MIN_GRID} points per axis")));
    }
    state.derivatives(&state.h, site, true).theta2()
}

fn axpy(y: &[Complex64], a: f64, x: &[Complex64]) -> Vec<Complex64> {
    y.iter().zip(x).map(|(y, x)| y + x * a).collect()
}

fn halt(state: &FlowState, reason: String) -> Error {
    Error::FlowHalt { t: state.t, step: state.steps, reason }
}

/// One classical Runge–Kutta step of size `dt`, followed by Hermitian symmetrization.
pub fn step_with(state: &FlowState, dt: f64) -> Result<FlowState> {
    let h0 = &state.h;
    let k1 = state.rhs(h0)?;
    let k2 = state.rhs(&axpy(h0, dt / 2.0, &k1))?;
    let k3 = state.rhs(&axpy(h0, dt / 2.0, &k2))?;
    let k4 = state.rhs(&axpy(h0, dt, &k3))?;
    let mut next = state.clone();
    for (idx, v) in next.h.iter_mut().enumerate() {
        *v += (k1[idx] + (k2[idx] + k3[idx]) * 2.0 + k4[idx]) * (dt / 6.0);
    }
    next.t += dt;
    next.steps += 1;
    for s in 0..next.sites() {
        let m = next.metric_at(s);
        if m.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(halt(&next, format!("non-finite metric at site {s} (x = {:?})", next.site_coords(s))));
        }
        let m = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        let lam = min_eigenvalue(&m);
        if lam <= 0.0 {
            return Err(halt(&next, format!("lost positivity at site {s} (x = {:?}, min eigenvalue {lam:e})", next.site_coords(s))));
        }
        next.set_site(s, &m);
    }
    Ok(next)
}

pub fn step(state: &FlowState) -> Result<FlowState> {
    let dt = state.config.dt.unwrap_or_else(|| state.default_dt());
    step_with(state, dt)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    /// Kähler defect from spectral first derivatives.
    pub kahler_defect: f64,
    /// The same from the fourth-order stencil, which carries its own O(Δx⁴) error.
    pub kahler_defect_stencil: f64,
    pub min_eig: f64,
    pub max_eig: f64,
    /// `max ‖Θ⁽²⁾ − μh‖∞` over sites.
    pub einstein_residual: f64,
    pub wall_seconds: f64,
}

pub fn diagnostics(state: &FlowState) -> Result<Snapshot> {
    let rows = (0..state.sites())
        .into_par_iter()
        .map(|s| {
            let der = state.derivatives(&state.h, s, true);
            let theta = der.theta2()?;
            let resid = (&theta - &der.h * Complex64::new(state.mu, 0.0)).camax();
            let eig = der.h.clone().symmetric_eigenvalues();
            Ok((der.kahler_defect(), eig.min(), eig.max(), resid))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut snap = Snapshot {
        step: state.steps,
        t: state.t,
        kahler_defect: spectral_kahler_defect(state),
        kahler_defect_stencil: 0.0,
        min_eig: f64::INFINITY,
        max_eig: f64::NEG_INFINITY,
        einstein_residual: 0.0,
        wall_seconds: 0.0,
    };
    for (k, lo, hi, r) in rows {
        snap.kahler_defect_stencil = snap.kahler_defect_stencil.max(k);
        snap.min_eig = snap.min_eig.min(lo);
        snap.max_eig = snap.max_eig.max(hi);
        snap.einstein_residual = snap.einstein_residual.max(r);
    }
    Ok(snap)
}

#[derive(Debug, Clone)]
pub struct FlowRun {
    pub snapshots: Vec<Snapshot>,
    pub final_state: FlowState,
    pub dt: f64,
}

/// Runs the flow to time `horizon`, recording diagnostics every `cadence`
/// steps and at the end; `observe` sees each snapshot as it is taken.
pub fn run_observed(
    initial: &MetricField,
    mu: f64,
    horizon: f64,
    grid: usize,
    config: FlowConfig,
    mut observe: impl FnMut(&Snapshot),
) -> Result<FlowRun> {
    let start = Instant::now();
    let mut state = FlowState::from_field(initial, grid, mu, config)?;
    let dt = config.dt.unwrap_or_else(|| state.default_dt());
    if !(dt > 0.0) || !horizon.is_finite() || horizon < 0.0 {
        return Err(Error::Precondition(format!("need dt > 0 and a finite horizon ≥ 0 (dt = {dt}, T = {horizon})")));
    }
    let cadence = config.cadence.max(1);
    let mut snapshots = Vec::new();
    let mut record = |state: &FlowState, snapshots: &mut Vec<Snapshot>| -> Result<()> {
        let mut s = diagnostics(state)?;
        s.wall_seconds = start.elapsed().as_secs_f64();
        observe(&s);
        snapshots.push(s);
        Ok(())
    };
    record(&state, &mut snapshots)?;
    let eps = 1e-12 * horizon.max(1.0);
    while state.t < horizon - eps {
        let h = dt.min(horizon - state.t);
        state = step_with(&state, h)?;
        if state.steps % cadence == 0 || state.t >= horizon - eps {
            record(&state, &mut snapshots)?;
        }
    }
    Ok(FlowRun { snapshots, final_state: state, dt })
}

pub fn run(initial: &MetricField, mu: f64, horizon: f64, grid: usize, config: FlowConfig) -> Result<FlowRun> {
    run_observed(initial, mu, horizon, grid, config, |_| {})
}

pub const DIAGNOSTICS_HEADER: &str = "step,t,kahler_defect,kahler_defect_stencil,min_eig,max_eig,einstein_residual,wall_seconds";

pub fn diagnostics_row(s: &Snapshot) -> String {
    format!(
        "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.6}",
        s.step, s.t, s.kahler_defect, s.kahler_defect_stencil, s.min_eig, s.max_eig, s.einstein_residual, s.wall_seconds
    )
}

pub fn diagnostics_csv(snapshots: &[Snapshot]) -> String {
    let mut out = format!("{DIAGNOSTICS_HEADER}\n");
    for s in snapshots {
        out.push_str(&diagnostics_row(s));
        out.push('\n');
    }
    out
}

/// Text dump of every site's metric: `#` header lines with the dimensions,
/// then `site_index,i,j,re,im` rows.
pub fn grid_csv(state: &FlowState) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# hermitia grid dump");
    let _ = writeln!(out, "# n {}", state.n);
    let _ = writeln!(out, "# N {}", state.grid);
    let _ = writeln!(out, "# t {:.17e}", state.t);
    let _ = writeln!(out, "# mu {:.17e}", state.mu);
    let _ = writeln!(out, "# site_index = sum_a idx_a N^a over axes (Re z_1..Re z_n, Im z_1..Im z_n), x_a = idx_a / N");
    out.push_str("site_index,i,j,re,im\n");
    let n = state.n;
    for s in 0..state.sites() {
        for i in 0..n {
            for j in 0..n {
                let v = state.h[s * n * n + i * n + j];
                let _ = writeln!(out, "{s},{i},{j},{:.17e},{:.17e}", v.re, v.im);
            }
        }
    }
    out
}

/// Reads a dump written by [`grid_csv`].
pub fn parse_grid_csv(text: &str) -> Result<FlowState> {
    let (mut n, mut grid, mut t, mut mu) = (None, None, 0.0, 0.0);
    let mut rows = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let err = |msg: String| Error::Parse { line: k + 1, msg };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let mut w = rest.split_whitespace();
            match (w.next(), w.next()) {
                (Some("n"), Some(v)) => n = Some(v.parse::<usize>().map_err(|_| err(format!("bad n {v:?}")))?),
                (Some("N"), Some(v)) => grid = Some(v.parse::<usize>().map_err(|_| err(format!("bad N {v:?}")))?),
                (Some("t"), Some(v)) => t = v.parse().map_err(|_| err(format!("bad t {v:?}")))?,
                (Some("mu"), Some(v)) => mu = v.parse().map_err(|_| err(format!("bad mu {v:?}")))?,
                _ => {}
            }
            continue;
        }
        if line.starts_with("site_index") {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(err(format!("expected 5 fields, got {}", f.len())));
        }
        let int = |s: &str| s.trim().parse::<usize>().map_err(|_| err(format!("bad index {s:?}")));
        let real = |s: &str| s.trim().parse::<f64>().map_err(|_| err(format!("bad real {s:?}")));
        rows.push((k + 1, int(f[0])?, int(f[1])?, int(f[2])?, Complex64::new(real(f[3])?, real(f[4])?)));
    }
    let n = n.ok_or_else(|| Error::Parse { line: 0, msg: "missing '# n' header".into() })?;
    let grid = grid.ok_or_else(|| Error::Parse { line: 0, msg: "missing '# N' header".into() })?;
    let sites = grid.pow(2 * n as u32);
    let mut h = vec![Complex64::new(0.0, 0.0); sites * n * n];
    let mut seen = vec![false; h.len()];
    for (line, s, i, j, v) in rows {
        if s >= sites || i >= n || j >= n {
            return Err(Error::Parse { line, msg: format!("index ({s},{i},{j}) out of range") });
        }
        let idx = s * n * n + i * n + j;
        h[idx] = v;
        seen[idx] = true;
    }
    if let Some(missing) = seen.iter().position(|b| !b) {
        return Err(Error::Parse { line: 0, msg: format!("no value for entry {missing}") });
    }
    Ok(FlowState { n, grid, h, t, mu, steps: 0, config: FlowConfig::default() })
}

fn transform(data: &mut [Complex64], g: usize, axes: usize, fft: &dyn Fft<f64>) {
    let sites = data.len();
    let mut line = vec![Complex64::new(0.0, 0.0); g];
    for a in 0..axes {
        let stride = g.pow(a as u32);
        for base in 0..sites {
            if (base / stride) % g != 0 {
                continue;
            }
            for (k, v) in line.iter_mut().enumerate() {
                *v = data[base + k * stride];
            }
            fft.process(&mut line);
            for (k, v) in line.iter().enumerate() {
                data[base + k * stride] = *v;
            }
        }
    }
}

/// Unnormalized forward transform of each matrix entry, indexed `i * n + j`.
fn entry_spectra(state: &FlowState) -> Vec<Vec<Complex64>> {
    let (n, g) = (state.n, state.grid);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(g);
    (0..n * n)
        .map(|e| {
            let mut data: Vec<Complex64> = (0..state.sites()).map(|s| state.h[s * n * n + e]).collect();
            transform(&mut data, g, 2 * n, fft.as_ref());
            data
        })
        .collect()
}

/// Signed frequency of index `k` on an axis of `g` points; the Nyquist index maps to 0.
fn signed_freq(k: usize, g: usize) -> f64 {
    if 2 * k == g {
        0.0
    } else if 2 * k > g {
        k as f64 - g as f64
    } else {
        k as f64
    }
}

/// `max |∂h_{i j̄}/∂z^k − ∂h_{k j̄}/∂z^i|` with first derivatives taken
/// spectrally, exact for trigonometric polynomials resolved by the grid.
pub fn spectral_kahler_defect(state: &FlowState) -> f64 {
    let (n, g) = (state.n, state.grid);
    let axes = 2 * n;
    let sites = state.sites();
    let spectra = entry_spectra(state);
    let inverse = FftPlanner::<f64>::new().plan_fft_inverse(g);
    let two_pi_i = Complex64::new(0.0, 2.0 * std::f64::consts::PI);
    let mut d = vec![vec![Vec::new(); n * n]; axes];
    for (a, per_axis) in d.iter_mut().enumerate() {
        let stride = g.pow(a as u32);
        for (e, spectrum) in spectra.iter().enumerate() {
            let mut data: Vec<Complex64> =
                spectrum.iter().enumerate().map(|(s, v)| v * two_pi_i * signed_freq((s / stride) % g, g) / sites as f64).collect();
            transform(&mut data, g, axes, inverse.as_ref());
            per_axis[e] = data;
        }
    }
    let dz = |k: usize, e: usize, s: usize| (d[k][e][s] - I * d[n + k][e][s]) * 0.5;
    let mut worst: f64 = 0.0;
    for s in 0..sites {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    worst = worst.max((dz(k, i * n + j, s) - dz(i, k * n + j, s)).norm());
                }
            }
        }
    }
    worst
}

/// Fourier modes reproducing the grid values exactly at the sites. Modes with
/// every entry below `threshold` are dropped; Nyquist modes are split evenly
/// between `±N/2` so that conjugate pairs stay exact.
pub fn fit_fourier(state: &FlowState, threshold: f64) -> Vec<FourierTerm> {
    let (n, g) = (state.n, state.grid);
    let axes = 2 * n;
    let sites = state.sites();
    let spectra = entry_spectra(state);
    let norm = sites as f64;
    let mut modes: BTreeMap<Vec<i32>, DMatrix<Complex64>> = BTreeMap::new();
    for s in 0..sites {
        let amp = DMatrix::from_fn(n, n, |i, j| spectra[i * n + j][s] / norm);
        if amp.camax() < threshold {
            continue;
        }
        let mut freq = Vec::with_capacity(axes);
        let mut nyquist = Vec::new();
        let mut rest = s;
        for a in 0..axes {
            let k = rest % g;
            rest /= g;
            if 2 * k == g {
                nyquist.push(a);
                freq.push(k as i32);
            } else if 2 * k > g {
                freq.push(k as i32 - g as i32);
            } else {
                freq.push(k as i32);
            }
        }
        let share = amp / Complex64::new(2f64.powi(nyquist.len() as i32), 0.0);
        for signs in 0..1usize << nyquist.len() {
            let mut f = freq.clone();
            for (b, &a) in nyquist.iter().enumerate() {
                if signs >> b & 1 == 1 {
                    f[a] = -f[a];
                }
            }
            *modes.entry(f).or_insert_with(|| DMatrix::zeros(n, n)) += &share;
        }
    }
    modes.into_iter().map(|(freq, amp)| FourierTerm { freq, amp }).collect()
}

/// Value of the scale factor in `h(t) = c(t)·(4/|z|²)δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfSimilar {
    pub c: f64,
    /// Time at which `c` reaches zero, when that happens by the requested time.
    pub extinction: Option<f64>,
}

/// Exact solution of `dc/dt = μc − (n−1)/4` with `c(0) = c₀`: the flow
/// restricted to multiples of the Hopf metric, where `Θ⁽²⁾` is scale-invariant.
pub fn hopf_self_similar(n: usize, c0: f64, mu: f64, t: f64) -> Result<SelfSimilar> {
    if !(c0 > 0.0) {
        return Err(Error::Precondition(format!("initial scale must be positive, got {c0}")));
    }
    let k = (n as f64 - 1.0) / 4.0;
    let (c, zero_at) = if mu == 0.0 {
        (c0 - k * t, if k > 0.0 { Some(c0 / k) } else { None })
    } else {
        let b = k / mu;
        let c = (c0 - b) * (mu * t).exp() + b;
        let ratio = b / (b - c0);
        let zero = if c0 != b && ratio > 0.0 { Some(ratio.ln() / mu).filter(|s| *s > 0.0) } else { None };
        (c, zero)
    };
    Ok(SelfSimilar { c, extinction: zero_at.filter(|s| *s <= t) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::Kind;
    use crate::curvature::CurvatureSet;
    use crate::metric::format_torus_metric;
    use crate::metric::parse_torus_metric;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn kahler_sample() -> MetricField {
        MetricField::kahler_torus(2, &[(vec![1, 0, 0, 1], c(0.004, 0.002)), (vec![0, 1, -1, 0], c(-0.003, 0.001))]).unwrap()
    }

    #[test]
    fn flat_torus_has_zero_curvature_and_grows_exponentially() {
        let flat = MetricField::flat(1);
        let state = FlowState::from_field(&flat, 8, 0.1, FlowConfig::default()).unwrap();
        assert!(theta2_discrete(&state, 5).unwrap().camax() < 1e-14);
        let dt = 0.01;
        let next = step_with(&state, dt).unwrap();
        let want = (0.1f64 * dt).exp();
        assert!((next.metric_at(3)[(0, 0)].re - want).abs() < 1e-13);
    }

    #[test]
    fn theta2_matches_the_jet_pipeline_on_a_kahler_torus() {
        let field = kahler_sample();
        let state = FlowState::from_field(&field, 16, 0.0, FlowConfig::default()).unwrap();
        for site in [0, 77, 3001] {
            let z = complex_coords(&state.site_coords(site));
            let exact = CurvatureSet::new(&field.metric_jet(&z, 2).unwrap()).unwrap().second(Kind::Chern);
            let fd = theta2_discrete(&state, site).unwrap();
            assert!((fd - exact).camax() < 1e-3);
        }
    }

    #[test]
    fn theta2_is_scale_invariant() {
        let field = kahler_sample();
        let state = FlowState::from_field(&field, 8, 0.0, FlowConfig::default()).unwrap();
        let mut scaled = state.clone();
        scaled.h.iter_mut().for_each(|v| *v *= 3.5);
        let a = theta2_discrete(&state, 11).unwrap();
        let b = theta2_discrete(&scaled, 11).unwrap();
        assert!((a - b).camax() < 1e-12);
    }

    #[test]
    fn self_similar_closed_forms() {
        assert_eq!(hopf_self_similar(2, 1.0, 0.25, 5.0).unwrap().c, 1.0);
        assert!((hopf_self_similar(2, 1.0, 0.0, 1.0).unwrap().c - 0.75).abs() < 1e-15);
        assert_eq!(hopf_self_similar(1, 2.0, 0.0, 10.0).unwrap().c, 2.0);
        let gone = hopf_self_similar(3, 1.0, 0.0, 3.0).unwrap();
        assert_eq!(gone.extinction, Some(2.0));
        let r = hopf_self_similar(3, 1.0, 0.1, 1.0).unwrap();
        let k = 0.5;
        let rhs = 0.1 * r.c - k;
        let h = 1e-6;
        let num = (hopf_self_similar(3, 1.0, 0.1, 1.0 + h).unwrap().c - hopf_self_similar(3, 1.0, 0.1, 1.0 - h).unwrap().c) / (2.0 * h);
        assert!((num - rhs).abs() < 1e-8);
        assert!(hopf_self_similar(2, 0.0, 0.1, 1.0).is_err());
    }

    #[test]
    fn grid_dump_round_trips() {
        let field = kahler_sample();
        let state = FlowState::from_field(&field, 8, 0.3, FlowConfig::default()).unwrap();
        let back = parse_grid_csv(&grid_csv(&state)).unwrap();
        assert_eq!(back.n, 2);
        assert_eq!(back.grid, 8);
        assert_eq!(back.mu, 0.3);
        assert!(back.h.iter().zip(&state.h).all(|(a, b)| (a - b).norm() < 1e-15));
    }

    #[test]
    fn fourier_fit_reproduces_the_grid_through_the_file_format() {
        let field = kahler_sample();
        let state = FlowState::from_field(&field, 8, 0.0, FlowConfig::default()).unwrap();
        let terms = fit_fourier(&state, 1e-14);
        let text = format_torus_metric(2, &terms);
        let (n, parsed) = parse_torus_metric(&text).unwrap();
        let refit = MetricField::torus(n, parsed).unwrap();
        for s in [0, 5, 999, 4095] {
            let z = complex_coords(&state.site_coords(s));
            assert!((refit.evaluate(&z).unwrap() - state.metric_at(s)).camax() < 1e-13);
        }
        let mut odd = FlowState::from_field(&MetricField::flat(1), 8, 0.0, FlowConfig::default()).unwrap();
        for s in 0..odd.sites() {
            if s % 2 == 1 {
                odd.h[s] += 0.25;
            }
        }
        let terms = fit_fourier(&odd, 1e-14);
        let refit = MetricField::torus(1, terms).unwrap();
        for s in 0..odd.sites() {
            let z = complex_coords(&odd.site_coords(s));
            assert!((refit.evaluate(&z).unwrap()[(0, 0)] - odd.h[s]).norm() < 1e-13);
        }
    }

    #[test]
    fn halts_with_a_site_witness() {
        let flat = MetricField::flat(1);
        let mut state = FlowState::from_field(&flat, 8, 0.0, FlowConfig::default()).unwrap();
        state.h[9] = c(1e-3, 0.0);
        match step_with(&state, 1.0) {
            Err(Error::FlowHalt { reason, step, .. }) => {
                assert_eq!(step, 1);
                assert!(reason.contains("site"));
            }
            other => panic!("expected a halt, got {other:?}"),
        }
        state.h[9] = c(f64::NAN, 0.0);
        assert!(step_with(&state, 1e-4).is_err());
    }

    #[test]
    fn spectral_defect_vanishes_on_kahler_data_only() {
        let kahler = MetricField::kahler_torus(2, &[(vec![2, 1, 1, -1], c(-0.0008, -0.0004)), (vec![1, 1, 0, 0], c(0.001, 0.0015))]).unwrap();
        let state = FlowState::from_field(&kahler, 8, 0.0, FlowConfig::default()).unwrap();
        assert!(spectral_kahler_defect(&state) < 1e-13);
        let stencil = diagnostics(&state).unwrap().kahler_defect_stencil;
        assert!(stencil > 1e-5);

        let off = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.1, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let skew = MetricField::torus(
            2,
            vec![
                FourierTerm { freq: vec![0, 0, 0, 0], amp: DMatrix::identity(2, 2) },
                FourierTerm { freq: vec![1, 0, 0, 0], amp: off.clone() },
                FourierTerm { freq: vec![-1, 0, 0, 0], amp: off.adjoint() },
            ],
        )
        .unwrap();
        let state = FlowState::from_field(&skew, 8, 0.0, FlowConfig::default()).unwrap();
        let exact = std::f64::consts::PI * 0.1;
        assert!((spectral_kahler_defect(&state) - exact).abs() < 1e-12);
    }

    #[test]
    fn hopf_is_rejected_by_the_grid() {
        assert!(matches!(
            FlowState::from_field(&MetricField::hopf(2), 8, 0.0, FlowConfig::default()),
            Err(Error::Incompatible(_))
        ));
    }
}
