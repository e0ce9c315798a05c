//! Fixed-step fourth-order propagation of pure states, of the joint
//! amplitude ladder, and of Lindblad master equations.
//!
//! All propagators share the same stepping policy: the step is
//! `dt = min(dt_max, 0.05 / B)` where `B` bounds the generator norm, a grid
//! whose explicit `dt_max` exceeds `0.1 / B` is rejected outright, and
//! integration steps land exactly on every output sample and on window
//! discontinuities. Nothing is ever renormalized: norm, trace, Hermiticity,
//! and positivity are checked at each sample and reported as diagnostics, so
//! integration bugs surface as errors instead of being masked.

use nalgebra::{DMatrix, DVector};

use crate::hilbert::{DensityMatrix, Layout, Operator, PureState};
use crate::linalg;
use crate::model::{bessel_j, Hamiltonian, ModulationParams, PhaseFn, SystemParams, Term};
use crate::{C64, Error, Result};

const MINUS_I: C64 = C64::new(0.0, -1.0);

fn czero() -> C64 {
    C64::new(0.0, 0.0)
}

/// Output grid plus the integrator step cap.
#[derive(Clone, Copy, Debug)]
pub struct TimeGrid {
    t0: f64,
    t1: f64,
    n_samples: usize,
    dt_max: Option<f64>,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, n_samples: usize) -> Result<Self> {
        if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
            return Err(Error::Grid(format!("need finite t1 > t0, got [{t0}, {t1}]")));
        }
        if n_samples < 2 {
            return Err(Error::Grid("need at least two output samples".into()));
        }
        Ok(Self { t0, t1, n_samples, dt_max: None })
    }

    /// Caps the integrator step. The cap may only tighten the automatic
    /// step; a cap coarser than `0.1 / B` fails the run at start.
    pub fn with_dt_max(mut self, dt_max: f64) -> Result<Self> {
        if !(dt_max.is_finite() && dt_max > 0.0) {
            return Err(Error::Grid(format!("dt_max must be positive, got {dt_max}")));
        }
        self.dt_max = Some(dt_max);
        Ok(self)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn dt_max(&self) -> Option<f64> {
        self.dt_max
    }

    pub fn sample_times(&self) -> Vec<f64> {
        let span = self.t1 - self.t0;
        (0..self.n_samples)
            .map(|k| self.t0 + span * k as f64 / (self.n_samples - 1) as f64)
            .collect()
    }

    fn step_size(&self, norm_bound: f64) -> Result<f64> {
        let auto = if norm_bound > 0.0 { 0.05 / norm_bound } else { f64::INFINITY };
        match self.dt_max {
            Some(cap) => {
                if cap * norm_bound > 0.1 {
                    Err(Error::Grid(format!(
                        "dt_max {cap:.3e} too coarse for generator norm {norm_bound:.3e} \
                         (need dt_max * norm <= 0.1)"
                    )))
                } else {
                    Ok(auto.min(cap))
                }
            }
            None => Ok(auto),
        }
    }
}

// ---------------------------------------------------------------------------
// sparse application layer

/// Row-compressed copy of a dense operator; exact zeros are dropped, every
/// retained entry keeps its dense value, and row/column order is fixed, so
/// results are deterministic.
#[derive(Clone, Debug)]
struct SparseOp {
    dim: usize,
    rows: Vec<Vec<(usize, C64)>>,
}

impl SparseOp {
    fn from_dense(m: &DMatrix<C64>) -> Self {
        let dim = m.nrows();
        let rows = (0..dim)
            .map(|i| {
                (0..dim)
                    .filter_map(|j| {
                        let v = m[(i, j)];
                        (v.re != 0.0 || v.im != 0.0).then_some((j, v))
                    })
                    .collect()
            })
            .collect();
        Self { dim, rows }
    }

    fn adjoint(&self) -> SparseOp {
        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); self.dim];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                rows[j].push((i, v.conj()));
            }
        }
        for r in &mut rows {
            r.sort_by_key(|e| e.0);
        }
        Self { dim: self.dim, rows }
    }

    /// `out += alpha * (S x)`
    fn apply_acc(&self, alpha: C64, x: &[C64], out: &mut [C64]) {
        for (i, row) in self.rows.iter().enumerate() {
            let mut acc = czero();
            for &(j, v) in row {
                acc += v * x[j];
            }
            out[i] += alpha * acc;
        }
    }

    /// `out += alpha * (S rho)`
    fn acc_mul_left(&self, alpha: C64, rho: &DMatrix<C64>, out: &mut DMatrix<C64>) {
        let d = self.dim;
        let r = rho.as_slice();
        let o = out.as_mut_slice();
        for (i, row) in self.rows.iter().enumerate() {
            for &(k, v) in row {
                let av = alpha * v;
                let mut oi = i;
                let mut rk = k;
                for _ in 0..d {
                    o[oi] += av * r[rk];
                    oi += d;
                    rk += d;
                }
            }
        }
    }

    /// `out += alpha * (rho S)`
    fn acc_mul_right(&self, alpha: C64, rho: &DMatrix<C64>, out: &mut DMatrix<C64>) {
        let d = self.dim;
        let r = rho.as_slice();
        let o = out.as_mut_slice();
        for (k, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                let av = alpha * v;
                let oj = j * d;
                let rk = k * d;
                for i in 0..d {
                    o[oj + i] += av * r[rk + i];
                }
            }
        }
    }

    fn matmul(&self, other: &SparseOp) -> SparseOp {
        let d = self.dim;
        let mut acc = vec![czero(); d];
        let mut mark = vec![false; d];
        let mut touched: Vec<usize> = Vec::new();
        let mut rows = Vec::with_capacity(d);
        for i in 0..d {
            for &(k, a) in &self.rows[i] {
                for &(j, b) in &other.rows[k] {
                    if !mark[j] {
                        mark[j] = true;
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            touched.sort_unstable();
            let row: Vec<(usize, C64)> = touched
                .iter()
                .filter(|&&j| acc[j].re != 0.0 || acc[j].im != 0.0)
                .map(|&j| (j, acc[j]))
                .collect();
            for &j in &touched {
                acc[j] = czero();
                mark[j] = false;
            }
            touched.clear();
            rows.push(row);
        }
        SparseOp { dim: d, rows }
    }

    fn inf_norm(&self) -> f64 {
        self.rows
            .iter()
            .map(|row| row.iter().map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn one_norm(&self) -> f64 {
        let mut cols = vec![0.0_f64; self.dim];
        for row in &self.rows {
            for &(j, v) in row {
                cols[j] += v.norm();
            }
        }
        cols.into_iter().fold(0.0, f64::max)
    }
}

enum CompiledTerm {
    Static(SparseOp),
    Windowed { op: SparseOp, tau_c: f64 },
    Cosine { op: SparseOp, amp: f64, freq: f64 },
    Rotating { op: SparseOp, adj: SparseOp, phase: PhaseFn },
}

struct CompiledHamiltonian {
    dim: usize,
    terms: Vec<CompiledTerm>,
    norm_bound: f64,
    breakpoints: Vec<f64>,
}

impl CompiledHamiltonian {
    fn compile(h: &Hamiltonian) -> Self {
        let dim = h.layout().dim();
        let norm_bound = h.norm_bound();
        let breakpoints = h.breakpoints();
        let terms = h
            .terms
            .iter()
            .map(|term| match term {
                Term::Static(op) => CompiledTerm::Static(SparseOp::from_dense(op.data())),
                Term::Windowed { op, tau_c } => {
                    CompiledTerm::Windowed { op: SparseOp::from_dense(op.data()), tau_c: *tau_c }
                }
                Term::Cosine { op, amp, freq } => CompiledTerm::Cosine {
                    op: SparseOp::from_dense(op.data()),
                    amp: *amp,
                    freq: *freq,
                },
                Term::RotatingPair { op, phase } => {
                    let s = SparseOp::from_dense(op.data());
                    let adj = s.adjoint();
                    CompiledTerm::Rotating { op: s, adj, phase: *phase }
                }
            })
            .collect();
        Self { dim, terms, norm_bound, breakpoints }
    }

    /// `out += alpha * H(t) x`. Window membership is decided at `window_t`
    /// (a point interior to the current integration segment) so that steps
    /// bordering a discontinuity see a consistent generator.
    fn apply_acc(&self, t: f64, window_t: f64, alpha: C64, x: &[C64], out: &mut [C64]) {
        for term in &self.terms {
            match term {
                CompiledTerm::Static(op) => op.apply_acc(alpha, x, out),
                CompiledTerm::Windowed { op, tau_c } => {
                    if (0.0..=*tau_c).contains(&window_t) {
                        op.apply_acc(alpha, x, out);
                    }
                }
                CompiledTerm::Cosine { op, amp, freq } => {
                    op.apply_acc(alpha * (amp * (freq * t).cos()), x, out);
                }
                CompiledTerm::Rotating { op, adj, phase } => {
                    let f = phase.eval(t);
                    op.apply_acc(alpha * f, x, out);
                    adj.apply_acc(alpha * f.conj(), x, out);
                }
            }
        }
    }

    /// `out += -i [H(t), rho]`
    fn acc_commutator(&self, t: f64, window_t: f64, rho: &DMatrix<C64>, out: &mut DMatrix<C64>) {
        let plus_i = C64::new(0.0, 1.0);
        for term in &self.terms {
            match term {
                CompiledTerm::Static(op) => {
                    op.acc_mul_left(MINUS_I, rho, out);
                    op.acc_mul_right(plus_i, rho, out);
                }
                CompiledTerm::Windowed { op, tau_c } => {
                    if (0.0..=*tau_c).contains(&window_t) {
                        op.acc_mul_left(MINUS_I, rho, out);
                        op.acc_mul_right(plus_i, rho, out);
                    }
                }
                CompiledTerm::Cosine { op, amp, freq } => {
                    let c = C64::from(amp * (freq * t).cos());
                    op.acc_mul_left(MINUS_I * c, rho, out);
                    op.acc_mul_right(plus_i * c, rho, out);
                }
                CompiledTerm::Rotating { op, adj, phase } => {
                    let f = phase.eval(t);
                    op.acc_mul_left(MINUS_I * f, rho, out);
                    adj.acc_mul_left(MINUS_I * f.conj(), rho, out);
                    op.acc_mul_right(plus_i * f, rho, out);
                    adj.acc_mul_right(plus_i * f.conj(), rho, out);
                }
            }
        }
    }
}

/// Splits `[ta, tb]` at breakpoints and walks it in RK4 steps of at most
/// `dt`, invoking `step(t, h, segment_mid)` for each. Segments never
/// straddle a breakpoint, and `segment_mid` identifies the open interval a
/// step belongs to.
fn walk_interval(
    ta: f64,
    tb: f64,
    dt: f64,
    breakpoints: &[f64],
    mut step: impl FnMut(f64, f64, f64),
) {
    let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|&b| b > ta && b < tb).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.push(tb);
    let mut lo = ta;
    for hi in cuts {
        let span = hi - lo;
        if span <= 0.0 {
            continue;
        }
        let mid = lo + span / 2.0;
        let n_sub = if dt.is_finite() { (span / dt).ceil().max(1.0) as usize } else { 1 };
        let h = span / n_sub as f64;
        for k in 0..n_sub {
            step(lo + k as f64 * h, h, mid);
        }
        lo = hi;
    }
}

// ---------------------------------------------------------------------------
// pure-state propagation

/// One output sample of a Schrödinger propagation.
#[derive(Clone, Debug)]
pub struct StateSample {
    pub t: f64,
    pub state: PureState,
    /// `| ||psi|| - 1 |` at this sample.
    pub norm_err: f64,
}

/// Integrates `i d|psi>/dt = H(t)|psi>` with classical RK4 at fixed step.
///
/// The reported norm drift must stay below `1e-8` at every sample,
/// otherwise the run fails with an accuracy error (the remedy is a smaller
/// `dt_max`). Deterministic for fixed inputs.
pub fn propagate_state(h: &Hamiltonian, psi0: &PureState, grid: &TimeGrid) -> Result<Vec<StateSample>> {
    h.layout().expect_same(&psi0.layout())?;
    if (psi0.norm() - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidState("initial state is not normalized".into()));
    }
    let ch = CompiledHamiltonian::compile(h);
    let dt = grid.step_size(ch.norm_bound)?;
    let layout = h.layout();
    let d = ch.dim;

    let mut psi: Vec<C64> = psi0.amplitudes().iter().copied().collect();
    let mut k1 = vec![czero(); d];
    let mut k2 = vec![czero(); d];
    let mut k3 = vec![czero(); d];
    let mut k4 = vec![czero(); d];
    let mut tmp = vec![czero(); d];

    let times = grid.sample_times();
    let mut out = Vec::with_capacity(times.len());
    push_state_sample(layout, times[0], &psi, &mut out)?;
    for w in times.windows(2) {
        walk_interval(w[0], w[1], dt, &ch.breakpoints, |t, h_step, wt| {
            let half = h_step / 2.0;
            k1.fill(czero());
            ch.apply_acc(t, wt, MINUS_I, &psi, &mut k1);
            for i in 0..d {
                tmp[i] = psi[i] + k1[i] * C64::from(half);
            }
            k2.fill(czero());
            ch.apply_acc(t + half, wt, MINUS_I, &tmp, &mut k2);
            for i in 0..d {
                tmp[i] = psi[i] + k2[i] * C64::from(half);
            }
            k3.fill(czero());
            ch.apply_acc(t + half, wt, MINUS_I, &tmp, &mut k3);
            for i in 0..d {
                tmp[i] = psi[i] + k3[i] * C64::from(h_step);
            }
            k4.fill(czero());
            ch.apply_acc(t + h_step, wt, MINUS_I, &tmp, &mut k4);
            let w6 = C64::from(h_step / 6.0);
            for i in 0..d {
                psi[i] += w6 * (k1[i] + (k2[i] + k3[i]) * C64::from(2.0) + k4[i]);
            }
        });
        push_state_sample(layout, w[1], &psi, &mut out)?;
    }
    Ok(out)
}

fn push_state_sample(layout: Layout, t: f64, psi: &[C64], out: &mut Vec<StateSample>) -> Result<()> {
    let norm = psi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let norm_err = (norm - 1.0).abs();
    if norm_err > 1e-8 {
        return Err(Error::Accuracy(format!(
            "norm drift {norm_err:.3e} exceeds 1e-8 at t = {t:.6}; reduce dt_max"
        )));
    }
    let state = PureState::from_parts(layout, DVector::from_column_slice(psi));
    out.push(StateSample { t, state, norm_err });
    Ok(())
}

// ---------------------------------------------------------------------------
// amplitude-ladder propagation

/// Joint amplitudes `d_{m,n}` over the battery index `m` in `0..=N` and the
/// charger level `n` in `0..=n_max`.
#[derive(Clone, Debug)]
pub struct AmplitudeTable {
    n_cells: usize,
    n_max: usize,
    d: Vec<C64>,
}

impl AmplitudeTable {
    fn idx(&self, m: usize, n: usize) -> usize {
        m * (self.n_max + 1) + n
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn amplitude(&self, m: usize, n: usize) -> C64 {
        self.d[self.idx(m, n)]
    }

    pub fn norm_sq(&self) -> f64 {
        self.d.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `P(m) = sum_n |d_{m,n}|^2`.
    pub fn battery_populations(&self) -> Vec<f64> {
        let mut pops = vec![0.0; self.n_cells + 1];
        for m in 0..=self.n_cells {
            for n in 0..=self.n_max {
                pops[m] += self.d[self.idx(m, n)].norm_sqr();
            }
        }
        pops
    }

    /// Population in the two highest charger levels — the truncation guard.
    pub fn top_fock_population(&self) -> f64 {
        let mut p = 0.0;
        for m in 0..=self.n_cells {
            p += self.d[self.idx(m, self.n_max)].norm_sqr();
            if self.n_max >= 1 {
                p += self.d[self.idx(m, self.n_max - 1)].norm_sqr();
            }
        }
        p
    }

    /// Battery density matrix implied by the amplitudes.
    pub fn battery_density(&self) -> DensityMatrix {
        let db = self.n_cells + 1;
        let mut rho = DMatrix::<C64>::zeros(db, db);
        for m in 0..db {
            for mp in 0..db {
                let mut acc = czero();
                for n in 0..=self.n_max {
                    acc += self.d[self.idx(m, n)] * self.d[self.idx(mp, n)].conj();
                }
                rho[(m, mp)] = acc;
            }
        }
        let sector = crate::hilbert::SpinSector::new(self.n_cells).expect("n_cells >= 1");
        DensityMatrix::from_parts(Layout::Spin(sector), rho)
    }
}

/// One output sample of the amplitude ladder.
#[derive(Clone, Debug)]
pub struct AmplitudeSample {
    pub t: f64,
    pub table: AmplitudeTable,
    pub norm_err: f64,
    pub top_fock_population: f64,
}

/// Integrates the interaction-picture amplitude ladder from the fixed
/// initial condition `d_{0,N} = 1` (battery drained, charger at `|N>`).
///
/// The excitation-conserving couplings connect `(m,n) <-> (m-1,n+1)`; the
/// counter-rotating couplings connect `(m,n) <-> (m+1,n+1)` with weight
/// `J0(2 xi)` and explicit phases `exp(-+2i omega0 t)`, matching the
/// effective Hamiltonian this ladder is derived from. Population reaching
/// the two highest charger levels beyond `1e-6` aborts with a truncation
/// error.
pub fn propagate_amplitudes(
    p: &SystemParams,
    m: &ModulationParams,
    grid: &TimeGrid,
) -> Result<Vec<AmplitudeSample>> {
    if !p.is_resonant() {
        return Err(Error::UnsupportedConfig(
            "the amplitude ladder is derived on resonance (omega_c = omega0)".into(),
        ));
    }
    let n_cells = p.n_cells();
    let n_max = p.n_max();
    if n_max < n_cells {
        return Err(Error::Truncation(format!(
            "initial charger level N = {n_cells} exceeds n_max = {n_max}"
        )));
    }
    let j0 = bessel_j(0, 2.0 * m.xi())?;
    let g_half = p.g() / 2.0;
    let omega0 = p.omega0();

    // <k+1|S+|k> on the maximal sector
    let up: Vec<f64> = (0..n_cells).map(|k| (((k + 1) * (n_cells - k)) as f64).sqrt()).collect();
    let sqrt_n: Vec<f64> = (0..=n_max).map(|q| (q as f64).sqrt()).collect();
    let width = n_max + 1;
    let dim = (n_cells + 1) * width;

    // generator row-sum bound for the step heuristic
    let mut bound = 0.0_f64;
    for mi in 0..=n_cells {
        for n in 0..=n_max {
            let mut row = 0.0;
            if mi >= 1 && n + 1 <= n_max {
                row += up[mi - 1] * sqrt_n[n + 1];
            }
            if mi < n_cells && n >= 1 {
                row += up[mi] * sqrt_n[n];
            }
            if mi < n_cells && n + 1 <= n_max {
                row += j0.abs() * up[mi] * sqrt_n[n + 1];
            }
            if mi >= 1 && n >= 1 {
                row += j0.abs() * up[mi - 1] * sqrt_n[n];
            }
            bound = bound.max(g_half * row);
        }
    }
    let dt = grid.step_size(bound)?;

    let mut d = vec![czero(); dim];
    d[n_cells] = C64::new(1.0, 0.0); // (m = 0, n = N)

    let rhs = |t: f64, d: &[C64], out: &mut [C64]| {
        let f = C64::from_polar(j0, -2.0 * omega0 * t); // J0(2 xi) e^{-2 i omega0 t}
        for mi in 0..=n_cells {
            for n in 0..=n_max {
                let mut acc = czero();
                if mi >= 1 && n + 1 <= n_max {
                    acc += C64::from(up[mi - 1] * sqrt_n[n + 1]) * d[(mi - 1) * width + n + 1];
                }
                if mi < n_cells && n >= 1 {
                    acc += C64::from(up[mi] * sqrt_n[n]) * d[(mi + 1) * width + n - 1];
                }
                if mi < n_cells && n + 1 <= n_max {
                    acc += f * C64::from(up[mi] * sqrt_n[n + 1]) * d[(mi + 1) * width + n + 1];
                }
                if mi >= 1 && n >= 1 {
                    acc += f.conj() * C64::from(up[mi - 1] * sqrt_n[n]) * d[(mi - 1) * width + n - 1];
                }
                out[mi * width + n] = MINUS_I * C64::from(g_half) * acc;
            }
        }
    };

    let mut k1 = vec![czero(); dim];
    let mut k2 = vec![czero(); dim];
    let mut k3 = vec![czero(); dim];
    let mut k4 = vec![czero(); dim];
    let mut tmp = vec![czero(); dim];

    let times = grid.sample_times();
    let mut out = Vec::with_capacity(times.len());
    push_amplitude_sample(n_cells, n_max, times[0], &d, &mut out)?;
    for w in times.windows(2) {
        walk_interval(w[0], w[1], dt, &[], |t, h, _wt| {
            let half = h / 2.0;
            rhs(t, &d, &mut k1);
            for i in 0..dim {
                tmp[i] = d[i] + k1[i] * C64::from(half);
            }
            rhs(t + half, &tmp, &mut k2);
            for i in 0..dim {
                tmp[i] = d[i] + k2[i] * C64::from(half);
            }
            rhs(t + half, &tmp, &mut k3);
            for i in 0..dim {
                tmp[i] = d[i] + k3[i] * C64::from(h);
            }
            rhs(t + h, &tmp, &mut k4);
            let w6 = C64::from(h / 6.0);
            for i in 0..dim {
                d[i] += w6 * (k1[i] + (k2[i] + k3[i]) * C64::from(2.0) + k4[i]);
            }
        });
        push_amplitude_sample(n_cells, n_max, w[1], &d, &mut out)?;
    }
    Ok(out)
}

fn push_amplitude_sample(
    n_cells: usize,
    n_max: usize,
    t: f64,
    d: &[C64],
    out: &mut Vec<AmplitudeSample>,
) -> Result<()> {
    let table = AmplitudeTable { n_cells, n_max, d: d.to_vec() };
    let norm_err = (table.norm_sq().sqrt() - 1.0).abs();
    if norm_err > 1e-8 {
        return Err(Error::Accuracy(format!(
            "amplitude norm drift {norm_err:.3e} exceeds 1e-8 at t = {t:.6}; reduce dt_max"
        )));
    }
    let top = table.top_fock_population();
    if top > 1e-6 {
        return Err(Error::Truncation(format!(
            "population {top:.3e} in the top two charger levels at t = {t:.6}; raise n_max"
        )));
    }
    out.push(AmplitudeSample { t, table, norm_err, top_fock_population: top });
    Ok(())
}

// ---------------------------------------------------------------------------
// Lindblad propagation

/// Hamiltonian part (optional) plus jump operators with non-negative rates.
#[derive(Clone, Debug)]
pub struct LindbladSpec {
    hamiltonian: Option<Hamiltonian>,
    jumps: Vec<(Operator, f64)>,
}

impl LindbladSpec {
    pub fn new(hamiltonian: Option<Hamiltonian>, jumps: Vec<(Operator, f64)>) -> Result<Self> {
        let layout = match (&hamiltonian, jumps.first()) {
            (Some(h), _) => h.layout(),
            (None, Some((op, _))) => op.layout(),
            (None, None) => {
                return Err(Error::InvalidParam("Lindblad spec needs a Hamiltonian or a jump".into()));
            }
        };
        for (op, rate) in &jumps {
            op.layout().expect_same(&layout)?;
            if !(rate.is_finite() && *rate >= 0.0) {
                return Err(Error::InvalidParam(format!("jump rate must be non-negative, got {rate}")));
            }
        }
        Ok(Self { hamiltonian, jumps })
    }

    pub fn layout(&self) -> Layout {
        match (&self.hamiltonian, self.jumps.first()) {
            (Some(h), _) => h.layout(),
            (None, Some((op, _))) => op.layout(),
            _ => unreachable!("validated at construction"),
        }
    }

    pub fn hamiltonian(&self) -> Option<&Hamiltonian> {
        self.hamiltonian.as_ref()
    }

    pub fn jumps(&self) -> &[(Operator, f64)] {
        &self.jumps
    }
}

struct CompiledJump {
    op: SparseOp,
    adj: SparseOp,
    kdag_k: SparseOp,
    rate: f64,
}

struct CompiledLindblad {
    dim: usize,
    hamiltonian: Option<CompiledHamiltonian>,
    jumps: Vec<CompiledJump>,
    scratch: DMatrix<C64>,
}

impl CompiledLindblad {
    fn compile(spec: &LindbladSpec) -> Self {
        let dim = spec.layout().dim();
        let hamiltonian = spec.hamiltonian.as_ref().map(CompiledHamiltonian::compile);
        let jumps = spec
            .jumps
            .iter()
            .map(|(op, rate)| {
                let s = SparseOp::from_dense(op.data());
                let adj = s.adjoint();
                let kdag_k = adj.matmul(&s);
                CompiledJump { op: s, adj, kdag_k, rate: *rate }
            })
            .collect();
        Self { dim, hamiltonian, jumps, scratch: DMatrix::zeros(dim, dim) }
    }

    /// Row-sum bound on the right-hand side for the step heuristic.
    fn norm_bound(&self) -> f64 {
        let h = self.hamiltonian.as_ref().map_or(0.0, |ch| 2.0 * ch.norm_bound);
        let jumps: f64 = self
            .jumps
            .iter()
            .map(|j| j.rate * (j.op.inf_norm() * j.op.one_norm() + j.kdag_k.inf_norm()))
            .sum();
        h + jumps
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.hamiltonian.as_ref().map_or_else(Vec::new, |ch| ch.breakpoints.clone())
    }

    fn rhs_into(&mut self, t: f64, window_t: f64, rho: &DMatrix<C64>, out: &mut DMatrix<C64>) {
        out.fill(czero());
        let Self { hamiltonian, jumps, scratch, .. } = self;
        if let Some(ch) = hamiltonian {
            ch.acc_commutator(t, window_t, rho, out);
        }
        let one = C64::new(1.0, 0.0);
        for jump in jumps {
            if jump.rate == 0.0 {
                continue;
            }
            // rate * O rho O^dag
            scratch.fill(czero());
            jump.op.acc_mul_left(C64::from(jump.rate), rho, scratch);
            jump.adj.acc_mul_right(one, scratch, out);
            // -(rate/2) {O^dag O, rho}
            let half = C64::from(-jump.rate / 2.0);
            jump.kdag_k.acc_mul_left(half, rho, out);
            jump.kdag_k.acc_mul_right(half, rho, out);
        }
    }
}

/// Right-hand side of the master equation at time `t`:
/// `-i[H(t), rho] + sum_k rate_k (O rho O^dag - {O^dag O, rho}/2)`.
///
/// The result is traceless and Hermitian (to roundoff) for valid inputs.
pub fn lindblad_rhs(spec: &LindbladSpec, rho: &DensityMatrix, t: f64) -> Result<DMatrix<C64>> {
    spec.layout().expect_same(&rho.layout())?;
    let mut cl = CompiledLindblad::compile(spec);
    let mut out = DMatrix::zeros(cl.dim, cl.dim);
    cl.rhs_into(t, t, rho.data(), &mut out);
    Ok(out)
}

/// One output sample of a Lindblad propagation, with the diagnostics that
/// were checked at this sample.
#[derive(Clone, Debug)]
pub struct LindbladSample {
    pub t: f64,
    pub rho: DensityMatrix,
    pub trace_err: f64,
    pub herm_dev: f64,
    pub min_eig: f64,
}

/// Integrates the master equation with classical RK4 at fixed step.
///
/// Every sample must satisfy `|tr rho - 1| < 1e-8`, Hermiticity deviation
/// below `1e-10`, and smallest eigenvalue above `-1e-8`; otherwise the run
/// fails with an accuracy error.
pub fn propagate_lindblad(
    spec: &LindbladSpec,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
) -> Result<Vec<LindbladSample>> {
    spec.layout().expect_same(&rho0.layout())?;
    rho0.validate(1e-10, 1e-8, -1e-10)?;
    let mut cl = CompiledLindblad::compile(spec);
    let dt = grid.step_size(cl.norm_bound())?;
    let breakpoints = cl.breakpoints();
    let layout = rho0.layout();
    let d = cl.dim;

    let mut rho = rho0.data().clone();
    let mut k1 = DMatrix::zeros(d, d);
    let mut k2 = DMatrix::zeros(d, d);
    let mut k3 = DMatrix::zeros(d, d);
    let mut k4 = DMatrix::zeros(d, d);
    let mut tmp = DMatrix::zeros(d, d);

    let times = grid.sample_times();
    let mut out = Vec::with_capacity(times.len());
    push_lindblad_sample(layout, times[0], &rho, &mut out)?;
    for w in times.windows(2) {
        walk_interval(w[0], w[1], dt, &breakpoints, |t, h, wt| {
            let half = h / 2.0;
            cl.rhs_into(t, wt, &rho, &mut k1);
            axpy_matrix(&rho, half, &k1, &mut tmp);
            cl.rhs_into(t + half, wt, &tmp, &mut k2);
            axpy_matrix(&rho, half, &k2, &mut tmp);
            cl.rhs_into(t + half, wt, &tmp, &mut k3);
            axpy_matrix(&rho, h, &k3, &mut tmp);
            cl.rhs_into(t + h, wt, &tmp, &mut k4);
            let w6 = h / 6.0;
            let r = rho.as_mut_slice();
            let (a, b, c, e) = (k1.as_slice(), k2.as_slice(), k3.as_slice(), k4.as_slice());
            for i in 0..r.len() {
                r[i] += C64::from(w6) * (a[i] + (b[i] + c[i]) * C64::from(2.0) + e[i]);
            }
        });
        push_lindblad_sample(layout, w[1], &rho, &mut out)?;
    }
    Ok(out)
}

/// `out = base + s * k`
fn axpy_matrix(base: &DMatrix<C64>, s: f64, k: &DMatrix<C64>, out: &mut DMatrix<C64>) {
    let b = base.as_slice();
    let kk = k.as_slice();
    let o = out.as_mut_slice();
    for i in 0..o.len() {
        o[i] = b[i] + C64::from(s) * kk[i];
    }
}

fn push_lindblad_sample(
    layout: Layout,
    t: f64,
    rho: &DMatrix<C64>,
    out: &mut Vec<LindbladSample>,
) -> Result<()> {
    let tr = rho.diagonal().sum();
    let trace_err = (tr - C64::new(1.0, 0.0)).norm();
    if trace_err > 1e-8 {
        return Err(Error::Accuracy(format!(
            "trace drift {trace_err:.3e} exceeds 1e-8 at t = {t:.6}; reduce dt_max"
        )));
    }
    let herm_dev = linalg::hermiticity_deviation(rho);
    if herm_dev > 1e-10 {
        return Err(Error::Accuracy(format!(
            "Hermiticity deviation {herm_dev:.3e} exceeds 1e-10 at t = {t:.6}"
        )));
    }
    let min_eig = linalg::min_eigenvalue(rho);
    if min_eig < -1e-8 {
        return Err(Error::Accuracy(format!(
            "negative eigenvalue {min_eig:.3e} below -1e-8 at t = {t:.6}"
        )));
    }
    out.push(LindbladSample {
        t,
        rho: DensityMatrix::from_parts(layout, rho.clone()),
        trace_err,
        herm_dev,
        min_eig,
    });
    Ok(())
}
