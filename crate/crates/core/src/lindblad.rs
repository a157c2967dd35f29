//! Collective-decay master equation on the Dicke space and its integration.
//!
//! ```text
//! dρ/dt = −(γ/2)(n̄+1)(J₊J₋ρ + ρJ₊J₋ − 2J₋ρJ₊)
//!         −(γ/2) n̄   (J₋J₊ρ + ρJ₋J₊ − 2J₊ρJ₋)
//! ```
//!
//! `J₊J₋` and `J₋J₊` are diagonal and `J₋`, `J₊` have a single off-diagonal
//! band, so the right-hand side is evaluated elementwise in `O(dim²)`:
//!
//! ```text
//! (dρ/dt)_pq = −(r_p + r_q) ρ_pq + u_p u_q ρ_{p+1,q+1} + v_{p−1} v_{q−1} ρ_{p−1,q−1}
//! ```
//!
//! with `r = (γ/2)((n̄+1)·diag(J₊J₋) + n̄·diag(J₋J₊))`, `u = √(γ(n̄+1))·c`,
//! `v = √(γn̄)·c` and `c` the ladder coefficients of `J₊`.

use std::sync::Mutex;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dicke::{CollectiveOperators, DensityMatrix, DickeSpace};
use crate::integrator::{self, Dopri5Settings, IntegratorError, OdeSystem};

/// Below this dimension the right-hand side runs on one thread.
const PARALLEL_MIN_DIM: usize = 96;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("invalid simulation parameters: {0}")]
    InvalidParams(String),
    #[error("initial state {index} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("step size underflow at t = {t:e} (h = {h:e}); check γ, n̄ and tolerances")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("integration exceeded {0} steps")]
    TooManySteps(usize),
    #[error("state became non-finite at t = {0:e}")]
    NonFinite(f64),
}

impl From<IntegratorError> for EngineError {
    fn from(e: IntegratorError) -> Self {
        match e {
            IntegratorError::StepSizeUnderflow { t, h, .. } => EngineError::StepSizeUnderflow { t, h },
            IntegratorError::TooManySteps(n) => EngineError::TooManySteps(n),
            IntegratorError::NonFinite(t) => EngineError::NonFinite(t),
        }
    }
}

/// Physical and numerical parameters of a run. Times are in units of `1/γ`
/// when `gamma = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationParams {
    pub gamma: f64,
    pub n_bar: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub t_max: f64,
    pub output_stride: f64,
}

impl Default for SimulationParams {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            n_bar: 0.0,
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            t_max: 1.0,
            output_stride: 0.01,
        }
    }
}

impl SimulationParams {
    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: &str| Err(EngineError::InvalidParams(m.to_string()));
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad("gamma must be positive");
        }
        if !(self.n_bar >= 0.0 && self.n_bar.is_finite()) {
            return bad("n_bar must be non-negative");
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return bad("t_max must be positive");
        }
        if !(self.output_stride > 0.0) {
            return bad("output_stride must be positive");
        }
        Ok(())
    }

    /// Uniform sample grid `0, stride, 2·stride, …, t_max`.
    pub fn output_grid(&self) -> Vec<f64> {
        uniform_grid(self.t_max, self.output_stride)
    }
}

/// `0, stride, …` up to and including `t_max`.
pub fn uniform_grid(t_max: f64, stride: f64) -> Vec<f64> {
    let steps = t_max / stride;
    let n = steps.round();
    let n_full = if (n - steps).abs() <= 1e-9 * steps.max(1.0) {
        n as usize
    } else {
        steps.floor() as usize
    };
    let mut grid: Vec<f64> = (0..=n_full).map(|i| i as f64 * stride).collect();
    let last = *grid.last().unwrap();
    if t_max - last > 1e-12 * t_max {
        grid.push(t_max);
    } else if let Some(l) = grid.last_mut() {
        *l = t_max;
    }
    grid
}

/// Fine sampling up to `fine_until`, then coarse sampling to `t_max`.
pub fn two_stage_grid(fine_stride: f64, fine_until: f64, coarse_stride: f64, t_max: f64) -> Vec<f64> {
    if fine_until >= t_max {
        return uniform_grid(t_max, fine_stride);
    }
    let mut grid = uniform_grid(fine_until, fine_stride);
    let mut k = 1usize;
    loop {
        let t = fine_until + k as f64 * coarse_stride;
        if t >= t_max - 1e-12 * t_max {
            break;
        }
        grid.push(t);
        k += 1;
    }
    grid.push(t_max);
    grid
}

/// Precomputed coefficients of the master-equation right-hand side.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    dim: usize,
    rate: Vec<f64>,
    down: Vec<f64>,
    up: Vec<f64>,
}

impl Liouvillian {
    pub fn new(ops: &CollectiveOperators, gamma: f64, n_bar: f64) -> Self {
        let dim = ops.space().dim();
        let g_down = 0.5 * gamma * (n_bar + 1.0);
        let g_up = 0.5 * gamma * n_bar;
        let a = ops.jp_jm_diagonal();
        let b = ops.jm_jp_diagonal();
        let rate = a.iter().zip(&b).map(|(a, b)| g_down * a + g_up * b).collect();
        let sd = (2.0 * g_down).sqrt();
        let su = (2.0 * g_up).sqrt();
        let down = ops.ladder().iter().map(|c| sd * c).collect();
        let up = ops.ladder().iter().map(|c| su * c).collect();
        Self { dim, rate, down, up }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Largest diagonal decay rate, a lower bound on the spectral radius.
    pub fn max_rate(&self) -> f64 {
        let r = self.rate.iter().cloned().fold(0.0, f64::max);
        2.0 * r
    }

    /// `out = L(ρ)` for column-major `ρ` of size `dim²`.
    pub fn apply(&self, rho: &[Complex64], out: &mut [Complex64]) {
        let d = self.dim;
        debug_assert_eq!(rho.len(), d * d);
        debug_assert_eq!(out.len(), d * d);
        let column = |(q, col): (usize, &mut [Complex64])| self.apply_column(rho, q, col);
        if d >= PARALLEL_MIN_DIM {
            out.par_chunks_mut(d).enumerate().for_each(column);
        } else {
            out.chunks_mut(d).enumerate().for_each(column);
        }
    }

    #[inline]
    fn apply_column(&self, rho: &[Complex64], q: usize, col: &mut [Complex64]) {
        let d = self.dim;
        let rq = self.rate[q];
        let cur = &rho[q * d..(q + 1) * d];
        for (p, o) in col.iter_mut().enumerate() {
            *o = cur[p] * -(self.rate[p] + rq);
        }
        if q + 1 < d {
            let next = &rho[(q + 1) * d..(q + 2) * d];
            let uq = self.down[q];
            for p in 0..d - 1 {
                col[p] += next[p + 1] * (self.down[p] * uq);
            }
        }
        if q >= 1 {
            let prev = &rho[(q - 1) * d..q * d];
            let vq = self.up[q - 1];
            if vq != 0.0 {
                for p in 1..d {
                    col[p] += prev[p - 1] * (self.up[p - 1] * vq);
                }
            }
        }
    }
}

/// Right-hand side of the master equation for a density matrix.
pub fn lindblad_rhs(
    rho: &DensityMatrix,
    params: &SimulationParams,
    ops: &CollectiveOperators,
) -> DMatrix<Complex64> {
    let l = Liouvillian::new(ops, params.gamma, params.n_bar);
    let d = rho.dim();
    let mut out = DMatrix::zeros(d, d);
    l.apply(rho.0.as_slice(), out.as_mut_slice());
    out
}

/// Thermal (detailed-balance) stationary state: populations
/// `∝ (n̄/(n̄+1))^{j+m}`, no coherences.
pub fn stationary_state(space: DickeSpace, n_bar: f64) -> DensityMatrix {
    let d = space.dim();
    let mut pops = vec![0.0; d];
    pops[0] = 1.0;
    if n_bar > 0.0 {
        let ratio = n_bar / (n_bar + 1.0);
        for k in 1..d {
            pops[k] = pops[k - 1] * ratio;
        }
    }
    let total: f64 = pops.iter().sum();
    let mut m = DMatrix::zeros(d, d);
    for (k, p) in pops.iter().enumerate() {
        m[(k, k)] = Complex64::new(p / total, 0.0);
    }
    DensityMatrix(m)
}

/// Worst drift observed before the per-step Hermitization and trace
/// renormalization were applied.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub max_trace_drift: f64,
    pub max_hermiticity_drift: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub rhs_evals: usize,
    pub drift: DriftReport,
}

/// Sampled density-matrix trajectory.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub params: SimulationParams,
    pub stats: RunStats,
}

/// One or more density matrices stacked and advanced by the same step
/// sequence.
struct StackedSystem<'a> {
    liouvillian: &'a Liouvillian,
    blocks: usize,
    drift: Mutex<DriftReport>,
}

impl OdeSystem for StackedSystem<'_> {
    fn len(&self) -> usize {
        let d = self.liouvillian.dim();
        self.blocks * d * d
    }

    fn rhs(&self, y: &[Complex64], dy: &mut [Complex64]) {
        let d2 = self.liouvillian.dim().pow(2);
        for (src, dst) in y.chunks(d2).zip(dy.chunks_mut(d2)) {
            self.liouvillian.apply(src, dst);
        }
    }

    fn project(&self, y: &mut [Complex64]) {
        let d = self.liouvillian.dim();
        let mut report = DriftReport::default();
        for block in y.chunks_mut(d * d) {
            let (herm, trace) = hermitize(block, d);
            report.max_hermiticity_drift = report.max_hermiticity_drift.max(herm);
            report.max_trace_drift = report.max_trace_drift.max((trace - 1.0).abs());
            let inv = 1.0 / trace;
            for z in block.iter_mut() {
                *z *= inv;
            }
        }
        let mut total = self.drift.lock().unwrap();
        total.max_hermiticity_drift = total.max_hermiticity_drift.max(report.max_hermiticity_drift);
        total.max_trace_drift = total.max_trace_drift.max(report.max_trace_drift);
    }
}

/// `ρ ← (ρ + ρ†)/2` in place; returns the pre-correction `max |ρ − ρ†|` and
/// the real trace.
fn hermitize(block: &mut [Complex64], d: usize) -> (f64, f64) {
    let mut worst: f64 = 0.0;
    let mut trace = 0.0;
    for q in 0..d {
        let diag = &mut block[q * d + q];
        worst = worst.max(2.0 * diag.im.abs());
        diag.im = 0.0;
        trace += diag.re;
        for p in q + 1..d {
            let a = block[q * d + p];
            let b = block[p * d + q];
            worst = worst.max((a - b.conj()).norm());
            let avg = (a + b.conj()) * 0.5;
            block[q * d + p] = avg;
            block[p * d + q] = avg.conj();
        }
    }
    (worst, trace)
}

/// Integration engine for a fixed operator set and parameter set.
pub struct Engine<'a> {
    ops: &'a CollectiveOperators,
    params: SimulationParams,
    liouvillian: Liouvillian,
}

impl<'a> Engine<'a> {
    pub fn new(ops: &'a CollectiveOperators, params: SimulationParams) -> Result<Self, EngineError> {
        params.validate()?;
        let liouvillian = Liouvillian::new(ops, params.gamma, params.n_bar);
        Ok(Self {
            ops,
            params,
            liouvillian,
        })
    }

    pub fn params(&self) -> &SimulationParams {
        &self.params
    }

    pub fn liouvillian(&self) -> &Liouvillian {
        &self.liouvillian
    }

    /// Integrator settings: the initial step `0.01/(γ(n̄+1)N²)` resolves the
    /// fastest `O(j²)` rates; the step floor is `1e−15/γ`.
    pub fn settings(&self) -> Dopri5Settings {
        let p = &self.params;
        let n = self.ops.space().n_atoms() as f64;
        Dopri5Settings {
            rel_tol: p.rel_tol,
            abs_tol: p.abs_tol,
            h0: 0.01 / (p.gamma * (p.n_bar + 1.0) * n * n),
            h_min: 1e-15 / p.gamma,
            ..Default::default()
        }
    }

    /// Advances every initial state with a shared step sequence to
    /// `params.t_max`, handing the dense-output states to `observer` at each
    /// time in `sample_times`.
    pub fn run<F>(
        &self,
        initial: &[&DensityMatrix],
        sample_times: &[f64],
        mut observer: F,
    ) -> Result<RunStats, EngineError>
    where
        F: FnMut(f64, &[DensityMatrix]),
    {
        let d = self.liouvillian.dim();
        let d2 = d * d;
        let mut y0 = Vec::with_capacity(initial.len() * d2);
        for (index, rho) in initial.iter().enumerate() {
            if rho.dim() != d {
                return Err(EngineError::DimensionMismatch {
                    index,
                    expected: d,
                    found: rho.dim(),
                });
            }
            y0.extend_from_slice(rho.0.as_slice());
        }
        let system = StackedSystem {
            liouvillian: &self.liouvillian,
            blocks: initial.len(),
            drift: Mutex::new(DriftReport::default()),
        };
        let mut buffers: Vec<DensityMatrix> = (0..initial.len())
            .map(|_| DensityMatrix(DMatrix::zeros(d, d)))
            .collect();
        let (_, stats) = integrator::integrate(
            &system,
            &y0,
            0.0,
            self.params.t_max,
            &self.settings(),
            sample_times,
            |t, y| {
                for (buf, block) in buffers.iter_mut().zip(y.chunks(d2)) {
                    buf.0.as_mut_slice().copy_from_slice(block);
                }
                observer(t, &buffers);
            },
        )?;
        let drift = *system.drift.lock().unwrap();
        Ok(RunStats {
            accepted_steps: stats.accepted,
            rejected_steps: stats.rejected,
            rhs_evals: stats.rhs_evals,
            drift,
        })
    }

    /// Full trajectory sampled on the uniform output grid.
    pub fn evolve(&self, rho0: &DensityMatrix) -> Result<Trajectory, EngineError> {
        let grid = self.params.output_grid();
        let mut times = Vec::with_capacity(grid.len());
        let mut states = Vec::with_capacity(grid.len());
        let stats = self.run(&[rho0], &grid, |t, s| {
            times.push(t);
            states.push(s[0].clone());
        })?;
        Ok(Trajectory {
            times,
            states,
            params: self.params,
            stats,
        })
    }

    /// The actual state and the classical reference advanced together.
    pub fn evolve_pair(
        &self,
        rho0: &DensityMatrix,
        rho_cl0: &DensityMatrix,
    ) -> Result<(Trajectory, Trajectory), EngineError> {
        let grid = self.params.output_grid();
        let mut times = Vec::with_capacity(grid.len());
        let mut a = Vec::with_capacity(grid.len());
        let mut b = Vec::with_capacity(grid.len());
        let stats = self.run(&[rho0, rho_cl0], &grid, |t, s| {
            times.push(t);
            a.push(s[0].clone());
            b.push(s[1].clone());
        })?;
        let first = Trajectory {
            times: times.clone(),
            states: a,
            params: self.params,
            stats,
        };
        let second = Trajectory {
            times,
            states: b,
            params: self.params,
            stats,
        };
        Ok((first, second))
    }
}

pub fn evolve(
    rho0: &DensityMatrix,
    params: &SimulationParams,
    ops: &CollectiveOperators,
) -> Result<Trajectory, EngineError> {
    Engine::new(ops, *params)?.evolve(rho0)
}

pub fn evolve_pair(
    rho0: &DensityMatrix,
    rho_cl0: &DensityMatrix,
    params: &SimulationParams,
    ops: &CollectiveOperators,
) -> Result<(Trajectory, Trajectory), EngineError> {
    Engine::new(ops, *params)?.evolve_pair(rho0, rho_cl0)
}
