//! Diagnostics of a density matrix and extraction of the decoherence and
//! dissipation time scales from sampled trajectories.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dicke::{coherent_state, density_from_state, CollectiveOperators, DensityMatrix, DickeError, DickeSpace, StateVector};
use crate::lindblad::{stationary_state, SimulationParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObservableError {
    #[error("cos²α undefined: ⟨J₊J₋⟩ = {0:e} vanishes (ground state)")]
    UndefinedForGround(f64),
    #[error("closed-form initial slope requires a pure state (purity {0})")]
    NotPure(f64),
    #[error(transparent)]
    Dicke(#[from] DickeError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExtractionError {
    #[error("no decoherence signal: {0}")]
    NoDecoherenceSignal(String),
    #[error("need at least {needed} samples before the knee, found {found}")]
    InsufficientSamples { needed: usize, found: usize },
    #[error("fit window too short: {0}")]
    FitWindowTooShort(String),
    #[error("decay is not exponential: fit residual RMS {0:.3} exceeds 0.1")]
    NonExponentialDecay(f64),
    #[error("series has no distance column")]
    MissingDistance,
}

/// `S_lin = Tr(ρ − ρ²) = 1 − Tr ρ²`.
pub fn linear_entropy(rho: &DensityMatrix) -> f64 {
    rho.trace().re - rho.purity()
}

/// `⟨J_z⟩`, dimensionless.
pub fn energy(rho: &DensityMatrix, ops: &CollectiveOperators) -> f64 {
    let space = ops.space();
    (0..space.dim()).map(|i| space.m(i) * rho.0[(i, i)].re).sum()
}

/// `(⟨J₊⟩, ⟨J₋⟩)` from the ladder band.
pub fn ladder_expectations(rho: &DensityMatrix, ops: &CollectiveOperators) -> (Complex64, Complex64) {
    let mut jp = Complex64::new(0.0, 0.0);
    let mut jm = Complex64::new(0.0, 0.0);
    for (i, &c) in ops.ladder().iter().enumerate() {
        // Tr(ρ J₊) = Σ ρ_{i,i+1} c_i, Tr(ρ J₋) = Σ ρ_{i+1,i} c_i
        jp += rho.0[(i, i + 1)] * c;
        jm += rho.0[(i + 1, i)] * c;
    }
    (jp, jm)
}

fn diagonal_expectation(rho: &DensityMatrix, diag: &[f64]) -> Complex64 {
    diag.iter().enumerate().map(|(i, &d)| rho.0[(i, i)] * d).sum()
}

/// Normally ordered correlation `C(J₊, J₋) = ⟨J₊J₋⟩ − ⟨J₊⟩⟨J₋⟩`.
pub fn normal_correlation(rho: &DensityMatrix, ops: &CollectiveOperators) -> f64 {
    let (jp, jm) = ladder_expectations(rho, ops);
    let c = diagonal_expectation(rho, &ops.jp_jm_diagonal()) - jp * jm;
    debug_assert!(c.im.abs() < 1e-10 * c.re.abs().max(1.0), "imaginary part {}", c.im);
    c.re
}

/// Antinormally ordered correlation `C(J₋, J₊) = ⟨J₋J₊⟩ − ⟨J₋⟩⟨J₊⟩`.
pub fn antinormal_correlation(rho: &DensityMatrix, ops: &CollectiveOperators) -> f64 {
    let (jp, jm) = ladder_expectations(rho, ops);
    let c = diagonal_expectation(rho, &ops.jm_jp_diagonal()) - jm * jp;
    debug_assert!(c.im.abs() < 1e-10 * c.re.abs().max(1.0), "imaginary part {}", c.im);
    c.re
}

/// Short-time entanglement rate `A` in `p₀(t) = 1 − At²` for a pure state.
pub fn entanglement_rate(psi: &StateVector, ops: &CollectiveOperators) -> f64 {
    normal_correlation(&density_from_state(psi), ops)
}

/// Exact `dS_lin/dt` at `t = 0` for a pure initial state:
/// `2γ(n̄·C(J₋,J₊) + (n̄+1)·C(J₊,J₋))`.
///
/// For a pure state `Tr(ρ L ρ L†) = |⟨L⟩|²`, which gives the factor 2 from
/// `dS/dt = −2 Tr(ρ dρ/dt)`.
pub fn entropy_slope_t0(
    rho0: &DensityMatrix,
    params: &SimulationParams,
    ops: &CollectiveOperators,
) -> Result<f64, ObservableError> {
    let purity = rho0.purity();
    if (purity - 1.0).abs() > 1e-8 {
        return Err(ObservableError::NotPure(purity));
    }
    let n = params.n_bar;
    Ok(2.0
        * params.gamma
        * (n * antinormal_correlation(rho0, ops) + (n + 1.0) * normal_correlation(rho0, ops)))
}

/// `cos²α = |⟨τ|J₋|τ⟩|² / ⟨τ|J₊J₋|τ⟩`, the alignment of `|τ⟩` with `J₋|τ⟩`.
pub fn cos2_alpha(space: DickeSpace, tau: Complex64) -> Result<f64, ObservableError> {
    let ops = CollectiveOperators::new(space);
    let rho = density_from_state(&coherent_state(space, tau)?);
    let (_, jm) = ladder_expectations(&rho, &ops);
    let jpjm = diagonal_expectation(&rho, &ops.jp_jm_diagonal()).re;
    if jpjm < 1e-14 {
        return Err(ObservableError::UndefinedForGround(jpjm));
    }
    Ok(jm.norm_sqr() / jpjm)
}

/// `D(ρ, σ) = Tr[(ρ − σ)²]`, evaluated as `Σ |ρ_ij − σ_ij|²`.
pub fn distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    rho.0
        .iter()
        .zip(sigma.0.iter())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum()
}

/// Observables sampled along a trajectory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ObservableSeries {
    pub times: Vec<f64>,
    pub s_lin: Vec<f64>,
    pub energy: Vec<f64>,
    /// `D(ρ(t), ρ_cl)` against the fixed initial classical mixture.
    pub distance_to_classical: Option<Vec<f64>>,
    /// `D(ρ(t), ρ̃_cl(t))` against the co-evolved classical mixture.
    pub distance_to_evolved: Option<Vec<f64>>,
}

impl ObservableSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Appends one sample. `states[0]` is the actual state; `states[1]`, when
    /// present, is the co-evolved classical reference. `classical` is the
    /// fixed `ρ_cl`.
    pub fn push(
        &mut self,
        t: f64,
        states: &[DensityMatrix],
        ops: &CollectiveOperators,
        classical: Option<&DensityMatrix>,
    ) {
        let rho = &states[0];
        self.times.push(t);
        self.s_lin.push(linear_entropy(rho));
        self.energy.push(energy(rho, ops));
        if let Some(cl) = classical {
            self.distance_to_classical
                .get_or_insert_with(Vec::new)
                .push(distance(rho, cl));
        }
        if let Some(evolved) = states.get(1) {
            self.distance_to_evolved
                .get_or_insert_with(Vec::new)
                .push(distance(rho, evolved));
        }
    }
}

/// Long-time limits used as the baseline of the exponential fits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Asymptote {
    pub energy: f64,
    pub s_lin: f64,
}

impl Asymptote {
    pub fn thermal(ops: &CollectiveOperators, n_bar: f64) -> Self {
        let ss = stationary_state(ops.space(), n_bar);
        Self {
            energy: energy(&ss, ops),
            s_lin: linear_entropy(&ss),
        }
    }
}

/// Knee of the linear-entropy curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceEstimate {
    pub t_d: f64,
    pub slope_max: f64,
}

/// Minimum of the distance to the fixed classical mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceEstimate {
    pub t_min: f64,
    pub d_min: f64,
    /// Set when the minimum lies beyond 10× the slope-based `t_d`.
    pub slow: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dissipation {
    pub t_diss: f64,
    pub fit_rate_energy: f64,
    pub fit_rate_entropy: f64,
    pub residual_energy: f64,
    pub residual_entropy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeScales {
    pub t_d: f64,
    pub t_diss: f64,
    pub slope_max: f64,
    pub fit_rate_entropy: f64,
    pub fit_rate_energy: f64,
    pub fit_residuals: [f64; 2],
}

pub const DEFAULT_THRESHOLD_FRACTION: f64 = 0.1;
/// Samples the smoothed slope must stay below threshold.
pub const KNEE_HOLD_SAMPLES: usize = 10;
/// Minimum samples before the knee.
pub const MIN_INITIAL_SAMPLES: usize = 50;

/// Centered 5-point moving average, window shrunk symmetrically at the ends.
pub fn moving_average5(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let half = 2.min(i).min(n - 1 - i);
            let s = &v[i - half..=i + half];
            s.iter().sum::<f64>() / s.len() as f64
        })
        .collect()
}

/// Centered differences, one-sided at the ends.
pub fn centered_slope(t: &[f64], v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let (a, b) = match i {
                0 => (0, 1.min(n - 1)),
                _ if i == n - 1 => (i - 1, i),
                _ => (i - 1, i + 1),
            };
            if a == b {
                0.0
            } else {
                (v[b] - v[a]) / (t[b] - t[a])
            }
        })
        .collect()
}

/// Decoherence time from the knee of `S_lin(t)`: the first sample after the
/// slope maximum at which the smoothed slope drops below
/// `threshold_fraction · slope_max` and stays there for
/// [`KNEE_HOLD_SAMPLES`] samples.
pub fn decoherence_time(
    series: &ObservableSeries,
    threshold_fraction: f64,
    gamma: f64,
) -> Result<DecoherenceEstimate, ExtractionError> {
    let n = series.len();
    if n < MIN_INITIAL_SAMPLES {
        return Err(ExtractionError::InsufficientSamples {
            needed: MIN_INITIAL_SAMPLES,
            found: n,
        });
    }
    let smooth = moving_average5(&series.s_lin);
    let slope = centered_slope(&series.times, &smooth);
    let (i_max, slope_max) = slope
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, s)| if s > acc.1 { (i, s) } else { acc });
    if !(slope_max >= 1e-12 * gamma) {
        return Err(ExtractionError::NoDecoherenceSignal(format!(
            "peak entropy slope {slope_max:e} is negligible"
        )));
    }
    let limit = threshold_fraction * slope_max;
    let mut knee = None;
    let mut run = 0usize;
    for i in i_max..n {
        if slope[i] < limit {
            run += 1;
            if run == KNEE_HOLD_SAMPLES {
                knee = Some(i + 1 - KNEE_HOLD_SAMPLES);
                break;
            }
        } else {
            run = 0;
        }
    }
    let Some(k) = knee else {
        return Err(ExtractionError::NoDecoherenceSignal(
            "entropy slope never levels off within the series".into(),
        ));
    };
    if k < MIN_INITIAL_SAMPLES {
        return Err(ExtractionError::InsufficientSamples {
            needed: MIN_INITIAL_SAMPLES,
            found: k,
        });
    }
    Ok(DecoherenceEstimate {
        t_d: series.times[k],
        slope_max,
    })
}

/// Cross-estimator: position of the minimum of `D(ρ(t), ρ_cl)` over
/// `[0, 20·t_d]`.
pub fn decoherence_time_via_distance(
    series: &ObservableSeries,
    t_d_slope: f64,
) -> Result<DistanceEstimate, ExtractionError> {
    let d = series
        .distance_to_classical
        .as_ref()
        .ok_or(ExtractionError::MissingDistance)?;
    if d.iter().all(|&x| x < 1e-12) {
        return Err(ExtractionError::NoDecoherenceSignal(
            "state coincides with the classical mixture".into(),
        ));
    }
    let window = 20.0 * t_d_slope;
    let (mut i_min, mut d_min) = (0, f64::INFINITY);
    for (i, (&t, &v)) in series.times.iter().zip(d).enumerate() {
        if t > window {
            break;
        }
        if v < d_min {
            d_min = v;
            i_min = i;
        }
    }
    let t_min = series.times[i_min];
    Ok(DistanceEstimate {
        t_min,
        d_min,
        slow: t_min > 10.0 * t_d_slope,
    })
}

/// Least-squares line `y = a + b·t`; returns `(a, b, rms residual)`.
pub fn linear_fit(t: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = t.len() as f64;
    let mt = t.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut stt = 0.0;
    let mut sty = 0.0;
    for (a, b) in t.iter().zip(y) {
        stt += (a - mt) * (a - mt);
        sty += (a - mt) * (b - my);
    }
    let slope = sty / stt;
    let icpt = my - slope * mt;
    let rss: f64 = t
        .iter()
        .zip(y)
        .map(|(a, b)| (b - icpt - slope * a).powi(2))
        .sum();
    (icpt, slope, (rss / n).sqrt())
}

/// Minimum number of samples in the exponential fit window.
pub const MIN_FIT_SAMPLES: usize = 10;
/// Deviations below this fraction of the largest deviation in the series are
/// integration noise and are left out of the fits.
pub const FIT_FLOOR: f64 = 1e-6;

/// Exponential relaxation rates of `E(t) − E_∞` and `S_lin(t) − S_lin,∞`
/// fitted on `[fit_start, t_max]`; `t_diss` is the inverse energy rate.
pub fn dissipation_time(
    series: &ObservableSeries,
    asymptote: &Asymptote,
    fit_start: f64,
) -> Result<Dissipation, ExtractionError> {
    let t_end = *series.times.last().ok_or_else(|| {
        ExtractionError::FitWindowTooShort("empty series".into())
    })?;
    let fit = |values: &[f64], limit: f64| {
        let scale = values
            .iter()
            .map(|v| (v - limit).abs())
            .fold(0.0, f64::max)
            .max(1e-300);
        let (mut t, mut y) = (Vec::new(), Vec::new());
        for (&ti, &vi) in series.times.iter().zip(values) {
            let dev = (vi - limit).abs();
            if ti >= fit_start && dev > FIT_FLOOR * scale {
                t.push(ti);
                y.push(dev.ln());
            }
        }
        (t, y)
    };
    let (te, ye) = fit(&series.energy, asymptote.energy);
    if te.len() < MIN_FIT_SAMPLES {
        return Err(ExtractionError::FitWindowTooShort(format!(
            "{} usable samples in [{fit_start:e}, {t_end:e}]",
            te.len()
        )));
    }
    let (_, slope_e, res_e) = linear_fit(&te, &ye);
    if !(slope_e < 0.0) {
        return Err(ExtractionError::NonExponentialDecay(res_e.max(f64::INFINITY)));
    }
    let t_diss = -1.0 / slope_e;
    let span = te.last().unwrap() - te[0];
    if span < 3.0 * t_diss {
        return Err(ExtractionError::FitWindowTooShort(format!(
            "window {span:e} shorter than 3·t_diss = {:e}",
            3.0 * t_diss
        )));
    }
    if res_e > 0.1 {
        return Err(ExtractionError::NonExponentialDecay(res_e));
    }
    let (ts, ys) = fit(&series.s_lin, asymptote.s_lin);
    let (rate_s, res_s) = if ts.len() >= MIN_FIT_SAMPLES {
        let (_, b, r) = linear_fit(&ts, &ys);
        (-b, r)
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(Dissipation {
        t_diss,
        fit_rate_energy: -slope_e,
        fit_rate_entropy: rate_s,
        residual_energy: res_e,
        residual_entropy: res_s,
    })
}

/// Slope-based `t_d` followed by the exponential fits on `[5·t_d, t_max]`.
pub fn extract_time_scales(
    series: &ObservableSeries,
    asymptote: &Asymptote,
    gamma: f64,
) -> Result<TimeScales, ExtractionError> {
    let dec = decoherence_time(series, DEFAULT_THRESHOLD_FRACTION, gamma)?;
    let diss = dissipation_time(series, asymptote, 5.0 * dec.t_d)?;
    Ok(TimeScales {
        t_d: dec.t_d,
        t_diss: diss.t_diss,
        slope_max: dec.slope_max,
        fit_rate_entropy: diss.fit_rate_entropy,
        fit_rate_energy: diss.fit_rate_energy,
        fit_residuals: [diss.residual_energy, diss.residual_entropy],
    })
}
