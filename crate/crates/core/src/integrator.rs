//! Dormand–Prince 5(4) integrator with PI step control and cubic Hermite
//! dense output, over flat complex state vectors.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegratorError {
    #[error("step size {h:e} fell below the minimum {h_min:e} at t = {t:e}")]
    StepSizeUnderflow { t: f64, h: f64, h_min: f64 },
    #[error("step limit {0} reached before the end time")]
    TooManySteps(usize),
    #[error("non-finite state at t = {0:e}")]
    NonFinite(f64),
}

/// Right-hand side of `dy/dt = f(y)` (autonomous).
pub trait OdeSystem: Sync {
    fn len(&self) -> usize;
    fn rhs(&self, y: &[Complex64], dy: &mut [Complex64]);

    /// Called on the state after every accepted step.
    fn project(&self, _y: &mut [Complex64]) {}
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dopri5Settings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub h0: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
    pub safety: f64,
    pub fac_min: f64,
    pub fac_max: f64,
    /// PI stabilization exponent on the previous error.
    pub beta: f64,
}

impl Default for Dopri5Settings {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            h0: 1e-6,
            h_min: 1e-15,
            h_max: f64::INFINITY,
            max_steps: 50_000_000,
            safety: 0.9,
            fac_min: 0.2,
            fac_max: 10.0,
            beta: 0.04,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    pub last_h: f64,
}

// Dormand–Prince tableau. The system is autonomous, so the nodes c_i are not needed.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Combination `out = y + h Σ w_i k_i` over the nonzero weights.
fn combine(out: &mut [Complex64], y: &[Complex64], h: f64, terms: &[(f64, &[Complex64])]) {
    const CHUNK: usize = 4096;
    let body = |(ci, chunk): (usize, &mut [Complex64])| {
        let base = ci * CHUNK;
        for (off, o) in chunk.iter_mut().enumerate() {
            let i = base + off;
            let mut acc = Complex64::new(0.0, 0.0);
            for (w, k) in terms {
                acc += k[i] * *w;
            }
            *o = y[i] + acc * h;
        }
    };
    if out.len() >= 4 * CHUNK {
        use rayon::prelude::*;
        out.par_chunks_mut(CHUNK).enumerate().for_each(body);
    } else {
        out.chunks_mut(CHUNK).enumerate().for_each(body);
    }
}

/// Integrates from `t0` to `t_end`, calling `on_sample(t, y)` at every
/// requested sample time (ascending, within `[t0, t_end]`) with the
/// dense-output state.
pub fn integrate<S, F>(
    system: &S,
    y0: &[Complex64],
    t0: f64,
    t_end: f64,
    settings: &Dopri5Settings,
    sample_times: &[f64],
    mut on_sample: F,
) -> Result<(Vec<Complex64>, StepStats), IntegratorError>
where
    S: OdeSystem,
    F: FnMut(f64, &[Complex64]),
{
    let n = system.len();
    assert_eq!(y0.len(), n);
    let mut stats = StepStats::default();
    let mut y = y0.to_vec();
    let mut y_new = vec![Complex64::new(0.0, 0.0); n];
    let mut tmp = vec![Complex64::new(0.0, 0.0); n];
    let mut k: Vec<Vec<Complex64>> = (0..7).map(|_| vec![Complex64::new(0.0, 0.0); n]).collect();
    let mut dense = vec![Complex64::new(0.0, 0.0); n];

    let mut samples = sample_times.iter().copied().peekable();
    while let Some(&ts) = samples.peek() {
        if ts > t0 {
            break;
        }
        on_sample(t0, &y);
        samples.next();
    }

    system.rhs(&y, &mut k[0]);
    stats.rhs_evals += 1;

    let mut t = t0;
    let mut h = settings.h0.min(settings.h_max).min(t_end - t0);
    let mut err_old: f64 = 1e-4;
    let expo = 0.2 - 0.75 * settings.beta;
    let mut last_rejected = false;

    while t < t_end {
        if stats.accepted + stats.rejected >= settings.max_steps {
            return Err(IntegratorError::TooManySteps(settings.max_steps));
        }
        let mut final_step = false;
        if t + 1.01 * h >= t_end {
            h = t_end - t;
            final_step = true;
        }
        if h < settings.h_min {
            return Err(IntegratorError::StepSizeUnderflow {
                t,
                h,
                h_min: settings.h_min,
            });
        }

        {
            let (k1, rest) = k.split_at_mut(1);
            combine(&mut tmp, &y, h, &[(A21, &k1[0])]);
            system.rhs(&tmp, &mut rest[0]);
        }
        {
            let (ks, rest) = k.split_at_mut(2);
            combine(&mut tmp, &y, h, &[(A31, &ks[0]), (A32, &ks[1])]);
            system.rhs(&tmp, &mut rest[0]);
        }
        {
            let (ks, rest) = k.split_at_mut(3);
            combine(&mut tmp, &y, h, &[(A41, &ks[0]), (A42, &ks[1]), (A43, &ks[2])]);
            system.rhs(&tmp, &mut rest[0]);
        }
        {
            let (ks, rest) = k.split_at_mut(4);
            combine(
                &mut tmp,
                &y,
                h,
                &[(A51, &ks[0]), (A52, &ks[1]), (A53, &ks[2]), (A54, &ks[3])],
            );
            system.rhs(&tmp, &mut rest[0]);
        }
        {
            let (ks, rest) = k.split_at_mut(5);
            combine(
                &mut tmp,
                &y,
                h,
                &[
                    (A61, &ks[0]),
                    (A62, &ks[1]),
                    (A63, &ks[2]),
                    (A64, &ks[3]),
                    (A65, &ks[4]),
                ],
            );
            system.rhs(&tmp, &mut rest[0]);
        }
        {
            let (ks, rest) = k.split_at_mut(6);
            combine(
                &mut y_new,
                &y,
                h,
                &[
                    (A71, &ks[0]),
                    (A73, &ks[2]),
                    (A74, &ks[3]),
                    (A75, &ks[4]),
                    (A76, &ks[5]),
                ],
            );
            system.rhs(&y_new, &mut rest[0]);
        }
        stats.rhs_evals += 6;

        // Embedded error estimate, RMS over complex magnitudes.
        let mut acc = 0.0;
        for i in 0..n {
            let e = (k[0][i] * E1
                + k[2][i] * E3
                + k[3][i] * E4
                + k[4][i] * E5
                + k[5][i] * E6
                + k[6][i] * E7)
                * h;
            let scale = settings.abs_tol + settings.rel_tol * y[i].norm().max(y_new[i].norm());
            acc += e.norm_sqr() / (scale * scale);
        }
        let err = (acc / n as f64).sqrt();
        if !err.is_finite() {
            return Err(IntegratorError::NonFinite(t));
        }

        if err <= 1.0 {
            let fac = (err.max(1e-10).powf(expo) * err_old.powf(-settings.beta)).recip();
            let fac = (settings.safety * fac).clamp(settings.fac_min, settings.fac_max);
            let h_next = if last_rejected {
                h * fac.min(1.0)
            } else {
                h * fac
            };
            err_old = err.max(1e-4);
            last_rejected = false;

            let t_new = if final_step { t_end } else { t + h };
            system.project(&mut y_new);

            while let Some(&ts) = samples.peek() {
                if ts > t_new {
                    break;
                }
                if ts >= t_new {
                    on_sample(ts, &y_new);
                } else {
                    hermite(&mut dense, &y, &y_new, &k[0], &k[6], h, (ts - t) / h);
                    on_sample(ts, &dense);
                }
                samples.next();
            }

            std::mem::swap(&mut y, &mut y_new);
            k.swap(0, 6);
            t = t_new;
            stats.accepted += 1;
            stats.last_h = h;
            h = h_next.min(settings.h_max);
        } else {
            let fac = (settings.safety * err.powf(-expo)).max(settings.fac_min);
            h *= fac;
            stats.rejected += 1;
            last_rejected = true;
        }
    }
    Ok((y, stats))
}

/// Cubic Hermite interpolant on `[t, t+h]` at fraction `theta`.
fn hermite(
    out: &mut [Complex64],
    y0: &[Complex64],
    y1: &[Complex64],
    f0: &[Complex64],
    f1: &[Complex64],
    h: f64,
    theta: f64,
) {
    let t2 = theta * theta;
    let t3 = t2 * theta;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + theta;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    for i in 0..out.len() {
        out[i] = y0[i] * h00 + f0[i] * (h10 * h) + y1[i] * h01 + f1[i] * (h11 * h);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Decay(f64);
    impl OdeSystem for Decay {
        fn len(&self) -> usize {
            1
        }
        fn rhs(&self, y: &[Complex64], dy: &mut [Complex64]) {
            dy[0] = -y[0] * self.0;
        }
    }

    struct Rotation;
    impl OdeSystem for Rotation {
        fn len(&self) -> usize {
            1
        }
        fn rhs(&self, y: &[Complex64], dy: &mut [Complex64]) {
            dy[0] = y[0] * Complex64::new(0.0, 1.0);
        }
    }

    #[test]
    fn exponential_decay_is_accurate() {
        let settings = Dopri5Settings {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            h0: 1e-3,
            ..Default::default()
        };
        let mut seen = vec![];
        let times: Vec<f64> = (0..=10).map(|i| i as f64 * 0.3).collect();
        let (y, stats) = integrate(
            &Decay(2.0),
            &[Complex64::new(1.0, 0.0)],
            0.0,
            3.0,
            &settings,
            &times,
            |t, y| seen.push((t, y[0].re)),
        )
        .unwrap();
        assert_eq!(seen.len(), times.len());
        assert!((y[0].re - (-6.0f64).exp()).abs() < 1e-11);
        for (t, v) in seen {
            // Hermite interpolation is third order; a loose bound suffices.
            assert!((v - (-2.0 * t).exp()).abs() < 1e-7, "t={t}");
        }
        assert!(stats.accepted > 5);
    }

    #[test]
    fn oscillation_stays_on_circle() {
        let settings = Dopri5Settings {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            h0: 1e-2,
            ..Default::default()
        };
        let (y, _) = integrate(
            &Rotation,
            &[Complex64::new(1.0, 0.0)],
            0.0,
            10.0,
            &settings,
            &[],
            |_, _| {},
        )
        .unwrap();
        let exact = Complex64::from_polar(1.0, 10.0);
        assert!((y[0] - exact).norm() < 1e-8);
    }

    #[test]
    fn underflow_is_reported() {
        let settings = Dopri5Settings {
            h0: 1e-20,
            h_min: 1e-15,
            ..Default::default()
        };
        let r = integrate(
            &Decay(1.0),
            &[Complex64::new(1.0, 0.0)],
            0.0,
            1.0,
            &settings,
            &[],
            |_, _| {},
        );
        assert!(matches!(r, Err(IntegratorError::StepSizeUnderflow { .. })));
    }
}
