//! Orthonormal spherical harmonics with the Condon–Shortley phase.

use num_complex::Complex64;
use std::f64::consts::PI;

/// Normalized associated Legendre values `P̄_K^Q(cos θ)` for one fixed
/// `Q ≥ 0` and `K = Q..=k_max`, such that `Y_KQ = P̄_K^Q(cos θ) e^{iQφ}`.
///
/// The seed `P̄_Q^Q ∝ sin^Q θ` is carried in the log domain so that high
/// orders near the poles underflow to zero cleanly instead of poisoning the
/// recurrence.
pub fn legendre_column(q: usize, k_max: usize, theta: f64, out: &mut Vec<f64>) {
    out.clear();
    if q > k_max {
        return;
    }
    let (s, x) = theta.sin_cos();
    let s = s.abs();
    // ln P̄_Q^Q = ½ ln((2Q+1)/(4π) Π (2i−1)/(2i)) + Q ln sin θ
    let mut ln_seed = 0.5 * ((2 * q + 1) as f64 / (4.0 * PI)).ln();
    for i in 1..=q {
        ln_seed += 0.5 * ((2 * i - 1) as f64 / (2 * i) as f64).ln();
    }
    let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
    if q > 0 {
        if s == 0.0 {
            out.resize(k_max - q + 1, 0.0);
            return;
        }
        ln_seed += q as f64 * s.ln();
    }
    // Rescale so that the recurrence starts from a representable number.
    let shift = (-600.0 - ln_seed).max(0.0);
    let unscale = (-shift).exp();
    let mut p_prev = 0.0;
    let mut p_cur = sign * (ln_seed + shift).exp();
    out.push(p_cur * unscale);
    let qf = q as f64;
    for l in q + 1..=k_max {
        let lf = l as f64;
        let next = if l == q + 1 {
            x * (2.0 * qf + 3.0).sqrt() * p_cur
        } else {
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - qf * qf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - qf * qf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            a * (x * p_cur - b * p_prev)
        };
        p_prev = p_cur;
        p_cur = next;
        out.push(p_cur * unscale);
    }
}

/// `Y_KQ(θ, φ)` with `Y_{K,−Q} = (−1)^Q Y*_KQ`.
pub fn spherical_harmonic(k: usize, q: i64, theta: f64, phi: f64) -> Complex64 {
    let qa = q.unsigned_abs() as usize;
    assert!(qa <= k, "|Q| must not exceed K");
    let mut col = Vec::with_capacity(k - qa + 1);
    legendre_column(qa, k, theta, &mut col);
    let p = col[k - qa];
    let y = Complex64::from_polar(1.0, qa as f64 * phi) * p;
    if q >= 0 {
        y
    } else if qa % 2 == 0 {
        y.conj()
    } else {
        -y.conj()
    }
}
