//! Log-factorial table and Gauss–Legendre quadrature nodes.
//!
//! The factorial table is the single source for every factorial-heavy
//! formula in the crate (binomial amplitudes of coherent states and the
//! Racah sum for Clebsch–Gordan coefficients).

/// Table of `ln(n!)` for `n = 0..len`.
#[derive(Debug, Clone)]
pub struct LogFactorials {
    table: Vec<f64>,
}

impl LogFactorials {
    /// Builds a table covering `0..=max_n`.
    pub fn new(max_n: usize) -> Self {
        let mut table = Vec::with_capacity(max_n + 1);
        table.push(0.0);
        // Compensated summation keeps the error at the rounding floor of
        // the running total.
        let mut acc = 0.0f64;
        let mut carry = 0.0f64;
        for k in 1..=max_n {
            let y = (k as f64).ln() - carry;
            let t = acc + y;
            carry = (t - acc) - y;
            acc = t;
            table.push(acc);
        }
        Self { table }
    }

    /// Table sized for a Dicke space of `n_atoms` atoms (`4N + 1` entries).
    pub fn for_atoms(n_atoms: usize) -> Self {
        Self::new(4 * n_atoms + 1)
    }

    pub fn max_n(&self) -> usize {
        self.table.len() - 1
    }

    /// `ln(n!)`. Panics if `n` exceeds the table.
    #[inline]
    pub fn ln_factorial(&self, n: usize) -> f64 {
        self.table[n]
    }

    /// `ln C(n, k)`; `-inf` when `k > n`.
    #[inline]
    pub fn ln_binomial(&self, n: usize, k: usize) -> f64 {
        if k > n {
            return f64::NEG_INFINITY;
        }
        self.table[n] - self.table[k] - self.table[n - k]
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = (n + 1) / 2;
    for i in 0..half {
        // Tricomi initial guess for the i-th largest root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_factorials_are_exact() {
        let t = LogFactorials::new(10);
        assert!((t.ln_factorial(5) - 120f64.ln()).abs() < 1e-14);
        assert!((t.ln_binomial(10, 3) - 120f64.ln()).abs() < 1e-13);
        assert_eq!(t.ln_binomial(3, 4), f64::NEG_INFINITY);
    }

    #[test]
    fn large_binomial_stays_finite() {
        let t = LogFactorials::for_atoms(1000);
        let v = t.ln_binomial(1000, 500);
        assert!((v - 689.467_261_567_851).abs() < 1e-10, "{v}");
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(12);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        // ∫ x^22 dx over [-1,1] = 2/23, degree 22 ≤ 2n-1
        let p: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(22)).sum();
        assert!((p - 2.0 / 23.0).abs() < 1e-14);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }
}
