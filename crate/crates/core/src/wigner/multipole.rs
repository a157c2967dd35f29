//! Multipole operators `T_KQ` of the Dicke space.
//!
//! `T_KQ` has a single nonzero diagonal at offset `Q`. Along that diagonal
//! its entries form an eigenvector of the Casimir superoperator
//! `Σ_a [J_a, [J_a, ·]]` with eigenvalue `K(K+1)`; restricted to one diagonal
//! this is a symmetric tridiagonal matrix, solved by inverse iteration. This
//! avoids the cancellation of the Racah sum, which is unusable beyond
//! `j ≈ 30`. Phases follow Condon–Shortley: `⟨j j; K Q | j j+Q⟩ > 0` for
//! `Q ≤ 0`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dicke::{DensityMatrix, DickeSpace};

/// Orthonormal multipole basis, `Tr(T†_KQ T_K'Q') = δ_KK' δ_QQ'`.
#[derive(Debug, Clone)]
pub struct MultipoleBasis {
    space: DickeSpace,
    /// `diagonals[Q][K − Q]` holds the entries `⟨m+Q|T_KQ|m⟩`, `m` ascending,
    /// for `Q ≥ 0`.
    diagonals: Vec<Vec<Vec<f64>>>,
}

/// One multipole coefficient `ρ_KQ = Tr(ρ T†_KQ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultipoleCoefficient {
    pub k: usize,
    pub q: i64,
    pub re: f64,
    pub im: f64,
}

impl MultipoleCoefficient {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

pub fn multipole_basis(space: DickeSpace) -> MultipoleBasis {
    MultipoleBasis::new(space)
}

impl MultipoleBasis {
    /// Memory grows as `d³/3` doubles (about 30 MB at `N = 200`).
    pub fn new(space: DickeSpace) -> Self {
        let d = space.dim();
        let diagonals = (0..d).into_par_iter().map(|q| diagonal_family(space, q)).collect();
        Self { space, diagonals }
    }

    pub fn space(&self) -> DickeSpace {
        self.space
    }

    /// Largest rank, `K_max = 2j = N`.
    pub fn max_rank(&self) -> usize {
        self.space.dim() - 1
    }

    /// Entries `⟨m+|Q||T_K,|Q|⟩|m⟩` of the positive-`Q` partner.
    fn diag(&self, k: usize, q_abs: usize) -> &[f64] {
        &self.diagonals[q_abs][k - q_abs]
    }

    /// Dense `T_KQ`.
    pub fn matrix(&self, k: usize, q: i64) -> DMatrix<Complex64> {
        let d = self.space.dim();
        assert!(k < d && q.unsigned_abs() as usize <= k, "T_{k},{q} out of range");
        let qa = q.unsigned_abs() as usize;
        let diag = self.diag(k, qa);
        let mut t = DMatrix::zeros(d, d);
        if q >= 0 {
            for (c, &v) in diag.iter().enumerate() {
                t[(c + qa, c)] = Complex64::new(v, 0.0);
            }
        } else {
            // T_{K,−Q} = (−1)^Q T†_KQ
            let sign = if qa % 2 == 0 { 1.0 } else { -1.0 };
            for (c, &v) in diag.iter().enumerate() {
                t[(c, c + qa)] = Complex64::new(sign * v, 0.0);
            }
        }
        t
    }

    /// `ρ_KQ = Tr(ρ T†_KQ)`.
    pub fn coefficient(&self, rho: &DensityMatrix, k: usize, q: i64) -> Complex64 {
        let qa = q.unsigned_abs() as usize;
        let diag = self.diag(k, qa);
        if q >= 0 {
            diag.iter()
                .enumerate()
                .map(|(c, &v)| rho.0[(c + qa, c)] * v)
                .sum()
        } else {
            let sign = if qa % 2 == 0 { 1.0 } else { -1.0 };
            diag.iter()
                .enumerate()
                .map(|(c, &v)| rho.0[(c, c + qa)] * (sign * v))
                .sum()
        }
    }

    /// All coefficients ordered by `K`, then `Q` from `−K` to `K`.
    pub fn coefficients(&self, rho: &DensityMatrix) -> Vec<MultipoleCoefficient> {
        let mut out = Vec::with_capacity(self.space.dim() * self.space.dim());
        for k in 0..self.space.dim() {
            for q in -(k as i64)..=(k as i64) {
                let v = self.coefficient(rho, k, q);
                out.push(MultipoleCoefficient { k, q, re: v.re, im: v.im });
            }
        }
        out
    }
}

/// Upper ladder coefficient `c(m) = √(j(j+1) − m(m+1))` for index `i`.
fn ladder(space: DickeSpace, i: isize) -> f64 {
    let d = space.dim() as isize;
    if i < 0 || i >= d - 1 {
        return 0.0;
    }
    let j = space.j();
    let m = space.m(i as usize);
    (j * (j + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
}

/// Eigenvectors `T_KQ`, `K = Q..=2j`, on the `Q`-th diagonal.
fn diagonal_family(space: DickeSpace, q: usize) -> Vec<Vec<f64>> {
    let d = space.dim();
    let n = d - q;
    let j = space.j();
    let jj = j * (j + 1.0);
    let qf = q as f64;
    // Element (m+Q, m) couples to (m+Q±1, m±1).
    let diag: Vec<f64> = (0..n)
        .map(|c| {
            let m = space.m(c);
            let mp = m + qf;
            (jj - mp * mp) + (jj - m * m) + qf * qf
        })
        .collect();
    let off: Vec<f64> = (0..n.saturating_sub(1))
        .map(|c| -ladder(space, (c + q) as isize) * ladder(space, c as isize))
        .collect();
    (q..d)
        .map(|k| {
            let lambda = (k * (k + 1)) as f64;
            let mut v = inverse_iteration(&diag, &off, lambda);
            // Sign: the top entry (m = j − Q) has sign (−1)^Q.
            let want = if q % 2 == 0 { 1.0 } else { -1.0 };
            if v[n - 1] * want < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            v
        })
        .collect()
}

/// Eigenvector of the symmetric tridiagonal matrix `(diag, off)` for the
/// known eigenvalue `lambda`.
fn inverse_iteration(diag: &[f64], off: &[f64], lambda: f64) -> Vec<f64> {
    let n = diag.len();
    if n == 1 {
        return vec![1.0];
    }
    let scale = diag
        .iter()
        .chain(off)
        .fold(0.0f64, |a, &b| a.max(b.abs()))
        .max(1.0);
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.37 * ((i as f64) * 0.731).sin()).collect();
    let lu = TridiagLu::new(diag, off, lambda, scale * f64::EPSILON);
    for _ in 0..3 {
        lu.solve(&mut x);
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
    }
    x
}

/// LU factorization with partial pivoting of `A − λI` for tridiagonal `A`.
struct TridiagLu {
    /// Rows of U: `u0[i]` diagonal, `u1[i]`, `u2[i]` the two superdiagonals.
    u0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    /// Multipliers and whether row `i` was swapped with `i+1`.
    l: Vec<f64>,
    swap: Vec<bool>,
}

impl TridiagLu {
    fn new(diag: &[f64], off: &[f64], lambda: f64, tiny: f64) -> Self {
        let n = diag.len();
        let mut d: Vec<f64> = diag.iter().map(|x| x - lambda).collect();
        let mut du: Vec<f64> = off.to_vec();
        let dl: Vec<f64> = off.to_vec();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut l = vec![0.0; n.saturating_sub(1)];
        let mut swap = vec![false; n.saturating_sub(1)];
        for i in 0..n - 1 {
            if d[i].abs() >= dl[i].abs() {
                let piv = if d[i] == 0.0 { tiny } else { d[i] };
                d[i] = piv;
                let f = dl[i] / piv;
                l[i] = f;
                d[i + 1] -= f * du[i];
            } else {
                // Swap rows i and i+1.
                let f = d[i] / dl[i];
                swap[i] = true;
                l[i] = f;
                d[i] = dl[i];
                let tmp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = tmp - f * d[i + 1];
                if i + 1 < n - 1 {
                    du2[i] = du[i + 1];
                    du[i + 1] = -f * du[i + 1];
                }
            }
        }
        if d[n - 1] == 0.0 {
            d[n - 1] = tiny;
        }
        Self { u0: d, u1: du, u2: du2, l, swap }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = b.len();
        for i in 0..n - 1 {
            if self.swap[i] {
                b.swap(i, i + 1);
            }
            b[i + 1] -= self.l[i] * b[i];
        }
        b[n - 1] /= self.u0[n - 1];
        if n >= 2 {
            b[n - 2] = (b[n - 2] - self.u1[n - 2] * b[n - 1]) / self.u0[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.u1[i] * b[i + 1] - self.u2[i] * b[i + 2]) / self.u0[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dicke::{coherent_state, collective_operators, density_from_state};
    use crate::wigner::clebsch::{clebsch_gordan, HalfInt};

    fn frob_inner(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Complex64 {
        a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
    }

    #[test]
    fn matches_clebsch_gordan_for_small_spins() {
        for n in 1..=10 {
            let s = DickeSpace::new(n).unwrap();
            let basis = MultipoleBasis::new(s);
            let tj = n as i64;
            let pref_den = (n + 1) as f64;
            for k in 0..=n {
                for q in -(k as i64)..=(k as i64) {
                    let t = basis.matrix(k, q);
                    let pref = ((2 * k + 1) as f64 / pref_den).sqrt();
                    for col in 0..=n {
                        let tm = 2 * col as i64 - tj;
                        let tmp = tm + 2 * q;
                        let expected = pref
                            * clebsch_gordan(
                                HalfInt::from_twice(tj),
                                HalfInt::from_twice(tm),
                                HalfInt::from_int(k as i64),
                                HalfInt::from_int(q),
                                HalfInt::from_twice(tj),
                                HalfInt::from_twice(tmp),
                            );
                        let row = col as i64 + q;
                        let got = if (0..=n as i64).contains(&row) {
                            t[(row as usize, col)].re
                        } else {
                            0.0
                        };
                        assert!(
                            (got - expected).abs() < 1e-12,
                            "N={n} K={k} Q={q} col={col}: {got} vs {expected}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn orthonormal_and_conjugation_symmetric() {
        let s = DickeSpace::new(6).unwrap();
        let basis = MultipoleBasis::new(s);
        let mats: Vec<((usize, i64), DMatrix<Complex64>)> = (0..=6)
            .flat_map(|k| (-(k as i64)..=k as i64).map(move |q| (k, q)))
            .map(|(k, q)| ((k, q), basis.matrix(k, q)))
            .collect();
        for (ka, a) in &mats {
            for (kb, b) in &mats {
                let v = frob_inner(a, b);
                let want = if ka == kb { 1.0 } else { 0.0 };
                assert!((v.re - want).abs() < 1e-10 && v.im.abs() < 1e-12, "{ka:?} {kb:?} {v}");
            }
            let (k, q) = *ka;
            let sign = if q.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            let partner = basis.matrix(k, -q) * Complex64::new(sign, 0.0);
            assert!((a.adjoint() - partner).camax() < 1e-12);
        }
        let t21 = basis.matrix(2, 1);
        assert!((frob_inner(&t21, &t21).re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn low_rank_operators() {
        let s = DickeSpace::new(4).unwrap();
        let basis = MultipoleBasis::new(s);
        let ops = collective_operators(s);
        let t00 = basis.matrix(0, 0);
        let r = 1.0 / 5f64.sqrt();
        for i in 0..5 {
            for k in 0..5 {
                let want = if i == k { r } else { 0.0 };
                assert!((t00[(i, k)].re - want).abs() < 1e-14);
            }
        }
        // T_10 = J_z·√(3/((2j+1) j (j+1))), T_11 = −J₊·√(3/(2(2j+1) j (j+1)))
        let j = s.j();
        let c = (3.0 / ((2.0 * j + 1.0) * j * (j + 1.0))).sqrt();
        let t10 = basis.matrix(1, 0);
        let t11 = basis.matrix(1, 1);
        assert!((t10 - &ops.j_z * Complex64::new(c, 0.0)).camax() < 1e-13);
        assert!((t11 + &ops.j_plus * Complex64::new(c / 2f64.sqrt(), 0.0)).camax() < 1e-13);
    }

    #[test]
    fn large_space_stays_orthonormal() {
        let s = DickeSpace::new(200).unwrap();
        let basis = MultipoleBasis::new(s);
        for q in [0usize, 1, 7, 60] {
            let fam = &basis.diagonals[q];
            for (a, va) in fam.iter().enumerate().step_by(13) {
                for (b, vb) in fam.iter().enumerate().step_by(17) {
                    let dot: f64 = va.iter().zip(vb).map(|(x, y)| x * y).sum();
                    let want = if a == b { 1.0 } else { 0.0 };
                    assert!((dot - want).abs() < 1e-10, "Q={q} {a} {b} {dot}");
                }
            }
        }
    }

    #[test]
    fn coefficients_reconstruct_the_state() {
        let s = DickeSpace::new(5).unwrap();
        let basis = MultipoleBasis::new(s);
        let rho = density_from_state(&coherent_state(s, Complex64::new(0.4, -0.8)).unwrap());
        let mut rebuilt = DMatrix::zeros(6, 6);
        for c in basis.coefficients(&rho) {
            rebuilt += basis.matrix(c.k, c.q) * c.value();
        }
        assert!((rebuilt - &rho.0).camax() < 1e-12);
    }
}
