//! Symmetric Dicke subspace of `N` two-level atoms.
//!
//! Basis ordering is ascending in `m`: index 0 is `|j, -j⟩` (all atoms in the
//! ground state), index `N` is `|j, +j⟩`. Coherent states are labelled by
//! `τ = tan(β/2)·e^{-iφ}` with `β = 0` at the ground pole, so `τ = 0` is
//! `|j, -j⟩`. The excited pole `β = π` has no finite `τ` and is rejected.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;


/// Threshold on the squared-norm denominator of a cat superposition.
pub const DEGENERACY_THRESHOLD: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DickeError {
    #[error("number of atoms must be positive")]
    NoAtoms,
    #[error("coherent-state parameter τ = {0} is not finite")]
    NonFiniteTau(Complex64),
    #[error("polar angle β = {0} outside [0, π); the excited pole has no finite τ")]
    PolarAngleOutOfRange(f64),
    #[error("superposition normalization {0:e} below threshold; components cancel")]
    DegenerateSuperposition(f64),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// The `(N+1)`-dimensional `j = N/2` subspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DickeSpace {
    n_atoms: usize,
}

impl DickeSpace {
    pub fn new(n_atoms: usize) -> Result<Self, DickeError> {
        if n_atoms == 0 {
            return Err(DickeError::NoAtoms);
        }
        Ok(Self { n_atoms })
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn dim(&self) -> usize {
        self.n_atoms + 1
    }

    /// `2j`, exact.
    pub fn twice_j(&self) -> usize {
        self.n_atoms
    }

    pub fn j(&self) -> f64 {
        self.n_atoms as f64 / 2.0
    }

    /// Magnetic quantum number of basis index `i`.
    pub fn m(&self, index: usize) -> f64 {
        index as f64 - self.j()
    }

    /// Basis vector `|j, m⟩` for index `i = j + m`.
    pub fn dicke_state(&self, index: usize) -> StateVector {
        let mut v = DVector::zeros(self.dim());
        v[index] = Complex64::new(1.0, 0.0);
        StateVector(v)
    }

    pub fn ground_state(&self) -> StateVector {
        self.dicke_state(0)
    }

    pub fn excited_state(&self) -> StateVector {
        self.dicke_state(self.n_atoms)
    }

    /// Maximally mixed state `1/(2j+1)`.
    pub fn maximally_mixed(&self) -> DensityMatrix {
        let d = self.dim();
        DensityMatrix(DMatrix::from_diagonal_element(
            d,
            d,
            Complex64::new(1.0 / d as f64, 0.0),
        ))
    }
}

/// `J₊`, `J₋`, `J_z` on a Dicke space together with the ladder coefficients
/// they are built from.
#[derive(Debug, Clone)]
pub struct CollectiveOperators {
    space: DickeSpace,
    pub j_plus: DMatrix<Complex64>,
    pub j_minus: DMatrix<Complex64>,
    pub j_z: DMatrix<Complex64>,
    ladder: Vec<f64>,
}

impl CollectiveOperators {
    pub fn new(space: DickeSpace) -> Self {
        let d = space.dim();
        let j = space.j();
        let ladder: Vec<f64> = (0..d - 1)
            .map(|i| {
                let m = space.m(i);
                (j * (j + 1.0) - m * (m + 1.0)).sqrt()
            })
            .collect();
        let mut j_plus = DMatrix::zeros(d, d);
        let mut j_minus = DMatrix::zeros(d, d);
        for (i, &c) in ladder.iter().enumerate() {
            j_plus[(i + 1, i)] = Complex64::new(c, 0.0);
            j_minus[(i, i + 1)] = Complex64::new(c, 0.0);
        }
        let j_z = DMatrix::from_diagonal(&DVector::from_fn(d, |i, _| {
            Complex64::new(space.m(i), 0.0)
        }));
        Self {
            space,
            j_plus,
            j_minus,
            j_z,
            ladder,
        }
    }

    pub fn space(&self) -> DickeSpace {
        self.space
    }

    /// `c_i = ⟨i+1|J₊|i⟩ = √(j(j+1) − m(m+1))`, length `dim − 1`.
    pub fn ladder(&self) -> &[f64] {
        &self.ladder
    }

    /// Diagonal of `J₊J₋`: entry `i` is `c_{i−1}²` (0 at the ground state).
    pub fn jp_jm_diagonal(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.space.dim()];
        for (i, c) in self.ladder.iter().enumerate() {
            v[i + 1] = c * c;
        }
        v
    }

    /// Diagonal of `J₋J₊`: entry `i` is `c_i²` (0 at the top state).
    pub fn jm_jp_diagonal(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.space.dim()];
        for (i, c) in self.ladder.iter().enumerate() {
            v[i] = c * c;
        }
        v
    }
}

pub fn collective_operators(space: DickeSpace) -> CollectiveOperators {
    CollectiveOperators::new(space)
}

/// Pure state over the Dicke basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(pub DVector<Complex64>);

impl StateVector {
    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm_squared(&self) -> f64 {
        self.0.norm_squared()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.0.dotc(&other.0)
    }

    /// Euclidean distance between amplitude vectors.
    pub fn distance(&self, other: &StateVector) -> f64 {
        (&self.0 - &other.0).norm()
    }

    /// Expectation value `⟨ψ|A|ψ⟩`.
    pub fn expectation(&self, op: &DMatrix<Complex64>) -> Complex64 {
        self.0.dotc(&(op * &self.0))
    }
}

/// Mixed state over the Dicke basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(pub DMatrix<Complex64>);

impl DensityMatrix {
    pub fn from_matrix(m: DMatrix<Complex64>) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    /// `Tr ρ²`, using Hermiticity: `Σ |ρ_ij|²`.
    pub fn purity(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `max |ρ − ρ†|` elementwise.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for q in 0..d {
            for p in q..d {
                let e = (self.0[(p, q)] - self.0[(q, p)].conj()).norm();
                worst = worst.max(e);
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.0 + self.0.adjoint()) * Complex64::new(0.5, 0.0);
        herm.symmetric_eigenvalues().min()
    }

    /// `max |ρ − σ|` elementwise.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Checks the Hermiticity, trace and positivity tolerances of a physical
    /// state. Returns the first violated condition as text.
    pub fn check_physical(&self) -> Result<(), String> {
        let h = self.hermiticity_error();
        if h > 1e-12 {
            return Err(format!("not Hermitian: max |ρ − ρ†| = {h:e}"));
        }
        let t = self.trace();
        if (t - 1.0).norm() > 1e-10 {
            return Err(format!("trace {t} differs from 1"));
        }
        let e = self.min_eigenvalue();
        if e < -1e-8 {
            return Err(format!("negative eigenvalue {e:e}"));
        }
        Ok(())
    }
}

/// Parameters of a two- or four-component cat.
#[derive(Debug, Clone, PartialEq)]
pub struct CatSpec {
    taus: Vec<Complex64>,
}

impl CatSpec {
    pub fn new(taus: Vec<Complex64>) -> Result<Self, DickeError> {
        for &t in &taus {
            check_tau(t)?;
        }
        Ok(Self { taus })
    }

    /// Builds the spec from `(β, φ)` pairs.
    pub fn from_angles(angles: &[(f64, f64)]) -> Result<Self, DickeError> {
        let taus = angles
            .iter()
            .map(|&(b, p)| tau_from_angles(b, p))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { taus })
    }

    pub fn taus(&self) -> &[Complex64] {
        &self.taus
    }

    pub fn state(&self, space: DickeSpace) -> Result<StateVector, DickeError> {
        superposition(space, &self.taus)
    }
}

/// `τ = tan(β/2)·e^{-iφ}` for `β ∈ [0, π)`.
pub fn tau_from_angles(beta: f64, phi: f64) -> Result<Complex64, DickeError> {
    if !(0.0..std::f64::consts::PI).contains(&beta) {
        return Err(DickeError::PolarAngleOutOfRange(beta));
    }
    let r = (beta / 2.0).tan();
    Ok(Complex64::from_polar(r, -phi))
}

/// Inverse of [`tau_from_angles`]: `(β, φ)` with `φ ∈ [0, 2π)`.
pub fn angles_from_tau(tau: Complex64) -> (f64, f64) {
    let beta = 2.0 * tau.norm().atan();
    let phi = (-tau.arg()).rem_euclid(2.0 * std::f64::consts::PI);
    (beta, phi)
}

fn check_tau(tau: Complex64) -> Result<(), DickeError> {
    if tau.re.is_finite() && tau.im.is_finite() {
        Ok(())
    } else {
        Err(DickeError::NonFiniteTau(tau))
    }
}

/// Atomic coherent state `|τ⟩`.
///
/// With `p = |τ|²/(1+|τ|²)` and `q = 1 − p`, the magnitudes are
/// `exp(½[ln C(2j, k) + k ln p + (2j−k) ln q])`, so every term stays small
/// near the peak of the distribution. The binomial is built up by ratios and
/// the phase `e^{ik arg τ}` is applied separately.
pub fn coherent_state(space: DickeSpace, tau: Complex64) -> Result<StateVector, DickeError> {
    check_tau(tau)?;
    Ok(coherent_state_unchecked(space, tau))
}

fn coherent_state_unchecked(space: DickeSpace, tau: Complex64) -> StateVector {
    let n = space.n_atoms();
    let mut v = DVector::zeros(space.dim());
    let r2 = tau.norm_sqr();
    if r2 == 0.0 {
        v[0] = Complex64::new(1.0, 0.0);
        return StateVector(v);
    }
    let ln_p = -(1.0 / r2).ln_1p();
    let ln_q = -r2.ln_1p();
    let arg = tau.arg();
    let mut ln_binom = 0.0;
    for k in 0..=n {
        let ln_mag = 0.5 * (ln_binom + k as f64 * ln_p + (n - k) as f64 * ln_q);
        v[k] = Complex64::from_polar(ln_mag.exp(), k as f64 * arg);
        if k < n {
            ln_binom += ((n - k) as f64 / (k + 1) as f64).ln();
        }
    }
    StateVector(v)
}

/// `⟨τ₁|τ₂⟩ = (1 + τ̄₁τ₂)^{2j} / ((1+|τ₁|²)(1+|τ₂|²))^j`, evaluated in the
/// log domain.
pub fn overlap(space: DickeSpace, tau1: Complex64, tau2: Complex64) -> Complex64 {
    let z = Complex64::new(1.0, 0.0) + tau1.conj() * tau2;
    if z.norm() == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let n = space.n_atoms() as f64;
    let denom = space.j() * ((tau1.norm_sqr()).ln_1p() + (tau2.norm_sqr()).ln_1p());
    let w = z.ln() * n;
    Complex64::from_polar((w.re - denom).exp(), w.im)
}

/// Normalized equal-weight superposition `Σ|τ_i⟩ / ‖Σ|τ_i⟩‖`, with the norm
/// taken from the analytic overlaps.
fn superposition(space: DickeSpace, taus: &[Complex64]) -> Result<StateVector, DickeError> {
    for &t in taus {
        check_tau(t)?;
    }
    let mut sum = DVector::zeros(space.dim());
    for &t in taus {
        sum += coherent_state_unchecked(space, t).0;
    }
    let mut denom = taus.len() as f64;
    for (i, &ti) in taus.iter().enumerate() {
        for &tk in &taus[..i] {
            denom += 2.0 * overlap(space, ti, tk).re;
        }
    }
    if denom <= DEGENERACY_THRESHOLD {
        return Err(DickeError::DegenerateSuperposition(denom));
    }
    sum /= Complex64::new(denom.sqrt(), 0.0);
    Ok(StateVector(sum))
}

/// Two-component cat `(|τ₁⟩ + |τ₂⟩)/√(2(1 + Re⟨τ₁|τ₂⟩))`.
pub fn cat_state(
    space: DickeSpace,
    tau1: Complex64,
    tau2: Complex64,
) -> Result<StateVector, DickeError> {
    superposition(space, &[tau1, tau2])
}

/// Four-component cat normalized by `2(2 + Re Σ_{i>k}⟨τ_i|τ_k⟩)`.
pub fn four_cat_state(space: DickeSpace, taus: [Complex64; 4]) -> Result<StateVector, DickeError> {
    superposition(space, &taus)
}

/// Vertices `A, B, C, D` of a regular tetrahedron inscribed in the unit
/// sphere, edge `AB` along `z` and edge `CD` along `y`.
pub fn tetrahedron_points() -> [[f64; 3]; 4] {
    let a = 1.0 / 3f64.sqrt();
    let b = (2.0f64 / 3.0).sqrt();
    [[-a, 0.0, b], [-a, 0.0, -b], [a, b, 0.0], [a, -b, 0.0]]
}

/// `(β, φ)` of a unit Bloch vector. `β` is measured from the ground pole
/// (`−z`), so the point `(0, 0, −1)` is `|j, −j⟩`.
pub fn bloch_angles(p: [f64; 3]) -> (f64, f64) {
    let beta = (-p[2]).clamp(-1.0, 1.0).acos();
    let phi = p[1].atan2(p[0]).rem_euclid(2.0 * std::f64::consts::PI);
    (beta, phi)
}

/// Unit Bloch vector for `(β, φ)`; inverse of [`bloch_angles`].
pub fn bloch_vector(beta: f64, phi: f64) -> [f64; 3] {
    [beta.sin() * phi.cos(), beta.sin() * phi.sin(), -beta.cos()]
}

/// `τ` parameters of the tetrahedron vertices in the order `A, B, C, D`;
/// `A, B` form the symmetric pair.
pub fn tetrahedron_taus() -> [Complex64; 4] {
    tetrahedron_points().map(|p| {
        let (beta, phi) = bloch_angles(p);
        Complex64::from_polar((beta / 2.0).tan(), -phi)
    })
}

/// `½(|τ₁⟩⟨τ₁| + |τ₂⟩⟨τ₂|)`.
pub fn classical_mixture(
    space: DickeSpace,
    tau1: Complex64,
    tau2: Complex64,
) -> Result<DensityMatrix, DickeError> {
    let a = density_from_state(&coherent_state(space, tau1)?);
    let b = density_from_state(&coherent_state(space, tau2)?);
    Ok(DensityMatrix((a.0 + b.0) * Complex64::new(0.5, 0.0)))
}

/// Equal mixture of the projectors onto each `|τ_i⟩`.
pub fn classical_mixture_of(space: DickeSpace, taus: &[Complex64]) -> Result<DensityMatrix, DickeError> {
    let mut acc = DMatrix::zeros(space.dim(), space.dim());
    for &t in taus {
        acc += density_from_state(&coherent_state(space, t)?).0;
    }
    Ok(DensityMatrix(acc / Complex64::new(taus.len() as f64, 0.0)))
}

/// `|ψ⟩⟨ψ|`.
pub fn density_from_state(psi: &StateVector) -> DensityMatrix {
    DensityMatrix(&psi.0 * psi.0.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn comm(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        a * b - b * a
    }

    #[test]
    fn space_bookkeeping() {
        let s = DickeSpace::new(5).unwrap();
        assert_eq!(s.dim(), 6);
        assert_eq!(s.j(), 2.5);
        assert_eq!(s.m(0), -2.5);
        assert_eq!(s.m(5), 2.5);
        assert_eq!(DickeSpace::new(0), Err(DickeError::NoAtoms));
    }

    #[test]
    fn spin_half_raising_operator() {
        let ops = collective_operators(DickeSpace::new(1).unwrap());
        let expected = DMatrix::from_row_slice(2, 2, &[c(0.0), c(0.0), c(1.0), c(0.0)]);
        assert!((&ops.j_plus - expected).norm() < 1e-15);
    }

    #[test]
    fn spin_one_jz_diagonal() {
        let ops = collective_operators(DickeSpace::new(2).unwrap());
        let d: Vec<f64> = ops.j_z.diagonal().iter().map(|z| z.re).collect();
        assert_eq!(d, vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn commutation_relations_hold() {
        for n in [1, 2, 7, 50, 120] {
            let ops = collective_operators(DickeSpace::new(n).unwrap());
            let lhs = comm(&ops.j_plus, &ops.j_minus) - &ops.j_z * c(2.0);
            assert!(lhs.camax() < 1e-12, "N={n}: {}", lhs.camax());
            let lhs = comm(&ops.j_z, &ops.j_plus) - &ops.j_plus;
            assert!(lhs.camax() < 1e-12);
            assert_eq!(ops.j_minus, ops.j_plus.adjoint());
        }
    }

    #[test]
    fn coherent_state_examples() {
        let s1 = DickeSpace::new(1).unwrap();
        let g = coherent_state(s1, c(0.0)).unwrap();
        assert_eq!(g.0[0], c(1.0));
        assert_eq!(g.0[1], c(0.0));

        let s2 = DickeSpace::new(2).unwrap();
        let v = coherent_state(s2, c(1.0)).unwrap();
        let expected = [0.5, 1.0 / 2f64.sqrt(), 0.5];
        for (a, e) in v.0.iter().zip(expected) {
            assert!((a - c(e)).norm() < 1e-15);
        }
    }

    #[test]
    fn coherent_state_energy_matches_closed_form() {
        // Brute-force contraction of the amplitudes against the closed form
        // ⟨J_z⟩ = −j cos β.
        let s = DickeSpace::new(50).unwrap();
        let ops = collective_operators(s);
        let psi = coherent_state(s, c((PI / 8.0).tan())).unwrap();
        let jz = psi.expectation(&ops.j_z).re;
        let brute: f64 = psi
            .0
            .iter()
            .enumerate()
            .map(|(i, a)| a.norm_sqr() * s.m(i))
            .sum();
        assert!((jz - brute).abs() < 1e-12);
        assert!((jz + 25.0 * (PI / 4.0).cos()).abs() < 1e-10, "{jz}");
        assert!((jz + 17.677_669_529_663_69).abs() < 1e-9);
    }

    #[test]
    fn large_n_coherent_state_is_normalized() {
        let s = DickeSpace::new(1000).unwrap();
        for tau in [c(0.3), Complex64::new(1.0, -2.0), c(40.0)] {
            let psi = coherent_state(s, tau).unwrap();
            assert!((psi.norm_squared() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn non_finite_tau_is_rejected() {
        let s = DickeSpace::new(3).unwrap();
        assert!(matches!(
            coherent_state(s, Complex64::new(f64::INFINITY, 0.0)),
            Err(DickeError::NonFiniteTau(_))
        ));
        assert!(matches!(
            tau_from_angles(PI, 0.0),
            Err(DickeError::PolarAngleOutOfRange(_))
        ));
    }

    #[test]
    fn overlap_examples() {
        let s4 = DickeSpace::new(4).unwrap();
        let direct = coherent_state(s4, c(0.0))
            .unwrap()
            .inner(&coherent_state(s4, c(1.0)).unwrap());
        assert!((direct - c(0.25)).norm() < 1e-15);
        assert!((overlap(s4, c(0.0), c(1.0)) - c(0.25)).norm() < 1e-15);

        let s2 = DickeSpace::new(2).unwrap();
        let direct = coherent_state(s2, c(1.0))
            .unwrap()
            .inner(&coherent_state(s2, c(-1.0)).unwrap());
        assert!(direct.norm() < 1e-15);
        assert_eq!(overlap(s2, c(1.0), c(-1.0)), c(0.0));

        let t = Complex64::new(0.4, 0.7);
        assert!((overlap(s4, t, t) - c(1.0)).norm() < 1e-14);
    }

    #[test]
    fn overlap_matches_amplitude_inner_product() {
        let s = DickeSpace::new(30).unwrap();
        let taus = [
            Complex64::new(0.2, 0.1),
            Complex64::new(-0.5, 0.9),
            Complex64::new(1.3, -0.4),
            c(0.8),
        ];
        for &a in &taus {
            for &b in &taus {
                let direct = coherent_state(s, a)
                    .unwrap()
                    .inner(&coherent_state(s, b).unwrap());
                let closed = overlap(s, a, b);
                assert!(
                    (direct - closed).norm() <= 1e-12 * direct.norm() + 1e-14,
                    "{a} {b}: {direct} vs {closed}"
                );
                assert_eq!(overlap(s, a, b), overlap(s, b, a).conj());
            }
        }
    }

    #[test]
    fn cat_examples() {
        let s2 = DickeSpace::new(2).unwrap();
        let cat = cat_state(s2, c(1.0), c(1.0)).unwrap();
        let coh = coherent_state(s2, c(1.0)).unwrap();
        assert!(cat.distance(&coh) < 1e-15);

        let s500 = DickeSpace::new(500).unwrap();
        let cat = cat_state(s500, c((PI / 4.0).tan()), c(0.0)).unwrap();
        assert!((cat.norm_squared() - 1.0).abs() < 1e-12);

        // Equal-weight sums of coherent states always keep a positive ground
        // amplitude, so only an empty sum reaches the guard.
        let err = superposition(s2, &[]).unwrap_err();
        assert!(matches!(err, DickeError::DegenerateSuperposition(_)));
    }

    #[test]
    fn cat_is_continuous_in_second_component() {
        let s = DickeSpace::new(40).unwrap();
        let t = Complex64::new(0.6, 0.2);
        let cat = cat_state(s, t, t + Complex64::new(1e-6, 0.0)).unwrap();
        let coh = coherent_state(s, t).unwrap();
        assert!(cat.distance(&coh) < 1e-5);
    }

    #[test]
    fn four_cat_examples() {
        let s = DickeSpace::new(6).unwrap();
        let t = Complex64::new(0.3, -0.2);
        let cat = four_cat_state(s, [t; 4]).unwrap();
        assert!(cat.distance(&coherent_state(s, t).unwrap()) < 1e-14);

        let s50 = DickeSpace::new(50).unwrap();
        let cat = four_cat_state(s50, tetrahedron_taus()).unwrap();
        assert!((cat.norm_squared() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn four_cat_orthogonal_limit() {
        // Four points on the sphere cannot all be further apart than the
        // tetrahedron, so at N = 20 the overlaps stay near 1.7e-5 and the
        // squared norm of the unnormalized sum is 4 + 2 Σ Re⟨τ_i|τ_k⟩.
        let s = DickeSpace::new(20).unwrap();
        let taus = tetrahedron_taus();
        let mut sum = DVector::zeros(s.dim());
        let mut expected = 4.0;
        for i in 0..4 {
            sum += coherent_state(s, taus[i]).unwrap().0;
            for k in 0..i {
                expected += 2.0 * overlap(s, taus[i], taus[k]).re;
            }
        }
        assert!((sum.norm_squared() - expected).abs() < 1e-12);
        assert!((sum.norm() - 2.0).abs() < 1e-4);
        // At N = 200 the overlaps are far below 1e-10.
        let s = DickeSpace::new(200).unwrap();
        let taus = tetrahedron_taus();
        let mut max_overlap: f64 = 0.0;
        let mut sum = DVector::zeros(s.dim());
        for i in 0..4 {
            sum += coherent_state(s, taus[i]).unwrap().0;
            for k in 0..i {
                max_overlap = max_overlap.max(overlap(s, taus[i], taus[k]).norm());
            }
        }
        assert!(max_overlap < 1e-10, "{max_overlap}");
        assert!((sum.norm() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn tetrahedron_geometry() {
        let pts = tetrahedron_points();
        let mut chords = vec![];
        for i in 0..4 {
            assert!((pts[i].iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-15);
            for k in 0..i {
                let d: f64 = (0..3).map(|a| (pts[i][a] - pts[k][a]).powi(2)).sum();
                chords.push(d.sqrt());
            }
        }
        for ch in &chords {
            assert!((ch - chords[0]).abs() < 1e-12);
        }
        let taus = tetrahedron_taus();
        let (ba, pa) = angles_from_tau(taus[0]);
        let (bb, pb) = angles_from_tau(taus[1]);
        assert!((ba + bb - PI).abs() < 1e-12);
        assert!((pa - pb).abs() < 1e-12);
        // edge C−D parallel to y
        assert_eq!(pts[2][0] - pts[3][0], 0.0);
        assert_eq!(pts[2][2] - pts[3][2], 0.0);
        // edge A−B parallel to z
        assert_eq!(pts[0][0] - pts[1][0], 0.0);
        assert_eq!(pts[0][1] - pts[1][1], 0.0);
    }

    #[test]
    fn coherent_state_points_along_bloch_vector() {
        let s = DickeSpace::new(20).unwrap();
        let ops = collective_operators(s);
        let (beta, phi) = (1.1, 2.3);
        let psi = coherent_state(s, tau_from_angles(beta, phi).unwrap()).unwrap();
        let jp = psi.expectation(&ops.j_plus);
        let jz = psi.expectation(&ops.j_z).re;
        let v = bloch_vector(beta, phi);
        let j = s.j();
        assert!((jp.re - j * v[0]).abs() < 1e-10);
        assert!((jp.im - j * v[1]).abs() < 1e-10);
        assert!((jz - j * v[2]).abs() < 1e-10);
    }

    #[test]
    fn mixture_examples() {
        let s = DickeSpace::new(8).unwrap();
        let t = Complex64::new(0.5, 0.5);
        let rho = classical_mixture(s, t, t).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-12);

        // τ = 1 and τ = −1 are antipodal on the equator, hence orthogonal.
        let s2 = DickeSpace::new(2).unwrap();
        let rho = classical_mixture(s2, c(1.0), c(-1.0)).unwrap();
        assert!((1.0 - rho.purity() - 0.5).abs() < 1e-14);

        let s500 = DickeSpace::new(500).unwrap();
        let rho = classical_mixture(s500, c((PI / 4.0).tan()), c(0.0)).unwrap();
        assert!((rho.trace() - c(1.0)).norm() < 1e-10);
    }

    #[test]
    fn density_from_state_examples() {
        let s = DickeSpace::new(4).unwrap();
        let rho = density_from_state(&s.ground_state());
        assert_eq!(rho.0[(0, 0)], c(1.0));
        assert_eq!(rho.0.iter().filter(|z| z.norm() > 0.0).count(), 1);

        let s2 = DickeSpace::new(2).unwrap();
        let psi = cat_state(s2, c(1.0), c(0.0)).unwrap();
        let rho = density_from_state(&psi);
        assert!((rho.purity() - 1.0).abs() < 1e-10);
        for p in 0..3 {
            for q in 0..3 {
                let brute = psi.0[p] * psi.0[q].conj();
                assert!((rho.0[(p, q)] - brute).norm() < 1e-15);
            }
        }
        rho.check_physical().unwrap();
    }
}
