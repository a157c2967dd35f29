//! Wigner function on a (θ, φ) grid, its export, and fringe metrics.
//!
//! The grid polar angle is the Bloch angle β measured from the ground pole
//! `|j, −j⟩`, so the ground state sits at θ = 0 and dissipation moves
//! features towards smaller θ. Harmonics are evaluated at the standard polar
//! angle π − θ.

use std::f64::consts::PI;
use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::harmonics::legendre_column;
use super::multipole::{MultipoleBasis, MultipoleCoefficient};
use crate::dicke::{bloch_angles, bloch_vector, DensityMatrix};

/// Largest tolerated imaginary part of the evaluated Wigner function.
pub const IMAGINARY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WignerError {
    #[error("density matrix has dimension {found}, basis expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("Wigner function has imaginary residue {0:e}")]
    ImaginaryResidue(f64),
    #[error("grid needs at least 2 polar and 1 azimuthal samples")]
    EmptyGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum GridSpec {
    /// θ at `n_theta` evenly spaced points covering `[0, π]`, φ at `n_phi`
    /// points `2πk/n_phi`.
    Uniform { n_theta: usize, n_phi: usize },
    /// θ at Gauss–Legendre nodes in cos θ, φ uniform.
    GaussLegendre { n_theta: usize, n_phi: usize },
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Uniform {
            n_theta: 181,
            n_phi: 181,
        }
    }
}

impl GridSpec {
    pub fn shape(&self) -> (usize, usize) {
        match *self {
            GridSpec::Uniform { n_theta, n_phi } | GridSpec::GaussLegendre { n_theta, n_phi } => {
                (n_theta, n_phi)
            }
        }
    }

    /// Polar samples and, for Gauss–Legendre grids, their weights in cos θ.
    fn thetas(&self) -> (Vec<f64>, Option<Vec<f64>>) {
        match *self {
            GridSpec::Uniform { n_theta, .. } => {
                let step = PI / (n_theta - 1) as f64;
                ((0..n_theta).map(|i| i as f64 * step).collect(), None)
            }
            GridSpec::GaussLegendre { n_theta, .. } => {
                let (x, w) = crate::special::gauss_legendre(n_theta);
                // Ascending x ↔ ascending θ = arccos(−x).
                (x.iter().map(|x| (-x).acos()).collect(), Some(w))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub n_atoms: usize,
    pub spec: GridSpec,
    pub thetas: Vec<f64>,
    pub phis: Vec<f64>,
    /// Row-major: `values[i * n_phi + k]` at `(thetas[i], phis[k])`.
    pub values: Vec<f64>,
    pub coefficients: Vec<MultipoleCoefficient>,
    pub max_imaginary: f64,
    theta_weights: Option<Vec<f64>>,
}

/// `W(θ, φ) = Σ_KQ ρ_KQ Y_KQ(π − θ, φ)` on the requested grid.
pub fn wigner_function(
    rho: &DensityMatrix,
    basis: &MultipoleBasis,
    spec: GridSpec,
) -> Result<WignerGrid, WignerError> {
    let d = basis.space().dim();
    if rho.dim() != d {
        return Err(WignerError::DimensionMismatch {
            expected: d,
            found: rho.dim(),
        });
    }
    let (n_theta, n_phi) = spec.shape();
    if n_theta < 2 || n_phi < 1 {
        return Err(WignerError::EmptyGrid);
    }
    let k_max = basis.max_rank();
    let coefficients = basis.coefficients(rho);
    // coefficients are ordered so that (K, Q) sits at K² + K + Q.
    let at = |k: usize, q: usize| coefficients[k * k + k + q].value();
    let at_neg = |k: usize, q: usize| coefficients[k * k + k - q].value();
    let (thetas, theta_weights) = spec.thetas();
    let phis: Vec<f64> = (0..n_phi).map(|k| 2.0 * PI * k as f64 / n_phi as f64).collect();
    let rows: Vec<(Vec<f64>, f64)> = thetas
        .par_iter()
        .map(|&theta| {
            let std_theta = PI - theta;
            let mut col = Vec::with_capacity(k_max + 1);
            let mut f_pos = vec![Complex64::new(0.0, 0.0); k_max + 1];
            let mut f_neg = vec![Complex64::new(0.0, 0.0); k_max + 1];
            for q in 0..=k_max {
                legendre_column(q, k_max, std_theta, &mut col);
                let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
                for (i, &p) in col.iter().enumerate() {
                    let k = q + i;
                    f_pos[q] += at(k, q) * p;
                    if q > 0 {
                        f_neg[q] += at_neg(k, q) * (sign * p);
                    }
                }
            }
            let mut worst: f64 = 0.0;
            let row = phis
                .iter()
                .map(|&phi| {
                    let mut w = f_pos[0];
                    for q in 1..=k_max {
                        let e = Complex64::from_polar(1.0, q as f64 * phi);
                        w += f_pos[q] * e + f_neg[q] * e.conj();
                    }
                    worst = worst.max(w.im.abs());
                    w.re
                })
                .collect();
            (row, worst)
        })
        .collect();
    let mut values = Vec::with_capacity(n_theta * n_phi);
    let mut max_imaginary: f64 = 0.0;
    for (row, worst) in rows {
        values.extend(row);
        max_imaginary = max_imaginary.max(worst);
    }
    if max_imaginary > IMAGINARY_TOLERANCE {
        return Err(WignerError::ImaginaryResidue(max_imaginary));
    }
    Ok(WignerGrid {
        n_atoms: basis.space().n_atoms(),
        spec,
        thetas,
        phis,
        values,
        coefficients,
        max_imaginary,
        theta_weights,
    })
}

/// Metadata written next to an exported grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerMetadata {
    pub n_atoms: usize,
    pub n_bar: f64,
    pub gamma_t: f64,
    pub n_theta: usize,
    pub n_phi: usize,
    pub grid: GridSpec,
    pub theta_convention: String,
    pub max_imaginary: f64,
    pub coefficients: Vec<MultipoleCoefficient>,
}

pub const THETA_CONVENTION: &str =
    "theta is the Bloch angle from the ground pole |j,-j> (theta = 0 is down)";

impl WignerGrid {
    pub fn shape(&self) -> (usize, usize) {
        (self.thetas.len(), self.phis.len())
    }

    pub fn value(&self, i_theta: usize, i_phi: usize) -> f64 {
        self.values[i_theta * self.phis.len() + i_phi]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// `∫ W dΩ`: exact product rule on Gauss–Legendre grids, trapezoid in θ
    /// with the `sin θ` Jacobian on uniform grids.
    pub fn integrate(&self) -> f64 {
        let (nt, np) = self.shape();
        let dphi = 2.0 * PI / np as f64;
        let row_sum = |i: usize| self.values[i * np..(i + 1) * np].iter().sum::<f64>() * dphi;
        match &self.theta_weights {
            Some(w) => (0..nt).map(|i| w[i] * row_sum(i)).sum(),
            None => {
                let dt = self.thetas[1] - self.thetas[0];
                (0..nt)
                    .map(|i| {
                        let end = if i == 0 || i == nt - 1 { 0.5 } else { 1.0 };
                        end * dt * self.thetas[i].sin() * row_sum(i)
                    })
                    .sum()
            }
        }
    }

    /// Bilinear interpolation, periodic in φ and clamped in θ.
    pub fn interpolate(&self, theta: f64, phi: f64) -> f64 {
        let (nt, np) = self.shape();
        let th = theta.clamp(self.thetas[0], self.thetas[nt - 1]);
        let i = self.thetas.partition_point(|&t| t <= th).clamp(1, nt - 1) - 1;
        let span = self.thetas[i + 1] - self.thetas[i];
        let u = if span > 0.0 { (th - self.thetas[i]) / span } else { 0.0 };
        let dphi = 2.0 * PI / np as f64;
        let x = phi.rem_euclid(2.0 * PI) / dphi;
        let k0 = (x.floor() as usize) % np;
        let k1 = (k0 + 1) % np;
        let v = x - x.floor();
        let a = self.value(i, k0) * (1.0 - v) + self.value(i, k1) * v;
        let b = self.value(i + 1, k0) * (1.0 - v) + self.value(i + 1, k1) * v;
        a * (1.0 - u) + b * u
    }

    /// Grid point with the largest value: `(θ, φ, W)`.
    pub fn argmax(&self) -> (f64, f64, f64) {
        let np = self.phis.len();
        let (idx, w) = self
            .values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |a, (i, v)| if v > a.1 { (i, v) } else { a });
        (self.thetas[idx / np], self.phis[idx % np], w)
    }

    /// CSV with header `theta,phi,w`, one row per grid point.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "theta,phi,w")?;
        let np = self.phis.len();
        for (i, &th) in self.thetas.iter().enumerate() {
            for (k, &ph) in self.phis.iter().enumerate() {
                writeln!(out, "{:.16e},{:.16e},{:.16e}", th, ph, self.values[i * np + k])?;
            }
        }
        Ok(())
    }

    pub fn metadata(&self, n_bar: f64, gamma_t: f64) -> WignerMetadata {
        let (n_theta, n_phi) = self.shape();
        WignerMetadata {
            n_atoms: self.n_atoms,
            n_bar,
            gamma_t,
            n_theta,
            n_phi,
            grid: self.spec,
            theta_convention: THETA_CONVENTION.to_string(),
            max_imaginary: self.max_imaginary,
            coefficients: self.coefficients.clone(),
        }
    }
}

/// Great-circle arc between two Bloch-sphere points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub from: [f64; 3],
    pub to: [f64; 3],
}

/// Region around the middle of an arc where interference fringes of the two
/// end lobes live. Fringes run across the arc, so the band extends
/// `half_width` radians to both sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeBand {
    pub start: f64,
    pub end: f64,
    pub half_width: f64,
    pub n_along: usize,
    pub n_across: usize,
}

impl Default for FringeBand {
    fn default() -> Self {
        Self {
            start: 0.3,
            end: 0.7,
            half_width: 0.3,
            n_along: 64,
            n_across: 25,
        }
    }
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn normalized(a: [f64; 3]) -> [f64; 3] {
    let n = dot(a, a).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}

impl Arc {
    pub fn new(from: [f64; 3], to: [f64; 3]) -> Self {
        Self {
            from: normalized(from),
            to: normalized(to),
        }
    }

    pub fn angle(&self) -> f64 {
        dot(self.from, self.to).clamp(-1.0, 1.0).acos()
    }

    /// Point at arc fraction `s`, displaced by `offset` radians along the
    /// normal of the arc's plane.
    pub fn point(&self, s: f64, offset: f64) -> [f64; 3] {
        let omega = self.angle();
        let (a, b) = if omega.sin().abs() < 1e-12 {
            (1.0 - s, s)
        } else {
            (((1.0 - s) * omega).sin() / omega.sin(), (s * omega).sin() / omega.sin())
        };
        let p = normalized([
            a * self.from[0] + b * self.to[0],
            a * self.from[1] + b * self.to[1],
            a * self.from[2] + b * self.to[2],
        ]);
        if offset == 0.0 {
            return p;
        }
        let n = normalized(cross(self.from, self.to));
        let (so, co) = offset.sin_cos();
        [co * p[0] + so * n[0], co * p[1] + so * n[1], co * p[2] + so * n[2]]
    }
}

/// Peak-to-peak fringe amplitude of `W` in the band around the middle of
/// `arc`, relative to `2·max|W|` over the whole grid. Each across-arc
/// profile first has its least-squares quadratic in the offset removed, so
/// smooth lobe tails reaching into the band do not count as fringes.
/// Returns a value in `[0, 1]`.
pub fn fringe_contrast(grid: &WignerGrid, arc: &Arc, band: &FringeBand) -> f64 {
    let n_along = band.n_along.max(2);
    let n_across = band.n_across.max(1);
    let offsets: Vec<f64> = (0..n_across)
        .map(|c| {
            if n_across == 1 {
                0.0
            } else {
                -band.half_width + 2.0 * band.half_width * c as f64 / (n_across - 1) as f64
            }
        })
        .collect();
    // Orthogonal basis 1, o, o² − ⟨o²⟩ on the symmetric offset grid.
    let mean_sq = offsets.iter().map(|o| o * o).sum::<f64>() / n_across as f64;
    let basis: Vec<Vec<f64>> = if n_across >= 4 {
        vec![
            vec![1.0; n_across],
            offsets.clone(),
            offsets.iter().map(|o| o * o - mean_sq).collect(),
        ]
    } else {
        vec![vec![1.0; n_across]]
    };
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut profile = vec![0.0; n_across];
    for a in 0..n_along {
        let s = band.start + (band.end - band.start) * a as f64 / (n_along - 1) as f64;
        for (v, &off) in profile.iter_mut().zip(&offsets) {
            let (beta, phi) = bloch_angles(arc.point(s, off));
            *v = grid.interpolate(beta, phi);
        }
        for b in &basis {
            let c = dot_n(&profile, b) / dot_n(b, b);
            for (v, bi) in profile.iter_mut().zip(b) {
                *v -= c * bi;
            }
        }
        for &v in &profile {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    ((hi - lo) / (2.0 * grid.max_abs() + 1e-12)).clamp(0.0, 1.0)
}

fn dot_n(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Centroid of the positive part of `W` within `radius` radians of
/// `direction`, as Bloch angles `(β, φ)`.
pub fn lobe_centroid(grid: &WignerGrid, direction: [f64; 3], radius: f64) -> (f64, f64) {
    let dir = normalized(direction);
    let cos_r = radius.cos();
    let mut acc = [0.0; 3];
    for (i, &th) in grid.thetas.iter().enumerate() {
        let area = th.sin().max(1e-12);
        for (k, &ph) in grid.phis.iter().enumerate() {
            let p = bloch_vector(th, ph);
            if dot(p, dir) < cos_r {
                continue;
            }
            let w = grid.value(i, k).max(0.0) * area;
            for a in 0..3 {
                acc[a] += w * p[a];
            }
        }
    }
    if dot(acc, acc) == 0.0 {
        return bloch_angles(dir);
    }
    bloch_angles(normalized(acc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dicke::{
        angles_from_tau, coherent_state, density_from_state, four_cat_state, tetrahedron_taus, DickeSpace,
    };
    use crate::wigner::multipole::MultipoleBasis;

    #[test]
    fn maximally_mixed_is_flat() {
        let s = DickeSpace::new(6).unwrap();
        let basis = MultipoleBasis::new(s);
        let g = wigner_function(&s.maximally_mixed(), &basis, GridSpec::Uniform { n_theta: 19, n_phi: 12 }).unwrap();
        let want = 1.0 / (4.0 * PI * 7.0).sqrt();
        assert!(g.values.iter().all(|v| (v - want).abs() < 1e-13));
    }

    #[test]
    fn normalization_on_gauss_legendre_grid() {
        let s = DickeSpace::new(10).unwrap();
        let basis = MultipoleBasis::new(s);
        let rho = density_from_state(&coherent_state(s, Complex64::new(0.3, 1.1)).unwrap());
        let g = wigner_function(&rho, &basis, GridSpec::GaussLegendre { n_theta: 16, n_phi: 24 }).unwrap();
        assert!((g.integrate() - (4.0 * PI / 11.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn coherent_state_peaks_at_its_bloch_angles() {
        let s = DickeSpace::new(50).unwrap();
        let basis = MultipoleBasis::new(s);
        let tau = Complex64::from_polar(0.8, -2.0);
        let (beta, phi) = angles_from_tau(tau);
        let rho = density_from_state(&coherent_state(s, tau).unwrap());
        let g = wigner_function(&rho, &basis, GridSpec::default()).unwrap();
        let (th, ph, _) = g.argmax();
        let dphi = 2.0 * PI / 181.0;
        let dth = PI / 180.0;
        assert!((th - beta).abs() <= dth, "{th} vs {beta}");
        let dp = (ph - phi + PI).rem_euclid(2.0 * PI) - PI;
        assert!(dp.abs() <= dphi, "{ph} vs {phi}");
    }

    #[test]
    fn ground_state_peaks_at_theta_zero() {
        let s = DickeSpace::new(20).unwrap();
        let basis = MultipoleBasis::new(s);
        let g = wigner_function(&density_from_state(&s.ground_state()), &basis, GridSpec::default()).unwrap();
        assert_eq!(g.argmax().0, 0.0);
    }

    #[test]
    fn interpolation_hits_grid_points_and_wraps() {
        let s = DickeSpace::new(8).unwrap();
        let basis = MultipoleBasis::new(s);
        let rho = density_from_state(&coherent_state(s, Complex64::new(1.0, 0.5)).unwrap());
        let g = wigner_function(&rho, &basis, GridSpec::Uniform { n_theta: 37, n_phi: 36 }).unwrap();
        assert!((g.interpolate(g.thetas[5], g.phis[7]) - g.value(5, 7)).abs() < 1e-14);
        assert!((g.interpolate(g.thetas[5], g.phis[7] + 2.0 * PI) - g.value(5, 7)).abs() < 1e-12);
        let mid = g.interpolate(g.thetas[5], 2.0 * PI - 0.5 * (2.0 * PI / 36.0));
        assert!((mid - 0.5 * (g.value(5, 35) + g.value(5, 0))).abs() < 1e-14);
    }

    #[test]
    fn csv_layout() {
        let s = DickeSpace::new(2).unwrap();
        let basis = MultipoleBasis::new(s);
        let g = wigner_function(&s.maximally_mixed(), &basis, GridSpec::Uniform { n_theta: 3, n_phi: 2 }).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "theta,phi,w");
        assert_eq!(lines.len(), 7);
        assert!(!text.contains('\r'));
        let meta = g.metadata(1.0, 0.5);
        assert_eq!(meta.coefficients.len(), 9);
    }

    #[test]
    fn flat_function_has_no_contrast() {
        let s = DickeSpace::new(4).unwrap();
        let basis = MultipoleBasis::new(s);
        let g = wigner_function(&s.maximally_mixed(), &basis, GridSpec::default()).unwrap();
        let arc = Arc::new([0.0, 0.0, 1.0], [1.0, 0.0, 0.0]);
        assert!(fringe_contrast(&g, &arc, &FringeBand::default()) < 1e-12);
    }

    #[test]
    fn lobe_tail_is_not_a_fringe() {
        let s = DickeSpace::new(50).unwrap();
        let basis = MultipoleBasis::new(s);
        let (from, to) = ([0.0, 0.0, -1.0], [1.0, 0.0, 0.0]);
        let arc = Arc::new(from, to);
        // Lobe pulled toward the band: centred at s = 0.85 on the arc.
        let p = arc.point(0.85, 0.0);
        let (beta, phi) = bloch_angles(p);
        let tau = crate::dicke::tau_from_angles(beta, phi).unwrap();
        let lone = density_from_state(&coherent_state(s, tau).unwrap());
        let g = wigner_function(&lone, &basis, GridSpec::default()).unwrap();
        let tail = fringe_contrast(&g, &arc, &FringeBand::default());
        let t0 = crate::dicke::tau_from_angles(0.0, 0.0).unwrap();
        let t1 = crate::dicke::tau_from_angles(PI / 2.0, 0.0).unwrap();
        let cat = density_from_state(&crate::dicke::cat_state(s, t0, t1).unwrap());
        let g = wigner_function(&cat, &basis, GridSpec::default()).unwrap();
        let fringes = fringe_contrast(&g, &arc, &FringeBand::default());
        assert!(fringes > 0.3, "{fringes}");
        assert!(tail < 0.2 * fringes, "tail {tail} vs fringes {fringes}");
    }

    #[test]
    fn arc_geometry() {
        let arc = Arc::new([0.0, 0.0, -1.0], [1.0, 0.0, 0.0]);
        let mid = arc.point(0.5, 0.0);
        let r = 0.5f64.sqrt();
        assert!((mid[0] - r).abs() < 1e-15 && (mid[2] + r).abs() < 1e-15);
        let off = arc.point(0.5, 0.2);
        assert!((dot(off, mid) - 0.2f64.cos()).abs() < 1e-14);
    }

    #[test]
    fn four_cat_lobes_sit_on_the_vertices() {
        let s = DickeSpace::new(50).unwrap();
        let basis = MultipoleBasis::new(s);
        let rho = density_from_state(&four_cat_state(s, tetrahedron_taus()).unwrap());
        let g = wigner_function(&rho, &basis, GridSpec::default()).unwrap();
        for p in crate::dicke::tetrahedron_points() {
            let (beta, phi) = lobe_centroid(&g, p, 0.35);
            let (b0, p0) = bloch_angles(p);
            let c = dot(bloch_vector(beta, phi), bloch_vector(b0, p0));
            assert!(c > (0.03f64).cos(), "{beta},{phi} vs {b0},{p0}");
        }
    }
}
