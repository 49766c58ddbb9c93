//! Angular special functions, dipole factors and polarization sums.
//!
//! `S(z) = sin z / z` and `T(z) = ∫₋₁¹ ξ² cos(zξ) dξ` are the radial pieces of
//! the angular reduction of the detector kernel. Two versions of that reduction
//! live here:
//!
//! * [`d_func`], the combination `(S+T) p_a·p_d + (S−3T)(r̂·p_a)(r̂·p_d)`;
//! * [`angular_integral`], a direct quadrature of
//!   `∫dΩ Σ_λ (p_d·ε)(p_a·ε) e^{−iz k̂·r̂}` over the sphere, together with its
//!   closed form [`angular_kernel`].
//!
//! The two are not proportional to each other; [`normalization_report`]
//! measures by how much.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitSphere};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::model::{unit, Vec3};
use crate::par::{self, Exec};
use crate::quad;
use crate::{Error, Result};

const S_SERIES_BELOW: f64 = 1e-4;
/// Below this the closed form of `T` loses digits to cancellation (`~eps/z³`).
pub const T_SERIES_BELOW: f64 = 0.5;

pub fn s_func(z: f64) -> f64 {
    if z.abs() < S_SERIES_BELOW {
        let z2 = z * z;
        1.0 - z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sin() / z
    }
}

pub fn t_func(z: f64) -> f64 {
    if z.abs() < T_SERIES_BELOW {
        t_series(z)
    } else {
        let (s, c) = z.sin_cos();
        2.0 * s / z + 4.0 * c / (z * z) - 4.0 * s / (z * z * z)
    }
}

// Σ (−1)ⁿ z²ⁿ · 2 / ((2n+3)(2n)!)
fn t_series(z: f64) -> f64 {
    let z2 = z * z;
    let mut term = 1.0; // (−1)ⁿ z²ⁿ/(2n)!
    let mut sum = 0.0;
    for n in 0..12 {
        sum += 2.0 * term / (2 * n + 3) as f64;
        let k = (2 * n + 1) as f64;
        term *= -z2 / (k * (k + 1.0));
    }
    sum
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DipoleGeometry {
    pub p_a: Vec3,
    pub p_d: Vec3,
    pub r_hat: Vec3,
    pub z: f64,
}

impl DipoleGeometry {
    pub fn new(p_a: Vec3, p_d: Vec3, r_hat: Vec3, z: f64) -> Result<Self> {
        let g = Self { p_a, p_d, r_hat, z };
        for (name, v) in [("p_a", &g.p_a), ("p_d", &g.p_d), ("r_hat", &g.r_hat)] {
            if (v.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidInput(format!("{name} must be a unit vector")));
            }
        }
        if !(z >= 0.0 && z.is_finite()) {
            return Err(Error::InvalidInput("z must be finite and non-negative".into()));
        }
        Ok(g)
    }

    /// Normalizing constructor for arbitrary non-zero directions.
    pub fn normalized(p_a: Vec3, p_d: Vec3, r_hat: Vec3, z: f64) -> Result<Self> {
        let n = |v: Vec3| unit(v).ok_or_else(|| Error::InvalidInput("zero direction vector".into()));
        Self::new(n(p_a)?, n(p_d)?, n(r_hat)?, z)
    }

    /// Radiating atom with dipole `p_a` at the origin, detector atom at `position`.
    pub fn from_positions(p_a: Vec3, p_d: Vec3, position: Vec3, omega0: f64) -> Result<Self> {
        let r_hat = unit(position).ok_or(Error::AtomAtOrigin)?;
        Self::normalized(p_a, p_d, r_hat, omega0 * position.norm())
    }

    pub fn pp(&self) -> f64 {
        self.p_a.dot(&self.p_d)
    }

    pub fn rr(&self) -> f64 {
        self.r_hat.dot(&self.p_a) * self.r_hat.dot(&self.p_d)
    }

    pub fn l(&self) -> f64 {
        dipole_factor_l(&self.p_a, &self.p_d, &self.r_hat)
    }

    pub fn with_z(&self, z: f64) -> Self {
        Self { z, ..self.clone() }
    }
}

/// Parallel dipoles at the angle `cos²θ = 1/3` to `r̂`. For this geometry the
/// angular kernel reduces exactly to `(8π/3) sin z / z`.
pub fn magic_geometry(z: f64) -> DipoleGeometry {
    let c = (1.0f64 / 3.0).sqrt();
    let p = Vec3::new((1.0 - c * c).sqrt(), 0.0, c);
    DipoleGeometry { p_a: p, p_d: p, r_hat: Vec3::z(), z }
}

/// The printed combination `(S+T) p_a·p_d + (S−3T)(r̂·p_a)(r̂·p_d)`.
pub fn d_func(g: &DipoleGeometry) -> f64 {
    let s = s_func(g.z);
    let t = t_func(g.z);
    (s + t) * g.pp() + (s - 3.0 * t) * g.rr()
}

/// Closed form of the sphere integral computed by [`angular_integral`]:
/// `π[(2S+T) p_a·p_d + (2S−3T)(r̂·p_a)(r̂·p_d)]`.
pub fn angular_kernel(g: &DipoleGeometry) -> f64 {
    let s = s_func(g.z);
    let t = t_func(g.z);
    PI * ((2.0 * s + t) * g.pp() + (2.0 * s - 3.0 * t) * g.rr())
}

/// Transverse orthonormal pair `(ε₁, ε₂)` with `ε₁ × ε₂ = k̂`.
pub fn polarization_basis(k_hat: &Vec3) -> [Vec3; 2] {
    let a = k_hat.abs();
    let helper = if a.x <= a.y && a.x <= a.z {
        Vec3::x()
    } else if a.y <= a.z {
        Vec3::y()
    } else {
        Vec3::z()
    };
    let e1 = (helper - k_hat * k_hat.dot(&helper)).normalize();
    let e2 = k_hat.cross(&e1);
    [e1, e2]
}

/// `Σ_λ (a·ε_λ)(b·ε_λ)` over an explicit transverse basis.
pub fn polarization_sum(a: &Vec3, b: &Vec3, k_hat: &Vec3) -> f64 {
    polarization_basis(k_hat).iter().map(|e| a.dot(e) * b.dot(e)).sum()
}

/// Gauss–Legendre order in `cos θ` sufficient for 1e-8 at retardation `z`.
fn polar_order(z: f64) -> usize {
    (z.abs().ceil() as usize) + 40
}

/// Direct quadrature of `Re ∫dΩ Σ_λ (p_d·ε)(p_a·ε) e^{−iz k̂·r̂}`
/// (the imaginary part vanishes under `k̂ → −k̂`).
pub fn angular_integral(g: &DipoleGeometry) -> f64 {
    let [e1, e2] = polarization_basis(&g.r_hat);
    let polar = quad::gauss_legendre(polar_order(g.z), -1.0, 1.0);
    // integrand is a degree-2 trigonometric polynomial in φ
    let n_phi = 8;
    let dphi = 2.0 * PI / n_phi as f64;
    let mut acc = 0.0;
    for (&xi, &w) in polar.nodes.iter().zip(&polar.weights) {
        let sin_t = (1.0 - xi * xi).max(0.0).sqrt();
        let mut ring = 0.0;
        for j in 0..n_phi {
            let phi = (j as f64 + 0.5) * dphi;
            let k = g.r_hat * xi + (e1 * phi.cos() + e2 * phi.sin()) * sin_t;
            ring += polarization_sum(&g.p_d, &g.p_a, &k);
        }
        acc += w * ring * dphi * (g.z * xi).cos();
    }
    acc
}

/// Reference geometry fixing the oracle normalization: parallel dipoles
/// perpendicular to `r̂`, `z = 0`.
pub fn reference_geometry() -> DipoleGeometry {
    DipoleGeometry { p_a: Vec3::x(), p_d: Vec3::x(), r_hat: Vec3::z(), z: 0.0 }
}

/// Constant `c` with `c · angular_integral = d_func` on the reference geometry.
pub fn oracle_constant() -> f64 {
    let g = reference_geometry();
    d_func(&g) / angular_integral(&g)
}

/// Angular quadrature rescaled to agree with [`d_func`] on the reference geometry.
pub fn d_oracle(g: &DipoleGeometry) -> f64 {
    oracle_constant() * angular_integral(g)
}

pub fn dipole_factor_l(p_a: &Vec3, p_d: &Vec3, r_hat: &Vec3) -> f64 {
    p_d.dot(p_a) - r_hat.dot(p_d) * r_hat.dot(p_a)
}

/// Sphere rule of `order` Gauss–Legendre nodes in `cos θ` and `2·order` uniform
/// nodes in `φ`, weights summing to one.
pub fn sphere_rule(order: usize) -> Vec<(Vec3, f64)> {
    let polar = quad::gauss_legendre(order, -1.0, 1.0);
    let n_phi = 2 * order;
    let mut out = Vec::with_capacity(order * n_phi);
    for (&c, &w) in polar.nodes.iter().zip(&polar.weights) {
        let s = (1.0 - c * c).max(0.0).sqrt();
        for j in 0..n_phi {
            let phi = 2.0 * PI * (j as f64 + 0.5) / n_phi as f64;
            out.push((Vec3::new(s * phi.cos(), s * phi.sin(), c), w / (2.0 * n_phi as f64)));
        }
    }
    out
}

/// Deterministic average of `l²` over independent uniform `p_a`, `p_d`, `r̂`.
/// Rotational invariance fixes `r̂ = ẑ`; the remaining double sphere rule is
/// exact for `order ≥ 3` since `l²` is quadratic in each direction.
pub fn angular_average_l2(order: usize, exec: Exec) -> f64 {
    let rule = sphere_rule(order.max(1));
    let r = Vec3::z();
    par::map_slice(exec, &rule, |(pa, wa)| {
        rule.iter().map(|(pd, wd)| wd * dipole_factor_l(pa, pd, &r).powi(2)).sum::<f64>() * wa
    })
    .into_iter()
    .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl McEstimate {
    pub fn from_moments(sum: f64, sum_sq: f64, n: usize) -> Self {
        let nf = n as f64;
        let mean = sum / nf;
        let var = ((sum_sq / nf - mean * mean) * nf / (nf - 1.0).max(1.0)).max(0.0);
        Self { mean, stderr: (var / nf).sqrt(), samples: n }
    }
}

const MC_BATCH: usize = 1 << 14;

/// Monte Carlo `⟨l²⟩` with three independent uniform directions per sample.
/// Each batch draws from its own ChaCha stream, so the result does not depend
/// on the execution policy.
pub fn angular_average_l2_mc(samples: usize, seed: u64, exec: Exec) -> McEstimate {
    let batches = par::chunks(samples, MC_BATCH);
    let parts = par::map_range(exec, batches.len(), |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b as u64 + 1);
        let mut s = 0.0;
        let mut s2 = 0.0;
        for _ in batches[b].clone() {
            let [pa, pd, r] = [0; 3].map(|_| Vec3::from(UnitSphere.sample(&mut rng)));
            let l2 = dipole_factor_l(&pa, &pd, &r).powi(2);
            s += l2;
            s2 += l2 * l2;
        }
        (s, s2)
    });
    let (s, s2) = parts.into_iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    McEstimate::from_moments(s, s2, samples)
}

/// How the printed `D` relates to the quadrature kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationReport {
    /// `d_func / angular_integral` on the reference geometry.
    pub constant: f64,
    /// Per probe geometry: `(z, d_func, angular_integral, ratio)`.
    pub probes: Vec<(f64, f64, f64, f64)>,
    /// `max |ratio/constant − 1|` over probes with a non-negligible kernel.
    pub max_relative_spread: f64,
}

/// Compare [`d_func`] and [`angular_integral`] over the given geometries.
pub fn normalization_report(geoms: &[DipoleGeometry]) -> NormalizationReport {
    let constant = oracle_constant();
    let mut spread: f64 = 0.0;
    let probes = geoms
        .iter()
        .map(|g| {
            let d = d_func(g);
            let a = angular_integral(g);
            let ratio = d / a;
            if a.abs() > 1e-6 {
                spread = spread.max((ratio / constant - 1.0).abs());
            }
            (g.z, d, a, ratio)
        })
        .collect();
    NormalizationReport { constant, probes, max_relative_spread: spread }
}

/// Fixed probe set used by reports: three orientations at several retardations.
pub fn probe_geometries() -> Vec<DipoleGeometry> {
    let orient = [
        (Vec3::x(), Vec3::x(), Vec3::z()),
        (Vec3::z(), Vec3::z(), Vec3::z()),
        (
            Vec3::new(1.0, 0.0, 1.0).normalize(),
            Vec3::new(0.0, 1.0, 1.0).normalize(),
            Vec3::new(1.0, 2.0, 2.0).normalize(),
        ),
    ];
    let mut out = Vec::new();
    for z in [0.05, 0.5, 2.0, 3.0, 10.0] {
        for (a, d, r) in orient {
            out.push(DipoleGeometry { p_a: a, p_d: d, r_hat: r, z });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn s_values() {
        assert_eq!(s_func(0.0), 1.0);
        assert_abs_diff_eq!(s_func(PI), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s_func(PI / 2.0), 2.0 / PI, epsilon = 1e-15);
    }

    #[test]
    fn t_values() {
        assert_abs_diff_eq!(t_func(0.0), 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t_func(PI), -4.0 / (PI * PI), epsilon = 1e-14);
    }

    #[test]
    fn switchovers_continuous() {
        let z = T_SERIES_BELOW;
        let (s, c) = z.sin_cos();
        let closed = 2.0 * s / z + 4.0 * c / (z * z) - 4.0 * s / (z * z * z);
        assert_abs_diff_eq!(t_series(z), closed, epsilon = 1e-12);
        let z = S_SERIES_BELOW;
        assert_abs_diff_eq!(s_func(z * (1.0 - 1e-12)), z.sin() / z, epsilon = 1e-12);
    }

    #[test]
    fn collinear_d_at_origin() {
        let g = reference_geometry();
        assert_abs_diff_eq!(d_func(&g), 5.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn magic_angle_kernel() {
        for z in [0.3, 1.0, 2.0, 7.5] {
            let g = magic_geometry(z);
            assert_abs_diff_eq!(angular_kernel(&g), 8.0 * PI / 3.0 * s_func(z), epsilon = 1e-13);
        }
    }

    #[test]
    fn basis_is_right_handed() {
        let k = Vec3::new(0.3, -0.4, 0.866).normalize();
        let [e1, e2] = polarization_basis(&k);
        assert_abs_diff_eq!(e1.cross(&e2).dot(&k), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e1.dot(&k), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn sphere_rule_weights() {
        let w: f64 = sphere_rule(6).iter().map(|p| p.1).sum();
        assert_abs_diff_eq!(w, 1.0, epsilon = 1e-14);
    }
}
