//! Closed-form Weisskopf–Wigner results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitSphere};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::geometry::{self, DipoleGeometry, McEstimate};
use crate::model::{DetectorAtom, PhysicalSystem, Vec3};
use crate::par::{self, Exec};
use crate::{Error, Result};

/// `Γ = 4 ω₀³ μ_a² / 3`.
pub fn einstein_a(omega0: f64, mu_a: f64) -> f64 {
    4.0 * omega0.powi(3) * mu_a * mu_a / 3.0
}

pub fn mu_a_from_gamma(omega0: f64, gamma: f64) -> f64 {
    (3.0 * gamma / (4.0 * omega0.powi(3))).sqrt()
}

/// `β = 2π ω₀³ μ_c² ρ(ω₀) / 3`.
pub fn beta_param(omega0: f64, mu_c: f64, rho0: f64) -> f64 {
    2.0 * PI * omega0.powi(3) * mu_c * mu_c * rho0 / 3.0
}

pub fn mu_c_from_beta(omega0: f64, beta: f64, rho0: f64) -> f64 {
    if rho0 <= 0.0 || beta <= 0.0 {
        return 0.0;
    }
    (3.0 * beta / (2.0 * PI * omega0.powi(3) * rho0)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeThresholds {
    /// Far-field formula applies for `z` above this.
    pub far_z: f64,
    /// Near-field formula applies for `z` below this.
    pub near_z: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        Self { far_z: 2.0 * PI, near_z: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Applicability {
    pub far_field: bool,
    pub near_field: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub z: f64,
    pub beta: f64,
    /// `1 − (9/64π²) β D²` with the printed `D`.
    pub u_general: f64,
    /// `1 − (9/4) β l² sin²z / z²`.
    pub u_far_field: f64,
    /// `1 − β (p_d·p_a)²`.
    pub u_near_field: f64,
    /// `1 − (9/64π²) β A²` with `A` the sphere quadrature of the angular kernel.
    pub u_oracle: f64,
    /// Largest pairwise `|ΔU|` among the variants applicable at this `z`.
    pub discrepancy: f64,
    pub applicability: Applicability,
}

const GENERAL_PREFACTOR: f64 = 9.0 / (64.0 * PI * PI);

pub fn u_general(d: f64, beta: f64) -> f64 {
    1.0 - GENERAL_PREFACTOR * beta * d * d
}

/// Deficit `(9/4) β l² sin²z/z²` of one far-field atom.
pub fn far_field_deficit(l: f64, z: f64, beta: f64) -> f64 {
    let s = geometry::s_func(z);
    2.25 * beta * l * l * s * s
}

pub fn reduction_single(geom: &DipoleGeometry, beta: f64) -> ReductionReport {
    reduction_single_with(geom, beta, RegimeThresholds::default())
}

pub fn reduction_single_with(geom: &DipoleGeometry, beta: f64, th: RegimeThresholds) -> ReductionReport {
    let u_gen = u_general(geometry::d_func(geom), beta);
    let u_far = 1.0 - far_field_deficit(geom.l(), geom.z, beta);
    let pp = geom.pp();
    let u_near = 1.0 - beta * pp * pp;
    let u_orc = u_general(geometry::angular_integral(geom), beta);
    let applicability = Applicability { far_field: geom.z > th.far_z, near_field: geom.z < th.near_z };

    let mut vals = vec![u_gen, u_orc];
    if applicability.far_field {
        vals.push(u_far);
    }
    if applicability.near_field {
        vals.push(u_near);
    }
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);

    ReductionReport {
        z: geom.z,
        beta,
        u_general: u_gen,
        u_far_field: u_far,
        u_near_field: u_near,
        u_oracle: u_orc,
        discrepancy: hi - lo,
        applicability,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiReduction {
    pub u: f64,
    pub warning: Option<String>,
}

/// Additive far-field deficit over independent detector atoms (`omega0 = 1`).
/// Each atom's deficit is weighted by its `mu_c_scale²`.
pub fn reduction_multi(atoms: &[DetectorAtom], p_a: &Vec3, beta: f64) -> Result<MultiReduction> {
    let mut deficit = 0.0;
    for a in atoms {
        let r_hat = a.direction().ok_or(Error::AtomAtOrigin)?;
        let l = geometry::dipole_factor_l(p_a, &a.dipole_dir, &r_hat);
        deficit += far_field_deficit(l, a.distance(), beta * a.mu_c_scale * a.mu_c_scale);
    }
    let u = 1.0 - deficit;
    let warning = (u < 0.0)
        .then(|| format!("U = {u:.4} < 0: additive deficits exceed one, inter-atom coupling cannot be neglected"));
    Ok(MultiReduction { u, warning })
}

/// `1 − (9/14) β N sin²z / z²` for `N` atoms on a thin shell of radius `z`.
pub fn reduction_shell(n_atoms: usize, radius_z: f64, beta: f64) -> f64 {
    let s = geometry::s_func(radius_z);
    1.0 - 9.0 / 14.0 * beta * n_atoms as f64 * s * s
}

/// Monte Carlo average of [`reduction_multi`] over `n_atoms` detector atoms at
/// uniform positions on a shell of radius `radius_z`, with independent uniform
/// detector dipoles and a uniform radiating dipole drawn per sample.
pub fn reduction_shell_mc(
    n_atoms: usize,
    radius_z: f64,
    beta: f64,
    samples: usize,
    seed: u64,
    exec: Exec,
) -> McEstimate {
    let batches = par::chunks(samples, 256);
    let parts = par::map_range(exec, batches.len(), |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b as u64 + 1);
        let mut atoms = Vec::with_capacity(n_atoms);
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in batches[b].clone() {
            let p_a = Vec3::from(UnitSphere.sample(&mut rng));
            atoms.clear();
            for _ in 0..n_atoms {
                let pos = Vec3::from(UnitSphere.sample(&mut rng)) * radius_z;
                let dir = Vec3::from(UnitSphere.sample(&mut rng));
                atoms.push(DetectorAtom { position: pos, dipole_dir: dir, mu_c_scale: 1.0 });
            }
            let u = reduction_multi(&atoms, &p_a, beta).map(|m| m.u).unwrap_or(f64::NAN);
            s += u;
            s2 += u * u;
        }
        (s, s2)
    });
    let (s, s2) = parts.into_iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    McEstimate::from_moments(s, s2, samples)
}

/// `exp(−Γ U t)`.
pub fn survival_ww(t: f64, gamma: f64, u: f64) -> f64 {
    (-gamma * u * t).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    /// `L·I` with `I = 2ω₀³/3`, `L = π μ_c² ρ(ω₀)`.
    pub li: f64,
    /// `μ_a² I / ω₀`.
    pub mu2_i: f64,
    pub li_small: bool,
    pub mu2i_small: bool,
}

pub const REGIME_SMALL: f64 = 0.01;

pub fn magnitude_checks(s: &PhysicalSystem) -> RegimeReport {
    let i = 2.0 * s.omega0.powi(3) / 3.0;
    let mu_c = s.mu_c();
    let l = PI * mu_c * mu_c * s.dos_model.normalization;
    let li = l * i;
    let mu2_i = s.mu_a * s.mu_a * i / s.omega0;
    RegimeReport { li, mu2_i, li_small: li < REGIME_SMALL, mu2i_small: mu2_i < REGIME_SMALL }
}
