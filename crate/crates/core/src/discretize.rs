//! Finite proxies for the radiation and ionization continua.
//!
//! Photon modes carry the atom coupling `alpha_k`; each detector atom `i` has a
//! per-mode factor `f_{k,i}` and the channel weights `mu_c`, so every
//! mode–channel coupling is the product `mu_c · scale_i · f_{k,i}`.
//!
//! Two band models are available. `Dispersive` keeps the full frequency
//! dependence of the couplings (`ω³` growth, `e^{iωk̂·r}` retardation) on
//! `[0, omega_cut]`. `Markov` uses a flat band `[ω₀−W, ω₀+W]` on which all
//! coupling densities and phases are frozen at `ω₀`; the continuum kernels of
//! that model are exactly the constant Weisskopf–Wigner values.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::{self, Write};

use crate::geometry::{self, polarization_basis};
use crate::model::{DetectorAtom, PhysicalSystem, Vec3};
use crate::quad::{self, Rule};
use crate::{resolvent, Error, Result, C64, I};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Band {
    Dispersive,
    Markov { half_width: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    /// Radial (frequency) nodes.
    pub n_modes: usize,
    pub omega_cut: f64,
    pub n_channels: usize,
    /// Longest simulation time the model must support without recurrence.
    pub horizon: f64,
    pub band: Band,
    /// Add the vacuum level-shift counterterm to the bare atomic frequency.
    pub renormalize: bool,
    pub n_theta: usize,
    pub n_phi: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            n_modes: 400,
            omega_cut: 4.0,
            n_channels: 200,
            horizon: 300.0,
            band: Band::Dispersive,
            renormalize: true,
            n_theta: 16,
            n_phi: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Radial1D,
    Full3D,
    ScalarToy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub omega: f64,
    pub alpha: C64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub omega: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorCoupling {
    /// Multiplier on every channel weight of this atom.
    pub scale: f64,
    /// `f_{k,i}` for every mode `k`.
    pub f: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteModel {
    pub kind: ModelKind,
    pub omega0: f64,
    /// Frequency of the bare atom in the equations of motion.
    pub omega_atom: f64,
    pub modes: Vec<Mode>,
    /// Ionization channels, shared by every detector atom.
    pub channels: Vec<Channel>,
    pub detectors: Vec<DetectorCoupling>,
    /// Radial frequency rule the modes were built on.
    pub radial: Rule,
    pub t_rec: f64,
    /// `omega0 − omega_atom`.
    pub level_shift: f64,
    pub gamma: f64,
}

impl DiscreteModel {
    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn n_atoms(&self) -> usize {
        self.detectors.len()
    }

    /// Length of the amplitude vector: atom, modes, one channel set per atom.
    pub fn state_len(&self) -> usize {
        1 + self.modes.len() + self.channels.len() * self.detectors.len()
    }

    /// Size of the dense resolvent system (modes plus all channel amplitudes).
    pub fn dense_size(&self) -> usize {
        self.modes.len() + self.channels.len() * self.detectors.len()
    }

    /// Mode–channel coupling `g̃_{k,c,i}`.
    pub fn coupling(&self, k: usize, c: usize, atom: usize) -> C64 {
        let d = &self.detectors[atom];
        d.f[k] * (self.channels[c].mu * d.scale)
    }

    /// Same grid and atom frequency with detectors and channels removed.
    pub fn vacuum_part(&self) -> Self {
        Self { channels: vec![], detectors: vec![], ..self.clone() }
    }

    /// Every coupling set to zero.
    pub fn decoupled(&self) -> Self {
        let mut m = self.vacuum_part();
        for md in &mut m.modes {
            md.alpha = C64::new(0.0, 0.0);
        }
        m
    }

    /// Plain-text dump: one header line, then `kind,index,omega,re,im` rows for
    /// modes (`alpha`), channels (`mu`, `im = 0`) and detector factors
    /// (`detector<i>`, `omega` of the mode, `f_{k,i}`).
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "kind,index,omega,re,im")?;
        for (k, m) in self.modes.iter().enumerate() {
            writeln!(w, "mode,{k},{:e},{:e},{:e}", m.omega, m.alpha.re, m.alpha.im)?;
        }
        for (c, ch) in self.channels.iter().enumerate() {
            writeln!(w, "channel,{c},{:e},{:e},0", ch.omega, ch.mu)?;
        }
        for (i, d) in self.detectors.iter().enumerate() {
            for (k, f) in d.f.iter().enumerate() {
                writeln!(w, "detector{i},{k},{:e},{:e},{:e}", self.modes[k].omega, f.re, f.im)?;
            }
        }
        Ok(())
    }
}

fn radial_rule(omega0: f64, n: usize, omega_cut: f64, band: Band) -> Rule {
    match band {
        Band::Dispersive => quad::split_panels(0.0, omega0, omega_cut, n),
        Band::Markov { half_width } => quad::split_panels(omega0 - half_width, omega0, omega0 + half_width, n),
    }
}

fn channel_rule(omega0: f64, n: usize, omega_i: f64, omega_cut_c: f64, band: Band) -> Rule {
    match band {
        Band::Dispersive => quad::split_panels(omega_i, omega0, omega_cut_c, n),
        Band::Markov { half_width } => quad::split_panels(omega0 - half_width, omega0, omega0 + half_width, n),
    }
}

fn check_band(omega0: f64, band: Band, omega_i: Option<f64>) -> Result<()> {
    if let Band::Markov { half_width } = band {
        if !(half_width > 0.0 && half_width < omega0) {
            return Err(Error::InvalidInput("Markov half_width must lie in (0, omega0)".into()));
        }
        if let Some(wi) = omega_i {
            if omega0 - half_width < wi {
                return Err(Error::InvalidInput("Markov band extends below the ionization threshold".into()));
            }
        }
    }
    Ok(())
}

/// Half-width of the window around `omega0` in which node spacing sets the
/// recurrence time.
pub const RECURRENCE_WINDOW: f64 = 0.1;

/// `2π / max spacing` of the distinct frequencies within `RECURRENCE_WINDOW·ω₀`
/// of `ω₀`. Infinite for an empty set.
pub fn recurrence_time(omega0: f64, freqs: &[f64]) -> f64 {
    let mut near: Vec<f64> =
        freqs.iter().copied().filter(|w| (w - omega0).abs() <= RECURRENCE_WINDOW * omega0).collect();
    near.sort_by(f64::total_cmp);
    near.dedup();
    let gap = near.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    if gap > 0.0 {
        2.0 * PI / gap
    } else {
        f64::INFINITY
    }
}

fn model_recurrence(m: &DiscreteModel) -> f64 {
    let t_modes = recurrence_time(m.omega0, &m.radial.nodes);
    if m.detectors.is_empty() {
        return t_modes;
    }
    let ch: Vec<f64> = m.channels.iter().map(|c| c.omega).collect();
    t_modes.min(recurrence_time(m.omega0, &ch))
}

/// Windowed coupling density `(π/Δ) Σ_k |α_k|² · overlap(cell_k, [ω₀−Δ/2, ω₀+Δ/2])`,
/// with each radial node owning the cell between midpoints to its neighbours.
/// Equals `Γ/2` in the continuum limit.
pub fn sum_rule(m: &DiscreteModel, delta: f64) -> f64 {
    // aggregate |α|² per radial node (modes are stored radial-major)
    let nr = m.radial.len();
    if nr == 0 || m.modes.is_empty() {
        return 0.0;
    }
    let per = m.modes.len() / nr;
    let agg: Vec<f64> =
        (0..nr).map(|r| m.modes[r * per..(r + 1) * per].iter().map(|x| x.alpha.norm_sqr()).sum()).collect();
    let x = &m.radial.nodes;
    let (lo, hi) = (m.omega0 - 0.5 * delta, m.omega0 + 0.5 * delta);
    let mut acc = 0.0;
    for r in 0..nr {
        let a = if r == 0 { x[0] - 0.5 * (x[1.min(nr - 1)] - x[0]) } else { 0.5 * (x[r - 1] + x[r]) };
        let b = if r + 1 == nr { x[r] + 0.5 * (x[r] - x[r.saturating_sub(1)]) } else { 0.5 * (x[r] + x[r + 1]) };
        let overlap = (b.min(hi) - a.max(lo)).max(0.0);
        if b > a {
            acc += agg[r] * overlap / (b - a);
        }
    }
    PI * acc / delta
}

pub const SUM_RULE_DELTA: f64 = 0.05;
pub const SUM_RULE_TOL: f64 = 0.01;

fn check_sum_rule(m: &DiscreteModel) -> Result<()> {
    if m.gamma == 0.0 {
        return Ok(());
    }
    let v = sum_rule(m, SUM_RULE_DELTA * m.omega0);
    let target = 0.5 * m.gamma;
    if ((v - target) / target).abs() > SUM_RULE_TOL {
        return Err(Error::GridTooCoarse(format!(
            "coupling density {v:.6e} deviates from gamma/2 = {target:.6e} by more than 1%"
        )));
    }
    Ok(())
}

fn check_recurrence(m: &DiscreteModel, horizon: f64) -> Result<()> {
    if m.t_rec < 1.5 * horizon {
        return Err(Error::Recurrence { t_rec: m.t_rec, horizon });
    }
    Ok(())
}

/// Counterterm `ω₀ − Im K(−iω₀ + Γ/2)` placing the vacuum decay pole at `ω₀`.
fn renormalized_frequency(omega0: f64, gamma: f64, modes: &[Mode]) -> f64 {
    let s0 = C64::new(0.5 * gamma, -omega0);
    omega0 - resolvent::k_sum(modes, s0).im
}

fn finish(mut m: DiscreteModel, grid: &GridSpec) -> Result<DiscreteModel> {
    if grid.renormalize {
        m.omega_atom = renormalized_frequency(m.omega0, m.gamma, &m.modes);
        m.level_shift = m.omega0 - m.omega_atom;
    }
    m.t_rec = model_recurrence(&m);
    check_sum_rule(&m)?;
    check_recurrence(&m, grid.horizon)?;
    Ok(m)
}

fn channels_for(system: &PhysicalSystem, grid: &GridSpec) -> Vec<Channel> {
    let d = &system.dos_model;
    let rule = channel_rule(system.omega0, grid.n_channels, system.omega_i, d.omega_cut_c, grid.band);
    let mu_c = system.mu_c();
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&w, &wt)| {
            let rho = match grid.band {
                Band::Dispersive => d.density(w, system.omega0),
                Band::Markov { .. } => d.normalization,
            };
            Channel { omega: w, mu: mu_c * (rho * wt).sqrt() }
        })
        .collect()
}

/// Atom-only model on a one-dimensional frequency grid,
/// `|α(ω)|² = (Γ/2π)(ω/ω₀)³ w`.
pub fn build_radial_vacuum(system: &PhysicalSystem, grid: &GridSpec) -> Result<DiscreteModel> {
    system.validate().into_result()?;
    let w0 = system.omega0;
    check_band(w0, grid.band, None)?;
    if grid.n_modes < 50 {
        return Err(Error::GridTooCoarse(format!("n_modes = {} < 50", grid.n_modes)));
    }
    if matches!(grid.band, Band::Dispersive) && grid.omega_cut < 2.0 * w0 {
        return Err(Error::InvalidInput("omega_cut must be at least 2 omega0".into()));
    }
    let radial = radial_rule(w0, grid.n_modes, grid.omega_cut, grid.band);
    let modes = radial
        .nodes
        .iter()
        .zip(&radial.weights)
        .map(|(&w, &wt)| {
            let shape = match grid.band {
                Band::Dispersive => (w / w0).powi(3),
                Band::Markov { .. } => 1.0,
            };
            let a2 = system.gamma / (2.0 * PI) * shape * wt;
            Mode { omega: w, alpha: -I * a2.sqrt() }
        })
        .collect();
    let m = DiscreteModel {
        kind: ModelKind::Radial1D,
        omega0: w0,
        omega_atom: w0,
        modes,
        channels: vec![],
        detectors: vec![],
        radial,
        t_rec: f64::INFINITY,
        level_shift: 0.0,
        gamma: system.gamma,
    };
    finish(m, grid)
}

/// Direction rule about `axis`: Gauss–Legendre in `cos θ`, uniform in `φ`,
/// weights summing to `4π`.
pub fn angular_rule(axis: &Vec3, n_theta: usize, n_phi: usize) -> Vec<(Vec3, f64)> {
    let [e1, e2] = polarization_basis(axis);
    let polar = quad::gauss_legendre(n_theta, -1.0, 1.0);
    let dphi = 2.0 * PI / n_phi as f64;
    let mut out = Vec::with_capacity(n_theta * n_phi);
    for (&c, &w) in polar.nodes.iter().zip(&polar.weights) {
        let s = (1.0 - c * c).max(0.0).sqrt();
        for j in 0..n_phi {
            let phi = (j as f64 + 0.5) * dphi;
            out.push((axis * c + (e1 * phi.cos() + e2 * phi.sin()) * s, w * dphi));
        }
    }
    out
}

/// Polar axis of the angular grid: direction of the first detector atom off the origin.
fn grid_axis(atoms: &[DetectorAtom]) -> Vec3 {
    atoms.iter().find_map(|a| a.direction()).unwrap_or_else(Vec3::z)
}

/// Full three-dimensional mode set: radial nodes × directions × two
/// polarizations, with `α_k = −iμ_a N_k (p_a·ε)` and
/// `f_{k,i} = −iN_k (p_d·ε) e^{ik·r_i}`, `N_k² = ω³ w_r w_Ω / 4π²`.
pub fn build_full_3d(system: &PhysicalSystem, grid: &GridSpec) -> Result<DiscreteModel> {
    system.validate().into_result()?;
    let w0 = system.omega0;
    check_band(w0, grid.band, Some(system.omega_i))?;
    if grid.n_modes < 20 || grid.n_theta < 2 || grid.n_phi < 3 {
        return Err(Error::GridTooCoarse("Full3D needs n_modes >= 20, n_theta >= 2, n_phi >= 3".into()));
    }
    if !system.detector_atoms.is_empty() && grid.n_channels == 0 {
        return Err(Error::InvalidInput("detector atoms need n_channels > 0".into()));
    }
    let radial = radial_rule(w0, grid.n_modes, grid.omega_cut, grid.band);
    let dirs = angular_rule(&grid_axis(&system.detector_atoms), grid.n_theta, grid.n_phi);
    let pols: Vec<[Vec3; 2]> = dirs.iter().map(|(k, _)| polarization_basis(k)).collect();
    let p_a = system.atom.dipole_dir;
    let n = radial.len() * dirs.len() * 2;

    let mut modes = Vec::with_capacity(n);
    let mut det: Vec<DetectorCoupling> = system
        .detector_atoms
        .iter()
        .map(|a| DetectorCoupling { scale: a.mu_c_scale, f: Vec::with_capacity(n) })
        .collect();

    for (&w, &wr) in radial.nodes.iter().zip(&radial.weights) {
        let (shape, kmag) = match grid.band {
            Band::Dispersive => (w.powi(3), w),
            Band::Markov { .. } => (w0.powi(3), w0),
        };
        for ((k_hat, wo), eps) in dirs.iter().zip(&pols) {
            let nk = (shape * wr * wo / (4.0 * PI * PI)).sqrt();
            for e in eps {
                modes.push(Mode { omega: w, alpha: -I * (system.mu_a * nk * p_a.dot(e)) });
                for (a, d) in system.detector_atoms.iter().zip(det.iter_mut()) {
                    let phase = C64::from_polar(1.0, kmag * k_hat.dot(&a.position));
                    d.f.push(-I * phase * (nk * a.dipole_dir.dot(e)));
                }
            }
        }
    }

    let channels = if det.is_empty() { vec![] } else { channels_for(system, grid) };
    let m = DiscreteModel {
        kind: ModelKind::Full3D,
        omega0: w0,
        omega_atom: w0,
        modes,
        channels,
        detectors: det,
        radial,
        t_rec: f64::INFINITY,
        level_shift: 0.0,
        gamma: system.gamma,
    };
    finish(m, grid)
}

/// Scalar model without dipole patterns, one detector atom at distance `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToySpec {
    pub gamma: f64,
    /// Effective detector response; sets the channel weights through the
    /// same relation as the three-dimensional `beta`.
    pub beta: f64,
    /// Detector distance in units of `c/ω₀`.
    pub r: f64,
    pub omega_i: f64,
    pub omega_cut_c: f64,
    pub grid: GridSpec,
}

impl Default for ToySpec {
    fn default() -> Self {
        Self { gamma: 0.01, beta: 0.05, r: 3.0, omega_i: 0.3, omega_cut_c: 3.0, grid: GridSpec::default() }
    }
}

/// `α_k = −iμ_a N_k`, `f_k = −iN_k cos(ω_k r)`, `N_k² = (2/3π)(ω_k/ω₀) w_k`.
/// The standing-wave detector factor couples the atom and detector through the
/// same real kernel in both directions.
pub fn build_scalar_toy(spec: &ToySpec) -> Result<DiscreteModel> {
    let w0 = 1.0;
    let mut sys = PhysicalSystem::new(spec.gamma, spec.omega_i, spec.beta);
    sys.dos_model.omega_cut_c = spec.omega_cut_c;
    sys.validate().into_result()?;
    if !(spec.r >= 0.0 && spec.r.is_finite()) {
        return Err(Error::InvalidInput("toy detector distance must be finite and non-negative".into()));
    }
    let grid = &spec.grid;
    check_band(w0, grid.band, Some(spec.omega_i))?;
    if grid.n_modes < 50 {
        return Err(Error::GridTooCoarse(format!("n_modes = {} < 50", grid.n_modes)));
    }
    let radial = radial_rule(w0, grid.n_modes, grid.omega_cut, grid.band);
    let mut modes = Vec::with_capacity(radial.len());
    let mut f = Vec::with_capacity(radial.len());
    for (&w, &wt) in radial.nodes.iter().zip(&radial.weights) {
        let (shape, kmag) = match grid.band {
            Band::Dispersive => (w / w0, w),
            Band::Markov { .. } => (1.0, w0),
        };
        let nk = (2.0 / (3.0 * PI) * shape * wt).sqrt();
        modes.push(Mode { omega: w, alpha: -I * (sys.mu_a * nk) });
        f.push(-I * (nk * (kmag * spec.r).cos()));
    }
    let (channels, detectors) = if spec.beta > 0.0 && grid.n_channels > 0 {
        (channels_for(&sys, grid), vec![DetectorCoupling { scale: 1.0, f }])
    } else {
        (vec![], vec![])
    };
    let m = DiscreteModel {
        kind: ModelKind::ScalarToy,
        omega0: w0,
        omega_atom: w0,
        modes,
        channels,
        detectors,
        radial,
        t_rec: f64::INFINITY,
        level_shift: 0.0,
        gamma: spec.gamma,
    };
    finish(m, grid)
}

/// Retardation at which the Full3D grid axis sees the given detector.
pub fn detector_z(atom: &DetectorAtom, omega0: f64) -> f64 {
    omega0 * atom.distance()
}

/// Detector atom at distance `z/ω₀` along `ẑ` whose dipole, like the atom's,
/// makes the angle `cos²θ = 1/3` with `ẑ`.
pub fn magic_angle_detector(z: f64, omega0: f64) -> (Vec3, DetectorAtom) {
    let g = geometry::magic_geometry(z);
    (g.p_a, DetectorAtom { position: Vec3::z() * (z / omega0), dipole_dir: g.p_d, mu_c_scale: 1.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sys() -> PhysicalSystem {
        PhysicalSystem::new(0.01, 0.3, 0.05)
    }

    #[test]
    fn radial_sum_rule() {
        let m = build_radial_vacuum(&sys(), &GridSpec::default()).unwrap();
        assert_eq!(m.kind, ModelKind::Radial1D);
        let v = sum_rule(&m, 0.05);
        assert!((v / 0.005 - 1.0).abs() < 0.01, "{v}");
        assert!(m.t_rec > 450.0);
        assert!(m.modes.iter().all(|x| x.omega > 0.0));
    }

    #[test]
    fn zero_gamma_gives_zero_couplings() {
        let s = PhysicalSystem::new(0.0, 0.3, 0.05);
        let m = build_radial_vacuum(&s, &GridSpec::default()).unwrap();
        assert!(m.modes.iter().all(|x| x.alpha == C64::new(0.0, 0.0)));
    }

    #[test]
    fn coarse_grids_rejected() {
        let g = GridSpec { n_modes: 40, ..GridSpec::default() };
        assert!(matches!(build_radial_vacuum(&sys(), &g), Err(Error::GridTooCoarse(_))));
        let g = GridSpec { horizon: 5000.0, ..GridSpec::default() };
        assert!(matches!(build_radial_vacuum(&sys(), &g), Err(Error::Recurrence { .. })));
    }

    #[test]
    fn markov_radial_is_flat() {
        let g = GridSpec { n_modes: 140, band: Band::Markov { half_width: 0.5 }, ..GridSpec::default() };
        let m = build_radial_vacuum(&sys(), &g).unwrap();
        let total: f64 = m.modes.iter().map(|x| x.alpha.norm_sqr()).sum();
        assert_abs_diff_eq!(total, 0.01 / (2.0 * PI), epsilon = 1e-15);
        assert!(m.level_shift.abs() < 1e-14);
    }

    #[test]
    fn angular_rule_weights() {
        let r = angular_rule(&Vec3::new(0.1, 0.2, 1.0).normalize(), 8, 5);
        let w: f64 = r.iter().map(|x| x.1).sum();
        assert_abs_diff_eq!(w, 4.0 * PI, epsilon = 1e-13);
    }

    #[test]
    fn toy_without_coupling_is_vacuum() {
        let t = ToySpec { beta: 0.0, ..ToySpec::default() };
        let m = build_scalar_toy(&t).unwrap();
        assert!(m.channels.is_empty() && m.detectors.is_empty());
    }

    #[test]
    fn csv_dump_has_header() {
        let t = ToySpec {
            grid: GridSpec { n_modes: 200, n_channels: 40, horizon: 50.0, ..GridSpec::default() },
            ..ToySpec::default()
        };
        let m = build_scalar_toy(&t).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("kind,index,omega,re,im\n"));
        assert_eq!(s.lines().count(), 1 + 200 + 40 + 200);
    }
}
