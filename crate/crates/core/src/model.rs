//! Dimensionless domain types.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::analytic;

pub type Vec3 = Vector3<f64>;

/// Unit convention: `hbar = c = 1`, frequencies in units of the atomic
/// transition frequency, lengths in units of `c / omega0`, times in `1 / omega0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NaturalUnits;

impl NaturalUnits {
    pub const HBAR: f64 = 1.0;
    pub const C: f64 = 1.0;
    pub const OMEGA0: f64 = 1.0;

    /// Retardation argument `omega0 r / c` for a distance in these units.
    pub fn retardation(r: f64) -> f64 {
        Self::OMEGA0 * r / Self::C
    }
}

/// Spec-facing alias for the unit marker.
pub type UnitSystem = NaturalUnits;

const UNIT_TOL: f64 = 1e-12;

fn is_unit(v: &Vec3) -> bool {
    v.iter().all(|x| x.is_finite()) && (v.norm() - 1.0).abs() <= UNIT_TOL
}

/// Normalize `v`, or return `None` for a zero or non-finite vector.
pub fn unit(v: Vec3) -> Option<Vec3> {
    let n = v.norm();
    (n.is_finite() && n > 0.0).then(|| v / n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomDipole {
    pub dipole_dir: Vec3,
}

impl AtomDipole {
    pub fn new(dir: Vec3) -> Self {
        Self { dipole_dir: unit(dir).unwrap_or_else(Vec3::z) }
    }
}

impl Default for AtomDipole {
    fn default() -> Self {
        Self { dipole_dir: Vec3::z() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorAtom {
    pub position: Vec3,
    pub dipole_dir: Vec3,
    /// Multiplier on the ionization dipole `mu_c` of this atom; `1.0` means the
    /// system-wide value implied by `beta`.
    #[serde(default = "one")]
    pub mu_c_scale: f64,
}

fn one() -> f64 {
    1.0
}

impl DetectorAtom {
    pub fn new(position: Vec3, dipole_dir: Vec3) -> Self {
        Self { position, dipole_dir: unit(dipole_dir).unwrap_or_else(Vec3::z), mu_c_scale: 1.0 }
    }

    pub fn distance(&self) -> f64 {
        self.position.norm()
    }

    /// Unit vector from the radiating atom (origin) to this atom, `None` at the origin.
    pub fn direction(&self) -> Option<Vec3> {
        unit(self.position)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DosShape {
    Flat,
    /// `rho(w) = rho0 * (w / omega0)^exponent`
    PowerLaw {
        exponent: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IonizationDos {
    pub shape: DosShape,
    pub omega_cut_c: f64,
    /// `rho(omega0)`.
    pub normalization: f64,
}

impl Default for IonizationDos {
    fn default() -> Self {
        Self { shape: DosShape::Flat, omega_cut_c: 3.0, normalization: 1.0 }
    }
}

impl IonizationDos {
    pub fn density(&self, omega: f64, omega0: f64) -> f64 {
        match self.shape {
            DosShape::Flat => self.normalization,
            DosShape::PowerLaw { exponent } => self.normalization * (omega / omega0).powf(exponent),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhysicalSystem {
    pub omega0: f64,
    pub gamma: f64,
    pub mu_a: f64,
    pub omega_i: f64,
    pub beta: f64,
    #[serde(default)]
    pub atom: AtomDipole,
    #[serde(default)]
    pub detector_atoms: Vec<DetectorAtom>,
    #[serde(default)]
    pub dos_model: IonizationDos,
}

impl Default for PhysicalSystem {
    fn default() -> Self {
        Self::new(0.01, 0.3, 0.05)
    }
}

impl PhysicalSystem {
    /// System with `omega0 = 1`, `mu_a` derived from `gamma`, no detector atoms.
    pub fn new(gamma: f64, omega_i: f64, beta: f64) -> Self {
        Self {
            omega0: 1.0,
            gamma,
            mu_a: analytic::mu_a_from_gamma(1.0, gamma),
            omega_i,
            beta,
            atom: AtomDipole::default(),
            detector_atoms: Vec::new(),
            dos_model: IonizationDos::default(),
        }
    }

    pub fn with_detectors(mut self, atoms: Vec<DetectorAtom>) -> Self {
        self.detector_atoms = atoms;
        self
    }

    pub fn with_atom_dipole(mut self, dir: Vec3) -> Self {
        self.atom = AtomDipole::new(dir);
        self
    }

    /// Recompute `mu_a` from `gamma` after editing either.
    pub fn sync_mu_a(mut self) -> Self {
        self.mu_a = analytic::mu_a_from_gamma(self.omega0, self.gamma);
        self
    }

    /// Ionization dipole implied by `beta` and `rho(omega0)`.
    pub fn mu_c(&self) -> f64 {
        analytic::mu_c_from_beta(self.omega0, self.beta, self.dos_model.normalization)
    }

    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty() && self.warnings.is_empty()
    }

    /// No hard violations: every builder and analytic routine accepts the system.
    pub fn is_usable(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> crate::Result<ValidationReport> {
        if self.violations.is_empty() {
            Ok(self)
        } else {
            Err(crate::Error::InvalidSystem(self.violations))
        }
    }
}

/// Soft limit on `gamma / omega0` above which closed-form comparisons lose accuracy.
pub const WW_GAMMA_CAP: f64 = 0.1;

/// `validate` warns when either magnitude ratio of [`analytic::magnitude_checks`]
/// exceeds this (a >10% correction to the closed forms).
pub const LI_WARN: f64 = 0.1;

pub fn validate(s: &PhysicalSystem) -> ValidationReport {
    let mut r = ValidationReport::default();
    let mut bad = |m: &str| r.violations.push(m.to_string());

    if !(s.omega0.is_finite() && s.omega0 > 0.0) {
        bad("omega0 > 0");
    }
    if !(s.gamma.is_finite() && s.gamma >= 0.0) {
        bad("gamma >= 0");
    }
    if !(s.mu_a.is_finite() && s.mu_a >= 0.0) {
        bad("mu_a >= 0");
    }
    if !(s.omega_i.is_finite() && s.omega_i > 0.0) {
        bad("omega_i > 0");
    }
    if !(s.omega_i < s.omega0) {
        bad("omega_i < omega0");
    }
    if !(s.beta.is_finite() && s.beta >= 0.0) {
        bad("beta >= 0");
    }
    if !is_unit(&s.atom.dipole_dir) {
        bad("|atom.dipole_dir| = 1");
    }
    for (i, a) in s.detector_atoms.iter().enumerate() {
        if !is_unit(&a.dipole_dir) {
            r.violations.push(format!("|detector_atoms[{i}].dipole_dir| = 1"));
        }
        if !a.position.iter().all(|x| x.is_finite()) {
            r.violations.push(format!("detector_atoms[{i}].position finite"));
        }
        if !(a.mu_c_scale.is_finite() && a.mu_c_scale >= 0.0) {
            r.violations.push(format!("detector_atoms[{i}].mu_c_scale >= 0"));
        }
    }
    let d = &s.dos_model;
    if !(d.omega_cut_c.is_finite() && d.omega_cut_c > s.omega0) {
        r.violations.push("dos_model.omega_cut_c > omega0".into());
    }
    if !(d.normalization.is_finite() && d.normalization >= 0.0) {
        r.violations.push("dos_model.normalization >= 0".into());
    }
    if let DosShape::PowerLaw { exponent } = d.shape {
        if !exponent.is_finite() {
            r.violations.push("dos_model.shape exponent finite".into());
        }
    }
    if s.beta > 0.0 && d.normalization == 0.0 {
        r.violations.push("beta > 0 requires dos_model.normalization > 0".into());
    }

    if s.gamma > WW_GAMMA_CAP * s.omega0 {
        r.warnings.push(format!("outside WW regime: gamma = {} exceeds {} * omega0", s.gamma, WW_GAMMA_CAP));
    }
    if s.gamma == 0.0 {
        r.warnings.push("gamma = 0: atom decoupled from the field".into());
    }
    if r.violations.is_empty() {
        let m = analytic::magnitude_checks(s);
        if m.li > LI_WARN {
            r.warnings.push(format!("L*I = {:.3e} not small compared to one", m.li));
        }
        if m.mu2_i > LI_WARN {
            r.warnings.push(format!("mu_a^2 I / omega0 = {:.3e} not small", m.mu2_i));
        }
    }
    r
}
