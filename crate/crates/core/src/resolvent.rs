//! Laplace-domain route.
//!
//! For a finite model the Laplace transform of the amplitude equations is an
//! algebraic system. Eliminating the photon modes leaves the atom amplitude
//! coupled to the channel amplitudes through
//!
//! ```text
//! K(s)      = Σ_k |α_k|² / (s + iω_k)
//! M_ac(s)   = μ_c s_i Σ_k α_k f*_{k,i} / (s + iω_k)   = μ_c s_i m_i(s)
//! M_ca(s)   = μ_c s_i Σ_k f_{k,i} α*_k / (s + iω_k)   = μ_c s_i m'_i(s)
//! N_cc'(s)  = μ_c μ_c' s_i s_j Σ_k f_{k,i} f*_{k,j} / (s + iω_k)
//! ```
//!
//! Because every channel coupling factorizes, the channel block collapses to an
//! `n_atoms × n_atoms` system (Woodbury form):
//!
//! ```text
//! A₀(s) = 1 / (s + iω_a + K − mᵀ (1 + Λ n)⁻¹ Λ m'),   Λ = diag(s_i² ℓ(s)),
//! ℓ(s)  = Σ_c μ_c² / (s + iω_c).
//! ```
//!
//! All evaluators accept a frame frequency `Ω`: frequencies are measured from
//! `Ω`, giving the transform of the rotating-frame amplitude `A₀(t) e^{iΩt}`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::analytic::magnitude_checks;
use crate::discretize::{DiscreteModel, Mode};
use crate::geometry::{self, DipoleGeometry};
use crate::model::PhysicalSystem;
use crate::par::{self, Exec};
use crate::quad;
use crate::{Error, Result, C64, I};

const POLE_EPS: f64 = 1e-12;

/// `Σ_k |α_k|² / (s + iω_k)` without pole checks.
pub fn k_sum(modes: &[Mode], s: C64) -> C64 {
    modes.iter().map(|m| m.alpha.norm_sqr() / (s + I * m.omega)).sum()
}

fn check_pole(s: C64, omega: f64) -> Result<()> {
    if (s + I * omega).norm() < POLE_EPS {
        Err(Error::PoleHit { re: s.re, im: s.im })
    } else {
        Ok(())
    }
}

pub fn k_discrete(s: C64, model: &DiscreteModel) -> Result<C64> {
    for m in &model.modes {
        check_pole(s, m.omega)?;
    }
    Ok(k_sum(&model.modes, s))
}

/// Mode and channel sums of one model at one `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagators {
    pub k: C64,
    /// `m_i = Σ α f*_i / (s + iω)`.
    pub m: Vec<C64>,
    /// `m'_i = Σ f_i α* / (s + iω)`.
    pub m_rev: Vec<C64>,
    /// `n[i][j] = Σ f_i f*_j / (s + iω)`.
    pub n: Vec<Vec<C64>>,
    /// `ℓ = Σ_c μ_c² / (s + iω_c)`.
    pub ell: C64,
}

/// Evaluate all propagator sums at `s` in the frame rotating at `frame`.
pub fn propagators(model: &DiscreteModel, s: C64, frame: f64) -> Result<Propagators> {
    let na = model.n_atoms();
    let mut p = Propagators {
        k: C64::default(),
        m: vec![C64::default(); na],
        m_rev: vec![C64::default(); na],
        n: vec![vec![C64::default(); na]; na],
        ell: C64::default(),
    };
    for (k, md) in model.modes.iter().enumerate() {
        let d = s + I * (md.omega - frame);
        if d.norm() < POLE_EPS {
            return Err(Error::PoleHit { re: s.re, im: s.im });
        }
        let g = d.inv();
        p.k += md.alpha.norm_sqr() * g;
        for i in 0..na {
            let fi = model.detectors[i].f[k];
            p.m[i] += md.alpha * fi.conj() * g;
            p.m_rev[i] += fi * md.alpha.conj() * g;
            for j in 0..na {
                p.n[i][j] += fi * model.detectors[j].f[k].conj() * g;
            }
        }
    }
    if na > 0 {
        for c in &model.channels {
            let d = s + I * (c.omega - frame);
            if d.norm() < POLE_EPS {
                return Err(Error::PoleHit { re: s.re, im: s.im });
            }
            p.ell += c.mu * c.mu / d;
        }
    }
    Ok(p)
}

impl Propagators {
    /// Detector contribution to the self-energy, `mᵀ (1 + Λn)⁻¹ Λ m'`.
    pub fn detector_term(&self, scales: &[f64]) -> Result<C64> {
        let na = self.m.len();
        match na {
            0 => Ok(C64::default()),
            1 => {
                let l = self.ell * scales[0] * scales[0];
                let den = 1.0 + l * self.n[0][0];
                if den.norm() < 1e-300 {
                    return Err(Error::Singular);
                }
                Ok(self.m[0] * l * self.m_rev[0] / den)
            }
            _ => {
                let lam: Vec<C64> = scales.iter().map(|sc| self.ell * sc * sc).collect();
                let a = DMatrix::from_fn(na, na, |i, j| {
                    let id = if i == j { C64::new(1.0, 0.0) } else { C64::default() };
                    id + lam[i] * self.n[i][j]
                });
                let rhs = DVector::from_fn(na, |i, _| lam[i] * self.m_rev[i]);
                let x = a.lu().solve(&rhs).ok_or(Error::Singular)?;
                Ok((0..na).map(|i| self.m[i] * x[i]).sum())
            }
        }
    }

    /// Full self-energy `Σ(s) = K − mᵀ(1 + Λn)⁻¹Λm'`.
    pub fn self_energy(&self, scales: &[f64]) -> Result<C64> {
        Ok(self.k - self.detector_term(scales)?)
    }
}

fn scales(model: &DiscreteModel) -> Vec<f64> {
    model.detectors.iter().map(|d| d.scale).collect()
}

/// `A₀(s)` in the frame rotating at `frame` (Woodbury reduction).
pub fn resolvent_a0_frame(s: C64, model: &DiscreteModel, frame: f64) -> Result<C64> {
    let p = propagators(model, s, frame)?;
    let sigma = p.self_energy(&scales(model))?;
    let den = s + I * (model.omega_atom - frame) + sigma;
    if den.norm() < 1e-300 {
        return Err(Error::Singular);
    }
    Ok(den.inv())
}

/// Lab-frame `A₀(s)`.
pub fn resolvent_a0_discrete(s: C64, model: &DiscreteModel) -> Result<C64> {
    resolvent_a0_frame(s, model, 0.0)
}

/// Lab-frame `A₀(s)` from the dense atom + channel system (checking path).
pub fn resolvent_a0_dense(s: C64, model: &DiscreteModel) -> Result<C64> {
    let p = propagators(model, s, 0.0)?;
    let nc = model.n_channels();
    let na = model.n_atoms();
    let dim = 1 + nc * na;
    let sc = scales(model);
    let idx = |i: usize, c: usize| 1 + i * nc + c;
    let mut a = DMatrix::<C64>::zeros(dim, dim);
    a[(0, 0)] = s + I * model.omega_atom + p.k;
    for i in 0..na {
        for c in 0..nc {
            let mu = model.channels[c].mu * sc[i];
            a[(0, idx(i, c))] = mu * p.m[i];
            a[(idx(i, c), 0)] = mu * p.m_rev[i];
            a[(idx(i, c), idx(i, c))] += s + I * model.channels[c].omega;
            for j in 0..na {
                for c2 in 0..nc {
                    let mu2 = model.channels[c2].mu * sc[j];
                    a[(idx(i, c), idx(j, c2))] += mu * mu2 * p.n[i][j];
                }
            }
        }
    }
    let mut rhs = DVector::<C64>::zeros(dim);
    rhs[0] = C64::new(1.0, 0.0);
    let x = a.lu().solve(&rhs).ok_or(Error::Singular)?;
    Ok(x[0])
}

/// `U = Re Σ(s) / Re K(s)` from the model's own discrete kernels.
pub fn u_discrete(model: &DiscreteModel, s: C64) -> Result<f64> {
    let p = propagators(model, s, 0.0)?;
    Ok(p.self_energy(&scales(model))?.re / p.k.re)
}

/// Weisskopf–Wigner evaluation point `−iω₀ + Γ/2`.
pub fn ww_point(model: &DiscreteModel) -> C64 {
    C64::new(0.5 * model.gamma, -model.omega0)
}

/// `max_i |m_i − m'_i| / max(|m_i|, |m'_i|)`: how far the two directed
/// atom–detector kernels are from being equal.
pub fn directed_asymmetry(model: &DiscreteModel, s: C64) -> Result<f64> {
    let p = propagators(model, s, 0.0)?;
    Ok(p.m
        .iter()
        .zip(&p.m_rev)
        .map(|(a, b)| {
            let d = a.norm().max(b.norm());
            if d > 0.0 {
                (a - b).norm() / d
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max))
}

// ---------------------------------------------------------------- continuum

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DKernel {
    /// The printed `D` ([`geometry::d_func`]).
    Printed,
    /// The angular kernel of the sphere integral ([`geometry::angular_kernel`]).
    Oracle,
    /// `4π l sin z / z`.
    FarField,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelMode {
    /// Kernels frozen at `ω₀`: `I = 2ω₀³/3`, `J = ω₀³ D/4π`, `L = πμ_c²ρ(ω₀)`.
    WeisskopfWigner,
    /// Frequency integrals with cutoffs, by composite Gauss–Legendre with
    /// `nodes` per panel; `tol` bounds the change when the nodes are doubled.
    Quadrature { nodes: usize, tol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelOptions {
    pub d: DKernel,
    pub mode: KernelMode,
    /// Drop `L·I` against one in the denominator of `U`.
    pub neglect_li: bool,
    /// Keep only real parts of `I`, `J`, `L` (discard the level shift).
    pub real_part: bool,
    /// Photon cutoff for the quadrature mode.
    pub omega_cut: f64,
}

impl Default for KernelOptions {
    fn default() -> Self {
        Self {
            d: DKernel::Oracle,
            mode: KernelMode::WeisskopfWigner,
            neglect_li: false,
            real_part: true,
            omega_cut: 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kernels {
    pub i: C64,
    pub j: C64,
    pub l: C64,
    pub u: C64,
}

fn d_value(kind: DKernel, g: &DipoleGeometry) -> f64 {
    match kind {
        DKernel::Printed => geometry::d_func(g),
        DKernel::Oracle => geometry::angular_kernel(g),
        DKernel::FarField => 4.0 * PI * g.l() * geometry::s_func(g.z),
    }
}

/// `∫₀^Λ ω³/(ω + c) dω` in closed form.
fn cubic_log_integral(lambda: f64, c: C64) -> C64 {
    let l = C64::new(lambda, 0.0);
    l.powi(3) / 3.0 - c * l * l / 2.0 + c * c * l - c.powi(3) * ((l + c) / c).ln()
}

/// `I(s) = (2/3π) ∫₀^Λ ω³/(s + iω) dω` on the principal sheet (`Re s > 0`).
pub fn i_continuum(s: C64, omega_cut: f64) -> C64 {
    let c = -I * s;
    2.0 / (3.0 * PI) * (-I) * cubic_log_integral(omega_cut, c)
}

fn gl_integral<F: Fn(f64) -> C64>(f: &F, breaks: &[f64], nodes: usize) -> C64 {
    let mut acc = C64::default();
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            let r = quad::gauss_legendre(nodes, w[0], w[1]);
            for (&x, &wt) in r.nodes.iter().zip(&r.weights) {
                acc += f(x) * wt;
            }
        }
    }
    acc
}

fn converged<F: Fn(f64) -> C64>(f: F, breaks: &[f64], nodes: usize, tol: f64) -> Result<C64> {
    let a = gl_integral(&f, breaks, nodes);
    let b = gl_integral(&f, breaks, 2 * nodes);
    let err = (a - b).norm();
    if err > tol * b.norm().max(1e-300) {
        return Err(Error::Quadrature(format!("relative change {:.3e} on doubling nodes", err / b.norm())));
    }
    Ok(b)
}

/// Continuum kernels `I`, `J`, `L` and `U = 1 − L J² / (I (1 + L I))`.
pub fn kernels_continuum(
    s: C64,
    geom: &DipoleGeometry,
    system: &PhysicalSystem,
    opts: &KernelOptions,
) -> Result<Kernels> {
    let w0 = system.omega0;
    let mu_c = system.mu_c();
    let dos = &system.dos_model;
    let (mut i, mut j, mut l) = match opts.mode {
        KernelMode::WeisskopfWigner => {
            let i = C64::new(2.0 * w0.powi(3) / 3.0, 0.0);
            let j = C64::new(w0.powi(3) / (4.0 * PI) * d_value(opts.d, geom), 0.0);
            let l = C64::new(PI * mu_c * mu_c * dos.normalization, 0.0);
            (i, j, l)
        }
        KernelMode::Quadrature { nodes, tol } => {
            if s.re <= 0.0 {
                return Err(Error::InvalidInput("continuum kernels need Re s > 0".into()));
            }
            let split = (-s.im).clamp(0.0, opts.omega_cut);
            let i = i_continuum(s, opts.omega_cut);
            let z_per_omega = geom.z / w0;
            let jf = |w: f64| {
                let g = geom.with_z(w * z_per_omega);
                w.powi(3) * d_value(opts.d, &g) / (s + I * w)
            };
            let j = converged(jf, &[0.0, split, opts.omega_cut], nodes, tol)? / (4.0 * PI * PI);
            let lf = |w: f64| mu_c * mu_c * dos.density(w, w0) / (s + I * w);
            let csplit = split.clamp(system.omega_i, dos.omega_cut_c);
            let l = converged(lf, &[system.omega_i, csplit, dos.omega_cut_c], nodes, tol)?;
            (i, j, l)
        }
    };
    if opts.real_part {
        i = C64::new(i.re, 0.0);
        j = C64::new(j.re, 0.0);
        l = C64::new(l.re, 0.0);
    }
    let den = if opts.neglect_li { i } else { i * (1.0 + l * i) };
    let u = if den.norm() > 0.0 { 1.0 - l * j * j / den } else { C64::new(1.0, 0.0) };
    Ok(Kernels { i, j, l, u })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WwPole {
    pub rate: f64,
    pub shift: f64,
}

/// Effective pole `μ_a² I U`: decay rate `2 Re`, frequency shift `−Im`.
/// Requires the magnitude checks of `system` to pass.
pub fn ww_pole(system: &PhysicalSystem, kernels: &Kernels) -> Result<WwPole> {
    let m = magnitude_checks(system);
    if !(m.li_small && m.mu2i_small) {
        return Err(Error::Regime(format!("L*I = {:.3e}, mu_a^2 I/omega0 = {:.3e}", m.li, m.mu2_i)));
    }
    let z = system.mu_a * system.mu_a * kernels.i * kernels.u;
    Ok(WwPole { rate: 2.0 * z.re, shift: -z.im })
}

/// Decay pole of the continuum atom-only model with cutoff `omega_cut` and
/// bare frequency `omega_atom`, found by Newton iteration on the analytic
/// continuation `s + iω_a + μ_a² I(s) + Γ (is)³ = 0`. Returns `(rate, frequency)`.
pub fn continuum_vacuum_pole(gamma: f64, omega0: f64, omega_atom: f64, omega_cut: f64) -> Result<(f64, f64)> {
    let mu2 = 0.75 * gamma / omega0.powi(3);
    let f = |s: C64| s + I * omega_atom + mu2 * i_continuum(s, omega_cut) + gamma / omega0.powi(3) * (I * s).powi(3);
    let mut s = C64::new(-0.5 * gamma, -omega0);
    for _ in 0..100 {
        let h = 1e-7;
        let fs = f(s);
        let df = (f(s + h) - f(s - h)) / (2.0 * h);
        let step = fs / df;
        s -= step;
        if step.norm() < 1e-15 {
            return Ok((-2.0 * s.re, -s.im));
        }
    }
    Err(Error::NotConverged { estimate: f(s).norm(), tol: 1e-15 })
}

/// Level-shift counterterm of the continuum model: `ω₀ − Im μ_a² I(−iω₀ + Γ/2)`.
pub fn continuum_bare_frequency(gamma: f64, omega0: f64, omega_cut: f64) -> f64 {
    let mu2 = 0.75 * gamma / omega0.powi(3);
    omega0 - (mu2 * i_continuum(C64::new(0.5 * gamma, -omega0), omega_cut)).im
}

// ---------------------------------------------------------------- inversion

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Bromwich,
    Talbot,
}

/// Rectangle in the `s` plane containing every singularity of the transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularRegion {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl SingularRegion {
    /// Poles on the imaginary axis at `s = −i(ω − frame)` for `ω ∈ [lo, hi]`.
    pub fn spectrum(lo: f64, hi: f64, frame: f64) -> Self {
        Self { re_min: 0.0, re_max: 0.0, im_min: -(hi - frame), im_max: -(lo - frame) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContourSpec {
    pub method: Method,
    /// Target aliasing error of the Bromwich trapezoid.
    pub eps: f64,
    /// Period of the trapezoid in units of the latest output time.
    pub period_factor: f64,
    /// Half-length of the truncated Bromwich line.
    pub y_max: f64,
    /// Laurent orders removed analytically from the transform.
    pub tail_orders: usize,
    pub circle_points: usize,
    pub singular: Option<SingularRegion>,
    /// Talbot node count.
    pub talbot_nodes: usize,
    /// Error when the two-resolution estimate exceeds this.
    pub tol: f64,
    pub exec: Exec,
}

impl Default for ContourSpec {
    fn default() -> Self {
        Self {
            method: Method::Bromwich,
            eps: 1e-12,
            period_factor: 7.0,
            y_max: 100.0,
            tail_orders: 6,
            circle_points: 128,
            singular: None,
            talbot_nodes: 24,
            tol: 1e-7,
            exec: Exec::Parallel,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Inversion {
    pub values: Vec<C64>,
    /// Largest difference between the full and the reduced-resolution result.
    pub error_estimate: f64,
}

struct Tail {
    b: C64,
    coef: Vec<C64>,
}

impl Tail {
    fn at_s(&self, s: C64) -> C64 {
        let u = (s + self.b).inv();
        let mut p = u;
        let mut acc = C64::default();
        for c in &self.coef {
            acc += c * p;
            p *= u;
        }
        acc
    }

    fn at_t(&self, t: f64) -> C64 {
        let mut acc = C64::default();
        let mut pw = 1.0;
        for (k, c) in self.coef.iter().enumerate() {
            if k > 0 {
                pw *= t / k as f64;
            }
            acc += c * pw;
        }
        acc * (-self.b * t).exp()
    }
}

fn laurent_tail<F>(f: &F, region: &SingularRegion, spec: &ContourSpec) -> Result<Tail>
where
    F: Fn(C64) -> Result<C64> + Sync,
{
    let im_mid = 0.5 * (region.im_min + region.im_max);
    let center = C64::new(region.re_min.min(0.0) - 1.0, im_mid);
    let corners = [
        C64::new(region.re_min, region.im_min),
        C64::new(region.re_min, region.im_max),
        C64::new(region.re_max, region.im_min),
        C64::new(region.re_max, region.im_max),
    ];
    let reach = corners.iter().map(|c| (c - center).norm()).fold(0.0, f64::max);
    let radius = 1.25 * reach + 0.1;
    let m = spec.circle_points;
    let vals: Vec<(C64, C64)> = par::map_range(spec.exec, m, |j| {
        let u = C64::from_polar(radius, 2.0 * PI * j as f64 / m as f64);
        (u, f(center + u))
    })
    .into_iter()
    .map(|(u, v)| v.map(|v| (u, v)))
    .collect::<Result<_>>()?;
    let coef = (1..=spec.tail_orders)
        .map(|k| vals.iter().map(|(u, v)| v * u.powi(k as i32)).sum::<C64>() / m as f64)
        .collect();
    Ok(Tail { b: -center, coef })
}

/// Numerical inverse Laplace transform of `f` at the (positive) `times`.
pub fn invert_laplace<F>(f: F, times: &[f64], spec: &ContourSpec) -> Result<Inversion>
where
    F: Fn(C64) -> Result<C64> + Sync,
{
    if times.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::InvalidInput("inversion times must be positive".into()));
    }
    let out = match spec.method {
        Method::Bromwich => bromwich(&f, times, spec)?,
        Method::Talbot => talbot(&f, times, spec)?,
    };
    if out.error_estimate > spec.tol {
        return Err(Error::NotConverged { estimate: out.error_estimate, tol: spec.tol });
    }
    Ok(out)
}

fn bromwich<F>(f: &F, times: &[f64], spec: &ContourSpec) -> Result<Inversion>
where
    F: Fn(C64) -> Result<C64> + Sync,
{
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    if times.is_empty() {
        return Ok(Inversion { values: vec![], error_estimate: 0.0 });
    }
    let period = spec.period_factor * t_max;
    let sigma = (1.0 / spec.eps).ln() / (period - t_max);
    let h = 2.0 * PI / period;
    let region = spec.singular;
    let tail = match region {
        Some(r) if spec.tail_orders > 0 => Some(laurent_tail(f, &r, spec)?),
        _ => None,
    };
    let y_mid = region.map(|r| 0.5 * (r.im_min + r.im_max)).unwrap_or(0.0);
    let n = (spec.y_max / h).ceil() as i64;
    let n_red = ((0.8 * spec.y_max) / h).ceil() as i64;

    // g(s_j) on the line, j = −n..n
    let idx: Vec<i64> = (-n..=n).collect();
    let g: Vec<C64> = par::map_slice(spec.exec, &idx, |&j| {
        let s = C64::new(sigma, y_mid + j as f64 * h);
        f(s).map(|v| v - tail.as_ref().map_or(C64::default(), |tl| tl.at_s(s)))
    })
    .into_iter()
    .collect::<Result<_>>()?;

    let eval = |t: f64, m: i64| -> C64 {
        let mut acc = C64::default();
        let rot = C64::from_polar(1.0, h * t);
        let mut e = C64::from_polar(1.0, (y_mid - m as f64 * h) * t);
        for j in -m..=m {
            let w = if j.abs() == m { 0.5 } else { 1.0 };
            acc += g[(j + n) as usize] * e * w;
            e *= rot;
        }
        acc * (sigma * t).exp() * h / (2.0 * PI)
    };
    let res: Vec<(C64, f64)> = par::map_slice(spec.exec, times, |&t| {
        let full = eval(t, n);
        let red = eval(t, n_red);
        let base = tail.as_ref().map_or(C64::default(), |tl| tl.at_t(t));
        (full + base, (full - red).norm())
    });
    let error_estimate = res.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(Inversion { values: res.into_iter().map(|r| r.0).collect(), error_estimate })
}

fn talbot_at<F>(f: &F, t: f64, m: usize) -> Result<C64>
where
    F: Fn(C64) -> Result<C64>,
{
    let r = 2.0 * m as f64 / (5.0 * t);
    let mut acc = 0.5 * f(C64::new(r, 0.0))? * (r * t).exp();
    for k in 1..m {
        let th = k as f64 * PI / m as f64;
        let cot = th.cos() / th.sin();
        let sg = th + (th * cot - 1.0) * cot;
        for sgn in [1.0, -1.0] {
            let s = C64::new(r * th * cot, sgn * r * th);
            acc += 0.5 * (s * t).exp() * f(s)? * C64::new(1.0, sgn * sg);
        }
    }
    Ok(acc * r / m as f64)
}

fn talbot<F>(f: &F, times: &[f64], spec: &ContourSpec) -> Result<Inversion>
where
    F: Fn(C64) -> Result<C64> + Sync,
{
    let m = spec.talbot_nodes.max(4);
    let m_red = (3 * m) / 4;
    let res: Vec<Result<(C64, f64)>> = par::map_slice(spec.exec, times, |&t| {
        let a = talbot_at(f, t, m)?;
        let b = talbot_at(f, t, m_red)?;
        Ok((a, (a - b).norm()))
    });
    let res: Vec<(C64, f64)> = res.into_iter().collect::<Result<_>>()?;
    let error_estimate = res.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(Inversion { values: res.into_iter().map(|r| r.0).collect(), error_estimate })
}

/// Singular region of a model's rotating-frame resolvent.
pub fn model_region(model: &DiscreteModel, frame: f64) -> SingularRegion {
    let mut lo = model.omega_atom;
    let mut hi = model.omega_atom;
    for m in &model.modes {
        lo = lo.min(m.omega);
        hi = hi.max(m.omega);
    }
    if !model.detectors.is_empty() {
        for c in &model.channels {
            lo = lo.min(c.omega);
            hi = hi.max(c.omega);
        }
    }
    // eigenvalues of the coupled generator stay within a coupling width of the bare band
    let pad = 0.1 * (hi - lo).max(1.0);
    SingularRegion::spectrum(lo - pad, hi + pad, frame)
}

/// Lab-frame `A₀(t)` of a discrete model by Bromwich inversion of its
/// rotating-frame resolvent.
pub fn a0_by_inversion(model: &DiscreteModel, times: &[f64], spec: &ContourSpec) -> Result<Inversion> {
    let frame = model.omega0;
    let spec = ContourSpec { singular: Some(spec.singular.unwrap_or_else(|| model_region(model, frame))), ..*spec };
    let positive: Vec<f64> = times.iter().copied().filter(|&t| t > 0.0).collect();
    let inv = invert_laplace(|s| resolvent_a0_frame(s, model, frame), &positive, &spec)?;
    let mut it = inv.values.into_iter();
    let values = times
        .iter()
        .map(|&t| {
            if t > 0.0 {
                it.next().unwrap_or_default() * C64::from_polar(1.0, -frame * t)
            } else {
                C64::new(1.0, 0.0)
            }
        })
        .collect();
    Ok(Inversion { values, error_estimate: inv.error_estimate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_mode_k() {
        let modes = [Mode { omega: 1.0, alpha: C64::new(0.1, 0.0) }];
        let k = k_sum(&modes, C64::new(1.0, 0.0));
        assert_abs_diff_eq!(k.re, 0.005, epsilon = 1e-16);
        assert_abs_diff_eq!(k.im, -0.005, epsilon = 1e-16);
    }

    #[test]
    fn closed_form_i_matches_quadrature() {
        let s = C64::new(0.3, -0.7);
        let f = |w: f64| w.powi(3) / (s + I * w);
        let q = gl_integral(&f, &[0.0, 4.0], 200) * (2.0 / (3.0 * PI));
        assert!((q - i_continuum(s, 4.0)).norm() < 1e-12);
    }

    #[test]
    fn known_pairs() {
        let spec = ContourSpec {
            singular: Some(SingularRegion { re_min: -0.01, re_max: 0.0, im_min: -1.0, im_max: 0.0 }),
            ..ContourSpec::default()
        };
        let ts: Vec<f64> = (1..=40).map(|i| i as f64 * 5.0).collect();
        let r = invert_laplace(|s| Ok(1.0 / (s + 0.01)), &ts, &spec).unwrap();
        for (t, v) in ts.iter().zip(&r.values) {
            assert!((v - (-0.01 * t).exp()).norm() < 1e-8);
        }
        let r = invert_laplace(|s| Ok(1.0 / (s + I)), &ts, &spec).unwrap();
        for (t, v) in ts.iter().zip(&r.values) {
            assert!((v - C64::from_polar(1.0, -t)).norm() < 1e-8);
        }
    }

    #[test]
    fn talbot_smooth_pair() {
        let spec = ContourSpec { method: Method::Talbot, ..ContourSpec::default() };
        let ts = [0.5, 1.0, 5.0, 20.0];
        let r = invert_laplace(|s| Ok(1.0 / (s + 0.3)), &ts, &spec).unwrap();
        for (t, v) in ts.iter().zip(&r.values) {
            assert!((v - (-0.3 * t).exp()).norm() < 1e-8, "{t} {v}");
        }
    }
}
