//! Time-domain route: amplitude equations of motion on a [`DiscreteModel`].
//!
//! State layout is `[A₀, A_k (modes), A_{c,0} (channels of atom 0), A_{c,1}, …]`.
//! Integration runs in a frame rotating at `Ω` (default `ω₀`): every amplitude
//! is multiplied by `e^{iΩt}`, so frequencies enter as detunings `ω − Ω`.
//! Trajectories always store the lab-frame `A₀(t)`.

use serde::{Deserialize, Serialize};

use crate::discretize::{DiscreteModel, ModelKind};
use crate::ode::{self, OdeSystem};
use crate::par::{self, Exec};
use crate::resolvent::{self, ContourSpec};
use crate::{Error, Result, C64, I};

#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeState {
    pub t: f64,
    pub a0: C64,
    pub a_k: Vec<C64>,
    /// One block of `n_channels` amplitudes per detector atom.
    pub a_c: Vec<C64>,
}

impl AmplitudeState {
    /// Excited atom, empty field, detector in its ground state.
    pub fn initial(model: &DiscreteModel) -> Self {
        Self {
            t: 0.0,
            a0: C64::new(1.0, 0.0),
            a_k: vec![C64::default(); model.n_modes()],
            a_c: vec![C64::default(); model.n_channels() * model.n_atoms()],
        }
    }

    pub fn norm(&self) -> f64 {
        self.a0.norm_sqr()
            + self.a_k.iter().map(|x| x.norm_sqr()).sum::<f64>()
            + self.a_c.iter().map(|x| x.norm_sqr()).sum::<f64>()
    }

    pub fn to_vec(&self) -> Vec<C64> {
        let mut v = Vec::with_capacity(1 + self.a_k.len() + self.a_c.len());
        v.push(self.a0);
        v.extend_from_slice(&self.a_k);
        v.extend_from_slice(&self.a_c);
        v
    }

    pub fn from_slice(t: f64, y: &[C64], model: &DiscreteModel) -> Result<Self> {
        let k = model.n_modes();
        if y.len() != model.state_len() {
            return Err(Error::DimensionMismatch { expected: model.state_len(), found: y.len() });
        }
        Ok(Self { t, a0: y[0], a_k: y[1..1 + k].to_vec(), a_c: y[1 + k..].to_vec() })
    }
}

/// Right-hand side of the amplitude equations in a frame rotating at `frame`.
pub struct Rhs<'a> {
    model: &'a DiscreteModel,
    frame: f64,
    exec: Exec,
    alpha_conj: Vec<C64>,
}

/// Modes per parallel chunk; smaller models run serially.
const CHUNK: usize = 4096;

impl<'a> Rhs<'a> {
    pub fn new(model: &'a DiscreteModel, frame: f64, exec: Exec) -> Self {
        let exec = if model.n_modes() < 2 * CHUNK { Exec::Serial } else { exec };
        Self { model, frame, exec, alpha_conj: model.modes.iter().map(|m| m.alpha.conj()).collect() }
    }

    pub fn eval(&self, y: &[C64], dy: &mut [C64]) {
        let m = self.model;
        let nk = m.n_modes();
        let nc = m.n_channels();
        let na = m.n_atoms();
        let a0 = y[0];
        let ak = &y[1..1 + nk];
        let ac = &y[1 + nk..];

        // Σ α_k A_k and F_i = Σ f_{k,i} A_k
        let red = par::fold_chunks(
            self.exec,
            nk,
            CHUNK,
            vec![C64::default(); 1 + na],
            |r| {
                let mut acc = vec![C64::default(); 1 + na];
                for k in r {
                    acc[0] += m.modes[k].alpha * ak[k];
                    for (i, d) in m.detectors.iter().enumerate() {
                        acc[1 + i] += d.f[k] * ak[k];
                    }
                }
                acc
            },
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );

        // B_i = s_i Σ_c μ_c A_{c,i}
        let b: Vec<C64> = (0..na)
            .map(|i| {
                let blk = &ac[i * nc..(i + 1) * nc];
                m.detectors[i].scale * m.channels.iter().zip(blk).map(|(c, x)| x * c.mu).sum::<C64>()
            })
            .collect();

        dy[0] = -I * ((m.omega_atom - self.frame) * a0 + red[0]);

        let (_, rest) = dy.split_at_mut(1);
        let (dk, dc) = rest.split_at_mut(nk);
        let frame = self.frame;
        let ac_ = &self.alpha_conj;
        par::for_each_chunk_mut(self.exec, dk, CHUNK, |off, out| {
            for (j, o) in out.iter_mut().enumerate() {
                let k = off + j;
                let mut v = (m.modes[k].omega - frame) * ak[k] + ac_[k] * a0;
                for (i, d) in m.detectors.iter().enumerate() {
                    v += d.f[k].conj() * b[i];
                }
                *o = -I * v;
            }
        });

        for i in 0..na {
            let f_i = red[1 + i];
            let sc = m.detectors[i].scale;
            for (c, ch) in m.channels.iter().enumerate() {
                let idx = i * nc + c;
                dc[idx] = -I * ((ch.omega - frame) * ac[idx] + ch.mu * sc * f_i);
            }
        }
    }
}

impl OdeSystem for Rhs<'_> {
    fn rhs(&self, _t: f64, y: &[C64], dy: &mut [C64]) {
        self.eval(y, dy)
    }
}

/// Lab-frame time derivative of `state`.
pub fn derivative(state: &AmplitudeState, model: &DiscreteModel) -> Result<AmplitudeState> {
    let y = state.to_vec();
    if y.len() != model.state_len() {
        return Err(Error::DimensionMismatch { expected: model.state_len(), found: y.len() });
    }
    let mut dy = vec![C64::default(); y.len()];
    Rhs::new(model, 0.0, Exec::Serial).eval(&y, &mut dy);
    AmplitudeState::from_slice(state.t, &dy, model)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSpec {
    pub rtol: f64,
    pub atol: f64,
    /// Integrate in the frame rotating at `ω₀` (otherwise in the lab frame).
    pub rotating_frame: bool,
    pub max_steps: usize,
    pub exec: Exec,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self { rtol: 1e-9, atol: 1e-12, rotating_frame: true, max_steps: 2_000_000, exec: Exec::Parallel }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub kind: ModelKind,
    pub n_modes: usize,
    pub n_channels: usize,
    pub n_atoms: usize,
    pub t_rec: f64,
    pub gamma: f64,
    pub solver: SolverSpec,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub rhs_evals: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Lab-frame atom amplitude.
    pub a0: Vec<C64>,
    pub survival: Vec<f64>,
    /// `norm(t) − 1`.
    pub norm_drift: Vec<f64>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn max_norm_drift(&self) -> f64 {
        self.norm_drift.iter().fold(0.0, |a, &b| a.max(b.abs()))
    }

    pub fn t_end(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }
}

/// `n + 1` equally spaced times on `[0, t_max]`.
pub fn uniform_times(t_max: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| t_max * i as f64 / n as f64).collect()
}

/// Integrate from the excited-atom initial state through `times`.
pub fn integrate(model: &DiscreteModel, times: &[f64], solver: &SolverSpec) -> Result<Trajectory> {
    if times.is_empty() {
        return Err(Error::InvalidInput("no output times".into()));
    }
    if times[0] < 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("output times must be non-negative and strictly increasing".into()));
    }
    let t_max = *times.last().unwrap();
    if t_max > model.t_rec {
        return Err(Error::Recurrence { t_rec: model.t_rec, horizon: t_max });
    }
    let frame = if solver.rotating_frame { model.omega0 } else { 0.0 };
    let rhs = Rhs::new(model, frame, solver.exec);
    let y0 = AmplitudeState::initial(model).to_vec();
    let opts =
        ode::Options { rtol: solver.rtol, atol: solver.atol, max_steps: solver.max_steps, ..ode::Options::default() };

    let n = times.len();
    let mut a0 = Vec::with_capacity(n);
    let mut survival = Vec::with_capacity(n);
    let mut norm_drift = Vec::with_capacity(n);
    let stats = ode::integrate(&rhs, 0.0, &y0, times, &opts, |t, y| {
        let lab = y[0] * C64::from_polar(1.0, -frame * t);
        a0.push(lab);
        survival.push(lab.norm_sqr());
        norm_drift.push(y.iter().map(|x| x.norm_sqr()).sum::<f64>() - 1.0);
    })?;
    Ok(Trajectory {
        times: times.to_vec(),
        a0,
        survival,
        norm_drift,
        meta: TrajectoryMeta {
            kind: model.kind,
            n_modes: model.n_modes(),
            n_channels: model.n_channels(),
            n_atoms: model.n_atoms(),
            t_rec: model.t_rec,
            gamma: model.gamma,
            solver: *solver,
            accepted_steps: stats.accepted,
            rejected_steps: stats.rejected,
            rhs_evals: stats.evals,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub rate: f64,
    pub stderr: f64,
    pub window: [f64; 2],
    pub r_squared: f64,
    pub samples: usize,
}

/// Least-squares fit of `log P(t) = a − rate·t` over samples in `window`.
pub fn fit_decay_rate(traj: &Trajectory, window: [f64; 2]) -> Result<RateFit> {
    let [lo, hi] = window;
    if !(lo < hi) {
        return Err(Error::FitWindow(format!("empty window [{lo}, {hi}]")));
    }
    let mut pts = Vec::new();
    for (&t, &p) in traj.times.iter().zip(&traj.survival) {
        if t >= lo && t <= hi {
            if !(p > 0.0) {
                return Err(Error::NonPositiveSurvival(t));
            }
            pts.push((t, p.ln()));
        }
    }
    let n = pts.len();
    if n < 10 {
        return Err(Error::FitWindow(format!("{n} samples in [{lo}, {hi}], need at least 10")));
    }
    let nf = n as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - ym).powi(2)).sum();
    let slope = sxy / sxx;
    let ssr: f64 = pts.iter().map(|p| (p.1 - ym - slope * (p.0 - tm)).powi(2)).sum();
    let stderr = (ssr / (nf - 2.0) / sxx).sqrt();
    let r_squared = if syy > 0.0 { 1.0 - ssr / syy } else { 1.0 };
    Ok(RateFit { rate: -slope, stderr, window, r_squared, samples: n })
}

/// Default fit window: after the early transient (`max(10/ω₀, 0.2/Γ)`) and
/// before `t_rec / 1.5`.
pub fn default_window(traj: &Trajectory, gamma_expected: f64) -> [f64; 2] {
    let lo = 10.0f64.max(if gamma_expected > 0.0 { 0.2 / gamma_expected } else { 0.0 });
    let hi = traj.t_end().min(traj.meta.t_rec / 1.5);
    [lo, hi]
}

/// Exponent `p` of `1 − P(t) ∝ t^p` by a log-log fit over samples in `window`.
pub fn early_time_exponent(traj: &Trajectory, window: [f64; 2]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(&traj.survival)
        .filter(|(t, _)| **t >= window[0] && **t <= window[1])
        .map(|(&t, &p)| (t.ln(), (1.0 - p).max(f64::MIN_POSITIVE).ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::FitWindow("fewer than 3 samples for the early-time exponent".into()));
    }
    let nf = pts.len() as f64;
    let xm = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxy: f64 = pts.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - xm).powi(2)).sum();
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteComparison {
    pub max_diff: f64,
    pub ode: Trajectory,
    pub resolvent: Vec<C64>,
    pub inversion_error_estimate: f64,
}

/// Largest model (modes plus channel amplitudes) accepted by [`compare_routes`].
pub const ROUTE_MAX_SIZE: usize = 2000;

/// Integrate `model` and invert its resolvent on the same `times`.
pub fn compare_routes(
    model: &DiscreteModel,
    times: &[f64],
    solver: &SolverSpec,
    contour: &ContourSpec,
) -> Result<RouteComparison> {
    if model.dense_size() > ROUTE_MAX_SIZE {
        return Err(Error::InvalidInput(format!(
            "model size {} exceeds {ROUTE_MAX_SIZE} for route comparison",
            model.dense_size()
        )));
    }
    let ode = integrate(model, times, solver)?;
    let inv = resolvent::a0_by_inversion(model, times, contour)?;
    let max_diff = ode.a0.iter().zip(&inv.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    Ok(RouteComparison { max_diff, ode, resolvent: inv.values, inversion_error_estimate: inv.error_estimate })
}
