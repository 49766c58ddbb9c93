//! Scenario execution. Everything here is pure computation; files are written
//! by [`crate::output`].

use serde::Serialize;
use wwdecay_core::analytic::{
    magnitude_checks, reduction_shell, reduction_shell_mc, reduction_single, ReductionReport, RegimeReport,
};
use wwdecay_core::discretize::{
    build_full_3d, build_radial_vacuum, build_scalar_toy, magic_angle_detector, DiscreteModel, ModelKind, ToySpec,
};
use wwdecay_core::dynamics::{
    compare_routes, default_window, fit_decay_rate, integrate, uniform_times, RateFit, Trajectory, ROUTE_MAX_SIZE,
};
use wwdecay_core::geometry::{normalization_report, probe_geometries, DipoleGeometry, McEstimate, NormalizationReport};
use wwdecay_core::model::PhysicalSystem;
use wwdecay_core::resolvent::{u_discrete, ww_point};
use wwdecay_core::{par, Error, Exec, C64};

use crate::config::{RouteModel, RunConfig, Scenario, SweepParam};
use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct ModelInfo {
    pub kind: ModelKind,
    pub n_modes: usize,
    pub n_channels: usize,
    pub n_atoms: usize,
    pub t_rec: f64,
    pub omega_atom: f64,
    pub level_shift: f64,
}

impl ModelInfo {
    fn of(m: &DiscreteModel) -> Self {
        Self {
            kind: m.kind,
            n_modes: m.n_modes(),
            n_channels: m.n_channels(),
            n_atoms: m.n_atoms(),
            t_rec: m.t_rec,
            omega_atom: m.omega_atom,
            level_shift: m.level_shift,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ShellResult {
    pub n_atoms: usize,
    pub radius_z: f64,
    pub beta: f64,
    /// Closed-form shell average.
    pub u_analytic: f64,
    /// Monte Carlo average of the additive far-field deficits.
    pub u_mc: McEstimate,
}

#[derive(Debug, Clone, Serialize)]
pub struct RouteSummary {
    pub max_diff: f64,
    pub inversion_error_estimate: f64,
    pub n_times: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub value: f64,
    pub fitted_rate: Option<f64>,
    pub rate_stderr: Option<f64>,
    /// `Γ·U` with the scenario's reference `U`.
    pub analytic_rate: Option<f64>,
    pub u_general: Option<f64>,
    pub u_far_field: Option<f64>,
    pub u_near_field: Option<f64>,
    pub u_oracle: Option<f64>,
    pub u_discrete: Option<f64>,
    pub u_mc: Option<f64>,
    pub route_disagreement: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub parameter: SweepParam,
    pub point_scenario: Scenario,
    pub rows: Vec<SweepRow>,
}

/// Everything a run produced. Serialized as `summary.json` minus the bulky
/// trajectory and route samples.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub scenario: Scenario,
    pub seed: u64,
    /// Input configuration with `output.dir` blanked, so the summary depends
    /// only on what was computed.
    pub config: RunConfig,
    pub warnings: Vec<String>,
    pub regime: RegimeReport,
    pub gamma: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<RateFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fitted_rate: Option<f64>,
    /// Reference `U` for `e^{−ΓUt}`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analytic_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reduction: Option<ReductionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u_discrete: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vacuum_fit: Option<RateFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_norm_drift: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shell: Option<ShellResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub routes: Option<RouteSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepResult>,
    pub normalization: NormalizationReport,
}

#[derive(Debug, Clone)]
pub struct RouteSamples {
    pub times: Vec<f64>,
    pub ode: Vec<C64>,
    pub resolvent: Vec<C64>,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub summary: Summary,
    pub trajectory: Option<Trajectory>,
    pub routes: Option<RouteSamples>,
    pub model: Option<DiscreteModel>,
}

/// Result of one scenario before it is wrapped into a [`Summary`].
#[derive(Default)]
struct Point {
    model: Option<DiscreteModel>,
    trajectory: Option<Trajectory>,
    fit: Option<RateFit>,
    vacuum_fit: Option<RateFit>,
    u: Option<f64>,
    reduction: Option<ReductionReport>,
    u_discrete: Option<f64>,
    shell: Option<ShellResult>,
    routes: Option<(RouteSummary, RouteSamples)>,
    warnings: Vec<String>,
}

/// Validate `cfg` and run its scenario.
pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.check()?;
    let system = prepared_system(&cfg.system);
    let report = system.validate().into_result()?;

    let mut warnings = report.warnings;
    let mut echo = cfg.clone();
    echo.output.dir = Default::default();
    let mut summary = Summary {
        schema_version: SCHEMA_VERSION,
        scenario: cfg.scenario,
        seed: cfg.seed,
        config: echo,
        warnings: vec![],
        regime: magnitude_checks(&system),
        gamma: system.gamma,
        model: None,
        fit: None,
        fitted_rate: None,
        u: None,
        analytic_rate: None,
        reduction: None,
        u_discrete: None,
        vacuum_fit: None,
        max_norm_drift: None,
        shell: None,
        routes: None,
        sweep: None,
        normalization: normalization_report(&probe_geometries()),
    };

    if cfg.scenario == Scenario::Sweep {
        summary.sweep = Some(run_sweep(cfg));
        summary.warnings = warnings;
        return Ok(Outcome { summary, trajectory: None, routes: None, model: None });
    }

    let p = run_point(cfg, cfg.scenario, true)?;
    warnings.extend(p.warnings);
    summary.warnings = warnings;
    summary.model = p.model.as_ref().map(ModelInfo::of);
    summary.fitted_rate = p.fit.map(|f| f.rate);
    summary.fit = p.fit;
    summary.u = p.u;
    summary.analytic_rate = p.u.map(|u| system.gamma * u);
    summary.reduction = p.reduction;
    summary.u_discrete = p.u_discrete;
    summary.vacuum_fit = p.vacuum_fit;
    summary.max_norm_drift = p.trajectory.as_ref().map(Trajectory::max_norm_drift);
    summary.shell = p.shell;
    let routes = p.routes.map(|(s, samples)| {
        summary.routes = Some(s);
        samples
    });
    let model = if cfg.output.dump_model { p.model } else { None };
    Ok(Outcome { summary, trajectory: p.trajectory, routes, model })
}

/// `mu_a` always follows `gamma`.
fn prepared_system(s: &PhysicalSystem) -> PhysicalSystem {
    s.clone().sync_mu_a()
}

fn times(cfg: &RunConfig, t_max: f64) -> Vec<f64> {
    uniform_times(t_max, cfg.output.samples)
}

fn fit(m: &DiscreteModel, cfg: &RunConfig) -> Result<(Trajectory, RateFit), CliError> {
    let tr = integrate(m, &times(cfg, cfg.grid.horizon), &cfg.solver)?;
    let f = fit_decay_rate(&tr, default_window(&tr, m.gamma))?;
    Ok((tr, f))
}

fn run_point(cfg: &RunConfig, scenario: Scenario, want_vacuum_fit: bool) -> Result<Point, CliError> {
    let system = prepared_system(&cfg.system);
    system.validate().into_result()?;
    let mut p = Point::default();
    match scenario {
        Scenario::Vacuum => {
            let m = build_radial_vacuum(&system, &cfg.grid)?;
            let (tr, f) = fit(&m, cfg)?;
            p.u = Some(1.0);
            p.fit = Some(f);
            p.trajectory = Some(tr);
            p.model = Some(m);
        }
        Scenario::SingleDetector => {
            let (sys, geom) = single_detector(&system, cfg)?;
            let rep = reduction_single(&geom, sys.beta);
            let m = build_full_3d(&sys, &cfg.grid)?;
            let (tr, f) = fit(&m, cfg)?;
            if want_vacuum_fit {
                p.vacuum_fit = Some(fit(&m.vacuum_part(), cfg)?.1);
            }
            p.u_discrete = Some(u_discrete(&m, ww_point(&m))?);
            p.u = Some(rep.u_oracle);
            p.reduction = Some(rep);
            p.fit = Some(f);
            p.trajectory = Some(tr);
            p.model = Some(m);
        }
        Scenario::ToyDynamics => {
            let m = build_scalar_toy(&toy_spec(&system, cfg))?;
            let (tr, f) = fit(&m, cfg)?;
            if want_vacuum_fit {
                p.vacuum_fit = Some(fit(&m.vacuum_part(), cfg)?.1);
            }
            let u = u_discrete(&m, ww_point(&m))?;
            p.u_discrete = Some(u);
            p.u = Some(u);
            p.fit = Some(f);
            p.trajectory = Some(tr);
            p.model = Some(m);
        }
        Scenario::Shell => {
            let s = &cfg.shell;
            if !(s.radius_z.is_finite() && s.radius_z > 0.0) {
                return Err(Error::InvalidInput("shell.radius_z must be finite and positive".into()).into());
            }
            let u = reduction_shell(s.n_atoms, s.radius_z, system.beta);
            let mc = reduction_shell_mc(
                s.n_atoms,
                s.radius_z,
                system.beta,
                s.samples,
                cfg.substream("shell_mc"),
                Exec::Parallel,
            );
            if u < 0.0 {
                p.warnings.push(format!("shell U = {u:.4} < 0: additive deficits exceed one"));
            }
            p.u = Some(u);
            p.shell = Some(ShellResult {
                n_atoms: s.n_atoms,
                radius_z: s.radius_z,
                beta: system.beta,
                u_analytic: u,
                u_mc: mc,
            });
        }
        Scenario::RouteCompare => {
            let m = match cfg.route_model {
                RouteModel::Vacuum => build_radial_vacuum(&system, &cfg.grid)?,
                RouteModel::Toy => build_scalar_toy(&toy_spec(&system, cfg))?,
                RouteModel::Full3d => build_full_3d(&single_detector(&system, cfg)?.0, &cfg.grid)?,
            };
            let (summary, samples) = routes(&m, cfg)?;
            p.routes = Some((summary, samples));
            p.model = Some(m);
        }
        Scenario::Sweep => return Err(CliError::Config("nested sweep".into())),
    }
    Ok(p)
}

fn routes(m: &DiscreteModel, cfg: &RunConfig) -> Result<(RouteSummary, RouteSamples), CliError> {
    let ts = times(cfg, 0.8 * m.t_rec.min(cfg.grid.horizon));
    let r = compare_routes(m, &ts, &cfg.solver, &cfg.contour)?;
    let summary =
        RouteSummary { max_diff: r.max_diff, inversion_error_estimate: r.inversion_error_estimate, n_times: ts.len() };
    Ok((summary, RouteSamples { times: ts, ode: r.ode.a0, resolvent: r.resolvent }))
}

fn toy_spec(system: &PhysicalSystem, cfg: &RunConfig) -> ToySpec {
    ToySpec {
        gamma: system.gamma,
        beta: system.beta,
        r: cfg.detector.r,
        omega_i: system.omega_i,
        omega_cut_c: system.dos_model.omega_cut_c,
        grid: cfg.grid.clone(),
    }
}

/// System with exactly one detector atom at distance `detector.r`.
fn single_detector(system: &PhysicalSystem, cfg: &RunConfig) -> Result<(PhysicalSystem, DipoleGeometry), CliError> {
    let r = cfg.detector.r;
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidInput("detector.r must be finite and positive".into()).into());
    }
    let z = system.omega0 * r;
    if cfg.detector.magic_angle {
        let (p_a, det) = magic_angle_detector(z, system.omega0);
        let sys = system.clone().with_atom_dipole(p_a).with_detectors(vec![det]);
        let geom = DipoleGeometry::from_positions(
            sys.atom.dipole_dir,
            sys.detector_atoms[0].dipole_dir,
            sys.detector_atoms[0].position,
            sys.omega0,
        )?;
        return Ok((sys, geom));
    }
    let mut det = system
        .detector_atoms
        .first()
        .cloned()
        .ok_or_else(|| CliError::Config("detector.magic_angle = false needs system.detector_atoms[0]".into()))?;
    let dir = det.direction().ok_or(Error::AtomAtOrigin)?;
    det.position = dir * r;
    let sys = system.clone().with_detectors(vec![det]);
    let geom = DipoleGeometry::from_positions(
        sys.atom.dipole_dir,
        sys.detector_atoms[0].dipole_dir,
        sys.detector_atoms[0].position,
        sys.omega0,
    )?;
    Ok((sys, geom))
}

fn point_config(cfg: &RunConfig, index: usize, param: SweepParam, value: f64) -> Result<RunConfig, String> {
    let mut c = cfg.clone();
    c.sweep = None;
    c.seed = crate::config::substream(cfg.seed, &format!("sweep/{index}"));
    let count = |what: &str| -> Result<usize, String> {
        if value >= 0.0 && value.fract() == 0.0 && value <= u32::MAX as f64 {
            Ok(value as usize)
        } else {
            Err(format!("{what} = {value} is not a non-negative integer"))
        }
    };
    match param {
        SweepParam::Beta => c.system.beta = value,
        SweepParam::R => {
            c.detector.r = value;
            c.shell.radius_z = value * c.system.omega0;
        }
        SweepParam::NAtoms => c.shell.n_atoms = count("n_atoms")?,
        SweepParam::NModes => c.grid.n_modes = count("n_modes")?,
    }
    Ok(c)
}

fn sweep_row(cfg: &RunConfig, index: usize, value: f64) -> SweepRow {
    let spec = cfg.sweep.as_ref().expect("sweep scenario has a sweep section");
    let mut row = SweepRow {
        index,
        value,
        fitted_rate: None,
        rate_stderr: None,
        analytic_rate: None,
        u_general: None,
        u_far_field: None,
        u_near_field: None,
        u_oracle: None,
        u_discrete: None,
        u_mc: None,
        route_disagreement: None,
        error: None,
    };
    let c = match point_config(cfg, index, spec.parameter, value) {
        Ok(c) => c,
        Err(e) => {
            row.error = Some(e);
            return row;
        }
    };
    let p = match run_point(&c, spec.point_scenario(), false) {
        Ok(p) => p,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    let gamma = c.system.gamma;
    row.fitted_rate = p.fit.map(|f| f.rate);
    row.rate_stderr = p.fit.map(|f| f.stderr);
    row.analytic_rate = p.u.map(|u| gamma * u);
    if let Some(r) = &p.reduction {
        row.u_general = Some(r.u_general);
        row.u_far_field = Some(r.u_far_field);
        row.u_near_field = Some(r.u_near_field);
        row.u_oracle = Some(r.u_oracle);
    }
    row.u_discrete = p.u_discrete;
    row.u_mc = p.shell.as_ref().map(|s| s.u_mc.mean);
    if spec.routes {
        if let Some(m) = p.model.as_ref().filter(|m| m.dense_size() <= ROUTE_MAX_SIZE) {
            match routes(m, &c) {
                Ok((s, _)) => row.route_disagreement = Some(s.max_diff),
                Err(e) => row.error = Some(format!("route comparison: {e}")),
            }
        }
    }
    row
}

/// Points run concurrently on the current rayon pool; rows come back in index order.
fn run_sweep(cfg: &RunConfig) -> SweepResult {
    let spec = cfg.sweep.as_ref().expect("sweep scenario has a sweep section");
    let rows = par::map_range(Exec::Parallel, spec.values.len(), |i| sweep_row(cfg, i, spec.values[i]));
    SweepResult { parameter: spec.parameter, point_scenario: spec.point_scenario(), rows }
}
