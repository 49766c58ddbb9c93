//! Artifacts on disk: `results.csv`, `summary.json`, `report.txt` and
//! `plotdata/*.dat`.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use wwdecay_core::dynamics::Trajectory;

use crate::config::SweepParam;
use crate::error::CliError;
use crate::run::{Outcome, RouteSamples, ShellResult, Summary, SweepResult};

/// Trajectory CSV header; the column order is part of the output contract.
pub const TRAJECTORY_COLUMNS: [&str; 5] = ["t", "re_a0", "im_a0", "survival", "norm"];

const SWEEP_COLUMNS: [&str; 14] = [
    "index",
    "parameter",
    "value",
    "fitted_rate",
    "rate_stderr",
    "analytic_rate",
    "u_general",
    "u_far_field",
    "u_near_field",
    "u_oracle",
    "u_discrete",
    "u_mc",
    "route_disagreement",
    "error",
];

/// Create `dir` and `dir/plotdata` and prove both are writable.
pub fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    let io = |e: std::io::Error, p: &Path| CliError::Io(format!("{}: {e}", p.display()));
    let plot = dir.join("plotdata");
    fs::create_dir_all(&plot).map_err(|e| io(e, &plot))?;
    for d in [dir, plot.as_path()] {
        let probe = d.join(".write_probe");
        fs::write(&probe, b"").map_err(|e| io(e, d))?;
        fs::remove_file(&probe).map_err(|e| io(e, d))?;
    }
    Ok(())
}

pub fn write_all(out: &Outcome, dir: &Path, plot_data: bool) -> Result<(), CliError> {
    let s = &out.summary;
    let file = |name: &str| -> Result<BufWriter<fs::File>, CliError> {
        let p = dir.join(name);
        fs::File::create(&p).map(BufWriter::new).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
    };

    let csv_out = file("results.csv")?;
    if let Some(tr) = &out.trajectory {
        write_trajectory_csv(tr, csv_out)?;
    } else if let Some(r) = &out.routes {
        write_route_csv(r, csv_out)?;
    } else if let Some(sh) = &s.shell {
        write_shell_csv(sh, csv_out)?;
    } else if let Some(sw) = &s.sweep {
        write_sweep_csv(sw, csv_out)?;
    }

    let mut js = file("summary.json")?;
    serde_json::to_writer_pretty(&mut js, s).map_err(|e| CliError::Io(e.to_string()))?;
    js.write_all(b"\n")?;
    js.flush()?;

    let mut rep = file("report.txt")?;
    rep.write_all(report(s).as_bytes())?;
    rep.flush()?;

    if let Some(m) = &out.model {
        let mut w = file("model.csv")?;
        m.write_csv(&mut w)?;
        w.flush()?;
    }

    if plot_data {
        let plot = dir.join("plotdata");
        if let Some(tr) = &out.trajectory {
            let rate = s.analytic_rate.unwrap_or(s.gamma);
            emit_trajectory_plot(tr, rate, &plot.join("trajectory.dat"))?;
        }
        if let Some(r) = &out.routes {
            emit_route_plot(r, &plot.join("routes.dat"))?;
        }
        if let Some(sw) = &s.sweep {
            emit_sweep_plot(sw, &plot.join("sweep.dat"))?;
        }
    }
    Ok(())
}

pub fn write_trajectory_csv<W: Write>(tr: &Trajectory, w: W) -> Result<(), CliError> {
    let mut c = csv::Writer::from_writer(w);
    c.write_record(TRAJECTORY_COLUMNS)?;
    for i in 0..tr.times.len() {
        c.serialize((tr.times[i], tr.a0[i].re, tr.a0[i].im, tr.survival[i], 1.0 + tr.norm_drift[i]))?;
    }
    c.flush()?;
    Ok(())
}

fn write_route_csv<W: Write>(r: &RouteSamples, w: W) -> Result<(), CliError> {
    let mut c = csv::Writer::from_writer(w);
    c.write_record(["t", "re_a0", "im_a0", "re_a0_resolvent", "im_a0_resolvent", "abs_diff"])?;
    for i in 0..r.times.len() {
        let (a, b) = (r.ode[i], r.resolvent[i]);
        c.serialize((r.times[i], a.re, a.im, b.re, b.im, (a - b).norm()))?;
    }
    c.flush()?;
    Ok(())
}

fn write_shell_csv<W: Write>(s: &ShellResult, w: W) -> Result<(), CliError> {
    let mut c = csv::Writer::from_writer(w);
    c.write_record(["n_atoms", "radius_z", "beta", "u_analytic", "u_mc", "u_mc_stderr", "samples"])?;
    c.serialize((s.n_atoms, s.radius_z, s.beta, s.u_analytic, s.u_mc.mean, s.u_mc.stderr, s.u_mc.samples))?;
    c.flush()?;
    Ok(())
}

fn param_name(p: SweepParam) -> &'static str {
    match p {
        SweepParam::Beta => "beta",
        SweepParam::R => "r",
        SweepParam::NAtoms => "n_atoms",
        SweepParam::NModes => "n_modes",
    }
}

fn write_sweep_csv<W: Write>(s: &SweepResult, w: W) -> Result<(), CliError> {
    let mut c = csv::Writer::from_writer(w);
    c.write_record(SWEEP_COLUMNS)?;
    for r in &s.rows {
        c.serialize((
            r.index,
            param_name(s.parameter),
            r.value,
            r.fitted_rate,
            r.rate_stderr,
            r.analytic_rate,
            r.u_general,
            r.u_far_field,
            r.u_near_field,
            r.u_oracle,
            r.u_discrete,
            r.u_mc,
            r.route_disagreement,
            r.error.as_deref(),
        ))?;
    }
    c.flush()?;
    Ok(())
}

fn num(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".to_string(), |v| format!("{v:e}"))
}

fn write_text(path: &Path, body: &str) -> Result<(), CliError> {
    fs::write(path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// `t survival reference` with `reference = e^{−rate·t}`.
pub fn emit_trajectory_plot(tr: &Trajectory, rate: f64, path: &Path) -> Result<(), CliError> {
    let mut b = String::from("# t survival reference\n");
    for (&t, &p) in tr.times.iter().zip(&tr.survival) {
        let _ = writeln!(b, "{t:e} {p:e} {:e}", (-rate * t).exp());
    }
    write_text(path, &b)
}

fn emit_route_plot(r: &RouteSamples, path: &Path) -> Result<(), CliError> {
    let mut b = String::from("# t survival_ode survival_resolvent abs_diff\n");
    for i in 0..r.times.len() {
        let (a, z) = (r.ode[i], r.resolvent[i]);
        let _ = writeln!(b, "{:e} {:e} {:e} {:e}", r.times[i], a.norm_sqr(), z.norm_sqr(), (a - z).norm());
    }
    write_text(path, &b)
}

/// `parameter fitted_rate analytic_rate`; `nan` where a point has no value.
pub fn emit_sweep_plot(s: &SweepResult, path: &Path) -> Result<(), CliError> {
    let mut b = format!("# {} fitted_rate analytic_rate\n", param_name(s.parameter));
    for r in &s.rows {
        let _ = writeln!(b, "{:e} {} {}", r.value, num(r.fitted_rate), num(r.analytic_rate));
    }
    write_text(path, &b)
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.6}"))
}

/// Human-readable run report.
pub fn report(s: &Summary) -> String {
    let mut b = String::new();
    let sys = &s.config.system;
    let _ = writeln!(b, "wwdecay run report (schema {})", s.schema_version);
    let _ = writeln!(b, "scenario: {}", s.scenario.name());
    let _ = writeln!(b, "seed: {}", s.seed);
    let _ = writeln!(b);
    let _ = writeln!(b, "parameters");
    let _ =
        writeln!(b, "  omega0 = {}  gamma = {}  omega_i = {}  beta = {}", sys.omega0, sys.gamma, sys.omega_i, sys.beta);
    let g = &s.config.grid;
    let _ = writeln!(
        b,
        "  grid: n_modes = {}  omega_cut = {}  n_channels = {}  horizon = {}  n_theta = {}  n_phi = {}  band = {:?}",
        g.n_modes, g.omega_cut, g.n_channels, g.horizon, g.n_theta, g.n_phi, g.band
    );
    let sv = &s.config.solver;
    let _ = writeln!(b, "  solver: rtol = {:e}  atol = {:e}  rotating_frame = {}", sv.rtol, sv.atol, sv.rotating_frame);
    if let Some(m) = &s.model {
        let _ = writeln!(
            b,
            "  model: {:?}, {} modes, {} channels, {} detector atoms, t_rec = {:.1}, level shift = {:.3e}",
            m.kind, m.n_modes, m.n_channels, m.n_atoms, m.t_rec, m.level_shift
        );
    }
    let _ = writeln!(b);
    let _ = writeln!(b, "regime");
    let r = &s.regime;
    let _ = writeln!(b, "  L*I = {:.4e} ({})", r.li, if r.li_small { "small" } else { "NOT small" });
    let _ = writeln!(b, "  mu_a^2*I/omega0 = {:.4e} ({})", r.mu2_i, if r.mu2i_small { "small" } else { "NOT small" });
    for w in &s.warnings {
        let _ = writeln!(b, "  warning: {w}");
    }
    let _ = writeln!(b);
    let _ = writeln!(b, "rates (units of 1/omega0)");
    if let Some(f) = &s.fit {
        let _ = writeln!(
            b,
            "  fitted rate = {:.6e} +- {:.1e} over [{:.1}, {:.1}] (R^2 = {:.6})",
            f.rate, f.stderr, f.window[0], f.window[1], f.r_squared
        );
    }
    if let Some(v) = &s.vacuum_fit {
        let _ = writeln!(b, "  vacuum rate on the same grid = {:.6e} +- {:.1e}", v.rate, v.stderr);
    }
    if let (Some(u), Some(a)) = (s.u, s.analytic_rate) {
        let _ = writeln!(b, "  analytic U*gamma = {a:.6e} (U = {u:.6})");
        if let Some(f) = &s.fit {
            let _ = writeln!(b, "  fitted / analytic = {:.5}", f.rate / a);
        }
    }
    if let Some(u) = s.u_discrete {
        let _ = writeln!(b, "  U from the discrete kernels = {u:.6}");
    }
    if let Some(rep) = &s.reduction {
        let _ = writeln!(b, "  U variants at z = {:.4}:", rep.z);
        let _ = writeln!(b, "    printed D      {:.6}", rep.u_general);
        let _ = writeln!(
            b,
            "    far field      {:.6}{}",
            rep.u_far_field,
            if rep.applicability.far_field { "" } else { " (outside range)" }
        );
        let _ = writeln!(
            b,
            "    near field     {:.6}{}",
            rep.u_near_field,
            if rep.applicability.near_field { "" } else { " (outside range)" }
        );
        let _ = writeln!(b, "    quadrature     {:.6}", rep.u_oracle);
        let _ = writeln!(b, "    discrepancy    {:.3e}", rep.discrepancy);
    }
    if let Some(d) = s.max_norm_drift {
        let _ = writeln!(b, "  max |norm - 1| = {d:.3e}");
    }
    if let Some(sh) = &s.shell {
        let _ = writeln!(b, "  shell: N = {}, z = {:.4}", sh.n_atoms, sh.radius_z);
        let _ = writeln!(b, "    closed form U = {:.6}", sh.u_analytic);
        let _ = writeln!(
            b,
            "    Monte Carlo U = {:.6} +- {:.1e} ({} samples)",
            sh.u_mc.mean, sh.u_mc.stderr, sh.u_mc.samples
        );
    }
    if let Some(rt) = &s.routes {
        let _ = writeln!(b, "  routes: max |A0_ode - A0_resolvent| = {:.3e} over {} times", rt.max_diff, rt.n_times);
        let _ = writeln!(b, "    inversion error estimate = {:.3e}", rt.inversion_error_estimate);
    }
    if let Some(sw) = &s.sweep {
        let _ = writeln!(
            b,
            "  sweep over {} ({} points, scenario {})",
            param_name(sw.parameter),
            sw.rows.len(),
            sw.point_scenario.name()
        );
        let _ = writeln!(b, "    {:>12} {:>14} {:>14}  error", "value", "fitted", "analytic");
        for row in &sw.rows {
            let _ = writeln!(
                b,
                "    {:>12.6} {:>14} {:>14}  {}",
                row.value,
                opt(row.fitted_rate),
                opt(row.analytic_rate),
                row.error.as_deref().unwrap_or("")
            );
        }
    }
    let _ = writeln!(b);
    let n = &s.normalization;
    let _ = writeln!(b, "D normalization");
    let _ = writeln!(b, "  reference ratio D / angular integral = {:.6}", n.constant);
    let _ = writeln!(b, "  largest relative spread of the ratio over probes = {:.3}", n.max_relative_spread);
    let _ = writeln!(b, "  {:>6} {:>14} {:>14} {:>10}", "z", "D", "integral", "ratio");
    for (z, d, a, ratio) in &n.probes {
        let _ = writeln!(b, "  {z:>6.2} {d:>14.6e} {a:>14.6e} {ratio:>10.4}");
    }
    b
}
