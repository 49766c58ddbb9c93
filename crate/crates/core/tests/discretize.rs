use std::f64::consts::PI;

use proptest::prelude::*;
use wwdecay_core::discretize::*;
use wwdecay_core::geometry::polarization_basis;
use wwdecay_core::model::*;
use wwdecay_core::resolvent::{i_continuum, k_discrete};
use wwdecay_core::{Error, C64, I};

#[test]
fn discrete_k_converges_to_continuum() {
    let sys = PhysicalSystem::default();
    let s = C64::new(0.5 * sys.gamma, -1.0);
    let want = (sys.mu_a * sys.mu_a * i_continuum(s, 4.0)).re;
    let dev = |n: usize| {
        let g = GridSpec { n_modes: n, renormalize: false, horizon: 0.0, ..GridSpec::default() };
        let m = build_radial_vacuum(&sys, &g).unwrap();
        (k_discrete(s, &m).unwrap().re - want).abs()
    };
    let d: Vec<f64> = [200, 400, 800].map(dev).to_vec();
    assert!(d[1] <= 0.5 * d[0] && d[2] <= 0.5 * d[1], "{d:?}");
}

#[test]
fn recurrence_guard() {
    let sys = PhysicalSystem::default();
    let m = build_radial_vacuum(&sys, &GridSpec::default()).unwrap();
    let ok = GridSpec { horizon: m.t_rec / 1.5 - 1.0, ..GridSpec::default() };
    assert!(build_radial_vacuum(&sys, &ok).is_ok());
    let bad = GridSpec { horizon: m.t_rec / 1.5 + 1.0, ..GridSpec::default() };
    assert!(matches!(build_radial_vacuum(&sys, &bad), Err(Error::Recurrence { .. })));
}

#[test]
fn invalid_system_rejected() {
    let sys = PhysicalSystem::new(0.01, 1.5, 0.05);
    match build_radial_vacuum(&sys, &GridSpec::default()) {
        Err(Error::InvalidSystem(v)) => assert!(v.iter().any(|x| x == "omega_i < omega0")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn factorized_couplings_match_direct_evaluation() {
    let det = DetectorAtom::new(Vec3::new(0.3, -1.1, 2.0), Vec3::new(1.0, 1.0, 0.0));
    let sys = PhysicalSystem::default().with_atom_dipole(Vec3::new(0.2, 0.0, 1.0)).with_detectors(vec![det.clone()]);
    let grid = GridSpec { n_modes: 200, n_theta: 6, n_phi: 4, n_channels: 50, horizon: 50.0, ..GridSpec::default() };
    let m = build_full_3d(&sys, &grid).unwrap();
    let axis = det.direction().unwrap();
    let dirs = angular_rule(&axis, grid.n_theta, grid.n_phi);
    let per_radial = dirs.len() * 2;
    let mut rng = 12345u64;
    let mut next = |n: usize| {
        rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (rng >> 33) as usize % n
    };
    for _ in 0..500 {
        let k = next(m.n_modes());
        let c = next(m.n_channels());
        let (r, rest) = (k / per_radial, k % per_radial);
        let (d, pol) = (rest / 2, rest % 2);
        let (w, wr) = (m.radial.nodes[r], m.radial.weights[r]);
        let (k_hat, wo) = dirs[d];
        let eps = polarization_basis(&k_hat)[pol];
        let nk = (w.powi(3) * wr * wo).sqrt() / (2.0 * PI);
        let f = -I * nk * det.dipole_dir.dot(&eps) * C64::from_polar(1.0, w * k_hat.dot(&det.position));
        let direct = f * m.channels[c].mu;
        assert!((m.coupling(k, c, 0) - direct).norm() < 1e-14);
        let alpha = -I * sys.mu_a * nk * sys.atom.dipole_dir.dot(&eps);
        assert!((m.modes[k].alpha - alpha).norm() < 1e-14);
        assert_eq!(m.modes[k].omega, w);
    }
}

#[test]
fn full_3d_vacuum_matches_radial() {
    let sys = PhysicalSystem::default();
    let g = GridSpec { n_modes: 200, n_theta: 6, horizon: 50.0, ..GridSpec::default() };
    let r = build_radial_vacuum(&sys, &g).unwrap();
    let f = build_full_3d(&sys, &g).unwrap();
    let s = C64::new(0.02, -0.9);
    assert!((k_discrete(s, &r).unwrap() - k_discrete(s, &f).unwrap()).norm() < 1e-14);
    assert!((r.omega_atom - f.omega_atom).abs() < 1e-14);
}

#[test]
fn markov_band_couplings_are_frozen() {
    let (p_a, det) = magic_angle_detector(2.0, 1.0);
    let sys = PhysicalSystem::default().with_atom_dipole(p_a).with_detectors(vec![det]);
    let g = GridSpec {
        n_modes: 130,
        n_theta: 6,
        band: Band::Markov { half_width: 0.5 },
        horizon: 50.0,
        ..GridSpec::default()
    };
    let m = build_full_3d(&sys, &g).unwrap();
    assert!(m.modes.iter().all(|x| (x.omega - 1.0).abs() <= 0.5 + 1e-12));
    assert!(m.channels.iter().all(|c| (c.omega - 1.0).abs() <= 0.5 + 1e-12));
    assert!(m.level_shift.abs() < 1e-14);
}

#[test]
fn csv_dump_rows() {
    let t = ToySpec {
        grid: GridSpec { n_modes: 200, n_channels: 40, horizon: 50.0, ..GridSpec::default() },
        ..ToySpec::default()
    };
    let m = build_scalar_toy(&t).unwrap();
    let mut buf = Vec::new();
    m.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut rdr = text.lines();
    assert_eq!(rdr.next(), Some("kind,index,omega,re,im"));
    let first: Vec<&str> = rdr.next().unwrap().split(',').collect();
    assert_eq!(first[0], "mode");
    assert_eq!(first[2].parse::<f64>().unwrap(), m.modes[0].omega);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sum_rule_holds_for_vacuum_grids(g in 0.002f64..0.1, n in 400usize..900) {
        let sys = PhysicalSystem::new(g, 0.3, 0.0);
        let m = build_radial_vacuum(&sys, &GridSpec { n_modes: n, horizon: 0.0, ..GridSpec::default() }).unwrap();
        let v = sum_rule(&m, SUM_RULE_DELTA);
        prop_assert!((v / (0.5 * g) - 1.0).abs() < SUM_RULE_TOL);
    }

    #[test]
    fn toy_builder_reports_recurrence(r in 0.5f64..20.0, nc in 100usize..300) {
        let t = ToySpec { r, grid: GridSpec { n_channels: nc, horizon: 0.0, ..GridSpec::default() }, ..ToySpec::default() };
        let m = build_scalar_toy(&t).unwrap();
        prop_assert!(m.t_rec.is_finite() && m.t_rec > 0.0);
        let freqs: Vec<f64> = m.channels.iter().map(|c| c.omega).collect();
        prop_assert!(m.t_rec <= recurrence_time(1.0, &freqs));
    }
}
