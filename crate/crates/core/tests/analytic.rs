use std::f64::consts::PI;

use proptest::prelude::*;
use wwdecay_core::analytic::*;
use wwdecay_core::discretize::{build_full_3d, build_radial_vacuum, build_scalar_toy, GridSpec, ToySpec};
use wwdecay_core::geometry::DipoleGeometry;
use wwdecay_core::model::*;
use wwdecay_core::Exec;

fn unit_vec() -> impl Strategy<Value = Vec3> {
    (-1.0f64..1.0, 0.0..2.0 * PI).prop_map(|(c, phi)| {
        let s = (1.0 - c * c).sqrt();
        Vec3::new(s * phi.cos(), s * phi.sin(), c)
    })
}

#[test]
fn magnitude_checks_track_beta() {
    // L·I equals beta itself, so beta = 0.05 is not "small" at the 1% level
    let s = PhysicalSystem::new(0.01, 0.3, 0.05);
    let m = magnitude_checks(&s);
    assert!((m.li - 0.05).abs() < 1e-15);
    assert!((m.mu2_i - 0.005).abs() < 1e-15);
    assert!(!m.li_small && m.mu2i_small);
    let m = magnitude_checks(&PhysicalSystem::new(0.01, 0.3, 0.005));
    assert!(m.li_small && m.mu2i_small);
}

#[test]
fn near_field_example() {
    let g = DipoleGeometry { p_a: Vec3::x(), p_d: Vec3::x(), r_hat: Vec3::z(), z: 0.01 };
    let r = reduction_single(&g, 0.1);
    assert!((r.u_near_field - 0.9).abs() < 1e-15);
    assert!(r.applicability.near_field && !r.applicability.far_field);
    // the sphere integral reproduces the printed near-field limit
    assert!((r.u_oracle - 0.9).abs() < 1e-4);
}

#[test]
fn negative_u_carries_warning() {
    let atoms: Vec<_> = (0..50)
        .map(|i| {
            let phi = i as f64 * 0.3;
            DetectorAtom::new(Vec3::new(phi.cos(), phi.sin(), 0.0) * 1.2, Vec3::z())
        })
        .collect();
    let m = reduction_multi(&atoms, &Vec3::z(), 0.2).unwrap();
    assert!(m.u < 0.0 && m.warning.is_some());
}

#[test]
fn atom_at_origin_rejected() {
    let atoms = [DetectorAtom::new(Vec3::zeros(), Vec3::z())];
    assert!(reduction_multi(&atoms, &Vec3::z(), 0.1).is_err());
}

#[test]
fn shell_mc_coefficient_is_one_half() {
    // ⟨l²⟩ = 2/9 turns (9/4)⟨l²⟩ into 1/2
    let mc = reduction_shell_mc(100, PI / 2.0, 0.01, 4000, 5, Exec::Parallel);
    let want = 1.0 - 0.5 * 0.01 * 100.0 * (2.0 / PI).powi(2);
    assert!((mc.mean - want).abs() < 4.0 * mc.stderr, "{} vs {want}", mc.mean);
    let serial = reduction_shell_mc(100, PI / 2.0, 0.01, 4000, 5, Exec::Serial);
    assert_eq!(mc, serial);
}

#[test]
fn nominal_system_builds_everywhere() {
    let s = PhysicalSystem::default();
    assert!(s.validate().is_empty());
    build_radial_vacuum(&s, &GridSpec::default()).unwrap();
    let g = GridSpec { n_modes: 200, n_theta: 4, horizon: 100.0, ..GridSpec::default() };
    build_full_3d(&s, &g).unwrap();
    build_scalar_toy(&ToySpec::default()).unwrap();
}

proptest! {
    #[test]
    fn validate_is_idempotent(g in 0.0f64..0.5, wi in -0.5f64..1.5, b in -0.1f64..0.3) {
        let s = PhysicalSystem::new(g, wi, b);
        prop_assert_eq!(validate(&s), validate(&s));
    }

    #[test]
    fn usable_systems_build(g in 0.001f64..0.1, wi in 0.05f64..0.9, b in 0.0f64..0.1) {
        let s = PhysicalSystem::new(g, wi, b);
        if s.validate().is_usable() {
            let geom = DipoleGeometry { p_a: Vec3::x(), p_d: Vec3::x(), r_hat: Vec3::z(), z: 3.0 };
            let r = reduction_single(&geom, s.beta);
            prop_assert!(r.u_general.is_finite());
            let mut grid = GridSpec::default();
            grid.horizon = 0.0;
            prop_assert!(build_radial_vacuum(&s, &grid).is_ok());
        }
    }

    #[test]
    fn far_field_monotone_in_beta(
        pa in unit_vec(), pd in unit_vec(), r in unit_vec(), z in 0.0f64..40.0,
        b1 in 0.0f64..1.0, b2 in 0.0f64..1.0
    ) {
        let g = DipoleGeometry { p_a: pa, p_d: pd, r_hat: r, z };
        let (lo, hi) = if b1 < b2 { (b1, b2) } else { (b2, b1) };
        prop_assert!(reduction_single(&g, hi).u_far_field <= reduction_single(&g, lo).u_far_field);
    }

    #[test]
    fn nodes_are_exact(n in 1u32..200, pa in unit_vec(), pd in unit_vec(), b in 0.0f64..1.0) {
        let g = DipoleGeometry { p_a: pa, p_d: pd, r_hat: Vec3::z(), z: n as f64 * PI };
        prop_assert_eq!(reduction_single(&g, b).u_far_field, 1.0);
    }

    #[test]
    fn single_atom_multi_is_far_field(
        pa in unit_vec(), pd in unit_vec(), r in unit_vec(), z in 0.1f64..40.0, b in 0.0f64..1.0
    ) {
        let atom = DetectorAtom { position: r * z, dipole_dir: pd, mu_c_scale: 1.0 };
        let multi = reduction_multi(&[atom], &pa, b).unwrap().u;
        let single = reduction_single(&DipoleGeometry { p_a: pa, p_d: pd, r_hat: r, z }, b).u_far_field;
        prop_assert!((multi - single).abs() <= 1e-15);
    }

    #[test]
    fn survival_semigroup(t1 in 0.0f64..500.0, t2 in 0.0f64..500.0, g in 0.0f64..0.1, u in 0.0f64..1.5) {
        let lhs = survival_ww(t1 + t2, g, u);
        let rhs = survival_ww(t1, g, u) * survival_ww(t2, g, u);
        prop_assert!((lhs - rhs).abs() < 1e-14);
    }

    #[test]
    fn parameter_maps_round_trip(g in 1e-6f64..0.1, mu in 1e-4f64..1.0, rho in 0.1f64..10.0) {
        prop_assert!((einstein_a(1.0, mu_a_from_gamma(1.0, g)) / g - 1.0).abs() < 1e-13);
        prop_assert!((mu_c_from_beta(1.0, beta_param(1.0, mu, rho), rho) / mu - 1.0).abs() < 1e-13);
    }
}
