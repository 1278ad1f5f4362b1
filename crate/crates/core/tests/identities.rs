mod common;

use common::*;
use proptest::prelude::*;
use qfluid_core::discretization::ops::grad_vec;
use qfluid_core::discretization::*;
use qfluid_core::identities::*;
use qfluid_core::physics::*;

#[test]
fn suite_passes_at_256() {
    let suite = identity_suite(256, &FluidParams::default()).unwrap();
    assert!(suite.passed(), "{}", suite.table());
    assert_eq!(suite.checks.len(), 7);
}

#[test]
fn divergence_residual_refines_until_roundoff() {
    let p = FluidParams::default();
    let r: Vec<f64> = [64, 128, 256, 512]
        .iter()
        .map(|&n| korteweg_divergence_at(n, &p).unwrap())
        .collect();
    assert!(r[2] <= KORTEWEG_DIV_TOL);
    for w in r.windows(2) {
        assert!(w[0] <= ROUNDOFF_FLOOR || w[0] / w[1] >= REFINEMENT_FACTOR, "{r:?}");
    }
}

#[test]
fn korteweg_forms_agree_in_two_dimensions() {
    let d = make_domain(
        2,
        &[std::f64::consts::TAU, std::f64::consts::TAU],
        &[32, 32],
        Boundary::Periodic,
    )
    .unwrap();
    let rho = ScalarField::from_fn(&d, |x| (0.3 * x[0].cos() * x[1].sin()).exp());
    let p = FluidParams {
        dim: 2,
        ..Default::default()
    };
    assert!(korteweg_forms_residual(&rho, &p).unwrap() < 1e-10);
    assert!(drift_forms_residual(&rho).unwrap() < 1e-10);
    assert!(korteweg_divergence_residual(&rho, &p).unwrap() < 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn potential_identity_holds_pointwise(
        a in 0.1f64..10.0,
        gamma in 1.05f64..4.0,
        amp in 0.0f64..0.9,
        base in 0.01f64..100.0,
    ) {
        let d = line(16);
        let rho = ScalarField::from_fn(&d, |x| base * (1.0 + amp * x[0].sin()));
        let p = FluidParams { a, gamma, ..Default::default() };
        prop_assert!(pressure_potential_residual(&rho, &p).unwrap() <= 1e-12);
    }

    #[test]
    fn viscous_stress_is_symmetric(c in prop::array::uniform4(-1.0f64..1.0), mu in 0.0f64..3.0, lb in 0.0f64..3.0) {
        let d = make_domain(2, &[std::f64::consts::TAU, std::f64::consts::TAU], &[16, 16], Boundary::Periodic).unwrap();
        let u = VectorField::from_fn(&d, |x, i| {
            if i == 0 { c[0] * x[1].sin() + c[1] * x[0].cos() } else { c[2] * (x[0] + x[1]).sin() + c[3] * x[1].cos() }
        });
        let p = FluidParams { mu, lambda_bulk: lb, dim: 2, ..Default::default() };
        let s = viscous_stress(&grad_vec(&u), &p).unwrap();
        let scale = s.components().iter().map(|f| f.max_abs()).fold(0.0, f64::max).max(1e-300);
        let asym = s.get(0, 1).sub(s.get(1, 0)).max_abs();
        prop_assert!(asym <= 1e-12 * scale);
        let dev = viscous_stress(&grad_vec(&u), &FluidParams { lambda_bulk: 0.0, ..p }).unwrap();
        let dscale = dev.components().iter().map(|f| f.max_abs()).fold(0.0, f64::max).max(1e-300);
        prop_assert!(dev.trace().max_abs() <= 1e-12 * dscale);
    }
}
