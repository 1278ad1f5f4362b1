use std::f64::consts::PI;
use std::sync::Arc;

use qfluid_core::discretization::ops::integrate;
use qfluid_core::discretization::*;
use qfluid_core::energy::{energy_report, AuditConfig};
use qfluid_core::physics::FluidParams;
use qfluid_core::solver::*;
use qfluid_core::Error;

fn line(n: usize) -> Arc<Domain> {
    make_domain(1, &[2.0 * PI], &[n], Boundary::Periodic).unwrap()
}

fn pulse(d: &Arc<Domain>) -> (ScalarField, VectorField) {
    let rho = ScalarField::from_fn(d, |x| 1.0 + 0.2 * x[0].sin());
    let j = VectorField::from_fn(d, |x, _| 0.3 * x[0].sin() + 0.1 * (2.0 * x[0]).cos());
    (rho, j)
}

fn viscous() -> FluidParams {
    FluidParams {
        mu: 1.0,
        ..Default::default()
    }
}

#[test]
fn continuity_without_flow_or_diffusion_is_identity() {
    let d = line(64);
    let rho = ScalarField::from_fn(&d, |x| 1.0 + 0.3 * x[0].cos());
    let out = continuity_step(&rho, &VectorField::zeros(&d), 0.0, 1e-2, ContinuityScheme::SemiImplicit).unwrap();
    for (a, b) in out.values().iter().zip(rho.values()) {
        assert!((a - b).abs() <= 1e-14);
    }
}

#[test]
fn continuity_heat_step_damps_each_mode_exactly() {
    let d = line(64);
    let (eps, dt, k) = (0.1, 1e-2, 5.0);
    let rho = ScalarField::from_fn(&d, |x| 1.0 + 0.1 * (k * x[0]).cos());
    let out = continuity_step(&rho, &VectorField::zeros(&d), eps, dt, ContinuityScheme::SemiImplicit).unwrap();
    let factor = 1.0 / (1.0 + eps * k * k * dt);
    for (i, v) in out.values().iter().enumerate() {
        let x = d.point(i)[0];
        assert!((v - (1.0 + 0.1 * factor * (k * x).cos())).abs() <= 1e-13);
    }
}

#[test]
fn continuity_matches_translation_oracle_to_second_order() {
    let d = line(64);
    let c = 0.7;
    let rho = ScalarField::from_fn(&d, |x| 1.0 + 0.2 * x[0].sin());
    let u = VectorField::from_fn(&d, |_, _| c);
    let err = |dt: f64| {
        let out = continuity_step(&rho, &u, 0.0, dt, ContinuityScheme::SemiImplicit).unwrap();
        out.values()
            .iter()
            .enumerate()
            .map(|(i, v)| (v - (1.0 + 0.2 * (d.point(i)[0] - c * dt).sin())).abs())
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (err(1e-2), err(5e-3));
    assert!(e1 <= 0.2 * c * c * 1e-4, "{e1}");
    assert!((e1 / e2 - 4.0).abs() < 0.1, "{}", e1 / e2);
}

#[test]
fn continuity_reports_positivity_and_cfl() {
    let d = line(32);
    let rho = ScalarField::from_fn(&d, |x| 1.0 + 0.99 * x[0].sin());
    let u = VectorField::from_fn(&d, |x, _| 2.0 * x[0].cos());
    let guard = ContinuityGuard {
        rho_floor: 0.5,
        courant: 0.5,
        time: 0.25,
        dealias: true,
    };
    match continuity_step_guarded(&rho, &u, 0.0, 1e-3, ContinuityScheme::SemiImplicit, &guard) {
        Err(Error::PositivityLost { time, floor, .. }) => {
            assert_eq!(time, 0.25);
            assert_eq!(floor, 0.5);
        }
        other => panic!("{other:?}"),
    }
    let err = continuity_step(&rho, &u, 0.0, 1.0, ContinuityScheme::SemiImplicit).unwrap_err();
    assert!(matches!(err, Error::CflViolation { .. }));
}

#[test]
fn implicit_scheme_agrees_with_semi_implicit_to_first_order() {
    let d = line(64);
    let rho = ScalarField::from_fn(&d, |x| 1.0 + 0.2 * x[0].sin());
    let u = VectorField::from_fn(&d, |x, _| 0.5 * x[0].cos());
    let a = continuity_step(&rho, &u, 0.01, 1e-3, ContinuityScheme::SemiImplicit).unwrap();
    let b = continuity_step(&rho, &u, 0.01, 1e-3, ContinuityScheme::Implicit).unwrap();
    assert!(a.sub(&b).max_abs() < 1e-5);
    assert!((integrate(&b) - integrate(&rho)).abs() <= 1e-12 * integrate(&rho));
}

#[test]
fn mass_operator_identity_and_scaling() {
    let d = line(64);
    let basis = galerkin_basis(&d, 8).unwrap();
    for c in [1.0, 2.5] {
        let m = mass_operator(&ScalarField::constant(&d, c), &basis).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let want = if i == j { c } else { 0.0 };
                assert!((m[(i, j)] - want).abs() <= 1e-10);
            }
        }
    }
}

#[test]
fn mass_operator_matches_dense_quadrature() {
    let coarse = line(64);
    let fine = line(256);
    let f = |x: [f64; 2]| 1.0 + 0.5 * x[0].sin();
    let m = mass_operator(&ScalarField::from_fn(&coarse, f), &galerkin_basis(&coarse, 4).unwrap()).unwrap();
    let fine_basis = galerkin_basis(&fine, 4).unwrap();
    let rho_fine: Vec<f64> = (0..fine.len()).map(|i| f(fine.point(i))).collect();
    for i in 0..4 {
        for j in 0..4 {
            let wi = fine_basis.mode(i).w.component(0).values();
            let wj = fine_basis.mode(j).w.component(0).values();
            let oracle: f64 = (0..fine.len())
                .map(|k| fine.weights()[k] * rho_fine[k] * wi[k] * wj[k])
                .sum();
            assert!((m[(i, j)] - oracle).abs() <= 1e-8, "{i} {j}");
            assert!((m[(i, j)] - m[(j, i)]).abs() <= 1e-12);
        }
    }
    let eig = m.symmetric_eigen().eigenvalues;
    assert!(eig.iter().all(|&e| e >= 0.5 - 1e-10));
}

#[test]
fn mass_solve_is_backward_stable() {
    let d = make_domain(2, &[2.0 * PI, 2.0 * PI], &[32, 32], Boundary::Periodic).unwrap();
    let rho = ScalarField::from_fn(&d, |x| 1.0 + 0.4 * x[0].sin() * x[1].cos());
    let basis = galerkin_basis(&d, 12).unwrap();
    let m = mass_operator(&rho, &basis).unwrap();
    let b: Vec<f64> = (0..basis.len()).map(|i| (i as f64 * 0.7).sin()).collect();
    let c = solve_spd(m.clone(), &b).unwrap();
    let r = &m * nalgebra::DVector::from_column_slice(&c) - nalgebra::DVector::from_column_slice(&b);
    let bn: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!(r.norm() <= 1e-10 * bn);
}

#[test]
fn forcing_vanishes_at_equilibrium() {
    for d in [
        line(64),
        make_domain(2, &[2.0 * PI, 2.0 * PI], &[16, 16], Boundary::Periodic).unwrap(),
        make_domain(1, &[1.0], &[32], Boundary::Wall).unwrap(),
    ] {
        let basis = galerkin_basis(&d, 6).unwrap();
        let p = FluidParams {
            dim: d.dim(),
            ..viscous()
        };
        let state = FluidState::at_rest(ScalarField::constant(&d, 1.3), &basis, &p).unwrap();
        let n = momentum_rhs(&state, &basis, &p, 0.1).unwrap();
        assert!(n.iter().all(|v| v.abs() <= 1e-10), "{n:?}");
    }
}

#[test]
fn forcing_at_rest_matches_pressure_and_korteweg_oracle() {
    let d = line(64);
    let fine = line(256);
    let p = FluidParams { hbar: 0.3, ..viscous() };
    let basis = galerkin_basis(&d, 6).unwrap();
    let rho_fn = |x: f64| 1.0 + 0.3 * x.cos();
    let drho = |x: f64| -0.3 * x.sin();
    let state = FluidState::at_rest(ScalarField::from_fn(&d, |x| rho_fn(x[0])), &basis, &p).unwrap();
    let n = momentum_rhs(&state, &basis, &p, 0.0).unwrap();
    let fb = galerkin_basis(&fine, 6).unwrap();
    for (i, ni) in n.iter().enumerate() {
        let m = fb.mode(i);
        let oracle: f64 = (0..fine.len())
            .map(|k| {
                let x = fine.point(k)[0];
                let r = rho_fn(x);
                let gs = drho(x) / (2.0 * r.sqrt());
                let dw = m.grad.get(0, 0).values()[k];
                let gd = m.grad_div.component(0).values()[k];
                fine.weights()[k] * ((p.a * r * r + p.hbar * gs * gs) * dw + 0.25 * p.hbar * drho(x) * gd)
            })
            .sum();
        assert!((ni - oracle).abs() <= 1e-8, "{i}: {ni} vs {oracle}");
    }
}

#[test]
fn viscous_contribution_is_linear_in_mu() {
    let d = line(64);
    let basis = galerkin_basis(&d, 8).unwrap();
    let (rho, j) = pulse(&d);
    let at = |mu: f64| {
        let p = FluidParams {
            mu,
            ..Default::default()
        };
        let s = project_initial(&rho, &j, &basis, &p).unwrap().state;
        momentum_rhs(&s, &basis, &p, 0.0).unwrap()
    };
    let (n0, n1, n2) = (at(0.0), at(1.0), at(2.0));
    for i in 0..8 {
        let (v1, v2) = (n1[i] - n0[i], n2[i] - n0[i]);
        assert!((v2 - 2.0 * v1).abs() <= 1e-12 * v1.abs().max(1.0));
    }
}

#[test]
fn equilibrium_is_a_fixed_point_of_advance() {
    let d = line(32);
    let basis = galerkin_basis(&d, 6).unwrap();
    let p = viscous();
    let mut s = FluidState::at_rest(ScalarField::constant(&d, 1.0), &basis, &p).unwrap();
    let cfg = SolverConfig {
        epsilon: 0.01,
        ..Default::default()
    };
    let s0 = s.clone();
    for _ in 0..100 {
        s = advance(&s, &cfg, &p, &basis).unwrap();
    }
    assert!(s.rho.sub(&s0.rho).max_abs() <= 1e-10);
    assert!(s.velocity_coeffs.unwrap().iter().all(|c| c.abs() <= 1e-10));
    assert!((s.time - 0.1).abs() < 1e-12);
}

#[test]
fn fixed_point_contracts_faster_for_smaller_steps() {
    let d = line(64);
    let basis = galerkin_basis(&d, 8).unwrap();
    let (rho, j) = pulse(&d);
    let p = viscous();
    let s = project_initial(&rho, &j, &basis, &p).unwrap().state;
    let mut last_iters = usize::MAX;
    let mut last_ratio = f64::INFINITY;
    for dt in [2e-3, 1e-3, 5e-4] {
        let cfg = SolverConfig {
            dt,
            ..Default::default()
        };
        let (_, rep) = advance_by(&s, dt, &cfg, &p, &basis).unwrap();
        let ratio = rep.contraction_ratios().into_iter().fold(0.0, f64::max);
        assert!(rep.iterations <= 10);
        assert!(rep.iterations <= last_iters);
        assert!(ratio < 0.5 && ratio <= last_ratio * 1.01, "{ratio} {last_ratio}");
        last_iters = rep.iterations;
        last_ratio = ratio;
    }
}

#[test]
fn iteration_cap_is_reported() {
    let d = line(64);
    let basis = galerkin_basis(&d, 8).unwrap();
    let (rho, j) = pulse(&d);
    let p = viscous();
    let s = project_initial(&rho, &j, &basis, &p).unwrap().state;
    let cfg = SolverConfig {
        fixed_point_max_iter: 1,
        ..Default::default()
    };
    assert!(matches!(
        advance(&s, &cfg, &p, &basis),
        Err(Error::FixedPointDiverged { iterations: 1, .. })
    ));
}

#[test]
fn zero_length_run_has_single_sample() {
    let d = line(32);
    let basis = galerkin_basis(&d, 4).unwrap();
    let p = viscous();
    let s = FluidState::at_rest(ScalarField::constant(&d, 1.0), &basis, &p).unwrap();
    let out = run_simulation(&s, &SolverConfig::default(), &p, &basis, 0.0, 1).unwrap();
    assert_eq!(out.trajectory.len(), 1);
    assert!(out.is_complete());
}

#[test]
fn equilibrium_run_stays_put() {
    let d = line(32);
    let basis = galerkin_basis(&d, 4).unwrap();
    let p = viscous();
    let s = FluidState::at_rest(ScalarField::constant(&d, 2.0), &basis, &p).unwrap();
    let out = run_simulation(&s, &SolverConfig::default(), &p, &basis, 0.05, 5).unwrap();
    assert_eq!(out.trajectory.len(), 11);
    for snap in out.trajectory.samples() {
        assert!(snap.rho.sub(&s.rho).max_abs() <= 1e-9);
        assert!(snap.momentum.max_abs() <= 1e-9);
        assert!((snap.energy - s.energy).abs() <= 1e-9);
    }
}

#[test]
fn viscous_pulse_conserves_mass_and_keeps_state_consistent() {
    let d = line(64);
    let basis = galerkin_basis(&d, 8).unwrap();
    let (rho, j) = pulse(&d);
    let p = viscous();
    let init = project_initial(&rho, &j, &basis, &p).unwrap();
    assert!(init.projection_gap > 0.0);
    let out = run_simulation(&init.state, &SolverConfig::default(), &p, &basis, 0.2, 10).unwrap();
    assert!(out.is_complete());
    let m0 = out.trajectory.first().mass();
    for s in out.trajectory.samples() {
        assert!((s.mass() - m0).abs() <= 1e-10 * m0);
        let u = basis.reconstruct(s.velocity_coeffs.as_ref().unwrap()).unwrap();
        let diff = s.momentum.sub(&u.mul_scalar(&s.rho)).max_abs();
        assert!(diff <= 1e-9 * s.momentum.max_abs().max(1e-300));
        assert!(s.energy >= 0.0);
    }
    let e = out.trajectory.energies();
    assert!(e.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn small_random_data_dissipates_energy_every_step() {
    let d = line(64);
    let basis = galerkin_basis(&d, 8).unwrap();
    let p = viscous();
    // Deterministic pseudo-random coefficients.
    let mut seed = 0x2545f4914f6cdd1du64;
    let mut next = || {
        seed ^= seed << 13;
        seed ^= seed >> 7;
        seed ^= seed << 17;
        (seed as f64 / u64::MAX as f64) - 0.5
    };
    let coeffs: Vec<f64> = (0..8).map(|_| 0.05 * next()).collect();
    let amps: Vec<f64> = (0..3).map(|_| 0.05 * next()).collect();
    let rho = ScalarField::from_fn(&d, |x| {
        1.0 + amps[0] * x[0].sin() + amps[1] * (2.0 * x[0]).cos() + amps[2] * (3.0 * x[0]).sin()
    });
    let s = FluidState::from_coeffs(0.0, rho, coeffs, &basis, &p).unwrap();
    let cfg = SolverConfig::default();
    let out = run_simulation(&s, &cfg, &p, &basis, 0.1, 1).unwrap();
    let e = out.trajectory.energies();
    let c = 10.0 * e[0];
    assert!(e.windows(2).all(|w| w[1] <= w[0] + c * cfg.dt * cfg.dt));
    assert!(
        energy_report(&out.trajectory, &p, &AuditConfig::from_solver(&cfg))
            .unwrap()
            .passed
    );
}

#[test]
fn time_step_refinement_converges() {
    let d = line(64);
    let basis = galerkin_basis(&d, 8).unwrap();
    let (rho, j) = pulse(&d);
    let p = viscous();
    let init = project_initial(&rho, &j, &basis, &p).unwrap().state;
    let momentum_at = |dt: f64| {
        let cfg = SolverConfig {
            dt,
            ..Default::default()
        };
        let out = run_simulation(&init, &cfg, &p, &basis, 0.1, 1000).unwrap();
        out.trajectory.last().momentum.clone()
    };
    let reference = momentum_at(1.25e-4);
    let e1 = momentum_at(2e-3).sub(&reference).l2_norm();
    let e2 = momentum_at(1e-3).sub(&reference).l2_norm();
    assert!(e1 / e2 >= 1.8, "{}", e1 / e2);
}

#[test]
fn right_endpoint_rule_is_first_order() {
    let d = line(64);
    let basis = galerkin_basis(&d, 8).unwrap();
    let (rho, j) = pulse(&d);
    let p = viscous();
    let init = project_initial(&rho, &j, &basis, &p).unwrap().state;
    let momentum_at = |dt: f64| {
        let cfg = SolverConfig {
            dt,
            time_quadrature: TimeQuadrature::RightEndpoint,
            ..Default::default()
        };
        run_simulation(&init, &cfg, &p, &basis, 0.1, 1000)
            .unwrap()
            .trajectory
            .last()
            .momentum
            .clone()
    };
    let reference = momentum_at(6.25e-5);
    let e1 = momentum_at(2e-3).sub(&reference).l2_norm();
    let e2 = momentum_at(1e-3).sub(&reference).l2_norm();
    let ratio = e1 / e2;
    assert!((1.8..3.0).contains(&ratio), "{ratio}");
}

#[test]
fn galerkin_truncations_are_consistent() {
    let d = line(64);
    let p = viscous();
    let (rho, j) = pulse(&d);
    let cfg = SolverConfig::default();
    let run = |n: usize| {
        let basis = galerkin_basis(&d, n).unwrap();
        let init = project_initial(&rho, &j, &basis, &p).unwrap().state;
        run_simulation(&init, &cfg, &p, &basis, 0.05, 50)
            .unwrap()
            .trajectory
            .last()
            .velocity_coeffs
            .clone()
            .unwrap()
    };
    let (c4, c8, c16) = (run(4), run(8), run(16));
    let gap = |lo: &[f64], hi: &[f64]| lo.iter().zip(hi).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    assert!(gap(&c4, &c8) > gap(&c8, &c16));
}

#[test]
fn density_bounds_hold_for_regularized_runs() {
    let d = line(64);
    let basis = galerkin_basis(&d, 8).unwrap();
    let p = viscous();
    let rest = FluidState::at_rest(ScalarField::from_fn(&d, |x| 1.0 + 0.2 * x[0].sin()), &basis, &p).unwrap();
    let cfg = SolverConfig {
        epsilon: 1e-2,
        ..Default::default()
    };
    let (rho, j) = pulse(&d);
    let init = project_initial(&rho, &j, &basis, &p).unwrap().state;
    let out = run_simulation(&init, &cfg, &p, &basis, 0.2, 10).unwrap();
    let rep = check_density_bounds(&out.trajectory, None).unwrap();
    assert!(rep.div_bound > 0.0 && rep.worst_margin >= 0.0);

    let still = qfluid_core::trajectory::Trajectory::new(rest.clone(), rest.energy, out.trajectory.meta().clone());
    let rep = check_density_bounds(&still, None).unwrap();
    assert_eq!(rep.div_bound, 0.0);
}

#[test]
fn density_bound_violation_is_reported() {
    let d = line(64);
    let basis = galerkin_basis(&d, 8).unwrap();
    let p = viscous();
    let (rho, j) = pulse(&d);
    let init = project_initial(&rho, &j.scale(5.0), &basis, &p).unwrap().state;
    let cfg = SolverConfig {
        epsilon: 1e-2,
        ..Default::default()
    };
    let out = run_simulation(&init, &cfg, &p, &basis, 0.2, 10).unwrap();
    // Pretending the velocity field is divergence free must fail.
    assert!(matches!(
        check_density_bounds(&out.trajectory, Some(0.0)),
        Err(Error::BoundViolated { .. })
    ));
}

#[test]
fn wall_and_torus_runs_conserve_mass() {
    let wall = make_domain(1, &[2.0 * PI], &[64], Boundary::Wall).unwrap();
    let torus = make_domain(2, &[2.0 * PI, 2.0 * PI], &[32, 32], Boundary::Periodic).unwrap();
    let wall2 = make_domain(2, &[2.0 * PI, 2.0 * PI], &[32, 32], Boundary::Wall).unwrap();
    for d in [wall, torus, wall2] {
        let dim = d.dim();
        let p = FluidParams { dim, ..viscous() };
        let basis = galerkin_basis(&d, 6).unwrap();
        let l = d.length(0);
        let rho = ScalarField::from_fn(&d, |x| 1.0 + 0.2 * (2.0 * PI * x[0] / l).cos());
        let coeffs = vec![0.1, 0.05, 0.0, 0.0, 0.0, 0.0];
        let s = FluidState::from_coeffs(0.0, rho, coeffs, &basis, &p).unwrap();
        let cfg = SolverConfig {
            dt: 2.5e-4,
            epsilon: 1e-3,
            ..Default::default()
        };
        let out = run_simulation(&s, &cfg, &p, &basis, 0.05, 4).unwrap();
        assert!(out.is_complete(), "{:?}", out.failure);
        let m0 = out.trajectory.first().mass();
        assert!((out.trajectory.last().mass() - m0).abs() <= 1e-10 * m0);
        let rep = energy_report(&out.trajectory, &p, &AuditConfig::from_solver(&cfg)).unwrap();
        assert!(rep.passed, "{:?}", rep.summary());
    }
}
