mod common;

use common::*;
use proptest::prelude::*;
use qfluid_core::discretization::*;
use qfluid_core::energy::{energy_report, AuditConfig};
use qfluid_core::physics::{FluidParams, SystemKind};
use qfluid_core::semiflow::*;
use qfluid_core::solver::*;
use qfluid_core::trajectory::Trajectory;
use qfluid_core::{Error, Result};

const TIME_TOL: f64 = 1e-12;

fn assert_same_samples(a: &Trajectory, b: &Trajectory) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.samples().iter().zip(b.samples()) {
        assert!((x.time - y.time).abs() <= TIME_TOL, "{} vs {}", x.time, y.time);
        assert!(same_fields(x, y), "fields differ at t = {}", x.time);
    }
}

fn constant_energy_trajectory(c_rho: f64, times: &[f64]) -> (Trajectory, FluidParams) {
    let d = line(16);
    let p = FluidParams::default();
    let basis = galerkin_basis(&d, 4).unwrap();
    let rho = ScalarField::constant(&d, c_rho);
    let samples: Vec<FluidState> = times
        .iter()
        .map(|&t| {
            let mut s = FluidState::at_rest(rho.clone(), &basis, &p).unwrap();
            s.time = t;
            s
        })
        .collect();
    let e = samples[0].energy;
    let meta = TrajectoryMeta {
        params: p,
        config_hash: "0000000000000000".into(),
        system: SystemKind::NavierStokes,
        solver: None,
    };
    (Trajectory::from_samples(samples, e, meta).unwrap(), p)
}

#[test]
fn shift_by_zero_is_identity() {
    let (traj, _, _) = pulse_run(0.25);
    let s = shift(&traj, 0.0).unwrap();
    assert_same_samples(&s, &traj);
    assert_eq!(s.initial_energy(), traj.initial_energy());
}

#[test]
fn shift_composes_exactly_on_samples() {
    let (traj, _, _) = pulse_run(0.25);
    let (a, b) = (1.0 / 16.0, 3.0 / 32.0);
    let lhs = shift(&shift(&traj, a).unwrap(), b).unwrap();
    let rhs = shift(&traj, a + b).unwrap();
    assert_same_samples(&lhs, &rhs);
    assert_eq!(lhs.initial_energy(), rhs.initial_energy());
}

#[test]
fn shift_between_samples_interpolates_and_keeps_left_energy() {
    let (traj, _, _) = pulse_run(0.25);
    let t = 0.1 + 1e-3;
    assert!(traj.find(t).is_none());
    let s = shift(&traj, t).unwrap();
    let expected = traj.state_at(t).unwrap();
    assert_eq!(s.first().time, 0.0);
    assert_eq!(bits(&s.first().rho), bits(&expected.rho));
    assert_eq!(s.initial_energy(), traj.energy_left(t).unwrap());
    // Following samples are the source's, relabelled.
    let next = traj.samples().iter().find(|x| x.time > t).unwrap();
    assert!(same_fields(&s.samples()[1], next));
}

#[test]
fn shift_past_horizon_fails() {
    let (traj, _, _) = pulse_run(0.125);
    assert!(matches!(shift(&traj, 0.2), Err(Error::HorizonExceeded { .. })));
    assert!(matches!(shift(&traj, -0.1), Err(Error::HorizonExceeded { .. })));
}

#[test]
fn shifted_and_glued_runs_pass_the_energy_audit() {
    let (traj, _, cfg) = pulse_run(0.25);
    let audit = AuditConfig::from_solver(&cfg);
    let p = traj.meta().params;
    let t = 0.125;
    let s = shift(&traj, t).unwrap();
    assert!(energy_report(&s, &p, &audit).unwrap().passed);
    let glued = concatenate(&traj, &s, t).unwrap();
    assert!(energy_report(&glued, &p, &audit).unwrap().passed);
}

#[test]
fn self_gluing_reproduces_the_trajectory() {
    let (traj, _, _) = pulse_run(0.25);
    for t in [1.0 / 128.0, 0.125, 0.25] {
        let glued = concatenate(&traj, &shift(&traj, t).unwrap(), t).unwrap();
        assert_same_samples(&glued, &traj);
        assert_eq!(glued.initial_energy(), traj.initial_energy());
    }
}

#[test]
fn gluing_at_zero_returns_second_piece() {
    let (traj, _, _) = pulse_run(0.125);
    let other = shift(&traj, 0.0625).unwrap();
    let glued = concatenate(&traj, &other, 0.0).unwrap();
    assert_same_samples(&glued, &other);
}

#[test]
fn seam_mismatch_reports_gap() {
    let (traj, _, _) = pulse_run(0.125);
    let late = shift(&traj, 0.125).unwrap();
    match concatenate(&traj, &late, 0.0625) {
        Err(Error::SeamMismatch { gap, .. }) => assert!(gap > 1e-9),
        other => panic!("expected a seam mismatch, got {other:?}"),
    }
    // Matching fields but a larger starting energy budget.
    let s = shift(&traj, 0.0625).unwrap();
    let raised = s.clone().with_initial_energy(s.initial_energy() + 1e-3);
    match concatenate(&traj, &raised, 0.0625) {
        Err(Error::SeamMismatch { energy_excess, .. }) => assert!(energy_excess > 0.0),
        other => panic!("expected a seam mismatch, got {other:?}"),
    }
}

#[test]
fn gluing_is_associative() {
    let (traj, _, _) = pulse_run(0.25);
    let (t1, t2) = (0.0625, 0.09375);
    let p2 = shift(&traj, t1).unwrap();
    let p3 = shift(&traj, t1 + t2).unwrap();
    let left = concatenate(&concatenate(&traj, &p2, t1).unwrap(), &p3, t1 + t2).unwrap();
    let right = concatenate(&traj, &concatenate(&p2, &p3, t2).unwrap(), t1).unwrap();
    assert_same_samples(&left, &right);
}

#[test]
fn functional_of_constant_energy_has_closed_form() {
    let times: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
    let (traj, _) = constant_energy_trajectory(1.5, &times);
    let c = traj.first().energy;
    assert!(c > 0.0);
    let f = SelectionFunctional::new(Observable::Energy, 0.7).unwrap();
    let h = 1.0;
    let exact = c * (1.0 - (-0.7f64 * h).exp()) / 0.7;
    let got = evaluate_functional(&traj, &f, h).unwrap();
    assert!((got - exact).abs() <= 1e-12 * exact, "{got} vs {exact}");
    // Momentum of a resting state is zero.
    let m = SelectionFunctional::new(Observable::MomentumNorm, 0.7).unwrap();
    assert_eq!(evaluate_functional(&traj, &m, h).unwrap(), 0.0);
}

#[test]
fn large_discount_picks_out_initial_value() {
    let (traj, _, _) = pulse_run(0.25);
    let f = SelectionFunctional::new(Observable::Energy, 100.0).unwrap();
    let v = evaluate_functional(&traj, &f, 0.25).unwrap();
    let asym = traj.first().energy / 100.0;
    assert!((v / asym - 1.0).abs() < 0.05, "{v} vs {asym}");
}

#[test]
fn functional_horizon_is_checked() {
    let (traj, _, _) = pulse_run(0.125);
    let f = SelectionFunctional::new(Observable::Energy, 1.0).unwrap();
    assert!(matches!(
        evaluate_functional(&traj, &f, 0.5),
        Err(Error::HorizonExceeded { .. })
    ));
}

/// Same initial data, different step sizes and ε.
fn candidates() -> Vec<Trajectory> {
    let d = line(32);
    let p = viscous();
    let basis = galerkin_basis(&d, 8).unwrap();
    let (rho, j) = pulse(&d);
    let init = project_initial(&rho, &j, &basis, &p).unwrap().state;
    [(1.0 / 256.0, 0.0), (1.0 / 512.0, 0.0), (1.0 / 512.0, 1e-2)]
        .iter()
        .map(|&(dt, epsilon)| {
            let cfg = SolverConfig {
                dt,
                epsilon,
                ..Default::default()
            };
            run_simulation(&init, &cfg, &p, &basis, 0.125, 4).unwrap().trajectory
        })
        .collect()
}

fn energy_at_end(c: &Trajectory) -> f64 {
    c.last().energy
}

#[test]
fn selection_basics() {
    let cands = candidates();
    let f = vec![SelectionFunctional::new(Observable::Energy, 1.0).unwrap()];
    let single = select(&cands[..1], &f, 0.125).unwrap();
    assert_eq!(single.winner, 0);

    let rep = select(&cands, &f, 0.125).unwrap();
    // The ε-regularized run dissipates most.
    assert_eq!(rep.winner, 2);
    assert!(energy_at_end(&cands[2]) < energy_at_end(&cands[1]));
    assert_eq!(rep.winner_hash, cands[2].meta().config_hash);

    let mut doubled = cands.clone();
    doubled.extend(cands.iter().cloned());
    let rep2 = select(&doubled, &f, 0.125).unwrap();
    assert_eq!(doubled[rep2.winner].meta().config_hash, rep.winner_hash);

    assert!(matches!(select(&[], &f, 0.125), Err(Error::EmptyCandidates)));
}

#[test]
fn selection_needs_common_initial_data() {
    let mut cands = candidates();
    let (other, _, _) = pulse_run(0.125);
    let shifted = shift(&other, 0.0625).unwrap();
    cands.push(shifted);
    let f = vec![SelectionFunctional::new(Observable::Energy, 1.0).unwrap()];
    assert!(matches!(
        select(&cands, &f, 0.0625),
        Err(Error::MixedInitialData { .. })
    ));
}

#[test]
fn lexicographic_rounds_shrink_the_survivor_set() {
    let cands = candidates();
    // Two identical runs tie on every functional; the hash order decides.
    let pair = vec![cands[1].clone(), cands[1].clone()];
    let f = vec![
        SelectionFunctional::new(Observable::MomentumNorm, 2.0).unwrap(),
        SelectionFunctional::new(Observable::MassWeightedEnergy, 1.0).unwrap(),
    ];
    let rep = select(&pair, &f, 0.125).unwrap();
    assert_eq!(rep.survivors_per_round, vec![vec![0, 1], vec![0, 1]]);
    assert_eq!(rep.winner, 0);
    let rep = select(&cands, &f, 0.125).unwrap();
    assert!(rep.survivors_per_round.windows(2).all(|w| w[1].len() <= w[0].len()));
    assert!(rep.survivors_per_round.last().unwrap().contains(&rep.winner));
}

fn solver_generator(
    cfg: SolverConfig,
    basis: GalerkinBasis,
) -> impl Fn(&FluidState, f64, f64) -> Result<Vec<Trajectory>> {
    move |init: &FluidState, e0: f64, horizon: f64| {
        let p = viscous();
        let out = run_simulation(init, &cfg, &p, &basis, init.time + horizon, 4)?;
        Ok(vec![out.trajectory.with_initial_energy(e0)])
    }
}

#[test]
fn deterministic_generator_has_the_semigroup_property() {
    let (traj, basis, cfg) = pulse_run(0.0);
    let init = traj.first().clone();
    let e0 = traj.initial_energy();
    let gen = solver_generator(cfg, basis);
    let selector = Selector {
        functionals: vec![SelectionFunctional::new(Observable::Energy, 1.0).unwrap()],
        horizon: 0.0,
    };
    let rep = check_semigroup(&selector, &init, e0, 0.0625, 0.0625, &gen, SEMIGROUP_TOL).unwrap();
    assert!(rep.passed, "distance {}", rep.distance);
    assert!(rep.distance <= 1e-8);
    let rep = check_semigroup(&selector, &init, e0, 0.0625, 0.0, &gen, SEMIGROUP_TOL).unwrap();
    assert_eq!(rep.distance, 0.0);
}

#[test]
fn two_step_size_generator_reports_a_distance() {
    let (traj, basis, cfg) = pulse_run(0.0);
    let init = traj.first().clone();
    let coarse = SolverConfig {
        dt: cfg.dt * 2.0,
        ..cfg.clone()
    };
    let p = viscous();
    let gen = move |s: &FluidState, e0: f64, h: f64| -> Result<Vec<Trajectory>> {
        [&cfg, &coarse]
            .iter()
            .map(|c| {
                Ok(run_simulation(s, c, &p, &basis, s.time + h, 4)?
                    .trajectory
                    .with_initial_energy(e0))
            })
            .collect()
    };
    let selector = Selector {
        functionals: vec![SelectionFunctional::new(Observable::Energy, 1.0).unwrap()],
        horizon: 0.0,
    };
    let rep = check_semigroup(
        &selector,
        &init,
        traj.initial_energy(),
        0.0625,
        0.0625,
        &gen,
        SEMIGROUP_TOL,
    )
    .unwrap();
    assert!(rep.distance.is_finite());
    assert_eq!(rep.passed, rep.distance <= SEMIGROUP_TOL);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn shift_composition_on_sample_grid(i in 0usize..16, j in 0usize..16) {
        let (traj, _, _) = pulse_run(0.25);
        let (a, b) = (i as f64 / 128.0, j as f64 / 128.0);
        let lhs = shift(&shift(&traj, a).unwrap(), b).unwrap();
        let rhs = shift(&traj, a + b).unwrap();
        prop_assert_eq!(lhs.len(), rhs.len());
        for (x, y) in lhs.samples().iter().zip(rhs.samples()) {
            prop_assert!(same_fields(x, y));
        }
    }

    #[test]
    fn selection_returns_a_member(mask in 1u8..8, order in 0usize..6, rate in 0.1f64..10.0) {
        let all = candidates();
        let subset: Vec<Trajectory> = (0..3).filter(|k| mask & (1 << k) != 0).map(|k| all[k].clone()).collect();
        let obs = [Observable::Energy, Observable::MassWeightedEnergy, Observable::MomentumNorm];
        let f: Vec<SelectionFunctional> = (0..3)
            .map(|k| SelectionFunctional::new(obs[(k + order) % 3], rate).unwrap())
            .collect();
        let rep = select(&subset, &f, 0.125).unwrap();
        let again = select(&subset, &f, 0.125).unwrap();
        prop_assert_eq!(rep.winner, again.winner);
        prop_assert!(rep.winner < subset.len());
        prop_assert_eq!(&rep.winner_hash, &subset[rep.winner].meta().config_hash);
    }
}
