#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use qfluid_core::discretization::*;
use qfluid_core::physics::FluidParams;
use qfluid_core::solver::*;
use qfluid_core::trajectory::Trajectory;

pub fn line(n: usize) -> Arc<Domain> {
    make_domain(1, &[2.0 * PI], &[n], Boundary::Periodic).unwrap()
}

pub fn viscous() -> FluidParams {
    FluidParams {
        mu: 1.0,
        ..Default::default()
    }
}

pub fn pulse(d: &Arc<Domain>) -> (ScalarField, VectorField) {
    let rho = ScalarField::from_fn(d, |x| 1.0 + 0.2 * x[0].sin());
    let j = VectorField::from_fn(d, |x, _| 0.3 * x[0].cos());
    (rho, j)
}

/// Viscous pulse on 32 points, 8 modes, dt = 1/512, sampled every 4 steps.
pub fn pulse_run(t_final: f64) -> (Trajectory, GalerkinBasis, SolverConfig) {
    let d = line(32);
    let p = viscous();
    let basis = galerkin_basis(&d, 8).unwrap();
    let (rho, j) = pulse(&d);
    let init = project_initial(&rho, &j, &basis, &p).unwrap().state;
    let cfg = SolverConfig {
        dt: 1.0 / 512.0,
        ..Default::default()
    };
    let out = run_simulation(&init, &cfg, &p, &basis, t_final, 4).unwrap();
    assert!(out.is_complete());
    (out.trajectory, basis, cfg)
}

pub fn bits(f: &ScalarField) -> Vec<u64> {
    f.values().iter().map(|v| v.to_bits()).collect()
}

pub fn vbits(v: &VectorField) -> Vec<u64> {
    v.flat_values().iter().map(|v| v.to_bits()).collect()
}

/// Same stored fields, time and energy, bit for bit.
pub fn same_state(a: &FluidState, b: &FluidState) -> bool {
    a.time.to_bits() == b.time.to_bits()
        && a.energy.to_bits() == b.energy.to_bits()
        && bits(&a.rho) == bits(&b.rho)
        && vbits(&a.momentum) == vbits(&b.momentum)
}

/// Same fields and energy; times may differ by rounding.
pub fn same_fields(a: &FluidState, b: &FluidState) -> bool {
    a.energy.to_bits() == b.energy.to_bits() && bits(&a.rho) == bits(&b.rho) && vbits(&a.momentum) == vbits(&b.momentum)
}
