//! Two-level Faedo–Galerkin scheme: the density solves a regularized
//! continuity equation on the grid, the velocity lives in a finite Galerkin
//! space and is advanced by a per-step fixed-point iteration.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretization::ops::{self, dealias_vec, divergence, gradient, helmholtz_solve};
use crate::discretization::{Domain, GalerkinBasis, ScalarField, TensorField, VectorField};
use crate::energy;
use crate::error::{Error, Result};
use crate::hashing::config_hash;
use crate::physics::{check_positive, pressure, viscous_stress, FluidParams, SystemKind};
use crate::trajectory::{Trajectory, TrajectoryMeta};

/// Slack factor used by [`check_density_bounds`].
pub const DENSITY_BOUND_SLACK: f64 = 1.05;

const PICARD_MAX_ITER: usize = 100;
const PICARD_TOL: f64 = 1e-14;
const GROWTH_STREAK: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContinuityScheme {
    /// εΔ implicit, transport explicit.
    #[default]
    SemiImplicit,
    /// Transport and diffusion both implicit (Picard inner loop).
    Implicit,
}

/// Time quadrature of the forcing integral inside one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeQuadrature {
    /// First order, forcing evaluated at the new iterate.
    RightEndpoint,
    /// Second order, forcing evaluated at the average of old and new.
    #[default]
    Midpoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub dt: f64,
    pub epsilon: f64,
    pub n_modes: usize,
    pub fixed_point_tol: f64,
    pub fixed_point_max_iter: usize,
    pub continuity_scheme: ContinuityScheme,
    pub rho_floor: f64,
    pub courant: f64,
    pub time_quadrature: TimeQuadrature,
    /// Apply the 2/3 rule to the continuity flux.
    pub dealias: bool,
    pub system: SystemKind,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            epsilon: 0.0,
            n_modes: 8,
            fixed_point_tol: 1e-10,
            fixed_point_max_iter: 50,
            continuity_scheme: ContinuityScheme::SemiImplicit,
            rho_floor: 1e-8,
            courant: 0.5,
            time_quadrature: TimeQuadrature::Midpoint,
            dealias: true,
            system: SystemKind::NavierStokes,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            bad.push(format!("dt = {} must be > 0", self.dt));
        }
        if !(self.epsilon >= 0.0) {
            bad.push(format!("epsilon = {} must be >= 0", self.epsilon));
        }
        if !(self.fixed_point_tol > 0.0) {
            bad.push(format!("fixed_point_tol = {} must be > 0", self.fixed_point_tol));
        }
        if self.fixed_point_max_iter == 0 {
            bad.push("fixed_point_max_iter must be >= 1".into());
        }
        if !(self.rho_floor > 0.0) {
            bad.push(format!("rho_floor = {} must be > 0", self.rho_floor));
        }
        if !(self.courant > 0.0) {
            bad.push(format!("courant = {} must be > 0", self.courant));
        }
        if self.n_modes == 0 {
            bad.push("n_modes must be >= 1".into());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(bad.join("; ")))
        }
    }
}

/// Density, momentum and (optionally) Galerkin velocity at one instant.
#[derive(Debug, Clone)]
pub struct FluidState {
    pub time: f64,
    pub rho: ScalarField,
    pub momentum: VectorField,
    pub velocity_coeffs: Option<Vec<f64>>,
    pub energy: f64,
    velocity: Option<VectorField>,
}

impl FluidState {
    /// State from a density and Galerkin velocity coefficients; J = ϱu.
    pub fn from_coeffs(
        time: f64,
        rho: ScalarField,
        coeffs: Vec<f64>,
        basis: &GalerkinBasis,
        params: &FluidParams,
    ) -> Result<Self> {
        check_positive(&rho)?;
        if **rho.domain() != **basis.domain() {
            return Err(Error::DomainMismatch);
        }
        let u = basis.reconstruct(&coeffs)?;
        let momentum = u.mul_scalar(&rho);
        let mut state = Self {
            time,
            rho,
            momentum,
            velocity_coeffs: Some(coeffs),
            energy: 0.0,
            velocity: Some(u),
        };
        state.energy = energy::total_energy(&state, params)?.total;
        Ok(state)
    }

    /// State from density and momentum only (no Galerkin representation).
    pub fn from_momentum(time: f64, rho: ScalarField, momentum: VectorField, params: &FluidParams) -> Result<Self> {
        check_positive(&rho)?;
        if **rho.domain() != **momentum.domain() {
            return Err(Error::DomainMismatch);
        }
        let mut state = Self {
            time,
            rho,
            momentum,
            velocity_coeffs: None,
            energy: 0.0,
            velocity: None,
        };
        state.energy = energy::total_energy(&state, params)?.total;
        Ok(state)
    }

    /// Resting fluid with the given density.
    pub fn at_rest(rho: ScalarField, basis: &GalerkinBasis, params: &FluidParams) -> Result<Self> {
        Self::from_coeffs(0.0, rho, vec![0.0; basis.len()], basis, params)
    }

    pub fn domain(&self) -> &Arc<Domain> {
        self.rho.domain()
    }

    /// Reconstructed Galerkin velocity when available, J/ϱ otherwise.
    pub fn velocity(&self) -> VectorField {
        match &self.velocity {
            Some(u) => u.clone(),
            None => self
                .momentum
                .map_components(|j| j.zip_map(&self.rho, j.parity(), |a, r| a / r)),
        }
    }

    pub fn has_galerkin_velocity(&self) -> bool {
        self.velocity.is_some()
    }

    pub fn mass(&self) -> f64 {
        ops::integrate(&self.rho)
    }

    pub(crate) fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }
}

/// Result of imposing (ϱ₀, J₀) on the Galerkin space.
#[derive(Debug, Clone)]
pub struct InitialProjection {
    pub state: FluidState,
    /// ‖J₀ − ϱ₀u₀‖_{L²}: the part of J₀ the Galerkin space cannot carry.
    pub projection_gap: f64,
}

/// Solves 𝓜[ϱ₀]c = J₀* with J₀*ᵢ = ⟨J₀, wᵢ⟩.
pub fn project_initial(
    rho: &ScalarField,
    momentum: &VectorField,
    basis: &GalerkinBasis,
    params: &FluidParams,
) -> Result<InitialProjection> {
    let b = basis.project(momentum)?;
    let m = mass_operator(rho, basis)?;
    let c = solve_spd(m, &b)?;
    let state = FluidState::from_coeffs(0.0, rho.clone(), c, basis, params)?;
    let projection_gap = momentum.sub(&state.momentum).l2_norm();
    Ok(InitialProjection { state, projection_gap })
}

/// Guards applied by [`continuity_step_guarded`].
#[derive(Debug, Clone, Copy)]
pub struct ContinuityGuard {
    pub rho_floor: f64,
    pub courant: f64,
    /// Reported in errors.
    pub time: f64,
    pub dealias: bool,
}

impl Default for ContinuityGuard {
    fn default() -> Self {
        let c = SolverConfig::default();
        Self {
            rho_floor: c.rho_floor,
            courant: c.courant,
            time: 0.0,
            dealias: c.dealias,
        }
    }
}

/// One step of ∂ₜϱ + div(ϱu) = εΔϱ with default guards.
pub fn continuity_step(
    rho: &ScalarField,
    u: &VectorField,
    epsilon: f64,
    dt: f64,
    scheme: ContinuityScheme,
) -> Result<ScalarField> {
    continuity_step_guarded(rho, u, epsilon, dt, scheme, &ContinuityGuard::default())
}

pub fn continuity_step_guarded(
    rho: &ScalarField,
    u: &VectorField,
    epsilon: f64,
    dt: f64,
    scheme: ContinuityScheme,
    guard: &ContinuityGuard,
) -> Result<ScalarField> {
    continuity_core(rho, rho, u, epsilon, dt, scheme, 1.0, guard)
}

fn courant_number(u: &VectorField, dt: f64) -> f64 {
    dt * u.max_abs() / u.domain().min_spacing()
}

fn transport(density: &ScalarField, u: &VectorField, dealias: bool) -> ScalarField {
    let flux = u.mul_scalar(density);
    if dealias {
        divergence(&dealias_vec(&flux))
    } else {
        divergence(&flux)
    }
}

/// `explicit` is the flux density of the semi-implicit scheme; `theta`
/// weights the new density in the implicit scheme's flux.
#[allow(clippy::too_many_arguments)]
fn continuity_core(
    rho: &ScalarField,
    explicit: &ScalarField,
    u: &VectorField,
    epsilon: f64,
    dt: f64,
    scheme: ContinuityScheme,
    theta: f64,
    guard: &ContinuityGuard,
) -> Result<ScalarField> {
    check_positive(rho)?;
    if **rho.domain() != **u.domain() {
        return Err(Error::DomainMismatch);
    }
    let courant = courant_number(u, dt);
    if !(courant <= guard.courant) {
        return Err(Error::CflViolation {
            time: guard.time,
            courant,
            bound: guard.courant,
        });
    }
    let alpha = epsilon * dt;
    let out = match scheme {
        ContinuityScheme::SemiImplicit => {
            let rhs = rho.sub(&transport(explicit, u, guard.dealias).scale(dt));
            helmholtz_solve(&rhs, alpha)
        }
        ContinuityScheme::Implicit => {
            let mut cur = explicit.clone();
            let mut converged = false;
            for _ in 0..PICARD_MAX_ITER {
                let dens = rho.scale(1.0 - theta).add(&cur.scale(theta));
                let rhs = rho.sub(&transport(&dens, u, guard.dealias).scale(dt));
                let next = helmholtz_solve(&rhs, alpha);
                let change = next.sub(&cur).max_abs();
                cur = next;
                if !change.is_finite() {
                    break;
                }
                if change <= PICARD_TOL * cur.max_abs().max(1.0) {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::FixedPointDiverged {
                    time: guard.time,
                    iterations: PICARD_MAX_ITER,
                    residual: f64::NAN,
                    growing: true,
                });
            }
            cur
        }
    };
    let min = out.min();
    if !(min > guard.rho_floor) {
        return Err(Error::PositivityLost {
            time: guard.time,
            min,
            floor: guard.rho_floor,
        });
    }
    Ok(out)
}

/// 𝓜[ϱ]ᵢⱼ = ∫ϱ wᵢ·wⱼ.
pub fn mass_operator(rho: &ScalarField, basis: &GalerkinBasis) -> Result<DMatrix<f64>> {
    check_positive(rho)?;
    if **rho.domain() != **basis.domain() {
        return Err(Error::DomainMismatch);
    }
    let wr: Vec<f64> = rho
        .values()
        .iter()
        .zip(rho.domain().weights())
        .map(|(r, w)| r * w)
        .collect();
    let n = basis.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let wi = &basis.mode(i).w;
            (0..=i)
                .map(|j| {
                    let wj = &basis.mode(j).w;
                    let mut acc = 0.0;
                    for (a, b) in wi.components().iter().zip(wj.components()) {
                        for ((x, y), q) in a.values().iter().zip(b.values()).zip(&wr) {
                            acc += q * x * y;
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect();
    let mut m = DMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            m[(i, j)] = *v;
            m[(j, i)] = *v;
        }
    }
    Ok(m)
}

/// Cholesky solve of an SPD system.
pub fn solve_spd(m: DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>> {
    let n = m.nrows();
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    let chol = m
        .cholesky()
        .ok_or_else(|| Error::Invalid("mass operator is not positive definite".into()))?;
    Ok(chol.solve(&DVector::from_column_slice(b)).iter().copied().collect())
}

/// 𝓝[ϱ,u] for the state's own velocity.
pub fn momentum_rhs(state: &FluidState, basis: &GalerkinBasis, params: &FluidParams, epsilon: f64) -> Result<Vec<f64>> {
    let coeffs = match &state.velocity_coeffs {
        Some(c) => c.clone(),
        None => {
            let m = mass_operator(&state.rho, basis)?;
            solve_spd(m, &basis.project(&state.momentum)?)?
        }
    };
    forcing(&state.rho, &coeffs, basis, params, epsilon)
}

/// 𝓝ᵢ = ∫[(ϱu⊗u + p𝕀 + ħ∇√ϱ⊗∇√ϱ − 𝕊):∇wᵢ] + (ħ/4)∫∇ϱ·∇div wᵢ − ε∫(∇u ∇ϱ)·wᵢ.
pub fn forcing(
    rho: &ScalarField,
    coeffs: &[f64],
    basis: &GalerkinBasis,
    params: &FluidParams,
    epsilon: f64,
) -> Result<Vec<f64>> {
    check_positive(rho)?;
    let domain = rho.domain().clone();
    if *domain != **basis.domain() {
        return Err(Error::DomainMismatch);
    }
    let d = domain.dim();
    let u = basis.reconstruct(coeffs)?;
    let grad_u = basis.reconstruct_grad(coeffs);
    let weights = domain.weights();
    let npts = domain.len();

    let p = pressure(rho, params)?;
    let stress = viscous_stress(&grad_u, params)?;
    let grad_rho = gradient(rho);
    let grad_sqrt = gradient(&rho.map(f64::sqrt));

    let mut a = vec![vec![0.0; npts]; d * d];
    for i in 0..d {
        for j in 0..d {
            let s = stress.get(i, j).values();
            let ui = u.component(i).values();
            let uj = u.component(j).values();
            let gi = grad_sqrt.component(i).values();
            let gj = grad_sqrt.component(j).values();
            let r = rho.values();
            let pv = p.values();
            let out = &mut a[i * d + j];
            for k in 0..npts {
                let mut v = r[k] * ui[k] * uj[k] + params.hbar * gi[k] * gj[k] - s[k];
                if i == j {
                    v += pv[k];
                }
                out[k] = v * weights[k];
            }
        }
    }
    let g: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            grad_rho
                .component(i)
                .values()
                .iter()
                .zip(weights)
                .map(|(x, w)| 0.25 * params.hbar * x * w)
                .collect()
        })
        .collect();
    let f: Option<Vec<Vec<f64>>> = (epsilon != 0.0).then(|| {
        (0..d)
            .map(|i| {
                (0..npts)
                    .map(|k| {
                        let mut acc = 0.0;
                        for j in 0..d {
                            acc += grad_u.get(i, j).values()[k] * grad_rho.component(j).values()[k];
                        }
                        -epsilon * acc * weights[k]
                    })
                    .collect()
            })
            .collect()
    });

    Ok((0..basis.len())
        .into_par_iter()
        .map(|m| {
            let mode = basis.mode(m);
            let mut acc = 0.0;
            for (ak, gw) in a.iter().zip(mode.grad.components()) {
                acc += dot(ak, gw.values());
            }
            for (gi, gd) in g.iter().zip(mode.grad_div.components()) {
                acc += dot(gi, gd.values());
            }
            if let Some(f) = &f {
                for (fi, wi) in f.iter().zip(mode.w.components()) {
                    acc += dot(fi, wi.values());
                }
            }
            acc
        })
        .collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Per-step diagnostics of the fixed-point loop.
#[derive(Debug, Clone, Default, Serialize)]
pub struct StepReport {
    pub iterations: usize,
    /// ‖c⁽ᵏ⁾ − c⁽ᵏ⁻¹⁾‖ for each iteration.
    pub residuals: Vec<f64>,
}

impl StepReport {
    /// Ratios of consecutive residuals (observed contraction factors).
    pub fn contraction_ratios(&self) -> Vec<f64> {
        self.residuals
            .windows(2)
            .filter(|w| w[0] > 0.0)
            .map(|w| w[1] / w[0])
            .collect()
    }
}

/// One time step of size `config.dt`.
pub fn advance(
    state: &FluidState,
    config: &SolverConfig,
    params: &FluidParams,
    basis: &GalerkinBasis,
) -> Result<FluidState> {
    advance_by(state, config.dt, config, params, basis).map(|(s, _)| s)
}

/// One step of size `dt` (may differ from `config.dt` for the last step).
pub fn advance_by(
    state: &FluidState,
    dt: f64,
    config: &SolverConfig,
    params: &FluidParams,
    basis: &GalerkinBasis,
) -> Result<(FluidState, StepReport)> {
    let c0 = match &state.velocity_coeffs {
        Some(c) => c.clone(),
        None => {
            let m = mass_operator(&state.rho, basis)?;
            solve_spd(m, &basis.project(&state.momentum)?)?
        }
    };
    let t_new = state.time + dt;
    let guard = ContinuityGuard {
        rho_floor: config.rho_floor,
        courant: config.courant,
        time: t_new,
        dealias: config.dealias,
    };
    let b0: Vec<f64> = {
        let m0 = mass_operator(&state.rho, basis)?;
        (m0 * DVector::from_column_slice(&c0)).iter().copied().collect()
    };

    let mut prev = c0.clone();
    let mut rho_prev = state.rho.clone();
    let mut report = StepReport::default();
    let mut growth = 0usize;
    for k in 1..=config.fixed_point_max_iter {
        let (rho_k, rhs) = match config.time_quadrature {
            TimeQuadrature::RightEndpoint => {
                let u = basis.reconstruct(&prev)?;
                let rho_k = continuity_core(
                    &state.rho,
                    &state.rho,
                    &u,
                    config.epsilon,
                    dt,
                    config.continuity_scheme,
                    1.0,
                    &guard,
                )?;
                let n = forcing(&rho_k, &prev, basis, params, config.epsilon)?;
                (rho_k, n)
            }
            TimeQuadrature::Midpoint => {
                let c_mid: Vec<f64> = c0.iter().zip(&prev).map(|(a, b)| 0.5 * (a + b)).collect();
                let u_mid = basis.reconstruct(&c_mid)?;
                let rho_explicit = state.rho.add(&rho_prev).scale(0.5);
                let rho_k = continuity_core(
                    &state.rho,
                    &rho_explicit,
                    &u_mid,
                    config.epsilon,
                    dt,
                    config.continuity_scheme,
                    0.5,
                    &guard,
                )?;
                let rho_mid = state.rho.add(&rho_k).scale(0.5);
                let n = forcing(&rho_mid, &c_mid, basis, params, config.epsilon)?;
                (rho_k, n)
            }
        };
        let b: Vec<f64> = b0.iter().zip(&rhs).map(|(x, y)| x + dt * y).collect();
        let next = solve_spd(mass_operator(&rho_k, basis)?, &b)?;
        let diff: Vec<f64> = next.iter().zip(&prev).map(|(a, b)| a - b).collect();
        let residual = norm(&diff);
        report.iterations = k;
        report.residuals.push(residual);
        if !residual.is_finite() {
            return Err(Error::FixedPointDiverged {
                time: t_new,
                iterations: k,
                residual,
                growing: true,
            });
        }
        if residual <= config.fixed_point_tol * norm(&next).max(1.0) {
            let new_state = FluidState::from_coeffs(t_new, rho_k, next, basis, params)?;
            let courant = courant_number(new_state.velocity.as_ref().expect("galerkin velocity"), dt);
            if !(courant <= config.courant) {
                return Err(Error::CflViolation {
                    time: t_new,
                    courant,
                    bound: config.courant,
                });
            }
            return Ok((new_state, report));
        }
        if k >= 2 && residual > report.residuals[k - 2] {
            growth += 1;
            if growth >= GROWTH_STREAK {
                return Err(Error::FixedPointDiverged {
                    time: t_new,
                    iterations: k,
                    residual,
                    growing: true,
                });
            }
        } else {
            growth = 0;
        }
        prev = next;
        rho_prev = rho_k;
    }
    let residual = *report.residuals.last().unwrap_or(&f64::NAN);
    Err(Error::FixedPointDiverged {
        time: t_new,
        iterations: config.fixed_point_max_iter,
        residual,
        growing: residual > report.residuals[0],
    })
}

/// What [`run_simulation`] produced, including a partial trajectory on failure.
#[derive(Debug, Clone)]
pub struct SimulationOutcome {
    pub trajectory: Trajectory,
    pub failure: Option<Error>,
    pub steps: usize,
    /// Fixed-point iteration count per completed step.
    pub iterations: Vec<usize>,
}

impl SimulationOutcome {
    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }
}

/// Hash identifying a run configuration.
pub fn run_hash(config: &SolverConfig, params: &FluidParams, basis: &GalerkinBasis) -> String {
    config_hash(&(
        config,
        params,
        basis.domain().spec(),
        basis.len(),
        basis.has_mean_modes(),
    ))
}

/// Steps from `init` to `t_final`, storing a sample every `snapshot_every`
/// steps and at the final time. Sample times are measured from `init.time`.
pub fn run_simulation(
    init: &FluidState,
    config: &SolverConfig,
    params: &FluidParams,
    basis: &GalerkinBasis,
    t_final: f64,
    snapshot_every: usize,
) -> Result<SimulationOutcome> {
    config.validate()?;
    if !(t_final >= init.time) {
        return Err(Error::Invalid(format!(
            "t_final {t_final} precedes the initial time {}",
            init.time
        )));
    }
    if snapshot_every == 0 {
        return Err(Error::Invalid("snapshot_every must be >= 1".into()));
    }
    let meta = TrajectoryMeta {
        params: *params,
        config_hash: run_hash(config, params, basis),
        system: config.system,
        solver: Some(config.clone()),
    };
    let t0 = init.time;
    let horizon = t_final - t0;
    let nsteps = if horizon == 0.0 {
        0
    } else {
        ((horizon / config.dt) - 1e-9).ceil().max(1.0) as usize
    };
    let whole_steps = nsteps > 0 && (horizon / config.dt - nsteps as f64).abs() <= 1e-9;
    let mut start = init.clone().with_time(0.0);
    if start.velocity_coeffs.is_none() {
        start = project_initial(&start.rho, &start.momentum, basis, params)?.state;
    }
    let mut traj = Trajectory::new(start.clone(), init.energy, meta);
    let mut state = start;
    let mut iterations = Vec::with_capacity(nsteps);
    for step in 1..=nsteps {
        // Full steps use config.dt verbatim so restarts replay bit for bit.
        let (t_next, dt) = if step == nsteps && !whole_steps {
            (horizon, horizon - state.time)
        } else if step == nsteps {
            (horizon, config.dt)
        } else {
            (step as f64 * config.dt, config.dt)
        };
        match advance_by(&state, dt, config, params, basis) {
            Ok((next, rep)) => {
                iterations.push(rep.iterations);
                state = next.with_time(t_next);
                if step % snapshot_every == 0 || step == nsteps {
                    traj.push(state.clone())?;
                }
            }
            Err(e) => {
                return Ok(SimulationOutcome {
                    trajectory: traj,
                    failure: Some(e),
                    steps: step - 1,
                    iterations,
                });
            }
        }
    }
    Ok(SimulationOutcome {
        trajectory: traj,
        failure: None,
        steps: nsteps,
        iterations,
    })
}

/// Outcome of the maximum-principle audit.
#[derive(Debug, Clone, Serialize)]
pub struct DensityBoundsReport {
    /// sup over samples of ‖div u‖_∞ (or the supplied bound).
    pub div_bound: f64,
    pub slack: f64,
    pub rho_min0: f64,
    pub rho_max0: f64,
    /// Smallest of the lower/upper margins over all samples (≥ 0 passes).
    pub worst_margin: f64,
    pub samples: usize,
}

/// Checks ϱ_min(0)e^{−τD}/s ≤ ϱ(τ) ≤ s·ϱ_max(0)e^{τD} with s = 1.05.
pub fn check_density_bounds(traj: &Trajectory, div_bound: Option<f64>) -> Result<DensityBoundsReport> {
    check_density_bounds_with_slack(traj, div_bound, DENSITY_BOUND_SLACK)
}

pub fn check_density_bounds_with_slack(
    traj: &Trajectory,
    div_bound: Option<f64>,
    slack: f64,
) -> Result<DensityBoundsReport> {
    let samples = traj.samples();
    let first = &samples[0];
    let rho_min0 = first.rho.min();
    let rho_max0 = first.rho.max();
    let measured = samples
        .iter()
        .map(|s| divergence(&s.velocity()).max_abs())
        .fold(0.0, f64::max);
    let d = div_bound.unwrap_or(measured);
    let mut worst = f64::INFINITY;
    for (i, s) in samples.iter().enumerate() {
        let tau = s.time;
        let lower = rho_min0 * (-tau * d).exp() / slack;
        let upper = slack * rho_max0 * (tau * d).exp();
        let (lo, hi) = (s.rho.min(), s.rho.max());
        let margin = ((lo - lower) / lower).min((upper - hi) / upper);
        worst = worst.min(margin);
        if margin < 0.0 {
            return Err(Error::BoundViolated {
                index: i,
                time: tau,
                detail: format!("rho in [{lo:.6e}, {hi:.6e}] outside [{lower:.6e}, {upper:.6e}] with D = {d:.6e}"),
            });
        }
    }
    Ok(DensityBoundsReport {
        div_bound: d,
        slack,
        rho_min0,
        rho_max0,
        worst_margin: worst,
        samples: samples.len(),
    })
}

/// ∇u as a tensor field for any vector field.
pub fn velocity_gradient(u: &VectorField) -> TensorField {
    ops::grad_vec(u)
}

impl FluidState {
    /// Sample synthesized between two stored states; no Galerkin velocity.
    pub(crate) fn interpolated(time: f64, rho: ScalarField, momentum: VectorField, energy: f64) -> Self {
        Self {
            time,
            rho,
            momentum,
            velocity_coeffs: None,
            energy,
            velocity: None,
        }
    }

    /// Rebuilds a state from stored parts without recomputing the energy.
    pub fn from_parts(
        time: f64,
        rho: ScalarField,
        momentum: VectorField,
        velocity_coeffs: Option<Vec<f64>>,
        energy: f64,
        basis: Option<&GalerkinBasis>,
    ) -> Result<Self> {
        check_positive(&rho)?;
        let velocity = match (&velocity_coeffs, basis) {
            (Some(c), Some(b)) => Some(b.reconstruct(c)?),
            _ => None,
        };
        Ok(Self {
            time,
            rho,
            momentum,
            velocity_coeffs,
            energy,
            velocity,
        })
    }
}
