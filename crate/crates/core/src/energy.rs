//! Energy functionals, dissipation integrals and the discrete energy
//! inequality audit.

use serde::Serialize;

use crate::discretization::ops::{self, grad_vec, gradient, hessian, integrate, laplacian};
use crate::discretization::{Boundary, ScalarField, VectorField};
use crate::error::{Error, Result};
use crate::physics::{check_positive, lambda_defect, viscous_stress, FluidParams};
use crate::solver::FluidState;
use crate::trajectory::Trajectory;

/// Budget constant multiplier: c_tol defaults to this times E(0).
pub const DEFAULT_CTOL_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyComponents {
    pub kinetic: f64,
    pub potential: f64,
    pub quantum: f64,
    pub total: f64,
}

/// E = ∫ ½ϱ|u|² + P(ϱ) + (ħ/2)|∇√ϱ|².
///
/// The kinetic part uses the Galerkin velocity when the state carries one
/// and ½|J|²/ϱ otherwise.
pub fn total_energy(state: &FluidState, params: &FluidParams) -> Result<EnergyComponents> {
    check_positive(&state.rho)?;
    let kinetic = if state.has_galerkin_velocity() {
        let u = state.velocity();
        0.5 * integrate(&u.norm_sq().mul(&state.rho))
    } else {
        kinetic_from_momentum(&state.rho, &state.momentum)?
    };
    let potential = integrate(&state.rho.map(|r| params.potential(r)));
    let quantum = quantum_energy(&state.rho, params)?;
    Ok(EnergyComponents {
        kinetic,
        potential,
        quantum,
        total: kinetic + potential + quantum,
    })
}

/// ∫ ½|J|²/ϱ.
pub fn kinetic_from_momentum(rho: &ScalarField, momentum: &VectorField) -> Result<f64> {
    check_positive(rho)?;
    let j2 = momentum.norm_sq();
    Ok(0.5 * integrate(&j2.zip_map(rho, j2.parity(), |a, r| a / r)))
}

/// (ħ/2)∫|∇√ϱ|².
pub fn quantum_energy(rho: &ScalarField, params: &FluidParams) -> Result<f64> {
    check_positive(rho)?;
    let g = gradient(&rho.map(f64::sqrt));
    Ok(0.5 * params.hbar * integrate(&g.norm_sq()))
}

/// ∫𝕊(∇u):∇u.
pub fn dissipation_rate(u: &VectorField, params: &FluidParams) -> f64 {
    let g = grad_vec(u);
    let s = viscous_stress(&g, params).expect("velocity dimension matches params");
    integrate(&s.contract(&g))
}

/// ε∫(P″(ϱ)|∇ϱ|² + (ħ/4)ϱ|∇²log ϱ|²).
pub fn epsilon_dissipation_rate(rho: &ScalarField, params: &FluidParams, epsilon: f64) -> Result<f64> {
    check_positive(rho)?;
    if epsilon == 0.0 {
        return Ok(0.0);
    }
    let (pressure_part, quantum_part) = epsilon_dissipation_parts(rho, params)?;
    Ok(epsilon * (pressure_part + quantum_part))
}

/// (∫P″|∇ϱ|², (ħ/4)∫ϱ|∇²log ϱ|²) without the ε factor.
pub fn epsilon_dissipation_parts(rho: &ScalarField, params: &FluidParams) -> Result<(f64, f64)> {
    check_positive(rho)?;
    let g2 = gradient(rho).norm_sq();
    let pressure_part = integrate(&g2.zip_map(rho, g2.parity(), |g, r| params.potential_second(r) * g));
    let quantum_part = 0.25 * params.hbar * log_hessian_energy(rho);
    Ok((pressure_part, quantum_part))
}

fn log_hessian_energy(rho: &ScalarField) -> f64 {
    let h = hessian(&rho.map(f64::ln));
    let h2 = h.contract(&h);
    integrate(&h2.zip_map(rho, h2.parity(), |a, r| a * r))
}

/// Relative residual of ∫(Δϱ/ϱ − |∇ϱ|²/(2ϱ²))Δϱ = ∫ϱ|∇²log ϱ|².
///
/// The identity holds in one dimension on periodic or wall (Neumann)
/// domains; see [`log_hessian_identity_sides`] for the raw integrals.
pub fn log_hessian_identity_residual(rho: &ScalarField) -> Result<f64> {
    let (lhs, rhs) = log_hessian_identity_sides(rho)?;
    Ok((lhs - rhs).abs() / rhs.abs().max(1.0))
}

pub fn log_hessian_identity_sides(rho: &ScalarField) -> Result<(f64, f64)> {
    check_positive(rho)?;
    if rho.domain().bc() != Boundary::Periodic && rho.domain().dim() > 1 {
        return Err(Error::Invalid(
            "log-Hessian identity audit needs a periodic domain".into(),
        ));
    }
    let lap = laplacian(rho);
    let g2 = gradient(rho).norm_sq();
    let inner = lap
        .zip_map(rho, lap.parity(), |l, r| l / r)
        .sub(&g2.zip_map(rho, g2.parity(), |g, r| 0.5 * g / (r * r)));
    let lhs = ops::inner(&inner, &lap);
    Ok((lhs, log_hessian_energy(rho)))
}

/// Settings of the energy audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditConfig {
    pub dt: f64,
    pub epsilon: f64,
    /// Budget constant; `None` means 10·E(0).
    pub c_tol: Option<f64>,
}

impl AuditConfig {
    pub fn from_solver(config: &crate::solver::SolverConfig) -> Self {
        Self {
            dt: config.dt,
            epsilon: config.epsilon,
            c_tol: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub kinetic: Vec<f64>,
    pub potential: Vec<f64>,
    pub quantum: Vec<f64>,
    pub dissipation_integral: Vec<f64>,
    pub epsilon_dissipation: Vec<f64>,
    pub inequality_slack: Vec<f64>,
    pub defect_proxy: Vec<f64>,
    pub tol_budget: Vec<f64>,
    pub lambda_defect: f64,
    pub e0: f64,
    pub c_tol: f64,
    pub passed: bool,
    pub first_violation: Option<f64>,
    /// Sample times where E rose by more than the budget (flagged only).
    pub energy_jumps: Vec<f64>,
}

/// Cumulative ∫f dt on a (possibly uneven) sample grid. Each interval is
/// integrated against the cubic through the nearest four samples (fewer
/// near short series), so the rule stays accurate at coarse cadences.
pub fn cumulative_integral(t: &[f64], f: &[f64]) -> Vec<f64> {
    const GAUSS: [(f64, f64); 3] = [
        (-0.774_596_669_241_483_4, 5.0 / 9.0),
        (0.0, 8.0 / 9.0),
        (0.774_596_669_241_483_4, 5.0 / 9.0),
    ];
    let n = t.len();
    let mut out = Vec::with_capacity(n);
    let mut acc = 0.0;
    if n == 0 {
        return out;
    }
    out.push(0.0);
    for i in 1..n {
        let (a, b) = (t[i - 1], t[i]);
        let lo = (i as isize - 2).clamp(0, n.saturating_sub(4) as isize) as usize;
        let hi = (lo + 4).min(n);
        let nodes = &t[lo..hi];
        let vals = &f[lo..hi];
        let interp = |x: f64| {
            let mut sum = 0.0;
            for (j, (&tj, &fj)) in nodes.iter().zip(vals).enumerate() {
                let mut w = 1.0;
                for (m, &tm) in nodes.iter().enumerate() {
                    if m != j {
                        w *= (x - tm) / (tj - tm);
                    }
                }
                sum += w * fj;
            }
            sum
        };
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        acc += half * GAUSS.iter().map(|&(x, w)| w * interp(mid + half * x)).sum::<f64>();
        out.push(acc);
    }
    out
}

/// slack(τ) = E(0) − E(τ) − ∫₀^τ∫𝕊:∇u − ε-dissipation(τ); passes when
/// slack ≥ −c_tol·dt²·τ at every sample.
pub fn energy_report(traj: &Trajectory, params: &FluidParams, config: &AuditConfig) -> Result<EnergyReport> {
    let e0 = traj.initial_energy();
    let c_tol = config.c_tol.unwrap_or(DEFAULT_CTOL_FACTOR * e0.abs());
    let times = traj.times();
    let mut energy = Vec::new();
    let mut kinetic = Vec::new();
    let mut potential = Vec::new();
    let mut quantum = Vec::new();
    let mut diss_rate = Vec::new();
    let mut eps_rate = Vec::new();
    for s in traj.samples() {
        let c = total_energy(s, params)?;
        energy.push(c.total);
        kinetic.push(c.kinetic);
        potential.push(c.potential);
        quantum.push(c.quantum);
        diss_rate.push(dissipation_rate(&s.velocity(), params));
        eps_rate.push(epsilon_dissipation_rate(&s.rho, params, config.epsilon)?);
    }
    let dissipation_integral = cumulative_integral(&times, &diss_rate);
    let epsilon_dissipation = cumulative_integral(&times, &eps_rate);
    let mut slack = Vec::new();
    let mut budget = Vec::new();
    let mut first_violation = None;
    for i in 0..times.len() {
        let s = e0 - energy[i] - dissipation_integral[i] - epsilon_dissipation[i];
        let b = c_tol * config.dt * config.dt * times[i];
        if s < -b && first_violation.is_none() {
            first_violation = Some(times[i]);
        }
        slack.push(s);
        budget.push(b);
    }
    let energy_jumps = (1..times.len())
        .filter(|&i| energy[i] - energy[i - 1] > budget[i].max(f64::EPSILON * e0.abs()))
        .map(|i| times[i])
        .collect();
    let defect_proxy = slack.iter().map(|s| s.max(0.0)).collect();
    Ok(EnergyReport {
        times,
        energy,
        kinetic,
        potential,
        quantum,
        dissipation_integral,
        epsilon_dissipation,
        inequality_slack: slack,
        defect_proxy,
        tol_budget: budget,
        lambda_defect: lambda_defect(params.dim, params.gamma),
        e0,
        c_tol,
        passed: first_violation.is_none(),
        first_violation,
        energy_jumps,
    })
}

impl EnergyReport {
    /// `Err(AuditFailed)` at the first violating sample.
    pub fn check(&self) -> Result<()> {
        match self.first_violation {
            None => Ok(()),
            Some(t) => {
                let i = self.times.iter().position(|&x| x == t).unwrap_or(0);
                Err(Error::AuditFailed {
                    time: t,
                    slack: self.inequality_slack[i],
                    budget: self.tol_budget[i],
                })
            }
        }
    }

    /// max |E(t) − E(0)| / E(0) over samples, with E(0) the first sample.
    pub fn max_relative_drift(&self) -> f64 {
        let e = self.energy[0];
        self.energy.iter().map(|x| (x - e).abs() / e.abs()).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,E,E_kin,E_pot,E_quantum,diss_cum,eps_diss_cum,slack,defect_proxy\n");
        for i in 0..self.times.len() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                self.times[i],
                self.energy[i],
                self.kinetic[i],
                self.potential[i],
                self.quantum[i],
                self.dissipation_integral[i],
                self.epsilon_dissipation[i],
                self.inequality_slack[i],
                self.defect_proxy[i]
            ));
        }
        out
    }

    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "passed": self.passed,
            "first_violation": self.first_violation,
            "e0": self.e0,
            "c_tol": self.c_tol,
            "lambda_defect": self.lambda_defect,
            "final_energy": self.energy.last(),
            "final_dissipation": self.dissipation_integral.last(),
            "final_epsilon_dissipation": self.epsilon_dissipation.last(),
            "min_slack": self.inequality_slack.iter().copied().fold(f64::INFINITY, f64::min),
            "max_defect_proxy": self.defect_proxy.iter().copied().fold(0.0, f64::max),
            "energy_jumps": self.energy_jumps,
            "samples": self.times.len(),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DefectTraceCheck {
    pub lambda_defect: f64,
    /// max(0, slack) − defect_proxy/λ per sample.
    pub margins: Vec<f64>,
    pub passed: bool,
}

/// defect_proxy/λ ≤ energy gap, sample by sample.
pub fn defect_trace_bound_check(report: &EnergyReport, params: &FluidParams) -> DefectTraceCheck {
    let lambda = lambda_defect(params.dim, params.gamma);
    let margins: Vec<f64> = report
        .inequality_slack
        .iter()
        .zip(&report.defect_proxy)
        .map(|(s, d)| s.max(0.0) - d / lambda)
        .collect();
    DefectTraceCheck {
        lambda_defect: lambda,
        passed: margins.iter().all(|m| *m >= 0.0),
        margins,
    }
}
