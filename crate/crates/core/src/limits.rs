//! Parameter ladders for the ε → 0, n → ∞ and δ → 0 limits, and the
//! trajectory metric used to compare their members.

use serde::{Deserialize, Serialize};

use crate::discretization::ops::{default_sobolev_order, negative_sobolev_norm, negative_sobolev_norm_vec};
use crate::discretization::{GalerkinBasis, ScalarField, VectorField};
use crate::energy::{cumulative_integral, energy_report, epsilon_dissipation_parts, AuditConfig};
use crate::error::{Error, Result};
use crate::physics::{FluidParams, SystemKind};
use crate::solver::{project_initial, run_simulation, FluidState, SolverConfig};
use crate::trajectory::{Trajectory, TIME_MATCH_TOL};

/// ‖ϱ₁−ϱ₂‖_{-k} + ‖J₁−J₂‖_{-k} + |E₁−E₂|.
pub fn state_distance(a: &FluidState, b: &FluidState, k: u32) -> f64 {
    negative_sobolev_norm(&a.rho.sub(&b.rho), k)
        + negative_sobolev_norm_vec(&a.momentum.sub(&b.momentum), k)
        + (a.energy - b.energy).abs()
}

/// Largest [`state_distance`] over the time grid.
pub fn trajectory_distance(t1: &Trajectory, t2: &Trajectory, k: u32, time_grid: &[f64]) -> Result<f64> {
    if **t1.domain() != **t2.domain() {
        return Err(Error::DomainMismatch);
    }
    let mut worst: f64 = 0.0;
    for &t in time_grid {
        for tr in [t1, t2] {
            let tol = TIME_MATCH_TOL * t.abs().max(1.0);
            if t < -tol || t > tr.horizon() + tol {
                return Err(Error::GridUncovered {
                    time: t,
                    horizon: tr.horizon(),
                });
            }
        }
        let a = t1.state_at(t.min(t1.horizon()).max(0.0))?;
        let b = t2.state_at(t.min(t2.horizon()).max(0.0))?;
        worst = worst.max(state_distance(&a, &b, k));
    }
    Ok(worst)
}

/// Density and momentum from which every ladder entry starts.
#[derive(Debug, Clone)]
pub struct InitialData {
    pub rho: ScalarField,
    pub momentum: VectorField,
    /// E₀; `None` uses the energy of the projected initial state.
    pub e0: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParameter {
    Delta,
    Epsilon,
    Modes,
}

impl std::fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SweepParameter::Delta => "delta",
            SweepParameter::Epsilon => "epsilon",
            SweepParameter::Modes => "modes",
        })
    }
}

impl std::str::FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "delta" => Ok(Self::Delta),
            "epsilon" | "eps" => Ok(Self::Epsilon),
            "modes" | "n" => Ok(Self::Modes),
            other => Err(Error::Invalid(format!("unknown sweep parameter {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub solver: SolverConfig,
    pub t_final: f64,
    pub snapshot_every: usize,
    /// Worker threads for concurrent ladder entries.
    pub jobs: usize,
    /// Order k of the W^{-k,2} metric; `None` picks ⌈d/2⌉ + 2.
    pub sobolev_order: Option<u32>,
    /// Add a δ = 0 run to the viscosity sweep.
    pub reference_run: bool,
    /// Richardson extrapolation of the terminal state (diagnostic only).
    pub richardson: bool,
    pub mean_modes: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            t_final: 0.5,
            snapshot_every: 10,
            jobs: 1,
            sobolev_order: None,
            reference_run: true,
            richardson: false,
            mean_modes: false,
        }
    }
}

/// One rung of a ladder.
#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub value: f64,
    pub trajectory: Option<Trajectory>,
    pub failure: Option<String>,
    pub audit_passed: bool,
    pub projection_gap: f64,
    /// ∫∫𝕊:∇u with the entry's own (possibly δ-scaled) viscosity.
    pub viscous_work: f64,
    /// ε∫∫P″|∇ϱ|².
    pub eps_pressure_dissipation: f64,
    /// (ħ/4)ε∫∫ϱ|∇²log ϱ|².
    pub eps_quantum_dissipation: f64,
}

impl SweepEntry {
    pub fn eps_dissipation(&self) -> f64 {
        self.eps_pressure_dissipation + self.eps_quantum_dissipation
    }

    pub fn succeeded(&self) -> bool {
        self.failure.is_none() && self.trajectory.is_some()
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub parameter: SweepParameter,
    pub ladder: Vec<f64>,
    pub entries: Vec<SweepEntry>,
    /// Full symmetric matrix with zero diagonal; `None` where a run failed.
    pub pairwise_distances: Vec<Vec<Option<f64>>>,
    /// d(i+1, i+2) / d(i, i+1).
    pub cauchy_ratio: Vec<Option<f64>>,
    pub sobolev_order: u32,
    pub time_grid: Vec<f64>,
    /// δ = 0 run of the viscosity sweep.
    pub reference: Option<SweepEntry>,
    /// Terminal-state distance of each entry to the reference run.
    pub reference_distances: Vec<Option<f64>>,
    pub limit_extrapolation: Option<(ScalarField, VectorField)>,
}

impl SweepResult {
    pub fn consecutive_distances(&self) -> Vec<Option<f64>> {
        (1..self.ladder.len())
            .map(|i| self.pairwise_distances[i - 1][i])
            .collect()
    }

    /// Viscous work strictly decreasing along the ladder.
    pub fn viscous_work_decreasing(&self) -> bool {
        strictly_decreasing(self.entries.iter().map(|e| e.succeeded().then_some(e.viscous_work)))
    }

    pub fn eps_dissipation_decreasing(&self) -> bool {
        strictly_decreasing(
            self.entries
                .iter()
                .map(|e| e.succeeded().then_some(e.eps_dissipation())),
        )
    }

    pub fn distances_decreasing(&self) -> bool {
        strictly_decreasing(self.consecutive_distances().into_iter())
    }

    pub fn reference_distances_decreasing(&self) -> bool {
        !self.reference_distances.is_empty() && strictly_decreasing(self.reference_distances.iter().copied())
    }

    pub fn all_audits_passed(&self) -> bool {
        self.entries.iter().all(|e| e.succeeded() && e.audit_passed)
    }

    pub fn manifest(&self) -> serde_json::Value {
        let entries: Vec<_> = self
            .entries
            .iter()
            .map(|e| {
                serde_json::json!({
                    "value": e.value,
                    "failure": e.failure,
                    "audit_passed": e.audit_passed,
                    "projection_gap": e.projection_gap,
                    "viscous_work": e.viscous_work,
                    "eps_pressure_dissipation": e.eps_pressure_dissipation,
                    "eps_quantum_dissipation": e.eps_quantum_dissipation,
                    "config_hash": e.trajectory.as_ref().map(|t| t.meta().config_hash.clone()),
                })
            })
            .collect();
        serde_json::json!({
            "parameter": self.parameter,
            "ladder": self.ladder,
            "sobolev_order": self.sobolev_order,
            "distances": self.pairwise_distances,
            "ratios": self.cauchy_ratio,
            "reference_distances": self.reference_distances,
            "audits": entries,
            "viscous_work_decreasing": self.viscous_work_decreasing(),
            "eps_dissipation_decreasing": self.eps_dissipation_decreasing(),
            "distances_decreasing": self.distances_decreasing(),
            "reference_distances_decreasing": self.reference_distances_decreasing(),
            "richardson": self.limit_extrapolation.is_some(),
        })
    }
}

fn strictly_decreasing(values: impl Iterator<Item = Option<f64>>) -> bool {
    let v: Vec<Option<f64>> = values.collect();
    v.iter().all(|x| x.is_some()) && v.windows(2).all(|w| w[1].unwrap() < w[0].unwrap())
}

/// δ-ladder: μ and λ_bulk scaled by δ.
pub fn viscosity_sweep(
    init: &InitialData,
    params: &FluidParams,
    ladder: &[f64],
    config: &SweepConfig,
) -> Result<SweepResult> {
    check_ladder(ladder, true)?;
    run_sweep(SweepParameter::Delta, init, params, ladder, config)
}

/// ε-ladder at fixed viscosity.
pub fn epsilon_sweep(
    init: &InitialData,
    params: &FluidParams,
    ladder: &[f64],
    config: &SweepConfig,
) -> Result<SweepResult> {
    check_ladder(ladder, true)?;
    run_sweep(SweepParameter::Epsilon, init, params, ladder, config)
}

/// Ascending n-ladder of Galerkin dimensions.
pub fn mode_sweep(
    init: &InitialData,
    params: &FluidParams,
    ladder: &[usize],
    config: &SweepConfig,
) -> Result<SweepResult> {
    if ladder.is_empty() || ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Invalid(
            "mode ladder must be nonempty and strictly increasing".into(),
        ));
    }
    let values: Vec<f64> = ladder.iter().map(|&n| n as f64).collect();
    run_sweep(SweepParameter::Modes, init, params, &values, config)
}

fn check_ladder(ladder: &[f64], allow_final_zero: bool) -> Result<()> {
    if ladder.is_empty() {
        return Err(Error::Invalid("empty ladder".into()));
    }
    let n = ladder.len();
    for (i, v) in ladder.iter().enumerate() {
        let zero_ok = allow_final_zero && i == n - 1 && *v == 0.0;
        if !(*v > 0.0 || zero_ok) || !v.is_finite() {
            return Err(Error::Invalid(format!("ladder value {v} must be positive")));
        }
    }
    if ladder.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Invalid("ladder must be strictly decreasing".into()));
    }
    Ok(())
}

/// Runs a single (params, config) pair from the initial data.
pub fn run_entry(
    value: f64,
    init: &InitialData,
    params: &FluidParams,
    solver: &SolverConfig,
    config: &SweepConfig,
) -> SweepEntry {
    let mut entry = SweepEntry {
        value,
        trajectory: None,
        failure: None,
        audit_passed: false,
        projection_gap: f64::NAN,
        viscous_work: f64::NAN,
        eps_pressure_dissipation: f64::NAN,
        eps_quantum_dissipation: f64::NAN,
    };
    let result = (|| -> Result<()> {
        let domain = init.rho.domain();
        let basis = if config.mean_modes {
            GalerkinBasis::with_mean_modes(domain, solver.n_modes)?
        } else {
            crate::discretization::galerkin_basis(domain, solver.n_modes)?
        };
        let proj = project_initial(&init.rho, &init.momentum, &basis, params)?;
        entry.projection_gap = proj.projection_gap;
        let start = proj.state;
        if let Some(e0) = init.e0 {
            if e0 < start.energy {
                return Err(Error::Invalid(format!(
                    "E0 = {e0} is below the initial energy {}",
                    start.energy
                )));
            }
        }
        let out = run_simulation(&start, solver, params, &basis, config.t_final, config.snapshot_every)?;
        let traj = match init.e0 {
            Some(e0) => out.trajectory.with_initial_energy(e0),
            None => out.trajectory,
        };
        let report = energy_report(&traj, params, &AuditConfig::from_solver(solver))?;
        entry.audit_passed = report.passed;
        entry.viscous_work = *report.dissipation_integral.last().unwrap_or(&0.0);
        let (p_part, q_part) = eps_parts(&traj, params, solver.epsilon)?;
        entry.eps_pressure_dissipation = p_part;
        entry.eps_quantum_dissipation = q_part;
        entry.trajectory = Some(traj);
        if let Some(e) = out.failure {
            entry.failure = Some(e.to_string());
        }
        Ok(())
    })();
    if let Err(e) = result {
        entry.failure = Some(e.to_string());
    }
    entry
}

fn eps_parts(traj: &Trajectory, params: &FluidParams, epsilon: f64) -> Result<(f64, f64)> {
    let times = traj.times();
    let mut p = Vec::new();
    let mut q = Vec::new();
    for s in traj.samples() {
        let (a, b) = epsilon_dissipation_parts(&s.rho, params)?;
        p.push(epsilon * a);
        q.push(epsilon * b);
    }
    let total = |f: &[f64]| *cumulative_integral(&times, f).last().unwrap_or(&0.0);
    Ok((total(&p), total(&q)))
}

fn entry_setup(
    parameter: SweepParameter,
    value: f64,
    params: &FluidParams,
    base: &SolverConfig,
) -> (FluidParams, SolverConfig) {
    let mut p = *params;
    let mut s = base.clone();
    match parameter {
        SweepParameter::Delta => {
            p = params.with_viscosity_scale(value);
            if value == 0.0 {
                s.system = SystemKind::Euler;
            }
        }
        SweepParameter::Epsilon => s.epsilon = value,
        SweepParameter::Modes => s.n_modes = value as usize,
    }
    (p, s)
}

fn run_sweep(
    parameter: SweepParameter,
    init: &InitialData,
    params: &FluidParams,
    ladder: &[f64],
    config: &SweepConfig,
) -> Result<SweepResult> {
    config.solver.validate()?;
    let jobs = config.jobs.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Invalid(e.to_string()))?;
    let mut values: Vec<f64> = ladder.to_vec();
    let with_reference = parameter == SweepParameter::Delta && config.reference_run && *ladder.last().unwrap() != 0.0;
    if with_reference {
        values.push(0.0);
    }
    let mut entries: Vec<SweepEntry> = pool.install(|| {
        use rayon::prelude::*;
        values
            .par_iter()
            .map(|&v| {
                let (p, s) = entry_setup(parameter, v, params, &config.solver);
                run_entry(v, init, &p, &s, config)
            })
            .collect()
    });
    let reference = if with_reference { entries.pop() } else { None };

    let dim = init.rho.domain().dim();
    let k = config.sobolev_order.unwrap_or_else(|| default_sobolev_order(dim));
    let time_grid = entries
        .iter()
        .chain(reference.iter())
        .find_map(|e| e.succeeded().then(|| e.trajectory.as_ref().unwrap().times()))
        .unwrap_or_default();
    let n = entries.len();
    let mut dist = vec![vec![None; n]; n];
    for i in 0..n {
        dist[i][i] = entries[i].succeeded().then_some(0.0);
        for j in (i + 1)..n {
            let d = match (&entries[i].trajectory, &entries[j].trajectory) {
                (Some(a), Some(b)) if entries[i].succeeded() && entries[j].succeeded() => {
                    trajectory_distance(a, b, k, &time_grid).ok()
                }
                _ => None,
            };
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    let cauchy_ratio = (2..n)
        .map(|i| match (dist[i - 2][i - 1], dist[i - 1][i]) {
            (Some(a), Some(b)) if a > 0.0 => Some(b / a),
            _ => None,
        })
        .collect();
    let reference_distances = match &reference {
        Some(r) if r.succeeded() => {
            let rt = r.trajectory.as_ref().unwrap();
            entries
                .iter()
                .map(|e| {
                    e.trajectory
                        .as_ref()
                        .filter(|_| e.succeeded())
                        .map(|t| state_distance(t.last(), rt.last(), k))
                })
                .collect()
        }
        _ => Vec::new(),
    };
    let limit_extrapolation = if config.richardson {
        richardson(&entries, parameter)
    } else {
        None
    };
    Ok(SweepResult {
        parameter,
        ladder: ladder.to_vec(),
        entries,
        pairwise_distances: dist,
        cauchy_ratio,
        sobolev_order: k,
        time_grid,
        reference,
        reference_distances,
        limit_extrapolation,
    })
}

/// First-order extrapolation from the last two rungs.
fn richardson(entries: &[SweepEntry], parameter: SweepParameter) -> Option<(ScalarField, VectorField)> {
    if entries.len() < 2 || parameter == SweepParameter::Modes {
        return None;
    }
    let (a, b) = (&entries[entries.len() - 2], &entries[entries.len() - 1]);
    if !(a.succeeded() && b.succeeded()) || b.value == 0.0 {
        return None;
    }
    let r = a.value / b.value;
    let (sa, sb) = (a.trajectory.as_ref()?.last(), b.trajectory.as_ref()?.last());
    let w = 1.0 / (r - 1.0);
    let rho = sb.rho.add(&sb.rho.sub(&sa.rho).scale(w));
    let mom = sb.momentum.add(&sb.momentum.sub(&sa.momentum).scale(w));
    Some((rho, mom))
}
