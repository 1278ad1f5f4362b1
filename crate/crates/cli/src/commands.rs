//! The `qfluid` subcommands. Each returns an exit code and a JSON summary;
//! artifacts go under the output directory.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use qfluid_core::discretization::ops::spectral_tail;
use qfluid_core::discretization::{read_snapshot, GalerkinBasis, Snapshot, VectorField};
use qfluid_core::energy::{energy_report, AuditConfig, EnergyReport};
use qfluid_core::hashing::config_hash;
use qfluid_core::identities::identity_suite;
use qfluid_core::limits::{epsilon_sweep, mode_sweep, viscosity_sweep, InitialData, SweepConfig, SweepParameter};
use qfluid_core::persist::{
    read_candidates, read_trajectory, write_sweep, write_trajectory, BasisInfo, SCHEMA_VERSION,
};
use qfluid_core::physics::{FluidParams, DEFAULT_TAIL_TOLERANCE};
use qfluid_core::relative_energy::{manufactured_strong_solution, weak_strong_compare, FitWindow, ReferenceKind};
use qfluid_core::semiflow::{check_semigroup, select, Observable, SelectionFunctional, Selector, SEMIGROUP_TOL};
use qfluid_core::solver::{project_initial, run_simulation, FluidState, SimulationOutcome};
use qfluid_core::trajectory::Trajectory;

use crate::config::ExperimentConfig;
use crate::error::{CliError, EXIT_AUDIT, EXIT_OK, EXIT_SOLVER, EXIT_USAGE};

/// What a subcommand reports back to `main`.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub code: i32,
    pub summary: Value,
    /// Human-readable report printed instead of the JSON summary.
    pub text: Option<String>,
}

/// Writes pretty JSON with `schema_version` and `config_hash` on top.
pub fn write_artifact(path: &Path, hash: &str, body: &impl Serialize) -> Result<(), CliError> {
    let mut v = serde_json::to_value(body).map_err(|e| CliError::Core(e.into()))?;
    let mut obj = serde_json::Map::new();
    obj.insert("schema_version".into(), SCHEMA_VERSION.into());
    obj.insert("config_hash".into(), hash.into());
    if let Value::Object(m) = &mut v {
        for (k, x) in std::mem::take(m) {
            obj.entry(k).or_insert(x);
        }
    } else {
        obj.insert("value".into(), v);
    }
    let mut bytes = serde_json::to_vec_pretty(&Value::Object(obj)).map_err(|e| CliError::Core(e.into()))?;
    bytes.push(b'\n');
    std::fs::write(path, bytes)?;
    Ok(())
}

/// Records a failure next to whatever partial artifacts exist.
pub fn write_diagnostic(
    out: &Path,
    hash: &str,
    code: i32,
    err: &dyn std::fmt::Display,
    extra: Value,
) -> Result<(), CliError> {
    std::fs::create_dir_all(out)?;
    write_artifact(
        &out.join("diagnostic.json"),
        hash,
        &json!({ "exit_code": code, "error": err.to_string(), "context": extra }),
    )
}

/// Raw snapshots for `--unchecked-init`.
#[derive(Debug, Clone)]
pub struct UncheckedInit {
    pub rho: PathBuf,
    pub momentum: Option<PathBuf>,
}

fn load_unchecked(init: &UncheckedInit, basis: &GalerkinBasis, params: &FluidParams) -> Result<FluidState, CliError> {
    let rho = match read_snapshot(&init.rho, Some(basis.domain()))? {
        Snapshot::Density(f) => f,
        Snapshot::Momentum(_) => {
            return Err(CliError::Usage(format!(
                "{} is not a density snapshot",
                init.rho.display()
            )))
        }
    };
    let momentum = match &init.momentum {
        Some(p) => match read_snapshot(p, Some(basis.domain()))? {
            Snapshot::Momentum(v) => v,
            Snapshot::Density(_) => return Err(CliError::Usage(format!("{} is not a momentum snapshot", p.display()))),
        },
        None => VectorField::zeros(basis.domain()),
    };
    Ok(project_initial(&rho, &momentum, basis, params)?.state)
}

struct Run {
    outcome: SimulationOutcome,
    basis: GalerkinBasis,
    projection_gap: f64,
}

fn simulate_core(cfg: &ExperimentConfig, unchecked: Option<&UncheckedInit>) -> Result<Run, CliError> {
    let domain = cfg.domain()?;
    let basis = cfg.basis(&domain)?;
    let params = cfg.params();
    let (init, e0, gap) = match unchecked {
        Some(u) => {
            let s = load_unchecked(u, &basis, &params)?;
            let e0 = cfg.initial.e0.unwrap_or(s.energy);
            (s, e0, f64::NAN)
        }
        None => cfg.initial_state(&basis)?,
    };
    let tail = spectral_tail(&init.rho);
    if tail > DEFAULT_TAIL_TOLERANCE {
        return Err(qfluid_core::Error::UnresolvedField {
            tail,
            tolerance: DEFAULT_TAIL_TOLERANCE,
        }
        .into());
    }
    let solver = cfg.solver();
    let mut outcome = run_simulation(
        &init,
        &solver,
        &params,
        &basis,
        cfg.output.t_final,
        cfg.output.snapshot_every,
    )?;
    outcome.trajectory = outcome.trajectory.with_initial_energy(e0);
    Ok(Run {
        outcome,
        basis,
        projection_gap: gap,
    })
}

/// Largest spectral tail of the density over the samples.
fn worst_tail(traj: &Trajectory) -> f64 {
    traj.samples().iter().map(|s| spectral_tail(&s.rho)).fold(0.0, f64::max)
}

fn write_energy(out: &Path, hash: &str, rep: &EnergyReport) -> Result<(), CliError> {
    std::fs::write(out.join("energy.csv"), rep.to_csv())?;
    write_artifact(&out.join("energy.json"), hash, &rep.summary())
}

/// `simulate`: trajectory directory, energy CSV/JSON and `run.json`.
pub fn simulate(cfg: &ExperimentConfig, out: &Path, unchecked: Option<&UncheckedInit>) -> Result<Outcome, CliError> {
    let hash = cfg.hash();
    std::fs::create_dir_all(out)?;
    let run = match simulate_core(cfg, unchecked) {
        Ok(r) => r,
        Err(e) => {
            if e.exit_code() != EXIT_USAGE {
                write_diagnostic(out, &hash, e.exit_code(), &e, json!({ "stage": "setup" }))?;
            }
            return Err(e);
        }
    };
    let traj = &run.outcome.trajectory;
    write_trajectory(&out.join("trajectory"), traj, Some(BasisInfo::of(&run.basis)))?;
    let params = cfg.params();
    let audit = energy_report(traj, &params, &AuditConfig::from_solver(&cfg.solver()))?;
    write_energy(out, &hash, &audit)?;
    let tail = worst_tail(traj);
    let resolved = tail <= DEFAULT_TAIL_TOLERANCE;
    let (code, status) = if run.outcome.failure.is_some() {
        (EXIT_SOLVER, "solver-failed")
    } else if !audit.passed || !resolved {
        (EXIT_AUDIT, "audit-failed")
    } else {
        (EXIT_OK, "ok")
    };
    let summary = json!({
        "status": status,
        "exit_code": code,
        "run_hash": traj.meta().config_hash,
        "steps": run.outcome.steps,
        "samples": traj.len(),
        "horizon": traj.horizon(),
        "max_iterations": run.outcome.iterations.iter().copied().max().unwrap_or(0),
        "projection_gap": run.projection_gap,
        "audit_passed": audit.passed,
        "first_violation": audit.first_violation,
        "max_relative_drift": audit.max_relative_drift(),
        "worst_spectral_tail": tail,
        "failure": run.outcome.failure.as_ref().map(|e| e.to_string()),
    });
    write_artifact(&out.join("run.json"), &hash, &summary)?;
    if code != EXIT_OK {
        let msg = match &run.outcome.failure {
            Some(e) => e.to_string(),
            None if !resolved => format!("density under-resolved: spectral tail {tail:e}"),
            None => format!("energy audit failed at t = {:?}", audit.first_violation),
        };
        write_diagnostic(
            out,
            &hash,
            code,
            &msg,
            json!({ "stage": "run", "samples": traj.len(), "horizon": traj.horizon() }),
        )?;
    }
    Ok(Outcome {
        code,
        summary,
        text: None,
    })
}

/// `sweep`: one trajectory directory per rung plus `sweep.json`.
pub fn sweep(
    cfg: &ExperimentConfig,
    parameter: SweepParameter,
    ladder: &[f64],
    out: &Path,
    jobs: usize,
    richardson: bool,
) -> Result<Outcome, CliError> {
    let hash = config_hash(&(cfg.hash(), parameter, ladder));
    let domain = cfg.domain()?;
    let (rho, momentum) = cfg.initial_fields(&domain);
    let init = InitialData {
        rho,
        momentum,
        e0: cfg.initial.e0,
    };
    let sc = SweepConfig {
        solver: cfg.solver(),
        t_final: cfg.output.t_final,
        snapshot_every: cfg.output.snapshot_every,
        jobs,
        richardson,
        mean_modes: cfg.mean_modes,
        ..Default::default()
    };
    let params = cfg.params();
    let result = match parameter {
        SweepParameter::Modes => {
            let n: Vec<usize> = ladder.iter().map(|v| *v as usize).collect();
            if n.iter().zip(ladder).any(|(a, b)| *a as f64 != *b) {
                return Err(CliError::Usage("mode ladder entries must be integers".into()));
            }
            mode_sweep(&init, &params, &n, &sc)?
        }
        SweepParameter::Delta => viscosity_sweep(&init, &params, ladder, &sc)?,
        SweepParameter::Epsilon => epsilon_sweep(&init, &params, ladder, &sc)?,
    };
    std::fs::create_dir_all(out)?;
    let basis = cfg.basis(&domain)?;
    write_sweep(out, &result, Some(BasisInfo::of(&basis)))?;
    let failed: Vec<String> = result
        .entries
        .iter()
        .chain(result.reference.iter())
        .filter_map(|e| e.failure.as_ref().map(|f| format!("{}: {f}", e.value)))
        .collect();
    let code = if !failed.is_empty() {
        EXIT_SOLVER
    } else if !result.all_audits_passed() {
        EXIT_AUDIT
    } else {
        EXIT_OK
    };
    let summary = json!({
        "parameter": parameter,
        "ladder": ladder,
        "consecutive_distances": result.consecutive_distances(),
        "cauchy_ratio": result.cauchy_ratio,
        "reference_distances": result.reference_distances,
        "audits_passed": result.all_audits_passed(),
        "failures": failed,
        "exit_code": code,
    });
    write_artifact(&out.join("summary.json"), &hash, &summary)?;
    if code != EXIT_OK {
        write_diagnostic(out, &hash, code, &"sweep finished with failures", summary.clone())?;
    }
    Ok(Outcome {
        code,
        summary,
        text: None,
    })
}

/// `compare`: relative energy against a manufactured reference.
pub fn compare(
    cfg: &ExperimentConfig,
    kind: ReferenceKind,
    trajectory: Option<&Path>,
    window: Option<(f64, f64)>,
    out: &Path,
) -> Result<Outcome, CliError> {
    let hash = config_hash(&(cfg.hash(), kind, trajectory.map(|p| p.display().to_string()), window));
    std::fs::create_dir_all(out)?;
    let (traj, params, solver_failure) = match trajectory {
        Some(dir) => {
            let (t, _) = read_trajectory(dir)?;
            let p = t.meta().params;
            (t, p, None)
        }
        None => {
            let run = simulate_core(cfg, None)?;
            write_trajectory(
                &out.join("trajectory"),
                &run.outcome.trajectory,
                Some(BasisInfo::of(&run.basis)),
            )?;
            (run.outcome.trajectory, cfg.params(), run.outcome.failure)
        }
    };
    let reference = manufactured_strong_solution(kind, &params, traj.domain())?;
    let w = match window {
        Some((a, b)) => FitWindow::new(a, b),
        None => FitWindow::whole(&traj),
    };
    let rep = weak_strong_compare(&traj, &reference, &params, w)?;
    std::fs::write(out.join("relative_energy.csv"), rep.to_csv())?;
    let code = if solver_failure.is_some() {
        EXIT_SOLVER
    } else if !rep.passed {
        EXIT_AUDIT
    } else {
        EXIT_OK
    };
    let mut summary = rep.summary();
    summary["reference"] = json!(kind);
    summary["exit_code"] = json!(code);
    summary["failure"] = json!(solver_failure.as_ref().map(|e| e.to_string()));
    write_artifact(&out.join("relative_energy.json"), &hash, &summary)?;
    if code != EXIT_OK {
        write_diagnostic(out, &hash, code, &"comparison did not pass", summary.clone())?;
    }
    Ok(Outcome {
        code,
        summary,
        text: None,
    })
}

/// Optional semigroup check for `select`.
#[derive(Debug, Clone)]
pub struct SemigroupSpec {
    pub config: ExperimentConfig,
    pub t1: f64,
    pub t2: f64,
}

/// `select`: lexicographic selection over a candidate manifest.
pub fn select_cmd(
    manifest: &Path,
    observables: &[Observable],
    rate: f64,
    horizon: Option<f64>,
    semigroup: Option<&SemigroupSpec>,
    out: &Path,
) -> Result<Outcome, CliError> {
    let candidates = read_candidates(manifest)?;
    if candidates.is_empty() {
        return Err(qfluid_core::Error::EmptyCandidates.into());
    }
    let functionals = observables
        .iter()
        .map(|o| SelectionFunctional::new(*o, rate))
        .collect::<Result<Vec<_>, _>>()?;
    let h = horizon.unwrap_or_else(|| candidates.iter().map(|c| c.horizon()).fold(f64::INFINITY, f64::min));
    let mut report = select(&candidates, &functionals, h)?;
    let mut semigroup_passed = None;
    if let Some(sg) = semigroup {
        let cfg = &sg.config;
        let domain = cfg.domain()?;
        let basis = cfg.basis(&domain)?;
        let (init, e0, _) = cfg.initial_state(&basis)?;
        let solver = cfg.solver();
        let params = cfg.params();
        let every = cfg.output.snapshot_every;
        let gen = move |s: &FluidState, e: f64, hz: f64| -> qfluid_core::Result<Vec<Trajectory>> {
            let o = run_simulation(s, &solver, &params, &basis, s.time + hz, every)?;
            match o.failure {
                Some(err) => Err(err),
                None => Ok(vec![o.trajectory.with_initial_energy(e)]),
            }
        };
        let selector = Selector {
            functionals: functionals.clone(),
            horizon: 0.0,
        };
        let rep = check_semigroup(&selector, &init, e0, sg.t1, sg.t2, &gen, SEMIGROUP_TOL)?;
        report.semigroup_distances.push(rep.distance);
        semigroup_passed = Some(rep.passed);
    }
    let names: Vec<String> = candidates.iter().map(|c| c.meta().config_hash.clone()).collect();
    let hash = config_hash(&(&names, &functionals, h));
    std::fs::create_dir_all(out)?;
    write_artifact(&out.join("selection.json"), &hash, &report)?;
    let code = match semigroup_passed {
        Some(false) => EXIT_AUDIT,
        _ => EXIT_OK,
    };
    let summary = json!({
        "winner": report.winner,
        "winner_hash": report.winner_hash,
        "candidates": candidates.len(),
        "horizon": h,
        "semigroup_distances": report.semigroup_distances,
        "exit_code": code,
    });
    Ok(Outcome {
        code,
        summary,
        text: None,
    })
}

/// `verify`: operator identity table.
pub fn verify(suite: &str, resolution: usize, out: Option<&Path>) -> Result<Outcome, CliError> {
    if suite != "identities" {
        return Err(CliError::Usage(format!(
            "unknown suite {suite:?} (available: identities)"
        )));
    }
    let s = identity_suite(resolution, &FluidParams::default())?;
    let code = if s.passed() { EXIT_OK } else { EXIT_AUDIT };
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        let hash = config_hash(&(suite, resolution));
        write_artifact(&dir.join("identities.json"), &hash, &s)?;
    }
    let summary = json!({ "suite": suite, "resolution": resolution, "passed": s.passed(), "exit_code": code });
    Ok(Outcome {
        code,
        summary,
        text: Some(s.table()),
    })
}
