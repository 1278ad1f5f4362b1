//! Trajectory algebra (shift, continuation) and semiflow selection over
//! finite candidate sets.

use serde::{Deserialize, Serialize};

use crate::discretization::ops::{default_sobolev_order, integrate};
use crate::error::{Error, Result};
use crate::limits::{state_distance, trajectory_distance};
use crate::solver::FluidState;
use crate::trajectory::{Trajectory, TIME_MATCH_TOL};

pub use crate::trajectory::TrajectoryMeta;

/// Default tolerance for matching ϱ, J across a seam.
pub const GLUE_TOL: f64 = 1e-9;
/// Relative tolerance under which functional values count as tied.
pub const TIE_TOL: f64 = 1e-10;
/// Default tolerance of the semigroup check.
pub const SEMIGROUP_TOL: f64 = 1e-8;
/// Candidates must agree at t = 0 to this distance.
pub const SAME_DATA_TOL: f64 = 1e-9;

fn time_tol(t: f64) -> f64 {
    TIME_MATCH_TOL * t.abs().max(1.0)
}

/// S_T Φ: samples at t − T for t ≥ T, with E(0−) = E(T−).
pub fn shift(traj: &Trajectory, t: f64) -> Result<Trajectory> {
    let horizon = traj.horizon();
    if !(t >= 0.0) || t > horizon + time_tol(horizon) {
        return Err(Error::HorizonExceeded { time: t, horizon });
    }
    if t == 0.0 {
        return Ok(traj.clone());
    }
    let e0 = traj.energy_left(t.min(horizon))?;
    let start = traj.find(t);
    let mut samples = Vec::new();
    let head = match start {
        Some(i) => {
            samples.push(retimed(traj.samples()[i].clone(), 0.0));
            i + 1
        }
        None => {
            samples.push(retimed(traj.state_at(t)?, 0.0));
            traj.samples().partition_point(|s| s.time < t)
        }
    };
    for s in &traj.samples()[head..] {
        samples.push(retimed(s.clone(), s.time - t));
    }
    Trajectory::from_samples(samples, e0, traj.meta().clone())
}

fn retimed(mut s: FluidState, time: f64) -> FluidState {
    s.time = time;
    s
}

/// Distance between two states in density and momentum only.
fn seam_gap(a: &FluidState, b: &FluidState, k: u32) -> f64 {
    let mut bb = b.clone();
    bb.energy = a.energy;
    state_distance(a, &bb, k)
}

/// Φ₁ ∪_T Φ₂ with the default gluing tolerance.
pub fn concatenate(t1: &Trajectory, t2: &Trajectory, t: f64) -> Result<Trajectory> {
    concatenate_with_tol(t1, t2, t, GLUE_TOL)
}

pub fn concatenate_with_tol(t1: &Trajectory, t2: &Trajectory, t: f64, tol: f64) -> Result<Trajectory> {
    if t == 0.0 {
        return Ok(t2.clone());
    }
    let horizon = t1.horizon();
    if !(t > 0.0) || t > horizon + time_tol(horizon) {
        return Err(Error::HorizonExceeded { time: t, horizon });
    }
    if **t1.domain() != **t2.domain() {
        return Err(Error::DomainMismatch);
    }
    let k = default_sobolev_order(t1.domain().dim());
    let at_t = t1.state_at(t.min(horizon))?;
    let gap = seam_gap(&at_t, t2.first(), k);
    let energy_excess = t2.initial_energy() - at_t.energy;
    if gap > tol || energy_excess > tol * at_t.energy.abs().max(1.0) {
        return Err(Error::SeamMismatch {
            time: t,
            gap,
            energy_excess,
        });
    }
    let mut samples: Vec<FluidState> = t1
        .samples()
        .iter()
        .filter(|s| s.time <= t + time_tol(t))
        .cloned()
        .collect();
    if t1.find(t).is_none() {
        samples.push(at_t);
    }
    for s in &t2.samples()[1..] {
        samples.push(retimed(s.clone(), s.time + t));
    }
    let mut meta = t1.meta().clone();
    if t2.meta().config_hash != meta.config_hash {
        meta.config_hash = crate::hashing::config_hash(&(&meta.config_hash, &t2.meta().config_hash, t));
    }
    Trajectory::from_samples(samples, t1.initial_energy(), meta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Observable {
    Energy,
    MassWeightedEnergy,
    MomentumNorm,
}

impl std::str::FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "energy" => Ok(Self::Energy),
            "mass-weighted-energy" => Ok(Self::MassWeightedEnergy),
            "momentum-norm" => Ok(Self::MomentumNorm),
            other => Err(Error::UnsupportedKind(format!("observable {other:?}"))),
        }
    }
}

impl Observable {
    pub fn eval(&self, s: &FluidState) -> f64 {
        match self {
            Observable::Energy => s.energy,
            Observable::MassWeightedEnergy => s.energy / integrate(&s.rho),
            Observable::MomentumNorm => s.momentum.l2_norm(),
        }
    }
}

/// ∫₀^h e^{−λt} F(Φ(t)) dt, minimized by [`select`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionFunctional {
    pub rate: f64,
    pub observable: Observable,
}

impl SelectionFunctional {
    pub fn new(observable: Observable, rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::Invalid(format!("discount rate {rate} must be > 0")));
        }
        Ok(Self { rate, observable })
    }
}

/// ∫_0^h s e^{−λs} ds / h with cancellation-free small-argument branch.
fn ramp_weight(lambda: f64, h: f64) -> f64 {
    let x = lambda * h;
    if x < 1e-3 {
        h * (0.5 - x / 3.0 + x * x / 8.0 - x * x * x / 30.0)
    } else {
        (1.0 - (-x).exp() * (1.0 + x)) / (lambda * lambda * h)
    }
}

/// Exact integral of e^{−λt} against the piecewise-linear interpolant of
/// F on the sample grid.
pub fn evaluate_functional(traj: &Trajectory, f: &SelectionFunctional, horizon: f64) -> Result<f64> {
    let end = traj.horizon();
    if !(horizon >= 0.0) || horizon > end + time_tol(end) {
        return Err(Error::HorizonExceeded {
            time: horizon,
            horizon: end,
        });
    }
    let lambda = f.rate;
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for s in traj.samples() {
        if s.time < horizon - time_tol(horizon) {
            pts.push((s.time, f.observable.eval(s)));
        }
    }
    let last = traj.state_at(horizon.min(end))?;
    pts.push((horizon, f.observable.eval(&last)));
    let mut acc = 0.0;
    for w in pts.windows(2) {
        let ((a, fa), (b, fb)) = (w[0], w[1]);
        let h = b - a;
        if h <= 0.0 {
            continue;
        }
        let i0 = -(-lambda * h).exp_m1() / lambda;
        let i1 = ramp_weight(lambda, h);
        acc += (-lambda * a).exp() * (fa * i0 + (fb - fa) * i1);
    }
    Ok(acc)
}

#[derive(Debug, Clone, Serialize)]
pub struct SelectionReport {
    pub functionals: Vec<SelectionFunctional>,
    pub horizon: f64,
    /// Candidate indices alive after each round.
    pub survivors_per_round: Vec<Vec<usize>>,
    /// Functional values of all candidates per round.
    pub values_per_round: Vec<Vec<f64>>,
    pub winner: usize,
    pub winner_hash: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub semigroup_distances: Vec<f64>,
}

/// Lexicographic minimization over the candidates; ties go to the smallest
/// config hash, then the lowest index.
pub fn select(candidates: &[Trajectory], functionals: &[SelectionFunctional], horizon: f64) -> Result<SelectionReport> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let k = default_sobolev_order(candidates[0].domain().dim());
    for c in &candidates[1..] {
        let distance = trajectory_distance(&candidates[0], c, k, &[0.0]).map_err(|_| Error::MixedInitialData {
            distance: f64::INFINITY,
        })?;
        if distance > SAME_DATA_TOL {
            return Err(Error::MixedInitialData { distance });
        }
    }
    let mut alive: Vec<usize> = (0..candidates.len()).collect();
    let mut survivors_per_round = Vec::new();
    let mut values_per_round = Vec::new();
    for f in functionals {
        let values = candidates
            .iter()
            .map(|c| evaluate_functional(c, f, horizon))
            .collect::<Result<Vec<f64>>>()?;
        let best = alive.iter().map(|&i| values[i]).fold(f64::INFINITY, f64::min);
        let cut = best + TIE_TOL * best.abs().max(f64::MIN_POSITIVE);
        alive.retain(|&i| values[i] <= cut);
        survivors_per_round.push(alive.clone());
        values_per_round.push(values);
    }
    let winner = *alive
        .iter()
        .min_by(|&&a, &&b| {
            candidates[a]
                .meta()
                .config_hash
                .cmp(&candidates[b].meta().config_hash)
                .then(a.cmp(&b))
        })
        .expect("at least one survivor");
    Ok(SelectionReport {
        functionals: functionals.to_vec(),
        horizon,
        survivors_per_round,
        values_per_round,
        winner,
        winner_hash: candidates[winner].meta().config_hash.clone(),
        semigroup_distances: Vec::new(),
    })
}

/// Selection rule: ordered functionals evaluated on a fixed horizon.
#[derive(Debug, Clone)]
pub struct Selector {
    pub functionals: Vec<SelectionFunctional>,
    pub horizon: f64,
}

impl Selector {
    pub fn pick(&self, candidates: &[Trajectory]) -> Result<Trajectory> {
        let rep = select(candidates, &self.functionals, self.horizon)?;
        Ok(candidates[rep.winner].clone())
    }
}

/// Produces the candidate set for data (ϱ₀, J₀, E₀) on a horizon.
pub trait CandidateGenerator {
    fn generate(&self, init: &FluidState, e0: f64, horizon: f64) -> Result<Vec<Trajectory>>;
}

impl<F> CandidateGenerator for F
where
    F: Fn(&FluidState, f64, f64) -> Result<Vec<Trajectory>>,
{
    fn generate(&self, init: &FluidState, e0: f64, horizon: f64) -> Result<Vec<Trajectory>> {
        self(init, e0, horizon)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SemigroupReport {
    pub t1: f64,
    pub t2: f64,
    /// sup over the shared grid on [0, t₂] of the state distance.
    pub distance: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Compares S_{t₁}U[data] with U[U[data](t₁)] on [0, t₂].
pub fn check_semigroup(
    selector: &Selector,
    init: &FluidState,
    e0: f64,
    t1: f64,
    t2: f64,
    generator: &dyn CandidateGenerator,
    tolerance: f64,
) -> Result<SemigroupReport> {
    let horizon = selector.horizon.max(t1 + t2);
    let first = selector.pick(&generator.generate(init, e0, horizon)?)?;
    let shifted = shift(&first, t1)?;
    let mid = first.state_at(t1)?;
    let e_mid = first.energy_left(t1)?;
    let restart_horizon = selector.horizon.max(t2);
    let second = selector.pick(&generator.generate(&mid, e_mid, restart_horizon)?)?;
    let grid: Vec<f64> = shifted
        .times()
        .into_iter()
        .filter(|t| *t <= t2 + time_tol(t2))
        .collect();
    let k = default_sobolev_order(init.domain().dim());
    let distance = trajectory_distance(&shifted, &second, k, &grid)?;
    Ok(SemigroupReport {
        t1,
        t2,
        distance,
        tolerance,
        passed: distance <= tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_weight_branches_agree() {
        for (l, h) in [(1.0, 1e-3), (1.0, 1.1e-3), (100.0, 1e-5), (0.5, 2.0)] {
            let x: f64 = l * h;
            let direct = (1.0 - (-x).exp() * (1.0 + x)) / (l * l * h);
            assert!((ramp_weight(l, h) - direct).abs() <= 1e-9 * direct.abs().max(1e-12));
        }
    }

    #[test]
    fn observable_names() {
        assert_eq!("energy".parse::<Observable>().unwrap(), Observable::Energy);
        assert!("entropy".parse::<Observable>().is_err());
        assert!(SelectionFunctional::new(Observable::Energy, 0.0).is_err());
    }
}
