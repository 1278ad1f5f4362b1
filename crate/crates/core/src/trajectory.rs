//! Sampled solution paths t ↦ (ϱ, J, E).

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::discretization::Domain;
use crate::error::{Error, Result};
use crate::physics::{FluidParams, SystemKind};
use crate::solver::{FluidState, SolverConfig};

/// Relative tolerance used to match a requested time to a stored sample.
pub const TIME_MATCH_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub params: FluidParams,
    pub config_hash: String,
    pub system: SystemKind,
    #[serde(default)]
    pub solver: Option<SolverConfig>,
}

/// Samples at strictly increasing times starting at 0, plus the initial
/// right-limit energy E(0−) = E₀. Stored energies are left values.
#[derive(Debug, Clone)]
pub struct Trajectory {
    samples: Vec<FluidState>,
    e0: f64,
    meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn new(first: FluidState, e0: f64, meta: TrajectoryMeta) -> Self {
        Self {
            samples: vec![first],
            e0,
            meta,
        }
    }

    pub fn from_samples(samples: Vec<FluidState>, e0: f64, meta: TrajectoryMeta) -> Result<Self> {
        let mut it = samples.into_iter();
        let first = it.next().ok_or(Error::WindowEmpty)?;
        let mut traj = Self::new(first, e0, meta);
        for s in it {
            traj.push(s)?;
        }
        Ok(traj)
    }

    pub fn push(&mut self, state: FluidState) -> Result<()> {
        let last = self.samples.last().expect("nonempty").time;
        if !(state.time > last) {
            return Err(Error::Invalid(format!(
                "sample time {} does not follow {}",
                state.time, last
            )));
        }
        if **state.domain() != **self.domain() {
            return Err(Error::DomainMismatch);
        }
        self.samples.push(state);
        Ok(())
    }

    pub fn samples(&self) -> &[FluidState] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn first(&self) -> &FluidState {
        &self.samples[0]
    }

    pub fn last(&self) -> &FluidState {
        self.samples.last().expect("nonempty")
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.time).collect()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.energy).collect()
    }

    pub fn horizon(&self) -> f64 {
        self.last().time
    }

    /// E(0−).
    pub fn initial_energy(&self) -> f64 {
        self.e0
    }

    pub fn with_initial_energy(mut self, e0: f64) -> Self {
        self.e0 = e0;
        self
    }

    pub fn meta(&self) -> &TrajectoryMeta {
        &self.meta
    }

    pub fn meta_mut(&mut self) -> &mut TrajectoryMeta {
        &mut self.meta
    }

    pub fn domain(&self) -> &Arc<Domain> {
        self.samples[0].domain()
    }

    /// Index of the sample at `t`, if one matches within tolerance.
    pub fn find(&self, t: f64) -> Option<usize> {
        let tol = TIME_MATCH_TOL * t.abs().max(1.0);
        let pos = self.samples.partition_point(|s| s.time < t - tol);
        (pos < self.samples.len() && (self.samples[pos].time - t).abs() <= tol).then_some(pos)
    }

    /// The stored sample at `t` or the linear interpolant between neighbours.
    pub fn state_at(&self, t: f64) -> Result<FluidState> {
        if let Some(i) = self.find(t) {
            return Ok(self.samples[i].clone());
        }
        if t < 0.0 || t > self.horizon() {
            return Err(Error::HorizonExceeded {
                time: t,
                horizon: self.horizon(),
            });
        }
        let hi = self.samples.partition_point(|s| s.time < t);
        let (a, b) = (&self.samples[hi - 1], &self.samples[hi]);
        let w = (t - a.time) / (b.time - a.time);
        Ok(interpolate(a, b, w, t))
    }

    /// Left limit E(t−): E₀ at t = 0, otherwise the stored left value.
    pub fn energy_left(&self, t: f64) -> Result<f64> {
        if t == 0.0 {
            return Ok(self.e0);
        }
        Ok(self.state_at(t)?.energy)
    }
}

fn interpolate(a: &FluidState, b: &FluidState, w: f64, t: f64) -> FluidState {
    let rho = a.rho.scale(1.0 - w).add(&b.rho.scale(w));
    let momentum = a.momentum.scale(1.0 - w).add(&b.momentum.scale(w));
    let energy = (1.0 - w) * a.energy + w * b.energy;
    FluidState::interpolated(t, rho, momentum, energy)
}
