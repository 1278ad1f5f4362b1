//! Relative energy between a computed state and a smooth reference, the
//! manufactured references, and the Gronwall-style comparison harness.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::discretization::ops::integrate;
use crate::discretization::{Boundary, Domain, ScalarField, VectorField};
use crate::error::{Error, Result};
use crate::physics::{check_positive, drift_velocity, FluidParams};
use crate::solver::FluidState;
use crate::trajectory::Trajectory;

/// Default absolute floor of the Gronwall fit.
pub const DEFAULT_ATOL: f64 = 1e-10;
/// Default growth rate allowed for same-data comparisons.
pub const DEFAULT_L_MAX: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelativeEnergyComponents {
    /// ½∫ϱ|u − ũ|²
    pub kinetic: f64,
    /// ∫P(ϱ) − P′(ϱ̃)(ϱ − ϱ̃) − P(ϱ̃)
    pub pressure: f64,
    /// (ħ/2)∫ϱ|v − ṽ|²
    pub quantum: f64,
    pub total: f64,
}

/// E(ϱ,u,v | ϱ̃,ũ,ṽ) with drift velocities v = ∇√ϱ/√ϱ.
pub fn relative_energy(
    state: &FluidState,
    ref_rho: &ScalarField,
    ref_u: &VectorField,
    params: &FluidParams,
) -> Result<RelativeEnergyComponents> {
    relative_energy_fields(&state.rho, &state.velocity(), ref_rho, ref_u, params)
}

pub fn relative_energy_fields(
    rho: &ScalarField,
    u: &VectorField,
    ref_rho: &ScalarField,
    ref_u: &VectorField,
    params: &FluidParams,
) -> Result<RelativeEnergyComponents> {
    check_positive(rho)?;
    check_positive(ref_rho)?;
    if **rho.domain() != **ref_rho.domain() || **u.domain() != **ref_u.domain() {
        return Err(Error::DomainMismatch);
    }
    let du2 = u.sub(ref_u).norm_sq();
    let kinetic = 0.5 * integrate(&du2.zip_map(rho, du2.parity(), |a, r| a * r));
    let bregman = rho.zip_map(ref_rho, rho.parity(), |r, q| {
        params.potential(r) - params.potential_prime(q) * (r - q) - params.potential(q)
    });
    let pressure = integrate(&bregman);
    let dv2 = drift_velocity(rho)?.sub(&drift_velocity(ref_rho)?).norm_sq();
    let quantum = 0.5 * params.hbar * integrate(&dv2.zip_map(rho, dv2.parity(), |a, r| a * r));
    Ok(RelativeEnergyComponents {
        kinetic,
        pressure,
        quantum,
        total: kinetic + pressure + quantum,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceKind {
    /// ϱ̃ ≡ ϱ̄, ũ ≡ 0.
    Constant,
    /// ϱ̃ ≡ ϱ̄, ũ ≡ U (periodic domains only).
    IsothermalDrift,
}

impl std::str::FromStr for ReferenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(Self::Constant),
            "isothermal-drift" => Ok(Self::IsothermalDrift),
            other => Err(Error::UnsupportedKind(other.to_string())),
        }
    }
}

/// Exact smooth solution evaluated at any time.
#[derive(Debug, Clone)]
pub struct StrongReference {
    pub kind: ReferenceKind,
    pub rho_bar: f64,
    pub drift: [f64; 2],
    domain: Arc<Domain>,
}

/// Reference with ϱ̄ = 1 and, for the drift kind, U = (1, 0).
pub fn manufactured_strong_solution(
    kind: ReferenceKind,
    params: &FluidParams,
    domain: &Arc<Domain>,
) -> Result<StrongReference> {
    if params.dim != domain.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim,
            got: domain.dim(),
        });
    }
    let drift = match kind {
        ReferenceKind::Constant => [0.0, 0.0],
        ReferenceKind::IsothermalDrift => {
            if domain.bc() != Boundary::Periodic {
                return Err(Error::UnsupportedKind(
                    "isothermal-drift needs a periodic domain".into(),
                ));
            }
            [1.0, 0.0]
        }
    };
    Ok(StrongReference {
        kind,
        rho_bar: 1.0,
        drift,
        domain: domain.clone(),
    })
}

impl StrongReference {
    pub fn with_density(mut self, rho_bar: f64) -> Result<Self> {
        if !(rho_bar > 0.0) {
            return Err(Error::NonPositiveDensity { min: rho_bar });
        }
        self.rho_bar = rho_bar;
        Ok(self)
    }

    /// Sets U; only meaningful for the drift kind.
    pub fn with_drift(mut self, drift: [f64; 2]) -> Result<Self> {
        if self.kind == ReferenceKind::Constant && drift != [0.0, 0.0] {
            return Err(Error::UnsupportedKind("constant reference has zero velocity".into()));
        }
        self.drift = drift;
        Ok(self)
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn rho_at(&self, _t: f64) -> ScalarField {
        ScalarField::constant(&self.domain, self.rho_bar)
    }

    pub fn u_at(&self, _t: f64) -> VectorField {
        let drift = self.drift;
        VectorField::from_fn(&self.domain, |_, c| drift[c])
    }

    pub fn state_at(&self, t: f64, params: &FluidParams) -> Result<FluidState> {
        let rho = self.rho_at(t);
        let momentum = self.u_at(t).mul_scalar(&rho);
        FluidState::from_momentum(t, rho, momentum, params)
    }

    pub fn energy(&self, params: &FluidParams) -> f64 {
        let speed2 = self.drift[0].powi(2) + self.drift[1].powi(2);
        self.domain.volume() * (0.5 * self.rho_bar * speed2 + params.potential(self.rho_bar))
    }
}

/// Time window of the Gronwall fit and its tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub t_start: f64,
    pub t_end: f64,
    pub atol: f64,
    /// Growth rate allowed when the comparison starts from the same data.
    pub l_max: f64,
}

impl FitWindow {
    pub fn new(t_start: f64, t_end: f64) -> Self {
        Self {
            t_start,
            t_end,
            atol: DEFAULT_ATOL,
            l_max: DEFAULT_L_MAX,
        }
    }

    pub fn whole(traj: &Trajectory) -> Self {
        Self::new(0.0, traj.horizon())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RelativeEnergyReport {
    pub times: Vec<f64>,
    pub rel_energy: Vec<f64>,
    pub kinetic: Vec<f64>,
    pub pressure: Vec<f64>,
    pub quantum: Vec<f64>,
    /// Least-squares fit log r = log C + L t over samples above 10·atol.
    pub gronwall_c: f64,
    pub gronwall_l: f64,
    /// Smallest L ≥ 0 with r(t) ≤ (r(0) + atol)e^{Lt} on the window.
    pub envelope_rate: f64,
    pub fitted_samples: usize,
    pub same_data: bool,
    pub passed: bool,
    pub window: FitWindow,
}

/// Relative energy of every trajectory sample against `reference`.
pub fn weak_strong_compare(
    traj: &Trajectory,
    reference: &StrongReference,
    params: &FluidParams,
    window: FitWindow,
) -> Result<RelativeEnergyReport> {
    if **traj.domain() != **reference.domain() {
        return Err(Error::DomainMismatch);
    }
    let mut times = Vec::new();
    let mut rel = Vec::new();
    let mut kinetic = Vec::new();
    let mut pressure = Vec::new();
    let mut quantum = Vec::new();
    for s in traj.samples() {
        if s.time < window.t_start - 1e-12 || s.time > window.t_end + 1e-12 {
            continue;
        }
        let c = relative_energy(s, &reference.rho_at(s.time), &reference.u_at(s.time), params)?;
        times.push(s.time);
        rel.push(c.total);
        kinetic.push(c.kinetic);
        pressure.push(c.pressure);
        quantum.push(c.quantum);
    }
    if times.is_empty() {
        return Err(Error::WindowEmpty);
    }
    let fit = gronwall_fit(&times, &rel, window.atol);
    let t0 = times[0];
    let r0 = rel[0];
    let envelope_rate = times
        .iter()
        .zip(&rel)
        .filter(|(t, _)| **t > t0)
        .map(|(t, r)| ((r.max(0.0) / (r0.max(0.0) + window.atol)).ln() / (t - t0)).max(0.0))
        .fold(0.0, f64::max);
    let same_data = r0 <= window.atol;
    let within_growth = !same_data
        || times
            .iter()
            .zip(&rel)
            .all(|(t, r)| *r <= window.atol * (window.l_max * (t - t0)).exp());
    let passed = envelope_rate.is_finite() && fit.1.is_finite() && within_growth;
    Ok(RelativeEnergyReport {
        times,
        rel_energy: rel,
        kinetic,
        pressure,
        quantum,
        gronwall_c: fit.0,
        gronwall_l: fit.1,
        envelope_rate,
        fitted_samples: fit.2,
        same_data,
        passed,
        window,
    })
}

/// (C, L, samples used). Fewer than two usable samples gives L = 0.
fn gronwall_fit(times: &[f64], rel: &[f64], atol: f64) -> (f64, f64, usize) {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(rel)
        .filter(|(_, r)| **r > 10.0 * atol)
        .map(|(t, r)| (*t, r.ln()))
        .collect();
    match pts.len() {
        0 => (0.0, 0.0, 0),
        1 => (pts[0].1.exp(), 0.0, 1),
        n => {
            let nf = n as f64;
            let mt = pts.iter().map(|p| p.0).sum::<f64>() / nf;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
            let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
            let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
            let l = if sxx > 0.0 { sxy / sxx } else { 0.0 };
            ((my - l * mt).exp(), l, n)
        }
    }
}

impl RelativeEnergyReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,rel_energy,kinetic_gap,pressure_gap,quantum_gap\n");
        for i in 0..self.times.len() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                self.times[i], self.rel_energy[i], self.kinetic[i], self.pressure[i], self.quantum[i]
            ));
        }
        out
    }

    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "C": self.gronwall_c,
            "L": self.gronwall_l,
            "envelope_rate": self.envelope_rate,
            "passed": self.passed,
            "same_data": self.same_data,
            "fitted_samples": self.fitted_samples,
            "max_rel_energy": self.rel_energy.iter().copied().fold(0.0, f64::max),
            "window": self.window,
        })
    }
}
