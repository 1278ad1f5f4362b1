//! Constitutive relations of the quantum fluid: isentropic pressure and its
//! potential, Newtonian viscous stress, the Bohm potential, the Korteweg
//! tensor and the drift velocity.
//!
//! Every function is pure: fields in, fields out. Densities must be strictly
//! positive; nothing here clamps.

use serde::{Deserialize, Serialize};

use crate::discretization::ops::{self, derivative};
use crate::discretization::{ScalarField, TensorField, VectorField};
use crate::error::{Error, Result};

/// Default spectral-tail threshold below which a density counts as resolved.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-8;

/// Which limit system a run represents. The solver is shared; the kind
/// controls validation and the kinetic-energy representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    #[default]
    NavierStokes,
    Euler,
}

impl std::fmt::Display for SystemKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SystemKind::NavierStokes => "navier_stokes",
            SystemKind::Euler => "euler",
        })
    }
}

/// Physical constants of the quantum Navier–Stokes / Euler system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluidParams {
    /// Pressure coefficient in p = a ϱ^γ.
    pub a: f64,
    /// Adiabatic exponent.
    pub gamma: f64,
    /// Shear viscosity.
    pub mu: f64,
    /// Bulk viscosity (named apart from the defect constant).
    pub lambda_bulk: f64,
    /// Scaled Planck constant.
    pub hbar: f64,
    /// Spatial dimension.
    pub dim: usize,
}

impl Default for FluidParams {
    fn default() -> Self {
        Self {
            a: 1.0,
            gamma: 2.0,
            mu: 0.0,
            lambda_bulk: 0.0,
            hbar: 0.1,
            dim: 1,
        }
    }
}

impl FluidParams {
    /// Checks the hard invariants and returns soft warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut bad = Vec::new();
        if !(self.a > 0.0) {
            bad.push(format!("a = {} must be > 0", self.a));
        }
        if !(self.hbar > 0.0) {
            bad.push(format!("hbar = {} must be > 0", self.hbar));
        }
        if !(self.mu >= 0.0) {
            bad.push(format!("mu = {} must be >= 0", self.mu));
        }
        if !(self.lambda_bulk >= 0.0) {
            bad.push(format!("lambda_bulk = {} must be >= 0", self.lambda_bulk));
        }
        if !(1..=3).contains(&self.dim) {
            bad.push(format!("dim = {} must be 1, 2 or 3", self.dim));
        }
        if !bad.is_empty() {
            return Err(Error::Invalid(bad.join("; ")));
        }
        let mut warnings = Vec::new();
        if self.gamma <= self.dim as f64 / 2.0 {
            warnings.push(format!(
                "gamma = {} does not exceed d/2 = {}",
                self.gamma,
                self.dim as f64 / 2.0
            ));
        }
        Ok(warnings)
    }

    /// Scales both viscosities by `delta` (the vanishing-viscosity family).
    pub fn with_viscosity_scale(&self, delta: f64) -> Self {
        Self {
            mu: self.mu * delta,
            lambda_bulk: self.lambda_bulk * delta,
            ..*self
        }
    }

    /// Dimension used in the deviatoric factor 2/d of the viscous stress.
    ///
    /// In one dimension the traceless part of a scalar gradient is zero, so
    /// the 1-d model is read as plane-parallel flow in ℝ³ and uses d = 3.
    pub fn deviatoric_dim(&self) -> f64 {
        if self.dim == 1 {
            3.0
        } else {
            self.dim as f64
        }
    }

    pub fn p(&self, rho: f64) -> f64 {
        self.a * rho.powf(self.gamma)
    }

    /// Pressure potential P(ϱ) = a/(γ−1) ϱ^γ.
    pub fn potential(&self, rho: f64) -> f64 {
        self.a / (self.gamma - 1.0) * rho.powf(self.gamma)
    }

    pub fn potential_prime(&self, rho: f64) -> f64 {
        self.a * self.gamma / (self.gamma - 1.0) * rho.powf(self.gamma - 1.0)
    }

    pub fn potential_second(&self, rho: f64) -> f64 {
        self.a * self.gamma * rho.powf(self.gamma - 2.0)
    }

    fn check_gamma(&self) -> Result<()> {
        if (self.gamma - 1.0).abs() < 1e-12 {
            Err(Error::GammaOne { gamma: self.gamma })
        } else {
            Ok(())
        }
    }
}

/// λ(d, γ) = max{d(γ−1), 2}, the constant tying the Reynolds-stress trace to
/// the energy defect.
pub fn lambda_defect(dim: usize, gamma: f64) -> f64 {
    (dim as f64 * (gamma - 1.0)).max(2.0)
}

pub fn check_positive(rho: &ScalarField) -> Result<()> {
    let min = rho.min();
    if min > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveDensity { min })
    }
}

/// p(ϱ) = a ϱ^γ pointwise.
pub fn pressure(rho: &ScalarField, params: &FluidParams) -> Result<ScalarField> {
    check_positive(rho)?;
    Ok(rho.map(|r| params.p(r)))
}

/// P(ϱ) = a/(γ−1) ϱ^γ pointwise, the solution of ϱP′ − P = p.
pub fn pressure_potential(rho: &ScalarField, params: &FluidParams) -> Result<ScalarField> {
    check_positive(rho)?;
    params.check_gamma()?;
    Ok(rho.map(|r| params.potential(r)))
}

/// Largest relative residual of ϱP′(ϱ) − P(ϱ) − p(ϱ) over the nodes.
pub fn pressure_potential_residual(rho: &ScalarField, params: &FluidParams) -> Result<f64> {
    check_positive(rho)?;
    params.check_gamma()?;
    Ok(rho.values().iter().fold(0.0f64, |m, &r| {
        let p = params.p(r);
        let res = r * params.potential_prime(r) - params.potential(r) - p;
        m.max(res.abs() / p.abs().max(f64::MIN_POSITIVE))
    }))
}

/// 𝕊 = μ(∇u + ∇ᵀu − (2/d) div u 𝕀) + λ_bulk div u 𝕀.
pub fn viscous_stress(grad_u: &TensorField, params: &FluidParams) -> Result<TensorField> {
    if grad_u.dim() != params.dim {
        return Err(Error::DimensionMismatch {
            expected: params.dim,
            got: grad_u.dim(),
        });
    }
    let d = grad_u.dim();
    let div = grad_u.trace();
    let iso = params.lambda_bulk - 2.0 * params.mu / params.deviatoric_dim();
    let comps = (0..d * d)
        .map(|k| {
            let (i, j) = (k / d, k % d);
            let sym = grad_u.get(i, j).add(grad_u.get(j, i)).scale(params.mu);
            if i == j {
                sym.add(&div.scale(iso))
            } else {
                sym
            }
        })
        .collect();
    TensorField::new(d, comps)
}

/// Q = (ħ/2) Δ√ϱ / √ϱ with the default resolution check.
pub fn bohm_potential(rho: &ScalarField, params: &FluidParams) -> Result<ScalarField> {
    bohm_potential_with_tolerance(rho, params, Some(DEFAULT_TAIL_TOLERANCE))
}

/// Q with a configurable spectral-tail threshold (`None` skips the check).
pub fn bohm_potential_with_tolerance(
    rho: &ScalarField,
    params: &FluidParams,
    tail_tolerance: Option<f64>,
) -> Result<ScalarField> {
    check_positive(rho)?;
    if let Some(tol) = tail_tolerance {
        let tail = ops::spectral_tail(rho);
        if tail > tol {
            return Err(Error::UnresolvedField { tail, tolerance: tol });
        }
    }
    let sq = rho.map(f64::sqrt);
    let lap = ops::laplacian(&sq);
    Ok(lap.zip_map(&sq, rho.parity(), |l, s| 0.5 * params.hbar * l / s))
}

/// 𝕂 = (ħ/4)(∇²ϱ − 4 ∇√ϱ ⊗ ∇√ϱ).
pub fn korteweg_tensor(rho: &ScalarField, params: &FluidParams) -> Result<TensorField> {
    check_positive(rho)?;
    let hess = ops::hessian(rho);
    let gs = ops::gradient(&rho.map(f64::sqrt));
    let outer = TensorField::outer(&gs, &gs);
    Ok(hess.sub(&outer.scale(4.0)).scale(0.25 * params.hbar))
}

/// The drift form of the same tensor, (ħ/2) ϱ ∇v with v = ½∇log ϱ.
pub fn korteweg_tensor_drift_form(rho: &ScalarField, params: &FluidParams) -> Result<TensorField> {
    let v = drift_velocity_log_form(rho)?;
    let gv = ops::grad_vec(&v);
    let d = gv.dim();
    let comps = gv
        .components()
        .iter()
        .map(|c| c.mul(rho).scale(0.5 * params.hbar))
        .collect();
    TensorField::new(d, comps)
}

/// v = ∇√ϱ / √ϱ.
pub fn drift_velocity(rho: &ScalarField) -> Result<VectorField> {
    check_positive(rho)?;
    let sq = rho.map(f64::sqrt);
    let g = ops::gradient(&sq);
    Ok(g.map_components(|c| c.zip_map(&sq, c.parity(), |a, s| a / s)))
}

/// v = ½ ∇ log ϱ.
pub fn drift_velocity_log_form(rho: &ScalarField) -> Result<VectorField> {
    check_positive(rho)?;
    let lg = rho.map(f64::ln);
    Ok(ops::gradient(&lg).scale(0.5))
}

/// ϱ∇Q, the quantum force density.
pub fn quantum_force(rho: &ScalarField, params: &FluidParams, tail_tolerance: Option<f64>) -> Result<VectorField> {
    let q = bohm_potential_with_tolerance(rho, params, tail_tolerance)?;
    let dim = rho.domain().dim();
    VectorField::new((0..dim).map(|a| derivative(&q, a).mul(rho)).collect())
}
