//! Experiment configuration files (TOML or JSON).

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use qfluid_core::discretization::{Boundary, Domain, DomainSpec, GalerkinBasis, ScalarField, VectorField};
use qfluid_core::hashing::config_hash;
use qfluid_core::physics::{FluidParams, SystemKind};
use qfluid_core::solver::{project_initial, FluidState, SolverConfig};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default)]
    pub lengths: Option<Vec<f64>>,
    pub resolution: Vec<usize>,
    #[serde(default = "default_bc")]
    pub bc: Boundary,
}

fn default_dim() -> usize {
    1
}

fn default_bc() -> Boundary {
    Boundary::Periodic
}

impl DomainSection {
    /// Lengths default to 2π per axis.
    pub fn spec(&self) -> DomainSpec {
        let lengths = self.lengths.clone().unwrap_or_else(|| vec![2.0 * PI; self.dim]);
        DomainSpec::new(self.dim, &lengths, &self.resolution, self.bc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsSection {
    pub a: f64,
    pub gamma: f64,
    pub mu: f64,
    pub lambda_bulk: f64,
    pub hbar: f64,
}

impl Default for ParamsSection {
    fn default() -> Self {
        let p = FluidParams::default();
        Self {
            a: p.a,
            gamma: p.gamma,
            mu: p.mu,
            lambda_bulk: p.lambda_bulk,
            hbar: p.hbar,
        }
    }
}

/// Named initial-condition family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Constant,
    SinePerturbation,
    GaussianBump,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSection {
    pub family: Family,
    /// Background density.
    pub base: f64,
    /// Relative density amplitude (sine) or absolute bump height (gaussian).
    pub amplitude: f64,
    pub wavenumber: u32,
    /// Velocity amplitude along the first axis (sine and bump), or the
    /// uniform velocity (constant).
    pub velocity: f64,
    /// Bump width.
    pub width: f64,
    /// Bump center; defaults to the middle of the box.
    pub center: Option<Vec<f64>>,
    /// Initial energy budget E₀; defaults to the initial energy.
    pub e0: Option<f64>,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self {
            family: Family::SinePerturbation,
            base: 1.0,
            amplitude: 0.1,
            wavenumber: 1,
            velocity: 0.0,
            width: 0.5,
            center: None,
            e0: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub snapshot_every: usize,
    pub t_final: f64,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            snapshot_every: 10,
            t_final: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub system: SystemKind,
    pub domain: DomainSection,
    #[serde(default)]
    pub params: ParamsSection,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub output: OutputSection,
    /// Add the constant (mean-flow) modes to a periodic basis.
    #[serde(default)]
    pub mean_modes: bool,
    #[serde(default = "yes")]
    pub reproducible: bool,
}

fn yes() -> bool {
    true
}

impl ExperimentConfig {
    pub fn params(&self) -> FluidParams {
        FluidParams {
            a: self.params.a,
            gamma: self.params.gamma,
            mu: self.params.mu,
            lambda_bulk: self.params.lambda_bulk,
            hbar: self.params.hbar,
            dim: self.domain.dim,
        }
    }

    /// Solver settings with the system kind from the top level.
    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            system: self.system,
            ..self.solver.clone()
        }
    }

    pub fn domain(&self) -> Result<Arc<Domain>, CliError> {
        Ok(self.domain.spec().build()?)
    }

    pub fn basis(&self, domain: &Arc<Domain>) -> Result<GalerkinBasis, CliError> {
        self.basis_with(domain, self.solver.n_modes)
    }

    pub fn basis_with(&self, domain: &Arc<Domain>, n: usize) -> Result<GalerkinBasis, CliError> {
        Ok(if self.mean_modes {
            GalerkinBasis::with_mean_modes(domain, n)?
        } else {
            qfluid_core::discretization::galerkin_basis(domain, n)?
        })
    }

    /// Hash of everything that affects results (the output location does not).
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output.directory = PathBuf::new();
        config_hash(&c)
    }

    /// Checks every invariant and returns all violations at once.
    pub fn validate(&self) -> Result<(), CliError> {
        let mut bad = Vec::new();
        let p = self.params();
        if let Err(e) = p.validate() {
            bad.push(e.to_string());
        }
        if !(p.gamma > 1.0) {
            bad.push(format!("gamma = {} must be > 1", p.gamma));
        }
        if self.system == SystemKind::Euler && (p.mu != 0.0 || p.lambda_bulk != 0.0) {
            bad.push(format!(
                "euler system needs mu = 0 and lambda_bulk = 0 (got {}, {})",
                p.mu, p.lambda_bulk
            ));
        }
        if !(1..=2).contains(&self.domain.dim) {
            bad.push(format!("domain.dim = {} must be 1 or 2", self.domain.dim));
        }
        if self.domain.resolution.len() != self.domain.dim {
            bad.push(format!(
                "domain.resolution has {} entries for dim {}",
                self.domain.resolution.len(),
                self.domain.dim
            ));
        }
        if self.domain.resolution.len() == self.domain.dim {
            if let Err(e) = self.domain.spec().build() {
                bad.push(e.to_string());
            }
        }
        if let Some(l) = &self.domain.lengths {
            if l.len() != self.domain.dim || l.iter().any(|v| !(*v > 0.0)) {
                bad.push("domain.lengths must list one positive length per axis".into());
            }
        }
        if let Err(e) = self.solver.validate() {
            bad.push(e.to_string());
        }
        if self.mean_modes && self.domain.bc != Boundary::Periodic {
            bad.push("mean_modes needs a periodic domain".into());
        }
        if self.output.snapshot_every == 0 {
            bad.push("output.snapshot_every must be >= 1".into());
        }
        if !(self.output.t_final >= 0.0) {
            bad.push(format!("output.t_final = {} must be >= 0", self.output.t_final));
        }
        bad.extend(self.initial_violations());
        if bad.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(bad))
        }
    }

    fn initial_violations(&self) -> Vec<String> {
        let i = &self.initial;
        let mut bad = Vec::new();
        if !(i.base > 0.0) {
            bad.push(format!("initial.base = {} must be > 0", i.base));
        }
        match i.family {
            Family::Constant => {}
            Family::SinePerturbation => {
                if !(i.amplitude.abs() < 1.0) {
                    bad.push(format!(
                        "initial.amplitude = {} makes the density non-positive (|amplitude| < 1 needed)",
                        i.amplitude
                    ));
                }
                if i.wavenumber == 0 {
                    bad.push("initial.wavenumber must be >= 1".into());
                }
            }
            Family::GaussianBump => {
                if !(i.base + i.amplitude.min(0.0) > 0.0) {
                    bad.push(format!(
                        "initial.base + amplitude = {} must stay > 0",
                        i.base + i.amplitude
                    ));
                }
                if !(i.width > 0.0) {
                    bad.push(format!("initial.width = {} must be > 0", i.width));
                }
                if let Some(c) = &i.center {
                    if c.len() != self.domain.dim {
                        bad.push("initial.center needs one coordinate per axis".into());
                    }
                }
            }
        }
        if let Some(e0) = i.e0 {
            if !e0.is_finite() {
                bad.push("initial.e0 must be finite".into());
            }
        }
        bad
    }

    /// Density and momentum of the named family.
    pub fn initial_fields(&self, domain: &Arc<Domain>) -> (ScalarField, VectorField) {
        let i = &self.initial;
        let spec = domain.spec();
        let dim = spec.dim;
        let lengths: Vec<f64> = (0..dim).map(|a| domain.length(a)).collect();
        let wall = spec.bc == Boundary::Wall;
        // Profiles that respect the wall parities: cosines for ϱ, sines for u.
        let phase = |x: f64| {
            let k = i.wavenumber as f64;
            if wall {
                k * PI * x / lengths[0]
            } else {
                2.0 * k * PI * x / lengths[0]
            }
        };
        let cross = |x: [f64; 2]| {
            if dim == 2 && wall {
                (PI * x[1] / lengths[1]).sin()
            } else {
                1.0
            }
        };
        let rho = match i.family {
            Family::Constant => ScalarField::constant(domain, i.base),
            Family::SinePerturbation => ScalarField::from_fn(domain, |x| {
                let s = if wall { phase(x[0]).cos() } else { phase(x[0]).sin() };
                i.base * (1.0 + i.amplitude * s)
            }),
            Family::GaussianBump => {
                let center: Vec<f64> = i
                    .center
                    .clone()
                    .unwrap_or_else(|| lengths.iter().map(|l| 0.5 * l).collect());
                ScalarField::from_fn(domain, |x| {
                    let r2: f64 = (0..dim).map(|a| (x[a] - center[a]).powi(2)).sum();
                    i.base + i.amplitude * (-r2 / (2.0 * i.width * i.width)).exp()
                })
            }
        };
        let u = VectorField::from_fn(domain, |x, comp| {
            if comp != 0 {
                return 0.0;
            }
            match i.family {
                Family::Constant => i.velocity,
                _ => {
                    let s = if wall { phase(x[0]).sin() } else { phase(x[0]).cos() };
                    i.velocity * s * cross(x)
                }
            }
        });
        let momentum = u.mul_scalar(&rho);
        (rho, momentum)
    }

    /// Projected initial state together with E₀ (checked against its energy).
    pub fn initial_state(&self, basis: &GalerkinBasis) -> Result<(FluidState, f64, f64), CliError> {
        let (rho, momentum) = self.initial_fields(basis.domain());
        let proj = project_initial(&rho, &momentum, basis, &self.params())?;
        let e0 = self.resolve_e0(proj.state.energy)?;
        Ok((proj.state, e0, proj.projection_gap))
    }

    pub fn resolve_e0(&self, energy: f64) -> Result<f64, CliError> {
        match self.initial.e0 {
            None => Ok(energy),
            Some(e0) if e0 >= energy => Ok(e0),
            Some(e0) => Err(CliError::Validation(vec![format!(
                "initial.e0 = {e0} is below the initial energy {energy}"
            )])),
        }
    }
}

/// Reads and validates a config; the format follows the extension.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    let cfg = parse_config_str(&text, ext).map_err(|e| match e {
        CliError::Parse(msg) => CliError::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    Ok(cfg)
}

pub fn parse_config_str(text: &str, format: &str) -> Result<ExperimentConfig, CliError> {
    let cfg: ExperimentConfig = match format {
        "toml" => toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?,
        "json" => serde_json::from_str(text)
            .map_err(|e| CliError::Parse(format!("line {} column {}: {e}", e.line(), e.column())))?,
        other => {
            return Err(CliError::Usage(format!(
                "unknown config format {other:?} (use .toml or .json)"
            )))
        }
    };
    cfg.validate()?;
    Ok(cfg)
}
