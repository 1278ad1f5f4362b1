//! On-disk layout for trajectories, sweeps and candidate sets.
//!
//! A trajectory directory holds `trajectory.json` and, per sample `i`,
//! `sample_iiiii.rho` / `.mom` snapshot files, an optional raw `.coeffs`
//! file and a `.json` sidecar.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::discretization::{galerkin_basis, read_snapshot, write_snapshot, GalerkinBasis, Snapshot};
use crate::error::{Error, Result};
use crate::hashing::config_hash;
use crate::limits::SweepResult;
use crate::physics::FluidParams;
use crate::solver::FluidState;
use crate::trajectory::{Trajectory, TrajectoryMeta};

pub const SCHEMA_VERSION: u32 = 1;
pub const TRAJECTORY_FILE: &str = "trajectory.json";
pub const SWEEP_FILE: &str = "sweep.json";
pub const CANDIDATES_FILE: &str = "candidates.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisInfo {
    pub n_modes: usize,
    pub mean_modes: bool,
}

impl BasisInfo {
    pub fn of(basis: &GalerkinBasis) -> Self {
        Self {
            n_modes: basis.cutoff(),
            mean_modes: basis.has_mean_modes(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleSidecar {
    pub schema_version: u32,
    pub index: usize,
    pub time: f64,
    pub energy: f64,
    pub config_hash: String,
    pub params: FluidParams,
    pub has_coeffs: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryManifest {
    pub schema_version: u32,
    pub config_hash: String,
    pub e0: f64,
    pub samples: usize,
    pub meta: TrajectoryMeta,
    pub basis: Option<BasisInfo>,
}

fn sample_path(dir: &Path, i: usize, ext: &str) -> PathBuf {
    dir.join(format!("sample_{i:05}.{ext}"))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    std::fs::write(path, bytes)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let bytes = std::fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_slice(&bytes)?)
}

fn check_schema(found: u32, path: &Path) -> Result<()> {
    if found != SCHEMA_VERSION {
        return Err(Error::Io(format!(
            "{}: unsupported schema_version {found}",
            path.display()
        )));
    }
    Ok(())
}

fn write_f64s(path: &Path, values: &[f64]) -> Result<()> {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    std::fs::write(path, bytes)?;
    Ok(())
}

fn read_f64s(path: &Path) -> Result<Vec<f64>> {
    let raw = std::fs::read(path)?;
    if raw.len() % 8 != 0 {
        return Err(Error::Io(format!("{}: not a whole number of f64", path.display())));
    }
    Ok(raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

/// Writes one checkpoint: density and momentum snapshots, coefficients and sidecar.
pub fn write_checkpoint(dir: &Path, index: usize, state: &FluidState, meta: &TrajectoryMeta) -> Result<()> {
    write_snapshot(&sample_path(dir, index, "rho"), &Snapshot::Density(state.rho.clone()))?;
    write_snapshot(
        &sample_path(dir, index, "mom"),
        &Snapshot::Momentum(state.momentum.clone()),
    )?;
    if let Some(c) = &state.velocity_coeffs {
        write_f64s(&sample_path(dir, index, "coeffs"), c)?;
    }
    let sidecar = SampleSidecar {
        schema_version: SCHEMA_VERSION,
        index,
        time: state.time,
        energy: state.energy,
        config_hash: meta.config_hash.clone(),
        params: meta.params,
        has_coeffs: state.velocity_coeffs.is_some(),
    };
    write_json(&sample_path(dir, index, "json"), &sidecar)
}

/// Reads checkpoint `index`. With a basis, the Galerkin velocity is rebuilt
/// from the stored coefficients.
pub fn read_checkpoint(dir: &Path, index: usize, basis: Option<&GalerkinBasis>) -> Result<(FluidState, SampleSidecar)> {
    let side_path = sample_path(dir, index, "json");
    let side: SampleSidecar = read_json(&side_path)?;
    check_schema(side.schema_version, &side_path)?;
    let domain = basis.map(|b| b.domain());
    let rho = match read_snapshot(&sample_path(dir, index, "rho"), domain)? {
        Snapshot::Density(f) => f,
        Snapshot::Momentum(_) => return Err(Error::Io("expected a density snapshot".into())),
    };
    let momentum = match read_snapshot(&sample_path(dir, index, "mom"), Some(rho.domain()))? {
        Snapshot::Momentum(v) => v,
        Snapshot::Density(_) => return Err(Error::Io("expected a momentum snapshot".into())),
    };
    let coeffs = if side.has_coeffs {
        Some(read_f64s(&sample_path(dir, index, "coeffs"))?)
    } else {
        None
    };
    let state = FluidState::from_parts(side.time, rho, momentum, coeffs, side.energy, basis)?;
    Ok((state, side))
}

pub fn write_trajectory(dir: &Path, traj: &Trajectory, basis: Option<BasisInfo>) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (i, s) in traj.samples().iter().enumerate() {
        write_checkpoint(dir, i, s, traj.meta())?;
    }
    let manifest = TrajectoryManifest {
        schema_version: SCHEMA_VERSION,
        config_hash: traj.meta().config_hash.clone(),
        e0: traj.initial_energy(),
        samples: traj.len(),
        meta: traj.meta().clone(),
        basis,
    };
    write_json(&dir.join(TRAJECTORY_FILE), &manifest)
}

pub fn read_trajectory_manifest(dir: &Path) -> Result<TrajectoryManifest> {
    let path = dir.join(TRAJECTORY_FILE);
    let m: TrajectoryManifest = read_json(&path)?;
    check_schema(m.schema_version, &path)?;
    Ok(m)
}

/// Loads a trajectory directory together with its basis, when recorded.
pub fn read_trajectory(dir: &Path) -> Result<(Trajectory, Option<GalerkinBasis>)> {
    let m = read_trajectory_manifest(dir)?;
    if m.samples == 0 {
        return Err(Error::Io(format!("{}: trajectory has no samples", dir.display())));
    }
    let (first, _) = read_checkpoint(dir, 0, None)?;
    let basis = match m.basis {
        Some(b) if b.mean_modes => Some(GalerkinBasis::with_mean_modes(first.domain(), b.n_modes)?),
        Some(b) => Some(galerkin_basis(first.domain(), b.n_modes)?),
        None => None,
    };
    let mut samples = Vec::with_capacity(m.samples);
    for i in 0..m.samples {
        let (s, side) = read_checkpoint(dir, i, basis.as_ref())?;
        if side.config_hash != m.config_hash {
            return Err(Error::Io(format!(
                "sample {i} carries config hash {} but the trajectory has {}",
                side.config_hash, m.config_hash
            )));
        }
        samples.push(s);
    }
    Ok((Trajectory::from_samples(samples, m.e0, m.meta)?, basis))
}

/// Sweep directory: `entry_NN/` per successful rung, `reference/` for the
/// δ = 0 run and the `sweep.json` manifest.
pub fn write_sweep(dir: &Path, result: &SweepResult, basis: Option<BasisInfo>) -> Result<String> {
    std::fs::create_dir_all(dir)?;
    let mut dirs = Vec::new();
    for (i, e) in result.entries.iter().enumerate() {
        match &e.trajectory {
            Some(t) => {
                let name = format!("entry_{i:02}");
                write_trajectory(&dir.join(&name), t, basis_for(result, e.value, basis))?;
                dirs.push(Some(name));
            }
            None => dirs.push(None),
        }
    }
    if let Some(t) = result.reference.as_ref().and_then(|r| r.trajectory.as_ref()) {
        write_trajectory(&dir.join("reference"), t, basis)?;
    }
    let mut manifest = result.manifest();
    let hash = config_hash(&manifest);
    manifest["schema_version"] = SCHEMA_VERSION.into();
    manifest["config_hash"] = hash.clone().into();
    manifest["entry_dirs"] = serde_json::to_value(dirs)?;
    write_json(&dir.join(SWEEP_FILE), &manifest)?;
    Ok(hash)
}

fn basis_for(result: &SweepResult, value: f64, basis: Option<BasisInfo>) -> Option<BasisInfo> {
    match result.parameter {
        crate::limits::SweepParameter::Modes => basis.map(|b| BasisInfo {
            n_modes: value as usize,
            ..b
        }),
        _ => basis,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidateManifest {
    pub schema_version: u32,
    pub config_hash: String,
    pub candidates: Vec<String>,
}

/// Writes `cand_NN/` trajectory directories plus `candidates.json`.
pub fn write_candidates(dir: &Path, candidates: &[Trajectory], basis: &[Option<BasisInfo>]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut names = Vec::new();
    for (i, c) in candidates.iter().enumerate() {
        let name = format!("cand_{i:02}");
        write_trajectory(&dir.join(&name), c, basis.get(i).copied().flatten())?;
        names.push(name);
    }
    let hashes: Vec<&str> = candidates.iter().map(|c| c.meta().config_hash.as_str()).collect();
    let manifest = CandidateManifest {
        schema_version: SCHEMA_VERSION,
        config_hash: config_hash(&hashes),
        candidates: names,
    };
    write_json(&dir.join(CANDIDATES_FILE), &manifest)
}

/// Reads the candidates listed in `candidates.json`, or every subdirectory
/// holding a `trajectory.json` (sorted by name) when there is no manifest.
pub fn read_candidates(dir: &Path) -> Result<Vec<Trajectory>> {
    let manifest_path = dir.join(CANDIDATES_FILE);
    let names: Vec<String> = if manifest_path.exists() {
        let m: CandidateManifest = read_json(&manifest_path)?;
        check_schema(m.schema_version, &manifest_path)?;
        m.candidates
    } else {
        let mut names: Vec<String> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok())
            .filter(|e| e.path().join(TRAJECTORY_FILE).exists())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .collect();
        names.sort();
        names
    };
    names
        .iter()
        .map(|n| read_trajectory(&dir.join(n)).map(|(t, _)| t))
        .collect()
}
