//! Field snapshot files: one line of JSON header followed by the raw
//! little-endian `f64` payload, component blocks in order, row-major within
//! each block.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::domain::{Boundary, Domain, DomainSpec};
use super::field::{ScalarField, VectorField};
use crate::error::{Error, Result};

pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    /// Even-parity scalar (densities and functions of them).
    Density,
    /// Velocity-like vector (no-slip parity on walls).
    Momentum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub version: u32,
    pub dim: usize,
    pub lengths: Vec<f64>,
    pub resolution: Vec<usize>,
    pub bc: Boundary,
    #[serde(rename = "field-kind")]
    pub field_kind: FieldKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Snapshot {
    Density(ScalarField),
    Momentum(VectorField),
}

impl Snapshot {
    fn domain(&self) -> &Arc<Domain> {
        match self {
            Snapshot::Density(f) => f.domain(),
            Snapshot::Momentum(v) => v.domain(),
        }
    }
}

pub fn write_snapshot(path: &Path, snap: &Snapshot) -> Result<()> {
    let spec = snap.domain().spec().clone();
    let (kind, payload) = match snap {
        Snapshot::Density(f) => (FieldKind::Density, f.values().to_vec()),
        Snapshot::Momentum(v) => (FieldKind::Momentum, v.flat_values()),
    };
    let header = SnapshotHeader {
        version: SNAPSHOT_VERSION,
        dim: spec.dim,
        lengths: spec.lengths,
        resolution: spec.resolution,
        bc: spec.bc,
        field_kind: kind,
    };
    let mut bytes = serde_json::to_vec(&header)?;
    bytes.push(b'\n');
    bytes.reserve(payload.len() * 8);
    for v in payload {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(&bytes)?;
    Ok(())
}

/// Reads a snapshot. When `domain` is given the header must describe it and
/// the field is attached to that shared handle.
pub fn read_snapshot(path: &Path, domain: Option<&Arc<Domain>>) -> Result<Snapshot> {
    let mut reader = BufReader::new(std::fs::File::open(path)?);
    let mut line = Vec::new();
    reader.read_until(b'\n', &mut line)?;
    let header: SnapshotHeader = serde_json::from_slice(&line)?;
    if header.version != SNAPSHOT_VERSION {
        return Err(Error::Io(format!("unsupported snapshot version {}", header.version)));
    }
    let spec = DomainSpec::new(header.dim, &header.lengths, &header.resolution, header.bc);
    let domain = match domain {
        Some(d) if *d.spec() == spec => d.clone(),
        Some(_) => return Err(Error::DomainMismatch),
        None => Domain::new(spec)?,
    };
    let mut raw = Vec::new();
    reader.read_to_end(&mut raw)?;
    if raw.len() % 8 != 0 {
        return Err(Error::Io("snapshot payload is not a whole number of f64".into()));
    }
    let data: Vec<f64> = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let n = domain.len();
    match header.field_kind {
        FieldKind::Density => Ok(Snapshot::Density(ScalarField::new(domain, data)?)),
        FieldKind::Momentum => {
            if data.len() != n * domain.dim() {
                return Err(Error::DimensionMismatch {
                    expected: n * domain.dim(),
                    got: data.len(),
                });
            }
            let blocks = data.chunks_exact(n).map(<[f64]>::to_vec).collect();
            Ok(Snapshot::Momentum(VectorField::from_values(&domain, blocks)?))
        }
    }
}
