mod common;

use common::*;
use qfluid_core::discretization::*;
use qfluid_core::limits::{epsilon_sweep, InitialData, SweepConfig};
use qfluid_core::persist::*;
use qfluid_core::solver::*;

#[test]
fn trajectory_roundtrip_is_bit_exact() {
    let (traj, basis, _) = pulse_run(0.125);
    let dir = tempfile::tempdir().unwrap();
    write_trajectory(dir.path(), &traj, Some(BasisInfo::of(&basis))).unwrap();
    let (back, b) = read_trajectory(dir.path()).unwrap();
    assert_eq!(b.unwrap().len(), basis.len());
    assert_eq!(back.len(), traj.len());
    assert_eq!(back.initial_energy().to_bits(), traj.initial_energy().to_bits());
    assert_eq!(back.meta(), traj.meta());
    for (x, y) in back.samples().iter().zip(traj.samples()) {
        assert!(same_state(x, y));
        assert_eq!(x.velocity_coeffs, y.velocity_coeffs);
        assert_eq!(vbits(&x.velocity()), vbits(&y.velocity()));
    }
}

#[test]
fn sidecars_carry_schema_and_hash() {
    let (traj, basis, _) = pulse_run(0.0625);
    let dir = tempfile::tempdir().unwrap();
    write_trajectory(dir.path(), &traj, Some(BasisInfo::of(&basis))).unwrap();
    for name in ["trajectory.json", "sample_00000.json"] {
        let v: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join(name)).unwrap()).unwrap();
        assert_eq!(v["schema_version"], SCHEMA_VERSION);
        assert_eq!(v["config_hash"], traj.meta().config_hash.as_str());
    }
    let side: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("sample_00001.json")).unwrap()).unwrap();
    for key in ["time", "energy", "params"] {
        assert!(side.get(key).is_some(), "{key}");
    }
}

#[test]
fn checkpoint_replay_reproduces_later_snapshots() {
    let (traj, basis, cfg) = pulse_run(0.25);
    let dir = tempfile::tempdir().unwrap();
    write_trajectory(dir.path(), &traj, Some(BasisInfo::of(&basis))).unwrap();
    let k = 8;
    let (restart, _) = read_checkpoint(dir.path(), k, Some(&basis)).unwrap();
    let p = traj.meta().params;
    let replay = run_simulation(&restart, &cfg, &p, &basis, 0.25, 4).unwrap().trajectory;
    let tail = &traj.samples()[k..];
    assert_eq!(replay.len(), tail.len());
    for (x, y) in replay.samples().iter().zip(tail) {
        assert!(same_fields(x, y), "replay diverged at t = {}", y.time);
        assert_eq!(x.velocity_coeffs, y.velocity_coeffs);
    }
}

#[test]
fn repeated_writes_are_byte_identical() {
    let (traj, basis, _) = pulse_run(0.0625);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    write_trajectory(a.path(), &traj, Some(BasisInfo::of(&basis))).unwrap();
    write_trajectory(b.path(), &traj, Some(BasisInfo::of(&basis))).unwrap();
    let mut names: Vec<_> = std::fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.len() > 4);
    for n in names {
        assert_eq!(
            std::fs::read(a.path().join(&n)).unwrap(),
            std::fs::read(b.path().join(&n)).unwrap()
        );
    }
}

#[test]
fn candidate_manifest_roundtrip() {
    let (traj, basis, _) = pulse_run(0.0625);
    let dir = tempfile::tempdir().unwrap();
    let info = Some(BasisInfo::of(&basis));
    write_candidates(dir.path(), &[traj.clone(), traj.clone()], &[info, info]).unwrap();
    let back = read_candidates(dir.path()).unwrap();
    assert_eq!(back.len(), 2);
    assert!(same_state(back[1].last(), traj.last()));
    // Without the manifest, subdirectories are picked up by name.
    std::fs::remove_file(dir.path().join(CANDIDATES_FILE)).unwrap();
    assert_eq!(read_candidates(dir.path()).unwrap().len(), 2);
}

#[test]
fn sweep_directory_has_manifest_and_entries() {
    let d = line(32);
    let (rho, momentum) = pulse(&d);
    let init = InitialData {
        rho,
        momentum,
        e0: None,
    };
    let cfg = SweepConfig {
        solver: SolverConfig {
            dt: 1.0 / 512.0,
            ..Default::default()
        },
        t_final: 0.0625,
        snapshot_every: 4,
        ..Default::default()
    };
    let res = epsilon_sweep(&init, &viscous(), &[1e-2, 1e-3], &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let basis = galerkin_basis(&d, cfg.solver.n_modes).unwrap();
    let hash = write_sweep(dir.path(), &res, Some(BasisInfo::of(&basis))).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join(SWEEP_FILE)).unwrap()).unwrap();
    assert_eq!(v["schema_version"], SCHEMA_VERSION);
    assert_eq!(v["config_hash"], hash.as_str());
    for key in ["ladder", "distances", "ratios", "audits"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    let (e1, _) = read_trajectory(&dir.path().join("entry_01")).unwrap();
    assert!(same_state(
        e1.last(),
        res.entries[1].trajectory.as_ref().unwrap().last()
    ));
}
