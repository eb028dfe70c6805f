//! Replays the checked-in fuzz seeds through the fuzz-target invariants, so
//! the parsers' contracts are exercised on stable without libFuzzer.

use std::fs;
use std::path::{Path, PathBuf};

use boicp::io::{
    parse_kitti_bin, parse_kitti_poses, parse_pcd, parse_ply, parse_tum_poses, parse_xyz, write_pcd, write_ply,
    Encoding,
};

fn seeds(target: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap().to_string_lossy().starts_with("seed_"))
        .map(|p| {
            let bytes = fs::read(&p).unwrap();
            (p, bytes)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn ply_seeds_parse_and_round_trip() {
    for (path, data) in seeds("ply") {
        let cloud = parse_ply(&data).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let mut buf = Vec::new();
        write_ply(&mut buf, &cloud, Encoding::Binary).unwrap();
        assert_eq!(parse_ply(&buf).unwrap(), cloud);
    }
}

#[test]
fn pcd_seeds_parse_and_round_trip() {
    for (path, data) in seeds("pcd") {
        let cloud = parse_pcd(&data).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let mut buf = Vec::new();
        write_pcd(&mut buf, &cloud, Encoding::Binary).unwrap();
        assert_eq!(parse_pcd(&buf).unwrap(), cloud);
    }
}

#[test]
fn text_and_binary_seeds_parse() {
    for (path, data) in seeds("xyz") {
        parse_xyz(&data).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
    for (path, data) in seeds("kitti_bin") {
        let cloud = parse_kitti_bin(&data).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(cloud.len() * 16, data.len());
    }
    for (path, data) in seeds("kitti_poses") {
        let poses = parse_kitti_poses(&data).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(poses.iter().all(|p| p.orthonormality_defect().0 < 1e-9));
    }
    for (path, data) in seeds("tum_poses") {
        let poses = parse_tum_poses(&data).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(poses.iter().all(|(_, p)| p.orthonormality_defect().0 < 1e-9));
    }
}

#[test]
fn truncated_seeds_never_panic() {
    for target in ["ply", "pcd", "xyz", "kitti_bin", "kitti_poses", "tum_poses"] {
        for (_, data) in seeds(target) {
            for cut in 0..data.len().min(400) {
                let d = &data[..cut];
                let _ = parse_ply(d);
                let _ = parse_pcd(d);
                let _ = parse_xyz(d);
                let _ = parse_kitti_bin(d);
                let _ = parse_kitti_poses(d);
                let _ = parse_tum_poses(d);
            }
        }
    }
}
