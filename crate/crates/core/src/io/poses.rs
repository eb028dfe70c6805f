//! KITTI (`r00 r01 r02 tx r10 ... tz`) and TUM (`t tx ty tz qx qy qz qw`)
//! trajectory files.

use std::io::Write;

use nalgebra::{Matrix3, UnitQuaternion, Vector3};

use super::{lines, parse_f64, tokens, ParseError};
use crate::geom::{quaternion_to_rotation, RigidTransform};

/// Rotation blocks further than this from orthonormal are rejected.
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-4;
/// Quaternions whose norm differs from one by more than this are rejected.
pub const QUATERNION_NORM_TOLERANCE: f64 = 1e-3;

fn numbers(line: &[u8], offset: usize, line_no: usize, expected: usize) -> Result<Vec<f64>, ParseError> {
    let toks: Vec<&[u8]> = tokens(line).collect();
    if toks.len() != expected {
        return Err(ParseError::at_line(
            offset,
            line_no,
            format!("expected {expected} columns, found {}", toks.len()),
        ));
    }
    toks.iter()
        .map(|t| {
            parse_f64(t)
                .filter(|v| v.is_finite())
                .ok_or_else(|| ParseError::at_line(offset, line_no, "invalid or non-finite number"))
        })
        .collect()
}

fn skip(line: &[u8]) -> bool {
    match tokens(line).next() {
        None => true,
        Some(t) => t.starts_with(b"#"),
    }
}

pub fn parse_kitti_poses(bytes: &[u8]) -> Result<Vec<RigidTransform>, ParseError> {
    let mut out = Vec::new();
    for (offset, line_no, line) in lines(bytes) {
        if skip(line) {
            continue;
        }
        let v = numbers(line, offset, line_no, 12)?;
        let r = Matrix3::new(v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10]);
        let t = Vector3::new(v[3], v[7], v[11]);
        let pose = RigidTransform::from_approx(r, t, ORTHONORMAL_TOLERANCE)
            .map_err(|e| ParseError::at_line(offset, line_no, e.to_string()))?;
        out.push(pose);
    }
    Ok(out)
}

/// Returns `(timestamp, pose)` pairs in file order.
pub fn parse_tum_poses(bytes: &[u8]) -> Result<Vec<(f64, RigidTransform)>, ParseError> {
    let mut out = Vec::new();
    for (offset, line_no, line) in lines(bytes) {
        if skip(line) {
            continue;
        }
        let v = numbers(line, offset, line_no, 8)?;
        let norm = (v[4] * v[4] + v[5] * v[5] + v[6] * v[6] + v[7] * v[7]).sqrt();
        if (norm - 1.0).abs() > QUATERNION_NORM_TOLERANCE {
            return Err(ParseError::at_line(
                offset,
                line_no,
                format!("quaternion norm {norm} is not within {QUATERNION_NORM_TOLERANCE} of 1"),
            ));
        }
        let r = quaternion_to_rotation(v[4], v[5], v[6], v[7])
            .map_err(|e| ParseError::at_line(offset, line_no, e.to_string()))?;
        let pose = RigidTransform::from_approx(r, Vector3::new(v[1], v[2], v[3]), ORTHONORMAL_TOLERANCE)
            .map_err(|e| ParseError::at_line(offset, line_no, e.to_string()))?;
        out.push((v[0], pose));
    }
    Ok(out)
}

pub fn write_kitti_poses<W: Write>(w: &mut W, poses: &[RigidTransform]) -> std::io::Result<()> {
    for p in poses {
        let rows = p.to_rows();
        let vals: Vec<String> = rows[..3].iter().flatten().map(|v| format!("{v:e}")).collect();
        writeln!(w, "{}", vals.join(" "))?;
    }
    Ok(())
}

pub fn write_tum_poses<W: Write>(w: &mut W, poses: &[(f64, RigidTransform)]) -> std::io::Result<()> {
    for (stamp, p) in poses {
        let q = UnitQuaternion::from_matrix(p.rotation());
        let t = p.translation();
        writeln!(
            w,
            "{stamp} {:e} {:e} {:e} {:e} {:e} {:e} {:e}",
            t.x, t.y, t.z, q.i, q.j, q.k, q.w
        )?;
    }
    Ok(())
}
