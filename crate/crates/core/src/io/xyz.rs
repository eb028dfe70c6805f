//! Plain-text XYZ and KITTI velodyne `.bin` clouds.

use std::io::Write;

use nalgebra::Point3;

use super::{lines, parse_f64, tokens, ParseError};
use crate::cloud::PointCloud;

/// Whitespace-separated rows; the first three columns are x, y, z and any
/// further columns are ignored. Blank lines and `#` comments are skipped.
pub fn parse_xyz(bytes: &[u8]) -> Result<PointCloud, ParseError> {
    let mut points = Vec::new();
    for (offset, line_no, line) in lines(bytes) {
        let mut tok = tokens(line).peekable();
        match tok.peek() {
            None => continue,
            Some(t) if t.starts_with(b"#") => continue,
            _ => {}
        }
        let mut xyz = [0.0; 3];
        for v in &mut xyz {
            let t = tok
                .next()
                .ok_or_else(|| ParseError::at_line(offset, line_no, "expected at least 3 columns"))?;
            *v = parse_f64(t)
                .filter(|v| v.is_finite())
                .ok_or_else(|| ParseError::at_line(offset, line_no, "invalid or non-finite number"))?;
        }
        points.push(Point3::new(xyz[0], xyz[1], xyz[2]));
    }
    if points.is_empty() {
        return Err(ParseError::at(bytes.len(), "no points"));
    }
    PointCloud::new(points).map_err(|e| ParseError::at(0, e.to_string()))
}

pub fn write_xyz<W: Write>(w: &mut W, cloud: &PointCloud) -> std::io::Result<()> {
    for p in cloud.points() {
        writeln!(w, "{} {} {}", p.x, p.y, p.z)?;
    }
    Ok(())
}

const KITTI_RECORD: usize = 16;

/// Packed little-endian `f32` records `(x, y, z, reflectance)`.
pub fn parse_kitti_bin(bytes: &[u8]) -> Result<PointCloud, ParseError> {
    if bytes.is_empty() {
        return Err(ParseError::at(0, "no points"));
    }
    let whole = bytes.len() / KITTI_RECORD * KITTI_RECORD;
    if whole != bytes.len() {
        return Err(ParseError::at(
            whole,
            format!("length {} is not a multiple of {KITTI_RECORD}", bytes.len()),
        ));
    }
    let mut points = Vec::with_capacity(bytes.len() / KITTI_RECORD);
    for (k, rec) in bytes.chunks_exact(KITTI_RECORD).enumerate() {
        let f = |i: usize| f32::from_le_bytes([rec[4 * i], rec[4 * i + 1], rec[4 * i + 2], rec[4 * i + 3]]) as f64;
        let p = Point3::new(f(0), f(1), f(2));
        if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
            return Err(ParseError::at(k * KITTI_RECORD, "non-finite coordinate"));
        }
        points.push(p);
    }
    PointCloud::new(points).map_err(|e| ParseError::at(0, e.to_string()))
}

/// Coordinates are narrowed to `f32`; reflectance is written as zero.
pub fn write_kitti_bin<W: Write>(w: &mut W, cloud: &PointCloud) -> std::io::Result<()> {
    for p in cloud.points() {
        for v in [p.x as f32, p.y as f32, p.z as f32, 0.0] {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}
