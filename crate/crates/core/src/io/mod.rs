//! Point-cloud and pose-file readers and writers.
//!
//! Every parser takes a byte slice and never panics; malformed input is
//! reported as a [`ParseError`] carrying the byte offset (and line number for
//! text formats) where parsing stopped.

mod pcd;
mod ply;
mod poses;
mod xyz;

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::cloud::PointCloud;
use crate::geom::RigidTransform;
use crate::{Error, Result};

pub use self::pcd::{parse_pcd, write_pcd};
pub use self::ply::{parse_ply, write_ply};
pub use self::poses::{parse_kitti_poses, parse_tum_poses, write_kitti_poses, write_tum_poses};
pub use self::xyz::{parse_kitti_bin, parse_xyz, write_kitti_bin, write_xyz};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("parse error at byte {offset}{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
pub struct ParseError {
    pub offset: usize,
    /// 1-based line number for text formats.
    pub line: Option<usize>,
    pub message: String,
}

impl ParseError {
    pub(crate) fn at(offset: usize, message: impl Into<String>) -> Self {
        Self {
            offset,
            line: None,
            message: message.into(),
        }
    }

    pub(crate) fn at_line(offset: usize, line: usize, message: impl Into<String>) -> Self {
        Self {
            offset,
            line: Some(line),
            message: message.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CloudFormat {
    Ply,
    Pcd,
    Xyz,
    /// Packed little-endian `f32` quadruples `(x, y, z, reflectance)`.
    KittiBin,
}

impl CloudFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "ply" => Some(CloudFormat::Ply),
            "pcd" => Some(CloudFormat::Pcd),
            "xyz" | "txt" => Some(CloudFormat::Xyz),
            "bin" => Some(CloudFormat::KittiBin),
            _ => None,
        }
    }
}

impl FromStr for CloudFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ply" => Ok(CloudFormat::Ply),
            "pcd" => Ok(CloudFormat::Pcd),
            "xyz" => Ok(CloudFormat::Xyz),
            "kitti-bin" | "kitti_bin" | "bin" => Ok(CloudFormat::KittiBin),
            other => Err(Error::invalid(format!(
                "unknown cloud format {other:?} (ply|pcd|xyz|kitti-bin)"
            ))),
        }
    }
}

impl fmt::Display for CloudFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CloudFormat::Ply => "ply",
            CloudFormat::Pcd => "pcd",
            CloudFormat::Xyz => "xyz",
            CloudFormat::KittiBin => "kitti-bin",
        })
    }
}

/// Text or binary payload for formats that support both.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Encoding {
    #[default]
    Ascii,
    Binary,
}

pub fn parse_cloud(bytes: &[u8], format: CloudFormat) -> Result<PointCloud, ParseError> {
    match format {
        CloudFormat::Ply => parse_ply(bytes),
        CloudFormat::Pcd => parse_pcd(bytes),
        CloudFormat::Xyz => parse_xyz(bytes),
        CloudFormat::KittiBin => parse_kitti_bin(bytes),
    }
}

fn resolve_format(path: &Path, format: Option<CloudFormat>) -> Result<CloudFormat> {
    format
        .or_else(|| CloudFormat::from_path(path))
        .ok_or_else(|| {
            Error::invalid(format!(
                "cannot infer cloud format of {}; pass it explicitly",
                path.display()
            ))
        })
}

/// Reads a cloud, inferring the format from the extension unless given.
pub fn load_cloud(path: impl AsRef<Path>, format: Option<CloudFormat>) -> Result<PointCloud> {
    let path = path.as_ref();
    let format = resolve_format(path, format)?;
    let bytes = fs::read(path)?;
    Ok(parse_cloud(&bytes, format)?)
}

pub fn write_cloud<W: Write>(
    w: &mut W,
    cloud: &PointCloud,
    format: CloudFormat,
    encoding: Encoding,
) -> std::io::Result<()> {
    match format {
        CloudFormat::Ply => write_ply(w, cloud, encoding),
        CloudFormat::Pcd => write_pcd(w, cloud, encoding),
        CloudFormat::Xyz => write_xyz(w, cloud),
        CloudFormat::KittiBin => write_kitti_bin(w, cloud),
    }
}

pub fn save_cloud(
    path: impl AsRef<Path>,
    cloud: &PointCloud,
    format: Option<CloudFormat>,
    encoding: Encoding,
) -> Result<()> {
    let path = path.as_ref();
    let format = resolve_format(path, format)?;
    let mut w = BufWriter::new(fs::File::create(path)?);
    write_cloud(&mut w, cloud, format, encoding)?;
    w.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PoseFormat {
    /// Twelve numbers per line: the row-major 3×4 `[R | t]`.
    Kitti,
    /// `timestamp tx ty tz qx qy qz qw` per line.
    Tum,
}

impl FromStr for PoseFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kitti" | "kitti-12" => Ok(PoseFormat::Kitti),
            "tum" | "tum-8" => Ok(PoseFormat::Tum),
            other => Err(Error::invalid(format!("unknown pose format {other:?} (kitti|tum)"))),
        }
    }
}

pub fn parse_poses(bytes: &[u8], format: PoseFormat) -> Result<Vec<RigidTransform>, ParseError> {
    match format {
        PoseFormat::Kitti => parse_kitti_poses(bytes),
        PoseFormat::Tum => Ok(parse_tum_poses(bytes)?.into_iter().map(|(_, t)| t).collect()),
    }
}

pub fn load_poses(path: impl AsRef<Path>, format: PoseFormat) -> Result<Vec<RigidTransform>> {
    let bytes = fs::read(path)?;
    Ok(parse_poses(&bytes, format)?)
}

/// Line iterator over a byte buffer yielding `(offset, line_number, line)`
/// with the terminator (and a trailing `\r`) stripped.
pub(crate) fn lines(bytes: &[u8]) -> impl Iterator<Item = (usize, usize, &[u8])> {
    let mut offset = 0;
    let mut number = 0;
    std::iter::from_fn(move || {
        if offset >= bytes.len() {
            return None;
        }
        let rest = &bytes[offset..];
        let len = rest.iter().position(|&b| b == b'\n').unwrap_or(rest.len());
        let mut line = &rest[..len];
        if line.last() == Some(&b'\r') {
            line = &line[..line.len() - 1];
        }
        let start = offset;
        offset += (len + 1).min(rest.len());
        number += 1;
        Some((start, number, line))
    })
}

/// Parses a finite `f64` from an ASCII token.
pub(crate) fn parse_f64(token: &[u8]) -> Option<f64> {
    std::str::from_utf8(token).ok()?.parse::<f64>().ok()
}

pub(crate) fn tokens(line: &[u8]) -> impl Iterator<Item = &[u8]> {
    line.split(|b| b.is_ascii_whitespace()).filter(|t| !t.is_empty())
}
