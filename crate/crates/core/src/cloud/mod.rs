//! Point-cloud container, voxel-grid downsampling and exact nearest-neighbor search.

mod kdtree;

use std::collections::HashMap;

use nalgebra::{Point3, Vector3};

pub use self::kdtree::KdIndex;
use crate::geom::RigidTransform;
use crate::{Error, Result};

/// A flat list of 3D points in meters. All coordinates are finite.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PointCloud {
    points: Vec<Point3<f64>>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3<f64>>) -> Result<Self> {
        if let Some(i) = points
            .iter()
            .position(|p| !p.coords.iter().all(|v| v.is_finite()))
        {
            return Err(Error::invalid(format!("point {i} has non-finite coordinates")));
        }
        Ok(Self { points })
    }

    pub fn from_xyz(xyz: &[[f64; 3]]) -> Result<Self> {
        Self::new(xyz.iter().map(|p| Point3::new(p[0], p[1], p[2])).collect())
    }

    pub fn points(&self) -> &[Point3<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn transformed(&self, t: &RigidTransform) -> PointCloud {
        PointCloud {
            points: self.points.iter().map(|p| t.apply(p)).collect(),
        }
    }

    /// Axis-aligned bounding box `(min, max)`, `None` when empty.
    pub fn bounding_box(&self) -> Option<(Point3<f64>, Point3<f64>)> {
        let first = *self.points.first()?;
        Some(self.points.iter().fold((first, first), |(lo, hi), p| {
            (lo.inf(p), hi.sup(p))
        }))
    }

    pub fn centroid(&self) -> Option<Point3<f64>> {
        if self.points.is_empty() {
            return None;
        }
        let sum: Vector3<f64> = self.points.iter().map(|p| p.coords).sum();
        Some(Point3::from(sum / self.points.len() as f64))
    }
}

/// Replaces the points in each occupied `voxel`-sized cell by their centroid.
///
/// Cells are indexed by `floor(coordinate / voxel)`. Output order follows the
/// first appearance of each cell in the input.
pub fn voxel_downsample(cloud: &PointCloud, voxel: f64) -> Result<PointCloud> {
    if !(voxel > 0.0 && voxel.is_finite()) {
        return Err(Error::invalid(format!("voxel size must be > 0, got {voxel}")));
    }
    if cloud.is_empty() {
        return Err(Error::invalid("cannot downsample an empty cloud"));
    }
    let mut slot: HashMap<[i64; 3], usize> = HashMap::with_capacity(cloud.len());
    let mut acc: Vec<(Vector3<f64>, usize)> = Vec::new();
    for p in cloud.points() {
        let key = [
            (p.x / voxel).floor() as i64,
            (p.y / voxel).floor() as i64,
            (p.z / voxel).floor() as i64,
        ];
        let i = *slot.entry(key).or_insert_with(|| {
            acc.push((Vector3::zeros(), 0));
            acc.len() - 1
        });
        acc[i].0 += p.coords;
        acc[i].1 += 1;
    }
    let points = acc
        .into_iter()
        .map(|(sum, n)| {
            if n == 1 {
                Point3::from(sum)
            } else {
                Point3::from(sum / n as f64)
            }
        })
        .collect();
    Ok(PointCloud { points })
}
