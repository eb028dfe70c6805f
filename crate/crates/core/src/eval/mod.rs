//! Benchmark protocol: overlap-gated pair selection, registration metrics and
//! statistical comparison of methods.

mod stats;

use std::collections::HashMap;

use crate::cloud::{voxel_downsample, KdIndex, PointCloud};
use crate::geom::{rotation_error, translation_error, RigidTransform};
use crate::{Error, Result};

pub use self::stats::{f_sf, median, quantile_sorted, reg_inc_beta, summarize, welch_anova, Summary, WelchAnova};

/// A registration problem drawn from a sequence: register `target_id` (the
/// source) onto `ref_id` (the reference).
#[derive(Clone, Debug, PartialEq)]
pub struct PairSpec {
    pub ref_id: usize,
    pub target_id: usize,
    /// Symmetric overlap fraction in `[0, 1]`.
    pub overlap: f64,
    /// Ground truth mapping target-frame points into the reference frame.
    pub gt: Option<RigidTransform>,
}

impl PairSpec {
    pub fn id(&self) -> String {
        format!("{:04}-{:04}", self.ref_id, self.target_id)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub pair: PairSpec,
    pub method: String,
    pub seed: u64,
    pub mean_p2p: f64,
    pub trans_err: Option<f64>,
    pub rot_err: Option<f64>,
    pub runtime: f64,
}

impl RunRecord {
    /// Computes the error columns from the pair's ground truth, if any.
    pub fn new(
        pair: PairSpec,
        method: impl Into<String>,
        seed: u64,
        estimate: &RigidTransform,
        mean_p2p: f64,
        runtime: f64,
    ) -> Result<Self> {
        let (trans_err, rot_err) = match &pair.gt {
            Some(gt) => (Some(translation_error(estimate, gt)), Some(rotation_error(estimate, gt))),
            None => (None, None),
        };
        let record = Self {
            pair,
            method: method.into(),
            seed,
            mean_p2p,
            trans_err,
            rot_err,
            runtime,
        };
        let metrics = [Some(mean_p2p), trans_err, rot_err, Some(runtime)];
        if metrics.iter().flatten().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid("run metrics must be finite and non-negative"));
        }
        Ok(record)
    }
}

/// Fraction of `a`'s points with a neighbor of `b` within `radius`, after
/// both clouds are voxel-downsampled at `radius`.
pub fn overlap_fraction(a: &PointCloud, b: &PointCloud, radius: f64) -> Result<f64> {
    overlap_fraction_voxel(a, b, radius, radius)
}

/// [`overlap_fraction`] with the downsampling voxel decoupled from the
/// neighbor radius.
pub fn overlap_fraction_voxel(a: &PointCloud, b: &PointCloud, radius: f64, voxel: f64) -> Result<f64> {
    check_overlap_args(a, b, radius)?;
    let a = voxel_downsample(a, voxel)?;
    let b = KdIndex::build(&voxel_downsample(b, voxel)?)?;
    Ok(directional(&a, &b, radius))
}

/// Minimum of the two directional overlaps.
pub fn symmetric_overlap(a: &PointCloud, b: &PointCloud, radius: f64) -> Result<f64> {
    check_overlap_args(a, b, radius)?;
    let da = voxel_downsample(a, radius)?;
    let db = voxel_downsample(b, radius)?;
    let ia = KdIndex::build(&da)?;
    let ib = KdIndex::build(&db)?;
    Ok(directional(&da, &ib, radius).min(directional(&db, &ia, radius)))
}

fn check_overlap_args(a: &PointCloud, b: &PointCloud, radius: f64) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("overlap needs non-empty clouds"));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::invalid(format!("overlap radius must be positive, got {radius}")));
    }
    Ok(())
}

fn directional(a: &PointCloud, b: &KdIndex, radius: f64) -> f64 {
    let hits = a.points().iter().filter(|p| b.has_neighbor_within(p, radius)).count();
    hits as f64 / a.len() as f64
}

/// Greedy walk over an ordered sequence.
///
/// Starting from reference `r`, the target advances while the next cloud
/// still overlaps `r` by at least `threshold`; the pair `(r, target)` is
/// emitted and `target` becomes the new reference. A reference is always
/// paired with at least its immediate successor. Overlaps are the symmetric
/// voxelized fraction at `radius`; when `poses` (world-from-scan) are given,
/// clouds are compared in the world frame and each pair carries
/// `gt = P_ref⁻¹ · P_target`, otherwise clouds are compared as stored.
pub fn select_pairs(
    clouds: &[PointCloud],
    poses: Option<&[RigidTransform]>,
    threshold: f64,
    radius: f64,
) -> Result<Vec<PairSpec>> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::invalid(format!("overlap threshold {threshold} outside [0, 1]")));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::invalid(format!("overlap radius must be positive, got {radius}")));
    }
    if let Some(p) = poses {
        if p.len() != clouds.len() {
            return Err(Error::invalid(format!(
                "{} poses for {} clouds",
                p.len(),
                clouds.len()
            )));
        }
    }
    if clouds.len() < 2 {
        return Ok(Vec::new());
    }

    let mut down = Vec::with_capacity(clouds.len());
    for (i, c) in clouds.iter().enumerate() {
        let c = match poses {
            Some(p) => c.transformed(&p[i]),
            None => c.clone(),
        };
        let d = voxel_downsample(&c, radius)?;
        let index = KdIndex::build(&d)?;
        down.push((d, index));
    }
    let mut cache: HashMap<(usize, usize), f64> = HashMap::new();
    let mut overlap = |i: usize, j: usize| -> f64 {
        *cache.entry((i, j)).or_insert_with(|| {
            directional(&down[i].0, &down[j].1, radius).min(directional(&down[j].0, &down[i].1, radius))
        })
    };

    let n = clouds.len();
    let mut pairs = Vec::new();
    let mut reference = 0;
    while reference + 1 < n {
        let mut target = reference + 1;
        while target + 1 < n && overlap(reference, target + 1) >= threshold {
            target += 1;
        }
        let gt = poses.map(|p| p[reference].inverse().compose(&p[target]));
        pairs.push(PairSpec {
            ref_id: reference,
            target_id: target,
            overlap: overlap(reference, target),
            gt,
        });
        reference = target;
    }
    Ok(pairs)
}

/// Mean (unsquared) nearest-neighbor distance from `t · s` to `reference`.
pub fn mean_p2p_distance(source: &PointCloud, reference: &PointCloud, t: &RigidTransform) -> Result<f64> {
    if source.is_empty() || reference.is_empty() {
        return Err(Error::invalid("mean_p2p_distance needs non-empty clouds"));
    }
    let index = KdIndex::build(reference)?;
    Ok(mean_p2p_indexed(source, &index, t))
}

pub fn mean_p2p_indexed(source: &PointCloud, reference: &KdIndex, t: &RigidTransform) -> f64 {
    let sum: f64 = source.points().iter().map(|p| reference.nearest(&t.apply(p)).1).sum();
    sum / source.len() as f64
}
