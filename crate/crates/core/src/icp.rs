//! Point-to-point ICP.
//!
//! The objective is the mean squared distance between each transformed source
//! point and its nearest reference point, so values stay comparable across
//! cloud sizes and voxel resolutions.

use nalgebra::{Matrix3, Point3, Vector3};

use crate::cloud::{KdIndex, PointCloud};
use crate::geom::RigidTransform;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IcpConfig {
    pub max_iterations: usize,
    /// Stop once `(E_prev − E) / E_prev` falls below this.
    pub rel_tolerance: f64,
    /// Pairs farther apart than this are dropped. `f64::INFINITY` pairs everything.
    pub max_correspondence_dist: f64,
}

impl Default for IcpConfig {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            rel_tolerance: 1e-6,
            max_correspondence_dist: f64::INFINITY,
        }
    }
}

impl IcpConfig {
    /// Settings for a closing refinement run until the objective stalls.
    pub fn full_convergence() -> Self {
        Self {
            max_iterations: 500,
            rel_tolerance: 1e-10,
            max_correspondence_dist: f64::INFINITY,
        }
    }

    pub fn with_max_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::invalid("max_iterations must be ≥ 1"));
        }
        if !(self.rel_tolerance > 0.0) {
            return Err(Error::invalid("rel_tolerance must be > 0"));
        }
        if !(self.max_correspondence_dist > 0.0) {
            return Err(Error::invalid("max_correspondence_dist must be > 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Correspondence {
    pub source: usize,
    pub reference: usize,
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IcpResult {
    pub transform: RigidTransform,
    /// Mean squared correspondence distance at `transform` (m²).
    pub objective: f64,
    /// Mean correspondence distance at `transform` (m).
    pub mean_p2p: f64,
    pub iterations_run: usize,
    pub converged: bool,
    /// Objective before the first iteration and after every accepted one.
    pub trace: Vec<f64>,
}

/// Nearest-neighbor pairing of `T·s` into the reference index, ordered by
/// source id. Pairs beyond `max_dist` are dropped.
pub fn correspondences(
    source: &PointCloud,
    reference: &KdIndex,
    t: &RigidTransform,
    max_dist: f64,
) -> Result<Vec<Correspondence>> {
    if source.is_empty() {
        return Err(Error::invalid("source cloud is empty"));
    }
    let max_sq = max_dist * max_dist;
    let pairs: Vec<Correspondence> = source
        .points()
        .iter()
        .enumerate()
        .filter_map(|(i, s)| {
            let (r, d2) = reference.nearest_sq(&t.apply(s));
            (d2 <= max_sq).then(|| Correspondence {
                source: i,
                reference: r,
                distance: d2.sqrt(),
            })
        })
        .collect();
    if pairs.is_empty() {
        return Err(Error::NoOverlap { max_dist });
    }
    Ok(pairs)
}

fn mean_sq(pairs: &[Correspondence]) -> f64 {
    pairs.iter().map(|c| c.distance * c.distance).sum::<f64>() / pairs.len() as f64
}

/// Mean squared nearest-neighbor distance of `T·S` against the reference,
/// with every source point paired.
pub fn objective(source: &PointCloud, reference: &KdIndex, t: &RigidTransform) -> Result<f64> {
    objective_within(source, reference, t, f64::INFINITY)
}

pub fn objective_within(
    source: &PointCloud,
    reference: &KdIndex,
    t: &RigidTransform,
    max_dist: f64,
) -> Result<f64> {
    Ok(mean_sq(&correspondences(source, reference, t, max_dist)?))
}

/// Least-squares rigid transform taking each `from` point onto its paired
/// `to` point (weighted Kabsch with reflection correction).
pub fn solve_rigid(pairs: &[(Point3<f64>, Point3<f64>, f64)]) -> Result<RigidTransform> {
    if pairs.len() < 3 {
        return Err(Error::DegenerateGeometry(format!(
            "need ≥ 3 pairs, got {}",
            pairs.len()
        )));
    }
    let total: f64 = pairs.iter().map(|p| p.2).sum();
    if !(total > 0.0) || pairs.iter().any(|p| !(p.2 >= 0.0)) {
        return Err(Error::DegenerateGeometry("weights must be ≥ 0 with positive sum".into()));
    }
    let mut from_c = Vector3::zeros();
    let mut to_c = Vector3::zeros();
    for (a, b, w) in pairs {
        from_c += a.coords * *w;
        to_c += b.coords * *w;
    }
    from_c /= total;
    to_c /= total;

    let mut h = Matrix3::zeros();
    let mut spread = Matrix3::zeros();
    for (a, b, w) in pairs {
        let da = a.coords - from_c;
        h += (da * (b.coords - to_c).transpose()) * *w;
        spread += (da * da.transpose()) * *w;
    }
    // Collinear or coincident source points leave the rotation about their
    // common line undetermined.
    let sv = spread.symmetric_eigenvalues();
    let (smax, smid) = {
        let mut s = [sv[0], sv[1], sv[2]];
        s.sort_by(|a, b| b.total_cmp(a));
        (s[0], s[1])
    };
    if !(smax > 0.0) || smid <= 1e-12 * smax {
        return Err(Error::DegenerateGeometry(
            "source points are collinear or coincident".into(),
        ));
    }

    let svd = h.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::Numerical("SVD failed to converge".into())),
    };
    let v = v_t.transpose();
    let mut d = Matrix3::identity();
    if (v * u.transpose()).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    let rotation = v * d * u.transpose();
    let translation = to_c - rotation * from_c;
    Ok(RigidTransform::from_parts(rotation, translation))
}

/// Alternates nearest-neighbor pairing and [`solve_rigid`] from `initial`.
///
/// Stops when the relative objective decrease drops below
/// `cfg.rel_tolerance`, the objective reaches zero, or `cfg.max_iterations`
/// updates have been tried. A step that would raise the objective is
/// rejected, so the trace is non-increasing.
pub fn run_icp(
    source: &PointCloud,
    reference: &PointCloud,
    initial: &RigidTransform,
    cfg: &IcpConfig,
) -> Result<IcpResult> {
    if source.len() < 3 || reference.len() < 3 {
        return Err(Error::invalid("ICP needs at least 3 points in each cloud"));
    }
    let index = KdIndex::build(reference)?;
    run_icp_indexed(source, &index, initial, cfg)
}

/// [`run_icp`] against a prebuilt reference index.
pub fn run_icp_indexed(
    source: &PointCloud,
    reference: &KdIndex,
    initial: &RigidTransform,
    cfg: &IcpConfig,
) -> Result<IcpResult> {
    cfg.validate()?;
    let mut t = *initial;
    let mut pairs = correspondences(source, reference, &t, cfg.max_correspondence_dist)?;
    let mut current = mean_sq(&pairs);
    let mut trace = vec![current];
    let mut iterations_run = 0;
    let mut converged = current == 0.0;

    let mut buf = Vec::with_capacity(pairs.len());
    while !converged && iterations_run < cfg.max_iterations {
        iterations_run += 1;
        buf.clear();
        buf.extend(pairs.iter().map(|c| {
            (
                source.points()[c.source],
                *reference.point(c.reference),
                1.0,
            )
        }));
        let candidate = solve_rigid(&buf)?;
        let next_pairs =
            correspondences(source, reference, &candidate, cfg.max_correspondence_dist)?;
        let next = mean_sq(&next_pairs);
        if next > current {
            converged = true;
            break;
        }
        let rel = (current - next) / current;
        t = candidate;
        pairs = next_pairs;
        current = next;
        trace.push(current);
        if current == 0.0 || rel < cfg.rel_tolerance {
            converged = true;
        }
    }

    let mean_p2p = pairs.iter().map(|c| c.distance).sum::<f64>() / pairs.len() as f64;
    Ok(IcpResult {
        transform: t,
        objective: current,
        mean_p2p,
        iterations_run,
        converged,
        trace,
    })
}
