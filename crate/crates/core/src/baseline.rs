//! Comparison initializers: a nested coarse-to-fine pyramid grid search and a
//! pure random search over starting poses.

use std::time::Instant;

use nalgebra::{Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cloud::PointCloud;
use crate::geom::{pose_to_transform, Axes, PoseVector, RigidTransform, SearchBounds};
use crate::icp::IcpConfig;
use crate::optimizer::{
    best_entry, finish, seed_samples, HistoryEntry, Problem, RegistrationResult, SampleSource, Stage,
};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct PyramidConfig {
    /// Nodes per axis on the first level.
    pub coarse_grid: usize,
    /// Nodes per axis of each refinement grid.
    pub refine_grid: usize,
    pub top_k: usize,
    pub levels: usize,
    pub bounds: SearchBounds,
    /// Voxel size applied to both clouds (m).
    pub voxel: f64,
    /// Neighbor radius of the fitness count; `None` means twice the voxel size.
    pub fitness_radius: Option<f64>,
}

impl Default for PyramidConfig {
    fn default() -> Self {
        Self {
            coarse_grid: 12,
            refine_grid: 6,
            top_k: 10,
            levels: 3,
            bounds: SearchBounds::default_experiment(),
            voxel: 0.7,
            fitness_radius: None,
        }
    }
}

impl PyramidConfig {
    pub fn validate(&self) -> Result<()> {
        if self.coarse_grid < 1 || self.refine_grid < 1 || self.top_k < 1 || self.levels < 1 {
            return Err(Error::invalid("pyramid grid counts and levels must be ≥ 1"));
        }
        if !(self.voxel > 0.0) {
            return Err(Error::invalid("voxel must be > 0"));
        }
        if matches!(self.fitness_radius, Some(r) if !(r > 0.0)) {
            return Err(Error::invalid("fitness radius must be > 0"));
        }
        Ok(())
    }

    fn radius(&self) -> f64 {
        self.fitness_radius.unwrap_or(2.0 * self.voxel)
    }

    /// Closed-form number of fitness evaluations at each level of one stage.
    ///
    /// With the defaults this is `coarse³` followed by `top_k · refine³` per
    /// refinement level.
    pub fn level_evaluations(&self) -> Vec<usize> {
        self.closed_form().0
    }

    /// ICP runs closing one stage.
    pub fn stage_icp_runs(&self) -> usize {
        self.closed_form().1
    }

    fn closed_form(&self) -> (Vec<usize>, usize) {
        let mut levels = vec![self.coarse_grid.pow(3)];
        let mut survivors = self.top_k.min(levels[0]);
        for _ in 1..self.levels {
            let n = survivors * self.refine_grid.pow(3);
            levels.push(n);
            // Parents stay in the ranking pool next to their refinements.
            survivors = self.top_k.min(n + survivors);
        }
        (levels, survivors)
    }
}

/// Per-stage evaluation counters of a pyramid search.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StageCounts {
    /// Fitness evaluations at each level.
    pub level_evaluations: Vec<usize>,
    pub icp_runs: usize,
}

impl StageCounts {
    pub fn total(&self) -> usize {
        self.level_evaluations.iter().sum::<usize>() + self.icp_runs
    }
}

#[derive(Clone, Debug)]
pub struct PyramidOutcome {
    /// History holds the ICP runs that close each stage.
    pub result: RegistrationResult,
    /// Rotation stage, then translation stage.
    pub stages: Vec<StageCounts>,
}

#[derive(Clone, Copy, Debug)]
struct Node {
    /// Values of the three searched axes.
    at: [f64; 3],
    fitness: usize,
}

/// Nested pyramid search: rotation (zero translation), then translation with
/// the best rotation fixed.
///
/// Each level ranks grid nodes by how many downsampled source points land
/// within the fitness radius of a reference point, keeps the `top_k`, and
/// builds a `refine_grid³` grid around each with spacing half the previous
/// cell width. After the last level ICP runs from the surviving nodes and the
/// lowest objective wins.
pub fn pyramid_search(
    source: &PointCloud,
    reference: &PointCloud,
    cfg: &PyramidConfig,
    icp: &IcpConfig,
) -> Result<PyramidOutcome> {
    cfg.validate()?;
    icp.validate()?;
    let started = Instant::now();
    let problem = Problem::new(source, reference, Some(cfg.voxel))?;
    let mut history = Vec::new();

    let rot_counts = pyramid_stage(&problem, cfg, icp, Axes::Rotation, &Matrix3::identity(), &mut history);
    let rotation = match best_entry(&history) {
        Some((i, _)) => *history[i].result.expect("successful entry").rotation(),
        None => Matrix3::identity(),
    };
    let split = history.len();
    let trans_counts = pyramid_stage(&problem, cfg, icp, Axes::Translation, &rotation, &mut history);
    debug_assert!(history.len() >= split);

    let result = finish(&problem, source, reference, history, None, started)?;
    Ok(PyramidOutcome {
        result,
        stages: vec![rot_counts, trans_counts],
    })
}

fn node_transform(axes: Axes, at: &[f64; 3], rotation: &Matrix3<f64>) -> (PoseVector, RigidTransform) {
    match axes {
        Axes::Rotation => {
            let p = PoseVector::new(0.0, 0.0, 0.0, at[0], at[1], at[2]);
            (p, pose_to_transform(&p).expect("finite grid node"))
        }
        _ => {
            let p = PoseVector::new(at[0], at[1], at[2], 0.0, 0.0, 0.0);
            (p, RigidTransform::from_parts(*rotation, Vector3::new(at[0], at[1], at[2])))
        }
    }
}

fn fitness(problem: &Problem, t: &RigidTransform, radius: f64) -> usize {
    problem
        .source
        .points()
        .iter()
        .filter(|p| problem.index.has_neighbor_within(&t.apply(p), radius))
        .count()
}

/// Keeps the `k` fittest nodes; earlier nodes win ties.
fn top_k(mut nodes: Vec<Node>, k: usize) -> Vec<Node> {
    // Stable sort preserves index order among equal fitness.
    nodes.sort_by_key(|n| std::cmp::Reverse(n.fitness));
    nodes.truncate(k);
    nodes
}

fn pyramid_stage(
    problem: &Problem,
    cfg: &PyramidConfig,
    icp: &IcpConfig,
    axes: Axes,
    rotation: &Matrix3<f64>,
    history: &mut Vec<HistoryEntry>,
) -> StageCounts {
    let idx = axes.indices();
    let lo = [cfg.bounds.lo()[idx[0]], cfg.bounds.lo()[idx[1]], cfg.bounds.lo()[idx[2]]];
    let hi = [cfg.bounds.hi()[idx[0]], cfg.bounds.hi()[idx[1]], cfg.bounds.hi()[idx[2]]];
    let radius = cfg.radius();
    let score = |at: [f64; 3]| {
        let (_, t) = node_transform(axes, &at, rotation);
        Node {
            at,
            fitness: fitness(problem, &t, radius),
        }
    };

    let mut counts = StageCounts::default();
    let n = cfg.coarse_grid;
    let mut width = [0.0; 3];
    for k in 0..3 {
        width[k] = (hi[k] - lo[k]) / n as f64;
    }
    let mut nodes = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                let ijk = [i, j, l];
                let mut at = [0.0; 3];
                for k in 0..3 {
                    at[k] = lo[k] + (ijk[k] as f64 + 0.5) * width[k];
                }
                nodes.push(score(at));
            }
        }
    }
    counts.level_evaluations.push(nodes.len());
    let mut best = top_k(nodes, cfg.top_k);

    let m = cfg.refine_grid;
    for _ in 1..cfg.levels {
        let mut delta = [0.0; 3];
        for k in 0..3 {
            delta[k] = width[k] / 2.0;
        }
        let mut pool = Vec::with_capacity(best.len() * m * m * m + best.len());
        let mut evaluated = 0;
        for parent in &best {
            for i in 0..m {
                for j in 0..m {
                    for l in 0..m {
                        let ijk = [i, j, l];
                        let mut at = [0.0; 3];
                        for k in 0..3 {
                            let offset = ijk[k] as f64 - (m as f64 - 1.0) / 2.0;
                            at[k] = (parent.at[k] + offset * delta[k]).clamp(lo[k], hi[k]);
                        }
                        pool.push(score(at));
                        evaluated += 1;
                    }
                }
            }
        }
        // Parents compete with their refinements without being re-scored.
        pool.extend(best.iter().copied());
        counts.level_evaluations.push(evaluated);
        best = top_k(pool, cfg.top_k);
        width = delta;
    }

    for node in &best {
        let (pose, initial) = node_transform(axes, &node.at, rotation);
        let stage = match axes {
            Axes::Rotation => Stage::Rotation,
            _ => Stage::Translation,
        };
        history.push(problem.evaluate(stage, SampleSource::Grid, pose, initial, icp));
        counts.icp_runs += 1;
    }
    counts
}

#[derive(Clone, Debug, PartialEq)]
pub struct RandomSearchConfig {
    pub budget: usize,
    pub bounds: SearchBounds,
    /// Voxel size applied to both clouds; `None` searches the raw clouds.
    pub voxel: Option<f64>,
    pub icp: IcpConfig,
    pub polish: IcpConfig,
    pub seed: u64,
}

impl RandomSearchConfig {
    pub fn new(budget: usize, bounds: SearchBounds, seed: u64) -> Self {
        Self {
            budget,
            bounds,
            voxel: None,
            icp: IcpConfig::default(),
            polish: IcpConfig::full_convergence(),
            seed,
        }
    }
}

/// Evaluates `budget` uniform poses and refines the best one.
pub fn random_search(source: &PointCloud, reference: &PointCloud, cfg: &RandomSearchConfig) -> Result<RegistrationResult> {
    if cfg.budget < 1 {
        return Err(Error::invalid("random search budget must be ≥ 1"));
    }
    cfg.icp.validate()?;
    cfg.polish.validate()?;
    let started = Instant::now();
    let problem = Problem::new(source, reference, cfg.voxel)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let history = seed_samples(&cfg.bounds, cfg.budget, &mut rng)
        .into_iter()
        .map(|pose| {
            let initial = pose_to_transform(&pose)?;
            Ok(problem.evaluate(Stage::Search, SampleSource::Random, pose, initial, &cfg.icp))
        })
        .collect::<Result<Vec<_>>>()?;
    finish(&problem, source, reference, history, Some(&cfg.polish), started)
}
