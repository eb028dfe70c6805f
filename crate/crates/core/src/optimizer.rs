//! The BO-ICP search over initial ICP poses.
//!
//! Each objective evaluation runs ICP from a candidate pose and records the
//! converged mean squared correspondence distance. A Gaussian process models
//! that value as a function of the (normalized) starting pose and expected
//! improvement picks the next start. The best start's ICP result is refined by
//! a final full-convergence ICP pass.
//!
//! Two modes are provided. [`Mode::Full`] searches all six pose components at
//! once. [`Mode::Nested`] searches rotation with zero translation first, then
//! translation with the best rotation held fixed; each stage gets the full
//! `(n_random, n_iterations)` budget.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::acquisition::{argmax_ei, AcquisitionConfig};
use crate::cloud::{voxel_downsample, KdIndex, PointCloud};
use crate::geom::{
    pose_to_transform, transform_to_pose, Axes, PoseVector, RigidTransform, SearchBounds,
};
use crate::icp::{objective, run_icp_indexed, IcpConfig, IcpResult};
use crate::surrogate::{normalize, GpModel, SurrogateConfig};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Full,
    Nested,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "full" | "full6dof" => Ok(Mode::Full),
            "nested" => Ok(Mode::Nested),
            other => Err(Error::invalid(format!("unknown mode {other:?} (full|nested)"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Full => "full",
            Mode::Nested => "nested",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoConfig {
    /// Random poses evaluated before the acquisition loop.
    pub n_random: usize,
    /// Acquisition-driven evaluations.
    pub n_iterations: usize,
    pub bounds: SearchBounds,
    /// Voxel size applied to both clouds before searching (m).
    pub voxel: f64,
    pub mode: Mode,
    pub seed: u64,
    /// ICP run at every objective evaluation.
    pub icp: IcpConfig,
    /// ICP run once from the best result at the end, on the full-resolution clouds.
    pub polish: IcpConfig,
    pub acq: AcquisitionConfig,
    pub surrogate: SurrogateConfig,
    /// Interpret acquired rotations as increments about the incumbent best
    /// random seed instead of absolute Euler angles.
    pub recenter: bool,
    /// Poses used in place of the first random draws (e.g. a motion prior).
    pub seed_poses: Vec<PoseVector>,
}

impl BoConfig {
    pub fn new(n_random: usize, n_iterations: usize, voxel: f64) -> Self {
        Self {
            n_random,
            n_iterations,
            bounds: SearchBounds::default_experiment(),
            voxel,
            mode: Mode::Nested,
            seed: 0,
            icp: IcpConfig::default(),
            polish: IcpConfig::full_convergence(),
            acq: AcquisitionConfig::default(),
            surrogate: SurrogateConfig::default(),
            recenter: false,
            seed_poses: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_random < 1 {
            return Err(Error::invalid("n_random must be ≥ 1"));
        }
        if !(self.voxel > 0.0) {
            return Err(Error::invalid("voxel must be > 0"));
        }
        self.icp.validate()?;
        self.polish.validate()?;
        self.acq.validate()
    }

    /// Objective evaluations one run performs.
    pub fn budget(&self) -> usize {
        let per_stage = self.n_random + self.n_iterations;
        match self.mode {
            Mode::Full => per_stage,
            Mode::Nested => 2 * per_stage,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    A,
    B,
    C,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(Preset::A),
            "B" | "b" => Ok(Preset::B),
            "C" | "c" => Ok(Preset::C),
            other => Err(Error::invalid(format!("unknown preset {other:?} (A|B|C)"))),
        }
    }
}

impl Preset {
    /// `(n_random, n_iterations, voxel)`.
    pub fn parameters(self) -> (usize, usize, f64) {
        match self {
            Preset::A => (10, 20, 0.7),
            Preset::B => (20, 35, 0.7),
            Preset::C => (30, 60, 0.6),
        }
    }

    pub fn config(self) -> BoConfig {
        let (n_random, n_iterations, voxel) = self.parameters();
        BoConfig::new(n_random, n_iterations, voxel)
    }
}

/// Named experiment configuration: `"A"`, `"B"` or `"C"`.
pub fn preset(name: &str) -> Result<BoConfig> {
    Ok(name.parse::<Preset>()?.config())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Full,
    Rotation,
    Translation,
    /// Baseline searches.
    Search,
}

impl Stage {
    fn axes(self) -> Axes {
        match self {
            Stage::Full | Stage::Search => Axes::Full,
            Stage::Rotation => Axes::Rotation,
            Stage::Translation => Axes::Translation,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleSource {
    Random,
    /// Supplied through [`BoConfig::seed_poses`].
    Seeded,
    Acquired,
    /// Acquisition found zero EI everywhere and fell back to the lowest mean.
    AcquiredFallback,
    Grid,
}

/// One objective evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct HistoryEntry {
    pub stage: Stage,
    pub source: SampleSource,
    /// The search variable. In nested stages the inactive components hold the
    /// values the stage fixed.
    pub pose: PoseVector,
    /// The ICP starting transform the pose stands for.
    pub initial: RigidTransform,
    /// Converged ICP objective, `None` when the evaluation failed.
    pub objective: Option<f64>,
    /// ICP output transform, `None` when the evaluation failed.
    pub result: Option<RigidTransform>,
}

#[derive(Clone, Debug)]
pub struct RegistrationResult {
    /// Final transform after the closing ICP refinement.
    pub best_transform: RigidTransform,
    /// Minimum objective over the history (downsampled clouds, before refinement).
    pub best_objective: f64,
    /// Index into `history` of the entry achieving `best_objective`.
    pub best_index: usize,
    /// ICP output of the best history entry, before refinement.
    pub unpolished_transform: RigidTransform,
    /// Full-resolution objective at `unpolished_transform`.
    pub unpolished_objective: f64,
    /// Full-resolution objective at `best_transform`; never above
    /// `unpolished_objective`.
    pub polished_objective: f64,
    pub history: Vec<HistoryEntry>,
    pub evaluations: usize,
    pub wall_time: f64,
}

/// Uniform draws, one per dimension, inside `b`.
pub fn seed_samples<R: Rng + ?Sized>(b: &SearchBounds, n: usize, rng: &mut R) -> Vec<PoseVector> {
    seed_samples_axes(b, Axes::Full, &PoseVector::default(), n, rng)
}

/// Like [`seed_samples`] over the `axes` components; others come from `fill`.
pub fn seed_samples_axes<R: Rng + ?Sized>(
    b: &SearchBounds,
    axes: Axes,
    fill: &PoseVector,
    n: usize,
    rng: &mut R,
) -> Vec<PoseVector> {
    (0..n)
        .map(|_| {
            let mut a = fill.to_array();
            for &i in axes.indices() {
                let u: f64 = rng.random();
                a[i] = (b.lo()[i] + u * (b.hi()[i] - b.lo()[i])).min(b.hi()[i]);
            }
            PoseVector::from_array(a)
        })
        .collect()
}

/// Downsampled clouds and reference index shared by every evaluation of a run.
pub(crate) struct Problem {
    pub source: PointCloud,
    pub index: KdIndex,
    pub downsampled: bool,
}

impl Problem {
    pub fn new(source: &PointCloud, reference: &PointCloud, voxel: Option<f64>) -> Result<Self> {
        let (source, reference) = match voxel {
            Some(v) => (voxel_downsample(source, v)?, voxel_downsample(reference, v)?),
            None => (source.clone(), reference.clone()),
        };
        if source.len() < 3 || reference.len() < 3 {
            return Err(Error::invalid(format!(
                "need ≥ 3 points per cloud after downsampling, have {} and {}",
                source.len(),
                reference.len()
            )));
        }
        let index = KdIndex::build(&reference)?;
        Ok(Self {
            source,
            index,
            downsampled: voxel.is_some(),
        })
    }

    pub fn icp(&self, initial: &RigidTransform, cfg: &IcpConfig) -> Result<IcpResult> {
        run_icp_indexed(&self.source, &self.index, initial, cfg)
    }

    /// Runs ICP from `initial` and records the outcome.
    pub fn evaluate(
        &self,
        stage: Stage,
        source: SampleSource,
        pose: PoseVector,
        initial: RigidTransform,
        cfg: &IcpConfig,
    ) -> HistoryEntry {
        let outcome = self.icp(&initial, cfg).ok();
        HistoryEntry {
            stage,
            source,
            pose,
            initial,
            objective: outcome.as_ref().map(|r| r.objective),
            result: outcome.map(|r| r.transform),
        }
    }
}

/// Earliest entry with the smallest objective among `entries[range]`.
pub(crate) fn best_entry(entries: &[HistoryEntry]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, e) in entries.iter().enumerate() {
        if let Some(v) = e.objective {
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((i, v));
            }
        }
    }
    best
}

/// Picks the best entry of `history`, refines it on the full-resolution
/// clouds, and packages the result.
pub(crate) fn finish(
    problem: &Problem,
    source: &PointCloud,
    reference: &PointCloud,
    history: Vec<HistoryEntry>,
    polish: Option<&IcpConfig>,
    started: Instant,
) -> Result<RegistrationResult> {
    let Some((best_index, best_objective)) = best_entry(&history) else {
        return Err(Error::RegistrationFailed { history });
    };
    let unpolished = history[best_index].result.expect("successful entry has a result");
    let full = if problem.downsampled {
        &KdIndex::build(reference)?
    } else {
        &problem.index
    };
    let unpolished_objective = objective(source, full, &unpolished)?;
    let (best_transform, polished_objective) = match polish {
        Some(cfg) => match run_icp_indexed(source, full, &unpolished, cfg) {
            Ok(r) if r.objective <= unpolished_objective => (r.transform, r.objective),
            _ => (unpolished, unpolished_objective),
        },
        None => (unpolished, unpolished_objective),
    };
    Ok(RegistrationResult {
        best_transform,
        best_objective,
        best_index,
        unpolished_transform: unpolished,
        unpolished_objective,
        polished_objective,
        evaluations: history.len(),
        history,
        wall_time: started.elapsed().as_secs_f64(),
    })
}

/// Maps a stage's search vector to an ICP starting transform.
enum StartMap {
    /// `pose_to_transform(p)`.
    Plain,
    /// Rotation from `p` composed onto `base`, translation taken from `p`.
    Recentered { base: nalgebra::Matrix3<f64> },
    /// Fixed rotation, translation from `p`.
    FixedRotation { rotation: nalgebra::Matrix3<f64> },
}

impl StartMap {
    fn start(&self, p: &PoseVector) -> Result<RigidTransform> {
        let t = pose_to_transform(p)?;
        Ok(match self {
            StartMap::Plain => t,
            StartMap::Recentered { base } => {
                RigidTransform::from_parts(base * t.rotation(), *t.translation())
            }
            StartMap::FixedRotation { rotation } => {
                RigidTransform::from_parts(*rotation, *t.translation())
            }
        })
    }
}

struct StageRunner<'a> {
    problem: &'a Problem,
    cfg: &'a BoConfig,
    stage: Stage,
    fill: PoseVector,
}

impl StageRunner<'_> {
    /// Runs seeding and the acquisition loop, appending to `history`.
    fn run(&self, start: StartMap, rng: &mut ChaCha8Rng, history: &mut Vec<HistoryEntry>) -> Result<()> {
        let axes = self.stage.axes();
        let bounds = &self.cfg.bounds;
        let first = history.len();

        let mut seeds = seed_samples_axes(bounds, axes, &self.fill, self.cfg.n_random, rng);
        for (slot, given) in seeds.iter_mut().zip(&self.cfg.seed_poses) {
            let mut a = slot.to_array();
            let g = given.to_array();
            for &i in axes.indices() {
                a[i] = g[i];
            }
            *slot = PoseVector::from_array(a);
        }
        let n_given = self.cfg.seed_poses.len().min(self.cfg.n_random);
        for (k, pose) in seeds.into_iter().enumerate() {
            let source = if k < n_given {
                SampleSource::Seeded
            } else {
                SampleSource::Random
            };
            let initial = start.start(&pose)?;
            history.push(self.problem.evaluate(self.stage, source, pose, initial, &self.cfg.icp));
        }

        // Recentering fixes the base rotation at the best seed so the GP keeps
        // a single coordinate frame for the rest of the stage.
        let start = match (&start, self.cfg.recenter, axes) {
            (StartMap::Plain, true, Axes::Full | Axes::Rotation) => {
                match best_entry(&history[first..]) {
                    Some((i, _)) => StartMap::Recentered {
                        base: *history[first + i].initial.rotation(),
                    },
                    None => start,
                }
            }
            _ => start,
        };

        let mut data = self.observations(&start, &history[first..]);
        let mut model = match data.inputs.is_empty() {
            true => None,
            false => Some(self.fit(&data)?),
        };

        for _ in 0..self.cfg.n_iterations {
            let (pose, source) = match (&model, data.best()) {
                (Some(m), Some(y_star)) => {
                    let got = argmax_ei(m, bounds, axes, &self.fill, y_star, &self.cfg.acq, rng)?;
                    let source = if got.fallback {
                        SampleSource::AcquiredFallback
                    } else {
                        SampleSource::Acquired
                    };
                    (got.pose, source)
                }
                _ => {
                    let p = seed_samples_axes(bounds, axes, &self.fill, 1, rng)[0];
                    (p, SampleSource::Random)
                }
            };
            let initial = start.start(&pose)?;
            let entry = self.problem.evaluate(self.stage, source, pose, initial, &self.cfg.icp);
            let x = normalize(&pose, bounds, axes)?;
            let y = match entry.objective {
                Some(v) => Some(v),
                None => data.worst(),
            };
            history.push(entry);
            if let Some(y) = y {
                data.push(x.clone(), y, history.last().unwrap().objective.is_some());
                model = Some(match model {
                    Some(m) => m.update(x, y)?,
                    None => self.fit(&data)?,
                });
            }
        }
        Ok(())
    }

    fn fit(&self, data: &Observations) -> Result<GpModel> {
        let kernel = self.cfg.surrogate.kernel(self.stage.axes().dim())?;
        GpModel::fit(
            data.inputs.clone(),
            data.targets.clone(),
            kernel,
            self.cfg.surrogate.noise_variance,
        )
    }

    /// GP training data for entries evaluated so far, expressed in the
    /// coordinates `start` uses. Failed evaluations take the worst observed value.
    fn observations(&self, start: &StartMap, entries: &[HistoryEntry]) -> Observations {
        let axes = self.stage.axes();
        let mut data = Observations::default();
        let mut failed = Vec::new();
        for e in entries {
            let pose = match start {
                StartMap::Recentered { base } => {
                    let rel = RigidTransform::from_parts(
                        base.transpose() * e.initial.rotation(),
                        *e.initial.translation(),
                    );
                    match transform_to_pose(&rel) {
                        Ok(p) => p,
                        Err(_) => continue,
                    }
                }
                _ => e.pose,
            };
            let Ok(x) = normalize(&pose, &self.cfg.bounds, axes) else {
                continue;
            };
            match e.objective {
                Some(v) => data.push(x, v, true),
                None => failed.push(x),
            }
        }
        if let Some(worst) = data.worst() {
            for x in failed {
                data.push(x, worst, false);
            }
        }
        data
    }
}

#[derive(Default)]
struct Observations {
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
    /// Extremes over successful evaluations only.
    best: Option<f64>,
    worst: Option<f64>,
}

impl Observations {
    fn push(&mut self, x: Vec<f64>, y: f64, real: bool) {
        self.inputs.push(x);
        self.targets.push(y);
        if real {
            self.best = Some(self.best.map_or(y, |b| b.min(y)));
            self.worst = Some(self.worst.map_or(y, |w| w.max(y)));
        }
    }

    fn best(&self) -> Option<f64> {
        self.best
    }

    fn worst(&self) -> Option<f64> {
        self.worst
    }
}

/// Runs the configured mode.
pub fn optimize(source: &PointCloud, reference: &PointCloud, cfg: &BoConfig) -> Result<RegistrationResult> {
    match cfg.mode {
        Mode::Full => optimize_full(source, reference, cfg),
        Mode::Nested => optimize_nested(source, reference, cfg),
    }
}

/// Searches all six pose components jointly.
pub fn optimize_full(source: &PointCloud, reference: &PointCloud, cfg: &BoConfig) -> Result<RegistrationResult> {
    cfg.validate()?;
    let started = Instant::now();
    let problem = Problem::new(source, reference, Some(cfg.voxel))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut history = Vec::with_capacity(cfg.budget());
    StageRunner {
        problem: &problem,
        cfg,
        stage: Stage::Full,
        fill: PoseVector::default(),
    }
    .run(StartMap::Plain, &mut rng, &mut history)?;
    finish(&problem, source, reference, history, Some(&cfg.polish), started)
}

/// Rotation first (zero translation), then translation with that rotation fixed.
pub fn optimize_nested(source: &PointCloud, reference: &PointCloud, cfg: &BoConfig) -> Result<RegistrationResult> {
    cfg.validate()?;
    let started = Instant::now();
    let problem = Problem::new(source, reference, Some(cfg.voxel))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut history = Vec::with_capacity(cfg.budget());

    StageRunner {
        problem: &problem,
        cfg,
        stage: Stage::Rotation,
        fill: PoseVector::default(),
    }
    .run(StartMap::Plain, &mut rng, &mut history)?;

    let (rotation, fill) = match best_entry(&history) {
        Some((i, _)) => {
            let e = &history[i];
            let r = *e.result.expect("successful entry").rotation();
            let angles = transform_to_pose(&RigidTransform::from_parts(r, nalgebra::Vector3::zeros()))
                .unwrap_or(e.pose);
            (r, PoseVector::new(0.0, 0.0, 0.0, angles.roll, angles.pitch, angles.yaw))
        }
        // No rotation succeeded: keep searching translation from the identity.
        None => (nalgebra::Matrix3::identity(), PoseVector::default()),
    };

    StageRunner {
        problem: &problem,
        cfg,
        stage: Stage::Translation,
        fill,
    }
    .run(StartMap::FixedRotation { rotation }, &mut rng, &mut history)?;
    finish(&problem, source, reference, history, Some(&cfg.polish), started)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{rotation_error, translation_error};
    use crate::synth;

    #[test]
    fn presets_match_published_table() {
        for (name, expected) in [("A", (10, 20, 0.7)), ("B", (20, 35, 0.7)), ("C", (30, 60, 0.6))] {
            let c = preset(name).unwrap();
            assert_eq!((c.n_random, c.n_iterations, c.voxel), expected);
            assert_eq!(c.bounds, SearchBounds::default_experiment());
        }
        assert!(preset("D").is_err());
    }

    #[test]
    fn seed_samples_deterministic_and_in_bounds() {
        let b = SearchBounds::default_experiment();
        let draw = || seed_samples(&b, 3, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(draw(), draw());
        let many = seed_samples(&b, 10_000, &mut ChaCha8Rng::seed_from_u64(6));
        assert!(many.iter().all(|p| b.contains(p)));
    }

    #[test]
    fn narrow_axis_is_constant() {
        let mut lo = *SearchBounds::default_experiment().lo();
        let mut hi = *SearchBounds::default_experiment().hi();
        lo[1] = 0.25;
        hi[1] = 0.25 + 1e-12;
        let b = SearchBounds::new(lo, hi).unwrap();
        for p in seed_samples(&b, 100, &mut ChaCha8Rng::seed_from_u64(1)) {
            assert!((p.y - 0.25).abs() <= 1e-12);
        }
    }

    fn fast(mut cfg: BoConfig) -> BoConfig {
        cfg.acq.n_candidates = 300;
        cfg.icp = cfg.icp.with_max_iterations(20);
        cfg
    }

    #[test]
    fn zero_iterations_returns_best_seed() {
        let r = synth::scene(500, 1);
        let mut cfg = fast(preset("A").unwrap());
        cfg.n_iterations = 0;
        cfg.mode = Mode::Full;
        let res = optimize(&r, &r, &cfg).unwrap();
        assert_eq!(res.evaluations, 10);
        assert!(res.history.iter().all(|e| e.source == SampleSource::Random));
        let min = res.history.iter().filter_map(|e| e.objective).fold(f64::INFINITY, f64::min);
        assert_eq!(res.best_objective, min);
        assert!(res.polished_objective <= res.unpolished_objective);
    }

    #[test]
    fn nested_uses_twice_the_stage_budget() {
        let r = synth::scene(400, 2);
        let mut cfg = fast(preset("A").unwrap());
        cfg.n_iterations = 4;
        cfg.n_random = 3;
        let res = optimize(&r, &r, &cfg).unwrap();
        assert_eq!(res.evaluations, 14);
        assert_eq!(cfg.budget(), 14);
        let stages: Vec<Stage> = res.history.iter().map(|e| e.stage).collect();
        assert!(stages[..7].iter().all(|s| *s == Stage::Rotation));
        assert!(stages[7..].iter().all(|s| *s == Stage::Translation));
        for e in &res.history[..7] {
            assert_eq!(e.initial.translation().norm(), 0.0);
        }
        let rot = *res.history[7].initial.rotation();
        assert!(res.history[7..].iter().all(|e| *e.initial.rotation() == rot));
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let r = synth::scene(300, 3);
        let s = synth::source_for(&r, &pose_to_transform(&PoseVector::new(0.5, 0.2, 0.0, 0.0, 0.0, 0.4)).unwrap(), 0.0, 0);
        let mut cfg = fast(preset("A").unwrap());
        cfg.n_iterations = 5;
        cfg.seed = 77;
        let a = optimize(&s, &r, &cfg).unwrap();
        let b = optimize(&s, &r, &cfg).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.best_transform, b.best_transform);
    }

    #[test]
    fn external_seeds_replace_first_draws() {
        let r = synth::scene(300, 4);
        let mut cfg = fast(preset("A").unwrap());
        cfg.mode = Mode::Full;
        cfg.n_iterations = 0;
        cfg.seed_poses = vec![PoseVector::default()];
        let res = optimize(&r, &r, &cfg).unwrap();
        assert_eq!(res.history[0].source, SampleSource::Seeded);
        assert_eq!(res.history[0].pose, PoseVector::default());
        assert!(res.best_objective < 1e-20);
        assert_eq!(res.best_index, 0);
    }

    #[test]
    fn no_overlap_everywhere_fails_with_history() {
        let r = synth::object(200, 1);
        let far = r.transformed(&RigidTransform::from_translation(nalgebra::Vector3::new(100.0, 0.0, 0.0)));
        let mut cfg = fast(preset("A").unwrap());
        cfg.voxel = 0.05;
        cfg.n_iterations = 2;
        cfg.n_random = 2;
        cfg.icp.max_correspondence_dist = 1.0;
        match optimize(&far, &r, &cfg) {
            Err(Error::RegistrationFailed { history }) => assert_eq!(history.len(), 8),
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn recentered_full_search_stays_in_bounds() {
        let r = synth::scene(400, 5);
        let gt = pose_to_transform(&PoseVector::new(0.3, -0.2, 0.1, 0.1, -0.1, 0.3)).unwrap();
        let s = synth::source_for(&r, &gt, 0.0, 1);
        let mut cfg = fast(preset("A").unwrap());
        cfg.mode = Mode::Full;
        cfg.recenter = true;
        cfg.n_iterations = 6;
        let res = optimize(&s, &r, &cfg).unwrap();
        assert!(res.history.iter().all(|e| cfg.bounds.contains(&e.pose)));
        assert_eq!(res.evaluations, 16);
        // Acquired starts are increments about the best seed's rotation.
        let best_seed = best_entry(&res.history[..10]).unwrap().0;
        let base = *res.history[best_seed].initial.rotation();
        for e in &res.history[10..] {
            let expected = base * pose_to_transform(&e.pose).unwrap().rotation();
            assert!((expected - e.initial.rotation()).norm() < 1e-12);
        }
        let _ = (rotation_error(&res.best_transform, &gt), translation_error(&res.best_transform, &gt));
    }
}
