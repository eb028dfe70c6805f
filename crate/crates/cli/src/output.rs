//! JSON result document written by `boicp align`.

use serde::Serialize;
use serde_json::Value;

use boicp::geom::RigidTransform;
use boicp::optimizer::{HistoryEntry, RegistrationResult, SampleSource, Stage};

/// Bumped whenever a field changes meaning or is removed.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct HistoryRecord {
    pub stage: Stage,
    pub source: SampleSource,
    /// `[x, y, z, roll, pitch, yaw]` in meters and radians.
    pub pose: [f64; 6],
    pub objective: Option<f64>,
    /// Row-major 4×4 ICP output, absent when the evaluation failed.
    pub transform: Option<[[f64; 4]; 4]>,
}

impl From<&HistoryEntry> for HistoryRecord {
    fn from(e: &HistoryEntry) -> Self {
        Self {
            stage: e.stage,
            source: e.source,
            pose: e.pose.to_array(),
            objective: e.objective,
            transform: e.result.as_ref().map(RigidTransform::to_rows),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct AlignReport {
    pub schema_version: u32,
    pub method: String,
    pub seed: u64,
    pub config: Value,
    /// Row-major homogeneous transform taking source points into the
    /// reference frame.
    pub best_transform: [[f64; 4]; 4],
    /// Best objective of the search, on the downsampled clouds.
    pub best_objective: f64,
    /// Objective of `best_transform` on the full-resolution clouds.
    pub polished_objective: f64,
    /// Mean nearest-neighbor distance of the transformed raw source to the raw
    /// reference.
    pub mean_p2p: f64,
    pub evaluations: usize,
    pub history: Vec<HistoryRecord>,
    pub runtime_s: f64,
}

impl AlignReport {
    pub fn new(method: String, seed: u64, config: Value, result: &RegistrationResult, mean_p2p: f64, runtime_s: f64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            method,
            seed,
            config,
            best_transform: result.best_transform.to_rows(),
            best_objective: result.best_objective,
            polished_objective: result.polished_objective,
            mean_p2p,
            evaluations: result.evaluations,
            history: result.history.iter().map(HistoryRecord::from).collect(),
            runtime_s,
        }
    }
}
