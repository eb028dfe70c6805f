use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use rayon::prelude::*;

use boicp::cloud::PointCloud;
use boicp::eval::{mean_p2p_distance, select_pairs, summarize, PairSpec, RunRecord};
use boicp::io::{load_cloud, load_poses, CloudFormat, PoseFormat};

use crate::settings::{Method, MethodSettings};
use crate::Failure;

pub const CSV_HEADER: [&str; 7] = [
    "pair_id",
    "method",
    "seed",
    "mean_p2p_m",
    "trans_err_m",
    "rot_err_rad",
    "runtime_s",
];

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Directory of scans (`.ply`, `.pcd`, `.xyz`, `.bin`), or a glob such as
    /// `scans/*.txt`; files are taken in lexicographic order.
    #[arg(long)]
    clouds: String,
    /// Cloud format (ply, pcd, xyz, kitti-bin); inferred per file by default.
    #[arg(long)]
    cloud_format: Option<CloudFormat>,
    /// World-from-scan poses, one per cloud, enabling the error columns.
    #[arg(long)]
    poses: Option<PathBuf>,
    /// Pose file format: kitti (12 columns) or tum (stamp tx ty tz qx qy qz qw).
    #[arg(long, default_value = "kitti")]
    pose_format: PoseFormat,
    /// Minimum symmetric overlap for extending a pair.
    #[arg(long, default_value_t = 0.7)]
    overlap_threshold: f64,
    /// Neighbor radius of the overlap estimate (defaults to the voxel size).
    #[arg(long)]
    overlap_radius: Option<f64>,
    /// Comma-separated methods (bo, random, pyramid).
    #[arg(long, value_delimiter = ',', default_value = "bo,random")]
    methods: Vec<Method>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seeds: Vec<u64>,
    /// Output CSV path.
    #[arg(long)]
    csv: PathBuf,
    #[command(flatten)]
    settings: MethodSettings,
}

fn cloud_paths(spec: &str) -> Result<Vec<PathBuf>, Failure> {
    let dir = Path::new(spec);
    let mut paths: Vec<PathBuf> = if dir.is_dir() {
        std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && CloudFormat::from_path(p).is_some())
            // Pose files usually sit next to the scans.
            .filter(|p| p.extension().is_none_or(|e| e != "txt"))
            .collect()
    } else {
        glob::glob(spec)
            .map_err(|e| Failure::Usage(format!("bad --clouds pattern: {e}")))?
            .filter_map(Result::ok)
            .filter(|p| p.is_file())
            .collect()
    };
    paths.sort();
    Ok(paths)
}

/// Worker pool capped by `BOICP_THREADS` when set.
fn pool() -> Result<rayon::ThreadPool, Failure> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("BOICP_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| Failure::Usage(format!("BOICP_THREADS must be a positive integer, got {v:?}")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Failure::Usage(e.to_string()))
}

pub fn run(args: BenchArgs) -> Result<(), Failure> {
    let paths = cloud_paths(&args.clouds)?;
    let clouds = paths
        .iter()
        .map(|p| load_cloud(p, args.cloud_format).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))))
        .collect::<Result<Vec<PointCloud>, _>>()?;
    let poses = match &args.poses {
        Some(p) => Some(load_poses(p, args.pose_format).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?),
        None => None,
    };
    let radius = args.overlap_radius.unwrap_or_else(|| args.settings.voxel());
    let pairs = select_pairs(&clouds, poses.as_deref(), args.overlap_threshold, radius)?;
    if pairs.is_empty() {
        return Err(Failure::Registration(format!(
            "no pairs found among {} clouds matching {:?} at overlap threshold {}",
            clouds.len(),
            args.clouds,
            args.overlap_threshold
        )));
    }

    let mut methods = args.methods.clone();
    methods.sort();
    methods.dedup();
    let mut seeds = args.seeds.clone();
    seeds.sort_unstable();
    seeds.dedup();
    let mut jobs: Vec<(&PairSpec, Method, u64)> = Vec::new();
    for p in &pairs {
        for &m in &methods {
            for &s in &seeds {
                jobs.push((p, m, s));
            }
        }
    }

    let settings = &args.settings;
    let clouds = &clouds;
    let outcomes: Vec<Result<RunRecord, String>> = pool()?.install(|| {
        jobs.par_iter()
            .map(|&(pair, method, seed)| {
                let source = &clouds[pair.target_id];
                let reference = &clouds[pair.ref_id];
                let started = Instant::now();
                let result = settings
                    .run(method, source, reference, seed)
                    .map_err(|f| format!("{} {method} seed {seed}: {}", pair.id(), f.message()))?;
                let runtime = started.elapsed().as_secs_f64();
                let p2p = mean_p2p_distance(source, reference, &result.best_transform).map_err(|e| e.to_string())?;
                RunRecord::new(pair.clone(), method.to_string(), seed, &result.best_transform, p2p, runtime)
                    .map_err(|e| e.to_string())
            })
            .collect()
    });

    let mut records = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        match o {
            Ok(r) => records.push(r),
            Err(msg) => eprintln!("warning: run failed: {msg}"),
        }
    }
    records.sort_by(|a, b| {
        (a.pair.id(), &a.method, a.seed).cmp(&(b.pair.id(), &b.method, b.seed))
    });
    write_csv(&args.csv, &records)?;
    print_summary(&records, pairs.len(), &methods);
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn write_csv(path: &Path, records: &[RunRecord]) -> Result<(), Failure> {
    let err = |e: csv::Error| Failure::Usage(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(CSV_HEADER).map_err(err)?;
    for r in records {
        w.write_record([
            r.pair.id(),
            r.method.clone(),
            r.seed.to_string(),
            r.mean_p2p.to_string(),
            fmt_opt(r.trans_err),
            fmt_opt(r.rot_err),
            r.runtime.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush()?;
    Ok(())
}

fn print_summary(records: &[RunRecord], n_pairs: usize, methods: &[Method]) {
    println!("{n_pairs} pairs, {} runs", records.len());
    println!(
        "{:<8} {:<12} {:>5} {:>12} {:>12} {:>12} {:>12}",
        "method", "metric", "n", "mean", "q1", "median", "q3"
    );
    for m in methods {
        let name = m.to_string();
        let rows: Vec<&RunRecord> = records.iter().filter(|r| r.method == name).collect();
        let metrics: [(&str, Vec<f64>); 4] = [
            ("mean_p2p_m", rows.iter().map(|r| r.mean_p2p).collect()),
            ("trans_err_m", rows.iter().filter_map(|r| r.trans_err).collect()),
            ("rot_err_rad", rows.iter().filter_map(|r| r.rot_err).collect()),
            ("runtime_s", rows.iter().map(|r| r.runtime).collect()),
        ];
        for (label, values) in metrics {
            if let Some(s) = summarize(&values) {
                println!(
                    "{name:<8} {label:<12} {:>5} {:>12.6} {:>12.6} {:>12.6} {:>12.6}",
                    s.count, s.mean, s.q1, s.median, s.q3
                );
            }
        }
    }
}
