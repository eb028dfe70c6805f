use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;

use boicp::eval::mean_p2p_distance;
use boicp::io::{load_cloud, CloudFormat};

use crate::output::AlignReport;
use crate::settings::{Method, MethodSettings};
use crate::Failure;

#[derive(Debug, Args)]
pub struct AlignArgs {
    /// Cloud to move.
    #[arg(long)]
    source: PathBuf,
    /// Cloud that stays fixed.
    #[arg(long)]
    reference: PathBuf,
    /// Source format (ply, pcd, xyz, kitti-bin); inferred from the extension by default.
    #[arg(long)]
    source_format: Option<CloudFormat>,
    /// Reference format; inferred from the extension by default.
    #[arg(long)]
    reference_format: Option<CloudFormat>,
    /// Search method: bo, random or pyramid.
    #[arg(long, default_value = "bo")]
    method: Method,
    /// Seed of the random draws (pyramid search is deterministic).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON result here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    settings: MethodSettings,
}

pub fn run(args: AlignArgs) -> Result<(), Failure> {
    let source = load_cloud(&args.source, args.source_format)?;
    let reference = load_cloud(&args.reference, args.reference_format)?;
    let config = args.settings.describe(args.method, args.seed)?;

    let started = Instant::now();
    let result = args.settings.run(args.method, &source, &reference, args.seed)?;
    let runtime = started.elapsed().as_secs_f64();
    let mean_p2p = mean_p2p_distance(&source, &reference, &result.best_transform)?;

    println!(
        "{}: best_objective={:.6} mean_p2p={:.6} evaluations={} runtime_s={:.3}",
        args.method, result.best_objective, mean_p2p, result.evaluations, runtime
    );
    if let Some(out) = &args.out {
        let report = AlignReport::new(args.method.to_string(), args.seed, config, &result, mean_p2p, runtime);
        let text = serde_json::to_string_pretty(&report).map_err(|e| Failure::Usage(e.to_string()))?;
        fs::write(out, text + "\n").map_err(|e| Failure::Usage(format!("{}: {e}", out.display())))?;
    }
    Ok(())
}
