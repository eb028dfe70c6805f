//! Generators for the bundled example data.

use std::fs;
use std::io::BufWriter;
use std::path::PathBuf;

use clap::{Args, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use boicp::geom::{pose_to_transform, PoseVector, SearchBounds};
use boicp::io::{save_cloud, write_kitti_poses, Encoding};
use boicp::synth;

use crate::Failure;

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(subcommand)]
    what: What,
}

#[derive(Debug, Subcommand)]
enum What {
    /// A scene and a copy moved by a pose drawn uniformly in the default bounds.
    Pair {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 500)]
        points: usize,
        /// Gaussian noise on the source (m).
        #[arg(long, default_value_t = 0.01)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Consecutive scans along a street with their world-from-scan poses.
    Sequence {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 5)]
        frames: usize,
        #[arg(long, default_value_t = 1.5)]
        step: f64,
        #[arg(long, default_value_t = 12.0)]
        range: f64,
        #[arg(long, default_value_t = 800)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

pub fn run(args: SynthArgs) -> Result<(), Failure> {
    match args.what {
        What::Pair {
            out,
            points,
            noise,
            seed,
        } => {
            fs::create_dir_all(&out)?;
            let reference = synth::scene(points, seed);
            let b = SearchBounds::default_experiment();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pose = PoseVector::from_array(std::array::from_fn(|i| rng.random_range(b.lo()[i]..b.hi()[i])));
            let gt = pose_to_transform(&pose)?;
            let source = synth::source_for(&reference, &gt, noise, seed.wrapping_add(1));
            save_cloud(out.join("reference.ply"), &reference, None, Encoding::Ascii)?;
            save_cloud(out.join("source.ply"), &source, None, Encoding::Ascii)?;
            let mut w = BufWriter::new(fs::File::create(out.join("gt.txt"))?);
            write_kitti_poses(&mut w, &[gt])?;
        }
        What::Sequence {
            out,
            frames,
            step,
            range,
            points,
            seed,
        } => {
            fs::create_dir_all(&out)?;
            let seq = synth::sequence(frames, step, range, points, seed);
            for (i, c) in seq.clouds.iter().enumerate() {
                save_cloud(out.join(format!("{i:06}.ply")), c, None, Encoding::Binary)?;
            }
            let mut w = BufWriter::new(fs::File::create(out.join("poses.txt"))?);
            write_kitti_poses(&mut w, &seq.poses)?;
        }
    }
    Ok(())
}
