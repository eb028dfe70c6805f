//! Method selection and configuration shared by `align` and `bench`.

use std::fmt;
use std::str::FromStr;

use clap::Args;
use serde_json::{json, Value};

use boicp::baseline::{pyramid_search, random_search, PyramidConfig, RandomSearchConfig};
use boicp::cloud::PointCloud;
use boicp::geom::SearchBounds;
use boicp::icp::IcpConfig;
use boicp::optimizer::{optimize, BoConfig, Mode, Preset, RegistrationResult};

use crate::Failure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    Bo,
    Pyramid,
    Random,
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bo" | "bo-icp" => Ok(Method::Bo),
            "pyramid" => Ok(Method::Pyramid),
            "random" => Ok(Method::Random),
            other => Err(format!("unknown method {other:?} (bo|pyramid|random)")),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Bo => "bo",
            Method::Pyramid => "pyramid",
            Method::Random => "random",
        })
    }
}

/// Parses six comma-separated `lo:hi` pairs in the order x, y, z, roll,
/// pitch, yaw. With `degrees`, the rotation pairs are converted to radians.
pub fn parse_bounds(text: &str, degrees: bool) -> Result<SearchBounds, String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 6 {
        return Err(format!("--bounds needs six lo:hi pairs, got {}", parts.len()));
    }
    let mut lo = [0.0; 6];
    let mut hi = [0.0; 6];
    for (i, p) in parts.iter().enumerate() {
        let (a, b) = p
            .split_once(':')
            .ok_or_else(|| format!("bound {p:?} is not of the form lo:hi"))?;
        let parse = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("bad number {v:?} in bounds"));
        lo[i] = parse(a)?;
        hi[i] = parse(b)?;
        if degrees && i >= 3 {
            lo[i] = lo[i].to_radians();
            hi[i] = hi[i].to_radians();
        }
    }
    SearchBounds::new(lo, hi).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Args)]
pub struct MethodSettings {
    /// Configuration preset (A, B or C); explicit flags override its fields.
    #[arg(long, default_value = "B")]
    pub preset: Preset,
    /// Random seed poses per stage (overrides the preset).
    #[arg(long)]
    pub n_random: Option<usize>,
    /// Acquisition iterations per stage (overrides the preset).
    #[arg(long)]
    pub n_iters: Option<usize>,
    /// Voxel size in meters (overrides the preset).
    #[arg(long)]
    pub voxel: Option<f64>,
    /// Search all six components at once or rotation then translation.
    #[arg(long, default_value = "nested")]
    pub mode: Mode,
    /// Six lo:hi pairs for x,y,z,roll,pitch,yaw, e.g.
    /// -4:4,-2:2,-1:1,-3.1416:3.1416,-1.5708:1.5708,-3.1416:3.1416
    #[arg(long, allow_hyphen_values = true)]
    pub bounds: Option<String>,
    /// Read rotation bounds in degrees.
    #[arg(long)]
    pub degrees: bool,
    /// Interpret acquired rotations relative to the best random seed.
    #[arg(long)]
    pub recenter: bool,
    /// Evaluations for the random-search method (defaults to the BO budget).
    #[arg(long)]
    pub budget: Option<usize>,
}

impl MethodSettings {
    fn bounds(&self) -> Result<SearchBounds, Failure> {
        match &self.bounds {
            Some(text) => parse_bounds(text, self.degrees).map_err(Failure::Usage),
            None => Ok(SearchBounds::default_experiment()),
        }
    }

    pub(crate) fn bo_config(&self, seed: u64) -> Result<BoConfig, Failure> {
        let mut cfg = self.preset.config();
        if let Some(n) = self.n_random {
            cfg.n_random = n;
        }
        if let Some(n) = self.n_iters {
            cfg.n_iterations = n;
        }
        if let Some(v) = self.voxel {
            cfg.voxel = v;
        }
        cfg.mode = self.mode;
        cfg.bounds = self.bounds()?;
        cfg.recenter = self.recenter;
        cfg.seed = seed;
        cfg.validate()?;
        Ok(cfg)
    }

    pub(crate) fn voxel(&self) -> f64 {
        self.voxel.unwrap_or(self.preset.parameters().2)
    }

    pub(crate) fn random_config(&self, seed: u64) -> Result<RandomSearchConfig, Failure> {
        let bo = self.bo_config(seed)?;
        let mut cfg = RandomSearchConfig::new(self.budget.unwrap_or(bo.budget()), bo.bounds, seed);
        cfg.voxel = Some(bo.voxel);
        Ok(cfg)
    }

    pub(crate) fn pyramid_config(&self) -> Result<PyramidConfig, Failure> {
        let cfg = PyramidConfig {
            bounds: self.bounds()?,
            voxel: self.voxel(),
            ..PyramidConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub(crate) fn run(
        &self,
        method: Method,
        source: &PointCloud,
        reference: &PointCloud,
        seed: u64,
    ) -> Result<RegistrationResult, Failure> {
        Ok(match method {
            Method::Bo => optimize(source, reference, &self.bo_config(seed)?)?,
            Method::Random => random_search(source, reference, &self.random_config(seed)?)?,
            Method::Pyramid => pyramid_search(source, reference, &self.pyramid_config()?, &IcpConfig::default())?.result,
        })
    }

    /// Echo of the effective configuration for the JSON report.
    pub(crate) fn describe(&self, method: Method, seed: u64) -> Result<Value, Failure> {
        Ok(match method {
            Method::Bo => {
                let c = self.bo_config(seed)?;
                json!({
                    "preset": format!("{:?}", self.preset),
                    "n_random": c.n_random,
                    "n_iterations": c.n_iterations,
                    "voxel": c.voxel,
                    "mode": c.mode.to_string(),
                    "recenter": c.recenter,
                    "budget": c.budget(),
                    "bounds": bounds_json(&c.bounds),
                    "icp": icp_json(&c.icp),
                    "polish": icp_json(&c.polish),
                    "acquisition": {
                        "xi": c.acq.xi,
                        "n_candidates": c.acq.n_candidates,
                        "n_refine": c.acq.n_refine,
                    },
                    "surrogate": {
                        "kernel": format!("{:?}", c.surrogate.kind),
                        "length_scale": c.surrogate.length_scale,
                        "signal_variance": c.surrogate.signal_variance,
                        "noise_variance": c.surrogate.noise_variance,
                    },
                })
            }
            Method::Random => {
                let c = self.random_config(seed)?;
                json!({
                    "budget": c.budget,
                    "voxel": c.voxel,
                    "bounds": bounds_json(&c.bounds),
                    "icp": icp_json(&c.icp),
                    "polish": icp_json(&c.polish),
                })
            }
            Method::Pyramid => {
                let c = self.pyramid_config()?;
                json!({
                    "coarse_grid": c.coarse_grid,
                    "refine_grid": c.refine_grid,
                    "top_k": c.top_k,
                    "levels": c.levels,
                    "voxel": c.voxel,
                    "fitness_radius": c.fitness_radius.unwrap_or(2.0 * c.voxel),
                    "bounds": bounds_json(&c.bounds),
                    "icp": icp_json(&IcpConfig::default()),
                })
            }
        })
    }
}

fn bounds_json(b: &SearchBounds) -> Value {
    json!({ "lo": b.lo(), "hi": b.hi() })
}

fn icp_json(c: &IcpConfig) -> Value {
    let max_dist = if c.max_correspondence_dist.is_finite() {
        json!(c.max_correspondence_dist)
    } else {
        Value::Null
    };
    json!({
        "max_iterations": c.max_iterations,
        "rel_tolerance": c.rel_tolerance,
        "max_correspondence_dist": max_dist,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn bounds_parse() {
        let b = parse_bounds("-4:4,-2:2,-1:1,-180:180,-90:90,-180:180", true).unwrap();
        assert_eq!(b.lo()[..3], [-4.0, -2.0, -1.0]);
        assert!((b.hi()[3] - PI).abs() < 1e-15 && (b.hi()[4] - PI / 2.0).abs() < 1e-15);
        assert!(parse_bounds("-4:4,-2:2", false).is_err());
        assert!(parse_bounds("-4:4,-2:2,-1:1,0:1,0:1,a:1", false).is_err());
        assert!(parse_bounds("4:-4,-2:2,-1:1,0:1,0:1,0:1", false).is_err());
        assert!(parse_bounds("-4:4,-2:2,-1:1,-4:4,0:1,0:1", false).is_err());
    }

    #[test]
    fn methods_order_lexicographically() {
        let mut m = [Method::Random, Method::Bo, Method::Pyramid];
        m.sort();
        let names: Vec<String> = m.iter().map(|m| m.to_string()).collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
    }
}
