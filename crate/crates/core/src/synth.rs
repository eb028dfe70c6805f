//! Deterministic synthetic geometry.
//!
//! [`object`] is a meter-scale asymmetric part for ICP checks. [`scene`] is a
//! street-scale layout (ground, walls, poles, a parked box) sized for the
//! 0.6–0.7 m voxels of the presets. [`sequence`] crops a long scene along a
//! straight drive to mimic consecutive scans with known poses.

use std::f64::consts::{PI, TAU};

use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::cloud::PointCloud;
use crate::geom::{pose_to_transform, PoseVector, RigidTransform};

/// A surface patch points can be drawn from, with an area-like weight.
#[derive(Clone, Debug)]
enum Patch {
    /// Parallelogram `origin + u·a + v·b`, `u, v ∈ [0, 1]`.
    Quad {
        origin: Point3<f64>,
        a: Vector3<f64>,
        b: Vector3<f64>,
    },
    /// Vertical cylinder side.
    Cylinder {
        base: Point3<f64>,
        radius: f64,
        height: f64,
    },
    /// Sphere surface, upper half only when `dome`.
    Sphere {
        center: Point3<f64>,
        radius: f64,
        dome: bool,
    },
}

impl Patch {
    fn area(&self) -> f64 {
        match self {
            Patch::Quad { a, b, .. } => a.cross(b).norm(),
            Patch::Cylinder { radius, height, .. } => TAU * radius * height,
            Patch::Sphere { radius, dome, .. } => {
                let full = 4.0 * PI * radius * radius;
                if *dome {
                    full / 2.0
                } else {
                    full
                }
            }
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Point3<f64> {
        match self {
            Patch::Quad { origin, a, b } => {
                origin + a * rng.random::<f64>() + b * rng.random::<f64>()
            }
            Patch::Cylinder {
                base,
                radius,
                height,
            } => {
                let t = rng.random::<f64>() * TAU;
                base + Vector3::new(radius * t.cos(), radius * t.sin(), height * rng.random::<f64>())
            }
            Patch::Sphere {
                center,
                radius,
                dome,
            } => {
                let z: f64 = if *dome {
                    rng.random::<f64>()
                } else {
                    rng.random_range(-1.0..1.0)
                };
                let t = rng.random::<f64>() * TAU;
                let r = (1.0 - z * z).sqrt();
                center + Vector3::new(r * t.cos(), r * t.sin(), z) * *radius
            }
        }
    }
}

fn box_faces(min: Point3<f64>, size: Vector3<f64>, with_bottom: bool) -> Vec<Patch> {
    let (ex, ey, ez) = (
        Vector3::new(size.x, 0.0, 0.0),
        Vector3::new(0.0, size.y, 0.0),
        Vector3::new(0.0, 0.0, size.z),
    );
    let max = min + size;
    let mut faces = vec![
        Patch::Quad { origin: min, a: ex, b: ey },
        Patch::Quad { origin: min, a: ex, b: ez },
        Patch::Quad { origin: min, a: ey, b: ez },
        Patch::Quad { origin: max, a: -ex, b: -ey },
        Patch::Quad { origin: max, a: -ex, b: -ez },
        Patch::Quad { origin: max, a: -ey, b: -ez },
    ];
    if !with_bottom {
        faces.remove(0);
    }
    faces
}

fn sample_patches(patches: &[(Patch, f64)], n: usize, rng: &mut ChaCha8Rng) -> PointCloud {
    let weights: Vec<f64> = patches.iter().map(|(p, w)| p.area() * w).collect();
    let total: f64 = weights.iter().sum();
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let mut u = rng.random::<f64>() * total;
        let mut chosen = patches.len() - 1;
        for (i, w) in weights.iter().enumerate() {
            if u < *w {
                chosen = i;
                break;
            }
            u -= w;
        }
        points.push(patches[chosen].0.sample(rng));
    }
    PointCloud::new(points).expect("synthetic points are finite")
}

/// Meter-scale asymmetric part: an L bracket, an off-center post and a dome.
pub fn object(n: usize, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut patches: Vec<(Patch, f64)> = Vec::new();
    for f in box_faces(Point3::new(-1.0, -0.6, 0.0), Vector3::new(2.0, 1.2, 0.15), true) {
        patches.push((f, 1.0));
    }
    for f in box_faces(Point3::new(-1.0, -0.6, 0.15), Vector3::new(0.2, 1.2, 0.9), true) {
        patches.push((f, 1.0));
    }
    patches.push((
        Patch::Cylinder {
            base: Point3::new(0.55, 0.3, 0.15),
            radius: 0.12,
            height: 0.7,
        },
        1.5,
    ));
    patches.push((
        Patch::Sphere {
            center: Point3::new(0.2, -0.3, 0.15),
            radius: 0.25,
            dome: true,
        },
        1.5,
    ));
    sample_patches(&patches, n, &mut rng)
}

/// Layout of a street-scale scene; `seed` varies positions and sizes.
fn scene_patches(seed: u64) -> Vec<(Patch, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5ce9e);
    let mut patches: Vec<(Patch, f64)> = Vec::new();
    // Ground, down-weighted the way a ground filter thins a lidar scan.
    patches.push((
        Patch::Quad {
            origin: Point3::new(-8.0, -5.0, 0.0),
            a: Vector3::new(16.0, 0.0, 0.0),
            b: Vector3::new(0.0, 10.0, 0.0),
        },
        0.25,
    ));
    // Long wall on the left with a second, shorter wall on the right.
    let left_len = rng.random_range(11.0..15.0);
    let left_x0 = rng.random_range(-8.0..-5.0);
    patches.push((
        Patch::Quad {
            origin: Point3::new(left_x0, 4.5, 0.0),
            a: Vector3::new(left_len, 0.0, 0.0),
            b: Vector3::new(0.0, 0.0, rng.random_range(2.5..4.0)),
        },
        1.0,
    ));
    let right_len = rng.random_range(4.0..7.0);
    let right_x0 = rng.random_range(-2.0..1.0);
    patches.push((
        Patch::Quad {
            origin: Point3::new(right_x0, -4.5, 0.0),
            a: Vector3::new(right_len, 0.0, 0.0),
            b: Vector3::new(0.0, 0.0, rng.random_range(1.5..3.0)),
        },
        1.0,
    ));
    // Side wall closing one end.
    patches.push((
        Patch::Quad {
            origin: Point3::new(7.5, rng.random_range(-1.0..1.0), 0.0),
            a: Vector3::new(0.0, rng.random_range(2.5..3.5), 0.0),
            b: Vector3::new(0.0, 0.0, 2.0),
        },
        1.0,
    ));
    // Poles.
    for _ in 0..4 {
        patches.push((
            Patch::Cylinder {
                base: Point3::new(rng.random_range(-7.0..7.0), rng.random_range(-3.5..3.5), 0.0),
                radius: rng.random_range(0.1..0.3),
                height: rng.random_range(2.0..5.0),
            },
            3.0,
        ));
    }
    // A parked car-sized box and a bush.
    let car_min = Point3::new(rng.random_range(-6.0..2.0), rng.random_range(-3.5..-1.0), 0.0);
    for f in box_faces(car_min, Vector3::new(4.2, 1.8, 1.5), false) {
        patches.push((f, 1.0));
    }
    patches.push((
        Patch::Sphere {
            center: Point3::new(rng.random_range(-6.0..6.0), rng.random_range(1.0..3.5), 0.3),
            radius: rng.random_range(0.6..1.0),
            dome: true,
        },
        1.5,
    ));
    patches
}

/// Street-scale scene of roughly 16 m × 10 m × 4 m.
pub fn scene(n: usize, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_patches(&scene_patches(seed), n, &mut rng)
}

/// Adds isotropic Gaussian noise with standard deviation `sigma` (m).
pub fn jitter(cloud: &PointCloud, sigma: f64, seed: u64) -> PointCloud {
    if sigma <= 0.0 {
        return cloud.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("sigma > 0");
    let points = cloud
        .points()
        .iter()
        .map(|p| p + Vector3::new(normal.sample(&mut rng), normal.sample(&mut rng), normal.sample(&mut rng)))
        .collect();
    PointCloud::new(points).expect("finite")
}

/// A source cloud whose ground-truth alignment onto `reference` is `gt`:
/// `source = gt⁻¹ · reference` (plus optional noise).
pub fn source_for(reference: &PointCloud, gt: &RigidTransform, noise: f64, seed: u64) -> PointCloud {
    jitter(&reference.transformed(&gt.inverse()), noise, seed)
}

/// Consecutive scans from a straight drive through a long street.
#[derive(Clone, Debug)]
pub struct Sequence {
    pub clouds: Vec<PointCloud>,
    /// World-from-scan pose of each cloud.
    pub poses: Vec<RigidTransform>,
}

/// `frames` scans taken `step` meters apart along +x, each keeping the world
/// points within `range` meters of the sensor, expressed in the scan frame.
pub fn sequence(frames: usize, step: f64, range: f64, points_per_frame: usize, seed: u64) -> Sequence {
    // Tile scene layouts along x so the street is long enough.
    let length = step * frames as f64 + 2.0 * range;
    let tiles = (length / 16.0).ceil() as usize + 1;
    let mut world = Vec::new();
    for k in 0..tiles {
        let offset = RigidTransform::from_translation(Vector3::new(16.0 * k as f64 - range, 0.0, 0.0));
        let tile = scene(points_per_frame * 4, seed.wrapping_add(k as u64));
        world.extend(tile.transformed(&offset).points().iter().copied());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xd21e);
    let mut clouds = Vec::with_capacity(frames);
    let mut poses = Vec::with_capacity(frames);
    for f in 0..frames {
        let pose = pose_to_transform(&PoseVector::new(
            step * f as f64,
            rng.random_range(-0.2..0.2),
            0.0,
            0.0,
            0.0,
            rng.random_range(-0.05..0.05),
        ))
        .expect("finite pose");
        let inv = pose.inverse();
        let sensor = pose.translation();
        let mut local: Vec<Point3<f64>> = world
            .iter()
            .filter(|p| (p.coords - sensor).xy().norm() <= range)
            .map(|p| inv.apply(p))
            .collect();
        // Thin to the per-frame budget with a frame-specific subsample.
        while local.len() > points_per_frame {
            let i = rng.random_range(0..local.len());
            local.swap_remove(i);
        }
        clouds.push(PointCloud::new(local).expect("finite"));
        poses.push(pose);
    }
    Sequence { clouds, poses }
}
