//! Expected improvement for minimization, and its maximization over the unit cube.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::Rng;

use crate::geom::{Axes, PoseVector, SearchBounds};
use crate::surrogate::{denormalize, GpModel};
use crate::{Error, Result};

/// Golden-section probes per coordinate polish step.
const GOLDEN_PROBES: usize = 16;
/// Half-width of the first polish sweep in normalized units; halves each sweep.
const POLISH_RADIUS: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AcquisitionConfig {
    /// Exploration offset subtracted from the incumbent (objective units).
    pub xi: f64,
    pub n_candidates: usize,
    /// Coordinate-wise golden-section steps applied to the best candidate.
    pub n_refine: usize,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        Self {
            xi: 0.0,
            n_candidates: 2000,
            n_refine: 20,
        }
    }
}

impl AcquisitionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.xi >= 0.0 && self.xi.is_finite()) {
            return Err(Error::invalid("xi must be ≥ 0"));
        }
        if self.n_candidates < 1 {
            return Err(Error::invalid("n_candidates must be ≥ 1"));
        }
        Ok(())
    }
}

pub fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

/// Closed-form `E[max(y* − ξ − Y, 0)]` for `Y ~ N(mean, variance)`.
pub fn expected_improvement(mean: f64, variance: f64, y_star: f64, xi: f64) -> Result<f64> {
    if variance < -1e-8 || variance.is_nan() {
        return Err(Error::invalid(format!("negative variance {variance}")));
    }
    Ok(ei_unchecked(mean, variance.max(0.0), y_star, xi))
}

fn ei_unchecked(mean: f64, variance: f64, y_star: f64, xi: f64) -> f64 {
    let gap = y_star - xi - mean;
    let sigma = variance.sqrt();
    if sigma > 0.0 {
        let z = gap / sigma;
        (gap * std_normal_cdf(z) + sigma * std_normal_pdf(z)).max(0.0)
    } else {
        gap.max(0.0)
    }
}

/// EI of the model at a normalized input.
pub fn ei_at(model: &GpModel, u: &[f64], y_star: f64, xi: f64) -> f64 {
    let p = model.posterior(u);
    ei_unchecked(p.mean, p.variance, y_star, xi)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Acquired {
    pub pose: PoseVector,
    /// Normalized coordinates of the active axes.
    pub unit: Vec<f64>,
    pub ei: f64,
    /// EI was zero at every candidate; the lowest posterior mean was taken instead.
    pub fallback: bool,
}

/// Maximizes EI over the `axes` components within `bounds`.
///
/// Components outside `axes` are copied from `fill`. See [`argmax_ei_unit`]
/// for the search itself.
pub fn argmax_ei<R: Rng + ?Sized>(
    model: &GpModel,
    bounds: &SearchBounds,
    axes: Axes,
    fill: &PoseVector,
    y_star: f64,
    cfg: &AcquisitionConfig,
    rng: &mut R,
) -> Result<Acquired> {
    if model.dim() != axes.dim() {
        return Err(Error::invalid(format!(
            "model has dimension {}, search has {}",
            model.dim(),
            axes.dim()
        )));
    }
    let (unit, ei, fallback) = argmax_ei_unit(model, y_star, cfg, rng)?;
    Ok(Acquired {
        pose: denormalize(&unit, bounds, axes, fill),
        unit,
        ei,
        fallback,
    })
}

/// Maximizes EI over the model's unit cube, returning `(point, EI, fallback)`.
///
/// Draws `n_candidates` uniform points, keeps the best (lowest index on
/// ties), then runs `n_refine` coordinate-wise golden-section steps around
/// it. When EI is zero at every candidate the lowest posterior mean is
/// returned with the fallback flag set.
pub fn argmax_ei_unit<R: Rng + ?Sized>(
    model: &GpModel,
    y_star: f64,
    cfg: &AcquisitionConfig,
    rng: &mut R,
) -> Result<(Vec<f64>, f64, bool)> {
    cfg.validate()?;
    let d = model.dim();
    let candidates: Vec<Vec<f64>> = (0..cfg.n_candidates)
        .map(|_| (0..d).map(|_| rng.random::<f64>()).collect())
        .collect();
    let scores: Vec<f64> = candidates
        .iter()
        .map(|u| ei_at(model, u, y_star, cfg.xi))
        .collect();
    let (mut best_i, mut best_ei) = (0, scores[0]);
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > best_ei {
            best_i = i;
            best_ei = s;
        }
    }

    if !(best_ei > 0.0) {
        let means: Vec<f64> = candidates.iter().map(|u| model.posterior(u).mean).collect();
        let mut pick = 0;
        for (i, &m) in means.iter().enumerate().skip(1) {
            if m < means[pick] {
                pick = i;
            }
        }
        return Ok((candidates[pick].clone(), 0.0, true));
    }

    let mut unit = candidates[best_i].clone();
    for step in 0..cfg.n_refine {
        let c = step % d;
        let radius = POLISH_RADIUS * 0.5f64.powi((step / d) as i32);
        let lo = (unit[c] - radius).max(0.0);
        let hi = (unit[c] + radius).min(1.0);
        let mut probe = unit.clone();
        let (v, ei) = golden_max(lo, hi, |t| {
            probe[c] = t;
            ei_at(model, &probe, y_star, cfg.xi)
        });
        if ei > best_ei {
            unit[c] = v;
            best_ei = ei;
        }
    }
    Ok((unit, best_ei, false))
}

/// Golden-section search for a maximum of `f` on `[lo, hi]`; returns the best
/// probed point and its value.
fn golden_max(mut lo: f64, mut hi: f64, mut f: impl FnMut(f64) -> f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    let mut best = if fa >= fb { (a, fa) } else { (b, fb) };
    for _ in 2..GOLDEN_PROBES {
        if fa >= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a);
            if fa > best.1 {
                best = (a, fa);
            }
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b);
            if fb > best.1 {
                best = (b, fb);
            }
        }
    }
    best
}
