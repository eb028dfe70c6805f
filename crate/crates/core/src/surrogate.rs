//! Gaussian-process regression over normalized pose coordinates.
//!
//! Inputs live in the unit cube: each active pose axis is mapped linearly
//! from its search interval onto `[0, 1]`. Targets are standardized per model
//! (centered, and scaled to unit variance when the spread is non-zero);
//! posterior queries report values back in objective units.

use nalgebra::{DMatrix, DVector};

use crate::geom::{Axes, PoseVector, SearchBounds};
use crate::{Error, Result};

/// Diagonal jitter tried, in order, when the Gram matrix fails to factor.
const JITTER_LADDER: [f64; 5] = [1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelKind {
    SquaredExponential,
    Matern52,
}

/// Stationary covariance with per-dimension length scales (normalized units).
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    kind: KernelKind,
    length_scales: Vec<f64>,
    signal_variance: f64,
}

impl Kernel {
    pub fn new(kind: KernelKind, length_scales: Vec<f64>, signal_variance: f64) -> Result<Self> {
        if length_scales.is_empty() {
            return Err(Error::invalid("kernel needs at least one length scale"));
        }
        if length_scales.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(Error::invalid("length scales must be positive and finite"));
        }
        if !(signal_variance > 0.0 && signal_variance.is_finite()) {
            return Err(Error::invalid("signal variance must be positive and finite"));
        }
        Ok(Self {
            kind,
            length_scales,
            signal_variance,
        })
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.length_scales.len()
    }

    pub fn length_scales(&self) -> &[f64] {
        &self.length_scales
    }

    pub fn signal_variance(&self) -> f64 {
        self.signal_variance
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        let r2: f64 = a
            .iter()
            .zip(b)
            .zip(&self.length_scales)
            .map(|((x, y), l)| {
                let d = (x - y) / l;
                d * d
            })
            .sum();
        match self.kind {
            KernelKind::SquaredExponential => self.signal_variance * (-0.5 * r2).exp(),
            KernelKind::Matern52 => {
                let s = (5.0 * r2).sqrt();
                self.signal_variance * (1.0 + s + 5.0 * r2 / 3.0) * (-s).exp()
            }
        }
    }
}

/// Surrogate hyperparameters, independent of the input dimension.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurrogateConfig {
    pub kind: KernelKind,
    pub length_scale: f64,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        Self {
            kind: KernelKind::Matern52,
            length_scale: 0.2,
            signal_variance: 1.0,
            noise_variance: 1e-6,
        }
    }
}

impl SurrogateConfig {
    pub fn kernel(&self, dim: usize) -> Result<Kernel> {
        Kernel::new(self.kind, vec![self.length_scale; dim], self.signal_variance)
    }
}

/// Maps the `axes` components of `p` onto `[0, 1]`.
pub fn normalize(p: &PoseVector, b: &SearchBounds, axes: Axes) -> Result<Vec<f64>> {
    if !b.contains_axes(p, axes) {
        return Err(Error::invalid(format!("pose {p} lies outside the search bounds")));
    }
    let a = p.to_array();
    Ok(axes
        .indices()
        .iter()
        .map(|&i| (a[i] - b.lo()[i]) / (b.hi()[i] - b.lo()[i]))
        .collect())
}

/// Inverse of [`normalize`]; components outside `axes` are copied from `fill`.
pub fn denormalize(u: &[f64], b: &SearchBounds, axes: Axes, fill: &PoseVector) -> PoseVector {
    let mut a = fill.to_array();
    for (&i, &v) in axes.indices().iter().zip(u) {
        let v = v.clamp(0.0, 1.0);
        a[i] = (b.lo()[i] + v * (b.hi()[i] - b.lo()[i])).clamp(b.lo()[i], b.hi()[i]);
    }
    PoseVector::from_array(a)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Posterior {
    pub mean: f64,
    pub variance: f64,
}

/// Fitted GP posterior. Immutable; [`GpModel::update`] returns a new model.
#[derive(Clone, Debug)]
pub struct GpModel {
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
    kernel: Kernel,
    noise_variance: f64,
    jitter: f64,
    y_mean: f64,
    y_scale: f64,
    /// Lower Cholesky factor of `K + (noise + jitter)·I`.
    chol: DMatrix<f64>,
    /// `(K + (noise + jitter)·I)⁻¹ · y_standardized`.
    alpha: DVector<f64>,
}

impl GpModel {
    pub fn fit(inputs: Vec<Vec<f64>>, targets: Vec<f64>, kernel: Kernel, noise_variance: f64) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::invalid("GP needs at least one observation"));
        }
        if inputs.len() != targets.len() {
            return Err(Error::invalid(format!(
                "{} inputs but {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        if !(noise_variance >= 0.0 && noise_variance.is_finite()) {
            return Err(Error::invalid("noise variance must be ≥ 0"));
        }
        validate_inputs(&inputs, kernel.dim())?;
        if targets.iter().any(|y| !y.is_finite()) {
            return Err(Error::invalid("GP targets must be finite"));
        }

        let gram = gram(&inputs, &kernel);
        let (chol, jitter) = factor_with_jitter(gram, noise_variance)?;
        let mut model = GpModel {
            inputs,
            targets,
            kernel,
            noise_variance,
            jitter,
            y_mean: 0.0,
            y_scale: 1.0,
            chol,
            alpha: DVector::zeros(0),
        };
        model.refresh_alpha();
        Ok(model)
    }

    /// Adds one observation. Appends a row to the Cholesky factor when it
    /// stays positive definite, otherwise refits with the jitter ladder.
    pub fn update(&self, x: Vec<f64>, y: f64) -> Result<GpModel> {
        validate_inputs(std::slice::from_ref(&x), self.kernel.dim())?;
        if !y.is_finite() {
            return Err(Error::invalid("GP targets must be finite"));
        }
        let n = self.inputs.len();
        let k = DVector::from_iterator(n, self.inputs.iter().map(|xi| self.kernel.eval(xi, &x)));
        let diag = self.kernel.eval(&x, &x) + self.noise_variance + self.jitter;
        let l = self
            .chol
            .solve_lower_triangular(&k)
            .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
        let d2 = diag - l.norm_squared();

        let mut inputs = self.inputs.clone();
        inputs.push(x);
        let mut targets = self.targets.clone();
        targets.push(y);

        if !(d2 > 0.0 && d2.is_finite()) {
            return GpModel::fit(inputs, targets, self.kernel.clone(), self.noise_variance);
        }
        let mut chol = self.chol.clone().resize(n + 1, n + 1, 0.0);
        for j in 0..n {
            chol[(n, j)] = l[j];
        }
        chol[(n, n)] = d2.sqrt();

        let mut model = GpModel {
            inputs,
            targets,
            kernel: self.kernel.clone(),
            noise_variance: self.noise_variance,
            jitter: self.jitter,
            y_mean: 0.0,
            y_scale: 1.0,
            chol,
            alpha: DVector::zeros(0),
        };
        model.refresh_alpha();
        Ok(model)
    }

    fn refresh_alpha(&mut self) {
        let n = self.targets.len() as f64;
        self.y_mean = self.targets.iter().sum::<f64>() / n;
        let var = self.targets.iter().map(|y| (y - self.y_mean).powi(2)).sum::<f64>() / n;
        self.y_scale = if self.targets.len() > 1 && var > 0.0 {
            var.sqrt()
        } else {
            1.0
        };
        let y = DVector::from_iterator(
            self.targets.len(),
            self.targets.iter().map(|y| (y - self.y_mean) / self.y_scale),
        );
        let z = self
            .chol
            .solve_lower_triangular(&y)
            .expect("factor has a positive diagonal");
        self.alpha = self
            .chol
            .tr_solve_lower_triangular(&z)
            .expect("factor has a positive diagonal");
    }

    /// Posterior of the latent function at `x`, in objective units.
    pub fn posterior(&self, x: &[f64]) -> Posterior {
        let (mean, var) = self.posterior_unclamped(x);
        Posterior {
            mean,
            variance: var.max(0.0),
        }
    }

    /// Like [`posterior`](Self::posterior) without clamping the variance at zero.
    pub fn posterior_unclamped(&self, x: &[f64]) -> (f64, f64) {
        let k = DVector::from_iterator(
            self.inputs.len(),
            self.inputs.iter().map(|xi| self.kernel.eval(xi, x)),
        );
        let mean = k.dot(&self.alpha);
        let v = self
            .chol
            .solve_lower_triangular(&k)
            .expect("factor has a positive diagonal");
        let var = self.kernel.eval(x, x) - v.norm_squared();
        (
            self.y_mean + self.y_scale * mean,
            self.y_scale * self.y_scale * var,
        )
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    /// Extra diagonal added to make the Gram matrix factor (0 when none was needed).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn cholesky(&self) -> &DMatrix<f64> {
        &self.chol
    }

    /// Target standardization `(mean, scale)`.
    pub fn standardization(&self) -> (f64, f64) {
        (self.y_mean, self.y_scale)
    }
}

fn validate_inputs(inputs: &[Vec<f64>], dim: usize) -> Result<()> {
    for (i, x) in inputs.iter().enumerate() {
        if x.len() != dim {
            return Err(Error::invalid(format!(
                "input {i} has dimension {}, kernel expects {dim}",
                x.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("input {i} has non-finite entries")));
        }
    }
    Ok(())
}

fn gram(inputs: &[Vec<f64>], kernel: &Kernel) -> DMatrix<f64> {
    let n = inputs.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = kernel.eval(&inputs[i], &inputs[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

fn factor_with_jitter(gram: DMatrix<f64>, noise: f64) -> Result<(DMatrix<f64>, f64)> {
    let n = gram.nrows();
    let with_diag = |extra: f64| {
        let mut m = gram.clone();
        for i in 0..n {
            m[(i, i)] += noise + extra;
        }
        m
    };
    if let Some(c) = with_diag(0.0).cholesky() {
        return Ok((c.unpack(), 0.0));
    }
    for jitter in JITTER_LADDER {
        if let Some(c) = with_diag(jitter).cholesky() {
            return Ok((c.unpack(), jitter));
        }
    }
    Err(Error::Numerical(format!(
        "Gram matrix not positive definite even with jitter {:e}",
        JITTER_LADDER[JITTER_LADDER.len() - 1]
    )))
}
