//! Welch's one-way ANOVA, the F distribution tail, and order statistics.

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WelchAnova {
    pub f_value: f64,
    pub p_value: f64,
    pub df_between: f64,
    pub df_within: f64,
}

/// Welch's heteroscedastic one-way ANOVA.
///
/// Every group needs at least two samples and nonzero variance.
pub fn welch_anova(groups: &[&[f64]]) -> Result<WelchAnova> {
    let k = groups.len();
    if k < 2 {
        return Err(Error::invalid("welch_anova needs at least two groups"));
    }
    let mut n = Vec::with_capacity(k);
    let mut mean = Vec::with_capacity(k);
    let mut weight = Vec::with_capacity(k);
    for (i, g) in groups.iter().enumerate() {
        if g.len() < 2 {
            return Err(Error::invalid(format!("group {i} has fewer than two samples")));
        }
        if !g.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid(format!("group {i} has non-finite values")));
        }
        let len = g.len() as f64;
        let m = g.iter().sum::<f64>() / len;
        let var = g.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (len - 1.0);
        if !(var > 0.0) {
            return Err(Error::invalid(format!("group {i} has zero variance")));
        }
        n.push(len);
        mean.push(m);
        weight.push(len / var);
    }
    let kf = k as f64;
    let w_sum: f64 = weight.iter().sum();
    // A weighted mean lies between the group means; clamping keeps it exact
    // when they all coincide.
    let lo = mean.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = mean.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let grand = (weight.iter().zip(&mean).map(|(w, m)| w * m).sum::<f64>() / w_sum).clamp(lo, hi);
    let between = weight
        .iter()
        .zip(&mean)
        .map(|(w, m)| w * (m - grand) * (m - grand))
        .sum::<f64>()
        / (kf - 1.0);
    let tmp = weight
        .iter()
        .zip(&n)
        .map(|(w, n)| (1.0 - w / w_sum).powi(2) / (n - 1.0))
        .sum::<f64>();
    let denom = 1.0 + 2.0 * (kf - 2.0) / (kf * kf - 1.0) * tmp;
    let f_value = between / denom;
    let df_between = kf - 1.0;
    let df_within = (kf * kf - 1.0) / (3.0 * tmp);
    let p_value = f_sf(f_value, df_between, df_within)?;
    Ok(WelchAnova {
        f_value,
        p_value,
        df_between,
        df_within,
    })
}

/// Upper tail `P(F > f)` of the F distribution with `(d1, d2)` degrees of freedom.
pub fn f_sf(f: f64, d1: f64, d2: f64) -> Result<f64> {
    if !(d1 > 0.0 && d2 > 0.0) || f.is_nan() {
        return Err(Error::invalid("F distribution needs positive degrees of freedom"));
    }
    if f <= 0.0 {
        return Ok(1.0);
    }
    if f.is_infinite() {
        return Ok(0.0);
    }
    reg_inc_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f))
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) || !(0.0..=1.0).contains(&x) {
        return Err(Error::invalid("incomplete beta needs a, b > 0 and x in [0, 1]"));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(x);
    }
    let ln_front = libm::lgamma(a + b) - libm::lgamma(a) - libm::lgamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    // The continued fraction converges fast for x below the mean; use the
    // symmetry I_x(a, b) = 1 − I_{1−x}(b, a) otherwise.
    if x < (a + 1.0) / (a + b + 2.0) {
        Ok((front * beta_cf(a, b, x)? / a).clamp(0.0, 1.0))
    } else {
        Ok((1.0 - front * beta_cf(b, a, 1.0 - x)? / b).clamp(0.0, 1.0))
    }
}

/// Modified Lentz evaluation of the incomplete-beta continued fraction.
fn beta_cf(a: f64, b: f64, x: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-15;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let step = d * c;
        h *= step;
        if (step - 1.0).abs() < EPS {
            return Ok(h);
        }
    }
    Err(Error::Numerical("incomplete beta continued fraction did not converge".into()))
}

/// Five-number summary plus mean. Quantiles interpolate linearly between
/// order statistics (position `q·(n−1)`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

pub fn summarize(values: &[f64]) -> Option<Summary> {
    if values.is_empty() || values.iter().any(|v| v.is_nan()) {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(Summary {
        count: sorted.len(),
        mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
        min: sorted[0],
        q1: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        q3: quantile_sorted(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
    })
}

/// Linear-interpolation quantile of an ascending, non-empty slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> Option<f64> {
    summarize(values).map(|s| s.median)
}
