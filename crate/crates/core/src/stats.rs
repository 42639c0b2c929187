//! Small-sample statistics for experiment aggregates.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; 0 for fewer than two samples.
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64
}

/// Standard error of the sample mean.
pub fn stderr(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Linear-interpolation quantile (type 7) of unsorted data.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Sample variance and its delete-one jackknife standard error.
pub fn jackknife_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    let var = variance(xs);
    if n < 3 {
        return (var, f64::NAN);
    }
    let nf = n as f64;
    let m = mean(xs);
    let centered: Vec<f64> = xs.iter().map(|x| x - m).collect();
    let ss: f64 = centered.iter().map(|d| d * d).sum();
    // Leaving out x_i shifts the mean by -d_i/(n-1); the remaining sum of
    // squares about the new mean is ss - d_i² n/(n-1).
    let loo: Vec<f64> = centered
        .iter()
        .map(|d| (ss - d * d * nf / (nf - 1.0)) / (nf - 2.0))
        .collect();
    let lm = mean(&loo);
    let se = ((nf - 1.0) / nf * loo.iter().map(|v| (v - lm).powi(2)).sum::<f64>()).sqrt();
    (var, se)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub exponent: f64,
    pub intercept: f64,
    /// Standard error of the exponent.
    pub stderr: f64,
    pub r_squared: f64,
}

impl FitResult {
    /// Two-sided confidence interval for the exponent using Student's t
    /// with `points − 2` degrees of freedom.
    pub fn confidence_interval(&self, points: usize, level: f64) -> (f64, f64) {
        if points < 3 || !self.stderr.is_finite() {
            return (f64::NEG_INFINITY, f64::INFINITY);
        }
        let q = StudentsT::new(0.0, 1.0, (points - 2) as f64)
            .map(|d| d.inverse_cdf(0.5 + level / 2.0))
            .unwrap_or(f64::INFINITY);
        (self.exponent - q * self.stderr, self.exponent + q * self.stderr)
    }
}

/// Ordinary least squares of `y` on `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<FitResult> {
    let n = x.len();
    if n != y.len() || n < 2 {
        return Err(Error::InvalidParameter("fit needs at least two paired points".into()));
    }
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("fit abscissae are all equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let stderr = if n > 2 {
        (sse / (n - 2) as f64 / sxx).sqrt()
    } else {
        f64::NAN
    };
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(FitResult {
        exponent: slope,
        intercept,
        stderr,
        r_squared,
    })
}

/// Least squares on `(ln x, ln y)`; all values must be positive.
pub fn loglog_fit(x: &[f64], y: &[f64]) -> Result<FitResult> {
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidParameter("log-log fit needs positive data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    pub slope: f64,
    pub slope_stderr: f64,
}

impl Trend {
    /// Slope is at most `sigmas` standard errors above zero.
    pub fn no_increase(&self, sigmas: f64) -> bool {
        self.slope <= sigmas * self.slope_stderr
    }

    /// Slope is within `sigmas` standard errors of zero.
    pub fn flat(&self, sigmas: f64) -> bool {
        self.slope.abs() <= sigmas * self.slope_stderr
    }
}

/// Slope of `y` against `x` weighted by `1/se²`, with its standard error.
/// Points with zero or non-finite error are dropped; returns `None` when
/// fewer than two remain.
pub fn weighted_trend(x: &[f64], y: &[f64], se: &[f64]) -> Option<Trend> {
    let pts: Vec<(f64, f64, f64)> = x
        .iter()
        .zip(y)
        .zip(se)
        .filter(|((a, b), s)| a.is_finite() && b.is_finite() && s.is_finite() && **s > 0.0)
        .map(|((a, b), s)| (*a, *b, 1.0 / (s * s)))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let w: f64 = pts.iter().map(|p| p.2).sum();
    let mx = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / w;
    let my = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / w;
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
    Some(Trend {
        slope: sxy / sxx,
        slope_stderr: (1.0 / sxx).sqrt(),
    })
}
