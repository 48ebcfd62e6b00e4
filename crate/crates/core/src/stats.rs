//! Sample statistics, compensated summation and weighted linear regression.

use serde::{Deserialize, Serialize};

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut acc = CompensatedSum::new();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Mean and standard error of the mean of independent samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStderr {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

impl MeanStderr {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { mean: f64::NAN, stderr: f64::NAN, count: 0 };
        }
        let mean = compensated_sum(xs.iter().copied()) / n as f64;
        if n == 1 {
            return Self { mean, stderr: f64::INFINITY, count: 1 };
        }
        let var = compensated_sum(xs.iter().map(|x| (x - mean).powi(2))) / (n - 1) as f64;
        Self { mean, stderr: (var / n as f64).sqrt(), count: n }
    }
}

/// Result of a straight-line fit `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub intercept_stderr: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
    /// Weighted residual sum of squares divided by the degrees of freedom.
    pub reduced_chi2: f64,
}

/// Weighted least squares line fit.
///
/// With `weights = None` the fit is ordinary least squares and the parameter
/// errors come from the residual scatter. With weights `w_i = 1/σ_i²` the
/// errors use the stated variances, inflated by the reduced chi-square when
/// that exceeds one.
pub fn fit_line(x: &[f64], y: &[f64], weights: Option<&[f64]>) -> Option<LineFit> {
    let n = x.len();
    if n < 3 || y.len() != n || weights.is_some_and(|w| w.len() != n) {
        return None;
    }
    let w: Vec<f64> = match weights {
        Some(w) => w.to_vec(),
        None => vec![1.0; n],
    };
    let sw: f64 = w.iter().sum();
    let xm = x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let ym = y.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let sxx: f64 = x.iter().zip(&w).map(|(a, b)| b * (a - xm).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = (0..n).map(|i| w[i] * (x[i] - xm) * (y[i] - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let rss: f64 = (0..n).map(|i| w[i] * (y[i] - intercept - slope * x[i]).powi(2)).sum();
    let tss: f64 = (0..n).map(|i| w[i] * (y[i] - ym).powi(2)).sum();
    let dof = (n - 2) as f64;
    let reduced_chi2 = rss / dof;
    let scale = if weights.is_some() { reduced_chi2.max(1.0) } else { reduced_chi2 };
    let slope_var = scale / sxx;
    let intercept_var = scale * (1.0 / sw + xm * xm / sxx);
    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };
    Some(LineFit {
        intercept,
        slope,
        intercept_stderr: intercept_var.sqrt(),
        slope_stderr: slope_var.sqrt(),
        r_squared,
        reduced_chi2,
    })
}
