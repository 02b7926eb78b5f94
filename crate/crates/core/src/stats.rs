//! Small numerical helpers shared by the estimators and the analysis layer.

use serde::{Deserialize, Serialize};

/// Compensated (Neumaier) summation.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Sample mean and standard error of the mean.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = neumaier_sum(values.iter().copied()) / n as f64;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let ss = neumaier_sum(values.iter().map(|v| (v - mean) * (v - mean)));
    (mean, (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt())
}

/// Ordinary least squares `y = a + b x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub r_squared: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = neumaier_sum(x.iter().copied()) / n as f64;
    let my = neumaier_sum(y.iter().copied()) / n as f64;
    let sxx = neumaier_sum(x.iter().map(|v| (v - mx) * (v - mx)));
    let sxy = neumaier_sum(x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)));
    let syy = neumaier_sum(y.iter().map(|v| (v - my) * (v - my)));
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res = neumaier_sum(x.iter().zip(y).map(|(a, b)| {
        let r = b - intercept - slope * a;
        r * r
    }));
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Some(LineFit {
        intercept,
        slope,
        r_squared,
    })
}

/// Least squares `y = b x` through the origin. `r_squared` compares the
/// residuals with the spread of `y` about its mean.
pub fn fit_through_origin(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let sxx = neumaier_sum(x.iter().map(|v| v * v));
    if sxx == 0.0 {
        return None;
    }
    let slope = neumaier_sum(x.iter().zip(y).map(|(a, b)| a * b)) / sxx;
    let my = neumaier_sum(y.iter().copied()) / n as f64;
    let syy = neumaier_sum(y.iter().map(|v| (v - my) * (v - my)));
    let ss_res = neumaier_sum(x.iter().zip(y).map(|(a, b)| (b - slope * a).powi(2)));
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Some(LineFit {
        intercept: 0.0,
        slope,
        r_squared,
    })
}
