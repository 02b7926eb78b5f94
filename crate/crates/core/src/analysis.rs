//! Rate predictions and the fits used to read lifetime-vs-χ data.

use serde::{Deserialize, Serialize};

use crate::bath::RateModel;
use crate::error::{Error, Result};
use crate::stats::{fit_line, fit_through_origin, neumaier_sum, LineFit};

/// Probability that a freshly created adjacent pair winds around the chain
/// before re-annihilating, for a single pair on `len` sites.
pub fn winding_probability(len: usize, rates: &RateModel) -> f64 {
    let denom = rates.gamma_minus + 2.0 * rates.gamma_zero;
    if denom == 0.0 {
        return 0.0;
    }
    let a = 2.0 * rates.gamma_zero / denom;
    let l = len as f64;
    a / ((l - 2.0) - a * (l - 4.0))
}

/// Protocol-off logical error rate `L γ+ h(1)` from the single-pair walk.
pub fn protocol_off_rate(len: usize, rates: &RateModel) -> f64 {
    len as f64 * rates.gamma_plus * winding_probability(len, rates)
}

/// Inverse of [`protocol_off_rate`]; infinite when the rate vanishes.
pub fn protocol_off_lifetime(len: usize, rates: &RateModel) -> f64 {
    1.0 / protocol_off_rate(len, rates)
}

/// Inputs of the low-χ cycled error rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycParams {
    pub len: usize,
    pub lambda: usize,
    pub chi: f64,
    pub rates: RateModel,
    /// Parallelism constant `c` in `f(λ) = c λ`.
    pub c: f64,
}

/// `Γ_Cyc = L γ+ (γ0 / λχ) (γ0 / γ-) / (L - 2 - 2λ) · cλ / L`.
pub fn predict_gamma_cyc(p: &CycParams) -> Result<f64> {
    let (l, lam) = (p.len as f64, p.lambda as f64);
    if p.len <= 2 + 2 * p.lambda {
        return Err(Error::Domain(format!(
            "L = {} must exceed 2 + 2λ = {}",
            p.len,
            2 + 2 * p.lambda
        )));
    }
    if !(p.chi > 0.0) || !p.chi.is_finite() {
        return Err(Error::Domain(format!("χ = {} must be positive", p.chi)));
    }
    if !(p.c > 0.0) {
        return Err(Error::Domain(format!("c = {} must be positive", p.c)));
    }
    let r = &p.rates;
    Ok(l * r.gamma_plus * (r.gamma_zero / (lam * p.chi)) * (r.gamma_zero / r.gamma_minus)
        / (l - 2.0 - 2.0 * lam)
        * (p.c * lam / l))
}

/// One measured point of a lifetime-vs-χ curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifetimePoint {
    pub len: usize,
    pub lambda: usize,
    pub chi: f64,
    pub mean: f64,
    pub std_error: f64,
}

/// Fitted parallelism constant with per-point relative residuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelFit {
    pub c: f64,
    pub c_error: f64,
    /// `(predicted - measured) / measured` per input point.
    pub residuals: Vec<f64>,
}

impl ParallelFit {
    pub fn max_abs_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

/// Weighted least squares for `c` in `lifetime = 1 / Γ_Cyc(c)`, all points
/// sharing `rates`. Points should lie in the linear regime.
pub fn fit_parallel_constant(points: &[LifetimePoint], rates: &RateModel) -> Result<ParallelFit> {
    if points.is_empty() {
        return Err(Error::InsufficientData("no points to fit".into()));
    }
    // lifetime = k / c with k = 1 / Γ_Cyc(c = 1); fit u = 1 / c.
    let mut ks = Vec::with_capacity(points.len());
    for p in points {
        let g = predict_gamma_cyc(&CycParams {
            len: p.len,
            lambda: p.lambda,
            chi: p.chi,
            rates: *rates,
            c: 1.0,
        })?;
        ks.push(1.0 / g);
    }
    let w: Vec<f64> = points
        .iter()
        .map(|p| if p.std_error > 0.0 { 1.0 / (p.std_error * p.std_error) } else { 1.0 })
        .collect();
    let skk = neumaier_sum(ks.iter().zip(&w).map(|(k, w)| w * k * k));
    let sky = neumaier_sum(ks.iter().zip(&w).zip(points).map(|((k, w), p)| w * k * p.mean));
    let u = sky / skk;
    let u_err = (1.0 / skk).sqrt();
    let residuals = ks
        .iter()
        .zip(points)
        .map(|(k, p)| (k * u - p.mean) / p.mean)
        .collect();
    Ok(ParallelFit {
        c: 1.0 / u,
        c_error: u_err / (u * u),
        residuals,
    })
}

/// A point after rescaling: `x = χL`, `y = lifetime × Γ_pred`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapsedPoint {
    pub len: usize,
    pub x: f64,
    pub y: f64,
    pub y_error: f64,
}

/// Rescales each point by its predicted rate: `Γ_Cyc(c = 1)` for χ > 0 and
/// the protocol-off rate for χ = 0.
pub fn rescale_collapse(points: &[LifetimePoint], rates: &RateModel) -> Result<Vec<CollapsedPoint>> {
    let mut sizes: Vec<usize> = points.iter().map(|p| p.len).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 2 {
        return Err(Error::InsufficientData("collapse needs at least two chain lengths".into()));
    }
    points
        .iter()
        .map(|p| {
            let rate = if p.chi == 0.0 {
                protocol_off_rate(p.len, rates)
            } else {
                predict_gamma_cyc(&CycParams {
                    len: p.len,
                    lambda: p.lambda,
                    chi: p.chi,
                    rates: *rates,
                    c: 1.0,
                })?
            };
            Ok(CollapsedPoint {
                len: p.len,
                x: p.chi * p.len as f64,
                y: p.mean * rate,
                y_error: p.std_error * rate,
            })
        })
        .collect()
}

/// Location of the lifetime maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiCritical {
    pub chi_c: f64,
    pub error: f64,
    /// Index of the empirical maximum.
    pub index: usize,
}

fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> Option<f64> {
    // Newton divided differences.
    let d01 = (y[1] - y[0]) / (x[1] - x[0]);
    let d12 = (y[2] - y[1]) / (x[2] - x[1]);
    let a = (d12 - d01) / (x[2] - x[0]);
    if !(a < 0.0) {
        return None;
    }
    let b = d01 - a * (x[0] + x[1]);
    Some(-b / (2.0 * a))
}

/// Vertex of the parabola through the empirical maximum and its two
/// neighbours (χ ascending). The error is the largest vertex shift when
/// each of the three lifetimes is moved by one standard error.
pub fn estimate_chi_c(chi: &[f64], mean: &[f64], std_error: &[f64]) -> Result<ChiCritical> {
    let n = chi.len();
    if n < 3 || mean.len() != n || std_error.len() != n {
        return Err(Error::InsufficientData(format!("{n} points; need at least 3")));
    }
    if chi.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidConfig("χ values must be strictly increasing".into()));
    }
    let i = (0..n)
        .max_by(|&a, &b| mean[a].total_cmp(&mean[b]))
        .expect("nonempty");
    if i == 0 || i == n - 1 {
        return Err(Error::NoInteriorMaximum);
    }
    let x = [chi[i - 1], chi[i], chi[i + 1]];
    let y = [mean[i - 1], mean[i], mean[i + 1]];
    let centre = parabola_vertex(x, y).ok_or(Error::NoInteriorMaximum)?;
    let mut error = 0.0f64;
    for k in 0..3 {
        for sign in [-1.0, 1.0] {
            let mut yp = y;
            yp[k] += sign * std_error[i - 1 + k];
            let v = parabola_vertex(x, yp).map_or(
                if (k == 0) == (sign > 0.0) { x[0] } else { x[2] },
                |v| v.clamp(x[0], x[2]),
            );
            error = error.max((v - centre).abs());
        }
    }
    Ok(ChiCritical {
        chi_c: centre,
        error,
        index: i,
    })
}

/// Second-order lifetime model: `τ(χ) = (1 - g χ) / Γ_Cyc(χ)` with
/// `g = g0 λ² L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisModel {
    pub rates: RateModel,
    pub c: f64,
    pub g0: f64,
}

impl AnalysisModel {
    pub fn g(&self, lambda: usize, len: usize) -> f64 {
        self.g0 * (lambda * lambda) as f64 * len as f64
    }

    pub fn chi_c(&self, lambda: usize, len: usize) -> f64 {
        1.0 / (2.0 * self.g(lambda, len))
    }

    pub fn lifetime(&self, len: usize, lambda: usize, chi: f64) -> Result<f64> {
        let rate = predict_gamma_cyc(&CycParams {
            len,
            lambda,
            chi,
            rates: self.rates,
            c: self.c,
        })?;
        Ok((1.0 - chi * self.g(lambda, len)) / rate)
    }
}

/// Straight line through the origin for `χ_c` against `1/L`.
pub fn fit_inverse_length(lens: &[usize], chi_c: &[f64]) -> Result<LineFit> {
    let x: Vec<f64> = lens.iter().map(|&l| 1.0 / l as f64).collect();
    fit_through_origin(&x, chi_c).ok_or_else(|| Error::InsufficientData("need two lengths".into()))
}

/// Log-log linear fit of a decaying tail.
pub fn power_law_fit(chi: &[f64], mean: &[f64]) -> Result<LineFit> {
    if chi.iter().chain(mean).any(|&v| !(v > 0.0)) {
        return Err(Error::Domain("power-law fit needs positive data".into()));
    }
    let x: Vec<f64> = chi.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = mean.iter().map(|v| v.ln()).collect();
    fit_line(&x, &y).ok_or_else(|| Error::InsufficientData("need two distinct χ".into()))
}
