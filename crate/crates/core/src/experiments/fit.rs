use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Fits with `R^2` below this are flagged as a model mismatch.
pub const POOR_FIT_R2: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Abscissa {
    LogN,
    LogLogN,
}

impl Abscissa {
    pub fn transform(self, n: f64) -> f64 {
        match self {
            Abscissa::LogN => n.ln(),
            Abscissa::LogLogN => n.ln().ln(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub slope_std_err: f64,
    pub abscissa: Abscissa,
    pub points: usize,
    pub poor_fit: bool,
}

/// Ordinary least squares of `ln(mean)` on the transformed `N`.
pub fn exponent_fit(points: &[(u64, f64)], abscissa: Abscissa) -> Result<FitResult> {
    if points.len() < 5 {
        return Err(invalid("points", "need at least 5 grid points"));
    }
    let lo = points.iter().map(|p| p.0).min().unwrap_or(0);
    let hi = points.iter().map(|p| p.0).max().unwrap_or(0);
    if lo < 2 || (hi as f64) < 64.0 * lo as f64 {
        return Err(invalid("points", "grid must start at N >= 2 and span a factor of at least 2^6"));
    }
    if let Some(bad) = points.iter().find(|p| !(p.1 > 0.0 && p.1.is_finite())) {
        return Err(invalid("means", format!("non-positive mean {} at N = {}", bad.1, bad.0)));
    }
    let xs: Vec<f64> = points.iter().map(|p| abscissa.transform(p.0 as f64)).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r2 = if syy > 0.0 { (1.0 - sse / syy).clamp(0.0, 1.0) } else { 1.0 };
    let slope_std_err = (sse / (m - 2.0) / sxx).sqrt();
    Ok(FitResult { slope, intercept, r2, slope_std_err, abscissa, points: points.len(), poor_fit: r2 < POOR_FIT_R2 })
}
