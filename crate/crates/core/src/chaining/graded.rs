use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Result};

/// Spacing of the evaluation grid over `p in [1, q]`.
pub const GRADED_STEP: f64 = 0.05;
/// Orders above this are truncated and flagged.
pub const SATURATION_Q: f64 = 1e5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum OneDimLaw {
    Gaussian {
        sigma: f64,
    },
    /// `±scale` with equal probability.
    Rademacher {
        scale: f64,
    },
    /// Density `exp(-|x|/scale) / (2 scale)`.
    Laplace {
        scale: f64,
    },
    Constant {
        value: f64,
    },
    Empirical {
        samples: Vec<f64>,
    },
}

impl OneDimLaw {
    /// `ln ||X||_{L_p}`.
    fn ln_moment(&self, p: f64) -> f64 {
        match self {
            OneDimLaw::Gaussian { sigma } => sigma.abs().ln() + ln_standard_gaussian_moment(p),
            OneDimLaw::Rademacher { scale } => scale.abs().ln(),
            OneDimLaw::Laplace { scale } => scale.abs().ln() + ln_gamma(p + 1.0) / p,
            OneDimLaw::Constant { value } => value.abs().ln(),
            OneDimLaw::Empirical { samples } => {
                let m = samples.iter().fold(0.0f64, |a, x| a.max(x.abs()));
                if m == 0.0 {
                    return f64::NEG_INFINITY;
                }
                let mean = samples.iter().map(|x| (x.abs() / m).powf(p)).sum::<f64>() / samples.len() as f64;
                m.ln() + mean.ln() / p
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            OneDimLaw::Gaussian { sigma } => sigma.is_finite(),
            OneDimLaw::Rademacher { scale } | OneDimLaw::Laplace { scale } => scale.is_finite(),
            OneDimLaw::Constant { value } => value.is_finite(),
            OneDimLaw::Empirical { samples } => !samples.is_empty() && samples.iter().all(|x| x.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(invalid("law", "parameters must be finite (and samples non-empty)"))
        }
    }
}

fn ln_standard_gaussian_moment(p: f64) -> f64 {
    // E|Z|^p = 2^{p/2} Γ((p+1)/2) / sqrt(pi)
    0.5 * 2f64.ln() + (ln_gamma((p + 1.0) / 2.0) - 0.5 * std::f64::consts::PI.ln()) / p
}

/// `||Z||_{L_p}` for a standard Gaussian.
pub fn gaussian_abs_moment(p: f64) -> f64 {
    ln_standard_gaussian_moment(p).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradedNormQuery {
    pub law: OneDimLaw,
    pub q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradedNorm {
    pub value: f64,
    /// Grid order attaining the supremum.
    pub argmax_p: f64,
    /// Set when `q` exceeded the evaluation cap or a moment overflowed.
    pub saturated: bool,
}

/// `sup_{1 <= p <= q} ||f||_{L_p} / sqrt(p)` on a grid of step 0.05 plus both endpoints.
pub fn graded_lq_norm(query: &GradedNormQuery) -> Result<GradedNorm> {
    query.law.validate()?;
    if query.q.is_nan() || query.q < 1.0 {
        return Err(invalid("q", "must be >= 1"));
    }
    let mut saturated = !query.q.is_finite() || query.q > SATURATION_Q;
    let q = query.q.min(SATURATION_Q);
    let steps = ((q - 1.0) / GRADED_STEP).floor() as usize;
    let mut best = GradedNorm { value: f64::NEG_INFINITY, argmax_p: 1.0, saturated: false };
    let mut consider = |p: f64| {
        let v = (query.law.ln_moment(p) - 0.5 * p.ln()).exp();
        if !v.is_finite() {
            saturated = true;
            return;
        }
        if v > best.value {
            best.value = v;
            best.argmax_p = p;
        }
    };
    for k in 0..=steps {
        consider(1.0 + GRADED_STEP * k as f64);
    }
    consider(q);
    best.saturated = saturated;
    if best.value == f64::NEG_INFINITY {
        best.value = if saturated { f64::INFINITY } else { 0.0 };
    }
    Ok(best)
}
