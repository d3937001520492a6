use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::ensembles::SpectrumSpec;
use crate::error::{invalid, Error, Result};
use crate::rng::SeededStream;

/// Index set of the Gaussian process `v -> <Y, v>`.
#[derive(Debug, Clone, PartialEq)]
pub enum WidthSet {
    /// The unit sphere, where the supremum is `||Y||`.
    FullSphere,
    Points(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidthEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub trials: u64,
}

/// Mean of the chi distribution with `d` degrees of freedom.
pub fn chi_mean(d: usize) -> f64 {
    let d = d as f64;
    2f64.sqrt() * (ln_gamma((d + 1.0) / 2.0) - ln_gamma(d / 2.0)).exp()
}

/// Monte Carlo estimate of `E sup_{v in set} <Y, v>` with `Y ~ N(0, Σ)`.
pub fn gaussian_width_proxy(
    set: &WidthSet,
    spectrum: &SpectrumSpec,
    trials: u64,
    stream: &SeededStream,
) -> Result<WidthEstimate> {
    spectrum.validate()?;
    if trials < 100 {
        return Err(invalid("trials", "need at least 100"));
    }
    let sd: Vec<f64> = spectrum.eigenvalues().iter().map(|l| l.sqrt()).collect();
    let d = sd.len();
    if let WidthSet::Points(pts) = set {
        if pts.is_empty() {
            return Err(invalid("set", "empty index set"));
        }
        if let Some(bad) = pts.iter().find(|p| p.len() != d) {
            return Err(Error::DimensionMismatch { expected: vec![d], got: vec![bad.len()] });
        }
    }
    let mut rng = stream.component(0);
    let mut y = vec![0.0; d];
    let vals: Vec<f64> = (0..trials)
        .map(|_| {
            for (yj, s) in y.iter_mut().zip(&sd) {
                *yj = s * rng.sample::<f64, _>(StandardNormal);
            }
            match set {
                WidthSet::FullSphere => y.iter().map(|x| x * x).sum::<f64>().sqrt(),
                WidthSet::Points(pts) => pts
                    .iter()
                    .map(|v| v.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>())
                    .fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect();
    let mean = vals.iter().sum::<f64>() / trials as f64;
    let var = vals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
    Ok(WidthEstimate { mean, std_err: (var / trials as f64).sqrt(), trials })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream() -> SeededStream {
        SeededStream::new(29, "width", 0, 0)
    }

    #[test]
    fn chi_mean_values() {
        assert!((chi_mean(3) - 1.595_769_121_605_730_7).abs() < 1e-12);
        assert!((chi_mean(1) - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-12);
        for d in 2..=64 {
            let r = chi_mean(d) / (d as f64).sqrt();
            assert!((0.75..=1.0).contains(&r));
        }
    }

    #[test]
    fn sphere_matches_chi_mean() {
        let r = gaussian_width_proxy(&WidthSet::FullSphere, &SpectrumSpec::identity(3), 20_000, &stream()).unwrap();
        assert!((r.mean - chi_mean(3)).abs() < 3.0 * r.std_err);
    }

    #[test]
    fn single_vector_is_centered() {
        let set = WidthSet::Points(vec![vec![1.0, 2.0]]);
        let r = gaussian_width_proxy(&set, &SpectrumSpec::identity(2), 20_000, &stream()).unwrap();
        assert!(r.mean.abs() < 3.0 * r.std_err);
    }

    #[test]
    fn symmetric_pair_is_half_normal() {
        let v = vec![0.6, 0.8];
        let set = WidthSet::Points(vec![v.clone(), v.iter().map(|x| -x).collect()]);
        let r = gaussian_width_proxy(&set, &SpectrumSpec::identity(2), 20_000, &stream()).unwrap();
        assert!((r.mean - (2.0 / std::f64::consts::PI).sqrt()).abs() < 3.0 * r.std_err);
    }

    #[test]
    fn needs_enough_trials() {
        assert!(gaussian_width_proxy(&WidthSet::FullSphere, &SpectrumSpec::identity(2), 10, &stream()).is_err());
    }
}
