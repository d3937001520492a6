//! Component ensembles: covariance spectra, distribution families and
//! batch sampling of the rank-one data `X_i^(1), ..., X_i^(p)`.
//!
//! Covariances are diagonal. Coordinate `j` of a component with spectrum
//! `lambda` is `sqrt(lambda_j) * xi_j` where `xi_j` is a unit-variance draw
//! from the family.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{SeededStream, CORE_COMPONENT};
use crate::tensor::{Population, RankOneSum, SampleMatrix};

/// Eigenvalue profile of a diagonal covariance operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectrumSpec {
    Identity { d: usize },
    Geometric { d: usize, ratio: f64 },
    Polynomial { d: usize, exponent: f64 },
    Explicit { eigenvalues: Vec<f64> },
}

impl SpectrumSpec {
    pub fn identity(d: usize) -> Self {
        SpectrumSpec::Identity { d }
    }

    /// Checks the type invariants: positive dimension, eigenvalues strictly
    /// positive and non-increasing.
    pub fn validate(&self) -> Result<()> {
        match self {
            SpectrumSpec::Identity { d } => {
                if *d == 0 {
                    return Err(Error::InvalidSpectrum("dimension must be positive".into()));
                }
            }
            SpectrumSpec::Geometric { d, ratio } => {
                if *d == 0 {
                    return Err(Error::InvalidSpectrum("dimension must be positive".into()));
                }
                if !(*ratio > 0.0 && *ratio < 1.0) {
                    return Err(Error::InvalidSpectrum(format!("geometric ratio {ratio} not in (0,1)")));
                }
            }
            SpectrumSpec::Polynomial { d, exponent } => {
                if *d == 0 {
                    return Err(Error::InvalidSpectrum("dimension must be positive".into()));
                }
                if !(*exponent > 0.0 && exponent.is_finite()) {
                    return Err(Error::InvalidSpectrum(format!("polynomial exponent {exponent} must be > 0")));
                }
            }
            SpectrumSpec::Explicit { eigenvalues } => {
                if eigenvalues.is_empty() {
                    return Err(Error::InvalidSpectrum("empty eigenvalue list".into()));
                }
                if eigenvalues.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
                    return Err(Error::InvalidSpectrum("eigenvalues must be finite and > 0".into()));
                }
                if eigenvalues.windows(2).any(|w| w[1] > w[0]) {
                    return Err(Error::InvalidSpectrum("eigenvalues must be sorted non-increasing".into()));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            SpectrumSpec::Identity { d } | SpectrumSpec::Geometric { d, .. } | SpectrumSpec::Polynomial { d, .. } => *d,
            SpectrumSpec::Explicit { eigenvalues } => eigenvalues.len(),
        }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        match self {
            SpectrumSpec::Identity { d } => vec![1.0; *d],
            SpectrumSpec::Geometric { d, ratio } => (0..*d).map(|j| ratio.powi(j as i32)).collect(),
            SpectrumSpec::Polynomial { d, exponent } => (1..=*d).map(|j| (j as f64).powf(-exponent)).collect(),
            SpectrumSpec::Explicit { eigenvalues } => eigenvalues.clone(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.eigenvalues().iter().all(|&l| l == 1.0)
    }

    /// Operator norm, the largest eigenvalue.
    pub fn op_norm(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn trace(&self) -> f64 {
        self.eigenvalues().iter().sum()
    }

    /// Multiplies every eigenvalue by `c > 0`.
    pub fn scaled(&self, c: f64) -> SpectrumSpec {
        SpectrumSpec::Explicit { eigenvalues: self.eigenvalues().into_iter().map(|l| l * c).collect() }
    }
}

/// `Tr(Sigma) / ||Sigma||`, always in `[1, d]`.
pub fn effective_rank(spectrum: &SpectrumSpec) -> f64 {
    spectrum.trace() / spectrum.op_norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Gaussian,
    ScaledRademacher,
    UniformCube,
    LaplaceIsotropic,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::ScaledRademacher => "scaled_rademacher",
            Family::UniformCube => "uniform_cube",
            Family::LaplaceIsotropic => "laplace_isotropic",
        }
    }

    /// One centered, unit-variance draw.
    #[inline]
    pub fn draw_unit(self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Family::Gaussian => StandardNormal.sample(rng),
            Family::ScaledRademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            Family::UniformCube => (2.0 * rng.random::<f64>() - 1.0) * 3f64.sqrt(),
            Family::LaplaceIsotropic => {
                let e: f64 = Exp1.sample(rng);
                let m = e * std::f64::consts::FRAC_1_SQRT_2;
                if rng.random::<bool>() {
                    m
                } else {
                    -m
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentEnsemble {
    pub spectrum: SpectrumSpec,
    pub family: Family,
}

impl ComponentEnsemble {
    pub fn new(spectrum: SpectrumSpec, family: Family) -> Self {
        Self { spectrum, family }
    }

    pub fn gaussian_identity(d: usize) -> Self {
        Self::new(SpectrumSpec::identity(d), Family::Gaussian)
    }

    pub fn dim(&self) -> usize {
        self.spectrum.dim()
    }

    pub fn validate(&self) -> Result<()> {
        self.spectrum.validate()?;
        if self.family == Family::LaplaceIsotropic && !self.spectrum.is_identity() {
            return Err(Error::LaplaceNeedsIdentity);
        }
        Ok(())
    }
}

/// How the `p` components of one sample are coupled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CorrelationMode {
    Independent,
    /// Each component mixes `sqrt(share)` of a common Gaussian core with
    /// `sqrt(1 - share)` of its own noise.
    SharedCore {
        share: f64,
    },
    /// `X_i^(1) = ... = X_i^(p)`; requires identical ensembles.
    Identical,
}

/// Draws `n` samples of every component.
///
/// Component `k` reads from `stream.component(k)`; the shared core, when
/// present, reads from [`CORE_COMPONENT`].
pub fn sample_batch(
    ensembles: &[ComponentEnsemble],
    corr: CorrelationMode,
    n: usize,
    stream: &SeededStream,
) -> Result<RankOneSum> {
    if ensembles.is_empty() {
        return Err(invalid("ensembles", "at least one component is required"));
    }
    if n == 0 {
        return Err(invalid("N", "must be at least 1"));
    }
    for e in ensembles {
        e.validate()?;
    }
    let p = ensembles.len();
    match corr {
        CorrelationMode::Independent => {
            let samples = ensembles
                .iter()
                .enumerate()
                .map(|(k, e)| Arc::new(sample_component(e, n, &mut stream.component(k as u64), None)))
                .collect();
            RankOneSum::new(samples, Population::Zero)
        }
        CorrelationMode::SharedCore { share } => {
            if !(0.0..=1.0).contains(&share) {
                return Err(invalid("share", format!("{share} not in [0,1]")));
            }
            let dmax = ensembles.iter().map(|e| e.dim()).max().unwrap_or(0);
            let mut core_rng = stream.component(CORE_COMPONENT);
            let core: Vec<f64> = (0..n * dmax).map(|_| StandardNormal.sample(&mut core_rng)).collect();
            let core = SampleMatrix::from_rows(n, dmax, core);
            let samples = ensembles
                .iter()
                .enumerate()
                .map(|(k, e)| Arc::new(sample_component(e, n, &mut stream.component(k as u64), Some((&core, share)))))
                .collect();
            let population = if share == 0.0 { Population::Zero } else { Population::shared_core(ensembles, share) };
            RankOneSum::new(samples, population)
        }
        CorrelationMode::Identical => {
            if ensembles.iter().any(|e| e != &ensembles[0]) {
                return Err(invalid("ensembles", "identical mode requires equal ensembles"));
            }
            let e = &ensembles[0];
            let shared = Arc::new(sample_component(e, n, &mut stream.component(0), None));
            let population = Population::identical(e, p)?;
            RankOneSum::new(vec![shared; p], population)
        }
    }
}

fn sample_component(
    e: &ComponentEnsemble,
    n: usize,
    rng: &mut ChaCha8Rng,
    core: Option<(&SampleMatrix, f64)>,
) -> SampleMatrix {
    let scales: Vec<f64> = e.spectrum.eigenvalues().iter().map(|l| l.sqrt()).collect();
    let d = scales.len();
    let mut data = Vec::with_capacity(n * d);
    match core {
        None => {
            for _ in 0..n {
                for s in &scales {
                    data.push(s * e.family.draw_unit(rng));
                }
            }
        }
        Some((core, share)) => {
            let (a, b) = (share.sqrt(), (1.0 - share).sqrt());
            for i in 0..n {
                let g = core.row(i);
                for (j, s) in scales.iter().enumerate() {
                    data.push(s * (a * g[j] + b * e.family.draw_unit(rng)));
                }
            }
        }
    }
    SampleMatrix::from_rows(n, d, data)
}

/// Orlicz psi_2 norm of a centered one-dimensional marginal with the given
/// variance.
pub fn subgaussian_norm_1d(family: Family, variance: f64) -> Result<f64> {
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(invalid("variance", format!("{variance} must be positive")));
    }
    let sigma = variance.sqrt();
    match family {
        Family::Gaussian => Ok(sigma * (8.0f64 / 3.0).sqrt()),
        Family::ScaledRademacher => Ok(sigma / std::f64::consts::LN_2.sqrt()),
        Family::UniformCube => Ok(sigma * uniform_psi2_unit()),
        Family::LaplaceIsotropic => Err(Error::UnsupportedFamily(family.name())),
    }
}

/// psi_2 norm of the uniform law on `[-sqrt 3, sqrt 3]`: root of
/// `E exp(X^2/c^2) = 2`, found by bisection to relative tolerance 1e-6.
fn uniform_psi2_unit() -> f64 {
    let a = 3f64.sqrt();
    // E exp(X^2/c^2) = (1/a) * int_0^a exp(x^2/c^2) dx, composite Simpson.
    let mgf = |c: f64| {
        let m = 2000;
        let h = a / m as f64;
        let f = |x: f64| (x * x / (c * c)).exp();
        let mut s = f(0.0) + f(a);
        for i in 1..m {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(i as f64 * h);
        }
        s * h / 3.0 / a
    };
    let ln2 = std::f64::consts::LN_2.sqrt();
    // Jensen gives the lower end, the sup bound |X| <= a the upper end.
    let (mut lo, mut hi) = (1.0 / ln2, a / ln2);
    while (hi - lo) > 1e-7 * hi {
        let mid = 0.5 * (lo + hi);
        if mgf(mid) > 2.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
