use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::ensembles::SpectrumSpec;
use crate::error::{invalid, Result};
use crate::rng::SeededStream;
use crate::tensor::SampleMatrix;

use super::rate_std_err;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsSequence {
    pub n: u64,
    /// `(s, j_s)` pairs in increasing `s`.
    pub values: Vec<(u32, u64)>,
    /// First `s >= 0` with `j_s = N + 1`.
    pub s1: Option<u32>,
}

fn j_s_raw(u: f64, p: f64, n: u64, s: u32, c0: f64) -> f64 {
    let x = u * u * p * 2f64.powi(s as i32);
    c0 * x / (4.0 + std::f64::consts::E * n as f64 / x).ln()
}

fn j_s(u: f64, p: f64, n: u64, s: u32, c0: f64) -> u64 {
    let raw = j_s_raw(u, p, n, s, c0).ceil();
    if raw >= (n + 1) as f64 {
        n + 1
    } else {
        raw as u64
    }
}

/// `j_s = min(ceil(c0 u^2 p 2^s / ln(4 + e N / (u^2 p 2^s))), N + 1)`.
pub fn j_s_sequence(u: f64, p: usize, n: u64, s_range: std::ops::RangeInclusive<u32>, c0: f64) -> Result<JsSequence> {
    if !(u >= 1.0 && u.is_finite()) {
        return Err(invalid("u", "must be >= 1"));
    }
    if !(c0 > 0.0 && c0.is_finite()) {
        return Err(invalid("c0", "must be positive"));
    }
    if p == 0 || n == 0 {
        return Err(invalid("p, N", "must be positive"));
    }
    let pf = p as f64;
    let values = s_range.map(|s| (s, j_s(u, pf, n, s, c0))).collect();
    let s1 = (0u32..1024).find(|&s| j_s(u, pf, n, s, c0) == n + 1);
    Ok(JsSequence { n, values, s1 })
}

/// `c0 u^2 p 2^s / ln(4 + e N / (u^2 p 2^s))` before rounding and capping.
pub fn j_s_unrounded(u: f64, p: usize, n: u64, s: u32, c0: f64) -> f64 {
    j_s_raw(u, p as f64, n, s, c0)
}

/// Consecutive pairs with `1 < j_{s-1}`, `j_s < N + 1` and `j_s <= 2 j_{s-1}`.
pub fn doubling_violations(seq: &JsSequence) -> Vec<(u32, u64, u64)> {
    seq.values
        .windows(2)
        .filter(|w| w[1].0 == w[0].0 + 1)
        .filter_map(|w| {
            let (prev, cur) = (w[0].1, w[1].1);
            (prev > 1 && cur < seq.n + 1 && cur <= 2 * prev).then_some((w[1].0, prev, cur))
        })
        .collect()
}

/// `j* = ceil(c0 w / ln(4 + e N / w))`.
pub fn j_star(w: f64, n: u64, c0: f64) -> u64 {
    (c0 * w / (4.0 + std::f64::consts::E * n as f64 / w).ln()).ceil().max(0.0) as u64
}

fn sorted_abs_desc(z: &[f64]) -> Vec<f64> {
    let mut a: Vec<f64> = z.iter().map(|x| x.abs()).collect();
    a.sort_by(|x, y| y.total_cmp(x));
    a
}

/// `sum_{i<=k} z*_i + t (sum_{i>k} z*_i^2)^{1/2}`.
pub fn hoeffding_bound(z: &[f64], k: usize, t: f64) -> f64 {
    let zs = sorted_abs_desc(z);
    let k = k.min(zs.len());
    zs[..k].iter().sum::<f64>() + t * zs[k..].iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// The `k` minimizing the rearrangement bound (ties to the smallest `k`).
pub fn hoeffding_best_k(z: &[f64], t: f64) -> usize {
    (0..=z.len())
        .map(|k| (k, hoeffding_bound(z, k, t)))
        .fold((0, f64::INFINITY), |best, (k, v)| if v < best.1 { (k, v) } else { best })
        .0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoeffdingCheck {
    pub bound: f64,
    pub failures: u64,
    pub trials: u64,
    pub rate: f64,
    pub std_err: f64,
    /// `2 exp(-t^2 / 2)`.
    pub reference: f64,
}

impl HoeffdingCheck {
    pub fn passes(&self) -> bool {
        self.rate <= self.reference + 3.0 * self.std_err.max(rate_std_err(self.reference.min(1.0), self.trials))
    }
}

/// Monte Carlo rate of `|sum ε_i z_i|` exceeding the rearrangement bound.
pub fn hoeffding_rearrangement_check(
    z: &[f64],
    k: usize,
    t: f64,
    trials: u64,
    stream: &SeededStream,
) -> Result<HoeffdingCheck> {
    if k > z.len() {
        return Err(invalid("k", "must not exceed N"));
    }
    if trials == 0 {
        return Err(invalid("trials", "must be positive"));
    }
    let bound = hoeffding_bound(z, k, t);
    let slack = 1e-12 * z.iter().map(|x| x.abs()).sum::<f64>();
    let mut rng = stream.component(0);
    let mut failures = 0;
    for _ in 0..trials {
        let s: f64 = z.iter().map(|x| if rng.random::<bool>() { *x } else { -*x }).sum();
        if s.abs() > bound + slack {
            failures += 1;
        }
    }
    let rate = failures as f64 / trials as f64;
    Ok(HoeffdingCheck {
        bound,
        failures,
        trials,
        rate,
        std_err: rate_std_err(rate, trials),
        reference: 2.0 * (-t * t / 2.0).exp(),
    })
}

/// One-dimensional laws with closed-form fourth moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum OrderLaw {
    Gaussian {
        sigma: f64,
    },
    Laplace {
        scale: f64,
    },
    Constant {
        value: f64,
    },
    /// Product of `factors` independent standard Gaussians.
    GaussianProduct {
        factors: u32,
    },
}

impl OrderLaw {
    pub fn l4_norm(&self) -> f64 {
        match *self {
            OrderLaw::Gaussian { sigma } => sigma.abs() * 3f64.powf(0.25),
            OrderLaw::Laplace { scale } => scale.abs() * ln_gamma(5.0).exp().powf(0.25),
            OrderLaw::Constant { value } => value.abs(),
            OrderLaw::GaussianProduct { factors } => 3f64.powf(factors as f64 / 4.0),
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            OrderLaw::Gaussian { sigma } => sigma * rng.sample::<f64, _>(StandardNormal),
            OrderLaw::Laplace { scale } => {
                let e: f64 = rng.sample(rand_distr::Exp1);
                if rng.random::<bool>() {
                    scale * e
                } else {
                    -scale * e
                }
            }
            OrderLaw::Constant { value } => value,
            OrderLaw::GaussianProduct { factors } => {
                (0..factors).map(|_| rng.sample::<f64, _>(StandardNormal)).product()
            }
        }
    }
}

/// Whether `Z*_i <= 2 ||Z||_{L4} (e N / i)^{3/8}` for every `i >= j*`.
pub fn order_stats_pass(z: &[f64], l4: f64, j_star: u64) -> bool {
    let n = z.len();
    let zs = sorted_abs_desc(z);
    let start = j_star.max(1) as usize;
    (start..=n).all(|i| zs[i - 1] <= 2.0 * l4 * (std::f64::consts::E * n as f64 / i as f64).powf(0.375))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderStatsCheck {
    pub j_star: u64,
    pub violations: u64,
    pub trials: u64,
    pub rate: f64,
    pub std_err: f64,
    /// `exp(-w)`.
    pub reference: f64,
}

impl OrderStatsCheck {
    pub fn passes(&self) -> bool {
        self.rate <= self.reference + 3.0 * self.std_err.max(rate_std_err(self.reference.min(1.0), self.trials))
    }
}

pub fn order_stats_check(
    law: OrderLaw,
    n: u64,
    w: f64,
    c0: f64,
    trials: u64,
    stream: &SeededStream,
) -> Result<OrderStatsCheck> {
    if n == 0 || trials == 0 {
        return Err(invalid("N, trials", "must be positive"));
    }
    if !(w > 0.0 && c0 > 0.0) {
        return Err(invalid("w, c0", "must be positive"));
    }
    let js = j_star(w, n, c0);
    let l4 = law.l4_norm();
    let mut rng = stream.component(0);
    let mut z = vec![0.0; n as usize];
    let mut violations = 0;
    for _ in 0..trials {
        for x in z.iter_mut() {
            *x = law.sample(&mut rng);
        }
        if !order_stats_pass(&z, l4, js) {
            violations += 1;
        }
    }
    let rate = violations as f64 / trials as f64;
    Ok(OrderStatsCheck {
        j_star: js,
        violations,
        trials,
        rate,
        std_err: rate_std_err(rate, trials),
        reference: (-w).exp(),
    })
}

/// `max_i ||X_i|| / (sqrt(Tr Σ) + sqrt(||Σ||) sqrt(ln N))`.
pub fn linf_statistic(samples: &SampleMatrix, spectrum: &SpectrumSpec) -> f64 {
    let m = samples.row_norms().into_iter().fold(0.0, f64::max);
    let n = samples.n() as f64;
    m / (spectrum.trace().sqrt() + spectrum.op_norm().sqrt() * n.ln().sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinfCheck {
    pub mean: f64,
    pub std_err: f64,
    pub max: f64,
    pub trials: u64,
}

/// Monte Carlo distribution of [`linf_statistic`] for Gaussian samples.
pub fn linf_sup_check(spectrum: &SpectrumSpec, n: usize, trials: u64, stream: &SeededStream) -> Result<LinfCheck> {
    spectrum.validate()?;
    if n == 0 || trials < 2 {
        return Err(invalid("N, trials", "need N >= 1 and at least two trials"));
    }
    let sd: Vec<f64> = spectrum.eigenvalues().iter().map(|l| l.sqrt()).collect();
    let d = sd.len();
    let stats: Vec<f64> = (0..trials)
        .map(|t| {
            let mut rng = stream.with_trial(t).component(0);
            let data = (0..n * d).map(|k| sd[k % d] * rng.sample::<f64, _>(StandardNormal)).collect();
            linf_statistic(&SampleMatrix::from_rows(n, d, data), spectrum)
        })
        .collect();
    let mean = stats.iter().sum::<f64>() / trials as f64;
    let var = stats.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
    Ok(LinfCheck {
        mean,
        std_err: (var / trials as f64).sqrt(),
        max: stats.iter().copied().fold(0.0, f64::max),
        trials,
    })
}
