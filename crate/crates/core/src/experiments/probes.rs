use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bounds::DominantTerm;
use crate::ensembles::{effective_rank, ComponentEnsemble, SpectrumSpec};
use crate::error::{invalid, Error, Result};
use crate::rng::SeededStream;
use crate::tensor::HopmOptions;

use super::{
    exponent_fit, mean_stderr, run_and_summarize, Abscissa, ExperimentPlan, FitResult, GridSummary, Statistic,
};

/// Recorded constant `C_p` in `estimate >= max(term1, term2) / C_p`.
pub const APPENDIX_B_CONSTANT: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSweep {
    pub points: Vec<GridSummary>,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

impl RatioSweep {
    pub fn spread(&self) -> f64 {
        self.max_ratio / self.min_ratio
    }
}

/// Monte Carlo mean over the plan's reference bound, per grid point.
pub fn ratio_sweep(plan: &ExperimentPlan) -> Result<RatioSweep> {
    let (_, points) = run_and_summarize(plan)?;
    let ratios: Vec<f64> = points
        .iter()
        .map(|p| p.ratio.ok_or_else(|| Error::Precondition(format!("no reference bound at N = {}", p.n))))
        .collect::<Result<_>>()?;
    Ok(RatioSweep {
        min_ratio: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        max_ratio: ratios.iter().copied().fold(0.0, f64::max),
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AppendixBTerms {
    /// `sqrt(N)` (unit sphere classes, identity covariance).
    pub term1: f64,
    /// `prod_k (sqrt(d_k) + sqrt(ln N))`.
    pub term2: f64,
    pub dominant: DominantTerm,
}

/// Closed-form lower-bound terms for sphere classes with identity covariances.
pub fn appendix_b_terms(dims: &[usize], n: u64) -> AppendixBTerms {
    let nf = n as f64;
    let sq = nf.ln().max(0.0).sqrt();
    let term1 = nf.sqrt();
    let term2: f64 = dims.iter().map(|&d| (d as f64).sqrt() + sq).product();
    AppendixBTerms {
        term1,
        term2,
        dominant: if term1 >= term2 { DominantTerm::SqrtTerm } else { DominantTerm::LogAugmentedProductTerm },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppendixBReport {
    pub terms: AppendixBTerms,
    pub mean: f64,
    pub stderr: f64,
    /// `mean / max(term1, term2)`.
    pub ratio: f64,
    pub constant: f64,
    pub passes: bool,
}

pub fn appendixb_check(
    dims: &[usize],
    n: u64,
    trials: u64,
    solver: HopmOptions,
    master_seed: u64,
) -> Result<AppendixBReport> {
    let mut plan = ExperimentPlan::new(
        "appendixB",
        vec![n],
        dims.iter().map(|&d| ComponentEnsemble::gaussian_identity(d)).collect(),
        trials,
        Statistic::AppendixB,
        master_seed,
    );
    plan.solver = solver;
    let (_, summary) = run_and_summarize(&plan)?;
    let s = &summary[0];
    let terms = appendix_b_terms(dims, n);
    let ratio = s.mean / terms.term1.max(terms.term2);
    Ok(AppendixBReport {
        terms,
        mean: s.mean,
        stderr: s.stderr,
        ratio,
        constant: APPENDIX_B_CONSTANT,
        passes: ratio >= 1.0 / APPENDIX_B_CONSTANT,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub t: usize,
    pub summaries: Vec<GridSummary>,
    /// `(N, mean / prod_{k<=t} sqrt(d_k))`.
    pub residual: Vec<(u64, f64)>,
    pub fit: FitResult,
}

/// Fits the exponent of the `claimII_stat` mean divided by `prod_{k<=t} sqrt(d_k)`
/// against `ln ln N`; the predicted slope is `(p - t) / 2`.
pub fn log_phenomenon_probe(dims: &[usize], grid: &[u64], trials: u64, master_seed: u64) -> Result<ProbeResult> {
    let p = dims.len();
    if p < 3 {
        return Err(Error::Precondition(format!("the logarithmic phenomenon needs p >= 3, got p = {p}")));
    }
    let mut sorted = dims.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let t_of = |n: u64| sorted.iter().filter(|&&d| d as f64 >= (n as f64).ln()).count();
    let t = grid.first().map(|&n| t_of(n)).ok_or_else(|| invalid("grid", "must be non-empty"))?;
    let offending: Vec<u64> = grid.iter().copied().filter(|&n| n < 2 || t_of(n) != t || t == 0 || t == p).collect();
    if !offending.is_empty() {
        return Err(Error::Precondition(format!(
            "grid leaves the regime d_(t+1) <= ln N <= d_t with 1 <= t <= p - 1 at N = {offending:?}"
        )));
    }
    let plan = ExperimentPlan::new(
        "log_phenomenon",
        grid.to_vec(),
        sorted.iter().map(|&d| ComponentEnsemble::gaussian_identity(d)).collect(),
        trials,
        Statistic::ClaimII { t },
        master_seed,
    );
    let (_, summaries) = run_and_summarize(&plan)?;
    let head: f64 = sorted[..t].iter().map(|&d| (d as f64).sqrt()).product();
    let residual: Vec<(u64, f64)> = summaries.iter().map(|s| (s.n, s.mean / head)).collect();
    let fit = exponent_fit(&residual, Abscissa::LogLogN)?;
    Ok(ProbeResult { t, summaries, residual, fit })
}

/// `mean * sqrt(N) / (prod_k ||Σ_k||^{1/2} * sqrt(max_k r_k))`.
pub fn claim1_normalized(mean: f64, spectra: &[SpectrumSpec], n: u64) -> f64 {
    let scale: f64 = spectra.iter().map(|s| s.op_norm().sqrt()).product();
    let rmax = spectra.iter().map(effective_rank).fold(0.0, f64::max);
    mean * (n as f64).sqrt() / (scale * rmax.sqrt())
}

/// Monte Carlo `E (N^{-1} sum_i prod_{k=2}^p Z_{ik}^2)^{1/2}` with its std-err.
pub fn jensen_inner_factor(p: usize, n: usize, trials: u64, stream: &SeededStream) -> Result<(f64, f64)> {
    if p < 2 || n == 0 || trials < 2 {
        return Err(invalid("p, N, trials", "need p >= 2, N >= 1, trials >= 2"));
    }
    let vals: Vec<f64> = (0..trials)
        .map(|t| {
            let mut rng = stream.with_trial(t).component(0);
            let s: f64 =
                (0..n).map(|_| (1..p).map(|_| rng.sample::<f64, _>(StandardNormal).powi(2)).product::<f64>()).sum();
            (s / n as f64).sqrt()
        })
        .collect();
    Ok(mean_stderr(&vals))
}
