//! Monte Carlo harness: plans, per-trial records, aggregation and fits.

mod fit;
mod probes;
mod statistics;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{logconcave_bound, theorem21_upper};
use crate::ensembles::{sample_batch, ComponentEnsemble, CorrelationMode, Family};
use crate::error::{invalid, Error, Result};
use crate::rng::SeededStream;
use crate::tensor::{hopm_operator_norm, key_lemma_sup, pairwise_sum, HopmOptions};

pub use fit::{exponent_fit, Abscissa, FitResult, POOR_FIT_R2};
pub use probes::{
    appendix_b_terms, appendixb_check, claim1_normalized, jensen_inner_factor, log_phenomenon_probe, ratio_sweep,
    AppendixBReport, AppendixBTerms, ProbeResult, RatioSweep, APPENDIX_B_CONSTANT,
};
pub use statistics::{claim2_statistic, maxprod_statistic};

/// Converged fraction below which a grid point is marked low confidence.
pub const LOW_CONFIDENCE_FRACTION: f64 = 0.95;

/// What a single trial measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Statistic {
    /// HOPM estimate of the deviation tensor's operator norm.
    DeviationNorm,
    /// `sup_v (sum_i prod_k <X_i^(k), v_k>^2)^{1/2}`.
    KeyLemmaSup,
    /// `max_j prod_{k<=t} ||X_j^(k)|| prod_{k>t} |Z_j^(k)|`.
    #[serde(rename = "claimII_stat")]
    ClaimII { t: usize },
    /// `max_j prod_{k<=s} |Z_j^(k)|`.
    #[serde(rename = "maxprod_stat")]
    MaxProd { s: usize },
    /// Key-lemma supremum compared against the two lower-bound terms.
    #[serde(rename = "appendixB_stat")]
    AppendixB,
}

impl Statistic {
    pub fn name(&self) -> String {
        match self {
            Statistic::DeviationNorm => "deviation_norm".into(),
            Statistic::KeyLemmaSup => "key_lemma_sup".into(),
            Statistic::ClaimII { t } => format!("claimII_stat(t={t})"),
            Statistic::MaxProd { s } => format!("maxprod_stat(s={s})"),
            Statistic::AppendixB => "appendixB_stat".into(),
        }
    }

    fn uses_solver(&self) -> bool {
        matches!(self, Statistic::DeviationNorm | Statistic::KeyLemmaSup | Statistic::AppendixB)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub experiment_id: String,
    pub grid: Vec<u64>,
    #[serde(default)]
    pub ensembles: Vec<ComponentEnsemble>,
    #[serde(default = "independent")]
    pub correlation: CorrelationMode,
    pub trials: u64,
    #[serde(default)]
    pub solver: HopmOptions,
    pub statistic: Statistic,
    pub master_seed: u64,
    /// Record per-trial wall time (makes logs non-reproducible byte-wise).
    #[serde(default)]
    pub record_wall_time: bool,
}

fn independent() -> CorrelationMode {
    CorrelationMode::Independent
}

impl ExperimentPlan {
    pub fn new(
        experiment_id: impl Into<String>,
        grid: Vec<u64>,
        ensembles: Vec<ComponentEnsemble>,
        trials: u64,
        statistic: Statistic,
        master_seed: u64,
    ) -> Self {
        Self {
            experiment_id: experiment_id.into(),
            grid,
            ensembles,
            correlation: CorrelationMode::Independent,
            trials,
            solver: HopmOptions::default(),
            statistic,
            master_seed,
            record_wall_time: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.experiment_id.is_empty() {
            return Err(invalid("experiment_id", "must be non-empty"));
        }
        if self.grid.is_empty() {
            return Err(invalid("grid", "must be non-empty"));
        }
        if let Some(&bad) = self.grid.iter().find(|&&n| n == 0) {
            return Err(invalid("grid", format!("N must be positive, got {bad}")));
        }
        if self.trials < 4 {
            return Err(invalid("trials", "need T >= 4 for a standard error"));
        }
        for e in &self.ensembles {
            e.validate()?;
        }
        let p = self.ensembles.len();
        match self.statistic {
            Statistic::MaxProd { s } => {
                if s == 0 {
                    return Err(invalid("statistic.s", "must be >= 1"));
                }
            }
            Statistic::ClaimII { t } => {
                if !(1..p).contains(&t) {
                    return Err(invalid("statistic.t", format!("need 1 <= t <= p - 1 with p = {p}")));
                }
                if self.ensembles.iter().any(|e| !e.spectrum.is_identity() || e.family != Family::Gaussian) {
                    return Err(invalid("ensembles", "claimII_stat needs identity Gaussian components"));
                }
            }
            Statistic::DeviationNorm => {
                if p < 2 {
                    return Err(invalid("ensembles", "deviation_norm needs p >= 2"));
                }
            }
            Statistic::KeyLemmaSup | Statistic::AppendixB => {
                if p == 0 {
                    return Err(invalid("ensembles", "need at least one component"));
                }
                if self.statistic == Statistic::AppendixB && self.ensembles.iter().any(|e| !e.spectrum.is_identity()) {
                    return Err(invalid("ensembles", "appendixB_stat needs identity spectra"));
                }
            }
        }
        if self.statistic.uses_solver() && self.solver.restarts == 0 {
            return Err(invalid("solver.restarts", "must be positive"));
        }
        Ok(())
    }

    pub fn dims(&self) -> Vec<usize> {
        self.ensembles.iter().map(|e| e.dim()).collect()
    }

    /// All `(N, trial_index)` keys in canonical order.
    pub fn keys(&self) -> Vec<(u64, u64)> {
        self.grid.iter().flat_map(|&n| (0..self.trials).map(move |t| (n, t))).collect()
    }

    pub fn stream(&self, n: u64, trial: u64) -> SeededStream {
        SeededStream::new(self.master_seed, self.experiment_id.clone(), n, trial)
    }

    /// Reference rate the grid-point mean is compared against.
    pub fn reference_bound(&self, n: u64) -> Option<f64> {
        let nf = n as f64;
        match self.statistic {
            Statistic::DeviationNorm => {
                if n < 2 {
                    return None;
                }
                if self.ensembles.iter().all(|e| e.family == Family::LaplaceIsotropic) {
                    logconcave_bound(&self.dims(), nf).ok()
                } else {
                    let spectra: Vec<_> = self.ensembles.iter().map(|e| e.spectrum.clone()).collect();
                    theorem21_upper(&spectra, nf).ok()
                }
            }
            Statistic::MaxProd { s } => (n >= 2).then(|| nf.ln().powf(s as f64 / 2.0)),
            Statistic::ClaimII { t } => {
                let dims = self.dims();
                let p = dims.len();
                let head: f64 = dims[..t].iter().map(|&d| (d as f64).sqrt()).product();
                (n >= 2).then(|| nf.ln().powf((p - t) as f64 / 2.0) * head)
            }
            Statistic::KeyLemmaSup | Statistic::AppendixB => {
                let t = appendix_b_terms(&self.dims(), n);
                Some(t.term1.max(t.term2))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialRecord {
    pub experiment_id: String,
    #[serde(rename = "N")]
    pub n: u64,
    pub trial_index: u64,
    pub value: f64,
    /// Best solver restart converged (always true for closed-form statistics).
    pub converged: bool,
    pub converged_restarts: u32,
    pub restarts: u32,
    pub reseeds: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

/// Runs one trial; depends only on the plan and `(N, trial_index)`.
pub fn run_trial(plan: &ExperimentPlan, n: u64, trial_index: u64) -> Result<TrialRecord> {
    let start = plan.record_wall_time.then(std::time::Instant::now);
    let stream = plan.stream(n, trial_index);
    let nn = usize::try_from(n).map_err(|_| invalid("N", "too large"))?;
    let (value, converged, conv, restarts, reseeds) = match plan.statistic {
        Statistic::DeviationNorm => {
            let t = sample_batch(&plan.ensembles, plan.correlation, nn, &stream)?;
            let r = hopm_operator_norm(&t, &plan.solver, &stream)?;
            let conv = r.restarts.iter().filter(|x| x.converged).count();
            (r.value, r.converged(), conv, r.restarts.len(), r.total_reseeds())
        }
        Statistic::KeyLemmaSup | Statistic::AppendixB => {
            let t = sample_batch(&plan.ensembles, plan.correlation, nn, &stream)?;
            let r = key_lemma_sup(&t, &plan.solver, &stream)?;
            let conv = r.restarts.iter().filter(|x| x.converged).count();
            let reseeds = r.restarts.iter().map(|x| x.reseeds).sum();
            (r.value, r.converged(), conv, r.restarts.len(), reseeds)
        }
        Statistic::ClaimII { t } => (claim2_statistic(t, &plan.dims(), nn, &stream)?, true, 0, 0, 0),
        Statistic::MaxProd { s } => (maxprod_statistic(s, nn, &stream)?, true, 0, 0, 0),
    };
    Ok(TrialRecord {
        experiment_id: plan.experiment_id.clone(),
        n,
        trial_index,
        value,
        converged,
        converged_restarts: conv as u32,
        restarts: restarts as u32,
        reseeds: reseeds as u32,
        wall_time_s: start.map(|s| s.elapsed().as_secs_f64()),
    })
}

/// Runs the given keys on the current rayon pool; output order follows `keys`.
pub fn run_keys(plan: &ExperimentPlan, keys: &[(u64, u64)]) -> Result<Vec<TrialRecord>> {
    plan.validate()?;
    keys.par_iter().map(|&(n, t)| run_trial(plan, n, t)).collect()
}

pub fn run_plan(plan: &ExperimentPlan) -> Result<Vec<TrialRecord>> {
    run_keys(plan, &plan.keys())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub experiment_id: String,
    #[serde(rename = "N")]
    pub n: u64,
    pub statistic: String,
    pub mean: f64,
    pub stderr: f64,
    pub bound: Option<f64>,
    pub ratio: Option<f64>,
    pub converged_fraction: f64,
    pub trials: u64,
    pub low_confidence: bool,
}

/// Mean and standard error (sample std / sqrt T) with pairwise summation.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let t = values.len() as f64;
    let mean = pairwise_sum(values) / t;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let sq: Vec<f64> = values.iter().map(|x| (x - mean).powi(2)).collect();
    (mean, (pairwise_sum(&sq) / (t - 1.0) / t).sqrt())
}

/// Aggregates records per grid point, in grid order.
pub fn summarize(plan: &ExperimentPlan, records: &[TrialRecord]) -> Result<Vec<GridSummary>> {
    plan.grid
        .iter()
        .map(|&n| {
            let mut rs: Vec<&TrialRecord> = records.iter().filter(|r| r.n == n).collect();
            if rs.is_empty() {
                return Err(Error::Precondition(format!("no trials recorded for N = {n}")));
            }
            rs.sort_by_key(|r| r.trial_index);
            let values: Vec<f64> = rs.iter().map(|r| r.value).collect();
            let (mean, stderr) = mean_stderr(&values);
            let converged_fraction = rs.iter().filter(|r| r.converged).count() as f64 / rs.len() as f64;
            let bound = plan.reference_bound(n);
            Ok(GridSummary {
                experiment_id: plan.experiment_id.clone(),
                n,
                statistic: plan.statistic.name(),
                mean,
                stderr,
                bound,
                ratio: bound.map(|b| mean / b),
                converged_fraction,
                trials: rs.len() as u64,
                low_confidence: converged_fraction < LOW_CONFIDENCE_FRACTION,
            })
        })
        .collect()
}

/// Per-N `(mean, std-err)` of the HOPM deviation norm.
pub fn mc_expected_deviation(plan: &ExperimentPlan) -> Result<Vec<GridSummary>> {
    if plan.statistic != Statistic::DeviationNorm {
        return Err(Error::Precondition("mc_expected_deviation needs statistic deviation_norm".into()));
    }
    summarize(plan, &run_plan(plan)?)
}

/// Runs a plan and summarizes it.
pub fn run_and_summarize(plan: &ExperimentPlan) -> Result<(Vec<TrialRecord>, Vec<GridSummary>)> {
    let records = run_plan(plan)?;
    let summary = summarize(plan, &records)?;
    Ok((records, summary))
}
