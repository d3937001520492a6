//! Generic-chaining quantities for finite linear function classes and
//! Monte Carlo checks of the auxiliary probabilistic inequalities.

mod admissible;
mod graded;
mod lemmas;
mod width;

pub use admissible::{dudley_bound, greedy_gamma2_upper, lambda_graded_value, AdmissibleSequence, FiniteFunctionClass};
pub use graded::{
    gaussian_abs_moment, graded_lq_norm, GradedNorm, GradedNormQuery, OneDimLaw, GRADED_STEP, SATURATION_Q,
};
pub use lemmas::{
    doubling_violations, hoeffding_best_k, hoeffding_bound, hoeffding_rearrangement_check, j_s_sequence, j_s_unrounded,
    j_star, linf_statistic, linf_sup_check, order_stats_check, order_stats_pass, HoeffdingCheck, JsSequence, LinfCheck,
    OrderLaw, OrderStatsCheck,
};
pub use width::{chi_mean, gaussian_width_proxy, WidthEstimate, WidthSet};

/// `||g||_{ψ2} / ||g||_{L2}` for a one-dimensional centered Gaussian.
pub const GAUSSIAN_PSI2: f64 = 1.632_993_161_855_452;

/// Standard error of a Bernoulli rate estimate.
pub(crate) fn rate_std_err(rate: f64, trials: u64) -> f64 {
    (rate * (1.0 - rate) / trials as f64).sqrt()
}
