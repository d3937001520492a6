use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::error::{invalid, Result};
use crate::rng::SeededStream;

/// One draw of `max_{j<=N} prod_{k<=s} |Z_j^(k)|` over i.i.d. standard Gaussians.
///
/// Factor `k` reads from `stream.component(k)`.
pub fn maxprod_statistic(s: usize, n: usize, stream: &SeededStream) -> Result<f64> {
    if s == 0 || n == 0 {
        return Err(invalid("s, N", "must be positive"));
    }
    let mut prod = vec![1.0f64; n];
    for k in 0..s {
        let mut rng = stream.component(k as u64);
        for x in prod.iter_mut() {
            *x *= rng.sample::<f64, _>(StandardNormal).abs();
        }
    }
    Ok(prod.into_iter().fold(0.0, f64::max))
}

/// One draw of `max_j prod_{k<=t} ||X_j^(k)|| prod_{k>t} |Z_j^(k)|` for
/// standard Gaussian `X^(k)` in dimension `dims[k]`.
///
/// Norms are drawn directly from the chi distribution; the trailing factors
/// are one-dimensional projections.
pub fn claim2_statistic(t: usize, dims: &[usize], n: usize, stream: &SeededStream) -> Result<f64> {
    let p = dims.len();
    if !(1..p).contains(&t) {
        return Err(invalid("t", format!("need 1 <= t <= p - 1 with p = {p}")));
    }
    if n == 0 || dims.contains(&0) {
        return Err(invalid("N, dims", "must be positive"));
    }
    let mut prod = vec![1.0f64; n];
    for (k, &d) in dims.iter().enumerate() {
        let mut rng = stream.component(k as u64);
        if k < t {
            let chi2 = ChiSquared::new(d as f64).map_err(|e| invalid("dims", e.to_string()))?;
            for x in prod.iter_mut() {
                *x *= chi2.sample(&mut rng).sqrt();
            }
        } else {
            for x in prod.iter_mut() {
                *x *= rng.sample::<f64, _>(StandardNormal).abs();
            }
        }
    }
    Ok(prod.into_iter().fold(0.0, f64::max))
}
