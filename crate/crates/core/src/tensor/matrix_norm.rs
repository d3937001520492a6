use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{SeededStream, SOLVER_BASE};

use super::{norm, random_unit, DenseTensor, RankOneSum};

const TOL: f64 = 1e-10;
const MAX_ITERS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Largest singular value of a `p = 2` deviation, by power iteration on
/// `D^T D` from the normalized all-ones vector and one random start.
pub fn matrix_operator_norm(t: &RankOneSum, stream: &SeededStream) -> Result<NormEstimate> {
    if t.order() != 2 {
        return Err(Error::Precondition(format!("matrix norm needs p = 2, got {}", t.order())));
    }
    let dense = DenseTensor::from_sum(t)?;
    let (d1, d2) = (dense.dims()[0], dense.dims()[1]);
    let m = dense.values();
    let ones = vec![1.0 / (d2 as f64).sqrt(); d2];
    let random = random_unit(d2, &mut stream.component(SOLVER_BASE));
    let a = power_iterate(m, d1, d2, ones);
    let b = power_iterate(m, d1, d2, random);
    let best = if b.value > a.value { b } else { a };
    Ok(NormEstimate { converged: a.converged && b.converged, iterations: a.iterations + b.iterations, ..best })
}

fn apply(m: &[f64], d1: usize, d2: usize, v: &[f64]) -> Vec<f64> {
    (0..d1).map(|i| (0..d2).map(|j| m[i * d2 + j] * v[j]).sum()).collect()
}

fn apply_t(m: &[f64], d1: usize, d2: usize, u: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; d2];
    for i in 0..d1 {
        for j in 0..d2 {
            out[j] += m[i * d2 + j] * u[i];
        }
    }
    out
}

fn power_iterate(m: &[f64], d1: usize, d2: usize, mut v: Vec<f64>) -> NormEstimate {
    let mut value = norm(&apply(m, d1, d2, &v));
    for it in 1..=MAX_ITERS {
        let w = apply_t(m, d1, d2, &apply(m, d1, d2, &v));
        let n = norm(&w);
        if n == 0.0 {
            return NormEstimate { value: 0.0, converged: true, iterations: it };
        }
        let next: Vec<f64> = w.iter().map(|x| x / n).collect();
        let change = norm(&next.iter().zip(&v).map(|(a, b)| a - b).collect::<Vec<_>>());
        v = next;
        value = value.max(norm(&apply(m, d1, d2, &v)));
        if change < TOL {
            return NormEstimate { value, converged: true, iterations: it };
        }
    }
    NormEstimate { value, converged: false, iterations: MAX_ITERS }
}
