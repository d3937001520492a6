//! Certified small-scale oracle: a sphere net over one mode, with the
//! remaining modes maximized exactly.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

use super::{norm, DenseTensor};

/// Maximum number of net points generated.
pub const NET_POINT_LIMIT: u64 = 5_000_000;
const MAX_ENTRIES: usize = 10_000;
const MAX_ORDER: usize = 3;
const MAX_STEP: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetOracle {
    /// Largest `|T(v)|` found; a lower bound on the norm.
    pub value: f64,
    /// `value + error_bound` upper-bounds the norm.
    pub error_bound: f64,
    /// Chordal covering radius of the net.
    pub covering_radius: f64,
    pub points: u64,
}

/// Hyperspherical grid on `S^{d-1}` modulo `x ~ -x`, with chordal covering
/// radius at most `(d - 1) * step / 2`.
pub fn sphere_net(d: usize, step: f64) -> Result<(Vec<Vec<f64>>, f64)> {
    if d == 0 {
        return Err(invalid("d", "must be positive"));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(invalid("angular_step", "must be positive"));
    }
    if d >= 3 {
        let mut total = 0u64;
        for phi in closed_grid(PI / 2.0, step) {
            total += count_full(d - 1, sub_step(step, phi.sin()), NET_POINT_LIMIT - total.min(NET_POINT_LIMIT));
            if total > NET_POINT_LIMIT {
                return Err(Error::BudgetExceeded { points: total, limit: NET_POINT_LIMIT });
            }
        }
    }
    let mut out = Vec::new();
    let mut used = 0u64;
    match d {
        1 => out.push(vec![1.0]),
        2 => {
            let count = (PI / step).ceil() as usize;
            for j in 0..count {
                let a = PI * j as f64 / count as f64;
                out.push(vec![a.cos(), a.sin()]);
            }
        }
        _ => {
            for phi in closed_grid(PI / 2.0, step) {
                let s = phi.sin();
                let mut sub = Vec::new();
                full_sphere(d - 1, sub_step(step, s), &mut sub, &mut used)?;
                for y in sub {
                    let mut x = Vec::with_capacity(d);
                    x.push(phi.cos());
                    x.extend(y.iter().map(|v| s * v));
                    out.push(x);
                }
            }
        }
    }
    Ok((out, (d as f64 - 1.0) * step / 2.0))
}

fn closed_grid(range: f64, step: f64) -> Vec<f64> {
    let count = if step.is_finite() { ((range / step).ceil() as usize).max(1) + 1 } else { 2 };
    (0..count).map(|j| range * j as f64 / (count - 1) as f64).collect()
}

fn sub_step(step: f64, s: f64) -> f64 {
    if s > 1e-300 && step.is_finite() {
        step / s
    } else {
        f64::INFINITY
    }
}

fn periodic_count(step: f64) -> usize {
    if step.is_finite() {
        ((2.0 * PI / step).ceil() as usize).max(1)
    } else {
        1
    }
}

/// Points `full_sphere` would emit, stopping once `budget` is exceeded.
fn count_full(d: usize, step: f64, budget: u64) -> u64 {
    if d == 2 {
        return periodic_count(step) as u64;
    }
    let mut total = 0u64;
    for phi in closed_grid(PI, step) {
        total += count_full(d - 1, sub_step(step, phi.sin()), budget.saturating_sub(total));
        if total > budget {
            break;
        }
    }
    total
}

fn full_sphere(d: usize, step: f64, out: &mut Vec<Vec<f64>>, used: &mut u64) -> Result<()> {
    if d == 2 {
        let count = periodic_count(step);
        *used += count as u64;
        if *used > NET_POINT_LIMIT {
            return Err(Error::BudgetExceeded { points: *used, limit: NET_POINT_LIMIT });
        }
        for j in 0..count {
            let a = 2.0 * PI * j as f64 / count as f64;
            out.push(vec![a.cos(), a.sin()]);
        }
        return Ok(());
    }
    for phi in closed_grid(PI, step) {
        let s = phi.sin();
        let mut sub = Vec::new();
        full_sphere(d - 1, sub_step(step, s), &mut sub, used)?;
        for y in sub {
            let mut x = Vec::with_capacity(d);
            x.push(phi.cos());
            x.extend(y.iter().map(|v| s * v));
            out.push(x);
        }
    }
    Ok(())
}

/// Net maximization of `|T(v_1, ..., v_p)|` for `p <= 3`.
///
/// Only the smallest mode is gridded; for each net point the contracted
/// tensor of order `p - 1` is maximized exactly (absolute value, vector norm
/// or top singular value).
pub fn net_oracle_norm(t: &DenseTensor, angular_step: f64) -> Result<NetOracle> {
    let dims = t.dims();
    if dims.len() > MAX_ORDER {
        return Err(Error::Precondition(format!("net oracle supports p <= {MAX_ORDER}")));
    }
    let entries: usize = dims.iter().product();
    if entries > MAX_ENTRIES {
        return Err(Error::TooLarge { entries, limit: MAX_ENTRIES });
    }
    if !(angular_step > 0.0 && angular_step <= MAX_STEP) {
        return Err(invalid("angular_step", format!("must lie in (0, {MAX_STEP}]")));
    }
    let mode = (0..dims.len()).min_by_key(|&k| (dims[k], k)).expect("order >= 1");
    let (net, eta) = sphere_net(dims[mode], angular_step)?;
    let mut best = 0.0f64;
    for u in &net {
        let c = t.contract_mode(mode, u);
        let v = match c.dims() {
            [1] if dims.len() == 1 => c.values()[0].abs(),
            [_] => norm(c.values()),
            [a, b] => DMatrix::from_row_slice(*a, *b, c.values()).singular_values().max(),
            _ => unreachable!("order checked above"),
        };
        best = best.max(v);
    }
    let error_bound = if eta < 1.0 { best * eta / (1.0 - eta) } else { f64::INFINITY };
    Ok(NetOracle { value: best, error_bound, covering_radius: eta, points: net.len() as u64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededStream;
    use crate::tensor::{random_unit, MultilinearForm};
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn single_entry() {
        let mut v = vec![0.0; 8];
        v[0] = 5.0;
        let t = DenseTensor::from_values(vec![2, 2, 2], v).unwrap();
        let r = net_oracle_norm(&t, 0.05).unwrap();
        assert!((r.value - 5.0).abs() <= r.error_bound + 1e-12);
        assert!(r.value <= 5.0 + 1e-12);
    }

    #[test]
    fn diagonal_matrix() {
        let t = DenseTensor::from_values(vec![2, 2], vec![1.0, 0.0, 0.0, -2.0]).unwrap();
        let r = net_oracle_norm(&t, 0.01).unwrap();
        assert!(r.value <= 2.0 + 1e-12 && 2.0 <= r.value + r.error_bound);
        assert!((r.value - 2.0).abs() < 1e-3);
    }

    #[test]
    fn covering_radius_holds_empirically() {
        let mut rng = SeededStream::new(1, "net", 0, 0).component(0);
        for d in 1..=4 {
            let step = 0.2;
            let (net, eta) = sphere_net(d, step).unwrap();
            for _ in 0..300 {
                let x = random_unit(d, &mut rng);
                let best = net
                    .iter()
                    .map(|u| {
                        let plus: f64 = u.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                        let minus: f64 = u.iter().zip(&x).map(|(a, b)| (a + b).powi(2)).sum::<f64>().sqrt();
                        plus.min(minus)
                    })
                    .fold(f64::INFINITY, f64::min);
                assert!(best <= eta + 1e-12, "d={d}: {best} > {eta}");
            }
            for u in &net {
                assert!((norm(u) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dominates_random_probes() {
        let mut rng = SeededStream::new(2, "net", 0, 0).component(0);
        let vals: Vec<f64> = (0..8).map(|_| rng.sample(StandardNormal)).collect();
        let t = DenseTensor::from_values(vec![2, 2, 2], vals).unwrap();
        let r = net_oracle_norm(&t, 0.01).unwrap();
        for _ in 0..2000 {
            let dir: Vec<Vec<f64>> = (0..3).map(|_| random_unit(2, &mut rng)).collect();
            assert!(t.value(&dir).abs() <= r.value + r.error_bound);
        }
    }

    #[test]
    fn guards() {
        let t = DenseTensor::zeros(vec![2, 2, 2, 2]).unwrap();
        assert!(net_oracle_norm(&t, 0.01).is_err());
        let t = DenseTensor::zeros(vec![2, 2]).unwrap();
        assert!(net_oracle_norm(&t, 0.1).is_err());
        assert!(matches!(sphere_net(8, 0.01), Err(Error::BudgetExceeded { .. })));
    }
}
