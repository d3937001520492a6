//! Higher-order power method: block-coordinate ascent of `|T(v_1, ..., v_p)|`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{SeededStream, SOLVER_BASE};

use super::{norm, DenseTensor, Direction, MultilinearForm, RankOneSum};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HopmOptions {
    pub restarts: usize,
    /// Relative sweep improvement below which a restart is converged.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Reseeds allowed per restart after an all-zero gradient.
    pub max_reseeds: usize,
    /// Densify when `prod d_k` is at most this and cheaper than the implicit form.
    pub dense_threshold: usize,
}

impl Default for HopmOptions {
    fn default() -> Self {
        Self { restarts: 32, tol: 1e-14, max_sweeps: 5000, max_reseeds: 8, dense_threshold: 1 << 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartReport {
    pub index: usize,
    pub value: f64,
    pub sweeps: usize,
    pub reseeds: usize,
    pub converged: bool,
    /// Objective after each completed sweep.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HopmResult {
    pub value: f64,
    pub direction: Direction,
    pub best_restart: usize,
    pub restarts: Vec<RestartReport>,
}

impl HopmResult {
    pub fn converged(&self) -> bool {
        self.restarts[self.best_restart].converged
    }

    pub fn total_reseeds(&self) -> usize {
        self.restarts.iter().map(|r| r.reseeds).sum()
    }
}

/// Operator norm of a deviation tensor by HOPM with restarts.
///
/// Restart 0 starts from the top singular vectors of the sample matrices;
/// restart `r > 0` draws uniform directions from component `SOLVER_BASE + r`
/// of `stream`.
pub fn hopm_operator_norm(t: &RankOneSum, opts: &HopmOptions, stream: &SeededStream) -> Result<HopmResult> {
    if t.order() < 2 {
        return Err(Error::Precondition("hopm needs order p >= 2".into()));
    }
    if opts.restarts == 0 {
        return Err(crate::error::invalid("restarts", "must be positive"));
    }
    let dims = t.dims();
    let entries = dims.iter().try_fold(1usize, |a, &d| a.checked_mul(d)).unwrap_or(usize::MAX);
    let implicit_cost = t.n().saturating_mul(dims.iter().sum());
    let warm = t.warm_start();
    if entries <= opts.dense_threshold && entries <= implicit_cost {
        let dense = DenseTensor::from_sum(t)?;
        Ok(hopm_on_form(&dense, Some(warm), opts, stream))
    } else {
        Ok(hopm_on_form(t, Some(warm), opts, stream))
    }
}

/// HOPM on any multilinear form.
pub fn hopm_on_form<F: MultilinearForm + ?Sized>(
    form: &F,
    warm_start: Option<Direction>,
    opts: &HopmOptions,
    stream: &SeededStream,
) -> HopmResult {
    let dims = form.dims();
    let mut best: Option<(f64, Direction, usize)> = None;
    let mut reports = Vec::with_capacity(opts.restarts);
    for r in 0..opts.restarts {
        let mut rng = stream.component(SOLVER_BASE + r as u64);
        let start = match (&warm_start, r) {
            (Some(w), 0) => w.clone(),
            _ => Direction::random(&dims, &mut rng),
        };
        let (value, dir, report) = run_restart(form, start, opts, r, &mut rng);
        reports.push(report);
        if best.as_ref().is_none_or(|(b, _, _)| value > *b) {
            best = Some((value, dir, r));
        }
    }
    let (value, direction, best_restart) = best.expect("at least one restart");
    HopmResult { value, direction, best_restart, restarts: reports }
}

fn run_restart<F: MultilinearForm + ?Sized, R: rand::Rng>(
    form: &F,
    start: Direction,
    opts: &HopmOptions,
    index: usize,
    rng: &mut R,
) -> (f64, Direction, RestartReport) {
    let dims = form.dims();
    let p = dims.len();
    let mut dir = start.into_vectors();
    let mut reseeds = 0;
    let mut history = Vec::new();
    let mut converged = false;
    let mut prev = form.value(&dir).abs();
    let mut sweeps = 0;
    'outer: while sweeps < opts.max_sweeps {
        let mut last = 0.0;
        for k in 0..p {
            let g = form.gradient(k, &dir);
            let n = norm(&g);
            if !(n > 1e-300 && n.is_finite()) {
                if reseeds >= opts.max_reseeds {
                    converged = n == 0.0;
                    break 'outer;
                }
                reseeds += 1;
                dir = Direction::random(&dims, rng).into_vectors();
                prev = form.value(&dir).abs();
                history.clear();
                continue 'outer;
            }
            dir[k] = g.into_iter().map(|x| x / n).collect();
            last = n;
        }
        sweeps += 1;
        history.push(last);
        let improvement = last - prev;
        prev = last;
        if sweeps > 1 && improvement <= opts.tol * last {
            converged = true;
            break;
        }
    }
    let value = form.value(&dir).abs();
    let report = RestartReport { index, value, sweeps, reseeds, converged, history };
    (value, Direction::from_unit(dir), report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{matrix_operator_norm, SampleMatrix};

    fn stream() -> SeededStream {
        SeededStream::new(11, "hopm", 0, 0)
    }

    #[test]
    fn rank_one_norm_is_product_of_norms() {
        let a = SampleMatrix::from_vecs(&[vec![1.0, 2.0]]).unwrap();
        let b = SampleMatrix::from_vecs(&[vec![0.0, -3.0, 4.0]]).unwrap();
        let c = SampleMatrix::from_vecs(&[vec![2.0]]).unwrap();
        let t = RankOneSum::centered(vec![a, b, c]).unwrap();
        let r = hopm_operator_norm(&t, &HopmOptions::default(), &stream()).unwrap();
        assert!((r.value - 5f64.sqrt() * 5.0 * 2.0).abs() < 1e-12);
        assert!(r.converged());
    }

    #[test]
    fn zero_tensor_reseeds_and_reports() {
        let z = SampleMatrix::from_rows(2, 2, vec![0.0; 4]);
        let t = RankOneSum::centered(vec![z.clone(), z]).unwrap();
        let opts = HopmOptions { restarts: 2, ..Default::default() };
        let r = hopm_operator_norm(&t, &opts, &stream()).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.total_reseeds(), 2 * opts.max_reseeds);
    }

    #[test]
    fn rejects_order_one() {
        let a = SampleMatrix::from_vecs(&[vec![1.0]]).unwrap();
        let t = RankOneSum::centered(vec![a]).unwrap();
        assert!(hopm_operator_norm(&t, &HopmOptions::default(), &stream()).is_err());
    }

    #[test]
    fn agrees_with_matrix_solver_on_a_fixed_instance() {
        let a = SampleMatrix::from_vecs(&[vec![1.0, 0.5], vec![-0.3, 2.0], vec![0.7, 0.1]]).unwrap();
        let b = SampleMatrix::from_vecs(&[vec![0.2, 1.0, -1.0], vec![1.5, 0.0, 0.3], vec![-0.4, 0.9, 0.8]]).unwrap();
        let t = RankOneSum::centered(vec![a, b]).unwrap();
        let h = hopm_operator_norm(&t, &HopmOptions::default(), &stream()).unwrap();
        let m = matrix_operator_norm(&t, &stream()).unwrap();
        assert!((h.value - m.value).abs() <= 1e-8 * m.value);
    }
}
