//! `sup_v (sum_i prod_k <X_i^(k), v_k>^2)^{1/2}` by alternating leading
//! eigenvector updates.

use crate::error::{invalid, Result};
use crate::rng::{SeededStream, SOLVER_BASE};

use super::{top_eigenvector, weighted_gram, Direction, HopmOptions, RankOneSum, RestartReport};

#[derive(Debug, Clone, PartialEq)]
pub struct KeyLemmaResult {
    pub value: f64,
    pub direction: Direction,
    pub best_restart: usize,
    pub restarts: Vec<RestartReport>,
}

impl KeyLemmaResult {
    pub fn converged(&self) -> bool {
        self.restarts[self.best_restart].converged
    }
}

/// Only the samples of `t` are used; its population tensor is ignored.
pub fn key_lemma_sup(t: &RankOneSum, opts: &HopmOptions, stream: &SeededStream) -> Result<KeyLemmaResult> {
    if opts.restarts == 0 {
        return Err(invalid("restarts", "must be positive"));
    }
    let dims = t.dims();
    let mut best: Option<(f64, Direction, usize)> = None;
    let mut reports = Vec::with_capacity(opts.restarts);
    for r in 0..opts.restarts {
        let mut rng = stream.component(SOLVER_BASE + r as u64);
        let start = if r == 0 { t.warm_start() } else { Direction::random(&dims, &mut rng) };
        let (f, dir, report) = run(t, start, opts, r, &mut rng);
        reports.push(report);
        if best.as_ref().is_none_or(|(b, _, _)| f > *b) {
            best = Some((f, dir, r));
        }
    }
    let (value, direction, best_restart) = best.expect("at least one restart");
    Ok(KeyLemmaResult { value, direction, best_restart, restarts: reports })
}

fn objective(proj: &[Vec<f64>]) -> f64 {
    let n = proj[0].len();
    let terms: Vec<f64> = (0..n).map(|i| proj.iter().map(|p| p[i] * p[i]).product()).collect();
    super::pairwise_sum(&terms)
}

fn run<R: rand::Rng>(
    t: &RankOneSum,
    start: Direction,
    opts: &HopmOptions,
    index: usize,
    rng: &mut R,
) -> (f64, Direction, RestartReport) {
    let dims = t.dims();
    let p = dims.len();
    let n = t.n();
    let mut dir = start.into_vectors();
    let mut proj = t.projections(&dir);
    let mut prev = objective(&proj);
    let mut history = Vec::new();
    let (mut sweeps, mut reseeds, mut converged) = (0, 0, false);
    let tol = opts.tol.max(1e-13);
    'outer: while sweeps < opts.max_sweeps {
        let mut last = 0.0;
        for k in 0..p {
            let w: Vec<f64> = (0..n)
                .map(|i| proj.iter().enumerate().filter(|(kk, _)| *kk != k).map(|(_, q)| q[i] * q[i]).product())
                .collect();
            let m = weighted_gram(t.samples(k), &w);
            let (lambda, v) = top_eigenvector(dims[k], &m);
            if !(lambda > 1e-300 && lambda.is_finite()) {
                if reseeds >= opts.max_reseeds {
                    converged = lambda.abs() <= 1e-300;
                    break 'outer;
                }
                reseeds += 1;
                dir = Direction::random(&dims, rng).into_vectors();
                proj = t.projections(&dir);
                prev = objective(&proj);
                history.clear();
                continue 'outer;
            }
            proj[k] = t.samples(k).project(&v);
            dir[k] = v;
            last = lambda;
        }
        sweeps += 1;
        history.push(last.sqrt());
        let improvement = last - prev;
        prev = last;
        if sweeps > 1 && improvement <= tol * last {
            converged = true;
            break;
        }
    }
    let value = objective(&proj).max(0.0).sqrt();
    let report = RestartReport { index, value, sweeps, reseeds, converged, history };
    (value, Direction::from_unit(dir), report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{sphere_net, SampleMatrix};
    use nalgebra::DMatrix;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn stream() -> SeededStream {
        SeededStream::new(21, "key", 0, 0)
    }

    fn random_matrix<R: Rng>(n: usize, d: usize, rng: &mut R) -> SampleMatrix {
        SampleMatrix::from_rows(n, d, (0..n * d).map(|_| rng.sample(StandardNormal)).collect())
    }

    #[test]
    fn single_sample_is_product_of_norms() {
        let a = SampleMatrix::from_vecs(&[vec![3.0, 4.0]]).unwrap();
        let b = SampleMatrix::from_vecs(&[vec![1.0, 1.0, 1.0, 1.0]]).unwrap();
        let t = RankOneSum::centered(vec![a, b]).unwrap();
        let r = key_lemma_sup(&t, &HopmOptions::default(), &stream()).unwrap();
        assert!((r.value - 10.0).abs() < 1e-10);
    }

    #[test]
    fn order_one_is_top_singular_value() {
        let mut rng = stream().component(0);
        let a = random_matrix(7, 3, &mut rng);
        let top = DMatrix::from_row_slice(7, 3, a.data()).singular_values().max();
        let t = RankOneSum::centered(vec![a]).unwrap();
        let r = key_lemma_sup(&t, &HopmOptions::default(), &stream()).unwrap();
        assert!((r.value - top).abs() < 1e-10 * top);
    }

    #[test]
    fn matches_net_oracle_on_small_instance() {
        let mut rng = stream().component(1);
        let a = random_matrix(3, 2, &mut rng);
        let b = random_matrix(3, 2, &mut rng);
        let t = RankOneSum::centered(vec![a.clone(), b.clone()]).unwrap();
        let r = key_lemma_sup(&t, &HopmOptions::default(), &stream()).unwrap();
        let (net, _) = sphere_net(2, 0.01).unwrap();
        let mut oracle = 0.0f64;
        for u in &net {
            let w: Vec<f64> = a.project(u).iter().map(|x| x * x).collect();
            let m = weighted_gram(&b, &w);
            oracle = oracle.max(top_eigenvector(2, &m).0.sqrt());
        }
        assert!(r.value >= oracle * (1.0 - 1e-12));
        assert!((r.value - oracle).abs() <= 0.02 * oracle);
    }
}
