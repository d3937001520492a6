use serde::{Deserialize, Serialize};

use crate::ensembles::SpectrumSpec;
use crate::error::{invalid, Error, Result};

use super::graded::{graded_lq_norm, GradedNormQuery, OneDimLaw};
use super::GAUSSIAN_PSI2;

/// Linear functionals `x -> <x, v_j>` under a centered Gaussian base measure
/// with a diagonal covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteFunctionClass {
    points: Vec<Vec<f64>>,
    spectrum: SpectrumSpec,
    metric_scale: f64,
    dist: Vec<f64>,
}

impl FiniteFunctionClass {
    /// ψ2 metric: `sqrt(8/3) * ||Σ^{1/2} (v - u)||`.
    pub fn new(points: Vec<Vec<f64>>, spectrum: SpectrumSpec) -> Result<Self> {
        Self::with_scale(points, spectrum, GAUSSIAN_PSI2)
    }

    /// L2 metric: `||Σ^{1/2} (v - u)||`.
    pub fn l2(points: Vec<Vec<f64>>, spectrum: SpectrumSpec) -> Result<Self> {
        Self::with_scale(points, spectrum, 1.0)
    }

    fn with_scale(points: Vec<Vec<f64>>, spectrum: SpectrumSpec, metric_scale: f64) -> Result<Self> {
        spectrum.validate()?;
        if points.is_empty() {
            return Err(invalid("points", "class must contain at least one point"));
        }
        let d = spectrum.dim();
        for p in &points {
            if p.len() != d {
                return Err(Error::DimensionMismatch { expected: vec![d], got: vec![p.len()] });
            }
        }
        let lambda = spectrum.eigenvalues();
        let m = points.len();
        let mut dist = vec![0.0; m * m];
        for a in 0..m {
            for b in a + 1..m {
                let s: f64 = (0..d).map(|j| lambda[j] * (points[a][j] - points[b][j]).powi(2)).sum();
                let v = metric_scale * s.sqrt();
                dist[a * m + b] = v;
                dist[b * m + a] = v;
            }
        }
        Ok(Self { points, spectrum, metric_scale, dist })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn spectrum(&self) -> &SpectrumSpec {
        &self.spectrum
    }

    pub fn metric_scale(&self) -> f64 {
        self.metric_scale
    }

    #[inline]
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        self.dist[a * self.points.len() + b]
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    /// Standard deviation of `<Y, v>` for `Y ~ N(0, Σ)`.
    pub fn gaussian_sd(&self, v: &[f64]) -> f64 {
        self.spectrum.eigenvalues().iter().zip(v).map(|(l, x)| l * x * x).sum::<f64>().sqrt()
    }
}

/// Nested sets `F_0 ⊂ F_1 ⊂ ...` given as prefixes of a farthest-point
/// ordering, `|F_0| = 1` and `|F_s| <= 2^{2^s}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleSequence {
    pub order: Vec<usize>,
    /// `|F_s|` for `s = 0..=S`, with `|F_S| = M`.
    pub sizes: Vec<usize>,
    /// `assignments[s][f]` is the index of `π_s f`.
    pub assignments: Vec<Vec<usize>>,
}

impl AdmissibleSequence {
    pub fn depth(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn level(&self, s: usize) -> &[usize] {
        let s = s.min(self.depth());
        &self.order[..self.sizes[s]]
    }

    pub fn pi(&self, s: usize, f: usize) -> usize {
        self.assignments[s.min(self.depth())][f]
    }

    /// `Δ_s f = π_{s+1} f - π_s f` as a vector.
    pub fn increment(&self, class: &FiniteFunctionClass, s: usize, f: usize) -> Vec<f64> {
        let (a, b) = (&class.points()[self.pi(s + 1, f)], &class.points()[self.pi(s, f)]);
        a.iter().zip(b).map(|(x, y)| x - y).collect()
    }
}

pub(crate) fn cap(s: usize) -> usize {
    if s == 0 {
        1
    } else if s >= 6 {
        usize::MAX
    } else {
        1usize << (1usize << s)
    }
}

fn farthest_point_sequence(class: &FiniteFunctionClass) -> AdmissibleSequence {
    let m = class.len();
    let mut order = vec![0usize];
    let mut nearest = vec![0usize; m];
    let mut d_near: Vec<f64> = (0..m).map(|f| class.distance(f, 0)).collect();
    let mut chosen = vec![false; m];
    chosen[0] = true;
    let mut sizes = Vec::new();
    let mut assignments = Vec::new();
    let mut s = 0;
    loop {
        let target = cap(s).min(m);
        while order.len() < target {
            let mut next = usize::MAX;
            let mut far = f64::NEG_INFINITY;
            for f in 0..m {
                if !chosen[f] && d_near[f] > far {
                    far = d_near[f];
                    next = f;
                }
            }
            chosen[next] = true;
            order.push(next);
            for f in 0..m {
                let d = class.distance(f, next);
                if d < d_near[f] {
                    d_near[f] = d;
                    nearest[f] = next;
                }
            }
            nearest[next] = next;
            d_near[next] = 0.0;
        }
        sizes.push(order.len());
        assignments.push(nearest.clone());
        if order.len() == m {
            break;
        }
        s += 1;
    }
    AdmissibleSequence { order, sizes, assignments }
}

/// `sup_f sum_s 2^{s/2} d(f, F_s)` for the greedy sequence; an upper bound on γ2.
pub fn greedy_gamma2_upper(class: &FiniteFunctionClass) -> (f64, AdmissibleSequence) {
    let seq = farthest_point_sequence(class);
    let value = (0..class.len())
        .map(|f| (0..=seq.depth()).map(|s| 2f64.powf(s as f64 / 2.0) * class.distance(f, seq.pi(s, f))).sum::<f64>())
        .fold(0.0, f64::max);
    (value, seq)
}

/// `sum_s 2^{s/2} e_s` with `e_s` the greedy covering radius at cardinality `|F_s|`.
pub fn dudley_bound(class: &FiniteFunctionClass) -> f64 {
    let seq = farthest_point_sequence(class);
    (0..=seq.depth())
        .map(|s| {
            let e = (0..class.len()).map(|f| class.distance(f, seq.pi(s, f))).fold(0.0, f64::max);
            2f64.powf(s as f64 / 2.0) * e
        })
        .sum()
}

fn standard_graded(q: f64) -> Result<f64> {
    Ok(graded_lq_norm(&GradedNormQuery { law: OneDimLaw::Gaussian { sigma: 1.0 }, q })?.value)
}

/// `(Λ_{s0,u}, Λ̃_{s0,u})` evaluated for the given sequence.
pub fn lambda_graded_value(
    class: &FiniteFunctionClass,
    seq: &AdmissibleSequence,
    u: f64,
    s0: usize,
) -> Result<(f64, f64)> {
    if !(u >= 1.0 && u.is_finite()) {
        return Err(invalid("u", "must be >= 1"));
    }
    let depth = seq.depth();
    let levels: Vec<(usize, f64)> =
        (s0..=depth.max(s0)).map(|s| Ok((s, standard_graded(u * u * 2f64.powi(s as i32))?))).collect::<Result<_>>()?;
    let pts = class.points();
    let mut lambda = 0.0f64;
    for f in 0..class.len() {
        let mut sum = 0.0;
        for &(s, g) in &levels {
            let diff: Vec<f64> = pts[f].iter().zip(&pts[seq.pi(s, f)]).map(|(a, b)| a - b).collect();
            sum += 2f64.powf(s as f64 / 2.0) * g * class.gaussian_sd(&diff);
        }
        lambda = lambda.max(sum);
    }
    let g0 = standard_graded(u * u * 2f64.powi(s0 as i32))?;
    let head = (0..class.len()).map(|f| class.gaussian_sd(&pts[seq.pi(s0, f)]) * g0).fold(0.0, f64::max);
    Ok((lambda, lambda + 2f64.powf(s0 as f64 / 2.0) * head))
}
