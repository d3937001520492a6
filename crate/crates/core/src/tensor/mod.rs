//! Implicit deviation tensors
//! `(1/N) sum_i X_i^(1) ⊗ ... ⊗ X_i^(p) - E[X^(1) ⊗ ... ⊗ X^(p)]`
//! and the solvers that maximize them over products of unit spheres.

mod dense;
mod hopm;
mod key_lemma;
mod matrix_norm;
mod net;
mod wick;

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::ensembles::{ComponentEnsemble, Family, SpectrumSpec};
use crate::error::{invalid, Error, Result};

pub use dense::{DenseTensor, DENSE_LIMIT};
pub use hopm::{hopm_on_form, hopm_operator_norm, HopmOptions, HopmResult, RestartReport};
pub use key_lemma::{key_lemma_sup, KeyLemmaResult};
pub use matrix_norm::{matrix_operator_norm, NormEstimate};
pub use net::{net_oracle_norm, sphere_net, NetOracle, NET_POINT_LIMIT};
pub use wick::{perfect_pairings, wick_population_form, MAX_WICK_ORDER};

/// Row-major `n x d` block of samples for one component.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl SampleMatrix {
    pub fn from_rows(n: usize, d: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * d, "sample buffer has wrong length");
        Self { n, d, data }
    }

    pub fn from_vecs(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map(|r| r.len()).ok_or_else(|| invalid("rows", "empty"))?;
        if rows.iter().any(|r| r.len() != d) {
            return Err(invalid("rows", "ragged sample rows"));
        }
        Ok(Self::from_rows(rows.len(), d, rows.concat()))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    /// `<X_i, v>` for every row.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.d);
        (0..self.n).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::from_rows(self.n, self.d, self.data.iter().map(|x| x * c).collect())
    }

    pub fn row_norms(&self) -> Vec<f64> {
        (0..self.n).map(|i| norm(self.row(i))).collect()
    }

    /// `(1/n) sum_i X_i X_i^T`, flattened row-major.
    pub fn empirical_second_moment(&self) -> Vec<f64> {
        let d = self.d;
        let g = weighted_gram(self, &vec![1.0; self.n]);
        let mut out = g;
        for x in out.iter_mut() {
            *x /= self.n as f64;
        }
        debug_assert_eq!(out.len(), d * d);
        out
    }

    /// Leading right singular vector of the sample matrix.
    pub fn top_right_singular_vector(&self) -> Vec<f64> {
        let g = weighted_gram(self, &vec![1.0; self.n]);
        top_eigenvector(self.d, &g).1
    }
}

/// Population part `E[X^(1) ⊗ ... ⊗ X^(p)]` of a deviation tensor.
#[derive(Debug, Clone, PartialEq)]
pub enum Population {
    /// Independent centered components.
    Zero,
    /// Sum over perfect pairings of products of weighted inner products.
    /// Covers `p = 2` identical components (the covariance), identical
    /// Gaussian components (Isserlis) and shared Gaussian cores.
    Pairing(PairingMoment),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairingMoment {
    factor: f64,
    /// Per-component diagonal weights; pairs contract over the common prefix.
    weights: Vec<Vec<f64>>,
    pairings: Vec<Vec<(usize, usize)>>,
}

impl PairingMoment {
    pub fn new(factor: f64, weights: Vec<Vec<f64>>) -> Result<Self> {
        let p = weights.len();
        if p > MAX_WICK_ORDER {
            return Err(Error::OrderTooLarge { order: p, max: MAX_WICK_ORDER });
        }
        Ok(Self { factor, weights, pairings: perfect_pairings(p) })
    }

    fn pair_inner(&self, a: usize, b: usize, dir: &[Vec<f64>]) -> f64 {
        let (wa, wb) = (&self.weights[a], &self.weights[b]);
        let m = wa.len().min(wb.len());
        (0..m).map(|j| wa[j] * dir[a][j] * wb[j] * dir[b][j]).sum()
    }

    pub fn value(&self, dir: &[Vec<f64>]) -> f64 {
        let total: f64 = self
            .pairings
            .iter()
            .map(|pairing| pairing.iter().map(|&(a, b)| self.pair_inner(a, b, dir)).product::<f64>())
            .sum();
        self.factor * total
    }

    pub fn gradient(&self, k: usize, dir: &[Vec<f64>]) -> Vec<f64> {
        let dk = dir[k].len();
        let mut g = vec![0.0; dk];
        for pairing in &self.pairings {
            let mut rest = 1.0;
            let mut partner = usize::MAX;
            for &(a, b) in pairing {
                if a == k {
                    partner = b;
                } else if b == k {
                    partner = a;
                } else {
                    rest *= self.pair_inner(a, b, dir);
                }
            }
            if rest == 0.0 {
                continue;
            }
            let (wk, wm) = (&self.weights[k], &self.weights[partner]);
            let m = wk.len().min(wm.len()).min(dk);
            for j in 0..m {
                g[j] += rest * wk[j] * wm[j] * dir[partner][j];
            }
        }
        for x in g.iter_mut() {
            *x *= self.factor;
        }
        g
    }
}

impl Population {
    /// Population of `p` identical copies of one component.
    pub fn identical(e: &ComponentEnsemble, p: usize) -> Result<Self> {
        if p > MAX_WICK_ORDER {
            return Err(Error::OrderTooLarge { order: p, max: MAX_WICK_ORDER });
        }
        if p == 1 {
            return Ok(Population::Zero);
        }
        if p > 2 && e.family != Family::Gaussian {
            return Err(Error::UnsupportedPopulation(format!(
                "moment tensor of order {p} for identical {} components",
                e.family.name()
            )));
        }
        if p % 2 == 1 {
            return Ok(Population::Zero);
        }
        let w: Vec<f64> = e.spectrum.eigenvalues().iter().map(|l| l.sqrt()).collect();
        Ok(Population::Pairing(PairingMoment::new(1.0, vec![w; p])?))
    }

    /// Population of a shared-core batch: only the all-core term survives,
    /// and the core is Gaussian, so Isserlis applies.
    pub fn shared_core(ensembles: &[ComponentEnsemble], share: f64) -> Self {
        let p = ensembles.len();
        if p % 2 == 1 {
            return Population::Zero;
        }
        let weights = ensembles.iter().map(|e| e.spectrum.eigenvalues().iter().map(|l| l.sqrt()).collect()).collect();
        match PairingMoment::new(share.powf(p as f64 / 2.0), weights) {
            Ok(m) => Population::Pairing(m),
            // Orders above the pairing guard are rejected upstream by the solvers.
            Err(_) => Population::Zero,
        }
    }

    pub fn value(&self, dir: &[Vec<f64>]) -> f64 {
        match self {
            Population::Zero => 0.0,
            Population::Pairing(m) => m.value(dir),
        }
    }

    pub fn gradient(&self, k: usize, dir: &[Vec<f64>]) -> Option<Vec<f64>> {
        match self {
            Population::Zero => None,
            Population::Pairing(m) => Some(m.gradient(k, dir)),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Population::Zero)
    }
}

/// The sampled dataset `{X_i^(k)}` together with its population tensor.
#[derive(Debug, Clone)]
pub struct RankOneSum {
    samples: Vec<Arc<SampleMatrix>>,
    population: Population,
    n: usize,
}

impl RankOneSum {
    pub fn new(samples: Vec<Arc<SampleMatrix>>, population: Population) -> Result<Self> {
        let n = samples.first().map(|s| s.n()).ok_or_else(|| invalid("samples", "order must be >= 1"))?;
        if samples.iter().any(|s| s.n() != n) {
            return Err(invalid("samples", "components have different sample counts"));
        }
        if let Population::Pairing(m) = &population {
            if m.weights.len() != samples.len() {
                return Err(invalid("population", "order does not match the samples"));
            }
        }
        Ok(Self { samples, population, n })
    }

    /// Independent centered components, population zero.
    pub fn centered(samples: Vec<SampleMatrix>) -> Result<Self> {
        Self::new(samples.into_iter().map(Arc::new).collect(), Population::Zero)
    }

    pub fn order(&self) -> usize {
        self.samples.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dims(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.dim()).collect()
    }

    pub fn samples(&self, k: usize) -> &SampleMatrix {
        &self.samples[k]
    }

    pub fn population(&self) -> &Population {
        &self.population
    }

    /// Multiplies every sample of component `k` by `c`.
    ///
    /// Only meaningful for a zero population, which scales trivially.
    pub fn scale_component(&self, k: usize, c: f64) -> Result<Self> {
        if !self.population.is_zero() {
            return Err(Error::UnsupportedPopulation("scaling a component with a non-zero population".into()));
        }
        let mut samples = self.samples.clone();
        samples[k] = Arc::new(samples[k].scaled(c));
        Self::new(samples, Population::Zero)
    }

    /// Reorders the components.
    pub fn permute_components(&self, perm: &[usize]) -> Result<Self> {
        if !self.population.is_zero() {
            return Err(Error::UnsupportedPopulation("permuting components with a non-zero population".into()));
        }
        let samples = perm.iter().map(|&k| self.samples[k].clone()).collect();
        Self::new(samples, Population::Zero)
    }

    fn check_dir(&self, dir: &[Vec<f64>]) -> Result<()> {
        let got: Vec<usize> = dir.iter().map(|v| v.len()).collect();
        let expected = self.dims();
        if got != expected {
            return Err(Error::DimensionMismatch { expected, got });
        }
        Ok(())
    }

    pub(crate) fn projections(&self, dir: &[Vec<f64>]) -> Vec<Vec<f64>> {
        self.samples.iter().zip(dir).map(|(s, v)| s.project(v)).collect()
    }

    /// Top right singular vector of each component's sample matrix.
    pub fn warm_start(&self) -> Direction {
        Direction::from_unit(self.samples.iter().map(|s| s.top_right_singular_vector()).collect())
    }
}

/// Empirical form minus population form at `dir`.
pub fn evaluate_form(t: &RankOneSum, dir: &Direction) -> Result<f64> {
    t.check_dir(dir.vectors())?;
    Ok(MultilinearForm::value(t, dir.vectors()))
}

/// A multilinear form on `R^{d_1} x ... x R^{d_p}` that the ascent solvers
/// can maximize.
pub trait MultilinearForm {
    fn dims(&self) -> Vec<usize>;
    fn value(&self, dir: &[Vec<f64>]) -> f64;
    /// Gradient in block `k`; the form is linear in `v_k`, so
    /// `value(dir) == <gradient(k, dir), dir[k]>`.
    fn gradient(&self, k: usize, dir: &[Vec<f64>]) -> Vec<f64>;
}

impl MultilinearForm for RankOneSum {
    fn dims(&self) -> Vec<usize> {
        RankOneSum::dims(self)
    }

    fn value(&self, dir: &[Vec<f64>]) -> f64 {
        let proj = self.projections(dir);
        let prods: Vec<f64> = (0..self.n).map(|i| proj.iter().map(|p| p[i]).product()).collect();
        pairwise_sum(&prods) / self.n as f64 - self.population.value(dir)
    }

    fn gradient(&self, k: usize, dir: &[Vec<f64>]) -> Vec<f64> {
        let proj = self.projections(dir);
        let inv_n = 1.0 / self.n as f64;
        let weights: Vec<f64> = (0..self.n)
            .map(|i| proj.iter().enumerate().filter(|(kk, _)| *kk != k).map(|(_, p)| p[i]).product::<f64>() * inv_n)
            .collect();
        let mut g = weighted_row_sum(&self.samples[k], &weights);
        if let Some(pg) = self.population.gradient(k, dir) {
            for (x, y) in g.iter_mut().zip(pg) {
                *x -= y;
            }
        }
        g
    }
}

/// `p` unit vectors, one per component.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction(Vec<Vec<f64>>);

impl Direction {
    /// Normalizes each vector; zero vectors are rejected.
    pub fn new(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let mut out = Vec::with_capacity(vectors.len());
        for v in vectors {
            let n = norm(&v);
            if !(n > 0.0 && n.is_finite()) {
                return Err(invalid("direction", "zero or non-finite vector"));
            }
            out.push(v.iter().map(|x| x / n).collect());
        }
        Ok(Direction(out))
    }

    pub(crate) fn from_unit(vectors: Vec<Vec<f64>>) -> Self {
        Direction(vectors)
    }

    /// Coordinate basis direction `(e_{idx_1}, ..., e_{idx_p})`.
    pub fn basis(dims: &[usize], idx: &[usize]) -> Self {
        Direction(
            dims.iter()
                .zip(idx)
                .map(|(&d, &i)| {
                    let mut v = vec![0.0; d];
                    v[i] = 1.0;
                    v
                })
                .collect(),
        )
    }

    /// Independent uniform points on each sphere.
    pub fn random<R: Rng>(dims: &[usize], rng: &mut R) -> Self {
        Direction(dims.iter().map(|&d| random_unit(d, rng)).collect())
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.0
    }

    pub fn into_vectors(self) -> Vec<Vec<f64>> {
        self.0
    }

    pub fn dims(&self) -> Vec<usize> {
        self.0.iter().map(|v| v.len()).collect()
    }
}

pub(crate) fn random_unit<R: Rng>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = norm(&v);
        if n > 1e-300 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

const PAIRWISE_LEAF: usize = 16;

/// Pairwise (tree) summation in fixed index order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= PAIRWISE_LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// `sum_i w_i X_i`, reduced pairwise over `i`.
pub(crate) fn weighted_row_sum(s: &SampleMatrix, w: &[f64]) -> Vec<f64> {
    fn rec(s: &SampleMatrix, w: &[f64], lo: usize, hi: usize) -> Vec<f64> {
        let d = s.dim();
        if hi - lo <= PAIRWISE_LEAF {
            let mut acc = vec![0.0; d];
            for (i, &wi) in (lo..hi).zip(&w[lo..hi]) {
                if wi != 0.0 {
                    for (a, x) in acc.iter_mut().zip(s.row(i)) {
                        *a += wi * x;
                    }
                }
            }
            return acc;
        }
        let mid = lo + (hi - lo) / 2;
        let mut left = rec(s, w, lo, mid);
        let right = rec(s, w, mid, hi);
        for (a, b) in left.iter_mut().zip(right) {
            *a += b;
        }
        left
    }
    rec(s, w, 0, s.n())
}

/// `sum_i w_i X_i X_i^T`, flattened row-major, reduced pairwise over `i`.
pub(crate) fn weighted_gram(s: &SampleMatrix, w: &[f64]) -> Vec<f64> {
    const LEAF: usize = 64;
    fn rec(s: &SampleMatrix, w: &[f64], lo: usize, hi: usize) -> Vec<f64> {
        let d = s.dim();
        if hi - lo <= LEAF {
            let mut acc = vec![0.0; d * d];
            for (i, &wi) in (lo..hi).zip(&w[lo..hi]) {
                if wi == 0.0 {
                    continue;
                }
                let r = s.row(i);
                for a in 0..d {
                    let ra = wi * r[a];
                    let row = &mut acc[a * d..(a + 1) * d];
                    for (b, x) in row.iter_mut().enumerate().skip(a) {
                        *x += ra * r[b];
                    }
                }
            }
            for a in 0..d {
                for b in 0..a {
                    acc[a * d + b] = acc[b * d + a];
                }
            }
            return acc;
        }
        let mid = lo + (hi - lo) / 2;
        let mut left = rec(s, w, lo, mid);
        let right = rec(s, w, mid, hi);
        for (a, b) in left.iter_mut().zip(right) {
            *a += b;
        }
        left
    }
    rec(s, w, 0, s.n())
}

/// Largest eigenpair of a symmetric `d x d` matrix (row-major).
pub(crate) fn top_eigenvector(d: usize, m: &[f64]) -> (f64, Vec<f64>) {
    let mat = DMatrix::from_row_slice(d, d, m);
    let eig = SymmetricEigen::new(mat);
    let (mut best, mut idx) = (f64::NEG_INFINITY, 0);
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        if l > best {
            best = l;
            idx = i;
        }
    }
    let v: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
    let n = norm(&v);
    (best, v.into_iter().map(|x| x / n).collect())
}

/// Identity spectrum helper used by symmetric experiments.
pub fn identity_pairing_population(d: usize, p: usize) -> Result<Population> {
    Population::identical(&ComponentEnsemble::new(SpectrumSpec::identity(d), Family::Gaussian), p)
}
