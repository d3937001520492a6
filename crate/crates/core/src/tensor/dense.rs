use crate::error::{invalid, Error, Result};

use super::{top_eigenvector, Direction, MultilinearForm, RankOneSum};

/// Maximum number of entries a dense tensor may hold.
pub const DENSE_LIMIT: usize = 1_000_000;

/// Explicit row-major tensor (last index fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    values: Vec<f64>,
}

fn entry_count(dims: &[usize]) -> Result<usize> {
    let mut total: usize = 1;
    for &d in dims {
        total = total.saturating_mul(d);
        if total > DENSE_LIMIT {
            return Err(Error::TooLarge { entries: total, limit: DENSE_LIMIT });
        }
    }
    Ok(total)
}

impl DenseTensor {
    pub fn from_values(dims: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(invalid("dims", "need at least one positive dimension"));
        }
        let total = entry_count(&dims)?;
        if values.len() != total {
            return Err(invalid("values", format!("expected {total} entries, got {}", values.len())));
        }
        Ok(Self { dims, values })
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        let total = entry_count(&dims)?;
        Self::from_values(dims, vec![0.0; total])
    }

    /// Materializes the deviation tensor of a rank-one sum.
    pub fn from_sum(t: &RankOneSum) -> Result<Self> {
        let dims = t.dims();
        let total = entry_count(&dims)?;
        let n = t.n();
        let mut values = vec![0.0; total];
        // Pairwise over samples: accumulate blocks, then merge.
        fn rec(t: &RankOneSum, dims: &[usize], total: usize, lo: usize, hi: usize) -> Vec<f64> {
            if hi - lo <= 16 {
                let mut acc = vec![0.0; total];
                let mut buf = vec![0.0; total];
                for i in lo..hi {
                    outer_into(t, dims, i, &mut buf);
                    for (a, b) in acc.iter_mut().zip(&buf) {
                        *a += b;
                    }
                }
                return acc;
            }
            let mid = lo + (hi - lo) / 2;
            let mut l = rec(t, dims, total, lo, mid);
            let r = rec(t, dims, total, mid, hi);
            for (a, b) in l.iter_mut().zip(r) {
                *a += b;
            }
            l
        }
        let acc = rec(t, &dims, total, 0, n);
        for (v, a) in values.iter_mut().zip(acc) {
            *v = a / n as f64;
        }
        if !t.population().is_zero() {
            let mut idx = vec![0usize; dims.len()];
            for v in values.iter_mut() {
                *v -= t.population().value(Direction::basis(&dims, &idx).vectors());
                increment(&mut idx, &dims);
            }
        }
        Ok(Self { dims, values })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        let mut flat = 0;
        for (&i, &d) in idx.iter().zip(&self.dims) {
            flat = flat * d + i;
        }
        self.values[flat]
    }

    /// Frobenius norm, an upper bound on the operator norm.
    pub fn frobenius(&self) -> f64 {
        self.values.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Contracts mode `k` against `v`, giving a tensor of order `p - 1`.
    pub fn contract_mode(&self, k: usize, v: &[f64]) -> DenseTensor {
        let dk = self.dims[k];
        let inner: usize = self.dims[k + 1..].iter().product();
        let outer: usize = self.dims[..k].iter().product();
        let mut out = vec![0.0; outer * inner];
        for o in 0..outer {
            for (j, &vj) in v.iter().enumerate().take(dk) {
                let base = (o * dk + j) * inner;
                let dst = &mut out[o * inner..(o + 1) * inner];
                for (x, y) in dst.iter_mut().zip(&self.values[base..base + inner]) {
                    *x += vj * y;
                }
            }
        }
        let mut dims = self.dims.clone();
        dims.remove(k);
        if dims.is_empty() {
            dims.push(1);
        }
        DenseTensor { dims, values: out }
    }

    /// Mode-`k` leading left singular vector of the unfolding.
    pub fn mode_singular_vector(&self, k: usize) -> Vec<f64> {
        let dk = self.dims[k];
        let inner: usize = self.dims[k + 1..].iter().product();
        let outer: usize = self.dims[..k].iter().product();
        let mut g = vec![0.0; dk * dk];
        for o in 0..outer {
            for a in 0..dk {
                let ra = &self.values[(o * dk + a) * inner..(o * dk + a + 1) * inner];
                for b in a..dk {
                    let rb = &self.values[(o * dk + b) * inner..(o * dk + b + 1) * inner];
                    g[a * dk + b] += ra.iter().zip(rb).map(|(x, y)| x * y).sum::<f64>();
                }
            }
        }
        for a in 0..dk {
            for b in 0..a {
                g[a * dk + b] = g[b * dk + a];
            }
        }
        top_eigenvector(dk, &g).1
    }

    pub fn warm_start(&self) -> Direction {
        Direction::from_unit((0..self.order()).map(|k| self.mode_singular_vector(k)).collect())
    }
}

fn outer_into(t: &RankOneSum, dims: &[usize], i: usize, buf: &mut [f64]) {
    buf[0] = 1.0;
    let mut len = 1;
    for (k, &d) in dims.iter().enumerate() {
        let row = t.samples(k).row(i);
        for a in (0..len).rev() {
            let base = buf[a];
            for (b, &x) in row.iter().enumerate() {
                buf[a * d + b] = base * x;
            }
        }
        len *= d;
    }
}

fn increment(idx: &mut [usize], dims: &[usize]) {
    for k in (0..dims.len()).rev() {
        idx[k] += 1;
        if idx[k] < dims[k] {
            return;
        }
        idx[k] = 0;
    }
}

impl MultilinearForm for DenseTensor {
    fn dims(&self) -> Vec<usize> {
        self.dims.clone()
    }

    fn value(&self, dir: &[Vec<f64>]) -> f64 {
        let mut cur = self.clone();
        for v in dir.iter().rev() {
            cur = cur.contract_mode(cur.dims.len() - 1, v);
        }
        cur.values[0]
    }

    fn gradient(&self, k: usize, dir: &[Vec<f64>]) -> Vec<f64> {
        let mut cur = self.clone();
        let p = self.dims.len();
        for kk in (k + 1..p).rev() {
            cur = cur.contract_mode(kk, &dir[kk]);
        }
        for v in &dir[..k] {
            cur = cur.contract_mode(0, v);
        }
        cur.values
    }
}
