//! Isserlis pairings for Gaussian moment tensors.

use crate::ensembles::SpectrumSpec;
use crate::error::{Error, Result};

use super::{Direction, PairingMoment};

/// Largest order for which pairings are enumerated (105 pairings at 8).
pub const MAX_WICK_ORDER: usize = 8;

/// All perfect matchings of `0..p`; empty for odd `p`.
pub fn perfect_pairings(p: usize) -> Vec<Vec<(usize, usize)>> {
    fn rec(rest: &[usize], cur: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        let Some((&first, tail)) = rest.split_first() else {
            out.push(cur.clone());
            return;
        };
        for j in 0..tail.len() {
            cur.push((first, tail[j]));
            let remaining: Vec<usize> = tail.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &x)| x).collect();
            rec(&remaining, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if p.is_multiple_of(2) {
        let idx: Vec<usize> = (0..p).collect();
        rec(&idx, &mut Vec::new(), &mut out);
    }
    out
}

/// `E prod_k <X, v_k>` for `X ~ N(0, Σ)`.
pub fn wick_population_form(spectrum: &SpectrumSpec, dir: &Direction, p: usize) -> Result<f64> {
    if p > MAX_WICK_ORDER {
        return Err(Error::OrderTooLarge { order: p, max: MAX_WICK_ORDER });
    }
    let d = spectrum.dim();
    let got = dir.dims();
    if got.len() != p || got.iter().any(|&g| g != d) {
        return Err(Error::DimensionMismatch { expected: vec![d; p], got });
    }
    if p % 2 == 1 {
        return Ok(0.0);
    }
    let w: Vec<f64> = spectrum.eigenvalues().iter().map(|l| l.sqrt()).collect();
    Ok(PairingMoment::new(1.0, vec![w; p])?.value(dir.vectors()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(d: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; d];
        v[i] = 1.0;
        v
    }

    #[test]
    fn pairing_counts_are_double_factorials() {
        let counts: Vec<usize> = (0..=8).map(|p| perfect_pairings(p).len()).collect();
        assert_eq!(counts, vec![1, 0, 1, 0, 3, 0, 15, 0, 105]);
    }

    #[test]
    fn examples() {
        let s = SpectrumSpec::identity(3);
        let v = vec![0.6, 0.0, 0.8];
        let d2 = Direction::new(vec![v.clone(), v]).unwrap();
        assert!((wick_population_form(&s, &d2, 2).unwrap() - 1.0).abs() < 1e-15);
        let d3 = Direction::new(vec![e(3, 0), e(3, 1), vec![1.0, 1.0, 1.0]]).unwrap();
        assert_eq!(wick_population_form(&s, &d3, 3).unwrap(), 0.0);
        let d4 = Direction::new(vec![e(3, 0); 4]).unwrap();
        assert_eq!(wick_population_form(&s, &d4, 4).unwrap(), 3.0);
    }

    #[test]
    fn order_guard() {
        let s = SpectrumSpec::identity(2);
        let d = Direction::new(vec![e(2, 0); 10]).unwrap();
        assert!(matches!(wick_population_form(&s, &d, 10), Err(Error::OrderTooLarge { .. })));
    }

    #[test]
    fn weighted_fourth_moment() {
        // E[x1^2 x2^2] = λ1 λ2 for independent coordinates.
        let s = SpectrumSpec::Explicit { eigenvalues: vec![2.0, 0.5] };
        let d = Direction::new(vec![e(2, 0), e(2, 0), e(2, 1), e(2, 1)]).unwrap();
        assert!((wick_population_form(&s, &d, 4).unwrap() - 1.0).abs() < 1e-15);
        let d = Direction::new(vec![e(2, 0); 4]).unwrap();
        assert!((wick_population_form(&s, &d, 4).unwrap() - 12.0).abs() < 1e-12);
    }
}
