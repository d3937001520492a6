//! Closed-form rates with all implicit constants set to 1 and natural
//! logarithms throughout.

use serde::{Deserialize, Serialize};

use crate::ensembles::{effective_rank, SpectrumSpec};
use crate::error::{invalid, Result};

fn check_rate_input(p: usize, n: f64) -> Result<()> {
    if p < 2 {
        return Err(invalid("p", format!("rates need p >= 2, got {p}")));
    }
    if !(n >= 2.0 && n.is_finite()) {
        return Err(invalid("N", format!("rates need N >= 2, got {n}")));
    }
    Ok(())
}

fn ranks(spectra: &[SpectrumSpec]) -> Result<Vec<f64>> {
    spectra
        .iter()
        .map(|s| {
            s.validate()?;
            Ok(effective_rank(s))
        })
        .collect()
}

/// `(sum_k r_k / N)^{1/2} + (1/N) prod_k (r_k + ln N)^{1/2}`.
pub fn script_e_n_from_ranks(ranks: &[f64], n: f64) -> Result<f64> {
    check_rate_input(ranks.len(), n)?;
    let ln = n.ln();
    let first = (ranks.iter().sum::<f64>() / n).sqrt();
    let second = ranks.iter().map(|r| (r + ln).sqrt()).product::<f64>() / n;
    Ok(first + second)
}

pub fn script_e_n(spectra: &[SpectrumSpec], n: f64) -> Result<f64> {
    script_e_n_from_ranks(&ranks(spectra)?, n)
}

/// `prod_k ||Σ_k||^{1/2} * E_N`.
pub fn theorem21_upper(spectra: &[SpectrumSpec], n: f64) -> Result<f64> {
    let scale: f64 = spectra.iter().map(|s| s.op_norm().sqrt()).product();
    Ok(scale * script_e_n(spectra, n)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DominantTerm {
    SqrtTerm,
    LogAugmentedProductTerm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    /// Effective ranks, non-increasing.
    pub sorted_ranks: Vec<f64>,
    pub log_n: f64,
    /// Number of ranks `>= ln N`.
    pub t: usize,
    /// `(r_1 / N)^{1/2}` with `r_1` the largest rank.
    pub sqrt_term: f64,
    /// `(ln N)^{(p-t)/2} / N * prod_{k<=t} r_k^{1/2}`.
    pub log_term: f64,
    pub dominant: DominantTerm,
}

impl RegimeReport {
    pub fn simplified(&self) -> f64 {
        self.sqrt_term + self.log_term
    }
}

pub fn regime_from_ranks(ranks: &[f64], n: f64) -> Result<RegimeReport> {
    check_rate_input(ranks.len(), n)?;
    let mut sorted = ranks.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let log_n = n.ln();
    let p = sorted.len();
    let t = sorted.iter().filter(|&&r| r >= log_n).count();
    let sqrt_term = (sorted[0] / n).sqrt();
    let log_term = log_n.powf((p - t) as f64 / 2.0) / n * sorted[..t].iter().map(|r| r.sqrt()).product::<f64>();
    let dominant = if sqrt_term >= log_term { DominantTerm::SqrtTerm } else { DominantTerm::LogAugmentedProductTerm };
    Ok(RegimeReport { sorted_ranks: sorted, log_n, t, sqrt_term, log_term, dominant })
}

pub fn regime_classify(spectra: &[SpectrumSpec], n: f64) -> Result<RegimeReport> {
    regime_from_ranks(&ranks(spectra)?, n)
}

/// `(sum_k d_k / N)^{1/2} + (1/N) prod_k (d_k^{1/2} + ln N)`.
pub fn logconcave_bound(dims: &[usize], n: f64) -> Result<f64> {
    check_rate_input(dims.len(), n)?;
    if dims.contains(&0) {
        return Err(invalid("dims", "dimensions must be positive"));
    }
    let ln = n.ln();
    let first = (dims.iter().sum::<usize>() as f64 / n).sqrt();
    let second = dims.iter().map(|&d| (d as f64).sqrt() + ln).product::<f64>() / n;
    Ok(first + second)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem23 {
    pub value: f64,
    /// `γ_k / d_{ψ2,k}`.
    pub gamma_bar: Vec<f64>,
    /// Components with `γ̄ < 1`, which cannot occur for symmetric classes.
    pub suspicious: Vec<usize>,
}

/// `(prod_k dψ2_k) [sum_k γ̄_k / sqrt N + prod_k (γ̄_k + sqrt(ln N)) / N]`.
pub fn theorem23_bound(gamma: &[f64], dpsi2: &[f64], n: f64) -> Result<Theorem23> {
    if gamma.len() != dpsi2.len() {
        return Err(invalid("dpsi2", "needs one entry per class"));
    }
    check_rate_input(gamma.len(), n)?;
    if gamma.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
        return Err(invalid("gamma", "must be finite and non-negative"));
    }
    if dpsi2.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
        return Err(invalid("dpsi2", "must be finite and positive"));
    }
    let gamma_bar: Vec<f64> = gamma.iter().zip(dpsi2).map(|(g, d)| g / d).collect();
    let sq = n.ln().sqrt();
    let inner = gamma_bar.iter().sum::<f64>() / n.sqrt() + gamma_bar.iter().map(|g| g + sq).product::<f64>() / n;
    let suspicious = gamma_bar.iter().enumerate().filter(|(_, g)| **g < 1.0).map(|(k, _)| k).collect();
    Ok(Theorem23 { value: dpsi2.iter().product::<f64>() * inner, gamma_bar, suspicious })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn id(d: usize) -> SpectrumSpec {
        SpectrumSpec::identity(d)
    }

    #[test]
    fn script_e_n_example() {
        let v = script_e_n(&[id(10), id(10)], 100.0).unwrap();
        let expected = 0.2f64.sqrt() + (10.0 + 100f64.ln()) / 100.0;
        assert_relative_eq!(v, expected, max_relative = 1e-14);
        assert!((v - 0.593265).abs() < 5e-7);
    }

    #[test]
    fn script_e_n_vanishes() {
        let s = [id(10), id(3)];
        assert!(script_e_n(&s, 1e6).unwrap() < script_e_n(&s, 1e3).unwrap());
    }

    #[test]
    fn script_e_n_is_two_independent_terms() {
        let n = 3.0;
        let first = (2.0f64 / n).sqrt();
        let second = (1.0 + n.ln()) / n;
        assert_relative_eq!(script_e_n(&[id(1), id(1)], n).unwrap(), first + second, max_relative = 1e-15);
    }

    #[test]
    fn theorem21_examples() {
        let s = [id(10), id(10)];
        assert_eq!(theorem21_upper(&s, 100.0).unwrap(), script_e_n(&s, 100.0).unwrap());
        let scaled = [id(10).scaled(4.0), id(10)];
        let v = theorem21_upper(&scaled, 100.0).unwrap();
        assert_relative_eq!(v, 2.0 * script_e_n(&s, 100.0).unwrap(), max_relative = 1e-14);
        assert!((v - 1.18653).abs() < 5e-6);
    }

    #[test]
    fn theorem21_homogeneity() {
        let s = [SpectrumSpec::Geometric { d: 5, ratio: 0.5 }, id(3), id(7)];
        let c: f64 = 2.5;
        let scaled: Vec<SpectrumSpec> = s.iter().map(|x| x.scaled(c)).collect();
        assert_relative_eq!(
            theorem21_upper(&scaled, 50.0).unwrap(),
            c.powf(1.5) * theorem21_upper(&s, 50.0).unwrap(),
            max_relative = 1e-13
        );
    }

    #[test]
    fn regime_examples() {
        let n = (1u64 << 20) as f64;
        let r = regime_classify(&[id(64), id(16), id(2)], n).unwrap();
        assert_eq!(r.t, 2);
        assert_eq!(r.sorted_ranks, vec![64.0, 16.0, 2.0]);
        let all_big = regime_from_ranks(&[100.0, 50.0], 100.0).unwrap();
        assert_eq!(all_big.t, 2);
        assert_relative_eq!(all_big.log_term, (100.0f64 * 50.0).sqrt() / 100.0, max_relative = 1e-15);
        let all_small = regime_from_ranks(&[1.0, 2.0, 3.0], 1000.0).unwrap();
        assert_eq!(all_small.t, 0);
        assert_relative_eq!(all_small.log_term, 1000f64.ln().powf(1.5) / 1000.0, max_relative = 1e-15);
    }

    #[test]
    fn regime_tie_counts_into_t() {
        let n = 100.0f64;
        let r = regime_from_ranks(&[n.ln(), 1.0], n).unwrap();
        assert_eq!(r.t, 1);
    }

    #[test]
    fn logconcave_example() {
        let v = logconcave_bound(&[4, 4], 100.0).unwrap();
        let expected = 0.08f64.sqrt() + (2.0 + 100f64.ln()).powi(2) / 100.0;
        assert_relative_eq!(v, expected, max_relative = 1e-14);
        assert!((v - 0.719125).abs() < 5e-7);
    }

    #[test]
    fn logconcave_first_term_homogeneity() {
        let a = (8.0f64 / 100.0).sqrt();
        let b = (32.0f64 / 100.0).sqrt();
        assert_relative_eq!(b, 2.0 * a, max_relative = 1e-15);
        let v4 = logconcave_bound(&[16, 16], 100.0).unwrap();
        assert_relative_eq!(v4 - (4.0 + 100f64.ln()).powi(2) / 100.0, b, max_relative = 1e-14);
        assert!(logconcave_bound(&[4, 4], 1e12).unwrap() < 1e-5);
    }

    #[test]
    fn theorem23_examples() {
        let t = theorem23_bound(&[1.0, 1.0], &[1.0, 1.0], 100.0).unwrap();
        let expected = 0.2 + (1.0 + 100f64.ln().sqrt()).powi(2) / 100.0;
        assert_relative_eq!(t.value, expected, max_relative = 1e-14);
        assert!((t.value - 0.298971).abs() < 5e-7);
        assert!(t.suspicious.is_empty());
        let c = theorem23_bound(&[3.0, 1.0], &[3.0 * 1.7, 1.0], 100.0).unwrap();
        assert_eq!(c.suspicious, vec![0]);
    }

    #[test]
    fn theorem23_homogeneity_in_dpsi2() {
        // Fixed γ̄: scale γ and dψ2 together.
        let base = theorem23_bound(&[2.0, 3.0], &[1.0, 1.5], 64.0).unwrap().value;
        let scaled = theorem23_bound(&[2.0 * 4.0, 3.0], &[4.0, 1.5], 64.0).unwrap().value;
        assert_relative_eq!(scaled, 4.0 * base, max_relative = 1e-14);
    }

    #[test]
    fn theorem23_reduces_to_theorem21_shape_for_spheres() {
        // γ̄ = sqrt(d), dψ2 = 1: both are sums of a sqrt-rank term and a product term.
        let d = [16usize, 9];
        let n = 256.0f64;
        let g: Vec<f64> = d.iter().map(|&x| (x as f64).sqrt()).collect();
        let t23 = theorem23_bound(&g, &[1.0, 1.0], n).unwrap().value;
        let e = script_e_n(&[id(16), id(9)], n).unwrap();
        assert!(t23 / e > 0.5 && t23 / e < 4.0);
    }

    #[test]
    fn input_validation() {
        assert!(script_e_n(&[id(2)], 10.0).is_err());
        assert!(script_e_n(&[id(2), id(2)], 1.0).is_err());
        assert!(theorem23_bound(&[1.0], &[1.0, 2.0], 10.0).is_err());
        assert!(logconcave_bound(&[0, 2], 10.0).is_err());
    }
}
