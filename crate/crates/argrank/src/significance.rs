//! Paired significance tests reported alongside evaluation results.

use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WilcoxonMethod {
    /// Null distribution enumerated over all sign assignments.
    Exact,
    /// Normal approximation with tie correction, no continuity correction.
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wilcoxon {
    /// Smaller of the positive and negative rank sums.
    pub statistic: f64,
    pub p_value: f64,
    /// Non-zero differences used.
    pub n: usize,
    pub method: WilcoxonMethod,
}

/// Largest sample size for which the exact null is used.
pub const EXACT_MAX_N: usize = 50;

/// Two-sided Wilcoxon signed-rank test on paired differences. Zero
/// differences are dropped. The exact null is used for up to 50 differences
/// without tied magnitudes.
pub fn wilcoxon_signed_rank(differences: &[f64]) -> Result<Wilcoxon> {
    if differences.iter().any(|d| !d.is_finite()) {
        return Err(Error::Schema("wilcoxon: non-finite difference".into()));
    }
    let d: Vec<f64> = differences.iter().copied().filter(|&x| x != 0.0).collect();
    let n = d.len();
    if n == 0 {
        return Err(Error::Core(argrank_core::Error::Undefined("wilcoxon test without non-zero differences")));
    }
    let magnitudes: Vec<f64> = d.iter().map(|x| x.abs()).collect();
    let ranks = argrank_core::eval::average_ranks(&magnitudes);
    // an empty float sum is -0.0
    let r_plus: f64 = d.iter().zip(&ranks).filter(|(x, _)| **x > 0.0).map(|(_, r)| r).sum::<f64>() + 0.0;
    let total = (n * (n + 1)) as f64 / 2.0;
    let statistic = r_plus.min(total - r_plus);

    let mut sorted = magnitudes.clone();
    sorted.sort_by(f64::total_cmp);
    let tie_sizes: Vec<usize> = sorted
        .chunk_by(|a, b| a == b)
        .map(<[f64]>::len)
        .filter(|&t| t > 1)
        .collect();

    if n <= EXACT_MAX_N && tie_sizes.is_empty() {
        // counts[s] = number of sign assignments with positive rank sum s
        let max = n * (n + 1) / 2;
        let mut counts = vec![0f64; max + 1];
        counts[0] = 1.0;
        for k in 1..=n {
            for s in (k..=max).rev() {
                counts[s] += counts[s - k];
            }
        }
        let t = statistic as usize;
        let below: f64 = counts[..=t].iter().sum();
        let p = (2.0 * below / 2f64.powi(n as i32)).min(1.0);
        return Ok(Wilcoxon {
            statistic,
            p_value: p,
            n,
            method: WilcoxonMethod::Exact,
        });
    }

    let nf = n as f64;
    let tie_term: f64 = tie_sizes.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
    let variance = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term;
    if variance <= 0.0 {
        return Err(Error::Core(argrank_core::Error::Undefined("wilcoxon variance")));
    }
    let z = (statistic - total / 2.0) / variance.sqrt();
    let normal = Normal::standard();
    let p = (2.0 * normal.cdf(-z.abs())).min(1.0);
    Ok(Wilcoxon {
        statistic,
        p_value: p,
        n,
        method: WilcoxonMethod::Normal,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub statistic: f64,
    pub p_value: f64,
    pub df: f64,
}

/// One-sample two-tailed Student t-test of `mean(values) == mu`.
pub fn one_sample_t_test(values: &[f64], mu: f64) -> Result<TTest> {
    let n = values.len();
    if n < 2 {
        return Err(Error::Core(argrank_core::Error::Undefined("t-test with fewer than two values")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Schema("t-test: non-finite value".into()));
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    if var == 0.0 {
        return Err(Error::Core(argrank_core::Error::Undefined("t-test of constant values")));
    }
    let t = (mean - mu) / (var / nf).sqrt();
    let df = nf - 1.0;
    let dist = StudentsT::new(0.0, 1.0, df).expect("df is positive");
    Ok(TTest {
        statistic: t,
        p_value: 2.0 * dist.cdf(-t.abs()),
        df,
    })
}
