//! Paired Wilcoxon signed-rank test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest sample handled with the exact null distribution by default.
pub const EXACT_MAX_N: usize = 25;
pub const MIN_PAIRS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignedRankTest {
    /// Sum of the ranks of positive differences `x - y`.
    pub w_plus: f64,
    /// Number of non-zero differences.
    pub n: usize,
    pub p_value: f64,
    pub method: Method,
}

/// Two-sided p-value, exact for up to [`EXACT_MAX_N`] non-zero differences
/// and normal-approximated above.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<f64> {
    Ok(signed_rank_test(x, y, None)?.p_value)
}

/// Runs the test with the given method, or picks one by sample size.
pub fn signed_rank_test(x: &[f64], y: &[f64], method: Option<Method>) -> Result<SignedRankTest> {
    let ranks = signed_ranks(x, y)?;
    let n = ranks.len();
    let method = method.unwrap_or(if n <= EXACT_MAX_N {
        Method::Exact
    } else {
        Method::Normal
    });
    let w_plus: f64 = ranks.iter().filter(|r| r.1).map(|r| r.0).sum();
    let abs: Vec<f64> = ranks.iter().map(|r| r.0).collect();
    let p_value = match method {
        Method::Exact => exact_p(&abs, w_plus),
        Method::Normal => normal_p(&abs, w_plus),
    };
    Ok(SignedRankTest {
        w_plus,
        n,
        p_value,
        method,
    })
}

/// Average ranks of `|x - y|` over non-zero differences, with the sign
/// (true when positive).
pub fn signed_ranks(x: &[f64], y: &[f64]) -> Result<Vec<(f64, bool)>> {
    if x.len() != y.len() {
        return Err(Error::Undefined(format!(
            "paired samples differ in length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    let mut d: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::Undefined("non-finite difference".into()));
    }
    if d.is_empty() {
        return Err(Error::Undefined("all differences are zero".into()));
    }
    if d.len() < MIN_PAIRS {
        return Err(Error::Undefined(format!(
            "{} non-zero differences, need at least {MIN_PAIRS}",
            d.len()
        )));
    }
    d.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    let mut out = Vec::with_capacity(d.len());
    let mut i = 0;
    while i < d.len() {
        let mut j = i;
        while j + 1 < d.len() && d[j + 1].abs() == d[i].abs() {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for v in &d[i..=j] {
            out.push((rank, *v > 0.0));
        }
        i = j + 1;
    }
    Ok(out)
}

// Null distribution of W+ by counting sign patterns. Average ranks are
// multiples of 1/2, so doubling them keeps every subset sum integral.
fn exact_p(ranks: &[f64], w_plus: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let max: usize = doubled.iter().sum();
    let mut counts = vec![0.0f64; max + 1];
    counts[0] = 1.0;
    for &r in &doubled {
        for s in (r..=max).rev() {
            counts[s] += counts[s - r];
        }
    }
    let total = 2f64.powi(ranks.len() as i32);
    let t = (2.0 * w_plus).round() as usize;
    let lower: f64 = counts[..=t].iter().sum::<f64>() / total;
    let upper: f64 = counts[t..].iter().sum::<f64>() / total;
    (2.0 * lower.min(upper)).min(1.0)
}

fn normal_p(ranks: &[f64], w_plus: f64) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < ranks.len() {
        let j = ranks[i..].iter().take_while(|r| **r == ranks[i]).count();
        let t = j as f64;
        tie_term += t * t * t - t;
        i += j;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let tail = 1.0 - Normal::standard().cdf(z);
    (2.0 * tail).clamp(f64::MIN_POSITIVE, 1.0)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}
