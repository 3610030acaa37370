//! Bayesian optimization of the ranking weights.
//!
//! A Gaussian process with a squared-exponential kernel models the objective
//! over the unit cube; expected improvement picks the next point from a
//! batch of random candidates, the best few of which are polished by a short
//! local random search. Initial points come from a randomly shifted Halton
//! sequence. Everything is driven by one seeded ChaCha stream, so a trace is
//! reproducible bit for bit.

use std::fmt::Display;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Values are clamped to this floor before the harmonic mean.
pub const HARMONIC_FLOOR: f64 = 1e-6;
pub const MIN_BUDGET: usize = 10;

/// `n / sum(1 / v)` over values clamped to [`HARMONIC_FLOOR`].
pub fn harmonic_mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Domain("harmonic mean of no values".into()));
    }
    if let Some(v) = values.iter().find(|v| v.is_nan()) {
        return Err(Error::Domain(format!("harmonic mean of {v}")));
    }
    let inv: f64 = values.iter().map(|v| 1.0 / v.max(HARMONIC_FLOOR)).sum();
    Ok(values.len() as f64 / inv)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchDomain {
    bounds: Vec<(f64, f64)>,
}

impl Default for SearchDomain {
    fn default() -> Self {
        SearchDomain {
            bounds: vec![(0.0, 6.0); 5],
        }
    }
}

impl SearchDomain {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::Config("search domain has no dimensions".into()));
        }
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Config(format!(
                    "dimension {i}: bad interval [{lo}, {hi}]"
                )));
            }
        }
        Ok(SearchDomain { bounds })
    }

    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![(lo, hi); dim])
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(&self.bounds)
                .all(|(v, (lo, hi))| lo <= v && v <= hi)
    }

    fn to_domain(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(&self.bounds)
            .map(|(t, (lo, hi))| (lo + t * (hi - lo)).clamp(*lo, *hi))
            .collect()
    }
}

fn ser_value<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

fn de_value<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

/// One objective evaluation. Failed evaluations carry `+inf` (written as
/// `null`) and the error message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub iteration: usize,
    pub point: Vec<f64>,
    #[serde(serialize_with = "ser_value", deserialize_with = "de_value")]
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationTrace {
    pub seed: u64,
    pub budget: usize,
    pub iterations: Vec<Evaluation>,
}

impl OptimizationTrace {
    /// Lowest-valued evaluation; the earliest one wins ties.
    pub fn best(&self) -> &Evaluation {
        self.iterations
            .iter()
            .reduce(|best, e| if e.value < best.value { e } else { best })
            .expect("trace is never empty")
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        for e in &self.iterations {
            let line = serde_json::to_string(e)?;
            writeln!(f, "{line}").map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesConfig {
    pub initial_points: usize,
    pub acquisition_samples: usize,
    /// Candidates polished by local search after the random batch.
    pub local_starts: usize,
    pub local_steps: usize,
    /// Exploration margin in standardized units.
    pub xi: f64,
}

impl Default for BayesConfig {
    fn default() -> Self {
        BayesConfig {
            initial_points: 20,
            acquisition_samples: 1024,
            local_starts: 4,
            local_steps: 24,
            xi: 0.01,
        }
    }
}

/// Minimizes `objective` over `domain` with exactly `budget` evaluations.
pub fn optimize_weights<F, E>(
    objective: F,
    domain: &SearchDomain,
    budget: usize,
    seed: u64,
) -> Result<OptimizationTrace>
where
    F: FnMut(&[f64]) -> std::result::Result<f64, E>,
    E: Display,
{
    optimize_with(objective, domain, budget, seed, &BayesConfig::default())
}

pub fn optimize_with<F, E>(
    mut objective: F,
    domain: &SearchDomain,
    budget: usize,
    seed: u64,
    config: &BayesConfig,
) -> Result<OptimizationTrace>
where
    F: FnMut(&[f64]) -> std::result::Result<f64, E>,
    E: Display,
{
    if budget < MIN_BUDGET {
        return Err(Error::Config(format!(
            "budget must be at least {MIN_BUDGET}, got {budget}"
        )));
    }
    let dim = domain.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
    let mut unit: Vec<Vec<f64>> = Vec::with_capacity(budget);
    let mut trace = OptimizationTrace {
        seed,
        budget,
        iterations: Vec::with_capacity(budget),
    };
    for it in 0..budget {
        let u = if it < config.initial_points.min(budget) {
            halton_point(it + 1, &shift)
        } else {
            propose(&unit, &trace.iterations, dim, config, &mut rng)
        };
        let point = domain.to_domain(&u);
        let (value, error) = match objective(&point) {
            Ok(v) if v.is_finite() => (v, None),
            Ok(v) => (f64::INFINITY, Some(format!("objective returned {v}"))),
            Err(e) => (f64::INFINITY, Some(e.to_string())),
        };
        if let Some(e) = &error {
            log::warn!("iteration {it}: {e}");
        }
        unit.push(u);
        trace.iterations.push(Evaluation {
            iteration: it,
            point,
            value,
            error,
        });
    }
    Ok(trace)
}

fn nth_prime(n: usize) -> u64 {
    let mut found = 0;
    let mut c = 1u64;
    loop {
        c += 1;
        if (2..c)
            .take_while(|d| d * d <= c)
            .all(|d| !c.is_multiple_of(d))
        {
            if found == n {
                return c;
            }
            found += 1;
        }
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

fn halton_point(index: usize, shift: &[f64]) -> Vec<f64> {
    shift
        .iter()
        .enumerate()
        .map(|(d, s)| (radical_inverse(index as u64, nth_prime(d)) + s).fract())
        .collect()
}

fn propose(
    unit: &[Vec<f64>],
    evals: &[Evaluation],
    dim: usize,
    config: &BayesConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let samples: Vec<Vec<f64>> = (0..config.acquisition_samples)
        .map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let xs: Vec<&[f64]> = unit
        .iter()
        .zip(evals)
        .filter(|(_, e)| e.value.is_finite())
        .map(|(u, _)| u.as_slice())
        .collect();
    let ys: Vec<f64> = evals
        .iter()
        .map(|e| e.value)
        .filter(|v| v.is_finite())
        .collect();
    let Some(gp) = Gp::fit(&xs, &ys) else {
        return samples.into_iter().next().expect("at least one sample");
    };
    let failed: Vec<&[f64]> = unit
        .iter()
        .zip(evals)
        .filter(|(_, e)| !e.value.is_finite())
        .map(|(u, _)| u.as_slice())
        .collect();
    let best = gp.y_min;
    // the surrogate never sees failed points, so keep away from them directly
    let ei = |x: &[f64]| {
        if failed
            .iter()
            .any(|f| sq_dist(f, x) < FAILED_RADIUS * FAILED_RADIUS)
        {
            0.0
        } else {
            gp.expected_improvement(x, best, config.xi)
        }
    };
    let scores: Vec<f64> = samples.par_iter().map(|x| ei(x)).collect();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));

    let mut best_x = samples[order[0]].clone();
    let mut best_ei = scores[order[0]];
    for &start in order.iter().take(config.local_starts) {
        let mut x = samples[start].clone();
        let mut fx = scores[start];
        let mut step = 0.05;
        for _ in 0..config.local_steps {
            let cand: Vec<f64> = x
                .iter()
                .map(|v| (v + step * (rng.gen::<f64>() * 2.0 - 1.0)).clamp(0.0, 1.0))
                .collect();
            let fc = ei(&cand);
            if fc > fx {
                x = cand;
                fx = fc;
            } else {
                step *= 0.85;
            }
        }
        if fx > best_ei {
            best_ei = fx;
            best_x = x;
        }
    }
    best_x
}

const LENGTH_SCALES: &[f64] = &[0.05, 0.1, 0.15, 0.2, 0.3, 0.45, 0.7, 1.0, 1.5];
const NOISE: f64 = 1e-6;
const FAILED_RADIUS: f64 = 0.05;

/// Zero-mean GP on standardized targets with a profiled signal variance.
struct Gp {
    xs: Vec<Vec<f64>>,
    chol: Vec<f64>,
    alpha: Vec<f64>,
    length: f64,
    signal: f64,
    y_min: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lower-triangular factor of a row-major symmetric matrix, or `None` if it
/// is not positive definite.
fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let dot: f64 = (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum();
            let v = a[i * n + j] - dot;
            if i == j {
                if v <= 0.0 {
                    return None;
                }
                l[i * n + i] = v.sqrt();
            } else {
                l[i * n + j] = v / l[j * n + j];
            }
        }
    }
    Some(l)
}

fn forward(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for i in 0..n {
        let dot: f64 = (0..i).map(|k| l[i * n + k] * x[k]).sum();
        x[i] = (b[i] - dot) / l[i * n + i];
    }
    x
}

fn backward(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let dot: f64 = (i + 1..n).map(|k| l[k * n + i] * x[k]).sum();
        x[i] = (b[i] - dot) / l[i * n + i];
    }
    x
}

impl Gp {
    fn fit(xs: &[&[f64]], ys: &[f64]) -> Option<Gp> {
        let n = xs.len();
        if n == 0 {
            return None;
        }
        let mean = ys.iter().sum::<f64>() / n as f64;
        let var = ys.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / n as f64;
        let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
        let z: Vec<f64> = ys.iter().map(|y| (y - mean) / sd).collect();
        let d2: Vec<f64> = (0..n * n).map(|k| sq_dist(xs[k / n], xs[k % n])).collect();

        let mut best: Option<(f64, Gp)> = None;
        for &length in LENGTH_SCALES {
            let mut jitter = NOISE;
            let (chol, _) = loop {
                let k: Vec<f64> = d2
                    .iter()
                    .enumerate()
                    .map(|(idx, d)| {
                        (-d / (2.0 * length * length)).exp()
                            + if idx / n == idx % n { jitter } else { 0.0 }
                    })
                    .collect();
                match cholesky(&k, n) {
                    Some(l) => break (l, jitter),
                    None if jitter < 1e-2 => jitter *= 10.0,
                    None => break (Vec::new(), jitter),
                }
            };
            if chol.is_empty() {
                continue;
            }
            let alpha = backward(&chol, n, &forward(&chol, n, &z));
            let quad: f64 = z.iter().zip(&alpha).map(|(a, b)| a * b).sum();
            let signal = (quad / n as f64).max(1e-12);
            let log_det: f64 = (0..n).map(|i| chol[i * n + i].ln()).sum::<f64>() * 2.0;
            // profile likelihood with the signal variance at its optimum
            let ll = -0.5 * n as f64 * signal.ln() - 0.5 * log_det;
            if best.as_ref().is_none_or(|(b, _)| ll > *b) {
                let y_min = z.iter().copied().fold(f64::INFINITY, f64::min);
                best = Some((
                    ll,
                    Gp {
                        xs: xs.iter().map(|x| x.to_vec()).collect(),
                        chol,
                        alpha,
                        length,
                        signal,
                        y_min,
                    },
                ));
            }
        }
        best.map(|(_, gp)| gp)
    }

    fn predict(&self, x: &[f64]) -> (f64, f64) {
        let n = self.xs.len();
        let k: Vec<f64> = self
            .xs
            .iter()
            .map(|xi| (-sq_dist(x, xi) / (2.0 * self.length * self.length)).exp())
            .collect();
        let mu: f64 = k.iter().zip(&self.alpha).map(|(a, b)| a * b).sum();
        let v = forward(&self.chol, n, &k);
        let var = self.signal * (1.0 - v.iter().map(|t| t * t).sum::<f64>()).max(0.0);
        (mu, var)
    }

    fn expected_improvement(&self, x: &[f64], best: f64, xi: f64) -> f64 {
        let (mu, var) = self.predict(x);
        let sd = var.sqrt();
        let gain = best - mu - xi;
        if sd < 1e-12 {
            return gain.max(0.0);
        }
        let z = gain / sd;
        let normal = Normal::standard();
        gain * normal.cdf(z) + sd * normal.pdf(z)
    }
}
