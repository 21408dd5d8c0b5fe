//! Statistical machinery for comparing simulation output with closed-form
//! oracles: means with standard errors, Kolmogorov–Smirnov tests and
//! structured pass/fail reports.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{domain, Result};
use crate::rng::{path_rng, SimRng};

/// Sample mean of the finite draws, its standard error and the fraction of
/// draws that were finite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
    pub finite_fraction: f64,
}

impl MeanEstimate {
    pub fn z_against(&self, oracle: f64) -> f64 {
        z_score(self.mean, oracle, self.std_error)
    }
}

/// `(estimate − oracle)/se`, with `se = 0` mapped to 0 or ±∞.
pub fn z_score(estimate: f64, oracle: f64, se: f64) -> f64 {
    let diff = estimate - oracle;
    if se > 0.0 {
        diff / se
    } else if diff.abs() <= 1e-12 * oracle.abs().max(1.0) {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

/// Mean and standard error of a sample; infinite values are excluded and
/// reported through `finite_fraction`.
pub fn mean_of(samples: &[f64]) -> Result<MeanEstimate> {
    if samples.len() < 2 {
        return domain(format!("need at least 2 samples, got {}", samples.len()));
    }
    let finite: Vec<f64> = samples.iter().copied().filter(|x| x.is_finite()).collect();
    let n = finite.len();
    let finite_fraction = n as f64 / samples.len() as f64;
    if n == 0 {
        return Ok(MeanEstimate {
            mean: f64::NAN,
            std_error: f64::NAN,
            n,
            finite_fraction,
        });
    }
    let mean = finite.iter().sum::<f64>() / n as f64;
    let std_error = if n > 1 {
        let var = finite.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0);
        (var / n as f64).sqrt()
    } else {
        f64::NAN
    };
    Ok(MeanEstimate {
        mean,
        std_error,
        n,
        finite_fraction,
    })
}

/// Draws `n` values in parallel, draw `i` from stream `(seed, domain, i)`,
/// returned in index order.
pub fn draw<F>(n: usize, seed: u64, domain_id: u32, sampler: F) -> Vec<f64>
where
    F: Fn(&mut SimRng) -> f64 + Sync,
{
    (0..n as u64)
        .into_par_iter()
        .map(|i| sampler(&mut path_rng(seed, domain_id, i)))
        .collect()
}

/// Fallible variant of [`draw`].
pub fn try_draw<T, F>(n: usize, seed: u64, domain_id: u32, sampler: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut SimRng) -> Result<T> + Sync,
{
    (0..n as u64)
        .into_par_iter()
        .map(|i| sampler(&mut path_rng(seed, domain_id, i)))
        .collect()
}

/// Sample mean and standard error of `n` draws from `sampler`.
pub fn estimate_mean<F>(n: usize, seed: u64, domain_id: u32, sampler: F) -> Result<MeanEstimate>
where
    F: Fn(&mut SimRng) -> f64 + Sync,
{
    if n < 2 {
        return domain(format!("need at least 2 draws, got {n}"));
    }
    mean_of(&draw(n, seed, domain_id, sampler))
}

/// Binomial proportion with its standard error.
pub fn proportion(successes: usize, n: usize) -> MeanEstimate {
    let p = successes as f64 / n as f64;
    MeanEstimate {
        mean: p,
        std_error: (p * (1.0 - p) / n as f64).sqrt(),
        n,
        finite_fraction: 1.0,
    }
}

/// Proportion whose standard error uses the hypothesised `p0`, so that a
/// rare event with no observed successes still yields a finite z-score.
pub fn proportion_under(successes: usize, n: usize, p0: f64) -> MeanEstimate {
    MeanEstimate {
        std_error: (p0 * (1.0 - p0) / n as f64).sqrt(),
        ..proportion(successes, n)
    }
}

/// Kolmogorov distribution tail `P(K > λ)`.
pub fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let y = (-pi2 / (8.0 * lambda * lambda)).exp();
        let mut sum = 0.0;
        let mut k = 1.0;
        loop {
            let term = y.powf(k * k);
            sum += term;
            if term < 1e-17 {
                break;
            }
            k += 2.0;
        }
        1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * sum
    } else {
        let mut sum = 0.0;
        for k in 1..100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            sum += if k % 2 == 1 { term } else { -term };
            if term < 1e-17 {
                break;
            }
        }
        (2.0 * sum).clamp(0.0, 1.0)
    }
}

fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    let root = n_eff.sqrt();
    kolmogorov_tail((root + 0.12 + 0.11 / root) * d)
}

/// Result of a Kolmogorov–Smirnov test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

const KS_MIN_SAMPLES: usize = 20;

/// One-sample KS test of `samples` against `cdf`. Infinite samples count as
/// mass the CDF never reaches.
pub fn ks_one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<KsResult> {
    if samples.len() < KS_MIN_SAMPLES {
        return domain(format!(
            "KS test needs at least {KS_MIN_SAMPLES} samples, got {}",
            samples.len()
        ));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return domain("KS test received NaN samples");
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = if x.is_finite() { cdf(x) } else { 1.0 };
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((hi - f).abs()).max((f - lo).abs());
    }
    Ok(KsResult {
        statistic: d,
        p_value: ks_p_value(d, n),
    })
}

/// Two-sample KS test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.len() < KS_MIN_SAMPLES || b.len() < KS_MIN_SAMPLES {
        return domain(format!(
            "KS test needs at least {KS_MIN_SAMPLES} samples per side, got {} and {}",
            a.len(),
            b.len()
        ));
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return domain("KS test received NaN samples");
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = if xs[i] <= ys[j] { xs[i] } else { ys[j] };
        while i < n && xs[i] <= v {
            i += 1;
        }
        while j < m && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let n_eff = (n * m) as f64 / (n + m) as f64;
    Ok(KsResult {
        statistic: d,
        p_value: ks_p_value(d, n_eff),
    })
}

/// Two-sided normal deviate with tail probability `p`.
pub fn equivalent_z(p: f64) -> f64 {
    let half = 0.5 * p.clamp(0.0, 1.0);
    if half <= 1e-300 {
        return 37.5;
    }
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    -n.inverse_cdf(half)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Decision rule attached to a report.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Rule {
    /// `|z| ≤ threshold`.
    ZScore { threshold: f64 },
    /// KS p-value at least `alpha`; `z_score` carries the equivalent deviate.
    KsTest { alpha: f64, p_value: f64 },
    /// `|estimate − oracle| ≤ tolerance`.
    Tolerance { tolerance: f64 },
    /// `estimate ≤ oracle` (e.g. bias at the finer step below bias at the coarser).
    AtMost,
}

/// One oracle comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub name: String,
    pub oracle_value: f64,
    pub mc_estimate: f64,
    pub std_error: f64,
    pub n: usize,
    pub z_score: f64,
    pub rule: Rule,
    pub verdict: Verdict,
    pub metadata: BTreeMap<String, serde_json::Value>,
}

impl OracleReport {
    /// Mean estimate against an exact value, pass iff `|z| ≤ threshold`.
    pub fn z_test(name: impl Into<String>, oracle: f64, est: &MeanEstimate, threshold: f64) -> Self {
        let z = est.z_against(oracle);
        let verdict = if z.abs() <= threshold {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        Self {
            name: name.into(),
            oracle_value: oracle,
            mc_estimate: est.mean,
            std_error: est.std_error,
            n: est.n,
            z_score: z,
            rule: Rule::ZScore { threshold },
            verdict,
            metadata: BTreeMap::new(),
        }
    }

    /// KS outcome; `oracle_value` is 0 (the null statistic) and
    /// `mc_estimate` the observed statistic.
    pub fn ks(name: impl Into<String>, ks: &KsResult, n: usize, alpha: f64) -> Self {
        let verdict = if ks.p_value >= alpha {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        Self {
            name: name.into(),
            oracle_value: 0.0,
            mc_estimate: ks.statistic,
            std_error: f64::NAN,
            n,
            z_score: equivalent_z(ks.p_value),
            rule: Rule::KsTest {
                alpha,
                p_value: ks.p_value,
            },
            verdict,
            metadata: BTreeMap::new(),
        }
    }

    pub fn tolerance(name: impl Into<String>, oracle: f64, value: f64, tolerance: f64) -> Self {
        let verdict = if (value - oracle).abs() <= tolerance {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        Self {
            name: name.into(),
            oracle_value: oracle,
            mc_estimate: value,
            std_error: 0.0,
            n: 1,
            z_score: f64::NAN,
            rule: Rule::Tolerance { tolerance },
            verdict,
            metadata: BTreeMap::new(),
        }
    }

    pub fn at_most(name: impl Into<String>, bound: f64, value: f64, std_error: f64) -> Self {
        let verdict = if value <= bound { Verdict::Pass } else { Verdict::Fail };
        Self {
            name: name.into(),
            oracle_value: bound,
            mc_estimate: value,
            std_error,
            n: 1,
            z_score: z_score(value, bound, std_error),
            rule: Rule::AtMost,
            verdict,
            metadata: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.metadata.insert(key.to_string(), v);
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}
