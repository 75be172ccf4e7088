use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hdp::top_indices;

/// Tolerance on the total mass of an input distribution.
pub const NORMALIZATION_TOL: f64 = 1e-6;

/// Similarity between two topic distributions, in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    /// Weighted Jaccard: `sum min(p, q) / sum max(p, q)`.
    Jaccard,
    /// `1 - JSD(p, q)` with base-2 logarithms.
    JensenShannon,
    /// `1 - ||p - q||_2 / sqrt(2)`.
    L2,
    /// Set Jaccard over the `k` most probable words of each topic.
    TopKJaccard(usize),
}

impl Measure {
    pub fn name(&self) -> String {
        match self {
            Measure::Jaccard => "jaccard".into(),
            Measure::JensenShannon => "jensen_shannon".into(),
            Measure::L2 => "l2".into(),
            Measure::TopKJaccard(k) => format!("topk_jaccard:{k}"),
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jaccard" => Ok(Measure::Jaccard),
            "jensen_shannon" | "js" => Ok(Measure::JensenShannon),
            "l2" => Ok(Measure::L2),
            _ => match s.strip_prefix("topk_jaccard:").map(str::parse) {
                Some(Ok(k)) if k > 0 => Ok(Measure::TopKJaccard(k)),
                _ => Err(Error::config("measure", format!("unknown measure `{s}`"))),
            },
        }
    }
}

fn validate(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::invalid(format!(
            "dimension mismatch: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    for (name, v) in [("p", p), ("q", q)] {
        if v.iter().any(|&x| x < 0.0 || !x.is_finite()) {
            return Err(Error::invalid(format!("{name} has negative or non-finite entries")));
        }
        let total: f64 = v.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::invalid(format!("{name} sums to {total}, not 1")));
        }
    }
    Ok(())
}

pub fn similarity(p: &[f64], q: &[f64], measure: Measure) -> Result<f64> {
    validate(p, q)?;
    Ok(similarity_unchecked(p, q, measure))
}

/// [`similarity`] without input validation.
pub fn similarity_unchecked(p: &[f64], q: &[f64], measure: Measure) -> f64 {
    match measure {
        Measure::Jaccard => weighted_jaccard(p, q),
        Measure::JensenShannon => 1.0 - jensen_shannon_divergence(p, q),
        Measure::L2 => {
            let d2: f64 = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
            (1.0 - d2.sqrt() / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
        }
        Measure::TopKJaccard(k) => {
            let a: HashSet<usize> = top_indices(p, k).into_iter().collect();
            let b: HashSet<usize> = top_indices(q, k).into_iter().collect();
            let union = a.union(&b).count();
            if union == 0 {
                1.0
            } else {
                a.intersection(&b).count() as f64 / union as f64
            }
        }
    }
}

fn weighted_jaccard(p: &[f64], q: &[f64]) -> f64 {
    let (mut lo, mut hi) = (0.0, 0.0);
    for (&a, &b) in p.iter().zip(q) {
        lo += a.min(b);
        hi += a.max(b);
    }
    if hi == 0.0 {
        1.0
    } else {
        lo / hi
    }
}

/// Base-2 Jensen-Shannon divergence, in `[0, 1]`. Each coordinate's
/// contribution is symmetric in `(p, q)`, so the result is exactly symmetric.
fn jensen_shannon_divergence(p: &[f64], q: &[f64]) -> f64 {
    let kl_term = |x: f64, m: f64| if x > 0.0 { x * (x / m).log2() } else { 0.0 };
    let mut total = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        let m = (a + b) / 2.0;
        total += 0.5 * (kl_term(a, m) + kl_term(b, m));
    }
    total.clamp(0.0, 1.0)
}
