//! Steiger's Z test for two dependent, overlapping correlations.
//!
//! Two methods are scored on the same word pairs. `r12` and `r13` are each
//! method's correlation with the gold scores, `r23` the correlation between
//! the two methods. With Fisher's transform `z(r) = artanh(r)`:
//!
//! ```text
//! r̄  = (r12 + r13) / 2
//! ψ  = r23 (1 - 2 r̄²) - ½ r̄² (1 - 2 r̄² - r23²)
//! s̄  = ψ / (1 - r̄²)²
//! Z  = (z(r12) - z(r13)) · sqrt((n - 3) / (2 - 2 s̄))
//! ```
//!
//! `Z` is positive when method A agrees more with gold. P-values come from
//! the standard normal upper tail, computed as `½ erfc(|Z| / √2)` with the
//! `libm` port of the FreeBSD/musl `erfc` (relative error within a few ulp,
//! well under 1e-12 absolute over the whole range).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evalbench::{pearson, spearman, CorrelationError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SignificanceError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{0} scores have zero variance")]
    Degenerate(ScoreList),
    #[error("score lists differ in length: gold {gold}, method A {a}, method B {b}")]
    LengthMismatch { gold: usize, a: usize, b: usize },
    #[error("need at least 4 scored pairs, got {0}")]
    TooFewPairs(usize),
    #[error("correlation failed: {0}")]
    Correlation(#[from] CorrelationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScoreList {
    Gold,
    MethodA,
    MethodB,
}

impl fmt::Display for ScoreList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScoreList::Gold => "gold",
            ScoreList::MethodA => "method A",
            ScoreList::MethodB => "method B",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tails {
    #[default]
    One,
    Two,
}

impl FromStr for Tails {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "one" | "1" => Ok(Tails::One),
            "two" | "2" => Ok(Tails::Two),
            other => Err(format!("unknown tails {other:?} (expected one or two)")),
        }
    }
}

/// Fisher's z-transform, `artanh(r)`. Requires `|r| < 1`.
pub fn fisher_z(r: f64) -> Result<f64, SignificanceError> {
    if r.is_nan() || r.abs() >= 1.0 {
        return Err(SignificanceError::Domain(format!("fisher_z needs |r| < 1, got {r}")));
    }
    // evaluated on |r| so that fisher_z(-r) == -fisher_z(r) bit for bit
    Ok(r.signum() * r.abs().atanh())
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// `P(Z > z)` for a standard normal `Z`.
pub fn normal_upper_tail(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

pub fn p_value(z: f64, tails: Tails) -> f64 {
    let one = normal_upper_tail(z.abs());
    match tails {
        Tails::One => one,
        Tails::Two => (2.0 * one).min(1.0),
    }
}

/// Steiger's Z for `r12` vs `r13` sharing variable 1, given `r23` and the
/// sample size. Returns `(Z, p)`.
pub fn steiger_z(r12: f64, r13: f64, r23: f64, n: usize, tails: Tails) -> Result<(f64, f64), SignificanceError> {
    if n < 4 {
        return Err(SignificanceError::Domain(format!("n must be >= 4, got {n}")));
    }
    if r23.is_nan() || r23.abs() > 1.0 {
        return Err(SignificanceError::Domain(format!("|r23| must be <= 1, got {r23}")));
    }
    let z12 = fisher_z(r12)?;
    let z13 = fisher_z(r13)?;
    if r12 == r13 {
        return Ok((0.0, p_value(0.0, tails)));
    }

    let rbar = (r12 + r13) / 2.0;
    let rbar2 = rbar * rbar;
    let psi = r23 * (1.0 - 2.0 * rbar2) - 0.5 * rbar2 * (1.0 - 2.0 * rbar2 - r23 * r23);
    let sbar = psi / ((1.0 - rbar2) * (1.0 - rbar2));
    let denom = 2.0 - 2.0 * sbar;
    if denom.is_nan() || denom <= 0.0 {
        return Err(SignificanceError::Domain(format!(
            "variance term 2 - 2s̄ = {denom} is not positive (r23 too close to 1)"
        )));
    }
    let z = (z12 - z13) * ((n as f64 - 3.0) / denom).sqrt();
    Ok((z, p_value(z, tails)))
}

/// Outcome of comparing two methods against the same gold scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependentCorrelationTest {
    /// Method A vs gold.
    pub r12: f64,
    /// Method B vs gold.
    pub r13: f64,
    /// Method A vs method B.
    pub r23: f64,
    pub n: usize,
    pub z_stat: f64,
    pub p_value: f64,
    pub tails: Tails,
    pub alpha: f64,
    pub rank_based: bool,
}

impl DependentCorrelationTest {
    pub fn significant(&self) -> bool {
        self.p_value < self.alpha
    }

    /// One row shaped like a significance table:
    /// `corr A, corr B, A-vs-B corr, Z, p, verdict`.
    pub fn table_row(&self, label_a: &str, label_b: &str) -> String {
        let stat = if self.rank_based { "rho" } else { "r" };
        format!(
            "{label_a} {stat}={:.3}  {label_b} {stat}={:.3}  method-method {stat}={:.3}  Z={:.3}  p={:.3}  {}",
            self.r12,
            self.r13,
            self.r23,
            self.z_stat,
            self.p_value,
            if self.significant() {
                format!("significant at {}", self.alpha)
            } else {
                format!("not significant at {}", self.alpha)
            }
        )
    }
}

fn all_equal(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[0] == w[1])
}

/// Correlates both methods with gold (and with each other) and runs
/// [`steiger_z`]. Spearman correlations when `rank_based`, else Pearson.
pub fn compare_methods(
    gold: &[f64],
    scores_a: &[f64],
    scores_b: &[f64],
    tails: Tails,
    alpha: f64,
    rank_based: bool,
) -> Result<DependentCorrelationTest, SignificanceError> {
    if gold.len() != scores_a.len() || gold.len() != scores_b.len() {
        return Err(SignificanceError::LengthMismatch {
            gold: gold.len(),
            a: scores_a.len(),
            b: scores_b.len(),
        });
    }
    let n = gold.len();
    if n < 4 {
        return Err(SignificanceError::TooFewPairs(n));
    }
    for (list, xs) in [
        (ScoreList::Gold, gold),
        (ScoreList::MethodA, scores_a),
        (ScoreList::MethodB, scores_b),
    ] {
        if all_equal(xs) {
            return Err(SignificanceError::Degenerate(list));
        }
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(SignificanceError::Domain(format!("alpha must be in (0, 1), got {alpha}")));
    }
    let corr = if rank_based { spearman } else { pearson };
    let r12 = corr(scores_a, gold)?;
    let r13 = corr(scores_b, gold)?;
    let r23 = corr(scores_a, scores_b)?;
    let (z_stat, p_value) = steiger_z(r12, r13, r23, n, tails)?;
    Ok(DependentCorrelationTest {
        r12,
        r13,
        r23,
        n,
        z_stat,
        p_value,
        tails,
        alpha,
        rank_based,
    })
}
