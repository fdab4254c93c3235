//! Relatedness of two texts from their concept vectors.
//!
//! Both vectors are aligned over the union of their concepts (missing
//! entries are zero) and compared with cosine similarity. Because sparse
//! concept vectors give low cosines even for strongly related terms, the
//! cosine is then rescaled by a threshold `λ`:
//!
//! ```text
//! rel = 1               if cos >= λ
//! rel = cos / λ         otherwise
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conceptspace::{build_concept_vector, ConceptVector, PipelineError, PipelineParams};
use crate::index::PostingsIndex;
use crate::miner::RuleStore;

/// Slack allowed on cosine inputs before [`normalize`] rejects them.
pub const COSINE_SLACK: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum RelatednessError {
    #[error("lambda must be in (0, 1], got {0}")]
    InvalidLambda(f64),
    #[error("cosine relatedness {0} is outside [0, 1]")]
    CosineOutOfRange(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelatednessParams {
    pub lambda: f64,
}

impl Default for RelatednessParams {
    fn default() -> Self {
        RelatednessParams { lambda: 0.25 }
    }
}

impl RelatednessParams {
    pub fn new(lambda: f64) -> Result<Self, RelatednessError> {
        let p = RelatednessParams { lambda };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), RelatednessError> {
        if self.lambda > 0.0 && self.lambda <= 1.0 {
            Ok(())
        } else {
            Err(RelatednessError::InvalidLambda(self.lambda))
        }
    }
}

/// Cosine similarity over the union of both supports; 0 if either vector
/// is empty.
pub fn cosine(v1: &ConceptVector, v2: &ConceptVector) -> f64 {
    if v1.is_empty() || v2.is_empty() {
        return 0.0;
    }
    let mut dot = 0.0;
    let mut a = v1.iter().peekable();
    let mut b = v2.iter().peekable();
    while let (Some(&(ca, wa)), Some(&(cb, wb))) = (a.peek(), b.peek()) {
        match ca.cmp(&cb) {
            std::cmp::Ordering::Less => {
                a.next();
            }
            std::cmp::Ordering::Greater => {
                b.next();
            }
            std::cmp::Ordering::Equal => {
                dot += wa * wb;
                a.next();
                b.next();
            }
        }
    }
    let n1 = v1.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
    let n2 = v2.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
    if n1 == 0.0 || n2 == 0.0 {
        return 0.0;
    }
    (dot / (n1 * n2)).clamp(0.0, 1.0)
}

/// Applies the `λ` threshold to a cosine score.
pub fn normalize(rel_cos: f64, params: &RelatednessParams) -> Result<f64, RelatednessError> {
    params.validate()?;
    if !(-COSINE_SLACK..=1.0 + COSINE_SLACK).contains(&rel_cos) {
        return Err(RelatednessError::CosineOutOfRange(rel_cos));
    }
    let rel_cos = rel_cos.clamp(0.0, 1.0);
    Ok(if rel_cos >= params.lambda {
        1.0
    } else {
        rel_cos / params.lambda
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Relatedness {
    /// Normalized score in [0, 1].
    pub score: f64,
    pub cosine: f64,
    /// False when the first text produced an empty concept vector.
    pub first_covered: bool,
    pub second_covered: bool,
}

impl Relatedness {
    pub fn fully_covered(&self) -> bool {
        self.first_covered && self.second_covered
    }
}

pub fn relate(
    t1: &str,
    t2: &str,
    index: &PostingsIndex,
    rules: &RuleStore,
    params: &PipelineParams,
) -> Result<Relatedness, PipelineError> {
    let v1 = build_concept_vector(t1, index, rules, params)?;
    let v2 = build_concept_vector(t2, index, rules, params)?;
    relate_vectors(&v1, &v2, &params.relatedness)
}

pub fn relate_vectors(
    v1: &ConceptVector,
    v2: &ConceptVector,
    params: &RelatednessParams,
) -> Result<Relatedness, PipelineError> {
    let cos = cosine(v1, v2);
    Ok(Relatedness {
        score: normalize(cos, params)?,
        cosine: cos,
        first_covered: !v1.is_empty(),
        second_covered: !v2.is_empty(),
    })
}
