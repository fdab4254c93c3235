//! Bag-of-concepts vectors.
//!
//! A text's vector is the union of two concept sets:
//!
//! - explicit concepts, returned by searching the index with the text;
//! - latent concepts, the consequents of mined rules whose antecedent is an
//!   explicit concept. A latent concept takes the weight of the explicit
//!   concept that implied it.
//!
//! Expansion is one hop: rules are applied to explicit concepts only. When
//! several explicit concepts imply the same latent concept it keeps the
//! largest weight, and a concept that is both explicit and latent keeps its
//! explicit weight.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::index::{sort_weighted, IndexError, PostingsIndex, SearchParams, WeightedConcept};
use crate::miner::{MinerError, RuleStore};
use crate::relatedness::{self, Relatedness, RelatednessError, RelatednessParams};
use crate::ConceptId;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Search(#[from] IndexError),
    #[error(transparent)]
    Rules(#[from] MinerError),
    #[error(transparent)]
    Relatedness(#[from] RelatednessError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConceptKind {
    Explicit,
    Latent,
}

/// Sparse concept id -> weight map. Stored weights are always positive.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConceptVector {
    entries: BTreeMap<ConceptId, f64>,
    provenance: Option<BTreeMap<ConceptId, ConceptKind>>,
}

impl ConceptVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Vector without provenance. Non-positive weights are dropped; a
    /// repeated id keeps its last weight.
    pub fn from_weights<I: IntoIterator<Item = (ConceptId, f64)>>(weights: I) -> Self {
        ConceptVector {
            entries: weights.into_iter().filter(|&(_, w)| w > 0.0).collect(),
            provenance: None,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, c: ConceptId) -> Option<f64> {
        self.entries.get(&c).copied()
    }

    pub fn kind(&self, c: ConceptId) -> Option<ConceptKind> {
        self.provenance.as_ref()?.get(&c).copied()
    }

    /// Entries in ascending concept id order.
    pub fn iter(&self) -> impl Iterator<Item = (ConceptId, f64)> + '_ {
        self.entries.iter().map(|(&c, &w)| (c, w))
    }

    pub fn has_provenance(&self) -> bool {
        self.provenance.is_some()
    }

    /// Entries of one kind, by descending weight then ascending id.
    pub fn of_kind(&self, kind: ConceptKind) -> Vec<WeightedConcept> {
        let mut out: Vec<WeightedConcept> = self
            .iter()
            .filter(|&(c, _)| self.kind(c) == Some(kind))
            .map(|(concept, weight)| WeightedConcept { concept, weight })
            .collect();
        sort_weighted(&mut out);
        out
    }

    /// Multiplies every weight by `k` (> 0).
    pub fn scaled(&self, k: f64) -> Self {
        assert!(k > 0.0, "scale factor must be positive");
        ConceptVector {
            entries: self.entries.iter().map(|(&c, &w)| (c, w * k)).collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// JSON-ready dump with titles, by descending weight.
    pub fn dump(&self, text: &str, index: &PostingsIndex) -> VectorDump {
        let mut items: Vec<WeightedConcept> = self
            .iter()
            .map(|(concept, weight)| WeightedConcept { concept, weight })
            .collect();
        sort_weighted(&mut items);
        VectorDump {
            text: text.to_string(),
            concepts: items
                .into_iter()
                .map(|wc| DumpEntry {
                    title: index.title(wc.concept).unwrap_or_default().to_string(),
                    weight: wc.weight,
                    kind: self.kind(wc.concept).unwrap_or(ConceptKind::Explicit),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpEntry {
    pub title: String,
    pub weight: f64,
    pub kind: ConceptKind,
}

/// `{"text": ..., "concepts": [{"title", "weight", "kind"}]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorDump {
    pub text: String,
    pub concepts: Vec<DumpEntry>,
}

/// Every tunable used when mapping text to concepts and scoring pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineParams {
    pub search: SearchParams,
    /// Maximum title length, in words, of latent concepts.
    pub expansion_max_title_words: usize,
    pub min_support: u32,
    pub min_confidence: f64,
    pub relatedness: RelatednessParams,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams {
            search: SearchParams::default(),
            expansion_max_title_words: 3,
            min_support: 1,
            min_confidence: 0.0,
            relatedness: RelatednessParams::default(),
        }
    }
}

impl PipelineParams {
    /// No length filter and generous title limits; handy for small corpora.
    pub fn permissive() -> Self {
        PipelineParams {
            search: SearchParams {
                min_article_chars: 0,
                max_concepts: 800,
                max_title_words: 8,
            },
            expansion_max_title_words: 8,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        self.search.validate()?;
        if self.expansion_max_title_words == 0 {
            return Err(IndexError::InvalidParams("expansion max_title_words (tau_p) must be >= 1".into()).into());
        }
        if !(0.0..=1.0).contains(&self.min_confidence) {
            return Err(MinerError::InvalidParams("min_confidence must be in [0, 1]".into()).into());
        }
        self.relatedness.validate()?;
        Ok(())
    }
}

/// Latent concepts implied by `explicit` through rules passing `(ε, υ)`,
/// limited to titles of at most `max_title_words` words. Each inherits the
/// weight of its antecedent; repeats keep the largest weight.
pub fn expand<F>(
    explicit: &[WeightedConcept],
    rules: &RuleStore,
    min_support: u32,
    min_confidence: f64,
    max_title_words: usize,
    title_words: F,
) -> Result<Vec<WeightedConcept>, MinerError>
where
    F: Fn(ConceptId) -> Option<usize>,
{
    rules.check_thresholds(min_support, min_confidence)?;
    let mut latent: BTreeMap<ConceptId, f64> = BTreeMap::new();
    for wc in explicit {
        for rule in rules.lookup_consequents(wc.concept, min_support, min_confidence)? {
            for &c in &rule.consequent {
                if !title_words(c).is_some_and(|n| n <= max_title_words) {
                    continue;
                }
                let w = latent.entry(c).or_insert(wc.weight);
                if wc.weight > *w {
                    *w = wc.weight;
                }
            }
        }
    }
    let mut out: Vec<WeightedConcept> = latent
        .into_iter()
        .map(|(concept, weight)| WeightedConcept { concept, weight })
        .collect();
    sort_weighted(&mut out);
    Ok(out)
}

/// Merges explicit and latent concepts; explicit weights win on collision.
pub fn merge(explicit: &[WeightedConcept], latent: &[WeightedConcept]) -> ConceptVector {
    let mut entries = BTreeMap::new();
    let mut provenance = BTreeMap::new();
    for wc in explicit.iter().filter(|wc| wc.weight > 0.0) {
        entries.insert(wc.concept, wc.weight);
        provenance.insert(wc.concept, ConceptKind::Explicit);
    }
    for wc in latent.iter().filter(|wc| wc.weight > 0.0) {
        if let Entry::Vacant(slot) = entries.entry(wc.concept) {
            slot.insert(wc.weight);
            provenance.insert(wc.concept, ConceptKind::Latent);
        }
    }
    ConceptVector {
        entries,
        provenance: Some(provenance),
    }
}

/// Search, expand, merge.
pub fn build_concept_vector(
    text: &str,
    index: &PostingsIndex,
    rules: &RuleStore,
    params: &PipelineParams,
) -> Result<ConceptVector, PipelineError> {
    let explicit = index.search(text, &params.search);
    let latent = expand(
        &explicit,
        rules,
        params.min_support,
        params.min_confidence,
        params.expansion_max_title_words,
        |c| index.title_words(c),
    )?;
    Ok(merge(&explicit, &latent))
}

/// Loaded index and rule store plus the parameters to apply.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub index: PostingsIndex,
    pub rules: RuleStore,
    pub params: PipelineParams,
}

impl Pipeline {
    pub fn new(index: PostingsIndex, rules: RuleStore, params: PipelineParams) -> Self {
        Pipeline { index, rules, params }
    }

    pub fn concept_vector(&self, text: &str) -> Result<ConceptVector, PipelineError> {
        self.concept_vector_with(text, &self.params)
    }

    pub fn concept_vector_with(&self, text: &str, params: &PipelineParams) -> Result<ConceptVector, PipelineError> {
        build_concept_vector(text, &self.index, &self.rules, params)
    }

    pub fn relate(&self, t1: &str, t2: &str) -> Result<Relatedness, PipelineError> {
        self.relate_with(t1, t2, &self.params)
    }

    pub fn relate_with(&self, t1: &str, t2: &str, params: &PipelineParams) -> Result<Relatedness, PipelineError> {
        relatedness::relate(t1, t2, &self.index, &self.rules, params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ArticleRecord;
    use crate::miner::{build_transactions, MiningParams, TitleResolver};

    fn wc(c: u32, w: f64) -> WeightedConcept {
        WeightedConcept {
            concept: ConceptId(c),
            weight: w,
        }
    }

    fn store(pairs: &[(u32, u32)]) -> RuleStore {
        let txs: Vec<_> = pairs
            .iter()
            .map(|&(a, b)| crate::miner::Transaction::new([ConceptId(a), ConceptId(b)]).unwrap())
            .collect();
        RuleStore::mine(&txs, MiningParams::default()).unwrap()
    }

    fn one_word(_: ConceptId) -> Option<usize> {
        Some(1)
    }

    #[test]
    fn expand_empty() {
        let rules = store(&[(1, 2)]);
        assert!(expand(&[], &rules, 1, 0.0, 3, one_word).unwrap().is_empty());
    }

    #[test]
    fn latent_inherits_weight() {
        let rules = store(&[(1, 2)]);
        let got = expand(&[wc(1, 0.8)], &rules, 1, 0.0, 3, one_word).unwrap();
        assert_eq!(got, vec![wc(2, 0.8)]);
    }

    #[test]
    fn latent_repeats_take_max() {
        let rules = store(&[(1, 2), (3, 2)]);
        let got = expand(&[wc(1, 0.8), wc(3, 0.5)], &rules, 1, 0.0, 3, one_word).unwrap();
        // 2 is implied by both; 1 and 3 are implied by 2 only, which is not explicit
        assert_eq!(got, vec![wc(2, 0.8)]);
    }

    #[test]
    fn latent_title_filter() {
        let rules = store(&[(1, 2), (1, 3)]);
        let words = |c: ConceptId| Some(if c == ConceptId(2) { 4 } else { 3 });
        let got = expand(&[wc(1, 0.5)], &rules, 1, 0.0, 3, words).unwrap();
        assert_eq!(got, vec![wc(3, 0.5)]);
    }

    #[test]
    fn merge_explicit_wins() {
        let v = merge(&[wc(1, 0.3), wc(2, 0.9)], &[wc(1, 0.9), wc(4, 0.9)]);
        assert_eq!(v.get(ConceptId(1)), Some(0.3));
        assert_eq!(v.kind(ConceptId(1)), Some(ConceptKind::Explicit));
        assert_eq!(v.kind(ConceptId(4)), Some(ConceptKind::Latent));
        assert_eq!(v.len(), 3);
        assert_eq!(v.of_kind(ConceptKind::Explicit), vec![wc(2, 0.9), wc(1, 0.3)]);
    }

    #[test]
    fn toy_vector_with_provenance() {
        let articles = vec![
            ArticleRecord::new(0, "Alpha", "unique words here", vec!["Beta".into()]),
            ArticleRecord::new(1, "Beta", "nothing shared", vec![]),
        ];
        let index = PostingsIndex::build(articles.clone()).unwrap();
        let resolver = TitleResolver::from_articles(&articles);
        let (txs, _) = build_transactions(&articles, |t| resolver.resolve(t));
        let rules = RuleStore::mine(&txs, MiningParams::default()).unwrap();
        let params = PipelineParams::permissive();

        let hits = index.search("unique", &params.search);
        assert_eq!(hits.len(), 1);
        let v = build_concept_vector("unique", &index, &rules, &params).unwrap();
        assert_eq!(v.get(ConceptId(0)), Some(hits[0].weight));
        assert_eq!(v.get(ConceptId(1)), Some(hits[0].weight));
        assert_eq!(v.kind(ConceptId(1)), Some(ConceptKind::Latent));

        let dump = v.dump("unique", &index);
        assert_eq!(dump.concepts[0].title, "Alpha");
        assert_eq!(dump.concepts[1].kind, ConceptKind::Latent);
        let json = serde_json::to_string(&dump).unwrap();
        assert!(json.starts_with(r#"{"text":"unique","concepts":[{"title":"Alpha","weight":"#));
        assert!(json.contains(r#""kind":"latent""#));

        assert!(build_concept_vector("zzz", &index, &rules, &params).unwrap().is_empty());
    }

    #[test]
    fn from_weights_drops_non_positive() {
        let v = ConceptVector::from_weights([(ConceptId(0), 0.0), (ConceptId(1), 2.0), (ConceptId(2), -1.0)]);
        assert_eq!(v.len(), 1);
        assert!(!v.has_provenance());
    }
}
