//! Term-to-concept inverted index and TF-IDF cosine search.
//!
//! Scoring, with `N` indexed documents and `df` the document frequency of a
//! term:
//!
//! ```text
//! idf(t)    = ln(1 + N / (1 + df(t)))
//! w(t, d)   = tf(t, d) * idf(t)            raw term frequency
//! w(t, q)   = tf(t, q) * idf(t)
//! score(d)  = sum_t w(t,q) w(t,d) / (|q| |d|)
//! ```
//!
//! `|d|` is the Euclidean norm of the document's full weight vector and
//! `|q|` the norm of the query over terms present in the vocabulary.
//! Matching is disjunctive. Title and body terms share one field.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::artifact::{self, ArtifactError};
use crate::corpus::ArticleRecord;
use crate::ConceptId;

pub const INDEX_KIND: &str = "postings-index";
pub const INDEX_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("duplicate concept id {0} in index build input")]
    DuplicateConcept(ConceptId),
    #[error("concept ids are not dense: id {missing} is missing below max id {max}")]
    NonDenseIds { missing: ConceptId, max: ConceptId },
    #[error("invalid search parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
}

/// Lowercased runs of Unicode alphanumeric characters.
///
/// ```
/// use conceptmine::index::tokenize;
/// assert_eq!(tokenize("state-of-the-art"), ["state", "of", "the", "art"]);
/// ```
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Number of whitespace-separated words in a title.
pub fn title_word_count(title: &str) -> usize {
    title.split_whitespace().count()
}

/// Search-phase filters: minimum body length `L`, maximum number of
/// results `M` and maximum title length `τ` in words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchParams {
    pub min_article_chars: usize,
    pub max_concepts: usize,
    pub max_title_words: usize,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            min_article_chars: 5000,
            max_concepts: 800,
            max_title_words: 2,
        }
    }
}

impl SearchParams {
    pub fn new(min_article_chars: usize, max_concepts: usize, max_title_words: usize) -> Result<Self, IndexError> {
        let p = SearchParams {
            min_article_chars,
            max_concepts,
            max_title_words,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), IndexError> {
        if self.max_concepts == 0 {
            return Err(IndexError::InvalidParams("max_concepts (M) must be >= 1".into()));
        }
        if self.max_title_words == 0 {
            return Err(IndexError::InvalidParams("max_title_words (tau) must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedConcept {
    pub concept: ConceptId,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub concept: ConceptId,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocStats {
    pub title: String,
    pub title_words: usize,
    pub body_chars: usize,
    /// Norm of the document's TF-IDF vector.
    pub norm: f64,
}

#[derive(Serialize, Deserialize)]
struct IndexData {
    terms: Vec<String>,
    postings: Vec<Vec<Posting>>,
    docs: Vec<DocStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexManifest {
    pub doc_count: usize,
    pub term_count: usize,
    pub posting_count: usize,
}

/// Immutable inverted index. Safe to share across threads for searching.
#[derive(Debug, Clone)]
pub struct PostingsIndex {
    vocabulary: HashMap<String, u32>,
    terms: Vec<String>,
    postings: Vec<Vec<Posting>>,
    docs: Vec<DocStats>,
}

impl PostingsIndex {
    /// Builds the index. Ids must be unique and cover `0..n` (any order).
    /// Term ids follow lexicographic term order, so the result does not
    /// depend on input order.
    pub fn build<I>(articles: I) -> Result<Self, IndexError>
    where
        I: IntoIterator<Item = ArticleRecord>,
    {
        let mut by_term: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut docs: Vec<Option<DocStats>> = Vec::new();

        for article in articles {
            let idx = article.id.index();
            if idx >= docs.len() {
                docs.resize(idx + 1, None);
            }
            if docs[idx].is_some() {
                return Err(IndexError::DuplicateConcept(article.id));
            }
            let mut counts: HashMap<String, u32> = HashMap::new();
            for tok in tokenize(&article.title).into_iter().chain(tokenize(&article.body)) {
                *counts.entry(tok).or_insert(0) += 1;
            }
            for (term, tf) in counts {
                by_term.entry(term).or_default().push(Posting {
                    concept: article.id,
                    tf,
                });
            }
            docs[idx] = Some(DocStats {
                title_words: title_word_count(&article.title),
                title: article.title,
                body_chars: article.body_chars,
                norm: 0.0,
            });
        }

        let max = ConceptId(docs.len().saturating_sub(1) as u32);
        let mut docs: Vec<DocStats> = docs
            .into_iter()
            .enumerate()
            .map(|(i, d)| {
                d.ok_or(IndexError::NonDenseIds {
                    missing: ConceptId(i as u32),
                    max,
                })
            })
            .collect::<Result<_, _>>()?;

        let n = docs.len();
        let mut terms = Vec::with_capacity(by_term.len());
        let mut postings = Vec::with_capacity(by_term.len());
        let mut norm_sq = vec![0.0f64; n];
        for (term, mut list) in by_term {
            list.sort_unstable_by_key(|p| p.concept);
            let idf = idf(n, list.len());
            for p in &list {
                let w = p.tf as f64 * idf;
                norm_sq[p.concept.index()] += w * w;
            }
            terms.push(term);
            postings.push(list);
        }
        for (doc, sq) in docs.iter_mut().zip(norm_sq) {
            doc.norm = sq.sqrt();
        }

        Ok(Self::from_parts(terms, postings, docs))
    }

    fn from_parts(terms: Vec<String>, postings: Vec<Vec<Posting>>, docs: Vec<DocStats>) -> Self {
        let vocabulary = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        PostingsIndex {
            vocabulary,
            terms,
            postings,
            docs,
        }
    }

    pub fn doc_count(&self) -> usize {
        self.docs.len()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn doc(&self, concept: ConceptId) -> Option<&DocStats> {
        self.docs.get(concept.index())
    }

    pub fn title(&self, concept: ConceptId) -> Option<&str> {
        self.doc(concept).map(|d| d.title.as_str())
    }

    pub fn title_words(&self, concept: ConceptId) -> Option<usize> {
        self.doc(concept).map(|d| d.title_words)
    }

    pub fn term_id(&self, term: &str) -> Option<u32> {
        self.vocabulary.get(term).copied()
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.term_id(term)
            .map(|id| self.postings[id as usize].as_slice())
            .unwrap_or(&[])
    }

    /// Inverse document frequency of an indexed term.
    pub fn idf(&self, term: &str) -> Option<f64> {
        self.term_id(term)
            .map(|id| idf(self.docs.len(), self.postings[id as usize].len()))
    }

    fn admits(&self, doc: &DocStats, params: &SearchParams) -> bool {
        doc.title_words <= params.max_title_words && doc.body_chars >= params.min_article_chars
    }

    /// Top-`M` concepts for `query` among documents passing the `L` and `τ`
    /// filters, by descending weight, ties by ascending concept id.
    pub fn search(&self, query: &str, params: &SearchParams) -> Vec<WeightedConcept> {
        let mut query_tf: BTreeMap<String, u32> = BTreeMap::new();
        for tok in tokenize(query) {
            *query_tf.entry(tok).or_insert(0) += 1;
        }

        let n = self.docs.len();
        let mut query_norm_sq = 0.0;
        let mut dots: HashMap<ConceptId, f64> = HashMap::new();
        for (term, qtf) in &query_tf {
            let Some(id) = self.term_id(term) else {
                continue;
            };
            let list = &self.postings[id as usize];
            let idf = idf(n, list.len());
            let qw = *qtf as f64 * idf;
            query_norm_sq += qw * qw;
            for p in list {
                if !self.admits(&self.docs[p.concept.index()], params) {
                    continue;
                }
                *dots.entry(p.concept).or_insert(0.0) += qw * (p.tf as f64 * idf);
            }
        }
        if dots.is_empty() {
            return Vec::new();
        }

        let query_norm = query_norm_sq.sqrt();
        let mut hits: Vec<WeightedConcept> = dots
            .into_iter()
            .map(|(concept, dot)| WeightedConcept {
                concept,
                weight: dot / (query_norm * self.docs[concept.index()].norm),
            })
            .filter(|wc| wc.weight > 0.0)
            .collect();
        sort_weighted(&mut hits);
        hits.truncate(params.max_concepts);
        hits
    }

    pub fn save(&self, dir: &Path, force: bool) -> Result<(), IndexError> {
        let manifest = IndexManifest {
            doc_count: self.doc_count(),
            term_count: self.term_count(),
            posting_count: self.postings.iter().map(Vec::len).sum(),
        };
        let data = IndexData {
            terms: self.terms.clone(),
            postings: self.postings.clone(),
            docs: self.docs.clone(),
        };
        artifact::write(dir, INDEX_KIND, INDEX_FORMAT_VERSION, &manifest, &data, force)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, IndexError> {
        let (manifest, data): (artifact::Manifest<IndexManifest>, IndexData) =
            artifact::read(dir, INDEX_KIND, INDEX_FORMAT_VERSION)?;
        debug_assert_eq!(manifest.details.doc_count, data.docs.len());
        Ok(Self::from_parts(data.terms, data.postings, data.docs))
    }
}

fn idf(doc_count: usize, df: usize) -> f64 {
    (1.0 + doc_count as f64 / (1.0 + df as f64)).ln()
}

/// Descending weight, then ascending concept id.
pub fn sort_weighted(items: &mut [WeightedConcept]) {
    items.sort_by(|a, b| {
        b.weight
            .partial_cmp(&a.weight)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.concept.cmp(&b.concept))
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    fn article(id: u32, title: &str, body: &str) -> ArticleRecord {
        ArticleRecord::new(id, title, body, vec![])
    }

    fn all() -> SearchParams {
        SearchParams::new(0, 100, 10).unwrap()
    }

    #[test]
    fn tokenizer_rules() {
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("Computational Linguistics"), ["computational", "linguistics"]);
        assert_eq!(tokenize("state-of-the-art"), ["state", "of", "the", "art"]);
        assert_eq!(tokenize("Ünïcode 42x, ok"), ["ünïcode", "42x", "ok"]);
    }

    #[test]
    fn empty_build() {
        let idx = PostingsIndex::build(Vec::new()).unwrap();
        assert_eq!(idx.doc_count(), 0);
        assert!(idx.search("anything", &all()).is_empty());
    }

    #[test]
    fn term_frequencies() {
        let idx = PostingsIndex::build(vec![article(0, "A", "x y x")]).unwrap();
        assert_eq!(idx.postings("x"), &[Posting { concept: ConceptId(0), tf: 2 }]);
        assert_eq!(idx.postings("y"), &[Posting { concept: ConceptId(0), tf: 1 }]);
        assert_eq!(idx.postings("a"), &[Posting { concept: ConceptId(0), tf: 1 }]);
    }

    #[test]
    fn shared_term_posting_length() {
        let idx = PostingsIndex::build(vec![article(1, "B", "x"), article(0, "A", "x z")]).unwrap();
        let ids: Vec<u32> = idx.postings("x").iter().map(|p| p.concept.0).collect();
        assert_eq!(ids, vec![0, 1]);
    }

    #[test]
    fn duplicate_and_sparse_ids() {
        let err = PostingsIndex::build(vec![article(0, "A", "x"), article(0, "B", "y")]).unwrap_err();
        assert!(matches!(err, IndexError::DuplicateConcept(ConceptId(0))));
        let err = PostingsIndex::build(vec![article(0, "A", "x"), article(2, "B", "y")]).unwrap_err();
        assert!(matches!(err, IndexError::NonDenseIds { missing: ConceptId(1), .. }));
    }

    #[test]
    fn no_vocabulary_match() {
        let idx = PostingsIndex::build(vec![article(0, "A", "x")]).unwrap();
        assert!(idx.search("qqq", &all()).is_empty());
        assert!(idx.search("", &all()).is_empty());
    }

    #[test]
    fn title_length_filter() {
        let idx = PostingsIndex::build(vec![
            article(0, "A B C D", "shared words"),
            article(1, "A B C", "shared words"),
        ])
        .unwrap();
        let params = SearchParams::new(0, 10, 3).unwrap();
        let hits = idx.search("shared", &params);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].concept, ConceptId(1));
    }

    #[test]
    fn length_filter_and_top_m() {
        let idx = PostingsIndex::build(vec![
            article(0, "Short", "term"),
            article(1, "Long", "term term padding padding"),
            article(2, "Longer", "term padding padding padding"),
        ])
        .unwrap();
        let hits = idx.search("term", &SearchParams::new(10, 10, 3).unwrap());
        let ids: Vec<u32> = hits.iter().map(|h| h.concept.0).collect();
        assert_eq!(ids, vec![1, 2]);
        let hits = idx.search("term", &SearchParams::new(0, 1, 3).unwrap());
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].concept, ConceptId(1));
    }

    #[test]
    fn identical_documents_tie_by_id() {
        let idx = PostingsIndex::build(vec![article(1, "Y", "same text"), article(0, "X", "same text")]).unwrap();
        let hits = idx.search("same", &all());
        assert_eq!(hits.len(), 2);
        assert_eq!(hits[0].concept, ConceptId(0));
        assert_eq!(hits[0].weight, hits[1].weight);
    }

    #[test]
    fn invalid_params() {
        assert!(SearchParams::new(0, 0, 1).is_err());
        assert!(SearchParams::new(0, 1, 0).is_err());
    }

    #[test]
    fn persistence_round_trip() {
        let idx = PostingsIndex::build(vec![article(0, "A", "x y"), article(1, "B", "y z z")]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("index");
        idx.save(&path, false).unwrap();
        let loaded = PostingsIndex::load(&path).unwrap();
        assert_eq!(loaded.doc_count(), 2);
        assert_eq!(loaded.search("z y", &all()), idx.search("z y", &all()));
    }
}
