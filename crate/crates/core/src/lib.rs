//! Bag-of-concepts semantic relatedness with concept expansion mined from
//! an encyclopedia's "See also" link graph.
//!
//! The pipeline has two offline artifacts and one online path:
//!
//! 1. [`corpus`] turns an encyclopedic corpus into [`ArticleRecord`]s.
//! 2. [`index`] builds a TF-IDF inverted index over those articles.
//! 3. [`miner`] turns "See also" sections into transactions and mines
//!    single-antecedent association rules from them.
//! 4. [`conceptspace`] maps text to a [`ConceptVector`]: explicit concepts
//!    from search, plus latent concepts implied by the mined rules.
//! 5. [`relatedness`] compares two concept vectors with cosine similarity
//!    and a normalization threshold.
//!
//! [`evalbench`] and [`significance`] evaluate scores against word-pair
//! benchmarks and compare two methods with Steiger's Z test.
//!
//! ```
//! use conceptmine::prelude::*;
//!
//! let articles = vec![
//!     ArticleRecord::new(0, "Cat", "The cat is a small domesticated feline.", vec!["Dog".into()]),
//!     ArticleRecord::new(1, "Dog", "The dog is a domesticated canine.", vec!["Cat".into()]),
//! ];
//! let index = PostingsIndex::build(articles.iter().cloned()).unwrap();
//! let resolver = TitleResolver::from_articles(&articles);
//! let (transactions, _skipped) = build_transactions(&articles, |t| resolver.resolve(t));
//! let rules = RuleStore::mine(&transactions, MiningParams::default()).unwrap();
//!
//! let pipeline = Pipeline::new(index, rules, PipelineParams::permissive());
//! let rel = pipeline.relate("feline", "canine").unwrap();
//! // "feline" only matches Cat, "canine" only matches Dog, but Cat => Dog
//! // and Dog => Cat bring each side's latent concept into the other.
//! assert!(rel.score > 0.0);
//! ```

pub mod artifact;
pub mod conceptspace;
pub mod corpus;
pub mod evalbench;
pub mod index;
pub mod miner;
pub mod relatedness;
pub mod significance;

mod concept;

pub use concept::ConceptId;
pub use conceptspace::{ConceptKind, ConceptVector, Pipeline, PipelineParams};
pub use corpus::{ArticleRecord, CorpusStats};
pub use index::{PostingsIndex, SearchParams, WeightedConcept};
pub use miner::{AssociationRule, MiningParams, RuleStore, Transaction};

pub mod prelude {
    pub use crate::conceptspace::{
        build_concept_vector, expand, ConceptKind, ConceptVector, Pipeline, PipelineParams,
    };
    pub use crate::corpus::{extract_see_also, ingest, ArticleRecord, CorpusFormat, CorpusStats};
    pub use crate::evalbench::{evaluate, pearson, spearman, WordPairDataset};
    pub use crate::index::{tokenize, PostingsIndex, SearchParams, WeightedConcept};
    pub use crate::miner::{build_transactions, MiningParams, RuleStore, TitleResolver, Transaction};
    pub use crate::relatedness::{cosine, normalize, RelatednessParams};
    pub use crate::significance::{compare_methods, fisher_z, steiger_z, Tails};
    pub use crate::ConceptId;
}
