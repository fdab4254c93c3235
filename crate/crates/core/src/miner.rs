//! Transactions from "See also" sections and concept association rules.
//!
//! Every article with at least one resolvable "See also" entry yields a
//! transaction: the article's own concept plus the resolved targets. Rules
//! have a single antecedent concept and a consequent of `consequent_size`
//! concepts:
//!
//! - support `s` is the number of transactions containing the antecedent
//!   and the whole consequent;
//! - confidence `f` is `s` divided by the number of transactions containing
//!   the antecedent.
//!
//! Rules are directional: `a => b` and `b => a` share support but not
//! confidence.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::artifact::{self, ArtifactError};
use crate::corpus::ArticleRecord;
use crate::ConceptId;

pub const RULES_KIND: &str = "rule-store";
pub const RULES_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum MinerError {
    #[error("invalid mining parameters: {0}")]
    InvalidParams(String),
    #[error(
        "lookup threshold {name}={requested} is below the build-time threshold {built}; \
         rebuild the rule store with a lower threshold"
    )]
    LoosenedThreshold {
        name: &'static str,
        requested: f64,
        built: f64,
    },
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
}

/// A set of concepts that appeared together in one article's
/// "See also" context. Members are sorted and unique.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Transaction {
    members: Vec<ConceptId>,
}

impl Transaction {
    /// Collapses duplicates. Returns `None` for fewer than two members.
    pub fn new<I: IntoIterator<Item = ConceptId>>(members: I) -> Option<Self> {
        let mut members: Vec<ConceptId> = members.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        (members.len() >= 2).then_some(Transaction { members })
    }

    pub fn members(&self) -> &[ConceptId] {
        &self.members
    }

    pub fn contains(&self, c: ConceptId) -> bool {
        self.members.binary_search(&c).is_ok()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Exact (whitespace-trimmed) title to concept id lookup.
#[derive(Debug, Clone, Default)]
pub struct TitleResolver {
    by_title: HashMap<String, ConceptId>,
}

impl TitleResolver {
    pub fn from_articles<'a, I>(articles: I) -> Self
    where
        I: IntoIterator<Item = &'a ArticleRecord>,
    {
        TitleResolver {
            by_title: articles
                .into_iter()
                .map(|a| (a.title.trim().to_string(), a.id))
                .collect(),
        }
    }

    pub fn resolve(&self, title: &str) -> Option<ConceptId> {
        self.by_title.get(title.trim()).copied()
    }

    pub fn len(&self) -> usize {
        self.by_title.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_title.is_empty()
    }
}

/// One transaction per article whose "See also" list resolves to at least
/// one other concept. Returns the transactions and the number of
/// unresolvable titles.
pub fn build_transactions<'a, I, F>(articles: I, resolve: F) -> (Vec<Transaction>, usize)
where
    I: IntoIterator<Item = &'a ArticleRecord>,
    F: Fn(&str) -> Option<ConceptId>,
{
    let mut transactions = Vec::new();
    let mut skipped = 0;
    for article in articles {
        if article.see_also.is_empty() {
            continue;
        }
        let mut members = vec![article.id];
        for title in &article.see_also {
            match resolve(title) {
                Some(id) => members.push(id),
                None => skipped += 1,
            }
        }
        if let Some(t) = Transaction::new(members) {
            transactions.push(t);
        }
    }
    (transactions, skipped)
}

/// Consequent size `|Y|`, minimum support `ε` and minimum confidence `υ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiningParams {
    pub consequent_size: usize,
    pub min_support: u32,
    pub min_confidence: f64,
}

impl Default for MiningParams {
    fn default() -> Self {
        MiningParams {
            consequent_size: 1,
            min_support: 1,
            min_confidence: 0.0,
        }
    }
}

impl MiningParams {
    pub fn validate(&self) -> Result<(), MinerError> {
        if self.consequent_size == 0 {
            return Err(MinerError::InvalidParams("consequent_size must be >= 1".into()));
        }
        if self.min_support == 0 {
            return Err(MinerError::InvalidParams("min_support must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.min_confidence) {
            return Err(MinerError::InvalidParams(format!(
                "min_confidence must be in [0, 1], got {}",
                self.min_confidence
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssociationRule {
    pub antecedent: ConceptId,
    pub consequent: Vec<ConceptId>,
    pub support: u32,
    /// Number of transactions containing the antecedent.
    pub antecedent_count: u32,
}

impl AssociationRule {
    pub fn confidence(&self) -> f64 {
        self.support as f64 / self.antecedent_count as f64
    }
}

/// Consequent entry in a rule store adjacency list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleEntry {
    pub consequent: Vec<ConceptId>,
    pub support: u32,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Adjacency {
    antecedent: ConceptId,
    antecedent_count: u32,
    /// Descending support (hence confidence), then ascending consequent.
    rules: Vec<RuleEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RulesManifest {
    pub params: MiningParams,
    pub transaction_count: usize,
    pub rule_count: usize,
}

/// Immutable rule store: antecedent -> consequents with `(s, f)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleStore {
    params: MiningParams,
    transaction_count: usize,
    adjacency: Vec<Adjacency>,
}

impl RuleStore {
    /// Mines every rule with one antecedent, `params.consequent_size`
    /// consequents, `s >= ε` and `f >= υ`. Antecedents are processed in
    /// parallel; the output does not depend on thread count or on the
    /// order of transactions and their members.
    pub fn mine(transactions: &[Transaction], params: MiningParams) -> Result<Self, MinerError> {
        params.validate()?;
        let mut occurrences: BTreeMap<ConceptId, Vec<usize>> = BTreeMap::new();
        for (i, t) in transactions.iter().enumerate() {
            for &c in t.members() {
                occurrences.entry(c).or_default().push(i);
            }
        }

        let k = params.consequent_size;
        let adjacency: Vec<Adjacency> = occurrences
            .into_par_iter()
            .filter_map(|(antecedent, tx_ids)| {
                let antecedent_count = tx_ids.len() as u32;
                let mut counts: HashMap<Vec<ConceptId>, u32> = HashMap::new();
                let mut others = Vec::new();
                for &ti in &tx_ids {
                    others.clear();
                    others.extend(transactions[ti].members().iter().copied().filter(|&c| c != antecedent));
                    for_each_combination(&others, k, |combo| {
                        *counts.entry(combo.to_vec()).or_insert(0) += 1;
                    });
                }
                let mut rules: Vec<RuleEntry> = counts
                    .into_iter()
                    .filter_map(|(consequent, support)| {
                        let confidence = support as f64 / antecedent_count as f64;
                        (support >= params.min_support && confidence >= params.min_confidence).then_some(
                            RuleEntry {
                                consequent,
                                support,
                                confidence,
                            },
                        )
                    })
                    .collect();
                if rules.is_empty() {
                    return None;
                }
                rules.sort_by(|a, b| b.support.cmp(&a.support).then_with(|| a.consequent.cmp(&b.consequent)));
                Some(Adjacency {
                    antecedent,
                    antecedent_count,
                    rules,
                })
            })
            .collect();

        Ok(RuleStore {
            params,
            transaction_count: transactions.len(),
            adjacency,
        })
    }

    /// Thresholds the store was built with.
    pub fn params(&self) -> &MiningParams {
        &self.params
    }

    pub fn transaction_count(&self) -> usize {
        self.transaction_count
    }

    pub fn rule_count(&self) -> usize {
        self.adjacency.iter().map(|a| a.rules.len()).sum()
    }

    pub fn max_support(&self) -> u32 {
        self.adjacency
            .iter()
            .filter_map(|a| a.rules.first().map(|r| r.support))
            .max()
            .unwrap_or(0)
    }

    fn entry(&self, antecedent: ConceptId) -> Option<&Adjacency> {
        self.adjacency
            .binary_search_by_key(&antecedent, |a| a.antecedent)
            .ok()
            .map(|i| &self.adjacency[i])
    }

    /// Number of transactions containing `c`, if `c` has any rule.
    pub fn antecedent_count(&self, c: ConceptId) -> Option<u32> {
        self.entry(c).map(|a| a.antecedent_count)
    }

    /// All stored rules, ordered by antecedent then lookup order.
    pub fn rules(&self) -> impl Iterator<Item = AssociationRule> + '_ {
        self.adjacency.iter().flat_map(|a| {
            a.rules.iter().map(move |r| AssociationRule {
                antecedent: a.antecedent,
                consequent: r.consequent.clone(),
                support: r.support,
                antecedent_count: a.antecedent_count,
            })
        })
    }

    /// Consequents of `c` with `s >= min_support` and `f >= min_confidence`,
    /// ordered by descending `f`, descending `s`, ascending consequent.
    ///
    /// Thresholds below the ones the store was mined with are rejected:
    /// rules under them were never kept.
    pub fn lookup_consequents(
        &self,
        c: ConceptId,
        min_support: u32,
        min_confidence: f64,
    ) -> Result<&[RuleEntry], MinerError> {
        self.check_thresholds(min_support, min_confidence)?;
        let Some(entry) = self.entry(c) else {
            return Ok(&[]);
        };
        // Sorted by descending support; with a fixed antecedent, confidence
        // falls with support, so both filters cut a prefix.
        let n = entry
            .rules
            .iter()
            .take_while(|r| r.support >= min_support && r.confidence >= min_confidence)
            .count();
        Ok(&entry.rules[..n])
    }

    pub fn check_thresholds(&self, min_support: u32, min_confidence: f64) -> Result<(), MinerError> {
        if min_support < self.params.min_support {
            return Err(MinerError::LoosenedThreshold {
                name: "min_support",
                requested: min_support as f64,
                built: self.params.min_support as f64,
            });
        }
        if min_confidence < self.params.min_confidence {
            return Err(MinerError::LoosenedThreshold {
                name: "min_confidence",
                requested: min_confidence,
                built: self.params.min_confidence,
            });
        }
        Ok(())
    }

    pub fn save(&self, dir: &Path, force: bool) -> Result<(), MinerError> {
        let manifest = RulesManifest {
            params: self.params,
            transaction_count: self.transaction_count,
            rule_count: self.rule_count(),
        };
        artifact::write(dir, RULES_KIND, RULES_FORMAT_VERSION, &manifest, self, force)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, MinerError> {
        let (_, store): (artifact::Manifest<RulesManifest>, RuleStore) =
            artifact::read(dir, RULES_KIND, RULES_FORMAT_VERSION)?;
        Ok(store)
    }
}

/// Calls `f` with every `k`-combination of `items` in lexicographic order
/// of positions.
fn for_each_combination<T: Copy>(items: &[T], k: usize, mut f: impl FnMut(&[T])) {
    let n = items.len();
    if k == 0 || k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    let mut buf: Vec<T> = idx.iter().map(|&i| items[i]).collect();
    loop {
        f(&buf);
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + (i - 1) {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
        for j in i - 1..k {
            buf[j] = items[idx[j]];
        }
    }
}
