//! Reference implementations used to cross-check the library.
//!
//! Everything here is written the slow, obvious way and shares no code with
//! the crate beyond its public data types.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use conceptmine::{ArticleRecord, ConceptId};
use rand::rngs::StdRng;
use rand::Rng;

// ---------------------------------------------------------------- search

fn tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            cur.extend(ch.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn counts(words: &[String]) -> BTreeMap<String, f64> {
    let mut m = BTreeMap::new();
    for w in words {
        *m.entry(w.clone()).or_insert(0.0) += 1.0;
    }
    m
}

/// Exhaustive TF-IDF cosine: builds a dense vector for every document and
/// for the query over the whole vocabulary, scores every admissible
/// document, sorts and truncates.
pub fn brute_search(
    docs: &[ArticleRecord],
    query: &str,
    min_chars: usize,
    max_concepts: usize,
    max_title_words: usize,
) -> Vec<(ConceptId, f64)> {
    let n = docs.len() as f64;
    let doc_tf: Vec<BTreeMap<String, f64>> = docs
        .iter()
        .map(|d| {
            let mut words = tokens(&d.title);
            words.extend(tokens(&d.body));
            counts(&words)
        })
        .collect();
    let vocab: BTreeSet<&String> = doc_tf.iter().flat_map(|m| m.keys()).collect();
    let idf = |t: &str| {
        let df = doc_tf.iter().filter(|m| m.contains_key(t)).count() as f64;
        (1.0 + n / (1.0 + df)).ln()
    };
    let q_tf = counts(&tokens(query));
    let q_vec: Vec<f64> = vocab.iter().map(|t| q_tf.get(*t).copied().unwrap_or(0.0) * idf(t)).collect();
    let q_norm = q_vec.iter().map(|x| x * x).sum::<f64>().sqrt();

    let mut hits = Vec::new();
    for (d, tf) in docs.iter().zip(&doc_tf) {
        if d.title.split_whitespace().count() > max_title_words || d.body_chars < min_chars {
            continue;
        }
        let d_vec: Vec<f64> = vocab.iter().map(|t| tf.get(*t).copied().unwrap_or(0.0) * idf(t)).collect();
        let d_norm = d_vec.iter().map(|x| x * x).sum::<f64>().sqrt();
        let dot: f64 = q_vec.iter().zip(&d_vec).map(|(a, b)| a * b).sum();
        if q_norm == 0.0 || d_norm == 0.0 || dot <= 0.0 {
            continue;
        }
        hits.push((d.id, dot / (q_norm * d_norm)));
    }
    hits.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    hits.truncate(max_concepts);
    hits
}

const WORDS: [&str; 24] = [
    "cat", "dog", "tiger", "bread", "milk", "bank", "money", "river", "stone", "light", "music", "note", "tree",
    "leaf", "river", "cloud", "rain", "code", "data", "graph", "node", "edge", "word", "sense",
];

pub fn random_text(rng: &mut StdRng, len: usize) -> String {
    (0..len).map(|_| WORDS[rng.gen_range(0..WORDS.len())]).collect::<Vec<_>>().join(" ")
}

/// Corpus of `n` random articles with 1-4 word titles and varied lengths.
pub fn random_corpus(rng: &mut StdRng, n: usize) -> Vec<ArticleRecord> {
    (0..n)
        .map(|i| {
            let title_len = rng.gen_range(1..=4);
            let title = format!("{} {i}", random_text(rng, title_len));
            let body_len = rng.gen_range(0..60);
            ArticleRecord::new(i as u32, &title, &random_text(rng, body_len), Vec::new())
        })
        .collect()
}

// ---------------------------------------------------------------- mining

/// `(antecedent, consequent, support, antecedent_count)` for every rule
/// with a single consequent: count each concept and each ordered pair of
/// distinct members in every transaction, then apply the thresholds.
pub fn brute_rules(
    transactions: &[Vec<u32>],
    min_support: u32,
    min_confidence: f64,
) -> BTreeSet<(u32, u32, u32, u32)> {
    let mut single: BTreeMap<u32, u32> = BTreeMap::new();
    let mut pair: BTreeMap<(u32, u32), u32> = BTreeMap::new();
    for t in transactions {
        let set: BTreeSet<u32> = t.iter().copied().collect();
        for &a in &set {
            *single.entry(a).or_insert(0) += 1;
            for &b in &set {
                if a != b {
                    *pair.entry((a, b)).or_insert(0) += 1;
                }
            }
        }
    }
    let mut out = BTreeSet::new();
    for (&(a, b), &s) in &pair {
        let count_a = single[&a];
        // confidence compared as an exact ratio: s / count_a >= υ
        if s >= min_support && (s as f64) >= min_confidence * count_a as f64 {
            out.insert((a, b, s, count_a));
        }
    }
    out
}

/// Random transactions over `concepts` ids; each has 2..=max_len members
/// drawn from a skewed distribution so supports vary.
pub fn random_transactions(rng: &mut StdRng, count: usize, concepts: u32, max_len: usize) -> Vec<Vec<u32>> {
    (0..count)
        .map(|_| {
            let len = rng.gen_range(2..=max_len);
            let mut t: Vec<u32> = (0..len)
                .map(|_| {
                    let x: f64 = rng.gen();
                    ((x * x) * concepts as f64) as u32
                })
                .collect();
            t.sort_unstable();
            t.dedup();
            if t.len() < 2 {
                t = vec![0, concepts - 1];
            }
            t
        })
        .collect()
}

// ---------------------------------------------------------------- correlation

/// Textbook Pearson: covariance over the product of standard deviations,
/// each computed from its own pass.
pub fn oracle_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / n;
    let sx = (x.iter().map(|a| (a - mx).powi(2)).sum::<f64>() / n).sqrt();
    let sy = (y.iter().map(|b| (b - my).powi(2)).sum::<f64>() / n).sqrt();
    cov / (sx * sy)
}

/// Average ranks by counting: rank = 1 + #less + (#equal - 1) / 2.
pub fn oracle_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let less = x.iter().filter(|&&o| o < v).count() as f64;
            let equal = x.iter().filter(|&&o| o == v).count() as f64;
            1.0 + less + (equal - 1.0) / 2.0
        })
        .collect()
}

pub fn oracle_spearman(x: &[f64], y: &[f64]) -> f64 {
    oracle_pearson(&oracle_ranks(x), &oracle_ranks(y))
}

/// Random vector of length `n`; with `ties`, values come from a small set.
pub fn random_vector(rng: &mut StdRng, n: usize, ties: bool) -> Vec<f64> {
    (0..n)
        .map(|_| {
            if ties {
                rng.gen_range(0..5) as f64
            } else {
                rng.gen_range(-100.0..100.0)
            }
        })
        .collect()
}

// ---------------------------------------------------------------- significance

/// Fisher z from the log form, ½ ln((1 + r) / (1 - r)).
pub fn oracle_fisher_z(r: f64) -> f64 {
    0.5 * ((1.0 + r) / (1.0 - r)).ln()
}

/// Steiger's overlapping-correlation Z, stepped through term by term.
pub fn oracle_steiger_z(r12: f64, r13: f64, r23: f64, n: usize) -> f64 {
    let rm = 0.5 * (r12 + r13);
    let rm_sq = rm.powi(2);
    let first = r23 * (1.0 - 2.0 * rm_sq);
    let second = 0.5 * rm_sq * (1.0 - 2.0 * rm_sq - r23.powi(2));
    let psi = first - second;
    let s = psi / (1.0 - rm_sq).powi(2);
    let scale = ((n as f64 - 3.0) / (2.0 - 2.0 * s)).sqrt();
    (oracle_fisher_z(r12) - oracle_fisher_z(r13)) * scale
}

/// Upper normal tail from a Simpson integral of the density on [z, z + 12].
pub fn oracle_upper_tail(z: f64) -> f64 {
    let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let steps = 20_000;
    let h = 12.0 / steps as f64;
    let mut acc = pdf(z) + pdf(z + 12.0);
    for i in 1..steps {
        let x = z + i as f64 * h;
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * pdf(x);
    }
    acc * h / 3.0
}

// ---------------------------------------------------------------- toy corpus

pub fn toy_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/toy")
}
