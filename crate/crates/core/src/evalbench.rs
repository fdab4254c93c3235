//! Word-pair benchmarks: loading, correlation, evaluation and grid search.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conceptspace::{Pipeline, PipelineError, PipelineParams};
use crate::index::SearchParams;
use crate::relatedness::RelatednessParams;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorrelationError {
    #[error("length mismatch: {0} vs {1} values")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 values, got {0}")]
    TooShort(usize),
    #[error("{0} list has zero variance")]
    ZeroVariance(Side),
    #[error("{0} list contains a non-finite value")]
    NonFinite(Side),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    First,
    Second,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::First => "first",
            Side::Second => "second",
        })
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}, row {row}: {message}")]
    Parse { path: PathBuf, row: usize, message: String },
    #[error("invalid dataset {name}: {message}")]
    InvalidDataset { name: String, message: String },
    #[error("dataset manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("correlation on dataset {dataset} is undefined: {source}")]
    Correlation {
        dataset: String,
        #[source]
        source: CorrelationError,
    },
    #[error("parameter grid: {0}")]
    Grid(String),
    #[error("no grid combination produced a correlation")]
    NoValidCombination,
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    Tsv,
    Csv,
}

impl FromStr for DatasetFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tsv" => Ok(DatasetFormat::Tsv),
            "csv" => Ok(DatasetFormat::Csv),
            other => Err(format!("unknown dataset format {other:?} (expected tsv or csv)")),
        }
    }
}

impl DatasetFormat {
    /// `.csv` files are CSV, anything else TSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => DatasetFormat::Csv,
            _ => DatasetFormat::Tsv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordPair {
    pub word1: String,
    pub word2: String,
    pub gold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordPairDataset {
    pub name: String,
    pub pairs: Vec<WordPair>,
    pub scale: (f64, f64),
}

impl WordPairDataset {
    /// Checks: non-empty, gold within scale, no repeated ordered pair.
    pub fn new(name: &str, pairs: Vec<WordPair>, scale: (f64, f64)) -> Result<Self, EvalError> {
        let invalid = |message: String| EvalError::InvalidDataset {
            name: name.to_string(),
            message,
        };
        if pairs.is_empty() {
            return Err(invalid("no word pairs".into()));
        }
        if scale.0.is_nan() || scale.1.is_nan() || scale.0 >= scale.1 {
            return Err(invalid(format!("scale ({}, {}) is empty", scale.0, scale.1)));
        }
        let mut seen = std::collections::HashSet::new();
        for p in &pairs {
            if !(scale.0..=scale.1).contains(&p.gold) {
                return Err(invalid(format!(
                    "gold score {} of ({}, {}) is outside scale ({}, {})",
                    p.gold, p.word1, p.word2, scale.0, scale.1
                )));
            }
            if !seen.insert((p.word1.as_str(), p.word2.as_str())) {
                return Err(invalid(format!("pair ({}, {}) appears twice", p.word1, p.word2)));
            }
        }
        Ok(WordPairDataset {
            name: name.to_string(),
            pairs,
            scale,
        })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn gold(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.gold).collect()
    }
}

/// Published size and rating scale of the standard relatedness benchmarks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkInfo {
    pub name: &'static str,
    pub pairs: usize,
    pub scale: (f64, f64),
}

pub const KNOWN_BENCHMARKS: [BenchmarkInfo; 6] = [
    BenchmarkInfo { name: "MC", pairs: 30, scale: (0.0, 4.0) },
    BenchmarkInfo { name: "RG", pairs: 65, scale: (0.0, 4.0) },
    BenchmarkInfo { name: "WS", pairs: 353, scale: (0.0, 10.0) },
    BenchmarkInfo { name: "WSS", pairs: 203, scale: (0.0, 10.0) },
    BenchmarkInfo { name: "WSR", pairs: 252, scale: (0.0, 10.0) },
    BenchmarkInfo { name: "MEN", pairs: 1000, scale: (0.0, 50.0) },
];

pub fn known_benchmark(name: &str) -> Option<&'static BenchmarkInfo> {
    KNOWN_BENCHMARKS.iter().find(|b| b.name.eq_ignore_ascii_case(name))
}

/// Loads word pairs from a TSV or CSV file.
///
/// Blank lines and lines starting with `#` are skipped. The first data row
/// is treated as a header when its score column is not numeric. TSV rows
/// are split on tabs, or on runs of whitespace if a row has no tab. Only the
/// first three columns are read. Without an explicit `scale`, a known
/// benchmark's scale is used (matched by `name`), else the observed range.
pub fn load_dataset(
    path: &Path,
    format: DatasetFormat,
    name: &str,
    scale: Option<(f64, f64)>,
) -> Result<WordPairDataset, EvalError> {
    let text = fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let parse_err = |row: usize, message: String| EvalError::Parse {
        path: path.to_path_buf(),
        row,
        message,
    };

    let mut pairs = Vec::new();
    let mut first_data_row = true;
    for (i, line) in text.lines().enumerate() {
        let row = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<String> = match format {
            DatasetFormat::Tsv if line.contains('\t') => line.split('\t').map(|f| f.trim().to_string()).collect(),
            DatasetFormat::Tsv => trimmed.split_whitespace().map(str::to_string).collect(),
            DatasetFormat::Csv => {
                let mut reader = csv::ReaderBuilder::new()
                    .has_headers(false)
                    .flexible(true)
                    .from_reader(line.as_bytes());
                match reader.records().next() {
                    Some(Ok(rec)) => rec.iter().map(|f| f.trim().to_string()).collect(),
                    Some(Err(e)) => return Err(parse_err(row, e.to_string())),
                    None => continue,
                }
            }
        };
        let was_first = std::mem::replace(&mut first_data_row, false);
        if fields.len() < 3 {
            return Err(parse_err(row, format!("expected word1, word2, score; found {} column(s)", fields.len())));
        }
        let gold = match fields[2].parse::<f64>() {
            Ok(g) if g.is_finite() => g,
            _ if was_first => continue,
            _ => return Err(parse_err(row, format!("score {:?} is not a number", fields[2]))),
        };
        if fields[0].is_empty() || fields[1].is_empty() {
            return Err(parse_err(row, "empty word".into()));
        }
        pairs.push(WordPair {
            word1: fields[0].clone(),
            word2: fields[1].clone(),
            gold,
        });
    }

    let scale = match scale.or_else(|| known_benchmark(name).map(|b| b.scale)) {
        Some(s) => s,
        None => {
            let lo = pairs.iter().map(|p| p.gold).fold(f64::INFINITY, f64::min);
            let hi = pairs.iter().map(|p| p.gold).fold(f64::NEG_INFINITY, f64::max);
            (lo, if hi > lo { hi } else { lo + 1.0 })
        }
    };
    let dataset = WordPairDataset::new(name, pairs, scale)?;
    if let Some(known) = known_benchmark(name) {
        if known.pairs != dataset.len() {
            log::warn!(
                "dataset {} has {} pairs; the published benchmark has {}",
                name,
                dataset.len(),
                known.pairs
            );
        }
    }
    Ok(dataset)
}

/// One entry of a dataset manifest (TOML `[[dataset]]` table).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub name: String,
    pub path: PathBuf,
    #[serde(default)]
    pub format: Option<DatasetFormat>,
    #[serde(default)]
    pub scale: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    #[serde(default, rename = "dataset")]
    pub datasets: Vec<DatasetEntry>,
    #[serde(skip)]
    base_dir: PathBuf,
}

impl DatasetManifest {
    /// Reads a manifest; relative dataset paths resolve against its folder.
    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let text = fs::read_to_string(path).map_err(|source| EvalError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut manifest: DatasetManifest = toml::from_str(&text).map_err(|e| EvalError::Manifest {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        manifest.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(manifest)
    }

    pub fn get(&self, name: &str) -> Option<&DatasetEntry> {
        self.datasets.iter().find(|d| d.name == name)
    }

    pub fn resolve(&self, entry: &DatasetEntry) -> PathBuf {
        self.base_dir.join(&entry.path)
    }

    pub fn load_dataset(&self, name: &str) -> Result<WordPairDataset, EvalError> {
        let entry = self.get(name).ok_or_else(|| EvalError::Manifest {
            path: self.base_dir.clone(),
            message: format!("no dataset named {name:?}"),
        })?;
        let path = self.resolve(entry);
        let format = entry.format.unwrap_or_else(|| DatasetFormat::from_path(&path));
        load_dataset(&path, format, &entry.name, entry.scale)
    }
}

// ---------------------------------------------------------------------------
// Correlation
// ---------------------------------------------------------------------------

fn check_pair(xs: &[f64], ys: &[f64]) -> Result<(), CorrelationError> {
    if xs.len() != ys.len() {
        return Err(CorrelationError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(CorrelationError::TooShort(xs.len()));
    }
    if !xs.iter().all(|x| x.is_finite()) {
        return Err(CorrelationError::NonFinite(Side::First));
    }
    if !ys.iter().all(|y| y.is_finite()) {
        return Err(CorrelationError::NonFinite(Side::Second));
    }
    Ok(())
}

/// Sample Pearson product-moment correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, CorrelationError> {
    check_pair(xs, ys)?;
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(CorrelationError::ZeroVariance(Side::First));
    }
    if syy == 0.0 {
        return Err(CorrelationError::ZeroVariance(Side::Second));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn fractional_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1 ..= end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation: Pearson over fractional ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, CorrelationError> {
    check_pair(xs, ys)?;
    pearson(&fractional_ranks(xs), &fractional_ranks(ys))
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairResult {
    pub word1: String,
    pub word2: String,
    pub gold: f64,
    pub predicted: f64,
    pub oov: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub name: String,
    pub n: usize,
    pub oov_pairs: usize,
    pub pearson: f64,
    pub spearman: f64,
    pub per_pair: Vec<PairResult>,
}

impl CorrelationReport {
    pub fn predicted(&self) -> Vec<f64> {
        self.per_pair.iter().map(|p| p.predicted).collect()
    }

    pub fn gold(&self) -> Vec<f64> {
        self.per_pair.iter().map(|p| p.gold).collect()
    }
}

/// Scores every pair with `scorer` and correlates against gold. `None`
/// marks an out-of-vocabulary pair: it is kept, scored 0 and counted.
pub fn evaluate<F>(dataset: &WordPairDataset, scorer: F) -> Result<CorrelationReport, EvalError>
where
    F: Fn(&str, &str) -> Option<f64> + Sync,
{
    let per_pair: Vec<PairResult> = dataset
        .pairs
        .par_iter()
        .map(|p| {
            let scored = scorer(&p.word1, &p.word2);
            PairResult {
                word1: p.word1.clone(),
                word2: p.word2.clone(),
                gold: p.gold,
                predicted: scored.unwrap_or(0.0),
                oov: scored.is_none(),
            }
        })
        .collect();
    report_from_pairs(&dataset.name, per_pair)
}

pub fn report_from_pairs(name: &str, per_pair: Vec<PairResult>) -> Result<CorrelationReport, EvalError> {
    let gold: Vec<f64> = per_pair.iter().map(|p| p.gold).collect();
    let predicted: Vec<f64> = per_pair.iter().map(|p| p.predicted).collect();
    let wrap = |source| EvalError::Correlation {
        dataset: name.to_string(),
        source,
    };
    Ok(CorrelationReport {
        name: name.to_string(),
        n: per_pair.len(),
        oov_pairs: per_pair.iter().filter(|p| p.oov).count(),
        pearson: pearson(&predicted, &gold).map_err(wrap)?,
        spearman: spearman(&predicted, &gold).map_err(wrap)?,
        per_pair,
    })
}

/// Scores a dataset with the pipeline under `params`. A pair is OOV when
/// either word maps to an empty concept vector.
pub fn evaluate_pipeline(
    dataset: &WordPairDataset,
    pipeline: &Pipeline,
    params: &PipelineParams,
) -> Result<CorrelationReport, EvalError> {
    params.validate()?;
    // threshold errors are per-params, not per-pair: surface them once
    pipeline.rules.check_thresholds(params.min_support, params.min_confidence).map_err(PipelineError::from)?;
    evaluate(dataset, |w1, w2| {
        let rel = pipeline.relate_with(w1, w2, params).ok()?;
        rel.fully_covered().then_some(rel.score)
    })
}

/// Name, n, OOV count, r and rho as an aligned text table.
pub fn format_table(reports: &[CorrelationReport]) -> String {
    let width = reports.iter().map(|r| r.name.len()).max().unwrap_or(0).max("dataset".len());
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  {:>6}  {:>6}  {:>8}  {:>8}", "dataset", "n", "oov", "r", "rho");
    for r in reports {
        let _ = writeln!(
            out,
            "{:<width$}  {:>6}  {:>6}  {:>8.4}  {:>8.4}",
            r.name, r.n, r.oov_pairs, r.pearson, r.spearman
        );
    }
    out
}

// ---------------------------------------------------------------------------
// Grid search
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Pearson,
    Spearman,
}

impl FromStr for Objective {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pearson" | "r" => Ok(Objective::Pearson),
            "spearman" | "rho" => Ok(Objective::Spearman),
            other => Err(format!("unknown objective {other:?} (expected pearson or spearman)")),
        }
    }
}

/// Candidate values for every tunable. Iteration order is the Cartesian
/// product with `min_article_chars` outermost and `lambda` innermost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    pub min_article_chars: Vec<usize>,
    pub max_concepts: Vec<usize>,
    pub search_max_title_words: Vec<usize>,
    pub expansion_max_title_words: Vec<usize>,
    pub min_support: Vec<u32>,
    pub min_confidence: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl Default for ParamGrid {
    /// Ranges around the usual full-corpus settings; not tuned values.
    fn default() -> Self {
        ParamGrid {
            min_article_chars: vec![1000, 2000, 5000, 10000],
            max_concepts: vec![200, 500, 800, 1000],
            search_max_title_words: vec![1, 2, 3],
            expansion_max_title_words: vec![2, 3, 4],
            min_support: vec![1, 2, 3],
            min_confidence: vec![0.0],
            lambda: vec![0.1, 0.25, 0.5, 1.0],
        }
    }
}

impl ParamGrid {
    /// A grid holding exactly `params`.
    pub fn single(params: &PipelineParams) -> Self {
        ParamGrid {
            min_article_chars: vec![params.search.min_article_chars],
            max_concepts: vec![params.search.max_concepts],
            search_max_title_words: vec![params.search.max_title_words],
            expansion_max_title_words: vec![params.expansion_max_title_words],
            min_support: vec![params.min_support],
            min_confidence: vec![params.min_confidence],
            lambda: vec![params.relatedness.lambda],
        }
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let text = fs::read_to_string(path).map_err(|source| EvalError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let grid: ParamGrid = toml::from_str(&text).map_err(|e| EvalError::Grid(format!("{}: {e}", path.display())))?;
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let lists = [
            ("min_article_chars", self.min_article_chars.len()),
            ("max_concepts", self.max_concepts.len()),
            ("search_max_title_words", self.search_max_title_words.len()),
            ("expansion_max_title_words", self.expansion_max_title_words.len()),
            ("min_support", self.min_support.len()),
            ("min_confidence", self.min_confidence.len()),
            ("lambda", self.lambda.len()),
        ];
        for (name, len) in lists {
            if len == 0 {
                return Err(EvalError::Grid(format!("candidate list {name} is empty")));
            }
        }
        Ok(())
    }

    pub fn size(&self) -> usize {
        self.min_article_chars.len()
            * self.max_concepts.len()
            * self.search_max_title_words.len()
            * self.expansion_max_title_words.len()
            * self.min_support.len()
            * self.min_confidence.len()
            * self.lambda.len()
    }

    pub fn combinations(&self) -> Vec<PipelineParams> {
        let mut out = Vec::with_capacity(self.size());
        for &l in &self.min_article_chars {
            for &m in &self.max_concepts {
                for &ts in &self.search_max_title_words {
                    for &tp in &self.expansion_max_title_words {
                        for &eps in &self.min_support {
                            for &ups in &self.min_confidence {
                                for &lambda in &self.lambda {
                                    out.push(PipelineParams {
                                        search: SearchParams {
                                            min_article_chars: l,
                                            max_concepts: m,
                                            max_title_words: ts,
                                        },
                                        expansion_max_title_words: tp,
                                        min_support: eps,
                                        min_confidence: ups,
                                        relatedness: RelatednessParams { lambda },
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub params: PipelineParams,
    pub pearson: Option<f64>,
    pub spearman: Option<f64>,
    pub oov_pairs: Option<usize>,
    pub error: Option<String>,
}

impl TraceRow {
    pub fn objective(&self, objective: Objective) -> Option<f64> {
        match objective {
            Objective::Pearson => self.pearson,
            Objective::Spearman => self.spearman,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOutcome {
    pub dataset: String,
    pub objective: Objective,
    pub best_index: usize,
    pub best: TraceRow,
    pub trace: Vec<TraceRow>,
}

impl GridOutcome {
    pub fn best_score(&self) -> f64 {
        self.best.objective(self.objective).expect("best row always has a score")
    }

    /// CSV with one row per combination, in iteration order.
    pub fn write_trace_csv<W: io::Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "L",
            "M",
            "tau_s",
            "tau_p",
            "min_support",
            "min_confidence",
            "lambda",
            "pearson",
            "spearman",
            "oov_pairs",
            "error",
        ])?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        for row in &self.trace {
            let p = &row.params;
            w.write_record([
                p.search.min_article_chars.to_string(),
                p.search.max_concepts.to_string(),
                p.search.max_title_words.to_string(),
                p.expansion_max_title_words.to_string(),
                p.min_support.to_string(),
                format!("{}", p.min_confidence),
                format!("{}", p.relatedness.lambda),
                opt(row.pearson),
                opt(row.spearman),
                row.oov_pairs.map(|n| n.to_string()).unwrap_or_default(),
                row.error.clone().unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Evaluates every combination of `grid` with `eval` and keeps the best by
/// `objective`; ties go to the earliest combination. Failing combinations
/// are recorded in the trace with their error.
pub fn grid_search<F>(
    dataset_name: &str,
    grid: &ParamGrid,
    objective: Objective,
    eval: F,
) -> Result<GridOutcome, EvalError>
where
    F: Fn(&PipelineParams) -> Result<CorrelationReport, EvalError> + Sync,
{
    grid.validate()?;
    let trace: Vec<TraceRow> = grid
        .combinations()
        .into_par_iter()
        .map(|params| match eval(&params) {
            Ok(report) => TraceRow {
                params,
                pearson: Some(report.pearson),
                spearman: Some(report.spearman),
                oov_pairs: Some(report.oov_pairs),
                error: None,
            },
            Err(e) => TraceRow {
                params,
                pearson: None,
                spearman: None,
                oov_pairs: None,
                error: Some(e.to_string()),
            },
        })
        .collect();

    let mut best: Option<(usize, f64)> = None;
    for (i, row) in trace.iter().enumerate() {
        if let Some(score) = row.objective(objective) {
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((i, score));
            }
        }
    }
    let (best_index, _) = best.ok_or(EvalError::NoValidCombination)?;
    Ok(GridOutcome {
        dataset: dataset_name.to_string(),
        objective,
        best_index,
        best: trace[best_index].clone(),
        trace,
    })
}

/// [`grid_search`] over a loaded pipeline.
pub fn grid_search_pipeline(
    dataset: &WordPairDataset,
    grid: &ParamGrid,
    objective: Objective,
    pipeline: &Pipeline,
) -> Result<GridOutcome, EvalError> {
    grid_search(&dataset.name, grid, objective, |params| {
        evaluate_pipeline(dataset, pipeline, params)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(contents: &str, suffix: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(suffix).tempfile().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    fn dataset(rows: &[(&str, &str, f64)]) -> WordPairDataset {
        let pairs = rows
            .iter()
            .map(|&(a, b, g)| WordPair {
                word1: a.into(),
                word2: b.into(),
                gold: g,
            })
            .collect();
        WordPairDataset::new("t", pairs, (0.0, 10.0)).unwrap()
    }

    #[test]
    fn pearson_basics() {
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap(), 1.0);
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
        assert!(matches!(
            pearson(&[1.0, 1.0], &[1.0, 2.0]),
            Err(CorrelationError::ZeroVariance(Side::First))
        ));
        assert!(matches!(pearson(&[1.0], &[1.0]), Err(CorrelationError::TooShort(1))));
        assert!(matches!(pearson(&[1.0, 2.0], &[1.0]), Err(CorrelationError::LengthMismatch(2, 1))));
    }

    #[test]
    fn spearman_basics() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[1.0, 4.0, 9.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((spearman(&[1.0, 2.0, 3.0], &[9.0, 4.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        assert!(matches!(
            spearman(&[1.0, 2.0], &[3.0, 3.0]),
            Err(CorrelationError::ZeroVariance(Side::Second))
        ));
    }

    #[test]
    fn ranks_with_ties() {
        assert_eq!(fractional_ranks(&[1.0, 2.0, 2.0, 3.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(fractional_ranks(&[5.0, 5.0, 5.0]), vec![2.0, 2.0, 2.0]);
        assert_eq!(fractional_ranks(&[3.0, 1.0, 2.0]), vec![3.0, 1.0, 2.0]);
    }

    #[test]
    fn load_tsv_with_header_and_comments() {
        let f = file("# comment\nWord 1\tWord 2\tHuman (mean)\ntiger\tcat\t7.35\n\nbook\tlibrary\t7.46\n", ".tsv");
        let d = load_dataset(f.path(), DatasetFormat::Tsv, "WS", None).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.scale, (0.0, 10.0));
        assert_eq!(d.pairs[0].word1, "tiger");
    }

    #[test]
    fn load_whitespace_and_csv() {
        let f = file("sun-n sunlight-n 50.000000\nautomobile-n car-n 50.000000\ncat dog 20\n", ".txt");
        let d = load_dataset(f.path(), DatasetFormat::Tsv, "MEN", None).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.scale, (0.0, 50.0));

        let f = file("Word 1,Word 2,Human (mean)\nlove,sex,6.77\n\"New York\",city,8\n", ".csv");
        let d = load_dataset(f.path(), DatasetFormat::Csv, "custom", None).unwrap();
        assert_eq!(d.pairs[1].word1, "New York");
        assert_eq!(d.scale, (6.77, 8.0));
    }

    #[test]
    fn malformed_row_reports_row_number() {
        let f = file("a\tb\t1\nc\td\tx\n", ".tsv");
        let err = load_dataset(f.path(), DatasetFormat::Tsv, "t", None).unwrap_err();
        assert!(matches!(err, EvalError::Parse { row: 2, .. }), "{err}");
        let f = file("a\tb\t1\nc\td\n", ".tsv");
        let err = load_dataset(f.path(), DatasetFormat::Tsv, "t", None).unwrap_err();
        assert!(matches!(err, EvalError::Parse { row: 2, .. }), "{err}");
    }

    #[test]
    fn dataset_invariants() {
        let f = file("a\tb\t5\n", ".tsv");
        assert!(load_dataset(f.path(), DatasetFormat::Tsv, "RG", None).is_err());
        let f = file("a\tb\t1\na\tb\t2\n", ".tsv");
        assert!(load_dataset(f.path(), DatasetFormat::Tsv, "t", None).is_err());
        let f = file("a\tb\t1\nb\ta\t2\n", ".tsv");
        assert!(load_dataset(f.path(), DatasetFormat::Tsv, "t", None).is_ok());
        let f = file("# only a comment\n", ".tsv");
        assert!(load_dataset(f.path(), DatasetFormat::Tsv, "t", None).is_err());
    }

    #[test]
    fn benchmark_sizes() {
        for b in KNOWN_BENCHMARKS {
            let rows: String = (0..b.pairs).map(|i| format!("w{i}\tv{i}\t{}\n", b.scale.1 / 2.0)).collect();
            let f = file(&rows, ".tsv");
            let d = load_dataset(f.path(), DatasetFormat::Tsv, b.name, None).unwrap();
            assert_eq!(d.len(), b.pairs);
            assert_eq!(d.scale, b.scale);
        }
        assert_eq!(known_benchmark("mc").unwrap().pairs, 30);
        assert_eq!(known_benchmark("RG").unwrap().pairs, 65);
        assert_eq!(known_benchmark("MEN").unwrap().pairs, 1000);
    }

    #[test]
    fn manifest_resolution() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("pairs.tsv"), "a\tb\t1\nc\td\t3\n").unwrap();
        fs::write(
            dir.path().join("datasets.toml"),
            "[[dataset]]\nname = \"toy\"\npath = \"pairs.tsv\"\nscale = [0.0, 4.0]\n",
        )
        .unwrap();
        let m = DatasetManifest::load(&dir.path().join("datasets.toml")).unwrap();
        let d = m.load_dataset("toy").unwrap();
        assert_eq!(d.scale, (0.0, 4.0));
        assert!(m.load_dataset("missing").is_err());
    }

    #[test]
    fn evaluate_gold_and_negated() {
        let d = dataset(&[("a", "b", 1.0), ("c", "d", 4.0), ("e", "f", 2.5), ("g", "h", 9.0)]);
        let lookup = |w1: &str, w2: &str| d.pairs.iter().find(|p| p.word1 == w1 && p.word2 == w2).map(|p| p.gold);
        let r = evaluate(&d, lookup).unwrap();
        assert_eq!((r.pearson, r.spearman, r.n, r.oov_pairs), (1.0, 1.0, 4, 0));
        let r = evaluate(&d, |a, b| lookup(a, b).map(|g| -g)).unwrap();
        assert_eq!((r.pearson, r.spearman), (-1.0, -1.0));
        let shifted = evaluate(&d, |a, b| lookup(a, b).map(|g| g + 3.0)).unwrap();
        assert_eq!(shifted.spearman, 1.0);
    }

    #[test]
    fn evaluate_counts_oov() {
        let d = dataset(&[("a", "b", 1.0), ("c", "d", 4.0), ("e", "zz", 2.5)]);
        let r = evaluate(&d, |a, _| match a {
            "a" => Some(0.2),
            "c" => Some(0.9),
            _ => None,
        })
        .unwrap();
        assert_eq!(r.oov_pairs, 1);
        assert_eq!(r.per_pair[2].predicted, 0.0);
        assert!(r.per_pair[2].oov);
    }

    #[test]
    fn evaluate_degenerate_names_dataset() {
        let d = dataset(&[("a", "b", 1.0), ("c", "d", 4.0)]);
        let err = evaluate(&d, |_, _| Some(0.5)).unwrap_err();
        assert!(err.to_string().contains("dataset t"), "{err}");
    }

    #[test]
    fn grid_single_point_and_tie_break() {
        let grid = ParamGrid::single(&PipelineParams::default());
        let d = dataset(&[("a", "b", 1.0), ("c", "d", 4.0), ("e", "f", 2.0)]);
        let out = grid_search("t", &grid, Objective::Pearson, |_| {
            evaluate(&d, |a, _| Some(if a == "c" { 2.0 } else if a == "e" { 1.0 } else { 0.0 }))
        })
        .unwrap();
        assert_eq!(out.trace.len(), 1);
        assert_eq!(out.best_index, 0);
        assert_eq!(out.best.params, PipelineParams::default());

        // three lambdas, the middle one fails, the other two tie
        let mut grid = ParamGrid::single(&PipelineParams::default());
        grid.lambda = vec![0.1, 0.2, 0.3];
        let out = grid_search("t", &grid, Objective::Spearman, |p| {
            if p.relatedness.lambda == 0.2 {
                Err(EvalError::Grid("boom".into()))
            } else {
                evaluate(&d, |a, _| Some(if a == "c" { 2.0 } else if a == "e" { 1.0 } else { 0.0 }))
            }
        })
        .unwrap();
        assert_eq!(out.best_index, 0);
        assert_eq!(out.trace[1].error.as_deref(), Some("parameter grid: boom"));
        let mut csv_out = Vec::new();
        out.write_trace_csv(&mut csv_out).unwrap();
        let text = String::from_utf8(csv_out).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("L,M,tau_s,tau_p,min_support,min_confidence,lambda,pearson,spearman,oov_pairs,error\n"));
    }

    #[test]
    fn grid_validation() {
        let mut grid = ParamGrid::default();
        assert_eq!(grid.size(), grid.combinations().len());
        grid.lambda.clear();
        assert!(grid.validate().is_err());
    }

    #[test]
    fn table_alignment() {
        let d = dataset(&[("a", "b", 1.0), ("c", "d", 4.0)]);
        let r = evaluate(&d, |a, _| Some(if a == "a" { 0.1 } else { 0.7 })).unwrap();
        let t = format_table(&[r]);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[0].len(), lines[1].len());
        assert!(lines[1].contains("1.0000"));
    }
}
