//! Command implementations behind the `conceptmine` binary.
//!
//! Each `cmd_*` function does the work and returns its output as data, so
//! the binary only prints and the tests can call the commands directly.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use conceptmine::conceptspace::VectorDump;
use conceptmine::corpus::{ingest, CorpusFormat};
use conceptmine::evalbench::{
    evaluate, evaluate_pipeline, grid_search_pipeline, load_dataset, CorrelationReport, DatasetFormat,
    DatasetManifest, GridOutcome, Objective, ParamGrid, WordPairDataset,
};
use conceptmine::miner::{build_transactions, TitleResolver};
use conceptmine::relatedness::Relatedness;
use conceptmine::significance::{compare_methods, DependentCorrelationTest, Tails};
use conceptmine::{CorpusStats, MiningParams, Pipeline, PipelineParams, PostingsIndex, RuleStore};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// On-disk configuration. Every field is optional; relative paths are
/// resolved against the file's directory.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub corpus: CorpusSection,
    #[serde(default)]
    pub artifacts: ArtifactSection,
    #[serde(default)]
    pub search: SearchSection,
    #[serde(default)]
    pub expansion: ExpansionSection,
    #[serde(default)]
    pub mining: MiningSection,
    #[serde(default)]
    pub relatedness: RelatednessSection,
    #[serde(default)]
    pub datasets: DatasetSection,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSection {
    pub path: Option<PathBuf>,
    pub format: Option<CorpusFormat>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArtifactSection {
    pub index: Option<PathBuf>,
    pub rules: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    #[serde(rename = "L")]
    pub min_article_chars: Option<usize>,
    #[serde(rename = "M")]
    pub max_concepts: Option<usize>,
    pub tau_s: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpansionSection {
    pub tau_p: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MiningSection {
    pub consequent_size: Option<usize>,
    pub min_support: Option<u32>,
    pub min_confidence: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelatednessSection {
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    pub manifest: Option<PathBuf>,
}

/// Values given on the command line; they win over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub corpus: Option<PathBuf>,
    pub corpus_format: Option<CorpusFormat>,
    pub index: Option<PathBuf>,
    pub rules: Option<PathBuf>,
    pub min_article_chars: Option<usize>,
    pub max_concepts: Option<usize>,
    pub tau_s: Option<usize>,
    pub tau_p: Option<usize>,
    pub consequent_size: Option<usize>,
    pub min_support: Option<u32>,
    pub min_confidence: Option<f64>,
    pub lambda: Option<f64>,
    pub datasets: Option<PathBuf>,
}

/// Fully resolved settings for one command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub corpus: Option<PathBuf>,
    pub corpus_format: CorpusFormat,
    pub index_dir: PathBuf,
    pub rules_dir: PathBuf,
    pub params: PipelineParams,
    pub mining: MiningParams,
    pub dataset_manifest: Option<PathBuf>,
}

pub const DEFAULT_INDEX_DIR: &str = "build/index";
pub const DEFAULT_RULES_DIR: &str = "build/rules";

impl PipelineConfig {
    /// Flags over file over defaults.
    pub fn resolve(file: Option<&Path>, flags: &Overrides) -> Result<Self> {
        let (cfg, base) = match file {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
                let cfg: ConfigFile =
                    toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
                (cfg, path.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (ConfigFile::default(), PathBuf::new()),
        };
        let rel = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };

        let defaults = PipelineParams::default();
        let mining_defaults = MiningParams::default();
        let min_support = flags
            .min_support
            .or(cfg.mining.min_support)
            .unwrap_or(mining_defaults.min_support);
        let min_confidence = flags
            .min_confidence
            .or(cfg.mining.min_confidence)
            .unwrap_or(mining_defaults.min_confidence);

        let mut params = defaults;
        params.search.min_article_chars = flags
            .min_article_chars
            .or(cfg.search.min_article_chars)
            .unwrap_or(defaults.search.min_article_chars);
        params.search.max_concepts = flags
            .max_concepts
            .or(cfg.search.max_concepts)
            .unwrap_or(defaults.search.max_concepts);
        params.search.max_title_words = flags
            .tau_s
            .or(cfg.search.tau_s)
            .unwrap_or(defaults.search.max_title_words);
        params.expansion_max_title_words = flags
            .tau_p
            .or(cfg.expansion.tau_p)
            .unwrap_or(defaults.expansion_max_title_words);
        params.min_support = min_support;
        params.min_confidence = min_confidence;
        params.relatedness.lambda = flags
            .lambda
            .or(cfg.relatedness.lambda)
            .unwrap_or(defaults.relatedness.lambda);
        params.validate()?;

        let mining = MiningParams {
            consequent_size: flags
                .consequent_size
                .or(cfg.mining.consequent_size)
                .unwrap_or(mining_defaults.consequent_size),
            min_support,
            min_confidence,
        };
        mining.validate()?;

        Ok(PipelineConfig {
            corpus: flags.corpus.clone().or(cfg.corpus.path.map(rel)),
            corpus_format: flags.corpus_format.or(cfg.corpus.format).unwrap_or(CorpusFormat::Jsonl),
            index_dir: flags
                .index
                .clone()
                .or(cfg.artifacts.index.map(rel))
                .unwrap_or_else(|| PathBuf::from(DEFAULT_INDEX_DIR)),
            rules_dir: flags
                .rules
                .clone()
                .or(cfg.artifacts.rules.map(rel))
                .unwrap_or_else(|| PathBuf::from(DEFAULT_RULES_DIR)),
            params,
            mining,
            dataset_manifest: flags.datasets.clone().or(cfg.datasets.manifest.map(rel)),
        })
    }

    /// Loads both artifacts.
    pub fn load_pipeline(&self) -> Result<Pipeline> {
        for (what, dir) in [("index", &self.index_dir), ("rule store", &self.rules_dir)] {
            if !dir.exists() {
                bail!(
                    "{what} artifact {} does not exist; run `conceptmine build` first",
                    dir.display()
                );
            }
        }
        let index = PostingsIndex::load(&self.index_dir)
            .with_context(|| format!("loading index from {}", self.index_dir.display()))?;
        let rules = RuleStore::load(&self.rules_dir)
            .with_context(|| format!("loading rule store from {}", self.rules_dir.display()))?;
        rules.check_thresholds(self.params.min_support, self.params.min_confidence)?;
        Ok(Pipeline::new(index, rules, self.params))
    }
}

// ---------------------------------------------------------------------------
// build
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BuildSummary {
    pub corpus: CorpusStats,
    pub transactions: usize,
    pub unresolved_links: usize,
    pub rules: usize,
    pub index_terms: usize,
}

impl std::fmt::Display for BuildSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let c = &self.corpus;
        writeln!(f, "articles          {}", c.article_count)?;
        writeln!(f, "redirects pruned  {}", c.pruned_redirects)?;
        writeln!(f, "namespace pruned  {}", c.pruned_namespace)?;
        writeln!(f, "malformed         {}", c.malformed_records)?;
        writeln!(f, "see-also bearing  {}", c.see_also_bearing)?;
        writeln!(f, "index terms       {}", self.index_terms)?;
        writeln!(f, "transactions      {}", self.transactions)?;
        writeln!(f, "unresolved links  {}", self.unresolved_links)?;
        write!(f, "rules             {}", self.rules)
    }
}

/// Ingests the corpus, then writes the index and the rule store. Both
/// destinations are checked before any work so a refused build touches
/// nothing.
pub fn cmd_build(cfg: &PipelineConfig, force: bool) -> Result<BuildSummary> {
    let corpus_path = cfg
        .corpus
        .as_deref()
        .context("no corpus given (set [corpus] path in the config or pass --corpus)")?;
    if !corpus_path.exists() {
        bail!("corpus {} does not exist", corpus_path.display());
    }
    conceptmine::artifact::check_writable(&cfg.index_dir, force)?;
    conceptmine::artifact::check_writable(&cfg.rules_dir, force)?;

    let corpus = ingest(corpus_path, cfg.corpus_format)?;
    log::info!("ingested {} articles", corpus.articles.len());
    let resolver = TitleResolver::from_articles(&corpus.articles);
    let (transactions, unresolved) = build_transactions(&corpus.articles, |t| resolver.resolve(t));
    let rules = RuleStore::mine(&transactions, cfg.mining)?;
    log::info!("mined {} rules from {} transactions", rules.rule_count(), transactions.len());
    let stats = corpus.stats;
    let index = PostingsIndex::build(corpus.articles)?;

    index.save(&cfg.index_dir, force)?;
    rules.save(&cfg.rules_dir, force)?;
    Ok(BuildSummary {
        corpus: stats,
        transactions: transactions.len(),
        unresolved_links: unresolved,
        rules: rules.rule_count(),
        index_terms: index.term_count(),
    })
}

// ---------------------------------------------------------------------------
// relate / dump-vector
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelateOutput {
    pub relatedness: Relatedness,
    /// Both concept vectors, when asked for.
    pub explain: Option<[VectorDump; 2]>,
    /// Texts whose concept vector came out empty.
    pub uncovered: Vec<String>,
}

pub fn cmd_relate(cfg: &PipelineConfig, t1: &str, t2: &str, explain: bool) -> Result<RelateOutput> {
    let pipeline = cfg.load_pipeline()?;
    let v1 = pipeline.concept_vector(t1)?;
    let v2 = pipeline.concept_vector(t2)?;
    let relatedness = conceptmine::relatedness::relate_vectors(&v1, &v2, &cfg.params.relatedness)?;
    let uncovered = [(t1, &v1), (t2, &v2)]
        .into_iter()
        .filter(|(_, v)| v.is_empty())
        .map(|(t, _)| t.to_string())
        .collect();
    let explain = explain.then(|| [v1.dump(t1, &pipeline.index), v2.dump(t2, &pipeline.index)]);
    Ok(RelateOutput {
        relatedness,
        explain,
        uncovered,
    })
}

pub fn cmd_dump_vector(cfg: &PipelineConfig, text: &str) -> Result<VectorDump> {
    let pipeline = cfg.load_pipeline()?;
    Ok(pipeline.concept_vector(text)?.dump(text, &pipeline.index))
}

// ---------------------------------------------------------------------------
// eval / grid
// ---------------------------------------------------------------------------

/// A dataset argument is either a file path or a name from the manifest.
pub fn resolve_dataset(cfg: &PipelineConfig, arg: &str) -> Result<WordPairDataset> {
    let path = Path::new(arg);
    if path.is_file() {
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or(arg);
        return Ok(load_dataset(path, DatasetFormat::from_path(path), name, None)?);
    }
    let Some(manifest_path) = &cfg.dataset_manifest else {
        bail!("dataset {arg} is not a file and no dataset manifest is configured");
    };
    let manifest = DatasetManifest::load(manifest_path)?;
    if manifest.get(arg).is_none() {
        bail!(
            "dataset {arg} is neither a file nor listed in {}",
            manifest_path.display()
        );
    }
    Ok(manifest.load_dataset(arg)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum EvalOutput {
    Report(CorrelationReport),
    Grid(GridOutcome),
}

#[derive(Debug, Clone, Default)]
pub struct EvalOptions {
    pub grid: Option<PathBuf>,
    pub objective: Option<Objective>,
    /// Score every pair with its own gold value. Checks the harness.
    pub gold_as_scorer: bool,
}

pub fn cmd_eval(cfg: &PipelineConfig, dataset: &str, opts: &EvalOptions) -> Result<EvalOutput> {
    let data = resolve_dataset(cfg, dataset)?;
    if opts.gold_as_scorer {
        let gold: std::collections::HashMap<(&str, &str), f64> = data
            .pairs
            .iter()
            .map(|p| ((p.word1.as_str(), p.word2.as_str()), p.gold))
            .collect();
        return Ok(EvalOutput::Report(evaluate(&data, |a, b| gold.get(&(a, b)).copied())?));
    }
    let pipeline = cfg.load_pipeline()?;
    match &opts.grid {
        None => Ok(EvalOutput::Report(evaluate_pipeline(&data, &pipeline, &cfg.params)?)),
        Some(path) => {
            let grid = ParamGrid::load(path)?;
            let objective = opts.objective.unwrap_or(Objective::Spearman);
            Ok(EvalOutput::Grid(grid_search_pipeline(&data, &grid, objective, &pipeline)?))
        }
    }
}

pub fn cmd_grid(cfg: &PipelineConfig, dataset: &str, grid: &Path, objective: Objective) -> Result<GridOutcome> {
    let opts = EvalOptions {
        grid: Some(grid.to_path_buf()),
        objective: Some(objective),
        gold_as_scorer: false,
    };
    match cmd_eval(cfg, dataset, &opts)? {
        EvalOutput::Grid(g) => Ok(g),
        EvalOutput::Report(_) => unreachable!("a grid was given"),
    }
}

pub fn trace_csv(outcome: &GridOutcome) -> Result<String> {
    let mut buf = Vec::new();
    outcome.write_trace_csv(&mut buf)?;
    Ok(String::from_utf8(buf)?)
}

// ---------------------------------------------------------------------------
// significance
// ---------------------------------------------------------------------------

/// Reads scores from a single-column text file or from an evaluation
/// report in JSON (its predicted scores).
pub fn read_scores(path: &Path) -> Result<Vec<f64>> {
    Ok(read_score_file(path)?.1)
}

/// `(word1, word2)` for each scored pair, in file order.
type PairKeys = Vec<(String, String)>;

/// Returns the pair keys (for reports) and the scores.
fn read_score_file(path: &Path) -> Result<(Option<PairKeys>, Vec<f64>)> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    if text.trim_start().starts_with('{') {
        let report: CorrelationReport =
            serde_json::from_str(&text).with_context(|| format!("{} is not an evaluation report", path.display()))?;
        let keys = report.per_pair.iter().map(|p| (p.word1.clone(), p.word2.clone())).collect();
        return Ok((Some(keys), report.predicted()));
    }
    let mut scores = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line
            .parse()
            .with_context(|| format!("{}, row {}: {line:?} is not a number", path.display(), i + 1))?;
        scores.push(v);
    }
    Ok((None, scores))
}

/// Gold scores from a single-column file, or from a report's gold column.
fn read_gold(path: &Path) -> Result<(Option<PairKeys>, Vec<f64>)> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    if text.trim_start().starts_with('{') {
        let report: CorrelationReport = serde_json::from_str(&text)?;
        let keys = report.per_pair.iter().map(|p| (p.word1.clone(), p.word2.clone())).collect();
        return Ok((Some(keys), report.gold()));
    }
    read_score_file(path)
}

#[derive(Debug, Clone, Default)]
pub struct SignificanceInputs {
    /// Gold scores. Optional when method A's file is a report.
    pub gold: Option<PathBuf>,
    pub method_a: PathBuf,
    pub method_b: PathBuf,
}

pub fn cmd_significance(
    inputs: &SignificanceInputs,
    tails: Tails,
    alpha: f64,
    rank_based: bool,
) -> Result<DependentCorrelationTest> {
    let (keys_a, a) = read_score_file(&inputs.method_a)?;
    let (keys_b, b) = read_score_file(&inputs.method_b)?;
    let (keys_g, gold) = match &inputs.gold {
        Some(p) => read_gold(p)?,
        None if keys_a.is_some() => read_gold(&inputs.method_a)?,
        None => bail!("--gold is required unless method A is an evaluation report"),
    };
    let keys: Vec<&PairKeys> = [&keys_g, &keys_a, &keys_b].into_iter().flatten().collect();
    if keys.windows(2).any(|w| w[0] != w[1]) {
        bail!("the score files list different word pairs");
    }
    Ok(compare_methods(&gold, &a, &b, tails, alpha, rank_based)?)
}
