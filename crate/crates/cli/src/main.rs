use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use conceptmine::corpus::CorpusFormat;
use conceptmine::evalbench::{format_table, Objective};
use conceptmine::significance::Tails;
use conceptmine_cli::{
    cmd_build, cmd_dump_vector, cmd_eval, cmd_grid, cmd_relate, cmd_significance, trace_csv, EvalOptions, EvalOutput,
    Overrides, PipelineConfig, SignificanceInputs,
};

/// Concept-space relatedness built from an encyclopedia's articles and
/// their "See also" links.
#[derive(Parser)]
#[command(name = "conceptmine", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file. Flags override its values.
    #[arg(long, short = 'c', global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// jsonl or wikitext_dir
    #[arg(long, global = true)]
    corpus_format: Option<CorpusFormat>,
    #[arg(long, global = true)]
    index: Option<PathBuf>,
    #[arg(long, global = true)]
    rules: Option<PathBuf>,
    /// Dataset manifest (TOML with [[dataset]] tables).
    #[arg(long, global = true)]
    datasets: Option<PathBuf>,
    /// Minimum article body length in characters.
    #[arg(long = "L", global = true)]
    min_article_chars: Option<usize>,
    /// Maximum number of explicit concepts.
    #[arg(long = "M", global = true)]
    max_concepts: Option<usize>,
    /// Maximum title words of explicit concepts.
    #[arg(long, global = true)]
    tau_s: Option<usize>,
    /// Maximum title words of latent concepts.
    #[arg(long, global = true)]
    tau_p: Option<usize>,
    /// Number of concepts on the right-hand side of a rule.
    #[arg(long, global = true)]
    consequent_size: Option<usize>,
    #[arg(long, global = true)]
    min_support: Option<u32>,
    #[arg(long, global = true)]
    min_confidence: Option<f64>,
    /// Cosine level that counts as fully related.
    #[arg(long, global = true)]
    lambda: Option<f64>,
}

impl Common {
    fn resolve(&self) -> Result<PipelineConfig> {
        let flags = Overrides {
            corpus: self.corpus.clone(),
            corpus_format: self.corpus_format,
            index: self.index.clone(),
            rules: self.rules.clone(),
            min_article_chars: self.min_article_chars,
            max_concepts: self.max_concepts,
            tau_s: self.tau_s,
            tau_p: self.tau_p,
            consequent_size: self.consequent_size,
            min_support: self.min_support,
            min_confidence: self.min_confidence,
            lambda: self.lambda,
            datasets: self.datasets.clone(),
        };
        PipelineConfig::resolve(self.config.as_deref(), &flags)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build the index and the rule store from the corpus.
    Build {
        /// Overwrite existing artifacts.
        #[arg(long)]
        force: bool,
    },
    /// Score the relatedness of two texts.
    Relate {
        text1: String,
        text2: String,
        /// Also print both concept vectors as JSON.
        #[arg(long)]
        explain: bool,
    },
    /// Correlate pipeline scores with a word-pair dataset.
    Eval {
        /// Dataset file or manifest name.
        dataset: String,
        /// Parameter grid (TOML); runs a grid search instead.
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long, default_value = "spearman")]
        objective: Objective,
        /// Score pairs with their gold values (harness check).
        #[arg(long)]
        gold_as_scorer: bool,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
        /// Also write the JSON result to this file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the grid trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Grid search on a development dataset.
    Grid {
        dataset: String,
        #[arg(long)]
        grid: PathBuf,
        #[arg(long, default_value = "spearman")]
        objective: Objective,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Steiger's Z test between two methods scored on the same pairs.
    Significance {
        /// Gold scores, one per line, or an evaluation report.
        #[arg(long)]
        gold: Option<PathBuf>,
        /// Method A scores, one per line, or an evaluation report.
        #[arg(long = "a")]
        method_a: PathBuf,
        #[arg(long = "b")]
        method_b: PathBuf,
        #[arg(long, default_value = "one")]
        tails: Tails,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Use Pearson instead of Spearman correlations.
        #[arg(long)]
        pearson: bool,
        #[arg(long, default_value = "A")]
        label_a: String,
        #[arg(long, default_value = "B")]
        label_b: String,
        #[arg(long)]
        json: bool,
    },
    /// Print the concept vector of a text as JSON.
    DumpVector { text: String },
}

fn write_json<T: serde::Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn print_grid(outcome: &conceptmine::evalbench::GridOutcome, json: bool, trace: Option<&PathBuf>) -> Result<String> {
    if let Some(path) = trace {
        fs::write(path, trace_csv(outcome)?)?;
    }
    if json {
        return write_json(outcome);
    }
    let p = &outcome.best.params;
    Ok(format!(
        "dataset {}: best {:?} {:.4} over {} combinations\nL={} M={} tau_s={} tau_p={} min_support={} min_confidence={} lambda={}\n",
        outcome.dataset,
        outcome.objective,
        outcome.best_score(),
        outcome.trace.len(),
        p.search.min_article_chars,
        p.search.max_concepts,
        p.search.max_title_words,
        p.expansion_max_title_words,
        p.min_support,
        p.min_confidence,
        p.relatedness.lambda,
    ))
}

fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Build { force } => {
            let cfg = cli.common.resolve()?;
            Ok(format!("{}\n", cmd_build(&cfg, force)?))
        }
        Command::Relate { text1, text2, explain } => {
            let cfg = cli.common.resolve()?;
            let out = cmd_relate(&cfg, &text1, &text2, explain)?;
            for t in &out.uncovered {
                eprintln!("warning: {t:?} maps to no concepts; its relatedness is 0");
            }
            let mut s = format!("{:.4}\n", out.relatedness.score);
            if let Some(dumps) = &out.explain {
                s += &write_json(dumps)?;
            }
            Ok(s)
        }
        Command::Eval {
            dataset,
            grid,
            objective,
            gold_as_scorer,
            json,
            out,
            trace,
        } => {
            let cfg = cli.common.resolve()?;
            let opts = EvalOptions {
                grid,
                objective: Some(objective),
                gold_as_scorer,
            };
            let result = cmd_eval(&cfg, &dataset, &opts)?;
            if let Some(path) = &out {
                fs::write(path, write_json(&result)?)?;
            }
            match &result {
                EvalOutput::Report(r) => {
                    if r.oov_pairs > 0 {
                        eprintln!("warning: {} of {} pairs are out of vocabulary", r.oov_pairs, r.n);
                    }
                    if json {
                        write_json(r)
                    } else {
                        Ok(format_table(std::slice::from_ref(r)))
                    }
                }
                EvalOutput::Grid(g) => print_grid(g, json, trace.as_ref()),
            }
        }
        Command::Grid {
            dataset,
            grid,
            objective,
            json,
            trace,
        } => {
            let cfg = cli.common.resolve()?;
            let outcome = cmd_grid(&cfg, &dataset, &grid, objective)?;
            print_grid(&outcome, json, trace.as_ref())
        }
        Command::Significance {
            gold,
            method_a,
            method_b,
            tails,
            alpha,
            pearson,
            label_a,
            label_b,
            json,
        } => {
            let inputs = SignificanceInputs { gold, method_a, method_b };
            let test = cmd_significance(&inputs, tails, alpha, !pearson)?;
            if json {
                write_json(&test)
            } else {
                Ok(test.table_row(&label_a, &label_b) + "\n")
            }
        }
        Command::DumpVector { text } => {
            let cfg = cli.common.resolve()?;
            write_json(&cmd_dump_vector(&cfg, &text)?)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::FAILURE;
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
