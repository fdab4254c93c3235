//! Corpus ingestion.
//!
//! Two input formats are supported. The canonical one is JSON-lines, one
//! article per line:
//!
//! ```text
//! {"title": "Treebank", "body": "...", "see_also": ["Parse tree"], "redirect": false, "namespace": "main"}
//! ```
//!
//! `see_also`, `redirect` and `namespace` may be omitted and default to
//! `[]`, `false` and `"main"`. The second format is a directory of raw
//! wikitext files (one article per file, title taken from the file stem),
//! from which "See also" targets are extracted with [`extract_see_also`].
//!
//! Redirects and articles outside the main namespace are dropped and
//! counted. Retained articles get dense ids in encounter order.

use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ConceptId;

pub const MAIN_NAMESPACE: &str = "main";

/// Section headings whose content is excluded from an article body.
const EXCLUDED_SECTIONS: [&str; 4] = ["references", "see also", "categories", "external links"];

const NAMESPACE_PREFIXES: [&str; 14] = [
    "category", "file", "image", "template", "wikipedia", "help", "portal", "user", "talk",
    "draft", "module", "mediawiki", "special", "book",
];

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read corpus source {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("corpus source {0} is not a directory (wikitext_dir format expects one)")]
    NotADirectory(PathBuf),
    #[error("unknown corpus format {0:?} (expected \"jsonl\" or \"wikitext_dir\")")]
    UnknownFormat(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusFormat {
    Jsonl,
    WikitextDir,
}

impl FromStr for CorpusFormat {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "jsonl" => Ok(CorpusFormat::Jsonl),
            "wikitext_dir" | "wikitext-dir" => Ok(CorpusFormat::WikitextDir),
            other => Err(CorpusError::UnknownFormat(other.to_string())),
        }
    }
}

/// One retained corpus article. Its title names a concept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticleRecord {
    pub id: ConceptId,
    pub title: String,
    /// Plain text with the References / See also / Categories / External
    /// links sections removed.
    pub body: String,
    /// Character (not byte) count of `body`.
    pub body_chars: usize,
    pub see_also: Vec<String>,
    pub is_redirect: bool,
    pub namespace: String,
}

impl ArticleRecord {
    /// A main-namespace, non-redirect article. `body` is used as given.
    pub fn new(id: u32, title: &str, body: &str, see_also: Vec<String>) -> Self {
        ArticleRecord {
            id: ConceptId(id),
            title: title.to_string(),
            body: body.to_string(),
            body_chars: body.chars().count(),
            see_also: clean_see_also(see_also),
            is_redirect: false,
            namespace: MAIN_NAMESPACE.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub article_count: usize,
    pub pruned_redirects: usize,
    pub pruned_namespace: usize,
    pub see_also_bearing: usize,
    /// Records that could not be parsed (or repeated an earlier title).
    /// These are not part of the records-seen total.
    pub malformed_records: usize,
}

impl CorpusStats {
    pub fn records_seen(&self) -> usize {
        self.article_count + self.pruned_redirects + self.pruned_namespace
    }
}

/// A fully ingested corpus.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub articles: Vec<ArticleRecord>,
    pub stats: CorpusStats,
}

/// Ingests `source` and collects every retained article.
pub fn ingest(source: &Path, format: CorpusFormat) -> Result<Corpus, CorpusError> {
    let mut stream = ArticleStream::open(source, format)?;
    let mut articles = Vec::new();
    for article in &mut stream {
        articles.push(article?);
    }
    Ok(Corpus {
        articles,
        stats: stream.stats(),
    })
}

/// Raw candidate article before pruning.
struct RawArticle {
    title: String,
    body: String,
    see_also: Vec<String>,
    redirect: bool,
    namespace: String,
}

#[derive(Deserialize)]
struct JsonlRecord {
    title: String,
    body: String,
    #[serde(default)]
    see_also: Vec<String>,
    #[serde(default)]
    redirect: bool,
    #[serde(default = "default_namespace")]
    namespace: String,
}

fn default_namespace() -> String {
    MAIN_NAMESPACE.to_string()
}

enum Source {
    Jsonl {
        path: PathBuf,
        lines: io::Lines<BufReader<File>>,
        line_no: usize,
    },
    Wikitext {
        files: std::vec::IntoIter<PathBuf>,
    },
}

/// Streaming ingestion. Yields retained articles in encounter order;
/// [`ArticleStream::stats`] is complete once the iterator is exhausted.
pub struct ArticleStream {
    source: Source,
    stats: CorpusStats,
    seen_titles: HashSet<String>,
    next_id: u32,
}

impl ArticleStream {
    pub fn open(source: &Path, format: CorpusFormat) -> Result<Self, CorpusError> {
        let io_err = |e| CorpusError::Io {
            path: source.to_path_buf(),
            source: e,
        };
        let source = match format {
            CorpusFormat::Jsonl => {
                let file = File::open(source).map_err(io_err)?;
                Source::Jsonl {
                    path: source.to_path_buf(),
                    lines: BufReader::new(file).lines(),
                    line_no: 0,
                }
            }
            CorpusFormat::WikitextDir => {
                let meta = fs::metadata(source).map_err(io_err)?;
                if !meta.is_dir() {
                    return Err(CorpusError::NotADirectory(source.to_path_buf()));
                }
                let mut files = Vec::new();
                for entry in fs::read_dir(source).map_err(io_err)? {
                    let entry = entry.map_err(io_err)?;
                    let path = entry.path();
                    let hidden = path
                        .file_name()
                        .and_then(|n| n.to_str())
                        .is_some_and(|n| n.starts_with('.'));
                    if path.is_file() && !hidden {
                        files.push(path);
                    }
                }
                files.sort();
                Source::Wikitext {
                    files: files.into_iter(),
                }
            }
        };
        Ok(ArticleStream {
            source,
            stats: CorpusStats::default(),
            seen_titles: HashSet::new(),
            next_id: 0,
        })
    }

    pub fn stats(&self) -> CorpusStats {
        self.stats
    }

    /// Next raw candidate. `Ok(None)` means a malformed record was skipped.
    fn next_raw(&mut self) -> Option<Result<Option<RawArticle>, CorpusError>> {
        match &mut self.source {
            Source::Jsonl {
                path,
                lines,
                line_no,
            } => loop {
                let line = match lines.next()? {
                    Ok(line) => line,
                    Err(e) => {
                        return Some(Err(CorpusError::Io {
                            path: path.clone(),
                            source: e,
                        }))
                    }
                };
                *line_no += 1;
                if line.trim().is_empty() {
                    continue;
                }
                return Some(Ok(match serde_json::from_str::<JsonlRecord>(&line) {
                    Ok(rec) => Some(RawArticle {
                        title: rec.title.trim().to_string(),
                        body: strip_excluded_sections(&rec.body),
                        see_also: rec.see_also,
                        redirect: rec.redirect,
                        namespace: rec.namespace,
                    }),
                    Err(e) => {
                        log::warn!("{}:{}: skipping malformed record: {}", path.display(), line_no, e);
                        None
                    }
                }));
            },
            Source::Wikitext { files } => {
                let path = files.next()?;
                let text = match fs::read_to_string(&path) {
                    Ok(text) => text,
                    Err(e) => return Some(Err(CorpusError::Io { path, source: e })),
                };
                let title = path
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .unwrap_or_default()
                    .replace('_', " ")
                    .trim()
                    .to_string();
                Some(Ok(Some(parse_wikitext_article(title, &text))))
            }
        }
    }
}

impl Iterator for ArticleStream {
    type Item = Result<ArticleRecord, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let raw = match self.next_raw()? {
                Err(e) => return Some(Err(e)),
                Ok(None) => {
                    self.stats.malformed_records += 1;
                    continue;
                }
                Ok(Some(raw)) => raw,
            };
            if raw.redirect {
                self.stats.pruned_redirects += 1;
                continue;
            }
            if raw.namespace != MAIN_NAMESPACE {
                self.stats.pruned_namespace += 1;
                continue;
            }
            if raw.title.is_empty() || self.seen_titles.contains(&raw.title) {
                log::warn!("skipping record with empty or duplicate title {:?}", raw.title);
                self.stats.malformed_records += 1;
                continue;
            }
            self.seen_titles.insert(raw.title.clone());

            let see_also = clean_see_also(raw.see_also);
            self.stats.article_count += 1;
            if !see_also.is_empty() {
                self.stats.see_also_bearing += 1;
            }
            let id = ConceptId(self.next_id);
            self.next_id += 1;
            return Some(Ok(ArticleRecord {
                id,
                body_chars: raw.body.chars().count(),
                title: raw.title,
                body: raw.body,
                see_also,
                is_redirect: false,
                namespace: raw.namespace,
            }));
        }
    }
}

fn clean_see_also(entries: Vec<String>) -> Vec<String> {
    entries
        .into_iter()
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

fn parse_wikitext_article(title: String, text: &str) -> RawArticle {
    let redirect = text.trim_start().to_ascii_lowercase().starts_with("#redirect");
    let namespace = title
        .split_once(':')
        .map(|(prefix, _)| prefix.trim().to_ascii_lowercase())
        .filter(|prefix| NAMESPACE_PREFIXES.contains(&prefix.as_str()))
        .unwrap_or_else(|| MAIN_NAMESPACE.to_string());
    RawArticle {
        see_also: extract_see_also(text),
        body: wikitext_to_plain(&strip_excluded_sections(text)),
        title,
        redirect,
        namespace,
    }
}

/// Parses a `== Heading ==` line into (level, name). Level is the number of
/// `=` on the shorter side and must be at least 2.
fn heading(line: &str) -> Option<(usize, &str)> {
    let line = line.trim();
    let lead = line.chars().take_while(|&c| c == '=').count();
    let trail = line.chars().rev().take_while(|&c| c == '=').count();
    if lead < 2 || trail < 2 || lead + trail >= line.len() {
        return None;
    }
    let level = lead.min(trail);
    let name = line[lead..line.len() - trail].trim();
    if name.is_empty() {
        return None;
    }
    Some((level, name))
}

/// Returns the "See also" link targets of a raw wikitext article, in order.
///
/// The section starts at a heading named "See also" (any case, level 2 or
/// deeper) and runs until the next heading of the same or a higher level.
/// Each list item contributes the target of its first `[[link]]`;
/// display text, `#fragment` and a leading `:` are dropped.
pub fn extract_see_also(raw_article_text: &str) -> Vec<String> {
    let mut targets = Vec::new();
    let mut section_level: Option<usize> = None;
    for line in raw_article_text.lines() {
        if let Some((level, name)) = heading(line) {
            match section_level {
                Some(open) if level <= open => section_level = None,
                Some(_) => continue,
                None => {}
            }
            if section_level.is_none() && name.eq_ignore_ascii_case("see also") {
                section_level = Some(level);
            }
            continue;
        }
        if section_level.is_none() {
            continue;
        }
        let item = line.trim_start();
        if !(item.starts_with('*') || item.starts_with('#')) {
            continue;
        }
        if let Some(target) = first_link_target(item) {
            targets.push(target);
        }
    }
    targets
}

fn first_link_target(s: &str) -> Option<String> {
    let start = s.find("[[")? + 2;
    let end = s[start..].find("]]")? + start;
    let inner = &s[start..end];
    let target = inner.split('|').next().unwrap_or_default();
    let target = target.split('#').next().unwrap_or_default();
    let target = target.trim().trim_start_matches(':').trim();
    (!target.is_empty()).then(|| target.to_string())
}

/// Removes the References, See also, Categories and External links
/// sections (each up to the next heading of the same or higher level).
pub fn strip_excluded_sections(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut skipping: Option<usize> = None;
    for line in text.lines() {
        if let Some((level, name)) = heading(line) {
            if let Some(open) = skipping {
                if level > open {
                    continue;
                }
                skipping = None;
            }
            let lower = name.to_lowercase();
            if EXCLUDED_SECTIONS.contains(&lower.as_str()) {
                skipping = Some(level);
                continue;
            }
        } else if skipping.is_some() {
            continue;
        }
        out.push_str(line);
        out.push('\n');
    }
    if !text.ends_with('\n') && out.ends_with('\n') {
        out.pop();
    }
    out
}

/// Crude wikitext-to-text conversion: drops templates, tables, tags, file
/// and category links; keeps link display text and heading names.
pub fn wikitext_to_plain(text: &str) -> String {
    let no_templates = remove_nested(text, "{{", "}}");
    let mut out = String::with_capacity(no_templates.len());
    for line in no_templates.lines() {
        let trimmed = line.trim_start();
        if trimmed.starts_with("{|")
            || trimmed.starts_with("|}")
            || trimmed.starts_with('|')
            || trimmed.starts_with('!')
            || trimmed.starts_with("#redirect")
            || trimmed.starts_with("#REDIRECT")
        {
            continue;
        }
        let line = match heading(line) {
            Some((_, name)) => name.to_string(),
            None => line.to_string(),
        };
        let line = replace_links(&line);
        let line = strip_tags(&line).replace("'''", "").replace("''", "");
        let line = line.trim_start_matches(['*', '#', ':', ';']).trim();
        if !line.is_empty() {
            out.push_str(line);
            out.push('\n');
        }
    }
    if out.ends_with('\n') {
        out.pop();
    }
    out
}

fn remove_nested(text: &str, open: &str, close: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut depth = 0usize;
    let mut rest = text;
    while !rest.is_empty() {
        if rest.starts_with(open) {
            depth += 1;
            rest = &rest[open.len()..];
        } else if depth > 0 && rest.starts_with(close) {
            depth -= 1;
            rest = &rest[close.len()..];
        } else {
            let ch = rest.chars().next().unwrap();
            if depth == 0 {
                out.push(ch);
            }
            rest = &rest[ch.len_utf8()..];
        }
    }
    out
}

fn replace_links(line: &str) -> String {
    let mut out = String::with_capacity(line.len());
    let mut rest = line;
    while let Some(start) = rest.find("[[") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let Some(end) = after.find("]]") else {
            out.push_str(&rest[start..]);
            return out;
        };
        let inner = &after[..end];
        let target = inner.split('|').next().unwrap_or_default().trim();
        let is_meta = target
            .split_once(':')
            .is_some_and(|(p, _)| NAMESPACE_PREFIXES.contains(&p.trim().to_ascii_lowercase().as_str()));
        if !is_meta {
            out.push_str(inner.rsplit('|').next().unwrap_or_default());
        }
        rest = &after[end + 2..];
    }
    out.push_str(rest);
    out
}

fn strip_tags(line: &str) -> String {
    let mut out = String::with_capacity(line.len());
    let mut in_tag = false;
    for ch in line.chars() {
        match ch {
            '<' => in_tag = true,
            '>' if in_tag => in_tag = false,
            _ if !in_tag => out.push(ch),
            _ => {}
        }
    }
    out
}
