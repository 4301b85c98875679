//! Bug records, the JSON Lines corpus format, heat scoring and text cleaning.

mod clean;

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use clean::{clean_text, is_code_line};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {0}: {1}")]
    MalformedLine(usize, String),
    #[error("duplicate bug id {0}")]
    DuplicateId(u64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Inputs to the additive heat score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatAttributes {
    pub is_private: bool,
    pub is_security: bool,
    pub duplicate_count: u64,
    pub affected_users: u64,
    pub subscriber_count: u64,
}

pub const PRIVATE_POINTS: u64 = 150;
pub const SECURITY_POINTS: u64 = 250;
pub const POINTS_PER_DUPLICATE: u64 = 6;
pub const POINTS_PER_AFFECTED_USER: u64 = 4;
pub const POINTS_PER_SUBSCRIBER: u64 = 2;

/// Bug heat: 150 if private, 250 if security, plus 6/duplicate, 4/affected user, 2/subscriber.
pub fn compute_heat(attrs: &HeatAttributes) -> u64 {
    PRIVATE_POINTS * u64::from(attrs.is_private)
        + SECURITY_POINTS * u64::from(attrs.is_security)
        + POINTS_PER_DUPLICATE * attrs.duplicate_count
        + POINTS_PER_AFFECTED_USER * attrs.affected_users
        + POINTS_PER_SUBSCRIBER * attrs.subscriber_count
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Comment {
    pub ts: DateTime<Utc>,
    pub text: String,
}

/// A package the bug affects; a missing timestamp is resolved to the bug's creation time on load.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffectedPackage {
    pub ts: DateTime<Utc>,
    pub package: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatSnapshot {
    pub crawl_date: NaiveDate,
    pub heat: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BugRecord {
    pub id: u64,
    pub reported_on: String,
    pub created_at: DateTime<Utc>,
    pub description: String,
    pub comments: Vec<Comment>,
    pub affected: Vec<AffectedPackage>,
    pub heat_snapshots: Vec<HeatSnapshot>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attrs: Option<HeatAttributes>,
}

impl BugRecord {
    /// Heat from the latest snapshot taken on or before `crawl`.
    pub fn heat_at(&self, crawl: NaiveDate) -> Option<u64> {
        self.heat_snapshots
            .iter()
            .filter(|s| s.crawl_date <= crawl)
            .max_by_key(|s| s.crawl_date)
            .map(|s| s.heat)
    }

    /// Heat from the most recent snapshot.
    pub fn latest_heat(&self) -> Option<u64> {
        self.heat_snapshots
            .iter()
            .max_by_key(|s| s.crawl_date)
            .map(|s| s.heat)
    }
}

/// Comment texts posted at or before `window_end`, in order.
pub fn comment_window(record: &BugRecord, window_end: DateTime<Utc>) -> Vec<&str> {
    record
        .comments
        .iter()
        .filter(|c| c.ts <= window_end)
        .map(|c| c.text.as_str())
        .collect()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAffected {
    ts: Option<DateTime<Utc>>,
    package: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    id: u64,
    reported_on: String,
    created_at: DateTime<Utc>,
    description: String,
    comments: Vec<Comment>,
    affected: Vec<RawAffected>,
    heat_snapshots: Vec<HeatSnapshot>,
    #[serde(default)]
    attrs: Option<HeatAttributes>,
}

const REQUIRED_KEYS: [&str; 7] = [
    "id",
    "reported_on",
    "created_at",
    "description",
    "comments",
    "affected",
    "heat_snapshots",
];

/// Parses one corpus line. `line_no` is 1-based and only used in errors.
pub fn parse_record(line: &str, line_no: usize) -> Result<BugRecord, CorpusError> {
    let malformed = |reason: String| CorpusError::MalformedLine(line_no, reason);
    let value: serde_json::Value =
        serde_json::from_str(line).map_err(|e| malformed(format!("invalid JSON: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| malformed("not a JSON object".into()))?;
    for key in REQUIRED_KEYS {
        if !obj.contains_key(key) {
            return Err(malformed(format!("missing {key}")));
        }
    }
    let raw: RawRecord = serde_json::from_value(value).map_err(|e| malformed(e.to_string()))?;
    if raw.id == 0 {
        return Err(malformed("id must be positive".into()));
    }
    if raw.comments.windows(2).any(|w| w[0].ts > w[1].ts) {
        return Err(malformed("comments not sorted by timestamp".into()));
    }
    let created_at = raw.created_at;
    Ok(BugRecord {
        id: raw.id,
        reported_on: raw.reported_on,
        created_at,
        description: raw.description,
        comments: raw.comments,
        affected: raw
            .affected
            .into_iter()
            .map(|a| AffectedPackage {
                ts: a.ts.unwrap_or(created_at),
                package: a.package,
            })
            .collect(),
        heat_snapshots: raw.heat_snapshots,
        attrs: raw.attrs,
    })
}

/// A validated collection of bug records with unique ids.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    records: Vec<BugRecord>,
    pub provenance: String,
}

impl Corpus {
    pub fn new(records: Vec<BugRecord>, provenance: impl Into<String>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if !seen.insert(r.id) {
                return Err(CorpusError::DuplicateId(r.id));
            }
        }
        Ok(Self {
            records,
            provenance: provenance.into(),
        })
    }

    pub fn records(&self) -> &[BugRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: u64) -> Option<&BugRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    /// Id → record lookup table.
    pub fn index(&self) -> std::collections::HashMap<u64, &BugRecord> {
        self.records.iter().map(|r| (r.id, r)).collect()
    }

    /// Drops bugs without any comment.
    pub fn with_comments(&self) -> Corpus {
        Corpus {
            records: self
                .records
                .iter()
                .filter(|r| !r.comments.is_empty())
                .cloned()
                .collect(),
            provenance: self.provenance.clone(),
        }
    }

    pub fn stats(&self) -> CorpusStats {
        CorpusStats::compute(self)
    }
}

/// Reads a JSON Lines corpus. Blank lines are skipped.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = parse_record(&line, i + 1)?;
        if !seen.insert(record.id) {
            return Err(CorpusError::DuplicateId(record.id));
        }
        records.push(record);
    }
    Ok(Corpus {
        records,
        provenance: path.display().to_string(),
    })
}

/// Writes one JSON object per record.
pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in &corpus.records {
        serde_json::to_writer(&mut w, r).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Summary statistics in the shape of the dataset table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub bugs: usize,
    pub mean_comments: f64,
    pub mean_description_words: f64,
    pub max_description_words: usize,
    pub mean_comment_words: f64,
    pub max_comment_words: usize,
    pub mean_affected_packages: f64,
}

impl CorpusStats {
    fn compute(corpus: &Corpus) -> Self {
        let n = corpus.len();
        let words = |s: &str| s.split_whitespace().count();
        let desc: Vec<usize> = corpus.records.iter().map(|r| words(&r.description)).collect();
        let comment_words: Vec<usize> = corpus
            .records
            .iter()
            .flat_map(|r| r.comments.iter().map(|c| words(&c.text)))
            .collect();
        let mean = |total: usize, count: usize| {
            if count == 0 {
                0.0
            } else {
                total as f64 / count as f64
            }
        };
        Self {
            bugs: n,
            mean_comments: mean(comment_words.len(), n),
            mean_description_words: mean(desc.iter().sum(), n),
            max_description_words: desc.iter().copied().max().unwrap_or(0),
            mean_comment_words: mean(comment_words.iter().sum(), comment_words.len()),
            max_comment_words: comment_words.iter().copied().max().unwrap_or(0),
            mean_affected_packages: mean(
                corpus.records.iter().map(|r| r.affected.len()).sum(),
                n,
            ),
        }
    }
}

/// A bug whose recorded heat disagrees with the heat recomputed from its attributes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HeatMismatch {
    pub id: u64,
    pub recorded: u64,
    pub recomputed: u64,
}

/// Checks the latest heat snapshot of every bug with attributes against [`compute_heat`].
pub fn validate_heat(corpus: &Corpus) -> Vec<HeatMismatch> {
    corpus
        .records
        .iter()
        .filter_map(|r| {
            let attrs = r.attrs.as_ref()?;
            let recorded = r.latest_heat()?;
            let recomputed = compute_heat(attrs);
            (recorded != recomputed).then_some(HeatMismatch {
                id: r.id,
                recorded,
                recomputed,
            })
        })
        .collect()
}
