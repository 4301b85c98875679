//! Temporal train/val/test selection and per-group log-rank targets.

use chrono::{DateTime, NaiveDate, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::corpus::{comment_window, Corpus};

/// Half-open interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

impl TimeWindow {
    pub fn contains(&self, t: DateTime<Utc>) -> bool {
        self.start <= t && t < self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankDirection {
    /// Rank 1 is the highest heat.
    #[default]
    MostSevereFirst,
    LeastSevereFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogBase {
    #[default]
    Natural,
    Two,
    Ten,
}

impl LogBase {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Two => x.log2(),
            LogBase::Ten => x.log10(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetOptions {
    pub direction: RankDirection,
    pub log_base: LogBase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub train_window: TimeWindow,
    /// Last instant (inclusive) of comments used for training-window bugs.
    pub train_comment_end: DateTime<Utc>,
    pub test_window: TimeWindow,
    pub test_comment_end: DateTime<Utc>,
    pub train_heat_crawl: NaiveDate,
    pub test_heat_crawl: NaiveDate,
    pub train_fraction: f64,
    pub seed: u64,
    /// Bipartite edge cutoff; defaults to `test_comment_end`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph_cutoff: Option<DateTime<Utc>>,
    #[serde(default)]
    pub targets: TargetOptions,
}

fn utc(y: i32, m: u32, d: u32, hh: u32, mm: u32, ss: u32) -> DateTime<Utc> {
    Utc.with_ymd_and_hms(y, m, d, hh, mm, ss).single().expect("valid timestamp")
}

impl Default for SplitSpec {
    /// Jan-Jun 2017 training bugs with comments through Jun 2018 and heat from Nov 2019;
    /// Jul-Dec 2018 test bugs with comments through Dec 2019 and heat from Nov 2020.
    fn default() -> Self {
        Self {
            train_window: TimeWindow {
                start: utc(2017, 1, 1, 0, 0, 0),
                end: utc(2017, 7, 1, 0, 0, 0),
            },
            train_comment_end: utc(2018, 6, 30, 23, 59, 59),
            test_window: TimeWindow {
                start: utc(2018, 7, 1, 0, 0, 0),
                end: utc(2019, 1, 1, 0, 0, 0),
            },
            test_comment_end: utc(2019, 12, 31, 23, 59, 59),
            train_heat_crawl: NaiveDate::from_ymd_opt(2019, 11, 30).expect("date"),
            test_heat_crawl: NaiveDate::from_ymd_opt(2020, 11, 30).expect("date"),
            train_fraction: 0.70,
            seed: 0,
            graph_cutoff: None,
            targets: TargetOptions::default(),
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::InvalidSpec(m.to_string()));
        if self.train_window.start >= self.train_window.end || self.test_window.start >= self.test_window.end {
            return bad("time windows must have start < end");
        }
        if self.train_window.end > self.test_window.start {
            return bad("train window must end before the test window starts");
        }
        if self.train_comment_end < self.train_window.start || self.test_comment_end < self.test_window.start {
            return bad("comment cutoffs must not precede their windows");
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad("train_fraction must lie in (0, 1)");
        }
        Ok(())
    }

    pub fn graph_cutoff(&self) -> DateTime<Utc> {
        self.graph_cutoff.unwrap_or(self.test_comment_end)
    }

    pub fn with_fraction(&self, fraction: f64) -> Self {
        Self {
            train_fraction: fraction,
            ..self.clone()
        }
    }
}

/// Bug ids per group, each sorted ascending except `train`/`val`, which keep shuffle order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Split {
    pub train: Vec<u64>,
    pub val: Vec<u64>,
    pub test: Vec<u64>,
}

impl Split {
    /// All selected ids, ascending.
    pub fn all_ids(&self) -> Vec<u64> {
        let mut ids: Vec<u64> = self.train.iter().chain(&self.val).chain(&self.test).copied().collect();
        ids.sort_unstable();
        ids
    }
}

/// Bugs with at least one comment inside their window: the training pool and the test group.
pub fn eligible_groups(corpus: &Corpus, spec: &SplitSpec) -> (Vec<u64>, Vec<u64>) {
    let mut pool = Vec::new();
    let mut test = Vec::new();
    for r in corpus.records() {
        if spec.train_window.contains(r.created_at) && !comment_window(r, spec.train_comment_end).is_empty() {
            pool.push(r.id);
        } else if spec.test_window.contains(r.created_at) && !comment_window(r, spec.test_comment_end).is_empty() {
            test.push(r.id);
        }
    }
    pool.sort_unstable();
    test.sort_unstable();
    (pool, test)
}

/// Shuffles the training pool by seed; the first `round(fraction · n)` bugs train, the rest validate.
pub fn temporal_split(corpus: &Corpus, spec: &SplitSpec) -> Result<Split, ExperimentError> {
    spec.validate()?;
    let (mut pool, test) = eligible_groups(corpus, spec);
    pool.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let n_train = (spec.train_fraction * pool.len() as f64).round() as usize;
    let val = pool.split_off(n_train);
    let split = Split { train: pool, val, test };
    for (name, group) in [("train", &split.train), ("val", &split.val), ("test", &split.test)] {
        if group.is_empty() {
            return Err(ExperimentError::EmptySplit(name));
        }
    }
    Ok(split)
}

/// ln(rank) with competition ranking: tied heats share the smallest rank of their block.
pub fn log_rank_targets(heats: &[u64], options: TargetOptions) -> Vec<f64> {
    let mut order: Vec<usize> = (0..heats.len()).collect();
    match options.direction {
        RankDirection::MostSevereFirst => order.sort_by(|&a, &b| heats[b].cmp(&heats[a])),
        RankDirection::LeastSevereFirst => order.sort_by(|&a, &b| heats[a].cmp(&heats[b])),
    }
    let mut ranks = vec![0usize; heats.len()];
    for (pos, &i) in order.iter().enumerate() {
        ranks[i] = if pos > 0 && heats[order[pos - 1]] == heats[i] {
            ranks[order[pos - 1]]
        } else {
            pos + 1
        };
    }
    ranks.iter().map(|&r| options.log_base.apply(r as f64)).collect()
}
