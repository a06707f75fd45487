//! Discussion records: JSONL loading, topic filtering and character truncation.
//!
//! One record per line, field names exactly
//! `tweet_id, user_id, text, retweet_of_user, timestamp, hashtags, lang`.
//! `retweet_of_user` and `lang` may be absent or `null`.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("input file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid topic filter: {0}")]
    InvalidFilter(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// One post of a discussion.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub tweet_id: String,
    pub user_id: String,
    #[serde(default)]
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retweet_of_user: Option<String>,
    pub timestamp: i64,
    #[serde(default)]
    pub hashtags: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lang: Option<String>,
}

impl InteractionRecord {
    pub fn is_retweet(&self) -> bool {
        self.retweet_of_user.is_some()
    }

    /// Checks the per-record invariants. Hashtags are normalised to lowercase
    /// without a leading `#`.
    fn validate(mut self) -> Result<Self, String> {
        if self.tweet_id.is_empty() {
            return Err("empty tweet_id".into());
        }
        if self.user_id.is_empty() {
            return Err("empty user_id".into());
        }
        if let Some(target) = &self.retweet_of_user {
            if target.is_empty() {
                return Err("empty retweet_of_user".into());
            }
            if *target == self.user_id {
                return Err("user retweets itself".into());
            }
        } else if self.text.is_empty() {
            return Err("empty text on a non-retweet record".into());
        }
        for tag in &mut self.hashtags {
            *tag = tag.trim_start_matches('#').to_lowercase();
        }
        Ok(self)
    }
}

/// Character budget applied to every record text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MaxChars {
    Short140,
    Long280,
    #[default]
    Unlimited,
}

impl MaxChars {
    pub fn limit(self) -> Option<usize> {
        match self {
            MaxChars::Short140 => Some(140),
            MaxChars::Long280 => Some(280),
            MaxChars::Unlimited => None,
        }
    }

    pub fn from_limit(limit: Option<usize>) -> Result<Self, IngestError> {
        match limit {
            None => Ok(MaxChars::Unlimited),
            Some(140) => Ok(MaxChars::Short140),
            Some(280) => Ok(MaxChars::Long280),
            Some(other) => Err(IngestError::InvalidFilter(format!(
                "max_chars must be 140, 280 or unlimited, got {other}"
            ))),
        }
    }
}

impl std::str::FromStr for MaxChars {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unlimited" | "none" => Ok(MaxChars::Unlimited),
            other => {
                let n = other
                    .parse::<usize>()
                    .map_err(|_| IngestError::InvalidFilter(format!("bad max_chars value {other:?}")))?;
                MaxChars::from_limit(Some(n))
            }
        }
    }
}

/// Keeps the first `max` Unicode scalar values of `text`.
pub fn truncate_chars(text: &str, max: usize) -> &str {
    match text.char_indices().nth(max) {
        Some((byte, _)) => &text[..byte],
        None => text,
    }
}

/// A topic: hashtags and/or keywords observed inside a time window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicFilter {
    hashtags: HashSet<String>,
    keywords: Vec<String>,
    start: i64,
    end: i64,
    max_chars: MaxChars,
}

impl TopicFilter {
    pub fn new<H, K>(hashtags: H, keywords: K, window: (i64, i64), max_chars: MaxChars) -> Result<Self, IngestError>
    where
        H: IntoIterator,
        H::Item: AsRef<str>,
        K: IntoIterator,
        K::Item: AsRef<str>,
    {
        let hashtags: HashSet<String> = hashtags
            .into_iter()
            .map(|h| h.as_ref().trim_start_matches('#').to_lowercase())
            .filter(|h| !h.is_empty())
            .collect();
        let mut keywords: Vec<String> = keywords
            .into_iter()
            .map(|k| k.as_ref().to_lowercase())
            .filter(|k| !k.is_empty())
            .collect();
        keywords.sort();
        keywords.dedup();
        if hashtags.is_empty() && keywords.is_empty() {
            return Err(IngestError::InvalidFilter(
                "a topic needs at least one hashtag or keyword".into(),
            ));
        }
        let (start, end) = window;
        if start > end {
            return Err(IngestError::InvalidFilter(format!(
                "window start {start} is after end {end}"
            )));
        }
        Ok(Self {
            hashtags,
            keywords,
            start,
            end,
            max_chars,
        })
    }

    pub fn max_chars(&self) -> MaxChars {
        self.max_chars
    }

    pub fn window(&self) -> (i64, i64) {
        (self.start, self.end)
    }

    /// Topic and window membership; truncation is not considered here.
    pub fn matches(&self, record: &InteractionRecord) -> bool {
        if record.timestamp < self.start || record.timestamp > self.end {
            return false;
        }
        if record.hashtags.iter().any(|h| self.hashtags.contains(h.as_str())) {
            return true;
        }
        if self.keywords.is_empty() {
            return false;
        }
        let lowered = record.text.to_lowercase();
        self.keywords.iter().any(|k| lowered.contains(k.as_str()))
    }
}

/// How malformed lines are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    #[default]
    Lenient,
    FailFast,
}

#[derive(Debug, Clone, Default)]
pub struct LoadOutcome {
    pub records: Vec<InteractionRecord>,
    /// Lines that were not valid records (lenient mode only).
    pub malformed: usize,
    /// Valid records rejected by the topic filter.
    pub filtered_out: usize,
}

/// Applies a record-level character limit. Never splits a code point.
pub fn truncate_record(record: &mut InteractionRecord, max_chars: MaxChars) {
    if let Some(limit) = max_chars.limit() {
        let kept = truncate_chars(&record.text, limit).len();
        record.text.truncate(kept);
    }
}

/// Reads every valid record of a JSONL file, truncating texts to `max_chars`.
/// Blank lines and lines starting with `#` are skipped.
pub fn read_records(path: &Path, max_chars: MaxChars, mode: ParseMode) -> Result<LoadOutcome, IngestError> {
    scan(path, mode, |mut record| {
        truncate_record(&mut record, max_chars);
        Some(record)
    })
}

/// Reads the records of a JSONL file that belong to `filter`'s topic.
pub fn load_records(path: &Path, filter: &TopicFilter, mode: ParseMode) -> Result<LoadOutcome, IngestError> {
    scan(path, mode, |mut record| {
        if filter.matches(&record) {
            truncate_record(&mut record, filter.max_chars);
            Some(record)
        } else {
            None
        }
    })
}

fn scan<F>(path: &Path, mode: ParseMode, mut keep: F) -> Result<LoadOutcome, IngestError>
where
    F: FnMut(InteractionRecord) -> Option<InteractionRecord>,
{
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => IngestError::FileNotFound(path.to_path_buf()),
        _ => IngestError::Io(e),
    })?;
    let mut outcome = LoadOutcome::default();
    let mut seen_ids = HashSet::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let parsed = serde_json::from_str::<InteractionRecord>(&line)
            .map_err(|e| e.to_string())
            .and_then(InteractionRecord::validate)
            .and_then(|r| {
                if seen_ids.insert(r.tweet_id.clone()) {
                    Ok(r)
                } else {
                    Err(format!("duplicate tweet_id {}", r.tweet_id))
                }
            });
        match parsed {
            Ok(record) => match keep(record) {
                Some(r) => outcome.records.push(r),
                None => outcome.filtered_out += 1,
            },
            Err(message) => match mode {
                ParseMode::FailFast => return Err(IngestError::Parse { line: idx + 1, message }),
                ParseMode::Lenient => outcome.malformed += 1,
            },
        }
    }
    if outcome.malformed > 0 {
        log::warn!("{}: skipped {} malformed line(s)", path.display(), outcome.malformed);
    }
    Ok(outcome)
}

/// In-memory counterpart of [`load_records`] for already parsed records.
pub fn filter_records(records: &[InteractionRecord], filter: &TopicFilter) -> Vec<InteractionRecord> {
    records
        .iter()
        .filter(|r| filter.matches(r))
        .cloned()
        .map(|mut r| {
            truncate_record(&mut r, filter.max_chars);
            r
        })
        .collect()
}

pub fn write_records(path: &Path, records: &[InteractionRecord]) -> Result<(), IngestError> {
    let mut out = BufWriter::new(File::create(path)?);
    for record in records {
        serde_json::to_writer(&mut out, record).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub records: usize,
    pub distinct_users: usize,
    pub retweet_fraction: f64,
    pub first_timestamp: Option<i64>,
    pub last_timestamp: Option<i64>,
}

/// Table-style summary of a record set.
pub fn dataset_stats(records: &[InteractionRecord]) -> DatasetStats {
    if records.is_empty() {
        return DatasetStats::default();
    }
    let users: HashSet<&str> = records.iter().map(|r| r.user_id.as_str()).collect();
    let retweets = records.iter().filter(|r| r.is_retweet()).count();
    DatasetStats {
        records: records.len(),
        distinct_users: users.len(),
        retweet_fraction: retweets as f64 / records.len() as f64,
        first_timestamp: records.iter().map(|r| r.timestamp).min(),
        last_timestamp: records.iter().map(|r| r.timestamp).max(),
    }
}
