//! Loading of line-delimited post and profile exports.
//!
//! Input files are UTF-8 JSONL, one record per line. Ingest keeps only
//! original posts, drops records that fail schema validation or fall outside
//! the declared timeframe, and reports exact counts so that
//! `kept + dropped_by_filter + dropped_malformed == total_lines` always holds.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One post as exported by an upstream collector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostRecord {
    pub post_id: String,
    pub user_id: String,
    #[serde(default)]
    pub screen_name: String,
    pub timestamp: DateTime<Utc>,
    #[serde(default)]
    pub text: String,
    #[serde(default)]
    pub hashtags: Vec<String>,
    #[serde(default)]
    pub urls: Vec<String>,
    #[serde(default)]
    pub mentions: Vec<String>,
    pub is_original: bool,
}

/// Account metadata collected separately from the post stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: String,
    #[serde(default)]
    pub screen_name: String,
    #[serde(default)]
    pub created_at: Option<DateTime<Utc>>,
    #[serde(default)]
    pub suspended: bool,
}

/// Closed interval of instants covered by an event collection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timeframe {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

impl Timeframe {
    pub fn contains(&self, t: DateTime<Utc>) -> bool {
        self.start <= t && t <= self.end
    }
}

/// Line-accounting produced by [`load_dataset`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub total_lines: usize,
    pub kept: usize,
    /// Valid records rejected by a filter: non-original posts plus posts
    /// outside the declared timeframe.
    pub dropped_by_filter: usize,
    pub dropped_malformed: usize,
    /// Subset of `dropped_by_filter`.
    pub dropped_not_original: usize,
    /// Subset of `dropped_by_filter`.
    pub dropped_outside_timeframe: usize,
    /// Subset of `dropped_malformed`: repeated post ids.
    pub duplicate_post_ids: usize,
    #[serde(default)]
    pub warnings: Vec<String>,
}

/// All posts and profiles of one collected event.
#[derive(Debug, Clone)]
pub struct EventDataset {
    pub event_id: String,
    pub timeframe: Timeframe,
    pub posts: Vec<PostRecord>,
    pub profiles: Vec<UserProfile>,
    pub summary: IngestSummary,
}

impl EventDataset {
    /// Lookup map from user id to screen name; profiles win, the post stream
    /// fills users without a profile.
    pub fn screen_names(&self) -> HashMap<&str, &str> {
        let mut names: HashMap<&str, &str> = HashMap::new();
        for post in &self.posts {
            if !post.screen_name.is_empty() {
                names.insert(&post.user_id, &post.screen_name);
            }
        }
        for profile in &self.profiles {
            if !profile.screen_name.is_empty() {
                names.insert(&profile.user_id, &profile.screen_name);
            }
        }
        names
    }
}

const MALFORMED_SAMPLE_CAP: usize = 5;

/// Parse a JSONL post export into an [`EventDataset`].
///
/// Only records with `is_original == true` are kept. When `timeframe` is
/// `None` it is inferred as the min/max timestamp of the kept posts (and no
/// record can be dropped as a straggler). More than 50% malformed lines is
/// treated as a corrupt file.
pub fn load_dataset(
    path: &Path,
    event_id: &str,
    timeframe: Option<Timeframe>,
) -> Result<EventDataset> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = BufReader::new(file);

    let mut summary = IngestSummary::default();
    let mut samples = Vec::new();
    let mut posts: Vec<PostRecord> = Vec::new();
    let mut seen_ids: HashMap<String, ()> = HashMap::new();

    for line in reader.lines() {
        let line = line.map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        summary.total_lines += 1;
        let record: PostRecord = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(_) => {
                summary.dropped_malformed += 1;
                if samples.len() < MALFORMED_SAMPLE_CAP {
                    samples.push(truncate(&line, 120));
                }
                continue;
            }
        };
        if !record.is_original {
            summary.dropped_by_filter += 1;
            summary.dropped_not_original += 1;
            continue;
        }
        if let Some(tf) = timeframe {
            if !tf.contains(record.timestamp) {
                summary.dropped_by_filter += 1;
                summary.dropped_outside_timeframe += 1;
                continue;
            }
        }
        if seen_ids.insert(record.post_id.clone(), ()).is_some() {
            summary.dropped_malformed += 1;
            summary.duplicate_post_ids += 1;
            continue;
        }
        summary.kept += 1;
        posts.push(record);
    }

    if summary.total_lines > 0 && summary.dropped_malformed * 2 > summary.total_lines {
        return Err(Error::CorruptInput {
            path: path.to_path_buf(),
            total: summary.total_lines,
            malformed: summary.dropped_malformed,
            samples,
        });
    }
    if summary.total_lines == 0 {
        summary
            .warnings
            .push(format!("{}: file contains no records", path.display()));
    }

    posts.sort_by(|a, b| (a.timestamp, &a.post_id).cmp(&(b.timestamp, &b.post_id)));

    let timeframe = timeframe.unwrap_or_else(|| infer_timeframe(&posts));
    Ok(EventDataset {
        event_id: event_id.to_string(),
        timeframe,
        posts,
        profiles: Vec::new(),
        summary,
    })
}

fn infer_timeframe(posts: &[PostRecord]) -> Timeframe {
    // Posts are sorted by timestamp at this point.
    match (posts.first(), posts.last()) {
        (Some(first), Some(last)) => Timeframe {
            start: first.timestamp,
            end: last.timestamp,
        },
        _ => Timeframe {
            start: DateTime::<Utc>::MIN_UTC,
            end: DateTime::<Utc>::MAX_UTC,
        },
    }
}

/// Line-accounting produced by [`load_profiles`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileSummary {
    pub total_lines: usize,
    pub loaded: usize,
    /// Lines whose user id repeated an earlier one; the last occurrence wins.
    pub duplicates: usize,
    /// Lines skipped because they were unparseable or missing `user_id`.
    pub skipped: usize,
}

/// Parse a JSONL profile export. Duplicate user ids keep the last occurrence.
pub fn load_profiles(path: &Path) -> Result<(Vec<UserProfile>, ProfileSummary)> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = BufReader::new(file);

    let mut summary = ProfileSummary::default();
    let mut profiles: Vec<UserProfile> = Vec::new();
    let mut index_of: HashMap<String, usize> = HashMap::new();

    for line in reader.lines() {
        let line = line.map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        summary.total_lines += 1;
        let profile: UserProfile = match serde_json::from_str(&line) {
            Ok(p) => p,
            Err(_) => {
                summary.skipped += 1;
                continue;
            }
        };
        if profile.user_id.is_empty() {
            summary.skipped += 1;
            continue;
        }
        match index_of.get(&profile.user_id) {
            Some(&i) => {
                summary.duplicates += 1;
                profiles[i] = profile;
            }
            None => {
                index_of.insert(profile.user_id.clone(), profiles.len());
                profiles.push(profile);
            }
        }
    }
    summary.loaded = profiles.len();
    Ok((profiles, summary))
}

fn truncate(s: &str, max: usize) -> String {
    if s.len() <= max {
        s.to_string()
    } else {
        let mut end = max;
        while !s.is_char_boundary(end) {
            end -= 1;
        }
        format!("{}…", &s[..end])
    }
}
