//! Extraction of normalized action events from posts.
//!
//! Each coordination channel keys on one entity list: hashtags (semantic),
//! URLs (referral) and @-mentions (social). Values are normalized so that
//! platform-equivalent spellings collapse, and duplicate values within one
//! post collapse to a single event.

use std::collections::BTreeSet;
use std::io::Write;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::ingest::EventDataset;

/// The three coordination channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionType {
    Semantic,
    Referral,
    Social,
}

impl ActionType {
    pub const ALL: [ActionType; 3] = [ActionType::Semantic, ActionType::Referral, ActionType::Social];

    pub fn as_str(&self) -> &'static str {
        match self {
            ActionType::Semantic => "semantic",
            ActionType::Referral => "referral",
            ActionType::Social => "social",
        }
    }

    pub fn parse(s: &str) -> Option<ActionType> {
        match s.trim().to_ascii_lowercase().as_str() {
            "semantic" | "hashtag" | "hashtags" => Some(ActionType::Semantic),
            "referral" | "url" | "urls" => Some(ActionType::Referral),
            "social" | "mention" | "mentions" => Some(ActionType::Social),
            _ => None,
        }
    }
}

impl std::fmt::Display for ActionType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The atom of synchronization: one user performing one normalized action.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionEvent {
    pub user_id: String,
    pub action_type: ActionType,
    pub action_value: String,
    pub timestamp: DateTime<Utc>,
    pub post_id: String,
}

/// Normalization switches for [`extract_actions_with`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractOptions {
    /// Match URLs verbatim instead of stripping fragments and tracking
    /// parameters.
    pub url_verbatim: bool,
}

/// Extract all events of one channel with default normalization.
pub fn extract_actions(dataset: &EventDataset, action_type: ActionType) -> Vec<ActionEvent> {
    extract_actions_with(dataset, action_type, ExtractOptions::default())
}

/// Extract all events of one channel.
///
/// Output is sorted by `(action_value, timestamp, user_id, post_id)` and
/// contains at most one event per `(post, value)` pair.
pub fn extract_actions_with(
    dataset: &EventDataset,
    action_type: ActionType,
    options: ExtractOptions,
) -> Vec<ActionEvent> {
    let mut events = Vec::new();
    for post in &dataset.posts {
        let raw: &[String] = match action_type {
            ActionType::Semantic => &post.hashtags,
            ActionType::Referral => &post.urls,
            ActionType::Social => &post.mentions,
        };
        // Within-post duplicates collapse so a single post cannot inflate a
        // pair's synchronization weight.
        let mut values: BTreeSet<String> = BTreeSet::new();
        for value in raw {
            let normalized = match action_type {
                ActionType::Semantic => normalize_tag(value, '#'),
                ActionType::Social => normalize_tag(value, '@'),
                ActionType::Referral => normalize_url(value, options.url_verbatim),
            };
            if let Some(v) = normalized {
                values.insert(v);
            }
        }
        for value in values {
            events.push(ActionEvent {
                user_id: post.user_id.clone(),
                action_type,
                action_value: value,
                timestamp: post.timestamp,
                post_id: post.post_id.clone(),
            });
        }
    }
    events.sort_by(|a, b| {
        (&a.action_value, a.timestamp, &a.user_id, &a.post_id)
            .cmp(&(&b.action_value, b.timestamp, &b.user_id, &b.post_id))
    });
    events
}

/// Case-fold a hashtag or mention, stripping one leading sigil if present.
fn normalize_tag(raw: &str, sigil: char) -> Option<String> {
    let trimmed = raw.trim();
    let stripped = trimmed.strip_prefix(sigil).unwrap_or(trimmed);
    let folded = stripped.to_lowercase();
    if folded.is_empty() {
        None
    } else {
        Some(folded)
    }
}

const TRACKING_PARAMS: [&str; 2] = ["fbclid", "gclid"];

/// Normalize a URL: drop the fragment and tracking query parameters
/// (`utm_*`, `fbclid`, `gclid`), keep scheme/host/path and the remaining
/// query. Unparseable strings are kept verbatim so the value stays nonempty.
pub fn normalize_url(raw: &str, verbatim: bool) -> Option<String> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return None;
    }
    if verbatim {
        return Some(trimmed.to_string());
    }
    let mut parsed = match url::Url::parse(trimmed) {
        Ok(u) => u,
        Err(_) => return Some(trimmed.to_string()),
    };
    parsed.set_fragment(None);
    let kept: Vec<(String, String)> = parsed
        .query_pairs()
        .filter(|(k, _)| {
            let k = k.to_ascii_lowercase();
            !k.starts_with("utm_") && !TRACKING_PARAMS.contains(&k.as_str())
        })
        .map(|(k, v)| (k.into_owned(), v.into_owned()))
        .collect();
    if kept.is_empty() {
        parsed.set_query(None);
    } else {
        let mut serializer = url::form_urlencoded::Serializer::new(String::new());
        serializer.extend_pairs(kept);
        parsed.set_query(Some(&serializer.finish()));
    }
    let mut s = parsed.to_string();
    // `Url` appends a trailing slash to bare-host URLs; keep it, but strip a
    // dangling `?` if all parameters were removed.
    if s.ends_with('?') {
        s.pop();
    }
    Some(s)
}

/// Debug dump of events as CSV (`user_id,action_type,action_value,timestamp`).
pub fn write_actions_csv<W: Write>(events: &[ActionEvent], writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["user_id", "action_type", "action_value", "timestamp"])?;
    for e in events {
        w.write_record([
            e.user_id.as_str(),
            e.action_type.as_str(),
            e.action_value.as_str(),
            &e.timestamp.to_rfc3339(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
