//! Per-community theme summaries.
//!
//! Semantic communities are summarized by their most frequent narrative terms
//! (unigrams and bigrams after cleanup), referral communities by tokens from
//! URL contents with the base domain removed, and social communities by
//! common substrings of the mentioned screen names.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::actions::ActionType;

/// Ranked description of one community on one channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThemeSummary {
    pub community_id: usize,
    pub channel: ActionType,
    /// Sorted by count descending; ties prefer longer, then lexicographically
    /// smaller terms.
    pub top_terms: Vec<(String, u64)>,
    pub sample_values: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

const SAMPLE_CAP: usize = 8;
pub const DEFAULT_SUBSTRING_MIN_LEN: usize = 4;

/// Bundled English stop-word list (assets/stopwords_en.txt).
pub fn default_stopwords() -> &'static HashSet<&'static str> {
    static STOPWORDS: OnceLock<HashSet<&'static str>> = OnceLock::new();
    STOPWORDS.get_or_init(|| {
        include_str!("../assets/stopwords_en.txt")
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect()
    })
}

fn rank(counts: BTreeMap<String, u64>, k: usize) -> Vec<(String, u64)> {
    let mut terms: Vec<(String, u64)> = counts.into_iter().collect();
    terms.sort_by(|(ta, ca), (tb, cb)| {
        cb.cmp(ca)
            .then_with(|| tb.chars().count().cmp(&ta.chars().count()))
            .then_with(|| ta.cmp(tb))
    });
    terms.truncate(k);
    terms
}

fn sample<'a>(values: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for v in values {
        if out.len() == SAMPLE_CAP {
            break;
        }
        if !out.iter().any(|s| s == v) {
            out.push(v.to_string());
        }
    }
    out
}

/// Tokens of a post text with tweet artifacts (hashtags, mentions, URLs),
/// punctuation and stop words removed.
fn narrative_tokens(text: &str, stopwords: &HashSet<&str>) -> Vec<String> {
    let mut tokens = Vec::new();
    for raw in text.split_whitespace() {
        if raw.starts_with('#') || raw.starts_with('@') {
            continue;
        }
        let lower = raw.to_lowercase();
        if lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.")
        {
            continue;
        }
        for piece in lower.split(|c: char| !c.is_alphanumeric()) {
            if piece.chars().count() < 2 || stopwords.contains(piece) {
                continue;
            }
            tokens.push(piece.to_string());
        }
    }
    tokens
}

/// Top narrative terms of a community's post texts.
pub fn narrative_terms(
    community_id: usize,
    texts: &[&str],
    k: usize,
    stopwords: &HashSet<&str>,
) -> ThemeSummary {
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for text in texts {
        let tokens = narrative_tokens(text, stopwords);
        for token in &tokens {
            *counts.entry(token.clone()).or_insert(0) += 1;
        }
        for pair in tokens.windows(2) {
            *counts.entry(format!("{} {}", pair[0], pair[1])).or_insert(0) += 1;
        }
    }
    let note = if texts.is_empty() {
        Some("no texts available for this community".to_string())
    } else {
        None
    };
    ThemeSummary {
        community_id,
        channel: ActionType::Semantic,
        top_terms: rank(counts, k),
        sample_values: sample(texts.iter().copied()),
        note,
    }
}

/// Content of one URL with the base domain removed: path and query split on
/// separators, numeric-only and very short tokens dropped, joined by spaces.
/// Returns `None` when nothing remains.
pub fn url_content(raw: &str) -> Option<String> {
    let parsed = url::Url::parse(raw.trim()).ok()?;
    let mut remainder = parsed.path().to_string();
    if let Some(q) = parsed.query() {
        remainder.push('?');
        remainder.push_str(q);
    }
    let tokens: Vec<String> = remainder
        .to_lowercase()
        .split(['/', '-', '_', '.', '?', '&', '='])
        .filter(|t| t.chars().count() > 2 && !t.chars().all(|c| c.is_ascii_digit()))
        .map(|t| t.to_string())
        .collect();
    if tokens.is_empty() {
        None
    } else {
        Some(tokens.join(" "))
    }
}

/// Top URL-content tokens of a referral community.
pub fn url_content_terms(community_id: usize, urls: &[&str], k: usize) -> ThemeSummary {
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for url in urls {
        if let Some(content) = url_content(url) {
            for token in content.split(' ') {
                *counts.entry(token.to_string()).or_insert(0) += 1;
            }
        }
    }
    let note = if urls.is_empty() {
        Some("no URLs available for this community".to_string())
    } else {
        None
    };
    ThemeSummary {
        community_id,
        channel: ActionType::Referral,
        top_terms: rank(counts, k),
        sample_values: sample(urls.iter().copied()),
        note,
    }
}

/// Case-folded alphanumeric segments of a screen name; separators such as
/// `_` bound the substring search.
fn name_segments(name: &str) -> Vec<String> {
    name.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(|s| s.to_string())
        .collect()
}

/// All maximal common substrings of two segment lists with length of at
/// least `min_len`. Maximal means not contained in any longer common
/// substring of the same pair.
fn pair_maximal_common(a: &[String], b: &[String], min_len: usize) -> BTreeSet<String> {
    let mut common: BTreeSet<String> = BTreeSet::new();
    for sa in a {
        let ca: Vec<char> = sa.chars().collect();
        for sb in b {
            let cb: Vec<char> = sb.chars().collect();
            // Longest-common-suffix DP; a cell that cannot be extended to the
            // right marks the end of an occurrence-maximal match.
            let mut prev = vec![0usize; cb.len() + 1];
            for i in 0..ca.len() {
                let mut row = vec![0usize; cb.len() + 1];
                for j in 0..cb.len() {
                    if ca[i] == cb[j] {
                        row[j + 1] = prev[j] + 1;
                    }
                }
                prev = row.clone();
                for j in 0..cb.len() {
                    let len = row[j + 1];
                    if len < min_len {
                        continue;
                    }
                    let extendable = i + 1 < ca.len()
                        && j + 1 < cb.len()
                        && ca[i + 1] == cb[j + 1];
                    if !extendable {
                        common.insert(ca[i + 1 - len..=i].iter().collect());
                    }
                }
            }
        }
    }
    // Drop candidates contained in a longer common substring of this pair.
    let all: Vec<String> = common.iter().cloned().collect();
    common.retain(|c| !all.iter().any(|d| d.len() > c.len() && d.contains(c.as_str())));
    common
}

/// Common-substring summary of the screen names mentioned within a social
/// community. Substrings are ranked by how many distinct names contain them.
pub fn screen_name_substrings(
    community_id: usize,
    names: &[&str],
    min_len: usize,
) -> ThemeSummary {
    if names.len() < 2 {
        return ThemeSummary {
            community_id,
            channel: ActionType::Social,
            top_terms: Vec::new(),
            sample_values: sample(names.iter().copied()),
            note: Some("fewer than two names; no substring analysis".to_string()),
        };
    }
    let segments: Vec<Vec<String>> = names.iter().map(|n| name_segments(n)).collect();
    let mut candidates: BTreeSet<String> = BTreeSet::new();
    for i in 0..segments.len() {
        for j in (i + 1)..segments.len() {
            candidates.extend(pair_maximal_common(&segments[i], &segments[j], min_len));
        }
    }
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for candidate in candidates {
        let n = segments
            .iter()
            .filter(|segs| segs.iter().any(|s| s.contains(candidate.as_str())))
            .count() as u64;
        if n >= 2 {
            counts.insert(candidate, n);
        }
    }
    ThemeSummary {
        community_id,
        channel: ActionType::Social,
        top_terms: rank(counts, usize::MAX),
        sample_values: sample(names.iter().copied()),
        note: None,
    }
}
