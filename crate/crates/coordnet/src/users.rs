//! User-level analysis: account-age categories, screen-name entropy,
//! coordination strength, multi-channel participation and cross-event
//! overlaps.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::actions::ActionType;
use crate::error::{Error, Result};
use crate::graph::CoordinationGraph;
use crate::ingest::UserProfile;

/// Smoothed character probabilities learned from a screen-name corpus.
///
/// Add-one smoothing runs over the observed alphabet plus one UNKNOWN bucket,
/// so every character of any later name has positive probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharDistribution {
    probabilities: BTreeMap<char, f64>,
    unknown: f64,
    pub corpus_size: usize,
    /// Observed alphabet plus the UNKNOWN bucket.
    pub alphabet_size: usize,
}

impl CharDistribution {
    pub fn probability(&self, c: char) -> f64 {
        self.probabilities.get(&c).copied().unwrap_or(self.unknown)
    }

    pub fn unknown_probability(&self) -> f64 {
        self.unknown
    }

    /// Test shim: a distribution from explicit probabilities, bypassing
    /// smoothing (e.g. the idealized `P(a) = 1` case).
    pub fn from_probabilities(probabilities: BTreeMap<char, f64>, unknown: f64) -> Self {
        let alphabet_size = probabilities.len() + 1;
        CharDistribution {
            probabilities,
            unknown,
            corpus_size: 0,
            alphabet_size,
        }
    }
}

/// Build the character distribution from a corpus of screen names.
pub fn build_char_distribution<'a, I>(corpus: I) -> Result<CharDistribution>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut counts: BTreeMap<char, u64> = BTreeMap::new();
    let mut total_chars: u64 = 0;
    let mut corpus_size = 0usize;
    for name in corpus {
        corpus_size += 1;
        for c in name.chars() {
            *counts.entry(c).or_insert(0) += 1;
            total_chars += 1;
        }
    }
    if corpus_size == 0 || total_chars == 0 {
        return Err(Error::EmptyCorpus);
    }
    let alphabet = counts.len();
    let denom = (total_chars + alphabet as u64 + 1) as f64;
    let probabilities: BTreeMap<char, f64> = counts
        .into_iter()
        .map(|(c, n)| (c, (n + 1) as f64 / denom))
        .collect();
    Ok(CharDistribution {
        probabilities,
        unknown: 1.0 / denom,
        corpus_size,
        alphabet_size: alphabet + 1,
    })
}

/// Screen-name entropy in bits: `H = −Σ_i P(x_i)·log2 P(x_i)` summed over all
/// character positions, so longer names score higher. Empty names score 0.
pub fn screen_name_entropy(name: &str, dist: &CharDistribution) -> f64 {
    name.chars()
        .map(|c| {
            let p = dist.probability(c);
            -p * p.log2()
        })
        .sum()
}

/// Length-normalized variant (bits per character) for investigation.
pub fn screen_name_entropy_per_char(name: &str, dist: &CharDistribution) -> f64 {
    let n = name.chars().count();
    if n == 0 {
        0.0
    } else {
        screen_name_entropy(name, dist) / n as f64
    }
}

/// Account-age buckets relative to the event start; suspension wins over any
/// creation date.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgeCategory {
    Suspended,
    Lt3Months,
    Btw3And6Months,
    Gt6Months,
    Unknown,
}

impl AgeCategory {
    pub fn as_str(&self) -> &'static str {
        match self {
            AgeCategory::Suspended => "suspended",
            AgeCategory::Lt3Months => "lt_3_months",
            AgeCategory::Btw3And6Months => "btw_3_6_months",
            AgeCategory::Gt6Months => "gt_6_months",
            AgeCategory::Unknown => "unknown",
        }
    }
}

const DAYS_3_MONTHS: i64 = 91;
const DAYS_6_MONTHS: i64 = 182;

/// Bucket a profile by creation date versus event start. Months are fixed at
/// 91 and 182 days to avoid calendar ambiguity.
pub fn age_category(profile: Option<&UserProfile>, event_start: DateTime<Utc>) -> AgeCategory {
    let Some(profile) = profile else {
        return AgeCategory::Unknown;
    };
    if profile.suspended {
        return AgeCategory::Suspended;
    }
    let Some(created) = profile.created_at else {
        return AgeCategory::Unknown;
    };
    let days = (event_start - created).num_days();
    if days < DAYS_3_MONTHS {
        AgeCategory::Lt3Months
    } else if days < DAYS_6_MONTHS {
        AgeCategory::Btw3And6Months
    } else {
        AgeCategory::Gt6Months
    }
}

/// A user's footprint within one event.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventParticipation {
    pub types: BTreeSet<ActionType>,
    /// Sum of incident filtered-edge weights across the event's graphs.
    pub strength: u64,
}

/// Aggregated per-user annotation across all analyzed events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserAnnotation {
    pub user_id: String,
    /// Relative to the start of the earliest event the user coordinated in.
    pub age_category: AgeCategory,
    pub entropy_bits: f64,
    pub strength: u64,
    pub types_participated: BTreeSet<ActionType>,
    pub events_participated: BTreeSet<String>,
    pub per_event: BTreeMap<String, EventParticipation>,
}

/// Inputs for [`annotate_users`]. Graphs must be post-threshold.
pub struct AnnotateInput<'a> {
    pub profiles: &'a [UserProfile],
    /// Fallback screen names (e.g. from the post stream) for users without a
    /// profile.
    pub screen_names: &'a HashMap<&'a str, &'a str>,
    /// `(event_id, channel, filtered graph)` triples.
    pub graphs: &'a [(String, ActionType, &'a CoordinationGraph)],
    pub event_starts: &'a BTreeMap<String, DateTime<Utc>>,
    pub distribution: &'a CharDistribution,
    /// Report bits per character instead of the plain positional sum.
    pub per_char_entropy: bool,
}

/// Annotate every user that appears in at least one filtered graph.
pub fn annotate_users(input: &AnnotateInput<'_>) -> Vec<UserAnnotation> {
    let profile_by_id: HashMap<&str, &UserProfile> = input
        .profiles
        .iter()
        .map(|p| (p.user_id.as_str(), p))
        .collect();

    let mut per_user: BTreeMap<String, BTreeMap<String, EventParticipation>> = BTreeMap::new();
    for (event_id, ty, graph) in input.graphs {
        for (user, strength) in graph.strengths() {
            let entry = per_user
                .entry(user.to_string())
                .or_default()
                .entry(event_id.clone())
                .or_default();
            entry.types.insert(*ty);
            entry.strength += strength;
        }
    }

    per_user
        .into_iter()
        .map(|(user_id, per_event)| {
            let profile = profile_by_id.get(user_id.as_str()).copied();
            let earliest_start = per_event
                .keys()
                .filter_map(|e| input.event_starts.get(e))
                .min()
                .copied();
            let age = match earliest_start {
                Some(start) => age_category(profile, start),
                None => AgeCategory::Unknown,
            };
            let screen_name = profile
                .map(|p| p.screen_name.as_str())
                .filter(|s| !s.is_empty())
                .or_else(|| input.screen_names.get(user_id.as_str()).copied())
                .unwrap_or("");
            let entropy_bits = if input.per_char_entropy {
                screen_name_entropy_per_char(screen_name, input.distribution)
            } else {
                screen_name_entropy(screen_name, input.distribution)
            };
            let types_participated: BTreeSet<ActionType> = per_event
                .values()
                .flat_map(|p| p.types.iter().copied())
                .collect();
            let events_participated: BTreeSet<String> = per_event.keys().cloned().collect();
            let strength = per_event.values().map(|p| p.strength).sum();
            UserAnnotation {
                user_id,
                age_category: age,
                entropy_bits,
                strength,
                types_participated,
                events_participated,
                per_event,
            }
        })
        .collect()
}

/// Per-event participation breakdown.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EventParticipationStats {
    pub coordinating_users: usize,
    /// Users participating in exactly 1, 2 or 3 channels.
    pub by_type_count: BTreeMap<usize, usize>,
    pub fraction_by_type_count: BTreeMap<usize, f64>,
    /// Users participating in exactly the named pair of channels, keyed
    /// `"semantic+referral"` etc.
    pub two_type_pairs: BTreeMap<String, usize>,
}

/// Fig-style participation tables: per-event channel multiplicity and the
/// cross-event Venn cells.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParticipationReport {
    pub per_event: BTreeMap<String, EventParticipationStats>,
    /// Keyed by the sorted event subset joined with `+`; counts users whose
    /// events match the subset exactly.
    pub venn: BTreeMap<String, usize>,
    pub total_coordinating_users: usize,
}

pub fn participation_tables(annotations: &[UserAnnotation]) -> ParticipationReport {
    let mut report = ParticipationReport {
        total_coordinating_users: annotations.len(),
        ..Default::default()
    };
    for annotation in annotations {
        for (event, participation) in &annotation.per_event {
            let stats = report.per_event.entry(event.clone()).or_default();
            stats.coordinating_users += 1;
            *stats.by_type_count.entry(participation.types.len()).or_insert(0) += 1;
            if participation.types.len() == 2 {
                let mut names: Vec<&str> =
                    participation.types.iter().map(|t| t.as_str()).collect();
                names.sort_unstable();
                *stats.two_type_pairs.entry(names.join("+")).or_insert(0) += 1;
            }
        }
        let mut events: Vec<&str> = annotation
            .events_participated
            .iter()
            .map(|e| e.as_str())
            .collect();
        events.sort_unstable();
        *report.venn.entry(events.join("+")).or_insert(0) += 1;
    }
    for stats in report.per_event.values_mut() {
        let total = stats.coordinating_users as f64;
        for (&k, &n) in &stats.by_type_count {
            stats.fraction_by_type_count.insert(k, n as f64 / total);
        }
    }
    report
}

/// Annotations CSV: `user_id,age_category,entropy_bits,strength,types,events`.
pub fn write_annotations_csv<W: std::io::Write>(
    annotations: &[UserAnnotation],
    writer: W,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["user_id", "age_category", "entropy_bits", "strength", "types", "events"])?;
    for a in annotations {
        let types: Vec<&str> = a.types_participated.iter().map(|t| t.as_str()).collect();
        let events: Vec<&str> = a.events_participated.iter().map(|e| e.as_str()).collect();
        w.write_record([
            a.user_id.as_str(),
            a.age_category.as_str(),
            &format!("{:.9}", a.entropy_bits),
            &a.strength.to_string(),
            &types.join("+"),
            &events.join("+"),
        ])?;
    }
    w.flush()?;
    Ok(())
}
