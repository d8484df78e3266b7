//! Synthetic post streams with planted coordinated groups.
//!
//! Background users post values drawn from short-lived topical slices of a
//! large vocabulary at Poisson times, which yields the coincidental
//! synchronicity a detector must reject. Each planted group posts its shared
//! values within a jitter of scheduled bursts; burst `k` uses pool entry
//! `k mod pool_size`, so a pool as large as the burst count gives every burst
//! a fresh value while a pool of one reuses a single value throughout.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, Duration, Utc};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::actions::ActionType;
use crate::community::CommunityPartition;
use crate::error::{Error, Result};
use crate::ingest::{EventDataset, IngestSummary, PostRecord, Timeframe, UserProfile};

/// One planted coordinated group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub size: usize,
    pub action_type: ActionType,
    pub shared_value_pool_size: usize,
    pub burst_interval: u64,
    pub bursts: usize,
    pub jitter: u64,
}

fn default_vocab_size() -> usize {
    50_000
}

fn default_slot_seconds() -> u64 {
    600
}

fn default_event_id() -> String {
    "synthetic".to_string()
}

/// Full description of a synthetic campaign benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSpec {
    #[serde(default = "default_event_id")]
    pub event_id: String,
    pub n_background_users: usize,
    /// Posts per background user per hour (Poisson).
    pub background_rate: f64,
    pub duration_hours: f64,
    pub groups: Vec<GroupSpec>,
    pub seed: u64,
    /// Background vocabulary size; slices of it trend per time slot.
    #[serde(default = "default_vocab_size")]
    pub vocab_size: usize,
    /// Length of one trending slot.
    #[serde(default = "default_slot_seconds")]
    pub trend_slot_seconds: u64,
}

impl CampaignSpec {
    pub fn from_json(text: &str) -> Result<CampaignSpec> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("bad campaign spec: {e}")))
    }

    fn duration_seconds(&self) -> i64 {
        (self.duration_hours * 3600.0).round() as i64
    }

    pub fn validate(&self) -> Result<()> {
        if self.duration_hours <= 0.0 {
            return Err(Error::Config("duration must be positive".into()));
        }
        if self.background_rate < 0.0 {
            return Err(Error::Config("background rate must be nonnegative".into()));
        }
        for (i, g) in self.groups.iter().enumerate() {
            if g.size < 1 || g.bursts < 1 || g.shared_value_pool_size < 1 || g.burst_interval < 1 {
                return Err(Error::Config(format!("group {i}: all counts must be at least 1")));
            }
            if g.jitter >= g.burst_interval {
                return Err(Error::Config(format!(
                    "group {i}: jitter {}s must be below the burst interval {}s",
                    g.jitter, g.burst_interval
                )));
            }
            let span = (g.bursts as i64 - 1) * g.burst_interval as i64 + 2 * g.jitter as i64;
            if span >= self.duration_seconds() {
                return Err(Error::Config(format!(
                    "group {i}: burst schedule spans {span}s but the stream lasts {}s",
                    self.duration_seconds()
                )));
            }
        }
        Ok(())
    }
}

/// Planted membership: user id to group index.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub membership: BTreeMap<String, usize>,
}

impl GroundTruth {
    pub fn users(&self) -> BTreeSet<&str> {
        self.membership.keys().map(|s| s.as_str()).collect()
    }

    pub fn group_members(&self) -> BTreeMap<usize, Vec<&str>> {
        let mut out: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
        for (user, &g) in &self.membership {
            out.entry(g).or_default().push(user.as_str());
        }
        out
    }
}

const SYLLABLES: [&str; 16] = [
    "ka", "lo", "mi", "ra", "ven", "tor", "zu", "bel", "nas", "rio", "del", "pax", "mon", "tia",
    "ber", "sol",
];

const FILLER_WORDS: [&str; 24] = [
    "today", "people", "watch", "live", "breaking", "share", "friends", "news", "great", "real",
    "support", "stand", "together", "country", "state", "local", "update", "morning", "night",
    "love", "strong", "proud", "join", "voice",
];

const SLOGAN_WORDS: [&str; 12] = [
    "patriot", "freedom", "rally", "truth", "victory", "eagle", "liberty", "justice", "storm",
    "guard", "union", "banner",
];

fn group_slogans(group_idx: usize) -> (&'static str, &'static str) {
    let a = SLOGAN_WORDS[(group_idx * 2) % SLOGAN_WORDS.len()];
    let b = SLOGAN_WORDS[(group_idx * 2 + 1) % SLOGAN_WORDS.len()];
    (a, b)
}

fn synth_screen_name(rng: &mut ChaCha8Rng, flavor: Option<&str>) -> String {
    let mut name = String::new();
    if let Some(f) = flavor {
        name.push_str(f);
        name.push('_');
    }
    for _ in 0..rng.random_range(2..=3) {
        name.push_str(SYLLABLES[rng.random_range(0..SYLLABLES.len())]);
    }
    if rng.random_bool(0.5) {
        name.push_str(&rng.random_range(0..100u32).to_string());
    }
    name
}

fn filler_text(rng: &mut ChaCha8Rng, slogans: Option<(&str, &str)>) -> String {
    let mut words: Vec<&str> = Vec::new();
    if let Some((a, b)) = slogans {
        words.push(a);
        words.push(b);
    }
    for _ in 0..rng.random_range(3..=6) {
        words.push(FILLER_WORDS[rng.random_range(0..FILLER_WORDS.len())]);
    }
    words.join(" ")
}

fn entity_value(ty: ActionType, stem: &str) -> String {
    match ty {
        ActionType::Semantic => stem.to_string(),
        ActionType::Referral => format!("https://{stem}.example/{stem}-wire/"),
        ActionType::Social => format!("{stem}_feed"),
    }
}

fn planted_value(ty: ActionType, slogans: (&str, &str), pool_idx: usize) -> String {
    let (a, b) = slogans;
    match ty {
        ActionType::Semantic => format!("{a}{b}{pool_idx}"),
        ActionType::Referral => format!("https://{a}{b}.example/{a}-{b}-briefing-{pool_idx}/"),
        ActionType::Social => format!("{a}_{b}_hq_{pool_idx}"),
    }
}

fn make_post(
    post_id: String,
    user_id: &str,
    screen_name: &str,
    timestamp: DateTime<Utc>,
    text: String,
    ty: ActionType,
    value: String,
) -> PostRecord {
    let mut post = PostRecord {
        post_id,
        user_id: user_id.to_string(),
        screen_name: screen_name.to_string(),
        timestamp,
        text,
        hashtags: Vec::new(),
        urls: Vec::new(),
        mentions: Vec::new(),
        is_original: true,
    };
    match ty {
        ActionType::Semantic => post.hashtags.push(value),
        ActionType::Referral => post.urls.push(value),
        ActionType::Social => post.mentions.push(value),
    }
    post
}

/// Generate the synthetic stream and its planted ground truth.
///
/// Deterministic per seed: two calls with the same spec produce byte-identical
/// datasets.
pub fn generate(spec: &CampaignSpec) -> Result<(EventDataset, GroundTruth)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let start: DateTime<Utc> = DateTime::from_timestamp(1_614_556_800, 0).unwrap(); // 2021-03-01
    let duration = spec.duration_seconds();

    let slot_len = spec.trend_slot_seconds.max(1) as i64;
    let n_slots = ((duration + slot_len - 1) / slot_len).max(1) as usize;
    // The vocabulary is sliced so each (channel, slot) pair gets its own page
    // of values that trend only within that slot.
    let page = (spec.vocab_size / (n_slots * 3)).max(1);

    let mut posts: Vec<PostRecord> = Vec::new();
    let mut profiles: Vec<UserProfile> = Vec::new();
    let mut truth = GroundTruth::default();

    // Background stream.
    for u in 0..spec.n_background_users {
        let user_id = format!("bg{u:05}");
        let screen_name = synth_screen_name(&mut rng, None);
        let lambda = spec.background_rate * spec.duration_hours;
        let n_posts = if lambda > 0.0 {
            Poisson::new(lambda)
                .map_err(|e| Error::Config(format!("bad background rate: {e}")))?
                .sample(&mut rng) as usize
        } else {
            0
        };
        for k in 0..n_posts {
            let t = rng.random_range(0..duration.max(1));
            let slot = (t / slot_len) as usize;
            let ty = ActionType::ALL[rng.random_range(0..3)];
            let idx = rng.random_range(0..page);
            let stem = format!("{}{}s{}x{}", ty.as_str().chars().next().unwrap(), "w", slot, idx);
            let value = entity_value(ty, &stem);
            let text = filler_text(&mut rng, None);
            posts.push(make_post(
                format!("b{u:05}x{k:04}"),
                &user_id,
                &screen_name,
                start + Duration::seconds(t),
                text,
                ty,
                value,
            ));
        }
        let days_old = rng.random_range(30..1500);
        profiles.push(UserProfile {
            user_id,
            screen_name,
            created_at: Some(start - Duration::days(days_old)),
            suspended: rng.random_bool(0.03),
        });
    }

    // Planted groups.
    for (gi, group) in spec.groups.iter().enumerate() {
        let slogans = group_slogans(gi);
        let span = (group.bursts as i64 - 1) * group.burst_interval as i64 + group.jitter as i64;
        let t0 = rng.random_range(group.jitter as i64..(duration - span).max(group.jitter as i64 + 1));
        let member_names: Vec<(String, String)> = (0..group.size)
            .map(|m| {
                let user_id = format!("g{gi}m{m:03}");
                let flavor = if m % 2 == 0 { Some(slogans.0) } else { None };
                (user_id, synth_screen_name(&mut rng, flavor))
            })
            .collect();
        for (m, (user_id, screen_name)) in member_names.iter().enumerate() {
            for k in 0..group.bursts {
                let pool_idx = k % group.shared_value_pool_size;
                let value = planted_value(group.action_type, slogans, pool_idx);
                let jitter = group.jitter as i64;
                let offset = if jitter > 0 {
                    rng.random_range(-jitter..=jitter)
                } else {
                    0
                };
                let t = (t0 + k as i64 * group.burst_interval as i64 + offset)
                    .clamp(0, duration - 1);
                let text = filler_text(&mut rng, Some(slogans));
                posts.push(make_post(
                    format!("g{gi}m{m:03}b{k:03}"),
                    user_id,
                    screen_name,
                    start + Duration::seconds(t),
                    text,
                    group.action_type,
                    value,
                ));
            }
            let days_old = match m % 10 {
                0..=4 => rng.random_range(10..80),    // under three months
                5 | 6 => rng.random_range(100..170),  // three to six months
                _ => rng.random_range(200..600),      // older
            };
            profiles.push(UserProfile {
                user_id: user_id.clone(),
                screen_name: screen_name.clone(),
                created_at: Some(start - Duration::days(days_old)),
                suspended: rng.random_bool(0.25),
            });
            truth.membership.insert(user_id.clone(), gi);
        }
    }

    posts.sort_by(|a, b| (a.timestamp, &a.post_id).cmp(&(b.timestamp, &b.post_id)));
    let summary = IngestSummary {
        total_lines: posts.len(),
        kept: posts.len(),
        ..Default::default()
    };
    let dataset = EventDataset {
        event_id: spec.event_id.clone(),
        timeframe: Timeframe {
            start,
            end: start + Duration::seconds(duration),
        },
        posts,
        profiles,
        summary,
    };
    Ok((dataset, truth))
}

/// Write generated posts in the ingest JSONL schema.
pub fn write_posts_jsonl<W: Write>(dataset: &EventDataset, mut writer: W) -> Result<W> {
    for post in &dataset.posts {
        let line = serde_json::to_string(post)
            .map_err(|e| Error::Config(format!("serialize post: {e}")))?;
        writeln!(writer, "{line}").map_err(|e| Error::Io {
            path: Path::new("<writer>").to_path_buf(),
            source: e,
        })?;
    }
    Ok(writer)
}

/// Write generated profiles in the ingest JSONL schema.
pub fn write_profiles_jsonl<W: Write>(dataset: &EventDataset, mut writer: W) -> Result<W> {
    for profile in &dataset.profiles {
        let line = serde_json::to_string(profile)
            .map_err(|e| Error::Config(format!("serialize profile: {e}")))?;
        writeln!(writer, "{line}").map_err(|e| Error::Io {
            path: Path::new("<writer>").to_path_buf(),
            source: e,
        })?;
    }
    Ok(writer)
}

/// Ground truth as JSONL lines `{"user_id": ..., "group_id": ...}`.
pub fn write_truth_jsonl<W: Write>(truth: &GroundTruth, mut writer: W) -> Result<W> {
    for (user, group) in &truth.membership {
        writeln!(writer, r#"{{"user_id":"{user}","group_id":{group}}}"#).map_err(|e| {
            Error::Io {
                path: Path::new("<writer>").to_path_buf(),
                source: e,
            }
        })?;
    }
    Ok(writer)
}

/// Detection quality against planted membership.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Per planted group: largest fraction landing in one detected community.
    pub per_group_recovery: BTreeMap<usize, f64>,
    pub true_positives: usize,
    pub predicted_positives: usize,
    pub planted_users: usize,
    /// Set when the ground truth was empty and the score is undefined.
    pub undefined: bool,
}

/// Score detector output: planted users are positives, users present in any
/// filtered graph are predicted positives, and group recovery uses the
/// best-matching community across the provided partitions.
pub fn score(
    truth: &GroundTruth,
    predicted: &BTreeSet<String>,
    partitions: &[(ActionType, &CommunityPartition)],
) -> DetectionScore {
    let planted = truth.users();
    if planted.is_empty() {
        return DetectionScore {
            precision: 0.0,
            recall: 0.0,
            f1: 0.0,
            per_group_recovery: BTreeMap::new(),
            true_positives: 0,
            predicted_positives: predicted.len(),
            planted_users: 0,
            undefined: true,
        };
    }
    let tp = predicted
        .iter()
        .filter(|u| planted.contains(u.as_str()))
        .count();
    let precision = if predicted.is_empty() {
        0.0
    } else {
        tp as f64 / predicted.len() as f64
    };
    let recall = tp as f64 / planted.len() as f64;
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };

    let mut per_group_recovery = BTreeMap::new();
    for (group, members) in truth.group_members() {
        let mut best = 0usize;
        for (_, partition) in partitions {
            let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
            for member in &members {
                if let Some(&c) = partition.assignment.get(*member) {
                    *counts.entry(c).or_insert(0) += 1;
                }
            }
            if let Some(&top) = counts.values().max() {
                best = best.max(top);
            }
        }
        per_group_recovery.insert(group, best as f64 / members.len() as f64);
    }

    DetectionScore {
        precision,
        recall,
        f1,
        per_group_recovery,
        true_positives: tp,
        predicted_positives: predicted.len(),
        planted_users: planted.len(),
        undefined: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::extract_actions;
    use crate::graph::{build_graph, threshold_graph};

    fn group(ty: ActionType, size: usize, bursts: usize, pool: usize) -> GroupSpec {
        GroupSpec {
            size,
            action_type: ty,
            shared_value_pool_size: pool,
            burst_interval: 300,
            bursts,
            jitter: 30,
        }
    }

    fn small_spec() -> CampaignSpec {
        CampaignSpec {
            event_id: "synthetic".into(),
            n_background_users: 20,
            background_rate: 1.0,
            duration_hours: 2.0,
            groups: vec![group(ActionType::Semantic, 10, 5, 5)],
            seed: 11,
            vocab_size: 50_000,
            trend_slot_seconds: 600,
        }
    }

    #[test]
    fn infeasible_jitter_rejected() {
        let mut spec = small_spec();
        spec.groups[0].jitter = 300;
        assert!(matches!(generate(&spec), Err(Error::Config(_))));
    }

    #[test]
    fn null_campaign_has_no_planted_values() {
        let mut spec = small_spec();
        spec.groups.clear();
        let (dataset, truth) = generate(&spec).unwrap();
        assert!(truth.membership.is_empty());
        // With a 50k vocabulary and ~40 posts, expected collisions are below
        // one; verify nothing planted exists by construction.
        assert!(dataset.posts.iter().all(|p| p.user_id.starts_with("bg")));
    }

    #[test]
    fn planted_pairs_co_occur_in_every_burst() {
        // One 10-user group, 5 bursts, jitter 30s: every pair co-occurs at
        // least 5 times within any window of 60s or more.
        let mut spec = small_spec();
        spec.n_background_users = 0;
        let (dataset, _) = generate(&spec).unwrap();
        let events = extract_actions(&dataset, ActionType::Semantic);
        let graph = build_graph(ActionType::Semantic, &events, 60);
        let members: Vec<String> = (0..10).map(|m| format!("g0m{m:03}")).collect();
        let mut pairs = 0;
        for i in 0..members.len() {
            for j in (i + 1)..members.len() {
                let w = graph.weight(&members[i], &members[j]).unwrap_or(0);
                assert!(w >= 5, "pair ({i},{j}) weight {w}");
                pairs += 1;
            }
        }
        assert_eq!(pairs, 45);
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = small_spec();
        let (d1, t1) = generate(&spec).unwrap();
        let (d2, t2) = generate(&spec).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(d1.posts, d2.posts);
        assert_eq!(d1.profiles, d2.profiles);
        let mut buf1 = Vec::new();
        let mut buf2 = Vec::new();
        write_posts_jsonl(&d1, &mut buf1).unwrap();
        write_posts_jsonl(&d2, &mut buf2).unwrap();
        assert_eq!(buf1, buf2, "byte-identical output");
    }

    #[test]
    fn zero_background_recall_is_one_at_twice_jitter() {
        let mut spec = small_spec();
        spec.n_background_users = 0;
        spec.background_rate = 0.0;
        let (dataset, truth) = generate(&spec).unwrap();
        let events = extract_actions(&dataset, ActionType::Semantic);
        let graph = build_graph(ActionType::Semantic, &events, 60);
        let filtered = threshold_graph(&graph);
        let predicted: BTreeSet<String> =
            filtered.graph.nodes().map(|n| n.to_string()).collect();
        let s = score(&truth, &predicted, &[]);
        assert_eq!(s.recall, 1.0);
    }

    #[test]
    fn perfect_recovery_scores_one() {
        let mut truth = GroundTruth::default();
        truth.membership.insert("a".into(), 0);
        truth.membership.insert("b".into(), 0);
        let predicted: BTreeSet<String> = ["a".to_string(), "b".to_string()].into();
        let s = score(&truth, &predicted, &[]);
        assert_eq!(s.precision, 1.0);
        assert_eq!(s.recall, 1.0);
        assert_eq!(s.f1, 1.0);
    }

    #[test]
    fn flag_everyone_recall_one_precision_fraction() {
        let mut truth = GroundTruth::default();
        truth.membership.insert("a".into(), 0);
        let predicted: BTreeSet<String> =
            ["a", "x", "y", "z"].iter().map(|s| s.to_string()).collect();
        let s = score(&truth, &predicted, &[]);
        assert_eq!(s.recall, 1.0);
        assert!((s.precision - 0.25).abs() < 1e-12);
    }

    #[test]
    fn empty_truth_is_flagged_undefined() {
        let truth = GroundTruth::default();
        let s = score(&truth, &BTreeSet::new(), &[]);
        assert!(s.undefined);
    }
}
