//! End-to-end pipeline: ingest → extract → (sweep | build) → threshold →
//! cluster → themes → user analysis, with per-stage artifact files and a
//! machine-readable manifest.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::actions::{
    extract_actions_with, ActionEvent, ActionType, ExtractOptions,
};
use crate::community::{louvain, CommunityPartition};
use crate::error::{Error, Result};
use crate::graph::{
    build_graph_with, graph_stats, threshold_graph, write_edge_csv, write_graphml,
    CoordinationGraph, GraphStageStats, Stage, WindowSemantics,
};
use crate::ingest::{load_dataset, load_profiles, EventDataset, IngestSummary, ProfileSummary, Timeframe};
use crate::synth::{self, CampaignSpec, DetectionScore};
use crate::themes::{
    default_stopwords, narrative_terms, screen_name_substrings, url_content_terms, ThemeSummary,
};
use crate::users::{
    annotate_users, build_char_distribution, participation_tables, write_annotations_csv,
    AgeCategory, AnnotateInput, ParticipationReport, UserAnnotation,
};
use crate::window::{sweep_windows, write_sweep_csv, SweepOptions, WindowSweepResult};

/// One event's input files and timeframe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventConfig {
    pub id: String,
    pub posts: PathBuf,
    #[serde(default)]
    pub profiles: Option<PathBuf>,
    /// RFC 3339; both bounds or neither.
    #[serde(default)]
    pub timeframe_start: Option<String>,
    #[serde(default)]
    pub timeframe_end: Option<String>,
}

fn default_seed() -> u64 {
    42
}

fn default_channels() -> Vec<ActionType> {
    ActionType::ALL.to_vec()
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_theme_top_k() -> usize {
    10
}

fn default_substring_min_len() -> usize {
    crate::themes::DEFAULT_SUBSTRING_MIN_LEN
}

/// Full run configuration; TOML and JSON share this schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub events: Vec<EventConfig>,
    #[serde(default)]
    pub window_seconds: Option<u64>,
    #[serde(default)]
    pub sweep_windows: Option<Vec<u64>>,
    #[serde(default)]
    pub sample_fraction: Option<f64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_channels")]
    pub channels: Vec<ActionType>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub url_verbatim: bool,
    /// Apply the link-strength threshold a second time before clustering.
    #[serde(default)]
    pub second_threshold_pass: bool,
    /// Pairwise-proximity (default) or tumbling-bucket window semantics.
    #[serde(default)]
    pub window_semantics: WindowSemantics,
    #[serde(default = "default_theme_top_k")]
    pub theme_top_k: usize,
    #[serde(default = "default_substring_min_len")]
    pub substring_min_len: usize,
    /// Optional screen-name corpus file (one name per line) for the entropy
    /// distribution; defaults to all screen names seen in the run.
    #[serde(default)]
    pub name_corpus: Option<PathBuf>,
    /// Report entropy as bits per character instead of the positional sum.
    #[serde(default)]
    pub entropy_per_char: bool,
    /// Also dump every extracted action event as CSV (full provenance
    /// stream).
    #[serde(default)]
    pub dump_actions: bool,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let config: RunConfig = match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => toml::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
            _ => serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
        };
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.events.is_empty() {
            return Err(Error::Config("at least one event is required".into()));
        }
        match (self.window_seconds, &self.sweep_windows) {
            (Some(_), Some(_)) => Err(Error::Config(
                "window_seconds and sweep_windows are mutually exclusive".into(),
            )),
            (None, None) => Err(Error::Config(
                "one of window_seconds or sweep_windows is required".into(),
            )),
            _ => Ok(()),
        }
    }

    pub fn timeframe_of(&self, event: &EventConfig) -> Result<Option<Timeframe>> {
        match (&event.timeframe_start, &event.timeframe_end) {
            (None, None) => Ok(None),
            (Some(s), Some(e)) => {
                let parse = |text: &str| -> Result<DateTime<Utc>> {
                    text.parse().map_err(|err| {
                        Error::Config(format!("event {}: bad timestamp {text:?}: {err}", event.id))
                    })
                };
                Ok(Some(Timeframe {
                    start: parse(s)?,
                    end: parse(e)?,
                }))
            }
            _ => Err(Error::Config(format!(
                "event {}: timeframe needs both bounds or neither",
                event.id
            ))),
        }
    }

    /// Hash of the canonical JSON form, recorded in the manifest.
    pub fn config_hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Per-channel detection results recorded in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelManifest {
    pub coordinated: GraphStageStats,
    pub filtered: GraphStageStats,
    pub threshold: u64,
    pub communities: usize,
    pub modularity: f64,
    #[serde(default)]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventManifest {
    pub ingest: IngestSummary,
    #[serde(default)]
    pub profile_summary: Option<ProfileSummary>,
    pub selected_window: u64,
    pub channels: BTreeMap<String, ChannelManifest>,
}

/// Machine-readable record of one run; every number in the rendered report
/// comes from here or from the sibling analysis JSON files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub channels: Vec<String>,
    pub events: BTreeMap<String, EventManifest>,
    pub files: Vec<String>,
    pub generated_at: String,
}

/// Per-event user-analysis digests plus the cross-event participation report.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub age_histogram: BTreeMap<String, BTreeMap<String, usize>>,
    pub entropy_mean_by_age: BTreeMap<String, BTreeMap<String, f64>>,
    pub strength_mean_by_age: BTreeMap<String, BTreeMap<String, f64>>,
    pub participation: ParticipationReport,
}

/// How much of the pipeline to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageSet {
    /// Ingest through clustering and graph exports.
    Detect,
    /// Everything, including themes and user analysis.
    Full,
}

/// In-memory results of a run, alongside the files written to `out_dir`.
#[derive(Debug)]
pub struct PipelineOutput {
    pub manifest: Manifest,
    pub sweeps: BTreeMap<String, WindowSweepResult>,
    pub filtered_graphs: Vec<(String, ActionType, CoordinationGraph)>,
    pub partitions: Vec<(String, ActionType, CommunityPartition)>,
    pub annotations: Vec<UserAnnotation>,
    pub analysis: Option<AnalysisReport>,
}

/// Tracks written files so a failed run can remove its partial outputs.
struct OutputTracker {
    dir: PathBuf,
    written: Vec<PathBuf>,
    names: Vec<String>,
}

impl OutputTracker {
    fn new(dir: &Path) -> Result<OutputTracker> {
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(OutputTracker {
            dir: dir.to_path_buf(),
            written: Vec::new(),
            names: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        self.written.push(path);
        self.names.push(name.to_string());
        Ok(())
    }

    fn cleanup(&self) {
        for path in &self.written {
            let _ = fs::remove_file(path);
        }
    }
}

/// Run the pipeline per the configuration, writing all exports plus the
/// manifest. On error all files written by this run are removed.
pub fn run_pipeline(config: &RunConfig, stages: StageSet) -> Result<PipelineOutput> {
    config.validate()?;
    let mut tracker = OutputTracker::new(&config.out_dir)?;
    match run_stages(config, stages, &mut tracker) {
        Ok(output) => Ok(output),
        Err(e) => {
            tracker.cleanup();
            Err(e)
        }
    }
}

fn run_stages(
    config: &RunConfig,
    stages: StageSet,
    tracker: &mut OutputTracker,
) -> Result<PipelineOutput> {
    let extract_options = ExtractOptions {
        url_verbatim: config.url_verbatim,
    };
    let mut manifest_events: BTreeMap<String, EventManifest> = BTreeMap::new();
    let mut sweeps: BTreeMap<String, WindowSweepResult> = BTreeMap::new();
    let mut datasets: Vec<EventDataset> = Vec::new();
    let mut filtered_graphs: Vec<(String, ActionType, CoordinationGraph)> = Vec::new();
    let mut partitions: Vec<(String, ActionType, CommunityPartition)> = Vec::new();
    let mut events_by_channel: HashMap<(String, ActionType), Vec<ActionEvent>> = HashMap::new();

    for event in &config.events {
        let stage = |s: &str| format!("{s}:{}", event.id);
        let timeframe = config.timeframe_of(event)?;
        let mut dataset = load_dataset(&event.posts, &event.id, timeframe)
            .map_err(|e| e.at_stage(stage("ingest")))?;
        let mut profile_summary = None;
        if let Some(profile_path) = &event.profiles {
            let (profiles, summary) =
                load_profiles(profile_path).map_err(|e| e.at_stage(stage("profiles")))?;
            dataset.profiles = profiles;
            profile_summary = Some(summary);
        }

        let selected_window = match (config.window_seconds, &config.sweep_windows) {
            (Some(w), None) => w,
            (None, Some(grid)) => {
                let result = sweep_windows(
                    &dataset,
                    grid,
                    SweepOptions {
                        seed: config.seed,
                        sample_fraction: config.sample_fraction.unwrap_or(1.0),
                        extract: extract_options,
                        second_threshold_pass: config.second_threshold_pass,
                        semantics: config.window_semantics,
                    },
                )
                .map_err(|e| e.at_stage(stage("sweep")))?;
                let mut csv_buf = Vec::new();
                write_sweep_csv(&result, &mut csv_buf)
                    .map_err(|e| Error::Config(format!("sweep csv: {e}")))?;
                tracker.write(&format!("{}.sweep.csv", event.id), &csv_buf)?;
                tracker.write(
                    &format!("{}.sweep.json", event.id),
                    to_pretty_json(&result)?.as_bytes(),
                )?;
                let selected = result.selected_window;
                sweeps.insert(event.id.clone(), result);
                selected
            }
            _ => unreachable!("validated"),
        };

        let mut channels: BTreeMap<String, ChannelManifest> = BTreeMap::new();
        for &channel in &config.channels {
            let events = extract_actions_with(&dataset, channel, extract_options);
            if config.dump_actions {
                let mut actions_buf = Vec::new();
                crate::actions::write_actions_csv(&events, &mut actions_buf)
                    .map_err(|e| Error::Config(format!("actions csv: {e}")))?;
                tracker.write(&format!("{}.{}.actions.csv", event.id, channel), &actions_buf)?;
            }
            let coordinated =
                build_graph_with(channel, &events, selected_window, config.window_semantics);
            let mut outcome = threshold_graph(&coordinated);
            let mut warnings: Vec<String> = outcome.warning.iter().cloned().collect();
            if config.second_threshold_pass && outcome.graph.edge_count() > 0 {
                let second = threshold_graph(&outcome.graph);
                outcome = crate::graph::ThresholdOutcome {
                    coordinated: outcome.coordinated,
                    ..second
                };
                warnings.extend(outcome.warning.iter().cloned());
            }
            let filtered_stats = graph_stats(&outcome.graph, Stage::Filtered);
            let partition = louvain(&outcome.graph, config.seed);
            if outcome.graph.edge_count() == 0 {
                warnings.push("filtered graph is empty; modularity reported as 0".to_string());
            }

            let mut edges_buf = Vec::new();
            write_edge_csv(&outcome.graph, &mut edges_buf)
                .map_err(|e| Error::Config(format!("edge csv: {e}")))?;
            tracker.write(&format!("{}.{}.edges.csv", event.id, channel), &edges_buf)?;
            let mut graphml_buf = Vec::new();
            write_graphml(&outcome.graph, &mut graphml_buf).map_err(|source| Error::Io {
                path: config.out_dir.join("graphml"),
                source,
            })?;
            tracker.write(&format!("{}.{}.graphml", event.id, channel), &graphml_buf)?;
            let mut partition_buf = Vec::new();
            write_partition_csv(&partition, &mut partition_buf)
                .map_err(|e| Error::Config(format!("partition csv: {e}")))?;
            tracker.write(
                &format!("{}.{}.partition.csv", event.id, channel),
                &partition_buf,
            )?;
            let mut size_histogram: BTreeMap<usize, usize> = BTreeMap::new();
            for &size in partition.community_sizes.values() {
                *size_histogram.entry(size).or_insert(0) += 1;
            }
            tracker.write(
                &format!("{}.{}.communities.json", event.id, channel),
                to_pretty_json(&serde_json::json!({
                    "modularity": partition.modularity,
                    "community_count": partition.community_count(),
                    "size_histogram": size_histogram,
                }))?
                .as_bytes(),
            )?;
            tracker.write(
                &format!("{}.{}.stats.json", event.id, channel),
                to_pretty_json(&serde_json::json!({
                    "coordinated": outcome.coordinated,
                    "filtered": filtered_stats,
                    "threshold": outcome.threshold,
                }))?
                .as_bytes(),
            )?;

            channels.insert(
                channel.as_str().to_string(),
                ChannelManifest {
                    coordinated: outcome.coordinated.clone(),
                    filtered: filtered_stats,
                    threshold: outcome.threshold,
                    communities: partition.community_count(),
                    modularity: partition.modularity,
                    warnings,
                },
            );
            events_by_channel.insert((event.id.clone(), channel), events);
            filtered_graphs.push((event.id.clone(), channel, outcome.graph));
            partitions.push((event.id.clone(), channel, partition));
        }

        manifest_events.insert(
            event.id.clone(),
            EventManifest {
                ingest: dataset.summary.clone(),
                profile_summary,
                selected_window,
                channels,
            },
        );
        datasets.push(dataset);
    }

    let (annotations, analysis) = if stages == StageSet::Full {
        run_analysis(config, &datasets, &filtered_graphs, &partitions, &events_by_channel, tracker)?
    } else {
        (Vec::new(), None)
    };

    let mut files = tracker.names.clone();
    files.push("manifest.json".to_string());
    files.sort();
    let manifest = Manifest {
        schema_version: 1,
        config_hash: config.config_hash(),
        seed: config.seed,
        channels: config.channels.iter().map(|c| c.as_str().to_string()).collect(),
        events: manifest_events,
        files,
        generated_at: Utc::now().to_rfc3339(),
    };
    tracker.write("manifest.json", to_pretty_json(&manifest)?.as_bytes())?;

    Ok(PipelineOutput {
        manifest,
        sweeps,
        filtered_graphs,
        partitions,
        annotations,
        analysis,
    })
}

type AnalysisOutput = (Vec<UserAnnotation>, Option<AnalysisReport>);

fn run_analysis(
    config: &RunConfig,
    datasets: &[EventDataset],
    filtered_graphs: &[(String, ActionType, CoordinationGraph)],
    partitions: &[(String, ActionType, CommunityPartition)],
    events_by_channel: &HashMap<(String, ActionType), Vec<ActionEvent>>,
    tracker: &mut OutputTracker,
) -> Result<AnalysisOutput> {
    // Themes per (event, channel, community).
    for dataset in datasets {
        let posts_by_id: HashMap<&str, &crate::ingest::PostRecord> =
            dataset.posts.iter().map(|p| (p.post_id.as_str(), p)).collect();
        for &channel in &config.channels {
            let key = (dataset.event_id.clone(), channel);
            let Some(events) = events_by_channel.get(&key) else {
                continue;
            };
            let graph = filtered_graphs
                .iter()
                .find(|(e, c, _)| *e == dataset.event_id && *c == channel)
                .map(|(_, _, g)| g);
            let partition = partitions
                .iter()
                .find(|(e, c, _)| *e == dataset.event_id && *c == channel)
                .map(|(_, _, p)| p);
            let (Some(graph), Some(partition)) = (graph, partition) else {
                continue;
            };
            let contributions = community_contributions(
                events,
                graph.window_seconds,
                config.window_semantics,
                graph,
                partition,
            );
            let mut summaries: Vec<ThemeSummary> = Vec::new();
            for (community, contribution) in contributions {
                let summary = match channel {
                    ActionType::Semantic => {
                        let texts: Vec<&str> = contribution
                            .post_ids
                            .iter()
                            .filter_map(|id| posts_by_id.get(id.as_str()))
                            .map(|p| p.text.as_str())
                            .collect();
                        narrative_terms(community, &texts, config.theme_top_k, default_stopwords())
                    }
                    ActionType::Referral => {
                        let urls: Vec<&str> =
                            contribution.values.iter().map(|v| v.as_str()).collect();
                        url_content_terms(community, &urls, config.theme_top_k)
                    }
                    ActionType::Social => {
                        let names: Vec<&str> =
                            contribution.values.iter().map(|v| v.as_str()).collect();
                        let mut s =
                            screen_name_substrings(community, &names, config.substring_min_len);
                        s.top_terms.truncate(config.theme_top_k);
                        s
                    }
                };
                summaries.push(summary);
            }
            tracker.write(
                &format!("{}.{}.themes.json", dataset.event_id, channel),
                to_pretty_json(&summaries)?.as_bytes(),
            )?;
        }
    }

    // Screen-name entropy distribution.
    let corpus: Vec<String> = match &config.name_corpus {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(str::to_string)
                .collect()
        }
        None => {
            let mut names: BTreeSet<String> = BTreeSet::new();
            for dataset in datasets {
                for (_, name) in dataset.screen_names() {
                    names.insert(name.to_string());
                }
            }
            names.into_iter().collect()
        }
    };
    let distribution = build_char_distribution(corpus.iter().map(|s| s.as_str()))
        .map_err(|e| e.at_stage("user-analysis"))?;

    let mut profiles = Vec::new();
    let mut screen_names: HashMap<&str, &str> = HashMap::new();
    for dataset in datasets {
        profiles.extend(dataset.profiles.iter().cloned());
        for (user, name) in dataset.screen_names() {
            screen_names.insert(user, name);
        }
    }
    let event_starts: BTreeMap<String, DateTime<Utc>> = datasets
        .iter()
        .map(|d| (d.event_id.clone(), d.timeframe.start))
        .collect();
    let graph_refs: Vec<(String, ActionType, &CoordinationGraph)> = filtered_graphs
        .iter()
        .map(|(e, c, g)| (e.clone(), *c, g))
        .collect();
    let annotations = annotate_users(&AnnotateInput {
        profiles: &profiles,
        screen_names: &screen_names,
        graphs: &graph_refs,
        event_starts: &event_starts,
        distribution: &distribution,
        per_char_entropy: config.entropy_per_char,
    });

    let mut annotations_buf = Vec::new();
    write_annotations_csv(&annotations, &mut annotations_buf)
        .map_err(|e| Error::Config(format!("annotations csv: {e}")))?;
    tracker.write("annotations.csv", &annotations_buf)?;

    let participation = participation_tables(&annotations);
    tracker.write("participation.json", to_pretty_json(&participation)?.as_bytes())?;

    // Age/entropy/strength digests per event.
    let mut analysis = AnalysisReport {
        participation,
        ..Default::default()
    };
    for dataset in datasets {
        let mut histogram: BTreeMap<String, usize> = BTreeMap::new();
        let mut entropy_sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
        let mut strength_sums: BTreeMap<String, (u64, usize)> = BTreeMap::new();
        for annotation in &annotations {
            let Some(participation) = annotation.per_event.get(&dataset.event_id) else {
                continue;
            };
            let bucket = annotation.age_category.as_str().to_string();
            *histogram.entry(bucket.clone()).or_insert(0) += 1;
            let e = entropy_sums.entry(bucket.clone()).or_insert((0.0, 0));
            e.0 += annotation.entropy_bits;
            e.1 += 1;
            let s = strength_sums.entry(bucket).or_insert((0, 0));
            s.0 += participation.strength;
            s.1 += 1;
        }
        for category in [
            AgeCategory::Suspended,
            AgeCategory::Lt3Months,
            AgeCategory::Btw3And6Months,
            AgeCategory::Gt6Months,
            AgeCategory::Unknown,
        ] {
            histogram.entry(category.as_str().to_string()).or_insert(0);
        }
        analysis
            .entropy_mean_by_age
            .insert(dataset.event_id.clone(), mean_map_f(&entropy_sums));
        analysis
            .strength_mean_by_age
            .insert(dataset.event_id.clone(), mean_map_u(&strength_sums));
        analysis.age_histogram.insert(dataset.event_id.clone(), histogram);
    }
    tracker.write("analysis.json", to_pretty_json(&analysis)?.as_bytes())?;
    Ok((annotations, Some(analysis)))
}

fn mean_map_f(sums: &BTreeMap<String, (f64, usize)>) -> BTreeMap<String, f64> {
    sums.iter()
        .map(|(k, (sum, n))| (k.clone(), if *n == 0 { 0.0 } else { sum / *n as f64 }))
        .collect()
}

fn mean_map_u(sums: &BTreeMap<String, (u64, usize)>) -> BTreeMap<String, f64> {
    sums.iter()
        .map(|(k, (sum, n))| (k.clone(), if *n == 0 { 0.0 } else { *sum as f64 / *n as f64 }))
        .collect()
}

/// Posts, values and users behind the surviving edges of one community.
#[derive(Debug, Clone, Default)]
pub struct CommunityContribution {
    pub post_ids: BTreeSet<String>,
    pub values: BTreeSet<String>,
    pub users: BTreeSet<String>,
}

/// Replay the pair sweep and collect, per community, everything that
/// contributed a surviving intra-community edge.
pub fn community_contributions(
    events: &[ActionEvent],
    window_seconds: u64,
    semantics: WindowSemantics,
    filtered: &CoordinationGraph,
    partition: &CommunityPartition,
) -> BTreeMap<usize, CommunityContribution> {
    let mut out: BTreeMap<usize, CommunityContribution> = BTreeMap::new();
    let mut groups: BTreeMap<&str, Vec<&ActionEvent>> = BTreeMap::new();
    for e in events {
        groups.entry(e.action_value.as_str()).or_default().push(e);
    }
    let window = window_seconds as i64;
    for (value, mut group) in groups {
        group.sort_by_key(|e| (e.timestamp, e.user_id.as_str(), e.post_id.as_str()));
        let mut lo = 0usize;
        for j in 1..group.len() {
            let tj = group[j].timestamp.timestamp();
            while !crate::graph::in_window(group[lo].timestamp.timestamp(), tj, window, semantics)
            {
                lo += 1;
            }
            for i in lo..j {
                let (a, b) = (group[i], group[j]);
                if a.user_id == b.user_id {
                    continue;
                }
                if filtered.weight(&a.user_id, &b.user_id).is_none() {
                    continue;
                }
                let (Some(&ca), Some(&cb)) = (
                    partition.assignment.get(&a.user_id),
                    partition.assignment.get(&b.user_id),
                ) else {
                    continue;
                };
                if ca != cb {
                    continue;
                }
                let entry = out.entry(ca).or_default();
                entry.post_ids.insert(a.post_id.clone());
                entry.post_ids.insert(b.post_id.clone());
                entry.values.insert(value.to_string());
                entry.users.insert(a.user_id.clone());
                entry.users.insert(b.user_id.clone());
            }
        }
    }
    out
}

/// Partition export: `user_id,community_id`.
pub fn write_partition_csv<W: std::io::Write>(
    partition: &CommunityPartition,
    writer: W,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["user_id", "community_id"])?;
    for (user, community) in &partition.assignment {
        w.write_record([user.as_str(), &community.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_pretty_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::Config(format!("serialize: {e}")))
}

/// Benchmark run: generate a campaign, write the data, run detection and
/// score against the planted truth.
pub struct BenchOutput {
    pub score: DetectionScore,
    pub manifest: Manifest,
    pub out_dir: PathBuf,
}

pub fn run_bench(
    spec: &CampaignSpec,
    window_seconds: Option<u64>,
    sweep: Option<Vec<u64>>,
    seed: u64,
    out_dir: &Path,
) -> Result<BenchOutput> {
    let (dataset, truth) = synth::generate(spec)?;
    fs::create_dir_all(out_dir).map_err(|source| Error::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let posts_path = out_dir.join("posts.jsonl");
    let profiles_path = out_dir.join("profiles.jsonl");
    let mut posts_buf = Vec::new();
    synth::write_posts_jsonl(&dataset, &mut posts_buf)?;
    fs::write(&posts_path, &posts_buf).map_err(|source| Error::Io {
        path: posts_path.clone(),
        source,
    })?;
    let mut profiles_buf = Vec::new();
    synth::write_profiles_jsonl(&dataset, &mut profiles_buf)?;
    fs::write(&profiles_path, &profiles_buf).map_err(|source| Error::Io {
        path: profiles_path.clone(),
        source,
    })?;
    let mut truth_buf = Vec::new();
    synth::write_truth_jsonl(&truth, &mut truth_buf)?;
    let truth_path = out_dir.join("truth.jsonl");
    fs::write(&truth_path, &truth_buf).map_err(|source| Error::Io {
        path: truth_path.clone(),
        source,
    })?;

    let config = RunConfig {
        events: vec![EventConfig {
            id: dataset.event_id.clone(),
            posts: posts_path,
            profiles: Some(profiles_path),
            timeframe_start: None,
            timeframe_end: None,
        }],
        window_seconds,
        sweep_windows: sweep,
        sample_fraction: None,
        seed,
        channels: default_channels(),
        out_dir: out_dir.to_path_buf(),
        url_verbatim: false,
        second_threshold_pass: false,
        window_semantics: WindowSemantics::Proximity,
        theme_top_k: default_theme_top_k(),
        substring_min_len: default_substring_min_len(),
        name_corpus: None,
        entropy_per_char: false,
        dump_actions: false,
    };
    let output = run_pipeline(&config, StageSet::Full)?;

    let predicted: BTreeSet<String> = output
        .filtered_graphs
        .iter()
        .flat_map(|(_, _, g)| g.nodes().map(|n| n.to_string()).collect::<Vec<_>>())
        .collect();
    let partition_refs: Vec<(ActionType, &CommunityPartition)> = output
        .partitions
        .iter()
        .map(|(_, c, p)| (*c, p))
        .collect();
    let score = synth::score(&truth, &predicted, &partition_refs);
    let score_json = to_pretty_json(&score)?;
    let score_path = out_dir.join("score.json");
    fs::write(&score_path, score_json.as_bytes()).map_err(|source| Error::Io {
        path: score_path,
        source,
    })?;
    Ok(BenchOutput {
        score,
        manifest: output.manifest,
        out_dir: out_dir.to_path_buf(),
    })
}
