//! Detection and characterization of coordinated user groups in timestamped
//! post streams.
//!
//! The pipeline builds synchronized-action networks over three channels
//! (shared hashtags, shared URLs, shared @-mentions), selects the time window
//! by a modularity sweep, thresholds link strength at
//! `ceiling(mean + stdev)`, clusters the filtered networks with Louvain, and
//! characterizes the resulting groups and users. A synthetic campaign
//! generator with planted ground truth provides the verification substrate.

pub mod actions;
pub mod community;
pub mod error;
pub mod graph;
pub mod ingest;
pub mod pipeline;
pub mod report;
pub mod synth;
pub mod themes;
pub mod users;
pub mod window;

pub mod fixtures;

pub use actions::{extract_actions, extract_actions_with, ActionEvent, ActionType, ExtractOptions};
pub use community::{louvain, modularity_of, CommunityPartition};
pub use error::{Error, Result};
pub use graph::{build_graph, graph_stats, threshold_graph, CoordinationGraph, GraphStageStats};
pub use ingest::{load_dataset, load_profiles, EventDataset, PostRecord, Timeframe, UserProfile};
pub use pipeline::{run_bench, run_pipeline, Manifest, RunConfig, StageSet};
pub use synth::{generate, score, CampaignSpec, DetectionScore, GroundTruth, GroupSpec};
pub use users::{
    annotate_users, build_char_distribution, participation_tables, screen_name_entropy,
    AgeCategory, CharDistribution, UserAnnotation,
};
pub use window::{sweep_windows, SweepOptions, WindowSweepResult};
