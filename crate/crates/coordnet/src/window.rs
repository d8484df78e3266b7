//! Window-size selection by modularity sweep.
//!
//! Each candidate window builds, thresholds and clusters all three channel
//! networks; the candidate scoring the highest average modularity wins, ties
//! going to the smallest window.

use sha2::{Digest, Sha256};

use serde::{Deserialize, Serialize};

use crate::actions::{extract_actions_with, ActionType, ExtractOptions};
use crate::community::louvain;
use crate::error::{Error, Result};
use crate::graph::{build_graph_with, threshold_graph, WindowSemantics};
use crate::ingest::EventDataset;

/// Scores of one candidate window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowCandidate {
    pub window_seconds: u64,
    /// Modularity per channel, in [`ActionType::ALL`] order.
    pub q_by_type: [f64; 3],
    pub q_avg: f64,
    /// Channels whose filtered graph was empty and contributed Q = 0.
    pub empty_channels: Vec<ActionType>,
}

/// Outcome of [`sweep_windows`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSweepResult {
    /// Ascending by window size.
    pub candidates: Vec<WindowCandidate>,
    pub selected_window: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct SweepOptions {
    pub seed: u64,
    /// Fraction of posts kept, selected by a stable post-id hash.
    pub sample_fraction: f64,
    pub extract: ExtractOptions,
    /// Apply the link-strength threshold a second time before clustering.
    pub second_threshold_pass: bool,
    pub semantics: WindowSemantics,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            seed: 42,
            sample_fraction: 1.0,
            extract: ExtractOptions::default(),
            second_threshold_pass: false,
            semantics: WindowSemantics::Proximity,
        }
    }
}

/// Default sweep grid: 1–30 minutes with emphasis near five minutes.
pub const DEFAULT_SWEEP_WINDOWS: [u64; 8] = [60, 120, 180, 300, 600, 900, 1200, 1800];

/// Stable in-[0,1) hash of a post id, used for protocol-style subsampling.
pub fn post_hash_unit(post_id: &str) -> f64 {
    let digest = Sha256::digest(post_id.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_be_bytes(bytes) as f64 / (u64::MAX as f64 + 1.0)
}

fn subsample(dataset: &EventDataset, fraction: f64) -> EventDataset {
    let mut sampled = dataset.clone();
    sampled.posts.retain(|p| post_hash_unit(&p.post_id) < fraction);
    sampled
}

/// Score every candidate window and select the argmax of average modularity.
pub fn sweep_windows(
    dataset: &EventDataset,
    windows: &[u64],
    options: SweepOptions,
) -> Result<WindowSweepResult> {
    if windows.is_empty() {
        return Err(Error::Config("sweep needs at least one window".into()));
    }
    if let Some(&w) = windows.iter().find(|&&w| w < 1) {
        return Err(Error::Config(format!("window of {w}s is below one second")));
    }
    if !(0.0..=1.0).contains(&options.sample_fraction) {
        return Err(Error::Config(format!(
            "sample fraction {} outside [0, 1]",
            options.sample_fraction
        )));
    }

    let sampled;
    let data = if options.sample_fraction < 1.0 {
        sampled = subsample(dataset, options.sample_fraction);
        &sampled
    } else {
        dataset
    };

    // Events do not depend on the window; extract once per channel.
    let events_by_type: Vec<_> = ActionType::ALL
        .iter()
        .map(|&ty| extract_actions_with(data, ty, options.extract))
        .collect();

    let mut grid: Vec<u64> = windows.to_vec();
    grid.sort_unstable();
    grid.dedup();

    let mut candidates = Vec::with_capacity(grid.len());
    for &window in &grid {
        let mut q_by_type = [0.0f64; 3];
        let mut empty_channels = Vec::new();
        for (slot, &ty) in ActionType::ALL.iter().enumerate() {
            let graph = build_graph_with(ty, &events_by_type[slot], window, options.semantics);
            let mut outcome = threshold_graph(&graph);
            if options.second_threshold_pass && outcome.graph.edge_count() > 0 {
                outcome = threshold_graph(&outcome.graph);
            }
            if outcome.graph.edge_count() == 0 {
                empty_channels.push(ty);
                q_by_type[slot] = 0.0;
            } else {
                let partition = louvain(&outcome.graph, options.seed);
                q_by_type[slot] = partition.modularity;
            }
        }
        let q_avg = (q_by_type[0] + q_by_type[1] + q_by_type[2]) / 3.0;
        candidates.push(WindowCandidate {
            window_seconds: window,
            q_by_type,
            q_avg,
            empty_channels,
        });
    }

    // Argmax of the average; ties go to the smallest window, which ascending
    // iteration with a strict comparison provides.
    let mut selected = candidates[0].window_seconds;
    let mut best = candidates[0].q_avg;
    for c in &candidates[1..] {
        if c.q_avg > best {
            best = c.q_avg;
            selected = c.window_seconds;
        }
    }

    Ok(WindowSweepResult {
        candidates,
        selected_window: selected,
    })
}

/// Sweep table as CSV: `window_seconds,q_semantic,q_referral,q_social,q_avg`.
pub fn write_sweep_csv<W: std::io::Write>(
    result: &WindowSweepResult,
    writer: W,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["window_seconds", "q_semantic", "q_referral", "q_social", "q_avg"])?;
    for c in &result.candidates {
        w.write_record([
            c.window_seconds.to_string(),
            format!("{:.12}", c.q_by_type[0]),
            format!("{:.12}", c.q_by_type[1]),
            format!("{:.12}", c.q_by_type[2]),
            format!("{:.12}", c.q_avg),
        ])?;
    }
    w.flush()?;
    Ok(())
}
