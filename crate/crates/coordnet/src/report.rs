//! Human-readable rendering of a run's machine-readable outputs.
//!
//! The renderer only formats numbers already present in the manifest and
//! analysis JSON files; it never recomputes anything.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::pipeline::{AnalysisReport, Manifest};
use crate::themes::ThemeSummary;

/// Reference band for network density in dense coordinated communities,
/// shown purely as an interpretation guide next to measured densities.
pub const DENSITY_REFERENCE_BAND: (f64, f64) = (0.022, 0.015);

/// Reference band for the screen-name entropy spread of the newest accounts,
/// shown purely as an interpretation guide.
pub const ENTROPY_REFERENCE_BAND: (f64, f64) = (1.42, 0.43);

/// Render the report for a finished run directory.
pub fn render_run_dir(dir: &Path) -> Result<String> {
    let manifest_path = dir.join("manifest.json");
    let manifest_text = fs::read_to_string(&manifest_path).map_err(|source| Error::Io {
        path: manifest_path.clone(),
        source,
    })?;
    let manifest: Manifest = serde_json::from_str(&manifest_text)
        .map_err(|e| Error::Config(format!("{}: {e}", manifest_path.display())))?;

    let analysis: Option<AnalysisReport> = {
        let path = dir.join("analysis.json");
        if path.exists() {
            let text = fs::read_to_string(&path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            Some(
                serde_json::from_str(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
            )
        } else {
            None
        }
    };

    let mut themes: Vec<(String, Vec<ThemeSummary>)> = Vec::new();
    for file in &manifest.files {
        if file.ends_with(".themes.json") {
            let path = dir.join(file);
            if let Ok(text) = fs::read_to_string(&path) {
                if let Ok(list) = serde_json::from_str::<Vec<ThemeSummary>>(&text) {
                    themes.push((file.clone(), list));
                }
            }
        }
    }
    Ok(render(&manifest, analysis.as_ref(), &themes))
}

/// Render from already-loaded values.
pub fn render(
    manifest: &Manifest,
    analysis: Option<&AnalysisReport>,
    themes: &[(String, Vec<ThemeSummary>)],
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "coordination run report");
    let _ = writeln!(out, "=======================");
    let _ = writeln!(out, "seed: {}", manifest.seed);
    let _ = writeln!(out, "config hash: {}", manifest.config_hash);
    let _ = writeln!(out, "channels: {}", manifest.channels.join(", "));

    for (event, ev) in &manifest.events {
        let _ = writeln!(out, "\nevent {event}");
        let _ = writeln!(out, "-------{}", "-".repeat(event.len()));
        let s = &ev.ingest;
        let _ = writeln!(
            out,
            "ingest: {} lines, {} kept, {} filtered, {} malformed",
            s.total_lines, s.kept, s.dropped_by_filter, s.dropped_malformed
        );
        let _ = writeln!(out, "window: {} s", ev.selected_window);
        let _ = writeln!(
            out,
            "{:<10} {:>12} {:>12} {:>12} {:>12} {:>9} {:>6} {:>8}",
            "channel", "coord nodes", "coord links", "filt nodes", "filt links", "density", "thr", "Q"
        );
        for (channel, ch) in &ev.channels {
            let _ = writeln!(
                out,
                "{:<10} {:>12} {:>12} {:>12} {:>12} {:>9.4} {:>6} {:>8.4}",
                channel,
                ch.coordinated.node_count,
                ch.coordinated.edge_count,
                ch.filtered.node_count,
                ch.filtered.edge_count,
                ch.filtered.density,
                ch.threshold,
                ch.modularity
            );
        }
        let _ = writeln!(
            out,
            "(reference: dense coordinated communities sit near D = {:.3} ± {:.3})",
            DENSITY_REFERENCE_BAND.0, DENSITY_REFERENCE_BAND.1
        );
    }

    if let Some(analysis) = analysis {
        let _ = writeln!(out, "\nuser analysis");
        let _ = writeln!(out, "-------------");
        for (event, histogram) in &analysis.age_histogram {
            let _ = writeln!(out, "event {event} account ages:");
            for (bucket, n) in histogram {
                let entropy = analysis
                    .entropy_mean_by_age
                    .get(event)
                    .and_then(|m| m.get(bucket));
                match entropy {
                    Some(e) if *n > 0 => {
                        let _ = writeln!(out, "  {bucket:<16} {n:>6}  mean entropy {e:.3} bits");
                    }
                    _ => {
                        let _ = writeln!(out, "  {bucket:<16} {n:>6}");
                    }
                }
            }
        }
        let _ = writeln!(
            out,
            "(reference: newest accounts typically spread around {:.2} ± {:.2} bits)",
            ENTROPY_REFERENCE_BAND.0, ENTROPY_REFERENCE_BAND.1
        );
        let participation = &analysis.participation;
        let _ = writeln!(
            out,
            "coordinating users across events: {}",
            participation.total_coordinating_users
        );
        for (event, stats) in &participation.per_event {
            let one = stats.fraction_by_type_count.get(&1).copied().unwrap_or(0.0);
            let two = stats.fraction_by_type_count.get(&2).copied().unwrap_or(0.0);
            let three = stats.fraction_by_type_count.get(&3).copied().unwrap_or(0.0);
            let _ = writeln!(
                out,
                "event {event}: {} users | 1-type {:.4} | 2-type {:.4} | 3-type {:.4}",
                stats.coordinating_users, one, two, three
            );
            for (pair, n) in &stats.two_type_pairs {
                let _ = writeln!(out, "  both {pair}: {n}");
            }
        }
        if !participation.venn.is_empty() {
            let _ = writeln!(out, "cross-event membership cells:");
            for (cell, n) in &participation.venn {
                let _ = writeln!(out, "  {cell}: {n}");
            }
        }
    }

    if !themes.is_empty() {
        let _ = writeln!(out, "\nthemes");
        let _ = writeln!(out, "------");
        for (file, list) in themes {
            let _ = writeln!(out, "{file}:");
            for theme in list {
                let terms: Vec<String> = theme
                    .top_terms
                    .iter()
                    .take(5)
                    .map(|(t, n)| format!("{t} ({n})"))
                    .collect();
                let _ = writeln!(
                    out,
                    "  community {} [{}]: {}",
                    theme.community_id,
                    theme.channel,
                    if terms.is_empty() {
                        "no terms".to_string()
                    } else {
                        terms.join(", ")
                    }
                );
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{GraphStageStats, Stage};
    use crate::pipeline::{ChannelManifest, EventManifest};
    use std::collections::BTreeMap;

    #[test]
    fn report_contains_only_manifest_numbers() {
        let stats = |n, e, stage| GraphStageStats {
            stage,
            node_count: n,
            edge_count: e,
            density: if n < 2 {
                0.0
            } else {
                2.0 * e as f64 / (n as f64 * (n as f64 - 1.0))
            },
        };
        let channel = ChannelManifest {
            coordinated: stats(430, 1920, Stage::Coordinated),
            filtered: stats(51, 97, Stage::Filtered),
            threshold: 4,
            communities: 3,
            modularity: 0.512345,
            warnings: vec![],
        };
        let mut channels = BTreeMap::new();
        channels.insert("semantic".to_string(), channel);
        let mut events = BTreeMap::new();
        events.insert(
            "ev1".to_string(),
            EventManifest {
                ingest: Default::default(),
                profile_summary: None,
                selected_window: 300,
                channels,
            },
        );
        let manifest = Manifest {
            schema_version: 1,
            config_hash: "cafe".into(),
            seed: 42,
            channels: vec!["semantic".into()],
            events,
            files: vec![],
            generated_at: "now".into(),
        };
        let text = render(&manifest, None, &[]);
        assert!(text.contains("430"));
        assert!(text.contains("1920"));
        assert!(text.contains("0.5123"));
        assert!(text.contains("window: 300 s"));
    }
}
