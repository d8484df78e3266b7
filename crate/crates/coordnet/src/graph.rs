//! Synchronized-action graph construction, thresholding and stage statistics.
//!
//! Nodes are users; an edge means two distinct users performed the same
//! action value within the time window, weighted by how many times that
//! happened. Weights are filtered by `ceiling(mean + population stdev)` of the
//! graph's own weight distribution, so the cutoff adapts to each network.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::actions::{ActionEvent, ActionType};

/// Per-edge payload: accumulated weight plus a bounded sample of the action
/// values that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeData {
    pub weight: u64,
    pub provenance: Vec<String>,
}

pub const PROVENANCE_CAP: usize = 10;

/// Weighted undirected user–user graph for one (event, channel) pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoordinationGraph {
    pub action_type: ActionType,
    pub window_seconds: u64,
    nodes: BTreeSet<String>,
    edges: BTreeMap<(String, String), EdgeData>,
}

impl CoordinationGraph {
    pub fn new(action_type: ActionType, window_seconds: u64) -> Self {
        CoordinationGraph {
            action_type,
            window_seconds,
            nodes: BTreeSet::new(),
            edges: BTreeMap::new(),
        }
    }

    /// Add `weight` between two distinct users, creating the edge if needed.
    pub fn add_weight(&mut self, a: &str, b: &str, weight: u64, value: Option<&str>) {
        assert_ne!(a, b, "self-loops are not representable");
        let key = ordered_pair(a, b);
        self.nodes.insert(key.0.clone());
        self.nodes.insert(key.1.clone());
        let entry = self.edges.entry(key).or_insert(EdgeData {
            weight: 0,
            provenance: Vec::new(),
        });
        entry.weight += weight;
        if let Some(v) = value {
            if entry.provenance.len() < PROVENANCE_CAP && !entry.provenance.iter().any(|p| p == v) {
                entry.provenance.push(v.to_string());
            }
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(|s| s.as_str())
    }

    pub fn contains_node(&self, user: &str) -> bool {
        self.nodes.contains(user)
    }

    /// Edges in deterministic `(user_a, user_b)` order with `user_a < user_b`.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, &EdgeData)> {
        self.edges
            .iter()
            .map(|((a, b), d)| (a.as_str(), b.as_str(), d))
    }

    pub fn weight(&self, a: &str, b: &str) -> Option<u64> {
        self.edges.get(&ordered_pair(a, b)).map(|d| d.weight)
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.values().map(|d| d.weight).sum()
    }

    /// Sum of incident edge weights per node.
    pub fn strengths(&self) -> BTreeMap<&str, u64> {
        let mut out: BTreeMap<&str, u64> = BTreeMap::new();
        for ((a, b), d) in &self.edges {
            *out.entry(a.as_str()).or_insert(0) += d.weight;
            *out.entry(b.as_str()).or_insert(0) += d.weight;
        }
        out
    }
}

fn ordered_pair(a: &str, b: &str) -> (String, String) {
    if a < b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

/// How two timestamps count as synchronized.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowSemantics {
    /// Pairwise temporal proximity: `|t_i − t_j| <= window`. No bucket
    /// boundary artifacts.
    #[default]
    Proximity,
    /// Both events fall in the same `window`-sized bucket of the epoch
    /// timeline; kept for comparison runs.
    Tumbling,
}

/// Build the coordination graph from one channel's events.
///
/// For each action value, every pair of events by distinct users whose
/// timestamps differ by at most `window_seconds` adds one unit of weight to
/// that user pair; a given unordered post pair contributes at most once per
/// value.
pub fn build_graph(
    action_type: ActionType,
    events: &[ActionEvent],
    window_seconds: u64,
) -> CoordinationGraph {
    build_graph_with(action_type, events, window_seconds, WindowSemantics::Proximity)
}

/// [`build_graph`] with selectable window semantics.
pub fn build_graph_with(
    action_type: ActionType,
    events: &[ActionEvent],
    window_seconds: u64,
    semantics: WindowSemantics,
) -> CoordinationGraph {
    assert!(window_seconds >= 1, "window must be at least one second");
    let mut graph = CoordinationGraph::new(action_type, window_seconds);

    // Events arrive sorted by (value, timestamp); group runs by value and
    // re-sort each run defensively so the pair sweep never misses.
    let mut groups: BTreeMap<&str, Vec<&ActionEvent>> = BTreeMap::new();
    for e in events {
        groups.entry(e.action_value.as_str()).or_default().push(e);
    }

    let window = window_seconds as i64;
    for (value, mut group) in groups {
        group.sort_by_key(|e| (e.timestamp, e.user_id.as_str(), e.post_id.as_str()));
        let mut seen_post_pairs: HashSet<(&str, &str)> = HashSet::new();
        let mut lo = 0usize;
        for j in 1..group.len() {
            let tj = group[j].timestamp.timestamp();
            while !in_window(group[lo].timestamp.timestamp(), tj, window, semantics) {
                lo += 1;
            }
            for i in lo..j {
                let a = group[i];
                let b = group[j];
                if a.user_id == b.user_id {
                    continue;
                }
                let post_pair = if a.post_id <= b.post_id {
                    (a.post_id.as_str(), b.post_id.as_str())
                } else {
                    (b.post_id.as_str(), a.post_id.as_str())
                };
                if seen_post_pairs.insert(post_pair) {
                    graph.add_weight(&a.user_id, &b.user_id, 1, Some(value));
                }
            }
        }
    }
    graph
}

/// Whether an earlier event at `ti` pairs with one at `tj >= ti`. Both
/// predicates are monotone in `ti`, which the two-pointer sweep relies on.
pub(crate) fn in_window(ti: i64, tj: i64, window: i64, semantics: WindowSemantics) -> bool {
    match semantics {
        WindowSemantics::Proximity => tj - ti <= window,
        WindowSemantics::Tumbling => ti.div_euclid(window) == tj.div_euclid(window),
    }
}

/// Pipeline stage a statistics snapshot belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Coordinated,
    Filtered,
}

/// Node/link counts and density of a graph at one pipeline stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStageStats {
    pub stage: Stage,
    pub node_count: usize,
    pub edge_count: usize,
    pub density: f64,
}

/// Counts and density (`2E / (N·(N−1))`, 0 when fewer than 2 nodes).
pub fn graph_stats(graph: &CoordinationGraph, stage: Stage) -> GraphStageStats {
    let n = graph.node_count();
    let e = graph.edge_count();
    let density = if n < 2 {
        0.0
    } else {
        2.0 * e as f64 / (n as f64 * (n as f64 - 1.0))
    };
    GraphStageStats {
        stage,
        node_count: n,
        edge_count: e,
        density,
    }
}

/// Result of one thresholding pass.
#[derive(Debug, Clone)]
pub struct ThresholdOutcome {
    pub graph: CoordinationGraph,
    pub threshold: u64,
    pub coordinated: GraphStageStats,
    pub filtered: GraphStageStats,
    pub warning: Option<String>,
}

/// Keep edges whose weight is at least `ceiling(mean + population stdev)` of
/// the input graph's weights; isolated nodes are dropped.
pub fn threshold_graph(graph: &CoordinationGraph) -> ThresholdOutcome {
    let coordinated = graph_stats(graph, Stage::Coordinated);
    let weights: Vec<u64> = graph.edges.values().map(|d| d.weight).collect();
    if weights.is_empty() {
        let empty = CoordinationGraph::new(graph.action_type, graph.window_seconds);
        let filtered = graph_stats(&empty, Stage::Filtered);
        return ThresholdOutcome {
            graph: empty,
            threshold: 0,
            coordinated,
            filtered,
            warning: Some("threshold skipped: graph has no edges".to_string()),
        };
    }
    let threshold = weight_threshold(&weights);
    let mut filtered_graph = CoordinationGraph::new(graph.action_type, graph.window_seconds);
    for ((a, b), d) in &graph.edges {
        if d.weight >= threshold {
            let key = (a.clone(), b.clone());
            filtered_graph.nodes.insert(key.0.clone());
            filtered_graph.nodes.insert(key.1.clone());
            filtered_graph.edges.insert(key, d.clone());
        }
    }
    let filtered = graph_stats(&filtered_graph, Stage::Filtered);
    ThresholdOutcome {
        graph: filtered_graph,
        threshold,
        coordinated,
        filtered,
        warning: None,
    }
}

/// `ceiling(mean + population standard deviation)` of a weight multiset.
pub fn weight_threshold(weights: &[u64]) -> u64 {
    let n = weights.len() as f64;
    let mean = weights.iter().map(|&w| w as f64).sum::<f64>() / n;
    let var = weights
        .iter()
        .map(|&w| {
            let d = w as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / n;
    (mean + var.sqrt()).ceil() as u64
}

/// Weighted edge list as CSV: `user_a,user_b,weight`.
pub fn write_edge_csv<W: Write>(graph: &CoordinationGraph, writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["user_a", "user_b", "weight"])?;
    for (a, b, d) in graph.edges() {
        w.write_record([a, b, &d.weight.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Rebuild a graph from an edge-list CSV produced by [`write_edge_csv`].
pub fn read_edge_csv<R: std::io::Read>(
    reader: R,
    action_type: ActionType,
    window_seconds: u64,
) -> csv::Result<CoordinationGraph> {
    let mut graph = CoordinationGraph::new(action_type, window_seconds);
    let mut r = csv::Reader::from_reader(reader);
    for record in r.records() {
        let record = record?;
        let weight: u64 = record
            .get(2)
            .and_then(|w| w.parse().ok())
            .unwrap_or(0);
        if let (Some(a), Some(b)) = (record.get(0), record.get(1)) {
            if weight > 0 && a != b {
                graph.add_weight(a, b, weight, None);
            }
        }
    }
    Ok(graph)
}

/// GraphML export with a `weight` edge attribute.
pub fn write_graphml<W: Write>(graph: &CoordinationGraph, mut writer: W) -> std::io::Result<()> {
    writeln!(writer, r#"<?xml version="1.0" encoding="UTF-8"?>"#)?;
    writeln!(
        writer,
        r#"<graphml xmlns="http://graphml.graphdrawing.org/xmlns">"#
    )?;
    writeln!(
        writer,
        r#"  <key id="w" for="edge" attr.name="weight" attr.type="long"/>"#
    )?;
    writeln!(writer, r#"  <graph edgedefault="undirected">"#)?;
    for node in graph.nodes() {
        writeln!(writer, r#"    <node id="{}"/>"#, xml_escape(node))?;
    }
    for (a, b, d) in graph.edges() {
        writeln!(
            writer,
            r#"    <edge source="{}" target="{}"><data key="w">{}</data></edge>"#,
            xml_escape(a),
            xml_escape(b),
            d.weight
        )?;
    }
    writeln!(writer, "  </graph>")?;
    writeln!(writer, "</graphml>")?;
    Ok(())
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{DateTime, Utc};
    use proptest::prelude::*;

    fn ev(user: &str, value: &str, secs: i64, post: &str) -> ActionEvent {
        ActionEvent {
            user_id: user.into(),
            action_type: ActionType::Semantic,
            action_value: value.into(),
            timestamp: DateTime::<Utc>::from_timestamp(1_600_000_000 + secs, 0).unwrap(),
            post_id: post.into(),
        }
    }

    fn sort_events(mut events: Vec<ActionEvent>) -> Vec<ActionEvent> {
        events.sort_by(|a, b| {
            (&a.action_value, a.timestamp, &a.user_id).cmp(&(&b.action_value, b.timestamp, &b.user_id))
        });
        events
    }

    /// Independent O(n²) oracle: check all event pairs, enforcing the
    /// distinct-user and once-per-post-pair-per-value rules.
    fn brute_force(events: &[ActionEvent], window: u64) -> BTreeMap<(String, String), u64> {
        let mut weights: BTreeMap<(String, String), u64> = BTreeMap::new();
        let mut seen: HashSet<(String, String, String)> = HashSet::new();
        for i in 0..events.len() {
            for j in (i + 1)..events.len() {
                let (a, b) = (&events[i], &events[j]);
                if a.action_value != b.action_value || a.user_id == b.user_id {
                    continue;
                }
                let dt = (a.timestamp.timestamp() - b.timestamp.timestamp()).abs();
                if dt > window as i64 {
                    continue;
                }
                let (p1, p2) = if a.post_id <= b.post_id {
                    (a.post_id.clone(), b.post_id.clone())
                } else {
                    (b.post_id.clone(), a.post_id.clone())
                };
                if !seen.insert((a.action_value.clone(), p1, p2)) {
                    continue;
                }
                let key = if a.user_id < b.user_id {
                    (a.user_id.clone(), b.user_id.clone())
                } else {
                    (b.user_id.clone(), a.user_id.clone())
                };
                *weights.entry(key).or_insert(0) += 1;
            }
        }
        weights
    }

    fn graph_weights(g: &CoordinationGraph) -> BTreeMap<(String, String), u64> {
        g.edges()
            .map(|(a, b, d)| ((a.to_string(), b.to_string()), d.weight))
            .collect()
    }

    #[test]
    fn boundary_inside_window() {
        let events = sort_events(vec![ev("A", "x", 0, "p1"), ev("B", "x", 299, "p2")]);
        let g = build_graph(ActionType::Semantic, &events, 300);
        assert_eq!(g.weight("A", "B"), Some(1));
    }

    #[test]
    fn boundary_outside_window() {
        let events = sort_events(vec![ev("A", "x", 0, "p1"), ev("B", "x", 301, "p2")]);
        let g = build_graph(ActionType::Semantic, &events, 300);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn twelve_event_fixture_matches_brute_force() {
        let events = sort_events(vec![
            ev("A", "x", 0, "p1"),
            ev("B", "x", 100, "p2"),
            ev("C", "x", 250, "p3"),
            ev("A", "x", 900, "p4"),
            ev("B", "y", 0, "p5"),
            ev("C", "y", 50, "p6"),
            ev("D", "y", 100, "p7"),
            ev("B", "y", 500, "p8"),
            ev("E", "z", 10, "p9"),
            ev("F", "z", 20, "p10"),
            ev("E", "z", 30, "p11"),
            ev("F", "z", 700, "p12"),
        ]);
        let g = build_graph(ActionType::Semantic, &events, 300);
        assert_eq!(graph_weights(&g), brute_force(&events, 300));
    }

    #[test]
    fn empty_input_empty_graph() {
        let g = build_graph(ActionType::Semantic, &[], 300);
        assert_eq!(g.node_count(), 0);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn tumbling_buckets_split_at_boundaries() {
        // 299 and 301 sit in different 300s buckets but only 2s apart.
        let base = 1_600_000_200; // multiple of 300
        let events = sort_events(vec![
            ActionEvent { timestamp: DateTime::<Utc>::from_timestamp(base + 299, 0).unwrap(), ..ev("A", "x", 0, "p1") },
            ActionEvent { timestamp: DateTime::<Utc>::from_timestamp(base + 301, 0).unwrap(), ..ev("B", "x", 0, "p2") },
        ]);
        let proximity = build_graph_with(ActionType::Semantic, &events, 300, WindowSemantics::Proximity);
        let tumbling = build_graph_with(ActionType::Semantic, &events, 300, WindowSemantics::Tumbling);
        assert_eq!(proximity.weight("A", "B"), Some(1));
        assert_eq!(tumbling.edge_count(), 0);

        // Same bucket: both within [base, base+300).
        let events = sort_events(vec![
            ActionEvent { timestamp: DateTime::<Utc>::from_timestamp(base + 10, 0).unwrap(), ..ev("A", "x", 0, "p1") },
            ActionEvent { timestamp: DateTime::<Utc>::from_timestamp(base + 290, 0).unwrap(), ..ev("B", "x", 0, "p2") },
        ]);
        let tumbling = build_graph_with(ActionType::Semantic, &events, 300, WindowSemantics::Tumbling);
        assert_eq!(tumbling.weight("A", "B"), Some(1));
    }

    #[test]
    fn threshold_example_one_survivor() {
        // Weights {1,1,1,5}: mean 2, population stdev √3, threshold ⌈3.732⌉ = 4.
        let mut g = CoordinationGraph::new(ActionType::Semantic, 300);
        g.add_weight("a", "b", 1, None);
        g.add_weight("c", "d", 1, None);
        g.add_weight("e", "f", 1, None);
        g.add_weight("g", "h", 5, None);
        let out = threshold_graph(&g);
        assert_eq!(out.threshold, 4);
        assert_eq!(out.graph.edge_count(), 1);
        assert_eq!(out.graph.weight("g", "h"), Some(5));
        assert_eq!(out.graph.node_count(), 2, "isolated nodes dropped");
        assert_eq!(out.coordinated.edge_count, 4);
        assert_eq!(out.filtered.edge_count, 1);
    }

    #[test]
    fn zero_variance_graph_unchanged() {
        let mut g = CoordinationGraph::new(ActionType::Semantic, 300);
        g.add_weight("a", "b", 7, None);
        g.add_weight("b", "c", 7, None);
        g.add_weight("c", "a", 7, None);
        let out = threshold_graph(&g);
        assert_eq!(out.threshold, 7);
        assert_eq!(graph_weights(&out.graph), graph_weights(&g));
    }

    #[test]
    fn edgeless_threshold_warns() {
        let g = CoordinationGraph::new(ActionType::Semantic, 300);
        let out = threshold_graph(&g);
        assert!(out.warning.is_some());
        assert_eq!(out.graph.edge_count(), 0);
    }

    #[test]
    fn density_examples() {
        let mut triangle = CoordinationGraph::new(ActionType::Semantic, 300);
        triangle.add_weight("a", "b", 1, None);
        triangle.add_weight("b", "c", 1, None);
        triangle.add_weight("c", "a", 1, None);
        assert_eq!(graph_stats(&triangle, Stage::Coordinated).density, 1.0);

        let mut sparse = CoordinationGraph::new(ActionType::Semantic, 300);
        sparse.add_weight("a", "b", 1, None);
        sparse.add_weight("c", "d", 1, None);
        let d = graph_stats(&sparse, Stage::Coordinated).density;
        assert!((d - 2.0 * 2.0 / (4.0 * 3.0)).abs() < 1e-12);

        let empty = CoordinationGraph::new(ActionType::Semantic, 300);
        assert_eq!(graph_stats(&empty, Stage::Filtered).density, 0.0);
    }

    #[test]
    fn filtered_weights_meet_input_threshold() {
        let mut g = CoordinationGraph::new(ActionType::Semantic, 300);
        for (i, w) in [1u64, 2, 2, 3, 9, 4, 1, 6].iter().enumerate() {
            g.add_weight(&format!("u{i}"), &format!("v{i}"), *w, None);
        }
        let out = threshold_graph(&g);
        for (_, _, d) in out.graph.edges() {
            assert!(d.weight >= out.threshold);
        }
    }

    #[test]
    fn provenance_is_capped_and_deduplicated() {
        let mut g = CoordinationGraph::new(ActionType::Semantic, 300);
        for i in 0..20 {
            g.add_weight("a", "b", 1, Some(&format!("v{}", i % 12)));
        }
        let (_, _, d) = g.edges().next().unwrap();
        assert_eq!(d.provenance.len(), PROVENANCE_CAP);
    }

    #[test]
    fn graphml_contains_weights() {
        let mut g = CoordinationGraph::new(ActionType::Referral, 300);
        g.add_weight("a", "b", 3, None);
        let mut buf = Vec::new();
        write_graphml(&g, &mut buf).unwrap();
        let xml = String::from_utf8(buf).unwrap();
        assert!(xml.contains(r#"<data key="w">3</data>"#));
        assert!(xml.contains(r#"edgedefault="undirected""#));
    }

    #[test]
    fn edge_csv_round_trips() {
        let mut g = CoordinationGraph::new(ActionType::Social, 120);
        g.add_weight("a", "b", 3, None);
        g.add_weight("b", "c", 5, None);
        let mut buf = Vec::new();
        write_edge_csv(&g, &mut buf).unwrap();
        let back = read_edge_csv(buf.as_slice(), ActionType::Social, 120).unwrap();
        assert_eq!(graph_weights(&back), graph_weights(&g));
    }

    proptest! {
        /// build_graph equals the brute-force all-pairs oracle.
        #[test]
        fn matches_brute_force_oracle(
            raw in proptest::collection::vec((0u8..6, 0u8..4, 0i64..2000), 0..60),
            window in 1u64..600,
        ) {
            let events: Vec<ActionEvent> = raw.iter().enumerate().map(|(i, &(u, v, t))| {
                ev(&format!("u{u}"), &format!("v{v}"), t, &format!("p{i}"))
            }).collect();
            let events = sort_events(events);
            let g = build_graph(ActionType::Semantic, &events, window);
            prop_assert_eq!(graph_weights(&g), brute_force(&events, window));
        }

        /// Wider windows keep every edge and never lower a weight.
        #[test]
        fn monotone_in_window(
            raw in proptest::collection::vec((0u8..6, 0u8..3, 0i64..2000), 0..40),
            w1 in 1u64..400,
            extra in 0u64..400,
        ) {
            let events: Vec<ActionEvent> = raw.iter().enumerate().map(|(i, &(u, v, t))| {
                ev(&format!("u{u}"), &format!("v{v}"), t, &format!("p{i}"))
            }).collect();
            let events = sort_events(events);
            let narrow = build_graph(ActionType::Semantic, &events, w1);
            let wide = build_graph(ActionType::Semantic, &events, w1 + extra);
            for (a, b, d) in narrow.edges() {
                let wider = wide.weight(a, b).unwrap_or(0);
                prop_assert!(wider >= d.weight);
            }
        }

        /// Relabeling users by a permutation yields an isomorphic graph.
        #[test]
        fn relabel_symmetry(
            raw in proptest::collection::vec((0u8..5, 0u8..3, 0i64..1000), 0..30),
            window in 1u64..400,
        ) {
            let relabel = |u: u8| format!("z{}", (u as u32 * 7 + 3) % 5);
            let events: Vec<ActionEvent> = raw.iter().enumerate().map(|(i, &(u, v, t))| {
                ev(&format!("u{u}"), &format!("v{v}"), t, &format!("p{i}"))
            }).collect();
            let renamed: Vec<ActionEvent> = raw.iter().enumerate().map(|(i, &(u, v, t))| {
                ev(&relabel(u), &format!("v{v}"), t, &format!("p{i}"))
            }).collect();
            let g = build_graph(ActionType::Semantic, &sort_events(events), window);
            let h = build_graph(ActionType::Semantic, &sort_events(renamed), window);
            let mapped: BTreeMap<(String, String), u64> = g.edges().map(|(a, b, d)| {
                let ra = relabel(a[1..].parse::<u8>().unwrap());
                let rb = relabel(b[1..].parse::<u8>().unwrap());
                (if ra < rb { (ra, rb) } else { (rb, ra) }, d.weight)
            }).collect();
            prop_assert_eq!(mapped, graph_weights(&h));
        }
    }
}
