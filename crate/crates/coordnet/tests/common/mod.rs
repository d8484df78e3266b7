//! Independent oracles shared by the integration suites. These deliberately
//! reimplement the checked computations by the most literal route available
//! and must stay independent of the library's implementation paths.

use std::collections::{BTreeMap, HashSet};

use chrono::{DateTime, Utc};
use coordnet::actions::{ActionEvent, ActionType};
use coordnet::graph::CoordinationGraph;

pub fn event(user: &str, value: &str, secs: i64, post: &str) -> ActionEvent {
    ActionEvent {
        user_id: user.into(),
        action_type: ActionType::Semantic,
        action_value: value.into(),
        timestamp: DateTime::<Utc>::from_timestamp(1_600_000_000 + secs, 0).unwrap(),
        post_id: post.into(),
    }
}

pub fn sort_events(mut events: Vec<ActionEvent>) -> Vec<ActionEvent> {
    events.sort_by(|a, b| {
        (&a.action_value, a.timestamp, &a.user_id).cmp(&(&b.action_value, b.timestamp, &b.user_id))
    });
    events
}

/// O(n²) all-pairs reference for graph construction: same action value,
/// distinct users, timestamps within the window, one unit per unordered post
/// pair per value.
pub fn brute_force_weights(
    events: &[ActionEvent],
    window: u64,
) -> BTreeMap<(String, String), u64> {
    let mut weights: BTreeMap<(String, String), u64> = BTreeMap::new();
    let mut seen: HashSet<(String, String, String)> = HashSet::new();
    for i in 0..events.len() {
        for j in (i + 1)..events.len() {
            let (a, b) = (&events[i], &events[j]);
            if a.action_value != b.action_value || a.user_id == b.user_id {
                continue;
            }
            if (a.timestamp.timestamp() - b.timestamp.timestamp()).abs() > window as i64 {
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

pub fn graph_weights(g: &CoordinationGraph) -> BTreeMap<(String, String), u64> {
    g.edges()
        .map(|(a, b, d)| ((a.to_string(), b.to_string()), d.weight))
        .collect()
}

/// Naive double-sum modularity:
/// `Q = (1/2m) Σ_ij [A_ij − k_i·k_j/(2m)] δ(c_i, c_j)` over the full matrix.
pub fn naive_modularity(g: &CoordinationGraph, assignment: &BTreeMap<String, usize>) -> f64 {
    let nodes: Vec<&str> = g.nodes().collect();
    let m = g.total_weight() as f64;
    if m == 0.0 {
        return 0.0;
    }
    let n = nodes.len();
    let mut a = vec![vec![0.0; n]; n];
    for (i, &u) in nodes.iter().enumerate() {
        for (j, &v) in nodes.iter().enumerate() {
            if i != j {
                a[i][j] = g.weight(u, v).unwrap_or(0) as f64;
            }
        }
    }
    let k: Vec<f64> = (0..n).map(|i| a[i].iter().sum()).collect();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if assignment[nodes[i]] == assignment[nodes[j]] {
                q += a[i][j] - k[i] * k[j] / (2.0 * m);
            }
        }
    }
    q / (2.0 * m)
}

/// Exhaustive best modularity over every set partition of the node set
/// (restricted growth strings). Usable up to ~10 nodes.
pub fn best_partition_q(g: &CoordinationGraph) -> f64 {
    let nodes: Vec<String> = g.nodes().map(|n| n.to_string()).collect();
    let n = nodes.len();
    assert!(n <= 10, "enumeration oracle limited to 10 nodes");
    if n == 0 {
        return 0.0;
    }
    let mut labels = vec![0usize; n];
    let mut best = f64::NEG_INFINITY;
    loop {
        let assignment: BTreeMap<String, usize> = nodes
            .iter()
            .cloned()
            .zip(labels.iter().copied())
            .collect();
        let q = naive_modularity(g, &assignment);
        if q > best {
            best = q;
        }
        // Next restricted growth string.
        let mut i = n as isize - 1;
        loop {
            if i <= 0 {
                return best;
            }
            let max_allowed = labels[..i as usize].iter().copied().max().unwrap() + 1;
            if labels[i as usize] < max_allowed {
                labels[i as usize] += 1;
                for label in labels.iter_mut().take(n).skip(i as usize + 1) {
                    *label = 0;
                }
                break;
            }
            i -= 1;
        }
    }
}

/// Tiny deterministic generator so oracle fixtures do not depend on the
/// library's RNG choices.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next(&mut self) -> u64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        self.0 >> 33
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }
}
