//! Newman modularity and Louvain community detection.
//!
//! Louvain runs the classic two-phase loop: seeded-order local moves until no
//! single-node move improves modularity, then aggregation of communities into
//! super-nodes, repeated until quiescent. Tie-breaking is deterministic: among
//! equal-gain targets the lowest community id wins, and zero-gain moves are
//! taken only when they reduce the community count.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::CoordinationGraph;

const GAIN_TOL: f64 = 1e-12;
const MAX_PASSES_PER_LEVEL: usize = 200;

/// A complete node-to-community assignment with its modularity score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityPartition {
    /// Community ids are dense integers from 0, ordered by each community's
    /// smallest member id.
    pub assignment: BTreeMap<String, usize>,
    pub modularity: f64,
    pub community_sizes: BTreeMap<usize, usize>,
}

impl CommunityPartition {
    pub fn community_count(&self) -> usize {
        self.community_sizes.len()
    }

    /// Members grouped per community id.
    pub fn communities(&self) -> BTreeMap<usize, Vec<&str>> {
        let mut out: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
        for (node, &c) in &self.assignment {
            out.entry(c).or_default().push(node.as_str());
        }
        out
    }
}

/// Newman modularity of an assignment over the weighted graph:
/// `Q = (1/2m) Σ_ij [A_ij − k_i·k_j/(2m)] δ(c_i, c_j)`.
///
/// An edgeless graph scores 0. Panics if the assignment misses a graph node.
pub fn modularity_of(graph: &CoordinationGraph, assignment: &BTreeMap<String, usize>) -> f64 {
    let m = graph.total_weight() as f64;
    if m == 0.0 {
        return 0.0;
    }
    let mut intra: BTreeMap<usize, f64> = BTreeMap::new();
    let mut degree: BTreeMap<usize, f64> = BTreeMap::new();
    for (a, b, d) in graph.edges() {
        let ca = *assignment
            .get(a)
            .unwrap_or_else(|| panic!("assignment misses node {a:?}"));
        let cb = *assignment
            .get(b)
            .unwrap_or_else(|| panic!("assignment misses node {b:?}"));
        let w = d.weight as f64;
        *degree.entry(ca).or_insert(0.0) += w;
        *degree.entry(cb).or_insert(0.0) += w;
        if ca == cb {
            *intra.entry(ca).or_insert(0.0) += w;
        }
    }
    for node in graph.nodes() {
        assert!(
            assignment.contains_key(node),
            "assignment misses node {node:?}"
        );
    }
    let mut q = 0.0;
    for (c, deg) in &degree {
        let lc = intra.get(c).copied().unwrap_or(0.0);
        q += lc / m - (deg / (2.0 * m)).powi(2);
    }
    q
}

/// Louvain working graph; aggregation introduces self-loops, which the public
/// [`CoordinationGraph`] cannot represent.
struct WorkGraph {
    adj: Vec<Vec<(usize, f64)>>,
    self_weight: Vec<f64>,
    /// Total edge weight `m`, each edge and self-loop counted once.
    m: f64,
    /// Original node indices folded into each super-node.
    members: Vec<Vec<usize>>,
}

impl WorkGraph {
    fn node_count(&self) -> usize {
        self.adj.len()
    }

    fn degree(&self, i: usize) -> f64 {
        self.adj[i].iter().map(|&(_, w)| w).sum::<f64>() + 2.0 * self.self_weight[i]
    }

    fn from_graph(graph: &CoordinationGraph, index_of: &BTreeMap<&str, usize>) -> Self {
        let n = index_of.len();
        let mut adj = vec![Vec::new(); n];
        let mut m = 0.0;
        for (a, b, d) in graph.edges() {
            let (ia, ib) = (index_of[a], index_of[b]);
            let w = d.weight as f64;
            adj[ia].push((ib, w));
            adj[ib].push((ia, w));
            m += w;
        }
        WorkGraph {
            adj,
            self_weight: vec![0.0; n],
            m,
            members: (0..n).map(|i| vec![i]).collect(),
        }
    }

    /// Collapse communities into super-nodes. `comm` must use dense ids.
    fn aggregate(&self, comm: &[usize], n_comms: usize) -> WorkGraph {
        let mut self_weight = vec![0.0; n_comms];
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_comms];
        let mut maps: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n_comms];
        for i in 0..self.node_count() {
            let ci = comm[i];
            members[ci].extend(self.members[i].iter().copied());
            self_weight[ci] += self.self_weight[i];
            for &(j, w) in &self.adj[i] {
                let cj = comm[j];
                if ci == cj {
                    // Each intra edge is visited from both endpoints.
                    self_weight[ci] += w / 2.0;
                } else {
                    *maps[ci].entry(cj).or_insert(0.0) += w;
                }
            }
        }
        let adj = maps
            .into_iter()
            .map(|m| m.into_iter().collect::<Vec<_>>())
            .collect();
        for m in &mut members {
            m.sort_unstable();
        }
        WorkGraph {
            adj,
            self_weight,
            m: self.m,
            members,
        }
    }
}

/// One level of local moves. Returns whether any node changed community.
fn local_moves(graph: &WorkGraph, comm: &mut [usize], rng: &mut ChaCha8Rng) -> bool {
    let n = graph.node_count();
    let m = graph.m;
    if n == 0 || m == 0.0 {
        return false;
    }
    let degrees: Vec<f64> = (0..n).map(|i| graph.degree(i)).collect();
    let mut sum_tot: Vec<f64> = vec![0.0; n];
    let mut comm_size: Vec<usize> = vec![0; n];
    for i in 0..n {
        sum_tot[comm[i]] += degrees[i];
        comm_size[comm[i]] += 1;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);

    let mut any_move = false;
    for _pass in 0..MAX_PASSES_PER_LEVEL {
        let mut moves = 0usize;
        for &node in &order {
            let current = comm[node];
            let k_i = degrees[node];

            // Weight from `node` to each neighboring community, self-loops
            // excluded; BTreeMap iteration gives ascending community ids.
            let mut to_comm: BTreeMap<usize, f64> = BTreeMap::new();
            for &(nb, w) in &graph.adj[node] {
                if nb != node {
                    *to_comm.entry(comm[nb]).or_insert(0.0) += w;
                }
            }

            sum_tot[current] -= k_i;
            comm_size[current] -= 1;
            let gain_of = |k_to: f64, tot: f64| k_to / m - tot * k_i / (2.0 * m * m);
            let stay_gain = gain_of(
                to_comm.get(&current).copied().unwrap_or(0.0),
                sum_tot[current],
            );

            // Ascending iteration makes the first of equal gains the lowest
            // community id.
            let mut best: Option<(usize, f64)> = None;
            let mut zero_gain_target: Option<usize> = None;
            for (&c, &k_to) in &to_comm {
                if c == current {
                    continue;
                }
                let net = gain_of(k_to, sum_tot[c]) - stay_gain;
                if net > GAIN_TOL {
                    match best {
                        Some((_, top)) if net <= top + GAIN_TOL => {}
                        _ => best = Some((c, net)),
                    }
                } else if net.abs() <= GAIN_TOL && zero_gain_target.is_none() {
                    zero_gain_target = Some(c);
                }
            }

            // Zero-gain moves are allowed only when they shrink the community
            // count, i.e. the node was alone in its community.
            let target = match best {
                Some((c, _)) => c,
                None if comm_size[current] == 0 => zero_gain_target.unwrap_or(current),
                None => current,
            };
            sum_tot[target] += k_i;
            comm_size[target] += 1;
            if target != current {
                comm[node] = target;
                moves += 1;
                any_move = true;
            }
        }
        if moves == 0 {
            break;
        }
    }
    any_move
}

fn renumber(comm: &mut [usize]) -> usize {
    let mut map: BTreeMap<usize, usize> = BTreeMap::new();
    for c in comm.iter() {
        let next = map.len();
        map.entry(*c).or_insert(next);
    }
    for c in comm.iter_mut() {
        *c = map[c];
    }
    map.len()
}

/// Louvain community detection, deterministic for a fixed seed.
pub fn louvain(graph: &CoordinationGraph, seed: u64) -> CommunityPartition {
    let node_names: Vec<&str> = graph.nodes().collect();
    if node_names.is_empty() {
        return CommunityPartition {
            assignment: BTreeMap::new(),
            modularity: 0.0,
            community_sizes: BTreeMap::new(),
        };
    }
    let index_of: BTreeMap<&str, usize> = node_names
        .iter()
        .enumerate()
        .map(|(i, &n)| (n, i))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut work = WorkGraph::from_graph(graph, &index_of);
    let mut final_comm: Vec<usize> = (0..node_names.len()).collect();

    loop {
        let mut comm: Vec<usize> = (0..work.node_count()).collect();
        let moved = local_moves(&work, &mut comm, &mut rng);
        if !moved {
            break;
        }
        let n_comms = renumber(&mut comm);
        for (super_node, members) in work.members.iter().enumerate() {
            for &original in members {
                final_comm[original] = comm[super_node];
            }
        }
        if n_comms == work.node_count() {
            break;
        }
        work = work.aggregate(&comm, n_comms);
    }

    // Dense ids ordered by smallest member user id.
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &c) in final_comm.iter().enumerate() {
        groups.entry(c).or_default().push(i);
    }
    let mut ordered: Vec<Vec<usize>> = groups.into_values().collect();
    ordered.sort_by_key(|members| node_names[members[0]].to_string());

    let mut assignment = BTreeMap::new();
    let mut community_sizes = BTreeMap::new();
    for (new_id, members) in ordered.iter().enumerate() {
        community_sizes.insert(new_id, members.len());
        for &i in members {
            assignment.insert(node_names[i].to_string(), new_id);
        }
    }
    let modularity = modularity_of(graph, &assignment);
    CommunityPartition {
        assignment,
        modularity,
        community_sizes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::ActionType;
    use proptest::prelude::*;

    fn graph_from_edges(edges: &[(&str, &str, u64)]) -> CoordinationGraph {
        let mut g = CoordinationGraph::new(ActionType::Semantic, 300);
        for &(a, b, w) in edges {
            g.add_weight(a, b, w, None);
        }
        g
    }

    /// Naive O(n²) double-sum oracle over the full adjacency matrix.
    fn naive_modularity(g: &CoordinationGraph, assignment: &BTreeMap<String, usize>) -> f64 {
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

    fn two_triangles() -> CoordinationGraph {
        graph_from_edges(&[
            ("a", "b", 1),
            ("b", "c", 1),
            ("c", "a", 1),
            ("x", "y", 1),
            ("y", "z", 1),
            ("z", "x", 1),
        ])
    }

    #[test]
    fn all_in_one_community_scores_zero() {
        let g = two_triangles();
        let assignment: BTreeMap<String, usize> =
            g.nodes().map(|n| (n.to_string(), 0)).collect();
        assert!(modularity_of(&g, &assignment).abs() < 1e-12);
    }

    #[test]
    fn two_equal_cliques_score_half() {
        let g = two_triangles();
        let assignment: BTreeMap<String, usize> = g
            .nodes()
            .map(|n| (n.to_string(), usize::from(matches!(n, "x" | "y" | "z"))))
            .collect();
        assert!((modularity_of(&g, &assignment) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn matches_naive_oracle_on_random_graphs() {
        let mut rng_state = 12345u64;
        let mut next = move || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            rng_state >> 33
        };
        for _ in 0..50 {
            let n = 4 + (next() % 7) as usize;
            let mut g = CoordinationGraph::new(ActionType::Semantic, 300);
            for i in 0..n {
                for j in (i + 1)..n {
                    if next() % 3 != 0 {
                        g.add_weight(&format!("n{i}"), &format!("n{j}"), 1 + next() % 9, None);
                    }
                }
            }
            if g.edge_count() == 0 {
                continue;
            }
            let assignment: BTreeMap<String, usize> = g
                .nodes()
                .map(|node| (node.to_string(), (next() % 3) as usize))
                .collect();
            let fast = modularity_of(&g, &assignment);
            let slow = naive_modularity(&g, &assignment);
            assert!((fast - slow).abs() < 1e-9, "fast={fast} slow={slow}");
        }
    }

    #[test]
    fn relabeling_communities_is_invariant() {
        let g = two_triangles();
        let a1: BTreeMap<String, usize> = g
            .nodes()
            .map(|n| (n.to_string(), usize::from(matches!(n, "x" | "y" | "z"))))
            .collect();
        let a2: BTreeMap<String, usize> = a1
            .iter()
            .map(|(n, &c)| (n.clone(), 17 - c * 5))
            .collect();
        assert!((modularity_of(&g, &a1) - modularity_of(&g, &a2)).abs() < 1e-12);
    }

    #[test]
    fn edgeless_graph_scores_zero() {
        let g = CoordinationGraph::new(ActionType::Semantic, 300);
        assert_eq!(modularity_of(&g, &BTreeMap::new()), 0.0);
    }

    #[test]
    fn louvain_recovers_two_triangles() {
        let g = two_triangles();
        let part = louvain(&g, 42);
        assert_eq!(part.community_count(), 2);
        assert_eq!(part.assignment["a"], part.assignment["b"]);
        assert_eq!(part.assignment["b"], part.assignment["c"]);
        assert_eq!(part.assignment["x"], part.assignment["y"]);
        assert_eq!(part.assignment["y"], part.assignment["z"]);
        assert_ne!(part.assignment["a"], part.assignment["x"]);
        assert!((part.modularity - 0.5).abs() < 1e-12);
    }

    #[test]
    fn louvain_merges_single_edge_pair() {
        let g = graph_from_edges(&[("a", "b", 1)]);
        let part = louvain(&g, 42);
        assert_eq!(part.community_count(), 1);
        assert!(part.modularity.abs() < 1e-12);
    }

    #[test]
    fn louvain_empty_graph() {
        let g = CoordinationGraph::new(ActionType::Semantic, 300);
        let part = louvain(&g, 42);
        assert!(part.assignment.is_empty());
        assert_eq!(part.modularity, 0.0);
    }

    #[test]
    fn louvain_is_seed_reproducible() {
        let g = graph_from_edges(&[
            ("a", "b", 2),
            ("b", "c", 1),
            ("c", "d", 3),
            ("d", "a", 1),
            ("a", "c", 1),
            ("e", "f", 4),
            ("f", "g", 4),
            ("g", "e", 4),
            ("d", "e", 1),
        ]);
        let p1 = louvain(&g, 7);
        let p2 = louvain(&g, 7);
        assert_eq!(p1.assignment, p2.assignment);
        assert!((p1.modularity - p2.modularity).abs() == 0.0);
    }

    #[test]
    fn louvain_beats_singleton_baseline() {
        let g = graph_from_edges(&[
            ("a", "b", 1),
            ("b", "c", 2),
            ("c", "d", 1),
            ("d", "e", 2),
            ("e", "a", 1),
        ]);
        let singleton: BTreeMap<String, usize> = g
            .nodes()
            .enumerate()
            .map(|(i, n)| (n.to_string(), i))
            .collect();
        let baseline = modularity_of(&g, &singleton);
        let part = louvain(&g, 42);
        assert!(part.modularity >= baseline);
    }

    #[test]
    fn partition_modularity_matches_recomputation() {
        let g = two_triangles();
        let part = louvain(&g, 42);
        let recomputed = modularity_of(&g, &part.assignment);
        assert!((part.modularity - recomputed).abs() < 1e-9);
        let sizes: usize = part.community_sizes.values().sum();
        assert_eq!(sizes, g.node_count());
    }

    proptest! {
        /// Scaling all weights by a positive constant leaves Q unchanged.
        #[test]
        fn modularity_is_weight_scale_free(
            edges in proptest::collection::vec((0u8..6, 0u8..6, 1u64..9), 1..15),
            scale in 2u64..7,
            comms in proptest::collection::vec(0usize..3, 6),
        ) {
            let mut g1 = CoordinationGraph::new(ActionType::Semantic, 300);
            let mut g2 = CoordinationGraph::new(ActionType::Semantic, 300);
            for &(a, b, w) in &edges {
                if a != b {
                    g1.add_weight(&format!("n{a}"), &format!("n{b}"), w, None);
                    g2.add_weight(&format!("n{a}"), &format!("n{b}"), w * scale, None);
                }
            }
            prop_assume!(g1.edge_count() > 0);
            let assignment: BTreeMap<String, usize> = g1
                .nodes()
                .map(|n| (n.to_string(), comms[n[1..].parse::<usize>().unwrap()]))
                .collect();
            let q1 = modularity_of(&g1, &assignment);
            let q2 = modularity_of(&g2, &assignment);
            prop_assert!((q1 - q2).abs() < 1e-9);
        }

        /// Louvain stays deterministic per seed on random graphs.
        #[test]
        fn louvain_deterministic_prop(
            edges in proptest::collection::vec((0u8..8, 0u8..8, 1u64..5), 1..20),
            seed in 0u64..1000,
        ) {
            let mut g = CoordinationGraph::new(ActionType::Semantic, 300);
            for &(a, b, w) in &edges {
                if a != b {
                    g.add_weight(&format!("n{a}"), &format!("n{b}"), w, None);
                }
            }
            let p1 = louvain(&g, seed);
            let p2 = louvain(&g, seed);
            prop_assert_eq!(p1.assignment, p2.assignment);
        }
    }
}
