//! Bundled reference fixtures.

use crate::actions::ActionType;
use crate::graph::{read_edge_csv, CoordinationGraph};

/// The classic 34-node, 78-edge karate-club social network, as a unit-weight
/// coordination graph.
pub fn karate_club() -> CoordinationGraph {
    let csv = include_str!("../assets/karate_club.csv");
    read_edge_csv(csv.as_bytes(), ActionType::Social, 300).expect("bundled fixture parses")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn karate_club_shape() {
        let g = karate_club();
        assert_eq!(g.node_count(), 34);
        assert_eq!(g.edge_count(), 78);
    }
}
