//! Example topologies shipped with the repository (see `data/`).

use crate::graph::Topology;

/// 10-node example network: pentagonal prism plus two extra links.
/// Connected, max degree 5, valid step sizes `0 < eps < 0.2`.
pub fn ten_node() -> Topology {
    Topology::parse(include_str!("../../../data/topology_10.txt")).expect("shipped fixture parses")
}

/// 50-node example network: degree-capped random geometric graph.
/// Connected, max degree 6, valid step sizes `0 < eps < 1/6`.
pub fn fifty_node() -> Topology {
    Topology::parse(include_str!("../../../data/topology_50.txt")).expect("shipped fixture parses")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_have_the_documented_shape() {
        let ten = ten_node();
        assert_eq!(ten.node_count(), 10);
        assert_eq!(ten.max_degree(), 5);
        assert!(ten.is_connected());

        let fifty = fifty_node();
        assert_eq!(fifty.node_count(), 50);
        assert_eq!(fifty.max_degree(), 6);
        assert!(fifty.is_connected());
    }
}
