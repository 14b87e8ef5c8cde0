//! Strongly connected components of a directed graph given as adjacency
//! lists.

use petgraph::algo::kosaraju_scc;
use petgraph::graph::DiGraph;

/// Components are returned with their vertices sorted, and the components
/// themselves ordered by smallest vertex.
pub fn strongly_connected_components(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let edges = adj
        .iter()
        .enumerate()
        .flat_map(|(v, out)| out.iter().map(move |&w| (v as u32, w as u32)));
    let mut g: DiGraph<(), ()> = DiGraph::from_edges(edges);
    // isolated trailing vertices never appear in the edge list
    while g.node_count() < adj.len() {
        g.add_node(());
    }
    let mut components: Vec<Vec<usize>> = kosaraju_scc(&g)
        .into_iter()
        .map(|c| {
            let mut c: Vec<usize> = c.into_iter().map(|n| n.index()).collect();
            c.sort_unstable();
            c
        })
        .collect();
    components.sort_by_key(|c| c[0]);
    components
}

/// Whether every vertex reaches every other one. The empty graph is not.
pub fn is_strongly_connected(adj: &[Vec<usize>]) -> bool {
    !adj.is_empty() && strongly_connected_components(adj).len() == 1
}
