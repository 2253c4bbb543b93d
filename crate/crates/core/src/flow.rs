//! Single-commodity flow primitives: exact max flow and widest
//! (maximum-bottleneck) paths.
//!
//! All functions are pure and deterministic: augmenting paths are shortest
//! first with ties broken by edge index, widest paths prefer fewer hops and
//! then the lexicographically smallest node sequence.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::model::{CapacityView, CoreNetwork, EdgeId, NodeId};

pub type Path = Vec<NodeId>;

const FLOW_EPS: f64 = 1e-12;

/// A plain capacitated digraph, the working representation shared by the
/// flow, solver, and routing code. Edge ids are positions in `edges`.
#[derive(Debug, Clone)]
pub struct FlowGraph {
    node_count: usize,
    edges: Vec<(NodeId, NodeId, f64)>,
    out_adj: Vec<Vec<EdgeId>>,
}

impl FlowGraph {
    pub fn from_edges(node_count: usize, edges: Vec<(NodeId, NodeId, f64)>) -> Self {
        let mut out_adj = vec![Vec::new(); node_count];
        for (id, &(tail, _, _)) in edges.iter().enumerate() {
            out_adj[tail].push(id);
        }
        for adj in &mut out_adj {
            adj.sort_unstable_by_key(|&e| (edges[e].1, e));
        }
        FlowGraph { node_count, edges, out_adj }
    }

    /// Mirrors the network's edge list (same edge ids) under `view`.
    pub fn from_network(net: &CoreNetwork, view: CapacityView) -> Self {
        let edges = net
            .edges()
            .iter()
            .enumerate()
            .map(|(id, e)| (e.tail, e.head, view.cap(net, id)))
            .collect();
        Self::from_edges(net.node_count(), edges)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(NodeId, NodeId, f64)] {
        &self.edges
    }

    pub fn capacity(&self, e: EdgeId) -> f64 {
        self.edges[e].2
    }

    pub fn set_capacity(&mut self, e: EdgeId, cap: f64) {
        self.edges[e].2 = cap;
    }

    pub fn out_edges(&self, node: NodeId) -> &[EdgeId] {
        &self.out_adj[node]
    }

    fn check_node(&self, node: NodeId) -> Result<()> {
        if node >= self.node_count {
            return Err(Error::UnknownNode(node, self.node_count));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct MaxFlowResult {
    pub value: f64,
    /// Flow per edge id of the input graph/network.
    pub edge_flows: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WidestPathResult {
    /// Node sequence from source to destination; empty when unreachable.
    pub path: Path,
    pub bottleneck: f64,
}

impl WidestPathResult {
    pub fn unreachable() -> Self {
        WidestPathResult { path: Vec::new(), bottleneck: 0.0 }
    }
}

pub fn max_flow(net: &CoreNetwork, s: NodeId, d: NodeId, view: CapacityView) -> Result<MaxFlowResult> {
    max_flow_graph(&FlowGraph::from_network(net, view), s, d)
}

/// Shortest-augmenting-path max flow (breadth-first residual search).
pub fn max_flow_graph(graph: &FlowGraph, s: NodeId, d: NodeId) -> Result<MaxFlowResult> {
    graph.check_node(s)?;
    graph.check_node(d)?;
    if s == d {
        return Err(Error::SelfPair(s));
    }
    let m = graph.edge_count();
    // Residual arcs: 2*e is forward, 2*e+1 is backward.
    let mut residual = vec![0.0; 2 * m];
    let mut adj = vec![Vec::new(); graph.node_count()];
    for (e, &(tail, head, cap)) in graph.edges().iter().enumerate() {
        residual[2 * e] = cap;
        adj[tail].push(2 * e);
        adj[head].push(2 * e + 1);
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    let arc_head = |arc: usize| -> NodeId {
        let (tail, head, _) = graph.edges()[arc / 2];
        if arc % 2 == 0 {
            head
        } else {
            tail
        }
    };

    let mut value = 0.0;
    loop {
        let mut parent_arc: Vec<Option<usize>> = vec![None; graph.node_count()];
        let mut queue = VecDeque::new();
        queue.push_back(s);
        let mut reached = false;
        'bfs: while let Some(u) = queue.pop_front() {
            for &arc in &adj[u] {
                if residual[arc] <= FLOW_EPS {
                    continue;
                }
                let v = arc_head(arc);
                if v == s || parent_arc[v].is_some() {
                    continue;
                }
                parent_arc[v] = Some(arc);
                if v == d {
                    reached = true;
                    break 'bfs;
                }
                queue.push_back(v);
            }
        }
        if !reached {
            break;
        }
        let mut bottleneck = f64::INFINITY;
        let mut v = d;
        while v != s {
            let arc = parent_arc[v].unwrap();
            bottleneck = bottleneck.min(residual[arc]);
            v = if arc % 2 == 0 { graph.edges()[arc / 2].0 } else { graph.edges()[arc / 2].1 };
        }
        let mut v = d;
        while v != s {
            let arc = parent_arc[v].unwrap();
            residual[arc] -= bottleneck;
            residual[arc ^ 1] += bottleneck;
            v = if arc % 2 == 0 { graph.edges()[arc / 2].0 } else { graph.edges()[arc / 2].1 };
        }
        value += bottleneck;
    }

    let edge_flows = (0..m).map(|e| graph.capacity(e) - residual[2 * e]).collect();
    Ok(MaxFlowResult { value, edge_flows })
}

pub fn widest_path(net: &CoreNetwork, s: NodeId, d: NodeId, view: CapacityView) -> Result<WidestPathResult> {
    widest_path_graph(&FlowGraph::from_network(net, view), s, d)
}

/// Maximum-bottleneck path; among equal-bottleneck paths the fewest hops win,
/// then the lexicographically smallest node sequence.
pub fn widest_path_graph(graph: &FlowGraph, s: NodeId, d: NodeId) -> Result<WidestPathResult> {
    graph.check_node(s)?;
    graph.check_node(d)?;
    if s == d {
        return Err(Error::SelfPair(s));
    }
    let labels = bottleneck_labels(graph, s);
    Ok(reconstruct_widest(graph, s, d, &labels))
}

/// Widest-path bottlenecks from `root` to every target in one labeling pass.
/// The root itself is excluded from the output.
pub fn max_capacity_tree(
    net: &CoreNetwork,
    root: NodeId,
    targets: &BTreeSet<NodeId>,
    view: CapacityView,
) -> Result<BTreeMap<NodeId, WidestPathResult>> {
    let graph = FlowGraph::from_network(net, view);
    max_capacity_tree_graph(&graph, root, targets)
}

pub fn max_capacity_tree_graph(
    graph: &FlowGraph,
    root: NodeId,
    targets: &BTreeSet<NodeId>,
) -> Result<BTreeMap<NodeId, WidestPathResult>> {
    graph.check_node(root)?;
    for &t in targets {
        graph.check_node(t)?;
    }
    let labels = bottleneck_labels(graph, root);
    let mut out = BTreeMap::new();
    for &t in targets {
        if t == root {
            continue;
        }
        out.insert(t, reconstruct_widest(graph, root, t, &labels));
    }
    Ok(out)
}

/// Max-bottleneck labels from `s` (modified Dijkstra on the min-capacity
/// label, processing larger bottlenecks first; node-id order on ties).
fn bottleneck_labels(graph: &FlowGraph, s: NodeId) -> Vec<f64> {
    let mut best = vec![0.0f64; graph.node_count()];
    let mut done = vec![false; graph.node_count()];
    best[s] = f64::INFINITY;
    loop {
        let mut pick: Option<NodeId> = None;
        for v in 0..graph.node_count() {
            if !done[v] && best[v] > 0.0 && pick.is_none_or(|p| best[v] > best[p]) {
                pick = Some(v);
            }
        }
        let Some(u) = pick else { break };
        done[u] = true;
        for &e in graph.out_edges(u) {
            let (_, v, cap) = graph.edges()[e];
            if cap <= FLOW_EPS || done[v] {
                continue;
            }
            let through = best[u].min(cap);
            if through > best[v] {
                best[v] = through;
            }
        }
    }
    best
}

/// Rebuilds the canonical widest path to `d` given bottleneck labels: restrict
/// to edges with capacity >= the optimum, then take the min-hop path whose
/// node sequence is lexicographically smallest.
fn reconstruct_widest(graph: &FlowGraph, s: NodeId, d: NodeId, labels: &[f64]) -> WidestPathResult {
    let bottleneck = labels[d];
    if bottleneck <= 0.0 || !bottleneck.is_finite() {
        return WidestPathResult::unreachable();
    }
    let n = graph.node_count();
    let usable = |e: EdgeId| graph.capacity(e) >= bottleneck;

    let mut dist = vec![usize::MAX; n];
    dist[s] = 0;
    let mut queue = VecDeque::from([s]);
    while let Some(u) = queue.pop_front() {
        for &e in graph.out_edges(u) {
            let v = graph.edges()[e].1;
            if usable(e) && dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let mut rdist = vec![usize::MAX; n];
    rdist[d] = 0;
    let mut radj = vec![Vec::new(); n];
    for (e, &(tail, head, _)) in graph.edges().iter().enumerate() {
        if usable(e) {
            radj[head].push(tail);
        }
    }
    let mut queue = VecDeque::from([d]);
    while let Some(u) = queue.pop_front() {
        for &v in &radj[u] {
            if rdist[v] == usize::MAX {
                rdist[v] = rdist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    debug_assert!(dist[d] != usize::MAX);

    let hops = dist[d];
    let mut path = vec![s];
    let mut u = s;
    while u != d {
        let mut next = None;
        for &e in graph.out_edges(u) {
            let v = graph.edges()[e].1;
            if usable(e)
                && dist[v] == dist[u] + 1
                && rdist[v] != usize::MAX
                && dist[v] + rdist[v] == hops
                && next.is_none_or(|n| v < n)
            {
                next = Some(v);
            }
        }
        u = next.expect("widest path reconstruction lost the target");
        path.push(u);
    }
    WidestPathResult { path, bottleneck }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diamond() -> FlowGraph {
        // s=0, a=1, b=2, d=3
        FlowGraph::from_edges(4, vec![(0, 1, 4.0), (0, 2, 4.0), (1, 3, 2.0), (2, 3, 6.0)])
    }

    #[test]
    fn single_edge_cut() {
        let g = FlowGraph::from_edges(2, vec![(0, 1, 7.0)]);
        assert_eq!(max_flow_graph(&g, 0, 1).unwrap().value, 7.0);
    }

    #[test]
    fn disjoint_paths_sum() {
        let g = FlowGraph::from_edges(4, vec![(0, 1, 3.0), (1, 3, 3.0), (0, 2, 5.0), (2, 3, 5.0)]);
        assert_eq!(max_flow_graph(&g, 0, 3).unwrap().value, 8.0);
    }

    #[test]
    fn diamond_max_flow() {
        // Cuts: {s}=8, {s,a}=6, {s,b}=... enumeration gives 6.
        assert_eq!(max_flow_graph(&diamond(), 0, 3).unwrap().value, 6.0);
    }

    #[test]
    fn max_flow_conserves() {
        let g = diamond();
        let res = max_flow_graph(&g, 0, 3).unwrap();
        for v in 0..g.node_count() {
            if v == 0 || v == 3 {
                continue;
            }
            let out: f64 = g.out_edges(v).iter().map(|&e| res.edge_flows[e]).sum();
            let inn: f64 = (0..g.edge_count()).filter(|&e| g.edges()[e].1 == v).map(|e| res.edge_flows[e]).sum();
            assert!((out - inn).abs() < 1e-9);
        }
        for e in 0..g.edge_count() {
            assert!(res.edge_flows[e] >= -1e-9 && res.edge_flows[e] <= g.capacity(e) + 1e-9);
        }
    }

    #[test]
    fn widest_prefers_high_bottleneck() {
        // direct 0->2 cap 2, detour via 1 cap 5
        let g = FlowGraph::from_edges(3, vec![(0, 2, 2.0), (0, 1, 5.0), (1, 2, 5.0)]);
        let r = widest_path_graph(&g, 0, 2).unwrap();
        assert_eq!(r.bottleneck, 5.0);
        assert_eq!(r.path, vec![0, 1, 2]);
    }

    #[test]
    fn widest_unreachable() {
        let g = FlowGraph::from_edges(3, vec![(0, 1, 5.0)]);
        let r = widest_path_graph(&g, 0, 2).unwrap();
        assert_eq!(r.bottleneck, 0.0);
        assert!(r.path.is_empty());
    }

    #[test]
    fn widest_diamond() {
        // min(4,2)=2 via a, min(4,6)=4 via b
        let r = widest_path_graph(&diamond(), 0, 3).unwrap();
        assert_eq!(r.bottleneck, 4.0);
        assert_eq!(r.path, vec![0, 2, 3]);
    }

    #[test]
    fn widest_tie_breaks_fewest_hops_then_lex() {
        // Two bottleneck-3 paths: 0->1->3 and 0->2->3, plus a longer 0->1->2->3.
        let g = FlowGraph::from_edges(
            4,
            vec![(0, 1, 3.0), (1, 3, 3.0), (0, 2, 3.0), (2, 3, 3.0), (1, 2, 9.0)],
        );
        let r = widest_path_graph(&g, 0, 3).unwrap();
        assert_eq!(r.bottleneck, 3.0);
        assert_eq!(r.path, vec![0, 1, 3]);
    }

    #[test]
    fn tree_matches_star() {
        let g = FlowGraph::from_edges(3, vec![(0, 1, 3.0), (0, 2, 9.0)]);
        let out = max_capacity_tree_graph(&g, 0, &BTreeSet::from([0, 1, 2])).unwrap();
        assert!(!out.contains_key(&0));
        assert_eq!(out[&1].bottleneck, 3.0);
        assert_eq!(out[&2].bottleneck, 9.0);
    }

    #[test]
    fn tree_agrees_with_widest_path() {
        let g = diamond();
        let out = max_capacity_tree_graph(&g, 0, &BTreeSet::from([3])).unwrap();
        let direct = widest_path_graph(&g, 0, 3).unwrap();
        assert_eq!(out[&3], direct);
    }
}
