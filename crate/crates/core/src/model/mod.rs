//! Core network, VPN hosting, and commodity data model.
//!
//! A [`CoreNetwork`] is a directed capacitated graph with a distinguished set
//! of border (PE) nodes. Each edge carries a total capacity `t(e)` and a
//! residual capacity `r(e)` that admission control debits and releases.
//! A [`VpnRegistry`] records which VPNs are hosted on which border nodes, and
//! [`derive_commodities`] turns the two into the aggregated source-destination
//! commodity set used by every solver.

mod waxman;
pub mod textio;

pub use waxman::{generate_waxman, CapacityPolicy, WaxmanParams};

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use crate::error::{Error, Result};

pub type NodeId = usize;
pub type EdgeId = usize;
/// Index of a VPN in its registry (registries are sorted by name).
pub type VpnId = usize;

const RESIDUAL_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub tail: NodeId,
    pub head: NodeId,
    pub total: f64,
}

/// Directed capacitated core graph with border nodes and residual state.
///
/// Parallel edges are disallowed: a `(tail, head)` pair appears at most once.
/// `0 <= r(e) <= t(e)` holds for every edge at all times; oversubscribed
/// capacity views are derived objects and never mutate the residuals.
#[derive(Debug, Clone)]
pub struct CoreNetwork {
    node_count: usize,
    edges: Vec<Edge>,
    residual: Vec<f64>,
    border: BTreeSet<NodeId>,
    out_adj: Vec<Vec<EdgeId>>,
    in_adj: Vec<Vec<EdgeId>>,
    index: BTreeMap<(NodeId, NodeId), EdgeId>,
}

impl CoreNetwork {
    /// Builds a network from an edge list. Residuals start at full capacity.
    pub fn build(node_count: usize, edge_list: &[(NodeId, NodeId, f64)]) -> Result<Self> {
        let mut net = CoreNetwork {
            node_count,
            edges: Vec::with_capacity(edge_list.len()),
            residual: Vec::with_capacity(edge_list.len()),
            border: BTreeSet::new(),
            out_adj: vec![Vec::new(); node_count],
            in_adj: vec![Vec::new(); node_count],
            index: BTreeMap::new(),
        };
        for &(tail, head, capacity) in edge_list {
            net.add_edge(tail, head, capacity)?;
        }
        for adj in net.out_adj.iter_mut().chain(net.in_adj.iter_mut()) {
            adj.sort_unstable_by_key(|&e| (net.edges[e].head, net.edges[e].tail));
        }
        Ok(net)
    }

    fn add_edge(&mut self, tail: NodeId, head: NodeId, capacity: f64) -> Result<EdgeId> {
        self.check_node(tail)?;
        self.check_node(head)?;
        if capacity < 0.0 {
            return Err(Error::NegativeCapacity { tail, head, capacity });
        }
        if self.index.contains_key(&(tail, head)) {
            return Err(Error::DuplicateEdge(tail, head));
        }
        let id = self.edges.len();
        self.edges.push(Edge { tail, head, total: capacity });
        self.residual.push(capacity);
        self.index.insert((tail, head), id);
        self.out_adj[tail].push(id);
        self.in_adj[head].push(id);
        Ok(id)
    }

    fn check_node(&self, node: NodeId) -> Result<()> {
        if node >= self.node_count {
            return Err(Error::UnknownNode(node, self.node_count));
        }
        Ok(())
    }

    pub fn mark_border(&mut self, node: NodeId) -> Result<()> {
        self.check_node(node)?;
        self.border.insert(node);
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id]
    }

    pub fn edge_id(&self, tail: NodeId, head: NodeId) -> Option<EdgeId> {
        self.index.get(&(tail, head)).copied()
    }

    pub fn out_edges(&self, node: NodeId) -> &[EdgeId] {
        &self.out_adj[node]
    }

    pub fn in_edges(&self, node: NodeId) -> &[EdgeId] {
        &self.in_adj[node]
    }

    pub fn border_nodes(&self) -> &BTreeSet<NodeId> {
        &self.border
    }

    pub fn is_border(&self, node: NodeId) -> bool {
        self.border.contains(&node)
    }

    pub fn total(&self, id: EdgeId) -> f64 {
        self.edges[id].total
    }

    pub fn residual(&self, id: EdgeId) -> f64 {
        self.residual[id]
    }

    pub fn total_capacity(&self) -> f64 {
        self.edges.iter().map(|e| e.total).sum()
    }

    /// Debits `amount` from the residual of every edge along `path`.
    /// Fails (leaving the network untouched) if any edge would go negative.
    pub fn allocate_path(&mut self, path: &[NodeId], amount: f64) -> Result<()> {
        let ids = self.path_edges(path)?;
        for &e in &ids {
            if self.residual[e] + RESIDUAL_EPS < amount {
                let Edge { tail, head, .. } = self.edges[e];
                return Err(Error::ResidualRange {
                    tail,
                    head,
                    detail: format!("allocate {amount} exceeds residual {}", self.residual[e]),
                });
            }
        }
        for &e in &ids {
            self.residual[e] = (self.residual[e] - amount).max(0.0);
        }
        Ok(())
    }

    /// Returns `amount` to the residual of every edge along `path`.
    pub fn release_path(&mut self, path: &[NodeId], amount: f64) -> Result<()> {
        let ids = self.path_edges(path)?;
        for &e in &ids {
            if self.residual[e] + amount > self.edges[e].total + RESIDUAL_EPS {
                let Edge { tail, head, .. } = self.edges[e];
                return Err(Error::ResidualRange {
                    tail,
                    head,
                    detail: format!(
                        "release {amount} would exceed total {} (residual {})",
                        self.edges[e].total, self.residual[e]
                    ),
                });
            }
        }
        for &e in &ids {
            self.residual[e] = (self.residual[e] + amount).min(self.edges[e].total);
        }
        Ok(())
    }

    fn path_edges(&self, path: &[NodeId]) -> Result<Vec<EdgeId>> {
        path.windows(2)
            .map(|w| {
                self.edge_id(w[0], w[1])
                    .ok_or(Error::UnknownNode(w[1], self.node_count))
            })
            .collect()
    }

    /// True when the underlying undirected graph is connected.
    pub fn is_weakly_connected(&self) -> bool {
        if self.node_count == 0 {
            return true;
        }
        let mut seen = vec![false; self.node_count];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &e in self.out_adj[u].iter().chain(self.in_adj[u].iter()) {
                let edge = &self.edges[e];
                let v = if edge.tail == u { edge.head } else { edge.tail };
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == self.node_count
    }
}

/// Selects which per-edge capacity a solver or router sees.
///
/// `Scaled(y)` multiplies the residual capacity by an oversubscription
/// factor; it is a read-only view and never mutates `r(e)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CapacityView {
    Total,
    Residual,
    Scaled(f64),
}

impl CapacityView {
    pub fn cap(&self, net: &CoreNetwork, edge: EdgeId) -> f64 {
        match self {
            CapacityView::Total => net.total(edge),
            CapacityView::Residual => net.residual(edge),
            CapacityView::Scaled(y) => y * net.residual(edge),
        }
    }
}

/// Which VPNs live on which border nodes. Entries are sorted by name and a
/// VPN's [`VpnId`] is its index in that order.
#[derive(Debug, Clone, Default)]
pub struct VpnRegistry {
    vpns: Vec<VpnEntry>,
}

#[derive(Debug, Clone)]
pub struct VpnEntry {
    pub name: String,
    pub hosts: BTreeSet<NodeId>,
}

impl VpnRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, hosts: impl IntoIterator<Item = NodeId>) -> Result<()> {
        if self.vpns.iter().any(|v| v.name == name) {
            return Err(Error::DuplicateVpn(name.to_string()));
        }
        self.vpns.push(VpnEntry {
            name: name.to_string(),
            hosts: hosts.into_iter().collect(),
        });
        self.vpns.sort_by(|a, b| a.name.cmp(&b.name));
        Ok(())
    }

    pub fn validate(&self, net: &CoreNetwork) -> Result<()> {
        for v in &self.vpns {
            for &h in &v.hosts {
                if h >= net.node_count() || !net.is_border(h) {
                    return Err(Error::BadHosting(v.name.clone(), h));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.vpns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vpns.is_empty()
    }

    pub fn entries(&self) -> &[VpnEntry] {
        &self.vpns
    }

    pub fn name(&self, id: VpnId) -> &str {
        &self.vpns[id].name
    }

    pub fn hosts(&self, id: VpnId) -> &BTreeSet<NodeId> {
        &self.vpns[id].hosts
    }

    pub fn id_of(&self, name: &str) -> Option<VpnId> {
        self.vpns.iter().position(|v| v.name == name)
    }

    /// VPNs hosted on border node `b` (the set `U_b`).
    pub fn hosted_on(&self, b: NodeId) -> BTreeSet<VpnId> {
        self.vpns
            .iter()
            .enumerate()
            .filter(|(_, v)| v.hosts.contains(&b))
            .map(|(i, _)| i)
            .collect()
    }
}

/// An aggregated source-destination demand between two border nodes,
/// shared by every VPN hosted on both ends.
#[derive(Debug, Clone)]
pub struct Commodity {
    pub source: NodeId,
    pub dest: NodeId,
    /// VPNs common to both endpoints (`Z(s, d)`), never empty.
    pub sharing: BTreeSet<VpnId>,
    /// Demand used by the concurrent-flow solver; filled from max flow when
    /// absent.
    pub demand: Option<f64>,
}

/// Ordered commodity list, lexicographic by `(source, dest)` so every
/// downstream solver is reproducible.
#[derive(Debug, Clone, Default)]
pub struct CommoditySet {
    commodities: Vec<Commodity>,
}

impl CommoditySet {
    pub fn from_commodities(commodities: Vec<Commodity>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for c in &commodities {
            if c.source == c.dest {
                return Err(Error::SelfPair(c.source));
            }
            if !seen.insert((c.source, c.dest)) {
                return Err(Error::DuplicateEdge(c.source, c.dest));
            }
        }
        let mut commodities = commodities;
        commodities.sort_by_key(|c| (c.source, c.dest));
        Ok(CommoditySet { commodities })
    }

    pub fn len(&self) -> usize {
        self.commodities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.commodities.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Commodity> {
        self.commodities.iter()
    }

    pub fn get(&self, k: usize) -> &Commodity {
        &self.commodities[k]
    }

    pub fn index_of(&self, source: NodeId, dest: NodeId) -> Option<usize> {
        self.commodities
            .iter()
            .position(|c| c.source == source && c.dest == dest)
    }

    pub fn set_demands(&mut self, demands: &[f64]) {
        for (c, &d) in self.commodities.iter_mut().zip(demands) {
            c.demand = Some(d);
        }
    }

    /// Drops commodities whose index satisfies `keep == false`, preserving order.
    pub fn retain_indices(&mut self, keep: &[bool]) {
        let mut i = 0;
        self.commodities.retain(|_| {
            let k = keep[i];
            i += 1;
            k
        });
    }
}

/// Emits one commodity per ordered border pair `(s, d)` with
/// `Z(s, d) = U_s ∩ U_d` nonempty. Pure: identical inputs give identical
/// ordered output.
pub fn derive_commodities(net: &CoreNetwork, registry: &VpnRegistry) -> Result<CommoditySet> {
    registry.validate(net)?;
    let hosted: BTreeMap<NodeId, BTreeSet<VpnId>> = net
        .border_nodes()
        .iter()
        .map(|&b| (b, registry.hosted_on(b)))
        .collect();
    let mut commodities = Vec::new();
    for &s in net.border_nodes() {
        for &d in net.border_nodes() {
            if s == d {
                continue;
            }
            let sharing: BTreeSet<VpnId> = hosted[&s].intersection(&hosted[&d]).copied().collect();
            if !sharing.is_empty() {
                commodities.push(Commodity { source: s, dest: d, sharing, demand: None });
            }
        }
    }
    CommoditySet::from_commodities(commodities)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_network_has_full_residuals() {
        let net = CoreNetwork::build(2, &[(0, 1, 10.0)]).unwrap();
        assert_eq!(net.edge_count(), 1);
        assert_eq!(net.residual(0), 10.0);
        assert_eq!(net.total(0), 10.0);
    }

    #[test]
    fn duplicate_edge_rejected() {
        let err = CoreNetwork::build(2, &[(0, 1, 5.0), (0, 1, 5.0)]).unwrap_err();
        assert!(matches!(err, Error::DuplicateEdge(0, 1)));
    }

    #[test]
    fn negative_capacity_rejected() {
        let err = CoreNetwork::build(2, &[(0, 1, -3.0)]).unwrap_err();
        assert!(matches!(err, Error::NegativeCapacity { .. }));
    }

    #[test]
    fn dangling_endpoint_rejected() {
        let err = CoreNetwork::build(2, &[(0, 2, 1.0)]).unwrap_err();
        assert!(matches!(err, Error::UnknownNode(2, 2)));
    }

    #[test]
    fn allocate_release_round_trip() {
        let mut net = CoreNetwork::build(3, &[(0, 1, 4.0), (1, 2, 4.0)]).unwrap();
        net.allocate_path(&[0, 1, 2], 3.0).unwrap();
        assert_eq!(net.residual(0), 1.0);
        net.release_path(&[0, 1, 2], 3.0).unwrap();
        assert_eq!(net.residual(0), 4.0);
        assert!(net.allocate_path(&[0, 1, 2], 5.0).is_err());
        assert!(net.release_path(&[0, 1], 1.0).is_err());
    }

    #[test]
    fn derive_commodities_shared_pair() {
        let mut net = CoreNetwork::build(2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        net.mark_border(0).unwrap();
        net.mark_border(1).unwrap();
        let mut reg = VpnRegistry::new();
        reg.insert("A", [0, 1]).unwrap();
        reg.insert("B", [0, 1]).unwrap();
        let ks = derive_commodities(&net, &reg).unwrap();
        assert_eq!(ks.len(), 2);
        for c in ks.iter() {
            assert_eq!(c.sharing.len(), 2);
        }
    }

    #[test]
    fn derive_commodities_single_vpn_three_borders() {
        let edges: Vec<(usize, usize, f64)> = (0..3)
            .flat_map(|i| (0..3).filter(move |&j| j != i).map(move |j| (i, j, 1.0)))
            .collect();
        let mut net = CoreNetwork::build(3, &edges).unwrap();
        for b in 0..3 {
            net.mark_border(b).unwrap();
        }
        let mut reg = VpnRegistry::new();
        reg.insert("A", [0, 1, 2]).unwrap();
        let ks = derive_commodities(&net, &reg).unwrap();
        assert_eq!(ks.len(), 6);
        assert!(ks.iter().all(|c| c.sharing.len() == 1));
    }

    #[test]
    fn derive_commodities_disjoint_hosting_is_empty() {
        let mut net = CoreNetwork::build(2, &[(0, 1, 1.0)]).unwrap();
        net.mark_border(0).unwrap();
        net.mark_border(1).unwrap();
        let mut reg = VpnRegistry::new();
        reg.insert("A", [0]).unwrap();
        reg.insert("B", [1]).unwrap();
        let ks = derive_commodities(&net, &reg).unwrap();
        assert!(ks.is_empty());
    }

    #[test]
    fn derive_commodities_is_deterministic() {
        let mut net = CoreNetwork::build(4, &[(0, 1, 1.0), (1, 2, 2.0), (2, 3, 3.0), (3, 0, 4.0)]).unwrap();
        for b in [0, 2, 3] {
            net.mark_border(b).unwrap();
        }
        let mut reg = VpnRegistry::new();
        reg.insert("A", [0, 2, 3]).unwrap();
        reg.insert("B", [0, 3]).unwrap();
        let a = derive_commodities(&net, &reg).unwrap();
        let b = derive_commodities(&net, &reg).unwrap();
        let pairs = |s: &CommoditySet| s.iter().map(|c| (c.source, c.dest)).collect::<Vec<_>>();
        assert_eq!(pairs(&a), pairs(&b));
        let mut sorted = pairs(&a);
        sorted.sort_unstable();
        assert_eq!(pairs(&a), sorted);
    }

    #[test]
    fn registry_rejects_non_border_host() {
        let net = CoreNetwork::build(2, &[(0, 1, 1.0)]).unwrap();
        let mut reg = VpnRegistry::new();
        reg.insert("A", [0]).unwrap();
        assert!(reg.validate(&net).is_err());
    }
}
