//! Concurrent and multicommodity flow solvers over a commodity set.
//!
//! Two routes to every solution: an exact node-arc LP through the simplex
//! oracle, and a length-function FPTAS for online-scale instances. Both
//! produce the same [`FlowSolution`] shape so partitioning and balancing do
//! not care which one ran.

mod decompose;
mod exact;
mod fptas;

pub use decompose::path_decompose;

use std::fmt;

use crate::error::{Error, Result};
use crate::flow::{FlowGraph, Path};
use crate::model::{CapacityView, CommoditySet, CoreNetwork};

pub const FLOW_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowMode {
    Mconf,
    Mmcf,
    BoundedMmcf,
}

impl fmt::Display for FlowMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FlowMode::Mconf => "mconf",
            FlowMode::Mmcf => "mmcf",
            FlowMode::BoundedMmcf => "bounded-mmcf",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Exact,
    Fptas(FptasEps),
}

/// Approximation factor for the FPTAS; the solver guarantees an objective of
/// at least `(1 - eps)` times the optimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FptasEps(pub f64);

impl Eq for FptasEps {}

impl SolveMethod {
    pub fn epsilon(&self) -> f64 {
        match self {
            SolveMethod::Exact => 0.0,
            SolveMethod::Fptas(FptasEps(e)) => *e,
        }
    }
}

/// Per-commodity edge flows plus aggregates; `beta` is set in concurrent
/// mode only.
#[derive(Debug, Clone)]
pub struct FlowSolution {
    pub mode: FlowMode,
    /// Approximation factor used; 0 for exact solves.
    pub epsilon: f64,
    pub beta: Option<f64>,
    /// `flows[k][e]` is commodity `k`'s flow on edge `e`.
    pub flows: Vec<Vec<f64>>,
    /// Aggregate flow per commodity (`f(k)`).
    pub aggregates: Vec<f64>,
}

impl FlowSolution {
    pub fn empty(mode: FlowMode, epsilon: f64) -> Self {
        FlowSolution { mode, epsilon, beta: None, flows: Vec::new(), aggregates: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.flows.is_empty()
    }

    pub fn num_commodities(&self) -> usize {
        self.flows.len()
    }

    pub fn aggregate_total(&self) -> f64 {
        self.aggregates.iter().sum()
    }

    pub fn edge_total(&self, e: usize) -> f64 {
        self.flows.iter().map(|f| f[e]).sum()
    }

    /// Largest per-edge overload against the capacities in `graph`
    /// (0 when feasible).
    pub fn max_overload(&self, graph: &FlowGraph) -> f64 {
        (0..graph.edge_count())
            .map(|e| self.edge_total(e) - graph.capacity(e))
            .fold(0.0, f64::max)
    }
}

/// Per-commodity lower and upper aggregate-flow bounds for the bounded
/// formulation.
#[derive(Debug, Clone)]
pub struct FlowBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl FlowBounds {
    pub fn vacuous(k: usize) -> Self {
        FlowBounds { lower: vec![0.0; k], upper: vec![f64::INFINITY; k] }
    }
}

/// Outcome of a bounded solve; infeasible bound sets are a legal result the
/// caller handles (fallback to the unbounded solution).
#[derive(Debug, Clone)]
pub enum BoundedOutcome {
    Solved(FlowSolution),
    Infeasible,
}

/// One (path, flow) list per commodity, in commodity order.
#[derive(Debug, Clone)]
pub struct PathDecomposition {
    pub paths: Vec<Vec<(Path, f64)>>,
}

impl PathDecomposition {
    pub fn edge_sums(&self, k: usize, graph: &FlowGraph) -> Vec<f64> {
        let mut sums = vec![0.0; graph.edge_count()];
        for (path, flow) in &self.paths[k] {
            for w in path.windows(2) {
                let e = edge_between(graph, w[0], w[1]).expect("path edge missing from graph");
                sums[e] += flow;
            }
        }
        sums
    }

    pub fn total(&self, k: usize) -> f64 {
        self.paths[k].iter().map(|(_, f)| f).sum()
    }
}

pub(crate) fn edge_between(graph: &FlowGraph, tail: usize, head: usize) -> Option<usize> {
    graph.out_edges(tail).iter().copied().find(|&e| graph.edges()[e].1 == head)
}

fn demands(commodities: &CommoditySet) -> Result<Vec<f64>> {
    commodities
        .iter()
        .enumerate()
        .map(|(k, c)| match c.demand {
            Some(d) if d > 0.0 => Ok(d),
            Some(d) => Err(Error::NonPositiveDemand(k, d)),
            None => Err(Error::NonPositiveDemand(k, 0.0)),
        })
        .collect()
}

/// Maximum concurrent flow: maximize the common satisfied fraction of every
/// commodity's demand. Exact solves return the optimal throughput; the FPTAS
/// returns a feasible solution within `(1 - eps)` of it, with all
/// `f(k)/D(k)` equal after the final rescale.
pub fn solve_mconf(
    net: &CoreNetwork,
    view: CapacityView,
    commodities: &CommoditySet,
    method: SolveMethod,
) -> Result<FlowSolution> {
    let graph = FlowGraph::from_network(net, view);
    solve_mconf_graph(&graph, commodities, method)
}

pub fn solve_mconf_graph(
    graph: &FlowGraph,
    commodities: &CommoditySet,
    method: SolveMethod,
) -> Result<FlowSolution> {
    if commodities.is_empty() {
        return Ok(FlowSolution::empty(FlowMode::Mconf, method.epsilon()));
    }
    let demands = demands(commodities)?;
    match method {
        SolveMethod::Exact => exact::mconf(graph, commodities, &demands),
        SolveMethod::Fptas(FptasEps(eps)) => fptas::mconf(graph, commodities, &demands, eps),
    }
}

/// Maximum multicommodity flow: maximize total flow over all commodities.
pub fn solve_mmcf(
    net: &CoreNetwork,
    view: CapacityView,
    commodities: &CommoditySet,
    method: SolveMethod,
) -> Result<FlowSolution> {
    let graph = FlowGraph::from_network(net, view);
    solve_mmcf_graph(&graph, commodities, method)
}

pub fn solve_mmcf_graph(
    graph: &FlowGraph,
    commodities: &CommoditySet,
    method: SolveMethod,
) -> Result<FlowSolution> {
    if commodities.is_empty() {
        return Ok(FlowSolution::empty(FlowMode::Mmcf, method.epsilon()));
    }
    match method {
        SolveMethod::Exact => exact::mmcf(graph, commodities, None),
        SolveMethod::Fptas(FptasEps(eps)) => fptas::mmcf(graph, commodities, eps),
    }
}

/// Bounded multicommodity flow: MMCF objective with per-commodity aggregate
/// flow confined to `bounds`. Always solved through the LP; bound rows have
/// no FPTAS counterpart, so approximate requests fall back to the exact
/// route (the method's epsilon is recorded as 0).
pub fn solve_bounded_mmcf(
    net: &CoreNetwork,
    view: CapacityView,
    commodities: &CommoditySet,
    bounds: &FlowBounds,
    _method: SolveMethod,
) -> Result<BoundedOutcome> {
    let graph = FlowGraph::from_network(net, view);
    solve_bounded_mmcf_graph(&graph, commodities, bounds)
}

pub fn solve_bounded_mmcf_graph(
    graph: &FlowGraph,
    commodities: &CommoditySet,
    bounds: &FlowBounds,
) -> Result<BoundedOutcome> {
    if commodities.is_empty() {
        return Ok(BoundedOutcome::Solved(FlowSolution::empty(FlowMode::BoundedMmcf, 0.0)));
    }
    exact::bounded_mmcf(graph, commodities, bounds)
}

/// CSV dump: one `(commodity, tail, head, flow)` row per positive edge flow,
/// then one `(commodity, aggregate, alpha, ratio)` summary row per commodity.
pub fn flow_solution_csv(
    commodities: &CommoditySet,
    solution: &FlowSolution,
    graph: &FlowGraph,
    alphas: Option<&[f64]>,
) -> String {
    let mut out = String::from("commodity,tail,head,flow\n");
    for (k, c) in commodities.iter().enumerate() {
        for (e, &(tail, head, _)) in graph.edges().iter().enumerate() {
            let f = solution.flows[k][e];
            if f > FLOW_TOL {
                out.push_str(&format!("{}-{},{},{},{:.9}\n", c.source, c.dest, tail, head, f));
            }
        }
    }
    out.push_str("commodity,aggregate,alpha,ratio\n");
    for (k, c) in commodities.iter().enumerate() {
        let aggregate = solution.aggregates[k];
        let (alpha, ratio) = match alphas {
            Some(a) if a[k] > 0.0 => (a[k], aggregate / a[k]),
            Some(a) => (a[k], f64::NAN),
            None => (f64::NAN, f64::NAN),
        };
        out.push_str(&format!("{}-{},{:.9},{:.9},{:.9}\n", c.source, c.dest, aggregate, alpha, ratio));
    }
    out
}

/// Conservation check used by the solvers' debug assertions and the
/// decomposition preflight.
pub(crate) fn check_conservation(
    graph: &FlowGraph,
    commodities: &CommoditySet,
    flows: &[Vec<f64>],
    tol: f64,
) -> Result<Vec<f64>> {
    let mut aggregates = Vec::with_capacity(flows.len());
    for (k, c) in commodities.iter().enumerate() {
        let mut net_out = vec![0.0; graph.node_count()];
        for (e, &(tail, head, _)) in graph.edges().iter().enumerate() {
            net_out[tail] += flows[k][e];
            net_out[head] -= flows[k][e];
        }
        for node in 0..graph.node_count() {
            if node == c.source || node == c.dest {
                continue;
            }
            if net_out[node].abs() > tol {
                return Err(Error::Conservation { commodity: k, node, imbalance: net_out[node] });
            }
        }
        if (net_out[c.source] + net_out[c.dest]).abs() > tol {
            return Err(Error::Conservation {
                commodity: k,
                node: c.source,
                imbalance: net_out[c.source] + net_out[c.dest],
            });
        }
        aggregates.push(net_out[c.source]);
    }
    Ok(aggregates)
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use crate::model::Commodity;
    use std::collections::BTreeSet;

    /// Two edges A(0)->B(1) and B(1)->C(2) of capacity 1, with the three
    /// commodities (A,B), (A,C), (B,C), demands 1 each.
    pub fn triangle() -> (FlowGraph, CommoditySet) {
        let graph = FlowGraph::from_edges(3, vec![(0, 1, 1.0), (1, 2, 1.0)]);
        let commodities = CommoditySet::from_commodities(vec![
            Commodity { source: 0, dest: 1, sharing: BTreeSet::from([0]), demand: Some(1.0) },
            Commodity { source: 0, dest: 2, sharing: BTreeSet::from([0]), demand: Some(1.0) },
            Commodity { source: 1, dest: 2, sharing: BTreeSet::from([0]), demand: Some(1.0) },
        ])
        .unwrap();
        (graph, commodities)
    }
}
