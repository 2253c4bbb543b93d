//! Desk-scale exact linear programming.
//!
//! A dense two-phase simplex with Bland's least-index anti-cycling rule and a
//! 1e-9 pivot tolerance. This is the oracle the flow solvers and tests lean
//! on, not a production solver; keep instances small.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{CommoditySet, CoreNetwork, NodeId, VpnId, VpnRegistry};

pub const LP_FEAS_TOL: f64 = 1e-7;
const PIVOT_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 500_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// Maximization program over variables with box bounds (default `[0, +inf)`).
#[derive(Debug, Clone)]
pub struct LinearProgram {
    num_vars: usize,
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub x: Vec<f64>,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            num_vars,
            objective: vec![0.0; num_vars],
            constraints: Vec::new(),
            lower: vec![0.0; num_vars],
            upper: vec![f64::INFINITY; num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn set_objective(&mut self, var: usize, coeff: f64) {
        self.objective[var] = coeff;
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint { coeffs, relation, rhs });
    }

    fn validate(&self) -> Result<()> {
        for (i, c) in self.constraints.iter().enumerate() {
            for &(j, _) in &c.coeffs {
                if j >= self.num_vars {
                    return Err(Error::MalformedProgram(format!(
                        "constraint {i} references variable {j} of {}",
                        self.num_vars
                    )));
                }
            }
        }
        for j in 0..self.num_vars {
            if !self.lower[j].is_finite() {
                return Err(Error::MalformedProgram(format!("variable {j} needs a finite lower bound")));
            }
            if self.lower[j] > self.upper[j] {
                return Err(Error::MalformedProgram(format!(
                    "variable {j} has lower {} > upper {}",
                    self.lower[j], self.upper[j]
                )));
            }
        }
        Ok(())
    }

    /// Residual of constraint `i` at point `x` (positive = violated amount).
    pub fn violation(&self, i: usize, x: &[f64]) -> f64 {
        let c = &self.constraints[i];
        let lhs: f64 = c.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
        match c.relation {
            Relation::Le => lhs - c.rhs,
            Relation::Ge => c.rhs - lhs,
            Relation::Eq => (lhs - c.rhs).abs(),
        }
    }

    pub fn max_violation(&self, x: &[f64]) -> f64 {
        (0..self.constraints.len())
            .map(|i| self.violation(i, x))
            .fold(0.0, f64::max)
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Text dump in the common LP interchange layout, for cross-checking with
    /// external tools.
    pub fn write_lp_text(&self) -> String {
        let mut out = String::from("Maximize\n obj:");
        for (j, &c) in self.objective.iter().enumerate() {
            if c != 0.0 {
                write!(out, " {} {} x{j}", if c < 0.0 { "-" } else { "+" }, c.abs()).unwrap();
            }
        }
        out.push_str("\nSubject To\n");
        for (i, con) in self.constraints.iter().enumerate() {
            write!(out, " c{i}:").unwrap();
            for &(j, a) in &con.coeffs {
                write!(out, " {} {} x{j}", if a < 0.0 { "-" } else { "+" }, a.abs()).unwrap();
            }
            let rel = match con.relation {
                Relation::Le => "<=",
                Relation::Eq => "=",
                Relation::Ge => ">=",
            };
            writeln!(out, " {rel} {}", con.rhs).unwrap();
        }
        out.push_str("Bounds\n");
        for j in 0..self.num_vars {
            if self.upper[j].is_finite() {
                writeln!(out, " {} <= x{j} <= {}", self.lower[j], self.upper[j]).unwrap();
            } else if self.lower[j] != 0.0 {
                writeln!(out, " x{j} >= {}", self.lower[j]).unwrap();
            }
        }
        out.push_str("End\n");
        out
    }
}

/// Solves the program exactly. Feasibility and unboundedness are classified;
/// the solve is deterministic for a fixed program.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.num_vars;

    // Shift variables to y = x - lower so every variable is nonnegative, and
    // turn finite upper bounds into rows.
    let mut rows: Vec<(Vec<f64>, Relation, f64)> = Vec::new();
    for c in &lp.constraints {
        let mut dense = vec![0.0; n];
        let mut shift = 0.0;
        for &(j, a) in &c.coeffs {
            dense[j] += a;
            shift += a * lp.lower[j];
        }
        rows.push((dense, c.relation, c.rhs - shift));
    }
    for j in 0..n {
        if lp.upper[j].is_finite() {
            let mut dense = vec![0.0; n];
            dense[j] = 1.0;
            rows.push((dense, Relation::Le, lp.upper[j] - lp.lower[j]));
        }
    }

    let mut tableau = Tableau::build(n, &mut rows);
    if !tableau.phase_one() {
        return Ok(LpSolution { status: LpStatus::Infeasible, objective: f64::NAN, x: Vec::new() });
    }
    let mut costs = vec![0.0; tableau.ncols];
    costs[..n].copy_from_slice(&lp.objective);
    match tableau.phase_two(&costs) {
        PhaseEnd::Unbounded => {
            Ok(LpSolution { status: LpStatus::Unbounded, objective: f64::INFINITY, x: Vec::new() })
        }
        PhaseEnd::Optimal => {
            let y = tableau.solution(n);
            let x: Vec<f64> = (0..n).map(|j| lp.lower[j] + y[j]).collect();
            let objective = lp.objective_at(&x);
            debug_assert!(lp.max_violation(&x) <= LP_FEAS_TOL, "violation {}", lp.max_violation(&x));
            Ok(LpSolution { status: LpStatus::Optimal, objective, x })
        }
    }
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

struct Tableau {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    basis: Vec<usize>,
    ncols: usize,
    art_start: usize,
}

impl Tableau {
    fn build(n: usize, rows: &mut [(Vec<f64>, Relation, f64)]) -> Tableau {
        // Nonnegative right-hand sides first.
        for (dense, rel, rhs) in rows.iter_mut() {
            if *rhs < 0.0 {
                for v in dense.iter_mut() {
                    *v = -*v;
                }
                *rhs = -*rhs;
                *rel = match *rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
        }
        let m = rows.len();
        let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
        let ncols = n + n_slack + n_art;
        let art_start = n + n_slack;
        let mut a = vec![vec![0.0; ncols]; m];
        let mut b = vec![0.0; m];
        let mut basis = vec![0usize; m];
        let mut slack = n;
        let mut art = art_start;
        for (i, (dense, rel, rhs)) in rows.iter().enumerate() {
            a[i][..n].copy_from_slice(dense);
            b[i] = *rhs;
            match rel {
                Relation::Le => {
                    a[i][slack] = 1.0;
                    basis[i] = slack;
                    slack += 1;
                }
                Relation::Ge => {
                    a[i][slack] = -1.0;
                    slack += 1;
                    a[i][art] = 1.0;
                    basis[i] = art;
                    art += 1;
                }
                Relation::Eq => {
                    a[i][art] = 1.0;
                    basis[i] = art;
                    art += 1;
                }
            }
        }
        Tableau { a, b, basis, ncols, art_start }
    }

    /// Drives the artificial objective to zero. Returns false when the
    /// program is infeasible.
    fn phase_one(&mut self) -> bool {
        if self.art_start == self.ncols {
            return true;
        }
        let mut costs = vec![0.0; self.ncols];
        for j in self.art_start..self.ncols {
            costs[j] = -1.0;
        }
        match self.run(&costs, |_| true) {
            PhaseEnd::Unbounded => unreachable!("phase-one objective is bounded above by zero"),
            PhaseEnd::Optimal => {}
        }
        let residual: f64 = self
            .basis
            .iter()
            .zip(&self.b)
            .filter(|(&v, _)| v >= self.art_start)
            .map(|(_, &b)| b)
            .sum();
        residual <= LP_FEAS_TOL
    }

    fn phase_two(&mut self, costs: &[f64]) -> PhaseEnd {
        let art_start = self.art_start;
        self.run(costs, |j| j < art_start)
    }

    /// Bland's rule: least-index entering column with positive reduced cost;
    /// least-index basic variable on ratio ties.
    fn run(&mut self, costs: &[f64], allowed: impl Fn(usize) -> bool) -> PhaseEnd {
        let m = self.a.len();
        for _ in 0..MAX_PIVOTS {
            // Reduced costs d_j = c_j - c_B B^-1 A_j, recomputed from the
            // current tableau rows (they are already B^-1 A).
            let mut entering = None;
            for j in 0..self.ncols {
                if !allowed(j) || self.basis.contains(&j) {
                    continue;
                }
                let mut d = costs[j];
                for i in 0..m {
                    let cb = costs[self.basis[i]];
                    if cb != 0.0 {
                        d -= cb * self.a[i][j];
                    }
                }
                if d > PIVOT_TOL {
                    entering = Some(j);
                    break;
                }
            }
            let Some(col) = entering else { return PhaseEnd::Optimal };
            let mut leaving: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for i in 0..m {
                if self.a[i][col] > PIVOT_TOL {
                    let ratio = self.b[i] / self.a[i][col];
                    let better = ratio < best_ratio - PIVOT_TOL
                        || ((ratio - best_ratio).abs() <= PIVOT_TOL
                            && leaving.is_some_and(|r| self.basis[i] < self.basis[r]));
                    if leaving.is_none() || better {
                        if ratio < best_ratio {
                            best_ratio = ratio;
                        }
                        leaving = Some(i);
                    }
                }
            }
            let Some(row) = leaving else { return PhaseEnd::Unbounded };
            self.pivot(row, col);
        }
        panic!("simplex exceeded {MAX_PIVOTS} pivots");
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.a[row][col];
        for v in self.a[row].iter_mut() {
            *v /= p;
        }
        self.b[row] /= p;
        for i in 0..self.a.len() {
            if i == row {
                continue;
            }
            let factor = self.a[i][col];
            if factor == 0.0 {
                continue;
            }
            for j in 0..self.ncols {
                self.a[i][j] -= factor * self.a[row][j];
            }
            self.b[i] -= factor * self.b[row];
            if self.b[i].abs() < 1e-12 {
                self.b[i] = 0.0;
            }
        }
        self.basis[row] = col;
    }

    fn solution(&self, n: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        for (i, &v) in self.basis.iter().enumerate() {
            if v < n {
                x[v] = self.b[i].max(0.0);
            }
        }
        x
    }
}

/// The monolithic per-VPN capacity-sharing program: maximize total assigned
/// edge resource subject to per-(VPN, pair) conservation, shared edge
/// capacity, and equal aggregate flow for VPNs sharing a pair.
///
/// Desk-scale only; guarded by node and variable counts.
pub struct VpnCsProgram {
    pub lp: LinearProgram,
    /// Ordered (source, dest) pairs with a nonempty sharing set.
    pub pairs: Vec<(NodeId, NodeId)>,
    /// Per pair, the VPNs sharing it (sorted).
    pub sharing: Vec<Vec<VpnId>>,
    num_edges: usize,
    blocks: Vec<(usize, usize)>,
}

impl VpnCsProgram {
    /// Column of x^{v,k}_{e} for pair index `k`, member index `m` in its
    /// sharing list, edge `e`.
    pub fn edge_var(&self, k: usize, m: usize, e: usize) -> usize {
        self.blocks[k].0 + m * (self.num_edges + 1) + e
    }

    /// Column of the aggregate flow f_{v,k}.
    pub fn flow_var(&self, k: usize, m: usize) -> usize {
        self.blocks[k].0 + m * (self.num_edges + 1) + self.num_edges
    }
}

pub fn build_vpn_cs_lp(
    net: &CoreNetwork,
    registry: &VpnRegistry,
    commodities: &CommoditySet,
) -> Result<VpnCsProgram> {
    const MAX_NODES: usize = 10;
    const MAX_VARS: usize = 20_000;
    if net.node_count() > MAX_NODES {
        return Err(Error::SizeGuard(format!(
            "{} nodes exceeds the {MAX_NODES}-node guard for the exact fairness program",
            net.node_count()
        )));
    }
    let ne = net.edge_count();
    let pairs: Vec<(NodeId, NodeId)> = commodities.iter().map(|c| (c.source, c.dest)).collect();
    let sharing: Vec<Vec<VpnId>> = commodities
        .iter()
        .map(|c| c.sharing.iter().copied().collect())
        .collect();

    let mut blocks = Vec::with_capacity(pairs.len());
    let mut cursor = 0usize;
    for z in &sharing {
        blocks.push((cursor, z.len()));
        cursor += z.len() * (ne + 1);
    }
    if cursor > MAX_VARS {
        return Err(Error::SizeGuard(format!("{cursor} variables exceeds the {MAX_VARS} guard")));
    }

    let mut prog = VpnCsProgram {
        lp: LinearProgram::new(cursor),
        pairs,
        sharing,
        num_edges: ne,
        blocks,
    };

    for k in 0..prog.pairs.len() {
        for m in 0..prog.sharing[k].len() {
            for e in 0..ne {
                prog.lp.set_objective(prog.edge_var(k, m, e), 1.0);
            }
        }
    }
    // Conservation at every node for every (pair, VPN) block.
    for k in 0..prog.pairs.len() {
        let (s, d) = prog.pairs[k];
        for m in 0..prog.sharing[k].len() {
            for node in 0..net.node_count() {
                let mut coeffs: Vec<(usize, f64)> = Vec::new();
                for &e in net.out_edges(node) {
                    coeffs.push((prog.edge_var(k, m, e), 1.0));
                }
                for &e in net.in_edges(node) {
                    coeffs.push((prog.edge_var(k, m, e), -1.0));
                }
                if node == s {
                    coeffs.push((prog.flow_var(k, m), -1.0));
                } else if node == d {
                    coeffs.push((prog.flow_var(k, m), 1.0));
                }
                prog.lp.add_constraint(coeffs, Relation::Eq, 0.0);
            }
        }
    }
    // Shared edge capacity.
    for e in 0..ne {
        let mut coeffs: Vec<(usize, f64)> = Vec::new();
        for k in 0..prog.pairs.len() {
            for m in 0..prog.sharing[k].len() {
                coeffs.push((prog.edge_var(k, m, e), 1.0));
            }
        }
        prog.lp.add_constraint(coeffs, Relation::Le, net.total(e));
    }
    // Equal aggregate flow inside each sharing set.
    for k in 0..prog.pairs.len() {
        for m in 1..prog.sharing[k].len() {
            prog.lp.add_constraint(
                vec![(prog.flow_var(k, m - 1), 1.0), (prog.flow_var(k, m), -1.0)],
                Relation::Eq,
                0.0,
            );
        }
    }
    Ok(prog)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::derive_commodities;

    #[test]
    fn single_bound() {
        let mut lp = LinearProgram::new(1);
        lp.set_objective(0, 1.0);
        lp.add_constraint(vec![(0, 1.0)], Relation::Le, 5.0);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 5.0).abs() < 1e-9);
    }

    #[test]
    fn contradictory_bounds_infeasible() {
        let mut lp = LinearProgram::new(1);
        lp.set_objective(0, 1.0);
        lp.add_constraint(vec![(0, 1.0)], Relation::Le, 5.0);
        lp.add_constraint(vec![(0, 1.0)], Relation::Ge, 7.0);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
    }

    #[test]
    fn two_variable_optimum() {
        let mut lp = LinearProgram::new(2);
        lp.set_objective(0, 1.0);
        lp.set_objective(1, 1.0);
        lp.add_constraint(vec![(0, 1.0), (1, 1.0)], Relation::Le, 3.0);
        lp.add_constraint(vec![(0, 1.0)], Relation::Le, 2.0);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 3.0).abs() < 1e-9);
    }

    #[test]
    fn unbounded_detected() {
        let mut lp = LinearProgram::new(2);
        lp.set_objective(0, 1.0);
        lp.add_constraint(vec![(1, 1.0)], Relation::Le, 4.0);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_and_shifted_bounds() {
        // maximize x + 2y, x + y = 4, 1 <= x <= 3, y in [0, 2.5]
        let mut lp = LinearProgram::new(2);
        lp.set_objective(0, 1.0);
        lp.set_objective(1, 2.0);
        lp.set_bounds(0, 1.0, 3.0);
        lp.set_bounds(1, 0.0, 2.5);
        lp.add_constraint(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 4.0);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - (1.5 + 5.0)).abs() < 1e-7, "objective {}", sol.objective);
        assert!((sol.x[0] - 1.5).abs() < 1e-7);
        assert!((sol.x[1] - 2.5).abs() < 1e-7);
    }

    #[test]
    fn resolve_is_deterministic() {
        let mut lp = LinearProgram::new(3);
        for j in 0..3 {
            lp.set_objective(j, (j + 1) as f64);
        }
        lp.add_constraint(vec![(0, 1.0), (1, 2.0), (2, 1.0)], Relation::Le, 10.0);
        lp.add_constraint(vec![(0, 1.0), (2, 3.0)], Relation::Le, 9.0);
        let a = solve_lp(&lp).unwrap();
        let b = solve_lp(&lp).unwrap();
        assert_eq!(a.objective, b.objective);
        assert_eq!(a.x, b.x);
    }

    fn degenerate_net() -> (CoreNetwork, VpnRegistry) {
        let mut net = CoreNetwork::build(2, &[(0, 1, 5.0)]).unwrap();
        net.mark_border(0).unwrap();
        net.mark_border(1).unwrap();
        let mut reg = VpnRegistry::new();
        reg.insert("A", [0, 1]).unwrap();
        (net, reg)
    }

    #[test]
    fn vpn_cs_single_edge_single_vpn() {
        let (net, reg) = degenerate_net();
        let ks = derive_commodities(&net, &reg).unwrap();
        let prog = build_vpn_cs_lp(&net, &reg, &ks).unwrap();
        let sol = solve_lp(&prog.lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 5.0).abs() < 1e-7);
        let k = prog.pairs.iter().position(|&p| p == (0, 1)).unwrap();
        assert!((sol.x[prog.flow_var(k, 0)] - 5.0).abs() < 1e-7);
    }

    #[test]
    fn vpn_cs_fairness_splits_shared_edge() {
        let mut net = CoreNetwork::build(2, &[(0, 1, 10.0)]).unwrap();
        net.mark_border(0).unwrap();
        net.mark_border(1).unwrap();
        let mut reg = VpnRegistry::new();
        reg.insert("A", [0, 1]).unwrap();
        reg.insert("B", [0, 1]).unwrap();
        let ks = derive_commodities(&net, &reg).unwrap();
        let prog = build_vpn_cs_lp(&net, &reg, &ks).unwrap();
        let sol = solve_lp(&prog.lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        let k = prog.pairs.iter().position(|&p| p == (0, 1)).unwrap();
        let f_a = sol.x[prog.flow_var(k, 0)];
        let f_b = sol.x[prog.flow_var(k, 1)];
        assert!((f_a - f_b).abs() < 1e-7);
        assert!((f_a - 5.0).abs() < 1e-7);
    }

    #[test]
    fn size_guard_trips() {
        let edges: Vec<(usize, usize, f64)> = (0..11).map(|i| (i, (i + 1) % 12, 1.0)).collect();
        let mut net = CoreNetwork::build(12, &edges).unwrap();
        net.mark_border(0).unwrap();
        net.mark_border(1).unwrap();
        let mut reg = VpnRegistry::new();
        reg.insert("A", [0, 1]).unwrap();
        let ks = derive_commodities(&net, &reg).unwrap();
        assert!(matches!(build_vpn_cs_lp(&net, &reg, &ks), Err(Error::SizeGuard(_))));
    }

    #[test]
    fn lp_text_dump_mentions_all_sections() {
        let mut lp = LinearProgram::new(2);
        lp.set_objective(0, 3.0);
        lp.set_bounds(1, 0.0, 2.0);
        lp.add_constraint(vec![(0, 1.0), (1, -1.0)], Relation::Ge, 1.0);
        let text = lp.write_lp_text();
        for needle in ["Maximize", "Subject To", ">= 1", "Bounds", "End"] {
            assert!(text.contains(needle), "missing {needle} in:\n{text}");
        }
    }
}
