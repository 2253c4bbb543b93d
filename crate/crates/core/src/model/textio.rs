//! Whitespace-delimited text formats for topologies and VPN hosting.
//!
//! Topology files hold one record per line: `node <id>`, `border <id>`,
//! `edge <tail> <head> <capacity>`. VPN files hold `vpn <name> hosts <id>
//! <id> ...`. Blank lines and `#` comments are ignored.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::{CoreNetwork, NodeId, VpnRegistry};
use crate::error::{Error, Result};

pub fn write_topology(net: &CoreNetwork) -> String {
    let mut out = String::new();
    for n in 0..net.node_count() {
        writeln!(out, "node {n}").unwrap();
    }
    for b in net.border_nodes() {
        writeln!(out, "border {b}").unwrap();
    }
    for e in net.edges() {
        writeln!(out, "edge {} {} {}", e.tail, e.head, e.total).unwrap();
    }
    out
}

pub fn write_vpns(registry: &VpnRegistry) -> String {
    let mut out = String::new();
    for v in registry.entries() {
        write!(out, "vpn {} hosts", v.name).unwrap();
        for h in &v.hosts {
            write!(out, " {h}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn parse_topology(text: &str, file: &str) -> Result<CoreNetwork> {
    let mut nodes: BTreeSet<NodeId> = BTreeSet::new();
    let mut borders: Vec<(usize, NodeId)> = Vec::new();
    let mut edges: Vec<(usize, NodeId, NodeId, f64)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let Some(fields) = record_fields(raw) else { continue };
        match fields[0] {
            "node" => {
                expect_len(&fields, 2, file, line, "node <id>")?;
                nodes.insert(parse_field(fields[1], file, line)?);
            }
            "border" => {
                expect_len(&fields, 2, file, line, "border <id>")?;
                borders.push((line, parse_field(fields[1], file, line)?));
            }
            "edge" => {
                expect_len(&fields, 4, file, line, "edge <tail> <head> <capacity>")?;
                edges.push((
                    line,
                    parse_field(fields[1], file, line)?,
                    parse_field(fields[2], file, line)?,
                    parse_field(fields[3], file, line)?,
                ));
            }
            other => {
                return Err(parse_err(file, line, format!("unknown record {other:?}")));
            }
        }
    }
    let node_count = nodes.len();
    if nodes.iter().enumerate().any(|(i, &n)| i != n) {
        return Err(parse_err(file, 0, "node ids must be contiguous from 0".into()));
    }
    let edge_list: Vec<(NodeId, NodeId, f64)> = edges.iter().map(|&(_, t, h, c)| (t, h, c)).collect();
    let mut net = CoreNetwork::build(node_count, &edge_list)
        .map_err(|e| parse_err(file, edges.first().map_or(0, |e| e.0), e.to_string()))?;
    for (line, b) in borders {
        net.mark_border(b).map_err(|e| parse_err(file, line, e.to_string()))?;
    }
    Ok(net)
}

pub fn parse_vpns(text: &str, file: &str) -> Result<VpnRegistry> {
    let mut registry = VpnRegistry::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let Some(fields) = record_fields(raw) else { continue };
        if fields[0] != "vpn" {
            return Err(parse_err(file, line, format!("unknown record {:?}", fields[0])));
        }
        if fields.len() < 4 || fields[2] != "hosts" {
            return Err(parse_err(file, line, "expected: vpn <name> hosts <id> <id> ...".into()));
        }
        let hosts = fields[3..]
            .iter()
            .map(|f| parse_field::<NodeId>(f, file, line))
            .collect::<Result<Vec<_>>>()?;
        registry
            .insert(fields[1], hosts)
            .map_err(|e| parse_err(file, line, e.to_string()))?;
    }
    Ok(registry)
}

fn record_fields(raw: &str) -> Option<Vec<&str>> {
    let body = raw.split('#').next().unwrap_or("").trim();
    if body.is_empty() {
        return None;
    }
    Some(body.split_whitespace().collect())
}

fn expect_len(fields: &[&str], len: usize, file: &str, line: usize, usage: &str) -> Result<()> {
    if fields.len() != len {
        return Err(parse_err(file, line, format!("expected: {usage}")));
    }
    Ok(())
}

fn parse_field<T: std::str::FromStr>(field: &str, file: &str, line: usize) -> Result<T> {
    field
        .parse()
        .map_err(|_| parse_err(file, line, format!("could not parse {field:?}")))
}

fn parse_err(file: &str, line: usize, msg: String) -> Error {
    Error::Parse { file: file.to_string(), line, msg }
}
