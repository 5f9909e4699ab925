use std::collections::{BTreeMap, HashMap, HashSet};

use petgraph::algo::dijkstra;
use petgraph::graph::{NodeIndex, UnGraph};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Undirected link between two nodes with a one-way delay in milliseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Link {
    pub a: String,
    pub b: String,
    pub delay_ms: f64,
}

/// IoT nodes, edge nodes, the links between them, and edge memory capacities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Topology {
    pub iot_nodes: Vec<String>,
    pub edge_nodes: Vec<String>,
    pub links: Vec<Link>,
    /// Memory capacity per edge node, in the same units as variant memory
    /// requirements.
    pub capacity: BTreeMap<String, f64>,
}

impl Topology {
    pub fn iot_position(&self, id: &str) -> Option<usize> {
        self.iot_nodes.iter().position(|n| n == id)
    }

    pub fn edge_position(&self, id: &str) -> Option<usize> {
        self.edge_nodes.iter().position(|n| n == id)
    }

    /// Checks identifier uniqueness, link endpoints, delays and capacities.
    /// Connectivity is checked separately once latencies are known.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for (field, nodes) in [
            ("topology.iot_nodes", &self.iot_nodes),
            ("topology.edge_nodes", &self.edge_nodes),
        ] {
            for (k, id) in nodes.iter().enumerate() {
                if id.is_empty() {
                    return Err(Error::validation(format!("{field}[{k}]"), "empty node identifier"));
                }
                if !seen.insert(id.as_str()) {
                    return Err(Error::validation(
                        format!("{field}[{k}]"),
                        format!("duplicate node identifier `{id}`"),
                    ));
                }
            }
        }
        if self.edge_nodes.is_empty() {
            return Err(Error::validation("topology.edge_nodes", "at least one edge node is required"));
        }
        for (k, link) in self.links.iter().enumerate() {
            for endpoint in [&link.a, &link.b] {
                if !seen.contains(endpoint.as_str()) {
                    return Err(Error::validation(
                        format!("topology.links[{k}]"),
                        format!("endpoint `{endpoint}` is not a declared node"),
                    ));
                }
            }
            if !link.delay_ms.is_finite() || link.delay_ms < 0.0 {
                return Err(Error::validation(
                    format!("topology.links[{k}].delay_ms"),
                    format!("delay must be finite and non-negative, got {}", link.delay_ms),
                ));
            }
        }
        for id in self.capacity.keys() {
            if self.edge_position(id).is_none() {
                return Err(Error::validation(
                    format!("topology.capacity.{id}"),
                    "capacity given for an undeclared edge node",
                ));
            }
        }
        for id in &self.edge_nodes {
            match self.capacity.get(id) {
                None => {
                    return Err(Error::validation(format!("topology.capacity.{id}"), "missing capacity"));
                }
                Some(c) if !c.is_finite() || *c <= 0.0 => {
                    return Err(Error::validation(
                        format!("topology.capacity.{id}"),
                        format!("capacity must be finite and positive, got {c}"),
                    ));
                }
                Some(_) => {}
            }
        }
        Ok(())
    }

    fn graph(&self) -> (UnGraph<(), f64>, HashMap<&str, NodeIndex>) {
        let mut graph = UnGraph::new_undirected();
        let mut index = HashMap::new();
        for id in self.iot_nodes.iter().chain(&self.edge_nodes) {
            index.insert(id.as_str(), graph.add_node(()));
        }
        for link in &self.links {
            if let (Some(&a), Some(&b)) = (index.get(link.a.as_str()), index.get(link.b.as_str())) {
                graph.add_edge(a, b, link.delay_ms);
            }
        }
        (graph, index)
    }

    /// One-way delays from every IoT node to every edge node, row-major by
    /// IoT node. Unreachable pairs are `f64::INFINITY`.
    pub fn one_way_delays(&self) -> Vec<f64> {
        let (graph, index) = self.graph();
        let mut out = Vec::with_capacity(self.iot_nodes.len() * self.edge_nodes.len());
        for iot in &self.iot_nodes {
            let dist = dijkstra(&graph, index[iot.as_str()], None, |e| *e.weight());
            for edge in &self.edge_nodes {
                out.push(dist.get(&index[edge.as_str()]).copied().unwrap_or(f64::INFINITY));
            }
        }
        out
    }
}

/// Total delay of the cheapest path between `iot_node` and `edge_node`,
/// doubled when `round_trip` is set.
pub fn shortest_path_delay(topology: &Topology, iot_node: &str, edge_node: &str, round_trip: bool) -> Result<f64> {
    let (graph, index) = topology.graph();
    let from = *index
        .get(iot_node)
        .ok_or_else(|| Error::UnknownNode(iot_node.to_string()))?;
    let to = *index
        .get(edge_node)
        .ok_or_else(|| Error::UnknownNode(edge_node.to_string()))?;
    let dist = dijkstra(&graph, from, Some(to), |e| *e.weight());
    let one_way = dist.get(&to).copied().ok_or_else(|| Error::Unreachable {
        from: iot_node.to_string(),
        to: edge_node.to_string(),
    })?;
    Ok(if round_trip { 2.0 * one_way } else { one_way })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> Topology {
        Topology {
            iot_nodes: vec!["i".into()],
            edge_nodes: vec!["e".into(), "f".into()],
            links: vec![
                Link { a: "i".into(), b: "a".into(), delay_ms: 10.0 },
                Link { a: "a".into(), b: "e".into(), delay_ms: 12.0 },
            ],
            capacity: BTreeMap::from([("e".into(), 8.0), ("f".into(), 8.0)]),
        }
    }

    #[test]
    fn path_sum_and_round_trip() {
        let mut t = line();
        t.iot_nodes.push("a".into());
        assert_eq!(shortest_path_delay(&t, "i", "e", false).unwrap(), 22.0);
        assert_eq!(shortest_path_delay(&t, "i", "e", true).unwrap(), 44.0);
    }

    #[test]
    fn zero_delay_neighbour() {
        let mut t = line();
        t.links = vec![Link { a: "i".into(), b: "e".into(), delay_ms: 0.0 }];
        assert_eq!(shortest_path_delay(&t, "i", "e", true).unwrap(), 0.0);
    }

    #[test]
    fn unreachable_and_unknown() {
        let mut t = line();
        t.iot_nodes.push("a".into());
        assert!(matches!(shortest_path_delay(&t, "i", "f", false), Err(Error::Unreachable { .. })));
        assert!(matches!(shortest_path_delay(&t, "i", "zz", false), Err(Error::UnknownNode(_))));
    }

    #[test]
    fn validation_names_the_field() {
        let t = line();
        // `a` is not declared
        let err = t.validate().unwrap_err().to_string();
        assert!(err.contains("topology.links[0]"), "{err}");

        let mut t = line();
        t.iot_nodes.push("e".into());
        assert!(t.validate().unwrap_err().to_string().contains("duplicate"));

        let mut t = line();
        t.iot_nodes.push("a".into());
        t.links[1].delay_ms = -1.0;
        assert!(t.validate().unwrap_err().to_string().contains("links[1].delay_ms"));
    }
}
