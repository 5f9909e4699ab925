//! TOML solution files.
//!
//! ```toml
//! [meta]
//! status = "optimal"
//! objective = 1.93
//! lower_bound = 1.93
//! nodes_explored = 41
//! elapsed_secs = 0.002
//!
//! [[x]]
//! iot = "iot0"
//! edge = "edge1"
//! model = "inception_v1"
//! variant = 3
//!
//! [[n]]
//! edge = "edge1"
//! model = "inception_v1"
//! variant = 3
//! count = 1
//!
//! [z]
//! edge0 = 0.0
//! edge1 = 0.0105
//! ```
//!
//! Only nonzero `x` and `n` entries are listed. Variants are numbered from 1.
//! A feasibility report uses the same document with a `[[violations]]` array.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{check_feasibility, node_costs, Assignment, ConstraintId, Location, Solution, Violation};
use crate::error::{Error, Result};
use crate::instance::io::toml_error;
use crate::instance::Instance;
use crate::solver::SolveStatus;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveMeta {
    pub status: SolveStatus,
    pub objective: f64,
    pub lower_bound: f64,
    pub nodes_explored: u64,
    pub elapsed_secs: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct XEntry {
    iot: String,
    edge: String,
    model: String,
    variant: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NEntry {
    edge: String,
    model: String,
    variant: usize,
    count: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ViolationEntry {
    constraint: ConstraintId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    iot: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    edge: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    variant: Option<usize>,
    magnitude: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolutionFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<SolveMeta>,
    #[serde(default)]
    x: Vec<XEntry>,
    #[serde(default)]
    n: Vec<NEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    z: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    violations: Vec<ViolationEntry>,
}

/// Contents of a solution file.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionDocument {
    pub meta: Option<SolveMeta>,
    pub solution: Solution,
    pub violations: Vec<Violation>,
}

impl SolutionDocument {
    pub fn new(solution: Solution) -> Self {
        SolutionDocument {
            meta: None,
            solution,
            violations: Vec::new(),
        }
    }

    /// Document carrying the solution together with its feasibility report.
    pub fn audited(instance: &Instance, solution: Solution) -> Self {
        let violations = check_feasibility(instance, &solution).violations;
        SolutionDocument {
            meta: None,
            solution,
            violations,
        }
    }

    pub fn to_toml(&self, instance: &Instance) -> String {
        let topo = instance.topology();
        let catalog = instance.catalog();
        let x = self
            .solution
            .assignments()
            .map(|a| XEntry {
                iot: topo.iot_nodes[a.iot].clone(),
                edge: topo.edge_nodes[a.edge].clone(),
                model: catalog.models[a.model].name.clone(),
                variant: a.variant + 1,
            })
            .collect();
        let mut n = Vec::new();
        for e in 0..instance.n_edge() {
            for s in 0..instance.n_slots() {
                let count = self.solution.replicas(e, s);
                if count > 0 {
                    n.push(NEntry {
                        edge: topo.edge_nodes[e].clone(),
                        model: catalog.models[instance.slot_model(s)].name.clone(),
                        variant: instance.slot_variant(s) + 1,
                        count,
                    });
                }
            }
        }
        let z = node_costs(instance, &self.solution)
            .into_iter()
            .enumerate()
            .map(|(e, c)| (topo.edge_nodes[e].clone(), c))
            .collect();
        let violations = self
            .violations
            .iter()
            .map(|v| ViolationEntry {
                constraint: v.constraint,
                iot: v.location.iot.map(|i| topo.iot_nodes[i].clone()),
                edge: v.location.edge.map(|e| topo.edge_nodes[e].clone()),
                model: v.location.model.map(|m| catalog.models[m].name.clone()),
                variant: v.location.variant.map(|k| k + 1),
                magnitude: v.magnitude,
            })
            .collect();
        let file = SolutionFile {
            meta: self.meta.clone(),
            x,
            n,
            z: Some(z),
            violations,
        };
        toml::to_string(&file).expect("solution serializes")
    }

    /// Parses a solution document against `instance`. When a `[z]` table is
    /// present it must match the evaluated node costs to within `1e-9`.
    pub fn from_toml(instance: &Instance, text: &str) -> Result<Self> {
        let file: SolutionFile = toml::from_str(text).map_err(|e| toml_error(text, &e))?;
        let mut solution = Solution::empty(instance);
        for (k, entry) in file.x.iter().enumerate() {
            let at = format!("x[{k}]");
            let iot = lookup_iot(instance, &at, &entry.iot)?;
            let edge = lookup_edge(instance, &at, &entry.edge)?;
            let model = lookup_model(instance, &at, &entry.model)?;
            let variant = lookup_variant(instance, &at, model, entry.variant)?;
            solution.assign(instance, Assignment::new(iot, edge, model, variant))?;
        }
        for (k, entry) in file.n.iter().enumerate() {
            let at = format!("n[{k}]");
            let edge = lookup_edge(instance, &at, &entry.edge)?;
            let model = lookup_model(instance, &at, &entry.model)?;
            let variant = lookup_variant(instance, &at, model, entry.variant)?;
            solution.set_replicas(edge, instance.slot(model, variant), entry.count);
        }
        if let Some(z) = &file.z {
            let computed = node_costs(instance, &solution);
            for (id, &value) in z {
                let edge = lookup_edge(instance, "z", id)?;
                if !((value - computed[edge]).abs() <= 1e-9) {
                    return Err(Error::Integrity(format!(
                        "z.{id} = {value} but the evaluated node cost is {}",
                        computed[edge]
                    )));
                }
            }
            solution.refresh_costs(instance);
        }
        let mut violations = Vec::new();
        for (k, entry) in file.violations.iter().enumerate() {
            let at = format!("violations[{k}]");
            let model = entry
                .model
                .as_deref()
                .map(|m| lookup_model(instance, &at, m))
                .transpose()?;
            let variant = match (model, entry.variant) {
                (Some(m), Some(v)) => Some(lookup_variant(instance, &at, m, v)?),
                (None, Some(_)) => {
                    return Err(Error::validation(format!("{at}.variant"), "variant given without a model"))
                }
                _ => None,
            };
            violations.push(Violation {
                constraint: entry.constraint,
                location: Location {
                    iot: entry.iot.as_deref().map(|i| lookup_iot(instance, &at, i)).transpose()?,
                    edge: entry.edge.as_deref().map(|e| lookup_edge(instance, &at, e)).transpose()?,
                    model,
                    variant,
                },
                magnitude: entry.magnitude,
            });
        }
        Ok(SolutionDocument {
            meta: file.meta,
            solution,
            violations,
        })
    }

    pub fn save(&self, instance: &Instance, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_toml(instance)).map_err(|e| Error::io(path, e))
    }

    pub fn load(instance: &Instance, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(instance, &text)
    }
}

fn lookup_iot(instance: &Instance, at: &str, id: &str) -> Result<usize> {
    instance
        .topology()
        .iot_position(id)
        .ok_or_else(|| Error::validation(format!("{at}.iot"), format!("`{id}` is not an IoT node")))
}

fn lookup_edge(instance: &Instance, at: &str, id: &str) -> Result<usize> {
    instance
        .topology()
        .edge_position(id)
        .ok_or_else(|| Error::validation(format!("{at}.edge"), format!("`{id}` is not an edge node")))
}

fn lookup_model(instance: &Instance, at: &str, name: &str) -> Result<usize> {
    instance
        .catalog()
        .model_position(name)
        .ok_or_else(|| Error::validation(format!("{at}.model"), format!("`{name}` is not in the catalog")))
}

fn lookup_variant(instance: &Instance, at: &str, model: usize, number: usize) -> Result<usize> {
    if number == 0 || number > instance.n_variants(model) {
        return Err(Error::validation(
            format!("{at}.variant"),
            format!("variant {number} outside 1..={}", instance.n_variants(model)),
        ));
    }
    Ok(number - 1)
}
