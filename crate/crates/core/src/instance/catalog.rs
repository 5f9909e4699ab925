use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Topology;
use crate::error::{Error, Result};

/// One deployable configuration of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Variant {
    /// Memory needed to load one instance.
    pub memory_req: f64,
    /// Requests per interval one instance can serve with stable performance.
    pub max_load: f64,
    /// Exclusive-run inference latency on each edge node, in milliseconds.
    pub base_latency: BTreeMap<String, f64>,
    /// Fraction of this variant's exclusive latency added to every other
    /// instance sharing the node.
    pub interference_coeff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Model {
    pub name: String,
    /// Variants in index order; variant `k` of the file format is `variants[k - 1]`.
    pub variants: Vec<Variant>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantCatalog {
    pub models: Vec<Model>,
}

impl VariantCatalog {
    pub fn model_position(&self, name: &str) -> Option<usize> {
        self.models.iter().position(|m| m.name == name)
    }

    pub fn validate(&self, topology: &Topology) -> Result<()> {
        for (mi, model) in self.models.iter().enumerate() {
            let at = format!("catalog.models[{mi}]");
            if model.name.is_empty() {
                return Err(Error::validation(format!("{at}.name"), "empty model name"));
            }
            if self.models[..mi].iter().any(|m| m.name == model.name) {
                return Err(Error::validation(
                    format!("{at}.name"),
                    format!("duplicate model name `{}`", model.name),
                ));
            }
            if model.variants.is_empty() {
                return Err(Error::validation(format!("{at}.variants"), "a model needs at least one variant"));
            }
            for (vi, variant) in model.variants.iter().enumerate() {
                let at = format!("{at}.variants[{vi}]");
                positive(&format!("{at}.memory_req"), variant.memory_req)?;
                positive(&format!("{at}.max_load"), variant.max_load)?;
                if !variant.interference_coeff.is_finite() || variant.interference_coeff < 0.0 {
                    return Err(Error::validation(
                        format!("{at}.interference_coeff"),
                        format!("must be finite and non-negative, got {}", variant.interference_coeff),
                    ));
                }
                for edge in &topology.edge_nodes {
                    match variant.base_latency.get(edge) {
                        None => {
                            return Err(Error::validation(
                                format!("{at}.base_latency.{edge}"),
                                "missing base latency for edge node",
                            ))
                        }
                        Some(&l) => positive(&format!("{at}.base_latency.{edge}"), l)?,
                    }
                }
                if let Some(extra) = variant.base_latency.keys().find(|k| topology.edge_position(k).is_none()) {
                    return Err(Error::validation(
                        format!("{at}.base_latency.{extra}"),
                        "latency given for an undeclared edge node",
                    ));
                }
            }
        }
        Ok(())
    }
}

fn positive(field: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::validation(field, format!("must be finite and positive, got {value}")))
    }
}

/// Request rate and latency requirement of one IoT node for one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandEntry {
    pub iot: String,
    pub model: String,
    pub rate: f64,
    pub latency_req: f64,
}

/// Sparse demand. Pairs without an entry, and entries with rate 0, carry no
/// demand.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandMatrix {
    pub entries: Vec<DemandEntry>,
}

impl DemandMatrix {
    pub fn validate(&self, topology: &Topology, catalog: &VariantCatalog) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for (k, entry) in self.entries.iter().enumerate() {
            let at = format!("demand.entries[{k}]");
            if topology.iot_position(&entry.iot).is_none() {
                return Err(Error::validation(
                    format!("{at}.iot"),
                    format!("`{}` is not an IoT node", entry.iot),
                ));
            }
            if catalog.model_position(&entry.model).is_none() {
                return Err(Error::validation(
                    format!("{at}.model"),
                    format!("`{}` is not in the catalog", entry.model),
                ));
            }
            if !entry.rate.is_finite() || entry.rate < 0.0 {
                return Err(Error::validation(
                    format!("{at}.rate"),
                    format!("must be finite and non-negative, got {}", entry.rate),
                ));
            }
            if entry.latency_req.is_nan() || entry.latency_req <= 0.0 {
                return Err(Error::validation(
                    format!("{at}.latency_req"),
                    format!("must be positive, got {}", entry.latency_req),
                ));
            }
            if !seen.insert((entry.iot.as_str(), entry.model.as_str())) {
                return Err(Error::validation(
                    at,
                    format!("duplicate entry for ({}, {})", entry.iot, entry.model),
                ));
            }
        }
        Ok(())
    }
}
