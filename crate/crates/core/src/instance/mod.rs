//! Problem data: topology, variant catalog, demand and solver parameters.
//!
//! An [`Instance`] is validated once at construction and never mutated. It
//! carries dense index tables so that evaluation code can work with plain
//! positions: IoT node `i`, edge node `e`, model `m`, and a flattened variant
//! *slot* `s` that enumerates every `(m, v)` pair model by model.

mod catalog;
pub mod generator;
pub mod io;
mod topology;

use serde::{Deserialize, Serialize};

pub use catalog::{DemandEntry, DemandMatrix, Model, Variant, VariantCatalog};
pub use generator::{random_instance, CatalogTemplate, GeneratorConfig, ModelTemplate, Shape, VariantTemplate};
pub use topology::{shortest_path_delay, Link, Topology};

use crate::error::{Error, Result};

/// Affine function `y(u) = slope * u + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tangent {
    pub slope: f64,
    pub intercept: f64,
}

impl Tangent {
    #[inline]
    pub fn at(&self, u: f64) -> f64 {
        self.slope * u + self.intercept
    }
}

/// Exponential utilization cost `phi(u) = (e^(k u) - 1) / (e^k - 1)`,
/// normalised so that `phi(0) = 0` and `phi(1) = 1`, together with the
/// utilization points whose tangents make up the piecewise-linear
/// under-approximation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostConfig {
    pub curvature: f64,
    pub tangent_points: Vec<f64>,
}

impl Default for CostConfig {
    fn default() -> Self {
        CostConfig {
            curvature: 4.0,
            tangent_points: (0..=10).map(|k| k as f64 / 10.0).collect(),
        }
    }
}

impl CostConfig {
    pub fn phi(&self, u: f64) -> f64 {
        let k = self.curvature;
        (k * u).exp_m1() / k.exp_m1()
    }

    pub fn phi_slope(&self, u: f64) -> f64 {
        let k = self.curvature;
        k * (k * u).exp() / k.exp_m1()
    }

    pub fn tangent_at(&self, t: f64) -> Tangent {
        let slope = self.phi_slope(t);
        Tangent {
            slope,
            intercept: self.phi(t) - slope * t,
        }
    }

    /// Builds the tangent set and checks that no tangent exceeds `phi` on
    /// `[0, 1]`.
    pub fn tangents(&self) -> Result<Vec<Tangent>> {
        if !self.curvature.is_finite() || self.curvature <= 0.0 {
            return Err(Error::validation(
                "params.cost.curvature",
                format!("must be finite and positive, got {}", self.curvature),
            ));
        }
        if self.tangent_points.is_empty() {
            return Err(Error::validation("params.cost.tangent_points", "tangent set is empty"));
        }
        let mut out = Vec::with_capacity(self.tangent_points.len());
        for (k, &t) in self.tangent_points.iter().enumerate() {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::validation(
                    format!("params.cost.tangent_points[{k}]"),
                    format!("tangent point {t} is outside [0, 1]"),
                ));
            }
            let tangent = self.tangent_at(t);
            for step in 0..=1000 {
                let u = step as f64 / 1000.0;
                if tangent.at(u) > self.phi(u) + 1e-12 {
                    return Err(Error::validation(
                        format!("params.cost.tangent_points[{k}]"),
                        format!("tangent overshoots the cost curve at u = {u}"),
                    ));
                }
            }
            out.push(tangent);
        }
        Ok(out)
    }
}

/// How the co-location cap `K` is applied.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplicaCap {
    /// `n[e, m, v] <= K` for every variant separately.
    #[default]
    PerVariant,
    /// `sum over (m, v) of n[e, m, v] <= K` for every edge node.
    Aggregate,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Weight of the average latency in the objective, in `[0, 1]`.
    pub objective_weight: f64,
    /// Co-location cap `K`.
    pub max_replicas: u32,
    /// Count communication latency in both directions.
    #[serde(default = "default_true")]
    pub round_trip: bool,
    #[serde(default)]
    pub replica_cap: ReplicaCap,
    #[serde(default)]
    pub cost: CostConfig,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            objective_weight: 0.1,
            max_replicas: 2,
            round_trip: true,
            replica_cap: ReplicaCap::PerVariant,
            cost: CostConfig::default(),
        }
    }
}

/// A demanded `(iot node, model)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemandPair {
    pub iot: usize,
    pub model: usize,
    pub rate: f64,
    pub latency_req: f64,
}

/// Validated, immutable problem statement.
#[derive(Debug, Clone)]
pub struct Instance {
    topology: Topology,
    catalog: VariantCatalog,
    demand: DemandMatrix,
    params: Params,
    tangents: Vec<Tangent>,

    // dense tables
    slot_offset: Vec<usize>,
    slot_model: Vec<usize>,
    comm_latency: Vec<f64>,
    base_latency: Vec<f64>,
    capacity: Vec<f64>,
    rate: Vec<f64>,
    latency_req: Vec<f64>,
    pairs: Vec<DemandPair>,
    total_demand: f64,
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        self.topology == other.topology
            && self.catalog == other.catalog
            && self.demand == other.demand
            && self.params == other.params
    }
}

/// Validates the components and assembles an [`Instance`].
pub fn build_instance(topology: Topology, catalog: VariantCatalog, demand: DemandMatrix, params: Params) -> Result<Instance> {
    topology.validate()?;
    catalog.validate(&topology)?;
    demand.validate(&topology, &catalog)?;
    if !(0.0..=1.0).contains(&params.objective_weight) {
        return Err(Error::validation(
            "params.objective_weight",
            format!("must lie in [0, 1], got {}", params.objective_weight),
        ));
    }
    if params.max_replicas == 0 {
        return Err(Error::validation("params.max_replicas", "must be a positive integer"));
    }
    let tangents = params.cost.tangents()?;

    let n_iot = topology.iot_nodes.len();
    let n_edge = topology.edge_nodes.len();
    let n_models = catalog.models.len();

    let mut slot_offset = Vec::with_capacity(n_models + 1);
    let mut slot_model = Vec::new();
    slot_offset.push(0);
    for (m, model) in catalog.models.iter().enumerate() {
        slot_model.extend(std::iter::repeat_n(m, model.variants.len()));
        slot_offset.push(slot_model.len());
    }
    let n_slots = slot_model.len();

    let scale = if params.round_trip { 2.0 } else { 1.0 };
    let comm_latency: Vec<f64> = topology.one_way_delays().into_iter().map(|d| scale * d).collect();
    for (i, id) in topology.iot_nodes.iter().enumerate() {
        if comm_latency[i * n_edge..(i + 1) * n_edge].iter().all(|d| d.is_infinite()) {
            return Err(Error::validation(
                "topology.links",
                format!("IoT node `{id}` cannot reach any edge node"),
            ));
        }
    }

    let mut base_latency = vec![0.0; n_edge * n_slots];
    for (e, edge) in topology.edge_nodes.iter().enumerate() {
        let mut s = 0;
        for model in &catalog.models {
            for variant in &model.variants {
                base_latency[e * n_slots + s] = variant.base_latency[edge];
                s += 1;
            }
        }
    }
    let capacity = topology.edge_nodes.iter().map(|e| topology.capacity[e]).collect();

    let mut rate = vec![0.0; n_iot * n_models];
    let mut latency_req = vec![f64::INFINITY; n_iot * n_models];
    for entry in &demand.entries {
        let i = topology.iot_position(&entry.iot).expect("validated");
        let m = catalog.model_position(&entry.model).expect("validated");
        rate[i * n_models + m] = entry.rate;
        latency_req[i * n_models + m] = entry.latency_req;
    }
    let mut pairs = Vec::new();
    for i in 0..n_iot {
        for m in 0..n_models {
            let r = rate[i * n_models + m];
            if r > 0.0 {
                pairs.push(DemandPair {
                    iot: i,
                    model: m,
                    rate: r,
                    latency_req: latency_req[i * n_models + m],
                });
            }
        }
    }
    let total_demand = pairs.iter().map(|p| p.rate).sum();

    Ok(Instance {
        topology,
        catalog,
        demand,
        params,
        tangents,
        slot_offset,
        slot_model,
        comm_latency,
        base_latency,
        capacity,
        rate,
        latency_req,
        pairs,
        total_demand,
    })
}

impl Instance {
    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn catalog(&self) -> &VariantCatalog {
        &self.catalog
    }

    pub fn demand(&self) -> &DemandMatrix {
        &self.demand
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn n_iot(&self) -> usize {
        self.topology.iot_nodes.len()
    }

    pub fn n_edge(&self) -> usize {
        self.topology.edge_nodes.len()
    }

    pub fn n_models(&self) -> usize {
        self.catalog.models.len()
    }

    pub fn n_variants(&self, model: usize) -> usize {
        self.slot_offset[model + 1] - self.slot_offset[model]
    }

    /// Total number of `(model, variant)` slots.
    pub fn n_slots(&self) -> usize {
        self.slot_model.len()
    }

    /// Flattened slot of variant `variant` (0-based) of `model`.
    #[inline]
    pub fn slot(&self, model: usize, variant: usize) -> usize {
        debug_assert!(variant < self.n_variants(model));
        self.slot_offset[model] + variant
    }

    #[inline]
    pub fn slot_model(&self, slot: usize) -> usize {
        self.slot_model[slot]
    }

    #[inline]
    pub fn slot_variant(&self, slot: usize) -> usize {
        slot - self.slot_offset[self.slot_model[slot]]
    }

    pub fn model_slots(&self, model: usize) -> std::ops::Range<usize> {
        self.slot_offset[model]..self.slot_offset[model + 1]
    }

    fn variant(&self, slot: usize) -> &Variant {
        let m = self.slot_model[slot];
        &self.catalog.models[m].variants[slot - self.slot_offset[m]]
    }

    #[inline]
    pub fn memory_req(&self, slot: usize) -> f64 {
        self.variant(slot).memory_req
    }

    #[inline]
    pub fn max_load(&self, slot: usize) -> f64 {
        self.variant(slot).max_load
    }

    #[inline]
    pub fn interference_coeff(&self, slot: usize) -> f64 {
        self.variant(slot).interference_coeff
    }

    /// Exclusive-run latency of `slot` on edge node `edge`.
    #[inline]
    pub fn base_latency(&self, edge: usize, slot: usize) -> f64 {
        self.base_latency[edge * self.n_slots() + slot]
    }

    /// Communication latency between IoT node `iot` and edge node `edge`
    /// (already doubled for round trips). Infinite when unreachable.
    #[inline]
    pub fn comm_latency(&self, iot: usize, edge: usize) -> f64 {
        self.comm_latency[iot * self.n_edge() + edge]
    }

    #[inline]
    pub fn capacity(&self, edge: usize) -> f64 {
        self.capacity[edge]
    }

    #[inline]
    pub fn rate(&self, iot: usize, model: usize) -> f64 {
        self.rate[iot * self.n_models() + model]
    }

    #[inline]
    pub fn latency_req(&self, iot: usize, model: usize) -> f64 {
        self.latency_req[iot * self.n_models() + model]
    }

    /// Pairs with positive rate, ordered by `(iot, model)`.
    pub fn demanded_pairs(&self) -> &[DemandPair] {
        &self.pairs
    }

    pub fn total_demand(&self) -> f64 {
        self.total_demand
    }

    pub fn objective_weight(&self) -> f64 {
        self.params.objective_weight
    }

    pub fn max_replicas(&self) -> u32 {
        self.params.max_replicas
    }

    pub fn replica_cap(&self) -> ReplicaCap {
        self.params.replica_cap
    }

    pub fn tangents(&self) -> &[Tangent] {
        &self.tangents
    }

    /// Number of precomputed communication-latency entries (`N_I * N_E`).
    pub fn comm_latency_len(&self) -> usize {
        self.comm_latency.len()
    }

    /// Returns a copy of this instance with different parameters.
    pub fn with_params(&self, params: Params) -> Result<Instance> {
        build_instance(self.topology.clone(), self.catalog.clone(), self.demand.clone(), params)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use std::collections::BTreeMap;

    use super::*;

    /// One IoT node, one edge node at 11 ms, one model with the given
    /// variants `(memory, max_load, latency, interference)`.
    pub(crate) fn single_link(variants: &[(f64, f64, f64, f64)], rate: f64, params: Params) -> Instance {
        let topology = Topology {
            iot_nodes: vec!["i0".into()],
            edge_nodes: vec!["e0".into()],
            links: vec![Link { a: "i0".into(), b: "e0".into(), delay_ms: 11.0 }],
            capacity: BTreeMap::from([("e0".into(), 8.0)]),
        };
        let catalog = VariantCatalog {
            models: vec![Model {
                name: "m0".into(),
                variants: variants
                    .iter()
                    .map(|&(memory_req, max_load, l, a)| Variant {
                        memory_req,
                        max_load,
                        base_latency: BTreeMap::from([("e0".into(), l)]),
                        interference_coeff: a,
                    })
                    .collect(),
            }],
        };
        let demand = DemandMatrix {
            entries: vec![DemandEntry {
                iot: "i0".into(),
                model: "m0".into(),
                rate,
                latency_req: 1000.0,
            }],
        };
        build_instance(topology, catalog, demand, params).unwrap()
    }

    #[test]
    fn p1_shape_has_fifty_latency_entries() {
        let cfg = GeneratorConfig::new(Shape::new(10, 5, 3, 8), 1);
        let inst = random_instance(&cfg).unwrap();
        assert_eq!(inst.comm_latency_len(), 50);
        assert_eq!(inst.n_slots(), 24);
        assert_eq!(inst.demanded_pairs().len(), 30);
    }

    #[test]
    fn empty_demand_is_valid() {
        let cfg = GeneratorConfig::new(Shape::new(2, 2, 1, 2), 3);
        let inst = random_instance(&cfg).unwrap();
        let empty = build_instance(
            inst.topology().clone(),
            inst.catalog().clone(),
            DemandMatrix::default(),
            inst.params().clone(),
        )
        .unwrap();
        assert!(empty.demanded_pairs().is_empty());
        assert_eq!(empty.total_demand(), 0.0);
    }

    #[test]
    fn missing_base_latency_is_rejected() {
        let cfg = GeneratorConfig::new(Shape::new(2, 2, 1, 2), 3);
        let inst = random_instance(&cfg).unwrap();
        let mut catalog = inst.catalog().clone();
        catalog.models[0].variants[1].base_latency.remove("e1");
        let err = build_instance(inst.topology().clone(), catalog, inst.demand().clone(), inst.params().clone())
            .unwrap_err();
        match err {
            Error::Validation { field, .. } => assert_eq!(field, "catalog.models[0].variants[1].base_latency.e1"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn disconnected_iot_node_is_rejected() {
        let mut inst_topology = Topology {
            iot_nodes: vec!["i0".into(), "i1".into()],
            edge_nodes: vec!["e0".into()],
            links: vec![Link { a: "i0".into(), b: "e0".into(), delay_ms: 1.0 }],
            capacity: BTreeMap::from([("e0".into(), 1.0)]),
        };
        let err = build_instance(inst_topology.clone(), VariantCatalog::default(), DemandMatrix::default(), Params::default())
            .unwrap_err();
        assert!(err.to_string().contains("i1"), "{err}");
        inst_topology.links.push(Link { a: "i1".into(), b: "i0".into(), delay_ms: 2.0 });
        let inst = build_instance(inst_topology, VariantCatalog::default(), DemandMatrix::default(), Params::default()).unwrap();
        assert_eq!(inst.comm_latency(1, 0), 6.0);
    }

    #[test]
    fn parameter_ranges() {
        let mut p = Params::default();
        p.objective_weight = 1.5;
        let cfg = GeneratorConfig::new(Shape::new(1, 1, 1, 1), 1);
        let inst = random_instance(&cfg).unwrap();
        assert!(inst.with_params(p).is_err());
        let mut p = Params::default();
        p.max_replicas = 0;
        assert!(inst.with_params(p).is_err());
        let mut p = Params::default();
        p.cost.tangent_points.clear();
        assert!(inst.with_params(p).is_err());
        let mut p = Params::default();
        p.cost.tangent_points.push(1.5);
        assert!(inst.with_params(p).is_err());
    }

    #[test]
    fn default_tangents_touch_endpoints() {
        let cost = CostConfig::default();
        let t = cost.tangents().unwrap();
        assert_eq!(t.len(), 11);
        assert!(t[0].at(0.0).abs() < 1e-15);
        assert!((t[10].at(1.0) - 1.0).abs() < 1e-12);
    }
}
