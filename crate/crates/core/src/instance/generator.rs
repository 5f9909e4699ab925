//! Seeded random instances.
//!
//! Three independent ChaCha streams are derived from the seed: one for the
//! topology, one for the catalog draw (models, variants, per-node speed) and
//! one for demand. Rates are drawn as uniform quantiles that are mapped onto
//! `[1, 2 E(r) - 1]`, so two instances that differ only in `load_mean` have
//! element-wise ordered rates.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{build_instance, DemandEntry, DemandMatrix, Instance, Link, Model, Params, Topology, Variant, VariantCatalog};
use crate::error::{Error, Result};

const DEFAULT_CATALOG: &str = include_str!("../../data/catalog.toml");

const TOPOLOGY_STREAM: u64 = 1;
const CATALOG_STREAM: u64 = 2;
const DEMAND_STREAM: u64 = 3;

/// Instance dimensions: IoT nodes, edge nodes, models, variants per model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shape {
    pub iot_nodes: usize,
    pub edge_nodes: usize,
    pub models: usize,
    pub variants: usize,
}

impl Shape {
    pub const fn new(iot_nodes: usize, edge_nodes: usize, models: usize, variants: usize) -> Self {
        Shape {
            iot_nodes,
            edge_nodes,
            models,
            variants,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantTemplate {
    pub batch: u32,
    pub memory_req: f64,
    pub max_load: f64,
    /// Exclusive-run latency on the reference device.
    pub latency_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelTemplate {
    pub name: String,
    pub variants: Vec<VariantTemplate>,
}

/// The predefined model list the generator draws from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogTemplate {
    pub models: Vec<ModelTemplate>,
}

impl CatalogTemplate {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| super::io::toml_error(text, &e))
    }
}

impl Default for CatalogTemplate {
    fn default() -> Self {
        CatalogTemplate::from_toml(DEFAULT_CATALOG).expect("bundled catalog parses")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub shape: Shape,
    pub seed: u64,
    /// Mean request rate per `(iot, model)` pair.
    pub load_mean: f64,
    /// Mean one-way link delay in milliseconds.
    pub link_delay_mean: f64,
    pub capacity: f64,
    pub interference_coeff: f64,
    /// Per-node latency factors are drawn from `[1 - spread, 1 + spread]`.
    pub node_speed_spread: f64,
    /// Probability that an IoT node gets a second link to a random node.
    pub extra_link_prob: f64,
    /// Fixed latency requirement for every pair. When unset, ten times the
    /// largest base latency plus the largest communication latency is used.
    pub latency_req: Option<f64>,
    pub params: Params,
    pub catalog: CatalogTemplate,
}

impl GeneratorConfig {
    pub fn new(shape: Shape, seed: u64) -> Self {
        GeneratorConfig {
            shape,
            seed,
            load_mean: 5.5,
            link_delay_mean: 12.23,
            capacity: 8.0,
            interference_coeff: 0.1,
            node_speed_spread: 0.15,
            extra_link_prob: 0.3,
            latency_req: None,
            params: Params::default(),
            catalog: CatalogTemplate::default(),
        }
    }
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Generates a connected random instance. Identical configurations produce
/// identical instances.
pub fn random_instance(config: &GeneratorConfig) -> Result<Instance> {
    let shape = config.shape;
    for (field, value) in [
        ("shape.iot_nodes", shape.iot_nodes),
        ("shape.edge_nodes", shape.edge_nodes),
        ("shape.models", shape.models),
        ("shape.variants", shape.variants),
    ] {
        if value == 0 {
            return Err(Error::validation(field, "must be at least 1"));
        }
    }
    for (field, value) in [
        ("load_mean", config.load_mean),
        ("link_delay_mean", config.link_delay_mean),
        ("capacity", config.capacity),
    ] {
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::validation(field, format!("must be finite and positive, got {value}")));
        }
    }
    if !(0.0..1.0).contains(&config.node_speed_spread) {
        return Err(Error::validation("node_speed_spread", "must lie in [0, 1)"));
    }
    if shape.models > config.catalog.models.len() {
        return Err(Error::validation(
            "shape.models",
            format!(
                "{} models requested but the catalog lists {}",
                shape.models,
                config.catalog.models.len()
            ),
        ));
    }

    let topology = random_topology(config);
    let catalog = random_catalog(config, &topology)?;

    let scale = if config.params.round_trip { 2.0 } else { 1.0 };
    let latency_req = config.latency_req.unwrap_or_else(|| {
        let worst_latency = catalog
            .models
            .iter()
            .flat_map(|m| &m.variants)
            .flat_map(|v| v.base_latency.values())
            .fold(0.0f64, |a, &b| a.max(b));
        let diameter = topology
            .one_way_delays()
            .into_iter()
            .filter(|d| d.is_finite())
            .fold(0.0f64, f64::max);
        10.0 * worst_latency + scale * diameter
    });

    let mut rng = rng(config.seed, DEMAND_STREAM);
    let top = (2.0 * config.load_mean - 1.0).round().max(1.0);
    let mut entries = Vec::new();
    for iot in &topology.iot_nodes {
        for model in &catalog.models {
            let q: f64 = rng.random();
            let rate = (1.0 + (q * top).floor()).min(top);
            entries.push(DemandEntry {
                iot: iot.clone(),
                model: model.name.clone(),
                rate,
                latency_req,
            });
        }
    }

    build_instance(topology, catalog, DemandMatrix { entries }, config.params.clone())
}

fn random_topology(config: &GeneratorConfig) -> Topology {
    let shape = config.shape;
    let mut rng = rng(config.seed, TOPOLOGY_STREAM);
    let iot_nodes: Vec<String> = (0..shape.iot_nodes).map(|k| format!("i{k}")).collect();
    let edge_nodes: Vec<String> = (0..shape.edge_nodes).map(|k| format!("e{k}")).collect();

    let mut pairs: Vec<(String, String)> = Vec::new();
    let connect = |a: &String, b: &String, pairs: &mut Vec<(String, String)>| {
        if a != b && !pairs.iter().any(|(x, y)| (x == a && y == b) || (x == b && y == a)) {
            pairs.push((a.clone(), b.clone()));
        }
    };

    // random spanning tree over the edge nodes plus a few chords
    for k in 1..edge_nodes.len() {
        let parent = rng.random_range(0..k);
        connect(&edge_nodes[k], &edge_nodes[parent], &mut pairs);
    }
    for k in 2..edge_nodes.len() {
        if rng.random_bool(0.25) {
            let other = rng.random_range(0..k - 1);
            connect(&edge_nodes[k], &edge_nodes[other], &mut pairs);
        }
    }
    // each IoT node attaches to an access point, some get a second link
    let all: Vec<&String> = iot_nodes.iter().chain(&edge_nodes).collect();
    for iot in &iot_nodes {
        let ap = rng.random_range(0..edge_nodes.len());
        connect(iot, &edge_nodes[ap], &mut pairs);
        if rng.random_bool(config.extra_link_prob) {
            let other = all[rng.random_range(0..all.len())];
            connect(iot, other, &mut pairs);
        }
    }

    let mu = config.link_delay_mean;
    let links = pairs
        .into_iter()
        .map(|(a, b)| Link {
            a,
            b,
            delay_ms: rng.random_range(0.5 * mu..=1.5 * mu),
        })
        .collect();
    let capacity = edge_nodes.iter().map(|e| (e.clone(), config.capacity)).collect();
    Topology {
        iot_nodes,
        edge_nodes,
        links,
        capacity,
    }
}

fn random_catalog(config: &GeneratorConfig, topology: &Topology) -> Result<VariantCatalog> {
    let shape = config.shape;
    let mut rng = rng(config.seed, CATALOG_STREAM);
    let spread = config.node_speed_spread;
    let speed: Vec<f64> = topology
        .edge_nodes
        .iter()
        .map(|_| if spread > 0.0 { rng.random_range(1.0 - spread..=1.0 + spread) } else { 1.0 })
        .collect();

    let mut chosen = sample(&mut rng, config.catalog.models.len(), shape.models).into_vec();
    chosen.sort_unstable();
    let mut models = Vec::with_capacity(shape.models);
    for k in chosen {
        let template = &config.catalog.models[k];
        if shape.variants > template.variants.len() {
            return Err(Error::validation(
                "shape.variants",
                format!(
                    "{} variants requested but `{}` has {}",
                    shape.variants,
                    template.name,
                    template.variants.len()
                ),
            ));
        }
        let mut picks = sample(&mut rng, template.variants.len(), shape.variants).into_vec();
        picks.sort_unstable();
        let variants = picks
            .into_iter()
            .map(|v| {
                let t = &template.variants[v];
                let base_latency: BTreeMap<String, f64> = topology
                    .edge_nodes
                    .iter()
                    .zip(&speed)
                    .map(|(e, s)| (e.clone(), t.latency_ms * s))
                    .collect();
                Variant {
                    memory_req: t.memory_req,
                    max_load: t.max_load,
                    base_latency,
                    interference_coeff: config.interference_coeff,
                }
            })
            .collect();
        models.push(Model {
            name: template.name.clone(),
            variants,
        });
    }
    Ok(VariantCatalog { models })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_instance() {
        let cfg = GeneratorConfig::new(Shape::new(10, 5, 3, 8), 1);
        let a = random_instance(&cfg).unwrap();
        let b = random_instance(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(super::super::io::to_toml(&a), super::super::io::to_toml(&b));
        let mut other = cfg.clone();
        other.seed = 2;
        assert_ne!(a, random_instance(&other).unwrap());
    }

    #[test]
    fn rates_are_integral_and_in_range() {
        let mut cfg = GeneratorConfig::new(Shape::new(10, 5, 3, 8), 4);
        cfg.load_mean = 22.0;
        let inst = random_instance(&cfg).unwrap();
        for e in &inst.demand().entries {
            assert_eq!(e.rate.fract(), 0.0);
            assert!((1.0..=43.0).contains(&e.rate));
        }
    }

    #[test]
    fn rate_mean_matches_load_mean() {
        let mut total = 0.0;
        let mut count = 0.0;
        for seed in 0..200 {
            let cfg = GeneratorConfig::new(Shape::new(10, 2, 3, 1), seed);
            let inst = random_instance(&cfg).unwrap();
            for e in &inst.demand().entries {
                total += e.rate;
                count += 1.0;
            }
        }
        let mean = total / count;
        assert!((mean - 5.5).abs() < 0.15, "mean {mean}");
    }

    #[test]
    fn link_delays_are_bounded_with_the_requested_mean() {
        let mut delays = Vec::new();
        for seed in 0..100 {
            let cfg = GeneratorConfig::new(Shape::new(10, 5, 1, 1), seed);
            let inst = random_instance(&cfg).unwrap();
            delays.extend(inst.topology().links.iter().map(|l| l.delay_ms));
        }
        assert!(delays.iter().all(|d| (6.115..=18.345).contains(d)));
        let mean = delays.iter().sum::<f64>() / delays.len() as f64;
        assert!((mean - 12.23).abs() < 0.3, "mean {mean}");
    }

    #[test]
    fn coupled_rates_are_ordered_across_load_means() {
        let mut lo = GeneratorConfig::new(Shape::new(10, 5, 3, 8), 9);
        let mut hi = lo.clone();
        lo.load_mean = 5.5;
        hi.load_mean = 33.0;
        let a = random_instance(&lo).unwrap();
        let b = random_instance(&hi).unwrap();
        assert_eq!(a.topology(), b.topology());
        assert_eq!(a.catalog(), b.catalog());
        for (x, y) in a.demand().entries.iter().zip(&b.demand().entries) {
            assert!(x.rate <= y.rate);
        }
    }

    #[test]
    fn tiny_shape_and_bad_shapes() {
        let cfg = GeneratorConfig::new(Shape::new(2, 2, 1, 2), 7);
        let inst = random_instance(&cfg).unwrap();
        assert_eq!((inst.n_iot(), inst.n_edge(), inst.n_models(), inst.n_slots()), (2, 2, 1, 2));

        let mut bad = cfg.clone();
        bad.shape.models = 0;
        assert!(random_instance(&bad).is_err());
        let mut bad = cfg.clone();
        bad.shape.models = 99;
        assert!(random_instance(&bad).is_err());
        let mut bad = cfg.clone();
        bad.load_mean = 0.0;
        assert!(random_instance(&bad).is_err());
    }

    #[test]
    fn bundled_catalog_shape() {
        let c = CatalogTemplate::default();
        assert!(c.models.len() >= 4);
        for m in &c.models {
            assert_eq!(m.variants.len(), 8);
            for w in m.variants.windows(2) {
                assert!(w[1].max_load == 2.0 * w[0].max_load);
                assert!(w[1].latency_ms > w[0].latency_ms);
                assert!(w[1].memory_req > w[0].memory_req);
            }
        }
    }
}
