#![allow(dead_code)]

use mvsp::formulation::{check_feasibility, Assignment, Solution};
use mvsp::instance::{build_instance, random_instance, DemandEntry, DemandMatrix, GeneratorConfig, Shape};
use mvsp::solver::{solve_heuristic, with_derived_replicas};
use mvsp::Instance;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// 2 or 3 IoT nodes, 2 edge nodes, 1 or 2 models, 2 variants.
pub fn tiny_instance(seed: u64) -> Instance {
    let shape = Shape::new(2 + (seed % 2) as usize, 2, 1 + (seed / 2 % 2) as usize, 2);
    random_instance(&GeneratorConfig::new(shape, seed)).expect("generator output is valid")
}

/// Up to 4 IoT nodes, 3 edge nodes, 2 models and 3 variants.
pub fn small_instance(seed: u64) -> Instance {
    let shape = Shape::new(
        1 + (seed % 4) as usize,
        1 + (seed / 4 % 3) as usize,
        1 + (seed / 12 % 2) as usize,
        1 + (seed / 24 % 3) as usize,
    );
    random_instance(&GeneratorConfig::new(shape, seed)).expect("generator output is valid")
}

/// Same topology and catalog with every rate set to zero.
pub fn zero_demand(instance: &Instance) -> Instance {
    let demand = DemandMatrix {
        entries: instance
            .demand()
            .entries
            .iter()
            .map(|d| DemandEntry { rate: 0.0, ..d.clone() })
            .collect(),
    };
    build_instance(
        instance.topology().clone(),
        instance.catalog().clone(),
        demand,
        instance.params().clone(),
    )
    .expect("zero demand is valid")
}

/// Uniformly random assignment of every demanded pair with derived replica
/// counts. May be infeasible.
pub fn random_assignment(instance: &Instance, rng: &mut ChaCha8Rng) -> Solution {
    let mut solution = Solution::empty(instance);
    for p in instance.demanded_pairs() {
        let edge = rng.random_range(0..instance.n_edge());
        let variant = rng.random_range(0..instance.n_variants(p.model));
        solution
            .assign(instance, Assignment::new(p.iot, edge, p.model, variant))
            .expect("indices are in range");
    }
    with_derived_replicas(instance, solution)
}

/// A feasible solution drawn by rejection sampling, falling back to the
/// heuristic. `None` when neither finds one.
pub fn random_feasible(instance: &Instance, seed: u64) -> Option<Solution> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..200)
        .map(|_| random_assignment(instance, &mut rng))
        .find(|s| check_feasibility(instance, s).is_feasible())
        .or_else(|| solve_heuristic(instance).solution)
}
