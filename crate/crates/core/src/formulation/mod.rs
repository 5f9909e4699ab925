//! Evaluation of the placement problem on a candidate solution.
//!
//! Everything here is a pure function of `(instance, solution)`. Solvers,
//! the oracle and the linearization tests all go through these functions,
//! so they are the reference definition of the objective and constraints:
//!
//! * inference latency of slot `s` on node `e`:
//!   `L[e,s] + a[s] L[e,s] max(n[e,s] - 1, 0) + sum over s' != s of a[s'] L[e,s'] n[e,s']`
//! * average latency: demand-weighted mean of communication plus inference
//!   latency over all assignments
//! * node cost: the largest tangent line evaluated at the node's memory
//!   utilization; average cost is the mean over edge nodes
//! * objective: `w * latency + (1 - w) * cost`

mod feasibility;
pub mod io;

use std::collections::BTreeSet;

pub use feasibility::{check_feasibility, ConstraintId, FeasibilityReport, Location, Violation, FEASIBILITY_TOL};

use crate::error::{Error, Result};
use crate::instance::Instance;

/// One `x[i, e, m, v] = 1` entry. All indices are 0-based positions in the
/// instance's lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Assignment {
    pub iot: usize,
    pub edge: usize,
    pub model: usize,
    pub variant: usize,
}

impl Assignment {
    pub fn new(iot: usize, edge: usize, model: usize, variant: usize) -> Self {
        Assignment {
            iot,
            edge,
            model,
            variant,
        }
    }
}

/// Sparse assignment indicators `x`, dense replica counts `n`, and the
/// cached node costs `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    assignments: BTreeSet<Assignment>,
    replicas: Vec<u32>,
    n_slots: usize,
    node_costs: Option<Vec<f64>>,
}

impl Solution {
    /// All-zero solution shaped for `instance`.
    pub fn empty(instance: &Instance) -> Self {
        Solution {
            assignments: BTreeSet::new(),
            replicas: vec![0; instance.n_edge() * instance.n_slots()],
            n_slots: instance.n_slots(),
            node_costs: None,
        }
    }

    fn check_indices(instance: &Instance, a: &Assignment) -> Result<()> {
        if a.iot >= instance.n_iot()
            || a.edge >= instance.n_edge()
            || a.model >= instance.n_models()
            || a.variant >= instance.n_variants(a.model)
        {
            return Err(Error::Integrity(format!("assignment {a:?} is out of range")));
        }
        Ok(())
    }

    /// Sets `x = 1` for `assignment`. Invalidates cached costs.
    pub fn assign(&mut self, instance: &Instance, assignment: Assignment) -> Result<()> {
        Self::check_indices(instance, &assignment)?;
        self.assignments.insert(assignment);
        self.node_costs = None;
        Ok(())
    }

    pub fn unassign(&mut self, assignment: &Assignment) -> bool {
        self.node_costs = None;
        self.assignments.remove(assignment)
    }

    pub fn is_assigned(&self, assignment: &Assignment) -> bool {
        self.assignments.contains(assignment)
    }

    pub fn assignments(&self) -> impl Iterator<Item = &Assignment> + '_ {
        self.assignments.iter()
    }

    pub fn n_assignments(&self) -> usize {
        self.assignments.len()
    }

    #[inline]
    pub fn replicas(&self, edge: usize, slot: usize) -> u32 {
        self.replicas[edge * self.n_slots + slot]
    }

    pub fn set_replicas(&mut self, edge: usize, slot: usize, count: u32) {
        self.replicas[edge * self.n_slots + slot] = count;
        self.node_costs = None;
    }

    /// Replica counts indexed by `edge * n_slots + slot`.
    pub fn replica_table(&self) -> &[u32] {
        &self.replicas
    }

    pub fn set_replica_table(&mut self, table: Vec<u32>) {
        assert_eq!(table.len(), self.replicas.len(), "replica table shape");
        self.replicas = table;
        self.node_costs = None;
    }

    /// Node costs `z`, present once [`Solution::refresh_costs`] has run and
    /// nothing changed since.
    pub fn node_costs(&self) -> Option<&[f64]> {
        self.node_costs.as_deref()
    }

    pub fn refresh_costs(&mut self, instance: &Instance) {
        self.node_costs = Some(node_costs(instance, self));
    }

    /// Same `x` and `n`; cached costs are ignored.
    pub fn same_decisions(&self, other: &Solution) -> bool {
        self.assignments == other.assignments && self.replicas == other.replicas
    }
}

fn inference_latency_slot(instance: &Instance, solution: &Solution, edge: usize, slot: usize) -> f64 {
    let base = instance.base_latency(edge, slot);
    let n = solution.replicas(edge, slot);
    let mut latency = base + instance.interference_coeff(slot) * base * n.saturating_sub(1) as f64;
    for other in 0..instance.n_slots() {
        if other == slot {
            continue;
        }
        let n_other = solution.replicas(edge, other);
        if n_other > 0 {
            latency += instance.interference_coeff(other) * instance.base_latency(edge, other) * n_other as f64;
        }
    }
    latency
}

/// Inference latency of variant `variant` of `model` on `edge`, including
/// the replication and co-location terms. The replication term is clamped
/// at zero for undeployed variants.
pub fn inference_latency(instance: &Instance, solution: &Solution, edge: usize, model: usize, variant: usize) -> f64 {
    inference_latency_slot(instance, solution, edge, instance.slot(model, variant))
}

/// Demand-weighted average of communication plus inference latency. Zero
/// when there is no demand.
pub fn average_latency(instance: &Instance, solution: &Solution) -> f64 {
    let total = instance.total_demand();
    if total == 0.0 {
        return 0.0;
    }
    let mut cache = vec![None; instance.n_edge() * instance.n_slots()];
    let mut sum = 0.0;
    for a in solution.assignments() {
        let rate = instance.rate(a.iot, a.model);
        if rate == 0.0 {
            continue;
        }
        let slot = instance.slot(a.model, a.variant);
        let il = *cache[a.edge * instance.n_slots() + slot]
            .get_or_insert_with(|| inference_latency_slot(instance, solution, a.edge, slot));
        sum += rate * (instance.comm_latency(a.iot, a.edge) + il);
    }
    sum / total
}

/// Memory utilization of `edge`. Values above 1 are returned as is.
pub fn node_utilization(instance: &Instance, solution: &Solution, edge: usize) -> f64 {
    let used: f64 = (0..instance.n_slots())
        .map(|s| instance.memory_req(s) * solution.replicas(edge, s) as f64)
        .sum();
    used / instance.capacity(edge)
}

/// Largest tangent line at utilization `u`.
pub fn utilization_cost(instance: &Instance, u: f64) -> f64 {
    instance
        .tangents()
        .iter()
        .map(|t| t.at(u))
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn node_costs(instance: &Instance, solution: &Solution) -> Vec<f64> {
    (0..instance.n_edge())
        .map(|e| utilization_cost(instance, node_utilization(instance, solution, e)))
        .collect()
}

pub fn average_cost(instance: &Instance, solution: &Solution) -> f64 {
    let costs = node_costs(instance, solution);
    costs.iter().sum::<f64>() / instance.n_edge() as f64
}

pub fn objective(instance: &Instance, solution: &Solution) -> f64 {
    let w = instance.objective_weight();
    w * average_latency(instance, solution) + (1.0 - w) * average_cost(instance, solution)
}

/// All objective terms of one solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub latency: f64,
    pub cost: f64,
    pub objective: f64,
    pub utilization: Vec<f64>,
    pub node_costs: Vec<f64>,
}

impl Evaluation {
    pub fn mean_utilization(&self) -> f64 {
        self.utilization.iter().sum::<f64>() / self.utilization.len() as f64
    }
}

pub fn evaluate(instance: &Instance, solution: &Solution) -> Evaluation {
    let utilization: Vec<f64> = (0..instance.n_edge())
        .map(|e| node_utilization(instance, solution, e))
        .collect();
    let node_costs: Vec<f64> = utilization.iter().map(|&u| utilization_cost(instance, u)).collect();
    Evaluation {
        latency: average_latency(instance, solution),
        cost: average_cost(instance, solution),
        objective: objective(instance, solution),
        utilization,
        node_costs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::tests::single_link;
    use crate::instance::Params;

    fn params() -> Params {
        Params::default()
    }

    #[test]
    fn exclusive_run_identity() {
        let inst = single_link(&[(1.0, 8.0, 10.0, 0.1)], 1.0, params());
        let mut sol = Solution::empty(&inst);
        sol.set_replicas(0, 0, 1);
        assert_eq!(inference_latency(&inst, &sol, 0, 0, 0), 10.0);
    }

    #[test]
    fn replication_term() {
        let inst = single_link(&[(1.0, 8.0, 10.0, 0.1)], 1.0, params());
        let mut sol = Solution::empty(&inst);
        sol.set_replicas(0, 0, 2);
        assert!((inference_latency(&inst, &sol, 0, 0, 0) - 11.0).abs() < 1e-12);
        // undeployed variant: replication term clamps at zero
        sol.set_replicas(0, 0, 0);
        assert_eq!(inference_latency(&inst, &sol, 0, 0, 0), 10.0);
    }

    #[test]
    fn colocation_term() {
        let inst = single_link(&[(1.0, 8.0, 10.0, 0.1), (1.0, 8.0, 20.0, 0.1)], 1.0, params());
        let mut sol = Solution::empty(&inst);
        sol.set_replicas(0, 0, 1);
        sol.set_replicas(0, 1, 2);
        assert!((inference_latency(&inst, &sol, 0, 0, 0) - 14.0).abs() < 1e-12);
    }

    #[test]
    fn single_request_latency() {
        // one link of 11 ms, round trip -> 22 ms
        let inst = single_link(&[(1.0, 8.0, 10.0, 0.1)], 1.0, params());
        let mut sol = Solution::empty(&inst);
        sol.assign(&inst, Assignment::new(0, 0, 0, 0)).unwrap();
        sol.set_replicas(0, 0, 1);
        assert_eq!(average_latency(&inst, &sol), 32.0);
    }

    #[test]
    fn zero_demand_latency() {
        let inst = single_link(&[(1.0, 8.0, 10.0, 0.1)], 0.0, params());
        let sol = Solution::empty(&inst);
        assert_eq!(average_latency(&inst, &sol), 0.0);
        assert_eq!(objective(&inst, &sol), 0.0);
        assert!(check_feasibility(&inst, &sol).is_feasible());
    }

    #[test]
    fn utilization_values() {
        let inst = single_link(&[(1.6, 8.0, 10.0, 0.1), (2.0, 8.0, 10.0, 0.1)], 1.0, params());
        let mut sol = Solution::empty(&inst);
        assert_eq!(node_utilization(&inst, &sol, 0), 0.0);
        sol.set_replicas(0, 0, 1);
        assert!((node_utilization(&inst, &sol, 0) - 0.2).abs() < 1e-15);
        sol.set_replicas(0, 0, 0);
        sol.set_replicas(0, 1, 4);
        assert_eq!(node_utilization(&inst, &sol, 0), 1.0);
    }

    #[test]
    fn cost_normalisation_and_midpoint() {
        let inst = single_link(&[(1.0, 8.0, 10.0, 0.1)], 1.0, params());
        assert_eq!(utilization_cost(&inst, 0.0), 0.0);
        assert!((utilization_cost(&inst, 1.0) - 1.0).abs() < 1e-12);
        // brute force over the tangent grid against the closed form
        let cost = &inst.params().cost;
        let mut best = f64::NEG_INFINITY;
        for k in 0..=10 {
            let t = k as f64 / 10.0;
            let slope = 4.0 * (4.0 * t).exp() / (4.0f64.exp() - 1.0);
            let value = ((4.0 * t).exp() - 1.0) / (4.0f64.exp() - 1.0);
            best = best.max(value + slope * (0.5 - t));
        }
        let c = utilization_cost(&inst, 0.5);
        assert!((c - best).abs() < 1e-12);
        assert!(c <= cost.phi(0.5) + 1e-12 && c >= cost.phi(0.5) - 0.01);
    }

    #[test]
    fn weight_extremes() {
        let inst = single_link(&[(1.6, 8.0, 10.0, 0.1)], 3.0, params());
        let mut sol = Solution::empty(&inst);
        sol.assign(&inst, Assignment::new(0, 0, 0, 0)).unwrap();
        sol.set_replicas(0, 0, 1);
        let mut p = params();
        p.objective_weight = 1.0;
        let only_latency = inst.with_params(p.clone()).unwrap();
        assert_eq!(objective(&only_latency, &sol), average_latency(&only_latency, &sol));
        p.objective_weight = 0.0;
        let only_cost = inst.with_params(p).unwrap();
        assert_eq!(objective(&only_cost, &sol), average_cost(&only_cost, &sol));
    }

    #[test]
    fn blended_objective_arithmetic() {
        // 0.1 * 20 + 0.9 * 0.1
        let w: f64 = 0.1;
        assert!((w * 20.0 + (1.0 - w) * 0.1 - 2.09).abs() < 1e-12);
    }

    #[test]
    fn average_cost_over_nodes() {
        let inst = single_link(&[(1.0, 8.0, 10.0, 0.1)], 1.0, params());
        let sol = Solution::empty(&inst);
        assert_eq!(average_cost(&inst, &sol), 0.0);
        // 0.25 on one of five nodes
        let costs = [0.25, 0.0, 0.0, 0.0, 0.0];
        assert!((costs.iter().sum::<f64>() / 5.0 - 0.05).abs() < 1e-15);
    }

    #[test]
    fn cached_costs_follow_changes() {
        let inst = single_link(&[(1.0, 8.0, 10.0, 0.1)], 1.0, params());
        let mut sol = Solution::empty(&inst);
        sol.set_replicas(0, 0, 4);
        sol.refresh_costs(&inst);
        assert_eq!(sol.node_costs().unwrap(), node_costs(&inst, &sol).as_slice());
        sol.set_replicas(0, 0, 1);
        assert!(sol.node_costs().is_none());
    }

    #[test]
    fn out_of_range_assignment_is_rejected() {
        let inst = single_link(&[(1.0, 8.0, 10.0, 0.1)], 1.0, params());
        let mut sol = Solution::empty(&inst);
        assert!(sol.assign(&inst, Assignment::new(0, 0, 0, 1)).is_err());
        assert!(sol.assign(&inst, Assignment::new(1, 0, 0, 0)).is_err());
    }
}
