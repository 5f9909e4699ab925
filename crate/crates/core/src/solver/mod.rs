//! Exact branch-and-bound and greedy/local-search heuristic.
//!
//! Both solvers search over assignments only. Replica counts are derived
//! from the assignment with [`derive_replicas`]: latency and cost are both
//! non-decreasing in every replica count, so the smallest counts that carry
//! the routed load are optimal for a fixed assignment.

mod exact;
mod heuristic;
mod state;

use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use exact::{solve_exact, solve_exact_from};
pub use heuristic::{improve, solve_heuristic, solve_heuristic_seeded};
pub use state::{PartialState, SearchOrder};

use crate::error::{Error, Result};
use crate::formulation::io::{SolutionDocument, SolveMeta};
use crate::formulation::Solution;
use crate::instance::Instance;

/// Tolerance for comparing objective values.
pub const OBJECTIVE_TOL: f64 = 1e-9;

/// Smallest replica count carrying `load` requests routed by `assigned`
/// assignments to a variant with capacity `max_load` per instance.
pub fn replicas_for(load: f64, assigned: usize, max_load: f64) -> u32 {
    if load > 0.0 {
        ((load / max_load - 1e-9).ceil() as u32).max(1)
    } else if assigned > 0 {
        1
    } else {
        0
    }
}

/// Componentwise-minimal replica counts for the assignments in `solution`,
/// indexed by `edge * n_slots + slot`. The result may break the replica cap
/// or memory limits; that is reported by the feasibility check.
pub fn derive_replicas(instance: &Instance, solution: &Solution) -> Vec<u32> {
    let n_slots = instance.n_slots();
    let mut load = vec![0.0; instance.n_edge() * n_slots];
    let mut assigned = vec![0usize; load.len()];
    for a in solution.assignments() {
        let k = a.edge * n_slots + instance.slot(a.model, a.variant);
        load[k] += instance.rate(a.iot, a.model);
        assigned[k] += 1;
    }
    (0..load.len())
        .map(|k| replicas_for(load[k], assigned[k], instance.max_load(k % n_slots)))
        .collect()
}

/// Replaces the replica counts of `solution` with the derived ones.
pub fn with_derived_replicas(instance: &Instance, mut solution: Solution) -> Solution {
    let table = derive_replicas(instance, &solution);
    solution.set_replica_table(table);
    solution
}

/// Search limits. At least one of `max_nodes` and `time_limit` must be set.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveBudget {
    pub max_nodes: Option<u64>,
    pub time_limit: Option<Duration>,
    /// Relative optimality gap at which the search may stop.
    pub gap: f64,
}

impl Default for SolveBudget {
    fn default() -> Self {
        SolveBudget {
            max_nodes: Some(10_000_000),
            time_limit: None,
            gap: 0.0,
        }
    }
}

impl SolveBudget {
    pub fn nodes(max_nodes: u64) -> Self {
        SolveBudget {
            max_nodes: Some(max_nodes),
            ..SolveBudget::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_nodes.is_none() && self.time_limit.is_none() {
            return Err(Error::validation("budget", "set a node limit or a time limit"));
        }
        if !self.gap.is_finite() || self.gap < 0.0 {
            return Err(Error::validation("budget.gap", format!("must be finite and non-negative, got {}", self.gap)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// Search tree exhausted; the gap target is met.
    Optimal,
    /// Heuristic result without an optimality proof.
    Feasible,
    Infeasible,
    /// A limit was hit before the search finished. The incumbent, if any, is
    /// returned.
    BudgetExhausted,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Feasible => "feasible",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::BudgetExhausted => "budget_exhausted",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub solution: Option<Solution>,
    pub status: SolveStatus,
    /// Objective of `solution`, infinite when there is none.
    pub best_objective: f64,
    pub lower_bound: f64,
    pub nodes_explored: u64,
    pub elapsed: Duration,
}

impl SolveResult {
    pub(crate) fn infeasible(nodes_explored: u64, elapsed: Duration) -> Self {
        SolveResult {
            solution: None,
            status: SolveStatus::Infeasible,
            best_objective: f64::INFINITY,
            lower_bound: f64::INFINITY,
            nodes_explored,
            elapsed,
        }
    }

    /// Equality of everything except the elapsed time.
    pub fn same_outcome(&self, other: &SolveResult) -> bool {
        let same_solution = match (&self.solution, &other.solution) {
            (Some(a), Some(b)) => a.same_decisions(b),
            (None, None) => true,
            _ => false,
        };
        same_solution
            && self.status == other.status
            && self.best_objective.to_bits() == other.best_objective.to_bits()
            && self.lower_bound.to_bits() == other.lower_bound.to_bits()
            && self.nodes_explored == other.nodes_explored
    }

    pub fn meta(&self) -> SolveMeta {
        SolveMeta {
            status: self.status,
            objective: self.best_objective,
            lower_bound: self.lower_bound,
            nodes_explored: self.nodes_explored,
            elapsed_secs: self.elapsed.as_secs_f64(),
        }
    }

    /// Solution file contents: the metadata header, the solution (empty when
    /// there is none) and its feasibility report.
    pub fn to_document(&self, instance: &Instance) -> SolutionDocument {
        let mut doc = match &self.solution {
            Some(s) => SolutionDocument::audited(instance, s.clone()),
            None => SolutionDocument::new(Solution::empty(instance)),
        };
        doc.meta = Some(self.meta());
        doc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulation::Assignment;
    use crate::instance::tests::single_link;
    use crate::instance::{Params, ReplicaCap};

    #[test]
    fn replica_derivation() {
        assert_eq!(replicas_for(10.0, 2, 8.0), 2);
        assert_eq!(replicas_for(0.0, 0, 8.0), 0);
        assert_eq!(replicas_for(0.0, 1, 8.0), 1);
        assert_eq!(replicas_for(16.0, 2, 8.0), 2);
        assert_eq!(replicas_for(16.5, 2, 8.0), 3);
    }

    #[test]
    fn zero_rate_assignment_still_needs_an_instance() {
        let mut p = Params::default();
        p.replica_cap = ReplicaCap::Aggregate;
        let inst = single_link(&[(1.0, 8.0, 10.0, 0.1)], 0.0, p);
        let mut sol = Solution::empty(&inst);
        sol.assign(&inst, Assignment::new(0, 0, 0, 0)).unwrap();
        assert_eq!(derive_replicas(&inst, &sol), vec![1]);
    }

    #[test]
    fn budget_validation() {
        assert!(SolveBudget::default().validate().is_ok());
        let none = SolveBudget {
            max_nodes: None,
            time_limit: None,
            gap: 0.0,
        };
        assert!(none.validate().is_err());
        let negative = SolveBudget {
            gap: -1.0,
            ..SolveBudget::default()
        };
        assert!(negative.validate().is_err());
    }
}
