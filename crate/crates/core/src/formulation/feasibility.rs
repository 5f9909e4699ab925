use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{inference_latency_slot, node_utilization, Solution};
use crate::instance::{Instance, ReplicaCap};

/// Absolute slack allowed on every constraint, scaled by `max(1, |rhs|)`.
pub const FEASIBILITY_TOL: f64 = 1e-9;

fn exceeds(lhs: f64, rhs: f64) -> Option<f64> {
    let excess = lhs - rhs;
    (excess > FEASIBILITY_TOL * rhs.abs().max(1.0) || excess.is_nan()).then_some(excess)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintId {
    /// Each demanded `(iot, model)` pair is served exactly once, others never.
    Assignment,
    /// Round-trip time per `(iot, edge, model)` within the requirement.
    LatencyReq,
    /// Load routed to a variant on a node within `max_load * n`.
    Load,
    /// A variant that serves requests has at least one instance.
    ReplicaLink,
    /// Co-location cap.
    ReplicaCap,
    Memory,
    Utilization,
}

impl ConstraintId {
    pub fn as_str(self) -> &'static str {
        match self {
            ConstraintId::Assignment => "assignment",
            ConstraintId::LatencyReq => "latency_req",
            ConstraintId::Load => "load",
            ConstraintId::ReplicaLink => "replica_link",
            ConstraintId::ReplicaCap => "replica_cap",
            ConstraintId::Memory => "memory",
            ConstraintId::Utilization => "utilization",
        }
    }
}

/// Index tuple of a violated constraint; unused positions are `None`.
/// `variant` is 0-based here.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Location {
    pub iot: Option<usize>,
    pub edge: Option<usize>,
    pub model: Option<usize>,
    pub variant: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub constraint: ConstraintId,
    pub location: Location,
    /// Amount by which the constraint is exceeded, in the constraint's units.
    pub magnitude: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, constraint: ConstraintId) -> usize {
        self.violations.iter().filter(|v| v.constraint == constraint).count()
    }

    fn push(&mut self, constraint: ConstraintId, location: Location, magnitude: f64) {
        self.violations.push(Violation {
            constraint,
            location,
            magnitude,
        });
    }
}

/// Evaluates every constraint at every index and lists the violations.
pub fn check_feasibility(instance: &Instance, solution: &Solution) -> FeasibilityReport {
    let mut report = FeasibilityReport::default();
    let n_slots = instance.n_slots();

    let mut served: BTreeMap<(usize, usize), u32> = BTreeMap::new();
    let mut load = vec![0.0; instance.n_edge() * n_slots];
    let mut round_trip: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
    for a in solution.assignments() {
        *served.entry((a.iot, a.model)).or_default() += 1;
        let slot = instance.slot(a.model, a.variant);
        load[a.edge * n_slots + slot] += instance.rate(a.iot, a.model);
        let rtt = instance.comm_latency(a.iot, a.edge) + inference_latency_slot(instance, solution, a.edge, slot);
        *round_trip.entry((a.iot, a.edge, a.model)).or_default() += rtt;
    }

    for i in 0..instance.n_iot() {
        for m in 0..instance.n_models() {
            let required = if instance.rate(i, m) > 0.0 { 1 } else { 0 };
            let got = served.get(&(i, m)).copied().unwrap_or(0);
            if got != required {
                report.push(
                    ConstraintId::Assignment,
                    Location {
                        iot: Some(i),
                        model: Some(m),
                        ..Location::default()
                    },
                    (got as f64 - required as f64).abs(),
                );
            }
        }
    }

    for (&(i, e, m), &rtt) in &round_trip {
        if let Some(excess) = exceeds(rtt, instance.latency_req(i, m)) {
            report.push(
                ConstraintId::LatencyReq,
                Location {
                    iot: Some(i),
                    edge: Some(e),
                    model: Some(m),
                    variant: None,
                },
                excess,
            );
        }
    }

    for e in 0..instance.n_edge() {
        for s in 0..n_slots {
            let n = solution.replicas(e, s);
            let here = Location {
                iot: None,
                edge: Some(e),
                model: Some(instance.slot_model(s)),
                variant: Some(instance.slot_variant(s)),
            };
            if let Some(excess) = exceeds(load[e * n_slots + s], instance.max_load(s) * n as f64) {
                report.push(ConstraintId::Load, here, excess);
            }
            if instance.replica_cap() == ReplicaCap::PerVariant && n > instance.max_replicas() {
                report.push(ConstraintId::ReplicaCap, here, (n - instance.max_replicas()) as f64);
            }
        }
        if instance.replica_cap() == ReplicaCap::Aggregate {
            let total: u32 = (0..n_slots).map(|s| solution.replicas(e, s)).sum();
            if total > instance.max_replicas() {
                report.push(
                    ConstraintId::ReplicaCap,
                    Location {
                        edge: Some(e),
                        ..Location::default()
                    },
                    (total - instance.max_replicas()) as f64,
                );
            }
        }
    }

    for a in solution.assignments() {
        let slot = instance.slot(a.model, a.variant);
        if solution.replicas(a.edge, slot) == 0 {
            report.push(
                ConstraintId::ReplicaLink,
                Location {
                    iot: Some(a.iot),
                    edge: Some(a.edge),
                    model: Some(a.model),
                    variant: Some(a.variant),
                },
                1.0,
            );
        }
    }

    for e in 0..instance.n_edge() {
        let u = node_utilization(instance, solution, e);
        let here = Location {
            edge: Some(e),
            ..Location::default()
        };
        let used = u * instance.capacity(e);
        if let Some(excess) = exceeds(used, instance.capacity(e)) {
            report.push(ConstraintId::Memory, here, excess);
        }
        if let Some(excess) = exceeds(u, 1.0) {
            report.push(ConstraintId::Utilization, here, excess);
        }
    }

    report
}
