//! Exact mixed-integer linear reformulation of the placement problem.
//!
//! Inference latency multiplies assignment binaries `x` by replica counts
//! `n`. Each product `x * n` with `0 <= n <= K` is replaced by a continuous
//! `w` and the four inequalities
//!
//! ```text
//! w <= K x        (gx_*)
//! w <= n          (gn_*)
//! w >= n - K (1 - x)   (gl_*)
//! w >= 0          (bound)
//! ```
//!
//! which force `w = x n` at every integral point. For an assignment of pair
//! `(i, m)` to variant slot `s` on node `e`, with `x` binary and `n[s] >= 1`
//! whenever `x = 1`, the latency term becomes
//!
//! ```text
//! (CL + L[e,s] (1 - a[s])) x + sum over s' of a[s'] L[e,s'] w(x, n[s'])
//! ```
//!
//! Utilization is substituted into the tangent rows, so there are no
//! separate utilization variables.
//!
//! Naming, with 0-based positions: `x_i.e.m.v`, `n_e.m.v`, `z_e`,
//! `w_i.e.m.v.m2.v2`. Rows: `assign_i.m`, `latreq_i.e.m`, `tangent_e.t`,
//! `util_e`, `mem_e`, `load_e.m.v`, `link_i.e.m.v`, `capsum_e` (aggregate cap
//! only) and `gx_`/`gn_`/`gl_` followed by the suffix of the matching `w`.

mod import;
mod mps;

use std::collections::{BTreeMap, HashMap};

pub use import::{import_solution, parse_values, ImportedSolution};
pub use mps::{export_mps, read_mps, write_mps};

use crate::formulation::{node_utilization, utilization_cost, Solution, FEASIBILITY_TOL};
use crate::instance::{Instance, ReplicaCap};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Integer,
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    /// `(column, coefficient)` pairs sorted by column, without zeros.
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Minimisation model: `objective . values + objective_constant`.
#[derive(Debug, Clone, Default)]
pub struct MilpModel {
    pub name: String,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    /// `(column, coefficient)` pairs sorted by column, without zeros.
    pub objective: Vec<(usize, f64)>,
    pub objective_constant: f64,
    index: HashMap<String, usize>,
}

impl PartialEq for MilpModel {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.variables == other.variables
            && self.constraints == other.constraints
            && self.objective == other.objective
            && self.objective_constant == other.objective_constant
    }
}

fn normalize(terms: impl IntoIterator<Item = (usize, f64)>) -> Vec<(usize, f64)> {
    let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
    for (col, coeff) in terms {
        *merged.entry(col).or_default() += coeff;
    }
    merged.into_iter().filter(|&(_, c)| c != 0.0).collect()
}

impl MilpModel {
    pub fn new(name: impl Into<String>) -> Self {
        MilpModel {
            name: name.into(),
            ..MilpModel::default()
        }
    }

    /// Adds a variable and returns its column. Names must be unique.
    pub fn add_variable(&mut self, name: impl Into<String>, kind: VarKind, lower: f64, upper: f64) -> usize {
        let name = name.into();
        let col = self.variables.len();
        let previous = self.index.insert(name.clone(), col);
        assert!(previous.is_none(), "duplicate variable `{name}`");
        self.variables.push(Variable {
            name,
            kind,
            lower,
            upper,
        });
        col
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: impl IntoIterator<Item = (usize, f64)>,
        sense: Sense,
        rhs: f64,
    ) {
        self.constraints.push(Constraint {
            name: name.into(),
            terms: normalize(terms),
            sense,
            rhs,
        });
    }

    pub fn set_objective(&mut self, terms: impl IntoIterator<Item = (usize, f64)>, constant: f64) {
        self.objective = normalize(terms);
        self.objective_constant = constant;
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn n_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn count_kind(&self, kind: VarKind) -> usize {
        self.variables.iter().filter(|v| v.kind == kind).count()
    }

    /// Columns whose name starts with `prefix`.
    pub fn count_prefix(&self, prefix: &str) -> usize {
        self.variables.iter().filter(|v| v.name.starts_with(prefix)).count()
    }
}

/// Result of plugging a full point into a [`MilpModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct MilpEvaluation {
    pub objective: f64,
    /// Names of violated rows, plus `bound:<column>` and
    /// `integrality:<column>` entries for column-level violations.
    pub violations: Vec<String>,
}

impl MilpEvaluation {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

fn slack_ok(lhs: f64, rhs: f64, sense: Sense) -> bool {
    let tol = FEASIBILITY_TOL * rhs.abs().max(1.0);
    match sense {
        Sense::Le => lhs <= rhs + tol,
        Sense::Ge => lhs >= rhs - tol,
        Sense::Eq => (lhs - rhs).abs() <= tol,
    }
}

/// Objective value and violated constraints at `values` (one per column).
pub fn evaluate_milp(model: &MilpModel, values: &[f64]) -> MilpEvaluation {
    assert_eq!(values.len(), model.variables.len(), "one value per column");
    let mut violations = Vec::new();
    for (var, &v) in model.variables.iter().zip(values) {
        if !slack_ok(v, var.lower, Sense::Ge) || !slack_ok(v, var.upper, Sense::Le) {
            violations.push(format!("bound:{}", var.name));
        }
        if var.kind != VarKind::Continuous && (v - v.round()).abs() > FEASIBILITY_TOL {
            violations.push(format!("integrality:{}", var.name));
        }
    }
    for row in &model.constraints {
        let lhs: f64 = row.terms.iter().map(|&(c, a)| a * values[c]).sum();
        if !slack_ok(lhs, row.rhs, row.sense) {
            violations.push(row.name.clone());
        }
    }
    let objective = model.objective.iter().map(|&(c, a)| a * values[c]).sum::<f64>() + model.objective_constant;
    MilpEvaluation { objective, violations }
}

fn x_name(i: usize, e: usize, m: usize, v: usize) -> String {
    format!("x_{i}.{e}.{m}.{v}")
}

fn n_name(e: usize, m: usize, v: usize) -> String {
    format!("n_{e}.{m}.{v}")
}

/// Builds the linear model of `instance`.
///
/// Columns come in the order `x`, `n`, `z`, `w`. An `x` is fixed to zero
/// when its pair has no demand or its edge node is unreachable. A `w` is
/// created only for demanded, reachable assignments and for co-located
/// slots with a nonzero interference term.
pub fn glover_linearize(instance: &Instance) -> MilpModel {
    let mut model = MilpModel::new("mvsp");
    let (n_iot, n_edge, n_models, n_slots) = (instance.n_iot(), instance.n_edge(), instance.n_models(), instance.n_slots());
    let cap = instance.max_replicas() as f64;
    let weight = instance.objective_weight();
    let total = instance.total_demand();

    let live = |i: usize, e: usize, m: usize| instance.rate(i, m) > 0.0 && instance.comm_latency(i, e).is_finite();

    let mut x = vec![0usize; n_iot * n_edge * n_slots];
    for i in 0..n_iot {
        for e in 0..n_edge {
            for m in 0..n_models {
                for s in instance.model_slots(m) {
                    let upper = if live(i, e, m) { 1.0 } else { 0.0 };
                    x[(i * n_edge + e) * n_slots + s] =
                        model.add_variable(x_name(i, e, m, instance.slot_variant(s)), VarKind::Binary, 0.0, upper);
                }
            }
        }
    }
    let mut n = vec![0usize; n_edge * n_slots];
    for e in 0..n_edge {
        for s in 0..n_slots {
            n[e * n_slots + s] = model.add_variable(
                n_name(e, instance.slot_model(s), instance.slot_variant(s)),
                VarKind::Integer,
                0.0,
                cap,
            );
        }
    }
    let z: Vec<usize> = (0..n_edge)
        .map(|e| model.add_variable(format!("z_{e}"), VarKind::Continuous, 0.0, f64::INFINITY))
        .collect();

    let mut objective: Vec<(usize, f64)> = Vec::new();
    // latency terms per (i, e, m), shared by the objective and the latency requirement rows
    for i in 0..n_iot {
        for m in 0..n_models {
            let rate = instance.rate(i, m);
            for e in 0..n_edge {
                if !live(i, e, m) {
                    continue;
                }
                let comm = instance.comm_latency(i, e);
                let mut row: Vec<(usize, f64)> = Vec::new();
                for s in instance.model_slots(m) {
                    let xc = x[(i * n_edge + e) * n_slots + s];
                    let a = instance.interference_coeff(s);
                    let base = instance.base_latency(e, s);
                    row.push((xc, comm + base * (1.0 - a)));
                    for s2 in 0..n_slots {
                        let coeff = instance.interference_coeff(s2) * instance.base_latency(e, s2);
                        if coeff == 0.0 {
                            continue;
                        }
                        let suffix = format!(
                            "{i}.{e}.{m}.{}.{}.{}",
                            instance.slot_variant(s),
                            instance.slot_model(s2),
                            instance.slot_variant(s2)
                        );
                        let w = model.add_variable(format!("w_{suffix}"), VarKind::Continuous, 0.0, cap);
                        let nc = n[e * n_slots + s2];
                        model.add_constraint(format!("gx_{suffix}"), [(w, 1.0), (xc, -cap)], Sense::Le, 0.0);
                        model.add_constraint(format!("gn_{suffix}"), [(w, 1.0), (nc, -1.0)], Sense::Le, 0.0);
                        model.add_constraint(format!("gl_{suffix}"), [(w, 1.0), (nc, -1.0), (xc, -cap)], Sense::Ge, -cap);
                        row.push((w, coeff));
                    }
                }
                if total > 0.0 {
                    let scale = weight * rate / total;
                    objective.extend(row.iter().map(|&(c, a)| (c, scale * a)));
                }
                let limit = instance.latency_req(i, m);
                if limit.is_finite() {
                    model.add_constraint(format!("latreq_{i}.{e}.{m}"), row, Sense::Le, limit);
                }
            }
        }
    }
    for &zc in &z {
        objective.push((zc, (1.0 - weight) / n_edge as f64));
    }
    model.set_objective(objective, 0.0);

    for p in instance.demanded_pairs() {
        let terms: Vec<(usize, f64)> = (0..n_edge)
            .flat_map(|e| instance.model_slots(p.model).map(move |s| (e, s)))
            .map(|(e, s)| (x[(p.iot * n_edge + e) * n_slots + s], 1.0))
            .collect();
        model.add_constraint(format!("assign_{}.{}", p.iot, p.model), terms, Sense::Eq, 1.0);
    }

    for e in 0..n_edge {
        let capacity = instance.capacity(e);
        let usage = |scale: f64| -> Vec<(usize, f64)> {
            (0..n_slots)
                .map(|s| (n[e * n_slots + s], scale * instance.memory_req(s)))
                .collect()
        };
        for (t, tangent) in instance.tangents().iter().enumerate() {
            let mut terms = vec![(z[e], 1.0)];
            terms.extend(usage(-tangent.slope / capacity));
            model.add_constraint(format!("tangent_{e}.{t}"), terms, Sense::Ge, tangent.intercept);
        }
        model.add_constraint(format!("util_{e}"), usage(1.0 / capacity), Sense::Le, 1.0);
        model.add_constraint(format!("mem_{e}"), usage(1.0), Sense::Le, capacity);
        if instance.replica_cap() == ReplicaCap::Aggregate {
            let terms: Vec<(usize, f64)> = (0..n_slots).map(|s| (n[e * n_slots + s], 1.0)).collect();
            model.add_constraint(format!("capsum_{e}"), terms, Sense::Le, cap);
        }
        for s in 0..n_slots {
            let m = instance.slot_model(s);
            let mut terms: Vec<(usize, f64)> = (0..n_iot)
                .filter(|&i| live(i, e, m))
                .map(|i| (x[(i * n_edge + e) * n_slots + s], instance.rate(i, m)))
                .collect();
            terms.push((n[e * n_slots + s], -instance.max_load(s)));
            model.add_constraint(format!("load_{e}.{m}.{}", instance.slot_variant(s)), terms, Sense::Le, 0.0);
        }
    }
    for i in 0..n_iot {
        for e in 0..n_edge {
            for s in 0..n_slots {
                let m = instance.slot_model(s);
                if live(i, e, m) {
                    model.add_constraint(
                        format!("link_{i}.{e}.{m}.{}", instance.slot_variant(s)),
                        [(x[(i * n_edge + e) * n_slots + s], 1.0), (n[e * n_slots + s], -1.0)],
                        Sense::Le,
                        0.0,
                    );
                }
            }
        }
    }
    model
}

/// Number of auxiliary columns [`glover_linearize`] creates for `instance`.
pub fn expected_auxiliaries(instance: &Instance) -> usize {
    let mut count = 0;
    for p in instance.demanded_pairs() {
        for e in 0..instance.n_edge() {
            if !instance.comm_latency(p.iot, e).is_finite() {
                continue;
            }
            let nonzero = (0..instance.n_slots())
                .filter(|&s| instance.interference_coeff(s) * instance.base_latency(e, s) != 0.0)
                .count();
            count += instance.n_variants(p.model) * nonzero;
        }
    }
    count
}

/// Index tuple encoded in a column name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnRole {
    Assign { iot: usize, edge: usize, model: usize, variant: usize },
    Replicas { edge: usize, model: usize, variant: usize },
    Cost { edge: usize },
    Product,
}

/// Decodes a column name following the naming convention.
pub fn column_role(name: &str) -> Option<ColumnRole> {
    let (prefix, rest) = name.split_once('_')?;
    let parts: Vec<usize> = rest.split('.').map(|p| p.parse().ok()).collect::<Option<_>>()?;
    match (prefix, parts.as_slice()) {
        ("x", &[iot, edge, model, variant]) => Some(ColumnRole::Assign {
            iot,
            edge,
            model,
            variant,
        }),
        ("n", &[edge, model, variant]) => Some(ColumnRole::Replicas { edge, model, variant }),
        ("z", &[edge]) => Some(ColumnRole::Cost { edge }),
        ("w", &[_, _, _, _, _, _]) => Some(ColumnRole::Product),
        _ => None,
    }
}

/// Extends `solution` to a full point of `model`: `w = x n` and `z` equal to
/// the node cost. Columns the naming convention does not cover are 0.
pub fn lift(instance: &Instance, model: &MilpModel, solution: &Solution) -> Vec<f64> {
    let mut values = vec![0.0; model.n_variables()];
    let x_of = |i: usize, e: usize, m: usize, v: usize| {
        solution.is_assigned(&crate::formulation::Assignment::new(i, e, m, v)) as u32 as f64
    };
    for (col, var) in model.variables.iter().enumerate() {
        values[col] = match column_role(&var.name) {
            Some(ColumnRole::Assign {
                iot,
                edge,
                model,
                variant,
            }) => x_of(iot, edge, model, variant),
            Some(ColumnRole::Replicas { edge, model, variant }) => solution.replicas(edge, instance.slot(model, variant)) as f64,
            Some(ColumnRole::Cost { edge }) => utilization_cost(instance, node_utilization(instance, solution, edge)),
            Some(ColumnRole::Product) => {
                let parts: Vec<usize> = var.name[2..].split('.').map(|p| p.parse().unwrap()).collect();
                let (i, e, m, v, m2, v2) = (parts[0], parts[1], parts[2], parts[3], parts[4], parts[5]);
                x_of(i, e, m, v) * solution.replicas(e, instance.slot(m2, v2)) as f64
            }
            None => 0.0,
        };
    }
    values
}
