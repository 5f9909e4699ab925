//! Exhaustive search for tiny instances.
//!
//! [`brute_force`] enumerates every assignment, including options the
//! solvers filter out, and relies only on [`derive_replicas`] and the
//! formulation module. [`brute_force_paranoid`] additionally enumerates
//! every replica vector between the derived one and the cap, so it does not
//! depend on minimal replica counts being optimal.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::formulation::{check_feasibility, objective, Assignment, Solution};
use crate::instance::Instance;
use crate::solver::{derive_replicas, SolveResult, SolveStatus};

/// Largest number of assignments [`brute_force`] will enumerate.
pub const ASSIGNMENT_LIMIT: f64 = 1e7;
/// Largest number of replica vectors enumerated per assignment in paranoid mode.
pub const REPLICA_LIMIT: f64 = 1e5;

/// Number of assignments satisfying the assignment constraint.
pub fn search_space(instance: &Instance) -> f64 {
    instance
        .demanded_pairs()
        .iter()
        .map(|p| (instance.n_edge() * instance.n_variants(p.model)) as f64)
        .product()
}

/// Calls `visit` with every assignment that serves each demanded pair
/// exactly once, in lexicographic order of `(edge, variant)` per pair.
fn for_each_assignment(instance: &Instance, mut visit: impl FnMut(&Solution)) {
    let pairs = instance.demanded_pairs();
    let sizes: Vec<usize> = pairs
        .iter()
        .map(|p| instance.n_edge() * instance.n_variants(p.model))
        .collect();
    let mut digits = vec![0usize; pairs.len()];
    loop {
        let mut solution = Solution::empty(instance);
        for (k, p) in pairs.iter().enumerate() {
            let v_count = instance.n_variants(p.model);
            let a = Assignment::new(p.iot, digits[k] / v_count, p.model, digits[k] % v_count);
            solution.assign(instance, a).expect("enumerated indices are in range");
        }
        visit(&solution);
        let mut k = pairs.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            digits[k] += 1;
            if digits[k] < sizes[k] {
                break;
            }
            digits[k] = 0;
        }
    }
}

/// Minimum-objective feasible solution by full enumeration of assignments.
pub fn brute_force(instance: &Instance) -> Result<SolveResult> {
    let size = search_space(instance);
    if size > ASSIGNMENT_LIMIT {
        return Err(Error::SearchSpaceTooLarge {
            size,
            limit: ASSIGNMENT_LIMIT,
        });
    }
    let start = Instant::now();
    let mut visited = 0u64;
    let mut best: Option<(f64, Solution)> = None;
    for_each_assignment(instance, |x| {
        visited += 1;
        let mut candidate = x.clone();
        candidate.set_replica_table(derive_replicas(instance, &candidate));
        if !check_feasibility(instance, &candidate).is_feasible() {
            return;
        }
        let value = objective(instance, &candidate);
        if best.as_ref().is_none_or(|(b, _)| value < *b) {
            best = Some((value, candidate));
        }
    });
    Ok(finish(instance, best, visited, start))
}

fn finish(instance: &Instance, best: Option<(f64, Solution)>, visited: u64, start: Instant) -> SolveResult {
    match best {
        None => SolveResult {
            solution: None,
            status: SolveStatus::Infeasible,
            best_objective: f64::INFINITY,
            lower_bound: f64::INFINITY,
            nodes_explored: visited,
            elapsed: start.elapsed(),
        },
        Some((value, mut solution)) => {
            solution.refresh_costs(instance);
            SolveResult {
                solution: Some(solution),
                status: SolveStatus::Optimal,
                best_objective: value,
                lower_bound: value,
                nodes_explored: visited,
                elapsed: start.elapsed(),
            }
        }
    }
}

/// Outcome of [`brute_force_paranoid`].
#[derive(Debug, Clone)]
pub struct ParanoidReport {
    /// Best `(x, n)` over all enumerated replica vectors.
    pub result: SolveResult,
    /// Number of `(x, n)` points evaluated.
    pub points: u64,
    /// Feasible points whose objective beats the same assignment with
    /// derived replica counts (or that are feasible while the derived
    /// counts are not). Zero when minimal replica counts are optimal.
    pub improvements: u64,
}

/// Enumerates every assignment and, for each, every replica vector with
/// components between the derived count and the cap `K`.
pub fn brute_force_paranoid(instance: &Instance) -> Result<ParanoidReport> {
    let size = search_space(instance);
    if size > ASSIGNMENT_LIMIT {
        return Err(Error::SearchSpaceTooLarge {
            size,
            limit: ASSIGNMENT_LIMIT,
        });
    }
    let start = Instant::now();
    let cap = instance.max_replicas();
    let mut points = 0u64;
    let mut improvements = 0u64;
    let mut best: Option<(f64, Solution)> = None;
    let mut failure = None;
    for_each_assignment(instance, |x| {
        if failure.is_some() {
            return;
        }
        let minimal = derive_replicas(instance, x);
        let ranges: Vec<(u32, u32)> = minimal.iter().map(|&lo| (lo, cap.max(lo))).collect();
        let count: f64 = ranges.iter().map(|&(lo, hi)| (hi - lo + 1) as f64).product();
        if count > REPLICA_LIMIT {
            failure = Some(Error::SearchSpaceTooLarge {
                size: count,
                limit: REPLICA_LIMIT,
            });
            return;
        }
        let mut candidate = x.clone();
        candidate.set_replica_table(minimal.clone());
        let reference = check_feasibility(instance, &candidate)
            .is_feasible()
            .then(|| objective(instance, &candidate));

        let mut table = minimal.clone();
        loop {
            points += 1;
            candidate.set_replica_table(table.clone());
            if check_feasibility(instance, &candidate).is_feasible() {
                let value = objective(instance, &candidate);
                if reference.is_none_or(|r| value < r) {
                    improvements += 1;
                }
                if best.as_ref().is_none_or(|(b, _)| value < *b) {
                    best = Some((value, candidate.clone()));
                }
            }
            let mut k = table.len();
            let advanced = loop {
                if k == 0 {
                    break false;
                }
                k -= 1;
                if table[k] < ranges[k].1 {
                    table[k] += 1;
                    break true;
                }
                table[k] = ranges[k].0;
            };
            if !advanced {
                break;
            }
        }
    });
    if let Some(err) = failure {
        return Err(err);
    }
    Ok(ParanoidReport {
        result: finish(instance, best, points, start),
        points,
        improvements,
    })
}
