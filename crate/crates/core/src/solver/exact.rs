use std::time::Instant;

use super::state::{PartialState, SearchOrder};
use super::{with_derived_replicas, SolveBudget, SolveResult, SolveStatus, OBJECTIVE_TOL};
use crate::error::Result;
use crate::formulation::{check_feasibility, objective, Solution};
use crate::instance::Instance;

struct Frame {
    depth: usize,
    next: usize,
    bound: f64,
}

/// Depth-first branch-and-bound over the assignment of every demanded pair.
pub fn solve_exact(instance: &Instance, budget: &SolveBudget) -> Result<SolveResult> {
    solve_exact_from(instance, budget, None)
}

/// Like [`solve_exact`], seeded with `incumbent` when it is feasible. Its
/// replica counts are re-derived first.
pub fn solve_exact_from(instance: &Instance, budget: &SolveBudget, incumbent: Option<&Solution>) -> Result<SolveResult> {
    budget.validate()?;
    let start = Instant::now();
    let order = SearchOrder::new(instance);
    let mut state = PartialState::new(instance, &order);

    let mut best: Option<(f64, Solution)> = None;
    if let Some(seed) = incumbent {
        let seed = with_derived_replicas(instance, seed.clone());
        if check_feasibility(instance, &seed).is_feasible() {
            best = Some((objective(instance, &seed), seed));
        }
    }
    let cutoff = |best: &Option<(f64, Solution)>| match best {
        Some((v, _)) => v - OBJECTIVE_TOL.max(budget.gap * v.abs()),
        None => f64::INFINITY,
    };

    let max_nodes = budget.max_nodes.unwrap_or(u64::MAX);
    let mut nodes: u64 = 1;
    let mut pruned_floor = f64::INFINITY;
    let mut exhausted = false;
    let mut stack = Vec::new();

    if order.is_empty() {
        let candidate = state.to_solution();
        let value = objective(instance, &candidate);
        if value < cutoff(&best) {
            best = Some((value, candidate));
        }
    } else if let Some(root) = state.bound() {
        if root < cutoff(&best) {
            stack.push(Frame {
                depth: 0,
                next: 0,
                bound: root,
            });
        } else {
            pruned_floor = root;
        }
    }

    while let Some(top) = stack.last_mut() {
        let depth = top.depth;
        if state.choice(depth).is_some() {
            state.set(depth, None);
        }
        if top.next >= order.pairs[depth].options.len() {
            stack.pop();
            continue;
        }
        if top.bound >= cutoff(&best) {
            pruned_floor = pruned_floor.min(top.bound);
            stack.pop();
            continue;
        }
        if nodes >= max_nodes || (nodes % 256 == 0 && budget.time_limit.is_some_and(|t| start.elapsed() >= t)) {
            exhausted = true;
            break;
        }
        let option = top.next;
        top.next += 1;
        nodes += 1;
        state.set(depth, Some(option));
        if !state.is_consistent() {
            continue;
        }
        if depth + 1 == order.len() {
            if state.objective() < cutoff(&best) {
                let candidate = state.to_solution();
                debug_assert!(check_feasibility(instance, &candidate).is_feasible());
                let value = objective(instance, &candidate);
                if value < cutoff(&best) {
                    best = Some((value, candidate));
                }
            }
            continue;
        }
        match state.bound() {
            None => {}
            Some(b) if b >= cutoff(&best) => pruned_floor = pruned_floor.min(b),
            Some(b) => stack.push(Frame {
                depth: depth + 1,
                next: 0,
                bound: b,
            }),
        }
    }

    let open_floor = stack.iter().map(|f| f.bound).fold(f64::INFINITY, f64::min);
    let elapsed = start.elapsed();
    Ok(match best {
        None if !exhausted => SolveResult::infeasible(nodes, elapsed),
        None => SolveResult {
            solution: None,
            status: SolveStatus::BudgetExhausted,
            best_objective: f64::INFINITY,
            lower_bound: pruned_floor.min(open_floor),
            nodes_explored: nodes,
            elapsed,
        },
        Some((value, mut solution)) => {
            solution.refresh_costs(instance);
            SolveResult {
                solution: Some(solution),
                status: if exhausted {
                    SolveStatus::BudgetExhausted
                } else {
                    SolveStatus::Optimal
                },
                best_objective: value,
                lower_bound: value.min(pruned_floor).min(open_floor),
                nodes_explored: nodes,
                elapsed,
            }
        }
    })
}
