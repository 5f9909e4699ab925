use std::collections::BTreeSet;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::state::{Choice, PartialState, SearchOrder};
use super::{SolveResult, SolveStatus};
use crate::formulation::{objective, Solution};
use crate::instance::Instance;

/// Improvements smaller than this are not taken.
const MIN_GAIN: f64 = 1e-12;
const MAX_ROUNDS: usize = 10_000;

/// Greedy construction followed by best-improvement local search, with the
/// restart order drawn from seed 0.
pub fn solve_heuristic(instance: &Instance) -> SolveResult {
    solve_heuristic_seeded(instance, 0)
}

/// Greedy construction in descending-rate order; on a dead end, one retry in
/// an order shuffled with `seed`, then one that packs memory as tightly as
/// possible. The result is improved by moving single pairs, swapping the
/// destinations of two pairs of one model, and moving all pairs of one
/// deployed variant at once.
pub fn solve_heuristic_seeded(instance: &Instance, seed: u64) -> SolveResult {
    let start = Instant::now();
    let order = SearchOrder::new(instance);
    let mut state = PartialState::new(instance, &order);
    let Some(root) = state.bound() else {
        return SolveResult::infeasible(0, start.elapsed());
    };
    let mut evaluations = 0u64;
    let mut sequence: Vec<usize> = (0..order.len()).collect();
    if !greedy(&mut state, &sequence, Greedy::Objective, &mut evaluations) {
        let natural = sequence.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        sequence.shuffle(&mut rng);
        state = PartialState::new(instance, &order);
        if !greedy(&mut state, &sequence, Greedy::Objective, &mut evaluations) {
            state = PartialState::new(instance, &order);
            if !greedy(&mut state, &natural, Greedy::Packing, &mut evaluations) {
                return SolveResult::infeasible(evaluations, start.elapsed());
            }
        }
    }
    local_search(&mut state, &mut evaluations);
    let mut solution = state.to_solution();
    solution.refresh_costs(instance);
    let value = objective(instance, &solution);
    SolveResult {
        solution: Some(solution),
        status: SolveStatus::Feasible,
        best_objective: value,
        lower_bound: root.min(value),
        nodes_explored: evaluations,
        elapsed: start.elapsed(),
    }
}

/// Local search from `solution`. Returns `None` when `solution` does not
/// correspond to a consistent assignment of every demanded pair.
pub fn improve(instance: &Instance, solution: &Solution) -> Option<Solution> {
    let order = SearchOrder::new(instance);
    let mut state = PartialState::from_solution(instance, &order, solution)?;
    if !state.is_consistent() {
        return None;
    }
    let mut evaluations = 0;
    local_search(&mut state, &mut evaluations);
    let mut out = state.to_solution();
    out.refresh_costs(instance);
    Some(out)
}

#[derive(Clone, Copy)]
enum Greedy {
    /// Lowest partial objective.
    Objective,
    /// Least memory in use, then lowest partial objective.
    Packing,
}

fn greedy(state: &mut PartialState<'_>, sequence: &[usize], rule: Greedy, evaluations: &mut u64) -> bool {
    let order = state.order();
    for &pair in sequence {
        let mut best: Option<((f64, f64), usize)> = None;
        for option in 0..order.pairs[pair].options.len() {
            state.set(pair, Some(option));
            *evaluations += 1;
            if state.is_consistent() {
                let value = state.objective();
                let key = match rule {
                    Greedy::Objective => (0.0, value),
                    Greedy::Packing => (state.memory_used(), value),
                };
                let better = best.is_none_or(|((m, b), _)| key.0 < m - MIN_GAIN || (key.0 <= m + MIN_GAIN && key.1 < b - MIN_GAIN));
                if better {
                    best = Some((key, option));
                }
            }
        }
        match best {
            Some((_, option)) => state.set(pair, Some(option)),
            None => return false,
        }
    }
    true
}

enum Step {
    Move(usize, usize),
    Swap(usize, usize, usize, usize),
    Relocate(Choice, Choice),
}

/// Pairs currently placed on `at`.
fn pairs_on(state: &PartialState<'_>, at: Choice) -> Vec<usize> {
    let order = state.order();
    (0..order.len())
        .filter(|&p| state.choice(p).map(|o| order.pairs[p].options[o]) == Some(at))
        .collect()
}

/// Moves every pair on `from` to `to`. Returns the previous options, or
/// `None` (with the state unchanged) when some pair cannot use `to`.
fn relocate(state: &mut PartialState<'_>, from: Choice, to: Choice) -> Option<Vec<(usize, usize)>> {
    let order = state.order();
    let pairs = pairs_on(state, from);
    let mut targets = Vec::with_capacity(pairs.len());
    for &p in &pairs {
        targets.push(order.option_index(p, to)?);
    }
    let mut previous = Vec::with_capacity(pairs.len());
    for (&p, &t) in pairs.iter().zip(&targets) {
        previous.push((p, state.choice(p).expect("placed pair")));
        state.set(p, Some(t));
    }
    Some(previous)
}

fn local_search(state: &mut PartialState<'_>, evaluations: &mut u64) {
    let order = state.order();
    for _ in 0..MAX_ROUNDS {
        let current = state.objective();
        let mut best_value = current - MIN_GAIN;
        let mut best_step = None;
        for pair in 0..order.len() {
            let original = state.choice(pair);
            for option in 0..order.pairs[pair].options.len() {
                if Some(option) == original {
                    continue;
                }
                state.set(pair, Some(option));
                *evaluations += 1;
                if state.is_consistent() {
                    let value = state.objective();
                    if value < best_value {
                        best_value = value;
                        best_step = Some(Step::Move(pair, option));
                    }
                }
            }
            state.set(pair, original);
        }
        for p in 0..order.len() {
            for q in p + 1..order.len() {
                if order.pairs[p].model != order.pairs[q].model {
                    continue;
                }
                let (Some(op), Some(oq)) = (state.choice(p), state.choice(q)) else {
                    continue;
                };
                let cp = order.pairs[p].options[op];
                let cq = order.pairs[q].options[oq];
                if cp == cq {
                    continue;
                }
                let (Some(np), Some(nq)) = (
                    order.pairs[p].options.iter().position(|&c| c == cq),
                    order.pairs[q].options.iter().position(|&c| c == cp),
                ) else {
                    continue;
                };
                state.set(p, Some(np));
                state.set(q, Some(nq));
                *evaluations += 1;
                if state.is_consistent() {
                    let value = state.objective();
                    if value < best_value {
                        best_value = value;
                        best_step = Some(Step::Swap(p, np, q, nq));
                    }
                }
                state.set(p, Some(op));
                state.set(q, Some(oq));
            }
        }
        let occupied: BTreeSet<Choice> = (0..order.len())
            .filter_map(|p| state.choice(p).map(|o| order.pairs[p].options[o]))
            .collect();
        let inst = state.instance();
        for &from in &occupied {
            let model = inst.slot_model(from.slot);
            for edge in 0..inst.n_edge() {
                for slot in inst.model_slots(model) {
                    let to = Choice { edge, slot };
                    if to == from {
                        continue;
                    }
                    let Some(previous) = relocate(state, from, to) else {
                        continue;
                    };
                    *evaluations += 1;
                    if state.is_consistent() {
                        let value = state.objective();
                        if value < best_value {
                            best_value = value;
                            best_step = Some(Step::Relocate(from, to));
                        }
                    }
                    for (p, o) in previous {
                        state.set(p, Some(o));
                    }
                }
            }
        }
        match best_step {
            Some(Step::Move(pair, option)) => state.set(pair, Some(option)),
            Some(Step::Relocate(from, to)) => {
                relocate(state, from, to).expect("relocation was evaluated");
            }
            Some(Step::Swap(p, np, q, nq)) => {
                state.set(p, Some(np));
                state.set(q, Some(nq));
            }
            None => return,
        }
    }
}
