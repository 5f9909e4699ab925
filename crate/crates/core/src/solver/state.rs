use crate::formulation::{utilization_cost, Assignment, Solution, FEASIBILITY_TOL};
use crate::instance::{Instance, ReplicaCap};

use super::replicas_for;

fn within(lhs: f64, rhs: f64) -> bool {
    lhs - rhs <= FEASIBILITY_TOL * rhs.abs().max(1.0)
}

/// An `(edge, slot)` destination for one demanded pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Choice {
    pub edge: usize,
    pub slot: usize,
}

#[derive(Debug, Clone)]
pub struct PairOptions {
    pub iot: usize,
    pub model: usize,
    pub rate: f64,
    pub latency_req: f64,
    /// Destinations that are not ruled out on their own, cheapest first.
    pub options: Vec<Choice>,
}

/// Branching order over demanded pairs and their candidate destinations.
///
/// Pairs come in descending rate, ties by `(iot, model)`. Options of a pair
/// are sorted by communication plus exclusive latency, ties by
/// `(edge, variant)`. Options that are unreachable, that miss the latency
/// requirement even without interference, or whose variant does not fit in
/// the node's memory are dropped.
#[derive(Debug, Clone)]
pub struct SearchOrder {
    pub pairs: Vec<PairOptions>,
    memory_req: Vec<f64>,
    max_load: Vec<f64>,
    interference: Vec<f64>,
}

impl SearchOrder {
    pub fn new(instance: &Instance) -> Self {
        let mut pairs: Vec<PairOptions> = instance
            .demanded_pairs()
            .iter()
            .map(|p| {
                let mut scored = Vec::new();
                for e in 0..instance.n_edge() {
                    let comm = instance.comm_latency(p.iot, e);
                    if !comm.is_finite() {
                        continue;
                    }
                    for s in instance.model_slots(p.model) {
                        let lat = comm + instance.base_latency(e, s);
                        if !within(lat, p.latency_req) || !within(instance.memory_req(s), instance.capacity(e)) {
                            continue;
                        }
                        scored.push((lat, Choice { edge: e, slot: s }));
                    }
                }
                scored.sort_by(|a, b| {
                    a.0.total_cmp(&b.0)
                        .then(a.1.edge.cmp(&b.1.edge))
                        .then(a.1.slot.cmp(&b.1.slot))
                });
                PairOptions {
                    iot: p.iot,
                    model: p.model,
                    rate: p.rate,
                    latency_req: p.latency_req,
                    options: scored.into_iter().map(|(_, c)| c).collect(),
                }
            })
            .collect();
        pairs.sort_by(|a, b| {
            b.rate
                .total_cmp(&a.rate)
                .then(a.iot.cmp(&b.iot))
                .then(a.model.cmp(&b.model))
        });
        let slots = 0..instance.n_slots();
        SearchOrder {
            pairs,
            memory_req: slots.clone().map(|s| instance.memory_req(s)).collect(),
            max_load: slots.clone().map(|s| instance.max_load(s)).collect(),
            interference: slots.map(|s| instance.interference_coeff(s)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn option_index(&self, pair: usize, choice: Choice) -> Option<usize> {
        self.pairs[pair].options.iter().position(|&c| c == choice)
    }
}

/// Assignment of a subset of the demanded pairs, with derived replica counts
/// and per-node latency and cost kept up to date.
#[derive(Debug, Clone)]
pub struct PartialState<'a> {
    instance: &'a Instance,
    order: &'a SearchOrder,
    n_slots: usize,
    choice: Vec<Option<usize>>,
    n_fixed: usize,
    load: Vec<f64>,
    assigned: Vec<usize>,
    replicas: Vec<u32>,
    total_replicas: Vec<u32>,
    memory: Vec<f64>,
    interference: Vec<f64>,
    edge_latency: Vec<f64>,
    node_cost: Vec<f64>,
    edge_ok: Vec<bool>,
    bad_edges: usize,
}

impl<'a> PartialState<'a> {
    pub fn new(instance: &'a Instance, order: &'a SearchOrder) -> Self {
        let n_edge = instance.n_edge();
        let n_slots = instance.n_slots();
        PartialState {
            instance,
            order,
            n_slots,
            choice: vec![None; order.len()],
            n_fixed: 0,
            load: vec![0.0; n_edge * n_slots],
            assigned: vec![0; n_edge * n_slots],
            replicas: vec![0; n_edge * n_slots],
            total_replicas: vec![0; n_edge],
            memory: vec![0.0; n_edge],
            interference: vec![0.0; n_edge],
            edge_latency: vec![0.0; n_edge],
            node_cost: vec![0.0; n_edge],
            edge_ok: vec![true; n_edge],
            bad_edges: 0,
        }
    }

    /// State holding the assignments of `solution`, or `None` when the
    /// solution does not serve every demanded pair exactly once through an
    /// admissible option.
    pub fn from_solution(instance: &'a Instance, order: &'a SearchOrder, solution: &Solution) -> Option<Self> {
        let mut state = PartialState::new(instance, order);
        if solution.n_assignments() != order.len() {
            return None;
        }
        let mut position = std::collections::HashMap::new();
        for (k, p) in order.pairs.iter().enumerate() {
            position.insert((p.iot, p.model), k);
        }
        for a in solution.assignments() {
            let &k = position.get(&(a.iot, a.model))?;
            if state.choice[k].is_some() {
                return None;
            }
            let o = order.option_index(
                k,
                Choice {
                    edge: a.edge,
                    slot: instance.slot(a.model, a.variant),
                },
            )?;
            state.set(k, Some(o));
        }
        Some(state)
    }

    pub fn order(&self) -> &'a SearchOrder {
        self.order
    }

    pub fn instance(&self) -> &'a Instance {
        self.instance
    }

    /// Memory in use over all edge nodes.
    pub fn memory_used(&self) -> f64 {
        self.memory.iter().sum()
    }

    pub fn choice(&self, pair: usize) -> Option<usize> {
        self.choice[pair]
    }

    pub fn choices(&self) -> &[Option<usize>] {
        &self.choice
    }

    pub fn n_fixed(&self) -> usize {
        self.n_fixed
    }

    pub fn is_complete(&self) -> bool {
        self.n_fixed == self.choice.len()
    }

    /// No replica cap, memory or latency requirement is broken by the fixed
    /// assignments. Adding assignments can only keep it broken.
    pub fn is_consistent(&self) -> bool {
        self.bad_edges == 0
    }

    /// Assigns `pair` to option `option`, or unassigns it for `None`.
    pub fn set(&mut self, pair: usize, option: Option<usize>) {
        let before = self.choice[pair].map(|o| self.order.pairs[pair].options[o].edge);
        match (self.choice[pair].is_some(), option.is_some()) {
            (false, true) => self.n_fixed += 1,
            (true, false) => self.n_fixed -= 1,
            _ => {}
        }
        self.choice[pair] = option;
        let after = option.map(|o| self.order.pairs[pair].options[o].edge);
        if let Some(e) = before {
            self.refresh_edge(e);
        }
        if let Some(e) = after {
            if Some(e) != before {
                self.refresh_edge(e);
            }
        }
    }

    #[inline]
    fn latency_with(&self, edge: usize, slot: usize, own: u32) -> f64 {
        let base = self.instance.base_latency(edge, slot);
        let a = self.order.interference[slot];
        let n = self.replicas[edge * self.n_slots + slot];
        base + a * base * own.saturating_sub(1) as f64 + (self.interference[edge] - a * base * n as f64)
    }

    /// Inference latency of `slot` on `edge` under the current replica counts.
    pub fn inference_latency(&self, edge: usize, slot: usize) -> f64 {
        self.latency_with(edge, slot, self.replicas[edge * self.n_slots + slot])
    }

    fn refresh_edge(&mut self, e: usize) {
        let inst = self.instance;
        let row = e * self.n_slots..(e + 1) * self.n_slots;
        self.load[row.clone()].iter_mut().for_each(|l| *l = 0.0);
        self.assigned[row.clone()].iter_mut().for_each(|c| *c = 0);
        let mut comm = 0.0;
        for (k, pair) in self.order.pairs.iter().enumerate() {
            if let Some(o) = self.choice[k] {
                let c = pair.options[o];
                if c.edge == e {
                    self.load[e * self.n_slots + c.slot] += pair.rate;
                    self.assigned[e * self.n_slots + c.slot] += 1;
                    comm += pair.rate * inst.comm_latency(pair.iot, e);
                }
            }
        }
        let mut memory = 0.0;
        let mut interference = 0.0;
        let mut total = 0u32;
        for s in 0..self.n_slots {
            let k = e * self.n_slots + s;
            let n = replicas_for(self.load[k], self.assigned[k], self.order.max_load[s]);
            self.replicas[k] = n;
            memory += self.order.memory_req[s] * n as f64;
            interference += self.order.interference[s] * inst.base_latency(e, s) * n as f64;
            total += n;
        }
        self.memory[e] = memory;
        self.interference[e] = interference;
        self.total_replicas[e] = total;

        let cap = inst.max_replicas();
        let mut ok = within(memory, inst.capacity(e))
            && match inst.replica_cap() {
                ReplicaCap::PerVariant => self.replicas[row.clone()].iter().all(|&n| n <= cap),
                ReplicaCap::Aggregate => total <= cap,
            };
        let mut latency = comm;
        for s in 0..self.n_slots {
            let l = self.load[e * self.n_slots + s];
            if l > 0.0 {
                latency += l * self.inference_latency(e, s);
            }
        }
        if ok {
            for (k, pair) in self.order.pairs.iter().enumerate() {
                if let Some(o) = self.choice[k] {
                    let c = pair.options[o];
                    if c.edge == e
                        && !within(inst.comm_latency(pair.iot, e) + self.inference_latency(e, c.slot), pair.latency_req)
                    {
                        ok = false;
                        break;
                    }
                }
            }
        }
        self.edge_latency[e] = latency;
        self.node_cost[e] = utilization_cost(inst, memory / inst.capacity(e));
        if ok != self.edge_ok[e] {
            self.edge_ok[e] = ok;
            if ok {
                self.bad_edges -= 1;
            } else {
                self.bad_edges += 1;
            }
        }
    }

    fn blend(&self, latency_sum: f64) -> f64 {
        let inst = self.instance;
        let w = inst.objective_weight();
        let total = inst.total_demand();
        let latency = if total == 0.0 { 0.0 } else { latency_sum / total };
        let cost = self.node_cost.iter().sum::<f64>() / inst.n_edge() as f64;
        w * latency + (1.0 - w) * cost
    }

    /// Objective counting only the fixed assignments; equals the full
    /// objective once the state is complete.
    pub fn objective(&self) -> f64 {
        self.blend(self.edge_latency.iter().sum())
    }

    /// Lower bound on the objective of every consistent completion, or
    /// `None` when no completion can be feasible.
    ///
    /// Replica counts only grow as assignments are added, so the current
    /// per-node latencies and costs are valid lower bounds. Each unfixed
    /// pair adds its cheapest option evaluated against the current replica
    /// counts, skipping options that would already break a limit.
    pub fn bound(&self) -> Option<f64> {
        if !self.is_consistent() {
            return None;
        }
        let inst = self.instance;
        let cap = inst.max_replicas();
        let mut latency = self.edge_latency.iter().sum::<f64>();
        for (k, pair) in self.order.pairs.iter().enumerate() {
            if self.choice[k].is_some() {
                continue;
            }
            let mut best = f64::INFINITY;
            for c in &pair.options {
                let idx = c.edge * self.n_slots + c.slot;
                let n = self.replicas[idx];
                let needed = replicas_for(self.load[idx] + pair.rate, self.assigned[idx] + 1, self.order.max_load[c.slot]);
                let extra = needed - n;
                let capped = match inst.replica_cap() {
                    ReplicaCap::PerVariant => needed > cap,
                    ReplicaCap::Aggregate => self.total_replicas[c.edge] + extra > cap,
                };
                if capped
                    || !within(
                        self.memory[c.edge] + self.order.memory_req[c.slot] * extra as f64,
                        inst.capacity(c.edge),
                    )
                {
                    continue;
                }
                let rtt = inst.comm_latency(pair.iot, c.edge) + self.latency_with(c.edge, c.slot, needed);
                if !within(rtt, pair.latency_req) {
                    continue;
                }
                best = best.min(rtt);
            }
            if best == f64::INFINITY {
                return None;
            }
            latency += pair.rate * best;
        }
        Some(self.blend(latency))
    }

    /// Solution with the fixed assignments and derived replica counts.
    pub fn to_solution(&self) -> Solution {
        let inst = self.instance;
        let mut solution = Solution::empty(inst);
        for (k, pair) in self.order.pairs.iter().enumerate() {
            if let Some(o) = self.choice[k] {
                let c = pair.options[o];
                solution
                    .assign(inst, Assignment::new(pair.iot, c.edge, pair.model, inst.slot_variant(c.slot)))
                    .expect("options are in range");
            }
        }
        solution.set_replica_table(self.replicas.clone());
        solution
    }
}
