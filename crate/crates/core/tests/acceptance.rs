mod common;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{random_assignment, random_feasible, small_instance, tiny_instance};
use mvsp::experiments::{self, ExperimentConfig, ResultRow};
use mvsp::formulation::io::SolutionDocument;
use mvsp::formulation::{check_feasibility, evaluate, inference_latency, objective, utilization_cost, Solution};
use mvsp::instance::{io as instance_io, random_instance};
use mvsp::linearize::{evaluate_milp, glover_linearize, lift, read_mps, write_mps};
use mvsp::oracle::{brute_force, brute_force_paranoid};
use mvsp::solver::{solve_exact, SolveBudget};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const OBJECTIVE_TOL: f64 = 1e-9;
const ORDER_TOL: f64 = 1e-9;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

fn workspace() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn load_config(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(workspace().join("configs").join(name)).expect("committed config parses")
}

fn run_config(name: &str) -> Vec<ResultRow> {
    experiments::run(&load_config(name)).expect("experiment runs").rows()
}

fn seed_rows(rows: &[ResultRow], seed: u64) -> Vec<&ResultRow> {
    rows.iter().filter(|r| r.seed == seed).collect()
}

fn seeds(rows: &[ResultRow]) -> Vec<u64> {
    let mut s: Vec<u64> = rows.iter().map(|r| r.seed).collect();
    s.dedup();
    s
}

fn non_increasing(values: &[f64]) -> bool {
    values.iter().all(|v| v.is_finite()) && values.windows(2).all(|w| w[1] <= w[0] + ORDER_TOL)
}

fn non_decreasing(values: &[f64]) -> bool {
    values.iter().all(|v| v.is_finite()) && values.windows(2).all(|w| w[1] >= w[0] - ORDER_TOL)
}

fn oracle_equivalence() -> Outcome {
    let budget = SolveBudget::nodes(u64::MAX);
    let mut mismatches = Vec::new();
    for seed in 0..50 {
        let inst = tiny_instance(seed);
        let exact = solve_exact(&inst, &budget).expect("valid budget");
        let oracle = brute_force(&inst).expect("tiny instance");
        let agree = match (&exact.solution, &oracle.solution) {
            (Some(a), Some(b)) => {
                (exact.best_objective - oracle.best_objective).abs() <= OBJECTIVE_TOL
                    && check_feasibility(&inst, a).is_feasible()
                    && check_feasibility(&inst, b).is_feasible()
            }
            (None, None) => exact.status == oracle.status,
            _ => false,
        };
        if !agree {
            mismatches.push(seed);
        }
    }
    Outcome::new(mismatches.is_empty(), format!("50 instances, mismatching seeds {mismatches:?}"))
}

fn linearization_fidelity() -> Outcome {
    let (mut points, mut worst, mut infeasible, mut undetected) = (0, 0.0f64, 0, 0);
    for seed in 60..70 {
        let inst = small_instance(seed);
        let model = glover_linearize(&inst);
        let products: Vec<usize> = (0..model.n_variables())
            .filter(|&c| model.variables[c].name.starts_with("w_"))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for k in 0..10 {
            let sol = random_feasible(&inst, seed * 100 + k).expect("instance admits a feasible solution");
            let mut values = lift(&inst, &model, &sol);
            let eval = evaluate_milp(&model, &values);
            points += 1;
            worst = worst.max((eval.objective - objective(&inst, &sol)).abs());
            if !eval.is_feasible() {
                infeasible += 1;
            }
            let w = products[rng.random_range(0..products.len())];
            values[w] += if rng.random_bool(0.5) { 0.5 } else { -0.5 };
            let corrupted = evaluate_milp(&model, &values);
            if !corrupted.violations.iter().any(|v| v.starts_with('g') || v.starts_with("bound:w_")) {
                undetected += 1;
            }
        }
    }
    Outcome::new(
        worst <= OBJECTIVE_TOL && infeasible == 0 && undetected == 0,
        format!("{points} points, max objective gap {worst:.1e}, {infeasible} infeasible lifts, {undetected} undetected corruptions"),
    )
}

fn paranoid_lemma() -> Outcome {
    let (mut improving, mut points, mut disagree) = (0, 0, 0);
    for seed in 0..20 {
        let inst = tiny_instance(seed);
        let report = brute_force_paranoid(&inst).expect("tiny instance");
        let plain = brute_force(&inst).expect("tiny instance");
        improving += report.improvements;
        points += report.points;
        if (report.result.best_objective - plain.best_objective).abs() > OBJECTIVE_TOL
            && !(report.result.best_objective.is_infinite() && plain.best_objective.is_infinite())
        {
            disagree += 1;
        }
    }
    Outcome::new(
        improving == 0 && disagree == 0,
        format!("20 instances, {points} (x, n) points, {improving} improvements over minimal n"),
    )
}

fn colocation_claim() -> Outcome {
    let rows = run_config("colocation.toml");
    let mut parts = Vec::new();
    let mut pass = true;
    let mut plateau = 0;
    for (class, lo, hi) in [("low", 0.15, 0.50), ("high", 0.05, 0.40)] {
        let mut gains = Vec::new();
        let mut monotone = 0;
        let seeds = seeds(&rows);
        for &seed in &seeds {
            let mut r: Vec<&ResultRow> = seed_rows(&rows, seed).into_iter().filter(|r| r.load_class == class).collect();
            r.sort_by_key(|r| r.max_replicas);
            let latency: Vec<f64> = r.iter().map(|r| r.latency).collect();
            let (first, last) = (r.first().expect("K = 1 row"), r.last().expect("K = 4 row"));
            assert_eq!((first.max_replicas, last.max_replicas), (1, 4));
            gains.push((first.latency - last.latency) / first.latency);
            if non_increasing(&latency) {
                monotone += 1;
            }
            if latency[latency.len() - 1] >= latency[latency.len() - 2] - ORDER_TOL {
                plateau += 1;
            }
        }
        let mean = gains.iter().sum::<f64>() / gains.len() as f64;
        pass &= mean >= lo && mean <= hi && monotone == seeds.len();
        parts.push(format!("{class} load gain {mean:.3} in [{lo}, {hi}], monotone {monotone}/{}", seeds.len()));
    }
    parts.push(format!("L(4) = L(3) on {plateau}/{} curves (reported only)", rows.len() / 4));
    let flagged = rows.iter().filter(|r| r.origin != experiments::Origin::Search).count();
    parts.push(format!("{flagged}/{} rows not from the search", rows.len()));
    Outcome::new(pass, parts.join("; "))
}

fn load_sweep() -> Outcome {
    let rows = run_config("load.toml");
    let seeds = seeds(&rows);
    let (mut cost, mut util, mut rises, mut knee) = (0, 0, 0, 0);
    for &seed in &seeds {
        let mut r = seed_rows(&rows, seed);
        r.sort_by(|a, b| a.load_mean.total_cmp(&b.load_mean));
        if non_decreasing(&r.iter().map(|r| r.cost).collect::<Vec<_>>()) {
            cost += 1;
        }
        if non_decreasing(&r.iter().map(|r| r.utilization).collect::<Vec<_>>()) {
            util += 1;
        }
        let at = |load: f64| r.iter().find(|x| x.load_mean == load).expect("grid load").latency;
        if at(33.0) > at(5.5) {
            rises += 1;
        }
        if at(33.0) - at(22.0) > at(22.0) - at(5.5) {
            knee += 1;
        }
    }
    let n = seeds.len();
    Outcome::new(
        cost == n && util == n && rises == n && knee >= 7,
        format!("cost monotone {cost}/{n}, utilization monotone {util}/{n}, L(33) > L(5.5) {rises}/{n}, knee {knee}/{n} (need 7)"),
    )
}

fn alpha_sweep() -> Outcome {
    let rows = run_config("alpha.toml");
    let seeds = seeds(&rows);
    let (mut latency, mut cost, mut flat) = (0, 0, 0);
    for &seed in &seeds {
        let mut r = seed_rows(&rows, seed);
        r.sort_by(|a, b| a.objective_weight.total_cmp(&b.objective_weight));
        if non_increasing(&r.iter().map(|r| r.latency).collect::<Vec<_>>()) {
            latency += 1;
        }
        if non_decreasing(&r.iter().map(|r| r.cost).collect::<Vec<_>>()) {
            cost += 1;
        }
        let at = |w: f64| r.iter().find(|x| x.objective_weight == w).expect("grid weight").latency;
        if (at(0.3) - at(0.2)).abs() <= 0.05 * at(0.2) {
            flat += 1;
        }
    }
    let n = seeds.len();
    Outcome::new(
        latency == n && cost == n && flat == n,
        format!("L non-increasing {latency}/{n}, C non-decreasing {cost}/{n}, flat tail {flat}/{n}"),
    )
}

fn property_suites() -> Outcome {
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cost_inst = tiny_instance(0);
    let cost = |u: f64| utilization_cost(&cost_inst, u);
    for _ in 0..1000 {
        let (a, b, t): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
        if cost(t * a + (1.0 - t) * b) > t * cost(a) + (1.0 - t) * cost(b) + 1e-12 {
            failures.push(format!("convexity at ({a}, {b}, {t})"));
        }
        let u: f64 = rng.random();
        if cost(u) > cost_inst.params().cost.phi(u) + 1e-12 {
            failures.push(format!("overshoot at {u}"));
        }
    }
    for draw in 0..1000u64 {
        let inst = small_instance(draw % 72);
        let mut before = Solution::empty(&inst);
        let table: Vec<u32> = (0..inst.n_edge() * inst.n_slots()).map(|_| rng.random_range(0..4)).collect();
        before.set_replica_table(table.clone());
        let mut bumped = table;
        let k = rng.random_range(0..bumped.len());
        bumped[k] += 1;
        let mut after = before.clone();
        after.set_replica_table(bumped);
        let monotone = (0..inst.n_edge()).all(|e| {
            (0..inst.n_models()).all(|m| {
                (0..inst.n_variants(m))
                    .all(|v| inference_latency(&inst, &after, e, m, v) >= inference_latency(&inst, &before, e, m, v))
            })
        });
        if !monotone {
            failures.push(format!("latency monotonicity on draw {draw}"));
        }
    }
    for seed in 0..72 {
        let inst = small_instance(seed);
        let config = mvsp::instance::GeneratorConfig::new(
            mvsp::instance::Shape::new(inst.n_iot(), inst.n_edge(), inst.n_models(), inst.n_variants(0)),
            seed,
        );
        if random_instance(&config).expect("valid") != inst {
            failures.push(format!("generator determinism on seed {seed}"));
        }
        let text = instance_io::to_toml(&inst);
        if instance_io::from_toml(&text).ok().as_ref() != Some(&inst) {
            failures.push(format!("instance round trip on seed {seed}"));
        }
        let doc = SolutionDocument::audited(&inst, random_assignment(&inst, &mut rng));
        let sol_text = doc.to_toml(&inst);
        match SolutionDocument::from_toml(&inst, &sol_text) {
            Ok(back) if back.solution.same_decisions(&doc.solution) && back.violations == doc.violations => {}
            _ => failures.push(format!("solution round trip on seed {seed}")),
        }
        let model = glover_linearize(&inst);
        if read_mps(&write_mps(&model)).ok().as_ref() != Some(&model) {
            failures.push(format!("MPS round trip on seed {seed}"));
        }
    }
    Outcome::new(
        failures.is_empty(),
        if failures.is_empty() {
            "1000 draws per invariant, 72 round trips per format".to_string()
        } else {
            failures.join(", ")
        },
    )
}

fn golden_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/table3.csv")
}

fn table3_golden() -> Outcome {
    let config = load_config("table3.toml");
    let output = experiments::run(&config).expect("experiment runs");
    let mut drift = Vec::new();
    for point in &output.points {
        let Some(sol) = &point.solution else { continue };
        let inst = experiments::point_instance(&config, point.index).expect("grid point instance");
        let report = check_feasibility(&inst, sol);
        let e = evaluate(&inst, sol);
        if !report.is_feasible() || (e.cost - point.row.cost).abs() > OBJECTIVE_TOL || (e.latency - point.row.latency).abs() > OBJECTIVE_TOL {
            drift.push(format!("{} {}: emitted solution does not re-validate", point.row.problem, point.row.load_class));
        }
    }
    let rows = output.rows();
    let path = golden_path();
    if std::env::var_os("MVSP_UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, experiments::rows_to_csv(&rows).expect("rows serialize")).expect("golden file is writable");
    }
    let text = match std::fs::read_to_string(&path) {
        Ok(text) => text,
        Err(e) => return Outcome::new(false, format!("cannot read {}: {e}", path.display())),
    };
    let golden = experiments::rows_from_csv(&text).expect("golden file parses");
    if golden.len() != rows.len() {
        drift.push(format!("{} rows, golden has {}", rows.len(), golden.len()));
    }
    for (got, want) in rows.iter().zip(&golden) {
        let same_point = (got.problem.as_str(), got.seed, got.load_class.as_str()) == (want.problem.as_str(), want.seed, want.load_class.as_str());
        if !same_point || (got.cost - want.cost).abs() > OBJECTIVE_TOL || (got.latency - want.latency).abs() > OBJECTIVE_TOL {
            drift.push(format!(
                "{} {}: (C, L) = ({}, {}), golden ({}, {})",
                got.problem, got.load_class, got.cost, got.latency, want.cost, want.latency
            ));
        }
    }
    Outcome::new(drift.is_empty(), format!("{} rows; {}", rows.len(), if drift.is_empty() { "no drift".into() } else { drift.join("; ") }))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, Duration); 8] = [
        ("oracle equivalence", oracle_equivalence, Duration::from_secs(10)),
        ("linearization fidelity", linearization_fidelity, Duration::from_secs(5)),
        ("minimal replica counts", paranoid_lemma, Duration::from_secs(30)),
        ("co-location latency gain", colocation_claim, Duration::from_secs(300)),
        ("load sweep direction", load_sweep, Duration::from_secs(300)),
        ("weight sweep trade-off", alpha_sweep, Duration::from_secs(300)),
        ("property suites", property_suites, Duration::from_secs(10)),
        ("reference table regression", table3_golden, Duration::from_secs(300)),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (k, (name, check, limit)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let pass = outcome.pass && elapsed <= *limit;
        failed += usize::from(!pass);
        println!(
            "criterion {}: {} {name}: {} ({:.1} s of {} s)",
            k + 1,
            if pass { "PASS" } else { "FAIL" },
            outcome.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
