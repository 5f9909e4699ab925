//! Seeded experiment grids and CSV output.
//!
//! An experiment runs every `(problem, seed)` group over a grid of load
//! levels, co-location caps and objective weights. Within a group, points
//! are solved in a fixed order and every solution found is kept in a pool.
//! Each point starts branch-and-bound from the best of the pool (replica
//! counts re-derived for the point) or the heuristic, whichever is better.
//! After the last point, every point takes the best pool entry for its own
//! objective. Groups run in parallel; rows are written in grid order so the
//! CSV is identical across runs and thread counts. Run times go to a
//! separate `*.timing.csv` file.

mod config;

use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{ExperimentConfig, ExperimentKind, LoadLevel, Problem, SolverSettings};

use crate::error::{Error, Result};
use crate::formulation::{check_feasibility, evaluate, objective, Solution};
use crate::instance::{random_instance, CatalogTemplate, GeneratorConfig, Instance, Params};
use crate::solver::{improve, solve_exact_from, solve_heuristic, with_derived_replicas, SolveStatus, OBJECTIVE_TOL};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "MVSP_THREADS";

/// Where the reported solution of a grid point came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    /// Found by the branch-and-bound search at this point.
    Search,
    /// Greedy plus local search at this point; the search did not improve it.
    Heuristic,
    /// Solution of another grid point of the same group, possibly polished
    /// by local search.
    Pool,
    /// No feasible solution.
    None,
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub problem: String,
    pub seed: u64,
    pub load_class: String,
    pub load_mean: f64,
    pub max_replicas: u32,
    pub objective_weight: f64,
    pub latency: f64,
    pub cost: f64,
    pub objective: f64,
    /// Mean memory utilization over edge nodes.
    pub utilization: f64,
    pub status: SolveStatus,
    pub origin: Origin,
    pub nodes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub problem: String,
    pub seed: u64,
    pub load_mean: f64,
    pub max_replicas: u32,
    pub objective_weight: f64,
    pub elapsed_secs: f64,
}

/// Grid point coordinates as positions in the configuration lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct PointIndex {
    pub problem: usize,
    pub seed: usize,
    pub load: usize,
    pub cap: usize,
    pub weight: usize,
}

#[derive(Debug, Clone)]
pub struct PointResult {
    pub index: PointIndex,
    pub row: ResultRow,
    pub solution: Option<Solution>,
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub points: Vec<PointResult>,
}

impl ExperimentOutput {
    pub fn rows(&self) -> Vec<ResultRow> {
        self.points.iter().map(|p| p.row.clone()).collect()
    }

    pub fn timings(&self) -> Vec<TimingRow> {
        self.points
            .iter()
            .map(|p| TimingRow {
                problem: p.row.problem.clone(),
                seed: p.row.seed,
                load_mean: p.row.load_mean,
                max_replicas: p.row.max_replicas,
                objective_weight: p.row.objective_weight,
                elapsed_secs: p.elapsed.as_secs_f64(),
            })
            .collect()
    }

    /// Writes the result CSV to `path` and the timing CSV next to it.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        std::fs::write(path, rows_to_csv(&self.rows())?).map_err(|e| Error::io(path, e))?;
        let timing = timing_path(path);
        let mut writer = csv::Writer::from_path(&timing)?;
        for row in self.timings() {
            writer.serialize(row)?;
        }
        writer.flush().map_err(|e| Error::io(&timing, e))?;
        Ok(())
    }
}

/// `results/x.csv` becomes `results/x.timing.csv`.
pub fn timing_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.timing.csv"))
}

pub fn rows_to_csv(rows: &[ResultRow]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row)?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Integrity(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn rows_from_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    reader.deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Instance of one grid point.
pub fn point_instance(config: &ExperimentConfig, index: PointIndex) -> Result<Instance> {
    instance_at(config, &config.catalog_template()?, index)
}

fn instance_at(config: &ExperimentConfig, catalog: &CatalogTemplate, index: PointIndex) -> Result<Instance> {
    let problem = &config.problems[index.problem];
    let mut generator = GeneratorConfig::new(problem.shape(), config.seeds[index.seed]);
    generator.load_mean = config.loads[index.load].mean;
    generator.link_delay_mean = config.link_delay_mean;
    generator.capacity = config.capacity;
    generator.interference_coeff = config.interference_coeff;
    generator.params = Params {
        objective_weight: config.objective_weights[index.weight],
        max_replicas: config.max_replicas[index.cap],
        ..Params::default()
    };
    generator.catalog = catalog.clone();
    random_instance(&generator)
}

/// Order in which the points of one group are solved. Loads are visited
/// from high to low in the load sweep, because an assignment that is
/// feasible at a higher load stays feasible at a lower one; caps always go
/// up for the same reason.
fn group_order(config: &ExperimentConfig, problem: usize, seed: usize) -> Vec<PointIndex> {
    let mut loads: Vec<usize> = (0..config.loads.len()).collect();
    if config.experiment == ExperimentKind::LoadSweep {
        loads.sort_by(|&a, &b| config.loads[b].mean.total_cmp(&config.loads[a].mean));
    }
    let mut caps: Vec<usize> = (0..config.max_replicas.len()).collect();
    caps.sort_by_key(|&k| config.max_replicas[k]);
    let mut out = Vec::new();
    for &load in &loads {
        for &cap in &caps {
            for weight in 0..config.objective_weights.len() {
                out.push(PointIndex {
                    problem,
                    seed,
                    load,
                    cap,
                    weight,
                });
            }
        }
    }
    out
}

struct Working {
    index: PointIndex,
    instance: Instance,
    best: Option<(f64, Solution, Origin)>,
    status: SolveStatus,
    nodes: u64,
    elapsed: Duration,
}

/// Best pool entry for `instance` after re-deriving replica counts.
fn best_of_pool(instance: &Instance, pool: &[Solution]) -> Option<(f64, Solution)> {
    let mut best: Option<(f64, Solution)> = None;
    for candidate in pool {
        let candidate = with_derived_replicas(instance, candidate.clone());
        if !check_feasibility(instance, &candidate).is_feasible() {
            continue;
        }
        let value = objective(instance, &candidate);
        if best.as_ref().is_none_or(|(b, _)| value < b - OBJECTIVE_TOL) {
            best = Some((value, candidate));
        }
    }
    best
}

fn run_group(config: &ExperimentConfig, catalog: &CatalogTemplate, problem: usize, seed: usize) -> Result<Vec<PointResult>> {
    let budget = config.solver.budget();
    let mut pool: Vec<Solution> = Vec::new();
    let mut work = Vec::new();
    for index in group_order(config, problem, seed) {
        let instance = instance_at(config, catalog, index)?;
        let start = std::time::Instant::now();

        let mut warm: Option<(f64, Solution, Origin)> = best_of_pool(&instance, &pool).map(|(_, s)| {
            let polished = improve(&instance, &s).unwrap_or(s);
            (objective(&instance, &polished), polished, Origin::Pool)
        });
        let heuristic = solve_heuristic(&instance);
        if let Some(s) = heuristic.solution {
            if warm.as_ref().is_none_or(|(v, _, _)| heuristic.best_objective < v - OBJECTIVE_TOL) {
                warm = Some((heuristic.best_objective, s, Origin::Heuristic));
            }
        }
        let result = solve_exact_from(&instance, &budget, warm.as_ref().map(|(_, s, _)| s))?;
        let best = match (result.solution, warm) {
            (Some(s), Some((v, w, origin))) => {
                if result.best_objective < v - OBJECTIVE_TOL {
                    Some((result.best_objective, s, Origin::Search))
                } else {
                    Some((v, w, origin))
                }
            }
            (Some(s), None) => Some((result.best_objective, s, Origin::Search)),
            (None, warm) => warm,
        };
        if let Some((_, s, _)) = &best {
            if !pool.iter().any(|p| p.same_decisions(s)) {
                pool.push(s.clone());
            }
        }
        work.push(Working {
            index,
            instance,
            best,
            status: result.status,
            nodes: result.nodes_explored,
            elapsed: start.elapsed(),
        });
    }

    let mut out = Vec::with_capacity(work.len());
    for mut w in work {
        if let Some((v, s)) = best_of_pool(&w.instance, &pool) {
            if w.best.as_ref().is_none_or(|(b, _, _)| v < b - OBJECTIVE_TOL) {
                w.best = Some((v, s, Origin::Pool));
            }
        }
        out.push(finish_point(config, w));
    }
    Ok(out)
}

fn finish_point(config: &ExperimentConfig, w: Working) -> PointResult {
    let index = w.index;
    let level = &config.loads[index.load];
    let (latency, cost, objective, utilization, origin, solution) = match w.best {
        Some((_, mut s, origin)) => {
            s.refresh_costs(&w.instance);
            let e = evaluate(&w.instance, &s);
            (e.latency, e.cost, e.objective, e.mean_utilization(), origin, Some(s))
        }
        None => (f64::NAN, f64::NAN, f64::NAN, f64::NAN, Origin::None, None),
    };
    PointResult {
        index,
        row: ResultRow {
            problem: config.problems[index.problem].name.clone(),
            seed: config.seeds[index.seed],
            load_class: level.label.clone(),
            load_mean: level.mean,
            max_replicas: config.max_replicas[index.cap],
            objective_weight: config.objective_weights[index.weight],
            latency,
            cost,
            objective,
            utilization,
            status: w.status,
            origin,
            nodes: w.nodes,
        },
        solution,
        elapsed: w.elapsed,
    }
}

fn thread_cap() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::validation(THREADS_ENV, format!("expected a positive integer, got `{v}`"))),
        },
    }
}

/// Runs every group of `config`. Results are in grid order: problem, seed,
/// load, cap, weight, each in configuration order.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let catalog = config.catalog_template()?;
    let groups: Vec<(usize, usize)> = (0..config.problems.len())
        .flat_map(|p| (0..config.seeds.len()).map(move |s| (p, s)))
        .collect();
    let solve = || -> Result<Vec<Vec<PointResult>>> {
        groups
            .par_iter()
            .map(|&(p, s)| run_group(config, &catalog, p, s))
            .collect()
    };
    let results = match thread_cap()? {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::validation(THREADS_ENV, e.to_string()))?
            .install(solve)?,
        None => solve()?,
    };
    let mut points: Vec<PointResult> = results.into_iter().flatten().collect();
    points.sort_by_key(|p| p.index);
    Ok(ExperimentOutput { points })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig::from_toml(
            r#"
            experiment = "colocation_sweep"
            seeds = [3, 4]
            max_replicas = [1, 2]
            objective_weights = [0.1]
            capacity = 8.0
            output = "out.csv"
            loads = [{ label = "low", mean = 5.5 }, { label = "high", mean = 33.0 }]
            [[problems]]
            name = "T"
            iot_nodes = 3
            edge_nodes = 2
            models = 2
            variants = 3
            "#,
        )
        .unwrap()
    }

    #[test]
    fn rows_are_in_grid_order_and_consistent() {
        let config = tiny();
        let out = run(&config).unwrap();
        assert_eq!(out.points.len(), 2 * 2 * 2);
        let rows = out.rows();
        assert_eq!((rows[0].seed, rows[0].load_class.as_str(), rows[0].max_replicas), (3, "low", 1));
        assert_eq!((rows[1].seed, rows[1].load_class.as_str(), rows[1].max_replicas), (3, "low", 2));
        for p in &out.points {
            let inst = point_instance(&config, p.index).unwrap();
            let sol = p.solution.as_ref().unwrap();
            assert!(check_feasibility(&inst, sol).is_feasible());
            let e = evaluate(&inst, sol);
            assert!((e.latency - p.row.latency).abs() < 1e-9);
            assert!((e.cost - p.row.cost).abs() < 1e-9);
        }
    }

    #[test]
    fn csv_is_deterministic_and_parses_back() {
        let config = tiny();
        let a = rows_to_csv(&run(&config).unwrap().rows()).unwrap();
        let b = rows_to_csv(&run(&config).unwrap().rows()).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with(
            "problem,seed,load_class,load_mean,max_replicas,objective_weight,latency,cost,objective,utilization,status,origin,nodes\n"
        ));
        let rows = rows_from_csv(&a).unwrap();
        assert_eq!(rows_to_csv(&rows).unwrap(), a);
    }

    #[test]
    fn timing_file_name() {
        assert_eq!(timing_path(Path::new("r/load.csv")), PathBuf::from("r/load.timing.csv"));
    }
}
