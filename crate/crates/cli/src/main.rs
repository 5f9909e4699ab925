use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use mvsp::experiments::{self, ExperimentConfig};
use mvsp::formulation::io::SolutionDocument;
use mvsp::formulation::{evaluate, Violation};
use mvsp::instance::{self, random_instance, GeneratorConfig, Params, Shape};
use mvsp::linearize::{export_mps, glover_linearize, import_solution};
use mvsp::solver::{solve_exact, solve_heuristic_seeded};
use mvsp::{oracle, Error, FeasibilityReport, Instance, SolveBudget, SolveResult, SolveStatus};

// Output goes to stdout without panicking when the reader has gone away.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

const EXIT_INFEASIBLE: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_NO_INCUMBENT: u8 = 3;

#[derive(Parser)]
#[command(name = "mvsp", version, about = "Model-variant selection and placement on edge networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance and write a solution file.
    Solve(SolveArgs),
    /// Validate an instance file.
    Lint { instance: PathBuf },
    /// Write the linearized model of an instance as free-format MPS.
    Export {
        instance: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Map external solver values (`name value` pairs) back to a solution
    /// file with its feasibility report.
    Import {
        instance: PathBuf,
        values: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Evaluate a solution file against an instance.
    Check { instance: PathBuf, solution: PathBuf },
    /// Generate a seeded random instance.
    Generate(GenerateArgs),
    /// Run an experiment configuration and write its CSV files.
    Experiment {
        config: PathBuf,
        /// Overrides the output path of the configuration.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
#[group(id = "method", multiple = false)]
struct Method {
    /// Branch-and-bound (default).
    #[arg(long)]
    exact: bool,
    /// Greedy construction plus local search.
    #[arg(long)]
    heuristic: bool,
    /// Exhaustive enumeration; tiny instances only.
    #[arg(long)]
    oracle: bool,
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[command(flatten)]
    method: Method,
    /// Node budget of the exact search.
    #[arg(long, default_value_t = 10_000_000)]
    budget: u64,
    /// Time limit of the exact search in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Relative optimality gap at which the exact search stops.
    #[arg(long, default_value_t = 0.0)]
    gap: f64,
    /// Seed of the heuristic's restart order.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    iot: usize,
    #[arg(long)]
    edge: usize,
    #[arg(long)]
    models: usize,
    #[arg(long)]
    variants: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Mean request rate per (IoT node, model) pair.
    #[arg(long, default_value_t = 5.5)]
    load: f64,
    #[arg(long, default_value_t = 8.0)]
    capacity: f64,
    /// Co-location cap.
    #[arg(long, default_value_t = 2)]
    max_replicas: u32,
    /// Latency weight of the objective.
    #[arg(long, default_value_t = 0.1)]
    weight: f64,
    #[arg(short, long)]
    output: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(EXIT_INVALID)
        }
    }
}

fn run(command: Command) -> Result<u8, Error> {
    match command {
        Command::Solve(args) => solve(args),
        Command::Lint { instance } => {
            let inst = instance::io::load(&instance)?;
            say!(
                "ok: {} IoT nodes, {} edge nodes, {} models, {} demanded pairs",
                inst.n_iot(),
                inst.n_edge(),
                inst.n_models(),
                inst.demanded_pairs().len()
            );
            Ok(0)
        }
        Command::Export { instance, output } => {
            let inst = instance::io::load(&instance)?;
            let model = glover_linearize(&inst);
            export_mps(&model, &output)?;
            say!(
                "wrote {} ({} columns, {} rows)",
                output.display(),
                model.n_variables(),
                model.constraints.len()
            );
            Ok(0)
        }
        Command::Import {
            instance,
            values,
            output,
        } => {
            let inst = instance::io::load(&instance)?;
            let model = glover_linearize(&inst);
            let text = std::fs::read_to_string(&values).map_err(|e| io_error(&values, e))?;
            let imported = import_solution(&inst, &model, &text)?;
            SolutionDocument::audited(&inst, imported.solution.clone()).save(&inst, &output)?;
            report_solution(&inst, &imported.solution, &imported.report);
            Ok(if imported.report.is_feasible() { 0 } else { EXIT_INFEASIBLE })
        }
        Command::Check { instance, solution } => {
            let inst = instance::io::load(&instance)?;
            let doc = SolutionDocument::load(&inst, &solution)?;
            let report = mvsp::formulation::check_feasibility(&inst, &doc.solution);
            report_solution(&inst, &doc.solution, &report);
            Ok(if report.is_feasible() { 0 } else { EXIT_INFEASIBLE })
        }
        Command::Generate(args) => {
            let mut config = GeneratorConfig::new(Shape::new(args.iot, args.edge, args.models, args.variants), args.seed);
            config.load_mean = args.load;
            config.capacity = args.capacity;
            config.params = Params {
                objective_weight: args.weight,
                max_replicas: args.max_replicas,
                ..Params::default()
            };
            let inst = random_instance(&config)?;
            instance::io::save(&inst, &args.output)?;
            say!("wrote {}", args.output.display());
            Ok(0)
        }
        Command::Experiment { config, output } => {
            let mut config = ExperimentConfig::load(&config)?;
            if let Some(path) = output {
                config.output = path;
            }
            let out = experiments::run(&config)?;
            out.write(&config.output)?;
            say!(
                "wrote {} rows to {} and {}",
                out.points.len(),
                config.output.display(),
                experiments::timing_path(&config.output).display()
            );
            Ok(0)
        }
    }
}

fn io_error(path: &std::path::Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn solve(args: SolveArgs) -> Result<u8, Error> {
    let inst = instance::io::load(&args.instance)?;
    let result: SolveResult = if args.method.oracle {
        oracle::brute_force(&inst)?
    } else if args.method.heuristic {
        solve_heuristic_seeded(&inst, args.seed)
    } else {
        let budget = SolveBudget {
            max_nodes: Some(args.budget),
            time_limit: args.time_limit.map(Duration::from_secs_f64),
            gap: args.gap,
        };
        solve_exact(&inst, &budget)?
    };
    result.to_document(&inst).save(&inst, &args.output)?;
    say!(
        "status {}; objective {}; lower bound {}; {} nodes in {:.3} s",
        result.status.as_str(),
        result.best_objective,
        result.lower_bound,
        result.nodes_explored,
        result.elapsed.as_secs_f64()
    );
    if let Some(s) = &result.solution {
        let e = evaluate(&inst, s);
        say!("latency {} ms; cost {}", e.latency, e.cost);
    }
    Ok(match (result.status, &result.solution) {
        (SolveStatus::Infeasible, _) => EXIT_INFEASIBLE,
        (SolveStatus::BudgetExhausted, None) => EXIT_NO_INCUMBENT,
        _ => 0,
    })
}

fn describe(v: &Violation) -> String {
    let l = &v.location;
    let mut at = Vec::new();
    for (name, value) in [("iot", l.iot), ("edge", l.edge), ("model", l.model), ("variant", l.variant)] {
        if let Some(value) = value {
            at.push(format!("{name} {value}"));
        }
    }
    format!("{} at [{}] by {}", v.constraint.as_str(), at.join(", "), v.magnitude)
}

fn report_solution(inst: &Instance, solution: &mvsp::Solution, report: &FeasibilityReport) {
    let e = evaluate(inst, solution);
    say!("objective {}; latency {} ms; cost {}", e.objective, e.latency, e.cost);
    if report.is_feasible() {
        say!("feasible");
    } else {
        say!("{} violations", report.violations.len());
        for v in &report.violations {
            say!("  {}", describe(v));
        }
    }
}
