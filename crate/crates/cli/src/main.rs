//! `cbm`: condition-based maintenance planning for multi-component systems
//! sharing a setup cost.
//!
//! Subcommands cover the full pipeline: validating instance files, solving
//! the two-stage grouping problem exactly or heuristically, exact multi-stage
//! backward induction for small systems, Monte Carlo simulation of the
//! rolling-horizon policy, the experiment sweeps, LP export of the linearized
//! model, and the two bundled case studies.
//!
//! Exit codes: 0 success, 1 validation/input failure, 2 size-guard
//! violation, 3 I/O failure.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cbm_core::bench::{run_multistage_bench, run_two_stage_bench, BenchConfig};
use cbm_core::milp::{linearize, write_lp};
use cbm_core::{
    brute_force_two_stage, exact_multistage, heuristic_two_stage, simulate_rolling_horizon,
    solve_two_stage, standalone_decision, Action, Error, HeuristicConfig, MaintenancePlan,
    Severity, SystemInstance,
};

const WIND_INSTANCE: &str = include_str!("../data/wind.json");
const PIPELINE_INSTANCE: &str = include_str!("../data/pipeline.json");

#[derive(Parser)]
#[command(
    name = "cbm",
    version,
    about = "Condition-based maintenance planning for multi-component systems with shared setup costs"
)]
struct Cli {
    /// Print errors as JSON on stderr
    #[arg(long, global = true)]
    error_json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Args)]
struct SolverOptions {
    /// Cap the exact search at this subset cardinality and finish
    /// heuristically (omit for the exact solver)
    #[arg(long)]
    j_cap: Option<usize>,
    /// Candidate partitions sampled by the heuristic completion
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// RNG seed (env: CBM_SEED)
    #[arg(long, env = "CBM_SEED", default_value_t = 0)]
    seed: u64,
}

impl SolverOptions {
    fn heuristic_config(&self, fallback_cap: usize) -> HeuristicConfig {
        HeuristicConfig {
            max_cardinality: self.j_cap.unwrap_or(fallback_cap),
            samples: self.samples,
            seed: self.seed,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve the two-stage grouping problem
    Solve2 {
        /// Instance file (JSON)
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        solver: SolverOptions,
        /// Enumerate all partitions instead of the move-criterion search
        #[arg(long)]
        brute: bool,
        /// Include the search trace in JSON output
        #[arg(long)]
        trace: bool,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
        /// Write the result here instead of stdout
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Solve the multi-stage problem exactly (small systems only)
    Solvem {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Simulate the rolling-horizon policy by Monte Carlo
    Simulate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 1000)]
        replications: usize,
        #[command(flatten)]
        solver: SolverOptions,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Two-stage experiment sweep (solver timing and heuristic quality)
    Bench2 {
        /// Sweep configuration (JSON); defaults to the baseline regime
        #[arg(long)]
        config: Option<PathBuf>,
        /// Prefix for <prefix>_instances.csv, <prefix>_summary.csv,
        /// <prefix>_report.json
        #[arg(long)]
        output: PathBuf,
        /// Override the configured seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Multi-stage experiment sweep (exact value vs rolling horizon)
    Benchm {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Export the linearized two-stage model in CPLEX LP format
    ExportMilp {
        #[arg(long)]
        input: PathBuf,
        /// LP file path
        #[arg(long)]
        output: PathBuf,
    },
    /// Check an instance file and report violations and warnings
    Validate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Run a bundled case study and print its decision table
    Case {
        #[arg(value_enum)]
        which: CaseName,
        /// Override the corrective-maintenance cost of every component
        #[arg(long)]
        cm: Option<f64>,
        #[command(flatten)]
        solver: SolverOptions,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CaseName {
    Wind,
    Pipeline,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let code = match &err {
                Error::Guard(_) => 2u8,
                Error::Io(_) | Error::Json(_) => 3,
                _ => 1,
            };
            if cli.error_json {
                eprintln!(
                    "{}",
                    serde_json::json!({ "error": err.to_string(), "exit_code": code })
                );
            } else {
                eprintln!("error: {err}");
            }
            ExitCode::from(code)
        }
    }
}

fn emit(output: Option<&Path>, text: &str) -> cbm_core::Result<()> {
    match output {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(command: Command) -> cbm_core::Result<()> {
    match command {
        Command::Solve2 {
            input,
            solver,
            brute,
            trace,
            format,
            output,
        } => {
            let instance = SystemInstance::from_path(&input)?;
            let (partition, cost, search_trace) = if brute {
                let (p, c) = brute_force_two_stage(&instance)?;
                (p, c, None)
            } else if solver.j_cap.is_some() {
                let (p, c) =
                    heuristic_two_stage(&instance, &solver.heuristic_config(instance.len()))?;
                (p, c, None)
            } else {
                let (p, c, t) = solve_two_stage(&instance)?;
                (p, c, Some(t))
            };
            let text = match format {
                Format::Json => {
                    let mut doc = serde_json::json!({
                        "partition": partition,
                        "cost": cost,
                    });
                    if trace {
                        if let Some(t) = &search_trace {
                            doc["trace"] = serde_json::to_value(t)?;
                        }
                    }
                    format!("{}\n", serde_json::to_string_pretty(&doc)?)
                }
                _ => {
                    let mut text = String::new();
                    let ids = |set: Vec<usize>| {
                        set.iter()
                            .map(|i| (i + 1).to_string())
                            .collect::<Vec<_>>()
                            .join(", ")
                    };
                    let _ = writeln!(text, "two-stage cost: {cost}");
                    let _ = writeln!(text, "maintain (N1):  [{}]", ids(partition.n1().indices()));
                    let _ = writeln!(text, "do nothing (N0): [{}]", ids(partition.n0().indices()));
                    if trace {
                        if let Some(t) = &search_trace {
                            let _ = writeln!(
                                text,
                                "search: j_max {} over {} candidate sets, {} batches",
                                t.j_max,
                                t.sets_examined,
                                t.batches.len()
                            );
                        }
                    }
                    text
                }
            };
            emit(output.as_deref(), &text)
        }

        Command::Solvem {
            input,
            format,
            output,
        } => {
            let instance = SystemInstance::from_path(&input)?;
            let solution = exact_multistage(&instance)?;
            let first = solution.policy.decision_at(1, &instance.states());
            let text = match format {
                Format::Json => format!(
                    "{}\n",
                    serde_json::to_string_pretty(&serde_json::json!({
                        "value": solution.value,
                        "first_stage": first,
                        "policy": solution.policy,
                    }))?
                ),
                _ => {
                    let mut text = String::new();
                    let _ = writeln!(text, "multi-stage optimal value: {}", solution.value);
                    let maintained: Vec<String> = first
                        .maintain
                        .iter()
                        .enumerate()
                        .filter(|(_, &x)| x)
                        .map(|(i, _)| (i + 1).to_string())
                        .collect();
                    let _ = writeln!(
                        text,
                        "stage-1 decision: maintain [{}]",
                        maintained.join(", ")
                    );
                    text
                }
            };
            emit(output.as_deref(), &text)
        }

        Command::Simulate {
            input,
            replications,
            solver,
            format,
            output,
        } => {
            let instance = SystemInstance::from_path(&input)?;
            let config = solver.heuristic_config(instance.len());
            let summary = simulate_rolling_horizon(&instance, replications, solver.seed, &config)?;
            let text = match format {
                Format::Json => format!(
                    "{}\n",
                    serde_json::to_string_pretty(&serde_json::json!({
                        "mean_cost": summary.mean_cost,
                        "std_dev": summary.std_dev,
                        "std_error": summary.std_error(),
                        "replications": summary.replications,
                        "sample_plan": summary.sample_plan,
                    }))?
                ),
                Format::Csv => summary.sample_plan.to_csv(&instance),
                Format::Table => {
                    let mut text = String::new();
                    let _ = writeln!(
                        text,
                        "rolling-horizon mean cost: {} (sd {}, {} replications)",
                        summary.mean_cost, summary.std_dev, summary.replications
                    );
                    let _ = writeln!(text, "sample path:");
                    text.push_str(&plan_table(&instance, &summary.sample_plan, None));
                    text
                }
            };
            emit(output.as_deref(), &text)
        }

        Command::Bench2 {
            config,
            output,
            seed,
        } => {
            let mut cfg = load_bench_config(config.as_deref())?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let report = run_two_stage_bench(&cfg)?;
            write_bench_artifacts(&output, &report)?;
            // stdout stays deterministic: quality columns only, timing lives
            // in the summary/report artifacts
            println!("n,algorithm,avg_j_max,max_j_max,mean_rel_error,max_rel_error");
            for a in &report.aggregates {
                println!(
                    "{},{},{:.4},{},{:.3e},{:.3e}",
                    a.n, a.algorithm, a.avg_j_max, a.max_j_max, a.mean_rel_error, a.max_rel_error
                );
            }
            finish_bench(&report)
        }

        Command::Benchm {
            config,
            output,
            seed,
        } => {
            let mut cfg = load_bench_config(config.as_deref())?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let report = run_multistage_bench(&cfg)?;
            write_bench_artifacts(&output, &report)?;
            for row in &report.multistage_rows {
                println!(
                    "n={} T={}: exact {:.4}, rolling mean {:.4} (sd {:.4}), gap {:.2}%",
                    row.n,
                    row.horizon,
                    row.exact_value,
                    row.rolling_mean,
                    row.rolling_std_dev,
                    row.gap_percent
                );
            }
            finish_bench(&report)
        }

        Command::ExportMilp { input, output } => {
            let instance = SystemInstance::from_path(&input)?;
            let model = linearize(&instance)?;
            std::fs::write(&output, write_lp(&model))?;
            println!(
                "wrote {} ({} binaries, {} auxiliaries)",
                output.display(),
                2 * model.n + 1 + model.u_vars.len(),
                model.u_vars.len()
            );
            Ok(())
        }

        Command::Validate { input, format } => {
            let text = std::fs::read_to_string(&input)?;
            let findings = match SystemInstance::from_json_str(&text) {
                Ok(instance) => instance.validate(),
                Err(Error::Json(e)) => return Err(Error::Json(e)),
                Err(e) => {
                    return Err(e);
                }
            };
            let violations = findings
                .iter()
                .filter(|f| f.severity == Severity::Violation)
                .count();
            match format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&findings)?),
                _ => {
                    if findings.is_empty() {
                        println!("ok: no findings");
                    }
                    for f in &findings {
                        let tag = match f.severity {
                            Severity::Violation => "violation",
                            Severity::Warning => "warning",
                        };
                        println!("{tag}: {}", f.message);
                    }
                }
            }
            if violations > 0 {
                return Err(Error::Invalid(format!("{violations} violation(s) found")));
            }
            Ok(())
        }

        Command::Case {
            which,
            cm,
            solver,
            format,
        } => run_case(which, cm, &solver, format),
    }
}

fn load_bench_config(path: Option<&Path>) -> cbm_core::Result<BenchConfig> {
    match path {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            BenchConfig::from_json_str(&text)
        }
        None => Ok(BenchConfig::default()),
    }
}

fn write_bench_artifacts(
    prefix: &Path,
    report: &cbm_core::bench::BenchReport,
) -> cbm_core::Result<()> {
    let stem = prefix.to_string_lossy();
    std::fs::write(format!("{stem}_instances.csv"), report.instances_csv())?;
    std::fs::write(format!("{stem}_summary.csv"), report.summary_csv())?;
    std::fs::write(format!("{stem}_report.json"), report.to_json()?)?;
    Ok(())
}

fn finish_bench(report: &cbm_core::bench::BenchReport) -> cbm_core::Result<()> {
    let violations = report.violations();
    if violations.is_empty() {
        return Ok(());
    }
    for v in &violations {
        eprintln!("invariant violation: {v}");
    }
    Err(Error::Invalid(format!(
        "{} invariant violation(s) in the sweep",
        violations.len()
    )))
}

fn action_label(action: Action) -> &'static str {
    match action {
        Action::None => "no action",
        Action::Pm => "PM",
        Action::Cm => "CM",
    }
}

/// Render a plan as a stage-by-component table; `thresholds` appends the
/// standalone PM threshold column.
fn plan_table(
    instance: &SystemInstance,
    plan: &MaintenancePlan,
    thresholds: Option<&[usize]>,
) -> String {
    let n = instance.len();
    let mut text = String::new();
    let _ = write!(text, "{:>3} |", "t");
    for c in instance.components() {
        let _ = write!(text, " {:>5} {:<9} |", format!("i={}", c.id), "decision");
    }
    if thresholds.is_some() {
        let _ = write!(text, " threshold");
    }
    text.push('\n');
    for record in &plan.stages {
        let _ = write!(text, "{:>3} |", record.stage);
        for i in 0..n {
            let action = MaintenancePlan::action(record, i);
            let _ = write!(
                text,
                " {:>5} {:<9} |",
                record.states[i],
                action_label(action)
            );
        }
        if let Some(thresholds) = thresholds {
            if record.stage == 1 {
                let _ = write!(text, " {}", thresholds[0]);
            }
        }
        text.push('\n');
    }
    let _ = writeln!(text, "total realized cost: {}", plan.total_cost);
    text
}

/// Pipeline-shaped table: one row per component, one column pair per stage.
fn plan_table_by_component(
    instance: &SystemInstance,
    plan: &MaintenancePlan,
    thresholds: &[usize],
) -> String {
    let mut text = String::new();
    let _ = write!(text, "{:>3} |", "i");
    for record in &plan.stages {
        let _ = write!(
            text,
            " {:>2} {:<9} |",
            format!("t{}", record.stage),
            "decision"
        );
    }
    let _ = writeln!(text, " threshold");
    for (i, c) in instance.components().iter().enumerate() {
        let _ = write!(text, "{:>3} |", c.id);
        for record in &plan.stages {
            let action = MaintenancePlan::action(record, i);
            let _ = write!(
                text,
                " {:>2} {:<9} |",
                record.states[i],
                action_label(action)
            );
        }
        let _ = writeln!(text, " {}", thresholds[i]);
    }
    let _ = writeln!(text, "total realized cost: {}", plan.total_cost);
    text
}

fn run_case(
    which: CaseName,
    cm: Option<f64>,
    solver: &SolverOptions,
    format: Format,
) -> cbm_core::Result<()> {
    let source = match which {
        CaseName::Wind => WIND_INSTANCE,
        CaseName::Pipeline => PIPELINE_INSTANCE,
    };
    let base = SystemInstance::from_json_str(source)?;
    let base = match cm {
        Some(cm) => {
            let mut specs = base.components().to_vec();
            for c in &mut specs {
                c.cm_cost = cm;
            }
            SystemInstance::new(
                specs,
                base.setup_cost(),
                base.state_count(),
                base.horizon(),
                base.inspection_interval(),
            )?
        }
        None => base,
    };

    // standalone PM thresholds, one per component
    let thresholds: Vec<usize> = base
        .components()
        .iter()
        .map(|c| standalone_decision(c, base.setup_cost()).map(|d| d.threshold_state))
        .collect::<cbm_core::Result<_>>()?;

    // the observed stage-1 states are simulated: one no-maintenance
    // transition out of state 1, drawn on a dedicated stream
    let mut rng = ChaCha8Rng::seed_from_u64(solver.seed);
    rng.set_stream(u64::MAX);
    let states: Vec<usize> = (0..base.len())
        .map(|i| {
            let row = base.component(i).transition.row(1);
            sample_state(row, rng.random::<f64>())
        })
        .collect();
    let instance = base.with_states(&states)?;

    let config = solver.heuristic_config(instance.len().min(3));
    let summary = simulate_rolling_horizon(&instance, 1, solver.seed, &config)?;

    match format {
        Format::Json => {
            println!(
                "{}",
                serde_json::to_string_pretty(&serde_json::json!({
                    "standalone_pm_threshold": thresholds,
                    "plan": summary.sample_plan,
                }))?
            );
        }
        _ => {
            println!(
                "standalone PM threshold (no economic dependence): {}",
                thresholds[0]
            );
            let table = match which {
                CaseName::Wind => plan_table(&instance, &summary.sample_plan, Some(&thresholds)),
                CaseName::Pipeline => {
                    plan_table_by_component(&instance, &summary.sample_plan, &thresholds)
                }
            };
            print!("{table}");
        }
    }
    Ok(())
}

/// Inverse-CDF draw from a transition row; 1-based state.
fn sample_state(row: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (g, &q) in row.iter().enumerate() {
        acc += q;
        if u < acc {
            return g + 1;
        }
    }
    row.len()
}
