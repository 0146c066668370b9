/*
  Copyright 2026 The binpick Authors

  Licensed under the Apache License, Version 2.0 (the "License");
  you may not use this file except in compliance with the License.
  You may obtain a copy of the License at

      http://www.apache.org/licenses/LICENSE-2.0

  Unless required by applicable law or agreed to in writing, software
  distributed under the License is distributed on an "AS IS" BASIS,
  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
  See the License for the specific language governing permissions and
  limitations under the License.
*/

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use binpick::motion::{PlannerConfig, PlannerKind};
use binpick_bench::{
    benchmark_planners, emit_report, planner_summary, run_scenario_suite, standard_suites, BenchError, Profile,
    ReportFormat, ScenarioSpec, SuiteOptions, SuiteReport,
};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bench", about = "Bin-picking experiment harness")]
struct Cli {
    /// Base seed for every scene, episode and planner stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// 3 bins x 10 objects x 3 trials instead of 10 x 10 x 10.
    #[arg(long, global = true)]
    quick: bool,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Exit nonzero if any episode aborted.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run scenario suites and print their summaries.
    Run {
        /// JSON ScenarioSpec, or an array of them. Defaults to the standard suites.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Per-round rows as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time every planner on the same seeded dual-arm problems.
    Planners {
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value = "planners.csv")]
        out: PathBuf,
    },
    /// Run suites and write the per-round report.
    Report {
        #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
        format: ReportFormat,
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_specs(path: Option<&Path>, cli: &Cli) -> Result<Vec<ScenarioSpec>, BenchError> {
    let Some(path) = path else {
        let profile = if cli.quick { Profile::Quick } else { Profile::Full };
        return Ok(standard_suites(profile, cli.seed));
    };
    let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let specs = if value.is_array() {
        serde_json::from_value(value)?
    } else {
        vec![serde_json::from_value(value)?]
    };
    Ok(specs)
}

fn print_summaries(report: &SuiteReport) {
    println!("scenario,rounds_per_trial,picks,cleared,aborted,two_robot_pct,per_grasp_success,clearance_violations,median_task_ms,median_motion_ms");
    for s in &report.summaries {
        println!(
            "{},{:.1},{},{},{},{:.1},{:.3},{},{:.2},{:.2}",
            s.scenario,
            s.rounds_per_trial,
            s.total_picks,
            s.cleared,
            s.aborted,
            s.two_robot_pct,
            s.per_grasp_success,
            s.clearance_violations,
            s.median_task_ms,
            s.median_motion_ms
        );
    }
}

fn run(cli: &Cli) -> Result<bool, BenchError> {
    let opts = SuiteOptions { jobs: cli.jobs };
    match &cli.command {
        Command::Run { spec, out } => {
            let specs = load_specs(spec.as_deref(), cli)?;
            let report = run_scenario_suite(&specs, &opts)?;
            print_summaries(&report);
            if let Some(out) = out {
                emit_report(&report.rows, ReportFormat::Csv, out)?;
            }
            Ok(report.any_aborted())
        }
        Command::Report { format, spec, out } => {
            let specs = load_specs(spec.as_deref(), cli)?;
            let report = run_scenario_suite(&specs, &opts)?;
            let ext = match format {
                ReportFormat::Csv => "csv",
                ReportFormat::Json => "json",
            };
            let out = out.clone().unwrap_or_else(|| PathBuf::from(format!("report.{ext}")));
            emit_report(&report.rows, *format, &out)?;
            print_summaries(&report);
            Ok(report.any_aborted())
        }
        Command::Planners { count, out } => {
            let planners: Vec<PlannerConfig> = PlannerKind::ALL
                .iter()
                .map(|&k| PlannerConfig::default().with_kind(k))
                .collect();
            let rows = benchmark_planners(*count, &planners, cli.seed)?;
            emit_report(&rows, ReportFormat::Csv, out)?;
            println!("planner,problems,success_rate,median_solve_ms,invalid_paths");
            for s in planner_summary(&rows) {
                println!(
                    "{},{},{:.3},{:.2},{}",
                    s.planner, s.problems, s.success_rate, s.median_solve_ms, s.invalid_paths
                );
            }
            Ok(false)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(aborted) if aborted && cli.strict => {
            eprintln!("aborted episodes present");
            ExitCode::from(2)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
