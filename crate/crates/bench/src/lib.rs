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

//! Experiment harness: scenario suites over the picking pipeline, a motion
//! planner benchmark, summary statistics and CSV/JSON reports.

pub mod planners;
pub mod report;
pub mod scenario;
pub mod suite;

use thiserror::Error;

pub use planners::{benchmark_planners, planner_summary, PlannerRow, PlannerSummary};
pub use report::{emit_report, format_sig, ReportFormat, Tabular};
pub use scenario::{derive_seed, standard_suites, Profile, ScenarioSpec};
pub use suite::{mean_ci95, run_scenario_suite, CurvePoint, ReportRow, SuiteOptions, SuiteReport, SuiteSummary};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Pipeline(#[from] binpick::pipeline::PipelineError),
    #[error(transparent)]
    Motion(#[from] binpick::motion::MotionError),
    #[error(transparent)]
    Scene(#[from] binpick::scene::SceneError),
    #[error("worker pool: {0}")]
    Pool(String),
}
