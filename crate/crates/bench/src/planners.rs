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

use std::collections::BTreeSet;

use binpick::kinematics::layout::dual_arm_cell;
use binpick::kinematics::CollisionWorld;
use binpick::motion::{plan_with_stats, validate_path, MotionError, PlannerConfig, PlanningProblem};
use binpick::pipeline::{reachable_sets, PipelineConfig};
use binpick::scene::{generate_scene, Placement};
use binpick::task::{Policy, PolicyKind, TaskError};
use serde::{Deserialize, Serialize};

use crate::report::{format_sig, opt_sig, Tabular};
use crate::scenario::derive_seed;
use crate::suite::median;
use crate::BenchError;

const OBJECTS_PER_PROBLEM: usize = 10;

/// One planner on one benchmark problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannerRow {
    pub scenario: usize,
    pub planner: String,
    pub n_active: usize,
    pub solved: bool,
    /// Time to the first solution; `None` when unsolved.
    pub solve_ms: Option<f64>,
    /// Wall time of the whole call.
    pub elapsed_ms: f64,
    pub cost: Option<f64>,
    /// The returned path passed an independent collision validation.
    pub valid: bool,
}

impl Tabular for PlannerRow {
    fn columns() -> &'static [&'static str] {
        &["scenario", "planner", "n_active", "solved", "solve_ms", "elapsed_ms", "cost_rad", "valid"]
    }

    fn cells(&self) -> Vec<String> {
        vec![
            self.scenario.to_string(),
            self.planner.clone(),
            self.n_active.to_string(),
            self.solved.to_string(),
            opt_sig(self.solve_ms),
            format_sig(self.elapsed_ms),
            opt_sig(self.cost),
            self.valid.to_string(),
        ]
    }
}

/// A home-to-pregrasp problem for the action `kin_feasibility` picks in a
/// random centred dual-arm bin.
pub fn benchmark_problem(seed: u64) -> Result<PlanningProblem, BenchError> {
    let cell = dual_arm_cell();
    for draw in 0.. {
        let s = derive_seed(seed, &[draw]);
        let scene = generate_scene(Placement::Centred, OBJECTS_PER_PROBLEM, s)?;
        let world = CollisionWorld::new(cell.clone(), scene.obstacles());
        let cfg = PipelineConfig::default();
        let (map, reachable) = reachable_sets(&world, &scene, &cfg, 0);
        let policy = Policy {
            kind: PolicyKind::KinFeasibility,
            rng_seed: s,
            ..Policy::default()
        };
        let action = match policy.assign(&map, &reachable, &world, 0) {
            Ok(a) => a,
            Err(TaskError::NoReachableGrasp) => continue,
            Err(e) => return Err(binpick::pipeline::PipelineError::from(e).into()),
        };
        let home = cell.home();
        let ignore: BTreeSet<u32> = action.object_ids().into_iter().collect();
        return Ok(PlanningProblem::new(world, home.clone(), action.composite(&home, true))
            .with_active(action.active_robots())
            .with_ignored(ignore));
    }
    unreachable!("the draw loop only exits by returning")
}

/// Runs every planner on `n_scenarios` seeded problems. Each planner gets the
/// same problem and the same planner seed.
pub fn benchmark_planners(n_scenarios: usize, planners: &[PlannerConfig], seed: u64) -> Result<Vec<PlannerRow>, BenchError> {
    let mut rows = Vec::with_capacity(n_scenarios * planners.len());
    for i in 0..n_scenarios {
        let problem = benchmark_problem(derive_seed(seed, &[2, i as u64]))?;
        let planner_seed = derive_seed(seed, &[3, i as u64]);
        for cfg in planners {
            let cfg = cfg.clone().with_seed(planner_seed);
            let mut row = PlannerRow {
                scenario: i,
                planner: cfg.kind.name().into(),
                n_active: problem.active_robots.len(),
                solved: false,
                solve_ms: None,
                elapsed_ms: 0.0,
                cost: None,
                valid: false,
            };
            let t = std::time::Instant::now();
            match plan_with_stats(&problem, &cfg) {
                Ok((path, stats)) => {
                    row.elapsed_ms = t.elapsed().as_secs_f64() * 1e3;
                    row.solved = true;
                    row.solve_ms = stats.first_solution_ms;
                    row.cost = Some(path.cost);
                    row.valid = validate_path(&path, &problem.world, &problem.ignore_objects, cfg.resolution)?;
                }
                Err(MotionError::InfeasibleTimeout { .. }) => {
                    row.elapsed_ms = t.elapsed().as_secs_f64() * 1e3;
                }
                Err(e) => return Err(e.into()),
            }
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Per-planner success rate and median solve time, unsolved problems
/// counting as infinitely slow.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannerSummary {
    pub planner: String,
    pub problems: usize,
    pub success_rate: f64,
    pub median_solve_ms: f64,
    pub invalid_paths: usize,
}

pub fn planner_summary(rows: &[PlannerRow]) -> Vec<PlannerSummary> {
    let mut names: Vec<&str> = Vec::new();
    for r in rows {
        if !names.contains(&r.planner.as_str()) {
            names.push(&r.planner);
        }
    }
    names
        .into_iter()
        .map(|name| {
            let mine: Vec<&PlannerRow> = rows.iter().filter(|r| r.planner == name).collect();
            let solved = mine.iter().filter(|r| r.solved).count();
            PlannerSummary {
                planner: name.into(),
                problems: mine.len(),
                success_rate: solved as f64 / mine.len() as f64,
                median_solve_ms: median(mine.iter().map(|r| r.solve_ms.unwrap_or(f64::INFINITY)).collect()),
                invalid_paths: mine.iter().filter(|r| r.solved && !r.valid).count(),
            }
        })
        .collect()
}
