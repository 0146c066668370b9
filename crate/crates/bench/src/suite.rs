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

use std::collections::BTreeMap;

use binpick::kinematics::{CollisionWorld, CLEARANCE_MARGIN};
use binpick::pipeline::{round_min_clearance, run_episode, EpisodeLog, RoundOutcome};
use binpick::scene::BinScene;
use binpick::task::jointly_feasible;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::report::{format_sig, opt_sig, Tabular};
use crate::scenario::ScenarioSpec;
use crate::BenchError;

/// One grasp round of one episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub scenario: String,
    pub policy: String,
    pub bin: usize,
    pub trial: usize,
    pub round: usize,
    pub outcome: RoundOutcome,
    pub robots_used: usize,
    /// Grasps in the executed action.
    pub assigned: usize,
    pub picks: usize,
    pub picks_cumulative: usize,
    /// Per-robot reward, `-` for idle robots.
    pub rewards: String,
    pub attempts: usize,
    pub task_ms: f64,
    pub motion_ms: f64,
    pub total_ms: f64,
    /// Smallest arm-arm distance along the executed legs (metres).
    pub min_arm_clearance: Option<f64>,
    pub action_disjoint: bool,
    /// The executed action passed the joint-feasibility check in its round's scene.
    pub action_feasible: bool,
}

impl ReportRow {
    /// Columns that must replay bit-identically.
    pub fn non_timing(&self) -> ReportRow {
        ReportRow {
            task_ms: 0.0,
            motion_ms: 0.0,
            total_ms: 0.0,
            ..self.clone()
        }
    }
}

impl Tabular for ReportRow {
    fn columns() -> &'static [&'static str] {
        &[
            "scenario",
            "policy",
            "bin",
            "trial",
            "round",
            "outcome",
            "robots_used",
            "assigned",
            "picks",
            "picks_cumulative",
            "rewards",
            "attempts",
            "task_ms",
            "motion_ms",
            "total_ms",
            "min_arm_clearance_m",
            "action_disjoint",
            "action_feasible",
        ]
    }

    fn cells(&self) -> Vec<String> {
        let outcome = match self.outcome {
            RoundOutcome::Executed => "executed",
            RoundOutcome::NoReachableGrasp => "no_reachable_grasp",
            RoundOutcome::MotionFailed => "motion_failed",
        };
        vec![
            self.scenario.clone(),
            self.policy.clone(),
            self.bin.to_string(),
            self.trial.to_string(),
            self.round.to_string(),
            outcome.into(),
            self.robots_used.to_string(),
            self.assigned.to_string(),
            self.picks.to_string(),
            self.picks_cumulative.to_string(),
            self.rewards.clone(),
            self.attempts.to_string(),
            format_sig(self.task_ms),
            format_sig(self.motion_ms),
            format_sig(self.total_ms),
            opt_sig(self.min_arm_clearance),
            self.action_disjoint.to_string(),
            self.action_feasible.to_string(),
        ]
    }
}

/// Mean cumulative picks after `round` rounds, over per-trial means.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub round: usize,
    pub mean: f64,
    /// 95% t-interval; `None` with fewer than two trials.
    pub ci95: Option<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub scenario: String,
    pub policy: String,
    pub episodes: usize,
    pub objects: usize,
    pub total_rounds: usize,
    pub rounds_per_trial: f64,
    pub total_picks: usize,
    pub cleared: usize,
    pub aborted: usize,
    pub motion_failed_rounds: usize,
    /// Share of executed rounds by robots used, in percent.
    pub usage_pct: BTreeMap<usize, f64>,
    pub two_robot_pct: f64,
    pub grasps_attempted: usize,
    pub per_grasp_success: f64,
    pub clearance_violations: usize,
    pub infeasible_actions: usize,
    pub overlapping_actions: usize,
    pub median_task_ms: f64,
    pub median_motion_ms: f64,
    pub mean_task_ms: f64,
    pub mean_motion_ms: f64,
    pub curve: Vec<CurvePoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub rows: Vec<ReportRow>,
    pub summaries: Vec<SuiteSummary>,
}

impl SuiteReport {
    pub fn summary(&self, scenario: &str) -> Option<&SuiteSummary> {
        self.summaries.iter().find(|s| s.scenario == scenario)
    }

    pub fn any_aborted(&self) -> bool {
        self.summaries.iter().any(|s| s.aborted > 0)
    }
}

#[derive(Clone, Debug, Default)]
pub struct SuiteOptions {
    /// Worker threads; `None` uses rayon's default.
    pub jobs: Option<usize>,
}

struct EpisodeResult {
    rows: Vec<ReportRow>,
    cleared: bool,
    aborted: bool,
}

struct Episode {
    spec: usize,
    bin: usize,
    trial: usize,
}

/// Runs every episode of every spec and aggregates per-spec summaries.
/// Rows are ordered by spec, bin, trial and round whatever the worker count.
pub fn run_scenario_suite(specs: &[ScenarioSpec], opts: &SuiteOptions) -> Result<SuiteReport, BenchError> {
    for s in specs {
        s.validate()?;
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = opts.jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder.build().map_err(|e| BenchError::Pool(e.to_string()))?;
    pool.install(|| {
        let scenes: Vec<Vec<BinScene>> = specs
            .iter()
            .map(|s| (0..s.n_bins).into_par_iter().map(|b| s.bin_scene(b)).collect())
            .collect::<Result<_, _>>()?;
        let work: Vec<Episode> = specs
            .iter()
            .enumerate()
            .flat_map(|(i, s)| {
                (0..s.n_bins).flat_map(move |bin| (0..s.trials).map(move |trial| Episode { spec: i, bin, trial }))
            })
            .collect();
        let episodes: Vec<EpisodeResult> = work
            .par_iter()
            .map(|e| {
                let spec = &specs[e.spec];
                let cfg = spec.pipeline_config(spec.episode_seed(e.bin, e.trial));
                let log = run_episode(&scenes[e.spec][e.bin], &spec.cell(), &cfg)?;
                Ok(EpisodeResult {
                    rows: episode_rows(spec, e, &log)?,
                    cleared: log.cleared,
                    aborted: log.aborted,
                })
            })
            .collect::<Result<_, BenchError>>()?;
        let mut rows = Vec::new();
        let mut summaries = Vec::new();
        let mut it = work.iter().zip(episodes);
        for (i, spec) in specs.iter().enumerate() {
            let mine: Vec<EpisodeResult> = it.by_ref().take(spec.n_bins * spec.trials).map(|(_, r)| r).collect();
            debug_assert!(work.iter().filter(|e| e.spec == i).count() == mine.len());
            summaries.push(summarize(spec, &mine));
            rows.extend(mine.into_iter().flat_map(|e| e.rows));
        }
        Ok(SuiteReport { rows, summaries })
    })
}

fn episode_rows(spec: &ScenarioSpec, e: &Episode, log: &EpisodeLog) -> Result<Vec<ReportRow>, BenchError> {
    let cell = spec.cell();
    let res = spec.planner.resolution;
    let mut scene = log.initial_scene.clone();
    let mut cumulative = 0;
    let mut rows = Vec::with_capacity(log.rounds.len());
    for round in &log.rounds {
        let picks = round.picks();
        cumulative += picks;
        let (mut clearance, mut disjoint, mut feasible) = (None, true, true);
        if let (RoundOutcome::Executed, Some(action), Some(paths)) = (round.outcome, &round.action, &round.paths) {
            clearance = Some(round_min_clearance(&scene, &cell, action, paths, res)?);
            disjoint = action.is_object_disjoint();
            let world = CollisionWorld::new(cell.clone(), scene.obstacles());
            feasible = jointly_feasible(action, &world).map_err(binpick::pipeline::PipelineError::from)?;
            for (g, r) in action.assignments.iter().zip(&round.rewards) {
                if let (Some(g), Some(1)) = (g, r) {
                    scene = scene.remove_object(g.object_id())?;
                }
            }
        }
        rows.push(ReportRow {
            scenario: spec.name.clone(),
            policy: spec.policy.name().into(),
            bin: e.bin,
            trial: e.trial,
            round: round.index,
            outcome: round.outcome,
            robots_used: round.robots_used(),
            assigned: round.action.as_ref().map_or(0, |a| a.n_active()),
            picks,
            picks_cumulative: cumulative,
            rewards: round
                .rewards
                .iter()
                .map(|r| r.map_or("-".to_string(), |v| v.to_string()))
                .collect::<Vec<_>>()
                .join(""),
            attempts: round.attempts,
            task_ms: round.task_ms,
            motion_ms: round.motion_ms,
            total_ms: round.total_ms,
            min_arm_clearance: clearance,
            action_disjoint: disjoint,
            action_feasible: feasible,
        });
    }
    Ok(rows)
}

pub(crate) fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Mean with a two-sided 95% Student-t interval.
pub fn mean_ci95(xs: &[f64]) -> (f64, Option<(f64, f64)>) {
    let m = mean(xs);
    let n = xs.len();
    if n < 2 {
        return (m, None);
    }
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975);
    let half = t * (var / n as f64).sqrt();
    (m, Some((m - half, m + half)))
}

fn pct(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

/// `episodes` is indexed bin-major, `bin * trials + trial`.
fn summarize(spec: &ScenarioSpec, results: &[EpisodeResult]) -> SuiteSummary {
    let episodes: Vec<&Vec<ReportRow>> = results.iter().map(|e| &e.rows).collect();
    let rows: Vec<&ReportRow> = episodes.iter().copied().flatten().collect();
    let executed: Vec<&&ReportRow> = rows.iter().filter(|r| r.outcome == RoundOutcome::Executed).collect();
    let mut used = BTreeMap::new();
    for r in &executed {
        *used.entry(r.robots_used).or_insert(0usize) += 1;
    }
    let usage_pct: BTreeMap<usize, f64> = used.iter().map(|(&k, &v)| (k, pct(v, executed.len()))).collect();
    let grasps_attempted: usize = executed.iter().map(|r| r.assigned).sum();
    let total_picks: usize = rows.iter().map(|r| r.picks).sum();
    let objects = spec.n_bins * spec.trials * spec.objects_per_bin;

    let longest = episodes.iter().map(|e| e.len()).max().unwrap_or(0);
    let curve = (1..=longest)
        .map(|k| {
            let per_trial: Vec<f64> = (0..spec.trials)
                .map(|t| {
                    let at_k: Vec<f64> = (0..spec.n_bins)
                        .map(|b| {
                            let ep = &episodes[b * spec.trials + t];
                            ep.get(k - 1).or(ep.last()).map_or(0.0, |r| r.picks_cumulative as f64)
                        })
                        .collect();
                    mean(&at_k)
                })
                .collect();
            let (mean, ci95) = mean_ci95(&per_trial);
            CurvePoint { round: k, mean, ci95 }
        })
        .collect();

    let task: Vec<f64> = rows.iter().map(|r| r.task_ms).collect();
    let motion: Vec<f64> = rows.iter().map(|r| r.motion_ms).collect();
    SuiteSummary {
        scenario: spec.name.clone(),
        policy: spec.policy.name().into(),
        episodes: episodes.len(),
        objects,
        total_rounds: rows.len(),
        rounds_per_trial: rows.len() as f64 / spec.trials as f64,
        total_picks,
        cleared: results.iter().filter(|e| e.cleared).count(),
        aborted: results.iter().filter(|e| e.aborted).count(),
        motion_failed_rounds: rows.iter().filter(|r| r.outcome == RoundOutcome::MotionFailed).count(),
        two_robot_pct: usage_pct.get(&2).copied().unwrap_or(0.0),
        usage_pct,
        grasps_attempted,
        per_grasp_success: if grasps_attempted == 0 {
            f64::NAN
        } else {
            total_picks as f64 / grasps_attempted as f64
        },
        clearance_violations: rows
            .iter()
            .filter(|r| r.min_arm_clearance.is_some_and(|c| c < CLEARANCE_MARGIN))
            .count(),
        infeasible_actions: executed.iter().filter(|r| !r.action_feasible).count(),
        overlapping_actions: executed.iter().filter(|r| !r.action_disjoint).count(),
        median_task_ms: median(task.clone()),
        median_motion_ms: median(motion.clone()),
        mean_task_ms: mean(&task),
        mean_motion_ms: mean(&motion),
        curve,
    }
}
