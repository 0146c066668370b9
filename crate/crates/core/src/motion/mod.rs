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

//! Sampling-based motion planning in the composite configuration space of all
//! arms, a prioritized wrapper, path timing, validation and cost.

mod bit_star;
mod prioritized;
mod rrt;
mod rrt_star;
mod space;
pub mod timing;

use std::collections::BTreeSet;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{CollisionWorld, CompositeConfig, KinematicsError};

pub use prioritized::plan_prioritized;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MotionError {
    #[error("no solution within budget{}", robot.map(|r| format!(" for robot {r}")).unwrap_or_default())]
    InfeasibleTimeout { robot: Option<usize> },
    #[error("start or goal invalid: {0}")]
    InvalidEndpoints(String),
    #[error("empty path")]
    EmptyPath,
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerKind {
    Rrt,
    RrtConnect,
    RrtStar,
    BitStar,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 4] = [
        PlannerKind::Rrt,
        PlannerKind::RrtConnect,
        PlannerKind::RrtStar,
        PlannerKind::BitStar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlannerKind::Rrt => "rrt",
            PlannerKind::RrtConnect => "rrt_connect",
            PlannerKind::RrtStar => "rrt_star",
            PlannerKind::BitStar => "bit_star",
        }
    }

    pub fn is_anytime(self) -> bool {
        matches!(self, PlannerKind::RrtStar | PlannerKind::BitStar)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub kind: PlannerKind,
    /// Largest extension in the composite space (radians).
    pub step_size: f64,
    pub goal_bias: f64,
    /// Samples per BIT* batch.
    pub batch_size: usize,
    /// Wall-clock cap per call (milliseconds).
    pub time_budget_ms: f64,
    pub rng_seed: u64,
    pub rewire_radius_scale: f64,
    /// Cap on drawn samples per call. Results are bit-reproducible whenever
    /// this cap, not the clock, ends the search.
    pub sample_budget: usize,
    /// Largest joint step between collision-checked configurations (radians).
    pub resolution: f64,
    /// Anytime planners stop once the cost is within this relative margin of
    /// the straight-line lower bound.
    pub optimality_tolerance: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            kind: PlannerKind::BitStar,
            step_size: 0.5,
            goal_bias: 0.05,
            batch_size: 100,
            time_budget_ms: 1000.0,
            rng_seed: 0,
            rewire_radius_scale: 1.0,
            sample_budget: 1500,
            resolution: 0.01,
            optimality_tolerance: 1e-9,
        }
    }
}

impl PlannerConfig {
    pub fn with_kind(mut self, kind: PlannerKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), MotionError> {
        let bad = |m: &str| Err(MotionError::InvalidProblem(m.into()));
        if !(self.step_size > 0.0) {
            return bad("step_size must be positive");
        }
        if !(0.0..1.0).contains(&self.goal_bias) {
            return bad("goal_bias must lie in [0, 1)");
        }
        if !(self.time_budget_ms > 0.0) {
            return bad("time budget must be positive");
        }
        if self.batch_size == 0 || self.sample_budget == 0 {
            return bad("batch size and sample budget must be positive");
        }
        if !(self.resolution > 0.0) {
            return bad("resolution must be positive");
        }
        Ok(())
    }
}

/// Start and goal for some of the arms; the others stay at their start configuration.
#[derive(Clone, Debug)]
pub struct PlanningProblem {
    pub world: CollisionWorld,
    pub start: CompositeConfig,
    pub goal: CompositeConfig,
    pub ignore_objects: BTreeSet<u32>,
    /// Sorted, distinct robot indices.
    pub active_robots: Vec<usize>,
}

impl PlanningProblem {
    pub fn new(world: CollisionWorld, start: CompositeConfig, goal: CompositeConfig) -> Self {
        let n = world.cell().n_arms();
        PlanningProblem {
            world,
            start,
            goal,
            ignore_objects: BTreeSet::new(),
            active_robots: (0..n).collect(),
        }
    }

    pub fn with_active(mut self, mut robots: Vec<usize>) -> Self {
        robots.sort_unstable();
        robots.dedup();
        self.active_robots = robots;
        self
    }

    pub fn with_ignored(mut self, ids: BTreeSet<u32>) -> Self {
        self.ignore_objects = ids;
        self
    }

    fn check(&self) -> Result<(), MotionError> {
        let cell = self.world.cell();
        cell.check_composite(&self.start)?;
        cell.check_composite(&self.goal)?;
        if self.active_robots.is_empty() {
            return Err(MotionError::InvalidProblem("no active robots".into()));
        }
        if self.active_robots.iter().any(|&r| r >= cell.n_arms()) {
            return Err(MotionError::InvalidProblem("active robot out of range".into()));
        }
        for r in 0..cell.n_arms() {
            if !self.active_robots.contains(&r) && self.start.0[r] != self.goal.0[r] {
                return Err(MotionError::InvalidProblem(format!(
                    "inactive robot {r} has a goal different from its start"
                )));
            }
        }
        for (name, c) in [("start", &self.start), ("goal", &self.goal)] {
            let in_limits = cell.arms.iter().zip(&c.0).all(|(a, q)| a.within_limits(q));
            if !in_limits {
                return Err(MotionError::InvalidEndpoints(format!("{name} violates joint limits")));
            }
            if self.world.collision_check(c, &self.ignore_objects)? {
                return Err(MotionError::InvalidEndpoints(format!("{name} in collision")));
            }
        }
        Ok(())
    }
}

/// Timed path in the composite configuration space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathPlan {
    pub waypoints: Vec<CompositeConfig>,
    /// Seconds from the path start, strictly increasing.
    pub timestamps: Vec<f64>,
    /// Composite joint-space arc length (radians).
    pub cost: f64,
    pub active_robots: Vec<usize>,
}

impl PathPlan {
    /// Straight segments between `waypoints`, each timed rest to rest. Repeated waypoints are dropped.
    pub fn from_waypoints(waypoints: Vec<CompositeConfig>, active_robots: Vec<usize>) -> Self {
        let mut kept: Vec<CompositeConfig> = Vec::with_capacity(waypoints.len());
        for w in waypoints {
            if kept.last().is_none_or(|l| l.max_joint_delta(&w) > 0.0) {
                kept.push(w);
            }
        }
        let mut timestamps = Vec::with_capacity(kept.len());
        let mut t = 0.0;
        for (i, w) in kept.iter().enumerate() {
            if i > 0 {
                t += timing::segment_duration(kept[i - 1].max_joint_delta(w));
            }
            timestamps.push(t);
        }
        let mut plan = PathPlan {
            waypoints: kept,
            timestamps,
            cost: 0.0,
            active_robots,
        };
        plan.cost = path_cost(&plan);
        plan
    }

    /// Waypoints with explicit times, e.g. a densely sampled merge of several timed paths.
    pub fn from_timed(waypoints: Vec<CompositeConfig>, timestamps: Vec<f64>, active_robots: Vec<usize>) -> Self {
        let mut plan = PathPlan {
            waypoints,
            timestamps,
            cost: 0.0,
            active_robots,
        };
        plan.cost = path_cost(&plan);
        plan
    }

    pub fn start(&self) -> &CompositeConfig {
        &self.waypoints[0]
    }

    pub fn end(&self) -> &CompositeConfig {
        self.waypoints.last().expect("non-empty path")
    }

    pub fn duration(&self) -> f64 {
        self.timestamps.last().copied().unwrap_or(0.0)
    }

    /// Configuration at time `t`, following each segment's timing profile.
    pub fn sample_at(&self, t: f64) -> CompositeConfig {
        if t <= 0.0 || self.waypoints.len() == 1 {
            return self.waypoints[0].clone();
        }
        if t >= self.duration() {
            return self.end().clone();
        }
        let i = self.timestamps.partition_point(|&s| s <= t) - 1;
        let (a, b) = (&self.waypoints[i], &self.waypoints[i + 1]);
        let span = self.timestamps[i + 1] - self.timestamps[i];
        let d = a.max_joint_delta(b);
        let natural = timing::segment_duration(d);
        // explicit timestamps may stretch a segment; scale the profile to fit
        let tau = (t - self.timestamps[i]) * natural / span;
        a.lerp(b, timing::progress(d, tau))
    }

    /// `self` followed by `next`; `next` must start where `self` ends.
    pub fn concat(&self, next: &PathPlan) -> Result<PathPlan, MotionError> {
        if self.end().max_joint_delta(next.start()) > 1e-9 {
            return Err(MotionError::InvalidProblem("paths do not join".into()));
        }
        let offset = self.duration();
        let mut waypoints = self.waypoints.clone();
        let mut timestamps = self.timestamps.clone();
        waypoints.extend(next.waypoints.iter().skip(1).cloned());
        timestamps.extend(next.timestamps.iter().skip(1).map(|t| t + offset));
        let mut active: BTreeSet<usize> = self.active_robots.iter().copied().collect();
        active.extend(next.active_robots.iter().copied());
        Ok(PathPlan::from_timed(waypoints, timestamps, active.into_iter().collect()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("path serializes")
    }
}

/// Sum of composite joint-space segment lengths.
pub fn path_cost(path: &PathPlan) -> f64 {
    path.waypoints.windows(2).map(|w| w[0].distance(&w[1])).sum()
}

/// True iff every configuration interpolated along the path, with no joint
/// moving more than `resolution` between checks, is collision-free.
pub fn validate_path(
    path: &PathPlan,
    world: &CollisionWorld,
    ignore_objects: &BTreeSet<u32>,
    resolution: f64,
) -> Result<bool, MotionError> {
    let Some(first) = path.waypoints.first() else {
        return Err(MotionError::EmptyPath);
    };
    if world.collision_check(first, ignore_objects)? {
        return Ok(false);
    }
    for w in path.waypoints.windows(2) {
        let n = (w[0].max_joint_delta(&w[1]) / resolution).ceil() as usize;
        for k in 1..=n {
            let c = w[0].lerp(&w[1], k as f64 / n as f64);
            if world.collision_check(&c, ignore_objects)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Search statistics reported alongside a plan.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanStats {
    /// Incumbent cost after each improvement (non-increasing).
    pub cost_history: Vec<f64>,
    pub first_solution_ms: Option<f64>,
    pub elapsed_ms: f64,
    pub samples: usize,
    pub collision_checks: usize,
    /// Whether the wall clock, rather than the sample budget, ended the search.
    pub hit_time_budget: bool,
}

pub(crate) struct Budget {
    started: Instant,
    time_ms: f64,
    samples: usize,
    pub drawn: usize,
    pub timed_out: bool,
}

impl Budget {
    fn new(cfg: &PlannerConfig) -> Self {
        Budget {
            started: Instant::now(),
            time_ms: cfg.time_budget_ms,
            samples: cfg.sample_budget,
            drawn: 0,
            timed_out: false,
        }
    }

    pub fn elapsed_ms(&self) -> f64 {
        self.started.elapsed().as_secs_f64() * 1e3
    }

    pub fn out_of_time(&mut self) -> bool {
        if !self.timed_out && self.elapsed_ms() > self.time_ms {
            self.timed_out = true;
        }
        self.timed_out
    }

    /// Accounts for one drawn sample; false once the budget is spent.
    pub fn draw(&mut self) -> bool {
        if self.drawn >= self.samples {
            return false;
        }
        if self.drawn.is_multiple_of(16) && self.elapsed_ms() > self.time_ms {
            self.timed_out = true;
            return false;
        }
        self.drawn += 1;
        true
    }
}

pub(crate) struct Search<'a> {
    pub space: space::Space<'a>,
    pub cfg: &'a PlannerConfig,
    pub rng: ChaCha8Rng,
    pub budget: Budget,
    pub stats: PlanStats,
    pub start: Vec<f64>,
    pub goal: Vec<f64>,
}

impl Search<'_> {
    pub fn improved(&mut self, cost: f64) {
        if self.stats.first_solution_ms.is_none() {
            self.stats.first_solution_ms = Some(self.budget.elapsed_ms());
        }
        self.stats.cost_history.push(cost);
    }

    /// Whether `cost` cannot be improved on.
    pub fn optimal(&self, cost: f64) -> bool {
        cost <= space::dist(&self.start, &self.goal) * (1.0 + self.cfg.optimality_tolerance)
    }
}

pub fn plan(problem: &PlanningProblem, cfg: &PlannerConfig) -> Result<PathPlan, MotionError> {
    plan_with_stats(problem, cfg).map(|(p, _)| p)
}

pub fn plan_with_stats(
    problem: &PlanningProblem,
    cfg: &PlannerConfig,
) -> Result<(PathPlan, PlanStats), MotionError> {
    cfg.validate()?;
    problem.check()?;
    let space = space::Space::new(problem, cfg.resolution);
    let start = space.project(&problem.start);
    let goal = space.project(&problem.goal);
    let mut search = Search {
        space,
        cfg,
        rng: ChaCha8Rng::seed_from_u64(cfg.rng_seed),
        budget: Budget::new(cfg),
        stats: PlanStats::default(),
        start,
        goal,
    };
    let found = if search.start == search.goal {
        search.improved(0.0);
        Some(vec![search.start.clone()])
    } else {
        match cfg.kind {
            PlannerKind::Rrt => rrt::rrt(&mut search),
            PlannerKind::RrtConnect => rrt::rrt_connect(&mut search),
            PlannerKind::RrtStar => rrt_star::rrt_star(&mut search),
            PlannerKind::BitStar => bit_star::bit_star(&mut search),
        }
    };
    search.stats.elapsed_ms = search.budget.elapsed_ms();
    search.stats.samples = search.budget.drawn;
    search.stats.collision_checks = search.space.checks();
    search.stats.hit_time_budget = search.budget.timed_out;
    let Some(mut points) = found else {
        return Err(MotionError::InfeasibleTimeout { robot: None });
    };
    // exact endpoints
    points[0] = search.start.clone();
    if points.len() > 1 {
        *points.last_mut().expect("non-empty") = search.goal.clone();
    }
    let mut waypoints = search.space.to_waypoints(&points);
    waypoints[0] = problem.start.clone();
    if waypoints.len() > 1 {
        *waypoints.last_mut().expect("non-empty") = problem.goal.clone();
    }
    let plan = PathPlan::from_waypoints(waypoints, problem.active_robots.clone());
    Ok((plan, search.stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::JointConfig;

    fn c(v: &[f64]) -> CompositeConfig {
        CompositeConfig(vec![JointConfig(v.to_vec())])
    }

    #[test]
    fn timestamps_increase_and_cost_adds_up() {
        let p = PathPlan::from_waypoints(vec![c(&[0.0, 0.0]), c(&[0.3, 0.0]), c(&[0.3, 0.0]), c(&[0.3, 0.4])], vec![0]);
        assert_eq!(p.waypoints.len(), 3);
        assert!(p.timestamps.windows(2).all(|w| w[1] > w[0]));
        assert!((p.cost - 0.7).abs() < 1e-12);
    }

    #[test]
    fn sample_at_hits_waypoints() {
        let p = PathPlan::from_waypoints(vec![c(&[0.0]), c(&[1.0]), c(&[-0.5])], vec![0]);
        for (w, t) in p.waypoints.iter().zip(&p.timestamps) {
            assert!(p.sample_at(*t).max_joint_delta(w) < 1e-12);
        }
        let mid = p.sample_at(p.timestamps[1] * 0.5);
        assert!((mid.0[0].0[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn concat_shifts_time() {
        let a = PathPlan::from_waypoints(vec![c(&[0.0]), c(&[1.0])], vec![0]);
        let b = PathPlan::from_waypoints(vec![c(&[1.0]), c(&[2.0])], vec![0]);
        let ab = a.concat(&b).unwrap();
        assert_eq!(ab.waypoints.len(), 3);
        assert!((ab.duration() - a.duration() - b.duration()).abs() < 1e-12);
        assert!((ab.cost - a.cost - b.cost).abs() < 1e-12);
        assert!(b.concat(&b).is_err());
    }
}
