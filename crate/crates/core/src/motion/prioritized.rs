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

use super::timing::MAX_JOINT_SPEED;
use super::{plan, MotionError, PathPlan, PlannerConfig, PlanningProblem};
use crate::kinematics::CompositeConfig;

/// One robot's own timed path, started `delay` seconds into the shared timeline.
struct Scheduled {
    robot: usize,
    path: PathPlan,
    delay: f64,
}

impl Scheduled {
    fn end(&self) -> f64 {
        self.delay + self.path.duration()
    }
}

fn at_time(base: &CompositeConfig, schedule: &[Scheduled], t: f64) -> CompositeConfig {
    let mut c = base.clone();
    for s in schedule {
        let q = s.path.sample_at(t - s.delay);
        c.0[s.robot] = q.0[s.robot].clone();
    }
    c
}

fn timeline_clear(problem: &PlanningProblem, base: &CompositeConfig, schedule: &[Scheduled], dt: f64) -> Result<bool, MotionError> {
    let end = schedule.iter().map(Scheduled::end).fold(0.0, f64::max);
    let n = (end / dt).ceil() as usize;
    for i in 0..=n {
        let t = (i as f64 * dt).min(end);
        if problem.world.collision_check(&at_time(base, schedule, t), &problem.ignore_objects)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Plans robots one at a time in `priority_order`.
///
/// Each robot is planned with the robots before it parked at their goals and
/// the robots after it at their starts, then started at the earliest of a few
/// candidate delays whose time-synchronized motion against the robots already
/// scheduled is collision-free. The merged result is sampled densely enough
/// that no joint moves more than the planner resolution between waypoints.
pub fn plan_prioritized(
    problem: &PlanningProblem,
    cfg: &PlannerConfig,
    priority_order: &[usize],
) -> Result<PathPlan, MotionError> {
    let wanted: BTreeSet<usize> = problem.active_robots.iter().copied().collect();
    let given: BTreeSet<usize> = priority_order.iter().copied().collect();
    if wanted != given || given.len() != priority_order.len() {
        return Err(MotionError::InvalidProblem(
            "priority order must be a permutation of the active robots".into(),
        ));
    }
    if priority_order.len() == 1 {
        return plan(problem, cfg);
    }
    problem.check()?;

    let dt = cfg.resolution / MAX_JOINT_SPEED;
    // context: earlier robots at their goals, the rest at their starts
    let mut context = problem.start.clone();
    let mut schedule: Vec<Scheduled> = Vec::new();
    for (k, &r) in priority_order.iter().enumerate() {
        let mut goal = context.clone();
        goal.0[r] = problem.goal.0[r].clone();
        let stage = PlanningProblem {
            world: problem.world.clone(),
            start: context.clone(),
            goal: goal.clone(),
            ignore_objects: problem.ignore_objects.clone(),
            active_robots: vec![r],
        };
        let stage_cfg = cfg.clone().with_seed(cfg.rng_seed.wrapping_add(k as u64));
        let path = plan(&stage, &stage_cfg).map_err(|e| match e {
            MotionError::InfeasibleTimeout { .. } => MotionError::InfeasibleTimeout { robot: Some(r) },
            other => other,
        })?;
        let previous_end = schedule.iter().map(Scheduled::end).fold(0.0, f64::max);
        let mut placed = false;
        for frac in [0.0, 0.25, 0.5, 0.75, 1.0] {
            schedule.push(Scheduled {
                robot: r,
                path: path.clone(),
                delay: previous_end * frac,
            });
            if timeline_clear(problem, &problem.start, &schedule, dt)? {
                placed = true;
                break;
            }
            schedule.pop();
        }
        if !placed {
            return Err(MotionError::InfeasibleTimeout { robot: Some(r) });
        }
        context = goal;
    }

    let end = schedule.iter().map(Scheduled::end).fold(0.0, f64::max);
    let n = (end / dt).ceil() as usize;
    let mut waypoints = Vec::with_capacity(n + 1);
    let mut timestamps = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let t = (i as f64 * dt).min(end);
        if timestamps.last().is_some_and(|&last| t <= last) {
            continue;
        }
        waypoints.push(at_time(&problem.start, &schedule, t));
        timestamps.push(t);
    }
    waypoints[0] = problem.start.clone();
    *waypoints.last_mut().expect("non-empty") = problem.goal.clone();
    Ok(PathPlan::from_timed(waypoints, timestamps, problem.active_robots.clone()))
}
