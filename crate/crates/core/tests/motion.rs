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

use binpick::kinematics::layout::{dual_arm_cell, top_down_pose};
use binpick::kinematics::*;
use binpick::motion::*;
use binpick::scene::*;

fn none() -> BTreeSet<u32> {
    BTreeSet::new()
}

fn ik(cell: &Workcell, r: usize, x: f64, y: f64, z: f64) -> JointConfig {
    let arm = &cell.arms[r];
    arm.inverse_kinematics(&top_down_pose(x, y, z, 0.0), &arm.ik_seed())
        .expect("fixture pose reachable")
}

fn with_robot(base: &CompositeConfig, r: usize, q: JointConfig) -> CompositeConfig {
    let mut c = base.clone();
    c.set_robot(r, q);
    c
}

/// Home to pregrasp in a seeded bin. Even seeds move both arms to an
/// object-disjoint pair of pregrasps, odd seeds move one arm.
fn bin_problem(seed: u64) -> Option<PlanningProblem> {
    let cell = dual_arm_cell();
    let scene = generate_scene(Placement::Centred, 6, seed).ok()?;
    let map = propose_grasps(&scene, 3, seed);
    let world = CollisionWorld::new(cell.clone(), scene.obstacles());
    let home = cell.home();
    if seed % 2 == 1 {
        let r = (seed / 2 % 2) as usize;
        let g = reachable_grasps(&world, r, &map).into_iter().next()?;
        let goal = with_robot(&home, r, g.pregrasp_config);
        return Some(PlanningProblem::new(world, home, goal).with_active(vec![r]));
    }
    let g0 = reachable_grasps(&world, 0, &map);
    let g1 = reachable_grasps(&world, 1, &map);
    for a in &g0 {
        for b in g1.iter().filter(|b| b.object_id() != a.object_id()) {
            let goal = with_robot(&with_robot(&home, 0, a.pregrasp_config.clone()), 1, b.pregrasp_config.clone());
            if !world.collision_check(&goal, &none()).unwrap() {
                return Some(PlanningProblem::new(world, home, goal));
            }
        }
    }
    None
}

fn problems(n: usize) -> Vec<PlanningProblem> {
    let out: Vec<_> = (0..).filter_map(bin_problem).take(n).collect();
    assert_eq!(out.len(), n);
    out
}

fn single_arm_problem(seed: u64) -> Option<PlanningProblem> {
    bin_problem(2 * seed + 1)
}

fn endpoints_exact(p: &PathPlan, problem: &PlanningProblem) {
    assert_eq!(p.start(), &problem.start);
    assert_eq!(p.end(), &problem.goal);
}

#[test]
fn start_equal_goal_gives_single_waypoint() {
    let cell = dual_arm_cell();
    let world = CollisionWorld::new(cell.clone(), vec![]);
    for kind in PlannerKind::ALL {
        let p = plan(
            &PlanningProblem::new(world.clone(), cell.home(), cell.home()),
            &PlannerConfig::default().with_kind(kind),
        )
        .unwrap();
        assert_eq!(p.waypoints.len(), 1);
        assert_eq!(p.cost, 0.0);
        assert_eq!(p.timestamps, vec![0.0]);
    }
}

#[test]
fn bit_star_straight_line_two_arms() {
    let cell = dual_arm_cell();
    let world = CollisionWorld::new(cell.clone(), vec![]);
    let start = with_robot(&with_robot(&cell.home(), 0, ik(&cell, 0, -0.1, 0.1, 0.15)), 1, ik(&cell, 1, 0.1, 0.1, 0.15));
    let goal = with_robot(&with_robot(&cell.home(), 0, ik(&cell, 0, -0.2, 0.0, 0.08)), 1, ik(&cell, 1, 0.2, 0.0, 0.08));
    let direct = PathPlan::from_waypoints(vec![start.clone(), goal.clone()], vec![0, 1]);
    assert!(validate_path(&direct, &world, &none(), 0.01).unwrap(), "fixture must be straight-line connectable");
    let straight = start.distance(&goal);
    let p = plan(&PlanningProblem::new(world, start, goal), &PlannerConfig::default()).unwrap();
    assert!(p.cost <= 1.05 * straight, "{} vs {}", p.cost, straight);
}

#[test]
fn goal_inside_bin_wall_is_rejected() {
    let cell = dual_arm_cell();
    let world = CollisionWorld::new(cell.clone(), vec![]);
    let y_wall = cell.bin_region.max[1] + 0.005;
    let goal = with_robot(&cell.home(), 0, ik(&cell, 0, 0.0, y_wall, 0.03));
    let problem = PlanningProblem::new(world, cell.home(), goal).with_active(vec![0]);
    for kind in PlannerKind::ALL {
        let err = plan(&problem, &PlannerConfig::default().with_kind(kind)).unwrap_err();
        assert!(matches!(err, MotionError::InvalidEndpoints(_)), "{err:?}");
    }
}

#[test]
fn inactive_goal_must_equal_start() {
    let cell = dual_arm_cell();
    let world = CollisionWorld::new(cell.clone(), vec![]);
    let goal = with_robot(&cell.home(), 1, ik(&cell, 1, 0.1, 0.0, 0.2));
    let problem = PlanningProblem::new(world, cell.home(), goal).with_active(vec![0]);
    assert!(matches!(
        plan(&problem, &PlannerConfig::default()),
        Err(MotionError::InvalidProblem(_))
    ));
}

#[test]
fn rrt_star_no_worse_than_rrt_on_matched_seeds() {
    let mut wins = 0;
    let mut total = 0;
    for seed in 0.. {
        let Some(problem) = single_arm_problem(seed) else {
            continue;
        };
        let cost = |kind| {
            plan(&problem, &PlannerConfig::default().with_kind(kind).with_seed(seed))
                .map(|p| p.cost)
                .unwrap_or(f64::INFINITY)
        };
        let (star, plain) = (cost(PlannerKind::RrtStar), cost(PlannerKind::Rrt));
        if star <= plain {
            wins += 1;
        }
        total += 1;
        if total == 100 {
            break;
        }
    }
    assert!(wins >= 90, "{wins}/100");
}

#[test]
fn every_returned_plan_validates() {
    let problems = problems(100);
    let mut solved = [0usize; 4];
    for (i, problem) in problems.iter().enumerate() {
        for (k, kind) in PlannerKind::ALL.into_iter().enumerate() {
            let cfg = PlannerConfig::default().with_kind(kind).with_seed(i as u64);
            let Ok(p) = plan(problem, &cfg) else {
                continue;
            };
            solved[k] += 1;
            endpoints_exact(&p, problem);
            assert!(
                validate_path(&p, &problem.world, &problem.ignore_objects, 0.01).unwrap(),
                "{} problem {i}",
                kind.name()
            );
            assert!((p.cost - path_cost(&p)).abs() < 1e-9);
            assert!(p.timestamps.windows(2).all(|w| w[1] > w[0]));
            for w in &p.waypoints {
                for r in (0..2).filter(|r| !problem.active_robots.contains(r)) {
                    assert_eq!(w.robot(r), problem.start.robot(r), "inactive robot moved");
                }
            }
        }
    }
    // BIT* always tries the straight line and then searches the same space
    assert!(solved[3] >= solved[0] && solved[3] >= solved[2], "{solved:?}");
}

#[test]
fn planners_are_deterministic_per_seed() {
    let problems = problems(4);
    for problem in &problems {
        for kind in PlannerKind::ALL {
            let cfg = PlannerConfig {
                time_budget_ms: 60_000.0,
                ..PlannerConfig::default().with_kind(kind).with_seed(11)
            };
            let a = plan(problem, &cfg);
            let b = plan(problem, &cfg);
            assert_eq!(a, b, "{}", kind.name());
        }
    }
}

#[test]
fn bit_star_costs_never_increase() {
    for (i, problem) in problems(30).iter().enumerate() {
        let cfg = PlannerConfig::default().with_seed(i as u64);
        let (p, stats) = plan_with_stats(problem, &cfg).unwrap();
        assert!(!stats.cost_history.is_empty());
        assert!(stats.cost_history.windows(2).all(|w| w[1] <= w[0]), "{:?}", stats.cost_history);
        let last = *stats.cost_history.last().unwrap();
        assert!((p.cost - last).abs() < 1e-6, "{} vs {}", p.cost, last);
        assert!(p.cost >= problem.start.distance(&problem.goal) - 1e-9);
    }
}

#[test]
fn anytime_planners_report_first_solution_time() {
    let problem = single_arm_problem(0).unwrap();
    for kind in [PlannerKind::RrtStar, PlannerKind::BitStar] {
        let (_, stats) = plan_with_stats(&problem, &PlannerConfig::default().with_kind(kind)).unwrap();
        assert!(stats.first_solution_ms.unwrap() <= stats.elapsed_ms);
    }
}

/// Both arms reach for the bin at once; the straight composite motion makes them collide.
fn crossing_problem() -> PlanningProblem {
    let cell = dual_arm_cell();
    let world = CollisionWorld::new(cell.clone(), vec![]);
    let goal = with_robot(&with_robot(&cell.home(), 0, ik(&cell, 0, -0.1, 0.1, 0.15)), 1, ik(&cell, 1, 0.1, 0.1, 0.15));
    PlanningProblem::new(world, cell.home(), goal)
}

#[test]
fn prioritized_resolves_crossing_paths() {
    let problem = crossing_problem();
    let direct = PathPlan::from_waypoints(vec![problem.start.clone(), problem.goal.clone()], vec![0, 1]);
    assert!(!validate_path(&direct, &problem.world, &none(), 0.01).unwrap());
    for order in [[0, 1], [1, 0]] {
        let p = plan_prioritized(&problem, &PlannerConfig::default(), &order).unwrap();
        endpoints_exact(&p, &problem);
        assert!(validate_path(&p, &problem.world, &none(), 0.01).unwrap());
        for w in &p.waypoints {
            assert!(problem.world.arm_arm_clearance(w).unwrap() > CLEARANCE_MARGIN);
        }
        assert!(p.timestamps.windows(2).all(|w| w[1] > w[0]));
    }
}

#[test]
fn prioritized_order_symmetry() {
    let problem = crossing_problem();
    let cfg = PlannerConfig::default();
    let a = plan_prioritized(&problem, &cfg, &[0, 1]).unwrap();
    let b = plan_prioritized(&problem, &cfg, &[1, 0]).unwrap();
    let ratio = a.cost / b.cost;
    assert!((0.9..=1.1).contains(&ratio), "{} vs {}", a.cost, b.cost);
}

#[test]
fn prioritized_single_robot_matches_plan() {
    let problem = single_arm_problem(0).unwrap();
    let cfg = PlannerConfig::default().with_seed(5);
    let r = problem.active_robots[0];
    assert_eq!(plan_prioritized(&problem, &cfg, &[r]), plan(&problem, &cfg));
}

#[test]
fn prioritized_rejects_bad_order() {
    let problem = crossing_problem();
    let cfg = PlannerConfig::default();
    for order in [&[0][..], &[0, 0], &[0, 1, 2]] {
        assert!(matches!(
            plan_prioritized(&problem, &cfg, order),
            Err(MotionError::InvalidProblem(_))
        ));
    }
}

#[test]
fn validate_path_catches_wall_sweep() {
    let cell = dual_arm_cell();
    let world = CollisionWorld::new(cell.clone(), vec![]);
    let y = cell.bin_region.max[1];
    let inside = with_robot(&cell.home(), 0, ik(&cell, 0, 0.0, y - 0.06, 0.03));
    let outside = with_robot(&cell.home(), 0, ik(&cell, 0, 0.0, y + 0.07, 0.03));
    assert!(!world.collision_check(&inside, &none()).unwrap());
    assert!(!world.collision_check(&outside, &none()).unwrap());
    let sweep = PathPlan::from_waypoints(vec![inside.clone(), outside], vec![0]);
    assert!(!validate_path(&sweep, &world, &none(), 0.01).unwrap());
    let still = PathPlan::from_waypoints(vec![inside], vec![0]);
    assert!(validate_path(&still, &world, &none(), 0.01).unwrap());
    let empty = PathPlan::from_timed(vec![], vec![], vec![0]);
    assert_eq!(validate_path(&empty, &world, &none(), 0.01), Err(MotionError::EmptyPath));
}

#[test]
fn path_cost_examples() {
    let cell = dual_arm_cell();
    let home = cell.home();
    assert_eq!(path_cost(&PathPlan::from_waypoints(vec![home.clone()], vec![0])), 0.0);
    let mut q = home.robot(0).clone();
    q.0[2] += 0.3;
    let moved = with_robot(&home, 0, q);
    let p = PathPlan::from_waypoints(vec![home.clone(), moved.clone()], vec![0]);
    assert!((path_cost(&p) - 0.3).abs() < 1e-12);

    let mut q2 = moved.robot(1).clone();
    q2.0[0] -= 0.4;
    q2.0[3] += 0.2;
    let further = with_robot(&moved, 1, q2);
    let p2 = PathPlan::from_waypoints(vec![moved, further], vec![1]);
    let joined = p.concat(&p2).unwrap();
    assert!((path_cost(&joined) - (path_cost(&p) + path_cost(&p2))).abs() < 1e-9);
    assert!((joined.duration() - (p.duration() + p2.duration())).abs() < 1e-9);
    assert!(p2.concat(&p).is_err());
}

#[test]
fn timestamps_respect_speed_cap() {
    let problem = crossing_problem();
    let p = plan(&problem, &PlannerConfig::default()).unwrap();
    for (w, t) in p.waypoints.windows(2).zip(p.timestamps.windows(2)) {
        assert!(w[0].max_joint_delta(&w[1]) <= timing::MAX_JOINT_SPEED * (t[1] - t[0]) + 1e-9);
    }
    assert_eq!(&p.sample_at(p.duration() + 1.0), p.end());
    assert_eq!(&p.sample_at(-1.0), p.start());
}

#[test]
fn path_json_roundtrip() {
    let p = plan(&crossing_problem(), &PlannerConfig::default()).unwrap();
    let back: PathPlan = serde_json::from_str(&p.to_json()).unwrap();
    assert_eq!(back.waypoints, p.waypoints);
    assert_eq!(back.cost, p.cost);
}

#[test]
fn config_validation() {
    let bad = [
        PlannerConfig { step_size: 0.0, ..Default::default() },
        PlannerConfig { goal_bias: 1.0, ..Default::default() },
        PlannerConfig { time_budget_ms: 0.0, ..Default::default() },
        PlannerConfig { batch_size: 0, ..Default::default() },
    ];
    for cfg in bad {
        assert!(cfg.validate().is_err());
    }
    let parsed: PlannerConfig = serde_json::from_str(r#"{"kind":"rrt_connect","rng_seed":3}"#).unwrap();
    assert_eq!(parsed.kind, PlannerKind::RrtConnect);
    assert_eq!(parsed.step_size, PlannerConfig::default().step_size);
}
