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
use binpick::scene::*;
use binpick::task::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn world() -> CollisionWorld {
    CollisionWorld::new(dual_arm_cell(), vec![])
}

/// Top-down grasp for robot `r` at `(x, y)` on the bin floor.
fn grasp(r: usize, id: u32, x: f64, y: f64, quality: f64) -> ReachableGrasp {
    let cell = dual_arm_cell();
    let arm = &cell.arms[r];
    let (z, lift) = (0.03, PREGRASP_HEIGHT);
    let pose = top_down_pose(x, y, z, 0.0);
    let grasp_config = arm.inverse_kinematics(&pose, &arm.ik_seed()).expect("reachable");
    let pregrasp_config = arm
        .inverse_kinematics(&top_down_pose(x, y, z + lift, 0.0), &arm.ik_seed())
        .expect("reachable");
    ReachableGrasp {
        proposal: GraspProposal {
            object_id: id,
            pose,
            quality,
            width: 0.04,
            approach_angle: 0.0,
        },
        tool_pose: pose,
        grasp_config,
        pregrasp_config,
    }
}

/// Independent joint check: both configurations built by hand and run through the workcell checker.
fn oracle_feasible(w: &CollisionWorld, picks: &[(usize, &ReachableGrasp)]) -> bool {
    let ids: BTreeSet<u32> = picks.iter().map(|(_, g)| g.object_id()).collect();
    if ids.len() != picks.len() {
        return false;
    }
    if picks.len() < 2 {
        return true;
    }
    [false, true].into_iter().all(|pre| {
        let mut c = w.cell().home();
        for (r, g) in picks {
            c.set_robot(*r, if pre { g.pregrasp_config.clone() } else { g.grasp_config.clone() });
        }
        !w.collision_check(&c, &ids).unwrap()
    })
}

// Robot 0 reaches right-of-centre (crossing robot 1) except for its last grasp; robot 1 mirrors it.
const LEFT_ARM: [(f64, f64); 5] = [(0.20, 0.0), (0.22, 0.05), (0.21, 0.08), (0.24, -0.02), (-0.22, 0.10)];
const RIGHT_ARM: [(f64, f64); 5] = [(-0.20, 0.0), (-0.22, -0.05), (-0.18, 0.05), (-0.24, 0.02), (0.22, 0.10)];

fn crossing_sets(n: usize) -> Vec<Vec<ReachableGrasp>> {
    let a = LEFT_ARM[5 - n..].iter().enumerate().map(|(i, p)| grasp(0, i as u32, p.0, p.1, 0.8)).collect();
    let b = RIGHT_ARM[5 - n..].iter().enumerate().map(|(i, p)| grasp(1, 10 + i as u32, p.0, p.1, 0.8)).collect();
    vec![a, b]
}

fn clustered_sets() -> Vec<Vec<ReachableGrasp>> {
    let a = LEFT_ARM[..4].iter().enumerate().map(|(i, p)| grasp(0, i as u32, p.0, p.1, 0.8)).collect();
    let b = RIGHT_ARM[..4].iter().enumerate().map(|(i, p)| grasp(1, 10 + i as u32, p.0, p.1, 0.8)).collect();
    vec![a, b]
}

#[test]
fn sequential_only_candidate() {
    let g = grasp(1, 3, 0.1, 0.0, 0.8);
    for seed in 0..20 {
        let a = assign_sequential(&[vec![], vec![g.clone()]], seed).unwrap();
        assert_eq!(a.assignments[0], None);
        assert_eq!(a.assignments[1].as_ref(), Some(&g));
        assert_eq!(a.order_hint, OrderHint::Sequential);
    }
    assert_eq!(assign_sequential(&[vec![], vec![]], 0), Err(TaskError::NoReachableGrasp));
}

#[test]
fn sequential_robot_frequency() {
    let sets = vec![vec![grasp(0, 1, -0.1, 0.0, 0.8)], vec![grasp(1, 2, 0.1, 0.0, 0.8)]];
    let zero = (0..1000)
        .filter(|&s| assign_sequential(&sets, s).unwrap().assignments[0].is_some())
        .count();
    let f = zero as f64 / 1000.0;
    assert!((f - 0.5).abs() <= 0.05, "{f}");
}

#[test]
fn sequential_takes_best_quality() {
    let sets = vec![vec![grasp(0, 1, -0.1, 0.0, 0.4), grasp(0, 2, -0.15, 0.05, 0.9)], vec![]];
    let a = assign_sequential(&sets, 4).unwrap();
    assert_eq!(a.assignments[0].as_ref().unwrap().quality(), 0.9);
}

#[test]
fn split_space_midpoint_goes_to_lower_index() {
    let w = world();
    let b0 = w.cell().arms[0].base_pose.translation();
    let b1 = w.cell().arms[1].base_pose.translation();
    assert_eq!(nearest_base(&w, &((b0 + b1) * 0.5)), 0);
    assert_eq!(nearest_base(&w, &(b0 * 0.4 + b1 * 0.6)), 1);
}

fn map_of(sets: &[Vec<ReachableGrasp>]) -> GraspMap {
    let proposals: Vec<GraspProposal> = sets.iter().flatten().map(|g| g.proposal.clone()).collect();
    GraspMap {
        per_object_count: proposals.len(),
        proposals,
    }
}

#[test]
fn split_space_one_sided() {
    let w = world();
    // every grasp left of centre: nearer robot 0
    let sets = vec![
        vec![grasp(0, 1, -0.22, 0.10, 0.7), grasp(0, 2, -0.15, 0.0, 0.9)],
        vec![grasp(1, 1, -0.2, 0.0, 0.95)],
    ];
    let a = assign_split_space(&map_of(&sets), &sets, &w, 0).unwrap();
    assert_eq!(a.assignments[1], None);
    assert_eq!(a.assignments[0].as_ref().unwrap().object_id(), 2);
    assert_eq!(a.order_hint, OrderHint::Sequential);
}

#[test]
fn split_space_opposite_sides() {
    let w = world();
    let sets = vec![vec![grasp(0, 1, -0.22, 0.10, 0.7)], vec![grasp(1, 2, 0.22, 0.10, 0.8)]];
    let a = assign_split_space(&map_of(&sets), &sets, &w, 0).unwrap();
    assert_eq!(a.order_hint, OrderHint::Simultaneous);
    assert_eq!(a.n_active(), 2);
    let picks: Vec<(usize, &ReachableGrasp)> = a.assignments.iter().enumerate().filter_map(|(r, g)| g.as_ref().map(|g| (r, g))).collect();
    assert!(oracle_feasible(&w, &picks));
    assert_eq!(assign_split_space(&GraspMap::default(), &sets, &w, 0), Err(TaskError::EmptyMap));
}

#[test]
fn split_space_colliding_picks_go_one_at_a_time() {
    let w = world();
    // each side's best grasp lies in the other's reach, crossing over the centre line
    let sets = vec![vec![grasp(0, 1, -0.02, 0.0, 0.9)], vec![grasp(1, 2, 0.02, 0.05, 0.9)]];
    let both: Vec<(usize, &ReachableGrasp)> = vec![(0, &sets[0][0]), (1, &sets[1][0])];
    assert!(!oracle_feasible(&w, &both), "fixture must collide");
    let a = assign_split_space(&map_of(&sets), &sets, &w, 3).unwrap();
    assert_eq!(a.n_active(), 1);
    assert_eq!(a.order_hint, OrderHint::Sequential);
}

#[test]
fn kin_single_combination() {
    let w = world();
    let sets = crossing_sets(1);
    let a = assign_kin_feasibility(&sets, &w, 1, 0).unwrap();
    assert_eq!(a.order_hint, OrderHint::Simultaneous);
    assert_eq!(a.assignments[0].as_ref(), Some(&sets[0][0]));
    assert_eq!(a.assignments[1].as_ref(), Some(&sets[1][0]));
}

#[test]
fn kin_all_colliding_falls_back() {
    let w = world();
    let sets = clustered_sets();
    for i in 0..4 {
        for j in 0..4 {
            assert!(!oracle_feasible(&w, &[(0, &sets[0][i]), (1, &sets[1][j])]));
        }
    }
    let a = assign_kin_feasibility(&sets, &w, 100, 5).unwrap();
    assert_eq!(a.n_active(), 1);
    assert_eq!(a.order_hint, OrderHint::Sequential);
}

#[test]
fn kin_finds_the_one_feasible_of_25() {
    let w = world();
    let sets = crossing_sets(5);
    let mut feasible = vec![];
    for i in 0..5 {
        for j in 0..5 {
            if oracle_feasible(&w, &[(0, &sets[0][i]), (1, &sets[1][j])]) {
                feasible.push((i, j));
            }
        }
    }
    assert_eq!(feasible, vec![(4, 4)]);
    for seed in 0..20 {
        let a = assign_kin_feasibility(&sets, &w, 25, seed).unwrap();
        assert_eq!(a.assignments[0].as_ref(), Some(&sets[0][4]));
        assert_eq!(a.assignments[1].as_ref(), Some(&sets[1][4]));
    }
    assert_eq!(assign_kin_feasibility(&sets, &w, 0, 0), Err(TaskError::InvalidBudget));
}

#[test]
fn distance_prefers_far_pair() {
    let w = world();
    let sets = vec![
        vec![grasp(0, 1, -0.22, 0.10, 0.8), grasp(0, 2, -0.05, 0.10, 0.8)],
        vec![grasp(1, 3, 0.22, 0.10, 0.8)],
    ];
    assert!(oracle_feasible(&w, &[(0, &sets[0][0]), (1, &sets[1][0])]));
    assert!(oracle_feasible(&w, &[(0, &sets[0][1]), (1, &sets[1][0])]));
    let a = assign_distance_aware(&sets, &w, 0).unwrap();
    assert_eq!(a.assignments[0].as_ref().unwrap().object_id(), 1);
}

#[test]
fn distance_skips_colliding_best() {
    let w = world();
    let sets = vec![
        vec![grasp(0, 1, 0.24, -0.02, 0.8), grasp(0, 2, -0.22, 0.10, 0.8)],
        vec![grasp(1, 3, -0.24, 0.02, 0.8), grasp(1, 4, 0.22, 0.10, 0.8)],
    ];
    assert!(!oracle_feasible(&w, &[(0, &sets[0][0]), (1, &sets[1][0])]));
    assert!(oracle_feasible(&w, &[(0, &sets[0][1]), (1, &sets[1][1])]));
    let ranked = ranked_pair_costs(&sets, &w, Ranking::Distance).unwrap();
    // the crossing pair is the farthest apart but ranks behind the feasible one
    assert_eq!(ranked[0].0, (1, 1));
    let a = assign_distance_aware(&sets, &w, 0).unwrap();
    assert_eq!(a.object_ids(), vec![2, 4]);
}

#[test]
fn one_empty_set_falls_back_to_other_robot() {
    let w = world();
    let sets = vec![vec![], vec![grasp(1, 4, 0.22, 0.10, 0.8)]];
    for a in [
        assign_distance_aware(&sets, &w, 0).unwrap(),
        assign_quality_aware(&sets, &w, 0).unwrap(),
        assign_kin_feasibility(&sets, &w, 10, 0).unwrap(),
    ] {
        assert_eq!(a.active_robots(), vec![1]);
    }
}

fn quality_sets(q0: [f64; 2], q1: [f64; 2], ids: [u32; 4]) -> Vec<Vec<ReachableGrasp>> {
    vec![
        vec![grasp(0, ids[0], -0.22, 0.10, q0[0]), grasp(0, ids[1], -0.15, 0.05, q0[1])],
        vec![grasp(1, ids[2], 0.22, 0.10, q1[0]), grasp(1, ids[3], 0.15, 0.05, q1[1])],
    ]
}

#[test]
fn quality_argmax() {
    let w = world();
    let sets = quality_sets([0.9, 0.5], [0.8, 0.7], [1, 2, 3, 4]);
    let a = assign_quality_aware(&sets, &w, 0).unwrap();
    assert_eq!(a.object_ids(), vec![1, 3]);
}

#[test]
fn quality_respects_disjointness() {
    let w = world();
    // the 0.9 and 0.8 grasps are on the same object
    let sets = quality_sets([0.9, 0.5], [0.8, 0.7], [1, 2, 1, 4]);
    let a = assign_quality_aware(&sets, &w, 0).unwrap();
    assert!(a.is_object_disjoint());
    assert_eq!(a.object_ids(), vec![1, 4]);
}

#[test]
fn quality_tie_breaks_by_index() {
    let w = world();
    let sets = quality_sets([0.8, 0.8], [0.7, 0.7], [1, 2, 3, 4]);
    let a = assign_quality_aware(&sets, &w, 0).unwrap();
    assert_eq!(a.object_ids(), vec![1, 3]);
}

#[test]
fn pair_policies_need_two_robots() {
    let w = world();
    let sets = vec![vec![grasp(0, 1, -0.22, 0.10, 0.8)]];
    assert!(matches!(
        assign_quality_aware(&sets, &w, 0),
        Err(TaskError::UnsupportedRobotCount { .. })
    ));
}

/// Reachable sets from a seeded bin, each cut to at most five random grasps.
fn small_instance(seed: u64) -> (GraspMap, Vec<Vec<ReachableGrasp>>, CollisionWorld) {
    let scene = generate_scene(Placement::Centred, 6, seed).unwrap();
    let map = propose_grasps(&scene, 2, seed);
    let w = CollisionWorld::new(dual_arm_cell(), scene.obstacles());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sets = (0..2)
        .map(|r| {
            let mut g = reachable_grasps(&w, r, &map);
            g.shuffle(&mut rng);
            g.truncate(1 + seed as usize % 5);
            g
        })
        .collect();
    (map, sets, w)
}

fn brute_force(sets: &[Vec<ReachableGrasp>], w: &CollisionWorld, ranking: Ranking) -> Option<(usize, usize)> {
    let mut best: Option<((usize, usize), f64)> = None;
    for i in 0..sets[0].len() {
        for j in 0..sets[1].len() {
            if !oracle_feasible(w, &[(0, &sets[0][i]), (1, &sets[1][j])]) {
                continue;
            }
            let score = match ranking {
                Ranking::Distance => (sets[0][i].proposal.pose.translation() - sets[1][j].proposal.pose.translation()).norm(),
                Ranking::Quality => sets[0][i].quality() + sets[1][j].quality(),
            };
            // strict improvement keeps the earliest (i, j) on ties
            if best.is_none_or(|(_, s)| score > s) {
                best = Some(((i, j), score));
            }
        }
    }
    best.map(|(ij, _)| ij)
}

#[test]
fn pair_policies_match_brute_force() {
    let mut checked = 0;
    let mut with_pair = 0;
    for seed in 0..220 {
        let (_, sets, w) = small_instance(seed);
        if sets.iter().all(Vec::is_empty) {
            continue;
        }
        checked += 1;
        for ranking in [Ranking::Distance, Ranking::Quality] {
            let a = match ranking {
                Ranking::Distance => assign_distance_aware(&sets, &w, seed).unwrap(),
                Ranking::Quality => assign_quality_aware(&sets, &w, seed).unwrap(),
            };
            match brute_force(&sets, &w, ranking) {
                Some((i, j)) => {
                    with_pair += 1;
                    assert_eq!(a.assignments[0].as_ref(), Some(&sets[0][i]), "seed {seed}");
                    assert_eq!(a.assignments[1].as_ref(), Some(&sets[1][j]), "seed {seed}");
                }
                None => assert_eq!(a.n_active(), 1, "seed {seed}"),
            }
        }
    }
    assert!(checked >= 200, "{checked}");
    assert!(with_pair >= 100, "{with_pair}");
}

#[test]
fn all_policies_disjoint_sound_total_deterministic() {
    for seed in 0..60 {
        let (map, sets, w) = small_instance(seed);
        if sets.iter().all(Vec::is_empty) {
            continue;
        }
        for kind in PolicyKind::ALL {
            let policy = Policy {
                kind,
                sample_budget: 20,
                rng_seed: seed,
            };
            let cands = policy.candidates(&map, &sets, &w, 2, 4).unwrap();
            assert!(!cands.is_empty());
            assert_eq!(cands, policy.candidates(&map, &sets, &w, 2, 4).unwrap());
            for a in &cands {
                assert!(a.n_active() >= 1);
                assert!(a.is_object_disjoint());
                let picks: Vec<(usize, &ReachableGrasp)> =
                    a.assignments.iter().enumerate().filter_map(|(r, g)| g.as_ref().map(|g| (r, g))).collect();
                if a.order_hint == OrderHint::Simultaneous {
                    assert!(oracle_feasible(&w, &picks), "{} seed {seed}", kind.name());
                }
                for (r, g) in picks {
                    assert!(sets[r].contains(g));
                }
            }
        }
    }
}

#[test]
fn retries_are_distinct_and_ranked() {
    for seed in 0..30 {
        let (map, sets, w) = small_instance(seed);
        if sets.iter().any(Vec::is_empty) {
            continue;
        }
        let cands = Policy::new(PolicyKind::QualityAware).candidates(&map, &sets, &w, 0, 10).unwrap();
        let sums: Vec<f64> = cands.iter().map(|a| a.assignments.iter().flatten().map(|g| g.quality()).sum()).collect();
        if cands[0].n_active() == 2 {
            assert!(sums.windows(2).all(|s| s[1] <= s[0] + 1e-12));
        }
        for (i, a) in cands.iter().enumerate() {
            assert!(!cands[..i].contains(a));
        }
    }
}

#[test]
fn action_json_roundtrip() {
    let sets = crossing_sets(1);
    let a = assign_kin_feasibility(&sets, &world(), 1, 0).unwrap();
    let back: JointAction = serde_json::from_str(&a.to_json()).unwrap();
    assert_eq!(back, a);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn quality_selection_scale_invariant(seed in 0u64..400, lambda in 0.05f64..20.0) {
        let (_, sets, w) = small_instance(seed);
        prop_assume!(sets.iter().all(|s| !s.is_empty()));
        let scaled: Vec<Vec<ReachableGrasp>> = sets
            .iter()
            .map(|s| s.iter().cloned().map(|mut g| { g.proposal.quality *= lambda; g }).collect())
            .collect();
        let a = assign_quality_aware(&sets, &w, seed).unwrap();
        let b = assign_quality_aware(&scaled, &w, seed).unwrap();
        let ids = |x: &JointAction| x.assignments.iter().map(|g| g.as_ref().map(|g| g.proposal.pose.translation())).collect::<Vec<_>>();
        prop_assert_eq!(ids(&a), ids(&b));
    }
}
