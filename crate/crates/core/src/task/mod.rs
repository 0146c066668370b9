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

//! Level-one planning: which robot picks which grasp this round.
//!
//! Every policy works on the per-robot lists of reachable grasps and returns a
//! [`JointAction`]. Simultaneous actions are screened by a collision check of
//! the joint grasp and pregrasp configurations; full paths are left to the
//! motion planner.

use std::collections::{BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{CollisionWorld, CompositeConfig, KinematicsError};
use crate::scene::{GraspMap, ReachableGrasp};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TaskError {
    #[error("no robot has a reachable grasp")]
    NoReachableGrasp,
    #[error("grasp map is empty")]
    EmptyMap,
    #[error("policy {policy} supports exactly 2 robots, got {robots}")]
    UnsupportedRobotCount { policy: &'static str, robots: usize },
    #[error("sample budget must be at least 1")]
    InvalidBudget,
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderHint {
    Simultaneous,
    Sequential,
}

/// One grasp (or nothing) per robot for the current round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointAction {
    pub assignments: Vec<Option<ReachableGrasp>>,
    pub order_hint: OrderHint,
}

impl JointAction {
    fn single(n_robots: usize, r: usize, g: ReachableGrasp) -> Self {
        let mut assignments = vec![None; n_robots];
        assignments[r] = Some(g);
        JointAction {
            assignments,
            order_hint: OrderHint::Sequential,
        }
    }

    fn simultaneous(assignments: Vec<Option<ReachableGrasp>>) -> Self {
        let order_hint = if assignments.iter().flatten().count() > 1 {
            OrderHint::Simultaneous
        } else {
            OrderHint::Sequential
        };
        JointAction {
            assignments,
            order_hint,
        }
    }

    /// Robots with an assigned grasp, ascending.
    pub fn active_robots(&self) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&r| self.assignments[r].is_some())
            .collect()
    }

    pub fn n_active(&self) -> usize {
        self.assignments.iter().flatten().count()
    }

    pub fn object_ids(&self) -> Vec<u32> {
        self.assignments.iter().flatten().map(|g| g.object_id()).collect()
    }

    pub fn is_object_disjoint(&self) -> bool {
        let ids = self.object_ids();
        ids.iter().collect::<BTreeSet<_>>().len() == ids.len()
    }

    /// Composite configuration with assigned robots at their grasp (or
    /// pregrasp) configuration and idle robots at `idle`.
    pub fn composite(&self, idle: &CompositeConfig, pregrasp: bool) -> CompositeConfig {
        let mut c = idle.clone();
        for (r, g) in self.assignments.iter().enumerate() {
            if let Some(g) = g {
                let q = if pregrasp { &g.pregrasp_config } else { &g.grasp_config };
                c.set_robot(r, q.clone());
            }
        }
        c
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("action serializes")
    }
}

/// Score of an action under a policy. Lower values are better; feasible
/// actions always order before infeasible ones.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskCost {
    pub value: f64,
    pub feasible: bool,
}

impl TaskCost {
    pub fn rank_cmp(&self, other: &TaskCost) -> std::cmp::Ordering {
        other
            .feasible
            .cmp(&self.feasible)
            .then(self.value.total_cmp(&other.value))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Sequential,
    SplitSpace,
    KinFeasibility,
    DistanceAware,
    QualityAware,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::Sequential,
        PolicyKind::SplitSpace,
        PolicyKind::KinFeasibility,
        PolicyKind::DistanceAware,
        PolicyKind::QualityAware,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Sequential => "sequential",
            PolicyKind::SplitSpace => "split_space",
            PolicyKind::KinFeasibility => "kin_feasibility",
            PolicyKind::DistanceAware => "distance_aware",
            PolicyKind::QualityAware => "quality_aware",
        }
    }
}

/// A policy with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Policy {
    pub kind: PolicyKind,
    /// Combinations drawn per call by `kin_feasibility`.
    pub sample_budget: usize,
    pub rng_seed: u64,
}

impl Default for Policy {
    fn default() -> Self {
        Policy {
            kind: PolicyKind::KinFeasibility,
            sample_budget: 100,
            rng_seed: 0,
        }
    }
}

impl Policy {
    pub fn new(kind: PolicyKind) -> Self {
        Policy {
            kind,
            ..Policy::default()
        }
    }

    pub fn validate(&self) -> Result<(), TaskError> {
        if self.sample_budget == 0 {
            return Err(TaskError::InvalidBudget);
        }
        Ok(())
    }

    /// Seed for round `k`, so that rounds draw independent streams.
    fn round_seed(&self, k: usize) -> u64 {
        self.rng_seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(k as u64)
    }

    /// Up to `max` candidate actions in order of preference, never empty.
    ///
    /// The first entry is what the policy would execute. Later entries are the
    /// retries: further ranked combinations, or fresh draws for
    /// `kin_feasibility`. When the policy has no feasible simultaneous action
    /// the list holds only its sequential fallback.
    pub fn candidates(
        &self,
        map: &GraspMap,
        reachable: &[Vec<ReachableGrasp>],
        world: &CollisionWorld,
        round: usize,
        max: usize,
    ) -> Result<Vec<JointAction>, TaskError> {
        self.validate()?;
        let seed = self.round_seed(round);
        let max = max.max(1);
        let mut out = match self.kind {
            PolicyKind::Sequential => vec![assign_sequential(reachable, seed)?],
            PolicyKind::SplitSpace => vec![assign_split_space(map, reachable, world, seed)?],
            PolicyKind::KinFeasibility => kin_feasible_draws(reachable, world, self.sample_budget, seed, max)?,
            PolicyKind::DistanceAware => ranked_pairs(reachable, world, Ranking::Distance, max)?,
            PolicyKind::QualityAware => ranked_pairs(reachable, world, Ranking::Quality, max)?,
        };
        if out.is_empty() {
            out.push(assign_sequential(reachable, seed)?);
        }
        out.truncate(max);
        Ok(out)
    }

    pub fn assign(
        &self,
        map: &GraspMap,
        reachable: &[Vec<ReachableGrasp>],
        world: &CollisionWorld,
        round: usize,
    ) -> Result<JointAction, TaskError> {
        Ok(self.candidates(map, reachable, world, round, 1)?.remove(0))
    }
}

/// Highest quality first; ties keep the lower index.
fn best_index(grasps: &[ReachableGrasp]) -> Option<usize> {
    (0..grasps.len()).reduce(|best, i| {
        if grasps[i].quality() > grasps[best].quality() {
            i
        } else {
            best
        }
    })
}

/// True when the assigned robots can hold their grasp and pregrasp
/// configurations at the same time, idle robots at home.
pub fn jointly_feasible(action: &JointAction, world: &CollisionWorld) -> Result<bool, TaskError> {
    if !action.is_object_disjoint() {
        return Ok(false);
    }
    if action.n_active() < 2 {
        return Ok(true);
    }
    let ignore: BTreeSet<u32> = action.object_ids().into_iter().collect();
    let home = world.cell().home();
    for pregrasp in [false, true] {
        if world.collision_check(&action.composite(&home, pregrasp), &ignore)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// One robot, drawn uniformly among those with a reachable grasp, takes its best grasp.
pub fn assign_sequential(reachable: &[Vec<ReachableGrasp>], seed: u64) -> Result<JointAction, TaskError> {
    let candidates: Vec<usize> = (0..reachable.len()).filter(|&r| !reachable[r].is_empty()).collect();
    if candidates.is_empty() {
        return Err(TaskError::NoReachableGrasp);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = candidates[rng.random_range(0..candidates.len())];
    let g = reachable[r][best_index(&reachable[r]).expect("non-empty")].clone();
    Ok(JointAction::single(reachable.len(), r, g))
}

/// Index of the robot whose base is nearest to `p`; ties go to the lower index.
pub fn nearest_base(world: &CollisionWorld, p: &nalgebra::Vector3<f64>) -> usize {
    let arms = &world.cell().arms;
    let mut best = (f64::INFINITY, 0);
    for (r, arm) in arms.iter().enumerate() {
        let d = (arm.base_pose.translation() - p).norm();
        if d < best.0 {
            best = (d, r);
        }
    }
    best.1
}

/// Voronoi split of the grasps by nearest robot base. Each robot takes its
/// best reachable grasp inside its own region; if the picks cannot be held
/// together, one of them (seeded choice) goes alone.
pub fn assign_split_space(
    map: &GraspMap,
    reachable: &[Vec<ReachableGrasp>],
    world: &CollisionWorld,
    seed: u64,
) -> Result<JointAction, TaskError> {
    if map.is_empty() {
        return Err(TaskError::EmptyMap);
    }
    let n = reachable.len();
    let mut taken: BTreeSet<u32> = BTreeSet::new();
    let mut assignments: Vec<Option<ReachableGrasp>> = vec![None; n];
    for r in 0..n {
        let owned: Vec<ReachableGrasp> = reachable[r]
            .iter()
            .filter(|g| nearest_base(world, &g.proposal.pose.translation()) == r)
            .filter(|g| !taken.contains(&g.object_id()))
            .cloned()
            .collect();
        if let Some(i) = best_index(&owned) {
            taken.insert(owned[i].object_id());
            assignments[r] = Some(owned[i].clone());
        }
    }
    let action = JointAction::simultaneous(assignments);
    if action.n_active() == 0 {
        return assign_sequential(reachable, seed);
    }
    if jointly_feasible(&action, world)? {
        return Ok(action);
    }
    let active = action.active_robots();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = active[rng.random_range(0..active.len())];
    let g = action.assignments[r].clone().expect("active");
    Ok(JointAction::single(n, r, g))
}

/// Above this many index tuples the product set is sampled by rejection
/// instead of being enumerated.
const ENUMERATION_LIMIT: usize = 200_000;

fn product_size(reachable: &[Vec<ReachableGrasp>]) -> usize {
    reachable
        .iter()
        .try_fold(1usize, |acc, v| acc.checked_mul(v.len()))
        .unwrap_or(usize::MAX)
}

fn combination(reachable: &[Vec<ReachableGrasp>], idx: &[usize]) -> JointAction {
    JointAction::simultaneous(
        idx.iter()
            .enumerate()
            .map(|(r, &i)| Some(reachable[r][i].clone()))
            .collect(),
    )
}

fn disjoint(reachable: &[Vec<ReachableGrasp>], idx: &[usize]) -> bool {
    let mut seen = BTreeSet::new();
    idx.iter()
        .enumerate()
        .all(|(r, &i)| seen.insert(reachable[r][i].object_id()))
}

/// Mixed-radix decoding of `k` into one grasp index per robot (robot 0 most significant).
fn decode(reachable: &[Vec<ReachableGrasp>], mut k: usize) -> Vec<usize> {
    let mut idx = vec![0; reachable.len()];
    for r in (0..reachable.len()).rev() {
        let n = reachable[r].len();
        idx[r] = k % n;
        k /= n;
    }
    idx
}

/// Draws up to `budget` distinct object-disjoint combinations, uniformly and
/// without replacement, and keeps the jointly feasible ones in draw order
/// (at most `keep`).
fn kin_feasible_draws(
    reachable: &[Vec<ReachableGrasp>],
    world: &CollisionWorld,
    budget: usize,
    seed: u64,
    keep: usize,
) -> Result<Vec<JointAction>, TaskError> {
    if reachable.iter().all(Vec::is_empty) {
        return Err(TaskError::NoReachableGrasp);
    }
    let size = product_size(reachable);
    if size == 0 {
        return Ok(vec![]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let accept = |idx: &[usize], out: &mut Vec<JointAction>| -> Result<bool, TaskError> {
        let action = combination(reachable, idx);
        if jointly_feasible(&action, world)? {
            out.push(action);
        }
        Ok(out.len() >= keep)
    };
    if size <= ENUMERATION_LIMIT {
        let mut pool: Vec<usize> = (0..size).filter(|&k| disjoint(reachable, &decode(reachable, k))).collect();
        let draws = budget.min(pool.len());
        let (drawn, _) = pool.partial_shuffle(&mut rng, draws);
        for &k in drawn.iter() {
            if accept(&decode(reachable, k), &mut out)? {
                break;
            }
        }
    } else {
        let mut seen: HashSet<Vec<usize>> = HashSet::new();
        let mut attempts = 0;
        while seen.len() < budget && attempts < 50 * budget {
            attempts += 1;
            let idx: Vec<usize> = reachable.iter().map(|v| rng.random_range(0..v.len())).collect();
            if !disjoint(reachable, &idx) || !seen.insert(idx.clone()) {
                continue;
            }
            if accept(&idx, &mut out)? {
                break;
            }
        }
    }
    Ok(out)
}

/// Samples combinations until one is collision-free; sequential fallback otherwise.
pub fn assign_kin_feasibility(
    reachable: &[Vec<ReachableGrasp>],
    world: &CollisionWorld,
    budget: usize,
    seed: u64,
) -> Result<JointAction, TaskError> {
    if budget == 0 {
        return Err(TaskError::InvalidBudget);
    }
    match kin_feasible_draws(reachable, world, budget, seed, 1)?.into_iter().next() {
        Some(a) => Ok(a),
        None => assign_sequential(reachable, seed),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ranking {
    /// Larger distance between the two grasp points is better.
    Distance,
    /// Larger quality sum is better.
    Quality,
}

impl Ranking {
    pub fn cost(self, a: &ReachableGrasp, b: &ReachableGrasp) -> f64 {
        match self {
            Ranking::Distance => -(a.proposal.pose.translation() - b.proposal.pose.translation()).norm(),
            Ranking::Quality => -(a.quality() + b.quality()),
        }
    }
}

/// All object-disjoint pairs scored and screened, best first. Ties go to the
/// lower (robot-0 index, robot-1 index).
pub fn ranked_pair_costs(
    reachable: &[Vec<ReachableGrasp>],
    world: &CollisionWorld,
    ranking: Ranking,
) -> Result<Vec<((usize, usize), TaskCost)>, TaskError> {
    let mut scored = Vec::new();
    for (i, a) in reachable[0].iter().enumerate() {
        for (j, b) in reachable[1].iter().enumerate() {
            if a.object_id() == b.object_id() {
                continue;
            }
            let action = combination(reachable, &[i, j]);
            let cost = TaskCost {
                value: ranking.cost(a, b),
                feasible: jointly_feasible(&action, world)?,
            };
            scored.push(((i, j), cost));
        }
    }
    scored.sort_by(|x, y| x.1.rank_cmp(&y.1).then(x.0.cmp(&y.0)));
    Ok(scored)
}

fn ranked_pairs(
    reachable: &[Vec<ReachableGrasp>],
    world: &CollisionWorld,
    ranking: Ranking,
    keep: usize,
) -> Result<Vec<JointAction>, TaskError> {
    let policy = match ranking {
        Ranking::Distance => "distance_aware",
        Ranking::Quality => "quality_aware",
    };
    if reachable.len() != 2 {
        return Err(TaskError::UnsupportedRobotCount {
            policy,
            robots: reachable.len(),
        });
    }
    if reachable.iter().all(Vec::is_empty) {
        return Err(TaskError::NoReachableGrasp);
    }
    Ok(ranked_pair_costs(reachable, world, ranking)?
        .into_iter()
        .filter(|(_, c)| c.feasible)
        .take(keep)
        .map(|((i, j), _)| combination(reachable, &[i, j]))
        .collect())
}

/// Feasible pair with the largest grasp-to-grasp distance; sequential fallback otherwise.
pub fn assign_distance_aware(
    reachable: &[Vec<ReachableGrasp>],
    world: &CollisionWorld,
    seed: u64,
) -> Result<JointAction, TaskError> {
    match ranked_pairs(reachable, world, Ranking::Distance, 1)?.into_iter().next() {
        Some(a) => Ok(a),
        None => assign_sequential(reachable, seed),
    }
}

/// Feasible pair with the largest quality sum; sequential fallback otherwise.
pub fn assign_quality_aware(
    reachable: &[Vec<ReachableGrasp>],
    world: &CollisionWorld,
    seed: u64,
) -> Result<JointAction, TaskError> {
    match ranked_pairs(reachable, world, Ranking::Quality, 1)?.into_iter().next() {
        Some(a) => Ok(a),
        None => assign_sequential(reachable, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feasible_orders_first() {
        let a = TaskCost { value: 5.0, feasible: true };
        let b = TaskCost { value: -5.0, feasible: false };
        assert_eq!(a.rank_cmp(&b), std::cmp::Ordering::Less);
        let c = TaskCost { value: 1.0, feasible: true };
        assert_eq!(c.rank_cmp(&a), std::cmp::Ordering::Less);
    }

    #[test]
    fn policy_names_roundtrip() {
        for k in PolicyKind::ALL {
            let json = serde_json::to_string(&k).unwrap();
            assert_eq!(json, format!("\"{}\"", k.name()));
        }
    }
}
