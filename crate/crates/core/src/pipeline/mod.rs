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

//! The grasp-round loop: propose grasps, assign them, plan motions, execute,
//! collect rewards, and repeat until the bin is empty.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{Attachment, CollisionWorld, CompositeConfig, KinematicsError, Workcell};
use crate::motion::{self, MotionError, PathPlan, PlannerConfig, PlanningProblem};
use crate::scene::{propose_grasps, reachable_grasps, BinScene, ReachableGrasp, SceneError, STACK_INFLATION};
use crate::task::{assign_sequential, JointAction, OrderHint, Policy, TaskError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("assigned robots {assigned:?} differ from path robots {planned:?}")]
    PathActionMismatch { assigned: Vec<usize>, planned: Vec<usize> },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error(transparent)]
    Motion(#[from] MotionError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanningMode {
    /// All assigned arms as one composite robot.
    Composite,
    /// One arm at a time in robot-index order.
    Prioritized,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuccessModel {
    /// A grasp succeeds iff its path is valid and its quality reaches the threshold.
    Deterministic,
    /// A grasp on a valid path succeeds with probability equal to its quality.
    Stochastic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub policy: Policy,
    pub planner: PlannerConfig,
    pub planning_mode: PlanningMode,
    pub max_rounds: usize,
    /// Ranked alternatives tried after the first action fails to plan.
    pub p1_retry_limit: usize,
    pub success_model: SuccessModel,
    pub rng_seed: u64,
    /// Grasp proposals per object.
    pub grasps_per_object: usize,
    /// Quality below which a grasp fails under the deterministic model;
    /// such grasps are only offered to the policy when nothing better is reachable.
    pub min_quality: f64,
    /// Consecutive rounds without a pick after which the episode stops.
    pub abort_limit: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            policy: Policy::default(),
            planner: PlannerConfig {
                time_budget_ms: 200.0,
                sample_budget: 1000,
                ..PlannerConfig::default()
            },
            planning_mode: PlanningMode::Composite,
            max_rounds: 50,
            p1_retry_limit: 3,
            success_model: SuccessModel::Deterministic,
            rng_seed: 0,
            grasps_per_object: 3,
            min_quality: 0.5,
            abort_limit: 3,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.max_rounds == 0 || self.p1_retry_limit == 0 || self.abort_limit == 0 || self.grasps_per_object == 0 {
            return Err(PipelineError::InvalidConfig(
                "max_rounds, p1_retry_limit, abort_limit and grasps_per_object must be positive".into(),
            ));
        }
        self.policy.validate()?;
        self.planner.validate()?;
        Ok(())
    }
}

/// The three legs of a round. Idle robots stay at home throughout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundPaths {
    /// Home, pregrasp, then a straight approach to the grasp.
    pub to_grasp: PathPlan,
    /// Straight lift back to the pregrasp, then to the drop configuration, objects attached.
    pub to_drop: PathPlan,
    /// Drop back to home with empty grippers.
    pub to_home: PathPlan,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundOutcome {
    Executed,
    NoReachableGrasp,
    MotionFailed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraspRound {
    pub index: usize,
    pub outcome: RoundOutcome,
    pub action: Option<JointAction>,
    pub paths: Option<RoundPaths>,
    /// Per robot; `None` for idle robots.
    pub rewards: Vec<Option<u8>>,
    /// Actions tried before one planned (1 = first choice).
    pub attempts: usize,
    pub task_ms: f64,
    pub motion_ms: f64,
    pub total_ms: f64,
}

impl GraspRound {
    pub fn picks(&self) -> usize {
        self.rewards.iter().flatten().map(|&r| r as usize).sum()
    }

    /// Robots that moved this round.
    pub fn robots_used(&self) -> usize {
        match (&self.outcome, &self.action) {
            (RoundOutcome::Executed, Some(a)) => a.n_active(),
            _ => 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub rounds: Vec<GraspRound>,
    pub initial_scene: BinScene,
    pub cleared: bool,
    pub total_picks: usize,
    /// Rounds by number of robots that moved.
    pub robots_used_histogram: BTreeMap<usize, usize>,
    /// Stopped on the abort limit rather than by clearing the bin or running out of rounds.
    pub aborted: bool,
}

impl EpisodeLog {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("episode serializes")
    }

    /// One JSON object per round.
    pub fn write_jsonl(&self, mut out: impl Write) -> Result<(), PipelineError> {
        for r in &self.rounds {
            serde_json::to_writer(&mut out, r).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

fn mix(a: u64, b: u64) -> u64 {
    a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_add(0xD1B5_4A32_D192_ED03).rotate_left(23)
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Straight segment between two composite configurations.
fn straight(a: CompositeConfig, b: CompositeConfig, active: Vec<usize>) -> PathPlan {
    PathPlan::from_waypoints(vec![a, b], active)
}

fn drop_composite(cell: &Workcell, action: &JointAction) -> CompositeConfig {
    let mut c = cell.home();
    for r in action.active_robots() {
        c.set_robot(r, cell.arms[r].drop_config());
    }
    c
}

/// Objects of `action` attached to their grippers at the grasp configuration.
fn attachments(scene: &BinScene, cell: &Workcell, action: &JointAction) -> Result<Vec<Attachment>, PipelineError> {
    let mut out = Vec::new();
    for (r, g) in action.assignments.iter().enumerate() {
        let Some(g) = g else { continue };
        let obj = scene.object(g.object_id()).ok_or(SceneError::UnknownObject(g.object_id()))?;
        let tool = cell.arms[r].forward_kinematics(&g.grasp_config)?;
        let displaces = scene
            .live()
            .filter(|o| o.id != obj.id && o.pose.translation().z > obj.pose.translation().z && o.footprints_overlap(obj, STACK_INFLATION))
            .map(|o| o.id)
            .collect();
        out.push(Attachment {
            robot: r,
            id: obj.id,
            shape: obj.shape.clone(),
            offset: tool.inverse().compose(&obj.pose),
            displaces,
        });
    }
    Ok(out)
}

/// The worlds each leg is checked in.
struct LegWorlds {
    /// Everything in the bin; targets ignored while the grippers are at them.
    full: CollisionWorld,
    /// Targets lifted out of the bin and carried.
    carrying: CollisionWorld,
    targets: BTreeSet<u32>,
}

fn leg_worlds(scene: &BinScene, cell: &Workcell, action: &JointAction) -> Result<LegWorlds, PipelineError> {
    let targets: BTreeSet<u32> = action.object_ids().into_iter().collect();
    let rest: Vec<_> = scene.live().filter(|o| !targets.contains(&o.id)).map(|o| o.obstacle()).collect();
    Ok(LegWorlds {
        full: CollisionWorld::new(cell.clone(), scene.obstacles()),
        carrying: CollisionWorld::new(cell.clone(), rest).with_attachments(attachments(scene, cell, action)?),
        targets,
    })
}

fn plan_leg(
    world: &CollisionWorld,
    start: CompositeConfig,
    goal: CompositeConfig,
    ignore: &BTreeSet<u32>,
    active: &[usize],
    cfg: &PipelineConfig,
    seed: u64,
) -> Result<PathPlan, MotionError> {
    let problem = PlanningProblem::new(world.clone(), start, goal)
        .with_active(active.to_vec())
        .with_ignored(ignore.clone());
    // one retry with a fresh seed
    let mut last = MotionError::InfeasibleTimeout { robot: None };
    for attempt in 0..2 {
        let planner = cfg.planner.clone().with_seed(mix(seed, attempt));
        let result = match cfg.planning_mode {
            PlanningMode::Composite => motion::plan(&problem, &planner),
            PlanningMode::Prioritized => motion::plan_prioritized(&problem, &planner, active),
        };
        match result {
            Ok(p) => return Ok(p),
            Err(e @ MotionError::InfeasibleTimeout { .. }) => last = e,
            Err(e) => return Err(e),
        }
    }
    Err(last)
}

/// Plans all legs of `action`. `Err` means this action cannot be carried out.
pub fn plan_round(
    scene: &BinScene,
    cell: &Workcell,
    action: &JointAction,
    cfg: &PipelineConfig,
    seed: u64,
) -> Result<RoundPaths, PipelineError> {
    let active = action.active_robots();
    let worlds = leg_worlds(scene, cell, action)?;
    let res = cfg.planner.resolution;
    let none = BTreeSet::new();
    let home = cell.home();
    let pregrasp = action.composite(&home, true);
    let grasp = action.composite(&home, false);
    let drop = drop_composite(cell, action);

    let approach = straight(pregrasp.clone(), grasp.clone(), active.clone());
    let lift = straight(grasp, pregrasp.clone(), active.clone());
    // cheap straight-line checks first: a covered object cannot be lifted out
    // and a failed grasp leaves the object in place, so the lift must clear
    // the bin both ways
    let straight_ok = motion::validate_path(&approach, &worlds.full, &worlds.targets, res)?
        && motion::validate_path(&lift, &worlds.carrying, &none, res)?
        && motion::validate_path(&lift, &worlds.full, &worlds.targets, res)?;
    if !straight_ok {
        return Err(MotionError::InfeasibleTimeout { robot: None }.into());
    }
    let reach = plan_leg(&worlds.full, home.clone(), pregrasp.clone(), &worlds.targets, &active, cfg, mix(seed, 1))?;
    let carry = plan_leg(&worlds.carrying, pregrasp, drop.clone(), &none, &active, cfg, mix(seed, 2))?;
    if !motion::validate_path(&carry, &worlds.full, &worlds.targets, res)? {
        return Err(MotionError::InfeasibleTimeout { robot: None }.into());
    }
    let to_home = plan_leg(&worlds.full, drop, home, &none, &active, cfg, mix(seed, 3))?;
    Ok(RoundPaths {
        to_grasp: reach.concat(&approach)?,
        to_drop: lift.concat(&carry)?,
        to_home,
    })
}

/// Re-validates every leg and draws the per-robot rewards.
pub fn execute(
    paths: &RoundPaths,
    action: &JointAction,
    scene: &BinScene,
    cell: &Workcell,
    cfg: &PipelineConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Option<u8>>, PipelineError> {
    let assigned = action.active_robots();
    for leg in [&paths.to_grasp, &paths.to_drop, &paths.to_home] {
        if leg.active_robots != assigned {
            return Err(PipelineError::PathActionMismatch {
                assigned,
                planned: leg.active_robots.clone(),
            });
        }
    }
    let worlds = leg_worlds(scene, cell, action)?;
    let res = cfg.planner.resolution;
    let none = BTreeSet::new();
    let valid = motion::validate_path(&paths.to_grasp, &worlds.full, &worlds.targets, res)?
        && motion::validate_path(&paths.to_drop, &worlds.carrying, &none, res)?
        && motion::validate_path(&paths.to_drop, &worlds.full, &worlds.targets, res)?
        && motion::validate_path(&paths.to_home, &worlds.full, &none, res)?;
    Ok(action
        .assignments
        .iter()
        .map(|g| g.as_ref().map(|g| grasp_reward(cfg, g.quality(), valid, rng)))
        .collect())
}

/// Reward of one grasp under `cfg.success_model`. The stochastic model draws
/// from `rng` only when the path was valid.
pub fn grasp_reward(cfg: &PipelineConfig, quality: f64, path_valid: bool, rng: &mut impl Rng) -> u8 {
    let ok = path_valid
        && match cfg.success_model {
            SuccessModel::Deterministic => quality >= cfg.min_quality,
            SuccessModel::Stochastic => rng.random::<f64>() < quality,
        };
    ok as u8
}

fn leg_min_clearance(world: &CollisionWorld, path: &PathPlan, resolution: f64) -> Result<f64, PipelineError> {
    let mut best = f64::INFINITY;
    for w in path.waypoints.windows(2) {
        let step = w[0]
            .0
            .iter()
            .zip(&w[1].0)
            .flat_map(|(a, b)| a.0.iter().zip(&b.0).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max);
        let n = ((step / resolution).ceil() as usize).max(1);
        for i in 0..n {
            best = best.min(world.arm_arm_clearance(&w[0].lerp(&w[1], i as f64 / n as f64))?);
        }
    }
    if let Some(last) = path.waypoints.last() {
        best = best.min(world.arm_arm_clearance(last)?);
    }
    Ok(best)
}

/// Smallest arm-arm distance along the three legs of an executed round,
/// carried objects included on the way to the drop.
pub fn round_min_clearance(
    scene: &BinScene,
    cell: &Workcell,
    action: &JointAction,
    paths: &RoundPaths,
    resolution: f64,
) -> Result<f64, PipelineError> {
    let worlds = leg_worlds(scene, cell, action)?;
    Ok(leg_min_clearance(&worlds.full, &paths.to_grasp, resolution)?
        .min(leg_min_clearance(&worlds.carrying, &paths.to_drop, resolution)?)
        .min(leg_min_clearance(&worlds.full, &paths.to_home, resolution)?))
}

/// Per-robot reachable grasps, preferring those at or above `min_quality`.
pub fn reachable_sets(world: &CollisionWorld, scene: &BinScene, cfg: &PipelineConfig, k: usize) -> (crate::scene::GraspMap, Vec<Vec<ReachableGrasp>>) {
    let map = propose_grasps(scene, cfg.grasps_per_object, mix(cfg.rng_seed, k as u64));
    let all: Vec<Vec<ReachableGrasp>> = (0..world.cell().n_arms()).map(|r| reachable_grasps(world, r, &map)).collect();
    let good: Vec<Vec<ReachableGrasp>> = all
        .iter()
        .map(|v| v.iter().filter(|g| g.quality() >= cfg.min_quality).cloned().collect())
        .collect();
    if good.iter().any(|v| !v.is_empty()) {
        (map, good)
    } else {
        (map, all)
    }
}

/// Last resorts once the policy's own candidates fail to plan: the sequential
/// pick first, then each robot's best grasps on other objects.
fn single_robot_fallbacks(
    reachable: &[Vec<ReachableGrasp>],
    seed: u64,
    max: usize,
) -> Result<Vec<JointAction>, PipelineError> {
    let first = assign_sequential(reachable, seed)?;
    let mut out = vec![first];
    let mut grasps: Vec<(usize, usize)> = (0..reachable.len())
        .flat_map(|r| (0..reachable[r].len()).map(move |i| (r, i)))
        .collect();
    // stable: equal qualities keep robot then grasp order
    grasps.sort_by(|a, b| reachable[b.0][b.1].quality().total_cmp(&reachable[a.0][a.1].quality()));
    let mut tried: BTreeSet<u32> = out[0].object_ids().into_iter().collect();
    for (r, i) in grasps {
        if out.len() >= max {
            break;
        }
        let g = &reachable[r][i];
        if tried.insert(g.object_id()) {
            let mut assignments = vec![None; reachable.len()];
            assignments[r] = Some(g.clone());
            out.push(JointAction {
                assignments,
                order_hint: OrderHint::Sequential,
            });
        }
    }
    Ok(out)
}

/// One grasp round on `scene`; returns the log entry and the scene after it.
pub fn run_round(
    scene: &BinScene,
    cell: &Workcell,
    cfg: &PipelineConfig,
    k: usize,
) -> Result<(GraspRound, BinScene), PipelineError> {
    let started = Instant::now();
    let n = cell.n_arms();
    let round_seed = mix(cfg.rng_seed, k as u64);

    let t = Instant::now();
    let world = CollisionWorld::new(cell.clone(), scene.obstacles());
    let (map, reachable) = reachable_sets(&world, scene, cfg, k);
    let mut candidates = match cfg.policy.candidates(&map, &reachable, &world, k, 1 + cfg.p1_retry_limit) {
        Ok(c) => c,
        Err(TaskError::NoReachableGrasp) => {
            let round = GraspRound {
                index: k,
                outcome: RoundOutcome::NoReachableGrasp,
                action: None,
                paths: None,
                rewards: vec![None; n],
                attempts: 0,
                task_ms: ms_since(t),
                motion_ms: 0.0,
                total_ms: 0.0,
            };
            let total_ms = ms_since(started).max(round.task_ms);
            return Ok((GraspRound { total_ms, ..round }, scene.clone()));
        }
        Err(e) => return Err(e.into()),
    };
    for single in single_robot_fallbacks(&reachable, round_seed, cfg.p1_retry_limit + 1)? {
        if !candidates.contains(&single) {
            candidates.push(single);
        }
    }
    let task_ms = ms_since(t);

    let mut motion_ms = 0.0;
    let mut planned = None;
    let mut attempts = 0;
    for (i, action) in candidates.into_iter().enumerate() {
        attempts = i + 1;
        let t = Instant::now();
        let result = plan_round(scene, cell, &action, cfg, mix(round_seed, i as u64));
        motion_ms += ms_since(t);
        match result {
            Ok(paths) => {
                planned = Some((action, paths));
                break;
            }
            Err(PipelineError::Motion(MotionError::InfeasibleTimeout { .. } | MotionError::InvalidEndpoints(_))) => {}
            Err(e) => return Err(e),
        }
    }

    let Some((action, paths)) = planned else {
        let total_ms = ms_since(started).max(task_ms + motion_ms);
        let round = GraspRound {
            index: k,
            outcome: RoundOutcome::MotionFailed,
            action: None,
            paths: None,
            rewards: vec![None; n],
            attempts,
            task_ms,
            motion_ms,
            total_ms,
        };
        return Ok((round, scene.clone()));
    };

    let mut rng = ChaCha8Rng::seed_from_u64(mix(round_seed, 0xE7EC));
    let rewards = execute(&paths, &action, scene, cell, cfg, &mut rng)?;
    let mut next = scene.clone();
    for (g, r) in action.assignments.iter().zip(&rewards) {
        if let (Some(g), Some(1)) = (g, r) {
            next = next.remove_object(g.object_id())?;
        }
    }
    let total_ms = ms_since(started).max(task_ms + motion_ms);
    Ok((
        GraspRound {
            index: k,
            outcome: RoundOutcome::Executed,
            action: Some(action),
            paths: Some(paths),
            rewards,
            attempts,
            task_ms,
            motion_ms,
            total_ms,
        },
        next,
    ))
}

/// Rounds until the bin is empty, `max_rounds` is reached, or `abort_limit`
/// consecutive rounds pick nothing.
pub fn run_episode(scene: &BinScene, cell: &Workcell, cfg: &PipelineConfig) -> Result<EpisodeLog, PipelineError> {
    cfg.validate()?;
    let mut current = scene.clone();
    let mut rounds = Vec::new();
    let mut idle_streak = 0;
    let mut aborted = false;
    while !current.is_empty() && rounds.len() < cfg.max_rounds {
        let (round, next) = run_round(&current, cell, cfg, rounds.len())?;
        let stuck = round.outcome == RoundOutcome::NoReachableGrasp;
        idle_streak = if round.picks() == 0 { idle_streak + 1 } else { 0 };
        rounds.push(round);
        current = next;
        // nothing reachable will stay nothing reachable: the scene did not change
        if stuck || idle_streak >= cfg.abort_limit {
            aborted = true;
            break;
        }
    }
    let total_picks = rounds.iter().map(GraspRound::picks).sum();
    let mut robots_used_histogram = BTreeMap::new();
    for r in &rounds {
        *robots_used_histogram.entry(r.robots_used()).or_insert(0) += 1;
    }
    Ok(EpisodeLog {
        rounds,
        initial_scene: scene.clone(),
        cleared: current.is_empty(),
        total_picks,
        robots_used_histogram,
        aborted,
    })
}
