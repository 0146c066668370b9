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

use binpick::kinematics::layout::{dual_arm_cell, quad_arm_cell};
use binpick::kinematics::{CollisionWorld, Workcell};
use binpick::motion::PlannerConfig;
use binpick::pipeline::{PipelineConfig, PlanningMode, SuccessModel};
use binpick::scene::{generate_scene_with, propose_grasps, reachable_grasps, BinScene, Placement, SceneParams};
use binpick::task::{Policy, PolicyKind};
use serde::{Deserialize, Serialize};

use crate::BenchError;

/// Fewest distinct objects every arm must reach in a four-arm placement.
pub const FOUR_ARM_MIN_REACH: usize = 3;
const PLACEMENT_DRAWS: u64 = 1000;
/// Per-call planning budget in the four-arm suite (milliseconds).
pub const FOUR_ARM_TIME_BUDGET_MS: f64 = 5000.0;

/// One experiment: `n_bins` bins, each cleared `trials` times with fresh seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub n_robots: usize,
    pub placement: Placement,
    pub n_bins: usize,
    pub objects_per_bin: usize,
    pub trials: usize,
    pub policy: PolicyKind,
    pub planner: PlannerConfig,
    /// Base seed; every scene and episode seed is derived from it.
    pub seeds: u64,
    #[serde(default = "default_max_rounds")]
    pub max_rounds: usize,
    #[serde(default = "default_mode")]
    pub planning_mode: PlanningMode,
    /// kin_feasibility draws per round.
    #[serde(default = "default_policy_budget")]
    pub policy_budget: usize,
    #[serde(default = "default_success")]
    pub success_model: SuccessModel,
}

fn default_max_rounds() -> usize {
    PipelineConfig::default().max_rounds
}

fn default_mode() -> PlanningMode {
    PlanningMode::Composite
}

fn default_success() -> SuccessModel {
    SuccessModel::Deterministic
}

fn default_policy_budget() -> usize {
    Policy::default().sample_budget
}

/// splitmix64 finalizer over a combined word.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(base, |acc, &p| {
        let mut z = acc ^ p.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    })
}

impl ScenarioSpec {
    /// Dual-arm suite with the pipeline's planner defaults.
    pub fn dual(name: &str, placement: Placement, policy: PolicyKind, bins: usize, objects: usize, trials: usize) -> Self {
        ScenarioSpec {
            name: name.to_string(),
            n_robots: 2,
            placement,
            n_bins: bins,
            objects_per_bin: objects,
            trials,
            policy,
            planner: PipelineConfig::default().planner,
            seeds: 0,
            max_rounds: default_max_rounds(),
            planning_mode: default_mode(),
            policy_budget: default_policy_budget(),
            success_model: default_success(),
        }
    }

    /// Single-round four-arm suite around a shared tray.
    ///
    /// Planning calls get [`FOUR_ARM_TIME_BUDGET_MS`] so that the sample cap,
    /// not the clock, ends a 28-joint search and episodes replay exactly.
    pub fn four_arm(name: &str, bins: usize, objects: usize, trials: usize) -> Self {
        let base = Self::dual(name, Placement::Centred, PolicyKind::KinFeasibility, bins, objects, trials);
        ScenarioSpec {
            n_robots: 4,
            max_rounds: 1,
            planner: PlannerConfig {
                time_budget_ms: FOUR_ARM_TIME_BUDGET_MS,
                ..base.planner.clone()
            },
            ..base
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seeds = seed;
        self
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: &str| Err(BenchError::InvalidSpec(format!("{}: {m}", self.name)));
        if self.n_robots != 2 && self.n_robots != 4 {
            return bad("n_robots must be 2 or 4");
        }
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.max_rounds == 0 {
            return bad("max_rounds must be at least 1");
        }
        if self.n_robots != 2 && matches!(self.policy, PolicyKind::DistanceAware | PolicyKind::QualityAware) {
            return bad("distance and quality policies are two-arm only");
        }
        self.pipeline_config(0).validate().map_err(|e| BenchError::InvalidSpec(format!("{}: {e}", self.name)))
    }

    pub fn cell(&self) -> Workcell {
        if self.n_robots == 4 {
            quad_arm_cell()
        } else {
            dual_arm_cell()
        }
    }

    pub fn scene_params(&self) -> SceneParams {
        if self.n_robots == 4 {
            SceneParams::four_arm()
        } else {
            SceneParams::dual_arm()
        }
    }

    pub fn episode_seed(&self, bin: usize, trial: usize) -> u64 {
        derive_seed(self.seeds, &[1, bin as u64, trial as u64])
    }

    pub fn pipeline_config(&self, seed: u64) -> PipelineConfig {
        PipelineConfig {
            policy: Policy {
                kind: self.policy,
                sample_budget: self.policy_budget,
                rng_seed: seed,
            },
            planner: self.planner.clone(),
            planning_mode: self.planning_mode,
            max_rounds: self.max_rounds,
            success_model: self.success_model,
            rng_seed: seed,
            ..PipelineConfig::default()
        }
    }

    /// The bin scene shared by every trial and policy with this seed and layout.
    ///
    /// Four-arm placements are redrawn until each arm reaches at least
    /// [`FOUR_ARM_MIN_REACH`] distinct objects.
    pub fn bin_scene(&self, bin: usize) -> Result<BinScene, BenchError> {
        let params = self.scene_params();
        for draw in 0..PLACEMENT_DRAWS {
            let seed = derive_seed(self.seeds, &[0, bin as u64, draw]);
            let scene = generate_scene_with(&params, self.placement, self.objects_per_bin, seed)?;
            if self.n_robots == 2 || self.objects_per_bin < FOUR_ARM_MIN_REACH || reach_ok(&scene, &self.cell()) {
                return Ok(scene);
            }
        }
        Err(BenchError::InvalidSpec(format!(
            "{}: no placement of bin {bin} lets every arm reach {FOUR_ARM_MIN_REACH} objects",
            self.name
        )))
    }
}

fn reach_ok(scene: &BinScene, cell: &Workcell) -> bool {
    let world = CollisionWorld::new(cell.clone(), scene.obstacles());
    let map = propose_grasps(scene, PipelineConfig::default().grasps_per_object, scene.rng_seed);
    (0..cell.n_arms()).all(|r| {
        let objects: BTreeSet<u32> = reachable_grasps(&world, r, &map).iter().map(|g| g.object_id()).collect();
        objects.len() >= FOUR_ARM_MIN_REACH
    })
}

/// Bins x objects x trials for the two profiles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Profile {
    Full,
    Quick,
}

impl Profile {
    fn dims(self) -> (usize, usize, usize) {
        match self {
            Profile::Full => (10, 10, 10),
            Profile::Quick => (3, 10, 3),
        }
    }
}

/// Centred dual-arm suites, one per policy.
pub fn centred_suites(profile: Profile, seed: u64) -> Vec<ScenarioSpec> {
    let (b, o, t) = profile.dims();
    PolicyKind::ALL
        .iter()
        .map(|&k| ScenarioSpec::dual(&format!("centred/{}", k.name()), Placement::Centred, k, b, o, t).with_seed(seed))
        .collect()
}

/// Excentred dual-arm suites for the two policies the usage table compares.
pub fn excentred_suites(profile: Profile, seed: u64) -> Vec<ScenarioSpec> {
    let (b, o, t) = profile.dims();
    [PolicyKind::Sequential, PolicyKind::SplitSpace, PolicyKind::KinFeasibility]
        .iter()
        .map(|&k| ScenarioSpec::dual(&format!("excentred/{}", k.name()), Placement::Excentred, k, b, o, t).with_seed(seed))
        .collect()
}

pub fn four_arm_suite(profile: Profile, seed: u64) -> ScenarioSpec {
    let (b, _, t) = profile.dims();
    ScenarioSpec::four_arm("four_arm/kin_feasibility", b, 4, t).with_seed(seed)
}

/// Every experiment of the standard report.
pub fn standard_suites(profile: Profile, seed: u64) -> Vec<ScenarioSpec> {
    let mut specs = centred_suites(profile, seed);
    specs.extend(excentred_suites(profile, seed));
    specs.push(four_arm_suite(profile, seed));
    specs
}
