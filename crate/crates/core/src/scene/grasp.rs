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
use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::BinScene;
use crate::kinematics::layout::top_down_pose;
use crate::kinematics::{CollisionWorld, JointConfig, Pose};

/// Height of the pre-grasp pose above the grasp pose (meters).
pub const PREGRASP_HEIGHT: f64 = 0.10;
/// Extra opening beyond the object's cross width (meters).
const WIDTH_CLEARANCE: f64 = 0.01;
const OCCLUSION_GRID: usize = 40;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraspProposal {
    pub object_id: u32,
    /// Tool-down gripper pose; the jaws close along the tool x axis.
    pub pose: Pose,
    pub quality: f64,
    pub width: f64,
    /// Gripper roll about the vertical in `[-pi/2, pi/2)`.
    pub approach_angle: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GraspMap {
    /// Sorted by descending quality, ties by object id.
    pub proposals: Vec<GraspProposal>,
    pub per_object_count: usize,
}

impl GraspMap {
    pub fn is_empty(&self) -> bool {
        self.proposals.is_empty()
    }

    pub fn len(&self) -> usize {
        self.proposals.len()
    }
}

fn wrap_half_turn(a: f64) -> f64 {
    (a + FRAC_PI_2).rem_euclid(PI) - FRAC_PI_2
}

/// Up to `m` top-down grasps per live object across its long axis.
///
/// Quality is the class base quality discounted by how much of the object's
/// top is covered by higher objects.
pub fn propose_grasps(scene: &BinScene, m: usize, seed: u64) -> GraspMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut proposals = Vec::new();
    for obj in scene.live() {
        let occlusion = scene.occlusion(obj, OCCLUSION_GRID);
        let quality = (obj.class.base_quality() * (1.0 - occlusion)).clamp(0.0, 1.0);
        let [hx, hy, _] = obj.half_extents();
        let c = obj.pose.translation();
        let yaw = obj.yaw();
        let (s, co) = yaw.sin_cos();
        let span = 0.5 * hx;
        for k in 0..m {
            let slot = if m == 1 {
                0.0
            } else {
                -span + 2.0 * span * k as f64 / (m - 1) as f64
            };
            let along = (slot + rng.random_range(-0.1..0.1) * span).clamp(-span, span);
            let angle = wrap_half_turn(yaw + FRAC_PI_2 + rng.random_range(-0.05..0.05));
            let x = c.x + co * along;
            let y = c.y + s * along;
            proposals.push((
                k,
                GraspProposal {
                    object_id: obj.id,
                    pose: top_down_pose(x, y, obj.top_z(), angle),
                    quality,
                    width: 2.0 * hy + WIDTH_CLEARANCE,
                    approach_angle: angle,
                },
            ));
        }
    }
    proposals.sort_by(|(ka, a), (kb, b)| {
        b.quality
            .total_cmp(&a.quality)
            .then(a.object_id.cmp(&b.object_id))
            .then(ka.cmp(kb))
    });
    GraspMap {
        proposals: proposals.into_iter().map(|(_, p)| p).collect(),
        per_object_count: m,
    }
}

/// A proposal one arm can execute, with its joint-space grasp and pre-grasp configurations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReachableGrasp {
    pub proposal: GraspProposal,
    /// Tool pose actually solved for; the proposal pose or its half-turn twin.
    pub tool_pose: Pose,
    pub grasp_config: JointConfig,
    pub pregrasp_config: JointConfig,
}

impl ReachableGrasp {
    pub fn object_id(&self) -> u32 {
        self.proposal.object_id
    }

    pub fn quality(&self) -> f64 {
        self.proposal.quality
    }
}

/// Proposals arm `r` can reach with collision-free grasp and pre-grasp configurations.
///
/// `world` holds the scene's live objects as obstacles. Keeps the map order.
pub fn reachable_grasps(world: &CollisionWorld, r: usize, map: &GraspMap) -> Vec<ReachableGrasp> {
    let arm = &world.cell().arms[r];
    let seed = arm.ik_seed();
    let mut out = Vec::new();
    for p in &map.proposals {
        let ignore = BTreeSet::from([p.object_id]);
        for flip in [0.0, PI] {
            // a parallel-jaw grasp is unchanged by a half turn about the tool axis
            let tool_pose = p.pose.compose(&Pose::from_xyz_yaw(0.0, 0.0, 0.0, flip));
            let above = Pose::from_translation(0.0, 0.0, PREGRASP_HEIGHT).compose(&tool_pose);
            let Ok(pre) = arm.inverse_kinematics(&above, &seed) else {
                continue;
            };
            let Ok(grasp) = arm.inverse_kinematics(&tool_pose, &pre) else {
                continue;
            };
            let blocked = |q: &JointConfig| world.arm_collision_check(r, q, &ignore).unwrap_or(true);
            if blocked(&grasp) || blocked(&pre) {
                continue;
            }
            out.push(ReachableGrasp {
                proposal: p.clone(),
                tool_pose,
                grasp_config: grasp,
                pregrasp_config: pre,
            });
            break;
        }
    }
    out
}
