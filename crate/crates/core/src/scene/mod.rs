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

//! Bin scenes: seeded object placement, object bookkeeping and a synthetic
//! grasp oracle producing top-down grasp proposals.

mod catalog;
mod grasp;

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{UnitQuaternion, Vector2, Vector3};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::layout::{dual_arm_cell, quad_arm_cell};
use crate::kinematics::{Aabb, CollisionShape, Obstacle, Pose};

pub use catalog::{ObjectClass, CATALOG};
pub use grasp::{propose_grasps, reachable_grasps, GraspMap, GraspProposal, ReachableGrasp, PREGRASP_HEIGHT};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("could only place {placed} of {requested} objects in the bin")]
    Capacity { placed: usize, requested: usize },
    #[error("unknown object id {0}")]
    UnknownObject(u32),
    #[error("object {0} already removed")]
    AlreadyRemoved(u32),
    #[error("json: {0}")]
    Json(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    Centred,
    Excentred,
}

/// Where and how widely objects are scattered.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneParams {
    pub region: Aabb,
    /// Point on the mid-axis the centred distribution is built around.
    pub center: [f64; 2],
    /// Standard deviation of object centers along x and y (meters).
    pub spread: [f64; 2],
    /// Samples further than this many deviations from the distribution center are redrawn.
    pub truncation: f64,
    /// Shift of the distribution center along x for excentred scenes (meters).
    pub excentre: f64,
    /// Objects may not come closer than this to the bin walls (meters).
    pub wall_clearance: f64,
    pub max_layers: usize,
    /// In-bin draws tried per object looking for a free spot before settling on a stacked one.
    pub free_spot_draws: usize,
}

/// Gap left between an object and whatever it rests on.
pub const REST_GAP: f64 = 0.01;
/// Footprints inflated by this much count as overlapping for stacking.
pub const STACK_INFLATION: f64 = 0.01;
const MAX_ATTEMPTS: usize = 500;

impl SceneParams {
    /// Bin between two arms whose bases straddle the x = 0 mid-axis.
    pub fn dual_arm() -> Self {
        SceneParams {
            region: dual_arm_cell().bin_region,
            center: [0.0, 0.0],
            spread: [0.09, 0.07],
            truncation: 2.0,
            excentre: 0.10,
            wall_clearance: 0.005,
            max_layers: 3,
            free_spot_draws: 8,
        }
    }

    /// Shared tray in the middle of four arms.
    pub fn four_arm() -> Self {
        SceneParams {
            region: quad_arm_cell().bin_region,
            center: [0.0, 0.0],
            spread: [0.08, 0.08],
            truncation: 2.0,
            excentre: 0.10,
            wall_clearance: 0.005,
            max_layers: 3,
            free_spot_draws: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub id: u32,
    pub class: ObjectClass,
    /// Shape relative to the object frame.
    pub shape: CollisionShape,
    /// Object frame: center of the object, rotated about the vertical only.
    pub pose: Pose,
    /// Stacking layer, 0 for objects resting on the table.
    pub layer: usize,
    pub removed: bool,
}

impl ObjectInstance {
    pub fn yaw(&self) -> f64 {
        let (_, _, yaw) = self.pose.rotation().euler_angles();
        yaw
    }

    pub fn half_extents(&self) -> [f64; 3] {
        self.class.half_extents()
    }

    pub fn top_z(&self) -> f64 {
        self.pose.translation().z + self.half_extents()[2]
    }

    pub fn obstacle(&self) -> Obstacle {
        Obstacle {
            id: self.id,
            shape: self.shape.clone(),
            pose: self.pose,
        }
    }

    /// Whether the world-frame point `(x, y)` lies on the footprint grown by `inflate`.
    pub fn footprint_contains(&self, x: f64, y: f64, inflate: f64) -> bool {
        let c = self.pose.translation();
        let (s, co) = self.yaw().sin_cos();
        let (dx, dy) = (x - c.x, y - c.y);
        let u = co * dx + s * dy;
        let v = -s * dx + co * dy;
        let [hx, hy, _] = self.half_extents();
        u.abs() <= hx + inflate && v.abs() <= hy + inflate
    }

    fn corners(&self, inflate: f64) -> [Vector2<f64>; 4] {
        let c = self.pose.translation();
        let (s, co) = self.yaw().sin_cos();
        let [hx, hy, _] = self.half_extents();
        let (hx, hy) = (hx + inflate, hy + inflate);
        let ex = Vector2::new(co, s) * hx;
        let ey = Vector2::new(-s, co) * hy;
        let c = Vector2::new(c.x, c.y);
        [c + ex + ey, c - ex + ey, c - ex - ey, c + ex - ey]
    }

    /// 2-D separating-axis test on the inflated rectangular footprints.
    pub fn footprints_overlap(&self, other: &ObjectInstance, inflate: f64) -> bool {
        let a = self.corners(inflate);
        let b = other.corners(inflate);
        let axes = [a[0] - a[1], a[0] - a[3], b[0] - b[1], b[0] - b[3]];
        for axis in axes {
            let project = |pts: &[Vector2<f64>; 4]| {
                pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                    let d = p.dot(&axis);
                    (lo.min(d), hi.max(d))
                })
            };
            let (alo, ahi) = project(&a);
            let (blo, bhi) = project(&b);
            if ahi < blo || bhi < alo {
                return false;
            }
        }
        true
    }
}

/// Objects in the bin. Immutable; [`BinScene::remove_object`] returns a new value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinScene {
    pub objects: Vec<ObjectInstance>,
    pub placement: Placement,
    pub rng_seed: u64,
    pub params: SceneParams,
}

/// Dual-arm bin scene of `n_objects` objects.
pub fn generate_scene(placement: Placement, n_objects: usize, seed: u64) -> Result<BinScene, SceneError> {
    generate_scene_with(&SceneParams::dual_arm(), placement, n_objects, seed)
}

pub fn generate_scene_with(
    params: &SceneParams,
    placement: Placement,
    n_objects: usize,
    seed: u64,
) -> Result<BinScene, SceneError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut classes: Vec<ObjectClass> = (0..n_objects).map(|i| CATALOG[i % CATALOG.len()]).collect();
    classes.shuffle(&mut rng);

    let cx = params.center[0]
        + match placement {
            Placement::Centred => 0.0,
            Placement::Excentred => params.excentre,
        };
    let cy = params.center[1];
    let nx = Normal::new(cx, params.spread[0]).expect("finite spread");
    let ny = Normal::new(cy, params.spread[1]).expect("finite spread");

    let mut objects: Vec<ObjectInstance> = Vec::with_capacity(n_objects);
    for (i, class) in classes.into_iter().enumerate() {
        let mut placed: Option<ObjectInstance> = None;
        let mut draws = 0;
        for _ in 0..MAX_ATTEMPTS {
            let x = nx.sample(&mut rng);
            let y = ny.sample(&mut rng);
            let yaw = rng.random_range(-PI..PI);
            let far_x = (x - cx).abs() > params.truncation * params.spread[0];
            let far_y = (y - cy).abs() > params.truncation * params.spread[1];
            if far_x || far_y {
                continue;
            }
            let mut obj = ObjectInstance {
                id: i as u32,
                class,
                shape: class.shape(),
                pose: Pose::from_xyz_yaw(x, y, 0.0, yaw),
                layer: 0,
                removed: false,
            };
            let inside = obj
                .corners(0.0)
                .iter()
                .all(|p| params.region.contains_xy(p.x, p.y, params.wall_clearance));
            if !inside {
                continue;
            }
            let below = objects
                .iter()
                .filter(|o| o.footprints_overlap(&obj, STACK_INFLATION))
                .max_by(|a, b| a.top_z().total_cmp(&b.top_z()));
            let (layer, base) = match below {
                Some(o) => (o.layer + 1, o.top_z()),
                None => (0, 0.0),
            };
            if layer >= params.max_layers {
                continue;
            }
            let hz = class.half_extents()[2];
            obj.layer = layer;
            obj.pose = Pose::from_xyz_yaw(x, y, base + REST_GAP + hz, yaw);
            if placed.as_ref().is_none_or(|p| layer < p.layer) {
                placed = Some(obj);
            }
            draws += 1;
            if layer == 0 || draws >= params.free_spot_draws {
                break;
            }
        }
        match placed {
            Some(o) => objects.push(o),
            None => {
                return Err(SceneError::Capacity {
                    placed: objects.len(),
                    requested: n_objects,
                })
            }
        }
    }
    Ok(BinScene {
        objects,
        placement,
        rng_seed: seed,
        params: params.clone(),
    })
}

impl BinScene {
    pub fn live(&self) -> impl Iterator<Item = &ObjectInstance> {
        self.objects.iter().filter(|o| !o.removed)
    }

    pub fn live_count(&self) -> usize {
        self.live().count()
    }

    pub fn is_empty(&self) -> bool {
        self.live_count() == 0
    }

    pub fn object(&self, id: u32) -> Option<&ObjectInstance> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn remove_object(&self, id: u32) -> Result<BinScene, SceneError> {
        let mut next = self.clone();
        let obj = next
            .objects
            .iter_mut()
            .find(|o| o.id == id)
            .ok_or(SceneError::UnknownObject(id))?;
        if obj.removed {
            return Err(SceneError::AlreadyRemoved(id));
        }
        obj.removed = true;
        Ok(next)
    }

    /// Live objects as collision obstacles.
    pub fn obstacles(&self) -> Vec<Obstacle> {
        self.live().map(|o| o.obstacle()).collect()
    }

    /// Fraction of `obj`'s top surface covered by higher live objects, on an `n x n` grid.
    pub fn occlusion(&self, obj: &ObjectInstance, n: usize) -> f64 {
        let higher: Vec<&ObjectInstance> = self
            .live()
            .filter(|o| o.id != obj.id && o.pose.translation().z > obj.pose.translation().z)
            .collect();
        if higher.is_empty() {
            return 0.0;
        }
        let c = obj.pose.translation();
        let (s, co) = obj.yaw().sin_cos();
        let [hx, hy, _] = obj.half_extents();
        let mut covered = 0usize;
        for i in 0..n {
            let u = -hx + (2.0 * i as f64 + 1.0) * hx / n as f64;
            for j in 0..n {
                let v = -hy + (2.0 * j as f64 + 1.0) * hy / n as f64;
                let x = c.x + co * u - s * v;
                let y = c.y + s * u + co * v;
                if higher.iter().any(|o| o.footprint_contains(x, y, 0.0)) {
                    covered += 1;
                }
            }
        }
        covered as f64 / (n * n) as f64
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, SceneError> {
        serde_json::from_str(text).map_err(|e| SceneError::Json(e.to_string()))
    }
}

/// Rotation that lays a capsule's local z axis along the object's x axis.
pub(crate) fn lying_capsule_rotation() -> UnitQuaternion<f64> {
    UnitQuaternion::from_axis_angle(&Vector3::y_axis(), FRAC_PI_2)
}
