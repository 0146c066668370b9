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
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::arm::{JointConfig, SerialArm};
use super::error::KinematicsError;
use super::pose::Pose;
use super::shape::{CollisionShape, Placed};

/// Collision declared when signed distance drops below this many meters.
pub const CLEARANCE_MARGIN: f64 = 0.005;

/// Axis-aligned box in world coordinates (meters).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb {
    pub fn center(&self) -> Vector3<f64> {
        Vector3::new(
            0.5 * (self.min[0] + self.max[0]),
            0.5 * (self.min[1] + self.max[1]),
            0.5 * (self.min[2] + self.max[2]),
        )
    }

    pub fn contains_xy(&self, x: f64, y: f64, margin: f64) -> bool {
        x >= self.min[0] + margin
            && x <= self.max[0] - margin
            && y >= self.min[1] + margin
            && y <= self.max[1] - margin
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Workcell {
    pub arms: Vec<SerialArm>,
    /// Shapes whose `local_pose` is their world pose (table, bin walls).
    pub static_shapes: Vec<CollisionShape>,
    pub bin_region: Aabb,
}

impl Workcell {
    pub fn n_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn validate(&self) -> Result<(), KinematicsError> {
        if self.arms.is_empty() {
            return Err(KinematicsError::InvalidWorkcell("no arms".into()));
        }
        for arm in &self.arms {
            arm.validate()?;
        }
        for (i, a) in self.arms.iter().enumerate() {
            for b in &self.arms[i + 1..] {
                let (dp, dr) = a.base_pose.error_to(&b.base_pose);
                if dp < 1e-9 && dr < 1e-9 {
                    return Err(KinematicsError::InvalidWorkcell(
                        "arm base poses must be pairwise distinct".into(),
                    ));
                }
            }
        }
        for s in &self.static_shapes {
            s.validate()?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, KinematicsError> {
        let cell: Workcell =
            serde_json::from_str(text).map_err(|e| KinematicsError::Json(e.to_string()))?;
        cell.validate()?;
        Ok(cell)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, KinematicsError> {
        let text = std::fs::read_to_string(path).map_err(|e| KinematicsError::Json(e.to_string()))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("workcell serializes")
    }

    pub fn home(&self) -> CompositeConfig {
        CompositeConfig(self.arms.iter().map(|a| a.home()).collect())
    }

    pub fn check_composite(&self, c: &CompositeConfig) -> Result<(), KinematicsError> {
        if c.0.len() != self.arms.len() {
            return Err(KinematicsError::DimensionMismatch {
                expected: self.arms.len(),
                actual: c.0.len(),
            });
        }
        for (arm, q) in self.arms.iter().zip(&c.0) {
            arm.check_dim(q)?;
        }
        Ok(())
    }

    /// Collision check against arms and static shapes only.
    pub fn collision_check(&self, c: &CompositeConfig) -> Result<bool, KinematicsError> {
        CollisionWorld::new(self.clone(), Vec::new()).collision_check(c, &BTreeSet::new())
    }
}

/// One joint configuration per arm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CompositeConfig(pub Vec<JointConfig>);

impl CompositeConfig {
    pub fn per_robot(&self) -> &[JointConfig] {
        &self.0
    }

    pub fn robot(&self, r: usize) -> &JointConfig {
        &self.0[r]
    }

    pub fn set_robot(&mut self, r: usize, q: JointConfig) {
        self.0[r] = q;
    }

    /// Euclidean norm of the difference over all joints of all robots.
    pub fn distance(&self, other: &CompositeConfig) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .flat_map(|(a, b)| a.0.iter().zip(&b.0).map(|(x, y)| (x - y) * (x - y)))
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_joint_delta(&self, other: &CompositeConfig) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .flat_map(|(a, b)| a.0.iter().zip(&b.0).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    pub fn lerp(&self, other: &CompositeConfig, t: f64) -> CompositeConfig {
        CompositeConfig(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| {
                    JointConfig(a.0.iter().zip(&b.0).map(|(x, y)| x + (y - x) * t).collect())
                })
                .collect(),
        )
    }
}

/// A loose object in the world.
#[derive(Clone, Debug, PartialEq)]
pub struct Obstacle {
    pub id: u32,
    pub shape: CollisionShape,
    pub pose: Pose,
}

/// An object carried by robot `robot`; `offset` is the object pose in the end-effector frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Attachment {
    pub robot: usize,
    pub id: u32,
    pub shape: CollisionShape,
    pub offset: Pose,
    /// Loose objects the carried object may pass through: whatever was resting
    /// on it gets pushed aside as it is lifted out. The arm still avoids them.
    pub displaces: BTreeSet<u32>,
}

/// Workcell plus loose and attached objects; everything `collision_check` needs.
#[derive(Clone, Debug)]
pub struct CollisionWorld {
    cell: Workcell,
    obstacles: Vec<Obstacle>,
    attachments: Vec<Attachment>,
    margin: f64,
    placed_statics: Vec<Placed>,
    placed_obstacles: Vec<Placed>,
}

struct ArmGeometry {
    links: Vec<Placed>,
    /// Link-frame index of each entry in `links`.
    link_ids: Vec<usize>,
    /// Index into the world's attachments, and the placed shape.
    carried: Vec<(usize, Placed)>,
    bound_center: Vector3<f64>,
    bound_radius: f64,
}

impl CollisionWorld {
    pub fn new(cell: Workcell, obstacles: Vec<Obstacle>) -> Self {
        let placed_statics = cell
            .static_shapes
            .iter()
            .map(|s| s.placed(&Pose::identity()))
            .collect();
        let placed_obstacles = obstacles.iter().map(|o| o.shape.placed(&o.pose)).collect();
        CollisionWorld {
            cell,
            obstacles,
            attachments: Vec::new(),
            margin: CLEARANCE_MARGIN,
            placed_statics,
            placed_obstacles,
        }
    }

    pub fn with_attachments(mut self, attachments: Vec<Attachment>) -> Self {
        self.attachments = attachments;
        self
    }

    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = margin;
        self
    }

    pub fn cell(&self) -> &Workcell {
        &self.cell
    }

    pub fn obstacles(&self) -> &[Obstacle] {
        &self.obstacles
    }

    pub fn attachments(&self) -> &[Attachment] {
        &self.attachments
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    fn arm_geometry(&self, r: usize, q: &JointConfig) -> Result<ArmGeometry, KinematicsError> {
        let arm = &self.cell.arms[r];
        let frames = arm.link_frames(&q.0)?;
        let links: Vec<Placed> = arm
            .link_shapes
            .iter()
            .map(|ls| ls.shape.placed(&Pose::from_isometry(frames[ls.link])))
            .collect();
        let link_ids = arm.link_shapes.iter().map(|ls| ls.link).collect();
        let ee = Pose::from_isometry(frames[arm.dof()]);
        let carried: Vec<(usize, Placed)> = self
            .attachments
            .iter()
            .enumerate()
            .filter(|(_, a)| a.robot == r)
            .map(|(i, a)| (i, a.shape.placed(&ee.compose(&a.offset))))
            .collect();
        let all = links.iter().chain(carried.iter().map(|(_, p)| p));
        let (mut lo, mut hi) = (Vector3::repeat(f64::INFINITY), Vector3::repeat(f64::NEG_INFINITY));
        for p in all.clone() {
            lo = lo.inf(&p.bound_center.add_scalar(-p.bound_radius));
            hi = hi.sup(&p.bound_center.add_scalar(p.bound_radius));
        }
        let bound_center = (lo + hi) * 0.5;
        let bound_radius = all
            .map(|p| (p.bound_center - bound_center).norm() + p.bound_radius)
            .fold(0.0, f64::max);
        Ok(ArmGeometry {
            links,
            link_ids,
            carried,
            bound_center,
            bound_radius,
        })
    }

    fn arms_may_touch(a: &ArmGeometry, b: &ArmGeometry, threshold: f64) -> bool {
        (a.bound_center - b.bound_center).norm() - a.bound_radius - b.bound_radius < threshold
    }

    /// True iff the composite configuration is in collision at this world's margin.
    ///
    /// Checks self-collision between non-adjacent link shapes, arm-arm,
    /// arm-static (base-frame shapes excluded, they are mounted on the table),
    /// arm-object for objects not in `ignore`, and carried objects against
    /// everything except their own arm.
    pub fn collision_check(
        &self,
        c: &CompositeConfig,
        ignore: &BTreeSet<u32>,
    ) -> Result<bool, KinematicsError> {
        self.collision_check_at(c, ignore, self.margin)
    }

    pub fn collision_check_at(
        &self,
        c: &CompositeConfig,
        ignore: &BTreeSet<u32>,
        margin: f64,
    ) -> Result<bool, KinematicsError> {
        self.cell.check_composite(c)?;
        let geoms = (0..self.cell.n_arms())
            .map(|r| self.arm_geometry(r, &c.0[r]))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.any_collision(&geoms, ignore, margin))
    }

    /// Single-arm check: self collision, statics and loose objects, ignoring the other arms.
    pub fn arm_collision_check(
        &self,
        r: usize,
        q: &JointConfig,
        ignore: &BTreeSet<u32>,
    ) -> Result<bool, KinematicsError> {
        if r >= self.cell.n_arms() {
            return Err(KinematicsError::DimensionMismatch {
                expected: self.cell.n_arms(),
                actual: r + 1,
            });
        }
        let g = self.arm_geometry(r, q)?;
        let carried_ids: BTreeSet<u32> = self.attachments.iter().map(|a| a.id).collect();
        Ok(self.arm_alone_collides(r, &g, ignore, &carried_ids, self.margin))
    }

    fn arm_alone_collides(
        &self,
        r: usize,
        g: &ArmGeometry,
        ignore: &BTreeSet<u32>,
        carried_ids: &BTreeSet<u32>,
        margin: f64,
    ) -> bool {
        let span = self.cell.arms[r].adjacency_span;
        for i in 0..g.links.len() {
            for j in (i + 1)..g.links.len() {
                if g.link_ids[i].abs_diff(g.link_ids[j]) <= span {
                    continue;
                }
                if g.links[i].within(&g.links[j], margin) {
                    return true;
                }
            }
        }
        let none = BTreeSet::new();
        let movers = g
            .links
            .iter()
            .zip(&g.link_ids)
            .map(|(p, &l)| (p, l == 0, &none))
            .chain(g.carried.iter().map(|(i, p)| (p, false, &self.attachments[*i].displaces)));
        for (p, mounted, displaced) in movers {
            if !mounted && self.placed_statics.iter().any(|s| p.within(s, margin)) {
                return true;
            }
            for (o, po) in self.obstacles.iter().zip(&self.placed_obstacles) {
                if ignore.contains(&o.id) || carried_ids.contains(&o.id) || displaced.contains(&o.id) {
                    continue;
                }
                if p.within(po, margin) {
                    return true;
                }
            }
        }
        false
    }

    fn any_collision(&self, geoms: &[ArmGeometry], ignore: &BTreeSet<u32>, margin: f64) -> bool {
        let carried_ids: BTreeSet<u32> = self.attachments.iter().map(|a| a.id).collect();
        for (r, g) in geoms.iter().enumerate() {
            if self.arm_alone_collides(r, g, ignore, &carried_ids, margin) {
                return true;
            }
        }
        for (i, a) in geoms.iter().enumerate() {
            for b in &geoms[i + 1..] {
                if !Self::arms_may_touch(a, b, margin) {
                    continue;
                }
                let pa = a.links.iter().chain(a.carried.iter().map(|(_, p)| p));
                for x in pa {
                    let pb = b.links.iter().chain(b.carried.iter().map(|(_, p)| p));
                    for y in pb {
                        if x.within(y, margin) {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }

    /// Smallest signed distance between shapes of different arms (carried objects included).
    pub fn arm_arm_clearance(&self, c: &CompositeConfig) -> Result<f64, KinematicsError> {
        self.cell.check_composite(c)?;
        let geoms = (0..self.cell.n_arms())
            .map(|r| self.arm_geometry(r, &c.0[r]))
            .collect::<Result<Vec<_>, _>>()?;
        let mut best = f64::INFINITY;
        for (i, a) in geoms.iter().enumerate() {
            for b in &geoms[i + 1..] {
                for x in a.links.iter().chain(a.carried.iter().map(|(_, p)| p)) {
                    for y in b.links.iter().chain(b.carried.iter().map(|(_, p)| p)) {
                        best = best.min(super::shape::distance(x, y));
                    }
                }
            }
        }
        Ok(best)
    }
}

/// Free-function form of [`CollisionWorld::collision_check`].
pub fn collision_check(
    world: &CollisionWorld,
    c: &CompositeConfig,
    ignore_objects: &BTreeSet<u32>,
) -> Result<bool, KinematicsError> {
    world.collision_check(c, ignore_objects)
}
