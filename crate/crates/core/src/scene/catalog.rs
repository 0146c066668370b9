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

use serde::{Deserialize, Serialize};

use super::lying_capsule_rotation;
use crate::kinematics::{CollisionShape, Pose};

/// Primitive stand-ins for household objects, lying flat with their long axis along local x.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectClass {
    /// Elongated capsule.
    Elongated,
    SmallBox,
    ThinBox,
    /// Thin capsule standing in for a cylinder with rounded ends.
    Cylinder,
    FlatBox,
}

pub const CATALOG: [ObjectClass; 5] = [
    ObjectClass::Elongated,
    ObjectClass::SmallBox,
    ObjectClass::ThinBox,
    ObjectClass::Cylinder,
    ObjectClass::FlatBox,
];

impl ObjectClass {
    pub fn base_quality(self) -> f64 {
        match self {
            ObjectClass::Elongated => 0.9,
            ObjectClass::SmallBox => 0.85,
            ObjectClass::ThinBox => 0.8,
            ObjectClass::Cylinder => 0.75,
            ObjectClass::FlatBox => 0.7,
        }
    }

    /// Half extents of the bounding box in the object frame (meters).
    pub fn half_extents(self) -> [f64; 3] {
        match self {
            ObjectClass::Elongated => [0.08, 0.02, 0.02],
            ObjectClass::SmallBox => [0.045, 0.035, 0.025],
            ObjectClass::ThinBox => [0.08, 0.012, 0.012],
            ObjectClass::Cylinder => [0.085, 0.015, 0.015],
            ObjectClass::FlatBox => [0.09, 0.015, 0.006],
        }
    }

    pub fn shape(self) -> CollisionShape {
        let [hx, hy, hz] = self.half_extents();
        match self {
            ObjectClass::Elongated | ObjectClass::Cylinder => CollisionShape::capsule(hx - hy, hy)
                .with_local_pose(Pose::new(Default::default(), lying_capsule_rotation())),
            _ => CollisionShape::cuboid(hx, hy, hz),
        }
    }
}
