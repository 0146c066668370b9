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

//! Serial-arm kinematics, geometric primitives and collision queries over
//! single and composite configuration spaces.

mod arm;
mod error;
pub mod layout;
mod pose;
mod shape;
mod workcell;

pub use arm::{DhParam, IkOptions, IkSolution, JointConfig, LinkShape, SerialArm};
pub use error::KinematicsError;
pub use pose::Pose;
pub use shape::{distance, shape_distance, CollisionShape, Geometry, Placed, ShapeKind};
pub use workcell::{
    collision_check, Aabb, Attachment, CollisionWorld, CompositeConfig, Obstacle, Workcell,
    CLEARANCE_MARGIN,
};
