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

//! Reference arm model and the dual- and four-arm workcells used by the pipeline and benchmarks.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{UnitQuaternion, Vector3};

use super::arm::{DhParam, JointConfig, LinkShape, SerialArm};
use super::pose::Pose;
use super::shape::CollisionShape;
use super::workcell::{Aabb, Workcell};

/// Link capsule radius for the arm body.
pub const LINK_RADIUS: f64 = 0.06;
/// Gripper capsule radius.
pub const GRIPPER_RADIUS: f64 = 0.03;
/// Distance between the gripper capsule's lower end and the tool point.
pub const GRIPPER_STANDOFF: f64 = 0.01;
pub const BIN_WALL_HEIGHT: f64 = 0.06;
pub const BIN_WALL_THICKNESS: f64 = 0.01;

const SHOULDER_HEIGHT: f64 = 0.34;
const UPPER_ARM: f64 = 0.48;
const FOREARM: f64 = 0.48;
const FLANGE: f64 = 0.06;
const TOOL: f64 = 0.10;

/// 7-dof spherical-shoulder, spherical-wrist chain with about 1.1 m of reach.
///
/// `q = 0` points the arm straight up. The tool point sits `FLANGE + TOOL`
/// beyond the wrist centre along the last joint axis.
pub fn reference_arm(name: &str, base_pose: Pose) -> SerialArm {
    let dh = |d: f64, alpha: f64| DhParam {
        a: 0.0,
        alpha,
        d,
        theta_offset: 0.0,
    };
    let dh_parameters = vec![
        dh(SHOULDER_HEIGHT, -FRAC_PI_2),
        dh(0.0, FRAC_PI_2),
        dh(UPPER_ARM, FRAC_PI_2),
        dh(0.0, -FRAC_PI_2),
        dh(FOREARM, -FRAC_PI_2),
        dh(0.0, FRAC_PI_2),
        dh(FLANGE + TOOL, 0.0),
    ];
    let deg = PI / 180.0;
    let joint_limits = vec![
        [-170.0 * deg, 170.0 * deg],
        [-120.0 * deg, 120.0 * deg],
        [-170.0 * deg, 170.0 * deg],
        [-120.0 * deg, 120.0 * deg],
        [-170.0 * deg, 170.0 * deg],
        [-120.0 * deg, 120.0 * deg],
        [-175.0 * deg, 175.0 * deg],
    ];
    // Capsule axes run along local z of the frame they hang from.
    let along_z = |frame: usize, from: f64, to: f64, radius: f64| LinkShape {
        link: frame,
        shape: CollisionShape::capsule(0.5 * (to - from), radius)
            .with_local_pose(Pose::from_translation(0.0, 0.0, 0.5 * (from + to))),
    };
    let link_shapes = vec![
        along_z(0, 0.12, SHOULDER_HEIGHT, LINK_RADIUS),
        along_z(2, 0.0, UPPER_ARM, LINK_RADIUS),
        along_z(4, 0.0, FOREARM, LINK_RADIUS),
        // wrist centre to flange, expressed in the tool frame
        along_z(7, -(FLANGE + TOOL), -TOOL, LINK_RADIUS),
        along_z(
            7,
            -TOOL,
            -(GRIPPER_STANDOFF + GRIPPER_RADIUS),
            GRIPPER_RADIUS,
        ),
    ];
    let mut arm = SerialArm {
        name: name.to_string(),
        base_pose,
        dh_parameters,
        joint_limits,
        link_shapes,
        // spherical shoulder and wrist: frames within one joint group never touch
        adjacency_span: 3,
        home: None,
        ik_seed: None,
        drop: None,
    };
    arm.home = Some(JointConfig::zeros(arm.dof()));
    arm.ik_seed = Some(JointConfig(vec![0.0, 0.6, 0.0, -1.4, 0.0, 1.1, 0.0]));
    arm
}

/// Base pose at `(x, y)` on the table with its x axis facing `(tx, ty)`.
fn base_facing(x: f64, y: f64, tx: f64, ty: f64) -> Pose {
    Pose::from_xyz_yaw(x, y, 0.0, (ty - y).atan2(tx - x))
}

fn table() -> CollisionShape {
    CollisionShape::cuboid(1.2, 1.2, 0.05).with_local_pose(Pose::from_translation(0.0, 0.0, -0.05))
}

fn bin_walls(region: &Aabb) -> Vec<CollisionShape> {
    let t = BIN_WALL_THICKNESS * 0.5;
    let hz = BIN_WALL_HEIGHT * 0.5;
    let [x0, y0, _] = region.min;
    let [x1, y1, _] = region.max;
    let hx = 0.5 * (x1 - x0) + 2.0 * t;
    let hy = 0.5 * (y1 - y0);
    let cx = 0.5 * (x0 + x1);
    let cy = 0.5 * (y0 + y1);
    vec![
        CollisionShape::cuboid(hx, t, hz).with_local_pose(Pose::from_translation(cx, y0 - t, hz)),
        CollisionShape::cuboid(hx, t, hz).with_local_pose(Pose::from_translation(cx, y1 + t, hz)),
        CollisionShape::cuboid(t, hy, hz).with_local_pose(Pose::from_translation(x0 - t, cy, hz)),
        CollisionShape::cuboid(t, hy, hz).with_local_pose(Pose::from_translation(x1 + t, cy, hz)),
    ]
}

/// Tool-down target pose `yaw` radians about the vertical.
pub fn top_down_pose(x: f64, y: f64, z: f64, yaw: f64) -> Pose {
    Pose::new(
        Vector3::new(x, y, z),
        UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw)
            * UnitQuaternion::from_axis_angle(&Vector3::x_axis(), PI),
    )
}

/// Drop configuration: the shoulder swung `swing` radians away from the bin, tool down.
fn with_drop(mut arm: SerialArm, swing: f64) -> SerialArm {
    arm.drop = Some(JointConfig(vec![swing, 0.3, 0.0, -1.6, 0.0, 1.2, 0.0]));
    arm
}

/// Two arms one meter apart facing a bin centred on the table origin.
pub fn dual_arm_cell() -> Workcell {
    let bin_region = Aabb {
        min: [-0.35, -0.20, 0.0],
        max: [0.35, 0.20, 0.25],
    };
    let arms = vec![
        with_drop(reference_arm("left", base_facing(-0.5, -0.40, 0.0, 0.0)), FRAC_PI_2),
        with_drop(reference_arm("right", base_facing(0.5, -0.40, 0.0, 0.0)), -FRAC_PI_2),
    ];
    let mut static_shapes = vec![table()];
    static_shapes.extend(bin_walls(&bin_region));
    Workcell {
        arms,
        static_shapes,
        bin_region,
    }
}

/// Four arms at the corners of a one-meter square around a shared tray.
pub fn quad_arm_cell() -> Workcell {
    let bin_region = Aabb {
        min: [-0.30, -0.30, 0.0],
        max: [0.30, 0.30, 0.25],
    };
    let corners = [(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)];
    let arms = corners
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| {
            let arm = reference_arm(&format!("arm{i}"), base_facing(x, y, 0.0, 0.0));
            with_drop(arm, FRAC_PI_2)
        })
        .collect();
    let mut static_shapes = vec![table()];
    static_shapes.extend(bin_walls(&bin_region));
    Workcell {
        arms,
        static_shapes,
        bin_region,
    }
}
