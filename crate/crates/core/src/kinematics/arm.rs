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

use nalgebra::{Isometry3, Matrix6, Translation3, UnitQuaternion, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use super::error::KinematicsError;
use super::pose::Pose;
use super::shape::{CollisionShape, Placed};

/// Standard Denavit-Hartenberg row: `Rz(theta + offset) Tz(d) Tx(a) Rx(alpha)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DhParam {
    pub a: f64,
    pub alpha: f64,
    pub d: f64,
    #[serde(default)]
    pub theta_offset: f64,
}

impl DhParam {
    pub fn transform(&self, q: f64) -> Isometry3<f64> {
        let theta = q + self.theta_offset;
        let (st, ct) = theta.sin_cos();
        let rot = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), theta)
            * UnitQuaternion::from_axis_angle(&Vector3::x_axis(), self.alpha);
        Isometry3::from_parts(Translation3::new(self.a * ct, self.a * st, self.d), rot)
    }
}

/// Joint angles in radians.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JointConfig(pub Vec<f64>);

impl JointConfig {
    pub fn new(angles: Vec<f64>) -> Self {
        JointConfig(angles)
    }

    pub fn zeros(dof: usize) -> Self {
        JointConfig(vec![0.0; dof])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for JointConfig {
    fn from(v: Vec<f64>) -> Self {
        JointConfig(v)
    }
}

/// A collision shape rigidly attached to link frame `link` (0 is the base frame).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkShape {
    pub link: usize,
    pub shape: CollisionShape,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SerialArm {
    #[serde(default)]
    pub name: String,
    pub base_pose: Pose,
    pub dh_parameters: Vec<DhParam>,
    /// Per-joint `[lo, hi]` in radians.
    pub joint_limits: Vec<[f64; 2]>,
    pub link_shapes: Vec<LinkShape>,
    /// Shapes on frames at most this many joints apart are not self-collision checked.
    #[serde(default = "default_adjacency_span")]
    pub adjacency_span: usize,
    /// Resting configuration between grasp rounds.
    #[serde(default)]
    pub home: Option<JointConfig>,
    /// Seed used for grasp IK queries.
    #[serde(default)]
    pub ik_seed: Option<JointConfig>,
    /// Where grasped objects are released.
    #[serde(default)]
    pub drop: Option<JointConfig>,
}

fn default_adjacency_span() -> usize {
    1
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IkOptions {
    pub damping: f64,
    pub max_iterations: usize,
    pub max_step: f64,
    pub position_tolerance: f64,
    pub orientation_tolerance: f64,
}

impl Default for IkOptions {
    fn default() -> Self {
        IkOptions {
            damping: 0.05,
            max_iterations: 200,
            max_step: 0.2,
            position_tolerance: 1e-4,
            orientation_tolerance: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IkSolution {
    pub q: JointConfig,
    pub iterations: usize,
    pub position_error: f64,
    pub orientation_error: f64,
}

impl SerialArm {
    pub fn dof(&self) -> usize {
        self.dh_parameters.len()
    }

    pub fn validate(&self) -> Result<(), KinematicsError> {
        let dof = self.dof();
        if dof == 0 {
            return Err(KinematicsError::InvalidArm("dof must be at least 1".into()));
        }
        if self.joint_limits.len() != dof {
            return Err(KinematicsError::InvalidArm(format!(
                "{} joint limits for {dof} joints",
                self.joint_limits.len()
            )));
        }
        if let Some(j) = self.joint_limits.iter().position(|[lo, hi]| !(lo < hi)) {
            return Err(KinematicsError::InvalidArm(format!(
                "joint {j} has lo >= hi"
            )));
        }
        if self.link_shapes.len() > dof + 1 {
            return Err(KinematicsError::InvalidArm(format!(
                "{} link shapes exceed dof + 1",
                self.link_shapes.len()
            )));
        }
        for ls in &self.link_shapes {
            if ls.link > dof {
                return Err(KinematicsError::InvalidArm(format!(
                    "shape attached to link {} of a {dof}-dof arm",
                    ls.link
                )));
            }
            ls.shape.validate()?;
        }
        for q in [&self.home, &self.ik_seed, &self.drop].into_iter().flatten() {
            self.check_dim(q)?;
        }
        Ok(())
    }

    pub fn check_dim(&self, q: &JointConfig) -> Result<(), KinematicsError> {
        if q.len() != self.dof() {
            return Err(KinematicsError::DimensionMismatch {
                expected: self.dof(),
                actual: q.len(),
            });
        }
        Ok(())
    }

    pub fn home(&self) -> JointConfig {
        self.home.clone().unwrap_or_else(|| JointConfig::zeros(self.dof()))
    }

    pub fn ik_seed(&self) -> JointConfig {
        self.ik_seed.clone().unwrap_or_else(|| self.home())
    }

    pub fn drop_config(&self) -> JointConfig {
        self.drop.clone().unwrap_or_else(|| self.home())
    }

    pub fn within_limits(&self, q: &JointConfig) -> bool {
        q.len() == self.dof()
            && q
                .0
                .iter()
                .zip(&self.joint_limits)
                .all(|(v, [lo, hi])| *v >= *lo && *v <= *hi)
    }

    pub fn clamp_to_limits(&self, q: &mut [f64]) {
        for (v, [lo, hi]) in q.iter_mut().zip(&self.joint_limits) {
            *v = v.clamp(*lo, *hi);
        }
    }

    /// Upper bound on the distance from the base origin to any point of the chain.
    pub fn reach_bound(&self) -> f64 {
        self.dh_parameters
            .iter()
            .map(|p| (p.a * p.a + p.d * p.d).sqrt())
            .sum()
    }

    /// World poses of frames 0..=dof, frame 0 being the base.
    pub fn link_frames(&self, q: &[f64]) -> Result<Vec<Isometry3<f64>>, KinematicsError> {
        if q.len() != self.dof() {
            return Err(KinematicsError::DimensionMismatch {
                expected: self.dof(),
                actual: q.len(),
            });
        }
        let mut frames = Vec::with_capacity(self.dof() + 1);
        let mut current = *self.base_pose.isometry();
        frames.push(current);
        for (p, &qi) in self.dh_parameters.iter().zip(q) {
            current *= p.transform(qi);
            frames.push(current);
        }
        Ok(frames)
    }

    pub fn forward_kinematics(&self, q: &JointConfig) -> Result<Pose, KinematicsError> {
        let frames = self.link_frames(&q.0)?;
        Ok(Pose::from_isometry(*frames.last().expect("dof >= 1")))
    }

    /// World-placed link shapes, in `link_shapes` order.
    pub fn placed_shapes(&self, q: &[f64]) -> Result<Vec<Placed>, KinematicsError> {
        let frames = self.link_frames(q)?;
        Ok(self
            .link_shapes
            .iter()
            .map(|ls| ls.shape.placed(&Pose::from_isometry(frames[ls.link])))
            .collect())
    }

    /// Geometric Jacobian (linear rows first) at the end-effector.
    fn jacobian(&self, frames: &[Isometry3<f64>]) -> nalgebra::Matrix6xX<f64> {
        let dof = self.dof();
        let pe = frames[dof].translation.vector;
        let mut j = nalgebra::Matrix6xX::zeros(dof);
        for i in 0..dof {
            let f = &frames[i];
            let z = f.rotation * Vector3::z();
            let lin = z.cross(&(pe - f.translation.vector));
            for r in 0..3 {
                j[(r, i)] = lin[r];
                j[(r + 3, i)] = z[r];
            }
        }
        j
    }

    pub fn inverse_kinematics(
        &self,
        target: &Pose,
        seed: &JointConfig,
    ) -> Result<JointConfig, KinematicsError> {
        self.inverse_kinematics_with(target, seed, &IkOptions::default())
            .map(|s| s.q)
    }

    /// Damped least-squares IK with per-iterate clamping to the joint limits.
    pub fn inverse_kinematics_with(
        &self,
        target: &Pose,
        seed: &JointConfig,
        opts: &IkOptions,
    ) -> Result<IkSolution, KinematicsError> {
        self.check_dim(seed)?;
        if seed.0.iter().any(|v| !v.is_finite()) {
            return Err(KinematicsError::Limits);
        }
        let mut q = seed.0.clone();
        self.clamp_to_limits(&mut q);

        let base_dist = (target.translation() - self.base_pose.translation()).norm();
        if base_dist > self.reach_bound() + opts.position_tolerance {
            return Err(KinematicsError::Unreachable {
                iterations: 0,
                position_error: base_dist - self.reach_bound(),
            });
        }

        let lambda2 = opts.damping * opts.damping;
        let target_t = target.translation();
        let target_r = target.rotation();
        let mut pos_err = f64::INFINITY;
        for iter in 0..=opts.max_iterations {
            let frames = self.link_frames(&q)?;
            let ee = &frames[self.dof()];
            let ep = target_t - ee.translation.vector;
            let er = (target_r * ee.rotation.inverse()).scaled_axis();
            pos_err = ep.norm();
            let rot_err = er.norm();
            if pos_err < opts.position_tolerance * 0.5 && rot_err < opts.orientation_tolerance * 0.5 {
                return Ok(IkSolution {
                    q: JointConfig(q),
                    iterations: iter,
                    position_error: pos_err,
                    orientation_error: rot_err,
                });
            }
            if iter == opts.max_iterations {
                break;
            }
            let e = Vector6::new(ep.x, ep.y, ep.z, er.x, er.y, er.z);
            let j = self.jacobian(&frames);
            let jjt: Matrix6<f64> = &j * j.transpose() + Matrix6::identity() * lambda2;
            let Some(chol) = jjt.cholesky() else {
                break;
            };
            let dq = j.transpose() * chol.solve(&e);
            let max_abs = dq.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let scale = if max_abs > opts.max_step {
                opts.max_step / max_abs
            } else {
                1.0
            };
            for (qi, dqi) in q.iter_mut().zip(dq.iter()) {
                *qi += dqi * scale;
            }
            self.clamp_to_limits(&mut q);
        }
        Err(KinematicsError::Unreachable {
            iterations: opts.max_iterations,
            position_error: pos_err,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn planar_two_link() -> SerialArm {
        let row = DhParam {
            a: 0.5,
            alpha: 0.0,
            d: 0.0,
            theta_offset: 0.0,
        };
        SerialArm {
            name: "planar".into(),
            base_pose: Pose::identity(),
            dh_parameters: vec![row, row],
            joint_limits: vec![[-PI, PI]; 2],
            link_shapes: vec![],
            adjacency_span: 1,
            home: None,
            ik_seed: None,
            drop: None,
        }
    }

    #[test]
    fn straight_planar_chain() {
        let arm = planar_two_link();
        let p = arm.forward_kinematics(&JointConfig::zeros(2)).unwrap();
        assert!((p.translation() - Vector3::new(1.0, 0.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn limits_boundary_is_finite() {
        let arm = planar_two_link();
        let p = arm.forward_kinematics(&JointConfig(vec![PI, -PI])).unwrap();
        assert!(p.translation().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn wrong_dimension_rejected() {
        let arm = planar_two_link();
        assert_eq!(
            arm.forward_kinematics(&JointConfig::zeros(3)),
            Err(KinematicsError::DimensionMismatch {
                expected: 2,
                actual: 3
            })
        );
    }

    #[test]
    fn validation_catches_bad_limits() {
        let mut arm = planar_two_link();
        arm.joint_limits[1] = [1.0, 1.0];
        assert!(arm.validate().is_err());
    }
}
