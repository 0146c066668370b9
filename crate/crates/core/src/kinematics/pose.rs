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

use std::ops::Mul;

use nalgebra::{Isometry3, Quaternion, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Rigid transform in 3-D: a unit-quaternion rotation followed by a translation in meters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose(Isometry3<f64>);

impl Pose {
    pub fn identity() -> Self {
        Pose(Isometry3::identity())
    }

    pub fn new(translation: Vector3<f64>, rotation: UnitQuaternion<f64>) -> Self {
        Pose(Isometry3::from_parts(Translation3::from(translation), rotation))
    }

    pub fn from_translation(x: f64, y: f64, z: f64) -> Self {
        Pose::new(Vector3::new(x, y, z), UnitQuaternion::identity())
    }

    /// Translation plus a rotation of `yaw` radians about the world z axis.
    pub fn from_xyz_yaw(x: f64, y: f64, z: f64, yaw: f64) -> Self {
        Pose::new(
            Vector3::new(x, y, z),
            UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw),
        )
    }

    pub fn from_isometry(iso: Isometry3<f64>) -> Self {
        Pose(iso)
    }

    pub fn isometry(&self) -> &Isometry3<f64> {
        &self.0
    }

    pub fn translation(&self) -> Vector3<f64> {
        self.0.translation.vector
    }

    pub fn rotation(&self) -> UnitQuaternion<f64> {
        self.0.rotation
    }

    pub fn compose(&self, other: &Pose) -> Pose {
        Pose(self.0 * other.0)
    }

    pub fn inverse(&self) -> Pose {
        Pose(self.0.inverse())
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.0.rotation * p + self.0.translation.vector
    }

    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0.rotation * v
    }

    /// Translational distance and rotation angle between two poses.
    pub fn error_to(&self, other: &Pose) -> (f64, f64) {
        let dp = (other.translation() - self.translation()).norm();
        let dr = self.rotation().angle_to(&other.rotation());
        (dp, dr)
    }
}

impl Default for Pose {
    fn default() -> Self {
        Pose::identity()
    }
}

impl Mul for Pose {
    type Output = Pose;

    fn mul(self, rhs: Pose) -> Pose {
        self.compose(&rhs)
    }
}

impl Mul<&Pose> for &Pose {
    type Output = Pose;

    fn mul(self, rhs: &Pose) -> Pose {
        self.compose(rhs)
    }
}

#[derive(Serialize, Deserialize)]
struct PoseRepr {
    translation: [f64; 3],
    /// (w, x, y, z)
    rotation: [f64; 4],
}

impl Serialize for Pose {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let t = self.translation();
        let q = self.rotation();
        PoseRepr {
            translation: [t.x, t.y, t.z],
            rotation: [q.w, q.i, q.j, q.k],
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Pose {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = PoseRepr::deserialize(deserializer)?;
        let [w, x, y, z] = repr.rotation;
        let q = Quaternion::new(w, x, y, z);
        let norm = q.norm();
        if !norm.is_finite() || norm < 1e-12 {
            return Err(serde::de::Error::custom("pose rotation quaternion has zero norm"));
        }
        let [tx, ty, tz] = repr.translation;
        Ok(Pose::new(
            Vector3::new(tx, ty, tz),
            UnitQuaternion::from_quaternion(q),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn compose_with_inverse_is_identity() {
        let p = Pose::new(
            Vector3::new(0.3, -1.2, 0.7),
            UnitQuaternion::from_euler_angles(0.4, -0.2, 1.3),
        );
        let id = p.compose(&p.inverse());
        let (dp, dr) = id.error_to(&Pose::identity());
        assert!(dp < 1e-9 && dr < 1e-9);
        assert!((p.rotation().norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn composition_is_associative() {
        let a = Pose::from_xyz_yaw(1.0, 0.0, 0.0, FRAC_PI_2);
        let b = Pose::new(
            Vector3::new(0.0, 2.0, 0.5),
            UnitQuaternion::from_euler_angles(0.1, 0.2, 0.3),
        );
        let c = Pose::from_translation(-0.4, 0.1, 0.9);
        let (dp, dr) = ((a * b) * c).error_to(&(a * (b * c)));
        assert!(dp < 1e-12 && dr < 1e-9);
    }

    #[test]
    fn json_roundtrip_normalizes_rotation() {
        let json = r#"{"translation":[1.0,2.0,3.0],"rotation":[2.0,0.0,0.0,0.0]}"#;
        let p: Pose = serde_json::from_str(json).unwrap();
        assert!((p.rotation().norm() - 1.0).abs() < 1e-12);
        let back: Pose = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<Pose>(
            r#"{"translation":[0,0,0],"rotation":[0,0,0,0]}"#
        )
        .is_err());
    }
}
