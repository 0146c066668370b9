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

//! Geometric primitives and signed distances between them.
//!
//! Capsules are segments along the local z axis swept by a radius, boxes are
//! centred on their local origin. Positive distance means separation, zero or
//! negative means contact or penetration.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::error::KinematicsError;
use super::pose::Pose;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapeKind {
    /// Segment of length `2 * half_length` along local z, swept by `radius`.
    Capsule { half_length: f64, radius: f64 },
    Sphere { radius: f64 },
    Box { half_extents: [f64; 3] },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollisionShape {
    #[serde(flatten)]
    pub kind: ShapeKind,
    #[serde(default)]
    pub local_pose: Pose,
}

impl CollisionShape {
    pub fn capsule(half_length: f64, radius: f64) -> Self {
        CollisionShape {
            kind: ShapeKind::Capsule {
                half_length,
                radius,
            },
            local_pose: Pose::identity(),
        }
    }

    pub fn sphere(radius: f64) -> Self {
        CollisionShape {
            kind: ShapeKind::Sphere { radius },
            local_pose: Pose::identity(),
        }
    }

    pub fn cuboid(hx: f64, hy: f64, hz: f64) -> Self {
        CollisionShape {
            kind: ShapeKind::Box {
                half_extents: [hx, hy, hz],
            },
            local_pose: Pose::identity(),
        }
    }

    pub fn with_local_pose(mut self, pose: Pose) -> Self {
        self.local_pose = pose;
        self
    }

    pub fn validate(&self) -> Result<(), KinematicsError> {
        let ok = match &self.kind {
            ShapeKind::Capsule {
                half_length,
                radius,
            } => *half_length > 0.0 && *radius > 0.0,
            ShapeKind::Sphere { radius } => *radius > 0.0,
            ShapeKind::Box { half_extents } => half_extents.iter().all(|h| *h > 0.0),
        };
        if ok {
            Ok(())
        } else {
            Err(KinematicsError::InvalidShape(format!("{:?}", self.kind)))
        }
    }

    /// Places the shape in the world given the pose of the frame it is attached to.
    pub fn placed(&self, frame: &Pose) -> Placed {
        let pose = frame.compose(&self.local_pose);
        match self.kind {
            ShapeKind::Sphere { radius } => Placed::sphere(pose.translation(), radius),
            ShapeKind::Capsule {
                half_length,
                radius,
            } => {
                let axis = pose.transform_vector(&Vector3::new(0.0, 0.0, half_length));
                let c = pose.translation();
                Placed::capsule(c - axis, c + axis, radius)
            }
            ShapeKind::Box { half_extents } => {
                let rot = pose.rotation().to_rotation_matrix().into_inner();
                Placed::cuboid(pose.translation(), rot, Vector3::from(half_extents))
            }
        }
    }
}

/// A shape resolved into world coordinates, with a bounding sphere for broadphase culling.
#[derive(Clone, Debug, PartialEq)]
pub struct Placed {
    pub geometry: Geometry,
    pub bound_center: Vector3<f64>,
    pub bound_radius: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Geometry {
    Sphere {
        center: Vector3<f64>,
        radius: f64,
    },
    Capsule {
        a: Vector3<f64>,
        b: Vector3<f64>,
        radius: f64,
    },
    Box {
        center: Vector3<f64>,
        /// Columns are the box axes in world coordinates.
        axes: Matrix3<f64>,
        half: Vector3<f64>,
    },
}

impl Placed {
    pub fn sphere(center: Vector3<f64>, radius: f64) -> Self {
        Placed {
            geometry: Geometry::Sphere { center, radius },
            bound_center: center,
            bound_radius: radius,
        }
    }

    pub fn capsule(a: Vector3<f64>, b: Vector3<f64>, radius: f64) -> Self {
        Placed {
            bound_center: (a + b) * 0.5,
            bound_radius: (b - a).norm() * 0.5 + radius,
            geometry: Geometry::Capsule { a, b, radius },
        }
    }

    pub fn cuboid(center: Vector3<f64>, axes: Matrix3<f64>, half: Vector3<f64>) -> Self {
        Placed {
            bound_center: center,
            bound_radius: half.norm(),
            geometry: Geometry::Box { center, axes, half },
        }
    }

    /// True when the two shapes are closer than `threshold`.
    ///
    /// Equivalent to `distance(self, other) < threshold` but rejects most pairs
    /// with cheap lower bounds first.
    pub fn within(&self, other: &Placed, threshold: f64) -> bool {
        let centers = (self.bound_center - other.bound_center).norm();
        if centers - self.bound_radius - other.bound_radius >= threshold {
            return false;
        }
        match (&self.geometry, &other.geometry) {
            (Geometry::Capsule { a, b, radius }, Geometry::Box { center, axes, half })
            | (Geometry::Box { center, axes, half }, Geometry::Capsule { a, b, radius }) => {
                if segment_box_axis_gap(a, b, center, axes, half) - radius >= threshold {
                    return false;
                }
            }
            _ => {}
        }
        distance(self, other) < threshold
    }
}

/// Signed distance between two shapes at two poses. Symmetric in its arguments.
pub fn shape_distance(a: &CollisionShape, pose_a: &Pose, b: &CollisionShape, pose_b: &Pose) -> f64 {
    distance(&a.placed(pose_a), &b.placed(pose_b))
}

pub fn distance(x: &Placed, y: &Placed) -> f64 {
    use Geometry::*;
    match (&x.geometry, &y.geometry) {
        (Sphere { center: c1, radius: r1 }, Sphere { center: c2, radius: r2 }) => {
            (c1 - c2).norm() - r1 - r2
        }
        (Sphere { center, radius: rs }, Capsule { a, b, radius: rc })
        | (Capsule { a, b, radius: rc }, Sphere { center, radius: rs }) => {
            point_segment_distance(center, a, b) - rs - rc
        }
        (Capsule { a: a1, b: b1, radius: r1 }, Capsule { a: a2, b: b2, radius: r2 }) => {
            // canonical argument order keeps the result bit-identical under swapping
            let d = if lex_less(a1, b1, a2, b2) {
                segment_segment_distance(a1, b1, a2, b2)
            } else {
                segment_segment_distance(a2, b2, a1, b1)
            };
            d - r1 - r2
        }
        (Sphere { center: p, radius }, Box { center, axes, half })
        | (Box { center, axes, half }, Sphere { center: p, radius }) => {
            point_box_signed_distance(p, center, axes, half) - radius
        }
        (Capsule { a, b, radius }, Box { center, axes, half })
        | (Box { center, axes, half }, Capsule { a, b, radius }) => {
            segment_box_signed_distance(a, b, center, axes, half) - radius
        }
        (
            Box { center: c1, axes: ax1, half: h1 },
            Box { center: c2, axes: ax2, half: h2 },
        ) => box_box_separation(c1, ax1, h1, c2, ax2, h2),
    }
}

fn lex_less(a1: &Vector3<f64>, b1: &Vector3<f64>, a2: &Vector3<f64>, b2: &Vector3<f64>) -> bool {
    let k1 = [a1.x, a1.y, a1.z, b1.x, b1.y, b1.z];
    let k2 = [a2.x, a2.y, a2.z, b2.x, b2.y, b2.z];
    for (u, v) in k1.iter().zip(k2.iter()) {
        if u < v {
            return true;
        }
        if u > v {
            return false;
        }
    }
    true
}

pub fn point_segment_distance(p: &Vector3<f64>, a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 {
        ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p - (a + ab * t)).norm()
}

/// Closest distance between segments [p1, q1] and [p2, q2].
pub fn segment_segment_distance(
    p1: &Vector3<f64>,
    q1: &Vector3<f64>,
    p2: &Vector3<f64>,
    q2: &Vector3<f64>,
) -> f64 {
    const EPS: f64 = 1e-15;
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(&r);
    let (s, t);
    if a <= EPS && e <= EPS {
        return r.norm();
    }
    if a <= EPS {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= EPS {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > EPS * a * e {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    let c1 = p1 + d1 * s;
    let c2 = p2 + d2 * t;
    (c1 - c2).norm()
}

/// Signed distance from a point to an oriented box; negative inside.
pub fn point_box_signed_distance(
    p: &Vector3<f64>,
    center: &Vector3<f64>,
    axes: &Matrix3<f64>,
    half: &Vector3<f64>,
) -> f64 {
    let local = axes.transpose() * (p - center);
    let q = local.abs() - half;
    let outside = Vector3::new(q.x.max(0.0), q.y.max(0.0), q.z.max(0.0)).norm();
    let inside = q.x.max(q.y).max(q.z).min(0.0);
    outside + inside
}

/// Minimum over the segment of the point-box signed distance.
///
/// The signed distance to a convex set is convex, so its restriction to the
/// segment is a convex function of the segment parameter and golden-section
/// search converges to the minimum.
pub fn segment_box_signed_distance(
    a: &Vector3<f64>,
    b: &Vector3<f64>,
    center: &Vector3<f64>,
    axes: &Matrix3<f64>,
    half: &Vector3<f64>,
) -> f64 {
    let f = |t: f64| point_box_signed_distance(&(a + (b - a) * t), center, axes, half);
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..64 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    f1.min(f2).min(f(0.0)).min(f(1.0))
}

/// Lower bound on segment-to-box distance from the box's own face axes.
fn segment_box_axis_gap(
    a: &Vector3<f64>,
    b: &Vector3<f64>,
    center: &Vector3<f64>,
    axes: &Matrix3<f64>,
    half: &Vector3<f64>,
) -> f64 {
    let la = axes.transpose() * (a - center);
    let lb = axes.transpose() * (b - center);
    let mut gap = f64::NEG_INFINITY;
    for i in 0..3 {
        let lo = la[i].min(lb[i]);
        let hi = la[i].max(lb[i]);
        gap = gap.max(lo - half[i]).max(-half[i] - hi);
    }
    gap
}

/// Separating-axis test over the 15 candidate axes.
///
/// Overlapping boxes report the negated minimum penetration depth. Separated
/// boxes report the largest gap along any candidate axis, which equals the
/// Euclidean distance for face-aligned configurations and is a lower bound
/// otherwise.
pub fn box_box_separation(
    c1: &Vector3<f64>,
    ax1: &Matrix3<f64>,
    h1: &Vector3<f64>,
    c2: &Vector3<f64>,
    ax2: &Matrix3<f64>,
    h2: &Vector3<f64>,
) -> f64 {
    let d = c2 - c1;
    let mut best = f64::NEG_INFINITY;
    let mut test = |axis: Vector3<f64>| {
        let n = axis.norm();
        if n < 1e-9 {
            return;
        }
        let l = axis / n;
        let r1: f64 = (0..3).map(|i| h1[i] * ax1.column(i).dot(&l).abs()).sum();
        let r2: f64 = (0..3).map(|i| h2[i] * ax2.column(i).dot(&l).abs()).sum();
        let gap = d.dot(&l).abs() - (r1 + r2);
        if gap > best {
            best = gap;
        }
    };
    for i in 0..3 {
        test(ax1.column(i).into_owned());
        test(ax2.column(i).into_owned());
    }
    for i in 0..3 {
        for j in 0..3 {
            let u = ax1.column(i).into_owned();
            let v = ax2.column(j).into_owned();
            // keep the cross-product orientation independent of argument order
            let axis = if lex_le3(&u, &v) { u.cross(&v) } else { v.cross(&u) };
            test(axis);
        }
    }
    best
}

fn lex_le3(u: &Vector3<f64>, v: &Vector3<f64>) -> bool {
    for k in 0..3 {
        if u[k] < v[k] {
            return true;
        }
        if u[k] > v[k] {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    use nalgebra::UnitQuaternion;

    #[test]
    fn spheres_three_apart() {
        let s = CollisionShape::sphere(1.0);
        let d = shape_distance(
            &s,
            &Pose::identity(),
            &s,
            &Pose::from_translation(3.0, 0.0, 0.0),
        );
        assert!((d - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identical_shapes_overlap() {
        let shapes = [
            CollisionShape::sphere(0.2),
            CollisionShape::capsule(0.3, 0.05),
            CollisionShape::cuboid(0.1, 0.2, 0.3),
        ];
        let pose = Pose::from_xyz_yaw(0.4, -0.2, 1.0, 0.7);
        for s in &shapes {
            assert!(shape_distance(s, &pose, s, &pose) <= 0.0);
        }
    }

    #[test]
    fn parallel_capsules_gap() {
        let c = CollisionShape::capsule(0.5, 0.1);
        let d = shape_distance(
            &c,
            &Pose::identity(),
            &c,
            &Pose::from_translation(0.5, 0.0, 0.0),
        );
        assert!((d - 0.3).abs() < 1e-9);
    }

    #[test]
    fn capsule_above_box() {
        let table = CollisionShape::cuboid(1.0, 1.0, 0.05);
        let rod = CollisionShape::capsule(0.2, 0.03)
            .with_local_pose(Pose::new(
                Vector3::zeros(),
                UnitQuaternion::from_axis_angle(&Vector3::y_axis(), FRAC_PI_2),
            ));
        let d = shape_distance(
            &table,
            &Pose::from_translation(0.0, 0.0, -0.05),
            &rod,
            &Pose::from_translation(0.3, 0.1, 0.2),
        );
        assert!((d - 0.17).abs() < 1e-9, "{d}");
        // sunk halfway into the top face
        let d = shape_distance(
            &table,
            &Pose::from_translation(0.0, 0.0, -0.05),
            &rod,
            &Pose::from_translation(0.3, 0.1, 0.0),
        );
        assert!((d + 0.03).abs() < 1e-9, "{d}");
    }

    #[test]
    fn sphere_inside_box_is_negative() {
        let b = CollisionShape::cuboid(0.5, 0.5, 0.5);
        let s = CollisionShape::sphere(0.1);
        let d = shape_distance(&b, &Pose::identity(), &s, &Pose::from_translation(0.3, 0.0, 0.0));
        assert!((d + 0.3).abs() < 1e-12);
    }

    #[test]
    fn box_box_face_aligned() {
        let b = CollisionShape::cuboid(0.5, 0.5, 0.5);
        let d = shape_distance(&b, &Pose::identity(), &b, &Pose::from_translation(1.25, 0.0, 0.0));
        assert!((d - 0.25).abs() < 1e-12);
        let d = shape_distance(&b, &Pose::identity(), &b, &Pose::from_translation(0.9, 0.0, 0.0));
        assert!((d + 0.1).abs() < 1e-12);
    }

    #[test]
    fn within_agrees_with_distance() {
        let table = CollisionShape::cuboid(1.0, 1.0, 0.05).placed(&Pose::identity());
        let rod = CollisionShape::capsule(0.2, 0.03).placed(&Pose::from_translation(0.0, 0.0, 0.30));
        let d = distance(&table, &rod);
        assert!(table.within(&rod, d + 1e-9));
        assert!(!table.within(&rod, d - 1e-9));
    }

    #[test]
    fn invalid_sizes_rejected() {
        assert!(CollisionShape::sphere(0.0).validate().is_err());
        assert!(CollisionShape::cuboid(0.1, -0.1, 0.1).validate().is_err());
        assert!(CollisionShape::capsule(0.1, 0.1).validate().is_ok());
    }
}
