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

use std::cell::Cell;
use std::collections::BTreeSet;

use rand::Rng;

use super::PlanningProblem;
use crate::kinematics::CompositeConfig;

/// The active joints of a planning problem flattened into one vector space.
pub(crate) struct Space<'a> {
    problem: &'a PlanningProblem,
    /// `(robot, joint)` of each active dimension.
    dims: Vec<(usize, usize)>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub resolution: f64,
    checks: Cell<usize>,
}

impl<'a> Space<'a> {
    pub fn new(problem: &'a PlanningProblem, resolution: f64) -> Self {
        let cell = problem.world.cell();
        let mut dims = Vec::new();
        let (mut lo, mut hi) = (Vec::new(), Vec::new());
        for &r in &problem.active_robots {
            for (j, [l, h]) in cell.arms[r].joint_limits.iter().enumerate() {
                dims.push((r, j));
                lo.push(*l);
                hi.push(*h);
            }
        }
        Space {
            problem,
            dims,
            lo,
            hi,
            resolution,
            checks: Cell::new(0),
        }
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn checks(&self) -> usize {
        self.checks.get()
    }

    pub fn ignore(&self) -> &BTreeSet<u32> {
        &self.problem.ignore_objects
    }

    pub fn project(&self, c: &CompositeConfig) -> Vec<f64> {
        self.dims.iter().map(|&(r, j)| c.0[r].0[j]).collect()
    }

    pub fn lift(&self, x: &[f64]) -> CompositeConfig {
        let mut c = self.problem.start.clone();
        for (&(r, j), v) in self.dims.iter().zip(x) {
            c.0[r].0[j] = *v;
        }
        c
    }

    pub fn valid(&self, x: &[f64]) -> bool {
        self.checks.set(self.checks.get() + 1);
        !self
            .problem
            .world
            .collision_check(&self.lift(x), self.ignore())
            .unwrap_or(true)
    }

    /// Number of interpolation steps so no joint moves more than the resolution per step.
    pub fn steps(&self, a: &[f64], b: &[f64]) -> usize {
        let max = a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        (max / self.resolution).ceil() as usize
    }

    /// Checks the interpolated points strictly after `a` up to and including `b`,
    /// coarse-to-fine so collisions in the middle are found early.
    pub fn motion_valid(&self, a: &[f64], b: &[f64]) -> bool {
        let n = self.steps(a, b);
        if n == 0 {
            return true;
        }
        if !self.valid(b) {
            return false;
        }
        for k in bisection_order(n) {
            let t = k as f64 / n as f64;
            if !self.valid(&lerp(a, b, t)) {
                return false;
            }
        }
        true
    }

    pub fn uniform(&self, rng: &mut impl Rng) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| rng.random_range(*l..*h))
            .collect()
    }

    pub fn in_bounds(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| v >= l && v <= h)
    }

    /// Per-robot joint configurations for a path of flattened points.
    pub fn to_waypoints(&self, xs: &[Vec<f64>]) -> Vec<CompositeConfig> {
        xs.iter().map(|x| self.lift(x)).collect()
    }

    /// Lebesgue measure of the joint-limit box.
    pub fn measure(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).product()
    }
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Same formula as [`CompositeConfig::lerp`] so planner and validator test identical points.
pub(crate) fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + (y - x) * t).collect()
}

/// Moves from `from` toward `to` by at most `step`.
pub(crate) fn steer(from: &[f64], to: &[f64], step: f64) -> Vec<f64> {
    let d = dist(from, to);
    if d <= step {
        to.to_vec()
    } else {
        lerp(from, to, step / d)
    }
}

/// Indices `1..n` ordered by repeated halving (midpoint first); index `n` is excluded.
pub(crate) fn bisection_order(n: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(n.saturating_sub(1));
    let mut seen = vec![false; n + 1];
    seen[0] = true;
    seen[n] = true;
    let mut stride = n;
    while stride > 1 {
        let half = stride / 2;
        let mut k = half;
        while k < n {
            if !seen[k] {
                seen[k] = true;
                out.push(k);
            }
            k += half.max(1);
        }
        stride = half;
    }
    for (k, s) in seen.iter().enumerate() {
        if !s {
            out.push(k);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_order_is_a_permutation() {
        for n in 1..40 {
            let mut v = bisection_order(n);
            v.sort_unstable();
            assert_eq!(v, (1..n).collect::<Vec<_>>());
        }
    }

    #[test]
    fn steer_caps_step() {
        let s = steer(&[0.0, 0.0], &[3.0, 4.0], 1.0);
        assert!((dist(&[0.0, 0.0], &s) - 1.0).abs() < 1e-12);
        assert_eq!(steer(&[0.0], &[0.5], 1.0), vec![0.5]);
    }
}
