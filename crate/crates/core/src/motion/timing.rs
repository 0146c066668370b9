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

//! Rest-to-rest trapezoidal timing of straight joint-space segments.

/// Joint speed cap (rad/s).
pub const MAX_JOINT_SPEED: f64 = 1.0;
/// Joint acceleration cap (rad/s^2).
pub const MAX_JOINT_ACCEL: f64 = 2.0;

/// Duration of a rest-to-rest move whose largest joint travels `d` radians.
pub fn segment_duration(d: f64) -> f64 {
    let (v, a) = (MAX_JOINT_SPEED, MAX_JOINT_ACCEL);
    if d <= 0.0 {
        0.0
    } else if d >= v * v / a {
        d / v + v / a
    } else {
        2.0 * (d / a).sqrt()
    }
}

/// Fraction of the segment covered `tau` seconds into a move of length `d`.
pub fn progress(d: f64, tau: f64) -> f64 {
    let total = segment_duration(d);
    if total <= 0.0 || tau >= total {
        return 1.0;
    }
    if tau <= 0.0 {
        return 0.0;
    }
    let (v, a) = (MAX_JOINT_SPEED, MAX_JOINT_ACCEL);
    let peak = (a * d).sqrt().min(v);
    let ramp = peak / a;
    let s = if tau < ramp {
        0.5 * a * tau * tau
    } else if tau <= total - ramp {
        0.5 * a * ramp * ramp + peak * (tau - ramp)
    } else {
        let left = total - tau;
        d - 0.5 * a * left * left
    };
    (s / d).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn long_move_cruises() {
        assert!((segment_duration(2.0) - 2.5).abs() < 1e-12);
        assert!((progress(2.0, 1.25) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn short_move_is_triangular() {
        let t = segment_duration(0.18);
        assert!((t - 0.6).abs() < 1e-12);
        assert!((progress(0.18, 0.3) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn progress_is_monotone_and_continuous() {
        for d in [0.01, 0.3, 0.5, 1.7] {
            let total = segment_duration(d);
            let mut prev = 0.0;
            for i in 0..=1000 {
                let p = progress(d, total * i as f64 / 1000.0);
                assert!(p >= prev - 1e-12 && p - prev < 0.01);
                prev = p;
            }
            assert_eq!(prev, 1.0);
        }
    }
}
