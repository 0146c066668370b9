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

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("dimension mismatch: expected {expected} values, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("target unreachable after {iterations} iterations (position error {position_error:.3e} m)")]
    Unreachable {
        iterations: usize,
        position_error: f64,
    },
    #[error("joint limits violated and projection failed")]
    Limits,
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("invalid arm: {0}")]
    InvalidArm(String),
    #[error("invalid workcell: {0}")]
    InvalidWorkcell(String),
    #[error("json: {0}")]
    Json(String),
}
