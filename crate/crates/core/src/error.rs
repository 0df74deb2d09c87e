//
// Copyright 2026 The shufdp-kde Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input is not unit norm (|x| = {norm})")]
    NonUnitInput { norm: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("degenerate bitsum configuration: {0}")]
    DegenerateConfig(String),

    #[error("instance tag {tag} out of range for {cells} cells")]
    TagOutOfRange { tag: u32, cells: usize },

    #[error("declared {declared} users but received input from {actual}")]
    UserCountMismatch { declared: u64, actual: u64 },

    #[error("privacy budget infeasible: {0}")]
    Infeasible(String),

    #[error("reported class index {class} (0-based) has no users")]
    EmptyClass { class: usize },

    #[error(
        "could not place {classes} centers with the requested separation in {attempts} attempts"
    )]
    InfeasibleSeparation { classes: usize, attempts: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParam(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
