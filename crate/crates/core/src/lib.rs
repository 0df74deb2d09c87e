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

//! Kernel density estimation under shuffled differential privacy.
//!
//! Users hold unit vectors. Each one quantizes its vector through a
//! locality-sensitive quantization (LSQ) family, feeds the resulting bits to
//! independent shuffled bitsum protocols, and the analyzer releases a matrix
//! from which the kernel density of the whole dataset can be queried at any
//! point. On top sits a highest-density-class classifier and class decoder.

// Parameter checks use negated comparisons so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bitsum;
pub mod classify;
pub mod cli;
pub mod data;
pub mod error;
pub mod kde;
pub mod lsq;
pub mod numfmt;
pub mod privacy;
pub mod rng;
pub mod shuffle;
pub mod synth;
pub mod vector;

pub use error::{Error, Result};
