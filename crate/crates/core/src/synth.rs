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

//! Spherical Gaussian mixtures on the unit sphere.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::numfmt;
use crate::rng;
use crate::vector::{dot, normalize, sample_unit};

/// Rejection attempts allowed per center.
pub const MAX_CENTER_ATTEMPTS: usize = 10_000;

pub const DEFAULT_SPREAD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureParams {
    pub classes: usize,
    pub per_class: usize,
    pub dim: usize,
    /// Minimum pairwise angle between centers, in radians.
    #[serde(serialize_with = "numfmt::serialize_f64")]
    pub separation: f64,
    /// Per-coordinate standard deviation of the offset added to a center
    /// before renormalizing.
    #[serde(serialize_with = "numfmt::serialize_f64")]
    pub spread: f64,
    #[serde(default)]
    pub test_per_class: usize,
    pub seed: u64,
}

impl MixtureParams {
    pub fn new(classes: usize, per_class: usize, dim: usize, separation: f64, seed: u64) -> Self {
        MixtureParams {
            classes,
            per_class,
            dim,
            separation,
            spread: DEFAULT_SPREAD,
            test_per_class: 0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::invalid("need at least 2 classes"));
        }
        if self.dim < 2 {
            return Err(Error::invalid("need dimension d >= 2"));
        }
        if self.per_class == 0 {
            return Err(Error::invalid("need at least one point per class"));
        }
        if !(self.separation >= 0.0 && self.separation <= std::f64::consts::PI) {
            return Err(Error::invalid(format!(
                "separation must lie in [0, pi], got {}",
                self.separation
            )));
        }
        if !(self.spread >= 0.0 && self.spread.is_finite()) {
            return Err(Error::invalid(format!(
                "spread must be nonnegative, got {}",
                self.spread
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    pub params: MixtureParams,
    pub centers: Vec<Vec<f64>>,
    pub train: LabeledDataset,
    pub test: Option<LabeledDataset>,
}

/// Draws `classes` uniform unit vectors with pairwise dot `<= cos(separation)`.
pub fn place_centers<R: Rng + ?Sized>(
    classes: usize,
    dim: usize,
    separation: f64,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    let max_dot = separation.cos();
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(classes);
    for _ in 0..classes {
        let found = (0..MAX_CENTER_ATTEMPTS)
            .map(|_| sample_unit(dim, rng))
            .find(|c| centers.iter().all(|o| dot(c, o) <= max_dot));
        match found {
            Some(c) => centers.push(c),
            None => {
                return Err(Error::InfeasibleSeparation {
                    classes,
                    attempts: MAX_CENTER_ATTEMPTS,
                })
            }
        }
    }
    Ok(centers)
}

/// A point near `center`: `normalize(center + spread * z)` with `z ~ N(0, I)`.
pub fn sample_around<R: Rng + ?Sized>(center: &[f64], spread: f64, rng: &mut R) -> Vec<f64> {
    loop {
        let mut x: Vec<f64> = center
            .iter()
            .map(|c| c + spread * rng.sample::<f64, _>(StandardNormal))
            .collect();
        if normalize(&mut x) {
            return x;
        }
    }
}

fn draw_split<R: Rng + ?Sized>(
    params: &MixtureParams,
    centers: &[Vec<f64>],
    per_class: usize,
    rng: &mut R,
) -> Result<LabeledDataset> {
    let mut vectors = Vec::with_capacity(per_class * centers.len());
    let mut labels = Vec::with_capacity(per_class * centers.len());
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..per_class {
            vectors.push(sample_around(center, params.spread, rng));
            labels.push(c);
        }
    }
    LabeledDataset::new(params.dim, params.classes, vectors, labels)
}

pub fn generate(params: &MixtureParams) -> Result<Mixture> {
    params.validate()?;
    let centers = place_centers(
        params.classes,
        params.dim,
        params.separation,
        &mut rng::stream(params.seed, "synth-centers", 0),
    )?;
    let train = draw_split(
        params,
        &centers,
        params.per_class,
        &mut rng::stream(params.seed, "synth-train", 0),
    )?;
    let test = if params.test_per_class > 0 {
        Some(draw_split(
            params,
            &centers,
            params.test_per_class,
            &mut rng::stream(params.seed, "synth-test", 0),
        )?)
    } else {
        None
    };
    Ok(Mixture {
        params: *params,
        centers,
        train,
        test,
    })
}
