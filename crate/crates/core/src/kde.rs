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

//! Shuffled-DP kernel density estimation from bitsum protocols.
//!
//! Public initialization draws `I` LSQ pairs `(f_i, g_i)` from a public seed
//! and fixes one bitsum instance per `(i, j)` in `[I] x [Q]`. Each user rounds
//! every coordinate of `f_i(x)` to a bit `b_ij ~ Bernoulli((1 + f_i(x)_j / R) / 2)`,
//! runs the bitsum randomizer on it and tags the resulting payloads with
//! `(i, j)`. The analyzer routes shuffled payloads back to their instances and
//! publishes `F_ij = (2 B_ij - n) R`. A query is then
//!
//! ```text
//! K(y) = 1 / (n I) * sum_{i, j} F_ij * g_i(y)_j
//! ```
//!
//! which touches only the released matrix and the public pairs.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bitsum::{BitsumProtocol, PayloadTally};
use crate::error::{Error, Result};
use crate::lsq::{KernelKind, LsqPair, LsqSpec, PairParams};
use crate::numfmt;
use crate::rng;
use crate::shuffle::{self, Envelope, InstanceGrid, InstanceTag, TranscriptMeter};
use crate::vector::check_unit;

/// Draws the `I` public pairs for `public_seed`.
pub fn sample_public_pairs(spec: &LsqSpec, repetitions: usize, public_seed: u64) -> Vec<LsqPair> {
    let mut stream = rng::stream(public_seed, "lsq-pairs", 0);
    (0..repetitions)
        .map(|_| LsqPair::sample(spec, &mut stream))
        .collect()
}

/// Randomized rounding of `value` in `[-bound, bound]` to a bit with
/// `P(1) = (1 + value / bound) / 2`, so that `E[(2b - 1) bound] = value`.
pub fn discretize<R: Rng + ?Sized>(value: f64, bound: f64, rng: &mut R) -> bool {
    let prob = (0.5 * (1.0 + value / bound)).clamp(0.0, 1.0);
    rng.random::<f64>() < prob
}

/// Published state of one protocol run before any user participates.
#[derive(Debug, Clone)]
pub struct ProtocolInit<P> {
    spec: LsqSpec,
    pairs: Vec<LsqPair>,
    bitsum: P,
    public_seed: u64,
    grid: InstanceGrid,
}

impl<P: BitsumProtocol> ProtocolInit<P> {
    pub fn new(spec: LsqSpec, repetitions: usize, bitsum: P, public_seed: u64) -> Result<Self> {
        if repetitions == 0 {
            return Err(Error::invalid("repetitions I must be at least 1"));
        }
        if bitsum.users() == 0 {
            return Err(Error::invalid("declared user count must be at least 1"));
        }
        let grid = InstanceGrid::new(repetitions, spec.width())?;
        Ok(ProtocolInit {
            pairs: sample_public_pairs(&spec, repetitions, public_seed),
            spec,
            bitsum,
            public_seed,
            grid,
        })
    }

    pub fn spec(&self) -> &LsqSpec {
        &self.spec
    }

    pub fn repetitions(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[LsqPair] {
        &self.pairs
    }

    pub fn bitsum(&self) -> &P {
        &self.bitsum
    }

    pub fn users(&self) -> u64 {
        self.bitsum.users()
    }

    pub fn grid(&self) -> InstanceGrid {
        self.grid
    }

    pub fn public_seed(&self) -> u64 {
        self.public_seed
    }

    /// Local randomizer of one user. Every `(i, j)` instance is visited,
    /// including zero coordinates, which round to a fair coin.
    pub fn user_randomize<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> Result<Vec<Envelope>> {
        check_unit(x, self.spec.dim())?;
        let width = self.spec.width();
        let bound = self.spec.bound();
        let mut features = vec![0.0; width];
        let mut payloads = Vec::new();
        let mut out = Vec::with_capacity(self.grid.cells());
        for (i, pair) in self.pairs.iter().enumerate() {
            pair.features_into(x, &mut features);
            for (j, value) in features.iter().enumerate() {
                let bit = discretize(*value, bound, rng);
                payloads.clear();
                self.bitsum.randomize_bit(bit, rng, &mut payloads);
                let tag = InstanceTag((i * width + j) as u32);
                out.extend(payloads.iter().map(|&payload| Envelope { tag, payload }));
            }
        }
        Ok(out)
    }

    /// Runs each instance's analyzer on its routed payloads and publishes
    /// `F_ij = (2 B_ij - n) R`.
    pub fn analyze<R: Rng + ?Sized>(
        &self,
        cells: &[PayloadTally],
        rng: &mut R,
    ) -> Result<ReleasedModel> {
        if cells.len() != self.grid.cells() {
            return Err(Error::invalid(format!(
                "expected {} routed cells, got {}",
                self.grid.cells(),
                cells.len()
            )));
        }
        let n = self.users() as f64;
        let bound = self.spec.bound();
        let f_tilde = cells
            .iter()
            .map(|tally| {
                let estimate = self.bitsum.analyze(*tally, rng)?;
                Ok((2.0 * estimate.value() - n) * bound)
            })
            .collect::<Result<Vec<_>>>()?;
        ReleasedModel::build(
            self.spec,
            self.users(),
            PublicRandomness::Seed(self.public_seed),
            self.pairs.clone(),
            f_tilde,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PublicRandomness {
    /// Pairs are regenerated from this seed.
    Seed(u64),
    /// Pairs are shipped explicitly.
    Explicit,
}

/// The analyzer's published function description: `F` plus public randomness.
/// Holds no per-user values.
#[derive(Debug, Clone, PartialEq)]
pub struct ReleasedModel {
    spec: LsqSpec,
    n: u64,
    public: PublicRandomness,
    pairs: Vec<LsqPair>,
    f_tilde: Vec<f64>,
}

impl ReleasedModel {
    pub fn from_seed(
        spec: LsqSpec,
        n: u64,
        repetitions: usize,
        public_seed: u64,
        f_tilde: Vec<f64>,
    ) -> Result<Self> {
        let pairs = sample_public_pairs(&spec, repetitions, public_seed);
        Self::build(spec, n, PublicRandomness::Seed(public_seed), pairs, f_tilde)
    }

    pub fn from_pairs(
        spec: LsqSpec,
        n: u64,
        pairs: Vec<LsqPair>,
        f_tilde: Vec<f64>,
    ) -> Result<Self> {
        Self::build(spec, n, PublicRandomness::Explicit, pairs, f_tilde)
    }

    fn build(
        spec: LsqSpec,
        n: u64,
        public: PublicRandomness,
        pairs: Vec<LsqPair>,
        f_tilde: Vec<f64>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("released model needs n >= 1"));
        }
        if pairs.is_empty() {
            return Err(Error::invalid(
                "released model needs at least one repetition",
            ));
        }
        if pairs.iter().any(|p| p.spec() != &spec) {
            return Err(Error::invalid("pair family does not match the model spec"));
        }
        if f_tilde.len() != pairs.len() * spec.width() {
            return Err(Error::invalid(format!(
                "F has {} entries, expected I * Q = {}",
                f_tilde.len(),
                pairs.len() * spec.width()
            )));
        }
        if f_tilde.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("F contains non-finite entries"));
        }
        Ok(ReleasedModel {
            spec,
            n,
            public,
            pairs,
            f_tilde,
        })
    }

    pub fn spec(&self) -> &LsqSpec {
        &self.spec
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn repetitions(&self) -> usize {
        self.pairs.len()
    }

    pub fn public_randomness(&self) -> PublicRandomness {
        self.public
    }

    pub fn pairs(&self) -> &[LsqPair] {
        &self.pairs
    }

    /// Row-major `I x Q` matrix.
    pub fn f_tilde(&self) -> &[f64] {
        &self.f_tilde
    }

    /// Same model with the pairs shipped explicitly instead of by seed.
    pub fn with_explicit_pairs(mut self) -> Self {
        self.public = PublicRandomness::Explicit;
        self
    }

    /// Private KDE estimate at `y`. Pure post-processing of the release.
    pub fn query(&self, y: &[f64]) -> Result<f64> {
        check_unit(y, self.spec.dim())?;
        Ok(self.query_unchecked(y))
    }

    pub(crate) fn query_unchecked(&self, y: &[f64]) -> f64 {
        let width = self.spec.width();
        let mut features = vec![0.0; width];
        let mut total = 0.0;
        for (pair, row) in self.pairs.iter().zip(self.f_tilde.chunks_exact(width)) {
            pair.features_into(y, &mut features);
            total += row.iter().zip(&features).map(|(f, g)| f * g).sum::<f64>();
        }
        total / (self.n as f64 * self.pairs.len() as f64)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Serialize)]
struct ModelDocRef<'a> {
    spec: &'a LsqSpec,
    n: u64,
    #[serde(rename = "I")]
    repetitions: usize,
    #[serde(rename = "Q")]
    width: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    public_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pairs: Option<Vec<&'a PairParams>>,
    #[serde(rename = "F_tilde", serialize_with = "numfmt::serialize_f64_slice")]
    f_tilde: &'a [f64],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    spec: LsqSpec,
    n: u64,
    #[serde(rename = "I")]
    repetitions: usize,
    #[serde(rename = "Q")]
    width: usize,
    #[serde(default)]
    public_seed: Option<u64>,
    #[serde(default)]
    pairs: Option<Vec<PairParams>>,
    #[serde(rename = "F_tilde")]
    f_tilde: Vec<f64>,
}

impl Serialize for ReleasedModel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let (public_seed, pairs) = match self.public {
            PublicRandomness::Seed(seed) => (Some(seed), None),
            PublicRandomness::Explicit => {
                (None, Some(self.pairs.iter().map(|p| p.params()).collect()))
            }
        };
        ModelDocRef {
            spec: &self.spec,
            n: self.n,
            repetitions: self.pairs.len(),
            width: self.spec.width(),
            public_seed,
            pairs,
            f_tilde: &self.f_tilde,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ReleasedModel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let doc = ModelDoc::deserialize(d)?;
        if doc.width != doc.spec.width() {
            return Err(D::Error::custom(format!(
                "Q = {} does not match the family's width {}",
                doc.width,
                doc.spec.width()
            )));
        }
        let model = match (doc.public_seed, doc.pairs) {
            (Some(seed), None) => {
                ReleasedModel::from_seed(doc.spec, doc.n, doc.repetitions, seed, doc.f_tilde)
            }
            (None, Some(params)) => {
                if params.len() != doc.repetitions {
                    return Err(D::Error::custom("number of pairs does not match I"));
                }
                params
                    .into_iter()
                    .map(|p| LsqPair::from_params(&doc.spec, p))
                    .collect::<Result<Vec<_>>>()
                    .and_then(|pairs| {
                        ReleasedModel::from_pairs(doc.spec, doc.n, pairs, doc.f_tilde)
                    })
            }
            _ => {
                return Err(D::Error::custom(
                    "model must carry exactly one of public_seed or pairs",
                ))
            }
        };
        model.map_err(D::Error::custom)
    }
}

/// Result of simulating one full protocol run.
#[derive(Debug, Clone)]
pub struct Execution {
    pub model: ReleasedModel,
    pub meter: TranscriptMeter,
    /// Post-shuffle stream, kept only when requested.
    pub transcript: Option<Vec<Envelope>>,
}

/// Runs every user's randomizer, the shuffler and the analyzer.
///
/// All private randomness derives from `private_seed`: user `u` draws from the
/// `("user", u)` stream, the shuffler and the analyzer from their own streams.
/// Users are randomized in parallel; results do not depend on scheduling.
pub fn execute<P, V>(init: &ProtocolInit<P>, data: &[V], private_seed: u64) -> Result<Execution>
where
    P: BitsumProtocol,
    V: AsRef<[f64]> + Sync,
{
    execute_with(init, data, private_seed, false)
}

pub fn execute_with<P, V>(
    init: &ProtocolInit<P>,
    data: &[V],
    private_seed: u64,
    keep_transcript: bool,
) -> Result<Execution>
where
    P: BitsumProtocol,
    V: AsRef<[f64]> + Sync,
{
    if data.len() as u64 != init.users() {
        return Err(Error::UserCountMismatch {
            declared: init.users(),
            actual: data.len() as u64,
        });
    }
    let by_user = data
        .par_iter()
        .enumerate()
        .map(|(u, x)| {
            init.user_randomize(x.as_ref(), &mut rng::stream(private_seed, "user", u as u64))
        })
        .collect::<Result<Vec<_>>>()?;
    let meter = shuffle::meter(&by_user, init.grid());

    let mut stream: Vec<Envelope> = by_user.concat();
    drop(by_user);
    shuffle::shuffle(&mut stream, &mut rng::stream(private_seed, "shuffler", 0));
    let cells = shuffle::route(&stream, init.grid())?;
    let model = init.analyze(&cells, &mut rng::stream(private_seed, "analyzer", 0))?;
    Ok(Execution {
        model,
        meter,
        transcript: keep_transcript.then_some(stream),
    })
}

/// Non-private `KDE_X(y) = (1/n) sum_x k(x, y)`.
pub fn exact_kde<V: AsRef<[f64]>>(kind: KernelKind, data: &[V], y: &[f64]) -> f64 {
    data.iter().map(|x| kind.exact(x.as_ref(), y)).sum::<f64>() / data.len() as f64
}

/// Upper bound on the worst-case RMSE of a query:
/// `sqrt(4 beta^2 + 16 R^4 S (S + (err / n)^2) / I)`.
pub fn bound_suprmse(spec: &LsqSpec, repetitions: usize, bitsum_rmse: f64, n: u64) -> f64 {
    let r4 = spec.bound().powi(4);
    let s = spec.sparsity() as f64;
    let rel = bitsum_rmse / n as f64;
    (4.0 * spec.beta().powi(2) + 16.0 * r4 * s * (s + rel * rel) / repetitions as f64).sqrt()
}

/// Per-query empirical RMSE over independent protocol runs.
#[derive(Debug, Clone, PartialEq)]
pub struct SupRmseReport {
    pub per_query: Vec<f64>,
    pub max: f64,
    pub mean: f64,
    pub trials: usize,
}

pub const MIN_SUPRMSE_TRIALS: usize = 30;

/// Estimates the RMSE of `query(y)` against `KDE_X(y)` for every query over
/// `trials` independent runs. Trial `t` uses public and private seeds derived
/// from `(seed, t)` only, so configurations sharing a seed share randomness.
pub fn empirical_suprmse<P, V, W>(
    spec: &LsqSpec,
    repetitions: usize,
    bitsum: &P,
    data: &[V],
    queries: &[W],
    trials: usize,
    seed: u64,
) -> Result<SupRmseReport>
where
    P: BitsumProtocol + Clone,
    V: AsRef<[f64]> + Sync,
    W: AsRef<[f64]>,
{
    if trials < MIN_SUPRMSE_TRIALS {
        return Err(Error::invalid(format!(
            "supRMSE estimation needs at least {MIN_SUPRMSE_TRIALS} trials, got {trials}"
        )));
    }
    if queries.is_empty() {
        return Err(Error::invalid("at least one query point is required"));
    }
    for q in queries {
        check_unit(q.as_ref(), spec.dim())?;
    }
    let truth: Vec<f64> = queries
        .iter()
        .map(|q| exact_kde(spec.kind(), data, q.as_ref()))
        .collect();
    let mut sq_err = vec![0.0; queries.len()];
    for t in 0..trials as u64 {
        let init = ProtocolInit::new(
            *spec,
            repetitions,
            bitsum.clone(),
            rng::derive_seed(seed, "public", t),
        )?;
        let run = execute(&init, data, rng::derive_seed(seed, "private", t))?;
        for ((acc, q), k) in sq_err.iter_mut().zip(queries).zip(&truth) {
            let e = run.model.query_unchecked(q.as_ref()) - k;
            *acc += e * e;
        }
    }
    let per_query: Vec<f64> = sq_err.iter().map(|s| (s / trials as f64).sqrt()).collect();
    let max = per_query.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean = per_query.iter().sum::<f64>() / per_query.len() as f64;
    Ok(SupRmseReport {
        per_query,
        max,
        mean,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitsum::{ExactSum, Payload};
    use crate::vector::sample_unit;
    use std::f64::consts::SQRT_2;

    fn unit_data(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut s = rng::stream(seed, "data", 0);
        (0..n).map(|_| sample_unit(dim, &mut s)).collect()
    }

    #[test]
    fn discretize_extremes_are_deterministic() {
        let mut s = rng::stream(0, "b", 0);
        for _ in 0..10_000 {
            assert!(discretize(SQRT_2, SQRT_2, &mut s));
            assert!(!discretize(-SQRT_2, SQRT_2, &mut s));
        }
    }

    #[test]
    fn discretize_zero_is_fair_coin() {
        let mut s = rng::stream(1, "b", 0);
        let trials = 100_000;
        let ones = (0..trials).filter(|_| discretize(0.0, 3.0, &mut s)).count();
        let rate = ones as f64 / trials as f64;
        assert!((rate - 0.5).abs() <= 4.0 * (0.25 / trials as f64).sqrt());
    }

    #[test]
    fn user_visits_every_instance() {
        let spec = LsqSpec::new(KernelKind::InnerProductIdentity, 3).unwrap();
        let init = ProtocolInit::new(spec, 4, ExactSum { n: 1 }, 9).unwrap();
        let x = [1.0, 0.0, 0.0];
        let envs = init
            .user_randomize(&x, &mut rng::stream(0, "u", 0))
            .unwrap();
        let mut tags: Vec<u32> = envs.iter().map(|e| e.tag.0).collect();
        tags.sort();
        assert_eq!(tags, (0..12).collect::<Vec<_>>());
        // x_0 = R rounds to 1 with certainty in every repetition.
        for e in envs.iter().filter(|e| e.tag.0 % 3 == 0) {
            assert_eq!(e.payload, Payload::Plus);
        }
        assert!(matches!(
            init.user_randomize(&[1.0, 1.0, 0.0], &mut rng::stream(0, "u", 0)),
            Err(Error::NonUnitInput { .. })
        ));
    }

    #[test]
    fn analyze_maps_counts_to_signed_sums() {
        let spec = LsqSpec::new(KernelKind::Gaussian, 2).unwrap();
        let n = 10;
        let init = ProtocolInit::new(spec, 3, ExactSum { n }, 1).unwrap();
        let cells = [
            PayloadTally { plus: 10, minus: 0 },
            PayloadTally { plus: 5, minus: 5 },
            PayloadTally { plus: 0, minus: 10 },
        ];
        let model = init.analyze(&cells, &mut rng::stream(0, "a", 0)).unwrap();
        let r = spec.bound();
        assert_eq!(model.f_tilde(), &[10.0 * r, 0.0, -10.0 * r]);
        assert!(init
            .analyze(&cells[..2], &mut rng::stream(0, "a", 0))
            .is_err());
    }

    #[test]
    fn single_term_query() {
        // I = Q = 1, F = n c, g(y) = v  =>  K(y) = c v.
        let spec = LsqSpec::new(KernelKind::InnerProductSigned, 2).unwrap();
        let pair = LsqPair::from_params(&spec, PairParams::Signed { signs: vec![1, 1] }).unwrap();
        let (n, c) = (8u64, 0.375);
        let model = ReleasedModel::from_pairs(spec, n, vec![pair], vec![n as f64 * c]).unwrap();
        let y = [0.6, 0.8];
        let v = 0.6 + 0.8;
        assert!((model.query(&y).unwrap() - c * v).abs() < 1e-15);
    }

    #[test]
    fn query_is_pure() {
        let spec = LsqSpec::new(KernelKind::Gaussian, 5).unwrap();
        let data = unit_data(20, 5, 2);
        let init = ProtocolInit::new(spec, 64, ExactSum { n: 20 }, 3).unwrap();
        let model = execute(&init, &data, 4).unwrap().model;
        let y = &data[0];
        assert_eq!(
            model.query(y).unwrap().to_bits(),
            model.query(y).unwrap().to_bits()
        );
    }

    #[test]
    fn declared_user_count_must_match() {
        let spec = LsqSpec::new(KernelKind::Gaussian, 3).unwrap();
        let init = ProtocolInit::new(spec, 2, ExactSum { n: 5 }, 0).unwrap();
        let data = unit_data(4, 3, 0);
        assert!(matches!(
            execute(&init, &data, 0),
            Err(Error::UserCountMismatch {
                declared: 5,
                actual: 4
            })
        ));
    }

    #[test]
    fn execution_is_deterministic() {
        let spec = LsqSpec::new(KernelKind::InnerProductSigned, 4).unwrap();
        let data = unit_data(30, 4, 5);
        let init = ProtocolInit::new(spec, 16, ExactSum { n: 30 }, 6).unwrap();
        let a = execute_with(&init, &data, 7, true).unwrap();
        let b = execute_with(&init, &data, 7, true).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.transcript, b.transcript);
        assert_eq!(a.meter.total_messages(), 30 * 16);
    }

    #[test]
    fn bound_examples() {
        let g = LsqSpec::new(KernelKind::Gaussian, 4).unwrap();
        for i in [1usize, 16, 256, 4096] {
            let expected = 8.0 / (i as f64).sqrt();
            assert!((bound_suprmse(&g, i, 0.0, 100) - expected).abs() < 1e-12 * expected);
        }
        let d = 6;
        let id = LsqSpec::new(KernelKind::InnerProductIdentity, d).unwrap();
        let i = 9;
        let expected = 4.0 * d as f64 / 3.0;
        assert!((bound_suprmse(&id, i, 0.0, 10) - expected).abs() < 1e-12);
    }

    #[test]
    fn released_model_json_round_trips_both_representations() {
        let spec = LsqSpec::new(KernelKind::Gaussian, 3).unwrap();
        let data = unit_data(12, 3, 8);
        let init = ProtocolInit::new(spec, 5, ExactSum { n: 12 }, 99).unwrap();
        let model = execute(&init, &data, 1).unwrap().model;

        let by_seed = model.to_json().unwrap();
        assert!(by_seed.contains("\"public_seed\": 99"));
        assert!(by_seed.contains("\"F_tilde\""));
        let back = ReleasedModel::from_json(&by_seed).unwrap();
        assert_eq!(back, model);

        let explicit = model.clone().with_explicit_pairs();
        let json = explicit.to_json().unwrap();
        assert!(!json.contains("public_seed"));
        let back = ReleasedModel::from_json(&json).unwrap();
        assert_eq!(back.pairs(), model.pairs());
        assert_eq!(back.f_tilde(), model.f_tilde());
        let y = &data[3];
        assert_eq!(
            back.query(y).unwrap().to_bits(),
            model.query(y).unwrap().to_bits()
        );
    }

    #[test]
    fn malformed_model_documents_are_rejected() {
        let spec = LsqSpec::new(KernelKind::Gaussian, 2).unwrap();
        let model = ReleasedModel::from_seed(spec, 4, 2, 5, vec![1.0, -1.0]).unwrap();
        let json = model.to_json().unwrap();
        let no_seed = json.replace("\"public_seed\": 5,", "");
        assert!(ReleasedModel::from_json(&no_seed).is_err());
        let wrong_i = json.replace("\"I\": 2", "\"I\": 3");
        assert!(ReleasedModel::from_json(&wrong_i).is_err());
        assert!(ReleasedModel::from_seed(spec, 4, 2, 5, vec![1.0, f64::NAN]).is_err());
        assert!(ReleasedModel::from_seed(spec, 0, 2, 5, vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn suprmse_report_shape() {
        let spec = LsqSpec::new(KernelKind::Gaussian, 3).unwrap();
        let data = unit_data(10, 3, 1);
        let queries = unit_data(5, 3, 2);
        let bitsum = ExactSum { n: 10 };
        let report = empirical_suprmse(&spec, 8, &bitsum, &data, &queries, 30, 3).unwrap();
        assert_eq!(report.per_query.len(), 5);
        assert!(report.max >= report.mean);
        assert!(empirical_suprmse(&spec, 8, &bitsum, &data, &queries, 29, 3).is_err());
    }
}
