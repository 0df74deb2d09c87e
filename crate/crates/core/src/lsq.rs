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

//! Locality-sensitive quantization (LSQ) families.
//!
//! An LSQ family is a distribution over function pairs `f, g: R^d -> [-R, R]^Q`
//! with at most `S` non-zero coordinates each, such that `E[f(x)^T g(y)]`
//! approximates a kernel `k(x, y)` within `beta`. Three families are provided:
//!
//! | family                 | kernel            | (Q, R, S)        |
//! |------------------------|-------------------|------------------|
//! | Gaussian (random Fourier features) | `exp(-|x-y|^2)` | `(1, sqrt 2, 1)` |
//! | signed inner product   | `x^T y`           | `(1, sqrt d, 1)` |
//! | identity inner product | `x^T y`           | `(d, 1, d)`      |
//!
//! All three are exact (`beta = 0`) and use `g = f`. The Gaussian feature is
//! `sqrt 2 * cos(sqrt 2 * omega^T x + phase)`, so the product of two features
//! has expectation `exp(-|x-y|^2)` without any extra query-side constant.

use std::f64::consts::{SQRT_2, TAU};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numfmt;
use crate::vector::{check_unit, dot, squared_distance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelKind {
    #[serde(rename = "gaussian")]
    Gaussian,
    #[serde(rename = "ip-signed")]
    InnerProductSigned,
    #[serde(rename = "ip-identity")]
    InnerProductIdentity,
}

impl KernelKind {
    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Gaussian => "gaussian",
            KernelKind::InnerProductSigned => "ip-signed",
            KernelKind::InnerProductIdentity => "ip-identity",
        }
    }

    /// Exact kernel value, used as the non-private baseline and as a test oracle.
    pub fn exact(self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            KernelKind::Gaussian => (-squared_distance(x, y)).exp(),
            KernelKind::InnerProductSigned | KernelKind::InnerProductIdentity => dot(x, y),
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "rff" => Ok(KernelKind::Gaussian),
            "ip" | "ip-signed" | "inner-product-signed" => Ok(KernelKind::InnerProductSigned),
            "ip-identity" | "inner-product-identity" => Ok(KernelKind::InnerProductIdentity),
            other => Err(Error::invalid(format!("unknown kernel '{other}'"))),
        }
    }
}

pub fn kernel_exact(kind: KernelKind, x: &[f64], y: &[f64]) -> f64 {
    kind.exact(x, y)
}

/// Parameters `(Q, R, S, beta)` of an LSQ family over `R^dim`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecDoc", into = "SpecDoc")]
pub struct LsqSpec {
    kind: KernelKind,
    dim: usize,
    width: usize,
    bound: f64,
    sparsity: usize,
    beta: f64,
}

impl LsqSpec {
    pub fn new(kind: KernelKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        let (width, bound, sparsity) = match kind {
            KernelKind::Gaussian => (1, SQRT_2, 1),
            KernelKind::InnerProductSigned => (1, (dim as f64).sqrt(), 1),
            KernelKind::InnerProductIdentity => (dim, 1.0, dim),
        };
        Ok(LsqSpec {
            kind,
            dim,
            width,
            bound,
            sparsity,
            beta: 0.0,
        })
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Feature length `Q`.
    pub fn width(&self) -> usize {
        self.width
    }

    /// Coordinate bound `R`.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// Maximum number of non-zero coordinates `S`.
    pub fn sparsity(&self) -> usize {
        self.sparsity
    }

    /// Approximation slack `beta`.
    pub fn beta(&self) -> f64 {
        self.beta
    }
}

#[derive(Serialize, Deserialize)]
struct SpecDoc {
    kind: KernelKind,
    dim: usize,
    #[serde(rename = "Q")]
    width: usize,
    #[serde(rename = "R")]
    bound: f64,
    #[serde(rename = "S")]
    sparsity: usize,
    beta: f64,
}

impl From<LsqSpec> for SpecDoc {
    fn from(s: LsqSpec) -> Self {
        SpecDoc {
            kind: s.kind,
            dim: s.dim,
            width: s.width,
            bound: s.bound,
            sparsity: s.sparsity,
            beta: s.beta,
        }
    }
}

impl TryFrom<SpecDoc> for LsqSpec {
    type Error = Error;

    fn try_from(doc: SpecDoc) -> Result<Self> {
        let spec = LsqSpec::new(doc.kind, doc.dim)?;
        let consistent = doc.width == spec.width
            && doc.sparsity == spec.sparsity
            && (doc.bound - spec.bound).abs() <= 1e-12 * spec.bound
            && doc.beta == spec.beta;
        if !consistent {
            return Err(Error::invalid(format!(
                "LSQ parameters do not match the {} family in dimension {}",
                doc.kind, doc.dim
            )));
        }
        Ok(spec)
    }
}

/// The random parameters of one sampled `(f, g)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum PairParams {
    Gaussian {
        #[serde(serialize_with = "numfmt::serialize_f64_slice")]
        omega: Vec<f64>,
        #[serde(serialize_with = "numfmt::serialize_f64")]
        phase: f64,
    },
    Signed {
        signs: Vec<i8>,
    },
    Identity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsqPair {
    spec: LsqSpec,
    params: PairParams,
}

impl LsqPair {
    /// Draws one pair from the family. Consumes the supplied (public) stream.
    pub fn sample<R: Rng + ?Sized>(spec: &LsqSpec, rng: &mut R) -> Self {
        let params = match spec.kind {
            KernelKind::Gaussian => {
                let omega = (0..spec.dim).map(|_| rng.sample(StandardNormal)).collect();
                let phase = rng.random::<f64>() * TAU;
                PairParams::Gaussian { omega, phase }
            }
            KernelKind::InnerProductSigned => PairParams::Signed {
                signs: (0..spec.dim)
                    .map(|_| if rng.random::<bool>() { 1 } else { -1 })
                    .collect(),
            },
            KernelKind::InnerProductIdentity => PairParams::Identity,
        };
        LsqPair {
            spec: *spec,
            params,
        }
    }

    /// Rebuilds a pair from explicit parameters, checking them against `spec`.
    pub fn from_params(spec: &LsqSpec, params: PairParams) -> Result<Self> {
        let ok = match (&params, spec.kind) {
            (PairParams::Gaussian { omega, phase }, KernelKind::Gaussian) => {
                omega.len() == spec.dim
                    && omega.iter().all(|w| w.is_finite())
                    && (0.0..TAU).contains(phase)
            }
            (PairParams::Signed { signs }, KernelKind::InnerProductSigned) => {
                signs.len() == spec.dim && signs.iter().all(|s| *s == 1 || *s == -1)
            }
            (PairParams::Identity, KernelKind::InnerProductIdentity) => true,
            _ => false,
        };
        if !ok {
            return Err(Error::invalid(format!(
                "pair parameters are not valid for the {} family in dimension {}",
                spec.kind, spec.dim
            )));
        }
        Ok(LsqPair {
            spec: *spec,
            params,
        })
    }

    pub fn spec(&self) -> &LsqSpec {
        &self.spec
    }

    pub fn params(&self) -> &PairParams {
        &self.params
    }

    pub fn eval_f(&self, x: &[f64]) -> Result<FeatureVector> {
        check_unit(x, self.spec.dim)?;
        let mut out = vec![0.0; self.spec.width];
        self.features_into(x, &mut out);
        Ok(FeatureVector(out))
    }

    /// `g` is the same map as `f` for every family implemented here.
    pub fn eval_g(&self, y: &[f64]) -> Result<FeatureVector> {
        self.eval_f(y)
    }

    /// Writes the features of `x` into `out` (length `Q`) without validating `x`.
    pub(crate) fn features_into(&self, x: &[f64], out: &mut [f64]) {
        match &self.params {
            PairParams::Gaussian { omega, phase } => {
                out[0] = SQRT_2 * (SQRT_2 * dot(omega, x) + phase).cos();
            }
            PairParams::Signed { signs } => {
                out[0] = signs.iter().zip(x).map(|(s, v)| f64::from(*s) * v).sum();
            }
            PairParams::Identity => out.copy_from_slice(x),
        }
    }
}

/// `f(x)` or `g(y)`: `Q` coordinates in `[-R, R]`, at most `S` of them non-zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn nonzero_count(&self) -> usize {
        self.0.iter().filter(|v| **v != 0.0).count()
    }

    pub fn dot(&self, other: &FeatureVector) -> f64 {
        dot(&self.0, &other.0)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}
