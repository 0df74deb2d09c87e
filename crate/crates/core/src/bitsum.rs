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

//! Shuffled-DP bitsum protocols.
//!
//! Each of `n` users holds one bit; the randomizer turns it into zero or more
//! `±1` payloads, and after shuffling the analyzer sees only how many `+1` and
//! `-1` payloads arrived. Every variant here is unbiased for the true count.
//!
//! * [`ExactSum`]: one payload per user, the analyzer counts `+1`s. No privacy.
//! * [`RandomizedResponse`]: one payload per user, flipped with probability
//!   `flip_prob`; the analyzer debiases the `+1` count.
//! * [`ThreeNb`]: correlated negative binomial noise. A user with bit `b` sends
//!   `b + psi1 + psi3` copies of `+1` and `psi2 + psi3` copies of `-1`, where
//!   `psi1, psi2 ~ NB(r, p)` and `psi3 ~ NB(r'/n, p')`. The analyzer returns the
//!   signed sum, in which `psi3` cancels exactly.
//! * [`CentralGaussian`]: a central-DP baseline that adds `N(0, sigma^2)` to the
//!   exact count in the analyzer.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single one-bit message body.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Payload {
    Plus,
    Minus,
}

impl Payload {
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Payload::Plus
        } else {
            Payload::Minus
        }
    }

    pub fn value(self) -> i64 {
        match self {
            Payload::Plus => 1,
            Payload::Minus => -1,
        }
    }

    /// Wire encoding: `+1 -> 1`, `-1 -> 0`.
    pub fn wire_bit(self) -> u8 {
        match self {
            Payload::Plus => 1,
            Payload::Minus => 0,
        }
    }

    pub fn from_wire_bit(bit: u8) -> Result<Self> {
        match bit {
            1 => Ok(Payload::Plus),
            0 => Ok(Payload::Minus),
            other => Err(Error::invalid(format!(
                "payload wire bit must be 0 or 1, got {other}"
            ))),
        }
    }
}

/// Packs payloads one bit each, least significant bit first.
pub fn encode_payloads(payloads: &[Payload]) -> Vec<u8> {
    let mut out = vec![0u8; payloads.len().div_ceil(8)];
    for (k, p) in payloads.iter().enumerate() {
        out[k / 8] |= p.wire_bit() << (k % 8);
    }
    out
}

pub fn decode_payloads(bytes: &[u8], count: usize) -> Result<Vec<Payload>> {
    if bytes.len() != count.div_ceil(8) {
        return Err(Error::invalid(format!(
            "{} bytes cannot hold exactly {count} payloads",
            bytes.len()
        )));
    }
    (0..count)
        .map(|k| Payload::from_wire_bit((bytes[k / 8] >> (k % 8)) & 1))
        .collect()
}

/// The multiset of payloads delivered to one protocol instance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct PayloadTally {
    pub plus: u64,
    pub minus: u64,
}

impl PayloadTally {
    pub fn add(&mut self, p: Payload) {
        match p {
            Payload::Plus => self.plus += 1,
            Payload::Minus => self.minus += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.plus + self.minus
    }

    pub fn signed_sum(&self) -> i64 {
        self.plus as i64 - self.minus as i64
    }
}

impl FromIterator<Payload> for PayloadTally {
    fn from_iter<T: IntoIterator<Item = Payload>>(iter: T) -> Self {
        let mut t = PayloadTally::default();
        iter.into_iter().for_each(|p| t.add(p));
        t
    }
}

/// The analyzer's estimate of the number of 1-bits. May be negative or exceed `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BitsumEstimate(pub f64);

impl BitsumEstimate {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Negative binomial `NB(r, p)` counting failures before the `r`-th success,
/// with mean `r p / (1 - p)`. Real `r > 0` is sampled as a Gamma–Poisson mixture.
#[derive(Debug, Clone, Copy)]
pub struct NegativeBinomial {
    r: f64,
    p: f64,
    gamma: Gamma<f64>,
}

impl NegativeBinomial {
    pub fn new(r: f64, p: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::invalid(format!(
                "negative binomial r must be positive, got {r}"
            )));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::invalid(format!(
                "negative binomial p must lie in (0, 1), got {p}"
            )));
        }
        let gamma = Gamma::new(r, p / (1.0 - p))
            .map_err(|e| Error::invalid(format!("gamma({r}, {}): {e}", p / (1.0 - p))))?;
        Ok(NegativeBinomial { r, p, gamma })
    }

    pub fn mean(&self) -> f64 {
        self.r * self.p / (1.0 - self.p)
    }

    pub fn variance(&self) -> f64 {
        self.r * self.p / ((1.0 - self.p) * (1.0 - self.p))
    }
}

impl Distribution<u64> for NegativeBinomial {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let lambda = self.gamma.sample(rng);
        // Tiny shapes underflow to zero (or a subnormal), where Poisson(lambda) is 0.
        if !(lambda >= f64::MIN_POSITIVE) {
            return 0;
        }
        match Poisson::new(lambda) {
            Ok(poisson) => poisson.sample(rng) as u64,
            Err(_) => u64::MAX,
        }
    }
}

pub fn sample_negative_binomial<R: Rng + ?Sized>(r: f64, p: f64, rng: &mut R) -> Result<u64> {
    Ok(NegativeBinomial::new(r, p)?.sample(rng))
}

/// Common interface of the randomizer and analyzer halves of a bitsum protocol.
pub trait BitsumProtocol: Sync {
    /// Declared number of participating users `n`.
    fn users(&self) -> u64;

    /// Appends the payloads one user emits for bit `bit`.
    fn randomize_bit<R: Rng + ?Sized>(&self, bit: bool, rng: &mut R, out: &mut Vec<Payload>);

    /// Estimates the number of 1-bits from the shuffled payload multiset.
    /// `rng` is analyzer-side randomness (used only by the central baseline).
    fn analyze<R: Rng + ?Sized>(&self, tally: PayloadTally, rng: &mut R) -> Result<BitsumEstimate>;

    /// Root mean squared error of the estimate for any fixed input.
    fn rmse(&self) -> f64;

    /// Expected payloads one user sends when its bit is 1 with probability `one_prob`.
    fn expected_messages(&self, one_prob: f64) -> f64;
}

fn check_single_message(n: u64, tally: PayloadTally) -> Result<()> {
    if tally.total() != n {
        return Err(Error::UserCountMismatch {
            declared: n,
            actual: tally.total(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactSum {
    pub n: u64,
}

impl BitsumProtocol for ExactSum {
    fn users(&self) -> u64 {
        self.n
    }

    fn randomize_bit<R: Rng + ?Sized>(&self, bit: bool, _rng: &mut R, out: &mut Vec<Payload>) {
        out.push(Payload::from_bit(bit));
    }

    fn analyze<R: Rng + ?Sized>(
        &self,
        tally: PayloadTally,
        _rng: &mut R,
    ) -> Result<BitsumEstimate> {
        check_single_message(self.n, tally)?;
        Ok(BitsumEstimate(tally.plus as f64))
    }

    fn rmse(&self) -> f64 {
        0.0
    }

    fn expected_messages(&self, _one_prob: f64) -> f64 {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomizedResponse {
    n: u64,
    flip_prob: f64,
    raw_sum: bool,
}

impl RandomizedResponse {
    pub fn new(n: u64, flip_prob: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("bitsum needs at least one user"));
        }
        if !(0.0..0.5).contains(&flip_prob) {
            return Err(Error::DegenerateConfig(format!(
                "randomized response flip probability must lie in [0, 1/2), got {flip_prob}"
            )));
        }
        Ok(RandomizedResponse {
            n,
            flip_prob,
            raw_sum: false,
        })
    }

    /// Flip probability `min(0.49, lambda / 2n)` with
    /// `lambda = (64 / eps0^2) ln(4 / delta0)`. Fails when `lambda / 2n >= 1/2`,
    /// i.e. when `n` is too small for randomized response at this budget.
    pub fn calibrated(n: u64, eps0: f64, delta0: f64) -> Result<Self> {
        check_eps_delta(eps0, delta0)?;
        let lambda = 64.0 / (eps0 * eps0) * (4.0 / delta0).ln();
        let prob = lambda / (2.0 * n as f64);
        if prob >= 0.5 {
            return Err(Error::DegenerateConfig(format!(
                "randomized response needs flip probability {prob:.4} >= 1/2 for n = {n}, eps0 = {eps0}, delta0 = {delta0}"
            )));
        }
        Self::new(n, prob.min(0.49))
    }

    /// Publishes the raw `+1` count instead of the debiased estimate.
    pub fn with_raw_sum(mut self, raw_sum: bool) -> Self {
        self.raw_sum = raw_sum;
        self
    }

    pub fn flip_prob(&self) -> f64 {
        self.flip_prob
    }
}

impl BitsumProtocol for RandomizedResponse {
    fn users(&self) -> u64 {
        self.n
    }

    fn randomize_bit<R: Rng + ?Sized>(&self, bit: bool, rng: &mut R, out: &mut Vec<Payload>) {
        let flip = self.flip_prob > 0.0 && rng.random::<f64>() < self.flip_prob;
        out.push(Payload::from_bit(bit != flip));
    }

    fn analyze<R: Rng + ?Sized>(
        &self,
        tally: PayloadTally,
        _rng: &mut R,
    ) -> Result<BitsumEstimate> {
        check_single_message(self.n, tally)?;
        let raw = tally.plus as f64;
        if self.raw_sum {
            return Ok(BitsumEstimate(raw));
        }
        let n = self.n as f64;
        Ok(BitsumEstimate(
            (raw - n * self.flip_prob) / (1.0 - 2.0 * self.flip_prob),
        ))
    }

    fn rmse(&self) -> f64 {
        let p = self.flip_prob;
        (self.n as f64 * p * (1.0 - p)).sqrt() / (1.0 - 2.0 * p)
    }

    fn expected_messages(&self, _one_prob: f64) -> f64 {
        1.0
    }
}

/// The correlated-noise protocol built from three negative binomial samples.
#[derive(Debug, Clone, Copy)]
pub struct ThreeNb {
    n: u64,
    r: f64,
    p: f64,
    r_prime: f64,
    p_prime: f64,
    flip_noise: NegativeBinomial,
    pair_noise: NegativeBinomial,
}

impl ThreeNb {
    /// Default constant in the exponent of `p'`.
    pub const DEFAULT_C: f64 = 0.2;

    /// `r = 1/n`, `p = exp(-0.99 eps0)`, `r' = 3 (1 + ln(2 exp(0.99 eps0) / delta0))`,
    /// `p' = exp(-c eps0 / (eps0 + ln(1 / delta0)))`.
    pub fn calibrated(n: u64, eps0: f64, delta0: f64, c: f64) -> Result<Self> {
        check_eps_delta(eps0, delta0)?;
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::invalid(format!(
                "3NB constant c must be positive, got {c}"
            )));
        }
        if n == 0 {
            return Err(Error::invalid("bitsum needs at least one user"));
        }
        let r = 1.0 / n as f64;
        let p = (-0.99 * eps0).exp();
        let r_prime = 3.0 * (1.0 + (2.0 * (0.99 * eps0).exp() / delta0).ln());
        let p_prime = (-c * eps0 / (eps0 + (1.0 / delta0).ln())).exp();
        Self::with_params(n, r, p, r_prime, p_prime)
    }

    /// Explicit parameters. `r` is per user; `r_prime` is the aggregate shape,
    /// split evenly so each user draws `psi3 ~ NB(r_prime / n, p_prime)`.
    pub fn with_params(n: u64, r: f64, p: f64, r_prime: f64, p_prime: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("bitsum needs at least one user"));
        }
        let flip_noise = NegativeBinomial::new(r, p)?;
        let pair_noise = NegativeBinomial::new(r_prime / n as f64, p_prime)?;
        Ok(ThreeNb {
            n,
            r,
            p,
            r_prime,
            p_prime,
            flip_noise,
            pair_noise,
        })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn r_prime(&self) -> f64 {
        self.r_prime
    }

    pub fn p_prime(&self) -> f64 {
        self.p_prime
    }
}

impl BitsumProtocol for ThreeNb {
    fn users(&self) -> u64 {
        self.n
    }

    fn randomize_bit<R: Rng + ?Sized>(&self, bit: bool, rng: &mut R, out: &mut Vec<Payload>) {
        let psi1 = self.flip_noise.sample(rng);
        let psi2 = self.flip_noise.sample(rng);
        let psi3 = self.pair_noise.sample(rng);
        let plus = u64::from(bit) + psi1 + psi3;
        let minus = psi2 + psi3;
        out.extend(std::iter::repeat_n(Payload::Plus, plus as usize));
        out.extend(std::iter::repeat_n(Payload::Minus, minus as usize));
    }

    fn analyze<R: Rng + ?Sized>(
        &self,
        tally: PayloadTally,
        _rng: &mut R,
    ) -> Result<BitsumEstimate> {
        Ok(BitsumEstimate(tally.signed_sum() as f64))
    }

    /// `psi3` cancels in the signed sum, so the error is `sum psi1 - sum psi2`,
    /// with variance `2 n r p / (1 - p)^2`.
    fn rmse(&self) -> f64 {
        (2.0 * self.n as f64 * self.flip_noise.variance()).sqrt()
    }

    fn expected_messages(&self, one_prob: f64) -> f64 {
        one_prob + 2.0 * self.flip_noise.mean() + 2.0 * self.pair_noise.mean()
    }
}

/// Central-DP Gaussian mechanism on the exact count (baseline, not a shuffled protocol).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CentralGaussian {
    n: u64,
    sigma: f64,
}

impl CentralGaussian {
    /// `sigma = sqrt(2 ln(1.25 / delta0)) / eps0` for a sensitivity-1 count.
    pub fn calibrated(n: u64, eps0: f64, delta0: f64) -> Result<Self> {
        check_eps_delta(eps0, delta0)?;
        Self::with_sigma(n, (2.0 * (1.25 / delta0).ln()).sqrt() / eps0)
    }

    pub fn with_sigma(n: u64, sigma: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("bitsum needs at least one user"));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(format!(
                "sigma must be finite and nonnegative, got {sigma}"
            )));
        }
        Ok(CentralGaussian { n, sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl BitsumProtocol for CentralGaussian {
    fn users(&self) -> u64 {
        self.n
    }

    fn randomize_bit<R: Rng + ?Sized>(&self, bit: bool, _rng: &mut R, out: &mut Vec<Payload>) {
        out.push(Payload::from_bit(bit));
    }

    fn analyze<R: Rng + ?Sized>(&self, tally: PayloadTally, rng: &mut R) -> Result<BitsumEstimate> {
        check_single_message(self.n, tally)?;
        let noise = Normal::new(0.0, self.sigma)
            .map_err(|e| Error::invalid(e.to_string()))?
            .sample(rng);
        Ok(BitsumEstimate(tally.plus as f64 + noise))
    }

    fn rmse(&self) -> f64 {
        self.sigma
    }

    fn expected_messages(&self, _one_prob: f64) -> f64 {
        1.0
    }
}

fn check_eps_delta(eps0: f64, delta0: f64) -> Result<()> {
    if !(eps0 > 0.0 && eps0.is_finite()) {
        return Err(Error::invalid(format!("eps0 must be positive, got {eps0}")));
    }
    if !(delta0 > 0.0 && delta0 < 1.0) {
        return Err(Error::invalid(format!(
            "delta0 must lie in (0, 1), got {delta0}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BitsumVariant {
    #[serde(rename = "exact")]
    Exact,
    #[serde(rename = "rr")]
    RandomizedResponse,
    #[serde(rename = "3nb")]
    ThreeNb,
    #[serde(rename = "central-gaussian")]
    CentralGaussian,
}

impl BitsumVariant {
    pub fn name(self) -> &'static str {
        match self {
            BitsumVariant::Exact => "exact",
            BitsumVariant::RandomizedResponse => "rr",
            BitsumVariant::ThreeNb => "3nb",
            BitsumVariant::CentralGaussian => "central-gaussian",
        }
    }

    pub fn is_private(self) -> bool {
        self != BitsumVariant::Exact
    }
}

impl fmt::Display for BitsumVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BitsumVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exact" | "none" => Ok(BitsumVariant::Exact),
            "rr" | "randomized-response" => Ok(BitsumVariant::RandomizedResponse),
            "3nb" | "three-nb" => Ok(BitsumVariant::ThreeNb),
            "central-gaussian" | "gaussian" | "central" => Ok(BitsumVariant::CentralGaussian),
            other => Err(Error::invalid(format!("unknown bitsum protocol '{other}'"))),
        }
    }
}

/// A bitsum protocol choice plus its tuning knobs, instantiated per `(n, eps0, delta0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BitsumOptions {
    pub variant: BitsumVariant,
    #[serde(default = "default_three_nb_c")]
    pub three_nb_c: f64,
    /// Overrides the calibrated randomized-response flip probability.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flip_prob: Option<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub rr_raw_sum: bool,
}

fn default_three_nb_c() -> f64 {
    ThreeNb::DEFAULT_C
}

impl BitsumOptions {
    pub fn new(variant: BitsumVariant) -> Self {
        BitsumOptions {
            variant,
            three_nb_c: ThreeNb::DEFAULT_C,
            flip_prob: None,
            rr_raw_sum: false,
        }
    }

    pub fn instantiate(&self, n: u64, eps0: f64, delta0: f64) -> Result<BitsumConfig> {
        if n == 0 {
            return Err(Error::invalid("bitsum needs at least one user"));
        }
        Ok(match self.variant {
            BitsumVariant::Exact => BitsumConfig::Exact(ExactSum { n }),
            BitsumVariant::RandomizedResponse => {
                let rr = match self.flip_prob {
                    Some(p) => RandomizedResponse::new(n, p)?,
                    None => RandomizedResponse::calibrated(n, eps0, delta0)?,
                };
                BitsumConfig::RandomizedResponse(rr.with_raw_sum(self.rr_raw_sum))
            }
            BitsumVariant::ThreeNb => {
                BitsumConfig::ThreeNb(ThreeNb::calibrated(n, eps0, delta0, self.three_nb_c)?)
            }
            BitsumVariant::CentralGaussian => {
                BitsumConfig::CentralGaussian(CentralGaussian::calibrated(n, eps0, delta0)?)
            }
        })
    }
}

/// One instantiated bitsum protocol of any variant.
#[derive(Debug, Clone, Copy)]
pub enum BitsumConfig {
    Exact(ExactSum),
    RandomizedResponse(RandomizedResponse),
    ThreeNb(ThreeNb),
    CentralGaussian(CentralGaussian),
}

impl BitsumConfig {
    pub fn variant(&self) -> BitsumVariant {
        match self {
            BitsumConfig::Exact(_) => BitsumVariant::Exact,
            BitsumConfig::RandomizedResponse(_) => BitsumVariant::RandomizedResponse,
            BitsumConfig::ThreeNb(_) => BitsumVariant::ThreeNb,
            BitsumConfig::CentralGaussian(_) => BitsumVariant::CentralGaussian,
        }
    }
}

macro_rules! dispatch {
    ($self:expr, $p:ident => $body:expr) => {
        match $self {
            BitsumConfig::Exact($p) => $body,
            BitsumConfig::RandomizedResponse($p) => $body,
            BitsumConfig::ThreeNb($p) => $body,
            BitsumConfig::CentralGaussian($p) => $body,
        }
    };
}

impl BitsumProtocol for BitsumConfig {
    fn users(&self) -> u64 {
        dispatch!(self, p => p.users())
    }

    fn randomize_bit<R: Rng + ?Sized>(&self, bit: bool, rng: &mut R, out: &mut Vec<Payload>) {
        dispatch!(self, p => p.randomize_bit(bit, rng, out))
    }

    fn analyze<R: Rng + ?Sized>(&self, tally: PayloadTally, rng: &mut R) -> Result<BitsumEstimate> {
        dispatch!(self, p => p.analyze(tally, rng))
    }

    fn rmse(&self) -> f64 {
        dispatch!(self, p => p.rmse())
    }

    fn expected_messages(&self, one_prob: f64) -> f64 {
        dispatch!(self, p => p.expected_messages(one_prob))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;

    fn run_users<P: BitsumProtocol>(proto: &P, bits: &[bool], seed: u64) -> PayloadTally {
        let mut out = Vec::new();
        for (u, b) in bits.iter().enumerate() {
            proto.randomize_bit(*b, &mut rng::stream(seed, "user", u as u64), &mut out);
        }
        out.into_iter().collect()
    }

    #[test]
    fn exact_examples() {
        let exact = ExactSum { n: 3 };
        let mut out = Vec::new();
        exact.randomize_bit(true, &mut rng::stream(0, "u", 0), &mut out);
        assert_eq!(out, vec![Payload::Plus]);
        let tally = run_users(&exact, &[true, false, true], 1);
        let est = exact.analyze(tally, &mut rng::stream(0, "a", 0)).unwrap();
        assert_eq!(est.value(), 2.0);
        assert_eq!(exact.rmse(), 0.0);
    }

    #[test]
    fn single_message_variants_reject_wrong_user_count() {
        let exact = ExactSum { n: 3 };
        let tally = PayloadTally { plus: 1, minus: 1 };
        assert!(matches!(
            exact.analyze(tally, &mut rng::stream(0, "a", 0)),
            Err(Error::UserCountMismatch {
                declared: 3,
                actual: 2
            })
        ));
    }

    #[test]
    fn rr_without_flips_is_identity() {
        let rr = RandomizedResponse::new(1, 0.0).unwrap();
        let mut s = rng::stream(2, "u", 0);
        for _ in 0..1000 {
            let mut out = Vec::new();
            rr.randomize_bit(true, &mut s, &mut out);
            assert_eq!(out, vec![Payload::Plus]);
        }
    }

    #[test]
    fn rr_rejects_degenerate_flip_probability() {
        assert!(matches!(
            RandomizedResponse::new(10, 0.5),
            Err(Error::DegenerateConfig(_))
        ));
        assert!(matches!(
            RandomizedResponse::new(10, 0.7),
            Err(Error::DegenerateConfig(_))
        ));
        // lambda = 64 ln(4e6) ~ 973 needs n > 973.
        assert!(matches!(
            RandomizedResponse::calibrated(100, 1.0, 1e-6),
            Err(Error::DegenerateConfig(_))
        ));
        let rr = RandomizedResponse::calibrated(100_000, 1.0, 1e-6).unwrap();
        let lambda = 64.0 * (4.0f64 / 1e-6).ln();
        assert!((rr.flip_prob() - lambda / 200_000.0).abs() < 1e-15);
        let clamped = RandomizedResponse::calibrated(990, 1.0, 1e-6).unwrap();
        assert_eq!(clamped.flip_prob(), 0.49);
    }

    #[test]
    fn rr_debias_and_raw_modes() {
        let rr = RandomizedResponse::new(100, 0.25).unwrap();
        let tally = PayloadTally {
            plus: 25,
            minus: 75,
        };
        let mut s = rng::stream(0, "a", 0);
        assert_eq!(rr.analyze(tally, &mut s).unwrap().value(), 0.0);
        let raw = rr.with_raw_sum(true);
        assert_eq!(raw.analyze(tally, &mut s).unwrap().value(), 25.0);
    }

    #[test]
    fn closed_form_rmse_values() {
        let rr = RandomizedResponse::new(100, 0.25).unwrap();
        assert!((rr.rmse() - 75f64.sqrt()).abs() < 1e-12);
        assert!((rr.rmse() - 8.660254037844386).abs() < 1e-12);
        let cg = CentralGaussian::calibrated(10, 1.0, 1e-5).unwrap();
        assert!((cg.rmse() - (2.0 * 125_000f64.ln()).sqrt()).abs() < 1e-12);
        assert!((cg.rmse() - 4.84).abs() < 5e-3);
    }

    #[test]
    fn three_nb_calibration() {
        let nb = ThreeNb::calibrated(100, 1.0, 1e-6, 0.2).unwrap();
        assert_eq!(nb.r(), 0.01);
        assert!((nb.p() - (-0.99f64).exp()).abs() < 1e-15);
        let r_prime = 3.0 * (1.0 + (2.0 * 0.99f64.exp() / 1e-6).ln());
        assert!((nb.r_prime() - r_prime).abs() < 1e-12);
        let p_prime = (-0.2 / (1.0 + 1e6f64.ln())).exp();
        assert!((nb.p_prime() - p_prime).abs() < 1e-15);
        for v in [nb.p(), nb.p_prime()] {
            assert!(v > 0.0 && v < 1.0);
        }
        let p = nb.p();
        assert!((nb.rmse() - (2.0 * p).sqrt() / (1.0 - p)).abs() < 1e-12);
    }

    #[test]
    fn three_nb_zero_noise_limit_emits_nothing_for_zero_bit() {
        let nb = ThreeNb::with_params(10, 0.1, 1e-12, 1.0, 1e-12).unwrap();
        let mut s = rng::stream(3, "u", 0);
        for _ in 0..1000 {
            let mut out = Vec::new();
            nb.randomize_bit(false, &mut s, &mut out);
            assert!(out.is_empty());
            nb.randomize_bit(true, &mut s, &mut out);
            assert_eq!(out, vec![Payload::Plus]);
        }
    }

    #[test]
    fn three_nb_psi3_cancels_in_signed_sum() {
        // With psi1 = psi2 = 0 forced, only psi3 adds payloads, and it adds
        // them in +/- pairs.
        let nb = ThreeNb::with_params(5, 0.2, 1e-12, 20.0, 0.9).unwrap();
        let bits = [true, false, true, true, false];
        let tally = run_users(&nb, &bits, 9);
        assert!(tally.total() > 5);
        let est = nb.analyze(tally, &mut rng::stream(0, "a", 0)).unwrap();
        assert_eq!(est.value(), 3.0);
    }

    #[test]
    fn negative_binomial_rejects_bad_params() {
        let mut s = rng::stream(0, "nb", 0);
        assert!(sample_negative_binomial(0.0, 0.5, &mut s).is_err());
        assert!(sample_negative_binomial(-1.0, 0.5, &mut s).is_err());
        assert!(sample_negative_binomial(1.0, 0.0, &mut s).is_err());
        assert!(sample_negative_binomial(1.0, 1.0, &mut s).is_err());
        assert!(sample_negative_binomial(1.0, f64::NAN, &mut s).is_err());
    }

    #[test]
    fn negative_binomial_vanishing_p_gives_zero() {
        let mut s = rng::stream(0, "nb", 1);
        for _ in 0..10_000 {
            assert_eq!(sample_negative_binomial(1.0, 1e-12, &mut s).unwrap(), 0);
        }
    }

    #[test]
    fn negative_binomial_mean() {
        // NB(2, 0.5): mean r p / (1 - p) = 2, variance r p / (1 - p)^2 = 4.
        let nb = NegativeBinomial::new(2.0, 0.5).unwrap();
        assert_eq!((nb.mean(), nb.variance()), (2.0, 4.0));
        let mut s = rng::stream(4, "nb", 0);
        let trials = 100_000;
        let samples: Vec<f64> = (0..trials).map(|_| nb.sample(&mut s) as f64).collect();
        let mean = samples.iter().sum::<f64>() / trials as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        assert!((mean - 2.0).abs() <= 4.0 * (var / trials as f64).sqrt());
    }

    #[test]
    fn negative_binomial_pmf_matches_closed_form() {
        // P(k) = C(k + r - 1, k) (1 - p)^r p^k for integer r = 3, p = 0.4.
        let (r, p) = (3u64, 0.4);
        let nb = NegativeBinomial::new(r as f64, p).unwrap();
        let mut s = rng::stream(5, "nb", 0);
        let trials = 200_000;
        let mut counts = [0u64; 6];
        for _ in 0..trials {
            let k = nb.sample(&mut s) as usize;
            if k < counts.len() {
                counts[k] += 1;
            }
        }
        let mut binom = 1.0;
        for (k, c) in counts.iter().enumerate() {
            if k > 0 {
                binom *= (k as f64 + r as f64 - 1.0) / k as f64;
            }
            let pmf = binom * (1.0 - p).powi(r as i32) * p.powi(k as i32);
            let freq = *c as f64 / trials as f64;
            let se = (pmf * (1.0 - pmf) / trials as f64).sqrt();
            assert!((freq - pmf).abs() <= 4.0 * se, "k={k}: {freq} vs {pmf}");
        }
    }

    #[test]
    fn options_instantiate_each_variant() {
        let eps0 = 1.0;
        let delta0 = 1e-6;
        for v in [
            BitsumVariant::Exact,
            BitsumVariant::ThreeNb,
            BitsumVariant::CentralGaussian,
        ] {
            let cfg = BitsumOptions::new(v).instantiate(50, eps0, delta0).unwrap();
            assert_eq!(cfg.variant(), v);
            assert_eq!(cfg.users(), 50);
        }
        let mut rr = BitsumOptions::new(BitsumVariant::RandomizedResponse);
        assert!(rr.instantiate(50, eps0, delta0).is_err());
        rr.flip_prob = Some(0.1);
        let cfg = rr.instantiate(50, eps0, delta0).unwrap();
        assert!((cfg.rmse() - (50.0f64 * 0.09).sqrt() / 0.8).abs() < 1e-12);
        assert!(BitsumOptions::new(BitsumVariant::Exact)
            .instantiate(0, 1.0, 0.1)
            .is_err());
    }

    #[test]
    fn variant_names_round_trip() {
        for v in [
            BitsumVariant::Exact,
            BitsumVariant::RandomizedResponse,
            BitsumVariant::ThreeNb,
            BitsumVariant::CentralGaussian,
        ] {
            assert_eq!(v.name().parse::<BitsumVariant>().unwrap(), v);
            let json = serde_json::to_string(&v).unwrap();
            assert_eq!(json, format!("\"{}\"", v.name()));
        }
    }

    proptest! {
        #[test]
        fn payload_encoding_round_trips(bits in proptest::collection::vec(any::<bool>(), 0..200)) {
            let payloads: Vec<Payload> = bits.into_iter().map(Payload::from_bit).collect();
            let bytes = encode_payloads(&payloads);
            prop_assert_eq!(decode_payloads(&bytes, payloads.len()).unwrap(), payloads);
        }
    }

    #[test]
    fn wire_bits() {
        assert_eq!(Payload::Plus.wire_bit(), 1);
        assert_eq!(Payload::Minus.wire_bit(), 0);
        assert!(Payload::from_wire_bit(2).is_err());
        assert_eq!(
            encode_payloads(&[Payload::Plus, Payload::Minus, Payload::Plus]),
            vec![0b101]
        );
    }
}
