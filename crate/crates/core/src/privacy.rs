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

//! Privacy accounting for `I * S` composed bitsum instances.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numfmt;

/// Upper end of the per-instance search bracket `(0, EPS0_MAX]`.
pub const EPS0_MAX: f64 = 100.0;
const MAX_BISECTION_STEPS: usize = 200;
const SOLVE_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompositionMode {
    #[default]
    Advanced,
    Pure,
}

impl fmt::Display for CompositionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CompositionMode::Advanced => "advanced",
            CompositionMode::Pure => "pure",
        })
    }
}

impl std::str::FromStr for CompositionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "advanced" => Ok(CompositionMode::Advanced),
            "pure" => Ok(CompositionMode::Pure),
            other => Err(Error::invalid(format!(
                "unknown composition mode '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Composed {
    pub eps: f64,
    pub delta: f64,
}

/// Overall `(eps, delta)` of `I * S` instances each `(eps0, delta0)`-DP.
///
/// Advanced: `eps = eps0 S (e^{eps0 S} - 1) I + eps0 S sqrt(2 I ln(1/delta'))`,
/// `delta = I S delta0 + delta'`. Pure: `eps = I S eps0`, `delta = 0`.
pub fn compose(
    eps0: f64,
    delta0: f64,
    sparsity: usize,
    repetitions: usize,
    delta_prime: f64,
    mode: CompositionMode,
) -> Result<Composed> {
    if !(eps0 > 0.0 && eps0.is_finite()) {
        return Err(Error::invalid(format!("eps0 must be positive, got {eps0}")));
    }
    if sparsity == 0 || repetitions == 0 {
        return Err(Error::invalid("S and I must be at least 1"));
    }
    let s = sparsity as f64;
    let i = repetitions as f64;
    match mode {
        CompositionMode::Pure => Ok(Composed {
            eps: i * s * eps0,
            delta: 0.0,
        }),
        CompositionMode::Advanced => {
            if !(delta_prime > 0.0 && delta_prime < 1.0) {
                return Err(Error::invalid(format!(
                    "delta' must lie in (0, 1), got {delta_prime}"
                )));
            }
            if !(0.0..1.0).contains(&delta0) {
                return Err(Error::invalid(format!(
                    "delta0 must lie in [0, 1), got {delta0}"
                )));
            }
            let es = eps0 * s;
            Ok(Composed {
                eps: es * es.exp_m1() * i + es * (2.0 * i * (1.0 / delta_prime).ln()).sqrt(),
                delta: i * s * delta0 + delta_prime,
            })
        }
    }
}

/// Target overall budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetSpec {
    #[serde(serialize_with = "numfmt::serialize_f64")]
    pub target_eps: f64,
    #[serde(serialize_with = "numfmt::serialize_f64")]
    pub target_delta: f64,
    pub mode: CompositionMode,
    /// Label randomized-response budget; `inf` keeps labels unchanged.
    #[serde(
        serialize_with = "numfmt::serialize_f64_or_inf",
        deserialize_with = "numfmt::deserialize_f64_or_inf"
    )]
    pub eps_label: f64,
    /// Fraction of `target_delta` given to `delta'`.
    #[serde(default = "default_split", serialize_with = "numfmt::serialize_f64")]
    pub split: f64,
}

fn default_split() -> f64 {
    0.5
}

impl BudgetSpec {
    pub fn advanced(target_eps: f64, target_delta: f64) -> Self {
        BudgetSpec {
            target_eps,
            target_delta,
            mode: CompositionMode::Advanced,
            eps_label: f64::INFINITY,
            split: default_split(),
        }
    }

    pub fn pure(target_eps: f64) -> Self {
        BudgetSpec {
            target_eps,
            target_delta: 0.0,
            mode: CompositionMode::Pure,
            eps_label: f64::INFINITY,
            split: default_split(),
        }
    }

    pub fn with_eps_label(mut self, eps_label: f64) -> Self {
        self.eps_label = eps_label;
        self
    }

    pub fn with_split(mut self, split: f64) -> Self {
        self.split = split;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.target_eps > 0.0 && self.target_eps.is_finite()) {
            return Err(Error::invalid(format!(
                "target eps must be positive and finite, got {}",
                self.target_eps
            )));
        }
        if !(self.eps_label >= 0.0) {
            return Err(Error::invalid(format!(
                "eps_label must be nonnegative, got {}",
                self.eps_label
            )));
        }
        match self.mode {
            CompositionMode::Advanced => {
                if !(self.target_delta > 0.0 && self.target_delta < 1.0) {
                    return Err(Error::invalid(format!(
                        "advanced composition needs delta in (0, 1), got {}",
                        self.target_delta
                    )));
                }
                if !(self.split > 0.0 && self.split < 1.0) {
                    return Err(Error::invalid(format!(
                        "delta split must lie in (0, 1), got {}",
                        self.split
                    )));
                }
            }
            CompositionMode::Pure => {
                if !(self.target_delta >= 0.0 && self.target_delta < 1.0) {
                    return Err(Error::invalid(format!(
                        "delta must lie in [0, 1), got {}",
                        self.target_delta
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Budget of a single bitsum instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerInstanceBudget {
    #[serde(serialize_with = "numfmt::serialize_f64")]
    pub eps0: f64,
    #[serde(serialize_with = "numfmt::serialize_f64")]
    pub delta0: f64,
    #[serde(serialize_with = "numfmt::serialize_f64")]
    pub delta_prime: f64,
}

/// Splits `delta` and inverts `compose` for `eps0` by bisection on
/// `(0, EPS0_MAX]`. The returned `eps0` never overshoots the target.
pub fn solve_per_instance(
    budget: &BudgetSpec,
    sparsity: usize,
    repetitions: usize,
) -> Result<PerInstanceBudget> {
    budget.validate()?;
    if sparsity == 0 || repetitions == 0 {
        return Err(Error::invalid("S and I must be at least 1"));
    }
    let blocks = (sparsity * repetitions) as f64;
    match budget.mode {
        CompositionMode::Pure => {
            let eps0 = budget.target_eps / blocks;
            if eps0 > EPS0_MAX {
                return Err(Error::Infeasible(format!(
                    "per-instance eps0 = {eps0} exceeds {EPS0_MAX}"
                )));
            }
            Ok(PerInstanceBudget {
                eps0,
                delta0: 0.0,
                delta_prime: 0.0,
            })
        }
        CompositionMode::Advanced => {
            let delta_prime = budget.split * budget.target_delta;
            let delta0 = (budget.target_delta - delta_prime) / blocks;
            let eps_at = |e: f64| {
                compose(
                    e,
                    delta0,
                    sparsity,
                    repetitions,
                    delta_prime,
                    CompositionMode::Advanced,
                )
                .map(|c| c.eps)
            };
            let target = budget.target_eps;
            if eps_at(EPS0_MAX)? < target {
                return Err(Error::Infeasible(format!(
                    "no eps0 in (0, {EPS0_MAX}] reaches eps = {target}"
                )));
            }
            let (mut lo, mut hi) = (0.0f64, EPS0_MAX);
            for _ in 0..MAX_BISECTION_STEPS {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let e = eps_at(mid)?;
                if e <= target {
                    lo = mid;
                    if target - e <= SOLVE_RTOL * target {
                        break;
                    }
                } else {
                    hi = mid;
                }
            }
            if lo <= 0.0 {
                return Err(Error::Infeasible(format!(
                    "eps = {target} is below the resolution of the eps0 search"
                )));
            }
            Ok(PerInstanceBudget {
                eps0: lo,
                delta0,
                delta_prime,
            })
        }
    }
}

/// Probability that label randomized response reports the true label,
/// `e^eps / (e^eps - 1 + m)`, evaluated stably for large or infinite `eps`.
pub fn label_keep_probability(eps_label: f64, m: usize) -> f64 {
    1.0 / (1.0 + (m as f64 - 1.0) * (-eps_label).exp())
}

/// Full accounting statement for one training configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetReport {
    pub budget: BudgetSpec,
    pub sparsity: usize,
    pub repetitions: usize,
    pub per_instance: PerInstanceBudget,
    pub composed: Composed,
}

impl BudgetReport {
    /// Adversary sees only the released model.
    pub fn model_threat(&self) -> Composed {
        self.composed
    }

    /// Adversary sees all shuffler output, including reported labels.
    pub fn communication_threat(&self) -> Composed {
        Composed {
            eps: self.composed.eps + self.budget.eps_label,
            delta: self.composed.delta,
        }
    }
}

pub fn total_budget_report(
    budget: &BudgetSpec,
    sparsity: usize,
    repetitions: usize,
) -> Result<BudgetReport> {
    let per_instance = solve_per_instance(budget, sparsity, repetitions)?;
    let composed = compose(
        per_instance.eps0,
        per_instance.delta0,
        sparsity,
        repetitions,
        per_instance.delta_prime,
        budget.mode,
    )?;
    Ok(BudgetReport {
        budget: *budget,
        sparsity,
        repetitions,
        per_instance,
        composed,
    })
}

impl fmt::Display for BudgetReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let row = |f: &mut fmt::Formatter<'_>, k: &str, v: String| writeln!(f, "{k:<34} {v}");
        row(f, "mode", self.budget.mode.to_string())?;
        row(f, "repetitions I", self.repetitions.to_string())?;
        row(f, "sparsity S", self.sparsity.to_string())?;
        row(f, "eps0", format!("{:.10}", self.per_instance.eps0))?;
        row(f, "delta0", format!("{:.6e}", self.per_instance.delta0))?;
        row(
            f,
            "delta'",
            format!("{:.6e}", self.per_instance.delta_prime),
        )?;
        row(f, "composed eps", format!("{:.10}", self.composed.eps))?;
        row(f, "composed delta", format!("{:.6e}", self.composed.delta))?;
        row(f, "eps_label", format!("{}", self.budget.eps_label))?;
        let m = self.model_threat();
        row(
            f,
            "model-threat (eps, delta)",
            format!("({:.10}, {:.6e})", m.eps, m.delta),
        )?;
        let c = self.communication_threat();
        row(
            f,
            "communication-threat (eps, delta)",
            format!("({:.10}, {:.6e})", c.eps, c.delta),
        )
    }
}
