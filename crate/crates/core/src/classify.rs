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

//! Highest-density-class classification and class decoding.
//!
//! Every user randomizes its label, users are grouped by reported label, and
//! each group runs its own KDE protocol. A query is assigned to the class with
//! the largest private density; a class is described by the vocabulary terms
//! with the largest private density.

use std::cmp::Ordering;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bitsum::{BitsumOptions, BitsumVariant};
use crate::data::{LabeledDataset, Vocabulary};
use crate::error::{Error, Result};
use crate::kde::{execute, ProtocolInit, ReleasedModel};
use crate::lsq::LsqSpec;
use crate::privacy::{label_keep_probability, solve_per_instance, BudgetSpec, PerInstanceBudget};
use crate::rng;
use crate::vector::check_unit;

/// Label randomized response over `[0, m)`: keep `c` with probability
/// `e^eps / (e^eps - 1 + m)`, otherwise report a uniform other label.
pub fn randomize_label<R: Rng + ?Sized>(c: usize, m: usize, eps_label: f64, rng: &mut R) -> usize {
    debug_assert!(m >= 2 && c < m);
    if rng.random::<f64>() < label_keep_probability(eps_label, m) {
        return c;
    }
    let other = rng.random_range(0..m - 1);
    if other >= c {
        other + 1
    } else {
        other
    }
}

/// Reported labels for a whole dataset, user `u` drawing from its own stream.
pub fn randomize_labels(
    labels: &[usize],
    m: usize,
    eps_label: f64,
    master_seed: u64,
) -> Vec<usize> {
    labels
        .iter()
        .enumerate()
        .map(|(u, &c)| {
            randomize_label(
                c,
                m,
                eps_label,
                &mut rng::stream(master_seed, "label", u as u64),
            )
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub spec: LsqSpec,
    pub repetitions: usize,
    pub bitsum: BitsumOptions,
    pub budget: BudgetSpec,
    pub master_seed: u64,
}

/// Per-class released models plus the published noisy counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierModel {
    spec: LsqSpec,
    repetitions: usize,
    bitsum: BitsumOptions,
    budget: BudgetSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    per_instance: Option<PerInstanceBudget>,
    counts: Vec<u64>,
    classes: Vec<ReleasedModel>,
}

pub fn train(dataset: &LabeledDataset, cfg: &TrainConfig) -> Result<ClassifierModel> {
    let m = dataset.classes();
    if m < 2 {
        return Err(Error::invalid("classification needs at least 2 classes"));
    }
    if dataset.dim() != cfg.spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: cfg.spec.dim(),
            actual: dataset.dim(),
        });
    }
    cfg.budget.validate()?;
    let per_instance = if cfg.bitsum.variant.is_private() {
        Some(solve_per_instance(
            &cfg.budget,
            cfg.spec.sparsity(),
            cfg.repetitions,
        )?)
    } else {
        None
    };

    let reported = randomize_labels(dataset.labels(), m, cfg.budget.eps_label, cfg.master_seed);
    let mut groups: Vec<Vec<&[f64]>> = vec![Vec::new(); m];
    for (x, &c) in dataset.vectors().iter().zip(&reported) {
        groups[c].push(x);
    }
    if let Some(c) = groups.iter().position(Vec::is_empty) {
        return Err(Error::EmptyClass { class: c });
    }

    let (eps0, delta0) = per_instance.map_or((0.0, 0.0), |b| (b.eps0, b.delta0));
    let mut classes = Vec::with_capacity(m);
    for (c, group) in groups.iter().enumerate() {
        let n = group.len() as u64;
        let bitsum = cfg.bitsum.instantiate(n, eps0, delta0)?;
        let public_seed = rng::derive_seed(cfg.master_seed, "class-public", c as u64);
        let init = ProtocolInit::new(cfg.spec, cfg.repetitions, bitsum, public_seed)?;
        let run = execute(
            &init,
            group,
            rng::derive_seed(cfg.master_seed, "class-private", c as u64),
        )?;
        classes.push(run.model);
    }
    Ok(ClassifierModel {
        spec: cfg.spec,
        repetitions: cfg.repetitions,
        bitsum: cfg.bitsum,
        budget: cfg.budget,
        per_instance,
        counts: groups.iter().map(|g| g.len() as u64).collect(),
        classes,
    })
}

/// Index of the largest score; ties go to the smallest index.
pub fn argmax_first(scores: &[f64]) -> usize {
    let mut best = 0;
    for (c, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = c;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodedTerm {
    pub rank: usize,
    pub term: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<u64>>,
}

/// Accuracy and confusion matrix of `predicted` against `truth`.
pub fn evaluate_predictions(predicted: &[usize], truth: &[usize], m: usize) -> Result<Evaluation> {
    if predicted.len() != truth.len() || truth.is_empty() {
        return Err(Error::invalid(
            "prediction and label lists must be nonempty and equally long",
        ));
    }
    let mut confusion = vec![vec![0u64; m]; m];
    for (&p, &t) in predicted.iter().zip(truth) {
        if p >= m || t >= m {
            return Err(Error::invalid(format!(
                "label out of range for {m} classes"
            )));
        }
        confusion[t][p] += 1;
    }
    let correct: u64 = (0..m).map(|c| confusion[c][c]).sum();
    Ok(Evaluation {
        accuracy: correct as f64 / truth.len() as f64,
        confusion,
    })
}

impl ClassifierModel {
    pub fn spec(&self) -> &LsqSpec {
        &self.spec
    }

    pub fn repetitions(&self) -> usize {
        self.repetitions
    }

    pub fn bitsum(&self) -> &BitsumOptions {
        &self.bitsum
    }

    pub fn budget(&self) -> &BudgetSpec {
        &self.budget
    }

    pub fn per_instance(&self) -> Option<&PerInstanceBudget> {
        self.per_instance.as_ref()
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// Published per-class counts of reported labels.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn class_model(&self, c: usize) -> &ReleasedModel {
        &self.classes[c]
    }

    /// Private density of every class at `y`.
    pub fn scores(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_unit(y, self.spec.dim())?;
        Ok(self.classes.iter().map(|k| k.query_unchecked(y)).collect())
    }

    pub fn classify(&self, y: &[f64]) -> Result<usize> {
        Ok(argmax_first(&self.scores(y)?))
    }

    pub fn predict_all<V: AsRef<[f64]>>(&self, ys: &[V]) -> Result<Vec<usize>> {
        ys.iter().map(|y| self.classify(y.as_ref())).collect()
    }

    pub fn evaluate(&self, test: &LabeledDataset) -> Result<Evaluation> {
        if test.classes() != self.num_classes() {
            return Err(Error::invalid(format!(
                "test set has {} classes, model has {}",
                test.classes(),
                self.num_classes()
            )));
        }
        let predicted = self.predict_all(test.vectors())?;
        evaluate_predictions(&predicted, test.labels(), self.num_classes())
    }

    /// Top-`k` vocabulary terms for class `c` by descending private density,
    /// ties broken by term.
    pub fn decode_class(&self, c: usize, vocab: &Vocabulary, k: usize) -> Result<Vec<DecodedTerm>> {
        if c >= self.num_classes() {
            return Err(Error::invalid(format!("class {c} out of range")));
        }
        if k > vocab.len() {
            return Err(Error::invalid(format!(
                "k = {k} exceeds vocabulary size {}",
                vocab.len()
            )));
        }
        if vocab.dim() != self.spec.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.spec.dim(),
                actual: vocab.dim(),
            });
        }
        let model = &self.classes[c];
        let mut scored: Vec<(f64, &String)> = vocab
            .vectors()
            .iter()
            .zip(vocab.terms())
            .map(|(v, t)| (model.query_unchecked(v), t))
            .collect();
        scored.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(Ordering::Equal)
                .then_with(|| a.1.cmp(b.1))
        });
        Ok(scored
            .into_iter()
            .take(k)
            .enumerate()
            .map(|(rank, (score, term))| DecodedTerm {
                rank: rank + 1,
                term: term.clone(),
                score,
            })
            .collect())
    }

    /// Unbiased estimates of the true class sizes from the published counts.
    /// Diagnostic only; training always uses the raw counts.
    pub fn debiased_counts(&self) -> Result<Vec<f64>> {
        debiased_counts(&self.counts, self.budget.eps_label)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: ClassifierModel = serde_json::from_str(s)?;
        if model.classes.len() != model.counts.len() || model.classes.len() < 2 {
            return Err(Error::invalid(
                "model needs one count per class and at least 2 classes",
            ));
        }
        for (k, &n) in model.classes.iter().zip(&model.counts) {
            if k.spec() != &model.spec || k.n() != n || k.repetitions() != model.repetitions {
                return Err(Error::invalid(
                    "per-class model disagrees with the classifier header",
                ));
            }
        }
        Ok(model)
    }
}

/// Inverts the label randomized-response law on the counts. Fails when
/// `eps_label = 0`, where reported labels carry no information.
pub fn debiased_counts(counts: &[u64], eps_label: f64) -> Result<Vec<f64>> {
    let m = counts.len();
    if m < 2 {
        return Err(Error::invalid("need at least 2 classes"));
    }
    let keep = label_keep_probability(eps_label, m);
    let other = (1.0 - keep) / (m as f64 - 1.0);
    if keep - other <= 0.0 {
        return Err(Error::invalid("label budget 0 makes counts uninformative"));
    }
    let n: f64 = counts.iter().map(|&c| c as f64).sum();
    Ok(counts
        .iter()
        .map(|&c| (c as f64 - other * n) / (keep - other))
        .collect())
}

/// Convenience constructor of a training configuration for one variant.
pub fn train_config(
    spec: LsqSpec,
    repetitions: usize,
    variant: BitsumVariant,
    budget: BudgetSpec,
    master_seed: u64,
) -> TrainConfig {
    TrainConfig {
        spec,
        repetitions,
        bitsum: BitsumOptions::new(variant),
        budget,
        master_seed,
    }
}
