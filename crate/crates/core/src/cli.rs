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

//! Command-line frontend.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Deserializer, Serialize};

use crate::bitsum::{BitsumOptions, BitsumProtocol, BitsumVariant};
use crate::classify::{self, ClassifierModel, TrainConfig};
use crate::data::{write_atomic, write_string_atomic, LabeledDataset, Vocabulary};
use crate::error::{Error, Result};
use crate::kde::{self, ProtocolInit};
use crate::lsq::{KernelKind, LsqSpec};
use crate::numfmt::{self, parse_f64_or_inf, sig17};
use crate::privacy::{self, BudgetSpec, CompositionMode};
use crate::rng;
use crate::synth::{self, MixtureParams};
use crate::vector::sample_unit;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

/// Process exit code for a failed command.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Infeasible(_) => EXIT_INFEASIBLE,
        Error::Io(_) => EXIT_IO,
        _ => EXIT_VALIDATION,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "shufdp-kde",
    version,
    about = "Kernel density estimation under shuffled differential privacy"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a spherical Gaussian mixture dataset.
    GenSynth(GenSynthArgs),
    /// Train a private highest-density-class classifier.
    Train(ExperimentArgs),
    /// Classify a labeled dataset with a trained model.
    Classify(ExperimentArgs),
    /// Rank vocabulary terms by each class's private density.
    Decode(ExperimentArgs),
    /// Compare empirical query RMSE with the analytic bound.
    KdeEval(ExperimentArgs),
    /// Count messages and bits sent by each user in one protocol run.
    Meter(ExperimentArgs),
    /// Print the privacy accounting table.
    Account(ExperimentArgs),
}

#[derive(Debug, Args)]
pub struct GenSynthArgs {
    #[arg(long, default_value_t = 4)]
    pub classes: usize,
    #[arg(long, default_value_t = 1000)]
    pub per_class: usize,
    #[arg(long, default_value_t = 32)]
    pub dim: usize,
    /// Minimum pairwise angle between class centers, in radians.
    #[arg(long, default_value_t = 0.0)]
    pub separation: f64,
    #[arg(long, default_value_t = synth::DEFAULT_SPREAD)]
    pub spread: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Points per class written to `--test-out`.
    #[arg(long, default_value_t = 0)]
    pub test_per_class: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub test_out: Option<PathBuf>,
    /// Also write a vocabulary of the class centers plus random distractors.
    #[arg(long)]
    pub vocab_out: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub distractors: usize,
}

/// Flags shared by the experiment commands; each overrides `--config`.
#[derive(Debug, Args, Default)]
pub struct ExperimentArgs {
    /// JSON experiment configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Trained classifier file (defaults to `<out>/model.json`).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Query points for kde-eval, in dataset format.
    #[arg(long)]
    pub queries: Option<PathBuf>,
    #[arg(long)]
    pub num_queries: Option<usize>,
    #[arg(long)]
    pub kernel: Option<KernelKind>,
    #[arg(long)]
    pub bitsum: Option<BitsumVariant>,
    /// Repetitions `I` (defaults to the dimension).
    #[arg(long)]
    pub repetitions: Option<usize>,
    /// Feature dimension, for `account` without a dataset.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Sparsity `S`, for `account`; derived from the kernel otherwise.
    #[arg(long)]
    pub sparsity: Option<usize>,
    /// Target epsilon values, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, value_parser = parse_f64_or_inf)]
    pub eps_label: Option<f64>,
    #[arg(long)]
    pub mode: Option<CompositionMode>,
    /// Fraction of delta assigned to delta'.
    #[arg(long)]
    pub split: Option<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub three_nb_c: Option<f64>,
    /// Fixed randomized-response flip probability.
    #[arg(long)]
    pub flip_prob: Option<f64>,
    /// Number of top terms per class for `decode`.
    #[arg(long)]
    pub k: Option<usize>,
    /// Single class (1-based) for `decode`.
    #[arg(long)]
    pub class: Option<usize>,
}

#[derive(Debug, Clone, Copy)]
struct ExtF64(f64);

impl<'de> Deserialize<'de> for ExtF64 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        numfmt::deserialize_f64_or_inf(d).map(ExtF64)
    }
}

/// On-disk experiment configuration. Every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ConfigFile {
    dataset: Option<PathBuf>,
    vocab: Option<PathBuf>,
    model: Option<PathBuf>,
    queries: Option<PathBuf>,
    num_queries: Option<usize>,
    kernel: Option<KernelKind>,
    bitsum: Option<BitsumVariant>,
    repetitions: Option<usize>,
    dim: Option<usize>,
    sparsity: Option<usize>,
    eps: Option<Vec<f64>>,
    delta: Option<f64>,
    eps_label: Option<ExtF64>,
    mode: Option<CompositionMode>,
    split: Option<f64>,
    trials: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    three_nb_c: Option<f64>,
    flip_prob: Option<f64>,
    k: Option<usize>,
    class: Option<usize>,
}

/// Fully resolved experiment settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: Option<PathBuf>,
    pub vocab: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub queries: Option<PathBuf>,
    pub num_queries: usize,
    pub kernel: KernelKind,
    pub bitsum: BitsumOptions,
    pub repetitions: Option<usize>,
    pub dim: Option<usize>,
    pub sparsity: Option<usize>,
    pub eps: Vec<f64>,
    pub delta: f64,
    pub eps_label: f64,
    pub mode: CompositionMode,
    pub split: f64,
    pub trials: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub k: usize,
    pub class: Option<usize>,
}

impl ExperimentConfig {
    pub fn resolve(args: &ExperimentArgs) -> Result<Self> {
        let file = match &args.config {
            Some(path) => {
                let text = fs::read_to_string(path)?;
                let file: ConfigFile = serde_json::from_str(&text)?;
                let base = path.parent().unwrap_or(Path::new("."));
                let rel =
                    |p: Option<PathBuf>| p.map(|p| if p.is_relative() { base.join(p) } else { p });
                ConfigFile {
                    dataset: rel(file.dataset.clone()),
                    vocab: rel(file.vocab.clone()),
                    model: rel(file.model.clone()),
                    queries: rel(file.queries.clone()),
                    out: rel(file.out.clone()),
                    ..file
                }
            }
            None => ConfigFile::default(),
        };
        let variant = args.bitsum.or(file.bitsum).unwrap_or(BitsumVariant::Exact);
        let mut bitsum = BitsumOptions::new(variant);
        if let Some(c) = args.three_nb_c.or(file.three_nb_c) {
            bitsum.three_nb_c = c;
        }
        bitsum.flip_prob = args.flip_prob.or(file.flip_prob);
        let cfg = ExperimentConfig {
            dataset: args.dataset.clone().or(file.dataset),
            vocab: args.vocab.clone().or(file.vocab),
            model: args.model.clone().or(file.model),
            queries: args.queries.clone().or(file.queries),
            num_queries: args.num_queries.or(file.num_queries).unwrap_or(100),
            kernel: args.kernel.or(file.kernel).unwrap_or(KernelKind::Gaussian),
            bitsum,
            repetitions: args.repetitions.or(file.repetitions),
            dim: args.dim.or(file.dim),
            sparsity: args.sparsity.or(file.sparsity),
            eps: args.eps.clone().or(file.eps).unwrap_or_default(),
            delta: args.delta.or(file.delta).unwrap_or(1e-6),
            eps_label: args
                .eps_label
                .or(file.eps_label.map(|e| e.0))
                .unwrap_or(f64::INFINITY),
            mode: args.mode.or(file.mode).unwrap_or_default(),
            split: args.split.or(file.split).unwrap_or(0.5),
            trials: args.trials.or(file.trials).unwrap_or(30),
            seed: args.seed.or(file.seed).unwrap_or(0),
            out: args
                .out
                .clone()
                .or(file.out)
                .unwrap_or_else(|| PathBuf::from(".")),
            k: args.k.or(file.k).unwrap_or(3),
            class: args.class.or(file.class),
        };
        if cfg.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if cfg.repetitions == Some(0) {
            return Err(Error::invalid("repetitions must be at least 1"));
        }
        Ok(cfg)
    }

    fn require_eps(&self) -> Result<&[f64]> {
        if self.eps.is_empty() {
            return Err(Error::invalid("at least one --eps value is required"));
        }
        Ok(&self.eps)
    }

    fn single_eps(&self) -> Result<f64> {
        match self.require_eps()? {
            [e] => Ok(*e),
            _ => Err(Error::invalid("this command takes exactly one --eps value")),
        }
    }

    fn budget(&self, eps: f64) -> BudgetSpec {
        BudgetSpec {
            target_eps: eps,
            target_delta: if self.mode == CompositionMode::Pure {
                0.0
            } else {
                self.delta
            },
            mode: self.mode,
            eps_label: self.eps_label,
            split: self.split,
        }
    }

    fn load_dataset(&self) -> Result<LabeledDataset> {
        let path = self
            .dataset
            .as_ref()
            .ok_or_else(|| Error::invalid("--dataset is required"))?;
        LabeledDataset::load(path)
    }

    fn load_vocab(&self) -> Result<Vocabulary> {
        let path = self
            .vocab
            .as_ref()
            .ok_or_else(|| Error::invalid("--vocab is required"))?;
        Vocabulary::load(path)
    }

    fn model_path(&self) -> PathBuf {
        self.model
            .clone()
            .unwrap_or_else(|| self.out.join("model.json"))
    }

    fn spec(&self, dim: usize) -> Result<LsqSpec> {
        LsqSpec::new(self.kernel, dim)
    }

    fn repetitions_for(&self, dim: usize) -> usize {
        self.repetitions.unwrap_or(dim)
    }

    fn out_dir(&self) -> Result<&Path> {
        fs::create_dir_all(&self.out)?;
        Ok(&self.out)
    }
}

/// One metric of one configuration, with enough echo to rerun it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub kernel: String,
    pub bitsum: String,
    pub eps: String,
    pub eps_label: String,
    pub seed: u64,
    pub metric: String,
    pub value: String,
}

impl ResultRow {
    fn new(
        kernel: KernelKind,
        bitsum: BitsumVariant,
        eps: f64,
        eps_label: f64,
        seed: u64,
        metric: &str,
        value: f64,
    ) -> Self {
        ResultRow {
            kernel: kernel.name().to_string(),
            bitsum: bitsum.name().to_string(),
            eps: eps.to_string(),
            eps_label: eps_label.to_string(),
            seed,
            metric: metric.to_string(),
            value: sig17(value),
        }
    }
}

fn write_csv<S: Serialize>(path: &Path, rows: &[S]) -> Result<()> {
    write_atomic(path, |w| {
        let mut csv = csv::Writer::from_writer(w);
        for r in rows {
            csv.serialize(r)?;
        }
        csv.flush()?;
        Ok(())
    })
}

fn write_rows(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    write_atomic(path, |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(header)?;
        for r in rows {
            csv.write_record(r)?;
        }
        csv.flush()?;
        Ok(())
    })
}

/// Parses `args` (including the program name) and runs the command.
/// Text meant for the user goes to `stdout`.
pub fn run<I, T, W>(args: I, stdout: &mut W) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
    W: Write,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::invalid(e.to_string()))?;
    run_command(&cli.command, stdout)
}

pub fn run_command<W: Write>(command: &Command, out: &mut W) -> Result<()> {
    match command {
        Command::GenSynth(a) => cmd_gen_synth(a, out),
        Command::Train(a) => cmd_train(&ExperimentConfig::resolve(a)?, out),
        Command::Classify(a) => cmd_classify(&ExperimentConfig::resolve(a)?, out),
        Command::Decode(a) => cmd_decode(&ExperimentConfig::resolve(a)?, out),
        Command::KdeEval(a) => cmd_kde_eval(&ExperimentConfig::resolve(a)?, out),
        Command::Meter(a) => cmd_meter(&ExperimentConfig::resolve(a)?, out),
        Command::Account(a) => cmd_account(&ExperimentConfig::resolve(a)?, out),
    }
}

#[derive(Serialize)]
struct SynthMeta<'a> {
    params: &'a MixtureParams,
    #[serde(serialize_with = "serialize_rows")]
    centers: &'a [Vec<f64>],
}

fn serialize_rows<S: serde::Serializer>(
    rows: &&[Vec<f64>],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    struct Row<'a>(&'a [f64]);
    impl Serialize for Row<'_> {
        fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
            numfmt::serialize_f64_slice(self.0, s)
        }
    }
    let mut seq = s.serialize_seq(Some(rows.len()))?;
    for r in rows.iter() {
        seq.serialize_element(&Row(r))?;
    }
    seq.end()
}

fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(OsString::from).unwrap_or_default();
    name.push(".meta.json");
    path.with_file_name(name)
}

pub fn cmd_gen_synth<W: Write>(a: &GenSynthArgs, out: &mut W) -> Result<()> {
    let params = MixtureParams {
        classes: a.classes,
        per_class: a.per_class,
        dim: a.dim,
        separation: a.separation,
        spread: a.spread,
        test_per_class: a.test_per_class,
        seed: a.seed,
    };
    if a.test_per_class > 0 && a.test_out.is_none() {
        return Err(Error::invalid("--test-per-class needs --test-out"));
    }
    let mix = synth::generate(&params)?;
    mix.train.save(&a.out)?;
    if let (Some(path), Some(test)) = (&a.test_out, &mix.test) {
        test.save(path)?;
    }
    let meta = SynthMeta {
        params: &params,
        centers: &mix.centers,
    };
    write_string_atomic(&sidecar(&a.out), &serde_json::to_string_pretty(&meta)?)?;
    if let Some(path) = &a.vocab_out {
        let mut terms: Vec<String> = (1..=a.classes).map(|c| format!("center-{c}")).collect();
        let mut vectors = mix.centers.clone();
        let mut stream = rng::stream(a.seed, "synth-vocab", 0);
        for k in 1..=a.distractors {
            terms.push(format!("distractor-{k}"));
            vectors.push(sample_unit(a.dim, &mut stream));
        }
        Vocabulary::new(a.dim, terms, vectors)?.save(path)?;
    }
    writeln!(
        out,
        "wrote {} points ({} classes, d = {}) to {}",
        mix.train.len(),
        a.classes,
        a.dim,
        a.out.display()
    )?;
    Ok(())
}

pub fn cmd_train<W: Write>(cfg: &ExperimentConfig, out: &mut W) -> Result<()> {
    let eps = cfg.single_eps()?;
    let data = cfg.load_dataset()?;
    let spec = cfg.spec(data.dim())?;
    let train_cfg = TrainConfig {
        spec,
        repetitions: cfg.repetitions_for(data.dim()),
        bitsum: cfg.bitsum,
        budget: cfg.budget(eps),
        master_seed: cfg.seed,
    };
    let model = classify::train(&data, &train_cfg)?;
    let dir = cfg.out_dir()?;
    let path = cfg.model.clone().unwrap_or_else(|| dir.join("model.json"));
    write_string_atomic(&path, &model.to_json()?)?;
    writeln!(
        out,
        "trained {} classes, counts {:?}",
        model.num_classes(),
        model.counts()
    )?;
    if let Some(b) = model.per_instance() {
        writeln!(
            out,
            "per-instance eps0 = {:.10}, delta0 = {:.6e}",
            b.eps0, b.delta0
        )?;
    }
    writeln!(out, "model written to {}", path.display())?;
    Ok(())
}

fn model_eps(model: &ClassifierModel) -> f64 {
    model.budget().target_eps
}

pub fn cmd_classify<W: Write>(cfg: &ExperimentConfig, out: &mut W) -> Result<()> {
    let model = ClassifierModel::from_json(&fs::read_to_string(cfg.model_path())?)?;
    let test = cfg.load_dataset()?;
    let predicted = model.predict_all(test.vectors())?;
    let eval = classify::evaluate_predictions(
        &predicted,
        test.labels(),
        model.num_classes().max(test.classes()),
    )?;
    let dir = cfg.out_dir()?;
    let rows: Vec<Vec<String>> = predicted
        .iter()
        .zip(test.labels())
        .enumerate()
        .map(|(i, (p, t))| vec![i.to_string(), (t + 1).to_string(), (p + 1).to_string()])
        .collect();
    write_rows(
        &dir.join("predictions.csv"),
        &["index", "true_label", "predicted_label"],
        &rows,
    )?;
    let echo = |metric: &str, v: f64| {
        ResultRow::new(
            model.spec().kind(),
            model.bitsum().variant,
            model_eps(&model),
            model.budget().eps_label,
            cfg.seed,
            metric,
            v,
        )
    };
    write_csv(&dir.join("results.csv"), &[echo("accuracy", eval.accuracy)])?;
    writeln!(out, "accuracy {:.6}", eval.accuracy)?;
    Ok(())
}

pub fn cmd_decode<W: Write>(cfg: &ExperimentConfig, out: &mut W) -> Result<()> {
    let model = ClassifierModel::from_json(&fs::read_to_string(cfg.model_path())?)?;
    let vocab = cfg.load_vocab()?;
    let classes: Vec<usize> = match cfg.class {
        Some(c) if c >= 1 && c <= model.num_classes() => vec![c - 1],
        Some(c) => {
            return Err(Error::invalid(format!(
                "class {c} outside 1..={}",
                model.num_classes()
            )))
        }
        None => (0..model.num_classes()).collect(),
    };
    let mut rows = Vec::new();
    for c in classes {
        for d in model.decode_class(c, &vocab, cfg.k)? {
            writeln!(
                out,
                "class {} rank {} {} {:.6}",
                c + 1,
                d.rank,
                d.term,
                d.score
            )?;
            rows.push(vec![
                (c + 1).to_string(),
                d.rank.to_string(),
                d.term,
                sig17(d.score),
            ]);
        }
    }
    write_rows(
        &cfg.out_dir()?.join("decode.csv"),
        &["class", "rank", "term", "score"],
        &rows,
    )
}

pub fn cmd_kde_eval<W: Write>(cfg: &ExperimentConfig, out: &mut W) -> Result<()> {
    let eps_list = cfg.require_eps()?.to_vec();
    let data = cfg.load_dataset()?;
    let spec = cfg.spec(data.dim())?;
    let reps = cfg.repetitions_for(data.dim());
    let queries: Vec<Vec<f64>> = match &cfg.queries {
        Some(path) => LabeledDataset::load(path)?.vectors().to_vec(),
        None => data
            .vectors()
            .iter()
            .take(cfg.num_queries.max(1))
            .cloned()
            .collect(),
    };
    let n = data.len() as u64;
    let dir = cfg.out_dir()?.to_path_buf();
    let mut summary = Vec::new();
    let mut per_query = Vec::new();
    let mut results = Vec::new();
    for &eps in &eps_list {
        let budget = cfg.budget(eps);
        let (eps0, delta0) = if cfg.bitsum.variant.is_private() {
            let b = privacy::solve_per_instance(&budget, spec.sparsity(), reps)?;
            (b.eps0, b.delta0)
        } else {
            (0.0, 0.0)
        };
        let bitsum = cfg.bitsum.instantiate(n, eps0, delta0)?;
        let report = kde::empirical_suprmse(
            &spec,
            reps,
            &bitsum,
            data.vectors(),
            &queries,
            cfg.trials,
            cfg.seed,
        )?;
        let bound = kde::bound_suprmse(&spec, reps, bitsum.rmse(), n);
        writeln!(
            out,
            "eps {eps}: empirical max RMSE {:.6}, mean {:.6}, bound {:.6}",
            report.max, report.mean, bound
        )?;
        summary.push(vec![
            spec.kind().name().to_string(),
            cfg.bitsum.variant.name().to_string(),
            reps.to_string(),
            eps.to_string(),
            budget.target_delta.to_string(),
            sig17(eps0),
            n.to_string(),
            cfg.trials.to_string(),
            cfg.seed.to_string(),
            sig17(report.max),
            sig17(report.mean),
            sig17(bound),
        ]);
        for (q, r) in report.per_query.iter().enumerate() {
            per_query.push(vec![eps.to_string(), q.to_string(), sig17(*r)]);
        }
        let echo = |metric: &str, v: f64| {
            ResultRow::new(
                spec.kind(),
                cfg.bitsum.variant,
                eps,
                cfg.eps_label,
                cfg.seed,
                metric,
                v,
            )
        };
        results.push(echo("empirical_max_rmse", report.max));
        results.push(echo("empirical_mean_rmse", report.mean));
        results.push(echo("theoretical_bound", bound));
    }
    write_rows(
        &dir.join("kde_eval.csv"),
        &[
            "kernel",
            "bitsum",
            "I",
            "eps",
            "delta",
            "eps0",
            "n",
            "trials",
            "seed",
            "empirical_max_rmse",
            "empirical_mean_rmse",
            "theoretical_bound",
        ],
        &summary,
    )?;
    write_rows(
        &dir.join("kde_eval_queries.csv"),
        &["eps", "query", "rmse"],
        &per_query,
    )?;
    write_csv(&dir.join("results.csv"), &results)
}

pub fn cmd_meter<W: Write>(cfg: &ExperimentConfig, out: &mut W) -> Result<()> {
    let eps = cfg.single_eps()?;
    let data = cfg.load_dataset()?;
    let spec = cfg.spec(data.dim())?;
    let reps = cfg.repetitions_for(data.dim());
    let (eps0, delta0) = if cfg.bitsum.variant.is_private() {
        let b = privacy::solve_per_instance(&cfg.budget(eps), spec.sparsity(), reps)?;
        (b.eps0, b.delta0)
    } else {
        (0.0, 0.0)
    };
    let bitsum = cfg.bitsum.instantiate(data.len() as u64, eps0, delta0)?;
    let init = ProtocolInit::new(spec, reps, bitsum, rng::derive_seed(cfg.seed, "public", 0))?;
    let run = kde::execute(
        &init,
        data.vectors(),
        rng::derive_seed(cfg.seed, "private", 0),
    )?;
    let meter = &run.meter;
    let bits = meter.bits_per_message() as u64;
    let rows: Vec<Vec<String>> = meter
        .per_user_message_counts()
        .iter()
        .enumerate()
        .map(|(u, &c)| vec![u.to_string(), c.to_string(), (c * bits).to_string()])
        .collect();
    let dir = cfg.out_dir()?;
    write_rows(&dir.join("meter.csv"), &["user", "messages", "bits"], &rows)?;
    let echo = |metric: &str, v: f64| {
        ResultRow::new(
            spec.kind(),
            cfg.bitsum.variant,
            eps,
            cfg.eps_label,
            cfg.seed,
            metric,
            v,
        )
    };
    write_csv(
        &dir.join("results.csv"),
        &[
            echo("bits_per_message", bits as f64),
            echo("mean_messages_per_user", meter.mean_messages_per_user()),
            echo("total_messages", meter.total_messages() as f64),
            echo("total_bits", meter.total_bits() as f64),
        ],
    )?;
    writeln!(
        out,
        "users {}, bits/message {}, mean messages/user {:.4}, total bits {}",
        meter.per_user_message_counts().len(),
        bits,
        meter.mean_messages_per_user(),
        meter.total_bits()
    )?;
    Ok(())
}

pub fn cmd_account<W: Write>(cfg: &ExperimentConfig, out: &mut W) -> Result<()> {
    let eps_list = cfg.require_eps()?.to_vec();
    let dim = match (cfg.dim, &cfg.dataset) {
        (Some(d), _) => Some(d),
        (None, Some(_)) => Some(cfg.load_dataset()?.dim()),
        (None, None) => None,
    };
    let sparsity = match (cfg.sparsity, dim) {
        (Some(s), _) => s,
        (None, Some(d)) => cfg.spec(d)?.sparsity(),
        (None, None) => return Err(Error::invalid("give --sparsity, --dim or --dataset")),
    };
    let reps = match (cfg.repetitions, dim) {
        (Some(i), _) => i,
        (None, Some(d)) => d,
        (None, None) => return Err(Error::invalid("give --repetitions, --dim or --dataset")),
    };
    for eps in eps_list {
        let report = privacy::total_budget_report(&cfg.budget(eps), sparsity, reps)?;
        writeln!(out, "target eps {eps}")?;
        write!(out, "{report}")?;
        writeln!(out)?;
    }
    Ok(())
}
