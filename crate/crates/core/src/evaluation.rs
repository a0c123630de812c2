//! Randomised half-split evaluation protocol, parameter sweeps and a pooling
//! baseline.
//!
//! Every repetition draws its split from a seed derived from `(master_seed, index)`,
//! so results do not depend on how repetitions are scheduled across threads.

use std::borrow::Cow;
use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{train_ovr, TrainConfig};
use crate::dataio::tsf::read_tsf;
use crate::encoder::{encode_tcf, EncoderConfig, Selection, TimeSeriesMatrix};
use crate::error::{Error, Result};

/// splitmix64 of `master ^ mix(index)`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    splitmix(master ^ splitmix(index))
}

#[derive(Debug, Clone, PartialEq)]
pub enum ItemSource {
    Matrix(TimeSeriesMatrix),
    /// A TSF file listed on `line` of `manifest`.
    File {
        path: PathBuf,
        manifest: PathBuf,
        line: usize,
    },
    /// A pre-computed descriptor, used as-is regardless of the representation.
    Descriptor(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetItem {
    pub id: String,
    pub label: String,
    pub source: ItemSource,
}

impl DatasetItem {
    /// The item's time-series matrix, reading it from disk when needed.
    pub fn load(&self) -> Result<Cow<'_, TimeSeriesMatrix>> {
        match &self.source {
            ItemSource::Matrix(m) => Ok(Cow::Borrowed(m)),
            ItemSource::File { path, manifest, line } => read_tsf(path).map(Cow::Owned).map_err(|e| Error::Manifest {
                path: manifest.clone(),
                line: *line,
                message: e.to_string(),
            }),
            ItemSource::Descriptor(_) => {
                Err(Error::InvalidInput(format!("item {:?} only carries a cached descriptor", self.id)))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    items: Vec<DatasetItem>,
}

impl LabeledDataset {
    /// Rejects duplicate ids and empty labels.
    pub fn new(items: Vec<DatasetItem>) -> Result<Self> {
        let mut ids = HashSet::new();
        for item in &items {
            if item.label.is_empty() {
                return Err(Error::InvalidInput(format!("item {:?} has an empty label", item.id)));
            }
            if !ids.insert(item.id.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate video id {:?}", item.id)));
            }
        }
        Ok(Self { items })
    }

    pub fn items(&self) -> &[DatasetItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Sorted distinct labels.
    pub fn class_set(&self) -> Vec<String> {
        let mut classes: Vec<String> = self.items.iter().map(|i| i.label.clone()).collect();
        classes.sort();
        classes.dedup();
        classes
    }

    /// Item count per label.
    pub fn class_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for item in &self.items {
            *counts.entry(item.label.clone()).or_insert(0) += 1;
        }
        counts
    }

    pub fn labels(&self) -> Vec<&str> {
        self.items.iter().map(|i| i.label.as_str()).collect()
    }

    /// Feature count of the first item, when it carries a matrix.
    pub fn feature_count(&self) -> Result<usize> {
        let first = self.items.first().ok_or_else(|| Error::InvalidInput("empty dataset".into()))?;
        Ok(first.load()?.n())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PoolMode {
    Mean,
    Max,
}

/// Per-row mean or maximum over frames.
pub fn baseline_pool(ts: &TimeSeriesMatrix, mode: PoolMode) -> Vec<f64> {
    ts.rows()
        .map(|row| match mode {
            PoolMode::Mean => row.iter().sum::<f64>() / row.len() as f64,
            PoolMode::Max => row.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
        .collect()
}

/// How a video is turned into a fixed-length vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    Tcf(EncoderConfig),
    Pool(PoolMode),
}

impl Representation {
    pub fn describe(&self) -> String {
        match self {
            Representation::Tcf(c) => format!(
                "tcf(scheme={}, groups={}, L={}, gamma={}, stride={})",
                c.selection,
                c.series_count(),
                c.windows,
                c.gamma,
                c.stride
            ),
            Representation::Pool(PoolMode::Mean) => "mean-pool".into(),
            Representation::Pool(PoolMode::Max) => "max-pool".into(),
        }
    }

    fn encode(&self, ts: &TimeSeriesMatrix) -> Result<Vec<f64>> {
        match self {
            Representation::Tcf(cfg) => Ok(encode_tcf(ts, cfg)?.into_combined()),
            Representation::Pool(mode) => Ok(baseline_pool(ts, *mode)),
        }
    }
}

/// Encodes every item once (in parallel, output in dataset order).
pub fn featurize(dataset: &LabeledDataset, repr: &Representation) -> Result<Vec<Vec<f64>>> {
    dataset
        .items
        .par_iter()
        .map(|item| {
            let wrap = |e: Error| Error::InItem { id: item.id.clone(), source: Box::new(e) };
            match &item.source {
                ItemSource::Descriptor(d) => Ok(d.clone()),
                _ => repr.encode(&*item.load().map_err(wrap)?).map_err(wrap),
            }
        })
        .collect()
}

/// A train/test partition as dataset indices (ascending).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub seed: u64,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// Classes with a single item, which therefore have no training example.
    pub untrained_classes: Vec<String>,
}

impl SplitSpec {
    pub fn train_ids<'a>(&self, dataset: &'a LabeledDataset) -> Vec<&'a str> {
        self.train.iter().map(|&i| dataset.items[i].id.as_str()).collect()
    }

    pub fn test_ids<'a>(&self, dataset: &'a LabeledDataset) -> Vec<&'a str> {
        self.test.iter().map(|&i| dataset.items[i].id.as_str()).collect()
    }
}

/// Per class with `m` items, `floor(m / 2)` uniformly chosen items go to training and
/// the rest to testing.
pub fn make_split(dataset: &LabeledDataset, seed: u64) -> SplitSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, item) in dataset.items.iter().enumerate() {
        by_class.entry(item.label.as_str()).or_default().push(i);
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut untrained_classes = Vec::new();
    for (label, mut members) in by_class {
        members.shuffle(&mut rng);
        let cut = members.len() / 2;
        if cut == 0 {
            untrained_classes.push(label.to_string());
        }
        train.extend_from_slice(&members[..cut]);
        test.extend_from_slice(&members[cut..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    SplitSpec { seed, train, test, untrained_classes }
}

/// Row-normalised confusion matrix in percent (rows = true class, columns =
/// predicted). Rows of classes that never occur in `truth` are all zero.
pub fn confusion_matrix<S: AsRef<str>>(truth: &[S], predicted: &[S], class_set: &[String]) -> Result<Vec<Vec<f64>>> {
    let mut counts = ConfusionCounts::new(class_set.len());
    counts.record(truth, predicted, class_set)?;
    Ok(counts.percentages())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionCounts {
    pub fn new(classes: usize) -> Self {
        Self { counts: vec![vec![0; classes]; classes] }
    }

    pub fn record<S: AsRef<str>>(&mut self, truth: &[S], predicted: &[S], class_set: &[String]) -> Result<()> {
        if truth.len() != predicted.len() {
            return Err(Error::LengthMismatch { left: truth.len(), right: predicted.len() });
        }
        let index = |label: &str| {
            class_set.iter().position(|c| c == label).ok_or_else(|| Error::UnknownLabel(label.to_string()))
        };
        for (t, p) in truth.iter().zip(predicted) {
            let (i, j) = (index(t.as_ref())?, index(p.as_ref())?);
            self.counts[i][j] += 1;
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &ConfusionCounts) {
        for (row, other_row) in self.counts.iter_mut().zip(&other.counts) {
            for (a, b) in row.iter_mut().zip(other_row) {
                *a += b;
            }
        }
    }

    pub fn percentages(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let total: u64 = row.iter().sum();
                row.iter().map(|&c| if total == 0 { 0.0 } else { 100.0 * c as f64 / total as f64 }).collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub representation: Representation,
    pub train: TrainConfig,
    pub repetitions: usize,
    pub master_seed: u64,
}

/// Outcome of [`run_protocol`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub classes: Vec<String>,
    pub descriptor_dim: usize,
    pub per_rep_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
    /// Pooled over all repetitions, row-normalised to percent.
    pub confusion: Vec<Vec<f64>>,
    pub confusion_counts: ConfusionCounts,
    pub config: ConfigEcho,
    pub warnings: Vec<String>,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Human-readable summary with the confusion matrix.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let reps = self.per_rep_accuracy.len();
        let _ = writeln!(out, "representation : {}", self.config.representation.describe());
        let _ = writeln!(out, "descriptor dim : {}", self.descriptor_dim);
        let _ = writeln!(out, "repetitions    : {reps}");
        let _ = writeln!(out, "mean accuracy  : {:.2}%", 100.0 * self.mean_accuracy);
        let _ = writeln!(out, "\nconfusion matrix (%; rows = true, columns = predicted)");
        let width = self.classes.iter().map(String::len).max().unwrap_or(0).max(6);
        let _ = write!(out, "{:w$}", "", w = width + 4);
        for (j, _) in self.classes.iter().enumerate() {
            let _ = write!(out, " {:>6}", format!("[{j}]"));
        }
        out.push('\n');
        for (i, row) in self.confusion.iter().enumerate() {
            let _ = write!(out, "{:width$}", format!("[{i}] {}", self.classes[i]), width = width + 4);
            for v in row {
                let _ = write!(out, " {v:>6.1}");
            }
            out.push('\n');
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }
}

/// The repeated half-split protocol with TCF descriptors.
pub fn run_protocol(
    dataset: &LabeledDataset,
    enc_cfg: &EncoderConfig,
    train_cfg: &TrainConfig,
    repetitions: usize,
    master_seed: u64,
) -> Result<EvalReport> {
    run_protocol_with(dataset, &Representation::Tcf(enc_cfg.clone()), train_cfg, repetitions, master_seed)
}

/// The repeated half-split protocol for any representation.
pub fn run_protocol_with(
    dataset: &LabeledDataset,
    repr: &Representation,
    train_cfg: &TrainConfig,
    repetitions: usize,
    master_seed: u64,
) -> Result<EvalReport> {
    let descriptors = featurize(dataset, repr)?;
    evaluate_descriptors(dataset, &descriptors, repr, train_cfg, repetitions, master_seed)
}

/// Runs the protocol on already encoded descriptors (one per dataset item).
pub fn evaluate_descriptors(
    dataset: &LabeledDataset,
    descriptors: &[Vec<f64>],
    repr: &Representation,
    train_cfg: &TrainConfig,
    repetitions: usize,
    master_seed: u64,
) -> Result<EvalReport> {
    if repetitions == 0 {
        return Err(Error::InvalidInput("repetitions must be positive".into()));
    }
    if descriptors.len() != dataset.len() {
        return Err(Error::LengthMismatch { left: descriptors.len(), right: dataset.len() });
    }
    let counts = dataset.class_counts();
    let trainable = counts.values().filter(|&&c| c >= 2).count();
    if trainable < 2 {
        return Err(Error::InvalidInput(format!(
            "the protocol needs at least 2 classes with 2 or more items, found {trainable}"
        )));
    }
    let classes = dataset.class_set();
    let labels = dataset.labels();

    let outcomes = (0..repetitions)
        .into_par_iter()
        .map(|rep| {
            let wrap = |e: Error| Error::InRepetition { rep, source: Box::new(e) };
            let split = make_split(dataset, derive_seed(master_seed, rep as u64));
            let xs: Vec<&[f64]> = split.train.iter().map(|&i| descriptors[i].as_slice()).collect();
            let ys: Vec<&str> = split.train.iter().map(|&i| labels[i]).collect();
            let model = train_ovr(&xs, &ys, train_cfg).map_err(wrap)?;
            let mut truth = Vec::with_capacity(split.test.len());
            let mut predicted = Vec::with_capacity(split.test.len());
            for &i in &split.test {
                truth.push(labels[i]);
                predicted.push(model.predict(&descriptors[i]).map_err(wrap)?);
            }
            let correct = truth.iter().zip(&predicted).filter(|(t, p)| t == p).count();
            let mut confusion = ConfusionCounts::new(classes.len());
            confusion.record(&truth, &predicted, &classes).map_err(wrap)?;
            Ok((correct as f64 / truth.len() as f64, confusion))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut pooled = ConfusionCounts::new(classes.len());
    let mut per_rep_accuracy = Vec::with_capacity(repetitions);
    for (accuracy, confusion) in &outcomes {
        per_rep_accuracy.push(*accuracy);
        pooled.merge(confusion);
    }
    let mean_accuracy = per_rep_accuracy.iter().sum::<f64>() / repetitions as f64;
    let warnings = counts
        .iter()
        .filter(|(_, &c)| c < 2)
        .map(|(label, _)| format!("class {label:?} has a single item; it is never trained on"))
        .collect();

    Ok(EvalReport {
        classes,
        descriptor_dim: descriptors.first().map_or(0, Vec::len),
        per_rep_accuracy,
        mean_accuracy,
        confusion: pooled.percentages(),
        confusion_counts: pooled,
        config: ConfigEcho { representation: repr.clone(), train: train_cfg.clone(), repetitions, master_seed },
        warnings,
    })
}

/// Cartesian grid of encoder settings. `groups` is `lambda` for the group scheme
/// and the subset size `m` otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub schemes: Vec<Selection>,
    pub groups: Vec<usize>,
    pub windows: Vec<usize>,
    pub gammas: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub scheme: Selection,
    pub groups: usize,
    pub windows: usize,
    pub gamma: usize,
    pub dimension: usize,
    pub mean_accuracy: Option<f64>,
    pub error: Option<String>,
}

impl SweepGrid {
    /// Encoder configs in emission order (scheme, groups, windows, gamma; gamma fastest).
    pub fn configs(&self, base: &EncoderConfig) -> Vec<EncoderConfig> {
        let mut out = Vec::new();
        for &selection in &self.schemes {
            for &g in &self.groups {
                for &windows in &self.windows {
                    for &gamma in &self.gammas {
                        let mut cfg = EncoderConfig { selection, windows, gamma, ..base.clone() };
                        if selection == Selection::Group {
                            cfg.lambda = g;
                        } else {
                            cfg.selection_m = g;
                        }
                        out.push(cfg);
                    }
                }
            }
        }
        out
    }
}

/// Evaluates every grid point with [`run_protocol`] under the same `master_seed`,
/// so each row is reproducible on its own and all rows share the same splits.
/// Invalid points produce a failed row and the sweep continues.
pub fn sweep(
    dataset: &LabeledDataset,
    grid: &SweepGrid,
    base: &EncoderConfig,
    train_cfg: &TrainConfig,
    repetitions: usize,
    master_seed: u64,
) -> Result<Vec<SweepRow>> {
    let n = dataset.feature_count()?;
    Ok(grid
        .configs(base)
        .into_iter()
        .map(|cfg| {
            let outcome = run_protocol(dataset, &cfg, train_cfg, repetitions, master_seed);
            if let Err(e) = &outcome {
                log::warn!("sweep point {:?} failed: {e}", cfg);
            }
            SweepRow {
                scheme: cfg.selection,
                groups: cfg.series_count(),
                windows: cfg.windows,
                gamma: cfg.gamma,
                dimension: cfg.descriptor_len(n),
                mean_accuracy: outcome.as_ref().ok().map(|r| r.mean_accuracy),
                error: outcome.err().map(|e| e.to_string()),
            }
        })
        .collect())
}

/// Tab-separated table with a header row.
pub fn sweep_to_tsv(rows: &[SweepRow]) -> String {
    let mut out = String::from("scheme\tgroups\twindows\tgamma\tdimension\tmean_accuracy\tstatus\n");
    for r in rows {
        let accuracy = r.mean_accuracy.map_or_else(String::new, |a| format!("{a:.6}"));
        let status = r
            .error
            .as_deref()
            .map_or_else(|| "ok".to_string(), |e| format!("failed: {}", e.replace(['\t', '\n'], " ")));
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.scheme, r.groups, r.windows, r.gamma, r.dimension, accuracy, status
        );
    }
    out
}
