//! Time-series correlation features (TCF) for sequences of per-frame descriptors.
//!
//! A video is turned into an `n x k` [`TimeSeriesMatrix`] (one row per feature, one
//! column per frame). The encoder summarises it with pairwise Pearson correlations
//! between (grouped) rows inside temporal windows, followed by strided sample
//! autocorrelations of every row. The resulting fixed-length descriptor is fed to a
//! one-vs-rest linear SVM and scored under a repeated random half split protocol.

pub mod classifier;
pub mod cli;
pub mod correlation;
pub mod dataio;
pub mod encoder;
pub mod error;
pub mod evaluation;

pub use classifier::{train_ovr, LinearOvrModel, Normalization, TrainConfig};
pub use correlation::{pearson, sample_acf, Acf, DegeneratePolicy};
pub use encoder::{
    build_matrix, encode_acf, encode_ccf, encode_tcf, group, partition, select_subset, EncoderConfig, GroupedMatrix,
    Selection, TcfLayout, TcfVector, TimeSeriesMatrix,
};
pub use error::{Error, Result};
pub use evaluation::{
    baseline_pool, confusion_matrix, make_split, run_protocol, run_protocol_with, sweep, EvalReport, LabeledDataset,
    PoolMode, Representation, SplitSpec,
};
