//! The `tcf` command line tool.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 solver convergence error.
//! Log verbosity is read from `TCF_LOG` (`error`, `warn`, `info`, `debug`).

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::classifier::{train_ovr, Normalization, TrainConfig};
use crate::correlation::DegeneratePolicy;
use crate::dataio::{read_manifest, read_tsf, synth_generate, write_corpus, SynthSpec};
use crate::encoder::{encode_tcf, EncoderConfig, Selection, TcfLayout};
use crate::error::{Error, Result};
use crate::evaluation::{featurize, run_protocol_with, sweep, sweep_to_tsv, PoolMode, Representation, SweepGrid};

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Parser)]
#[command(name = "tcf", version, about = "Time-series correlation features and linear SVM evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Encode TSF files into TCF descriptors
    Encode(EncodeArgs),
    /// Train a one-vs-rest linear SVM on every video of a manifest
    Train(TrainArgs),
    /// Run the repeated random half-split protocol
    Eval(EvalArgs),
    /// Evaluate a grid of encoder settings
    Sweep(SweepArgs),
    /// Generate a synthetic corpus (TSF files + manifest)
    Synth(SynthArgs),
    /// Print the shape of a TSF file and check its payload
    Inspect(InspectArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Features {
    Tcf,
    Mean,
    Max,
}

#[derive(Debug, Args)]
struct EncoderArgs {
    /// Number of groups (lambda) for the group scheme
    #[arg(long, default_value_t = 64)]
    lambda: usize,
    /// Number of non-overlapping temporal windows (L)
    #[arg(long, default_value_t = 16)]
    windows: usize,
    /// Number of autocorrelation lags (gamma)
    #[arg(long, default_value_t = 6)]
    lags: usize,
    /// Lag stride
    #[arg(long, default_value_t = 1)]
    stride: usize,
    /// Series selection scheme for the cross-correlation
    #[arg(long, value_enum, default_value_t = Selection::Group)]
    scheme: Selection,
    /// Series kept by the first/random/uniform schemes
    #[arg(long = "subset-size", default_value_t = 64)]
    subset_size: usize,
    /// Seed of the random selection scheme
    #[arg(long = "selection-seed", default_value_t = 0)]
    selection_seed: u64,
}

impl EncoderArgs {
    fn config(&self) -> EncoderConfig {
        EncoderConfig {
            lambda: self.lambda,
            windows: self.windows,
            gamma: self.lags,
            stride: self.stride,
            selection: self.scheme,
            selection_m: self.subset_size,
            policy: DegeneratePolicy::ZeroFill,
            seed: self.selection_seed,
        }
    }
}

#[derive(Debug, Args)]
struct SvmArgs {
    /// SVM regularisation constant C
    #[arg(long = "c", default_value_t = 1000.0)]
    c: f64,
    /// Solver tolerance (KKT violation and relative duality gap)
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
    /// Solver iteration cap per binary problem
    #[arg(long = "max-iter", default_value_t = 1_000_000)]
    max_iter: usize,
    /// Feature normalisation
    #[arg(long, value_enum, default_value_t = Normalization::None)]
    normalize: Normalization,
}

impl SvmArgs {
    fn config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            c_reg: self.c,
            tolerance: self.tolerance,
            max_iterations: self.max_iter,
            normalize: self.normalize,
            seed,
        }
    }
}

#[derive(Debug, Args)]
struct EncodeArgs {
    /// A TSF file or a directory of .tsf files
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    encoder: EncoderArgs,
    /// Descriptor file (JSON) to write
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    encoder: EncoderArgs,
    #[command(flatten)]
    svm: SvmArgs,
    /// Video representation
    #[arg(long, value_enum, default_value_t = Features::Tcf)]
    features: Features,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Model file (JSON) to write
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    encoder: EncoderArgs,
    #[command(flatten)]
    svm: SvmArgs,
    /// Video representation
    #[arg(long, value_enum, default_value_t = Features::Tcf)]
    features: Features,
    /// Number of random half splits
    #[arg(long, default_value_t = 100)]
    reps: usize,
    /// Master seed for the splits
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Report file (JSON) to write
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Comma-separated group counts (lambda, or subset size for non-group schemes)
    #[arg(long = "lambda-list", value_delimiter = ',', default_value = "64")]
    lambda_list: Vec<usize>,
    /// Comma-separated window counts (L)
    #[arg(long = "l-list", value_delimiter = ',', default_value = "16")]
    l_list: Vec<usize>,
    /// Comma-separated lag counts (gamma)
    #[arg(long = "gamma-list", value_delimiter = ',', default_value = "6")]
    gamma_list: Vec<usize>,
    /// Comma-separated selection schemes
    #[arg(long = "scheme-list", value_enum, value_delimiter = ',', default_value = "group")]
    scheme_list: Vec<Selection>,
    /// Lag stride
    #[arg(long, default_value_t = 1)]
    stride: usize,
    /// Seed of the random selection scheme
    #[arg(long = "selection-seed", default_value_t = 0)]
    selection_seed: u64,
    #[command(flatten)]
    svm: SvmArgs,
    /// Number of random half splits per grid point
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Tab-separated table to write
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Corpus specification (JSON); the built-in demo corpus when omitted
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Demo corpus: number of classes (1-7)
    #[arg(long, default_value_t = 3)]
    classes: usize,
    /// Demo corpus: videos per class
    #[arg(long, default_value_t = 20)]
    videos: usize,
    /// Demo corpus seed
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct InspectArgs {
    #[arg(long)]
    input: PathBuf,
}

#[derive(Serialize)]
struct DescriptorFile<'a> {
    format: &'static str,
    version: u32,
    layout: &'a TcfLayout,
    items: Vec<DescriptorEntry>,
}

#[derive(Serialize)]
struct DescriptorEntry {
    id: String,
    frames: usize,
    truncated_lags: usize,
    values: Vec<f64>,
}

fn representation(features: Features, encoder: &EncoderArgs) -> Representation {
    match features {
        Features::Tcf => Representation::Tcf(encoder.config()),
        Features::Mean => Representation::Pool(PoolMode::Mean),
        Features::Max => Representation::Pool(PoolMode::Max),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn tsf_inputs(input: &Path) -> Result<Vec<PathBuf>> {
    if !input.is_dir() {
        return Ok(vec![input.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(input)
        .map_err(|e| Error::io(input, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "tsf"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::format(input, "no .tsf files found"));
    }
    Ok(files)
}

fn cmd_encode(args: EncodeArgs) -> Result<String> {
    let cfg = args.encoder.config();
    let mut layout = None;
    let mut items = Vec::new();
    for path in tsf_inputs(&args.input)? {
        let matrix = read_tsf(&path)?;
        let tcf = encode_tcf(&matrix, &cfg).map_err(|e| Error::format(&path, e.to_string()))?;
        if layout.as_ref().is_some_and(|l: &TcfLayout| *l != tcf.layout) {
            return Err(Error::format(&path, "feature count differs from the previous files"));
        }
        layout.get_or_insert_with(|| tcf.layout.clone());
        let id = path.file_name().map_or_else(|| path.display().to_string(), |f| f.to_string_lossy().into_owned());
        items.push(DescriptorEntry {
            id,
            frames: tcf.frames,
            truncated_lags: tcf.truncated_lags,
            values: tcf.into_combined(),
        });
    }
    let layout = layout.expect("at least one input");
    let count = items.len();
    let file = DescriptorFile { format: "tcf-descriptors", version: 1, layout: &layout, items };
    write_text(&args.out, &(serde_json::to_string(&file)? + "\n"))?;
    Ok(format!("encoded {count} video(s), descriptor length {}\n", layout.len()))
}

fn cmd_train(args: TrainArgs) -> Result<String> {
    let dataset = read_manifest(&args.manifest)?;
    let repr = representation(args.features, &args.encoder);
    let descriptors = featurize(&dataset, &repr)?;
    let mut model = train_ovr(&descriptors, &dataset.labels(), &args.svm.config(args.seed))?;
    if let Representation::Tcf(cfg) = &repr {
        model = model.with_layout(cfg.layout(dataset.feature_count()?));
    }
    model.save(&args.out)?;
    let correct =
        descriptors.iter().zip(dataset.labels()).filter(|(x, l)| model.predict(x).is_ok_and(|p| p == *l)).count();
    Ok(format!(
        "trained {} classes on {} videos (dimension {}), training accuracy {:.2}%\n",
        model.classes.len(),
        dataset.len(),
        model.dimension,
        100.0 * correct as f64 / dataset.len() as f64
    ))
}

fn cmd_eval(args: EvalArgs) -> Result<String> {
    let dataset = read_manifest(&args.manifest)?;
    let repr = representation(args.features, &args.encoder);
    let report = run_protocol_with(&dataset, &repr, &args.svm.config(args.seed), args.reps, args.seed)?;
    if let Some(path) = &args.report {
        write_text(path, &report.to_json()?)?;
    }
    Ok(report.render_table())
}

fn cmd_sweep(args: SweepArgs) -> Result<String> {
    let dataset = read_manifest(&args.manifest)?;
    let grid = SweepGrid {
        schemes: args.scheme_list.clone(),
        groups: args.lambda_list.clone(),
        windows: args.l_list.clone(),
        gammas: args.gamma_list.clone(),
    };
    let base = EncoderConfig { stride: args.stride, seed: args.selection_seed, ..EncoderConfig::default() };
    let rows = sweep(&dataset, &grid, &base, &args.svm.config(args.seed), args.reps, args.seed)?;
    let table = sweep_to_tsv(&rows);
    write_text(&args.out, &table)?;
    Ok(table)
}

fn cmd_synth(args: SynthArgs) -> Result<String> {
    let spec = match &args.spec {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?
        }
        None => {
            if !(1..=7).contains(&args.classes) {
                return Err(Error::InvalidInput("the demo corpus supports 1 to 7 classes".into()));
            }
            SynthSpec::demo(args.classes, args.videos, args.seed)
        }
    };
    let dataset = synth_generate(&spec)?;
    let manifest = write_corpus(&dataset, &args.out)?;
    Ok(format!("wrote {} videos and {}\n", dataset.len(), manifest.display()))
}

fn cmd_inspect(args: InspectArgs) -> Result<String> {
    let matrix = read_tsf(&args.input)?;
    Ok(format!("file   : {}\nn      : {}\nk      : {}\nfinite : yes\n", args.input.display(), matrix.n(), matrix.k()))
}

/// Runs the tool on `argv` (including the program name) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().filter_or("TCF_LOG", "warn")).try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let outcome = match cli.command {
        Command::Encode(a) => cmd_encode(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Inspect(a) => cmd_inspect(a),
    };
    match outcome {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["tcf", "frobnicate"]), 1);
        assert_eq!(run(["tcf", "inspect"]), 1);
        assert_eq!(run(["tcf", "eval", "--manifest", "m", "--bogus"]), 1);
        assert_eq!(run(["tcf", "--help"]), 0);
    }
}
