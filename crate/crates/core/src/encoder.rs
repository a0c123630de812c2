//! Time-series matrices and the CCF / ACF / TCF encoders.

use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::correlation::{self, check_finite, clamp_unit, is_constant, norm_product, Acf, DegeneratePolicy};
use crate::error::{Error, Result};

/// Ordering tag recorded in every descriptor layout.
pub const ORDERING: &str = "ccf:window-major,pairs-lexicographic(a<b);acf:series-major,lag-ascending";

/// `n` feature series (rows) observed over `k` frames (columns), stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesMatrix {
    n: usize,
    k: usize,
    data: Vec<f64>,
}

impl TimeSeriesMatrix {
    /// Builds a matrix from row-major data (`data[i * k + t]` is series `i` at frame `t`).
    pub fn from_row_major(n: usize, k: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("time-series matrix needs at least one series".into()));
        }
        if k < 2 {
            return Err(Error::TooShort { needed: 2, got: k });
        }
        if data.len() != n * k {
            return Err(Error::LengthMismatch { left: data.len(), right: n * k });
        }
        check_finite(&data)?;
        Ok(Self { n, k, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != k) {
            return Err(Error::LengthMismatch { left: k, right: bad.len() });
        }
        Self::from_row_major(rows.len(), k, rows.concat())
    }

    /// Feature count.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Frame count.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.k..(i + 1) * self.k]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.k)
    }

    pub fn get(&self, series: usize, frame: usize) -> f64 {
        self.data[series * self.k + frame]
    }

    /// The descriptor of one frame (column `t`).
    pub fn frame(&self, t: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, t)).collect()
    }

    pub fn as_row_major(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }
}

/// Stacks per-frame descriptors into a series-major matrix (`result[i][t] = frames[t][i]`).
pub fn build_matrix<F: AsRef<[f64]>>(frames: &[F]) -> Result<TimeSeriesMatrix> {
    let k = frames.len();
    if k < 2 {
        return Err(Error::TooShort { needed: 2, got: k });
    }
    let n = frames[0].as_ref().len();
    let mut data = vec![0.0; n * k];
    for (t, frame) in frames.iter().enumerate() {
        let frame = frame.as_ref();
        if frame.len() != n {
            return Err(Error::LengthMismatch { left: n, right: frame.len() });
        }
        for (i, &v) in frame.iter().enumerate() {
            data[i * k + t] = v;
        }
    }
    TimeSeriesMatrix::from_row_major(n, k, data)
}

/// `lambda` grouped series, each the time-major interleaving of `delta` source rows.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedMatrix {
    lambda: usize,
    delta: usize,
    row_len: usize,
    data: Vec<f64>,
}

impl GroupedMatrix {
    pub fn lambda(&self) -> usize {
        self.lambda
    }

    pub fn delta(&self) -> usize {
        self.delta
    }

    /// `delta * k`.
    pub fn row_len(&self) -> usize {
        self.row_len
    }

    pub fn row(&self, g: usize) -> &[f64] {
        &self.data[g * self.row_len..(g + 1) * self.row_len]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.row_len)
    }
}

/// Splits the `n` rows into `lambda` consecutive blocks of `delta = n / lambda` rows and
/// vectorises each block column by column.
pub fn group(ts: &TimeSeriesMatrix, lambda: usize) -> Result<GroupedMatrix> {
    if lambda == 0 || !ts.n.is_multiple_of(lambda) {
        return Err(Error::GroupsDoNotDivide { n: ts.n, lambda });
    }
    let delta = ts.n / lambda;
    let row_len = delta * ts.k;
    let mut data = Vec::with_capacity(ts.n * ts.k);
    for g in 0..lambda {
        for t in 0..ts.k {
            data.extend((g * delta..(g + 1) * delta).map(|i| ts.get(i, t)));
        }
    }
    Ok(GroupedMatrix { lambda, delta, row_len, data })
}

/// How the rows that enter the cross-correlation are chosen.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// All rows, merged into `lambda` grouped series.
    #[default]
    Group,
    /// The first `m` rows.
    First,
    /// `m` distinct rows drawn from a seeded generator, kept in index order.
    Random,
    /// `m` rows at a uniform stride from the first to the last row.
    Uniform,
}

impl Selection {
    pub const ALL: [Selection; 4] = [Selection::Group, Selection::First, Selection::Random, Selection::Uniform];

    pub fn name(self) -> &'static str {
        match self {
            Selection::Group => "group",
            Selection::First => "first",
            Selection::Random => "random",
            Selection::Uniform => "uniform",
        }
    }
}

impl std::fmt::Display for Selection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Zero-based row indices chosen by a subset scheme, ascending.
pub fn subset_indices(n: usize, scheme: Selection, m: usize, seed: u64) -> Result<Vec<usize>> {
    if m < 1 || m > n {
        return Err(Error::SubsetSize { m, n });
    }
    let indices = match scheme {
        Selection::Group => return Err(Error::InvalidInput("group is not a subset selection scheme".into())),
        Selection::First => (0..m).collect(),
        Selection::Uniform => {
            if m == 1 {
                vec![0]
            } else {
                // round((j (n-1)) / (m-1)) with halves rounded up, in integers
                let mut picked: Vec<usize> = (0..m).map(|j| (2 * j * (n - 1) + (m - 1)) / (2 * (m - 1))).collect();
                picked.dedup();
                let mut next = 0;
                while picked.len() < m {
                    if !picked.contains(&next) {
                        picked.push(next);
                    }
                    next += 1;
                }
                picked.sort_unstable();
                picked
            }
        }
        Selection::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut picked = rand::seq::index::sample(&mut rng, n, m).into_vec();
            picked.sort_unstable();
            picked
        }
    };
    Ok(indices)
}

/// Keeps `m` of the `n` rows according to `scheme` (`First`, `Random` or `Uniform`).
pub fn select_subset(ts: &TimeSeriesMatrix, scheme: Selection, m: usize, seed: u64) -> Result<TimeSeriesMatrix> {
    let indices = subset_indices(ts.n, scheme, m, seed)?;
    let mut data = Vec::with_capacity(m * ts.k);
    for i in indices {
        data.extend_from_slice(ts.row(i));
    }
    TimeSeriesMatrix::from_row_major(m, ts.k, data)
}

/// Splits `0..series_len` into `windows` contiguous, non-overlapping ranges whose
/// lengths differ by at most one (earlier windows take the remainder).
pub fn partition(series_len: usize, windows: usize) -> Result<Vec<Range<usize>>> {
    if windows == 0 {
        return Err(Error::InvalidInput("number of windows must be at least 1".into()));
    }
    let needed = 2 * windows;
    if series_len < needed {
        return Err(Error::WindowsTooMany { len: series_len, windows, needed });
    }
    let base = series_len / windows;
    let extra = series_len % windows;
    let mut start = 0;
    Ok((0..windows)
        .map(|w| {
            let len = base + usize::from(w < extra);
            let range = start..start + len;
            start += len;
            range
        })
        .collect())
}

/// Encoder hyper-parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    /// Number of grouped series when `selection` is `Group`.
    pub lambda: usize,
    /// Number of non-overlapping temporal windows for the cross-correlation.
    pub windows: usize,
    /// Number of autocorrelation lags.
    pub gamma: usize,
    /// Lag spacing: lags are `stride, 2 stride, ..., gamma stride`.
    pub stride: usize,
    pub selection: Selection,
    /// Rows kept when `selection` is not `Group`.
    pub selection_m: usize,
    pub policy: DegeneratePolicy,
    /// Only used by `Selection::Random`.
    pub seed: u64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            lambda: 64,
            windows: 16,
            gamma: 6,
            stride: 1,
            selection: Selection::Group,
            selection_m: 64,
            policy: DegeneratePolicy::ZeroFill,
            seed: 0,
        }
    }
}

impl EncoderConfig {
    /// Number of series entering the pairwise correlations.
    pub fn series_count(&self) -> usize {
        match self.selection {
            Selection::Group => self.lambda,
            _ => self.selection_m,
        }
    }

    pub fn lags(&self) -> Vec<usize> {
        (1..=self.gamma).map(|l| l * self.stride).collect()
    }

    pub fn ccf_len(&self) -> usize {
        let s = self.series_count();
        self.windows * s * s.saturating_sub(1) / 2
    }

    pub fn acf_len(&self, n: usize) -> usize {
        n * self.gamma
    }

    /// `n gamma + L s (s - 1) / 2`, with `s` the number of correlated series.
    pub fn descriptor_len(&self, n: usize) -> usize {
        self.acf_len(n) + self.ccf_len()
    }

    /// Largest lag requested; shorter sequences get zero-filled coefficients.
    pub fn max_lag(&self) -> usize {
        self.gamma * self.stride
    }

    fn validate(&self) -> Result<()> {
        if self.windows == 0 {
            return Err(Error::InvalidInput("windows must be at least 1".into()));
        }
        if self.stride == 0 {
            return Err(Error::InvalidInput("stride must be at least 1".into()));
        }
        if self.selection == Selection::Group && self.lambda == 0 {
            return Err(Error::InvalidInput("lambda must be at least 1".into()));
        }
        Ok(())
    }

    pub fn layout(&self, n: usize) -> TcfLayout {
        TcfLayout {
            groups: self.series_count(),
            windows: self.windows,
            gamma: self.gamma,
            stride: self.stride,
            n,
            selection: self.selection,
            ccf_len: self.ccf_len(),
            acf_len: self.acf_len(n),
            ordering: ORDERING.to_string(),
        }
    }
}

/// Shape and ordering of a TCF descriptor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TcfLayout {
    /// Series entering the cross-correlation (`lambda`, or `m` for subset schemes).
    pub groups: usize,
    pub windows: usize,
    pub gamma: usize,
    pub stride: usize,
    /// Feature count of the source matrix.
    pub n: usize,
    pub selection: Selection,
    pub ccf_len: usize,
    pub acf_len: usize,
    pub ordering: String,
}

impl TcfLayout {
    pub fn len(&self) -> usize {
        self.ccf_len + self.acf_len
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A video descriptor `[CCF, ACF]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TcfVector {
    values: Vec<f64>,
    /// Frame count of the encoded video.
    pub frames: usize,
    /// Autocorrelation coefficients zero-filled because the video was shorter than the lag.
    pub truncated_lags: usize,
    pub layout: TcfLayout,
}

impl TcfVector {
    pub fn ccf(&self) -> &[f64] {
        &self.values[..self.layout.ccf_len]
    }

    pub fn acf(&self) -> &[f64] {
        &self.values[self.layout.ccf_len..]
    }

    pub fn combined(&self) -> &[f64] {
        &self.values
    }

    pub fn into_combined(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Pearson correlations of every row pair `(a, b)`, `a < b`, over one window.
fn window_pairs<'a>(
    rows: impl Iterator<Item = &'a [f64]>,
    window: Range<usize>,
    policy: DegeneratePolicy,
    out: &mut Vec<f64>,
) {
    // Center each row once and keep its sum of squares; `None` marks a constant window.
    let centered: Vec<Option<(Vec<f64>, f64)>> = rows
        .map(|row| {
            let w = &row[window.clone()];
            if is_constant(w) {
                return None;
            }
            let mean = w.iter().sum::<f64>() / w.len() as f64;
            let c: Vec<f64> = w.iter().map(|v| v - mean).collect();
            let ss = c.iter().map(|v| v * v).sum::<f64>();
            (ss > 0.0).then_some((c, ss))
        })
        .collect();

    for (a, row_a) in centered.iter().enumerate() {
        for row_b in &centered[a + 1..] {
            let r = match (row_a, row_b) {
                (Some((x, ss_x)), Some((y, ss_y))) => {
                    let co: f64 = x.iter().zip(y).map(|(p, q)| p * q).sum();
                    clamp_unit(co / norm_product(*ss_x, *ss_y))
                }
                _ => policy.undefined_value(),
            };
            out.push(r);
        }
    }
}

/// Cross Correlation Feature: pairwise Pearson coefficients of the grouped (or
/// selected) series inside each of `cfg.windows` temporal windows, window-major.
pub fn encode_ccf(ts: &TimeSeriesMatrix, cfg: &EncoderConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let mut out = Vec::with_capacity(cfg.ccf_len());
    match cfg.selection {
        Selection::Group => {
            let grouped = group(ts, cfg.lambda)?;
            for window in partition(grouped.row_len(), cfg.windows)? {
                window_pairs(grouped.rows(), window, cfg.policy, &mut out);
            }
        }
        scheme => {
            let subset = select_subset(ts, scheme, cfg.selection_m, cfg.seed)?;
            for window in partition(subset.k(), cfg.windows)? {
                window_pairs(subset.rows(), window, cfg.policy, &mut out);
            }
        }
    }
    debug_assert_eq!(out.len(), cfg.ccf_len());
    Ok(out)
}

/// Auto Correlation Feature: for each of the `n` ungrouped rows, the sample
/// autocorrelation at lags `stride, ..., gamma stride`, series-major.
pub fn encode_acf(ts: &TimeSeriesMatrix, cfg: &EncoderConfig) -> Result<Acf> {
    cfg.validate()?;
    let lags = cfg.lags();
    let mut coefficients = Vec::with_capacity(ts.n * lags.len());
    let mut truncated_lags = 0;
    for row in ts.rows() {
        let acf = correlation::sample_acf(row, &lags, cfg.policy)?;
        truncated_lags += acf.truncated_lags;
        coefficients.extend(acf.coefficients);
    }
    if truncated_lags > 0 {
        log::warn!(
            "sequence of {} frames is shorter than the largest lag {}; {} coefficients zero-filled",
            ts.k,
            cfg.max_lag(),
            truncated_lags
        );
    }
    Ok(Acf { coefficients, truncated_lags })
}

/// Full descriptor `[CCF, ACF]`.
pub fn encode_tcf(ts: &TimeSeriesMatrix, cfg: &EncoderConfig) -> Result<TcfVector> {
    let mut values = encode_ccf(ts, cfg)?;
    let acf = encode_acf(ts, cfg)?;
    values.extend_from_slice(&acf.coefficients);
    Ok(TcfVector { values, frames: ts.k, truncated_lags: acf.truncated_lags, layout: cfg.layout(ts.n) })
}
