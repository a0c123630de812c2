//! Synthetic corpora whose classes differ only in cross-channel correlation
//! structure and periodicity.
//!
//! Every channel of a video is built from an AR(1) latent driver (shared between
//! the two channels of a coupling, with the coupling's sign), optional sinusoids
//! with a random phase, and Gaussian noise. Each channel is then centred over the
//! video and shifted by a corpus-wide offset, so per-frame means are identical
//! across classes and mean pooling carries no class information.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::encoder::TimeSeriesMatrix;
use crate::error::{Error, Result};
use crate::evaluation::{derive_seed, DatasetItem, ItemSource, LabeledDataset};

use super::{manifest, tsf};

const DEMO_NOISE: f64 = 2.0;

/// Channels `a` and `b` share one latent driver; `b` receives it multiplied by `sign`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub a: usize,
    pub b: usize,
    pub sign: i8,
}

/// Adds `amplitude * sin(2 pi t / period + phase)` to a channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Periodicity {
    pub channel: usize,
    pub period: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassBlueprint {
    pub label: String,
    pub channels: usize,
    pub min_frames: usize,
    pub max_frames: usize,
    #[serde(default)]
    pub couplings: Vec<Coupling>,
    #[serde(default)]
    pub periodicities: Vec<Periodicity>,
    /// Standard deviation of the additive Gaussian noise.
    pub noise: f64,
}

fn default_memory() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub classes: Vec<ClassBlueprint>,
    pub videos_per_class: usize,
    pub seed: u64,
    /// AR(1) coefficient of the latent drivers.
    #[serde(default = "default_memory")]
    pub latent_memory: f64,
}

impl SynthSpec {
    /// A corpus with `n = 64` channels in 8 blocks of 8 and `k` in `[40, 120]`.
    ///
    /// Class `c` couples channel `8 g + j` with `8 h + j` for every `j`, where
    /// `(g, h)` runs over round `c` of a round-robin pairing of the 8 blocks, and
    /// adds a sinusoid of period `5 + 3c` to every fourth channel. The coupling
    /// sign is shared by a block pair and the noise is strong, so a single pair
    /// of channels carries a weak signal that block-aligned grouping accumulates.
    pub fn demo(classes: usize, videos_per_class: usize, seed: u64) -> Self {
        assert!((1..=7).contains(&classes), "the demo corpus supports 1..=7 classes");
        let blocks = 8;
        let width = 8;
        let classes = (0..classes)
            .map(|c| {
                let mut couplings = Vec::new();
                for (p, (g, h)) in round_robin_pairs(blocks, c).into_iter().enumerate() {
                    let sign = if (p + c) % 2 == 0 { 1 } else { -1 };
                    for j in 0..width {
                        couplings.push(Coupling { a: g * width + j, b: h * width + j, sign });
                    }
                }
                let periodicities = (0..blocks * width)
                    .filter(|ch| ch % 4 == c % 4)
                    .map(|channel| Periodicity { channel, period: 5.0 + 3.0 * c as f64, amplitude: 0.7 })
                    .collect();
                ClassBlueprint {
                    label: format!("class{c}"),
                    channels: blocks * width,
                    min_frames: 40,
                    max_frames: 120,
                    couplings,
                    periodicities,
                    noise: DEMO_NOISE,
                }
            })
            .collect();
        SynthSpec { classes, videos_per_class, seed, latent_memory: default_memory() }
    }

    pub fn channels(&self) -> usize {
        self.classes.first().map_or(0, |c| c.channels)
    }

    fn validate(&self) -> Result<()> {
        let n = self.channels();
        if self.classes.is_empty() || n == 0 {
            return Err(Error::InvalidInput("synthetic spec needs at least one class with channels".into()));
        }
        if !(-1.0 < self.latent_memory && self.latent_memory < 1.0) {
            return Err(Error::InvalidInput("latent_memory must lie in (-1, 1)".into()));
        }
        for class in &self.classes {
            let bad = |m: String| Err(Error::InvalidInput(format!("class {:?}: {m}", class.label)));
            if class.channels != n {
                return bad(format!("has {} channels, expected {n}", class.channels));
            }
            if class.min_frames < 2 || class.min_frames > class.max_frames {
                return bad(format!("invalid frame range [{}, {}]", class.min_frames, class.max_frames));
            }
            if !(class.noise >= 0.0 && class.noise.is_finite()) {
                return bad("noise must be finite and non-negative".into());
            }
            let mut used = vec![false; n];
            for c in &class.couplings {
                if c.a >= n || c.b >= n || c.a == c.b || c.sign.abs() != 1 {
                    return bad(format!("invalid coupling {c:?}"));
                }
                for ch in [c.a, c.b] {
                    if std::mem::replace(&mut used[ch], true) {
                        return bad(format!("channel {ch} appears in more than one coupling"));
                    }
                }
            }
            for p in &class.periodicities {
                if p.channel >= n || !(p.period.is_finite() && p.period > 0.0) || !p.amplitude.is_finite() {
                    return bad(format!("invalid periodicity {p:?}"));
                }
            }
        }
        let mut labels: Vec<&str> = self.classes.iter().map(|c| c.label.as_str()).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput("class labels must be unique".into()));
        }
        Ok(())
    }
}

/// Round `round` of the circle-method schedule pairing `teams` (even) teams.
fn round_robin_pairs(teams: usize, round: usize) -> Vec<(usize, usize)> {
    let rotating = teams - 1;
    let mut pairs = vec![(teams - 1, round % rotating)];
    for i in 1..teams / 2 {
        let a = (round + i) % rotating;
        let b = (round + rotating - i) % rotating;
        pairs.push((a.min(b), a.max(b)));
    }
    pairs.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect()
}

fn latent(rng: &mut ChaCha8Rng, k: usize, memory: f64) -> Vec<f64> {
    let innovation_scale = (1.0 - memory * memory).sqrt();
    let mut state: f64 = StandardNormal.sample(rng);
    (0..k)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            state = memory * state + innovation_scale * z;
            state
        })
        .collect()
}

fn generate_video(spec: &SynthSpec, class: &ClassBlueprint, offsets: &[f64], seed: u64) -> Result<TimeSeriesMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = class.channels;
    let k = rng.random_range(class.min_frames..=class.max_frames);
    let mut rows = vec![vec![0.0; k]; n];

    let mut coupled = vec![false; n];
    for c in &class.couplings {
        let driver = latent(&mut rng, k, spec.latent_memory);
        let sign = f64::from(c.sign);
        for (t, v) in driver.iter().enumerate() {
            rows[c.a][t] += v;
            rows[c.b][t] += sign * v;
        }
        coupled[c.a] = true;
        coupled[c.b] = true;
    }
    for (ch, row) in rows.iter_mut().enumerate() {
        if !coupled[ch] {
            for (x, v) in row.iter_mut().zip(latent(&mut rng, k, spec.latent_memory)) {
                *x += v;
            }
        }
    }
    for p in &class.periodicities {
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        for (t, x) in rows[p.channel].iter_mut().enumerate() {
            *x += p.amplitude * (std::f64::consts::TAU * t as f64 / p.period + phase).sin();
        }
    }
    if class.noise > 0.0 {
        for row in &mut rows {
            for x in row.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *x += class.noise * z;
            }
        }
    }
    for (row, offset) in rows.iter_mut().zip(offsets) {
        let mean = row.iter().sum::<f64>() / k as f64;
        row.iter_mut().for_each(|x| *x = *x - mean + offset);
    }
    TimeSeriesMatrix::from_rows(&rows)
}

/// Generates `videos_per_class` videos per class; ids are `<label>_<index>`.
pub fn synth_generate(spec: &SynthSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    let mut offset_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let offsets: Vec<f64> = (0..spec.channels()).map(|_| offset_rng.random_range(0.0..1.0)).collect();

    let mut items = Vec::with_capacity(spec.classes.len() * spec.videos_per_class);
    for (ci, class) in spec.classes.iter().enumerate() {
        for v in 0..spec.videos_per_class {
            let seed = derive_seed(derive_seed(spec.seed, ci as u64 + 1), v as u64);
            let matrix = generate_video(spec, class, &offsets, seed)?;
            items.push(DatasetItem {
                id: format!("{}_{:04}", class.label, v),
                label: class.label.clone(),
                source: ItemSource::Matrix(matrix),
            });
        }
    }
    LabeledDataset::new(items)
}

/// Writes every item as `<id>.tsf` plus `manifest.tsv` into `dir`.
pub fn write_corpus(dataset: &LabeledDataset, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut records = Vec::with_capacity(dataset.len());
    for item in dataset.items() {
        let rel = PathBuf::from(format!("{}.tsf", item.id));
        tsf::write_tsf(&*item.load()?, &dir.join(&rel))?;
        records.push((item.label.clone(), rel));
    }
    let manifest_path = dir.join("manifest.tsv");
    manifest::write_manifest(&manifest_path, &records)?;
    Ok(manifest_path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlation::{pearson, DegeneratePolicy};

    #[test]
    fn round_robin_is_perfect_matching() {
        for round in 0..7 {
            let pairs = round_robin_pairs(8, round);
            let mut seen: Vec<usize> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
            seen.sort_unstable();
            assert_eq!(seen, (0..8).collect::<Vec<_>>());
        }
        let all: std::collections::HashSet<_> = (0..7).flat_map(|r| round_robin_pairs(8, r)).collect();
        assert_eq!(all.len(), 28);
    }

    #[test]
    fn demo_counts() {
        let ds = synth_generate(&SynthSpec::demo(3, 20, 1)).unwrap();
        assert_eq!(ds.len(), 60);
        assert_eq!(ds.class_set().len(), 3);
    }

    #[test]
    fn noiseless_coupling_is_exact() {
        let spec = SynthSpec {
            classes: vec![ClassBlueprint {
                label: "x".into(),
                channels: 4,
                min_frames: 30,
                max_frames: 30,
                couplings: vec![Coupling { a: 0, b: 1, sign: 1 }, Coupling { a: 2, b: 3, sign: -1 }],
                periodicities: vec![],
                noise: 0.0,
            }],
            videos_per_class: 3,
            seed: 5,
            latent_memory: 0.5,
        };
        for item in synth_generate(&spec).unwrap().items() {
            let m = item.load().unwrap();
            let z = DegeneratePolicy::ZeroFill;
            assert!((pearson(m.row(0), m.row(1), z).unwrap() - 1.0).abs() < 1e-12);
            assert!((pearson(m.row(2), m.row(3), z).unwrap() + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn validation() {
        let mut spec = SynthSpec::demo(2, 2, 0);
        spec.classes[1].channels = 10;
        assert!(synth_generate(&spec).is_err());
        let mut spec = SynthSpec::demo(2, 2, 0);
        spec.classes[0].couplings.push(Coupling { a: 0, b: 63, sign: 1 });
        assert!(synth_generate(&spec).is_err());
        let mut spec = SynthSpec::demo(2, 2, 0);
        spec.classes[0].min_frames = 1;
        assert!(synth_generate(&spec).is_err());
    }
}
