//! L2-regularised linear SVM with hinge loss, trained one-vs-rest.
//!
//! Each binary problem `min 1/2 |w|^2 + C sum_i max(0, 1 - y_i (w.x_i + b))` (bias not
//! regularised) is solved in the dual by SMO with second-order working-set selection.
//! The linear kernel matrix is computed once and shared by all classes. Training
//! stops when the maximal KKT violation is at most `tolerance` *and* the duality gap
//! is at most `tolerance * (1 + |primal|)`, so the returned objective is within that
//! bound of the optimum.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoder::TcfLayout;
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "tcf-linear-ovr";
pub const MODEL_VERSION: u32 = 1;

const TAU: f64 = 1e-12;
const SMO_BUDGET_BASE: usize = 20_000;
const SMO_BUDGET_PER_POINT: usize = 200;
const IPM_MAX_ITERATIONS: usize = 200;

/// Feature scaling applied before training and prediction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    #[default]
    None,
    /// Each vector scaled to unit Euclidean norm.
    L2,
    /// Per-dimension standardisation with statistics fitted on the training set.
    #[value(name = "zscore")]
    ZScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// SVM regularisation constant `C`.
    pub c_reg: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub normalize: Normalization,
    /// Recorded for reproducibility; the SMO working-set rule is deterministic and
    /// does not draw from it.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { c_reg: 1000.0, tolerance: 1e-4, max_iterations: 1_000_000, normalize: Normalization::None, seed: 0 }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.c_reg > 0.0 && self.c_reg.is_finite()) {
            return Err(Error::InvalidInput(format!("C must be positive, got {}", self.c_reg)));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::InvalidInput(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidInput("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

/// Fitted transform parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FittedNormalization {
    None,
    L2,
    ZScore { mean: Vec<f64>, scale: Vec<f64> },
}

impl FittedNormalization {
    fn fit<X: AsRef<[f64]>>(mode: Normalization, xs: &[X], dim: usize) -> Self {
        match mode {
            Normalization::None => FittedNormalization::None,
            Normalization::L2 => FittedNormalization::L2,
            Normalization::ZScore => {
                let count = xs.len() as f64;
                let mut mean = vec![0.0; dim];
                for x in xs {
                    for (m, v) in mean.iter_mut().zip(x.as_ref()) {
                        *m += v;
                    }
                }
                mean.iter_mut().for_each(|m| *m /= count);
                let mut scale = vec![0.0; dim];
                for x in xs {
                    for ((s, m), v) in scale.iter_mut().zip(&mean).zip(x.as_ref()) {
                        *s += (v - m) * (v - m);
                    }
                }
                for s in &mut scale {
                    let sd = (*s / count).sqrt();
                    *s = if sd > 0.0 { sd } else { 1.0 };
                }
                FittedNormalization::ZScore { mean, scale }
            }
        }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            FittedNormalization::None => x.to_vec(),
            FittedNormalization::L2 => {
                let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 0.0 {
                    x.iter().map(|v| v / norm).collect()
                } else {
                    x.to_vec()
                }
            }
            FittedNormalization::ZScore { mean, scale } => {
                x.iter().zip(mean).zip(scale).map(|((v, m), s)| (v - m) / s).collect()
            }
        }
    }
}

/// One binary problem's solution and convergence record.
#[derive(Debug, Clone)]
pub struct BinarySvm {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub alpha: Vec<f64>,
    /// Primal objective at `(weights, bias)`.
    pub primal: f64,
    /// Dual objective at `alpha`.
    pub dual: f64,
    /// Largest KKT violation at `alpha`. Not meaningful after the interior point
    /// fallback, whose multipliers stay strictly inside the box; use `gap` there.
    pub violation: f64,
    pub iterations: usize,
}

impl BinarySvm {
    pub fn gap(&self) -> f64 {
        self.primal - self.dual
    }
}

/// `1/2 |w|^2 + C sum_i max(0, 1 - y_i (w.x_i + b))`.
pub fn primal_objective<X: AsRef<[f64]>>(w: &[f64], b: f64, xs: &[X], ys: &[f64], c: f64) -> f64 {
    let reg = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
    let loss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let score: f64 = w.iter().zip(x.as_ref()).map(|(p, q)| p * q).sum::<f64>() + b;
            (1.0 - y * score).max(0.0)
        })
        .sum();
    reg + c * loss
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn gram<X: AsRef<[f64]> + Sync>(xs: &[X]) -> Vec<Vec<f64>> {
    (0..xs.len()).into_par_iter().map(|i| xs.iter().map(|xj| dot(xs[i].as_ref(), xj.as_ref())).collect()).collect()
}

/// Bias minimising the hinge loss for fixed scores `s_i = w.x_i`.
///
/// The loss is convex piecewise linear in `b` with slope `-P + (breakpoints passed)`,
/// where `P` counts positives; it is flat between the `P`-th and `P+1`-th breakpoint
/// and the midpoint of that interval is returned.
fn optimal_bias(scores: &[f64], ys: &[f64]) -> f64 {
    let mut breakpoints: Vec<f64> =
        scores.iter().zip(ys).map(|(s, y)| if *y > 0.0 { 1.0 - s } else { -1.0 - s }).collect();
    breakpoints.sort_by(f64::total_cmp);
    let positives = ys.iter().filter(|y| **y > 0.0).count();
    match positives {
        0 => breakpoints[0] - 1.0,
        p if p == ys.len() => breakpoints[p - 1] + 1.0,
        p => 0.5 * (breakpoints[p - 1] + breakpoints[p]),
    }
}

struct DualState {
    primal: f64,
    dual: f64,
    bias: f64,
}

fn evaluate_dual(alpha: &[f64], grad: &[f64], ys: &[f64], c: f64) -> DualState {
    // (Q alpha)_i = grad_i + 1 and w.x_i = y_i (grad_i + 1)
    let wnorm2: f64 = alpha.iter().zip(grad).map(|(a, g)| a * (g + 1.0)).sum();
    let scores: Vec<f64> = grad.iter().zip(ys).map(|(g, y)| y * (g + 1.0)).collect();
    let bias = optimal_bias(&scores, ys);
    let loss: f64 = scores.iter().zip(ys).map(|(s, y)| (1.0 - y * (s + bias)).max(0.0)).sum();
    DualState { primal: 0.5 * wnorm2 + c * loss, dual: alpha.iter().sum::<f64>() - 0.5 * wnorm2, bias }
}

struct DualSolution {
    alpha: Vec<f64>,
    violation: f64,
    state: DualState,
    iterations: usize,
}

/// Sequential minimal optimisation with second-order working set selection.
/// On failure returns the last violation and gap.
fn smo(
    kernel: &[Vec<f64>],
    ys: &[f64],
    c: f64,
    tolerance: f64,
    max_iterations: usize,
) -> std::result::Result<DualSolution, (f64, f64)> {
    let l = ys.len();
    let mut alpha = vec![0.0; l];
    let mut grad = vec![-1.0; l];
    let in_up = |a: f64, y: f64| (y > 0.0 && a < c) || (y < 0.0 && a > 0.0);
    let in_low = |a: f64, y: f64| (y < 0.0 && a < c) || (y > 0.0 && a > 0.0);
    let mut violation = f64::INFINITY;
    let mut gap = f64::INFINITY;

    for iteration in 0..max_iterations {
        let mut i = usize::MAX;
        let mut gmax = f64::NEG_INFINITY;
        let mut gmin = f64::INFINITY;
        for t in 0..l {
            let v = -ys[t] * grad[t];
            if in_up(alpha[t], ys[t]) && v > gmax {
                gmax = v;
                i = t;
            }
            if in_low(alpha[t], ys[t]) && v < gmin {
                gmin = v;
            }
        }
        violation = gmax - gmin;
        if i == usize::MAX || violation <= tolerance {
            let state = evaluate_dual(&alpha, &grad, ys, c);
            gap = state.primal - state.dual;
            if i == usize::MAX || violation <= 0.0 || gap <= tolerance * (1.0 + state.primal.abs()) {
                return Ok(DualSolution { alpha, violation: violation.max(0.0), state, iterations: iteration });
            }
        }

        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..l {
            let v = -ys[t] * grad[t];
            if in_low(alpha[t], ys[t]) && v < gmax {
                let b = gmax - v;
                let mut a = kernel[i][i] + kernel[t][t] - 2.0 * kernel[i][t];
                if a <= 0.0 {
                    a = TAU;
                }
                let score = -(b * b) / a;
                if score < best {
                    best = score;
                    j = t;
                }
            }
        }
        if j == usize::MAX {
            let state = evaluate_dual(&alpha, &grad, ys, c);
            return Ok(DualSolution { alpha, violation: violation.max(0.0), state, iterations: iteration });
        }

        let (yi, yj) = (ys[i], ys[j]);
        let q_ij = yi * yj * kernel[i][j];
        let (q_ii, q_jj) = (kernel[i][i], kernel[j][j]);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if yi != yj {
            let quad = (q_ii + q_jj + 2.0 * q_ij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (q_ii + q_jj - 2.0 * q_ij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..l {
            grad[t] += ys[t] * (yi * kernel[i][t] * di + yj * kernel[j][t] * dj);
        }
    }
    Err((violation, gap))
}

/// Maximal violating pair gap `max_up - min_low` of the KKT conditions.
fn kkt_violation(alpha: &[f64], grad: &[f64], ys: &[f64], c: f64) -> f64 {
    let mut gmax = f64::NEG_INFINITY;
    let mut gmin = f64::INFINITY;
    for ((a, g), y) in alpha.iter().zip(grad).zip(ys) {
        let v = -y * g;
        if (*y > 0.0 && *a < c) || (*y < 0.0 && *a > 0.0) {
            gmax = gmax.max(v);
        }
        if (*y < 0.0 && *a < c) || (*y > 0.0 && *a > 0.0) {
            gmin = gmin.min(v);
        }
    }
    (gmax - gmin).max(0.0)
}

/// Primal-dual interior point method on the dual with `alpha = C a`, `0 <= a <= 1`.
///
/// Used when SMO crawls, which happens on low-rank kernels with many free
/// multipliers. Each iteration factors a dense `l x l` matrix.
fn interior_point(
    kernel: &[Vec<f64>],
    ys: &[f64],
    c: f64,
    tolerance: f64,
    max_iterations: usize,
) -> std::result::Result<DualSolution, (f64, f64)> {
    let l = ys.len();
    let h = DMatrix::from_fn(l, l, |i, j| c * ys[i] * ys[j] * kernel[i][j]);
    let y = DVector::from_column_slice(ys);
    let mut a = DVector::from_element(l, 0.5);
    let mut z = DVector::from_element(l, 1.0);
    let mut u = DVector::from_element(l, 1.0);
    let mut nu = 0.0;
    let (mut violation, mut gap) = (f64::INFINITY, f64::INFINITY);

    for iteration in 0..max_iterations {
        let ha = &h * &a;
        let alpha: Vec<f64> = a.iter().map(|v| (c * v).clamp(0.0, c)).collect();
        let grad: Vec<f64> = (0..l).map(|i| ha[i] - 1.0).collect();
        let state = evaluate_dual(&alpha, &grad, ys, c);
        gap = state.primal - state.dual;
        violation = kkt_violation(&alpha, &grad, ys, c);
        let feasibility = y.dot(&a).abs();
        if gap <= tolerance * (1.0 + state.primal.abs()) && feasibility <= 1e-9 {
            return Ok(DualSolution { alpha, violation, state, iterations: iteration });
        }

        let s = a.map(|v| 1.0 - v);
        let mu = (a.dot(&z) + s.dot(&u)) / (2 * l) as f64;
        let target = 0.1 * mu;
        let r_d = &ha - DVector::from_element(l, 1.0) + &y * nu - &z + &u;
        let r_p = y.dot(&a);
        let r_z = a.component_mul(&z).add_scalar(-target);
        let r_u = s.component_mul(&u).add_scalar(-target);

        let mut m = h.clone();
        for i in 0..l {
            m[(i, i)] += z[i] / a[i] + u[i] / s[i];
        }
        let rhs = -&r_d - r_z.component_div(&a) + r_u.component_div(&s);
        let Some(chol) = m.cholesky() else { break };
        let m_rhs = chol.solve(&rhs);
        let m_y = chol.solve(&y);
        let d_nu = (y.dot(&m_rhs) + r_p) / y.dot(&m_y);
        let d_a = m_rhs - &m_y * d_nu;
        let d_z = (-&r_z - z.component_mul(&d_a)).component_div(&a);
        let d_u = (-&r_u + u.component_mul(&d_a)).component_div(&s);

        let mut step: f64 = 1.0;
        for i in 0..l {
            for (value, delta) in [(a[i], d_a[i]), (s[i], -d_a[i]), (z[i], d_z[i]), (u[i], d_u[i])] {
                if delta < 0.0 {
                    step = step.min(-0.99 * value / delta);
                }
            }
        }
        a += &d_a * step;
        z += &d_z * step;
        u += &d_u * step;
        nu += d_nu * step;
    }
    Err((violation, gap))
}

fn solve_binary<X: AsRef<[f64]>>(
    xs: &[X],
    kernel: &[Vec<f64>],
    ys: &[f64],
    cfg: &TrainConfig,
    class: &str,
) -> Result<BinarySvm> {
    let budget = cfg.max_iterations.min(SMO_BUDGET_BASE.max(SMO_BUDGET_PER_POINT * ys.len()));
    let solution = match smo(kernel, ys, cfg.c_reg, cfg.tolerance, budget) {
        Ok(solution) => solution,
        Err(_) => {
            log::debug!("class {class}: SMO stalled after {budget} iterations, switching to interior point");
            let cap = IPM_MAX_ITERATIONS.min(cfg.max_iterations);
            let mut solution =
                interior_point(kernel, ys, cfg.c_reg, cfg.tolerance, cap).map_err(|(violation, gap)| {
                    Error::NotConverged { class: class.to_string(), iterations: budget + cap, violation, gap }
                })?;
            solution.iterations += budget;
            solution
        }
    };
    let DualSolution { alpha, violation, state, iterations } = solution;
    let dim = xs.first().map_or(0, |x| x.as_ref().len());
    let mut weights = vec![0.0; dim];
    for ((x, a), y) in xs.iter().zip(&alpha).zip(ys) {
        if *a != 0.0 {
            for (w, v) in weights.iter_mut().zip(x.as_ref()) {
                *w += a * y * v;
            }
        }
    }
    Ok(BinarySvm { weights, bias: state.bias, alpha, primal: state.primal, dual: state.dual, violation, iterations })
}

/// Trains a single binary SVM; `ys` must be `+1` / `-1` with both signs present.
pub fn train_binary<X: AsRef<[f64]> + Sync>(xs: &[X], ys: &[f64], cfg: &TrainConfig) -> Result<BinarySvm> {
    cfg.validate()?;
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch { left: xs.len(), right: ys.len() });
    }
    if ys.iter().any(|y| *y != 1.0 && *y != -1.0) {
        return Err(Error::InvalidInput("binary labels must be +1 or -1".into()));
    }
    let distinct = usize::from(ys.contains(&1.0)) + usize::from(ys.contains(&-1.0));
    if distinct < 2 {
        return Err(Error::SingleClass(distinct));
    }
    check_dimensions(xs)?;
    solve_binary(xs, &gram(xs), ys, cfg, "+1")
}

fn check_dimensions<X: AsRef<[f64]>>(xs: &[X]) -> Result<usize> {
    let dim = xs.first().map_or(0, |x| x.as_ref().len());
    for x in xs {
        let x = x.as_ref();
        if x.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: x.len() });
        }
        crate::correlation::check_finite(x)?;
    }
    Ok(dim)
}

/// One-vs-rest linear SVM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearOvrModel {
    pub format: String,
    pub version: u32,
    /// Sorted, duplicate-free.
    pub classes: Vec<String>,
    pub dimension: usize,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub normalization: FittedNormalization,
    /// Layout of the descriptors the model was trained on, when known.
    pub layout: Option<TcfLayout>,
}

/// Fits one binary SVM per class (class vs rest).
pub fn train_ovr<X, S>(descriptors: &[X], labels: &[S], cfg: &TrainConfig) -> Result<LinearOvrModel>
where
    X: AsRef<[f64]> + Sync,
    S: AsRef<str> + Sync,
{
    cfg.validate()?;
    if descriptors.len() != labels.len() {
        return Err(Error::LengthMismatch { left: descriptors.len(), right: labels.len() });
    }
    let mut classes: Vec<String> = labels.iter().map(|l| l.as_ref().to_string()).collect();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::SingleClass(classes.len()));
    }
    let dimension = check_dimensions(descriptors)?;

    let normalization = FittedNormalization::fit(cfg.normalize, descriptors, dimension);
    let xs: Vec<Vec<f64>> = descriptors.iter().map(|x| normalization.apply(x.as_ref())).collect();
    let kernel = gram(&xs);

    let solutions = classes
        .par_iter()
        .map(|class| {
            let ys: Vec<f64> = labels.iter().map(|l| if l.as_ref() == class { 1.0 } else { -1.0 }).collect();
            solve_binary(&xs, &kernel, &ys, cfg, class)
        })
        .collect::<Result<Vec<_>>>()?;

    let (weights, biases) = solutions.into_iter().map(|s| (s.weights, s.bias)).unzip();
    Ok(LinearOvrModel {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        classes,
        dimension,
        weights,
        biases,
        normalization,
        layout: None,
    })
}

impl LinearOvrModel {
    pub fn with_layout(mut self, layout: TcfLayout) -> Self {
        self.layout = Some(layout);
        self
    }

    /// `w_c . x' + b_c` per class, `x'` being `x` under the fitted normalization.
    pub fn decision_scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch { expected: self.dimension, found: x.len() });
        }
        let x = self.normalization.apply(x);
        Ok(self.weights.iter().zip(&self.biases).map(|(w, b)| dot(w, &x) + b).collect())
    }

    /// Index into `classes` of the highest score; exact ties go to the lowest index.
    pub fn predict_index(&self, x: &[f64]) -> Result<usize> {
        let scores = self.decision_scores(x)?;
        Ok(argmax(&scores))
    }

    pub fn predict(&self, x: &[f64]) -> Result<&str> {
        Ok(&self.classes[self.predict_index(x)?])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text)?;
        if model.format != MODEL_FORMAT || model.version != MODEL_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported model format {:?} version {}",
                model.format, model.version
            )));
        }
        if model.weights.len() != model.classes.len()
            || model.biases.len() != model.classes.len()
            || model.weights.iter().any(|w| w.len() != model.dimension)
        {
            return Err(Error::InvalidInput("model arrays are inconsistent".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// First index of the maximum.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}
