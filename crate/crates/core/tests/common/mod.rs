//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tcf_core::encoder::subset_indices;
use tcf_core::{EncoderConfig, Selection, TimeSeriesMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_rows(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..k).map(|_| rng.random_range(-3.0..3.0)).collect()).collect()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, k: usize) -> TimeSeriesMatrix {
    TimeSeriesMatrix::from_rows(&random_rows(rng, n, k)).unwrap()
}

/// Textbook two-pass Pearson coefficient; constant inputs give 0.
pub fn pearson_two_pass(a: &[f64], b: &[f64]) -> f64 {
    let k = a.len() as f64;
    let ma = a.iter().sum::<f64>() / k;
    let mb = b.iter().sum::<f64>() / k;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for i in 0..a.len() {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    let constant = |v: &[f64]| v.iter().all(|x| *x == v[0]);
    if constant(a) || constant(b) {
        return 0.0;
    }
    sab / (saa.sqrt() * sbb.sqrt())
}

/// Biased sample autocorrelation by direct summation.
pub fn acf_brute(a: &[f64], lag: usize) -> f64 {
    let k = a.len();
    if lag >= k || a.iter().all(|x| *x == a[0]) {
        return 0.0;
    }
    let mean = a.iter().sum::<f64>() / k as f64;
    let mut num = 0.0;
    for t in 0..k - lag {
        num += (a[t] - mean) * (a[t + lag] - mean);
    }
    let mut den = 0.0;
    for v in a {
        den += (v - mean) * (v - mean);
    }
    num / den
}

/// Uniform-stride rows (0-based) via the 1-based rounding formula in floating point.
pub fn uniform_rows_float(n: usize, m: usize) -> Vec<usize> {
    if m == 1 {
        return vec![0];
    }
    (1..=m).map(|j| (1.0 + (j as f64 - 1.0) * (n as f64 - 1.0) / (m as f64 - 1.0)).round() as usize - 1).collect()
}

/// Naive TCF: explicit grouping by index arithmetic, window bounds recomputed
/// from scratch, triple loops over (window, a, b) with two-pass statistics.
pub fn naive_tcf(rows: &[Vec<f64>], cfg: &EncoderConfig) -> Vec<f64> {
    let n = rows.len();
    let k = rows[0].len();
    let series: Vec<Vec<f64>> = match cfg.selection {
        Selection::Group => {
            let delta = n / cfg.lambda;
            (0..cfg.lambda)
                .map(|g| {
                    let mut v = vec![0.0; delta * k];
                    for t in 0..k {
                        for j in 0..delta {
                            v[t * delta + j] = rows[g * delta + j][t];
                        }
                    }
                    v
                })
                .collect()
        }
        Selection::First => rows[..cfg.selection_m].to_vec(),
        Selection::Uniform => uniform_rows_float(n, cfg.selection_m).into_iter().map(|i| rows[i].clone()).collect(),
        Selection::Random => subset_indices(n, Selection::Random, cfg.selection_m, cfg.seed)
            .unwrap()
            .into_iter()
            .map(|i| rows[i].clone())
            .collect(),
    };
    let len = series[0].len();
    let mut out = Vec::new();
    for w in 0..cfg.windows {
        // balanced: first len % L windows are one longer
        let base = len / cfg.windows;
        let extra = len % cfg.windows;
        let start = w * base + w.min(extra);
        let end = start + base + usize::from(w < extra);
        for a in 0..series.len() {
            for b in a + 1..series.len() {
                out.push(pearson_two_pass(&series[a][start..end], &series[b][start..end]));
            }
        }
    }
    for row in rows {
        for l in 1..=cfg.gamma {
            out.push(acf_brute(row, l * cfg.stride));
        }
    }
    out
}

/// Optimal soft-margin primal objective, found by solving
/// `min 1/2 |w|^2 + C sum(xi)` s.t. `y_i (w.x_i + b) >= 1 - xi_i`, `xi >= 0`
/// over `(w, b, xi)` with a primal-dual interior-point method.
/// Returns the hinge-loss objective at the final `(w, b)`, an upper bound that
/// converges to the optimum.
pub fn svm_optimum_primal(xs: &[Vec<f64>], ys: &[f64], c: f64) -> (f64, Vec<f64>, f64) {
    let l = ys.len();
    let d = xs[0].len();
    let nv = d + 1 + l;
    let nc = 2 * l;
    let mut p = DMatrix::zeros(nv, nv);
    for i in 0..d {
        p[(i, i)] = 1.0;
    }
    let q = DVector::from_fn(nv, |i, _| if i > d { c } else { 0.0 });
    let mut g = DMatrix::zeros(nc, nv);
    let mut h = DVector::zeros(nc);
    for i in 0..l {
        for k in 0..d {
            g[(i, k)] = -ys[i] * xs[i][k];
        }
        g[(i, d)] = -ys[i];
        g[(i, d + 1 + i)] = -1.0;
        h[i] = -1.0;
        g[(l + i, d + 1 + i)] = -1.0;
    }
    let mut v = DVector::zeros(nv);
    let mut s = DVector::from_element(nc, 1.0);
    let mut lam = DVector::from_element(nc, 1.0);

    for _ in 0..300 {
        let r_d = &p * &v + &q + g.transpose() * &lam;
        let r_p = &g * &v + &s - &h;
        let mu = s.dot(&lam) / nc as f64;
        if mu < 1e-12 && r_p.amax() < 1e-11 && r_d.amax() < 1e-9 * (1.0 + c) {
            break;
        }
        let target = 0.1 * mu;
        let w = DVector::from_fn(nc, |i, _| lam[i] / s[i]);
        let t = DVector::from_fn(nc, |i, _| (target - s[i] * lam[i] + lam[i] * r_p[i]) / s[i]);
        let mut m = p.clone();
        m += g.transpose() * DMatrix::from_diagonal(&w) * &g;
        let rhs = -&r_d - g.transpose() * &t;
        let dv = m.cholesky().expect("normal equations must be positive definite").solve(&rhs);
        let ds = -&r_p - &g * &dv;
        let dl = DVector::from_fn(nc, |i, _| (target - s[i] * lam[i] - lam[i] * ds[i]) / s[i]);
        let mut step: f64 = 1.0;
        for i in 0..nc {
            for (value, delta) in [(s[i], ds[i]), (lam[i], dl[i])] {
                if delta < 0.0 {
                    step = step.min(-0.99 * value / delta);
                }
            }
        }
        v += &dv * step;
        s += &ds * step;
        lam += &dl * step;
    }
    let weights: Vec<f64> = v.rows(0, d).iter().copied().collect();
    let bias = v[d];
    (tcf_core::classifier::primal_objective(&weights, bias, xs, ys, c), weights, bias)
}

/// True when every point is closer to its own class centroid than to any other.
pub fn nearest_centroid_separable(xs: &[Vec<f64>], labels: &[String]) -> bool {
    let mut classes: Vec<&String> = labels.iter().collect();
    classes.sort();
    classes.dedup();
    let centroids: Vec<Vec<f64>> = classes
        .iter()
        .map(|c| {
            let members: Vec<&Vec<f64>> = xs.iter().zip(labels).filter(|(_, l)| l == c).map(|(x, _)| x).collect();
            let mut m = vec![0.0; xs[0].len()];
            for x in &members {
                for (a, b) in m.iter_mut().zip(x.iter()) {
                    *a += b / members.len() as f64;
                }
            }
            m
        })
        .collect();
    xs.iter().zip(labels).all(|(x, l)| {
        let d: Vec<f64> = centroids.iter().map(|c| c.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum()).collect();
        let own = classes.iter().position(|c| *c == l).unwrap();
        d.iter().enumerate().all(|(i, v)| i == own || *v > d[own])
    })
}

/// Gaussian blobs: `per_class` points around each center with the given spread.
pub fn blobs(
    rng: &mut ChaCha8Rng,
    centers: &[Vec<f64>],
    per_class: usize,
    spread: f64,
) -> (Vec<Vec<f64>>, Vec<String>) {
    use rand_distr::{Distribution, StandardNormal};
    let mut xs = Vec::new();
    let mut labels = Vec::new();
    for (ci, center) in centers.iter().enumerate() {
        for _ in 0..per_class {
            xs.push(
                center
                    .iter()
                    .map(|c| {
                        let z: f64 = StandardNormal.sample(rng);
                        c + spread * z
                    })
                    .collect(),
            );
            labels.push(format!("c{ci}"));
        }
    }
    (xs, labels)
}
