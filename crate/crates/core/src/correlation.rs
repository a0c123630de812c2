//! Pearson cross-correlation and biased sample autocorrelation.
//!
//! Everything accumulates in `f64`. A series whose samples are all identical has
//! zero sample standard deviation; its correlations are resolved through
//! [`DegeneratePolicy`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How correlations that are undefined (zero variance) are reported.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegeneratePolicy {
    /// Undefined correlations become `0`.
    #[default]
    ZeroFill,
}

impl DegeneratePolicy {
    pub(crate) fn undefined_value(self) -> f64 {
        match self {
            DegeneratePolicy::ZeroFill => 0.0,
        }
    }
}

/// Output of [`sample_acf`].
#[derive(Debug, Clone, PartialEq)]
pub struct Acf {
    /// One coefficient per requested lag, in request order.
    pub coefficients: Vec<f64>,
    /// Number of requested lags that were `>= k` and therefore zero-filled.
    pub truncated_lags: usize,
}

impl Acf {
    pub fn is_truncated(&self) -> bool {
        self.truncated_lags > 0
    }
}

pub(crate) fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

/// True when every sample is identical, i.e. the sample standard deviation is zero.
pub(crate) fn is_constant(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0] == w[1])
}

pub(crate) fn clamp_unit(r: f64) -> f64 {
    r.clamp(-1.0, 1.0)
}

/// Sample Pearson correlation coefficient of two equally long series.
///
/// Uses a single-pass co-moment update, so large offsets do not cancel.
pub fn pearson(a: &[f64], b: &[f64], policy: DegeneratePolicy) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    if a.len() < 2 {
        return Err(Error::TooShort { needed: 2, got: a.len() });
    }
    check_finite(a)?;
    check_finite(b)?;
    if is_constant(a) || is_constant(b) {
        return Ok(policy.undefined_value());
    }

    let (mut mean_a, mut mean_b) = (0.0f64, 0.0f64);
    let (mut m2_a, mut m2_b, mut co) = (0.0f64, 0.0f64, 0.0f64);
    for (i, (&x, &y)) in a.iter().zip(b).enumerate() {
        let count = (i + 1) as f64;
        let dx = x - mean_a;
        let dy = y - mean_b;
        // symmetric form keeps pearson(a, b) == pearson(b, a) bit for bit
        let weight = (count - 1.0) / count;
        mean_a += dx / count;
        mean_b += dy / count;
        m2_a += dx * dx * weight;
        m2_b += dy * dy * weight;
        co += dx * dy * weight;
    }
    if m2_a <= 0.0 || m2_b <= 0.0 {
        return Ok(policy.undefined_value());
    }
    Ok(clamp_unit(co / norm_product(m2_a, m2_b)))
}

/// `sqrt(ss_a * ss_b)`; for `ss_a == ss_b` this is exactly `ss_a`, so identical
/// series correlate to exactly 1.
pub(crate) fn norm_product(ss_a: f64, ss_b: f64) -> f64 {
    let product = ss_a * ss_b;
    if product.is_finite() && product > 0.0 {
        product.sqrt()
    } else {
        ss_a.sqrt() * ss_b.sqrt()
    }
}

/// Biased sample autocorrelation at each requested lag:
/// `r(l) = sum_{t<k-l} (a_t - mean)(a_{t+l} - mean) / sum_t (a_t - mean)^2`.
///
/// Lags `>= k` are emitted as `0` and counted in [`Acf::truncated_lags`].
pub fn sample_acf(a: &[f64], lags: &[usize], policy: DegeneratePolicy) -> Result<Acf> {
    let k = a.len();
    if k < 2 {
        return Err(Error::TooShort { needed: 2, got: k });
    }
    if lags.contains(&0) {
        return Err(Error::InvalidInput("autocorrelation lags must be positive".into()));
    }
    check_finite(a)?;

    let truncated_lags = lags.iter().filter(|&&l| l >= k).count();
    if is_constant(a) {
        return Ok(Acf { coefficients: vec![policy.undefined_value(); lags.len()], truncated_lags });
    }

    let mean = a.iter().sum::<f64>() / k as f64;
    let centered: Vec<f64> = a.iter().map(|v| v - mean).collect();
    let denom: f64 = centered.iter().map(|v| v * v).sum();

    let coefficients = lags
        .iter()
        .map(|&lag| {
            if lag >= k {
                return 0.0;
            }
            let num: f64 = centered[..k - lag].iter().zip(&centered[lag..]).map(|(x, y)| x * y).sum();
            clamp_unit(num / denom)
        })
        .collect();
    Ok(Acf { coefficients, truncated_lags })
}
