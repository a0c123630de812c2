//! Python bindings: correlation kernels, the TCF encoder, the one-vs-rest SVM,
//! TSF/manifest I/O and the evaluation protocol. Matrices cross the boundary as
//! lists of rows (one row per feature series).

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use tcf_core::dataio::{self, SynthSpec};
use tcf_core::{DegeneratePolicy, Error, Normalization, Selection, TimeSeriesMatrix, TrainConfig};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        Error::NotConverged { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<TimeSeriesMatrix> {
    TimeSeriesMatrix::from_rows(&rows).map_err(to_py)
}

fn parse_selection(name: &str) -> PyResult<Selection> {
    Selection::ALL
        .into_iter()
        .find(|s| s.name() == name)
        .ok_or_else(|| PyValueError::new_err(format!("unknown scheme {name:?}")))
}

fn parse_normalization(name: &str) -> PyResult<Normalization> {
    match name {
        "none" => Ok(Normalization::None),
        "l2" => Ok(Normalization::L2),
        "zscore" => Ok(Normalization::ZScore),
        _ => Err(PyValueError::new_err(format!("unknown normalization {name:?}"))),
    }
}

/// Pearson correlation; 0 when either series is constant.
#[pyfunction]
pub fn pearson(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    tcf_core::pearson(&a, &b, DegeneratePolicy::ZeroFill).map_err(to_py)
}

/// Biased sample autocorrelation; returns `(coefficients, truncated_lags)`.
#[pyfunction]
pub fn sample_acf(a: Vec<f64>, lags: Vec<usize>) -> PyResult<(Vec<f64>, usize)> {
    let acf = tcf_core::sample_acf(&a, &lags, DegeneratePolicy::ZeroFill).map_err(to_py)?;
    Ok((acf.coefficients, acf.truncated_lags))
}

#[pyclass(name = "EncoderConfig", from_py_object)]
#[derive(Clone)]
pub struct PyEncoderConfig {
    #[pyo3(get, set)]
    pub lambda_: usize,
    #[pyo3(get, set)]
    pub windows: usize,
    #[pyo3(get, set)]
    pub gamma: usize,
    #[pyo3(get, set)]
    pub stride: usize,
    #[pyo3(get, set)]
    pub scheme: String,
    #[pyo3(get, set)]
    pub subset_size: usize,
    #[pyo3(get, set)]
    pub seed: u64,
}

#[pymethods]
impl PyEncoderConfig {
    #[new]
    #[pyo3(signature = (lambda_=64, windows=16, gamma=6, stride=1, scheme="group".to_string(), subset_size=64, seed=0))]
    fn new(
        lambda_: usize,
        windows: usize,
        gamma: usize,
        stride: usize,
        scheme: String,
        subset_size: usize,
        seed: u64,
    ) -> Self {
        Self { lambda_, windows, gamma, stride, scheme, subset_size, seed }
    }

    /// Descriptor length for `n` input series.
    fn descriptor_len(&self, n: usize) -> PyResult<usize> {
        Ok(self.to_core()?.descriptor_len(n))
    }

    fn __repr__(&self) -> String {
        format!(
            "EncoderConfig(lambda_={}, windows={}, gamma={}, stride={}, scheme={:?}, subset_size={}, seed={})",
            self.lambda_, self.windows, self.gamma, self.stride, self.scheme, self.subset_size, self.seed
        )
    }
}

impl PyEncoderConfig {
    pub fn to_core(&self) -> PyResult<tcf_core::EncoderConfig> {
        Ok(tcf_core::EncoderConfig {
            lambda: self.lambda_,
            windows: self.windows,
            gamma: self.gamma,
            stride: self.stride,
            selection: parse_selection(&self.scheme)?,
            selection_m: self.subset_size,
            policy: DegeneratePolicy::ZeroFill,
            seed: self.seed,
        })
    }
}

/// TCF descriptor (`[ccf, acf]`) of a matrix given as rows.
#[pyfunction]
#[pyo3(signature = (rows, config=None))]
pub fn encode_tcf(rows: Vec<Vec<f64>>, config: Option<PyEncoderConfig>) -> PyResult<Vec<f64>> {
    let cfg = match config {
        Some(c) => c.to_core()?,
        None => tcf_core::EncoderConfig::default(),
    };
    Ok(tcf_core::encode_tcf(&matrix(rows)?, &cfg).map_err(to_py)?.into_combined())
}

/// Rows of a TSF file.
#[pyfunction]
pub fn read_tsf(path: PathBuf) -> PyResult<Vec<Vec<f64>>> {
    Ok(dataio::read_tsf(&path).map_err(to_py)?.to_rows())
}

#[pyfunction]
pub fn write_tsf(rows: Vec<Vec<f64>>, path: PathBuf) -> PyResult<()> {
    dataio::write_tsf(&matrix(rows)?, &path).map_err(to_py)
}

/// Writes the built-in synthetic corpus to `out` and returns the manifest path.
#[pyfunction]
#[pyo3(signature = (out, classes=3, videos=20, seed=7))]
pub fn synth_demo(out: PathBuf, classes: usize, videos: usize, seed: u64) -> PyResult<PathBuf> {
    if !(1..=7).contains(&classes) {
        return Err(PyValueError::new_err("the demo corpus supports 1 to 7 classes"));
    }
    let dataset = dataio::synth_generate(&SynthSpec::demo(classes, videos, seed)).map_err(to_py)?;
    dataio::write_corpus(&dataset, &out).map_err(to_py)
}

#[pyclass(name = "LinearOvrModel", skip_from_py_object)]
pub struct PyModel {
    inner: tcf_core::LinearOvrModel,
}

#[pymethods]
impl PyModel {
    /// Trains one binary SVM per class.
    #[staticmethod]
    #[pyo3(signature = (descriptors, labels, c=1000.0, tolerance=1e-4, normalize="none"))]
    fn train(
        descriptors: Vec<Vec<f64>>,
        labels: Vec<String>,
        c: f64,
        tolerance: f64,
        normalize: &str,
    ) -> PyResult<Self> {
        let cfg = TrainConfig { c_reg: c, tolerance, normalize: parse_normalization(normalize)?, ..Default::default() };
        let inner = tcf_core::train_ovr(&descriptors, &labels, &cfg).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn classes(&self) -> Vec<String> {
        self.inner.classes.clone()
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.dimension
    }

    fn decision_scores(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.decision_scores(&x).map_err(to_py)
    }

    fn predict(&self, x: Vec<f64>) -> PyResult<String> {
        self.inner.predict(&x).map(str::to_string).map_err(to_py)
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: tcf_core::LinearOvrModel::from_json(text).map_err(to_py)? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(to_py)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: tcf_core::LinearOvrModel::load(&path).map_err(to_py)? })
    }
}

/// Runs the repeated half-split protocol on a manifest; returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (manifest, config=None, repetitions=100, seed=7, c=1000.0))]
pub fn run_protocol(
    py: Python<'_>,
    manifest: PathBuf,
    config: Option<PyEncoderConfig>,
    repetitions: usize,
    seed: u64,
    c: f64,
) -> PyResult<String> {
    let cfg = match config {
        Some(c) => c.to_core()?,
        None => tcf_core::EncoderConfig::default(),
    };
    let train = TrainConfig { c_reg: c, ..Default::default() };
    py.detach(|| {
        let dataset = dataio::read_manifest(&manifest)?;
        tcf_core::run_protocol(&dataset, &cfg, &train, repetitions, seed)?.to_json()
    })
    .map_err(to_py)
}

#[pymodule]
fn tcf(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(pearson, m)?)?;
    m.add_function(wrap_pyfunction!(sample_acf, m)?)?;
    m.add_function(wrap_pyfunction!(encode_tcf, m)?)?;
    m.add_function(wrap_pyfunction!(read_tsf, m)?)?;
    m.add_function(wrap_pyfunction!(write_tsf, m)?)?;
    m.add_function(wrap_pyfunction!(synth_demo, m)?)?;
    m.add_function(wrap_pyfunction!(run_protocol, m)?)?;
    m.add_class::<PyEncoderConfig>()?;
    m.add_class::<PyModel>()?;
    Ok(())
}
