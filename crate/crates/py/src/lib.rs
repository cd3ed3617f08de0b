//! Python bindings for `bandsel`.

use bandsel::cfbs::{cfbs_select, evaluate_selection, CfbsConfig};
use bandsel::classify::ClassifierSpec;
use bandsel::dataset::{
    catalog_from_json, catalog_to_json, generate_catalog, generate_synthetic, load_catalog_json, load_dataset_csv,
    representative_spectra, save_catalog_json, save_dataset_csv, LabeledDataset, LoadOptions, SyntheticConfig,
};
use bandsel::report::SelectionDocument;
use bandsel::selection::{
    build_adjacency, fbs_select, full_search_select, uniform_select, AngleGraph, SelectionResult, SelectionVector,
    DEFAULT_COMBINATION_CAP,
};
use bandsel::snr::{prune_bands_directed, snr_profile, SnrDirection};
use bandsel::spectral::{build_filter_matrix_with_ids, FilterCatalog};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyIOError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

create_exception!(bandsel, BandselError, PyException);

fn to_py(e: bandsel::Error) -> PyErr {
    match e {
        bandsel::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => BandselError::new_err(format!("{}: {e}", e.code())),
    }
}

fn to_dict(py: Python<'_>, value: &impl Serialize) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// Labelled replicate spectra on a uniform wavelength grid.
#[pyclass(name = "Dataset", module = "bandsel", frozen)]
pub struct PyDataset(LabeledDataset);

#[pymethods]
impl PyDataset {
    #[staticmethod]
    fn load_csv(path: &str) -> PyResult<Self> {
        load_dataset_csv(path, &LoadOptions::default()).map(Self).map_err(to_py)
    }

    fn save_csv(&self, path: &str) -> PyResult<()> {
        save_dataset_csv(&self.0, path).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    #[getter]
    fn classes(&self) -> Vec<String> {
        self.0.classes().to_vec()
    }

    #[getter]
    fn wavelengths(&self) -> Vec<f64> {
        self.0.grid().wavelengths().collect()
    }

    /// Class index of every sample.
    fn labels(&self) -> Vec<usize> {
        self.0.labels()
    }

    fn object_ids(&self) -> Vec<u64> {
        self.0.samples().iter().map(|s| s.object_id).collect()
    }

    fn spectra(&self) -> Vec<Vec<f64>> {
        self.0.samples().iter().map(|s| s.spectrum.values().to_vec()).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(samples={}, classes={}, bands={})",
            self.0.len(),
            self.0.classes().len(),
            self.0.grid().count
        )
    }
}

/// Box-shaped bandpass filters on a dataset grid.
#[pyclass(name = "Catalog", module = "bandsel", frozen)]
pub struct PyCatalog(FilterCatalog);

#[pymethods]
impl PyCatalog {
    #[staticmethod]
    #[pyo3(signature = (dataset, bandwidths=vec![10.0, 50.0], center_step=5.0))]
    fn generate(dataset: &PyDataset, bandwidths: Vec<f64>, center_step: f64) -> PyResult<Self> {
        generate_catalog(dataset.0.grid(), &bandwidths, center_step).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn load_json(path: &str) -> PyResult<Self> {
        load_catalog_json(path).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        catalog_from_json(text).map(Self).map_err(to_py)
    }

    fn to_json(&self) -> String {
        catalog_to_json(&self.0)
    }

    fn save_json(&self, path: &str) -> PyResult<()> {
        save_catalog_json(&self.0, path).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    /// `(id, center_nm, bandwidth_nm)` per filter.
    fn filters(&self) -> Vec<(usize, f64, f64)> {
        self.0.filters().iter().map(|f| (f.id, f.center_nm, f.bandwidth_nm)).collect()
    }

    fn __repr__(&self) -> String {
        format!("Catalog(filters={})", self.0.len())
    }
}

#[pyfunction]
#[pyo3(signature = (seed=0, objects_per_class=10, replicates=100, n_classes=5, noise_base=None, noise_slope=None))]
fn generate_dataset(
    seed: u64,
    objects_per_class: usize,
    replicates: usize,
    n_classes: usize,
    noise_base: Option<f64>,
    noise_slope: Option<f64>,
) -> PyResult<PyDataset> {
    let base = SyntheticConfig::default();
    let config = SyntheticConfig {
        n_classes,
        objects_per_class,
        replicates_per_object: replicates,
        noise_base: noise_base.unwrap_or(base.noise_base),
        noise_slope: noise_slope.unwrap_or(base.noise_slope),
        seed,
        ..base
    };
    generate_synthetic(&config).map(PyDataset).map_err(to_py)
}

/// Angle in radians between two non-zero vectors.
#[pyfunction]
fn spectral_angle(u: Vec<f64>, v: Vec<f64>) -> PyResult<f64> {
    bandsel::selection::spectral_angle(&u, &v).map_err(to_py)
}

fn direction(name: &str) -> PyResult<SnrDirection> {
    match name {
        "below" => Ok(SnrDirection::Below),
        "above" => Ok(SnrDirection::Above),
        _ => Err(PyValueError::new_err(format!("unknown SNR direction {name:?}"))),
    }
}

fn classifier(name: &str, trees: Option<usize>, seed: u64) -> PyResult<ClassifierSpec> {
    let mut spec = match name {
        "rf" => ClassifierSpec::random_forest(seed),
        "gb" => ClassifierSpec::gradient_boosting(seed),
        _ => return Err(PyValueError::new_err(format!("unknown classifier {name:?}"))),
    };
    if let Some(t) = trees {
        spec.n_trees = t;
    }
    Ok(spec)
}

/// Per-filter `{filter_id, mu, sigma, m, snr}` records.
#[pyfunction]
fn snr(py: Python<'_>, dataset: &PyDataset, catalog: &PyCatalog) -> PyResult<Py<PyAny>> {
    let profile = py.detach(|| snr_profile(&dataset.0, &catalog.0)).map_err(to_py)?;
    to_dict(py, &profile.per_filter)
}

/// Filters that survive SNR pruning, renumbered, and their source ids.
#[pyfunction]
#[pyo3(signature = (dataset, catalog, snr_th, direction="below"))]
fn prune(dataset: &PyDataset, catalog: &PyCatalog, snr_th: f64, direction: &str) -> PyResult<(PyCatalog, Vec<usize>)> {
    let dir = self::direction(direction)?;
    let profile = snr_profile(&dataset.0, &catalog.0).map_err(to_py)?;
    let pruned = prune_bands_directed(&catalog.0, &profile, snr_th, dir).map_err(to_py)?;
    Ok((PyCatalog(pruned.catalog), pruned.original_ids))
}

fn angle_graph(dataset: &LabeledDataset, catalog: &FilterCatalog) -> bandsel::Result<AngleGraph> {
    let (ids, spectra): (Vec<u64>, Vec<_>) = representative_spectra(dataset).into_iter().unzip();
    build_adjacency(&build_filter_matrix_with_ids(catalog, &spectra, &ids)?)
}

/// Picks `n` filters by `method` (`fbs`, `full` or `uniform`).
#[pyfunction]
#[pyo3(signature = (dataset, catalog, n=9, method="fbs"))]
fn select(py: Python<'_>, dataset: &PyDataset, catalog: &PyCatalog, n: usize, method: &str) -> PyResult<Py<PyAny>> {
    let pick: fn(&AngleGraph, &FilterCatalog, usize) -> bandsel::Result<SelectionResult> = match method {
        "fbs" => |g, _, n| fbs_select(g, n),
        "full" => |g, _, n| full_search_select(g, n, DEFAULT_COMBINATION_CAP),
        "uniform" => |g, c, n| uniform_select(c, n, g),
        _ => return Err(PyValueError::new_err(format!("unknown method {method:?}"))),
    };
    let result = py
        .detach(|| angle_graph(&dataset.0, &catalog.0).and_then(|g| pick(&g, &catalog.0, n)))
        .map_err(to_py)?;
    let doc = SelectionDocument::from_result(&result, &catalog.0, serde_json::json!({ "n": n, "method": method }));
    to_dict(py, &doc)
}

/// Smallest subset reaching `cvs_th`, as a selection document.
#[pyfunction]
#[pyo3(signature = (
    dataset, catalog, snr_th=0.0, cvs_th=0.95, n_fbs=9, classifier="rf", trees=None, k_folds=5, seed=0,
    direction="below"
))]
#[allow(clippy::too_many_arguments)]
fn cfbs(
    py: Python<'_>,
    dataset: &PyDataset,
    catalog: &PyCatalog,
    snr_th: f64,
    cvs_th: f64,
    n_fbs: usize,
    classifier: &str,
    trees: Option<usize>,
    k_folds: usize,
    seed: u64,
    direction: &str,
) -> PyResult<Py<PyAny>> {
    let config = CfbsConfig {
        snr_th,
        cvs_th,
        n_fbs,
        classifier: self::classifier(classifier, trees, seed)?,
        k_folds,
        seed,
        snr_direction: self::direction(direction)?,
    };
    let doc = py
        .detach(|| cfbs_select(&dataset.0, &catalog.0, &config).and_then(|s| SelectionDocument::from_minimal(&s, &catalog.0)))
        .map_err(to_py)?;
    to_dict(py, &doc)
}

/// Cross-validated `{fold_accuracies, cvs, confusion, wco}` for catalog ids.
#[pyfunction]
#[pyo3(signature = (dataset, catalog, filter_ids, classifier="rf", trees=None, k_folds=5, seed=0))]
#[allow(clippy::too_many_arguments)]
fn evaluate(
    py: Python<'_>,
    dataset: &PyDataset,
    catalog: &PyCatalog,
    filter_ids: Vec<usize>,
    classifier: &str,
    trees: Option<usize>,
    k_folds: usize,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let spec = self::classifier(classifier, trees, seed)?;
    let report = py
        .detach(|| {
            let selection = SelectionVector::new(filter_ids, catalog.0.len())?;
            evaluate_selection(&selection, &dataset.0, &catalog.0, &spec, k_folds, seed)
        })
        .map_err(to_py)?;
    to_dict(py, &report)
}

#[pymodule]
#[pyo3(name = "bandsel")]
fn bandsel_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("BandselError", m.py().get_type::<BandselError>())?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyCatalog>()?;
    m.add_function(wrap_pyfunction!(generate_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_angle, m)?)?;
    m.add_function(wrap_pyfunction!(snr, m)?)?;
    m.add_function(wrap_pyfunction!(prune, m)?)?;
    m.add_function(wrap_pyfunction!(select, m)?)?;
    m.add_function(wrap_pyfunction!(cfbs, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    Ok(())
}
