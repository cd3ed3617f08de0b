//! Conditional filter band selection: SNR pruning, max-min angle selection on
//! the survivors, then greedy growth of the smallest subset whose
//! cross-validated accuracy reaches a target.

use std::collections::HashMap;
use std::io::Write;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{cross_val_score, make_folds, ClassifierSpec, CvReport, FoldPlan};
use crate::dataset::{representative_spectra, LabeledDataset};
use crate::error::{Error, Result};
use crate::response::ResponseTable;
use crate::selection::{build_adjacency, fbs_select, SelectionResult, SelectionVector};
use crate::snr::{prune_bands_directed, snr_profile_from_table, SnrDirection, SnrProfile};
use crate::spectral::{build_filter_matrix_with_ids, FilterCatalog};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CfbsConfig {
    pub snr_th: f64,
    pub cvs_th: f64,
    pub n_fbs: usize,
    pub classifier: ClassifierSpec,
    pub k_folds: usize,
    /// Drives fold assignment and the classifier streams; overrides
    /// `classifier.seed`.
    pub seed: u64,
    #[serde(default)]
    pub snr_direction: SnrDirection,
}

impl Default for CfbsConfig {
    fn default() -> Self {
        Self {
            snr_th: 0.0,
            cvs_th: 0.95,
            n_fbs: 9,
            classifier: ClassifierSpec::random_forest(0),
            k_folds: 5,
            seed: 0,
            snr_direction: SnrDirection::Below,
        }
    }
}

impl CfbsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.snr_th >= 0.0) {
            return Err(Error::InvalidConfig(format!("snr_th {} must be non-negative", self.snr_th)));
        }
        if !(0.0..=1.0).contains(&self.cvs_th) {
            return Err(Error::InvalidConfig(format!("cvs_th {} outside [0, 1]", self.cvs_th)));
        }
        if self.n_fbs < 2 {
            return Err(Error::InvalidConfig("n_fbs must be at least 2".into()));
        }
        if self.k_folds < 2 {
            return Err(Error::InvalidConfig("k_folds must be at least 2".into()));
        }
        self.classifier.validate()
    }

    /// Notes for thresholds outside the range where the method is known to
    /// behave well; these never block a run.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.snr_th > 30.0 {
            out.push(format!("snr_th {} above the recommended range [0, 30]", self.snr_th));
        }
        if !(0.90..=0.98).contains(&self.cvs_th) {
            out.push(format!("cvs_th {} outside the recommended range [0.90, 0.98]", self.cvs_th));
        }
        out
    }
}

/// Cross-validates filter subsets on a fixed response table, caching reports
/// by subset.
pub struct SubsetEvaluator<'a> {
    table: &'a ResponseTable,
    spec: ClassifierSpec,
    plan: FoldPlan,
    cache: Mutex<HashMap<Vec<usize>, CvReport>>,
}

impl<'a> SubsetEvaluator<'a> {
    pub fn new(table: &'a ResponseTable, spec: &ClassifierSpec, k_folds: usize, seed: u64) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            table,
            spec: spec.with_seed(seed),
            plan: make_folds(table.labels(), k_folds, seed)?,
            cache: Mutex::new(HashMap::new()),
        })
    }

    /// Columns are taken in ascending id order whatever the input order.
    pub fn evaluate(&self, filter_ids: &[usize]) -> Result<CvReport> {
        if filter_ids.is_empty() {
            return Err(Error::EmptySelection);
        }
        let mut key = filter_ids.to_vec();
        key.sort_unstable();
        key.dedup();
        if let Some(&bad) = key.iter().find(|&&i| i >= self.table.n_filters()) {
            return Err(Error::InvalidConfig(format!("filter id {bad} not in catalog")));
        }
        if let Some(hit) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(hit.clone());
        }
        let features = self.table.features(&key);
        let report = cross_val_score(features.view(), self.table.labels(), &self.spec, &self.plan)?;
        self.cache.lock().expect("cache lock").insert(key, report.clone());
        Ok(report)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GrowthStage {
    Pair,
    Grow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub stage: GrowthStage,
    pub subset: Vec<usize>,
    pub cvs: f64,
    pub wco: u64,
    /// Highest cvs recorded so far, this step included.
    pub best_cvs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expansion {
    pub selection: SelectionVector,
    pub cvs: f64,
    pub wco: u64,
    pub threshold_reached: bool,
    pub trace: Vec<TraceStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimalSelection {
    pub selection: SelectionVector,
    pub achieved_cvs: f64,
    pub n: usize,
    pub wco: u64,
    pub threshold_reached: bool,
    pub min_pairwise_angle: Option<f64>,
    /// The max-min angle selection the growth drew from, in catalog ids.
    pub fbs: SelectionResult,
    pub surviving_ids: Vec<usize>,
    pub trace: Vec<TraceStep>,
    pub config: CfbsConfig,
}

/// Grows a subset of `candidates` from the best pair until `cvs_th` is met,
/// the score is perfect, or no addition strictly improves it.
pub fn greedy_expand_with(
    candidates: &SelectionVector,
    evaluator: &SubsetEvaluator,
    cvs_th: f64,
) -> Result<Expansion> {
    let ids = candidates.ids();
    if ids.len() < 2 {
        return Err(Error::InvalidN {
            n: ids.len(),
            available: 2,
        });
    }
    let mut trace = Vec::new();
    let mut best_cvs = f64::NEG_INFINITY;
    let mut record = |stage, subset: Vec<usize>, report: &CvReport, trace: &mut Vec<TraceStep>| {
        best_cvs = best_cvs.max(report.cvs);
        trace.push(TraceStep {
            stage,
            subset,
            cvs: report.cvs,
            wco: report.wco,
            best_cvs,
        });
    };

    let pairs: Vec<Vec<usize>> = (0..ids.len())
        .flat_map(|a| (a + 1..ids.len()).map(move |b| vec![ids[a], ids[b]]))
        .collect();
    let reports = evaluate_all(evaluator, &pairs)?;
    let mut best = 0;
    for (i, (pair, report)) in pairs.iter().zip(&reports).enumerate() {
        record(GrowthStage::Pair, pair.clone(), report, &mut trace);
        if report.cvs > reports[best].cvs {
            best = i;
        }
    }
    let mut current = pairs[best].clone();
    let mut current_report = reports[best].clone();

    while current_report.cvs < cvs_th && current_report.cvs < 1.0 {
        let grown: Vec<Vec<usize>> = ids
            .iter()
            .filter(|id| !current.contains(id))
            .map(|&id| {
                let mut s = current.clone();
                s.push(id);
                s.sort_unstable();
                s
            })
            .collect();
        if grown.is_empty() {
            break;
        }
        let reports = evaluate_all(evaluator, &grown)?;
        let mut best = 0;
        for (i, (subset, report)) in grown.iter().zip(&reports).enumerate() {
            record(GrowthStage::Grow, subset.clone(), report, &mut trace);
            if report.cvs > reports[best].cvs {
                best = i;
            }
        }
        if reports[best].cvs <= current_report.cvs {
            break;
        }
        current = grown[best].clone();
        current_report = reports[best].clone();
    }

    Ok(Expansion {
        selection: SelectionVector::new(current, candidates.k())?,
        cvs: current_report.cvs,
        wco: current_report.wco,
        threshold_reached: current_report.cvs >= cvs_th,
        trace,
    })
}

fn evaluate_all(evaluator: &SubsetEvaluator, subsets: &[Vec<usize>]) -> Result<Vec<CvReport>> {
    subsets.par_iter().map(|s| evaluator.evaluate(s)).collect()
}

/// Greedy growth over `fbs_sel` using a fresh response table of `catalog`.
pub fn greedy_expand(
    fbs_sel: &SelectionVector,
    dataset: &LabeledDataset,
    catalog: &FilterCatalog,
    config: &CfbsConfig,
) -> Result<Expansion> {
    config.validate()?;
    let table = ResponseTable::build(dataset, catalog)?;
    let evaluator = SubsetEvaluator::new(&table, &config.classifier, config.k_folds, config.seed)?;
    greedy_expand_with(fbs_sel, &evaluator, config.cvs_th)
}

/// Per-sample responses of the selected filters, cross-validated.
pub fn evaluate_selection(
    selection: &SelectionVector,
    dataset: &LabeledDataset,
    catalog: &FilterCatalog,
    spec: &ClassifierSpec,
    k_folds: usize,
    seed: u64,
) -> Result<CvReport> {
    if selection.is_empty() {
        return Err(Error::EmptySelection);
    }
    let sub = catalog.subset(selection.ids())?;
    let table = ResponseTable::build(dataset, &sub)?;
    let evaluator = SubsetEvaluator::new(&table, spec, k_folds, seed)?;
    let all: Vec<usize> = (0..sub.len()).collect();
    evaluator.evaluate(&all)
}

pub fn cfbs_select(dataset: &LabeledDataset, catalog: &FilterCatalog, config: &CfbsConfig) -> Result<MinimalSelection> {
    config.validate()?;
    if catalog.is_empty() {
        return Err(Error::EmptyCatalog);
    }
    let table = ResponseTable::build(dataset, catalog)?;
    let profile = snr_profile_from_table(&table)?;
    let evaluator = SubsetEvaluator::new(&table, &config.classifier, config.k_folds, config.seed)?;
    cfbs_select_with(dataset, catalog, &profile, &evaluator, config)
}

/// Pipeline on precomputed inputs; `evaluator` must have been built from the
/// full `catalog` with the configuration's classifier, folds and seed.
pub fn cfbs_select_with(
    dataset: &LabeledDataset,
    catalog: &FilterCatalog,
    profile: &SnrProfile,
    evaluator: &SubsetEvaluator,
    config: &CfbsConfig,
) -> Result<MinimalSelection> {
    let pruned = prune_bands_directed(catalog, profile, config.snr_th, config.snr_direction)?;
    let survivors = pruned.original_ids.len();
    if survivors < config.n_fbs {
        return Err(Error::NotEnoughSurvivors {
            survivors,
            required: config.n_fbs,
        });
    }
    let (object_ids, spectra): (Vec<u64>, Vec<_>) = representative_spectra(dataset).into_iter().unzip();
    let matrix = build_filter_matrix_with_ids(&pruned.catalog, &spectra, &object_ids)?;
    let graph = build_adjacency(&matrix)?;
    let local = fbs_select(&graph, config.n_fbs)?;
    let to_catalog = |ids: &[usize]| ids.iter().map(|&i| pruned.original_ids[i]).collect::<Vec<_>>();
    let fbs = SelectionResult {
        selection: SelectionVector::new(to_catalog(local.selection.ids()), catalog.len())?,
        ..local.clone()
    };

    let grown = greedy_expand_with(&fbs.selection, evaluator, config.cvs_th)?;
    let local_ids: Vec<usize> = grown
        .selection
        .ids()
        .iter()
        .map(|id| pruned.original_ids.binary_search(id).expect("selected filter survived pruning"))
        .collect();
    Ok(MinimalSelection {
        n: grown.selection.len(),
        min_pairwise_angle: graph.min_pairwise(&local_ids),
        selection: grown.selection,
        achieved_cvs: grown.cvs,
        wco: grown.wco,
        threshold_reached: grown.threshold_reached,
        fbs,
        surviving_ids: pruned.original_ids,
        trace: grown.trace,
        config: *config,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub snr_th: f64,
    pub cvs_th: f64,
    pub n: Option<usize>,
    pub wco: Option<u64>,
    pub cvs: Option<f64>,
    pub theta_min: Option<f64>,
    /// `ok` or the error code of a failed cell.
    pub status: String,
    #[serde(skip)]
    pub selection: Option<SelectionVector>,
}

/// One run per (snr_th, cvs_th) cell, SNR-major. Cell failures are recorded,
/// not returned.
pub fn sweep(
    dataset: &LabeledDataset,
    catalog: &FilterCatalog,
    snr_list: &[f64],
    cvs_list: &[f64],
    base: &CfbsConfig,
) -> Result<Vec<SweepCell>> {
    if snr_list.is_empty() || cvs_list.is_empty() {
        return Err(Error::InvalidConfig("sweep needs at least one threshold of each kind".into()));
    }
    base.validate()?;
    if catalog.is_empty() {
        return Err(Error::EmptyCatalog);
    }
    let table = ResponseTable::build(dataset, catalog)?;
    let profile = snr_profile_from_table(&table)?;
    let evaluator = SubsetEvaluator::new(&table, &base.classifier, base.k_folds, base.seed)?;
    let mut cells = Vec::with_capacity(snr_list.len() * cvs_list.len());
    for &snr_th in snr_list {
        for &cvs_th in cvs_list {
            let config = CfbsConfig { snr_th, cvs_th, ..*base };
            let outcome = config
                .validate()
                .and_then(|_| cfbs_select_with(dataset, catalog, &profile, &evaluator, &config))
                .and_then(|sel| {
                    let report = evaluator.evaluate(sel.selection.ids())?;
                    Ok((sel, report))
                });
            cells.push(match outcome {
                Ok((sel, report)) => SweepCell {
                    snr_th,
                    cvs_th,
                    n: Some(sel.n),
                    wco: Some(report.wco),
                    cvs: Some(report.cvs),
                    theta_min: sel.min_pairwise_angle,
                    status: "ok".into(),
                    selection: Some(sel.selection),
                },
                Err(e) => SweepCell {
                    snr_th,
                    cvs_th,
                    n: None,
                    wco: None,
                    cvs: None,
                    theta_min: None,
                    status: e.code().into(),
                    selection: None,
                },
            });
        }
    }
    Ok(cells)
}

/// CSV with columns `snr_th,cvs_th,n,wco,cvs,theta_min,status`; failed
/// cells leave the numeric fields empty.
pub fn write_sweep_csv<W: Write>(cells: &[SweepCell], writer: W) -> Result<()> {
    let opt = |v: Option<String>| v.unwrap_or_default();
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["snr_th", "cvs_th", "n", "wco", "cvs", "theta_min", "status"])?;
    for c in cells {
        wtr.write_record([
            c.snr_th.to_string(),
            c.cvs_th.to_string(),
            opt(c.n.map(|v| v.to_string())),
            opt(c.wco.map(|v| v.to_string())),
            opt(c.cvs.map(|v| v.to_string())),
            opt(c.theta_min.map(|v| v.to_string())),
            c.status.clone(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}
