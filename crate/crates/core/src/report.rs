//! JSON documents describing a selection, shared by every selection method.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cfbs::{MinimalSelection, TraceStep};
use crate::error::{Error, Result};
use crate::selection::{Method, SelectionResult, SelectionVector};
use crate::spectral::FilterCatalog;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterEntry {
    pub id: usize,
    pub center_nm: f64,
    pub bandwidth_nm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionDocument {
    pub method: Method,
    pub config: serde_json::Value,
    pub filters: Vec<FilterEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub achieved_cvs: Option<f64>,
    pub n: usize,
    pub min_pairwise_angle_rad: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceStep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wco: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold_reached: Option<bool>,
    /// Bisection threshold of the max-min angle search.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_star_rad: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fbs_filter_ids: Option<Vec<usize>>,
    pub catalog_size: usize,
}

fn entries(selection: &SelectionVector, catalog: &FilterCatalog) -> Vec<FilterEntry> {
    selection
        .ids()
        .iter()
        .map(|&id| {
            let f = &catalog.filters()[id];
            FilterEntry {
                id,
                center_nm: f.center_nm,
                bandwidth_nm: f.bandwidth_nm,
            }
        })
        .collect()
}

impl SelectionDocument {
    pub fn from_result(result: &SelectionResult, catalog: &FilterCatalog, config: serde_json::Value) -> Self {
        Self {
            method: result.method,
            config,
            filters: entries(&result.selection, catalog),
            achieved_cvs: None,
            n: result.selection.len(),
            min_pairwise_angle_rad: result.min_pairwise_angle,
            trace: Vec::new(),
            wco: None,
            threshold_reached: None,
            theta_star_rad: result.threshold,
            iterations: Some(result.iterations),
            fbs_filter_ids: None,
            catalog_size: catalog.len(),
        }
    }

    pub fn from_minimal(sel: &MinimalSelection, catalog: &FilterCatalog) -> Result<Self> {
        Ok(Self {
            method: Method::Cfbs,
            config: serde_json::to_value(sel.config)?,
            filters: entries(&sel.selection, catalog),
            achieved_cvs: Some(sel.achieved_cvs),
            n: sel.n,
            min_pairwise_angle_rad: sel.min_pairwise_angle,
            trace: sel.trace.clone(),
            wco: Some(sel.wco),
            threshold_reached: Some(sel.threshold_reached),
            theta_star_rad: sel.fbs.threshold,
            iterations: Some(sel.fbs.iterations),
            fbs_filter_ids: Some(sel.fbs.selection.ids().to_vec()),
            catalog_size: catalog.len(),
        })
    }

    /// Selection against `catalog`, checking that ids, centers and
    /// bandwidths all agree.
    pub fn selection(&self, catalog: &FilterCatalog) -> Result<SelectionVector> {
        if self.filters.is_empty() {
            return Err(Error::EmptySelection);
        }
        for e in &self.filters {
            let f = catalog
                .get(e.id)
                .ok_or_else(|| Error::InvalidConfig(format!("filter id {} not in catalog", e.id)))?;
            if f.center_nm != e.center_nm || f.bandwidth_nm != e.bandwidth_nm {
                return Err(Error::InvalidConfig(format!(
                    "filter {} is ({}, {}) in the selection but ({}, {}) in the catalog",
                    e.id, e.center_nm, e.bandwidth_nm, f.center_nm, f.bandwidth_nm
                )));
            }
        }
        SelectionVector::new(self.filters.iter().map(|e| e.id).collect(), catalog.len())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
