//! Wavelength grids, bandpass filters and filter-response integration.
//!
//! Filters are ideal box passbands of unit transmittance over the half-open
//! interval `[center - bandwidth/2, center + bandwidth/2)`. Responses are
//! integrated with the rectangle rule on the uniform sample grid, each grid
//! sample standing for the bin `[λ_k, λ_k + step)`.

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack used when locating passband edges on the grid.
const EDGE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavelengthGrid {
    pub start_nm: f64,
    pub step_nm: f64,
    pub count: usize,
}

impl WavelengthGrid {
    pub fn new(start_nm: f64, step_nm: f64, count: usize) -> Result<Self> {
        let grid = Self {
            start_nm,
            step_nm,
            count,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start_nm.is_finite() && self.start_nm > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "start {} must be finite and positive",
                self.start_nm
            )));
        }
        if !(self.step_nm.is_finite() && self.step_nm > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "step {} must be finite and positive",
                self.step_nm
            )));
        }
        if self.count < 2 {
            return Err(Error::InvalidGrid(format!(
                "count {} must be at least 2",
                self.count
            )));
        }
        if !self.end_nm().is_finite() {
            return Err(Error::InvalidGrid("end wavelength overflows".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn wavelength(&self, index: usize) -> f64 {
        self.start_nm + index as f64 * self.step_nm
    }

    /// Last sample wavelength.
    pub fn end_nm(&self) -> f64 {
        self.wavelength(self.count - 1)
    }

    /// Upper edge of the last sample's bin.
    pub fn upper_edge_nm(&self) -> f64 {
        self.end_nm() + self.step_nm
    }

    pub fn wavelengths(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|k| self.wavelength(k))
    }

    /// Index range of samples with `lo <= λ_k < hi`.
    pub fn sample_range(&self, lo_nm: f64, hi_nm: f64) -> std::ops::Range<usize> {
        let first = ((lo_nm - self.start_nm) / self.step_nm - EDGE_EPS).ceil();
        let last = ((hi_nm - self.start_nm) / self.step_nm - EDGE_EPS).ceil();
        let clamp = |v: f64| v.max(0.0).min(self.count as f64) as usize;
        clamp(first)..clamp(last)
    }

    fn tolerance(&self) -> f64 {
        EDGE_EPS * self.step_nm.max(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum(Vec<f64>);

impl Spectrum {
    pub fn new(values: Vec<f64>) -> Self {
        Spectrum(values)
    }

    pub fn constant(value: f64, len: usize) -> Self {
        Spectrum(vec![value; len])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for Spectrum {
    fn from(values: Vec<f64>) -> Self {
        Spectrum(values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterCurve {
    pub id: usize,
    pub center_nm: f64,
    pub bandwidth_nm: f64,
}

impl FilterCurve {
    pub fn lo_nm(&self) -> f64 {
        self.center_nm - self.bandwidth_nm / 2.0
    }

    pub fn hi_nm(&self) -> f64 {
        self.center_nm + self.bandwidth_nm / 2.0
    }

    /// Checks that the passband lies inside the grid and covers at least one
    /// sample, returning the covered sample range.
    pub fn passband(&self, grid: &WavelengthGrid) -> Result<std::ops::Range<usize>> {
        if !(self.center_nm.is_finite() && self.bandwidth_nm.is_finite() && self.bandwidth_nm > 0.0)
        {
            return Err(Error::InvalidConfig(format!(
                "filter {} has center {} and bandwidth {}",
                self.id, self.center_nm, self.bandwidth_nm
            )));
        }
        let tol = grid.tolerance();
        if self.lo_nm() < grid.start_nm - tol || self.hi_nm() > grid.upper_edge_nm() + tol {
            return Err(Error::PassbandOutOfRange {
                id: self.id,
                lo_nm: self.lo_nm(),
                hi_nm: self.hi_nm(),
            });
        }
        let range = grid.sample_range(self.lo_nm(), self.hi_nm());
        if range.is_empty() {
            return Err(Error::EmptyPassband { id: self.id });
        }
        Ok(range)
    }
}

/// Candidate filter pool. Filter ids always equal their list position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterCatalog {
    grid: WavelengthGrid,
    filters: Vec<FilterCurve>,
}

impl FilterCatalog {
    /// Builds a catalog from `(center_nm, bandwidth_nm)` pairs; ids are
    /// assigned by position.
    pub fn new(grid: WavelengthGrid, bands: &[(f64, f64)]) -> Result<Self> {
        grid.validate()?;
        if bands.is_empty() {
            return Err(Error::EmptyCatalog);
        }
        let filters: Vec<FilterCurve> = bands
            .iter()
            .enumerate()
            .map(|(id, &(center_nm, bandwidth_nm))| FilterCurve {
                id,
                center_nm,
                bandwidth_nm,
            })
            .collect();
        for f in &filters {
            f.passband(&grid)?;
        }
        for (i, a) in filters.iter().enumerate() {
            if filters[..i]
                .iter()
                .any(|b| a.center_nm == b.center_nm && a.bandwidth_nm == b.bandwidth_nm)
            {
                return Err(Error::DuplicateFilter {
                    center_nm: a.center_nm,
                    bandwidth_nm: a.bandwidth_nm,
                });
            }
        }
        Ok(Self { grid, filters })
    }

    pub fn grid(&self) -> &WavelengthGrid {
        &self.grid
    }

    pub fn filters(&self) -> &[FilterCurve] {
        &self.filters
    }

    pub fn get(&self, id: usize) -> Option<&FilterCurve> {
        self.filters.get(id)
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    /// Sub-catalog of the given ids (in the given order), renumbered from 0.
    pub fn subset(&self, ids: &[usize]) -> Result<Self> {
        let bands = ids
            .iter()
            .map(|&id| {
                self.get(id)
                    .map(|f| (f.center_nm, f.bandwidth_nm))
                    .ok_or_else(|| Error::InvalidConfig(format!("unknown filter id {id}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.grid, &bands)
    }
}

pub(crate) fn check_spectrum(spectrum: &Spectrum, grid: &WavelengthGrid) -> Result<()> {
    if spectrum.len() != grid.count {
        return Err(Error::LengthMismatch {
            expected: grid.count,
            actual: spectrum.len(),
        });
    }
    Ok(())
}

/// Rectangle-rule integral of the spectrum over the filter passband.
pub fn filter_response(curve: &FilterCurve, spectrum: &Spectrum, grid: &WavelengthGrid) -> Result<f64> {
    check_spectrum(spectrum, grid)?;
    let range = curve.passband(grid)?;
    Ok(spectrum.values()[range].iter().sum::<f64>() * grid.step_nm)
}

/// Mean in-band value: the response divided by the integrated passband width.
pub fn bandwidth_normalized_response(
    curve: &FilterCurve,
    spectrum: &Spectrum,
    grid: &WavelengthGrid,
) -> Result<f64> {
    check_spectrum(spectrum, grid)?;
    Ok(band_mean(spectrum.values(), curve.passband(grid)?))
}

pub(crate) fn band_mean(values: &[f64], range: std::ops::Range<usize>) -> f64 {
    let width = range.len() as f64;
    values[range].iter().sum::<f64>() / width
}

/// Filters × objects matrix of bandwidth-normalized responses.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterMatrix {
    pub entries: Array2<f64>,
    pub filter_ids: Vec<usize>,
    pub object_ids: Vec<u64>,
}

impl FilterMatrix {
    pub fn n_filters(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_objects(&self) -> usize {
        self.entries.ncols()
    }
}

pub fn build_filter_matrix(catalog: &FilterCatalog, spectra: &[Spectrum]) -> Result<FilterMatrix> {
    let ids: Vec<u64> = (0..spectra.len() as u64).collect();
    build_filter_matrix_with_ids(catalog, spectra, &ids)
}

pub fn build_filter_matrix_with_ids(
    catalog: &FilterCatalog,
    spectra: &[Spectrum],
    object_ids: &[u64],
) -> Result<FilterMatrix> {
    if spectra.len() < 2 {
        return Err(Error::TooFewObjects {
            required: 2,
            actual: spectra.len(),
        });
    }
    if object_ids.len() != spectra.len() {
        return Err(Error::LengthMismatch {
            expected: spectra.len(),
            actual: object_ids.len(),
        });
    }
    let grid = catalog.grid();
    for spectrum in spectra {
        check_spectrum(spectrum, grid)?;
    }
    let mut entries = Array2::zeros((catalog.len(), spectra.len()));
    for (i, filter) in catalog.filters().iter().enumerate() {
        let band = filter.passband(grid)?;
        for (j, spectrum) in spectra.iter().enumerate() {
            let v = band_mean(spectrum.values(), band.clone());
            if !v.is_finite() {
                return Err(Error::InvalidDataset(format!(
                    "non-finite response for filter {} and object {}",
                    filter.id, object_ids[j]
                )));
            }
            entries[[i, j]] = v;
        }
        if entries.row(i).iter().all(|&v| v == 0.0) {
            return Err(Error::ZeroRow {
                filter_id: filter.id,
            });
        }
    }
    Ok(FilterMatrix {
        entries,
        filter_ids: catalog.filters().iter().map(|f| f.id).collect(),
        object_ids: object_ids.to_vec(),
    })
}

/// Per-column z-score parameters fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Columns with zero variance; their std is replaced by 1.
    pub degenerate: Vec<bool>,
}

impl NormalizationParams {
    pub fn fit(features: ArrayView2<f64>) -> Self {
        let n = features.nrows().max(1) as f64;
        let mut mean = Vec::with_capacity(features.ncols());
        let mut std = Vec::with_capacity(features.ncols());
        let mut degenerate = Vec::with_capacity(features.ncols());
        for col in features.axis_iter(Axis(1)) {
            let m = col.sum() / n;
            let var = col.iter().map(|&v| (v - m) * (v - m)).sum::<f64>() / n;
            let s = var.sqrt();
            let flat = !(s > 1e-12 * m.abs().max(1.0));
            mean.push(m);
            std.push(if flat { 1.0 } else { s });
            degenerate.push(flat);
        }
        Self {
            mean,
            std,
            degenerate,
        }
    }

    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, features: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check(features.ncols())?;
        let mut out = features.to_owned();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (m, s) = (self.mean[j], self.std[j]);
            col.mapv_inplace(|v| (v - m) / s);
        }
        Ok(out)
    }

    pub fn invert(&self, normalized: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check(normalized.ncols())?;
        let mut out = normalized.to_owned();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (m, s) = (self.mean[j], self.std[j]);
            col.mapv_inplace(|v| v * s + m);
        }
        Ok(out)
    }

    fn check(&self, cols: usize) -> Result<()> {
        if cols != self.n_features() {
            return Err(Error::FeatureCountMismatch {
                expected: self.n_features(),
                actual: cols,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn grid_400() -> WavelengthGrid {
        WavelengthGrid::new(400.0, 1.0, 10).unwrap()
    }

    fn box_filter(center: f64, bw: f64) -> FilterCurve {
        FilterCurve {
            id: 0,
            center_nm: center,
            bandwidth_nm: bw,
        }
    }

    /// Direct sum over grid points inside `[lo, hi)`.
    fn sum_oracle(grid: &WavelengthGrid, spectrum: &[f64], lo: f64, hi: f64) -> f64 {
        grid.wavelengths()
            .zip(spectrum)
            .filter(|(l, _)| *l >= lo && *l < hi)
            .map(|(_, v)| v * grid.step_nm)
            .sum()
    }

    #[test]
    fn grid_rejects_bad_parameters() {
        assert!(WavelengthGrid::new(400.0, 0.0, 10).is_err());
        assert!(WavelengthGrid::new(400.0, 1.0, 1).is_err());
        assert!(WavelengthGrid::new(-1.0, 1.0, 10).is_err());
        assert!(WavelengthGrid::new(f64::NAN, 1.0, 10).is_err());
        assert_eq!(grid_400().end_nm(), 409.0);
    }

    #[test]
    fn constant_box_response() {
        let grid = grid_400();
        let s = Spectrum::constant(2.0, 10);
        assert_eq!(filter_response(&box_filter(405.0, 10.0), &s, &grid).unwrap(), 20.0);
    }

    #[test]
    fn zero_spectrum_response() {
        let grid = grid_400();
        let s = Spectrum::constant(0.0, 10);
        assert_eq!(filter_response(&box_filter(404.0, 4.0), &s, &grid).unwrap(), 0.0);
    }

    #[test]
    fn half_lit_passband() {
        let grid = grid_400();
        let values: Vec<f64> = (0..10).map(|k| if k < 5 { 1.0 } else { 0.0 }).collect();
        let expected = sum_oracle(&grid, &values, 400.0, 410.0);
        assert_eq!(expected, 5.0);
        let s = Spectrum::new(values);
        let f = box_filter(405.0, 10.0);
        assert_eq!(filter_response(&f, &s, &grid).unwrap(), expected);
        assert_eq!(bandwidth_normalized_response(&f, &s, &grid).unwrap(), 0.5);
    }

    #[test]
    fn normalized_response_is_bandwidth_invariant_on_constants() {
        let grid = WavelengthGrid::new(300.0, 1.0, 501).unwrap();
        let s = Spectrum::constant(2.0, 501);
        for bw in [10.0, 50.0] {
            let v = bandwidth_normalized_response(&box_filter(500.0, bw), &s, &grid).unwrap();
            assert!((v - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn passband_outside_grid_is_rejected() {
        let grid = grid_400();
        let s = Spectrum::constant(1.0, 10);
        let err = filter_response(&box_filter(399.0, 4.0), &s, &grid).unwrap_err();
        assert!(matches!(err, Error::PassbandOutOfRange { .. }));
        let err = filter_response(&box_filter(409.0, 4.0), &s, &grid).unwrap_err();
        assert!(matches!(err, Error::PassbandOutOfRange { .. }));
    }

    #[test]
    fn spectrum_length_must_match_grid() {
        let err = filter_response(&box_filter(405.0, 2.0), &Spectrum::constant(1.0, 9), &grid_400())
            .unwrap_err();
        assert!(matches!(err, Error::LengthMismatch { .. }));
    }

    #[test]
    fn matrix_of_one_filter_and_identical_objects() {
        let grid = grid_400();
        let cat = FilterCatalog::new(grid, &[(405.0, 10.0)]).unwrap();
        let s = Spectrum::constant(3.0, 10);
        let m = build_filter_matrix(&cat, &[s.clone(), s]).unwrap();
        assert_eq!(m.entries.shape(), &[1, 2]);
        assert_eq!(m.entries[[0, 0]], m.entries[[0, 1]]);
    }

    #[test]
    fn disjoint_filters_give_diagonal_matrix() {
        let grid = grid_400();
        let cat = FilterCatalog::new(grid, &[(402.0, 4.0), (407.0, 4.0)]).unwrap();
        let a: Vec<f64> = (0..10).map(|k| if k < 4 { 1.5 } else { 0.0 }).collect();
        let b: Vec<f64> = (0..10).map(|k| if (5..9).contains(&k) { 2.5 } else { 0.0 }).collect();
        let m = build_filter_matrix(&cat, &[Spectrum::new(a.clone()), Spectrum::new(b.clone())]).unwrap();
        for (i, f) in cat.filters().iter().enumerate() {
            for (j, s) in [&a, &b].into_iter().enumerate() {
                let expected = sum_oracle(&grid, s, f.lo_nm(), f.hi_nm()) / f.bandwidth_nm;
                assert!((m.entries[[i, j]] - expected).abs() < 1e-12);
            }
        }
        assert_eq!(m.entries, array![[1.5, 0.0], [0.0, 2.5]]);
    }

    #[test]
    fn zero_row_is_rejected() {
        let grid = grid_400();
        let cat = FilterCatalog::new(grid, &[(402.0, 4.0), (407.0, 4.0)]).unwrap();
        let a: Vec<f64> = (0..10).map(|k| if k < 4 { 1.0 } else { 0.0 }).collect();
        let err = build_filter_matrix(&cat, &[Spectrum::new(a.clone()), Spectrum::new(a)]).unwrap_err();
        assert!(matches!(err, Error::ZeroRow { filter_id: 1 }));
    }

    #[test]
    fn duplicate_catalog_entry_is_rejected() {
        let err = FilterCatalog::new(grid_400(), &[(405.0, 4.0), (405.0, 4.0)]).unwrap_err();
        assert!(matches!(err, Error::DuplicateFilter { .. }));
    }

    #[test]
    fn normalization_of_two_values() {
        let x = array![[1.0, 5.0], [3.0, 5.0]];
        let p = NormalizationParams::fit(x.view());
        assert_eq!(p.mean, vec![2.0, 5.0]);
        assert_eq!(p.std, vec![1.0, 1.0]);
        assert_eq!(p.degenerate, vec![false, true]);
        let z = p.apply(x.view()).unwrap();
        assert_eq!(z, array![[-1.0, 0.0], [1.0, 0.0]]);
    }

    #[test]
    fn normalization_rejects_wrong_width() {
        let p = NormalizationParams::fit(array![[1.0], [2.0]].view());
        assert!(matches!(
            p.apply(array![[1.0, 2.0]].view()),
            Err(Error::FeatureCountMismatch { .. })
        ));
    }
}
