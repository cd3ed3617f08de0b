use std::collections::BTreeMap;

use ndarray::Array2;

use crate::dataset::LabeledDataset;
use crate::error::Result;
use crate::spectral::{band_mean, check_spectrum, FilterCatalog};

/// Bandwidth-normalized response of every sample to every catalog filter,
/// with the sample labels and object ids alongside.
#[derive(Debug, Clone)]
pub struct ResponseTable {
    responses: Array2<f64>,
    labels: Vec<usize>,
    object_ids: Vec<u64>,
    n_classes: usize,
}

impl ResponseTable {
    pub fn build(dataset: &LabeledDataset, catalog: &FilterCatalog) -> Result<Self> {
        let grid = dataset.grid();
        let bands = catalog
            .filters()
            .iter()
            .map(|f| f.passband(grid))
            .collect::<Result<Vec<_>>>()?;
        let mut responses = Array2::zeros((dataset.len(), catalog.len()));
        for (i, sample) in dataset.samples().iter().enumerate() {
            check_spectrum(&sample.spectrum, grid)?;
            let values = sample.spectrum.values();
            for (k, band) in bands.iter().enumerate() {
                responses[[i, k]] = band_mean(values, band.clone());
            }
        }
        Ok(Self {
            responses,
            labels: dataset.labels(),
            object_ids: dataset.samples().iter().map(|s| s.object_id).collect(),
            n_classes: dataset.classes().len(),
        })
    }

    pub fn responses(&self) -> &Array2<f64> {
        &self.responses
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_filters(&self) -> usize {
        self.responses.ncols()
    }

    pub fn n_samples(&self) -> usize {
        self.responses.nrows()
    }

    pub fn object_groups(&self) -> BTreeMap<u64, Vec<usize>> {
        let mut map: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
        for (i, &id) in self.object_ids.iter().enumerate() {
            map.entry(id).or_default().push(i);
        }
        map
    }

    /// Feature matrix of the given filter columns, in the given order.
    pub fn features(&self, filter_ids: &[usize]) -> Array2<f64> {
        self.responses.select(ndarray::Axis(1), filter_ids)
    }
}
