//! Labeled spectra, filter catalogs, their file formats, and the synthetic
//! generators used for experiments.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{FilterCatalog, Spectrum, WavelengthGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub object_id: u64,
    pub class_label: String,
    pub spectrum: Spectrum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    grid: WavelengthGrid,
    samples: Vec<SampleRecord>,
    classes: Vec<String>,
}

impl LabeledDataset {
    /// Validates the samples; the class list is the sorted set of labels.
    pub fn new(grid: WavelengthGrid, samples: Vec<SampleRecord>) -> Result<Self> {
        grid.validate()?;
        let mut object_class: BTreeMap<u64, &str> = BTreeMap::new();
        for s in &samples {
            if s.spectrum.len() != grid.count {
                return Err(Error::LengthMismatch {
                    expected: grid.count,
                    actual: s.spectrum.len(),
                });
            }
            if let Some(v) = s.spectrum.values().iter().find(|v| !v.is_finite()) {
                return Err(Error::InvalidDataset(format!(
                    "object {} has non-finite value {v}",
                    s.object_id
                )));
            }
            match object_class.get(&s.object_id) {
                Some(&c) if c != s.class_label => {
                    return Err(Error::InvalidDataset(format!(
                        "object {} labeled both {c} and {}",
                        s.object_id, s.class_label
                    )))
                }
                Some(_) => {}
                None => {
                    object_class.insert(s.object_id, &s.class_label);
                }
            }
        }
        let mut classes: Vec<String> = object_class.values().map(|c| c.to_string()).collect();
        classes.sort();
        classes.dedup();
        if classes.len() < 2 {
            return Err(Error::InvalidDataset(format!(
                "{} class(es) present, at least 2 are needed",
                classes.len()
            )));
        }
        Ok(Self {
            grid,
            samples,
            classes,
        })
    }

    pub fn grid(&self) -> &WavelengthGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[SampleRecord] {
        &self.samples
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.classes.binary_search_by(|c| c.as_str().cmp(label)).ok()
    }

    /// Class index of every sample, in sample order.
    pub fn labels(&self) -> Vec<usize> {
        self.samples
            .iter()
            .map(|s| self.class_index(&s.class_label).expect("class list covers all labels"))
            .collect()
    }

    /// Sample indices grouped by object id (ascending).
    pub fn objects(&self) -> BTreeMap<u64, Vec<usize>> {
        let mut map: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
        for (i, s) in self.samples.iter().enumerate() {
            map.entry(s.object_id).or_default().push(i);
        }
        map
    }

    pub fn object_ids(&self) -> Vec<u64> {
        self.objects().into_keys().collect()
    }
}

/// Per-object mean over replicate spectra, ascending by object id.
pub fn representative_spectra(dataset: &LabeledDataset) -> Vec<(u64, Spectrum)> {
    let n = dataset.grid().count;
    dataset
        .objects()
        .into_iter()
        .map(|(id, members)| {
            let mut mean = vec![0.0; n];
            for &i in &members {
                for (m, v) in mean.iter_mut().zip(dataset.samples()[i].spectrum.values()) {
                    *m += v;
                }
            }
            let count = members.len() as f64;
            mean.iter_mut().for_each(|m| *m /= count);
            (id, Spectrum::new(mean))
        })
        .collect()
}

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    pub allow_negative: bool,
    /// When set, labels outside this list are rejected.
    pub classes: Option<Vec<String>>,
}

pub fn load_dataset_csv(path: impl AsRef<Path>, options: &LoadOptions) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset_csv(BufReader::new(file), options)
}

pub fn read_dataset_csv<R: Read>(reader: R, options: &LoadOptions) -> Result<LabeledDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(h) => h?,
        None => {
            return Err(Error::Parse {
                line: 1,
                reason: "missing header".into(),
            })
        }
    };
    if header.len() < 4 || &header[0] != "object_id" || &header[1] != "class" {
        return Err(Error::Parse {
            line: 1,
            reason: "header must be `object_id,class,<wavelengths...>` with at least 2 wavelengths".into(),
        });
    }
    let wavelengths = header
        .iter()
        .skip(2)
        .map(|f| {
            f.trim().parse::<f64>().map_err(|_| Error::Parse {
                line: 1,
                reason: format!("wavelength `{f}` is not a number"),
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    let grid = grid_from_wavelengths(&wavelengths)?;

    let mut samples = Vec::new();
    for record in records {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != header.len() {
            return Err(Error::Parse {
                line,
                reason: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        let object_id = record[0].trim().parse::<u64>().map_err(|_| Error::Parse {
            line,
            reason: format!("object id `{}` is not a non-negative integer", &record[0]),
        })?;
        let class_label = record[1].trim().to_string();
        if class_label.is_empty() {
            return Err(Error::Parse {
                line,
                reason: "empty class label".into(),
            });
        }
        if let Some(known) = &options.classes {
            if !known.contains(&class_label) {
                return Err(Error::Parse {
                    line,
                    reason: format!("unknown class `{class_label}`"),
                });
            }
        }
        let mut values = Vec::with_capacity(grid.count);
        for field in record.iter().skip(2) {
            let v = field.trim().parse::<f64>().map_err(|_| Error::Parse {
                line,
                reason: format!("value `{field}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    reason: format!("non-finite value `{field}`"),
                });
            }
            if v < 0.0 && !options.allow_negative {
                return Err(Error::NegativeValue { line, value: v });
            }
            values.push(v);
        }
        samples.push(SampleRecord {
            object_id,
            class_label,
            spectrum: Spectrum::new(values),
        });
    }
    LabeledDataset::new(grid, samples)
}

/// Recovers a uniform grid from header wavelengths, rounding the step to
/// 1e-9 nm.
fn grid_from_wavelengths(wavelengths: &[f64]) -> Result<WavelengthGrid> {
    let n = wavelengths.len();
    if n < 2 {
        return Err(Error::GridMismatch("fewer than 2 wavelengths".into()));
    }
    let start = wavelengths[0];
    let raw_step = (wavelengths[n - 1] - start) / (n - 1) as f64;
    let step = (raw_step * 1e9).round() / 1e9;
    if !(step > 0.0) {
        return Err(Error::GridMismatch("wavelengths are not ascending".into()));
    }
    let grid = WavelengthGrid::new(start, step, n).map_err(|e| Error::GridMismatch(e.to_string()))?;
    for (k, &w) in wavelengths.iter().enumerate() {
        if (w - grid.wavelength(k)).abs() > 1e-6 * step {
            return Err(Error::GridMismatch(format!(
                "column {} at {w} nm, expected {} nm",
                k + 3,
                grid.wavelength(k)
            )));
        }
    }
    Ok(grid)
}

pub fn save_dataset_csv(dataset: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_dataset_csv(dataset, &mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_dataset_csv<W: Write>(dataset: &LabeledDataset, writer: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    let mut header = vec!["object_id".to_string(), "class".to_string()];
    header.extend(dataset.grid().wavelengths().map(|w| w.to_string()));
    wtr.write_record(&header)?;
    let mut row = Vec::with_capacity(header.len());
    for s in dataset.samples() {
        row.clear();
        row.push(s.object_id.to_string());
        row.push(s.class_label.clone());
        row.extend(s.spectrum.values().iter().map(|v| v.to_string()));
        wtr.write_record(&row)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub n_classes: usize,
    pub objects_per_class: usize,
    pub replicates_per_object: usize,
    pub grid: WavelengthGrid,
    pub noise_base: f64,
    pub noise_slope: f64,
    pub signature_bumps_per_class: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_classes: 5,
            objects_per_class: 10,
            replicates_per_object: 100,
            grid: WavelengthGrid {
                start_nm: 316.0,
                step_nm: 1.0,
                count: 476,
            },
            noise_base: DEFAULT_NOISE_BASE,
            noise_slope: DEFAULT_NOISE_SLOPE,
            signature_bumps_per_class: 3,
            seed: 0,
        }
    }
}

pub const DEFAULT_NOISE_BASE: f64 = 0.01;
pub const DEFAULT_NOISE_SLOPE: f64 = 0.5;

/// Shared reflectance floor of every synthetic object.
const BASELINE: f64 = 0.5;
/// Class signature bumps: broad, moderate contrast, in the lower middle of
/// the range. Everything below is common to all classes.
const CLASS_REGION: (f64, f64) = (0.25, 0.55);
const CLASS_AMPLITUDE: (f64, f64) = (0.15, 0.3);
const CLASS_WIDTH_NM: (f64, f64) = (8.0, 30.0);
/// Object perturbations: narrow, class-independent texture in the upper
/// range, where replicate noise is also highest.
const OBJECT_REGION: (f64, f64) = (0.55, 1.0);
const OBJECT_AMPLITUDE: (f64, f64) = (0.3, 0.6);
const OBJECT_WIDTH_NM: (f64, f64) = (3.0, 8.0);
const OBJECT_BUMPS: usize = 3;

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.n_classes < 2 {
            return Err(Error::InvalidConfig("at least 2 classes are needed".into()));
        }
        if self.objects_per_class == 0 || self.replicates_per_object == 0 || self.signature_bumps_per_class == 0 {
            return Err(Error::InvalidConfig("all counts must be at least 1".into()));
        }
        if !(self.noise_base >= 0.0 && self.noise_slope >= 0.0) {
            return Err(Error::InvalidConfig("noise parameters must be non-negative".into()));
        }
        Ok(())
    }

    /// Replicate noise standard deviation at a wavelength.
    pub fn noise_sigma(&self, wavelength_nm: f64) -> f64 {
        let span = self.grid.end_nm() - self.grid.start_nm;
        self.noise_base + self.noise_slope * (wavelength_nm - self.grid.start_nm) / span
    }
}

struct Bump {
    center_nm: f64,
    width_nm: f64,
    amplitude: f64,
}

impl Bump {
    /// Center drawn uniformly over `region`, given as fractions of the range.
    fn random(rng: &mut ChaCha8Rng, grid: &WavelengthGrid, amplitude: f64, region: (f64, f64), width: (f64, f64)) -> Self {
        let span = grid.end_nm() - grid.start_nm;
        Bump {
            center_nm: rng.random_range(grid.start_nm + region.0 * span..=grid.start_nm + region.1 * span),
            width_nm: rng.random_range(width.0..=width.1),
            amplitude,
        }
    }

    fn add_to(&self, values: &mut [f64], grid: &WavelengthGrid) {
        for (k, v) in values.iter_mut().enumerate() {
            let d = (grid.wavelength(k) - self.center_nm) / self.width_nm;
            *v += self.amplitude * (-0.5 * d * d).exp();
        }
    }
}

pub fn class_name(index: usize, n_classes: usize) -> String {
    let width = (n_classes.max(2) - 1).to_string().len();
    format!("class_{index:0width$}")
}

/// Seeded dataset of labeled replicate spectra: per-class bump signatures,
/// per-object bump perturbations, and additive replicate noise growing
/// linearly with wavelength, clipped at zero.
pub fn generate_synthetic(config: &SyntheticConfig) -> Result<LabeledDataset> {
    config.validate()?;
    let grid = config.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let sigma: Vec<f64> = grid.wavelengths().map(|w| config.noise_sigma(w)).collect();
    let unit = Normal::new(0.0, 1.0).expect("unit normal");

    let mut samples = Vec::with_capacity(
        config.n_classes * config.objects_per_class * config.replicates_per_object,
    );
    for class in 0..config.n_classes {
        let label = class_name(class, config.n_classes);
        let mut signature = vec![BASELINE; grid.count];
        for _ in 0..config.signature_bumps_per_class {
            let amplitude = rng.random_range(CLASS_AMPLITUDE.0..=CLASS_AMPLITUDE.1);
            Bump::random(&mut rng, &grid, amplitude, CLASS_REGION, CLASS_WIDTH_NM).add_to(&mut signature, &grid);
        }
        for obj in 0..config.objects_per_class {
            let object_id = (class * config.objects_per_class + obj) as u64;
            let mut object = signature.clone();
            for _ in 0..OBJECT_BUMPS {
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let amplitude = sign * rng.random_range(OBJECT_AMPLITUDE.0..=OBJECT_AMPLITUDE.1);
                Bump::random(&mut rng, &grid, amplitude, OBJECT_REGION, OBJECT_WIDTH_NM).add_to(&mut object, &grid);
            }
            for _ in 0..config.replicates_per_object {
                let values = object
                    .iter()
                    .zip(&sigma)
                    .map(|(&v, &s)| {
                        let noisy = if s > 0.0 { v + s * unit.sample(&mut rng) } else { v };
                        noisy.max(0.0)
                    })
                    .collect();
                samples.push(SampleRecord {
                    object_id,
                    class_label: label.clone(),
                    spectrum: Spectrum::new(values),
                });
            }
        }
    }
    LabeledDataset::new(grid, samples)
}

/// One filter family per bandwidth, centers stepping from the lowest to the
/// highest feasible position with both endpoints included; ordered by
/// (bandwidth, center).
pub fn generate_catalog(grid: &WavelengthGrid, bandwidths_nm: &[f64], center_step_nm: f64) -> Result<FilterCatalog> {
    grid.validate()?;
    if bandwidths_nm.is_empty() {
        return Err(Error::InvalidConfig("no bandwidths given".into()));
    }
    if !(center_step_nm.is_finite() && center_step_nm > 0.0) {
        return Err(Error::InvalidConfig(format!("center step {center_step_nm} must be positive")));
    }
    let mut widths = bandwidths_nm.to_vec();
    if widths.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
        return Err(Error::InvalidConfig("bandwidths must be positive".into()));
    }
    widths.sort_by(f64::total_cmp);
    widths.dedup();
    let tol = 1e-9 * center_step_nm.max(1.0);
    let mut bands = Vec::new();
    for b in widths {
        let first = grid.start_nm + b / 2.0;
        let last = grid.end_nm() - b / 2.0;
        if first > last + tol {
            continue;
        }
        let mut i = 0usize;
        let mut center = first;
        while center <= last + tol {
            bands.push((center, b));
            i += 1;
            center = first + i as f64 * center_step_nm;
        }
        // The upper endpoint is always a center, even off the step lattice.
        let top = bands.last().map_or(first, |&(c, _)| c);
        if last - top > tol {
            bands.push((last, b));
        }
    }
    if bands.is_empty() {
        return Err(Error::EmptyCatalog);
    }
    FilterCatalog::new(*grid, &bands)
}

#[derive(Serialize, Deserialize)]
struct CatalogFile {
    grid: WavelengthGrid,
    filters: Vec<CatalogEntry>,
}

#[derive(Serialize, Deserialize)]
struct CatalogEntry {
    center_nm: f64,
    bandwidth_nm: f64,
}

pub fn catalog_from_json(text: &str) -> Result<FilterCatalog> {
    let file: CatalogFile = serde_json::from_str(text)?;
    let bands: Vec<(f64, f64)> = file.filters.iter().map(|f| (f.center_nm, f.bandwidth_nm)).collect();
    FilterCatalog::new(file.grid, &bands)
}

pub fn catalog_to_json(catalog: &FilterCatalog) -> String {
    let file = CatalogFile {
        grid: *catalog.grid(),
        filters: catalog
            .filters()
            .iter()
            .map(|f| CatalogEntry {
                center_nm: f.center_nm,
                bandwidth_nm: f.bandwidth_nm,
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("catalog serializes");
    text.push('\n');
    text
}

pub fn load_catalog_json(path: impl AsRef<Path>) -> Result<FilterCatalog> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    catalog_from_json(&text)
}

pub fn save_catalog_json(catalog: &FilterCatalog, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, catalog_to_json(catalog)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> SyntheticConfig {
        SyntheticConfig {
            n_classes: 3,
            objects_per_class: 2,
            replicates_per_object: 4,
            grid: WavelengthGrid::new(400.0, 2.0, 50).unwrap(),
            seed: 11,
            ..SyntheticConfig::default()
        }
    }

    #[test]
    fn two_row_file_loads() {
        let text = "object_id,class,400,401,402\n0,a,1,2,3\n1,b,0.5,0.25,0\n";
        let ds = read_dataset_csv(text.as_bytes(), &LoadOptions::default()).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.grid().count, 3);
        assert_eq!(ds.classes(), ["a", "b"]);
    }

    #[test]
    fn ragged_row_names_its_line() {
        let text = "object_id,class,400,401,402\n0,a,1,2,3\n1,b,0.5,0.25\n";
        match read_dataset_csv(text.as_bytes(), &LoadOptions::default()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_nan_negative_unknown_class_and_bad_grid() {
        let opts = LoadOptions::default();
        let nan = "object_id,class,400,401\n0,a,1,NaN\n1,b,1,1\n";
        assert!(matches!(read_dataset_csv(nan.as_bytes(), &opts), Err(Error::Parse { line: 2, .. })));

        let neg = "object_id,class,400,401\n0,a,1,-1\n1,b,1,1\n";
        assert!(matches!(read_dataset_csv(neg.as_bytes(), &opts), Err(Error::NegativeValue { line: 2, .. })));
        let lenient = LoadOptions {
            allow_negative: true,
            ..LoadOptions::default()
        };
        assert!(read_dataset_csv(neg.as_bytes(), &lenient).is_ok());

        let restricted = LoadOptions {
            classes: Some(vec!["a".into()]),
            ..LoadOptions::default()
        };
        let two = "object_id,class,400,401\n0,a,1,1\n1,b,1,1\n";
        assert!(matches!(read_dataset_csv(two.as_bytes(), &restricted), Err(Error::Parse { line: 3, .. })));

        let uneven = "object_id,class,400,401,403\n0,a,1,1,1\n1,b,1,1,1\n";
        assert!(matches!(read_dataset_csv(uneven.as_bytes(), &opts), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn object_in_two_classes_is_rejected() {
        let text = "object_id,class,400,401\n0,a,1,1\n0,b,1,1\n";
        assert!(matches!(
            read_dataset_csv(text.as_bytes(), &LoadOptions::default()),
            Err(Error::InvalidDataset(_))
        ));
    }

    #[test]
    fn csv_round_trip_is_byte_identical() {
        let ds = generate_synthetic(&small_config()).unwrap();
        let mut first = Vec::new();
        write_dataset_csv(&ds, &mut first).unwrap();
        let back = read_dataset_csv(first.as_slice(), &LoadOptions::default()).unwrap();
        assert_eq!(back, ds);
        let mut second = Vec::new();
        write_dataset_csv(&back, &mut second).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn fractional_grid_round_trips() {
        let grid = WavelengthGrid::new(316.0, 0.1, 30).unwrap();
        let cfg = SyntheticConfig {
            grid,
            ..small_config()
        };
        let ds = generate_synthetic(&cfg).unwrap();
        let mut buf = Vec::new();
        write_dataset_csv(&ds, &mut buf).unwrap();
        let back = read_dataset_csv(buf.as_slice(), &LoadOptions::default()).unwrap();
        assert_eq!(back.grid(), ds.grid());
    }

    #[test]
    fn representative_spectrum_is_replicate_mean() {
        let grid = WavelengthGrid::new(400.0, 1.0, 3).unwrap();
        let rec = |id, class: &str, v: f64| SampleRecord {
            object_id: id,
            class_label: class.into(),
            spectrum: Spectrum::constant(v, 3),
        };
        let ds = LabeledDataset::new(grid, vec![rec(4, "a", 1.0), rec(2, "b", 5.0), rec(4, "a", 3.0)]).unwrap();
        let reps = representative_spectra(&ds);
        assert_eq!(reps[0], (2, Spectrum::constant(5.0, 3)));
        assert_eq!(reps[1], (4, Spectrum::constant(2.0, 3)));
    }

    #[test]
    fn default_config_yields_5000_samples() {
        let ds = generate_synthetic(&SyntheticConfig::default()).unwrap();
        assert_eq!(ds.len(), 5000);
        assert_eq!(ds.classes().len(), 5);
        assert_eq!(ds.object_ids().len(), 50);
    }

    #[test]
    fn noiseless_replicates_are_identical() {
        let cfg = SyntheticConfig {
            noise_base: 0.0,
            noise_slope: 0.0,
            ..small_config()
        };
        let ds = generate_synthetic(&cfg).unwrap();
        for members in ds.objects().values() {
            let first = &ds.samples()[members[0]].spectrum;
            assert!(members.iter().all(|&i| &ds.samples()[i].spectrum == first));
        }
    }

    #[test]
    fn generation_is_seed_deterministic() {
        let a = generate_synthetic(&small_config()).unwrap();
        let b = generate_synthetic(&small_config()).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic(&SyntheticConfig {
            seed: 12,
            ..small_config()
        })
        .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn class_names_sort_numerically() {
        let names: Vec<String> = (0..12).map(|i| class_name(i, 12)).collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
    }

    #[test]
    fn catalog_endpoints() {
        let grid = WavelengthGrid::new(300.0, 1.0, 501).unwrap();
        let cat = generate_catalog(&grid, &[50.0], 500.0).unwrap();
        let centers: Vec<f64> = cat.filters().iter().map(|f| f.center_nm).collect();
        assert_eq!(centers, vec![325.0, 775.0]);
    }

    #[test]
    fn catalog_family_counts() {
        let grid = WavelengthGrid::new(316.0, 1.0, 476).unwrap();
        for step in [1.0, 5.0, 7.0, 25.0] {
            let cat = generate_catalog(&grid, &[10.0, 50.0], step).unwrap();
            // Lattice centers from start + b/2 up to end - b/2, plus end - b/2 itself when off-lattice.
            let count = |b: f64| {
                let span = (grid.end_nm() - grid.start_nm - b) as u64;
                let step = step as u64;
                (span / step + 1 + u64::from(span % step != 0)) as usize
            };
            assert_eq!(cat.len(), count(10.0) + count(50.0), "step {step}");
            for f in cat.filters() {
                assert!(f.lo_nm() >= grid.start_nm && f.hi_nm() <= grid.end_nm());
            }
        }
    }

    #[test]
    fn bandwidth_wider_than_grid_is_empty() {
        let grid = WavelengthGrid::new(300.0, 1.0, 101).unwrap();
        assert!(matches!(generate_catalog(&grid, &[150.0], 5.0), Err(Error::EmptyCatalog)));
    }

    #[test]
    fn catalog_json_round_trip_and_duplicates() {
        let grid = WavelengthGrid::new(316.0, 1.0, 476).unwrap();
        let cat = generate_catalog(&grid, &[10.0, 50.0], 25.0).unwrap();
        let text = catalog_to_json(&cat);
        assert_eq!(catalog_from_json(&text).unwrap(), cat);

        let one = r#"{"grid":{"start_nm":400,"step_nm":1,"count":10},"filters":[{"center_nm":405,"bandwidth_nm":4}]}"#;
        assert_eq!(catalog_from_json(one).unwrap().len(), 1);
        let dup = r#"{"grid":{"start_nm":400,"step_nm":1,"count":10},"filters":[{"center_nm":405,"bandwidth_nm":4},{"center_nm":405,"bandwidth_nm":4}]}"#;
        assert!(matches!(catalog_from_json(dup), Err(Error::DuplicateFilter { .. })));
    }
}
