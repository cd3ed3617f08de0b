use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid wavelength grid: {0}")]
    InvalidGrid(String),

    #[error("filter {id} passband [{lo_nm}, {hi_nm}) exits the grid range")]
    PassbandOutOfRange { id: usize, lo_nm: f64, hi_nm: f64 },

    #[error("filter {id} passband covers no grid sample")]
    EmptyPassband { id: usize },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("filter {filter_id} responds zero to every object")]
    ZeroRow { filter_id: usize },

    #[error("at least {required} objects are needed, got {actual}")]
    TooFewObjects { required: usize, actual: usize },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: u64, reason: String },

    #[error("wavelength header is not a uniform ascending grid: {0}")]
    GridMismatch(String),

    #[error("negative value {value} at line {line}")]
    NegativeValue { line: u64, value: f64 },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no feasible filter center for the requested bandwidths")]
    EmptyCatalog,

    #[error("duplicate filter (center {center_nm} nm, bandwidth {bandwidth_nm} nm)")]
    DuplicateFilter { center_nm: f64, bandwidth_nm: f64 },

    #[error("spectral angle undefined for a zero vector")]
    ZeroVector,

    #[error("invalid selection size {n} for {available} available filters")]
    InvalidN { n: usize, available: usize },

    #[error("{combinations} combinations exceed the cap of {cap}")]
    TooManyCombinations { combinations: u128, cap: u128 },

    #[error("at least 2 samples are needed, got {0}")]
    TooFewSamples(usize),

    #[error("SNR undefined: zero mean and zero deviation")]
    UndefinedSnr,

    #[error("object {object_id} has {count} replicates, at least 2 are needed")]
    TooFewReplicates { object_id: u64, count: usize },

    #[error("SNR threshold {snr_th} prunes every band")]
    AllBandsPruned { snr_th: f64 },

    #[error("{survivors} bands survive pruning, {required} are needed")]
    NotEnoughSurvivors { survivors: usize, required: usize },

    #[error("feature matrix has no columns or no rows")]
    EmptyFeatures,

    #[error("model trained on {expected} features, got {actual}")]
    FeatureCountMismatch { expected: usize, actual: usize },

    #[error("class {class} has {count} samples, fewer than {k} folds")]
    TooFewSamplesPerClass { class: usize, count: usize, k: usize },

    #[error("empty selection")]
    EmptySelection,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable snake_case name of the variant.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "invalid_grid",
            Error::PassbandOutOfRange { .. } => "passband_out_of_range",
            Error::EmptyPassband { .. } => "empty_passband",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::ZeroRow { .. } => "zero_row",
            Error::TooFewObjects { .. } => "too_few_objects",
            Error::Parse { .. } => "parse_error",
            Error::GridMismatch(_) => "grid_mismatch",
            Error::NegativeValue { .. } => "negative_value",
            Error::InvalidDataset(_) => "invalid_dataset",
            Error::InvalidConfig(_) => "invalid_config",
            Error::EmptyCatalog => "empty_catalog",
            Error::DuplicateFilter { .. } => "duplicate_filter",
            Error::ZeroVector => "zero_vector",
            Error::InvalidN { .. } => "invalid_n",
            Error::TooManyCombinations { .. } => "too_many_combinations",
            Error::TooFewSamples(_) => "too_few_samples",
            Error::UndefinedSnr => "undefined_snr",
            Error::TooFewReplicates { .. } => "too_few_replicates",
            Error::AllBandsPruned { .. } => "all_bands_pruned",
            Error::NotEnoughSurvivors { .. } => "not_enough_survivors",
            Error::EmptyFeatures => "empty_features",
            Error::FeatureCountMismatch { .. } => "feature_count_mismatch",
            Error::TooFewSamplesPerClass { .. } => "too_few_samples_per_class",
            Error::EmptySelection => "empty_selection",
            Error::Io { .. } => "io_error",
            Error::Json(_) => "json_error",
            Error::Csv(_) => "csv_error",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
