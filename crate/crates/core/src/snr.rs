//! Per-band signal-to-noise estimation and threshold pruning of the catalog.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::response::ResponseTable;
use crate::spectral::FilterCatalog;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSnr {
    pub filter_id: usize,
    pub mu: f64,
    pub sigma: f64,
    pub m: usize,
    pub snr: f64,
}

/// Mean over standard deviation with population (1/M) statistics.
pub fn band_snr(values: &[f64]) -> Result<BandSnr> {
    let m = values.len();
    if m < 2 {
        return Err(Error::TooFewSamples(m));
    }
    let mu = values.iter().sum::<f64>() / m as f64;
    let sigma = (values.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / m as f64).sqrt();
    let snr = if sigma > 0.0 {
        mu / sigma
    } else if mu > 0.0 {
        f64::INFINITY
    } else if mu < 0.0 {
        f64::NEG_INFINITY
    } else {
        return Err(Error::UndefinedSnr);
    };
    Ok(BandSnr {
        filter_id: 0,
        mu,
        sigma,
        m,
        snr,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnrAggregation {
    MedianOverObjects,
}

/// One entry per catalog filter. `snr`, `mu` and `sigma` are each the median
/// of the per-object replicate statistics; `m` is the smallest replicate count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrProfile {
    pub per_filter: Vec<BandSnr>,
    pub aggregation: SnrAggregation,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        let (a, b) = (values[n / 2 - 1], values[n / 2]);
        if a == b {
            a
        } else {
            (a + b) / 2.0
        }
    }
}

pub fn snr_profile(dataset: &LabeledDataset, catalog: &FilterCatalog) -> Result<SnrProfile> {
    let table = ResponseTable::build(dataset, catalog)?;
    snr_profile_from_table(&table)
}

pub fn snr_profile_from_table(table: &ResponseTable) -> Result<SnrProfile> {
    let groups = table.object_groups();
    for (id, members) in &groups {
        if members.len() < 2 {
            return Err(Error::TooFewReplicates {
                object_id: *id,
                count: members.len(),
            });
        }
    }
    let m = groups.values().map(Vec::len).min().unwrap_or(0);
    let per_filter = (0..table.n_filters())
        .map(|k| {
            let column = table.responses().column(k);
            let mut snrs = Vec::with_capacity(groups.len());
            let mut mus = Vec::with_capacity(groups.len());
            let mut sigmas = Vec::with_capacity(groups.len());
            for members in groups.values() {
                let values: Vec<f64> = members.iter().map(|&i| column[i]).collect();
                match band_snr(&values) {
                    Ok(b) => {
                        snrs.push(b.snr);
                        mus.push(b.mu);
                        sigmas.push(b.sigma);
                    }
                    // A band dark for this object carries no signal.
                    Err(Error::UndefinedSnr) => {
                        snrs.push(0.0);
                        mus.push(0.0);
                        sigmas.push(0.0);
                    }
                    Err(e) => return Err(e),
                }
            }
            Ok(BandSnr {
                filter_id: k,
                mu: median(&mut mus),
                sigma: median(&mut sigmas),
                m,
                snr: median(&mut snrs),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SnrProfile {
        per_filter,
        aggregation: SnrAggregation::MedianOverObjects,
    })
}

/// Which side of the threshold gets removed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SnrDirection {
    /// Remove bands whose SNR falls below the threshold.
    #[default]
    Below,
    /// Remove bands whose SNR rises above the threshold.
    Above,
}

/// Surviving filters, renumbered, with their ids in the source catalog.
#[derive(Debug, Clone, PartialEq)]
pub struct PrunedCatalog {
    pub catalog: FilterCatalog,
    pub original_ids: Vec<usize>,
}

pub fn prune_bands(catalog: &FilterCatalog, profile: &SnrProfile, snr_th: f64) -> Result<PrunedCatalog> {
    prune_bands_directed(catalog, profile, snr_th, SnrDirection::Below)
}

pub fn prune_bands_directed(
    catalog: &FilterCatalog,
    profile: &SnrProfile,
    snr_th: f64,
    direction: SnrDirection,
) -> Result<PrunedCatalog> {
    if snr_th.is_nan() || snr_th < 0.0 {
        return Err(Error::InvalidConfig(format!("SNR threshold {snr_th} must be non-negative")));
    }
    if profile.per_filter.len() != catalog.len() {
        return Err(Error::LengthMismatch {
            expected: catalog.len(),
            actual: profile.per_filter.len(),
        });
    }
    let original_ids: Vec<usize> = profile
        .per_filter
        .iter()
        .filter(|b| match direction {
            SnrDirection::Below => b.snr >= snr_th,
            SnrDirection::Above => b.snr <= snr_th,
        })
        .map(|b| b.filter_id)
        .collect();
    if original_ids.is_empty() {
        return Err(Error::AllBandsPruned { snr_th });
    }
    Ok(PrunedCatalog {
        catalog: catalog.subset(&original_ids)?,
        original_ids,
    })
}

/// CSV with columns `filter_id,center_nm,bandwidth_nm,mu,sigma,snr`.
pub fn write_snr_csv<W: Write>(profile: &SnrProfile, catalog: &FilterCatalog, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["filter_id", "center_nm", "bandwidth_nm", "mu", "sigma", "snr"])?;
    for b in &profile.per_filter {
        let f = catalog.get(b.filter_id).ok_or(Error::LengthMismatch {
            expected: profile.per_filter.len(),
            actual: catalog.len(),
        })?;
        wtr.write_record([
            b.filter_id.to_string(),
            f.center_nm.to_string(),
            f.bandwidth_nm.to_string(),
            b.mu.to_string(),
            b.sigma.to_string(),
            b.snr.to_string(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::SampleRecord;
    use crate::spectral::{Spectrum, WavelengthGrid};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn two_point_snr() {
        let b = band_snr(&[1.0, 3.0]).unwrap();
        assert_eq!((b.mu, b.sigma, b.snr, b.m), (2.0, 1.0, 2.0, 2));
    }

    #[test]
    fn constant_signal_has_infinite_snr() {
        assert_eq!(band_snr(&[2.0, 2.0, 2.0]).unwrap().snr, f64::INFINITY);
        assert!(matches!(band_snr(&[0.0, 0.0]), Err(Error::UndefinedSnr)));
        assert!(matches!(band_snr(&[1.0]), Err(Error::TooFewSamples(1))));
    }

    #[test]
    fn snr_of_gaussian_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = Normal::new(10.0, 2.0).unwrap();
        let xs: Vec<f64> = (0..10_000).map(|_| d.sample(&mut rng)).collect();
        let b = band_snr(&xs).unwrap();
        assert!((b.snr - 5.0).abs() / 5.0 < 0.05, "snr {}", b.snr);
    }

    /// Two objects, two single-sample filters; filter 0 reads a clean
    /// channel, filter 1 a noisy one.
    fn two_band_dataset(noise: [f64; 2]) -> (LabeledDataset, FilterCatalog) {
        let grid = WavelengthGrid::new(400.0, 1.0, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let unit = Normal::new(0.0, 1.0).unwrap();
        let mut samples = Vec::new();
        for (object_id, class) in [(0u64, "a"), (1, "b"), (2, "c")] {
            for _ in 0..200 {
                let values = (0..2).map(|k| 10.0 + noise[k] * unit.sample(&mut rng)).collect();
                samples.push(SampleRecord {
                    object_id,
                    class_label: class.into(),
                    spectrum: Spectrum::new(values),
                });
            }
        }
        let ds = LabeledDataset::new(grid, samples).unwrap();
        let cat = FilterCatalog::new(grid, &[(400.5, 1.0), (401.5, 1.0)]).unwrap();
        (ds, cat)
    }

    #[test]
    fn threshold_between_bands_keeps_the_cleaner_one() {
        let (ds, cat) = two_band_dataset([0.5, 2.0]);
        let profile = snr_profile(&ds, &cat).unwrap();
        let (s0, s1) = (profile.per_filter[0].snr, profile.per_filter[1].snr);
        assert!(s0 > s1);
        let pruned = prune_bands(&cat, &profile, (s0 + s1) / 2.0).unwrap();
        assert_eq!(pruned.original_ids, vec![0]);
        assert_eq!(pruned.catalog.len(), 1);
        let kept_high = prune_bands_directed(&cat, &profile, (s0 + s1) / 2.0, SnrDirection::Above).unwrap();
        assert_eq!(kept_high.original_ids, vec![1]);
    }

    #[test]
    fn zero_and_infinite_thresholds() {
        let (ds, cat) = two_band_dataset([0.5, 2.0]);
        let profile = snr_profile(&ds, &cat).unwrap();
        assert_eq!(prune_bands(&cat, &profile, 0.0).unwrap().catalog, cat);
        assert!(matches!(
            prune_bands(&cat, &profile, f64::INFINITY),
            Err(Error::AllBandsPruned { .. })
        ));
        assert!(prune_bands(&cat, &profile, -1.0).is_err());
    }

    #[test]
    fn noiseless_replicates_have_infinite_snr() {
        let (ds, cat) = two_band_dataset([0.0, 0.0]);
        let profile = snr_profile(&ds, &cat).unwrap();
        assert!(profile.per_filter.iter().all(|b| b.snr == f64::INFINITY));
    }

    #[test]
    fn median_ignores_one_noisy_object() {
        let grid = WavelengthGrid::new(400.0, 1.0, 2).unwrap();
        let cat = FilterCatalog::new(grid, &[(400.5, 1.0)]).unwrap();
        let build = |noisy_factor: f64| {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let unit = Normal::new(0.0, 1.0).unwrap();
            let mut samples = Vec::new();
            for object_id in 0..5u64 {
                let s = if object_id == 4 { noisy_factor } else { 1.0 };
                for _ in 0..50 {
                    samples.push(SampleRecord {
                        object_id,
                        class_label: format!("c{}", object_id % 2),
                        spectrum: Spectrum::new(vec![10.0 + s * unit.sample(&mut rng), 0.0]),
                    });
                }
            }
            LabeledDataset::new(grid, samples).unwrap()
        };
        let doubled = snr_profile(&build(2.0), &cat).unwrap().per_filter[0].snr;
        let tripled = snr_profile(&build(3.0), &cat).unwrap().per_filter[0].snr;
        // The noisy object ranks lowest either way, so the median (third of
        // five) is the second lowest of the four clean objects both times.
        assert_eq!(doubled, tripled);
        let clean = snr_profile(&build(1.0), &cat).unwrap().per_filter[0].snr;
        assert!((doubled - clean).abs() / clean < 0.1);
    }

    #[test]
    fn single_replicates_are_rejected() {
        let grid = WavelengthGrid::new(400.0, 1.0, 2).unwrap();
        let cat = FilterCatalog::new(grid, &[(400.5, 1.0)]).unwrap();
        let rec = |id, c: &str| SampleRecord {
            object_id: id,
            class_label: c.into(),
            spectrum: Spectrum::constant(1.0, 2),
        };
        let ds = LabeledDataset::new(grid, vec![rec(0, "a"), rec(1, "b"), rec(1, "b")]).unwrap();
        assert!(matches!(snr_profile(&ds, &cat), Err(Error::TooFewReplicates { object_id: 0, .. })));
    }

    #[test]
    fn csv_export_columns() {
        let (ds, cat) = two_band_dataset([0.5, 2.0]);
        let profile = snr_profile(&ds, &cat).unwrap();
        let mut buf = Vec::new();
        write_snr_csv(&profile, &cat, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("filter_id,center_nm,bandwidth_nm,mu,sigma,snr\n0,400.5,1,"));
        assert_eq!(text.lines().count(), 3);
    }
}
