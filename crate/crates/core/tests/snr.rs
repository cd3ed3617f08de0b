use bandsel::dataset::*;
use bandsel::report::SelectionDocument;
use bandsel::selection::{build_adjacency, fbs_select};
use bandsel::snr::*;
use bandsel::spectral::{build_filter_matrix, FilterCatalog};
use proptest::prelude::*;
use std::sync::OnceLock;

fn fixture() -> &'static (LabeledDataset, FilterCatalog, SnrProfile) {
    static CELL: OnceLock<(LabeledDataset, FilterCatalog, SnrProfile)> = OnceLock::new();
    CELL.get_or_init(|| {
        let ds = generate_synthetic(&SyntheticConfig {
            objects_per_class: 3,
            replicates_per_object: 20,
            ..SyntheticConfig::default()
        })
        .unwrap();
        let catalog = generate_catalog(ds.grid(), &[10.0, 50.0], 10.0).unwrap();
        let profile = snr_profile(&ds, &catalog).unwrap();
        (ds, catalog, profile)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn survivors_shrink_as_the_threshold_rises(a in 0.0f64..60.0, b in 0.0f64..60.0) {
        let (_, catalog, profile) = fixture();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let keep = |th| prune_bands(catalog, profile, th).map(|p| p.original_ids).unwrap_or_default();
        let loose = keep(lo);
        let tight = keep(hi);
        prop_assert!(tight.iter().all(|id| loose.contains(id)));
        for &id in &loose {
            prop_assert!(profile.per_filter[id].snr >= lo);
        }
    }

    #[test]
    fn directions_split_the_catalog(th in 1.0f64..60.0) {
        let (_, catalog, profile) = fixture();
        let below = prune_bands_directed(catalog, profile, th, SnrDirection::Below).map(|p| p.original_ids.len()).unwrap_or(0);
        let above = prune_bands_directed(catalog, profile, th, SnrDirection::Above).map(|p| p.original_ids.len()).unwrap_or(0);
        let equal = profile.per_filter.iter().filter(|b| b.snr == th).count();
        prop_assert_eq!(below + above, catalog.len() + equal);
    }
}

#[test]
fn zero_threshold_keeps_everything() {
    let (_, catalog, profile) = fixture();
    let p = prune_bands(catalog, profile, 0.0).unwrap();
    assert_eq!(p.original_ids, (0..catalog.len()).collect::<Vec<_>>());
    assert_eq!(&p.catalog, catalog);
}

#[test]
fn noisy_end_of_the_range_has_lower_snr() {
    let (_, catalog, profile) = fixture();
    let half = catalog.grid().start_nm + (catalog.grid().end_nm() - catalog.grid().start_nm) / 2.0;
    let mean = |upper: bool| {
        let v: Vec<f64> = catalog
            .filters()
            .iter()
            .filter(|f| (f.center_nm > half) == upper)
            .map(|f| profile.per_filter[f.id].snr)
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    assert!(mean(false) > 2.0 * mean(true));
}

#[test]
fn snr_csv_has_one_row_per_filter() {
    let (_, catalog, profile) = fixture();
    let mut out = Vec::new();
    write_snr_csv(profile, catalog, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text.lines().count(), catalog.len() + 1);
}

#[test]
fn selection_document_round_trips() {
    let (ds, catalog, _) = fixture();
    let reps: Vec<_> = representative_spectra(ds).into_iter().map(|(_, s)| s).collect();
    let graph = build_adjacency(&build_filter_matrix(catalog, &reps).unwrap()).unwrap();
    let result = fbs_select(&graph, 5).unwrap();
    let doc = SelectionDocument::from_result(&result, catalog, serde_json::json!({"n": 5}));
    let back = SelectionDocument::from_json(&doc.to_json().unwrap()).unwrap();
    assert_eq!(back, doc);
    assert_eq!(back.selection(catalog).unwrap(), result.selection);

    let mut tampered = doc.clone();
    tampered.filters[0].center_nm += 1.0;
    assert!(tampered.selection(catalog).is_err());
    tampered.filters.clear();
    assert!(matches!(tampered.selection(catalog), Err(bandsel::Error::EmptySelection)));
}
