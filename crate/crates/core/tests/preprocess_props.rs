use anura_core::ingest::{read_csv, write_csv, SchemaConfig};
use anura_core::preprocess::{
    column_moments, fit_apply_minmax, fit_apply_zscore, remove_outliers, OutlierRule, StdConvention,
};
use anura_core::stats::{correlation_matrix, describe, pearson};
use anura_core::{DataForm, Dataset};
use ndarray::{Array1, Array2, Axis};
use proptest::prelude::*;

fn dataset(x: Array2<f64>, labels: Vec<usize>) -> Dataset {
    let classes = labels.iter().max().map_or(1, |m| m + 1);
    let names = (0..x.ncols()).map(|j| format!("MFCCs_{}", j + 1)).collect();
    let label_names = (0..classes).map(|c| format!("S{c}")).collect();
    Dataset::new(x, names, labels, label_names, DataForm::Raw).unwrap()
}

fn matrix_strategy(rows: std::ops::Range<usize>, d: usize) -> impl Strategy<Value = Array2<f64>> {
    rows.prop_flat_map(move |n| {
        proptest::collection::vec(-100.0f64..100.0, n * d)
            .prop_map(move |v| Array2::from_shape_vec((n, d), v).unwrap())
    })
}

fn non_constant(x: &Array2<f64>, j: usize) -> bool {
    let col = x.column(j);
    let lo = col.fold(f64::INFINITY, |a, &b| a.min(b));
    let hi = col.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    hi - lo > 1e-6
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn zscore_on_own_training_data_is_standard(x in matrix_strategy(2..60, 4)) {
        let ds = dataset(x.clone(), vec![0; x.nrows()]);
        let (_, out) = fit_apply_zscore(&ds, &ds, StdConvention::Population).unwrap();
        let (mean, std) = column_moments(out.features.view(), StdConvention::Population);
        for j in 0..4 {
            if non_constant(&x, j) {
                prop_assert!(mean[j].abs() < 1e-9);
                prop_assert!((std[j] * std[j] - 1.0).abs() < 1e-9);
            } else {
                prop_assert!(out.features.column(j).iter().all(|&v| v == 0.0));
            }
        }
        prop_assert_eq!(out.provenance, DataForm::Stand);
    }

    #[test]
    fn minmax_on_own_training_data_spans_unit_interval(x in matrix_strategy(2..60, 4)) {
        let ds = dataset(x.clone(), vec![0; x.nrows()]);
        let (_, out) = fit_apply_minmax(&ds, &ds).unwrap();
        for j in 0..4 {
            let col = out.features.column(j);
            let lo = col.fold(f64::INFINITY, |a, &b| a.min(b));
            let hi = col.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            if x.column(j).iter().any(|&v| v != x[[0, j]]) {
                prop_assert_eq!(lo, 0.0);
                prop_assert_eq!(hi, 1.0);
            }
        }
        prop_assert_eq!(out.provenance, DataForm::Norm);
    }

    #[test]
    fn outlier_removal_commutes_with_row_permutation(
        x in matrix_strategy(5..80, 3),
        k in 0.5f64..3.5,
        stride in 1usize..50,
    ) {
        let n = x.nrows();
        // Any stride coprime to n gives a permutation.
        let stride = (stride..).find(|s| gcd(*s, n) == 1).unwrap();
        let order: Vec<usize> = (0..n).map(|i| (i * stride + 3) % n).collect();
        let ds = dataset(x.clone(), vec![0; n]);
        let permuted = dataset(x.select(Axis(0), &order), vec![0; n]);
        let rule = OutlierRule { k_sigma: k, ..OutlierRule::default() };
        let a = remove_outliers(&ds, &rule).unwrap();
        let b = remove_outliers(&permuted, &rule).unwrap();
        let mut mapped: Vec<usize> = b.removed_rows.iter().map(|&r| order[r]).collect();
        mapped.sort_unstable();
        prop_assert_eq!(mapped, a.removed_rows);
    }

    #[test]
    fn removal_count_is_monotone_in_k(x in matrix_strategy(5..80, 3), k1 in 0.3f64..4.0, dk in 0.0f64..3.0) {
        let ds = dataset(x.clone(), vec![0; x.nrows()]);
        let tight = remove_outliers(&ds, &OutlierRule { k_sigma: k1, ..OutlierRule::default() }).unwrap();
        let loose = remove_outliers(&ds, &OutlierRule { k_sigma: k1 + dk, ..OutlierRule::default() }).unwrap();
        prop_assert!(loose.removed_count <= tight.removed_count);
        prop_assert!(loose.removed_rows.iter().all(|r| tight.removed_rows.contains(r)));
        prop_assert_eq!(tight.dataset.n_rows() + tight.removed_count, x.nrows());
    }

    #[test]
    fn correlation_is_affine_invariant(
        x in matrix_strategy(3..60, 2),
        a in prop_oneof![0.01f64..100.0, -100.0f64..-0.01],
        b in -1000.0f64..1000.0,
    ) {
        prop_assume!(non_constant(&x, 0) && non_constant(&x, 1));
        let base = pearson(x.column(0), x.column(1));
        let moved: Array1<f64> = x.column(0).mapv(|v| a * v + b);
        let r = pearson(moved.view(), x.column(1));
        let expected = if a > 0.0 { base } else { -base };
        prop_assert!((r - expected).abs() < 1e-10, "{} vs {}", r, expected);
    }

    #[test]
    fn correlation_matrix_is_symmetric_and_bounded(x in matrix_strategy(2..40, 5)) {
        let c = correlation_matrix(&dataset(x.clone(), vec![0; x.nrows()])).unwrap();
        for i in 0..5 {
            prop_assert_eq!(c.values[[i, i]], 1.0);
            for j in 0..5 {
                prop_assert!((c.values[[i, j]] - c.values[[j, i]]).abs() <= 1e-12);
                prop_assert!(c.values[[i, j]].abs() <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn describe_quartiles_are_ordered(x in matrix_strategy(1..50, 3)) {
        for s in describe(&dataset(x.clone(), vec![0; x.nrows()])).unwrap() {
            prop_assert!(s.min <= s.q1 && s.q1 <= s.median && s.median <= s.q3 && s.q3 <= s.max);
            prop_assert_eq!(s.count, x.nrows());
        }
    }

    #[test]
    fn csv_round_trip_is_exact(
        x in matrix_strategy(1..30, 3),
        raw_labels in proptest::collection::vec(0usize..4, 30),
    ) {
        let n = x.nrows();
        // Name classes in first-appearance order so the reload encodes them identically.
        let mut names: Vec<usize> = Vec::new();
        let labels: Vec<usize> = raw_labels[..n]
            .iter()
            .map(|l| match names.iter().position(|m| m == l) {
                Some(i) => i,
                None => {
                    names.push(*l);
                    names.len() - 1
                }
            })
            .collect();
        let label_names = names.iter().map(|l| format!("Species {l}")).collect();
        let cols = vec!["MFCCs_1".into(), "MFCCs_2".into(), "MFCCs_3".into()];
        let ds = Dataset::new(x, cols, labels, label_names, DataForm::Raw).unwrap();
        let mut buf = Vec::new();
        write_csv(&ds, &mut buf, "Species").unwrap();
        let back = read_csv(buf.as_slice(), &SchemaConfig::default()).unwrap();
        prop_assert_eq!(back, ds);
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd(b, a % b) }
}

#[test]
fn huge_k_removes_nothing() {
    let x = Array2::from_shape_fn((50, 3), |(i, j)| ((i * 13 + j * 7) % 17) as f64 - 8.0);
    let out = remove_outliers(&dataset(x, vec![0; 50]), &OutlierRule { k_sigma: 100.0, ..OutlierRule::default() })
        .unwrap();
    assert_eq!(out.removed_count, 0);
}
