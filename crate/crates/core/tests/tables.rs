use bbglm_core::ingest::{impute_missing, parse_arff, parse_csv, write_arff, write_csv};
use bbglm_core::{ImputeStrategy, RawTable};
use proptest::prelude::*;

fn table(cols: usize, rows: Vec<Vec<Option<f64>>>) -> RawTable {
    let names = (0..cols).map(|j| format!("c{j}")).collect();
    RawTable::new(names, rows).unwrap()
}

fn cell() -> impl Strategy<Value = Option<f64>> {
    prop_oneof![
        1 => Just(None),
        6 => (-1e6f64..1e6).prop_map(Some),
        1 => (-1e-6f64..1e-6).prop_map(Some),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn arff_round_trip(rows in prop::collection::vec(prop::collection::vec(cell(), 4), 1..30)) {
        let t = table(4, rows);
        let back = parse_arff(&write_arff(&t, "rt", None)).unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn csv_round_trip(rows in prop::collection::vec(prop::collection::vec(cell(), 3), 1..30)) {
        let t = table(3, rows);
        let back = parse_csv(&write_csv(&t), true).unwrap();
        prop_assert_eq!(back, t);
    }

    // Imputation leaves observed cells alone and fills every gap.
    #[test]
    fn imputation_only_touches_missing(rows in prop::collection::vec(prop::collection::vec(cell(), 3), 2..30)) {
        let mut rows = rows;
        rows[0] = vec![Some(1.0), Some(2.0), Some(3.0)];
        let t = table(3, rows);
        let (out, stats) = impute_missing(&t, ImputeStrategy::Median, None).unwrap();
        prop_assert_eq!(out.missing_count(), 0);
        prop_assert_eq!(stats.n_cells_imputed, t.missing_count());
        for i in 0..t.n_rows() {
            for j in 0..3 {
                if let Some(v) = t.get(i, j) {
                    prop_assert_eq!(out.get(i, j), Some(v));
                }
            }
        }
    }
}

#[test]
fn median_and_mean_fill_values() {
    let t = table(
        2,
        vec![
            vec![Some(1.0), None],
            vec![Some(4.0), Some(10.0)],
            vec![None, Some(-2.0)],
            vec![Some(2.0), Some(7.0)],
            vec![Some(100.0), None],
        ],
    );
    let (med, stats) = impute_missing(&t, ImputeStrategy::Median, None).unwrap();
    assert_eq!(stats.per_column_fill, vec![Some(3.0), Some(7.0)]);
    assert_eq!(med.get(2, 0), Some(3.0));
    assert_eq!(med.get(0, 1), Some(7.0));
    assert_eq!(stats.n_cells_imputed, 3);

    let (mean, stats) = impute_missing(&t, ImputeStrategy::Mean, None).unwrap();
    assert_eq!(stats.per_column_fill, vec![Some(26.75), Some(5.0)]);
    assert_eq!(mean.get(4, 1), Some(5.0));

    let (dropped, stats) = impute_missing(&t, ImputeStrategy::DropRows, None).unwrap();
    assert_eq!(dropped.n_rows(), 2);
    assert_eq!(stats.n_rows_dropped, 3);
}

#[test]
fn test_split_reuses_training_fill() {
    let train = table(1, vec![vec![Some(1.0)], vec![Some(3.0)], vec![None]]);
    let test = table(1, vec![vec![None], vec![Some(50.0)]]);
    let (_, stats) = impute_missing(&train, ImputeStrategy::Median, None).unwrap();
    let (out, _) = impute_missing(&test, ImputeStrategy::Mean, Some(&stats)).unwrap();
    assert_eq!(out.get(0, 0), Some(2.0));
}
