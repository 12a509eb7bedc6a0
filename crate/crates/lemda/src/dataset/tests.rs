use std::io::Write;

use proptest::prelude::*;

use super::*;
use crate::Error;

fn write_temp(content: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(content.as_bytes()).unwrap();
    f
}

fn three_col_schema() -> Schema {
    Schema::parse("Flgs=categorical\nRate=numeric\nLabel=label\n").unwrap()
}

#[test]
fn load_minimal_csv() {
    let f = write_temp("Flgs,Rate,Label\ne,1.5,0\ne d,2.0,1\ne,0.25,0\n");
    let d = load_csv(f.path(), &three_col_schema(), &LabelMap::default()).unwrap();
    assert_eq!(d.n_rows(), 3);
    assert_eq!(d.labels(), &[0, 1, 0]);
    let flgs = d.column("Flgs").unwrap();
    assert_eq!(flgs.code_slice().unwrap(), &[0, 1, 0]);
    assert_eq!(flgs.decode(1), Some("e d"));
    assert_eq!(d.column("Rate").unwrap().numeric_slice().unwrap(), &[1.5, 2.0, 0.25]);
}

#[test]
fn header_order_insensitive() {
    let f = write_temp("Label,Rate,Flgs\n0,1.5,e\n1,2.0,d\n");
    let d = load_csv(f.path(), &three_col_schema(), &LabelMap::default()).unwrap();
    assert_eq!(d.feature_names(), vec!["Flgs", "Rate"]);
    assert_eq!(d.labels(), &[0, 1]);
}

#[test]
fn missing_column_names_it() {
    let f = write_temp("Flgs,Label\ne,0\n");
    let err = load_csv(f.path(), &three_col_schema(), &LabelMap::default()).unwrap_err();
    match err {
        Error::Schema(msg) => assert!(msg.contains("Rate"), "{msg}"),
        other => panic!("expected schema error, got {other:?}"),
    }
}

#[test]
fn undeclared_column_rejected() {
    let f = write_temp("Flgs,Rate,Extra,Label\ne,1.0,x,0\n");
    let err = load_csv(f.path(), &three_col_schema(), &LabelMap::default()).unwrap_err();
    match err {
        Error::Schema(msg) => assert!(msg.contains("Extra"), "{msg}"),
        other => panic!("expected schema error, got {other:?}"),
    }
}

#[test]
fn bad_numeric_cell_reports_row_and_column() {
    let f = write_temp("Flgs,Rate,Label\ne,1.0,0\ne,oops,1\n");
    let err = load_csv(f.path(), &three_col_schema(), &LabelMap::default()).unwrap_err();
    match err {
        Error::Parse { row, column, .. } => {
            assert_eq!(row, 2);
            assert_eq!(column, "Rate");
        }
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn label_mapping_uses_configured_strings() {
    let schema = Schema::parse("Rate=numeric\nLabel=label\n").unwrap();
    let f = write_temp("Rate,Label\n1,normal\n2,attack\n3,normal\n4,attack\n5,normal\n");
    let d = load_csv(f.path(), &schema, &LabelMap::new("normal", "attack")).unwrap();
    assert_eq!(d.labels(), &[0, 1, 0, 1, 0]);

    let err = load_csv(f.path(), &schema, &LabelMap::default()).unwrap_err();
    assert!(matches!(err, Error::Label(_)));
}

#[test]
fn schema_requires_exactly_one_label() {
    assert!(Schema::parse("a=numeric\nb=numeric\n").is_err());
    assert!(Schema::parse("a=label\nb=label\n").is_err());
    assert!(Schema::parse("a=label\na=numeric\n").is_err());
}

#[test]
fn drop_identifiers_targets_only_identifier_kind() {
    let d = Dataset::builder()
        .identifier("SrcIP", vec!["10.0.0.1", "10.0.0.2"])
        .numeric("Rate", vec![1.0, 2.0])
        .labels("Label", vec![0, 1])
        .build()
        .unwrap();
    let dropped = d.drop_identifiers();
    assert_eq!(dropped.columns().len(), 1);
    assert_eq!(dropped.columns()[0].name, "Rate");
    assert_eq!(dropped.labels(), d.labels());

    // No identifiers: feature set unchanged.
    let plain = Dataset::builder()
        .numeric("Rate", vec![1.0])
        .labels("Label", vec![0])
        .build()
        .unwrap();
    assert_eq!(plain.drop_identifiers(), plain);
}

#[test]
fn wustl_shaped_fixture_keeps_35_features() {
    // 44 columns: 8 identifier-ish + 1 label leaves 35 model features.
    let mut b = Dataset::builder();
    for i in 0..8 {
        b = b.identifier(format!("id{i}"), vec!["x", "y"]);
    }
    b = b.categorical("Flgs", vec!["e", "d"]);
    for i in 0..34 {
        b = b.numeric(format!("f{i}"), vec![0.0, 1.0]);
    }
    let d = b.labels("Label", vec![0, 1]).build().unwrap();
    assert_eq!(d.columns().len() + 1, 44);
    let base = d.drop_identifiers();
    assert_eq!(base.feature_columns().len(), 35);
}

#[test]
fn encode_interns_in_first_seen_order() {
    let d = Dataset::builder()
        .categorical("proto", vec!["TCP", "UDP", "TCP"])
        .labels("Label", vec![0, 0, 1])
        .build()
        .unwrap();
    let e = d.encode_categories();
    let col = e.column("proto").unwrap();
    assert_eq!(col.code_slice().unwrap(), &[0, 1, 0]);
    assert_eq!(col.code_table().unwrap(), &["TCP".to_string(), "UDP".to_string()]);
}

#[test]
fn encode_is_noop_on_numeric_and_idempotent() {
    let d = Dataset::builder()
        .numeric("a", vec![1.0, 2.0])
        .categorical("c", vec!["x", "y"])
        .labels("Label", vec![0, 1])
        .build()
        .unwrap();
    let once = d.encode_categories();
    assert_eq!(once.encode_categories(), once);

    let numeric_only = Dataset::builder()
        .numeric("a", vec![1.0, 2.0])
        .labels("Label", vec![0, 1])
        .build()
        .unwrap();
    assert_eq!(numeric_only.encode_categories(), numeric_only);
}

#[test]
fn encode_round_trips_strings() {
    let values = vec!["a", "b", "c", "a", "b", "c", "a", "a", "b", "c"];
    let d = Dataset::builder()
        .categorical("c", values.clone())
        .labels("Label", vec![0; 10])
        .build()
        .unwrap();
    let e = d.encode_categories();
    let col = e.column("c").unwrap();
    let decoded: Vec<&str> = (0..10).map(|r| col.decode(r).unwrap()).collect();
    assert_eq!(decoded, values);
    let codes = col.code_slice().unwrap();
    assert!(codes.iter().all(|&c| c <= 2));
}

#[test]
fn ten_rows_ten_folds() {
    let d = Dataset::builder()
        .numeric("x", (0..10).map(|i| i as f64).collect())
        .labels("Label", vec![0, 1, 0, 1, 0, 1, 0, 1, 0, 1])
        .build()
        .unwrap();
    let plan = split_folds(&d, 10, 3).unwrap();
    for fold in 0..10 {
        assert_eq!(plan.test_rows(fold).len(), 1);
    }
}

#[test]
fn stratified_attack_counts_are_even() {
    let labels: Vec<u8> = (0..100).map(|i| u8::from(i < 20)).collect();
    let d = Dataset::builder()
        .numeric("x", (0..100).map(|i| i as f64).collect())
        .labels("Label", labels)
        .build()
        .unwrap();
    let plan = split_folds(&d, 10, 7).unwrap();
    for fold in 0..10 {
        let rows = plan.test_rows(fold);
        assert_eq!(rows.len(), 10);
        let attacks = rows.iter().filter(|&&r| d.labels()[r] == 1).count();
        assert_eq!(attacks, 2);
    }
}

#[test]
fn fold_plans_are_deterministic() {
    let labels: Vec<u8> = (0..57).map(|i| u8::from(i % 3 == 0)).collect();
    let d = Dataset::builder()
        .numeric("x", (0..57).map(|i| i as f64).collect())
        .labels("Label", labels)
        .build()
        .unwrap();
    assert_eq!(split_folds(&d, 5, 11).unwrap(), split_folds(&d, 5, 11).unwrap());
    assert_ne!(
        split_folds(&d, 5, 11).unwrap().assignments(),
        split_folds(&d, 5, 12).unwrap().assignments()
    );
}

#[test]
fn k_larger_than_rows_is_rejected() {
    let d = Dataset::builder()
        .numeric("x", vec![1.0, 2.0])
        .labels("Label", vec![0, 1])
        .build()
        .unwrap();
    assert!(matches!(split_folds(&d, 3, 0), Err(Error::Argument(_))));
    assert!(matches!(split_folds(&d, 1, 0), Err(Error::Argument(_))));
}

#[test]
fn block_folds_are_contiguous() {
    let d = Dataset::builder()
        .numeric("x", (0..23).map(|i| i as f64).collect())
        .labels("Label", (0..23).map(|i| u8::from(i > 15)).collect())
        .build()
        .unwrap();
    let plan = split_folds_blocks(&d, 4, 0).unwrap();
    let a = plan.assignments();
    assert!(a.windows(2).all(|w| w[0] <= w[1]));
    for fold in 0..4 {
        let size = plan.test_rows(fold).len();
        assert!((5..=6).contains(&size), "fold {fold} has {size} rows");
    }
}

#[test]
fn csv_round_trip_preserves_dataset() {
    let d = Dataset::builder()
        .categorical("proto", vec!["TCP", "UDP", "ICMP", "TCP"])
        .numeric("rate", vec![1.25, 0.5, 3.0, 2.0])
        .labels("label", vec![0, 1, 1, 0])
        .build()
        .unwrap()
        .encode_categories();
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("d.csv");
    write_csv(&d, &csv_path, &LabelMap::default()).unwrap();
    let loaded = load_csv(&csv_path, &d.schema(), &LabelMap::default()).unwrap();
    assert_eq!(loaded, d);
}

#[test]
fn infer_schema_sniffs_kinds() {
    let f = write_temp("id,proto,rate,Label\na1,TCP,1.0,0\na2,UDP,2.5,1\n");
    let schema = infer_schema(f.path(), "Label", &["id"], 100).unwrap();
    let kinds: Vec<ColumnKind> = schema.columns().iter().map(|c| c.kind).collect();
    assert_eq!(
        kinds,
        vec![
            ColumnKind::Identifier,
            ColumnKind::Categorical,
            ColumnKind::Numeric,
            ColumnKind::Label
        ]
    );
}

fn arb_labels(rows: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..2, rows..=rows)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn folds_partition_all_rows(rows in 4usize..120, k in 2usize..10, seed in 0u64..1000) {
        prop_assume!(k <= rows);
        let mut labels = vec![0u8; rows];
        labels.iter_mut().step_by(3).for_each(|l| *l = 1);
        let d = Dataset::builder()
            .numeric("x", (0..rows).map(|i| i as f64).collect())
            .labels("Label", labels)
            .build()
            .unwrap();
        let plan = split_folds(&d, k, seed).unwrap();

        let mut seen = vec![false; rows];
        for fold in 0..k {
            for r in plan.test_rows(fold) {
                prop_assert!(!seen[r], "row {r} in two folds");
                seen[r] = true;
            }
        }
        prop_assert!(seen.iter().all(|&s| s));

        // Fold sizes within one of an even share.
        let base = rows / k;
        for fold in 0..k {
            let size = plan.test_rows(fold).len();
            prop_assert!(size == base || size == base + 1, "fold {fold} size {size}");
        }
    }

    #[test]
    fn folds_are_stratified(attacks in 1usize..40, normals in 1usize..80, k in 2usize..8, seed in 0u64..100) {
        let rows = attacks + normals;
        prop_assume!(k <= rows);
        let mut labels = vec![1u8; attacks];
        labels.extend(vec![0u8; normals]);
        let d = Dataset::builder()
            .numeric("x", (0..rows).map(|i| i as f64).collect())
            .labels("Label", labels)
            .build()
            .unwrap();
        let plan = split_folds(&d, k, seed).unwrap();
        let global = attacks as f64 / rows as f64;
        for fold in 0..k {
            let rows_in_fold = plan.test_rows(fold);
            let fold_attacks = rows_in_fold.iter().filter(|&&r| d.labels()[r] == 1).count();
            let bound = 1.0 / rows_in_fold.len() as f64;
            let diff = (fold_attacks as f64 / rows_in_fold.len() as f64 - global).abs();
            prop_assert!(diff <= bound + 1e-12, "fold {fold}: diff {diff} > {bound}");
        }
    }

    #[test]
    fn transform_chain_preserves_rows_and_labels(rows in 1usize..40) {
        let labels: Vec<u8> = (0..rows).map(|i| u8::from(i % 2 == 0)).collect();
        let cats: Vec<String> = (0..rows).map(|i| format!("v{}", i % 5)).collect();
        let d = Dataset::builder()
            .identifier("id", (0..rows).map(|i| format!("row{i}")).collect::<Vec<_>>())
            .categorical("c", cats)
            .numeric("x", (0..rows).map(|i| i as f64).collect())
            .labels("Label", labels.clone())
            .build()
            .unwrap();
        let out = d.drop_identifiers().encode_categories();
        prop_assert_eq!(out.n_rows(), rows);
        prop_assert_eq!(out.labels(), labels.as_slice());
    }

    #[test]
    fn reencoding_is_idempotent(labels in arb_labels(24), card in 1usize..6) {
        let cats: Vec<String> = (0..labels.len()).map(|i| format!("v{}", i % card)).collect();
        let d = Dataset::builder()
            .categorical("c", cats)
            .labels("Label", labels)
            .build()
            .unwrap();
        let once = d.encode_categories();
        prop_assert_eq!(once.encode_categories(), once);
    }
}
