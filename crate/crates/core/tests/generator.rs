use cim_core::fixtures::olympic;
use cim_core::fixtures::random::random_instance;
use cim_core::warehouse::validate_and_compile;
use cim_core::{Warehouse, WarehouseOptions};
use proptest::prelude::*;

#[test]
fn olympic_data_is_deterministic() {
    assert_eq!(
        olympic::generate_data(7, 300).csv_files(),
        olympic::generate_data(7, 300).csv_files()
    );
    let empty = olympic::generate_data(7, 0);
    assert!(empty.tables["Attends"].is_empty());
    assert_eq!(empty.tables["Day"].len(), 366);
}

#[test]
fn olympic_data_has_no_dangling_references() {
    let w = Warehouse::olympic(olympic::DEFAULT_SEED, olympic::DEFAULT_SCALE);
    assert_eq!(w.store.table("Attends").unwrap().len(), 10_000);
    assert!(w.check().unwrap().foreign_keys.is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_instances_are_clean(seed in any::<u64>()) {
        let r = random_instance(seed);
        let (views, diagnostics) = validate_and_compile(&r.cdl, &r.sdl, &r.mdl);
        prop_assert!(diagnostics.is_empty(), "{:?}", diagnostics);
        prop_assert!(!views.is_empty());
        let w = Warehouse::from_dataset(r.cdl, r.sdl, r.mdl, &r.data, WarehouseOptions::default()).unwrap();
        let report = w.check().unwrap();
        prop_assert!(report.is_clean(), "{:?}", report);
    }
}
