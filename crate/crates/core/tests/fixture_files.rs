use std::fs;
use std::path::PathBuf;

use cim_core::fixtures::olympic;
use cim_core::query::{parse_cql, QueryOptions};
use cim_core::storage::Store;
use cim_core::{Warehouse, WarehouseOptions};

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/olympic")
}

fn committed_warehouse() -> Warehouse {
    let sdl = olympic::sdl();
    let mut store = Store::new();
    for t in sdl.tables() {
        let file = fs::File::open(fixture_dir().join("data").join(format!("{}.csv", t.name))).unwrap();
        store.load_table(t, file).unwrap();
    }
    Warehouse::new(olympic::cdl(), sdl, olympic::mdl(), store, WarehouseOptions::default()).unwrap()
}

#[test]
fn committed_data_matches_the_generator() {
    let data = olympic::generate_data(olympic::DEFAULT_SEED, olympic::DEFAULT_SCALE);
    for (file, text) in data.csv_files() {
        let committed = fs::read_to_string(fixture_dir().join("data").join(&file)).unwrap();
        assert!(committed == text, "{file} differs from the generator output");
    }
}

/// Set UPDATE_GOLDEN=1 to rewrite the golden file from the oracle.
#[test]
fn golden_example_comes_from_the_oracle() {
    let w = committed_warehouse();
    let q = parse_cql(olympic::EXAMPLE_QUERY).unwrap();
    let expected = w.oracle().execute(&q, QueryOptions::default()).unwrap().to_csv();
    let path = fixture_dir().join("golden/example.csv");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&path, &expected).unwrap();
    }
    assert_eq!(fs::read_to_string(&path).unwrap(), expected);
    assert_eq!(w.query(&q, QueryOptions::default()).unwrap().to_csv(), expected);
}
