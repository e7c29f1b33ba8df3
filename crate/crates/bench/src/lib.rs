//! Shared inputs for the benchmarks.

use cim_core::fixtures::olympic;
use cim_core::query::{parse_cql, CqlQuery};
use cim_core::{Warehouse, WarehouseOptions};

pub fn olympic_warehouse(scale: usize, materialize: bool) -> Warehouse {
    let data = olympic::generate_data(olympic::DEFAULT_SEED, scale);
    Warehouse::from_dataset(
        olympic::cdl(),
        olympic::sdl(),
        olympic::mdl(),
        &data,
        WarehouseOptions { materialize },
    )
    .expect("the reference fixture builds")
}

pub fn reference_queries() -> Vec<CqlQuery> {
    olympic::REFERENCE_QUERIES
        .iter()
        .map(|q| parse_cql(q).expect("reference queries parse"))
        .collect()
}
