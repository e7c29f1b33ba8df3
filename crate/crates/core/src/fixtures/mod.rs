//! Reference models and seeded data generators.

pub mod olympic;
pub mod random;

use std::collections::BTreeMap;

use crate::model::SdlModel;
use crate::storage::{Relation, StorageError, Store};

/// Typed contents for the tables of one store schema.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    pub tables: BTreeMap<String, Relation>,
}

impl Dataset {
    /// Loads every table of `sdl`; tables absent from the dataset are
    /// loaded empty.
    pub fn load_into(&self, sdl: &SdlModel, store: &mut Store) -> Result<(), StorageError> {
        for t in sdl.tables() {
            let rows = self.tables.get(&t.name).map(|r| r.rows.clone()).unwrap_or_default();
            store.load_rows(t, rows)?;
        }
        Ok(())
    }

    pub fn store(&self, sdl: &SdlModel) -> Result<Store, StorageError> {
        let mut s = Store::new();
        self.load_into(sdl, &mut s)?;
        Ok(s)
    }

    /// `(file name, CSV text)` per table.
    pub fn csv_files(&self) -> Vec<(String, String)> {
        self.tables
            .iter()
            .map(|(name, rel)| (format!("{name}.csv"), rel.to_csv()))
            .collect()
    }

    pub fn row_count(&self) -> usize {
        self.tables.values().map(Relation::len).sum()
    }
}
