//! A loaded warehouse: the three models, the store and the compiled views.

use thiserror::Error;

use crate::compiler::{check_all, CheckReport};
use crate::compiler::{compile, ViewSet};
use crate::fixtures::{olympic, Dataset};
use crate::model::{validate_cdl, validate_mdl, validate_sdl};
use crate::model::{CdlModel, Diagnostic, MdlModel, SdlModel};
use crate::query::{execute, parse_cql, CqlQuery, Oracle, QueryError, QueryOptions};
use crate::storage::{Relation, StorageError, Store};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WarehouseOptions {
    /// Evaluate every view once and store the result instead of expanding
    /// view definitions inside each query.
    pub materialize: bool,
}

#[derive(Debug, Error)]
pub enum WarehouseError {
    #[error("the models have {} error(s); first: {}", .0.len(), .0[0])]
    Invalid(Vec<Diagnostic>),
    #[error(transparent)]
    Storage(#[from] StorageError),
}

#[derive(Debug)]
pub struct Warehouse {
    pub cdl: CdlModel,
    pub sdl: SdlModel,
    pub mdl: MdlModel,
    pub store: Store,
    pub views: ViewSet,
    /// Validation and compilation findings, errors first.
    pub diagnostics: Vec<Diagnostic>,
}

/// Validates all three models and compiles the mapping.
pub fn validate_and_compile(cdl: &CdlModel, sdl: &SdlModel, mdl: &MdlModel) -> (ViewSet, Vec<Diagnostic>) {
    let mut diagnostics = validate_cdl(cdl);
    diagnostics.extend(validate_sdl(sdl));
    diagnostics.extend(validate_mdl(cdl, sdl, mdl));
    let compilation = compile(cdl, sdl, mdl);
    diagnostics.extend(compilation.diagnostics);
    diagnostics.sort();
    diagnostics.dedup();
    (compilation.views, diagnostics)
}

impl Warehouse {
    /// Builds a warehouse over a loaded store. Model errors are fatal;
    /// views that fail to compile are left out and reported in
    /// `diagnostics`. The store is frozen afterwards.
    pub fn new(
        cdl: CdlModel,
        sdl: SdlModel,
        mdl: MdlModel,
        mut store: Store,
        options: WarehouseOptions,
    ) -> Result<Self, WarehouseError> {
        let mut diagnostics = validate_cdl(&cdl);
        diagnostics.extend(validate_sdl(&sdl));
        diagnostics.extend(validate_mdl(&cdl, &sdl, &mdl));
        let errors: Vec<Diagnostic> = diagnostics.iter().filter(|d| d.is_error()).cloned().collect();
        if !errors.is_empty() {
            return Err(WarehouseError::Invalid(errors));
        }
        let compilation = compile(&cdl, &sdl, &mdl);
        diagnostics.extend(compilation.diagnostics);
        diagnostics.sort();
        diagnostics.dedup();
        if options.materialize {
            compilation.views.materialize_all(&mut store)?;
        }
        store.freeze();
        Ok(Warehouse {
            cdl,
            sdl,
            mdl,
            store,
            views: compilation.views,
            diagnostics,
        })
    }

    pub fn from_dataset(
        cdl: CdlModel,
        sdl: SdlModel,
        mdl: MdlModel,
        data: &Dataset,
        options: WarehouseOptions,
    ) -> Result<Self, WarehouseError> {
        let store = data.store(&sdl)?;
        Self::new(cdl, sdl, mdl, store, options)
    }

    /// The Olympic reference warehouse with generated data.
    pub fn olympic(seed: u64, scale: usize) -> Self {
        let data = olympic::generate_data(seed, scale);
        Self::from_dataset(
            olympic::cdl(),
            olympic::sdl(),
            olympic::mdl(),
            &data,
            WarehouseOptions::default(),
        )
        .expect("the reference fixture builds")
    }

    pub fn query(&self, query: &CqlQuery, options: QueryOptions) -> Result<Relation, QueryError> {
        execute(query, &self.cdl, &self.views, &self.store, options)
    }

    pub fn query_text(&self, text: &str, options: QueryOptions) -> Result<Relation, QueryError> {
        self.query(&parse_cql(text)?, options)
    }

    /// A brute-force evaluator over the same models and store.
    pub fn oracle(&self) -> Oracle<'_> {
        Oracle::new(&self.cdl, &self.sdl, &self.mdl, &self.store)
    }

    pub fn check(&self) -> Result<CheckReport, StorageError> {
        check_all(&self.cdl, &self.sdl, &self.views, &self.store)
    }

    /// The distinct members of a level, sorted.
    pub fn level_members(&self, level: &str) -> Result<Relation, QueryError> {
        if self.cdl.level(level).is_none() {
            return Err(QueryError::Unresolved {
                kind: "level",
                name: level.to_owned(),
                candidates: crate::query::candidates(level, self.cdl.levels.iter().map(|l| l.name.as_str())),
            });
        }
        let view = self
            .views
            .level(level)
            .ok_or_else(|| QueryError::UnmappedLevel(level.to_owned()))?;
        Ok(self.views.evaluate_view(&view.name, &self.store)?.sorted())
    }
}
