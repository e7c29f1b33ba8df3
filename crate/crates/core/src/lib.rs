//! Conceptual integration modeling run-time.
//!
//! Conceptual (CDL), store (SDL) and mapping (MDL) models are parsed from
//! XML, compiled into relational views over an embedded warehouse, and
//! queried with aggregated fact-relationship queries that are rewritten
//! over those views.

pub mod compiler;
pub mod fixtures;
pub mod graph;
pub mod model;
pub mod query;
pub mod storage;
pub mod value;
pub mod warehouse;
pub mod xml;

pub use model::{CdlModel, Diagnostic, MdlModel, SdlModel};
pub use storage::{Plan, Relation, Store};
pub use value::{DataType, Value};
pub use warehouse::{Warehouse, WarehouseOptions};
