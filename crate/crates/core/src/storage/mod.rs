//! The embedded warehouse: typed in-memory tables loaded from CSV, key
//! enforcement, referential checks and plan evaluation.
//!
//! A [`Store`] is mutable while loading and read-only once frozen. It holds
//! no interior mutability, so a frozen store can be shared across threads
//! behind an `Arc` and evaluated concurrently.

mod eval;
mod plan;
mod relation;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Read;

use thiserror::Error;

use crate::model::{Column, SdlModel, Table};
use crate::value::Value;

pub use eval::{evaluate, DataSource};
pub use plan::{AggregateExpr, AggregateFunction, Catalog, JoinKey, Plan, Predicate, Projection, RenameItem};
pub use relation::{Relation, Row};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StorageError {
    #[error("table `{0}` is not loaded")]
    NotLoaded(String),
    #[error("table `{0}` is already loaded")]
    AlreadyLoaded(String),
    #[error("the store is frozen; no further loading is allowed")]
    Frozen,
    #[error("CSV header for `{table}` does not match its columns: expected {expected:?}, found {found:?}")]
    HeaderMismatch {
        table: String,
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("{table}: line {line}: expected {expected} fields, found {found}")]
    Arity {
        table: String,
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("{table}: line {line}: column `{column}`: {message}")]
    Type {
        table: String,
        line: u64,
        column: String,
        message: String,
    },
    #[error("{table}: line {line}: duplicate primary key ({})", fmt_key(.key))]
    DuplicateKey { table: String, line: u64, key: Vec<Value> },
    #[error("{table}: line {line}: primary key column `{column}` is null")]
    NullKey { table: String, line: u64, column: String },
    #[error("{table}: CSV error: {message}")]
    Csv { table: String, message: String },
    #[error("unknown column `{column}` (available: {})", .available.join(", "))]
    UnknownColumn { column: String, available: Vec<String> },
    #[error("duplicate column `{0}` in plan output")]
    DuplicateColumn(String),
    #[error("ill-typed plan: {0}")]
    PlanType(String),
    #[error("arithmetic overflow during aggregation")]
    Overflow,
}

pub(crate) fn fmt_key(key: &[Value]) -> String {
    key.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
}

/// A foreign-key value with no matching row in the referenced table.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FkViolation {
    pub table: String,
    pub foreign_key: String,
    pub value: Vec<Value>,
}

#[derive(Debug, Clone)]
struct StoredTable {
    definition: Table,
    data: Relation,
}

#[derive(Debug, Clone, Default)]
pub struct Store {
    tables: BTreeMap<String, StoredTable>,
    views: BTreeMap<String, Relation>,
    frozen: bool,
}

impl Store {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn table_names(&self) -> impl Iterator<Item = &str> {
        self.tables.keys().map(String::as_str)
    }

    pub fn table(&self, name: &str) -> Option<&Relation> {
        self.tables.get(name).map(|t| &t.data)
    }

    pub fn definition(&self, name: &str) -> Option<&Table> {
        self.tables.get(name).map(|t| &t.definition)
    }

    /// Loads a table from CSV with a mandatory header row naming exactly the
    /// table's columns (in any order). Empty fields are null. Returns the
    /// number of rows stored.
    pub fn load_table<R: Read>(&mut self, table: &Table, csv: R) -> Result<usize, StorageError> {
        if self.frozen {
            return Err(StorageError::Frozen);
        }
        if self.tables.contains_key(&table.name) {
            return Err(StorageError::AlreadyLoaded(table.name.clone()));
        }
        let data = read_csv(table, csv)?;
        let n = data.rows.len();
        self.tables.insert(
            table.name.clone(),
            StoredTable {
                definition: table.clone(),
                data,
            },
        );
        Ok(n)
    }

    /// Loads an already-typed relation, enforcing the same key rules as CSV.
    pub fn load_rows(&mut self, table: &Table, rows: Vec<Row>) -> Result<usize, StorageError> {
        if self.frozen {
            return Err(StorageError::Frozen);
        }
        if self.tables.contains_key(&table.name) {
            return Err(StorageError::AlreadyLoaded(table.name.clone()));
        }
        let columns = table.columns.clone();
        for (i, row) in rows.iter().enumerate() {
            let line = i as u64 + 2;
            if row.len() != columns.len() {
                return Err(StorageError::Arity {
                    table: table.name.clone(),
                    line,
                    expected: columns.len(),
                    found: row.len(),
                });
            }
            for (v, c) in row.iter().zip(&columns) {
                if !v.conforms_to(c.data_type) {
                    return Err(StorageError::Type {
                        table: table.name.clone(),
                        line,
                        column: c.name.clone(),
                        message: format!("{v} is not a {}", c.data_type),
                    });
                }
            }
        }
        check_primary_key(table, &rows)?;
        let n = rows.len();
        self.tables.insert(
            table.name.clone(),
            StoredTable {
                definition: table.clone(),
                data: Relation { columns, rows },
            },
        );
        Ok(n)
    }

    /// Evaluates `plan` now and keeps the result as a frozen snapshot that
    /// plans can scan by `name`.
    pub fn materialize_view(&mut self, name: &str, plan: &Plan) -> Result<usize, StorageError> {
        if self.frozen {
            return Err(StorageError::Frozen);
        }
        let rel = evaluate(plan, self)?;
        let n = rel.rows.len();
        self.views.insert(name.to_owned(), rel);
        Ok(n)
    }

    pub fn has_view(&self, name: &str) -> bool {
        self.views.contains_key(name)
    }

    pub fn evaluate(&self, plan: &Plan) -> Result<Relation, StorageError> {
        evaluate(plan, self)
    }

    /// One violation per dangling foreign-key value. Rows whose foreign-key
    /// columns contain a null reference nothing and are skipped.
    pub fn check_foreign_keys(&self, sdl: &SdlModel) -> Vec<FkViolation> {
        let mut out = Vec::new();
        for table in sdl.tables() {
            let Some(child) = self.tables.get(&table.name) else {
                continue;
            };
            for fk in &table.foreign_keys {
                let cols: Option<Vec<usize>> = fk.columns.iter().map(|c| child.data.column_index(c)).collect();
                let Some(cols) = cols else { continue };
                let targets: HashSet<Vec<&Value>> = match self.tables.get(&fk.table) {
                    Some(parent) => {
                        let tcols: Option<Vec<usize>> =
                            fk.target_columns.iter().map(|c| parent.data.column_index(c)).collect();
                        let Some(tcols) = tcols else { continue };
                        parent
                            .data
                            .rows
                            .iter()
                            .map(|r| tcols.iter().map(|&i| &r[i]).collect())
                            .collect()
                    }
                    None => HashSet::new(),
                };
                for row in &child.data.rows {
                    let key: Vec<&Value> = cols.iter().map(|&i| &row[i]).collect();
                    if key.iter().any(|v| v.is_null()) {
                        continue;
                    }
                    if !targets.contains(&key) {
                        out.push(FkViolation {
                            table: table.name.clone(),
                            foreign_key: fk.to_string(),
                            value: key.into_iter().cloned().collect(),
                        });
                    }
                }
            }
        }
        out
    }

    /// Reconstructs an SDL model from the loaded tables. A table is a fact
    /// table iff no other table references it and it has at least two
    /// outgoing foreign keys.
    pub fn derive_sdl(&self, name: &str) -> SdlModel {
        let mut referenced: HashSet<&str> = HashSet::new();
        for t in self.tables.values() {
            for fk in &t.definition.foreign_keys {
                if fk.table != t.definition.name {
                    referenced.insert(&fk.table);
                }
            }
        }
        let mut sdl = SdlModel {
            name: name.to_owned(),
            ..Default::default()
        };
        for t in self.tables.values() {
            let def = t.definition.clone();
            if !referenced.contains(def.name.as_str()) && def.foreign_keys.len() >= 2 {
                sdl.fact_tables.push(def);
            } else {
                sdl.dimension_tables.push(def);
            }
        }
        sdl
    }
}

impl Catalog for Store {
    fn schema_of(&self, name: &str) -> Option<Vec<Column>> {
        self.relation(name).map(|r| r.columns.clone())
    }
}

impl DataSource for Store {
    fn relation(&self, name: &str) -> Option<&Relation> {
        self.tables.get(name).map(|t| &t.data).or_else(|| self.views.get(name))
    }
}

fn read_csv<R: Read>(table: &Table, input: R) -> Result<Relation, StorageError> {
    let csv_err = |e: csv::Error| StorageError::Csv {
        table: table.name.clone(),
        message: e.to_string(),
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(|h| h.trim_start_matches('\u{feff}').to_owned())
        .collect();

    let expected: Vec<String> = table.columns.iter().map(|c| c.name.clone()).collect();
    let mut positions = Vec::with_capacity(expected.len());
    for col in &expected {
        match header.iter().position(|h| h == col) {
            Some(p) => positions.push(p),
            None => {
                return Err(StorageError::HeaderMismatch {
                    table: table.name.clone(),
                    expected,
                    found: header,
                })
            }
        }
    }
    if header.len() != expected.len() {
        return Err(StorageError::HeaderMismatch {
            table: table.name.clone(),
            expected,
            found: header,
        });
    }

    let mut rows = Vec::new();
    let mut lines = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(StorageError::Arity {
                table: table.name.clone(),
                line,
                expected: header.len(),
                found: record.len(),
            });
        }
        let mut row = Vec::with_capacity(expected.len());
        for (col, &p) in table.columns.iter().zip(&positions) {
            let field = &record[p];
            if field.is_empty() {
                row.push(Value::Null);
                continue;
            }
            let v = Value::parse_as(field, col.data_type).map_err(|message| StorageError::Type {
                table: table.name.clone(),
                line,
                column: col.name.clone(),
                message,
            })?;
            row.push(v);
        }
        rows.push(row);
        lines.push(line);
    }
    check_primary_key_lines(table, &rows, &lines)?;
    Ok(Relation {
        columns: table.columns.clone(),
        rows,
    })
}

fn check_primary_key(table: &Table, rows: &[Row]) -> Result<(), StorageError> {
    let lines: Vec<u64> = (0..rows.len() as u64).map(|i| i + 2).collect();
    check_primary_key_lines(table, rows, &lines)
}

fn check_primary_key_lines(table: &Table, rows: &[Row], lines: &[u64]) -> Result<(), StorageError> {
    let key_idx: Vec<usize> = table.primary_key.iter().filter_map(|k| table.column_index(k)).collect();
    if key_idx.is_empty() {
        return Ok(());
    }
    let mut seen: HashMap<Vec<&Value>, u64> = HashMap::with_capacity(rows.len());
    for (row, &line) in rows.iter().zip(lines) {
        let key: Vec<&Value> = key_idx.iter().map(|&i| &row[i]).collect();
        if let Some(pos) = key.iter().position(|v| v.is_null()) {
            return Err(StorageError::NullKey {
                table: table.name.clone(),
                line,
                column: table.columns[key_idx[pos]].name.clone(),
            });
        }
        if seen.insert(key.clone(), line).is_some() {
            return Err(StorageError::DuplicateKey {
                table: table.name.clone(),
                line,
                key: key.into_iter().cloned().collect(),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ForeignKey;
    use crate::value::DataType;

    fn day_table() -> Table {
        Table {
            name: "Day".into(),
            columns: vec![
                Column::new("DayID", DataType::Integer),
                Column::new("DayOfWeek", DataType::String),
                Column::new("WeekMonthID", DataType::Integer),
            ],
            primary_key: vec!["DayID".into()],
            foreign_keys: vec![ForeignKey {
                columns: vec!["WeekMonthID".into()],
                table: "WeekMonth".into(),
                target_columns: vec!["WeekMonthID".into()],
            }],
        }
    }

    fn week_month_table() -> Table {
        Table {
            name: "WeekMonth".into(),
            columns: vec![Column::new("WeekMonthID", DataType::Integer)],
            primary_key: vec!["WeekMonthID".into()],
            foreign_keys: vec![],
        }
    }

    #[test]
    fn loads_and_counts_rows() {
        let mut s = Store::new();
        let n = s
            .load_table(
                &day_table(),
                "DayID,DayOfWeek,WeekMonthID\n1,Sat,10\n2,Sun,10\n".as_bytes(),
            )
            .unwrap();
        assert_eq!(n, 2);
        assert_eq!(s.table("Day").unwrap().rows[1][1], Value::from("Sun"));
    }

    #[test]
    fn header_may_be_permuted() {
        let mut s = Store::new();
        s.load_table(&day_table(), "WeekMonthID,DayID,DayOfWeek\n10,1,Sat\n".as_bytes())
            .unwrap();
        assert_eq!(s.table("Day").unwrap().rows[0][0], Value::Integer(1));
    }

    #[test]
    fn empty_csv_with_header_is_zero_rows() {
        let mut s = Store::new();
        assert_eq!(
            s.load_table(&day_table(), "DayID,DayOfWeek,WeekMonthID\n".as_bytes())
                .unwrap(),
            0
        );
    }

    #[test]
    fn duplicate_primary_key_names_the_key() {
        let mut s = Store::new();
        let err = s
            .load_table(
                &day_table(),
                "DayID,DayOfWeek,WeekMonthID\n7,Sat,1\n7,Sun,1\n".as_bytes(),
            )
            .unwrap_err();
        assert_eq!(
            err,
            StorageError::DuplicateKey {
                table: "Day".into(),
                line: 3,
                key: vec![Value::Integer(7)]
            }
        );
        assert!(err.to_string().contains("duplicate primary key (7)"));
    }

    #[test]
    fn type_and_arity_errors_carry_line_numbers() {
        let mut s = Store::new();
        let err = s
            .load_table(
                &day_table(),
                "DayID,DayOfWeek,WeekMonthID\n1,Sat,1\nx,Sun,1\n".as_bytes(),
            )
            .unwrap_err();
        assert!(matches!(err, StorageError::Type { line: 3, ref column, .. } if column == "DayID"));
        let mut s = Store::new();
        let err = s
            .load_table(&day_table(), "DayID,DayOfWeek,WeekMonthID\n1,Sat\n".as_bytes())
            .unwrap_err();
        assert!(matches!(
            err,
            StorageError::Arity {
                line: 2,
                expected: 3,
                found: 2,
                ..
            }
        ));
    }

    #[test]
    fn header_mismatch() {
        let mut s = Store::new();
        let err = s
            .load_table(&day_table(), "DayID,Weekday,WeekMonthID\n".as_bytes())
            .unwrap_err();
        assert!(matches!(err, StorageError::HeaderMismatch { .. }));
    }

    #[test]
    fn frozen_store_rejects_loading() {
        let mut s = Store::new();
        s.freeze();
        assert_eq!(
            s.load_table(&week_month_table(), "WeekMonthID\n".as_bytes()),
            Err(StorageError::Frozen)
        );
    }

    #[test]
    fn dangling_fk_is_reported_once() {
        let mut s = Store::new();
        s.load_table(&week_month_table(), "WeekMonthID\n10\n".as_bytes())
            .unwrap();
        s.load_table(
            &day_table(),
            "DayID,DayOfWeek,WeekMonthID\n1,Sat,10\n2,Sun,11\n3,Mon,\n".as_bytes(),
        )
        .unwrap();
        let sdl = SdlModel {
            name: "t".into(),
            fact_tables: vec![],
            dimension_tables: vec![day_table(), week_month_table()],
        };
        let v = s.check_foreign_keys(&sdl);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].value, vec![Value::Integer(11)]);
    }

    #[test]
    fn empty_child_table_has_no_violations() {
        let mut s = Store::new();
        s.load_table(&day_table(), "DayID,DayOfWeek,WeekMonthID\n".as_bytes())
            .unwrap();
        let sdl = SdlModel {
            name: "t".into(),
            fact_tables: vec![],
            dimension_tables: vec![day_table()],
        };
        assert!(s.check_foreign_keys(&sdl).is_empty());
    }

    #[test]
    fn derive_sdl_on_empty_store() {
        let sdl = Store::new().derive_sdl("empty");
        assert!(sdl.fact_tables.is_empty() && sdl.dimension_tables.is_empty());
    }

    #[test]
    fn derive_sdl_single_table_is_dimension() {
        let mut s = Store::new();
        s.load_table(&week_month_table(), "WeekMonthID\n".as_bytes()).unwrap();
        let sdl = s.derive_sdl("d");
        assert_eq!(sdl.dimension_tables.len(), 1);
        assert!(sdl.fact_tables.is_empty());
    }
}
