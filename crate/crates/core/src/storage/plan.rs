//! Relational-algebra plans and their static typing.

use std::collections::HashSet;
use std::fmt;

use serde::{Serialize, Serializer};

use super::StorageError;
use crate::model::Column;
use crate::value::{DataType, Value};

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "op", rename_all = "camelCase")]
pub enum Predicate {
    True,
    Eq { column: String, value: Value },
    Lt { column: String, value: Value },
    Gt { column: String, value: Value },
    In { column: String, values: Vec<Value> },
    And { terms: Vec<Predicate> },
}

impl Predicate {
    pub fn and(terms: Vec<Predicate>) -> Predicate {
        let mut flat = Vec::new();
        for t in terms {
            match t {
                Predicate::True => {}
                Predicate::And { terms } => flat.extend(terms),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => Predicate::True,
            1 => flat.pop().unwrap(),
            _ => Predicate::And { terms: flat },
        }
    }

    pub fn columns(&self) -> Vec<&str> {
        match self {
            Predicate::True => vec![],
            Predicate::Eq { column, .. }
            | Predicate::Lt { column, .. }
            | Predicate::Gt { column, .. }
            | Predicate::In { column, .. } => vec![column],
            Predicate::And { terms } => terms.iter().flat_map(Predicate::columns).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum Projection {
    Column {
        name: String,
    },
    /// `source` exposed under a new `name`.
    Alias {
        source: String,
        name: String,
    },
    /// A column of nulls, used for properties without a mapping.
    Null {
        name: String,
        data_type: DataType,
    },
}

impl Projection {
    pub fn column(name: impl Into<String>) -> Self {
        Projection::Column { name: name.into() }
    }

    pub fn alias(source: impl Into<String>, name: impl Into<String>) -> Self {
        Projection::Alias {
            source: source.into(),
            name: name.into(),
        }
    }

    pub fn output_name(&self) -> &str {
        match self {
            Projection::Column { name } | Projection::Alias { name, .. } | Projection::Null { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregateFunction {
    Sum,
    Count,
    Avg,
    Min,
    Max,
}

impl AggregateFunction {
    pub const ALL: [AggregateFunction; 5] = [
        AggregateFunction::Sum,
        AggregateFunction::Count,
        AggregateFunction::Avg,
        AggregateFunction::Min,
        AggregateFunction::Max,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AggregateFunction::Sum => "sum",
            AggregateFunction::Count => "count",
            AggregateFunction::Avg => "avg",
            AggregateFunction::Min => "min",
            AggregateFunction::Max => "max",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.as_str().eq_ignore_ascii_case(s))
    }

    /// Result type for an input column type, or `None` if not applicable.
    pub fn output_type(self, input: Option<DataType>) -> Option<DataType> {
        match (self, input) {
            (AggregateFunction::Count, _) => Some(DataType::Integer),
            (_, None) => None,
            (AggregateFunction::Sum, Some(t)) if t.is_numeric() => Some(t),
            (AggregateFunction::Avg, Some(t)) if t.is_numeric() => Some(DataType::Decimal),
            (AggregateFunction::Min | AggregateFunction::Max, Some(t)) => Some(t),
            _ => None,
        }
    }
}

impl fmt::Display for AggregateFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AggregateExpr {
    pub function: AggregateFunction,
    /// `None` only for `count`, which then counts rows; with a column, nulls
    /// are skipped.
    pub column: Option<String>,
    pub output: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct JoinKey {
    pub left: String,
    pub right: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RenameItem {
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "op", rename_all = "camelCase")]
pub enum Plan {
    Scan {
        table: String,
    },
    Select {
        input: Box<Plan>,
        predicate: Predicate,
    },
    Project {
        input: Box<Plan>,
        columns: Vec<Projection>,
    },
    Rename {
        input: Box<Plan>,
        renames: Vec<RenameItem>,
    },
    Join {
        left: Box<Plan>,
        right: Box<Plan>,
        on: Vec<JoinKey>,
    },
    Union {
        inputs: Vec<Plan>,
    },
    #[serde(rename_all = "camelCase")]
    Aggregate {
        input: Box<Plan>,
        group_by: Vec<String>,
        aggregates: Vec<AggregateExpr>,
    },
}

/// Source of base relation schemas for typing plans.
pub trait Catalog {
    fn schema_of(&self, name: &str) -> Option<Vec<Column>>;
}

impl Plan {
    pub fn scan(table: impl Into<String>) -> Plan {
        Plan::Scan { table: table.into() }
    }

    pub fn select(self, predicate: Predicate) -> Plan {
        if predicate == Predicate::True {
            return self;
        }
        Plan::Select {
            input: Box::new(self),
            predicate,
        }
    }

    pub fn project(self, columns: Vec<Projection>) -> Plan {
        Plan::Project {
            input: Box::new(self),
            columns,
        }
    }

    pub fn project_columns<S: AsRef<str>>(self, names: &[S]) -> Plan {
        self.project(names.iter().map(|n| Projection::column(n.as_ref())).collect())
    }

    pub fn rename<A: Into<String>, B: Into<String>>(self, pairs: impl IntoIterator<Item = (A, B)>) -> Plan {
        let renames: Vec<RenameItem> = pairs
            .into_iter()
            .map(|(from, to)| RenameItem {
                from: from.into(),
                to: to.into(),
            })
            .filter(|r| r.from != r.to)
            .collect();
        if renames.is_empty() {
            return self;
        }
        Plan::Rename {
            input: Box::new(self),
            renames,
        }
    }

    pub fn join<A: Into<String>, B: Into<String>>(self, right: Plan, on: impl IntoIterator<Item = (A, B)>) -> Plan {
        Plan::Join {
            left: Box::new(self),
            right: Box::new(right),
            on: on
                .into_iter()
                .map(|(l, r)| JoinKey {
                    left: l.into(),
                    right: r.into(),
                })
                .collect(),
        }
    }

    pub fn union(mut inputs: Vec<Plan>) -> Plan {
        if inputs.len() == 1 {
            return inputs.pop().unwrap();
        }
        Plan::Union { inputs }
    }

    pub fn aggregate(self, group_by: Vec<String>, aggregates: Vec<AggregateExpr>) -> Plan {
        Plan::Aggregate {
            input: Box::new(self),
            group_by,
            aggregates,
        }
    }

    /// Set semantics: group by every column without aggregates.
    pub fn distinct(self, columns: Vec<String>) -> Plan {
        self.aggregate(columns, Vec::new())
    }

    /// Output schema of the plan; fails if any referenced column is missing
    /// or an operator is ill-typed.
    pub fn schema(&self, catalog: &dyn Catalog) -> Result<Vec<Column>, StorageError> {
        match self {
            Plan::Scan { table } => catalog
                .schema_of(table)
                .ok_or_else(|| StorageError::NotLoaded(table.clone())),
            Plan::Select { input, predicate } => {
                let schema = input.schema(catalog)?;
                check_predicate(predicate, &schema)?;
                Ok(schema)
            }
            Plan::Project { input, columns } => {
                let schema = input.schema(catalog)?;
                let mut out = Vec::with_capacity(columns.len());
                for p in columns {
                    out.push(match p {
                        Projection::Column { name } => lookup(&schema, name)?.1.clone(),
                        Projection::Alias { source, name } => {
                            Column::new(name.clone(), lookup(&schema, source)?.1.data_type)
                        }
                        Projection::Null { name, data_type } => Column::new(name.clone(), *data_type),
                    });
                }
                unique(&out)?;
                Ok(out)
            }
            Plan::Rename { input, renames } => {
                let mut schema = input.schema(catalog)?;
                let mut targets = Vec::new();
                for r in renames {
                    targets.push(lookup(&schema, &r.from)?.0);
                }
                for (i, r) in targets.into_iter().zip(renames) {
                    schema[i].name = r.to.clone();
                }
                unique(&schema)?;
                Ok(schema)
            }
            Plan::Join { left, right, on } => {
                let l = left.schema(catalog)?;
                let r = right.schema(catalog)?;
                for k in on {
                    let lt = lookup(&l, &k.left)?.1.data_type;
                    let rt = lookup(&r, &k.right)?.1.data_type;
                    if lt != rt {
                        return Err(StorageError::PlanType(format!(
                            "join key `{}` is {lt} but `{}` is {rt}",
                            k.left, k.right
                        )));
                    }
                }
                let mut out = l;
                out.extend(r);
                unique(&out)?;
                Ok(out)
            }
            Plan::Union { inputs } => {
                let mut schemas = inputs.iter().map(|p| p.schema(catalog));
                let first = schemas
                    .next()
                    .ok_or_else(|| StorageError::PlanType("union of zero inputs".into()))??;
                for s in schemas {
                    let s = s?;
                    if s != first {
                        return Err(StorageError::PlanType(format!(
                            "union inputs disagree: [{}] vs [{}]",
                            names(&first),
                            names(&s)
                        )));
                    }
                }
                Ok(first)
            }
            Plan::Aggregate {
                input,
                group_by,
                aggregates,
            } => {
                let schema = input.schema(catalog)?;
                let mut out = Vec::new();
                for g in group_by {
                    out.push(lookup(&schema, g)?.1.clone());
                }
                for a in aggregates {
                    let input_type = match &a.column {
                        Some(c) => Some(lookup(&schema, c)?.1.data_type),
                        None => None,
                    };
                    let t = a.function.output_type(input_type).ok_or_else(|| {
                        StorageError::PlanType(format!(
                            "{} is not defined on {}",
                            a.function,
                            input_type.map_or("no column".to_owned(), |t| t.to_string())
                        ))
                    })?;
                    out.push(Column::new(a.output.clone(), t));
                }
                unique(&out)?;
                Ok(out)
            }
        }
    }
}

fn names(schema: &[Column]) -> String {
    schema
        .iter()
        .map(|c| format!("{}:{}", c.name, c.data_type))
        .collect::<Vec<_>>()
        .join(", ")
}

pub(crate) fn lookup<'a>(schema: &'a [Column], name: &str) -> Result<(usize, &'a Column), StorageError> {
    schema
        .iter()
        .enumerate()
        .find(|(_, c)| c.name == name)
        .ok_or_else(|| StorageError::UnknownColumn {
            column: name.to_owned(),
            available: schema.iter().map(|c| c.name.clone()).collect(),
        })
}

fn unique(schema: &[Column]) -> Result<(), StorageError> {
    let mut seen = HashSet::new();
    for c in schema {
        if !seen.insert(c.name.as_str()) {
            return Err(StorageError::DuplicateColumn(c.name.clone()));
        }
    }
    Ok(())
}

fn check_predicate(p: &Predicate, schema: &[Column]) -> Result<(), StorageError> {
    let check = |column: &str, v: &Value| -> Result<(), StorageError> {
        let col = lookup(schema, column)?.1;
        if !v.conforms_to(col.data_type) {
            return Err(StorageError::PlanType(format!(
                "literal {v} does not match {} column `{column}`",
                col.data_type
            )));
        }
        Ok(())
    };
    match p {
        Predicate::True => Ok(()),
        Predicate::Eq { column, value } | Predicate::Lt { column, value } | Predicate::Gt { column, value } => {
            check(column, value)
        }
        Predicate::In { column, values } => values.iter().try_for_each(|v| check(column, v)),
        Predicate::And { terms } => terms.iter().try_for_each(|t| check_predicate(t, schema)),
    }
}
