//! Aggregated fact-relationship queries: representation, the textual CQL
//! syntax, rewriting over compiled views, and an independent oracle.
//!
//! CQL grammar (keywords are case-insensitive):
//!
//! ```text
//! query     := AGGREGATE fn '(' [measure] ')' FROM factRel
//!              { ROLLUP dimension TO level }
//!              [ WHERE condition { AND condition } ]
//! condition := level '.' property ( '=' literal | '<' literal | '>' literal
//!                                 | IN '(' literal { ',' literal } ')' )
//! literal   := "string" | number | TRUE | FALSE
//! fn        := sum | count | avg | min | max
//! ```
//!
//! Dates are written as strings, e.g. `"2010-02-13"`.

mod oracle;
mod parse;
mod resolve;
mod rewrite;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rust_decimal::Decimal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::storage::{AggregateFunction, StorageError};
use crate::value::{DataType, Value};

pub use oracle::oracle_execute;
pub use oracle::Oracle;
pub use parse::parse_cql;
pub(crate) use resolve::candidates;
pub use resolve::{resolve, Mention, ResolvedCondition, ResolvedQuery};
pub use rewrite::{execute, rewrite};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CqlQuery {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub fact_relationship: String,
    /// Dimension name to target level.
    #[serde(default)]
    pub rollups: BTreeMap<String, String>,
    #[serde(default)]
    pub conditions: Vec<QueryCondition>,
    pub aggregation: Aggregation,
}

impl CqlQuery {
    pub fn new(fact: &str, function: AggregateFunction, measure: Option<&str>) -> Self {
        CqlQuery {
            name: None,
            fact_relationship: fact.to_owned(),
            rollups: BTreeMap::new(),
            conditions: Vec::new(),
            aggregation: Aggregation {
                function,
                measure: measure.map(str::to_owned),
            },
        }
    }

    pub fn rollup(mut self, dimension: &str, level: &str) -> Self {
        self.rollups.insert(dimension.to_owned(), level.to_owned());
        self
    }

    pub fn condition(mut self, level: &str, property: &str, operator: CompareOp, values: Vec<Literal>) -> Self {
        self.conditions.push(QueryCondition {
            level: level.to_owned(),
            property: property.to_owned(),
            operator,
            values,
        });
        self
    }

    /// The query's name, defaulting to `Aggr_<fact relationship>`.
    pub fn display_name(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| format!("Aggr_{}", self.fact_relationship))
    }

    pub fn from_json(text: &str) -> Result<Self, QueryError> {
        serde_json::from_str(text).map_err(|e| QueryError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }
}

/// Renders the query as canonical CQL text.
impl fmt::Display for CqlQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "AGGREGATE {}({}) FROM {}",
            self.aggregation.function,
            self.aggregation.measure.as_deref().unwrap_or(""),
            self.fact_relationship
        )?;
        for (dim, level) in &self.rollups {
            write!(f, " ROLLUP {dim} TO {level}")?;
        }
        for (i, c) in self.conditions.iter().enumerate() {
            f.write_str(if i == 0 { " WHERE " } else { " AND " })?;
            write!(f, "{}.{} ", c.level, c.property)?;
            match c.operator {
                CompareOp::In => {
                    let vs: Vec<String> = c.values.iter().map(Literal::to_string).collect();
                    write!(f, "IN ({})", vs.join(", "))?;
                }
                op => write!(
                    f,
                    "{} {}",
                    op.symbol(),
                    c.values.first().map(Literal::to_string).unwrap_or_default()
                )?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Aggregation {
    pub function: AggregateFunction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryCondition {
    pub level: String,
    pub property: String,
    pub operator: CompareOp,
    pub values: Vec<Literal>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum CompareOp {
    Equals,
    In,
    LessThan,
    GreaterThan,
}

impl CompareOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Equals => "=",
            CompareOp::In => "IN",
            CompareOp::LessThan => "<",
            CompareOp::GreaterThan => ">",
        }
    }
}

/// A literal as written in the query; typed once the property is known.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Literal {
    Text(String),
    /// Canonical decimal text: no exponent and no trailing fractional zeros.
    Number(String),
    Bool(bool),
}

impl Literal {
    pub fn text(s: &str) -> Self {
        Literal::Text(s.to_owned())
    }

    /// Builds a number literal from its textual form.
    pub fn number(s: &str) -> Option<Self> {
        if let Ok(i) = s.parse::<i64>() {
            return Some(Literal::Number(i.to_string()));
        }
        let d = Decimal::from_str(s).or_else(|_| Decimal::from_scientific(s)).ok()?;
        Some(Literal::Number(d.normalize().to_string()))
    }

    /// The literal for a stored value.
    pub fn from_value(v: &Value) -> Self {
        match v {
            Value::Integer(i) => Literal::Number(i.to_string()),
            Value::Decimal(d) => Literal::Number(d.normalize().to_string()),
            Value::Boolean(b) => Literal::Bool(*b),
            other => Literal::Text(other.to_text()),
        }
    }

    /// Types the literal against a property of type `ty`.
    pub fn coerce(&self, ty: DataType) -> Result<Value, String> {
        match (self, ty) {
            (Literal::Bool(b), DataType::Boolean) => Ok(Value::Boolean(*b)),
            (Literal::Number(n), DataType::Integer | DataType::Decimal) => Value::parse_as(n, ty),
            (Literal::Text(t), _) => Value::parse_as(t, ty),
            (other, ty) => Err(format!("literal {other} cannot be compared with a {ty} property")),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Text(t) => {
                f.write_str("\"")?;
                for c in t.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
            Literal::Number(n) => f.write_str(n),
            Literal::Bool(b) => f.write_str(if *b { "TRUE" } else { "FALSE" }),
        }
    }
}

impl Serialize for Literal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Literal::Text(t) => s.serialize_str(t),
            Literal::Bool(b) => s.serialize_bool(*b),
            Literal::Number(n) => match serde_json::Number::from_str(n) {
                Ok(num) if num.to_string() == *n => num.serialize(s),
                // not representable exactly as a JSON number
                _ => s.serialize_str(n),
            },
        }
    }
}

impl<'de> Deserialize<'de> for Literal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::String(t) => Ok(Literal::Text(t)),
            serde_json::Value::Bool(b) => Ok(Literal::Bool(b)),
            serde_json::Value::Number(n) => {
                Literal::number(&n.to_string()).ok_or_else(|| D::Error::custom(format!("invalid number {n}")))
            }
            other => Err(D::Error::custom(format!(
                "expected a string, number or boolean literal, found {other}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown {kind} `{name}`{}", suggest(.candidates))]
    Unresolved {
        kind: &'static str,
        name: String,
        candidates: Vec<String>,
    },
    #[error("invalid query: {0}")]
    Invalid(String),
    #[error("ambiguous rollup from `{from}` to `{to}`: {reason}")]
    AmbiguousRollup { from: String, to: String, reason: String },
    #[error("level `{0}` is not mapped")]
    UnmappedLevel(String),
    #[error("fact relationship `{0}` is not mapped")]
    UnmappedFactRelationship(String),
    #[error("view `{0}` is not available: {1}")]
    MissingView(String, String),
    #[error(transparent)]
    Storage(#[from] StorageError),
}

fn suggest(candidates: &[String]) -> String {
    if candidates.is_empty() {
        String::new()
    } else {
        format!(
            " (did you mean {}?)",
            candidates
                .iter()
                .map(|c| format!("`{c}`"))
                .collect::<Vec<_>>()
                .join(", ")
        )
    }
}

/// Output shaping shared by [`execute`] and [`oracle_execute`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QueryOptions {
    /// Keep dimensions the query does not mention at their bottom grain
    /// instead of aggregating them out.
    pub keep_unmentioned: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_literals_are_canonical() {
        assert_eq!(Literal::number("12.50"), Some(Literal::Number("12.5".into())));
        assert_eq!(Literal::number("-3"), Some(Literal::Number("-3".into())));
        assert_eq!(Literal::number("abc"), None);
    }

    #[test]
    fn coercion_follows_property_type() {
        assert_eq!(
            Literal::number("7").unwrap().coerce(DataType::Decimal),
            Ok(Value::Decimal(7.into()))
        );
        assert_eq!(
            Literal::text("2010-02-13").coerce(DataType::Date).unwrap().to_text(),
            "2010-02-13"
        );
        assert!(Literal::number("7").unwrap().coerce(DataType::String).is_err());
        assert!(Literal::Bool(true).coerce(DataType::Integer).is_err());
    }

    #[test]
    fn json_form_round_trips() {
        let q = CqlQuery::new("Attends", AggregateFunction::Sum, Some("TicketPrice"))
            .rollup("Date", "Weekend")
            .condition(
                "Venue",
                "name",
                CompareOp::Equals,
                vec![Literal::text("Whistler Olympic Park")],
            )
            .condition(
                "Day",
                "DayID",
                CompareOp::In,
                vec![Literal::number("1").unwrap(), Literal::number("2.5").unwrap()],
            );
        let text = serde_json::to_string(&q).unwrap();
        assert!(text.contains(r#""factRelationship":"Attends""#));
        assert_eq!(CqlQuery::from_json(&text).unwrap(), q);
    }

    #[test]
    fn json_rejects_unknown_fields() {
        let err = CqlQuery::from_json(r#"{"factRelationship":"F","aggregation":{"function":"count"},"x":1}"#);
        assert!(matches!(err, Err(QueryError::Syntax { .. })));
    }

    #[test]
    fn display_name_defaults() {
        assert_eq!(
            CqlQuery::new("Attends", AggregateFunction::Count, None).display_name(),
            "Aggr_Attends"
        );
    }
}
