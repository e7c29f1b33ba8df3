use std::fmt;

use serde::Serialize;

use crate::model::Column;
use crate::value::Value;

pub type Row = Vec<Value>;

/// A bag of rows over an ordered, named schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Relation {
    pub columns: Vec<Column>,
    #[serde(serialize_with = "serialize_rows")]
    pub rows: Vec<Row>,
}

fn serialize_rows<S: serde::Serializer>(rows: &[Row], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(rows.len()))?;
    for row in rows {
        let r: Vec<serde_json::Value> = row.iter().map(Value::to_json).collect();
        seq.serialize_element(&r)?;
    }
    seq.end()
}

impl Relation {
    pub fn new(columns: Vec<Column>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows sorted lexicographically; the canonical form for comparing bags.
    pub fn sorted(mut self) -> Self {
        self.rows.sort();
        self
    }

    pub fn sort(&mut self) {
        self.rows.sort();
    }

    /// Values of the named column, in row order.
    pub fn column_values(&self, name: &str) -> Option<Vec<&Value>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))
            .expect("in-memory writer");
        for row in &self.rows {
            w.write_record(row.iter().map(Value::to_text))
                .expect("in-memory writer");
        }
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 input")
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "columns": self.column_names(),
            "rows": self.rows.iter().map(|r| r.iter().map(Value::to_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
        })
    }
}

/// Plain-text table rendering used by the CLI.
impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cells: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|v| if v.is_null() { "NULL".to_owned() } else { v.to_text() })
                    .collect()
            })
            .collect();
        let mut widths: Vec<usize> = self.columns.iter().map(|c| c.name.chars().count()).collect();
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |f: &mut fmt::Formatter<'_>, items: Vec<&str>| -> fmt::Result {
            let parts: Vec<String> = items.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}")).collect();
            writeln!(f, "{}", parts.join(" | ").trim_end())
        };
        line(f, self.columns.iter().map(|c| c.name.as_str()).collect())?;
        writeln!(
            f,
            "{}",
            widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("-+-")
        )?;
        for row in &cells {
            line(f, row.iter().map(String::as_str).collect())?;
        }
        write!(
            f,
            "({} row{})",
            self.rows.len(),
            if self.rows.len() == 1 { "" } else { "s" }
        )
    }
}
