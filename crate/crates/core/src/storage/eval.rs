//! Bag-semantics evaluation of [`Plan`]s.

use std::collections::HashMap;

use rust_decimal::Decimal;

use super::plan::{lookup, AggregateFunction, Catalog, Plan, Predicate, Projection};
use super::relation::{Relation, Row};
use super::StorageError;
use crate::model::Column;
use crate::value::Value;

/// A catalog that can also hand out base relations.
pub trait DataSource: Catalog {
    fn relation(&self, name: &str) -> Option<&Relation>;
}

enum Compiled {
    True,
    Eq(usize, Value),
    Lt(usize, Value),
    Gt(usize, Value),
    In(usize, Vec<Value>),
    And(Vec<Compiled>),
}

impl Compiled {
    fn new(p: &Predicate, schema: &[Column]) -> Result<Self, StorageError> {
        let idx = |c: &str| lookup(schema, c).map(|(i, _)| i);
        Ok(match p {
            Predicate::True => Compiled::True,
            Predicate::Eq { column, value } => Compiled::Eq(idx(column)?, value.clone()),
            Predicate::Lt { column, value } => Compiled::Lt(idx(column)?, value.clone()),
            Predicate::Gt { column, value } => Compiled::Gt(idx(column)?, value.clone()),
            Predicate::In { column, values } => Compiled::In(idx(column)?, values.clone()),
            Predicate::And { terms } => Compiled::And(
                terms
                    .iter()
                    .map(|t| Compiled::new(t, schema))
                    .collect::<Result<_, _>>()?,
            ),
        })
    }

    /// Nulls never satisfy a comparison.
    fn matches(&self, row: &Row) -> bool {
        match self {
            Compiled::True => true,
            Compiled::Eq(i, v) => !row[*i].is_null() && row[*i] == *v,
            Compiled::Lt(i, v) => !row[*i].is_null() && row[*i] < *v,
            Compiled::Gt(i, v) => !row[*i].is_null() && row[*i] > *v,
            Compiled::In(i, vs) => !row[*i].is_null() && vs.contains(&row[*i]),
            Compiled::And(ts) => ts.iter().all(|t| t.matches(row)),
        }
    }
}

enum Accumulator {
    Count(i64),
    SumInteger(Option<i64>),
    SumDecimal(Option<Decimal>),
    Avg { sum: Decimal, n: i64 },
    Min(Option<Value>),
    Max(Option<Value>),
}

impl Accumulator {
    fn new(function: AggregateFunction, input: Option<&Column>) -> Self {
        use crate::value::DataType;
        match function {
            AggregateFunction::Count => Accumulator::Count(0),
            AggregateFunction::Sum => match input.map(|c| c.data_type) {
                Some(DataType::Integer) => Accumulator::SumInteger(None),
                _ => Accumulator::SumDecimal(None),
            },
            AggregateFunction::Avg => Accumulator::Avg {
                sum: Decimal::ZERO,
                n: 0,
            },
            AggregateFunction::Min => Accumulator::Min(None),
            AggregateFunction::Max => Accumulator::Max(None),
        }
    }

    fn update(&mut self, v: Option<&Value>) -> Result<(), StorageError> {
        let overflow = || StorageError::Overflow;
        match self {
            Accumulator::Count(n) => {
                if v.is_none_or(|v| !v.is_null()) {
                    *n += 1;
                }
            }
            _ if v.is_none_or(Value::is_null) => {}
            Accumulator::SumInteger(s) => {
                let Some(Value::Integer(x)) = v else {
                    unreachable!("typed plan")
                };
                *s = Some(s.unwrap_or(0).checked_add(*x).ok_or_else(overflow)?);
            }
            Accumulator::SumDecimal(s) => {
                let x = numeric(v.unwrap());
                *s = Some(s.unwrap_or(Decimal::ZERO).checked_add(x).ok_or_else(overflow)?);
            }
            Accumulator::Avg { sum, n } => {
                *sum = sum.checked_add(numeric(v.unwrap())).ok_or_else(overflow)?;
                *n += 1;
            }
            Accumulator::Min(m) => {
                let v = v.unwrap();
                if m.as_ref().is_none_or(|cur| v < cur) {
                    *m = Some(v.clone());
                }
            }
            Accumulator::Max(m) => {
                let v = v.unwrap();
                if m.as_ref().is_none_or(|cur| v > cur) {
                    *m = Some(v.clone());
                }
            }
        }
        Ok(())
    }

    fn finish(self) -> Result<Value, StorageError> {
        Ok(match self {
            Accumulator::Count(n) => Value::Integer(n),
            Accumulator::SumInteger(s) => s.map_or(Value::Null, Value::Integer),
            Accumulator::SumDecimal(s) => s.map_or(Value::Null, Value::Decimal),
            Accumulator::Avg { n: 0, .. } => Value::Null,
            Accumulator::Avg { sum, n } => {
                Value::Decimal(sum.checked_div(Decimal::from(n)).ok_or(StorageError::Overflow)?)
            }
            Accumulator::Min(m) | Accumulator::Max(m) => m.unwrap_or(Value::Null),
        })
    }
}

/// Numeric value as an exact decimal.
pub(crate) fn numeric(v: &Value) -> Decimal {
    match v {
        Value::Integer(i) => Decimal::from(*i),
        Value::Decimal(d) => *d,
        other => unreachable!("non-numeric value {other} in typed plan"),
    }
}

/// Evaluates `plan` against `source`. The plan is type-checked first, so
/// evaluation itself only fails on arithmetic overflow.
pub fn evaluate(plan: &Plan, source: &dyn DataSource) -> Result<Relation, StorageError> {
    plan.schema(source)?;
    eval(plan, source)
}

fn eval(plan: &Plan, source: &dyn DataSource) -> Result<Relation, StorageError> {
    match plan {
        Plan::Scan { table } => source
            .relation(table)
            .cloned()
            .ok_or_else(|| StorageError::NotLoaded(table.clone())),
        Plan::Select { input, predicate } => {
            let mut rel = eval(input, source)?;
            let p = Compiled::new(predicate, &rel.columns)?;
            rel.rows.retain(|r| p.matches(r));
            Ok(rel)
        }
        Plan::Project { input, columns } => {
            let rel = eval(input, source)?;
            enum Src {
                Col(usize),
                Null,
            }
            let mut schema = Vec::new();
            let mut srcs = Vec::new();
            for p in columns {
                match p {
                    Projection::Column { name } => {
                        let (i, c) = lookup(&rel.columns, name)?;
                        schema.push(c.clone());
                        srcs.push(Src::Col(i));
                    }
                    Projection::Alias { source, name } => {
                        let (i, c) = lookup(&rel.columns, source)?;
                        schema.push(Column::new(name.clone(), c.data_type));
                        srcs.push(Src::Col(i));
                    }
                    Projection::Null { name, data_type } => {
                        schema.push(Column::new(name.clone(), *data_type));
                        srcs.push(Src::Null);
                    }
                }
            }
            let rows = rel
                .rows
                .into_iter()
                .map(|r| {
                    srcs.iter()
                        .map(|s| match s {
                            Src::Col(i) => r[*i].clone(),
                            Src::Null => Value::Null,
                        })
                        .collect()
                })
                .collect();
            Ok(Relation { columns: schema, rows })
        }
        Plan::Rename { input, renames } => {
            let mut rel = eval(input, source)?;
            let targets: Vec<usize> = renames
                .iter()
                .map(|r| lookup(&rel.columns, &r.from).map(|(i, _)| i))
                .collect::<Result<_, _>>()?;
            for (i, r) in targets.into_iter().zip(renames) {
                rel.columns[i].name = r.to.clone();
            }
            Ok(rel)
        }
        Plan::Join { left, right, on } => {
            let l = eval(left, source)?;
            let r = eval(right, source)?;
            let lk: Vec<usize> = on
                .iter()
                .map(|k| lookup(&l.columns, &k.left).map(|(i, _)| i))
                .collect::<Result<_, _>>()?;
            let rk: Vec<usize> = on
                .iter()
                .map(|k| lookup(&r.columns, &k.right).map(|(i, _)| i))
                .collect::<Result<_, _>>()?;
            let mut index: HashMap<Vec<&Value>, Vec<usize>> = HashMap::new();
            for (i, row) in r.rows.iter().enumerate() {
                let key: Vec<&Value> = rk.iter().map(|&k| &row[k]).collect();
                if key.iter().any(|v| v.is_null()) {
                    continue;
                }
                index.entry(key).or_default().push(i);
            }
            let mut rows = Vec::new();
            for lrow in &l.rows {
                let key: Vec<&Value> = lk.iter().map(|&k| &lrow[k]).collect();
                if key.iter().any(|v| v.is_null()) {
                    continue;
                }
                for &ri in index.get(&key).into_iter().flatten() {
                    let mut out = lrow.clone();
                    out.extend(r.rows[ri].iter().cloned());
                    rows.push(out);
                }
            }
            let mut columns = l.columns;
            columns.extend(r.columns);
            Ok(Relation { columns, rows })
        }
        Plan::Union { inputs } => {
            let mut iter = inputs.iter();
            let mut out = eval(iter.next().expect("typed union has inputs"), source)?;
            for p in iter {
                out.rows.extend(eval(p, source)?.rows);
            }
            Ok(out)
        }
        Plan::Aggregate {
            input,
            group_by,
            aggregates,
        } => {
            let rel = eval(input, source)?;
            let gidx: Vec<usize> = group_by
                .iter()
                .map(|g| lookup(&rel.columns, g).map(|(i, _)| i))
                .collect::<Result<_, _>>()?;
            let aidx: Vec<Option<usize>> = aggregates
                .iter()
                .map(|a| {
                    a.column
                        .as_ref()
                        .map(|c| lookup(&rel.columns, c).map(|(i, _)| i))
                        .transpose()
                })
                .collect::<Result<_, _>>()?;
            let new_accs = || -> Vec<Accumulator> {
                aggregates
                    .iter()
                    .zip(&aidx)
                    .map(|(a, i)| Accumulator::new(a.function, i.map(|i| &rel.columns[i])))
                    .collect()
            };
            let mut order: Vec<Row> = Vec::new();
            let mut groups: HashMap<Row, Vec<Accumulator>> = HashMap::new();
            if gidx.is_empty() {
                // a global aggregate yields one row even over empty input
                order.push(Vec::new());
                groups.insert(Vec::new(), new_accs());
            }
            for row in &rel.rows {
                let key: Row = gidx.iter().map(|&i| row[i].clone()).collect();
                let accs = match groups.get_mut(&key) {
                    Some(a) => a,
                    None => {
                        order.push(key.clone());
                        groups.entry(key).or_insert_with(new_accs)
                    }
                };
                for (acc, i) in accs.iter_mut().zip(&aidx) {
                    acc.update(i.map(|i| &row[i]))?;
                }
            }
            let mut columns: Vec<Column> = gidx.iter().map(|&i| rel.columns[i].clone()).collect();
            for (a, i) in aggregates.iter().zip(&aidx) {
                let t = a
                    .function
                    .output_type(i.map(|i| rel.columns[i].data_type))
                    .expect("typed plan");
                columns.push(Column::new(a.output.clone(), t));
            }
            let mut rows = Vec::with_capacity(order.len());
            for key in order {
                let accs = groups.remove(&key).expect("group recorded");
                let mut out = key;
                for acc in accs {
                    out.push(acc.finish()?);
                }
                rows.push(out);
            }
            Ok(Relation { columns, rows })
        }
    }
}
