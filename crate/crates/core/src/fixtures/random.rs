//! Seeded random instances (models plus strict, covering data) and random
//! queries over them.
//!
//! Every dimension `D<d>` is a chain of levels backed by one table per level
//! (`T<d>_<i>`, with `id`, `label`, `kind`, `extra` and a `parent` foreign
//! key). Options drawn per dimension:
//!
//! * an exclusive split: the second level is replaced by `D<d>A`/`D<d>B`,
//!   both mapped to `T<d>_1` under conditions on `kind`;
//! * a spanning bottom level whose `Tag<d>` property lives in `T<d>_1`;
//! * a role resolved through a surrogate key instead of a mapped column;
//! * a second role on the same dimension.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rust_decimal::Decimal;

use super::Dataset;
use crate::model::{
    Cardinality, CdlModel, Column, Condition, ConditionOp, Dimension, FactRelationship, ForeignKey, FragmentKind,
    Hierarchy, Level, MappingFragment, MdlModel, ParentChildRel, Property, PropertyMapping, Role, SdlModel, Table,
};
use crate::query::{CompareOp, CqlQuery, Literal};
use crate::storage::{AggregateFunction, Relation, Row};
use crate::value::{DataType, Value};

pub const FACT: &str = "F";
pub const FACT_TABLE: &str = "FT";
pub const MEASURE: &str = "M";

const LABELS: &[&str] = &["red", "green", "blue", "amber", "teal", "plum"];
const FLAGS: &[&str] = &["x", "y", "z"];

#[derive(Debug, Clone)]
pub struct RandomInstance {
    pub seed: u64,
    pub cdl: CdlModel,
    pub sdl: SdlModel,
    pub mdl: MdlModel,
    pub data: Dataset,
}

struct DimensionPlan {
    depth: usize,
    split: bool,
    spanning: bool,
    surrogate: bool,
    shared: bool,
}

fn level_name(d: usize, i: usize) -> String {
    format!("D{d}L{i}")
}

fn key_property(level: &str) -> String {
    format!("{level}Key")
}

fn name_property(level: &str) -> String {
    format!("{level}Name")
}

fn table_name(d: usize, i: usize) -> String {
    format!("T{d}_{i}")
}

fn int_col(name: &str) -> Column {
    Column::new(name, DataType::Integer)
}

fn str_col(name: &str) -> Column {
    Column::new(name, DataType::String)
}

fn simple_level(name: &str) -> Level {
    Level {
        name: name.to_owned(),
        properties: vec![
            Property::new(key_property(name), DataType::Integer),
            Property::new(name_property(name), DataType::String),
        ],
        key: vec![key_property(name)],
    }
}

fn level_fragment(level: &str, table: &str, conditions: Vec<Condition>) -> MappingFragment {
    MappingFragment {
        name: Some(format!("{level}Map")),
        kind: FragmentKind::Level,
        entity: level.to_owned(),
        table: table.to_owned(),
        property_mappings: vec![
            PropertyMapping {
                property: key_property(level),
                column: "id".into(),
            },
            PropertyMapping {
                property: name_property(level),
                column: "label".into(),
            },
        ],
        conditions,
    }
}

fn kind_condition(kind: &str) -> Condition {
    Condition {
        column: "kind".into(),
        operator: ConditionOp::Equals,
        values: vec![kind.to_owned()],
    }
}

const ONE: Cardinality = Cardinality::ONE;
const MANY: Cardinality = Cardinality::ONE_OR_MORE;
const OPTIONAL: Cardinality = Cardinality::OPTIONAL;
const ANY: Cardinality = Cardinality::ANY;

/// Generates a random instance. The same seed always yields the same
/// instance.
pub fn random_instance(seed: u64) -> RandomInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = rng.gen_range(2..=3);
    let plans: Vec<DimensionPlan> = (0..dims)
        .map(|d| {
            let depth = rng.gen_range(1..=4);
            let shared = d == 0 && rng.gen_bool(0.3);
            DimensionPlan {
                depth,
                split: depth >= 2 && rng.gen_bool(0.4),
                spanning: depth >= 2 && rng.gen_bool(0.3),
                // two foreign keys into the same table leave no unique path
                surrogate: !shared && rng.gen_bool(0.3),
                shared,
            }
        })
        .collect();

    let mut cdl = CdlModel {
        name: format!("Random{seed}"),
        ..Default::default()
    };
    let mut sdl = SdlModel {
        name: format!("RandomStore{seed}"),
        ..Default::default()
    };
    let mut mdl = MdlModel::default();
    let mut data = Dataset::default();

    let mut fact_columns = vec![int_col("id")];
    let mut fact_fks = Vec::new();
    let mut fact_mappings = Vec::new();
    let mut roles = Vec::new();
    // fact column and the values it may reference
    let mut fact_refs: Vec<(String, Vec<Value>)> = Vec::new();

    for (d, plan) in plans.iter().enumerate() {
        let dim = format!("D{d}");
        let mut rels: Vec<ParentChildRel> = Vec::new();

        // Tables from the top down so every row can pick an existing parent.
        let mut ids: Vec<Vec<i64>> = vec![Vec::new(); plan.depth];
        let mut rows: Vec<Vec<Row>> = vec![Vec::new(); plan.depth];
        let mut next_id = 1i64;
        for i in (0..plan.depth).rev() {
            let count = if i + 1 == plan.depth {
                rng.gen_range(1..=3)
            } else {
                ids[i + 1].len() * rng.gen_range(1..=3)
            };
            for n in 0..count {
                let id = next_id;
                next_id += 1;
                let parent = if i + 1 < plan.depth {
                    // covering: the first rows take every parent once
                    let ps = &ids[i + 1];
                    Value::Integer(if n < ps.len() {
                        ps[n]
                    } else {
                        *ps.choose(&mut rng).unwrap()
                    })
                } else {
                    Value::Null
                };
                let kind = if rng.gen_bool(0.5) { "a" } else { "b" };
                let mut row = vec![
                    Value::Integer(id),
                    Value::String(LABELS.choose(&mut rng).unwrap().to_string()),
                    Value::String(kind.into()),
                    Value::String(format!("tag{}", rng.gen_range(0..3))),
                    parent,
                ];
                if i == 0 {
                    row.push(Value::Integer(id + 1000));
                }
                ids[i].push(id);
                rows[i].push(row);
            }
        }

        for (i, level_rows) in rows.iter_mut().enumerate().take(plan.depth) {
            let mut columns = vec![
                int_col("id"),
                str_col("label"),
                str_col("kind"),
                str_col("extra"),
                int_col("parent"),
            ];
            let mut primary_key = vec!["id".to_owned()];
            if i == 0 {
                columns.push(int_col("sk"));
                if plan.surrogate {
                    primary_key = vec!["sk".to_owned()];
                }
            }
            let foreign_keys = if i + 1 < plan.depth {
                vec![ForeignKey {
                    columns: vec!["parent".into()],
                    table: table_name(d, i + 1),
                    target_columns: vec!["id".into()],
                }]
            } else {
                Vec::new()
            };
            let table = Table {
                name: table_name(d, i),
                columns: columns.clone(),
                primary_key,
                foreign_keys,
            };
            data.tables.insert(
                table.name.clone(),
                Relation {
                    columns,
                    rows: std::mem::take(level_rows),
                },
            );
            sdl.dimension_tables.push(table);
        }

        let bottom = level_name(d, 0);
        let mut bottom_level = simple_level(&bottom);
        let mut bottom_fragments = vec![level_fragment(&bottom, &table_name(d, 0), Vec::new())];
        if plan.spanning {
            let tag = format!("Tag{d}");
            bottom_level.properties.push(Property::new(&tag, DataType::String));
            bottom_fragments.push(MappingFragment {
                name: Some(format!("{bottom}TagMap")),
                kind: FragmentKind::Level,
                entity: bottom.clone(),
                table: table_name(d, 1),
                property_mappings: vec![PropertyMapping {
                    property: tag,
                    column: "extra".into(),
                }],
                conditions: Vec::new(),
            });
        }
        cdl.levels.push(bottom_level);
        mdl.fragments.extend(bottom_fragments);

        for i in 1..plan.depth {
            let name = level_name(d, i);
            if plan.split && i == 1 {
                for kind in ["a", "b"] {
                    let split = format!("D{d}{}", kind.to_uppercase());
                    cdl.levels.push(simple_level(&split));
                    mdl.fragments
                        .push(level_fragment(&split, &table_name(d, 1), vec![kind_condition(kind)]));
                    rels.push(ParentChildRel::new(&bottom, &split, ANY, OPTIONAL).exclusive(&format!("G{d}")));
                    if plan.depth > 2 {
                        rels.push(ParentChildRel::new(&split, &level_name(d, 2), ANY, ONE));
                    }
                }
                continue;
            }
            cdl.levels.push(simple_level(&name));
            mdl.fragments.push(level_fragment(&name, &table_name(d, i), Vec::new()));
            if !(plan.split && i == 2) {
                let child = level_name(d, i - 1);
                rels.push(ParentChildRel::new(&child, &name, MANY, ONE));
            }
        }

        let hierarchy = format!("H{d}");
        let explicit = rng.gen_bool(0.5);
        cdl.hierarchies.push(Hierarchy {
            name: hierarchy.clone(),
            relationships: rels,
        });
        cdl.dimensions.push(Dimension {
            name: dim.clone(),
            bottom_level: bottom.clone(),
            hierarchies: if explicit { vec![hierarchy] } else { Vec::new() },
        });

        let bottom_values = |col: usize| -> Vec<Value> {
            data.tables[&table_name(d, 0)]
                .rows
                .iter()
                .map(|r| r[col].clone())
                .collect()
        };
        let role_names: Vec<String> = if plan.shared {
            vec![format!("R{d}"), format!("R{d}b")]
        } else {
            vec![format!("R{d}")]
        };
        for role in role_names {
            let column = format!("{}_ref", role.to_lowercase());
            fact_columns.push(int_col(&column));
            let target = if plan.surrogate { "sk" } else { "id" };
            fact_fks.push(ForeignKey {
                columns: vec![column.clone()],
                table: table_name(d, 0),
                target_columns: vec![target.into()],
            });
            if !plan.surrogate {
                fact_mappings.push(PropertyMapping {
                    property: format!("{role}.{}", key_property(&bottom)),
                    column: column.clone(),
                });
            }
            fact_refs.push((column, bottom_values(if plan.surrogate { 5 } else { 0 })));
            roles.push(Role {
                name: role,
                dimension: dim.clone(),
            });
        }
    }

    let measure_type = if rng.gen_bool(0.5) {
        DataType::Integer
    } else {
        DataType::Decimal
    };
    fact_columns.extend([Column::new("m", measure_type), str_col("p"), str_col("flag")]);
    fact_mappings.push(PropertyMapping {
        property: MEASURE.into(),
        column: "m".into(),
    });
    fact_mappings.push(PropertyMapping {
        property: "P".into(),
        column: "p".into(),
    });
    let fact_conditions = if rng.gen_bool(0.3) {
        vec![Condition {
            column: "flag".into(),
            operator: ConditionOp::In,
            values: vec!["x".into(), "y".into()],
        }]
    } else {
        Vec::new()
    };

    let facts = rng.gen_range(0..=60);
    let mut fact_rows = Vec::with_capacity(facts);
    for n in 0..facts {
        let mut row = vec![Value::Integer(n as i64 + 1)];
        for (_, values) in &fact_refs {
            row.push(values.choose(&mut rng).unwrap().clone());
        }
        let m = if rng.gen_bool(0.1) {
            Value::Null
        } else if measure_type == DataType::Integer {
            Value::Integer(rng.gen_range(-50..500))
        } else {
            Value::Decimal(Decimal::new(rng.gen_range(-5000..50000), 2))
        };
        row.push(m);
        row.push(Value::String(LABELS.choose(&mut rng).unwrap().to_string()));
        row.push(Value::String(FLAGS.choose(&mut rng).unwrap().to_string()));
        fact_rows.push(row);
    }
    data.tables.insert(
        FACT_TABLE.into(),
        Relation {
            columns: fact_columns.clone(),
            rows: fact_rows,
        },
    );
    sdl.fact_tables.push(Table {
        name: FACT_TABLE.into(),
        columns: fact_columns,
        primary_key: vec!["id".into()],
        foreign_keys: fact_fks,
    });
    cdl.fact_relationships.push(FactRelationship {
        name: FACT.into(),
        roles,
        measures: vec![Property::new(MEASURE, measure_type)],
        properties: vec![Property::new("P", DataType::String)],
    });
    mdl.fragments.push(MappingFragment {
        name: Some("FMap".into()),
        kind: FragmentKind::FactRelationship,
        entity: FACT.into(),
        table: FACT_TABLE.into(),
        property_mappings: fact_mappings,
        conditions: fact_conditions,
    });

    RandomInstance {
        seed,
        cdl,
        sdl,
        mdl,
        data,
    }
}

impl RandomInstance {
    /// Values a level property takes in the data, read through its mapping.
    fn property_values(&self, level: &str, property: &str) -> Vec<Value> {
        let mut out = Vec::new();
        for f in self
            .mdl
            .fragments
            .iter()
            .filter(|f| f.kind == FragmentKind::Level && f.entity == level)
        {
            if let (Some(col), Some(rel)) = (f.column_for(property), self.data.tables.get(&f.table)) {
                let i = rel
                    .columns
                    .iter()
                    .position(|c| c.name == col)
                    .expect("mapped column exists");
                out.extend(rel.rows.iter().map(|r| r[i].clone()));
            }
        }
        out.sort();
        out.dedup();
        out
    }

    /// Levels reachable from `level` by rolling up, including itself.
    fn reachable(&self, level: &str) -> Vec<String> {
        let mut out = vec![level.to_owned()];
        let mut i = 0;
        while i < out.len() {
            for r in self.cdl.relationships() {
                if r.child == out[i] && !out.contains(&r.parent) {
                    out.push(r.parent.clone());
                }
            }
            i += 1;
        }
        out
    }

    /// A random query whose literals mostly come from the data.
    pub fn random_query(&self, rng: &mut impl Rng) -> CqlQuery {
        let functions = [
            AggregateFunction::Sum,
            AggregateFunction::Count,
            AggregateFunction::Avg,
            AggregateFunction::Min,
            AggregateFunction::Max,
        ];
        let function = *functions.choose(rng).unwrap();
        let measure = (function != AggregateFunction::Count || rng.gen_bool(0.3)).then_some(MEASURE);
        let mut q = CqlQuery::new(FACT, function, measure);
        let fact = &self.cdl.fact_relationships[0];

        let mut mentionable: Vec<String> = Vec::new();
        for role in &fact.roles {
            let dim = self.cdl.dimension(&role.dimension).unwrap();
            let shared = fact.roles.iter().filter(|r| r.dimension == role.dimension).count() > 1;
            if !shared {
                mentionable.push(dim.bottom_level.clone());
            }
            if rng.gen_bool(0.5) {
                let target = self.reachable(&dim.bottom_level).choose(rng).unwrap().clone();
                let name = if shared { &role.name } else { &dim.name };
                q = q.rollup(name, &target);
                mentionable.push(target);
            }
        }
        mentionable.sort();
        mentionable.dedup();

        for _ in 0..rng.gen_range(0..=2) {
            let Some(level) = mentionable.choose(rng) else { break };
            let def = self.cdl.level(level).unwrap();
            let prop = def.properties.choose(rng).unwrap();
            let mut values = self.property_values(level, &prop.name);
            if values.is_empty() || rng.gen_bool(0.05) {
                values.push(match prop.data_type {
                    DataType::Integer => Value::Integer(99_999),
                    _ => Value::String("absent".into()),
                });
            }
            let pick = |rng: &mut dyn rand::RngCore| Literal::from_value(values.choose(rng).unwrap());
            let (op, lits) = match rng.gen_range(0..4) {
                0 => (CompareOp::Equals, vec![pick(rng)]),
                1 => (CompareOp::In, (0..rng.gen_range(1..=3)).map(|_| pick(rng)).collect()),
                2 => (CompareOp::LessThan, vec![pick(rng)]),
                _ => (CompareOp::GreaterThan, vec![pick(rng)]),
            };
            q = q.condition(level, &prop.name, op, lits);
        }
        q
    }

    pub fn random_queries(&self, seed: u64, n: usize) -> Vec<CqlQuery> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| self.random_query(&mut rng)).collect()
    }

    /// Row counts per table.
    pub fn table_sizes(&self) -> BTreeMap<String, usize> {
        self.data.tables.iter().map(|(k, v)| (k.clone(), v.len())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_cdl, validate_mdl, validate_sdl};

    #[test]
    fn instances_are_deterministic() {
        let a = random_instance(7);
        let b = random_instance(7);
        assert_eq!(a.cdl, b.cdl);
        assert_eq!(a.data, b.data);
    }

    #[test]
    fn instances_validate() {
        for seed in 0..50 {
            let r = random_instance(seed);
            let mut ds = validate_cdl(&r.cdl);
            ds.extend(validate_sdl(&r.sdl));
            ds.extend(validate_mdl(&r.cdl, &r.sdl, &r.mdl));
            let errors: Vec<_> = ds.iter().filter(|d| d.is_error()).collect();
            assert!(errors.is_empty(), "seed {seed}: {errors:?}");
        }
    }
}
