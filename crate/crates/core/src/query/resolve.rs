//! Name resolution and static checking of queries against a CDL model.

use std::collections::{BTreeMap, BTreeSet};

use super::{CompareOp, CqlQuery, QueryError, QueryOptions};
use crate::model::{CdlModel, Column, Dimension, FactRelationship, ParentChildRel, Property, Role};
use crate::storage::AggregateFunction;
use crate::value::{DataType, Value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedCondition {
    pub property: String,
    pub operator: CompareOp,
    pub values: Vec<Value>,
}

impl ResolvedCondition {
    /// Nulls never satisfy a condition.
    pub fn matches(&self, v: &Value) -> bool {
        if v.is_null() {
            return false;
        }
        match self.operator {
            CompareOp::Equals | CompareOp::In => self.values.contains(v),
            CompareOp::LessThan => v < &self.values[0],
            CompareOp::GreaterThan => v > &self.values[0],
        }
    }
}

/// A level property that becomes an output column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupColumn {
    pub property: String,
    pub output: String,
    pub data_type: DataType,
}

/// A level the query mentions, reached from one role of the fact
/// relationship: a rollup target, or the bottom level of a role when a
/// condition is stated on it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mention {
    pub role: String,
    pub bottom: String,
    pub level: String,
    /// Fact view columns holding the role's bottom-level key.
    pub role_columns: Vec<String>,
    /// Every relationship chain from `bottom` to `level`; empty when the
    /// level is the bottom level itself.
    pub chains: Vec<Vec<ParentChildRel>>,
    pub conditions: Vec<ResolvedCondition>,
    pub keys: Vec<GroupColumn>,
    pub names: Vec<GroupColumn>,
}

impl Mention {
    pub fn group_columns(&self) -> impl Iterator<Item = &GroupColumn> {
        self.keys.iter().chain(&self.names)
    }
}

/// A role kept at its bottom grain without being mentioned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrainColumn {
    pub fact_column: String,
    pub output: String,
    pub data_type: DataType,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedQuery {
    pub name: String,
    pub fact: String,
    pub function: AggregateFunction,
    pub measure: Option<Property>,
    pub aggregate_output: String,
    pub aggregate_type: DataType,
    pub mentions: Vec<Mention>,
    pub grain: Vec<GrainColumn>,
}

impl ResolvedQuery {
    /// Levels the query touches, along rollup chains first, without
    /// duplicates.
    pub fn required_levels(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let mut push = |l: &str| {
            if !out.iter().any(|o| o == l) {
                out.push(l.to_owned());
            }
        };
        for m in &self.mentions {
            for chain in &m.chains {
                for r in chain {
                    push(&r.child);
                    push(&r.parent);
                }
            }
            push(&m.level);
        }
        out
    }

    /// Relationships used by some rollup chain, without duplicates.
    pub fn required_relationships(&self) -> Vec<&ParentChildRel> {
        let mut seen = BTreeSet::new();
        self.mentions
            .iter()
            .flat_map(|m| m.chains.iter().flatten())
            .filter(|r| seen.insert(r.id()))
            .collect()
    }

    pub fn output_columns(&self) -> Vec<Column> {
        let mut cols: Vec<Column> = self
            .mentions
            .iter()
            .flat_map(|m| m.group_columns())
            .map(|g| Column::new(&g.output, g.data_type))
            .collect();
        cols.extend(self.grain.iter().map(|g| Column::new(&g.output, g.data_type)));
        cols.push(Column::new(&self.aggregate_output, self.aggregate_type));
        cols
    }
}

/// Up to three known names close to `name`, best first.
pub(crate) fn candidates<'a>(name: &str, known: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    let lower = name.to_lowercase();
    let mut scored: Vec<(f64, &str)> = known
        .into_iter()
        .map(|k| {
            let score = if k.to_lowercase() == lower {
                2.0
            } else {
                strsim::jaro_winkler(&lower, &k.to_lowercase())
            };
            (score, k)
        })
        .filter(|(s, _)| *s >= 0.75)
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    let mut out: Vec<String> = Vec::new();
    for (_, k) in scored {
        if !out.iter().any(|o| o == k) {
            out.push(k.to_owned());
        }
        if out.len() == 3 {
            break;
        }
    }
    out
}

fn unresolved<'a>(kind: &'static str, name: &str, known: impl IntoIterator<Item = &'a str>) -> QueryError {
    QueryError::Unresolved {
        kind,
        name: name.to_owned(),
        candidates: candidates(name, known),
    }
}

fn bottom_of<'a>(cdl: &'a CdlModel, role: &Role) -> Result<(&'a Dimension, &'a crate::model::Level), QueryError> {
    let dim = cdl.dimension(&role.dimension).ok_or_else(|| {
        QueryError::Invalid(format!(
            "role `{}` refers to unknown dimension `{}`",
            role.name, role.dimension
        ))
    })?;
    let bottom = cdl
        .level(&dim.bottom_level)
        .ok_or_else(|| QueryError::Invalid(format!("dimension `{}` has unknown bottom level", dim.name)))?;
    Ok((dim, bottom))
}

/// All relationship chains from `from` to `to`, checking that the chains
/// only diverge into mutually exclusive branches.
pub(crate) fn rollup_chains(
    rels: &[&ParentChildRel],
    from: &str,
    to: &str,
) -> Result<Vec<Vec<ParentChildRel>>, QueryError> {
    let mut chains = Vec::new();
    let mut stack: Vec<(String, Vec<ParentChildRel>)> = vec![(from.to_owned(), Vec::new())];
    while let Some((node, path)) = stack.pop() {
        if node == to {
            chains.push(path);
            continue;
        }
        for r in rels.iter().rev().filter(|r| r.child == node) {
            if path.iter().any(|p| p.child == r.parent) || r.parent == from {
                continue;
            }
            let mut next = path.clone();
            next.push((*r).clone());
            stack.push((r.parent.clone(), next));
        }
    }
    if from == to {
        return Ok(vec![Vec::new()]);
    }
    if chains.is_empty() {
        return Err(QueryError::Invalid(format!(
            "level `{to}` is not reachable from `{from}`"
        )));
    }
    let mut branches: BTreeMap<&str, BTreeMap<String, &ParentChildRel>> = BTreeMap::new();
    for chain in &chains {
        for r in chain {
            branches.entry(r.child.as_str()).or_default().insert(r.id(), r);
        }
    }
    for (node, out) in branches {
        if out.len() < 2 {
            continue;
        }
        let groups: BTreeSet<Option<&str>> = out.values().map(|r| r.exclusive_group.as_deref()).collect();
        if groups.len() != 1 || groups.contains(&None) {
            return Err(QueryError::AmbiguousRollup {
                from: from.to_owned(),
                to: to.to_owned(),
                reason: format!(
                    "paths diverge at `{node}` into {} without a shared exclusive group",
                    out.keys().cloned().collect::<Vec<_>>().join(", ")
                ),
            });
        }
    }
    Ok(chains)
}

struct Draft<'a> {
    role: &'a Role,
    bottom: &'a crate::model::Level,
    level: &'a crate::model::Level,
    chains: Vec<Vec<ParentChildRel>>,
    conditions: Vec<ResolvedCondition>,
}

pub fn resolve(query: &CqlQuery, cdl: &CdlModel, options: QueryOptions) -> Result<ResolvedQuery, QueryError> {
    let fact: &FactRelationship = cdl.fact_relationship(&query.fact_relationship).ok_or_else(|| {
        unresolved(
            "fact relationship",
            &query.fact_relationship,
            cdl.fact_relationships.iter().map(|f| f.name.as_str()),
        )
    })?;

    let function = query.aggregation.function;
    let measure = match &query.aggregation.measure {
        Some(m) => Some(
            fact.measure(m)
                .ok_or_else(|| unresolved("measure", m, fact.measures.iter().map(|p| p.name.as_str())))?
                .clone(),
        ),
        None if function == AggregateFunction::Count => None,
        None => return Err(QueryError::Invalid(format!("{function}() requires a measure"))),
    };
    let aggregate_type = function
        .output_type(measure.as_ref().map(|m| m.data_type))
        .ok_or_else(|| {
            QueryError::Invalid(format!(
                "{function} is not defined on {} measure `{}`",
                measure.as_ref().map_or(DataType::String, |m| m.data_type),
                measure.as_ref().map_or("", |m| m.name.as_str())
            ))
        })?;
    let aggregate_output = format!("{function}({})", measure.as_ref().map_or("", |m| m.name.as_str()));

    let mut drafts: Vec<Draft> = Vec::new();
    for (dim_name, level_name) in &query.rollups {
        let by_dimension: Vec<&Role> = fact.roles.iter().filter(|r| &r.dimension == dim_name).collect();
        let role = match by_dimension.as_slice() {
            [r] => *r,
            [] => fact.role(dim_name).ok_or_else(|| {
                unresolved(
                    "dimension",
                    dim_name,
                    fact.roles.iter().flat_map(|r| [r.dimension.as_str(), r.name.as_str()]),
                )
            })?,
            many => {
                return Err(QueryError::Invalid(format!(
                    "dimension `{dim_name}` plays several roles ({}); name the role instead",
                    many.iter().map(|r| r.name.as_str()).collect::<Vec<_>>().join(", ")
                )))
            }
        };
        let (dim, bottom) = bottom_of(cdl, role)?;
        let rels = cdl.dimension_relationships(dim);
        let level = cdl.level(level_name).ok_or_else(|| {
            let mut known: Vec<&str> = vec![bottom.name.as_str()];
            known.extend(rels.iter().map(|r| r.parent.as_str()));
            unresolved("level", level_name, known)
        })?;
        let chains = rollup_chains(&rels, &bottom.name, &level.name)?;
        drafts.push(Draft {
            role,
            bottom,
            level,
            chains,
            conditions: Vec::new(),
        });
    }

    for c in &query.conditions {
        let level = cdl
            .level(&c.level)
            .ok_or_else(|| unresolved("level", &c.level, cdl.levels.iter().map(|l| l.name.as_str())))?;
        let prop = level.property(&c.property).ok_or_else(|| {
            unresolved(
                "property",
                &c.property,
                level.properties.iter().map(|p| p.name.as_str()),
            )
        })?;
        let arity_ok = match c.operator {
            CompareOp::In => !c.values.is_empty(),
            _ => c.values.len() == 1,
        };
        if !arity_ok {
            return Err(QueryError::Invalid(format!(
                "condition on {}.{} has {} value(s) for operator {}",
                c.level,
                c.property,
                c.values.len(),
                c.operator.symbol()
            )));
        }
        let values = c
            .values
            .iter()
            .map(|v| v.coerce(prop.data_type))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| QueryError::Invalid(format!("condition on {}.{}: {e}", c.level, c.property)))?;
        let cond = ResolvedCondition {
            property: prop.name.clone(),
            operator: c.operator,
            values,
        };

        let targets: Vec<usize> = drafts
            .iter()
            .enumerate()
            .filter(|(_, d)| d.level.name == level.name)
            .map(|(i, _)| i)
            .collect();
        let idx = match targets.as_slice() {
            [i] => *i,
            [] => {
                let mut roles = Vec::new();
                for r in &fact.roles {
                    if bottom_of(cdl, r)?.1.name == level.name {
                        roles.push(r);
                    }
                }
                match roles.as_slice() {
                    [r] => {
                        let (_, bottom) = bottom_of(cdl, r)?;
                        drafts.push(Draft {
                            role: r,
                            bottom,
                            level: bottom,
                            chains: vec![Vec::new()],
                            conditions: Vec::new(),
                        });
                        drafts.len() - 1
                    }
                    [] => {
                        return Err(QueryError::Invalid(format!(
                            "condition level `{}` is neither a rollup target nor the bottom level of a role of `{}`",
                            level.name, fact.name
                        )))
                    }
                    many => {
                        return Err(QueryError::Invalid(format!(
                            "condition level `{}` is the bottom level of several roles ({})",
                            level.name,
                            many.iter().map(|r| r.name.as_str()).collect::<Vec<_>>().join(", ")
                        )))
                    }
                }
            }
            _ => {
                return Err(QueryError::Invalid(format!(
                    "condition level `{}` is the rollup target of several dimensions",
                    level.name
                )))
            }
        };
        drafts[idx].conditions.push(cond);
    }

    let mut grain_roles = Vec::new();
    if options.keep_unmentioned {
        for r in &fact.roles {
            if !drafts.iter().any(|d| d.role.name == r.name) {
                grain_roles.push((r, bottom_of(cdl, r)?.1));
            }
        }
    }

    // a level reached through more than one role gets role-qualified columns
    let mut roles_per_level: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for d in &drafts {
        roles_per_level.entry(&d.level.name).or_default().insert(&d.role.name);
    }
    for (r, b) in &grain_roles {
        roles_per_level.entry(&b.name).or_default().insert(&r.name);
    }
    let output = |level: &str, role: &str, prop: &str| -> String {
        if roles_per_level[level].len() > 1 {
            format!("{level}[{role}].{prop}")
        } else {
            format!("{level}.{prop}")
        }
    };

    let mentions = drafts
        .iter()
        .map(|d| {
            let col = |p: &Property| GroupColumn {
                property: p.name.clone(),
                output: output(&d.level.name, &d.role.name, &p.name),
                data_type: p.data_type,
            };
            Mention {
                role: d.role.name.clone(),
                bottom: d.bottom.name.clone(),
                level: d.level.name.clone(),
                role_columns: d.bottom.key.iter().map(|k| format!("{}.{k}", d.role.name)).collect(),
                chains: d.chains.iter().filter(|c| !c.is_empty()).cloned().collect(),
                conditions: d.conditions.clone(),
                keys: d.level.key_properties().map(col).collect(),
                names: d.level.name_like_properties().map(col).collect(),
            }
        })
        .collect();
    let grain = grain_roles
        .iter()
        .flat_map(|(r, b)| {
            b.key_properties().map(|k| GrainColumn {
                fact_column: format!("{}.{}", r.name, k.name),
                output: output(&b.name, &r.name, &k.name),
                data_type: k.data_type,
            })
        })
        .collect();

    Ok(ResolvedQuery {
        name: query.display_name(),
        fact: fact.name.clone(),
        function,
        measure,
        aggregate_output,
        aggregate_type,
        mentions,
        grain,
    })
}
