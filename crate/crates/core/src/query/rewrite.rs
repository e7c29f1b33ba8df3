//! Rewriting resolved queries into plans over compiled views.

use super::resolve::{resolve, Mention, ResolvedCondition, ResolvedQuery};
use super::{CompareOp, CqlQuery, QueryError, QueryOptions};
use crate::compiler::{fact_view_name, level_view_name, pc_column, pc_view_name, ViewSet};
use crate::model::{CdlModel, ParentChildRel};
use crate::storage::{AggregateExpr, Plan, Predicate, Projection, Relation, Store};

fn predicate(c: &ResolvedCondition) -> Predicate {
    let column = c.property.clone();
    match c.operator {
        CompareOp::Equals => Predicate::Eq {
            column,
            value: c.values[0].clone(),
        },
        CompareOp::In => Predicate::In {
            column,
            values: c.values.clone(),
        },
        CompareOp::LessThan => Predicate::Lt {
            column,
            value: c.values[0].clone(),
        },
        CompareOp::GreaterThan => Predicate::Gt {
            column,
            value: c.values[0].clone(),
        },
    }
}

/// Composes a chain of parent-child views into a bridge from bottom-level
/// keys (`~b.k`) to target-level keys (`~c.k`). Bag semantics: a bottom
/// member reached along several paths appears once per path.
fn chain_plan(cdl: &CdlModel, chain: &[ParentChildRel]) -> Plan {
    let keys = |level: &str| cdl.level(level).map(|l| l.key.clone()).unwrap_or_default();
    let first = &chain[0];
    let bottom_keys = keys(&first.child);
    let mut cols: Vec<Projection> = bottom_keys
        .iter()
        .map(|k| Projection::alias(pc_column(&first.child, k), format!("~b.{k}")))
        .collect();
    let mut current = keys(&first.parent);
    cols.extend(
        current
            .iter()
            .map(|k| Projection::alias(pc_column(&first.parent, k), format!("~c.{k}"))),
    );
    let mut plan = Plan::scan(pc_view_name(first)).project(cols);

    for rel in &chain[1..] {
        let next = keys(&rel.parent);
        let mut cols: Vec<Projection> = current
            .iter()
            .map(|k| Projection::alias(pc_column(&rel.child, k), format!("~j.{k}")))
            .collect();
        cols.extend(
            next.iter()
                .map(|k| Projection::alias(pc_column(&rel.parent, k), format!("~n.{k}"))),
        );
        let step = Plan::scan(pc_view_name(rel)).project(cols);
        let on: Vec<(String, String)> = current.iter().map(|k| (format!("~c.{k}"), format!("~j.{k}"))).collect();
        let mut keep: Vec<Projection> = bottom_keys
            .iter()
            .map(|k| Projection::column(format!("~b.{k}")))
            .collect();
        keep.extend(
            next.iter()
                .map(|k| Projection::alias(format!("~n.{k}"), format!("~c.{k}"))),
        );
        plan = plan.join(step, on).project(keep);
        current = next;
    }
    plan
}

fn internal(i: usize, part: &str, name: &str) -> String {
    format!("${i}.{part}.{name}")
}

fn attach(cdl: &CdlModel, plan: Plan, i: usize, m: &Mention) -> Plan {
    let bottom_keys = cdl.level(&m.bottom).map(|l| l.key.clone()).unwrap_or_default();
    let (plan, target_cols): (Plan, Vec<String>) = if m.chains.is_empty() {
        (plan, m.role_columns.clone())
    } else {
        let bridges: Vec<Plan> = m
            .chains
            .iter()
            .map(|chain| {
                let target_keys = cdl.level(&m.level).map(|l| l.key.clone()).unwrap_or_default();
                let mut cols: Vec<Projection> = bottom_keys
                    .iter()
                    .map(|k| Projection::alias(format!("~b.{k}"), internal(i, "b", k)))
                    .collect();
                cols.extend(
                    target_keys
                        .iter()
                        .map(|k| Projection::alias(format!("~c.{k}"), internal(i, "t", k))),
                );
                chain_plan(cdl, chain).project(cols)
            })
            .collect();
        let on: Vec<(String, String)> = m
            .role_columns
            .iter()
            .zip(&bottom_keys)
            .map(|(rc, k)| (rc.clone(), internal(i, "b", k)))
            .collect();
        let targets = m.keys.iter().map(|g| internal(i, "t", &g.property)).collect();
        (plan.join(Plan::union(bridges), on), targets)
    };

    let mut cols: Vec<Projection> = m
        .keys
        .iter()
        .map(|g| Projection::alias(&g.property, internal(i, "k", &g.property)))
        .collect();
    cols.extend(
        m.names
            .iter()
            .map(|g| Projection::alias(&g.property, internal(i, "n", &g.property))),
    );
    let names: Vec<String> = cols.iter().map(|p| p.output_name().to_owned()).collect();
    let members = Plan::scan(level_view_name(&m.level))
        .select(Predicate::and(m.conditions.iter().map(predicate).collect()))
        .project(cols)
        .distinct(names);
    let on: Vec<(String, String)> = target_cols
        .into_iter()
        .zip(&m.keys)
        .map(|(t, g)| (t, internal(i, "k", &g.property)))
        .collect();
    plan.join(members, on)
}

/// Checks that every view the query needs exists.
fn require_views(resolved: &ResolvedQuery, views: &ViewSet) -> Result<(), QueryError> {
    if views.fact(&resolved.fact).is_none() {
        return Err(QueryError::UnmappedFactRelationship(resolved.fact.clone()));
    }
    for level in resolved.required_levels() {
        if views.level(&level).is_none() {
            return Err(QueryError::UnmappedLevel(level));
        }
    }
    for rel in resolved.required_relationships() {
        if views.parent_child(rel).is_none() {
            return Err(QueryError::MissingView(
                pc_view_name(rel),
                "the relationship did not compile".into(),
            ));
        }
    }
    Ok(())
}

/// Builds the plan for a resolved query: the fact view, joined per mention
/// with the union of its rollup chains and with the mentioned level's view
/// (filtered by the conditions stated on it), then grouped by the mentioned
/// levels' key and name-like properties.
pub fn rewrite(resolved: &ResolvedQuery, views: &ViewSet, cdl: &CdlModel) -> Result<Plan, QueryError> {
    require_views(resolved, views)?;
    let mut plan = Plan::scan(fact_view_name(&resolved.fact));
    for (i, m) in resolved.mentions.iter().enumerate() {
        plan = attach(cdl, plan, i, m);
    }

    let mut group_by = Vec::new();
    let mut outputs = Vec::new();
    for (i, m) in resolved.mentions.iter().enumerate() {
        for g in &m.keys {
            group_by.push(internal(i, "k", &g.property));
            outputs.push(g.output.clone());
        }
        for g in &m.names {
            group_by.push(internal(i, "n", &g.property));
            outputs.push(g.output.clone());
        }
    }
    for g in &resolved.grain {
        group_by.push(g.fact_column.clone());
        outputs.push(g.output.clone());
    }
    let aggregate = AggregateExpr {
        function: resolved.function,
        column: resolved.measure.as_ref().map(|m| m.name.clone()),
        output: "$agg".into(),
    };
    let mut cols: Vec<Projection> = group_by
        .iter()
        .zip(&outputs)
        .map(|(g, o)| Projection::alias(g, o))
        .collect();
    cols.push(Projection::alias("$agg", &resolved.aggregate_output));
    Ok(plan.aggregate(group_by, vec![aggregate]).project(cols))
}

/// Resolves, rewrites and evaluates a query. Rows come back sorted.
pub fn execute(
    query: &CqlQuery,
    cdl: &CdlModel,
    views: &ViewSet,
    store: &Store,
    options: QueryOptions,
) -> Result<Relation, QueryError> {
    let resolved = resolve(query, cdl, options)?;
    let plan = rewrite(&resolved, views, cdl)?;
    Ok(views.evaluate(&plan, store)?.sorted())
}
