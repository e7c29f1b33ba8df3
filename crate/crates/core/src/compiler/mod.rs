//! Compilation of mapping fragments into view definitions.
//!
//! Each mapped level, each parent-child relationship between mapped levels,
//! and each mapped fact relationship becomes one [`ViewDefinition`] whose
//! body is a [`Plan`] over the store's base tables (or over other views).
//! Views are virtual by default: [`ViewSet::expand`] inlines their bodies
//! into a plan unless the store holds a materialized snapshot.

mod checks;
mod paths;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;
use serde_json::json;

use crate::model::{
    CdlModel, Column, Condition, ConditionOp, Diagnostic, FragmentKind, Level, MappingFragment, MdlModel,
    ParentChildRel, SdlModel,
};
use crate::storage::{evaluate, DataSource, Plan, Predicate, Projection, Relation, StorageError, Store};
use crate::value::Value;

pub use checks::{
    check_all, check_cardinalities, check_exclusivity, check_summarizability, CardinalitySide, CardinalityViolation,
    CheckReport, ExclusivityViolation, HierarchyReport, Witness,
};
pub use paths::{shortest_path, JoinStep, PathError};

pub const VIEW_FORMAT_VERSION: u32 = 1;

pub fn level_view_name(level: &str) -> String {
    format!("level:{level}")
}

pub fn pc_view_name(rel: &ParentChildRel) -> String {
    format!("pc:{}", rel.id())
}

pub fn fact_view_name(fact: &str) -> String {
    format!("fact:{fact}")
}

/// Column name of a key property inside a parent-child view.
pub fn pc_column(level: &str, key: &str) -> String {
    format!("{level}.{key}")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum ViewTarget {
    Level { name: String },
    ParentChild { child: String, parent: String },
    FactRelationship { name: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ViewDefinition {
    pub name: String,
    pub target: ViewTarget,
    pub columns: Vec<Column>,
    pub body: Plan,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ViewSet {
    views: Vec<ViewDefinition>,
    index: HashMap<String, usize>,
}

impl ViewSet {
    fn push(&mut self, view: ViewDefinition) {
        self.index.insert(view.name.clone(), self.views.len());
        self.views.push(view);
    }

    pub fn get(&self, name: &str) -> Option<&ViewDefinition> {
        self.index.get(name).map(|&i| &self.views[i])
    }

    pub fn level(&self, level: &str) -> Option<&ViewDefinition> {
        self.get(&level_view_name(level))
    }

    pub fn parent_child(&self, rel: &ParentChildRel) -> Option<&ViewDefinition> {
        self.get(&pc_view_name(rel))
    }

    pub fn fact(&self, fact: &str) -> Option<&ViewDefinition> {
        self.get(&fact_view_name(fact))
    }

    pub fn iter(&self) -> impl Iterator<Item = &ViewDefinition> {
        self.views.iter()
    }

    pub fn len(&self) -> usize {
        self.views.len()
    }

    pub fn is_empty(&self) -> bool {
        self.views.is_empty()
    }

    /// Replaces every scan of a view that `store` has not materialized with
    /// the view's body, recursively.
    pub fn expand(&self, plan: &Plan, store: &Store) -> Plan {
        match plan {
            Plan::Scan { table } => match self.get(table) {
                Some(v) if !store.has_view(table) => self.expand(&v.body, store),
                _ => plan.clone(),
            },
            Plan::Select { input, predicate } => Plan::Select {
                input: Box::new(self.expand(input, store)),
                predicate: predicate.clone(),
            },
            Plan::Project { input, columns } => Plan::Project {
                input: Box::new(self.expand(input, store)),
                columns: columns.clone(),
            },
            Plan::Rename { input, renames } => Plan::Rename {
                input: Box::new(self.expand(input, store)),
                renames: renames.clone(),
            },
            Plan::Join { left, right, on } => Plan::Join {
                left: Box::new(self.expand(left, store)),
                right: Box::new(self.expand(right, store)),
                on: on.clone(),
            },
            Plan::Union { inputs } => Plan::Union {
                inputs: inputs.iter().map(|p| self.expand(p, store)).collect(),
            },
            Plan::Aggregate {
                input,
                group_by,
                aggregates,
            } => Plan::Aggregate {
                input: Box::new(self.expand(input, store)),
                group_by: group_by.clone(),
                aggregates: aggregates.clone(),
            },
        }
    }

    /// Evaluates a plan that may scan views.
    pub fn evaluate(&self, plan: &Plan, store: &Store) -> Result<Relation, StorageError> {
        evaluate(&self.expand(plan, store), store as &dyn DataSource)
    }

    /// Current contents of the named view.
    pub fn evaluate_view(&self, name: &str, store: &Store) -> Result<Relation, StorageError> {
        self.evaluate(&Plan::scan(name), store)
    }

    /// Snapshots every view into the store. The store must not be frozen.
    pub fn materialize_all(&self, store: &mut Store) -> Result<(), StorageError> {
        for v in &self.views {
            let plan = self.expand(&v.body, store);
            store.materialize_view(&v.name, &plan)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "formatVersion": VIEW_FORMAT_VERSION,
            "views": self.views,
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct Compilation {
    pub views: ViewSet,
    pub diagnostics: Vec<Diagnostic>,
}

impl Compilation {
    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(Diagnostic::is_error)
    }
}

/// The slice of a level backed by one table: one fragment, or several
/// same-table fragments merged with their conditions conjoined.
#[derive(Debug, Clone)]
pub(crate) struct Part {
    pub table: String,
    pub mappings: BTreeMap<String, String>,
    pub conditions: Vec<Condition>,
}

impl Part {
    fn from_fragment(f: &MappingFragment) -> Self {
        Part {
            table: f.table.clone(),
            mappings: f
                .property_mappings
                .iter()
                .map(|m| (m.property.clone(), m.column.clone()))
                .collect(),
            conditions: f.conditions.clone(),
        }
    }

    fn maps_key(&self, level: &Level) -> bool {
        level.key.iter().all(|k| self.mappings.contains_key(k))
    }
}

#[derive(Debug, Clone)]
pub(crate) enum LevelShape {
    /// Alternative populations with identical property sets.
    Union(Vec<Part>),
    /// Disjoint property sets joined to the part that maps the key.
    Joined { anchor: Part, others: Vec<Part> },
}

impl LevelShape {
    /// The parts that supply the level's key, each with its own conditions.
    pub(crate) fn key_sources(&self) -> Vec<&Part> {
        match self {
            LevelShape::Union(parts) => parts.iter().collect(),
            LevelShape::Joined { anchor, .. } => vec![anchor],
        }
    }
}

fn level_shape(level: &Level, fragments: &[&MappingFragment]) -> Result<LevelShape, Diagnostic> {
    let path = format!("level:{}", level.name);
    let sets: BTreeSet<BTreeSet<&str>> = fragments.iter().map(|f| f.mapped_properties()).collect();
    if sets.len() == 1 {
        let parts: Vec<Part> = fragments.iter().map(|f| Part::from_fragment(f)).collect();
        if !parts[0].maps_key(level) {
            return Err(unmapped_key(level, &path));
        }
        return Ok(LevelShape::Union(parts));
    }

    let mut by_table: Vec<Part> = Vec::new();
    for f in fragments {
        let part = Part::from_fragment(f);
        match by_table.iter_mut().find(|p| p.table == part.table) {
            None => by_table.push(part),
            Some(existing) => {
                if part.mappings.keys().any(|k| existing.mappings.contains_key(k)) {
                    return Err(Diagnostic::error(
                        "overlapping-fragments",
                        path,
                        format!(
                            "fragments of level `{}` on table `{}` map overlapping but different property sets",
                            level.name, part.table
                        ),
                    ));
                }
                existing.mappings.extend(part.mappings);
                existing.conditions.extend(part.conditions);
            }
        }
    }
    for (i, a) in by_table.iter().enumerate() {
        for b in &by_table[i + 1..] {
            if let Some(p) = a.mappings.keys().find(|k| b.mappings.contains_key(*k)) {
                return Err(Diagnostic::error(
                    "overlapping-fragments",
                    path,
                    format!(
                        "property `{p}` of level `{}` is mapped by both `{}` and `{}`",
                        level.name, a.table, b.table
                    ),
                ));
            }
        }
    }
    let Some(anchor_idx) = by_table.iter().position(|p| p.maps_key(level)) else {
        return Err(unmapped_key(level, &path));
    };
    let anchor = by_table.remove(anchor_idx);
    Ok(LevelShape::Joined {
        anchor,
        others: by_table,
    })
}

fn unmapped_key(level: &Level, path: &str) -> Diagnostic {
    Diagnostic::error(
        "unmapped-key",
        path,
        format!(
            "key ({}) of level `{}` is not mapped by a single table",
            level.key.join(", "),
            level.name
        ),
    )
}

fn qualified(alias: &str, column: &str) -> String {
    format!("{alias}.{column}")
}

/// A scan whose columns are renamed to `alias.column`.
fn qualified_scan(sdl: &SdlModel, table: &str, alias: &str) -> Plan {
    let cols = sdl
        .table(table)
        .map(|t| {
            t.columns
                .iter()
                .map(|c| Projection::alias(&c.name, qualified(alias, &c.name)))
                .collect()
        })
        .unwrap_or_default();
    Plan::scan(table).project(cols)
}

fn condition_predicate(sdl: &SdlModel, table: &str, alias: &str, cond: &Condition) -> Result<Predicate, String> {
    let column = sdl
        .table(table)
        .and_then(|t| t.column(&cond.column))
        .ok_or_else(|| format!("table `{table}` has no column `{}`", cond.column))?;
    let values: Vec<Value> = cond
        .values
        .iter()
        .map(|v| Value::parse_as(v, column.data_type))
        .collect::<Result<_, _>>()?;
    let name = qualified(alias, &cond.column);
    Ok(match cond.operator {
        ConditionOp::Equals if values.len() == 1 => Predicate::Eq {
            column: name,
            value: values.into_iter().next().unwrap(),
        },
        _ => Predicate::In { column: name, values },
    })
}

fn conditions_predicate(sdl: &SdlModel, table: &str, alias: &str, conds: &[Condition]) -> Result<Predicate, String> {
    Ok(Predicate::and(
        conds
            .iter()
            .map(|c| condition_predicate(sdl, table, alias, c))
            .collect::<Result<_, _>>()?,
    ))
}

fn path_error(e: PathError, from: &str, to: &str, path: &str) -> Diagnostic {
    match e {
        PathError::NoPath => Diagnostic::error(
            "no-join-path",
            path,
            format!("no foreign-key path between `{from}` and `{to}`"),
        ),
        PathError::Ambiguous { length, count } => Diagnostic::error(
            "ambiguous-join-path",
            path,
            format!("{count} foreign-key paths of length {length} between `{from}` and `{to}`"),
        ),
    }
}

/// Joins the tables of `steps` onto `plan`, aliasing each new table through
/// `alias_of` and applying `conditions_of` when its table is added.
fn join_path(
    sdl: &SdlModel,
    mut plan: Plan,
    steps: &[JoinStep],
    alias_of: &dyn Fn(&str) -> String,
    conditions_of: &dyn Fn(&str) -> Vec<Condition>,
    joined: &mut BTreeSet<String>,
) -> Result<Plan, String> {
    for step in steps {
        if joined.contains(&step.to) {
            continue;
        }
        let from = alias_of(&step.from);
        let to = alias_of(&step.to);
        let right = qualified_scan(sdl, &step.to, &to).select(conditions_predicate(
            sdl,
            &step.to,
            &to,
            &conditions_of(&step.to),
        )?);
        let on: Vec<(String, String)> = step
            .from_columns
            .iter()
            .zip(&step.to_columns)
            .map(|(a, b)| (qualified(&from, a), qualified(&to, b)))
            .collect();
        plan = plan.join(right, on);
        joined.insert(step.to.clone());
    }
    Ok(plan)
}

struct Compiler<'a> {
    cdl: &'a CdlModel,
    sdl: &'a SdlModel,
    shapes: HashMap<String, LevelShape>,
    diagnostics: Vec<Diagnostic>,
}

pub(crate) fn level_shapes(cdl: &CdlModel, mdl: &MdlModel) -> HashMap<String, Result<LevelShape, Diagnostic>> {
    cdl.levels
        .iter()
        .filter_map(|level| {
            let fragments: Vec<&MappingFragment> = mdl.fragments_for(FragmentKind::Level, &level.name).collect();
            if fragments.is_empty() {
                return None;
            }
            Some((level.name.clone(), level_shape(level, &fragments)))
        })
        .collect()
}

/// Compiles every element that can be compiled. Problems are reported as
/// diagnostics against the element; other elements are unaffected.
pub fn compile(cdl: &CdlModel, sdl: &SdlModel, mdl: &MdlModel) -> Compilation {
    let mut c = Compiler {
        cdl,
        sdl,
        shapes: HashMap::new(),
        diagnostics: Vec::new(),
    };
    let mut views = ViewSet::default();
    let mut shapes = level_shapes(cdl, mdl);

    for level in &cdl.levels {
        let path = level_view_name(&level.name);
        match shapes.remove(&level.name) {
            None => c.diagnostics.push(Diagnostic::error(
                "unmapped-level",
                path,
                format!("level `{}` has no mapping fragment", level.name),
            )),
            Some(Err(d)) => c.diagnostics.push(d),
            Some(Ok(shape)) => match c.level_view(level, &shape) {
                Ok(v) => {
                    views.push(v);
                    c.shapes.insert(level.name.clone(), shape);
                }
                Err(d) => c.diagnostics.push(d),
            },
        }
    }

    let mut seen = BTreeSet::new();
    for rel in cdl.relationships() {
        if !seen.insert(rel.id()) {
            continue;
        }
        if !c.shapes.contains_key(&rel.child) || !c.shapes.contains_key(&rel.parent) {
            continue;
        }
        match c.pc_view(rel) {
            Ok(v) => views.push(v),
            Err(d) => c.diagnostics.push(d),
        }
    }

    for fact in &cdl.fact_relationships {
        let fragments: Vec<&MappingFragment> = mdl.fragments_for(FragmentKind::FactRelationship, &fact.name).collect();
        let path = fact_view_name(&fact.name);
        match fragments.as_slice() {
            [] => c.diagnostics.push(Diagnostic::warning(
                "unmapped-fact-relationship",
                path,
                format!("fact relationship `{}` has no mapping fragment", fact.name),
            )),
            [f] => match c.fact_view(fact, f) {
                Ok(v) => views.push(v),
                Err(d) => c.diagnostics.push(d),
            },
            _ => c.diagnostics.push(Diagnostic::error(
                "multi-fragment-fact-relationship",
                path,
                format!(
                    "fact relationship `{}` is mapped by {} fragments; exactly one is supported",
                    fact.name,
                    fragments.len()
                ),
            )),
        }
    }
    c.diagnostics.sort();
    c.diagnostics.dedup();
    Compilation {
        views,
        diagnostics: c.diagnostics,
    }
}

impl Compiler<'_> {
    fn level_view(&self, level: &Level, shape: &LevelShape) -> Result<ViewDefinition, Diagnostic> {
        let path = level_view_name(&level.name);
        let invalid = |m: String| Diagnostic::error("invalid-condition", path.clone(), m);
        let project = |parts: &[&Part]| -> Vec<Projection> {
            level
                .properties
                .iter()
                .map(|p| {
                    match parts
                        .iter()
                        .find_map(|part| part.mappings.get(&p.name).map(|c| (part, c)))
                    {
                        Some((part, col)) => Projection::alias(qualified(&part.table, col), &p.name),
                        None => Projection::Null {
                            name: p.name.clone(),
                            data_type: p.data_type,
                        },
                    }
                })
                .collect()
        };

        let body = match shape {
            LevelShape::Union(parts) => {
                let mut inputs = Vec::new();
                for part in parts {
                    let pred =
                        conditions_predicate(self.sdl, &part.table, &part.table, &part.conditions).map_err(invalid)?;
                    inputs.push(
                        qualified_scan(self.sdl, &part.table, &part.table)
                            .select(pred)
                            .project(project(&[part])),
                    );
                }
                Plan::union(inputs)
            }
            LevelShape::Joined { anchor, others } => {
                let pred = conditions_predicate(self.sdl, &anchor.table, &anchor.table, &anchor.conditions)
                    .map_err(&invalid)?;
                let mut plan = qualified_scan(self.sdl, &anchor.table, &anchor.table).select(pred);
                let mut joined = BTreeSet::from([anchor.table.clone()]);
                let conditions_of = |t: &str| -> Vec<Condition> {
                    others
                        .iter()
                        .filter(|p| p.table == t)
                        .flat_map(|p| p.conditions.clone())
                        .collect()
                };
                for other in others {
                    let steps = shortest_path(self.sdl, &anchor.table, &other.table)
                        .map_err(|e| path_error(e, &anchor.table, &other.table, &path))?;
                    plan = join_path(self.sdl, plan, &steps, &|t| t.to_owned(), &conditions_of, &mut joined)
                        .map_err(&invalid)?;
                }
                let mut all: Vec<&Part> = vec![anchor];
                all.extend(others.iter());
                plan.project(project(&all))
            }
        };
        let columns: Vec<Column> = level
            .properties
            .iter()
            .map(|p| Column::new(&p.name, p.data_type))
            .collect();
        let body = body.distinct(columns.iter().map(|c| c.name.clone()).collect());
        Ok(ViewDefinition {
            name: path,
            target: ViewTarget::Level {
                name: level.name.clone(),
            },
            columns,
            body,
        })
    }

    fn pc_view(&self, rel: &ParentChildRel) -> Result<ViewDefinition, Diagnostic> {
        let path = pc_view_name(rel);
        let invalid = |m: String| Diagnostic::error("invalid-condition", path.clone(), m);
        let child = self.cdl.level(&rel.child).expect("compiled level");
        let parent = self.cdl.level(&rel.parent).expect("compiled level");
        let mut columns = Vec::new();
        for (level, out) in [(child, &rel.child), (parent, &rel.parent)] {
            for k in level.key_properties() {
                columns.push(Column::new(pc_column(out, &k.name), k.data_type));
            }
        }
        let names: Vec<String> = columns.iter().map(|c| c.name.clone()).collect();

        let mut inputs = Vec::new();
        for cs in self.shapes[&rel.child].key_sources() {
            for ps in self.shapes[&rel.parent].key_sources() {
                let mut proj = Vec::new();
                for k in &child.key {
                    proj.push(Projection::alias(
                        qualified(&cs.table, &cs.mappings[k]),
                        pc_column(&rel.child, k),
                    ));
                }
                for k in &parent.key {
                    proj.push(Projection::alias(
                        qualified(&ps.table, &ps.mappings[k]),
                        pc_column(&rel.parent, k),
                    ));
                }
                if cs.table == ps.table {
                    let mut conds = cs.conditions.clone();
                    conds.extend(ps.conditions.iter().cloned());
                    let pred = conditions_predicate(self.sdl, &cs.table, &cs.table, &conds).map_err(invalid)?;
                    inputs.push(
                        qualified_scan(self.sdl, &cs.table, &cs.table)
                            .select(pred)
                            .project(proj),
                    );
                    continue;
                }
                let steps = shortest_path(self.sdl, &cs.table, &ps.table)
                    .map_err(|e| path_error(e, &cs.table, &ps.table, &path))?;
                let pred = conditions_predicate(self.sdl, &cs.table, &cs.table, &cs.conditions).map_err(invalid)?;
                let start = qualified_scan(self.sdl, &cs.table, &cs.table).select(pred);
                let conditions_of = |t: &str| -> Vec<Condition> {
                    if t == ps.table {
                        ps.conditions.clone()
                    } else {
                        Vec::new()
                    }
                };
                let mut joined = BTreeSet::from([cs.table.clone()]);
                let plan = join_path(self.sdl, start, &steps, &|t| t.to_owned(), &conditions_of, &mut joined)
                    .map_err(invalid)?;
                inputs.push(plan.project(proj));
            }
        }

        // keep only pairs whose endpoints are members of both levels
        let mut body = Plan::union(inputs);
        for (level, out) in [(child, &rel.child), (parent, &rel.parent)] {
            let members = Plan::scan(level_view_name(&level.name)).project(
                level
                    .key
                    .iter()
                    .map(|k| Projection::alias(k, format!("~{}", pc_column(out, k))))
                    .collect(),
            );
            let member_cols: Vec<String> = level.key.iter().map(|k| format!("~{}", pc_column(out, k))).collect();
            let members = members.distinct(member_cols.clone());
            let on: Vec<(String, String)> = level
                .key
                .iter()
                .map(|k| (pc_column(out, k), format!("~{}", pc_column(out, k))))
                .collect();
            body = body.join(members, on).project_columns(&names);
        }
        Ok(ViewDefinition {
            name: path,
            target: ViewTarget::ParentChild {
                child: rel.child.clone(),
                parent: rel.parent.clone(),
            },
            columns,
            body: body.distinct(names),
        })
    }

    fn fact_view(
        &self,
        fact: &crate::model::FactRelationship,
        fragment: &MappingFragment,
    ) -> Result<ViewDefinition, Diagnostic> {
        let path = fact_view_name(&fact.name);
        let invalid = |m: String| Diagnostic::error("invalid-condition", path.clone(), m);
        let table = &fragment.table;
        let pred = conditions_predicate(self.sdl, table, table, &fragment.conditions).map_err(invalid)?;
        let mut plan = qualified_scan(self.sdl, table, table).select(pred);
        let mut proj = Vec::new();
        let mut columns = Vec::new();

        for role in &fact.roles {
            let Some(bottom) = self
                .cdl
                .dimension(&role.dimension)
                .and_then(|d| self.cdl.level(&d.bottom_level))
            else {
                return Err(Diagnostic::error(
                    "unresolved-dimension",
                    path,
                    format!("role `{}` has no resolvable bottom level", role.name),
                ));
            };
            for k in bottom.key_properties() {
                columns.push(Column::new(format!("{}.{}", role.name, k.name), k.data_type));
            }
            let direct: Vec<Option<&str>> = bottom
                .key
                .iter()
                .map(|k| fragment.column_for(&format!("{}.{k}", role.name)))
                .collect();
            if direct.iter().all(Option::is_some) {
                for (k, col) in bottom.key.iter().zip(direct) {
                    proj.push(Projection::alias(
                        qualified(table, col.unwrap()),
                        format!("{}.{k}", role.name),
                    ));
                }
                continue;
            }
            if direct.iter().any(Option::is_some) {
                return Err(Diagnostic::error(
                    "unmapped-role",
                    path,
                    format!("role `{}` maps only part of the key of `{}`", role.name, bottom.name),
                ));
            }
            let Some(shape) = self.shapes.get(&bottom.name) else {
                return Err(Diagnostic::error(
                    "unmapped-role",
                    path,
                    format!(
                        "role `{}` is not mapped and its bottom level `{}` has no view",
                        role.name, bottom.name
                    ),
                ));
            };
            let sources = shape.key_sources();
            let [ks] = sources.as_slice() else {
                return Err(Diagnostic::error(
                    "ambiguous-key-source",
                    path,
                    format!(
                        "role `{}` is not mapped and level `{}` takes its key from {} fragments",
                        role.name,
                        bottom.name,
                        sources.len()
                    ),
                ));
            };
            let alias_of = |t: &str| {
                if t == table {
                    t.to_owned()
                } else {
                    format!("{}/{t}", role.name)
                }
            };
            if ks.table == *table {
                let pred = conditions_predicate(self.sdl, table, table, &ks.conditions).map_err(invalid)?;
                plan = plan.select(pred);
            } else {
                let steps =
                    shortest_path(self.sdl, table, &ks.table).map_err(|e| path_error(e, table, &ks.table, &path))?;
                let conditions_of = |t: &str| {
                    if t == ks.table {
                        ks.conditions.clone()
                    } else {
                        Vec::new()
                    }
                };
                let mut joined = BTreeSet::from([table.clone()]);
                plan = join_path(self.sdl, plan, &steps, &alias_of, &conditions_of, &mut joined).map_err(invalid)?;
            }
            let ks_alias = alias_of(&ks.table);
            for k in &bottom.key {
                proj.push(Projection::alias(
                    qualified(&ks_alias, &ks.mappings[k]),
                    format!("{}.{k}", role.name),
                ));
            }
        }
        for p in fact.attributes() {
            columns.push(Column::new(&p.name, p.data_type));
            proj.push(match fragment.column_for(&p.name) {
                Some(col) => Projection::alias(qualified(table, col), &p.name),
                None => Projection::Null {
                    name: p.name.clone(),
                    data_type: p.data_type,
                },
            });
        }
        Ok(ViewDefinition {
            name: path,
            target: ViewTarget::FactRelationship {
                name: fact.name.clone(),
            },
            columns,
            body: plan.project(proj),
        })
    }
}
