//! Structural validation of CDL, SDL and MDL models.
//!
//! Validators never fail; they return every finding, sorted, so that the
//! result does not depend on the order of elements in the input.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use super::{CdlModel, ConditionOp, Diagnostic, FragmentKind, Hierarchy, MappingFragment, MdlModel, SdlModel, Table};
use crate::value::{DataType, Value};

fn duplicates<'a>(names: impl IntoIterator<Item = &'a str>) -> BTreeSet<&'a str> {
    let mut seen = HashSet::new();
    names.into_iter().filter(|n| !seen.insert(*n)).collect()
}

fn finish(mut diags: Vec<Diagnostic>) -> Vec<Diagnostic> {
    diags.sort();
    diags.dedup();
    diags
}

pub fn validate_cdl(model: &CdlModel) -> Vec<Diagnostic> {
    let mut d = Vec::new();

    for (kind, names) in [
        (
            "level",
            model.levels.iter().map(|l| l.name.as_str()).collect::<Vec<_>>(),
        ),
        ("dimension", model.dimensions.iter().map(|x| x.name.as_str()).collect()),
        ("hierarchy", model.hierarchies.iter().map(|x| x.name.as_str()).collect()),
        (
            "factRelationship",
            model.fact_relationships.iter().map(|x| x.name.as_str()).collect(),
        ),
    ] {
        for dup in duplicates(names) {
            d.push(Diagnostic::error(
                "duplicate-name",
                format!("{kind}[{dup}]"),
                format!("{kind} name `{dup}` is declared more than once"),
            ));
        }
    }

    for level in &model.levels {
        let path = format!("level[{}]", level.name);
        for dup in duplicates(level.properties.iter().map(|p| p.name.as_str())) {
            d.push(Diagnostic::error(
                "duplicate-property",
                format!("{path}/property[{dup}]"),
                format!("property `{dup}` is declared more than once"),
            ));
        }
        if level.key.is_empty() {
            d.push(Diagnostic::error("missing-key", &path, "level has an empty key"));
        }
        for k in &level.key {
            if level.property(k).is_none() {
                d.push(Diagnostic::error(
                    "key-not-property",
                    format!("{path}/key[{k}]"),
                    format!("key `{k}` is not a property of level `{}`", level.name),
                ));
            }
        }
        for dup in duplicates(level.key.iter().map(String::as_str)) {
            d.push(Diagnostic::error(
                "duplicate-key",
                format!("{path}/key[{dup}]"),
                format!("key entry `{dup}` repeated"),
            ));
        }
    }

    for dim in &model.dimensions {
        let path = format!("dimension[{}]", dim.name);
        if model.level(&dim.bottom_level).is_none() {
            d.push(Diagnostic::error(
                "unresolved-bottom-level",
                &path,
                format!("unresolved bottomLevel `{}`", dim.bottom_level),
            ));
        }
        for h in &dim.hierarchies {
            match model.hierarchy(h) {
                None => d.push(Diagnostic::error(
                    "unresolved-hierarchy",
                    format!("{path}/hierarchy[{h}]"),
                    format!("hierarchy `{h}` is not declared"),
                )),
                Some(hier) => {
                    if let Some(first) = hier.relationships.first() {
                        if first.child != dim.bottom_level {
                            d.push(Diagnostic::error(
                                "hierarchy-not-at-bottom",
                                format!("{path}/hierarchy[{h}]"),
                                format!(
                                    "hierarchy `{h}` starts at `{}`, not at bottom level `{}`",
                                    first.child, dim.bottom_level
                                ),
                            ));
                        }
                    }
                }
            }
        }
    }

    let mut groups: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    let mut rel_defs: HashMap<String, &super::ParentChildRel> = HashMap::new();
    for hier in &model.hierarchies {
        validate_hierarchy(model, hier, &mut d);
        for rel in &hier.relationships {
            if let Some(g) = &rel.exclusive_group {
                groups.entry(g).or_default().insert(rel.id());
            }
            if let Some(prev) = rel_defs.insert(rel.id(), rel) {
                if prev != rel {
                    d.push(Diagnostic::error(
                        "conflicting-relationship",
                        format!("relationship[{}]", rel.id()),
                        "relationship is declared twice with different cardinalities or groups",
                    ));
                }
            }
        }
    }
    for (g, members) in groups {
        if members.len() < 2 {
            d.push(Diagnostic::error(
                "singleton-exclusive-group",
                format!("exclusiveGroup[{g}]"),
                format!("exclusive group `{g}` has only one relationship"),
            ));
        }
    }

    for fact in &model.fact_relationships {
        let path = format!("factRelationship[{}]", fact.name);
        if fact.roles.len() < 2 {
            d.push(Diagnostic::error(
                "too-few-roles",
                &path,
                format!(
                    "fact relationship has {} role(s); at least two are required",
                    fact.roles.len()
                ),
            ));
        }
        for dup in duplicates(fact.roles.iter().map(|r| r.name.as_str())) {
            d.push(Diagnostic::error(
                "duplicate-role",
                format!("{path}/role[{dup}]"),
                format!("role `{dup}` is declared more than once"),
            ));
        }
        for role in &fact.roles {
            if model.dimension(&role.dimension).is_none() {
                d.push(Diagnostic::error(
                    "unresolved-dimension",
                    format!("{path}/role[{}]", role.name),
                    format!("dimension `{}` is not declared", role.dimension),
                ));
            }
        }
        for dup in duplicates(fact.attributes().map(|p| p.name.as_str())) {
            d.push(Diagnostic::error(
                "duplicate-property",
                format!("{path}/property[{dup}]"),
                format!("measure or property `{dup}` is declared more than once"),
            ));
        }
    }

    finish(d)
}

fn validate_hierarchy(model: &CdlModel, hier: &Hierarchy, d: &mut Vec<Diagnostic>) {
    let path = format!("hierarchy[{}]", hier.name);
    let ids: Vec<String> = hier.relationships.iter().map(|r| r.id()).collect();
    for dup in duplicates(ids.iter().map(String::as_str)) {
        d.push(Diagnostic::error(
            "duplicate-relationship",
            format!("{path}/relationship[{dup}]"),
            format!("relationship `{dup}` is declared more than once"),
        ));
    }

    let mut adjacency: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    let mut undirected: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for rel in &hier.relationships {
        let rpath = format!("{path}/relationship[{}]", rel.id());
        for end in [&rel.child, &rel.parent] {
            if model.level(end).is_none() {
                d.push(Diagnostic::error(
                    "unresolved-level",
                    &rpath,
                    format!("level `{end}` is not declared"),
                ));
            }
        }
        if rel.child == rel.parent {
            d.push(Diagnostic::error(
                "self-parent",
                &rpath,
                "child and parent level are the same",
            ));
            continue;
        }
        adjacency.entry(&rel.child).or_default().push(&rel.parent);
        adjacency.entry(&rel.parent).or_default();
        undirected.entry(&rel.child).or_default().push(&rel.parent);
        undirected.entry(&rel.parent).or_default().push(&rel.child);
    }

    if has_cycle(&adjacency) {
        d.push(Diagnostic::error(
            "hierarchy-cycle",
            &path,
            "parent-child relationships form a cycle",
        ));
    }

    if let Some(start) = undirected.keys().next() {
        let mut seen = BTreeSet::new();
        let mut stack = vec![*start];
        while let Some(n) = stack.pop() {
            if seen.insert(n) {
                stack.extend(undirected[n].iter().copied());
            }
        }
        if seen.len() != undirected.len() {
            d.push(Diagnostic::error(
                "hierarchy-disconnected",
                &path,
                "parent-child relationships do not form a connected graph",
            ));
        }
    }
}

fn has_cycle(adjacency: &BTreeMap<&str, Vec<&str>>) -> bool {
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state: HashMap<&str, u8> = HashMap::new();
    fn visit<'a>(n: &'a str, adj: &BTreeMap<&'a str, Vec<&'a str>>, state: &mut HashMap<&'a str, u8>) -> bool {
        match state.get(n) {
            Some(1) => return true,
            Some(2) => return false,
            _ => {}
        }
        state.insert(n, 1);
        for next in adj.get(n).into_iter().flatten() {
            if visit(next, adj, state) {
                return true;
            }
        }
        state.insert(n, 2);
        false
    }
    adjacency.keys().any(|n| visit(n, adjacency, &mut state))
}

pub fn validate_sdl(model: &SdlModel) -> Vec<Diagnostic> {
    let mut d = Vec::new();
    for dup in duplicates(model.tables().map(|t| t.name.as_str())) {
        d.push(Diagnostic::error(
            "duplicate-name",
            format!("table[{dup}]"),
            format!("table name `{dup}` is declared more than once"),
        ));
    }
    for table in model.tables() {
        validate_table(model, table, &mut d);
    }
    finish(d)
}

fn validate_table(model: &SdlModel, table: &Table, d: &mut Vec<Diagnostic>) {
    let path = format!("table[{}]", table.name);
    for dup in duplicates(table.columns.iter().map(|c| c.name.as_str())) {
        d.push(Diagnostic::error(
            "duplicate-column",
            format!("{path}/column[{dup}]"),
            format!("column `{dup}` is declared more than once"),
        ));
    }
    if table.primary_key.is_empty() {
        d.push(Diagnostic::error("missing-primary-key", &path, "missing primary key"));
    }
    for k in &table.primary_key {
        if table.column(k).is_none() {
            d.push(Diagnostic::error(
                "unknown-key-column",
                format!("{path}/primaryKey[{k}]"),
                format!("primary key column `{k}` is not a column of `{}`", table.name),
            ));
        }
    }
    for fk in &table.foreign_keys {
        let fpath = format!("{path}/foreignKey[{fk}]");
        for c in &fk.columns {
            if table.column(c).is_none() {
                d.push(Diagnostic::error(
                    "unknown-fk-column",
                    &fpath,
                    format!("foreign key column `{c}` is not a column of `{}`", table.name),
                ));
            }
        }
        let Some(target) = model.table(&fk.table) else {
            d.push(Diagnostic::error(
                "unknown-fk-table",
                &fpath,
                format!("foreign key references unknown table `{}`", fk.table),
            ));
            continue;
        };
        if fk.columns.len() != fk.target_columns.len() {
            d.push(Diagnostic::error(
                "fk-arity-mismatch",
                &fpath,
                "foreign key has different numbers of local and target columns",
            ));
            continue;
        }
        let target_set: BTreeSet<&str> = fk.target_columns.iter().map(String::as_str).collect();
        let pk_set: BTreeSet<&str> = target.primary_key.iter().map(String::as_str).collect();
        if target_set != pk_set || fk.target_columns.len() != target.primary_key.len() {
            d.push(Diagnostic::error(
                "fk-target-not-primary-key",
                &fpath,
                format!("FK target columns are not the primary key of `{}`", target.name),
            ));
        }
        for (local, remote) in fk.columns.iter().zip(&fk.target_columns) {
            if let (Some(l), Some(r)) = (table.column(local), target.column(remote)) {
                if l.data_type != r.data_type {
                    d.push(Diagnostic::error(
                        "fk-type-mismatch",
                        &fpath,
                        format!(
                            "`{local}` is {} but `{}.{remote}` is {}",
                            l.data_type, target.name, r.data_type
                        ),
                    ));
                }
            }
        }
    }
}

/// Resolves the CDL type of a property named in a fragment, or `None` if the
/// entity has no such property. For fact fragments, `role.key` names resolve
/// to the key property of the role's bottom level.
pub(crate) fn fragment_property_type(cdl: &CdlModel, fragment: &MappingFragment, property: &str) -> Option<DataType> {
    match fragment.kind {
        FragmentKind::Level => cdl.level(&fragment.entity)?.property(property).map(|p| p.data_type),
        FragmentKind::FactRelationship => {
            let fact = cdl.fact_relationship(&fragment.entity)?;
            if let Some(p) = fact.attributes().find(|p| p.name == property) {
                return Some(p.data_type);
            }
            let (role, key) = property.split_once('.')?;
            let role = fact.role(role)?;
            let bottom = cdl.level(&cdl.dimension(&role.dimension)?.bottom_level)?;
            if !bottom.key.iter().any(|k| k == key) {
                return None;
            }
            bottom.property(key).map(|p| p.data_type)
        }
    }
}

pub fn validate_mdl(cdl: &CdlModel, sdl: &SdlModel, mdl: &MdlModel) -> Vec<Diagnostic> {
    let mut d = Vec::new();
    let mut names = Vec::new();
    for f in &mdl.fragments {
        if let Some(n) = &f.name {
            names.push(n.as_str());
        }
        let path = format!("fragment[{}]", f.display_name());
        let entity_ok = match f.kind {
            FragmentKind::Level => cdl.level(&f.entity).is_some(),
            FragmentKind::FactRelationship => cdl.fact_relationship(&f.entity).is_some(),
        };
        if !entity_ok {
            let kind = match f.kind {
                FragmentKind::Level => "level",
                FragmentKind::FactRelationship => "fact relationship",
            };
            d.push(Diagnostic::error(
                "unknown-entity",
                &path,
                format!("unknown {kind} `{}`", f.entity),
            ));
        }
        let table = sdl.table(&f.table);
        if table.is_none() {
            d.push(Diagnostic::error(
                "unknown-table",
                &path,
                format!("unknown table `{}`", f.table),
            ));
        }
        if f.property_mappings.is_empty() {
            d.push(Diagnostic::error(
                "empty-fragment",
                &path,
                "fragment has no property mappings",
            ));
        }
        for dup in duplicates(f.property_mappings.iter().map(|m| m.property.as_str())) {
            d.push(Diagnostic::error(
                "duplicate-property-mapping",
                format!("{path}/property-mapping[{dup}]"),
                format!("property `{dup}` is mapped more than once"),
            ));
        }
        for m in &f.property_mappings {
            let mpath = format!("{path}/property-mapping[{}]", m.property);
            let prop_ty = if entity_ok {
                let t = fragment_property_type(cdl, f, &m.property);
                if t.is_none() {
                    d.push(Diagnostic::error(
                        "unknown-property",
                        &mpath,
                        format!("`{}` has no property `{}`", f.entity, m.property),
                    ));
                }
                t
            } else {
                None
            };
            let col_ty = table.map(|t| {
                let c = t.column(&m.column).map(|c| c.data_type);
                if c.is_none() {
                    d.push(Diagnostic::error(
                        "unknown-column",
                        &mpath,
                        format!("table `{}` has no column `{}`", t.name, m.column),
                    ));
                }
                c
            });
            if let (Some(p), Some(Some(c))) = (prop_ty, col_ty) {
                if p != c {
                    d.push(Diagnostic::error(
                        "type-mismatch",
                        &mpath,
                        format!("property is {p} but column `{}` is {c}", m.column),
                    ));
                }
            }
        }
        for cond in &f.conditions {
            let cpath = format!("{path}/condition[{}]", cond.column);
            if cond.values.is_empty() {
                d.push(Diagnostic::error("empty-condition", &cpath, "condition has no values"));
            }
            if cond.operator == ConditionOp::Equals && cond.values.len() > 1 {
                d.push(Diagnostic::error(
                    "equals-arity",
                    &cpath,
                    "an equals condition takes exactly one value",
                ));
            }
            let Some(table) = table else { continue };
            match table.column(&cond.column) {
                None => d.push(Diagnostic::error(
                    "unknown-condition-column",
                    &cpath,
                    format!("unknown condition column `{}` on table `{}`", cond.column, table.name),
                )),
                Some(col) => {
                    for v in &cond.values {
                        if let Err(e) = Value::parse_as(v, col.data_type) {
                            d.push(Diagnostic::error("condition-type-mismatch", &cpath, e));
                        }
                    }
                }
            }
        }
    }
    for dup in duplicates(names) {
        d.push(Diagnostic::error(
            "duplicate-name",
            format!("fragment[{dup}]"),
            format!("fragment name `{dup}` is used more than once"),
        ));
    }
    finish(d)
}
