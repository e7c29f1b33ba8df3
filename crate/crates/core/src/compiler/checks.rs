//! Instance-level checks of hierarchy constraints over compiled views.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::ViewSet;
use crate::model::{Cardinality, CdlModel, ParentChildRel, SdlModel};
use crate::storage::{FkViolation, Plan, StorageError, Store};
use crate::value::Value;

type Key = Vec<Value>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ExclusivityViolation {
    pub group: String,
    pub child_level: String,
    pub child_key: Key,
    /// The group's relationships in which the child appears.
    pub relationships: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum CardinalitySide {
    /// Parents counted for one child, bounded by the parent cardinality.
    ParentsPerChild,
    /// Children counted for one parent, bounded by the child cardinality.
    ChildrenPerParent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CardinalityViolation {
    pub relationship: String,
    pub side: CardinalitySide,
    pub member: Key,
    pub count: usize,
    #[serde(serialize_with = "display")]
    pub bound: Cardinality,
}

fn display<S: serde::Serializer, T: std::fmt::Display>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

/// A child member together with the parents it has in one relationship.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub relationship: String,
    pub child: Key,
    pub parents: Vec<Key>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct HierarchyReport {
    pub hierarchy: String,
    pub summarizable: bool,
    pub non_strict: Vec<Witness>,
    pub non_covering: Vec<Witness>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CheckReport {
    pub foreign_keys: Vec<FkViolation>,
    pub exclusivity: Vec<ExclusivityViolation>,
    pub cardinality: Vec<CardinalityViolation>,
    pub summarizability: Vec<HierarchyReport>,
}

impl CheckReport {
    /// Number of constraint violations; non-summarizable hierarchies are
    /// reported but already counted through their cardinality violations.
    pub fn violation_count(&self) -> usize {
        self.foreign_keys.len() + self.exclusivity.len() + self.cardinality.len()
    }

    pub fn is_clean(&self) -> bool {
        self.violation_count() == 0 && self.summarizability.iter().all(|h| h.summarizable)
    }
}

/// Child/parent key pairs of one relationship, plus both member sets.
struct Edges {
    pairs: Vec<(Key, Key)>,
    children: BTreeSet<Key>,
    parents: BTreeSet<Key>,
}

fn key_columns(cdl: &CdlModel, level: &str) -> Vec<String> {
    cdl.level(level).map(|l| l.key.clone()).unwrap_or_default()
}

fn members(cdl: &CdlModel, views: &ViewSet, store: &Store, level: &str) -> Result<Option<BTreeSet<Key>>, StorageError> {
    let Some(v) = views.level(level) else { return Ok(None) };
    let keys = key_columns(cdl, level);
    let rel = views.evaluate(&Plan::scan(&v.name).project_columns(&keys), store)?;
    Ok(Some(rel.rows.into_iter().collect()))
}

fn edges(cdl: &CdlModel, views: &ViewSet, store: &Store, rel: &ParentChildRel) -> Result<Option<Edges>, StorageError> {
    let Some(v) = views.parent_child(rel) else {
        return Ok(None);
    };
    let (Some(children), Some(parents)) = (
        members(cdl, views, store, &rel.child)?,
        members(cdl, views, store, &rel.parent)?,
    ) else {
        return Ok(None);
    };
    let ck = key_columns(cdl, &rel.child).len();
    let pairs = views
        .evaluate_view(&v.name, store)?
        .rows
        .into_iter()
        .map(|mut r| {
            let p = r.split_off(ck);
            (r, p)
        })
        .collect();
    Ok(Some(Edges {
        pairs,
        children,
        parents,
    }))
}

fn unique_relationships(cdl: &CdlModel) -> Vec<&ParentChildRel> {
    let mut seen = BTreeSet::new();
    cdl.relationships().filter(|r| seen.insert(r.id())).collect()
}

/// Evaluates the edges of every relationship, one thread per relationship.
fn all_edges<'a>(
    cdl: &'a CdlModel,
    views: &ViewSet,
    store: &Store,
    rels: &[&'a ParentChildRel],
) -> Result<Vec<(&'a ParentChildRel, Edges)>, StorageError> {
    let results: Vec<Result<Option<Edges>, StorageError>> = std::thread::scope(|s| {
        let handles: Vec<_> = rels
            .iter()
            .map(|r| s.spawn(move || edges(cdl, views, store, r)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("check thread panicked"))
            .collect()
    });
    let mut out = Vec::new();
    for (r, e) in rels.iter().zip(results) {
        if let Some(e) = e? {
            out.push((*r, e));
        }
    }
    Ok(out)
}

/// Every child member may appear in at most one of the relationships of an
/// exclusive group that start at its level.
pub fn check_exclusivity(
    cdl: &CdlModel,
    views: &ViewSet,
    store: &Store,
) -> Result<Vec<ExclusivityViolation>, StorageError> {
    let mut groups: BTreeMap<(&str, &str), Vec<&ParentChildRel>> = BTreeMap::new();
    for r in unique_relationships(cdl) {
        if let Some(g) = &r.exclusive_group {
            groups.entry((g.as_str(), r.child.as_str())).or_default().push(r);
        }
    }
    let mut out = Vec::new();
    for ((group, child), rels) in groups {
        let mut seen: BTreeMap<Key, Vec<String>> = BTreeMap::new();
        for (rel, e) in all_edges(cdl, views, store, &rels)? {
            let distinct: BTreeSet<&Key> = e.pairs.iter().map(|(c, _)| c).collect();
            for c in distinct {
                seen.entry(c.clone()).or_default().push(rel.id());
            }
        }
        for (key, rels) in seen {
            if rels.len() > 1 {
                out.push(ExclusivityViolation {
                    group: group.to_owned(),
                    child_level: child.to_owned(),
                    child_key: key,
                    relationships: rels,
                });
            }
        }
    }
    Ok(out)
}

fn parents_by_child(e: &Edges) -> BTreeMap<&Key, Vec<&Key>> {
    let mut m: BTreeMap<&Key, Vec<&Key>> = e.children.iter().map(|c| (c, Vec::new())).collect();
    for (c, p) in &e.pairs {
        m.entry(c).or_default().push(p);
    }
    m
}

/// Counts parents per child and children per parent over the level members
/// and reports each member outside its bound.
pub fn check_cardinalities(
    cdl: &CdlModel,
    views: &ViewSet,
    store: &Store,
) -> Result<Vec<CardinalityViolation>, StorageError> {
    let rels = unique_relationships(cdl);
    let mut out = Vec::new();
    for (rel, e) in all_edges(cdl, views, store, &rels)? {
        for (child, parents) in parents_by_child(&e) {
            if !rel.parent_card.admits(parents.len()) {
                out.push(CardinalityViolation {
                    relationship: rel.id(),
                    side: CardinalitySide::ParentsPerChild,
                    member: child.clone(),
                    count: parents.len(),
                    bound: rel.parent_card,
                });
            }
        }
        let mut children: BTreeMap<&Key, usize> = e.parents.iter().map(|p| (p, 0)).collect();
        for (_, p) in &e.pairs {
            *children.entry(p).or_default() += 1;
        }
        for (parent, n) in children {
            if !rel.child_card.admits(n) {
                out.push(CardinalityViolation {
                    relationship: rel.id(),
                    side: CardinalitySide::ChildrenPerParent,
                    member: parent.clone(),
                    count: n,
                    bound: rel.child_card,
                });
            }
        }
    }
    Ok(out)
}

/// Per hierarchy: a child with several parents in one relationship makes it
/// non-strict, a child without a parent where one is mandatory makes it
/// non-covering. Relationships without a view are skipped.
pub fn check_summarizability(
    cdl: &CdlModel,
    views: &ViewSet,
    store: &Store,
) -> Result<Vec<HierarchyReport>, StorageError> {
    let rels = unique_relationships(cdl);
    let edges: BTreeMap<String, Edges> = all_edges(cdl, views, store, &rels)?
        .into_iter()
        .map(|(r, e)| (r.id(), e))
        .collect();
    let mut out = Vec::new();
    for h in &cdl.hierarchies {
        let mut non_strict = Vec::new();
        let mut non_covering = Vec::new();
        for rel in &h.relationships {
            let Some(e) = edges.get(&rel.id()) else { continue };
            for (child, parents) in parents_by_child(e) {
                let witness = || Witness {
                    relationship: rel.id(),
                    child: child.clone(),
                    parents: parents.iter().map(|p| (*p).clone()).collect(),
                };
                if parents.len() > 1 {
                    non_strict.push(witness());
                } else if parents.is_empty() && rel.parent_card.is_mandatory() {
                    non_covering.push(witness());
                }
            }
        }
        out.push(HierarchyReport {
            hierarchy: h.name.clone(),
            summarizable: non_strict.is_empty() && non_covering.is_empty(),
            non_strict,
            non_covering,
        });
    }
    Ok(out)
}

/// Referential integrity of the store plus every hierarchy check.
pub fn check_all(cdl: &CdlModel, sdl: &SdlModel, views: &ViewSet, store: &Store) -> Result<CheckReport, StorageError> {
    Ok(CheckReport {
        foreign_keys: store.check_foreign_keys(sdl),
        exclusivity: check_exclusivity(cdl, views, store)?,
        cardinality: check_cardinalities(cdl, views, store)?,
        summarizability: check_summarizability(cdl, views, store)?,
    })
}
