//! A brute-force query evaluator that never touches compiled views or
//! plans. Levels, parent-child pairs and fact rows are materialized straight
//! from the mapping fragments with nested loops over the base tables.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use rust_decimal::Decimal;

use super::resolve::{resolve, Mention, ResolvedQuery};
use super::{CqlQuery, QueryError, QueryOptions};
use crate::model::{CdlModel, Condition, FragmentKind, Level, MappingFragment, MdlModel, ParentChildRel, SdlModel};
use crate::storage::{AggregateFunction, Relation, Row, StorageError, Store};
use crate::value::{DataType, Value};

type Key = Vec<Value>;

#[derive(Clone)]
struct Hop {
    from: String,
    to: String,
    from_cols: Vec<String>,
    to_cols: Vec<String>,
}

/// A level's backing for one table: mapped columns and conditions.
#[derive(Clone)]
struct Source {
    table: String,
    mapping: Vec<(String, String)>,
    conditions: Vec<Condition>,
}

impl Source {
    fn column(&self, property: &str) -> Option<&str> {
        self.mapping
            .iter()
            .find(|(p, _)| p == property)
            .map(|(_, c)| c.as_str())
    }
}

enum Backing {
    Alternatives(Vec<Source>),
    Spanning(Source, Vec<Source>),
}

/// One fact row: the bottom-level key per role plus every attribute.
struct FactRow {
    roles: HashMap<String, Key>,
    attributes: HashMap<String, Value>,
}

pub struct Oracle<'a> {
    cdl: &'a CdlModel,
    sdl: &'a SdlModel,
    mdl: &'a MdlModel,
    store: &'a Store,
    levels: RefCell<HashMap<String, Vec<Row>>>,
    pairs: RefCell<HashMap<String, Vec<(Key, Key)>>>,
    facts: RefCell<HashMap<String, std::rc::Rc<Vec<FactRow>>>>,
}

fn invalid(m: String) -> QueryError {
    QueryError::Invalid(m)
}

impl<'a> Oracle<'a> {
    pub fn new(cdl: &'a CdlModel, sdl: &'a SdlModel, mdl: &'a MdlModel, store: &'a Store) -> Self {
        Oracle {
            cdl,
            sdl,
            mdl,
            store,
            levels: RefCell::default(),
            pairs: RefCell::default(),
            facts: RefCell::default(),
        }
    }

    fn table(&self, name: &str) -> Result<&'a Relation, QueryError> {
        self.store
            .table(name)
            .ok_or_else(|| QueryError::Storage(StorageError::NotLoaded(name.to_owned())))
    }

    fn value<'r>(&self, table: &str, row: &'r Row, column: &str) -> Result<&'r Value, QueryError> {
        let rel = self.table(table)?;
        let i = rel
            .columns
            .iter()
            .position(|c| c.name == column)
            .ok_or_else(|| invalid(format!("table `{table}` has no column `{column}`")))?;
        Ok(&row[i])
    }

    fn satisfies(&self, table: &str, row: &Row, conditions: &[Condition]) -> Result<bool, QueryError> {
        let rel = self.table(table)?;
        for c in conditions {
            let i = rel
                .columns
                .iter()
                .position(|col| col.name == c.column)
                .ok_or_else(|| invalid(format!("table `{table}` has no column `{}`", c.column)))?;
            let ty = rel.columns[i].data_type;
            let mut hit = false;
            for text in &c.values {
                let v = Value::parse_as(text, ty).map_err(invalid)?;
                if !row[i].is_null() && row[i] == v {
                    hit = true;
                }
            }
            if !hit {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn hops_from(&self, table: &str) -> Vec<Hop> {
        let mut out = Vec::new();
        for t in self.sdl.tables() {
            for fk in &t.foreign_keys {
                if fk.table == t.name {
                    continue;
                }
                if t.name == table {
                    out.push(Hop {
                        from: t.name.clone(),
                        to: fk.table.clone(),
                        from_cols: fk.columns.clone(),
                        to_cols: fk.target_columns.clone(),
                    });
                }
                if fk.table == table && self.sdl.table(&fk.table).is_some() {
                    out.push(Hop {
                        from: fk.table.clone(),
                        to: t.name.clone(),
                        from_cols: fk.target_columns.clone(),
                        to_cols: fk.columns.clone(),
                    });
                }
            }
        }
        out
    }

    /// Enumerates simple paths of increasing length until some exist.
    fn path(&self, from: &str, to: &str) -> Result<Vec<Hop>, QueryError> {
        if from == to {
            return Ok(Vec::new());
        }
        let n = self.sdl.tables().count();
        for len in 1..=n {
            let mut found: Vec<Vec<Hop>> = Vec::new();
            let mut stack: Vec<Vec<Hop>> = vec![Vec::new()];
            while let Some(p) = stack.pop() {
                let at = p.last().map_or(from, |h| h.to.as_str());
                if p.len() == len {
                    if at == to {
                        found.push(p);
                    }
                    continue;
                }
                for h in self.hops_from(at) {
                    if h.to == from || p.iter().any(|q| q.to == h.to) {
                        continue;
                    }
                    let mut next = p.clone();
                    next.push(h);
                    stack.push(next);
                }
            }
            match found.len() {
                0 => continue,
                1 => return Ok(found.pop().unwrap()),
                k => {
                    return Err(invalid(format!(
                        "{k} join paths of length {len} between `{from}` and `{to}`"
                    )))
                }
            }
        }
        Err(invalid(format!("no join path between `{from}` and `{to}`")))
    }

    /// Extends each assignment of rows to tables along `hops`, skipping
    /// tables that are already assigned.
    fn walk(
        &self,
        start: Vec<(String, Row)>,
        hops: &[Hop],
        conditions_at: &dyn Fn(&str) -> Vec<Condition>,
    ) -> Result<Vec<Vec<(String, Row)>>, QueryError> {
        let mut current = vec![start];
        for h in hops {
            let mut next = Vec::new();
            for assignment in current {
                if assignment.iter().any(|(t, _)| *t == h.to) {
                    next.push(assignment);
                    continue;
                }
                let from_row = &assignment
                    .iter()
                    .find(|(t, _)| *t == h.from)
                    .expect("hop starts at an assigned table")
                    .1;
                let mut key = Vec::new();
                for c in &h.from_cols {
                    key.push(self.value(&h.from, from_row, c)?.clone());
                }
                if key.iter().any(Value::is_null) {
                    continue;
                }
                let conds = conditions_at(&h.to);
                for row in &self.table(&h.to)?.rows {
                    let mut equal = true;
                    for (c, k) in h.to_cols.iter().zip(&key) {
                        if self.value(&h.to, row, c)? != k {
                            equal = false;
                            break;
                        }
                    }
                    if equal && self.satisfies(&h.to, row, &conds)? {
                        let mut a = assignment.clone();
                        a.push((h.to.clone(), row.clone()));
                        next.push(a);
                    }
                }
            }
            current = next;
        }
        Ok(current)
    }

    fn fragments(&self, kind: FragmentKind, entity: &str) -> Vec<&'a MappingFragment> {
        self.mdl
            .fragments
            .iter()
            .filter(|f| f.kind == kind && f.entity == entity)
            .collect()
    }

    fn level_def(&self, level: &str) -> Result<&'a Level, QueryError> {
        self.cdl
            .level(level)
            .ok_or_else(|| invalid(format!("unknown level `{level}`")))
    }

    fn backing(&self, level: &Level) -> Result<Backing, QueryError> {
        let frags = self.fragments(FragmentKind::Level, &level.name);
        if frags.is_empty() {
            return Err(QueryError::UnmappedLevel(level.name.clone()));
        }
        let source = |f: &MappingFragment| Source {
            table: f.table.clone(),
            mapping: f
                .property_mappings
                .iter()
                .map(|m| (m.property.clone(), m.column.clone()))
                .collect(),
            conditions: f.conditions.clone(),
        };
        let props = |f: &MappingFragment| -> BTreeSet<String> {
            f.property_mappings.iter().map(|m| m.property.clone()).collect()
        };
        let maps_key = |s: &Source| level.key.iter().all(|k| s.column(k).is_some());
        let first = props(frags[0]);
        if frags.iter().all(|f| props(f) == first) {
            let sources: Vec<Source> = frags.iter().map(|f| source(f)).collect();
            if !maps_key(&sources[0]) {
                return Err(invalid(format!("key of `{}` is not mapped", level.name)));
            }
            return Ok(Backing::Alternatives(sources));
        }
        let mut merged: Vec<Source> = Vec::new();
        for f in frags {
            let s = source(f);
            if let Some(m) = merged.iter_mut().find(|m| m.table == s.table) {
                if s.mapping.iter().any(|(p, _)| m.column(p).is_some()) {
                    return Err(invalid(format!("overlapping fragments for `{}`", level.name)));
                }
                m.mapping.extend(s.mapping);
                m.conditions.extend(s.conditions);
            } else {
                merged.push(s);
            }
        }
        for (i, a) in merged.iter().enumerate() {
            for b in &merged[i + 1..] {
                if a.mapping.iter().any(|(p, _)| b.column(p).is_some()) {
                    return Err(invalid(format!("overlapping fragments for `{}`", level.name)));
                }
            }
        }
        let anchor = merged
            .iter()
            .position(maps_key)
            .ok_or_else(|| invalid(format!("key of `{}` is not mapped", level.name)))?;
        let anchor = merged.remove(anchor);
        Ok(Backing::Spanning(anchor, merged))
    }

    fn key_sources(&self, level: &Level) -> Result<Vec<Source>, QueryError> {
        Ok(match self.backing(level)? {
            Backing::Alternatives(s) => s,
            Backing::Spanning(anchor, _) => vec![anchor],
        })
    }

    /// Distinct member rows in property order.
    fn members(&self, level: &str) -> Result<Vec<Row>, QueryError> {
        if let Some(rows) = self.levels.borrow().get(level) {
            return Ok(rows.clone());
        }
        let def = self.level_def(level)?;
        let mut out: BTreeSet<Row> = BTreeSet::new();
        match self.backing(def)? {
            Backing::Alternatives(sources) => {
                for s in &sources {
                    for row in &self.table(&s.table)?.rows {
                        if !self.satisfies(&s.table, row, &s.conditions)? {
                            continue;
                        }
                        let mut member = Vec::new();
                        for p in &def.properties {
                            member.push(match s.column(&p.name) {
                                Some(c) => self.value(&s.table, row, c)?.clone(),
                                None => Value::Null,
                            });
                        }
                        out.insert(member);
                    }
                }
            }
            Backing::Spanning(anchor, others) => {
                let conditions_at = |t: &str| -> Vec<Condition> {
                    others
                        .iter()
                        .filter(|o| o.table == t)
                        .flat_map(|o| o.conditions.clone())
                        .collect()
                };
                for row in &self.table(&anchor.table)?.rows {
                    if !self.satisfies(&anchor.table, row, &anchor.conditions)? {
                        continue;
                    }
                    let mut assignments = vec![vec![(anchor.table.clone(), row.clone())]];
                    for o in &others {
                        let hops = self.path(&anchor.table, &o.table)?;
                        let mut next = Vec::new();
                        for a in assignments {
                            next.extend(self.walk(a, &hops, &conditions_at)?);
                        }
                        assignments = next;
                    }
                    for a in assignments {
                        let mut member = Vec::new();
                        for p in &def.properties {
                            let src = std::iter::once(&anchor)
                                .chain(others.iter())
                                .find(|s| s.column(&p.name).is_some());
                            member.push(match src {
                                Some(s) => {
                                    let r = &a.iter().find(|(t, _)| *t == s.table).expect("joined table").1;
                                    self.value(&s.table, r, s.column(&p.name).unwrap())?.clone()
                                }
                                None => Value::Null,
                            });
                        }
                        out.insert(member);
                    }
                }
            }
        }
        let rows: Vec<Row> = out.into_iter().collect();
        self.levels.borrow_mut().insert(level.to_owned(), rows.clone());
        Ok(rows)
    }

    fn member_keys(&self, level: &str) -> Result<BTreeSet<Key>, QueryError> {
        let def = self.level_def(level)?;
        let idx: Vec<usize> = def
            .key
            .iter()
            .map(|k| {
                def.properties
                    .iter()
                    .position(|p| &p.name == k)
                    .expect("key is a property")
            })
            .collect();
        Ok(self
            .members(level)?
            .iter()
            .map(|r| idx.iter().map(|&i| r[i].clone()).collect())
            .collect())
    }

    fn source_key(&self, s: &Source, row: &Row, level: &Level) -> Result<Key, QueryError> {
        level
            .key
            .iter()
            .map(|k| {
                self.value(&s.table, row, s.column(k).expect("key source maps the key"))
                    .cloned()
            })
            .collect()
    }

    fn pairs(&self, rel: &ParentChildRel) -> Result<Vec<(Key, Key)>, QueryError> {
        if let Some(p) = self.pairs.borrow().get(&rel.id()) {
            return Ok(p.clone());
        }
        let child = self.level_def(&rel.child)?;
        let parent = self.level_def(&rel.parent)?;
        let mut out: BTreeSet<(Key, Key)> = BTreeSet::new();
        for cs in self.key_sources(child)? {
            for ps in self.key_sources(parent)? {
                for row in &self.table(&cs.table)?.rows {
                    if !self.satisfies(&cs.table, row, &cs.conditions)? {
                        continue;
                    }
                    if cs.table == ps.table {
                        if self.satisfies(&ps.table, row, &ps.conditions)? {
                            out.insert((self.source_key(&cs, row, child)?, self.source_key(&ps, row, parent)?));
                        }
                        continue;
                    }
                    let hops = self.path(&cs.table, &ps.table)?;
                    let at = |t: &str| {
                        if t == ps.table {
                            ps.conditions.clone()
                        } else {
                            Vec::new()
                        }
                    };
                    for a in self.walk(vec![(cs.table.clone(), row.clone())], &hops, &at)? {
                        let prow = &a
                            .iter()
                            .find(|(t, _)| *t == ps.table)
                            .expect("path ends at parent table")
                            .1;
                        out.insert((self.source_key(&cs, row, child)?, self.source_key(&ps, prow, parent)?));
                    }
                }
            }
        }
        let children = self.member_keys(&rel.child)?;
        let parents = self.member_keys(&rel.parent)?;
        let pairs: Vec<(Key, Key)> = out
            .into_iter()
            .filter(|(c, p)| children.contains(c) && parents.contains(p))
            .collect();
        self.pairs.borrow_mut().insert(rel.id(), pairs.clone());
        Ok(pairs)
    }

    fn fact_rows(&self, fact_name: &str) -> Result<std::rc::Rc<Vec<FactRow>>, QueryError> {
        if let Some(f) = self.facts.borrow().get(fact_name) {
            return Ok(f.clone());
        }
        let fact = self
            .cdl
            .fact_relationship(fact_name)
            .ok_or_else(|| invalid(format!("unknown fact relationship `{fact_name}`")))?;
        let frags = self.fragments(FragmentKind::FactRelationship, fact_name);
        let frag = match frags.as_slice() {
            [] => return Err(QueryError::UnmappedFactRelationship(fact_name.to_owned())),
            [f] => *f,
            _ => return Err(invalid(format!("`{fact_name}` is mapped by several fragments"))),
        };
        let table = frag.table.as_str();
        let mut rows = Vec::new();
        for row in &self.table(table)?.rows {
            if !self.satisfies(table, row, &frag.conditions)? {
                continue;
            }
            // every combination of role keys this row resolves to
            let mut combos: Vec<HashMap<String, Key>> = vec![HashMap::new()];
            for role in &fact.roles {
                let dim = self
                    .cdl
                    .dimension(&role.dimension)
                    .ok_or_else(|| invalid(format!("unknown dimension `{}`", role.dimension)))?;
                let bottom = self.level_def(&dim.bottom_level)?;
                let direct: Vec<Option<&str>> = bottom
                    .key
                    .iter()
                    .map(|k| frag.column_for(&format!("{}.{k}", role.name)))
                    .collect();
                let keys: Vec<Key> = if direct.iter().all(Option::is_some) {
                    let mut k = Vec::new();
                    for c in direct {
                        k.push(self.value(table, row, c.unwrap())?.clone());
                    }
                    vec![k]
                } else if direct.iter().any(Option::is_some) {
                    return Err(invalid(format!("role `{}` is partially mapped", role.name)));
                } else {
                    let sources = self.key_sources(bottom)?;
                    let [ks] = sources.as_slice() else {
                        return Err(invalid(format!("role `{}` has no unique key source", role.name)));
                    };
                    if ks.table == table {
                        if self.satisfies(table, row, &ks.conditions)? {
                            vec![self.source_key(ks, row, bottom)?]
                        } else {
                            Vec::new()
                        }
                    } else {
                        let hops = self.path(table, &ks.table)?;
                        let at = |t: &str| {
                            if t == ks.table {
                                ks.conditions.clone()
                            } else {
                                Vec::new()
                            }
                        };
                        let mut out = Vec::new();
                        for a in self.walk(vec![(table.to_owned(), row.clone())], &hops, &at)? {
                            let r = &a
                                .iter()
                                .find(|(t, _)| *t == ks.table)
                                .expect("path ends at key source")
                                .1;
                            out.push(self.source_key(ks, r, bottom)?);
                        }
                        out
                    }
                };
                let mut next = Vec::new();
                for c in &combos {
                    for k in &keys {
                        let mut c = c.clone();
                        c.insert(role.name.clone(), k.clone());
                        next.push(c);
                    }
                }
                combos = next;
            }
            let mut attributes = HashMap::new();
            for p in fact.attributes() {
                let v = match frag.column_for(&p.name) {
                    Some(c) => self.value(table, row, c)?.clone(),
                    None => Value::Null,
                };
                attributes.insert(p.name.clone(), v);
            }
            for roles in combos {
                rows.push(FactRow {
                    roles,
                    attributes: attributes.clone(),
                });
            }
        }
        let rows = std::rc::Rc::new(rows);
        self.facts.borrow_mut().insert(fact_name.to_owned(), rows.clone());
        Ok(rows)
    }

    /// Output tuples (keys then name-like values) a bottom key contributes
    /// to one mention, with multiplicity.
    fn mention_index(&self, m: &Mention) -> Result<HashMap<Key, Vec<Row>>, QueryError> {
        let def = self.level_def(&m.level)?;
        let pos = |p: &str| {
            def.properties
                .iter()
                .position(|q| q.name == p)
                .expect("resolved property")
        };
        let mut by_key: HashMap<Key, BTreeSet<Row>> = HashMap::new();
        for row in self.members(&m.level)? {
            if !m.conditions.iter().all(|c| c.matches(&row[pos(&c.property)])) {
                continue;
            }
            let key: Key = m.keys.iter().map(|g| row[pos(&g.property)].clone()).collect();
            let tuple: Row = m.group_columns().map(|g| row[pos(&g.property)].clone()).collect();
            by_key.entry(key).or_default().insert(tuple);
        }

        let mut steps: Vec<HashMap<Key, Vec<Key>>> = Vec::new();
        let mut out: HashMap<Key, Vec<Row>> = HashMap::new();
        let bottoms: BTreeSet<Key> = if m.chains.is_empty() {
            BTreeSet::new()
        } else {
            self.member_keys(&m.bottom)?
        };
        for chain in &m.chains {
            steps.clear();
            for rel in chain {
                let mut idx: HashMap<Key, Vec<Key>> = HashMap::new();
                for (c, p) in self.pairs(rel)? {
                    idx.entry(c).or_default().push(p);
                }
                steps.push(idx);
            }
            for b in &bottoms {
                let mut reached = vec![b.clone()];
                for idx in &steps {
                    reached = reached
                        .iter()
                        .flat_map(|k| idx.get(k).cloned().unwrap_or_default())
                        .collect();
                }
                for t in reached {
                    if let Some(tuples) = by_key.get(&t) {
                        out.entry(b.clone()).or_default().extend(tuples.iter().cloned());
                    }
                }
            }
        }
        if m.chains.is_empty() {
            for (k, tuples) in by_key {
                out.insert(k, tuples.into_iter().collect());
            }
        }
        Ok(out)
    }

    pub fn execute(&self, query: &CqlQuery, options: QueryOptions) -> Result<Relation, QueryError> {
        let resolved = resolve(query, self.cdl, options)?;
        self.execute_resolved(&resolved)
    }

    fn execute_resolved(&self, q: &ResolvedQuery) -> Result<Relation, QueryError> {
        if self.fragments(FragmentKind::FactRelationship, &q.fact).is_empty() {
            return Err(QueryError::UnmappedFactRelationship(q.fact.clone()));
        }
        for level in q.required_levels() {
            if self.fragments(FragmentKind::Level, &level).is_empty() {
                return Err(QueryError::UnmappedLevel(level));
            }
        }
        let facts = self.fact_rows(&q.fact)?;
        let indexes: Vec<HashMap<Key, Vec<Row>>> = q
            .mentions
            .iter()
            .map(|m| self.mention_index(m))
            .collect::<Result<_, _>>()?;

        let mut groups: BTreeMap<Row, Accumulator> = BTreeMap::new();
        let no_grouping = q.mentions.is_empty() && q.grain.is_empty();
        if no_grouping {
            groups.insert(Vec::new(), Accumulator::new(q));
        }
        for f in facts.iter() {
            let mut partials: Vec<Row> = vec![Vec::new()];
            for (m, idx) in q.mentions.iter().zip(&indexes) {
                let Some(tuples) = idx.get(&f.roles[&m.role]) else {
                    partials.clear();
                    break;
                };
                let mut next = Vec::new();
                for p in &partials {
                    for t in tuples {
                        let mut row = p.clone();
                        row.extend(t.iter().cloned());
                        next.push(row);
                    }
                }
                partials = next;
            }
            for mut group in partials {
                for g in &q.grain {
                    let (role, key) = g.fact_column.split_once('.').expect("role-qualified column");
                    let bottom = q.mentions.iter().find(|m| m.role == role).map(|m| m.bottom.clone());
                    let _ = bottom;
                    let level = self.bottom_of_role(&q.fact, role)?;
                    let i = level.key.iter().position(|k| k == key).expect("bottom key");
                    group.push(f.roles[role][i].clone());
                }
                let measure = q.measure.as_ref().map(|m| &f.attributes[&m.name]);
                groups
                    .entry(group)
                    .or_insert_with(|| Accumulator::new(q))
                    .add(measure)?;
            }
        }
        let mut rows = Vec::with_capacity(groups.len());
        for (mut key, acc) in groups {
            key.push(acc.finish()?);
            rows.push(key);
        }
        Ok(Relation {
            columns: q.output_columns(),
            rows,
        }
        .sorted())
    }

    fn bottom_of_role(&self, fact: &str, role: &str) -> Result<&'a Level, QueryError> {
        let f = self
            .cdl
            .fact_relationship(fact)
            .ok_or_else(|| invalid(format!("unknown fact `{fact}`")))?;
        let r = f.role(role).ok_or_else(|| invalid(format!("unknown role `{role}`")))?;
        let d = self
            .cdl
            .dimension(&r.dimension)
            .ok_or_else(|| invalid(format!("unknown dimension `{}`", r.dimension)))?;
        self.level_def(&d.bottom_level)
    }
}

enum Accumulator {
    Count(i64),
    Sum {
        int: Option<i64>,
        dec: Option<Decimal>,
        integer: bool,
    },
    Avg {
        total: Decimal,
        n: i64,
    },
    Min(Option<Value>),
    Max(Option<Value>),
}

impl Accumulator {
    fn new(q: &ResolvedQuery) -> Self {
        match q.function {
            AggregateFunction::Count => Accumulator::Count(0),
            AggregateFunction::Sum => Accumulator::Sum {
                int: None,
                dec: None,
                integer: q.measure.as_ref().is_some_and(|m| m.data_type == DataType::Integer),
            },
            AggregateFunction::Avg => Accumulator::Avg {
                total: Decimal::ZERO,
                n: 0,
            },
            AggregateFunction::Min => Accumulator::Min(None),
            AggregateFunction::Max => Accumulator::Max(None),
        }
    }

    fn add(&mut self, v: Option<&Value>) -> Result<(), QueryError> {
        let overflow = || QueryError::Storage(StorageError::Overflow);
        let as_decimal = |v: &Value| match v {
            Value::Integer(i) => Decimal::from(*i),
            Value::Decimal(d) => *d,
            _ => Decimal::ZERO,
        };
        match (self, v) {
            (Accumulator::Count(n), None) => *n += 1,
            (Accumulator::Count(n), Some(v)) => {
                if !v.is_null() {
                    *n += 1
                }
            }
            (_, None) => {}
            (_, Some(Value::Null)) => {}
            (Accumulator::Sum { int, dec, integer }, Some(v)) => {
                if *integer {
                    let Value::Integer(x) = v else {
                        return Err(invalid("non-integer in integer sum".into()));
                    };
                    *int = Some(int.unwrap_or(0).checked_add(*x).ok_or_else(overflow)?);
                } else {
                    *dec = Some(
                        dec.unwrap_or(Decimal::ZERO)
                            .checked_add(as_decimal(v))
                            .ok_or_else(overflow)?,
                    );
                }
            }
            (Accumulator::Avg { total, n }, Some(v)) => {
                *total = total.checked_add(as_decimal(v)).ok_or_else(overflow)?;
                *n += 1;
            }
            (Accumulator::Min(m), Some(v)) => {
                if m.as_ref().is_none_or(|cur| v < cur) {
                    *m = Some(v.clone());
                }
            }
            (Accumulator::Max(m), Some(v)) => {
                if m.as_ref().is_none_or(|cur| v > cur) {
                    *m = Some(v.clone());
                }
            }
        }
        Ok(())
    }

    fn finish(self) -> Result<Value, QueryError> {
        Ok(match self {
            Accumulator::Count(n) => Value::Integer(n),
            Accumulator::Sum { int, integer: true, .. } => int.map_or(Value::Null, Value::Integer),
            Accumulator::Sum { dec, .. } => dec.map_or(Value::Null, Value::Decimal),
            Accumulator::Avg { n: 0, .. } => Value::Null,
            Accumulator::Avg { total, n } => Value::Decimal(
                total
                    .checked_div(Decimal::from(n))
                    .ok_or(QueryError::Storage(StorageError::Overflow))?,
            ),
            Accumulator::Min(m) | Accumulator::Max(m) => m.unwrap_or(Value::Null),
        })
    }
}

/// Answers `query` by brute force, independently of the view compiler and
/// the plan evaluator.
pub fn oracle_execute(
    query: &CqlQuery,
    cdl: &CdlModel,
    sdl: &SdlModel,
    mdl: &MdlModel,
    store: &Store,
    options: QueryOptions,
) -> Result<Relation, QueryError> {
    Oracle::new(cdl, sdl, mdl, store).execute(query, options)
}
