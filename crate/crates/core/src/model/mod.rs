//! Conceptual (CDL), store (SDL) and mapping (MDL) model types.
//!
//! Models are plain immutable values; structural checks live in
//! [`validate`]. Sets are kept as `Vec`s so that serialization preserves
//! document order, but nothing in the crate depends on that order.

mod diagnostic;
pub mod validate;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::value::DataType;

pub use diagnostic::{Diagnostic, Severity};
pub use validate::{validate_cdl, validate_mdl, validate_sdl};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Property {
    pub name: String,
    pub data_type: DataType,
}

impl Property {
    pub fn new(name: impl Into<String>, data_type: DataType) -> Self {
        Self {
            name: name.into(),
            data_type,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Level {
    pub name: String,
    pub properties: Vec<Property>,
    pub key: Vec<String>,
}

impl Level {
    pub fn property(&self, name: &str) -> Option<&Property> {
        self.properties.iter().find(|p| p.name == name)
    }

    pub fn key_properties(&self) -> impl Iterator<Item = &Property> {
        self.key.iter().filter_map(|k| self.property(k))
    }

    /// Properties that label members for people: `name` or `...Name`.
    pub fn name_like_properties(&self) -> impl Iterator<Item = &Property> {
        self.properties
            .iter()
            .filter(|p| !self.key.contains(&p.name) && p.name.to_ascii_lowercase().ends_with("name"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Dimension {
    pub name: String,
    pub bottom_level: String,
    /// Empty means the single implicit hierarchy.
    pub hierarchies: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum MinCard {
    Zero,
    One,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum MaxCard {
    One,
    Many,
}

/// A `(min,max)` bound on the number of related members.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Cardinality {
    pub min: MinCard,
    pub max: MaxCard,
}

impl Cardinality {
    pub const ONE: Cardinality = Cardinality {
        min: MinCard::One,
        max: MaxCard::One,
    };
    pub const OPTIONAL: Cardinality = Cardinality {
        min: MinCard::Zero,
        max: MaxCard::One,
    };
    pub const ONE_OR_MORE: Cardinality = Cardinality {
        min: MinCard::One,
        max: MaxCard::Many,
    };
    pub const ANY: Cardinality = Cardinality {
        min: MinCard::Zero,
        max: MaxCard::Many,
    };

    pub fn admits(&self, count: usize) -> bool {
        let lower = match self.min {
            MinCard::Zero => 0,
            MinCard::One => 1,
        };
        count >= lower && (self.max == MaxCard::Many || count <= 1)
    }

    pub fn is_mandatory(&self) -> bool {
        self.min == MinCard::One
    }
}

impl fmt::Display for Cardinality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let min = match self.min {
            MinCard::Zero => "0",
            MinCard::One => "1",
        };
        let max = match self.max {
            MaxCard::One => "1",
            MaxCard::Many => "n",
        };
        write!(f, "({min},{max})")
    }
}

impl FromStr for Cardinality {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("invalid cardinality `{s}`, expected e.g. `(1,n)`");
        let inner = s
            .trim()
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(bad)?;
        let (min, max) = inner.split_once(',').ok_or_else(bad)?;
        let min = match min.trim() {
            "0" => MinCard::Zero,
            "1" => MinCard::One,
            _ => return Err(bad()),
        };
        let max = match max.trim() {
            "1" => MaxCard::One,
            "n" | "N" => MaxCard::Many,
            _ => return Err(bad()),
        };
        Ok(Cardinality { min, max })
    }
}

/// A child→parent roll-up link between two levels.
///
/// `child_card` bounds the children per parent member and `parent_card` the
/// parents per child member, so City→Country is `(1,n)` to `(1,1)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParentChildRel {
    pub child: String,
    pub parent: String,
    pub child_card: Cardinality,
    pub parent_card: Cardinality,
    pub exclusive_group: Option<String>,
}

impl ParentChildRel {
    pub fn new(child: &str, parent: &str, child_card: Cardinality, parent_card: Cardinality) -> Self {
        Self {
            child: child.to_owned(),
            parent: parent.to_owned(),
            child_card,
            parent_card,
            exclusive_group: None,
        }
    }

    pub fn exclusive(mut self, group: &str) -> Self {
        self.exclusive_group = Some(group.to_owned());
        self
    }

    /// Identifier of the relationship, e.g. `Day->Weekend`.
    pub fn id(&self) -> String {
        format!("{}->{}", self.child, self.parent)
    }

    pub fn cardinality_label(&self) -> String {
        format!("{}-{}", self.child_card, self.parent_card)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Hierarchy {
    pub name: String,
    pub relationships: Vec<ParentChildRel>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Role {
    pub name: String,
    pub dimension: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FactRelationship {
    pub name: String,
    pub roles: Vec<Role>,
    pub measures: Vec<Property>,
    pub properties: Vec<Property>,
}

impl FactRelationship {
    pub fn measure(&self, name: &str) -> Option<&Property> {
        self.measures.iter().find(|m| m.name == name)
    }

    pub fn role(&self, name: &str) -> Option<&Role> {
        self.roles.iter().find(|r| r.name == name)
    }

    /// Measures first, then properties.
    pub fn attributes(&self) -> impl Iterator<Item = &Property> {
        self.measures.iter().chain(&self.properties)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CdlModel {
    pub name: String,
    pub levels: Vec<Level>,
    pub dimensions: Vec<Dimension>,
    pub hierarchies: Vec<Hierarchy>,
    pub fact_relationships: Vec<FactRelationship>,
}

impl CdlModel {
    pub fn level(&self, name: &str) -> Option<&Level> {
        self.levels.iter().find(|l| l.name == name)
    }

    pub fn dimension(&self, name: &str) -> Option<&Dimension> {
        self.dimensions.iter().find(|d| d.name == name)
    }

    pub fn hierarchy(&self, name: &str) -> Option<&Hierarchy> {
        self.hierarchies.iter().find(|h| h.name == name)
    }

    pub fn fact_relationship(&self, name: &str) -> Option<&FactRelationship> {
        self.fact_relationships.iter().find(|f| f.name == name)
    }

    /// Every parent-child relationship, in hierarchy order.
    pub fn relationships(&self) -> impl Iterator<Item = &ParentChildRel> {
        self.hierarchies.iter().flat_map(|h| &h.relationships)
    }

    pub fn relationship(&self, id: &str) -> Option<&ParentChildRel> {
        self.relationships().find(|r| r.id() == id)
    }

    /// The relationships forming a dimension's hierarchy graph. A dimension
    /// that names no hierarchy gets every relationship reachable from its
    /// bottom level.
    pub fn dimension_relationships(&self, dimension: &Dimension) -> Vec<&ParentChildRel> {
        let mut out: Vec<&ParentChildRel> = Vec::new();
        if !dimension.hierarchies.is_empty() {
            for h in dimension.hierarchies.iter().filter_map(|h| self.hierarchy(h)) {
                for r in &h.relationships {
                    if !out.iter().any(|o| o.id() == r.id()) {
                        out.push(r);
                    }
                }
            }
            return out;
        }
        let mut by_child: HashMap<&str, Vec<&ParentChildRel>> = HashMap::new();
        for r in self.relationships() {
            by_child.entry(r.child.as_str()).or_default().push(r);
        }
        let mut seen = BTreeSet::new();
        let mut stack = vec![dimension.bottom_level.as_str()];
        while let Some(level) = stack.pop() {
            if !seen.insert(level) {
                continue;
            }
            for r in by_child.get(level).into_iter().flatten() {
                if !out.iter().any(|o| o.id() == r.id()) {
                    out.push(r);
                }
                stack.push(&r.parent);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Column {
    pub name: String,
    pub data_type: DataType,
}

impl Column {
    pub fn new(name: impl Into<String>, data_type: DataType) -> Self {
        Self {
            name: name.into(),
            data_type,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ForeignKey {
    pub columns: Vec<String>,
    pub table: String,
    pub target_columns: Vec<String>,
}

impl fmt::Display for ForeignKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}) -> {}({})",
            self.columns.join(", "),
            self.table,
            self.target_columns.join(", ")
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<Column>,
    pub primary_key: Vec<String>,
    pub foreign_keys: Vec<ForeignKey>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SdlModel {
    pub name: String,
    pub fact_tables: Vec<Table>,
    pub dimension_tables: Vec<Table>,
}

impl SdlModel {
    pub fn tables(&self) -> impl Iterator<Item = &Table> {
        self.fact_tables.iter().chain(&self.dimension_tables)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables().find(|t| t.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum FragmentKind {
    Level,
    FactRelationship,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PropertyMapping {
    /// A level property, a fact measure/property, or `role.keyProperty`
    /// for the role columns of a fact table.
    pub property: String,
    pub column: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ConditionOp {
    Equals,
    In,
}

/// A value restriction on a mapped table. Literal values stay textual until
/// they are checked against the column type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Condition {
    pub column: String,
    pub operator: ConditionOp,
    pub values: Vec<String>,
}

impl Condition {
    pub fn label(&self) -> String {
        match self.operator {
            ConditionOp::Equals => format!("{} = {}", self.column, self.values.join(",")),
            ConditionOp::In => format!("{} \u{2208} {{{}}}", self.column, self.values.join(",")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MappingFragment {
    pub name: Option<String>,
    pub kind: FragmentKind,
    pub entity: String,
    pub table: String,
    pub property_mappings: Vec<PropertyMapping>,
    pub conditions: Vec<Condition>,
}

impl MappingFragment {
    pub fn column_for(&self, property: &str) -> Option<&str> {
        self.property_mappings
            .iter()
            .find(|m| m.property == property)
            .map(|m| m.column.as_str())
    }

    pub fn mapped_properties(&self) -> BTreeSet<&str> {
        self.property_mappings.iter().map(|m| m.property.as_str()).collect()
    }

    pub fn display_name(&self) -> String {
        match &self.name {
            Some(n) => n.clone(),
            None => format!("{}<-{}", self.entity, self.table),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct MdlModel {
    pub fragments: Vec<MappingFragment>,
}

impl MdlModel {
    pub fn fragments_for<'a>(
        &'a self,
        kind: FragmentKind,
        entity: &'a str,
    ) -> impl Iterator<Item = &'a MappingFragment> + 'a {
        self.fragments
            .iter()
            .filter(move |f| f.kind == kind && f.entity == entity)
    }
}
