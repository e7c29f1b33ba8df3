use std::str::FromStr;

use super::dom::Element;
use super::{ParseError, ParseMode};
use crate::model::{
    Cardinality, CdlModel, Column, Condition, ConditionOp, Dimension, FactRelationship, ForeignKey, FragmentKind,
    Hierarchy, Level, MappingFragment, MdlModel, ParentChildRel, Property, PropertyMapping, Role, SdlModel, Table,
};
use crate::value::DataType;

pub(super) struct ModelReader {
    pub mode: ParseMode,
}

fn is_namespace_attr(name: &str) -> bool {
    name == "xmlns" || name.starts_with("xmlns:") || name.starts_with("xsi:")
}

impl ModelReader {
    /// Checks attribute and child names against the allowed sets. Returns the
    /// children that are allowed, so lenient mode can skip the rest.
    fn shape<'e>(&self, el: &'e Element, attrs: &[&str], children: &[&str]) -> Result<Vec<&'e Element>, ParseError> {
        if self.mode == ParseMode::Strict {
            for (name, _) in &el.attributes {
                if !attrs.contains(&name.as_str()) && !is_namespace_attr(name) {
                    return Err(ParseError::UnknownAttribute {
                        element: el.name.clone(),
                        name: name.clone(),
                        position: el.position,
                    });
                }
            }
        }
        let mut out = Vec::new();
        for child in &el.children {
            if children.contains(&child.name.as_str()) {
                out.push(child);
            } else if self.mode == ParseMode::Strict {
                return Err(ParseError::UnknownElement {
                    parent: el.name.clone(),
                    name: child.name.clone(),
                    position: child.position,
                });
            }
        }
        Ok(out)
    }

    fn required_set<'e>(
        &self,
        parent: &Element,
        children: &[&'e Element],
        name: &str,
    ) -> Result<Vec<&'e Element>, ParseError> {
        let sets: Vec<_> = children.iter().filter(|c| c.name == name).collect();
        if sets.is_empty() {
            return Err(ParseError::MissingElement {
                parent: parent.name.clone(),
                name: name.to_owned(),
                position: parent.position,
            });
        }
        Ok(sets.iter().flat_map(|s| s.children.iter()).collect())
    }

    fn members<'e>(&self, set: &'e Element, member: &str) -> Result<Vec<&'e Element>, ParseError> {
        self.shape(set, &[], &[member])
    }

    pub fn cdl(&self, root: &Element) -> Result<CdlModel, ParseError> {
        let children = self.shape(
            root,
            &["name"],
            &["levelSet", "dimensionSet", "hierarchySet", "factRelationshipSet"],
        )?;
        let mut model = CdlModel {
            name: attr(root, "name")?.to_owned(),
            ..Default::default()
        };

        let set = |name: &str, member: &str, required: bool| -> Result<Vec<&Element>, ParseError> {
            let sets: Vec<&Element> = children.iter().copied().filter(|c| c.name == name).collect();
            if required && sets.is_empty() {
                return Err(ParseError::MissingElement {
                    parent: root.name.clone(),
                    name: name.to_owned(),
                    position: root.position,
                });
            }
            let mut out = Vec::new();
            for s in sets {
                out.extend(self.members(s, member)?);
            }
            Ok(out)
        };

        for el in set("levelSet", "level", true)? {
            model.levels.push(self.level(el)?);
        }
        for el in set("dimensionSet", "dimension", true)? {
            let kids = self.shape(el, &["name", "bottomLevel"], &["hierarchy"])?;
            let mut hierarchies = Vec::new();
            for h in kids {
                self.shape(h, &["name"], &[])?;
                hierarchies.push(attr(h, "name")?.to_owned());
            }
            model.dimensions.push(Dimension {
                name: attr(el, "name")?.to_owned(),
                bottom_level: attr(el, "bottomLevel")?.to_owned(),
                hierarchies,
            });
        }
        for el in set("hierarchySet", "hierarchy", false)? {
            let kids = self.shape(el, &["name"], &["parentChild"])?;
            let mut relationships = Vec::new();
            for r in kids {
                self.shape(
                    r,
                    &["child", "parent", "childCard", "parentCard", "exclusiveGroup"],
                    &[],
                )?;
                relationships.push(ParentChildRel {
                    child: attr(r, "child")?.to_owned(),
                    parent: attr(r, "parent")?.to_owned(),
                    child_card: parsed::<Cardinality>(r, "childCard")?,
                    parent_card: parsed::<Cardinality>(r, "parentCard")?,
                    exclusive_group: r.attr("exclusiveGroup").map(str::to_owned),
                });
            }
            model.hierarchies.push(Hierarchy {
                name: attr(el, "name")?.to_owned(),
                relationships,
            });
        }
        for el in set("factRelationshipSet", "factRelationship", true)? {
            let kids = self.shape(el, &["name"], &["role", "measure", "property"])?;
            let mut fact = FactRelationship {
                name: attr(el, "name")?.to_owned(),
                roles: Vec::new(),
                measures: Vec::new(),
                properties: Vec::new(),
            };
            for k in kids {
                match k.name.as_str() {
                    "role" => {
                        self.shape(k, &["name", "dimension"], &[])?;
                        fact.roles.push(Role {
                            name: attr(k, "name")?.to_owned(),
                            dimension: attr(k, "dimension")?.to_owned(),
                        });
                    }
                    "measure" => fact.measures.push(self.property(k)?),
                    _ => fact.properties.push(self.property(k)?),
                }
            }
            model.fact_relationships.push(fact);
        }
        Ok(model)
    }

    fn property(&self, el: &Element) -> Result<Property, ParseError> {
        self.shape(el, &["name", "type"], &[])?;
        Ok(Property {
            name: attr(el, "name")?.to_owned(),
            data_type: parsed::<DataType>(el, "type")?,
        })
    }

    fn level(&self, el: &Element) -> Result<Level, ParseError> {
        let kids = self.shape(el, &["name"], &["property", "key"])?;
        let mut level = Level {
            name: attr(el, "name")?.to_owned(),
            properties: Vec::new(),
            key: Vec::new(),
        };
        for k in kids {
            if k.name == "property" {
                level.properties.push(self.property(k)?);
            } else {
                self.shape(k, &["name"], &[])?;
                level.key.push(attr(k, "name")?.to_owned());
            }
        }
        Ok(level)
    }

    pub fn sdl(&self, root: &Element) -> Result<SdlModel, ParseError> {
        let children = self.shape(root, &["name"], &["factTableSet", "dimensionTableSet"])?;
        let mut model = SdlModel {
            name: attr(root, "name")?.to_owned(),
            ..Default::default()
        };
        for el in self.required_set(root, &children, "factTableSet")? {
            if let Some(t) = self.table_member(el)? {
                model.fact_tables.push(t);
            }
        }
        for el in self.required_set(root, &children, "dimensionTableSet")? {
            if let Some(t) = self.table_member(el)? {
                model.dimension_tables.push(t);
            }
        }
        Ok(model)
    }

    fn table_member(&self, el: &Element) -> Result<Option<Table>, ParseError> {
        if el.name != "table" {
            if self.mode == ParseMode::Strict {
                return Err(ParseError::UnknownElement {
                    parent: "table set".into(),
                    name: el.name.clone(),
                    position: el.position,
                });
            }
            return Ok(None);
        }
        let kids = self.shape(el, &["name"], &["column", "primaryKey", "foreignKey"])?;
        let mut table = Table {
            name: attr(el, "name")?.to_owned(),
            columns: Vec::new(),
            primary_key: Vec::new(),
            foreign_keys: Vec::new(),
        };
        for k in kids {
            match k.name.as_str() {
                "column" => {
                    self.shape(k, &["name", "type"], &[])?;
                    table.columns.push(Column {
                        name: attr(k, "name")?.to_owned(),
                        data_type: parsed::<DataType>(k, "type")?,
                    });
                }
                "primaryKey" => {
                    for c in self.shape(k, &[], &["columnRef"])? {
                        self.shape(c, &["name"], &[])?;
                        table.primary_key.push(attr(c, "name")?.to_owned());
                    }
                }
                _ => {
                    let refs = self.shape(k, &["table"], &["columnRef"])?;
                    let mut fk = ForeignKey {
                        columns: Vec::new(),
                        table: attr(k, "table")?.to_owned(),
                        target_columns: Vec::new(),
                    };
                    for c in refs {
                        self.shape(c, &["name", "target"], &[])?;
                        fk.columns.push(attr(c, "name")?.to_owned());
                        fk.target_columns.push(attr(c, "target")?.to_owned());
                    }
                    table.foreign_keys.push(fk);
                }
            }
        }
        Ok(Some(table))
    }

    pub fn mdl(&self, root: &Element) -> Result<MdlModel, ParseError> {
        let children = self.shape(root, &[], &["fragmentSet"])?;
        let mut model = MdlModel::default();
        for el in self.required_set(root, &children, "fragmentSet")? {
            let (kind, entity_attr) = match el.name.as_str() {
                "level-mapping" => (FragmentKind::Level, "level"),
                "factrel-mapping" => (FragmentKind::FactRelationship, "factRelationship"),
                other => {
                    if self.mode == ParseMode::Strict {
                        return Err(ParseError::UnknownElement {
                            parent: "fragmentSet".into(),
                            name: other.to_owned(),
                            position: el.position,
                        });
                    }
                    continue;
                }
            };
            let kids = self.shape(el, &["name", entity_attr, "table"], &["property-mapping", "condition"])?;
            let mut fragment = MappingFragment {
                name: el.attr("name").map(str::to_owned),
                kind,
                entity: attr(el, entity_attr)?.to_owned(),
                table: attr(el, "table")?.to_owned(),
                property_mappings: Vec::new(),
                conditions: Vec::new(),
            };
            for k in kids {
                if k.name == "property-mapping" {
                    self.shape(k, &["property", "column"], &[])?;
                    fragment.property_mappings.push(PropertyMapping {
                        property: attr(k, "property")?.to_owned(),
                        column: attr(k, "column")?.to_owned(),
                    });
                } else {
                    let values = self.shape(k, &["column", "operator"], &["value"])?;
                    let operator = match attr(k, "operator")? {
                        "equals" => ConditionOp::Equals,
                        "in" => ConditionOp::In,
                        other => {
                            return Err(ParseError::InvalidValue {
                                element: k.name.clone(),
                                attribute: "operator".into(),
                                message: format!("`{other}` is not one of equals, in"),
                                position: k.position,
                            })
                        }
                    };
                    let mut cond = Condition {
                        column: attr(k, "column")?.to_owned(),
                        operator,
                        values: Vec::new(),
                    };
                    for v in values {
                        self.shape(v, &[], &[])?;
                        cond.values.push(v.text.clone());
                    }
                    fragment.conditions.push(cond);
                }
            }
            model.fragments.push(fragment);
        }
        Ok(model)
    }
}

fn attr<'e>(el: &'e Element, name: &str) -> Result<&'e str, ParseError> {
    el.attr(name).ok_or_else(|| ParseError::MissingAttribute {
        element: el.name.clone(),
        name: name.to_owned(),
        position: el.position,
    })
}

fn parsed<T: FromStr<Err = String>>(el: &Element, name: &str) -> Result<T, ParseError> {
    attr(el, name)?.parse().map_err(|message| ParseError::InvalidValue {
        element: el.name.clone(),
        attribute: name.to_owned(),
        message,
        position: el.position,
    })
}
