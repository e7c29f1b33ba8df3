use std::fmt::Write as _;

use quick_xml::escape::escape;

use crate::model::{CdlModel, ConditionOp, FragmentKind, MdlModel, Property, SdlModel, Table};

struct Doc {
    out: String,
    depth: usize,
}

impl Doc {
    fn new() -> Self {
        Self {
            out: String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"),
            depth: 0,
        }
    }

    fn tag(&mut self, name: &str, attrs: &[(&str, &str)], close: bool) {
        let _ = write!(self.out, "{:width$}<{name}", "", width = self.depth * 2);
        for (k, v) in attrs {
            let _ = write!(self.out, " {k}=\"{}\"", escape(*v));
        }
        self.out.push_str(if close { "/>\n" } else { ">\n" });
        if !close {
            self.depth += 1;
        }
    }

    fn open(&mut self, name: &str, attrs: &[(&str, &str)]) {
        self.tag(name, attrs, false);
    }

    fn empty(&mut self, name: &str, attrs: &[(&str, &str)]) {
        self.tag(name, attrs, true);
    }

    fn text_element(&mut self, name: &str, text: &str) {
        let _ = writeln!(
            self.out,
            "{:width$}<{name}>{}</{name}>",
            "",
            escape(text),
            width = self.depth * 2
        );
    }

    fn close(&mut self, name: &str) {
        self.depth -= 1;
        let _ = writeln!(self.out, "{:width$}</{name}>", "", width = self.depth * 2);
    }

    fn property(&mut self, element: &str, p: &Property) {
        self.empty(element, &[("name", &p.name), ("type", p.data_type.as_str())]);
    }
}

pub fn cdl(model: &CdlModel) -> String {
    let mut d = Doc::new();
    d.open("cdl", &[("name", &model.name)]);

    d.open("levelSet", &[]);
    for level in &model.levels {
        d.open("level", &[("name", &level.name)]);
        for p in &level.properties {
            d.property("property", p);
        }
        for k in &level.key {
            d.empty("key", &[("name", k)]);
        }
        d.close("level");
    }
    d.close("levelSet");

    d.open("dimensionSet", &[]);
    for dim in &model.dimensions {
        let attrs = [("name", dim.name.as_str()), ("bottomLevel", dim.bottom_level.as_str())];
        if dim.hierarchies.is_empty() {
            d.empty("dimension", &attrs);
        } else {
            d.open("dimension", &attrs);
            for h in &dim.hierarchies {
                d.empty("hierarchy", &[("name", h)]);
            }
            d.close("dimension");
        }
    }
    d.close("dimensionSet");

    if !model.hierarchies.is_empty() {
        d.open("hierarchySet", &[]);
        for h in &model.hierarchies {
            d.open("hierarchy", &[("name", &h.name)]);
            for r in &h.relationships {
                let child_card = r.child_card.to_string();
                let parent_card = r.parent_card.to_string();
                let mut attrs = vec![
                    ("child", r.child.as_str()),
                    ("parent", r.parent.as_str()),
                    ("childCard", child_card.as_str()),
                    ("parentCard", parent_card.as_str()),
                ];
                if let Some(g) = &r.exclusive_group {
                    attrs.push(("exclusiveGroup", g));
                }
                d.empty("parentChild", &attrs);
            }
            d.close("hierarchy");
        }
        d.close("hierarchySet");
    }

    d.open("factRelationshipSet", &[]);
    for f in &model.fact_relationships {
        d.open("factRelationship", &[("name", &f.name)]);
        for r in &f.roles {
            d.empty("role", &[("name", &r.name), ("dimension", &r.dimension)]);
        }
        for m in &f.measures {
            d.property("measure", m);
        }
        for p in &f.properties {
            d.property("property", p);
        }
        d.close("factRelationship");
    }
    d.close("factRelationshipSet");

    d.close("cdl");
    d.out
}

fn table(d: &mut Doc, t: &Table) {
    d.open("table", &[("name", &t.name)]);
    for c in &t.columns {
        d.empty("column", &[("name", &c.name), ("type", c.data_type.as_str())]);
    }
    d.open("primaryKey", &[]);
    for k in &t.primary_key {
        d.empty("columnRef", &[("name", k)]);
    }
    d.close("primaryKey");
    for fk in &t.foreign_keys {
        d.open("foreignKey", &[("table", &fk.table)]);
        for (c, target) in fk.columns.iter().zip(&fk.target_columns) {
            d.empty("columnRef", &[("name", c), ("target", target)]);
        }
        d.close("foreignKey");
    }
    d.close("table");
}

pub fn sdl(model: &SdlModel) -> String {
    let mut d = Doc::new();
    d.open("sdl", &[("name", &model.name)]);
    d.open("factTableSet", &[]);
    for t in &model.fact_tables {
        table(&mut d, t);
    }
    d.close("factTableSet");
    d.open("dimensionTableSet", &[]);
    for t in &model.dimension_tables {
        table(&mut d, t);
    }
    d.close("dimensionTableSet");
    d.close("sdl");
    d.out
}

pub fn mdl(model: &MdlModel) -> String {
    let mut d = Doc::new();
    d.open("mdl", &[]);
    d.open("fragmentSet", &[]);
    for f in &model.fragments {
        let (element, entity_attr) = match f.kind {
            FragmentKind::Level => ("level-mapping", "level"),
            FragmentKind::FactRelationship => ("factrel-mapping", "factRelationship"),
        };
        let mut attrs = Vec::new();
        if let Some(n) = &f.name {
            attrs.push(("name", n.as_str()));
        }
        attrs.push((entity_attr, f.entity.as_str()));
        attrs.push(("table", f.table.as_str()));
        d.open(element, &attrs);
        for m in &f.property_mappings {
            d.empty("property-mapping", &[("property", &m.property), ("column", &m.column)]);
        }
        for c in &f.conditions {
            let op = match c.operator {
                ConditionOp::Equals => "equals",
                ConditionOp::In => "in",
            };
            d.open("condition", &[("column", &c.column), ("operator", op)]);
            for v in &c.values {
                d.text_element("value", v);
            }
            d.close("condition");
        }
        d.close(element);
    }
    d.close("fragmentSet");
    d.close("mdl");
    d.out
}
