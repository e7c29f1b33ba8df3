//! JSON graph export of the three models for diagram rendering.
//!
//! Node ids are `<kind>:<name>`. The document carries `formatVersion`;
//! bump [`GRAPH_FORMAT_VERSION`] on any incompatible change.

use serde_json::{json, Value as Json};

use crate::model::{CdlModel, FragmentKind, MdlModel, SdlModel};

pub const GRAPH_FORMAT_VERSION: u32 = 1;

fn level_id(name: &str) -> String {
    format!("level:{name}")
}

fn table_id(name: &str) -> String {
    format!("table:{name}")
}

pub fn graph_json(cdl: &CdlModel, sdl: &SdlModel, mdl: &MdlModel) -> Json {
    let mut nodes = Vec::new();
    let mut edges = Vec::new();

    for level in &cdl.levels {
        let props: Vec<Json> = level
            .properties
            .iter()
            .map(|p| json!({ "name": p.name, "type": p.data_type, "key": level.key.contains(&p.name) }))
            .collect();
        nodes.push(json!({
            "id": level_id(&level.name),
            "kind": "level",
            "label": level.name,
            "properties": props,
        }));
    }
    for dim in &cdl.dimensions {
        nodes.push(json!({
            "id": format!("dimension:{}", dim.name),
            "kind": "dimension",
            "label": dim.name,
        }));
        edges.push(json!({
            "kind": "bottomLevel",
            "source": format!("dimension:{}", dim.name),
            "target": level_id(&dim.bottom_level),
        }));
        for h in &dim.hierarchies {
            edges.push(json!({
                "kind": "hierarchy",
                "source": format!("dimension:{}", dim.name),
                "target": format!("hierarchy:{h}"),
            }));
        }
    }
    for h in &cdl.hierarchies {
        nodes.push(json!({
            "id": format!("hierarchy:{}", h.name),
            "kind": "hierarchy",
            "label": h.name,
        }));
        for r in &h.relationships {
            edges.push(json!({
                "kind": "parentChild",
                "source": level_id(&r.child),
                "target": level_id(&r.parent),
                "label": r.cardinality_label(),
                "childCard": r.child_card.to_string(),
                "parentCard": r.parent_card.to_string(),
                "exclusiveGroup": r.exclusive_group,
                "hierarchy": h.name,
            }));
        }
    }
    for f in &cdl.fact_relationships {
        let attr = |ps: &[crate::model::Property]| -> Vec<Json> {
            ps.iter()
                .map(|p| json!({ "name": p.name, "type": p.data_type }))
                .collect()
        };
        nodes.push(json!({
            "id": format!("factRelationship:{}", f.name),
            "kind": "factRelationship",
            "label": f.name,
            "measures": attr(&f.measures),
            "properties": attr(&f.properties),
        }));
        for r in &f.roles {
            edges.push(json!({
                "kind": "role",
                "source": format!("factRelationship:{}", f.name),
                "target": format!("dimension:{}", r.dimension),
                "label": r.name,
            }));
        }
    }
    for (kind, tables) in [("fact", &sdl.fact_tables), ("dimension", &sdl.dimension_tables)] {
        for t in tables {
            let cols: Vec<Json> = t
                .columns
                .iter()
                .map(|c| json!({ "name": c.name, "type": c.data_type }))
                .collect();
            nodes.push(json!({
                "id": table_id(&t.name),
                "kind": "table",
                "label": t.name,
                "tableKind": kind,
                "columns": cols,
                "primaryKey": t.primary_key,
            }));
            for fk in &t.foreign_keys {
                edges.push(json!({
                    "kind": "foreignKey",
                    "source": table_id(&t.name),
                    "target": table_id(&fk.table),
                    "label": fk.to_string(),
                }));
            }
        }
    }
    for f in &mdl.fragments {
        let source = match f.kind {
            FragmentKind::Level => level_id(&f.entity),
            FragmentKind::FactRelationship => format!("factRelationship:{}", f.entity),
        };
        let label = f
            .conditions
            .iter()
            .map(|c| c.label())
            .collect::<Vec<_>>()
            .join(" \u{2227} ");
        let pairs: Vec<Json> = f
            .property_mappings
            .iter()
            .map(|m| json!({ "property": m.property, "column": m.column }))
            .collect();
        edges.push(json!({
            "kind": "mapping",
            "source": source,
            "target": table_id(&f.table),
            "label": label,
            "fragment": f.name,
            "propertyMappings": pairs,
        }));
    }

    json!({
        "formatVersion": GRAPH_FORMAT_VERSION,
        "model": cdl.name,
        "store": sdl.name,
        "nodes": nodes,
        "edges": edges,
    })
}

/// Serialized form of [`graph_json`].
pub fn export_graph_json(cdl: &CdlModel, sdl: &SdlModel, mdl: &MdlModel) -> Vec<u8> {
    serde_json::to_vec_pretty(&graph_json(cdl, sdl, mdl)).expect("graph is plain JSON")
}
