//! Plain-text rendering of check reports.

use std::fmt::Write;

use cim_core::compiler::{CardinalitySide, CheckReport};
use cim_core::Value;

fn key(values: &[Value]) -> String {
    let parts: Vec<String> = values
        .iter()
        .map(|v| if v.is_null() { "NULL".to_owned() } else { v.to_text() })
        .collect();
    if parts.len() == 1 {
        parts.into_iter().next().unwrap_or_default()
    } else {
        format!("({})", parts.join(", "))
    }
}

fn keys(values: &[Vec<Value>]) -> String {
    values.iter().map(|k| key(k)).collect::<Vec<_>>().join(", ")
}

pub fn render_check(report: &CheckReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "foreign keys: {} violation(s)", report.foreign_keys.len());
    for v in &report.foreign_keys {
        let _ = writeln!(out, "  {} {}: no target for {}", v.table, v.foreign_key, key(&v.value));
    }
    let _ = writeln!(out, "exclusivity: {} violation(s)", report.exclusivity.len());
    for v in &report.exclusivity {
        let _ = writeln!(
            out,
            "  group {}: {} {} appears in {}",
            v.group,
            v.child_level,
            key(&v.child_key),
            v.relationships.join(", ")
        );
    }
    let _ = writeln!(out, "cardinality: {} violation(s)", report.cardinality.len());
    for v in &report.cardinality {
        let what = match v.side {
            CardinalitySide::ParentsPerChild => "parent(s)",
            CardinalitySide::ChildrenPerParent => "child(ren)",
        };
        let _ = writeln!(
            out,
            "  {}: {} has {} {what}, expected {}",
            v.relationship,
            key(&v.member),
            v.count,
            v.bound
        );
    }
    let _ = writeln!(out, "summarizability:");
    for h in &report.summarizability {
        let verdict = if h.summarizable {
            "summarizable"
        } else {
            "not summarizable"
        };
        let _ = writeln!(out, "  {}: {verdict}", h.hierarchy);
        for w in &h.non_strict {
            let _ = writeln!(
                out,
                "    non-strict {}: {} -> {}",
                w.relationship,
                key(&w.child),
                keys(&w.parents)
            );
        }
        for w in &h.non_covering {
            let _ = writeln!(
                out,
                "    non-covering {}: {} has no parent",
                w.relationship,
                key(&w.child)
            );
        }
    }
    out
}
