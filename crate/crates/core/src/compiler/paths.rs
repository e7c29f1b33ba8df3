//! Shortest undirected foreign-key paths between tables.

use std::collections::{HashMap, VecDeque};

use crate::model::SdlModel;

/// One equi-join hop from `from` to `to`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinStep {
    pub from: String,
    pub to: String,
    pub from_columns: Vec<String>,
    pub to_columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathError {
    NoPath,
    /// More than one path of the minimal length exists.
    Ambiguous {
        length: usize,
        count: usize,
    },
}

fn adjacency(sdl: &SdlModel) -> HashMap<&str, Vec<JoinStep>> {
    let mut adj: HashMap<&str, Vec<JoinStep>> = HashMap::new();
    for t in sdl.tables() {
        for fk in &t.foreign_keys {
            if fk.table == t.name {
                continue;
            }
            adj.entry(t.name.as_str()).or_default().push(JoinStep {
                from: t.name.clone(),
                to: fk.table.clone(),
                from_columns: fk.columns.clone(),
                to_columns: fk.target_columns.clone(),
            });
            if let Some(target) = sdl.table(&fk.table) {
                adj.entry(target.name.as_str()).or_default().push(JoinStep {
                    from: fk.table.clone(),
                    to: t.name.clone(),
                    from_columns: fk.target_columns.clone(),
                    to_columns: fk.columns.clone(),
                });
            }
        }
    }
    adj
}

/// The unique shortest path from `from` to `to`, ignoring FK direction.
/// Parallel foreign keys between the same two tables count as distinct
/// paths. A table reaches itself by the empty path.
pub fn shortest_path(sdl: &SdlModel, from: &str, to: &str) -> Result<Vec<JoinStep>, PathError> {
    if from == to {
        return Ok(Vec::new());
    }
    let adj = adjacency(sdl);
    let mut dist: HashMap<&str, usize> = HashMap::from([(from, 0)]);
    let mut count: HashMap<&str, usize> = HashMap::from([(from, 1)]);
    let mut pred: HashMap<&str, &JoinStep> = HashMap::new();
    let mut queue = VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        let du = dist[u];
        if dist.get(to).is_some_and(|&d| du >= d) {
            break;
        }
        for step in adj.get(u).into_iter().flatten() {
            let v = step.to.as_str();
            match dist.get(v) {
                None => {
                    dist.insert(v, du + 1);
                    count.insert(v, count[u]);
                    pred.insert(v, step);
                    queue.push_back(v);
                }
                Some(&dv) if dv == du + 1 => {
                    let c = count[u];
                    *count.get_mut(v).unwrap() += c;
                }
                Some(_) => {}
            }
        }
    }
    let Some(&length) = dist.get(to) else {
        return Err(PathError::NoPath);
    };
    if count[to] > 1 {
        return Err(PathError::Ambiguous {
            length,
            count: count[to],
        });
    }
    let mut path = Vec::with_capacity(length);
    let mut cur = to;
    while cur != from {
        let step = pred[cur];
        path.push(step.clone());
        cur = step.from.as_str();
    }
    path.reverse();
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Column, ForeignKey, Table};
    use crate::value::DataType;

    fn table(name: &str, fks: &[(&str, &str)]) -> Table {
        let mut columns = vec![Column::new("id", DataType::Integer)];
        let mut foreign_keys = Vec::new();
        for (col, target) in fks {
            columns.push(Column::new(*col, DataType::Integer));
            foreign_keys.push(ForeignKey {
                columns: vec![col.to_string()],
                table: target.to_string(),
                target_columns: vec!["id".into()],
            });
        }
        Table {
            name: name.into(),
            columns,
            primary_key: vec!["id".into()],
            foreign_keys,
        }
    }

    fn sdl(tables: Vec<Table>) -> SdlModel {
        SdlModel {
            name: "s".into(),
            fact_tables: vec![],
            dimension_tables: tables,
        }
    }

    #[test]
    fn follows_fks_in_both_directions() {
        let s = sdl(vec![
            table("A", &[("b", "B")]),
            table("B", &[]),
            table("C", &[("b", "B")]),
        ]);
        let p = shortest_path(&s, "A", "C").unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!((p[0].from.as_str(), p[0].to.as_str()), ("A", "B"));
        assert_eq!(p[0].from_columns, ["b"]);
        assert_eq!(p[1].to_columns, ["b"]);
    }

    #[test]
    fn equal_length_paths_are_ambiguous() {
        let s = sdl(vec![
            table("A", &[("b", "B"), ("c", "C")]),
            table("B", &[("d", "D")]),
            table("C", &[("d", "D")]),
            table("D", &[]),
        ]);
        assert_eq!(
            shortest_path(&s, "A", "D"),
            Err(PathError::Ambiguous { length: 2, count: 2 })
        );
    }

    #[test]
    fn parallel_fks_are_ambiguous() {
        let s = sdl(vec![table("A", &[("x", "B"), ("y", "B")]), table("B", &[])]);
        assert!(matches!(
            shortest_path(&s, "A", "B"),
            Err(PathError::Ambiguous { length: 1, .. })
        ));
    }

    #[test]
    fn shorter_path_wins_over_longer() {
        let s = sdl(vec![
            table("A", &[("b", "B"), ("d", "D")]),
            table("B", &[("c", "C")]),
            table("C", &[("d", "D")]),
            table("D", &[]),
        ]);
        assert_eq!(shortest_path(&s, "A", "D").unwrap().len(), 1);
    }

    #[test]
    fn disconnected_tables_have_no_path() {
        let s = sdl(vec![table("A", &[]), table("B", &[])]);
        assert_eq!(shortest_path(&s, "A", "B"), Err(PathError::NoPath));
        assert!(shortest_path(&s, "A", "A").unwrap().is_empty());
    }
}
