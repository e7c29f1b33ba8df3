//! The acceptance suite. Each criterion prints one PASS or FAIL line; run
//! with `cargo test -p cim-cli --test acceptance -- --nocapture` to see them.

mod common;

use std::collections::BTreeSet;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use cim_core::compiler::{compile, level_view_name, CardinalitySide, CheckReport};
use cim_core::fixtures::olympic::{self, Injection};
use cim_core::fixtures::random::random_instance;
use cim_core::model::FragmentKind;
use cim_core::query::{parse_cql, QueryOptions};
use cim_core::storage::Row;
use cim_core::xml::{parse_cdl, parse_mdl, parse_sdl, serialize_cdl, serialize_mdl, serialize_sdl, ParseMode};
use cim_core::{Relation, Value, Warehouse, WarehouseOptions};

fn olympic_10k() -> Warehouse {
    Warehouse::olympic(olympic::DEFAULT_SEED, olympic::DEFAULT_SCALE)
}

fn column(r: &Relation, name: &str) -> usize {
    r.column_index(name).unwrap_or_else(|| panic!("no column {name}"))
}

fn project(r: &Relation, names: &[&str]) -> Vec<Row> {
    let idx: Vec<usize> = names.iter().map(|n| column(r, n)).collect();
    let mut rows: Vec<Row> = r
        .rows
        .iter()
        .map(|row| idx.iter().map(|&i| row[i].clone()).collect())
        .collect();
    rows.sort();
    rows
}

fn round_trip() -> String {
    let start = Instant::now();
    let mut models = vec![(olympic::cdl(), olympic::sdl(), olympic::mdl())];
    models.extend((0..200).map(|seed| {
        let r = random_instance(seed);
        (r.cdl, r.sdl, r.mdl)
    }));
    for (cdl, sdl, mdl) in &models {
        assert_eq!(&parse_cdl(&serialize_cdl(cdl), ParseMode::Strict).unwrap(), cdl);
        assert_eq!(&parse_sdl(&serialize_sdl(sdl), ParseMode::Strict).unwrap(), sdl);
        assert_eq!(&parse_mdl(&serialize_mdl(mdl), ParseMode::Strict).unwrap(), mdl);
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    format!("{} model triples in {elapsed:.2?}", models.len())
}

fn weekend_soundness() -> String {
    let w = olympic_10k();
    let weekend = w.views.evaluate_view(&level_view_name("Weekend"), &w.store).unwrap();
    let dow = column(&weekend, "DayOfWeek");
    for row in &weekend.rows {
        assert!(
            matches!(&row[dow], Value::String(s) if s == "Sat" || s == "Sun"),
            "{row:?}"
        );
    }
    let weekday = w.views.evaluate_view(&level_view_name("Weekday"), &w.store).unwrap();
    let mut split = project(&weekday, &["DayID", "Date", "DayOfWeek"]);
    split.extend(project(&weekend, &["DayID", "Date", "DayOfWeek"]));
    split.sort();
    let day = w.store.table("Day").unwrap();
    assert_eq!(split, project(day, &["DayID", "Date", "DayOfWeek"]));
    format!(
        "{} weekend + {} weekday rows = {} days",
        weekend.len(),
        weekday.len(),
        split.len()
    )
}

fn year_view() -> String {
    let w = olympic_10k();
    let wm = w.store.table("WeekMonth").unwrap();
    let year = w.store.table("Year").unwrap();
    let (fk, kind) = (column(wm, "YearID"), column(wm, "Kind"));
    let (id, number) = (column(year, "YearID"), column(year, "YearNumber"));
    let mut joined = BTreeSet::new();
    for a in &wm.rows {
        for b in &year.rows {
            if !a[fk].is_null() && a[fk] == b[id] {
                joined.insert(vec![b[id].clone(), b[number].clone(), a[kind].clone()]);
            }
        }
    }
    let view = w.views.evaluate_view(&level_view_name("Year"), &w.store).unwrap();
    let rows = project(&view, &["YearID", "YearNumber", "Granularity"]);
    assert_eq!(rows, joined.into_iter().collect::<Vec<_>>());
    format!("{} rows", rows.len())
}

fn differential() -> String {
    let start = Instant::now();
    let w = olympic_10k();
    let oracle = w.oracle();
    let options = QueryOptions::default();

    let example = parse_cql(olympic::EXAMPLE_QUERY).unwrap();
    let answer = w.query(&example, options).unwrap();
    assert!(!answer.is_empty());
    assert_eq!(Ok(answer), oracle.execute(&example, options), "example query");

    assert!(olympic::REFERENCE_QUERIES.len() >= 20);
    for text in olympic::REFERENCE_QUERIES {
        let q = parse_cql(text).unwrap();
        assert_eq!(w.query(&q, options), oracle.execute(&q, options), "{text}");
    }

    let (mut random, mut answered) = (0, 0);
    for seed in 0..50u64 {
        let r = random_instance(1_000 + seed);
        let rw = Warehouse::from_dataset(
            r.cdl.clone(),
            r.sdl.clone(),
            r.mdl.clone(),
            &r.data,
            WarehouseOptions::default(),
        )
        .unwrap();
        let ro = rw.oracle();
        for (i, q) in r.random_queries(seed, 10).into_iter().enumerate() {
            let opts = QueryOptions {
                keep_unmentioned: i % 3 == 0,
            };
            let actual = rw.query(&q, opts);
            assert_eq!(actual, ro.execute(&q, opts), "instance {seed}: {q}");
            random += 1;
            answered += usize::from(actual.is_ok());
        }
    }
    assert_eq!(random, 500);
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    format!(
        "example + {} reference + {random} random queries ({answered} answered) in {elapsed:.2?}",
        olympic::REFERENCE_QUERIES.len()
    )
}

fn injected(injection: Injection) -> CheckReport {
    let mut data = olympic::generate_data(olympic::DEFAULT_SEED, olympic::DEFAULT_SCALE);
    let mut mdl = olympic::mdl();
    injection.apply(&mut data, &mut mdl);
    let w = Warehouse::from_dataset(olympic::cdl(), olympic::sdl(), mdl, &data, WarehouseOptions::default()).unwrap();
    w.check().unwrap()
}

fn s(v: &str) -> Value {
    Value::String(v.into())
}

fn check_suite() -> String {
    let clean = olympic_10k().check().unwrap();
    assert_eq!(clean.violation_count(), 0, "{clean:?}");
    assert!(clean.is_clean());

    let r = injected(Injection::DoubleParent);
    let v: Vec<_> = r
        .cardinality
        .iter()
        .filter(|v| v.relationship == "City->Country")
        .collect();
    assert_eq!(v.len(), 1);
    assert_eq!(
        (v[0].side, &v[0].member, v[0].count),
        (CardinalitySide::ParentsPerChild, &vec![s("Vancouver")], 2)
    );
    let geo = r.summarizability.iter().find(|h| h.hierarchy == "Geography").unwrap();
    assert_eq!(geo.non_strict[0].parents, [vec![s("CAN")], vec![s("USA")]]);

    let r = injected(Injection::DanglingForeignKey);
    assert_eq!(r.foreign_keys.len(), 1);
    assert_eq!(
        (r.foreign_keys[0].table.as_str(), &r.foreign_keys[0].value),
        ("Venue", &vec![Value::Integer(99)])
    );

    let r = injected(Injection::OverlappingExclusive);
    let day = olympic_10k();
    let days = day.store.table("Day").unwrap();
    let (id, dow) = (column(days, "DayID"), column(days, "DayOfWeek"));
    let saturdays: BTreeSet<Vec<Value>> = days
        .rows
        .iter()
        .filter(|r| r[dow] == s("Sat"))
        .map(|r| vec![r[id].clone()])
        .collect();
    let flagged: BTreeSet<Vec<Value>> = r.exclusivity.iter().map(|v| v.child_key.clone()).collect();
    assert_eq!(flagged, saturdays);
    assert_eq!(r.exclusivity.len(), saturdays.len());
    assert!(r
        .exclusivity
        .iter()
        .all(|v| v.group == "DayKind" && v.relationships == ["Day->Weekday", "Day->Weekend"]));

    let r = injected(Injection::MissingParent);
    let v: Vec<_> = r
        .cardinality
        .iter()
        .filter(|v| v.relationship == "Venue->City")
        .collect();
    assert_eq!(v.len(), 1);
    assert_eq!((&v[0].member, v[0].count), (&vec![Value::Integer(12)], 0));

    format!(
        "4 injections detected ({} overlapping Saturdays); clean fixture has 0 violations",
        saturdays.len()
    )
}

fn view_count() -> String {
    let (cdl, sdl, mdl) = (olympic::cdl(), olympic::sdl(), olympic::mdl());
    let mapped = |kind, name: &str| mdl.fragments.iter().any(|f| f.kind == kind && f.entity == name);
    let levels = cdl
        .levels
        .iter()
        .filter(|l| mapped(FragmentKind::Level, &l.name))
        .count();
    let pcs = cdl
        .relationships()
        .filter(|r| mapped(FragmentKind::Level, &r.child) && mapped(FragmentKind::Level, &r.parent))
        .count();
    let facts = cdl
        .fact_relationships
        .iter()
        .filter(|f| mapped(FragmentKind::FactRelationship, &f.name))
        .count();
    let c = compile(&cdl, &sdl, &mdl);
    assert!(!c.has_errors());
    assert_eq!(c.views.len(), levels + pcs + facts);
    format!(
        "{} views = {levels} levels + {pcs} parent-child + {facts} facts",
        c.views.len()
    )
}

fn end_to_end_cli() -> String {
    let ws = common::fixture_dir();
    for cmd in [&["validate"][..], &["compile"], &["check"]] {
        let o = common::in_workspace(&ws, cmd.iter().copied());
        assert_eq!(o.code, 0, "{cmd:?}: {}{}", o.stdout, o.stderr);
    }
    let o = common::in_workspace(&ws, ["query", olympic::EXAMPLE_QUERY, "--format", "csv"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let golden = fs::read_to_string(ws.join("golden/example.csv")).unwrap();
    assert_eq!(o.stdout, golden);
    format!(
        "4 commands exit 0; example output matches the golden file ({} rows)",
        golden.lines().count() - 1
    )
}

#[test]
fn acceptance() {
    type Criterion = (&'static str, fn() -> String);
    let criteria: [Criterion; 7] = [
        ("round trip", round_trip),
        ("weekend and weekday views", weekend_soundness),
        ("multi-table Year view", year_view),
        ("differential query correctness", differential),
        ("check suite", check_suite),
        ("compilation coverage", view_count),
        ("end-to-end CLI", end_to_end_cli),
    ];
    let mut failed = Vec::new();
    for (i, (name, criterion)) in criteria.iter().enumerate() {
        match catch_unwind(AssertUnwindSafe(criterion)) {
            Ok(detail) => println!("PASS {}. {name}: {detail}", i + 1),
            Err(e) => {
                let message = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| (*s).to_owned()))
                    .unwrap_or_default();
                println!("FAIL {}. {name}: {message}", i + 1);
                failed.push(*name);
            }
        }
    }
    assert!(failed.is_empty(), "failed: {failed:?}");
}
