use std::collections::BTreeSet;

use cim_core::compiler::{compile, level_view_name};
use cim_core::fixtures::olympic;
use cim_core::fixtures::random::random_instance;
use cim_core::model::{CdlModel, FragmentKind, MdlModel};
use cim_core::storage::{Plan, Projection, Row};
use cim_core::{Value, Warehouse, WarehouseOptions};
use proptest::prelude::*;

fn column(rows: &cim_core::Relation, name: &str) -> usize {
    rows.column_index(name).unwrap_or_else(|| panic!("no column {name}"))
}

fn day_projection(w: &Warehouse, level: &str) -> Vec<Row> {
    let plan = Plan::scan(level_view_name(level)).project(
        ["DayID", "Date", "DayOfWeek"]
            .iter()
            .map(|c| Projection::column(*c))
            .collect(),
    );
    let mut rows = w.views.evaluate(&plan, &w.store).unwrap().rows;
    rows.sort();
    rows
}

#[test]
fn weekend_and_weekday_partition_the_days() {
    let w = Warehouse::olympic(olympic::DEFAULT_SEED, 10_000);
    let weekend = w.views.evaluate_view(&level_view_name("Weekend"), &w.store).unwrap();
    let dow = column(&weekend, "DayOfWeek");
    assert!(!weekend.is_empty());
    for row in &weekend.rows {
        assert!(
            matches!(&row[dow], Value::String(s) if s == "Sat" || s == "Sun"),
            "{row:?}"
        );
    }

    let mut split = day_projection(&w, "Weekday");
    split.extend(day_projection(&w, "Weekend"));
    split.sort();
    assert_eq!(split, day_projection(&w, "Day"));
    assert_eq!(split.len(), 366);
}

#[test]
fn year_view_matches_nested_loop_join() {
    let w = Warehouse::olympic(olympic::DEFAULT_SEED, 10_000);
    let wm = w.store.table("WeekMonth").unwrap();
    let year = w.store.table("Year").unwrap();
    let (wm_year, wm_kind) = (column(wm, "YearID"), column(wm, "Kind"));
    let (y_id, y_number) = (column(year, "YearID"), column(year, "YearNumber"));
    let mut expected = BTreeSet::new();
    for a in &wm.rows {
        for b in &year.rows {
            if !a[wm_year].is_null() && a[wm_year] == b[y_id] {
                expected.insert(vec![b[y_id].clone(), b[y_number].clone(), a[wm_kind].clone()]);
            }
        }
    }

    let view = w.views.evaluate_view(&level_view_name("Year"), &w.store).unwrap();
    let idx: Vec<usize> = ["YearID", "YearNumber", "Granularity"]
        .iter()
        .map(|c| column(&view, c))
        .collect();
    let actual: Vec<Row> = view
        .rows
        .iter()
        .map(|r| idx.iter().map(|&i| r[i].clone()).collect())
        .collect();
    assert_eq!(actual.len(), expected.len(), "the view is duplicate free");
    assert_eq!(actual.into_iter().collect::<BTreeSet<_>>(), expected);
}

fn expected_view_count(cdl: &CdlModel, mdl: &MdlModel) -> usize {
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
    levels + pcs + facts
}

#[test]
fn olympic_view_count() {
    let (cdl, sdl, mdl) = (olympic::cdl(), olympic::sdl(), olympic::mdl());
    let c = compile(&cdl, &sdl, &mdl);
    assert!(!c.has_errors(), "{:?}", c.diagnostics);
    assert_eq!(expected_view_count(&cdl, &mdl), 29);
    assert_eq!(c.views.len(), 29);
}

#[test]
fn materialized_and_virtual_views_agree() {
    let data = olympic::generate_data(5, 500);
    let build = |materialize| {
        Warehouse::from_dataset(
            olympic::cdl(),
            olympic::sdl(),
            olympic::mdl(),
            &data,
            WarehouseOptions { materialize },
        )
        .unwrap()
    };
    let (a, b) = (build(false), build(true));
    for v in a.views.iter() {
        assert_eq!(
            a.views.evaluate_view(&v.name, &a.store).unwrap().sorted(),
            b.views.evaluate_view(&v.name, &b.store).unwrap().sorted(),
            "{}",
            v.name
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn view_count_follows_the_mapping(seed in 0u64..10_000, drop in prop::collection::vec(any::<bool>(), 16)) {
        let r = random_instance(seed);
        let bottoms: BTreeSet<&str> = r.cdl.dimensions.iter().map(|d| d.bottom_level.as_str()).collect();
        let mut mdl = r.mdl.clone();
        let mut i = 0;
        mdl.fragments.retain(|f| {
            i += 1;
            !(f.kind == FragmentKind::Level && !bottoms.contains(f.entity.as_str()) && drop[(i - 1) % drop.len()])
        });
        let c = compile(&r.cdl, &r.sdl, &mdl);
        prop_assert!(c.diagnostics.iter().filter(|d| d.is_error()).all(|d| d.code == "unmapped-level"), "{:?}", c.diagnostics);
        prop_assert_eq!(c.views.len(), expected_view_count(&r.cdl, &mdl));
    }

    #[test]
    fn split_levels_partition_their_table(seed in 0u64..10_000) {
        let r = random_instance(seed);
        let w = Warehouse::from_dataset(r.cdl.clone(), r.sdl.clone(), r.mdl.clone(), &r.data, WarehouseOptions::default()).unwrap();
        for d in 0..r.cdl.dimensions.len() {
            let (a, b) = (format!("D{d}A"), format!("D{d}B"));
            if r.cdl.level(&a).is_none() {
                continue;
            }
            let table = &r.data.tables[&format!("T{d}_1")];
            let mut both = Vec::new();
            for (level, kind) in [(&a, "a"), (&b, "b")] {
                let members = w.level_members(level).unwrap();
                let key = members.column_index(&format!("{level}Key")).unwrap();
                for m in &members.rows {
                    let row = table.rows.iter().find(|t| t[0] == m[key]).unwrap();
                    prop_assert_eq!(&row[2], &Value::String(kind.into()));
                    both.push(m[key].clone());
                }
            }
            both.sort();
            let all: Vec<Value> = table.rows.iter().map(|t| t[0].clone()).collect();
            prop_assert_eq!(both, all);
        }
    }
}
