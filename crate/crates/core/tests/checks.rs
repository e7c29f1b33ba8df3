use cim_core::compiler::{CardinalitySide, CheckReport};
use cim_core::fixtures::olympic::{self, Injection};
use cim_core::{Value, Warehouse, WarehouseOptions};

fn report(injection: Option<Injection>) -> CheckReport {
    let mut data = olympic::generate_data(olympic::DEFAULT_SEED, 2_000);
    let mut mdl = olympic::mdl();
    if let Some(i) = injection {
        i.apply(&mut data, &mut mdl);
    }
    let w = Warehouse::from_dataset(olympic::cdl(), olympic::sdl(), mdl, &data, WarehouseOptions::default()).unwrap();
    w.check().unwrap()
}

fn s(v: &str) -> Value {
    Value::String(v.into())
}

#[test]
fn clean_fixture_has_no_violations() {
    let r = report(None);
    assert_eq!(r.violation_count(), 0, "{r:?}");
    assert!(r.is_clean());
    assert_eq!(r.summarizability.len(), 5);
}

#[test]
fn double_parent_is_reported_for_vancouver() {
    let r = report(Some(Injection::DoubleParent));
    let v: Vec<_> = r
        .cardinality
        .iter()
        .filter(|v| v.relationship == "City->Country")
        .collect();
    assert_eq!(v.len(), 1, "{:?}", r.cardinality);
    assert_eq!(v[0].side, CardinalitySide::ParentsPerChild);
    assert_eq!(v[0].member, [s("Vancouver")]);
    assert_eq!(v[0].count, 2);
    let geo = r.summarizability.iter().find(|h| h.hierarchy == "Geography").unwrap();
    assert!(!geo.summarizable);
    assert_eq!(geo.non_strict[0].parents, [vec![s("CAN")], vec![s("USA")]]);
    assert!(r.foreign_keys.is_empty());
}

#[test]
fn dangling_foreign_key_names_the_value() {
    let r = report(Some(Injection::DanglingForeignKey));
    assert_eq!(r.foreign_keys.len(), 1, "{:?}", r.foreign_keys);
    let fk = &r.foreign_keys[0];
    assert_eq!(fk.table, "Venue");
    assert_eq!(fk.value, [Value::Integer(99)]);
}

#[test]
fn overlapping_exclusive_conditions_name_saturdays() {
    let r = report(Some(Injection::OverlappingExclusive));
    assert!(!r.exclusivity.is_empty());
    // 2009-09-05 was a Saturday
    let sat = r
        .exclusivity
        .iter()
        .find(|v| v.child_key == [Value::Integer(20090905)])
        .expect("a Saturday");
    assert_eq!(sat.group, "DayKind");
    assert_eq!(sat.relationships, ["Day->Weekday", "Day->Weekend"]);
    assert_eq!(r.exclusivity.len(), 52, "one per Saturday");
}

#[test]
fn missing_parent_violates_the_minimum() {
    let r = report(Some(Injection::MissingParent));
    let v: Vec<_> = r
        .cardinality
        .iter()
        .filter(|v| v.relationship == "Venue->City")
        .collect();
    assert_eq!(v.len(), 1, "{:?}", r.cardinality);
    assert_eq!(v[0].member, [Value::Integer(12)]);
    assert_eq!(v[0].count, 0);
    let geo = r.summarizability.iter().find(|h| h.hierarchy == "Geography").unwrap();
    assert_eq!(geo.non_covering[0].child, [Value::Integer(12)]);
    assert!(r.foreign_keys.is_empty(), "null references are not dangling");
}
