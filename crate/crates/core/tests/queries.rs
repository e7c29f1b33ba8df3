use std::sync::OnceLock;

use cim_core::fixtures::olympic;
use cim_core::fixtures::random::{random_instance, RandomInstance};
use cim_core::query::{parse_cql, CompareOp, CqlQuery, Literal, QueryError, QueryOptions};
use cim_core::storage::AggregateFunction;
use cim_core::{Relation, Value, Warehouse, WarehouseOptions};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rust_decimal::Decimal;

fn olympic_small() -> &'static Warehouse {
    static W: OnceLock<Warehouse> = OnceLock::new();
    W.get_or_init(|| Warehouse::olympic(11, 1_500))
}

fn run(text: &str) -> Relation {
    olympic_small().query_text(text, QueryOptions::default()).unwrap()
}

fn single(text: &str) -> Value {
    let r = run(text);
    assert_eq!(r.len(), 1, "{text}");
    r.rows[0].last().unwrap().clone()
}

fn total_price() -> Decimal {
    let t = olympic_small().store.table("Attends").unwrap();
    let i = t.column_index("TicketPrice").unwrap();
    t.rows
        .iter()
        .map(|r| if let Value::Decimal(d) = r[i] { d } else { Decimal::ZERO })
        .sum()
}

fn column_sum(r: &Relation) -> Decimal {
    r.rows
        .iter()
        .map(|row| match row.last().unwrap() {
            Value::Decimal(d) => *d,
            Value::Integer(i) => Decimal::from(*i),
            _ => Decimal::ZERO,
        })
        .sum()
}

#[test]
fn reference_queries_match_the_oracle() {
    let w = olympic_small();
    let oracle = w.oracle();
    for text in olympic::REFERENCE_QUERIES {
        let q = parse_cql(text).unwrap();
        assert_eq!(
            w.query(&q, QueryOptions::default()),
            oracle.execute(&q, QueryOptions::default()),
            "{text}"
        );
    }
}

#[test]
fn global_aggregates_match_the_base_table() {
    assert_eq!(single("AGGREGATE count() FROM Attends"), Value::Integer(1_500));
    assert_eq!(
        single("AGGREGATE sum(TicketPrice) FROM Attends"),
        Value::Decimal(total_price())
    );
}

#[test]
fn every_fact_reaches_exactly_one_year() {
    let by_year = run("AGGREGATE sum(TicketPrice) FROM Attends ROLLUP Date TO Year");
    assert_eq!(column_sum(&by_year), total_price());
    let weekdays = run("AGGREGATE count() FROM Attends ROLLUP Date TO Weekday");
    let weekends = run("AGGREGATE count() FROM Attends ROLLUP Date TO Weekend");
    assert_eq!(column_sum(&weekdays) + column_sum(&weekends), Decimal::from(1_500));
}

#[test]
fn output_columns_are_named_after_levels() {
    let r = run(olympic::EXAMPLE_QUERY);
    assert_eq!(
        r.column_names(),
        ["Weekend.DayID", "Venue.VenueID", "Venue.name", "sum(TicketPrice)"]
    );
    let shared = run("AGGREGATE count() FROM Attends ROLLUP Location TO Country ROLLUP Attendee TO Country");
    assert_eq!(
        shared.column_names(),
        [
            "Country[Attendee].CountryCode",
            "Country[Attendee].CountryName",
            "Country[Venue].CountryCode",
            "Country[Venue].CountryName",
            "count()"
        ]
    );
}

#[test]
fn global_aggregates_over_no_facts() {
    let data = olympic::generate_data(1, 0);
    let w = Warehouse::from_dataset(
        olympic::cdl(),
        olympic::sdl(),
        olympic::mdl(),
        &data,
        WarehouseOptions::default(),
    )
    .unwrap();
    for (text, expected) in [
        ("AGGREGATE avg(TicketPrice) FROM Attends", Value::Null),
        ("AGGREGATE sum(TicketPrice) FROM Attends", Value::Null),
        ("AGGREGATE count() FROM Attends", Value::Integer(0)),
    ] {
        let r = w.query_text(text, QueryOptions::default()).unwrap();
        assert_eq!(r.rows, [vec![expected]], "{text}");
        assert_eq!(
            r,
            w.oracle()
                .execute(&parse_cql(text).unwrap(), QueryOptions::default())
                .unwrap()
        );
    }
    assert!(run(r#"AGGREGATE sum(TicketPrice) FROM Attends WHERE Venue.name = "BC Place""#).is_empty());
}

#[test]
fn errors_agree_with_the_oracle() {
    let w = olympic_small();
    let mut mdl = olympic::mdl();
    mdl.fragments.retain(|f| f.entity != "Sport");
    let data = olympic::generate_data(1, 100);
    let partial =
        Warehouse::from_dataset(olympic::cdl(), olympic::sdl(), mdl, &data, WarehouseOptions::default()).unwrap();
    let q = parse_cql("AGGREGATE count() FROM Attends ROLLUP Event TO Sport").unwrap();
    assert_eq!(
        partial.query(&q, QueryOptions::default()),
        Err(QueryError::UnmappedLevel("Sport".into()))
    );
    assert_eq!(
        partial.oracle().execute(&q, QueryOptions::default()),
        Err(QueryError::UnmappedLevel("Sport".into()))
    );

    let q = parse_cql("AGGREGATE sum(TicketPrice) FROM Attends ROLLUP Date TO Wekend").unwrap();
    match w.query(&q, QueryOptions::default()) {
        Err(QueryError::Unresolved { candidates, .. }) => assert!(candidates.contains(&"Weekend".to_string())),
        other => panic!("{other:?}"),
    }
}

#[test]
fn keeping_unmentioned_roles_adds_their_keys() {
    let w = olympic_small();
    let q = parse_cql("AGGREGATE count() FROM Attends ROLLUP Event TO Sport").unwrap();
    let opts = QueryOptions { keep_unmentioned: true };
    let r = w.query(&q, opts).unwrap();
    assert_eq!(
        r.column_names(),
        [
            "Sport.SportID",
            "Sport.SportName",
            "Venue.VenueID",
            "Day.DayID",
            "Attendee.AttendeeCode",
            "count()"
        ]
    );
    assert_eq!(r, w.oracle().execute(&q, opts).unwrap());
}

fn warehouse(r: &RandomInstance, materialize: bool) -> Warehouse {
    Warehouse::from_dataset(
        r.cdl.clone(),
        r.sdl.clone(),
        r.mdl.clone(),
        &r.data,
        WarehouseOptions { materialize },
    )
    .unwrap()
}

fn total_count(r: &Result<Relation, QueryError>) -> i64 {
    match r {
        Ok(rel) => rel
            .rows
            .iter()
            .map(|row| {
                if let Value::Integer(n) = row.last().unwrap() {
                    *n
                } else {
                    0
                }
            })
            .sum(),
        Err(_) => 0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rewriting_agrees_with_the_oracle(seed in any::<u64>(), qseed in any::<u64>(), keep in any::<bool>(), materialize in any::<bool>()) {
        let r = random_instance(seed);
        let w = warehouse(&r, materialize);
        let oracle = w.oracle();
        let opts = QueryOptions { keep_unmentioned: keep };
        for q in r.random_queries(qseed, 8) {
            prop_assert_eq!(w.query(&q, opts), oracle.execute(&q, opts), "{}", q);
        }
    }

    #[test]
    fn execution_is_deterministic(seed in any::<u64>(), qseed in any::<u64>()) {
        let r = random_instance(seed);
        let (a, b) = (warehouse(&r, false), warehouse(&r, true));
        for q in r.random_queries(qseed, 4) {
            let first = a.query(&q, QueryOptions::default());
            prop_assert_eq!(&first, &a.query(&q, QueryOptions::default()));
            prop_assert_eq!(&first, &b.query(&q, QueryOptions::default()));
        }
    }

    #[test]
    fn adding_a_condition_never_adds_facts(seed in any::<u64>(), qseed in any::<u64>()) {
        let r = random_instance(seed);
        let w = warehouse(&r, false);
        let mut rng = ChaCha8Rng::seed_from_u64(qseed);
        for _ in 0..4 {
            let narrow = r.random_query(&mut rng);
            let Some(last) = narrow.conditions.last().cloned() else { continue };
            let mut wide = narrow.clone();
            wide.conditions.pop();
            let count = |q: &CqlQuery| {
                let mut q = q.clone();
                q.aggregation.function = AggregateFunction::Count;
                q.aggregation.measure = None;
                w.query(&q, QueryOptions::default())
            };
            let (n, wd) = (count(&narrow), count(&wide));
            if wd.is_ok() {
                prop_assert!(total_count(&n) <= total_count(&wd), "{} adds facts ({:?})", last.level, last.operator);
            }
        }
    }
}

#[test]
fn literal_types_follow_the_property() {
    let q = CqlQuery::new("Attends", AggregateFunction::Count, None)
        .rollup("Date", "Day")
        .condition(
            "Day",
            "Date",
            CompareOp::In,
            vec![Literal::text("2010-02-13"), Literal::text("2010-02-14")],
        );
    let r = olympic_small().query(&q, QueryOptions::default()).unwrap();
    assert_eq!(r.len(), 2);
}
