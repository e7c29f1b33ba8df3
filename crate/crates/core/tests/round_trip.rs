use std::time::{Duration, Instant};

use cim_core::fixtures::{olympic, random::random_instance};
use cim_core::model::{
    Cardinality, CdlModel, Column, Condition, ConditionOp, Dimension, FactRelationship, ForeignKey, FragmentKind,
    Hierarchy, Level, MappingFragment, MdlModel, ParentChildRel, Property, PropertyMapping, Role, SdlModel, Table,
};
use cim_core::xml::{parse_cdl, parse_mdl, parse_sdl, serialize_cdl, serialize_mdl, serialize_sdl, ParseMode};
use cim_core::DataType;
use proptest::prelude::*;

fn round_trip(cdl: &CdlModel, sdl: &SdlModel, mdl: &MdlModel) {
    assert_eq!(&parse_cdl(&serialize_cdl(cdl), ParseMode::Strict).unwrap(), cdl);
    assert_eq!(&parse_sdl(&serialize_sdl(sdl), ParseMode::Strict).unwrap(), sdl);
    assert_eq!(&parse_mdl(&serialize_mdl(mdl), ParseMode::Strict).unwrap(), mdl);
}

#[test]
fn olympic_models_round_trip() {
    round_trip(&olympic::cdl(), &olympic::sdl(), &olympic::mdl());
}

#[test]
fn serialization_is_a_fixed_point() {
    let once = serialize_cdl(&olympic::cdl());
    let twice = serialize_cdl(&parse_cdl(&once, ParseMode::Strict).unwrap());
    assert_eq!(once, twice);
}

#[test]
fn two_hundred_random_instances_round_trip_quickly() {
    let start = Instant::now();
    for seed in 0..200 {
        let r = random_instance(seed);
        round_trip(&r.cdl, &r.sdl, &r.mdl);
    }
    assert!(start.elapsed() < Duration::from_secs(10), "{:?}", start.elapsed());
}

fn name() -> impl Strategy<Value = String> {
    "[A-Za-z][A-Za-z0-9_]{0,8}"
}

// Text that needs escaping in attributes and element content.
fn text() -> impl Strategy<Value = String> {
    "[ -~éü€]{0,12}"
}

fn data_type() -> impl Strategy<Value = DataType> {
    prop::sample::select(DataType::ALL.to_vec())
}

fn cardinality() -> impl Strategy<Value = Cardinality> {
    prop::sample::select(vec![
        Cardinality::ONE,
        Cardinality::OPTIONAL,
        Cardinality::ONE_OR_MORE,
        Cardinality::ANY,
    ])
}

fn level() -> impl Strategy<Value = Level> {
    (name(), prop::collection::vec((name(), data_type()), 1..5), 1usize..3).prop_map(|(n, props, k)| {
        let key = props.iter().take(k).map(|(p, _)| p.clone()).collect();
        Level {
            name: n,
            properties: props.into_iter().map(|(p, t)| Property::new(p, t)).collect(),
            key,
        }
    })
}

fn relationship() -> impl Strategy<Value = ParentChildRel> {
    (name(), name(), cardinality(), cardinality(), prop::option::of(name())).prop_map(|(c, p, cc, pc, g)| {
        let r = ParentChildRel::new(&c, &p, cc, pc);
        match g {
            Some(g) => r.exclusive(&g),
            None => r,
        }
    })
}

fn cdl() -> impl Strategy<Value = CdlModel> {
    (
        name(),
        prop::collection::vec(level(), 0..5),
        prop::collection::vec((name(), name(), prop::collection::vec(name(), 0..3)), 0..3),
        prop::collection::vec((name(), prop::collection::vec(relationship(), 0..4)), 0..3),
        prop::collection::vec(
            (
                name(),
                prop::collection::vec((name(), name()), 0..4),
                prop::collection::vec((name(), data_type()), 0..3),
                prop::collection::vec((name(), data_type()), 0..3),
            ),
            0..2,
        ),
    )
        .prop_map(|(n, levels, dims, hs, facts)| CdlModel {
            name: n,
            levels,
            dimensions: dims
                .into_iter()
                .map(|(name, bottom_level, hierarchies)| Dimension {
                    name,
                    bottom_level,
                    hierarchies,
                })
                .collect(),
            hierarchies: hs
                .into_iter()
                .map(|(name, relationships)| Hierarchy { name, relationships })
                .collect(),
            fact_relationships: facts
                .into_iter()
                .map(|(name, roles, ms, ps)| FactRelationship {
                    name,
                    roles: roles
                        .into_iter()
                        .map(|(name, dimension)| Role { name, dimension })
                        .collect(),
                    measures: ms.into_iter().map(|(n, t)| Property::new(n, t)).collect(),
                    properties: ps.into_iter().map(|(n, t)| Property::new(n, t)).collect(),
                })
                .collect(),
        })
}

fn table() -> impl Strategy<Value = Table> {
    (
        name(),
        prop::collection::vec((name(), data_type()), 1..5),
        prop::collection::vec((name(), name(), name()), 0..3),
    )
        .prop_map(|(n, cols, fks)| Table {
            name: n,
            primary_key: vec![cols[0].0.clone()],
            columns: cols.into_iter().map(|(c, t)| Column::new(c, t)).collect(),
            foreign_keys: fks
                .into_iter()
                .map(|(c, t, tc)| ForeignKey {
                    columns: vec![c],
                    table: t,
                    target_columns: vec![tc],
                })
                .collect(),
        })
}

fn sdl() -> impl Strategy<Value = SdlModel> {
    (
        name(),
        prop::collection::vec(table(), 0..3),
        prop::collection::vec(table(), 0..4),
    )
        .prop_map(|(name, fact_tables, dimension_tables)| SdlModel {
            name,
            fact_tables,
            dimension_tables,
        })
}

fn fragment() -> impl Strategy<Value = MappingFragment> {
    (
        prop::option::of(name()),
        any::<bool>(),
        name(),
        name(),
        prop::collection::vec((name(), name()), 1..4),
        prop::collection::vec((name(), any::<bool>(), prop::collection::vec(text(), 1..4)), 0..3),
    )
        .prop_map(|(n, is_level, entity, table, maps, conds)| MappingFragment {
            name: n,
            kind: if is_level {
                FragmentKind::Level
            } else {
                FragmentKind::FactRelationship
            },
            entity,
            table,
            property_mappings: maps
                .into_iter()
                .map(|(property, column)| PropertyMapping { property, column })
                .collect(),
            conditions: conds
                .into_iter()
                .map(|(column, eq, mut values)| {
                    let operator = if eq {
                        values.truncate(1);
                        ConditionOp::Equals
                    } else {
                        ConditionOp::In
                    };
                    Condition {
                        column,
                        operator,
                        values,
                    }
                })
                .collect(),
        })
}

fn mdl() -> impl Strategy<Value = MdlModel> {
    prop::collection::vec(fragment(), 0..6).prop_map(|fragments| MdlModel { fragments })
}

proptest! {
    #[test]
    fn arbitrary_models_round_trip(c in cdl(), s in sdl(), m in mdl()) {
        round_trip(&c, &s, &m);
    }

    #[test]
    fn random_instances_round_trip(seed in any::<u64>()) {
        let r = random_instance(seed);
        round_trip(&r.cdl, &r.sdl, &r.mdl);
    }
}
