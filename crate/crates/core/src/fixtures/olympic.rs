//! The Winter Olympics reference model: venues, a calendar whose days split
//! into weekdays and weekends and roll up through weeks (2009) or months
//! (2010), events by discipline and gender, and attendees by nationality.

use std::collections::HashSet;

use chrono::{Datelike, Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rust_decimal::Decimal;

use super::Dataset;
use crate::model::{CdlModel, MdlModel, SdlModel};
use crate::storage::{Relation, Row};
use crate::value::Value;
use crate::xml::{parse_cdl, parse_mdl, parse_sdl, ParseMode};

pub const CDL_XML: &str = include_str!("../../fixtures/olympic/cdl.xml");
pub const SDL_XML: &str = include_str!("../../fixtures/olympic/sdl.xml");
pub const MDL_XML: &str = include_str!("../../fixtures/olympic/mdl.xml");
pub const MANIFEST: &str = include_str!("../../fixtures/olympic/cim.toml");

pub const DEFAULT_SEED: u64 = 2010;
pub const DEFAULT_SCALE: usize = 10_000;

/// The query used throughout the documentation.
pub const EXAMPLE_QUERY: &str =
    r#"AGGREGATE sum(TicketPrice) FROM Attends ROLLUP Date TO Weekend WHERE Venue.name = "Whistler Olympic Park""#;

/// Hand-written queries over every aggregation function and every branch of
/// the hierarchies, including the week/month split of the calendar.
pub const REFERENCE_QUERIES: &[&str] = &[
    EXAMPLE_QUERY,
    "AGGREGATE sum(TicketPrice) FROM Attends",
    "AGGREGATE count() FROM Attends",
    "AGGREGATE sum(TicketPrice) FROM Attends ROLLUP Date TO Weekday",
    "AGGREGATE count() FROM Attends ROLLUP Date TO Week",
    "AGGREGATE count() FROM Attends ROLLUP Date TO Month",
    "AGGREGATE sum(TicketPrice) FROM Attends ROLLUP Date TO Year",
    r#"AGGREGATE min(TicketPrice) FROM Attends ROLLUP Date TO Year WHERE Year.Granularity = "M""#,
    r#"AGGREGATE count() FROM Attends ROLLUP Date TO Month WHERE Month.MonthName = "February""#,
    "AGGREGATE sum(TicketPrice) FROM Attends ROLLUP Date TO Week WHERE Week.WeekNumber > 50",
    r#"AGGREGATE max(TicketPrice) FROM Attends ROLLUP Date TO Day WHERE Day.Date > "2010-02-10" AND Day.Date < "2010-02-14""#,
    "AGGREGATE avg(TicketPrice) FROM Attends ROLLUP Event TO Sport",
    "AGGREGATE min(TicketPrice) FROM Attends ROLLUP Event TO Discipline",
    "AGGREGATE max(TicketPrice) FROM Attends ROLLUP Event TO Gender",
    r#"AGGREGATE count() FROM Attends ROLLUP Event TO Gender WHERE Gender.Gender = "Mixed""#,
    "AGGREGATE count(TicketPrice) FROM Attends ROLLUP Location TO Country",
    r#"AGGREGATE sum(TicketPrice) FROM Attends ROLLUP Location TO City WHERE City.CityName = "Whistler""#,
    "AGGREGATE sum(TicketPrice) FROM Attends ROLLUP Attendee TO Country",
    r#"AGGREGATE avg(TicketPrice) FROM Attends ROLLUP Attendee TO Country WHERE Country.CountryCode IN ("CAN", "USA")"#,
    "AGGREGATE count() FROM Attends ROLLUP Location TO Country ROLLUP Attendee TO Country",
    r#"AGGREGATE count() FROM Attends WHERE Venue.name = "BC Place""#,
    r#"AGGREGATE sum(TicketPrice) FROM Attends ROLLUP Location TO Venue WHERE Event.EventName = "Men's Downhill""#,
    r#"AGGREGATE avg(TicketPrice) FROM Attends ROLLUP Date TO Weekend ROLLUP Event TO Sport WHERE Sport.SportName IN ("Skiing", "Biathlon")"#,
    "AGGREGATE sum(TicketPrice) FROM Attends ROLLUP Date TO Weekday ROLLUP Location TO City",
    "AGGREGATE max(TicketPrice) FROM Attends ROLLUP Date TO Week ROLLUP Event TO Discipline ROLLUP Location TO Country ROLLUP Attendee TO Country",
];

pub fn cdl() -> CdlModel {
    parse_cdl(CDL_XML.as_bytes(), ParseMode::Strict).expect("bundled CDL parses")
}

pub fn sdl() -> SdlModel {
    parse_sdl(SDL_XML.as_bytes(), ParseMode::Strict).expect("bundled SDL parses")
}

pub fn mdl() -> MdlModel {
    parse_mdl(MDL_XML.as_bytes(), ParseMode::Strict).expect("bundled MDL parses")
}

const COUNTRIES: &[(&str, &str)] = &[
    ("CAN", "Canada"),
    ("USA", "United States"),
    ("NOR", "Norway"),
    ("GER", "Germany"),
    ("AUT", "Austria"),
    ("SWE", "Sweden"),
    ("FIN", "Finland"),
    ("RUS", "Russia"),
    ("SUI", "Switzerland"),
    ("FRA", "France"),
    ("ITA", "Italy"),
    ("JPN", "Japan"),
];

const CITIES: &[(i64, &str, &str)] = &[
    (1, "Vancouver", "CAN"),
    (2, "Whistler", "CAN"),
    (3, "Richmond", "CAN"),
    (4, "West Vancouver", "CAN"),
    (5, "Seattle", "USA"),
    (6, "Oslo", "NOR"),
    (7, "Munich", "GER"),
    (8, "Innsbruck", "AUT"),
    (9, "Stockholm", "SWE"),
    (10, "Lahti", "FIN"),
    (11, "Sochi", "RUS"),
    (12, "Zurich", "SUI"),
    (13, "Chamonix", "FRA"),
    (14, "Turin", "ITA"),
    (15, "Nagano", "JPN"),
];

const VENUES: &[(i64, &str, i64)] = &[
    (1, "Canada Hockey Place", 1),
    (2, "Pacific Coliseum", 1),
    (3, "UBC Thunderbird Arena", 1),
    (4, "Vancouver Olympic Centre", 1),
    (5, "Richmond Olympic Oval", 3),
    (6, "Cypress Mountain", 4),
    (7, "Whistler Olympic Park", 2),
    (8, "Whistler Creekside", 2),
    (9, "Whistler Sliding Centre", 2),
    (10, "BC Place", 1),
];

const SPORTS: &[(i64, &str, i64)] = &[
    (1, "Skiing", 60),
    (2, "Biathlon", 50),
    (3, "Skating", 120),
    (4, "Ice Hockey", 150),
    (5, "Bobsleigh", 70),
    (6, "Luge", 55),
    (7, "Curling", 45),
];

// (id, name, sport, venues, events as (event, genders))
type DisciplineSpec = (
    i64,
    &'static str,
    i64,
    &'static [i64],
    &'static [(&'static str, &'static [&'static str])],
);

const MW: &[&str] = &["Men", "Women"];
const M: &[&str] = &["Men"];
const W: &[&str] = &["Women"];
const X: &[&str] = &["Mixed"];

const DISCIPLINES: &[DisciplineSpec] = &[
    (
        1,
        "Alpine Skiing",
        1,
        &[8],
        &[
            ("Downhill", MW),
            ("Super-G", MW),
            ("Giant Slalom", MW),
            ("Slalom", MW),
            ("Super Combined", MW),
        ],
    ),
    (
        2,
        "Cross-Country Skiing",
        1,
        &[7],
        &[
            ("Sprint", MW),
            ("Team Sprint", MW),
            ("Pursuit", MW),
            ("Relay", MW),
            ("Mass Start", MW),
        ],
    ),
    (
        3,
        "Ski Jumping",
        1,
        &[7],
        &[("Normal Hill", M), ("Large Hill", M), ("Team Large Hill", M)],
    ),
    (
        4,
        "Nordic Combined",
        1,
        &[7],
        &[("Normal Hill 10 km", M), ("Large Hill 10 km", M), ("Team", M)],
    ),
    (
        5,
        "Freestyle Skiing",
        1,
        &[6],
        &[("Moguls", MW), ("Aerials", MW), ("Ski Cross", MW)],
    ),
    (
        6,
        "Snowboard",
        1,
        &[6],
        &[("Halfpipe", MW), ("Parallel Giant Slalom", MW), ("Snowboard Cross", MW)],
    ),
    (
        7,
        "Biathlon",
        2,
        &[7],
        &[
            ("Sprint", MW),
            ("Pursuit", MW),
            ("Individual", MW),
            ("Mass Start", MW),
            ("Relay", MW),
        ],
    ),
    (
        8,
        "Figure Skating",
        3,
        &[2],
        &[("Singles", MW), ("Pairs", X), ("Ice Dance", X)],
    ),
    (
        9,
        "Speed Skating",
        3,
        &[5],
        &[("500 m", MW), ("1000 m", MW), ("1500 m", MW), ("Team Pursuit", MW)],
    ),
    (
        10,
        "Short Track",
        3,
        &[2],
        &[("500 m", MW), ("1000 m", MW), ("1500 m", MW), ("Relay", MW)],
    ),
    (11, "Ice Hockey", 4, &[1, 3], &[("Tournament", MW)]),
    (
        12,
        "Bobsleigh",
        5,
        &[9],
        &[("Two-man", M), ("Four-man", M), ("Two-woman", W)],
    ),
    (13, "Skeleton", 5, &[9], &[("Individual", MW)]),
    (14, "Luge", 6, &[9], &[("Singles", MW), ("Doubles", M)]),
    (15, "Curling", 7, &[4], &[("Tournament", MW)]),
];

const FIRST_NAMES: &[&str] = &[
    "Alex", "Sam", "Jordan", "Taylor", "Morgan", "Casey", "Robin", "Jamie", "Kim", "Lee", "Noor", "Ari", "Sasha",
    "Mika", "Elliot", "Quinn",
];
const LAST_NAMES: &[&str] = &[
    "Tremblay",
    "Nguyen",
    "Smith",
    "Larsen",
    "Müller",
    "Huber",
    "Lindqvist",
    "Virtanen",
    "Ivanov",
    "Keller",
    "Martin",
    "Rossi",
    "Sato",
    "Wong",
    "Singh",
    "Brown",
];

const FIRST_DAY: (i32, u32, u32) = (2009, 9, 1);
const DAY_COUNT: i64 = 366;
const GAMES: ((i32, u32, u32), (i32, u32, u32)) = ((2010, 2, 12), (2010, 2, 28));

fn date(ymd: (i32, u32, u32)) -> NaiveDate {
    NaiveDate::from_ymd_opt(ymd.0, ymd.1, ymd.2).expect("valid calendar date")
}

fn day_id(d: NaiveDate) -> i64 {
    i64::from(d.year()) * 10_000 + i64::from(d.month()) * 100 + i64::from(d.day())
}

fn weekday_abbrev(d: NaiveDate) -> &'static str {
    ["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"][d.weekday().num_days_from_monday() as usize]
}

const MONTH_NAMES: [&str; 12] = [
    "January",
    "February",
    "March",
    "April",
    "May",
    "June",
    "July",
    "August",
    "September",
    "October",
    "November",
    "December",
];

/// Days of 2009 belong to ISO weeks, days of 2010 to calendar months.
fn week_month_of(d: NaiveDate) -> (i64, &'static str, i64, String, i64) {
    if d.year() == 2009 {
        let w = i64::from(d.iso_week().week());
        (200_900 + w, "W", w, format!("2009-W{w:02}"), 1)
    } else {
        let m = i64::from(d.month());
        (201_000 + m, "M", m, MONTH_NAMES[d.month0() as usize].to_owned(), 2)
    }
}

fn relation(sdl: &SdlModel, table: &str, rows: Vec<Row>) -> Relation {
    Relation {
        columns: sdl.table(table).expect("fixture table").columns.clone(),
        rows,
    }
}

fn s(v: &str) -> Value {
    Value::String(v.to_owned())
}

/// Generates a referentially consistent instance with `scale` fact rows.
/// The same seed and scale always produce the same dataset.
pub fn generate_data(seed: u64, scale: usize) -> Dataset {
    let sdl = sdl();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ds = Dataset::default();
    let mut put = |name: &str, rows: Vec<Row>| {
        ds.tables.insert(name.to_owned(), relation(&sdl, name, rows));
    };

    put("Country", COUNTRIES.iter().map(|(c, n)| vec![s(c), s(n)]).collect());
    put(
        "City",
        CITIES
            .iter()
            .map(|(id, n, c)| vec![Value::Integer(*id), s(n), s(c)])
            .collect(),
    );
    put(
        "Venue",
        VENUES
            .iter()
            .map(|(id, n, c)| vec![Value::Integer(*id), s(n), Value::Integer(*c)])
            .collect(),
    );
    put(
        "Year",
        vec![
            vec![Value::Integer(1), Value::Integer(2009)],
            vec![Value::Integer(2), Value::Integer(2010)],
        ],
    );

    let first = date(FIRST_DAY);
    let days: Vec<NaiveDate> = (0..DAY_COUNT).map(|i| first + Duration::days(i)).collect();
    let mut week_months: Vec<Row> = Vec::new();
    let mut seen_wm = HashSet::new();
    let mut day_rows = Vec::new();
    for &d in &days {
        let (id, kind, number, label, year) = week_month_of(d);
        if seen_wm.insert(id) {
            week_months.push(vec![
                Value::Integer(id),
                s(kind),
                Value::Integer(number),
                Value::String(label),
                Value::Integer(year),
            ]);
        }
        day_rows.push(vec![
            Value::Integer(day_id(d)),
            Value::Date(d),
            s(weekday_abbrev(d)),
            Value::Integer(id),
        ]);
    }
    put("WeekMonth", week_months);
    put("Day", day_rows);

    put(
        "Sport",
        SPORTS
            .iter()
            .map(|(id, n, _)| vec![Value::Integer(*id), s(n)])
            .collect(),
    );
    put(
        "Discipline",
        DISCIPLINES
            .iter()
            .map(|(id, n, sport, _, _)| vec![Value::Integer(*id), s(n), Value::Integer(*sport)])
            .collect(),
    );
    // (event id, discipline index)
    let mut events: Vec<(i64, usize)> = Vec::new();
    let mut event_rows = Vec::new();
    for (di, (did, _, _, _, evs)) in DISCIPLINES.iter().enumerate() {
        for (name, genders) in *evs {
            for g in *genders {
                let id = events.len() as i64 + 1;
                let label = match *g {
                    "Men" => format!("Men's {name}"),
                    "Women" => format!("Women's {name}"),
                    _ => name.to_string(),
                };
                event_rows.push(vec![
                    Value::Integer(id),
                    Value::String(label),
                    s(g),
                    Value::Integer(*did),
                ]);
                events.push((id, di));
            }
        }
    }
    put("Event", event_rows);

    let attendees = (scale / 8).max(20) as i64;
    let mut attendee_rows = Vec::new();
    for sk in 1..=attendees {
        let name = format!(
            "{} {}",
            FIRST_NAMES.choose(&mut rng).unwrap(),
            LAST_NAMES.choose(&mut rng).unwrap()
        );
        let roll: f64 = rng.gen();
        let country = if roll < 0.6 {
            "CAN"
        } else if roll < 0.75 {
            "USA"
        } else {
            COUNTRIES[rng.gen_range(2..COUNTRIES.len())].0
        };
        attendee_rows.push(vec![
            Value::Integer(sk),
            Value::String(format!("ATT{sk:05}")),
            Value::String(name),
            s(country),
        ]);
    }
    put("Attendee", attendee_rows);

    let games: Vec<NaiveDate> = days
        .iter()
        .copied()
        .filter(|d| (date(GAMES.0)..=date(GAMES.1)).contains(d))
        .collect();
    let capacity = events.len() * days.len() * attendees as usize;
    let target = scale.min(capacity);
    let mut seen = HashSet::with_capacity(target);
    let mut facts = Vec::with_capacity(target);
    while facts.len() < target {
        let (event, di) = events[rng.gen_range(0..events.len())];
        let (_, _, sport, venues, _) = DISCIPLINES[di];
        let venue = *venues.choose(&mut rng).unwrap();
        let day = if rng.gen_bool(0.85) {
            *games.choose(&mut rng).unwrap()
        } else {
            *days.choose(&mut rng).unwrap()
        };
        let attendee = rng.gen_range(1..=attendees);
        if !seen.insert((venue, day, event, attendee)) {
            continue;
        }
        let base = SPORTS.iter().find(|sp| sp.0 == sport).unwrap().2;
        let price = Decimal::new(base * 100 + rng.gen_range(0..=40) * 250, 2);
        let channel = ["online", "box office", "partner"][rng.gen_range(0..3)];
        facts.push(vec![
            Value::Integer(venue),
            Value::Integer(day_id(day)),
            Value::Integer(event),
            Value::Integer(attendee),
            Value::Decimal(price),
            s(channel),
        ]);
    }
    put("Attends", facts);
    ds
}

/// A constraint violation planted into the reference instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Injection {
    /// A second city named Vancouver, in the USA.
    DoubleParent,
    /// A venue whose city does not exist.
    DanglingForeignKey,
    /// Saturdays satisfy both the weekday and the weekend mapping.
    OverlappingExclusive,
    /// A venue without a city.
    MissingParent,
}

impl Injection {
    pub const ALL: [Injection; 4] = [
        Injection::DoubleParent,
        Injection::DanglingForeignKey,
        Injection::OverlappingExclusive,
        Injection::MissingParent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Injection::DoubleParent => "double parent",
            Injection::DanglingForeignKey => "dangling foreign key",
            Injection::OverlappingExclusive => "overlapping exclusive conditions",
            Injection::MissingParent => "zero parents under min=1",
        }
    }

    pub fn apply(self, data: &mut Dataset, mdl: &mut MdlModel) {
        let mut push = |table: &str, row: Row| data.tables.get_mut(table).expect("fixture table").rows.push(row);
        match self {
            Injection::DoubleParent => push("City", vec![Value::Integer(16), s("Vancouver"), s("USA")]),
            Injection::DanglingForeignKey => {
                push("Venue", vec![Value::Integer(11), s("Lost Arena"), Value::Integer(99)])
            }
            Injection::MissingParent => push("Venue", vec![Value::Integer(12), s("Unsited Hall"), Value::Null]),
            Injection::OverlappingExclusive => {
                let s1 = mdl
                    .fragments
                    .iter_mut()
                    .find(|f| f.name.as_deref() == Some("S1"))
                    .expect("weekday fragment");
                s1.conditions[0].values.push("Sat".into());
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_models_parse() {
        let (c, s, m) = (cdl(), sdl(), mdl());
        assert_eq!(c.levels.len(), 14);
        assert_eq!(c.relationships().count(), 14);
        assert_eq!(s.tables().count(), 11);
        assert_eq!(m.fragments.len(), 16);
    }

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(generate_data(7, 300), generate_data(7, 300));
        assert_ne!(generate_data(7, 300), generate_data(8, 300));
    }

    #[test]
    fn calendar_covers_one_year_of_days() {
        let ds = generate_data(1, 10);
        let days = &ds.tables["Day"];
        assert_eq!(days.len(), 366);
        assert_eq!(days.rows[0][0], Value::Integer(20090901));
        assert_eq!(days.rows[365][0], Value::Integer(20100901));
        let wm = &ds.tables["WeekMonth"];
        assert!(wm.rows.iter().any(|r| r[1] == s("W")) && wm.rows.iter().any(|r| r[1] == s("M")));
    }

    #[test]
    fn fact_count_matches_scale() {
        assert_eq!(generate_data(3, 1234).tables["Attends"].len(), 1234);
    }
}
