//! Seeded synthetic input set: posts, name lists, block-group polygons and
//! attributes, keywords, a sentiment lexicon, labelled category texts and a
//! run config that ties them together.
//!
//! Twelve square block groups sit on a 4 x 3 grid. Each post's topic is drawn
//! from a multinomial logit in the author's demographics, the post sentiment
//! and the block-group attributes, so the fitted binary logits have real
//! signal to recover. Texts carry markup, links and emoji to exercise the
//! cleaning stage; a few records are deliberately malformed.

use std::fs;
use std::io;
use std::path::Path;

use chrono::{DateTime, Duration, SecondsFormat, TimeZone, Utc};
use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

pub const DEFAULT_SEED: u64 = 20200315;

pub const POSTS_FILE: &str = "posts.jsonl";
pub const GENDER_FILE: &str = "names_gender.csv";
pub const RACE_FILE: &str = "names_race.csv";
pub const POLYGONS_FILE: &str = "block_groups.geojson";
pub const ATTRIBUTES_FILE: &str = "attributes.csv";
pub const KEYWORDS_FILE: &str = "keywords.txt";
pub const LEXICON_FILE: &str = "lexicon.csv";
pub const LABELED_FILE: &str = "labeled_categories.csv";
pub const CONFIG_FILE: &str = "config.toml";

pub const FILES: [&str; 9] = [
    POSTS_FILE,
    GENDER_FILE,
    RACE_FILE,
    POLYGONS_FILE,
    ATTRIBUTES_FILE,
    KEYWORDS_FILE,
    LEXICON_FILE,
    LABELED_FILE,
    CONFIG_FILE,
];

const N_USERS: usize = 1200;
const N_POSTS: usize = 2000;
const N_GENDER_NAMES: usize = 600;
const N_RACE_NAMES_PER_LABEL: usize = 200;
const N_LABELED_PER_CATEGORY: usize = 100;

const LON0: f64 = -74.02;
const LAT0: f64 = 40.70;
const CELL: f64 = 0.01;
const GRID_COLS: usize = 4;
const GRID_ROWS: usize = 3;
const HOLE_GROUP: usize = 5;
const SPLIT_GROUP: usize = 11;

const FEMALE_SYLLABLES: [&str; 12] = [
    "la", "ma", "ri", "el", "li", "sa", "na", "bel", "ia", "ann", "lie", "ssa",
];
const FEMALE_ENDINGS: [&str; 4] = ["a", "ie", "elle", "ina"];
const MALE_SYLLABLES: [&str; 12] = [
    "jo", "tor", "bor", "ko", "dan", "rok", "to", "gor", "bru", "mot", "den", "rod",
];
const MALE_ENDINGS: [&str; 4] = ["o", "on", "k", "us"];

const RACE_LABELS: [&str; 4] = ["Asian", "Black", "Hispanic", "White"];
const RACE_SYLLABLES: [[&str; 12]; 4] = [
    [
        "wang", "chu", "yu", "zhang", "hong", "ming", "kwon", "ng", "huang", "yung", "chong", "hu",
    ],
    [
        "jab", "dow", "bak", "wes", "dub", "kaj", "bow", "jed", "wab", "sad", "bij", "dok",
    ],
    [
        "gar", "cia", "rez", "quez", "lop", "ez", "val", "dez", "cruz", "mo", "rales", "pez",
    ],
    [
        "smith", "ful", "ver", "ham", "thorp", "field", "mil", "ler", "pet", "ers", "hoff",
        "wright",
    ],
];
const RACE_SHARES: [f64; 4] = [0.15, 0.15, 0.15, 0.55];

const TRANSIT_WORDS: [&str; 5] = ["bus", "subway", "train", "transit", "metro"];
const CATEGORY_WORDS: [[&str; 16]; 4] = [
    [
        "station",
        "platform",
        "signal",
        "track",
        "elevator",
        "escalator",
        "shelter",
        "repair",
        "maintenance",
        "infrastructure",
        "rail",
        "tunnel",
        "bench",
        "stairs",
        "tracks",
        "upgrade",
    ],
    [
        "fare",
        "afford",
        "income",
        "poor",
        "neighborhood",
        "equity",
        "unfair",
        "expensive",
        "workers",
        "rent",
        "inequality",
        "cost",
        "wages",
        "disparity",
        "burden",
        "paycheck",
    ],
    [
        "wheelchair",
        "ramp",
        "accessible",
        "accessibility",
        "disabled",
        "stroller",
        "mobility",
        "reach",
        "walk",
        "distance",
        "blocked",
        "access",
        "elderly",
        "curb",
        "cane",
        "barrier",
    ],
    [
        "ride", "morning", "commute", "today", "weather", "driver", "people", "crowd", "music",
        "ticket", "podcast", "coffee", "seat", "window", "city", "route",
    ],
];
const OFF_TOPIC_WORDS: [&str; 12] = [
    "pizza", "movie", "weekend", "garden", "football", "recipe", "concert", "puppy", "birthday",
    "sunset", "painting", "beach",
];
const POSITIVE_WORDS: [(&str, i32); 10] = [
    ("great", 1),
    ("love", 2),
    ("clean", 1),
    ("fast", 1),
    ("happy", 2),
    ("smooth", 1),
    ("thanks", 1),
    ("excellent", 2),
    ("nice", 1),
    ("reliable", 1),
];
const NEGATIVE_WORDS: [(&str, i32); 10] = [
    ("terrible", -2),
    ("delayed", -1),
    ("dirty", -1),
    ("broken", -1),
    ("late", -1),
    ("awful", -2),
    ("hate", -2),
    ("slow", -1),
    ("crowded", -1),
    ("unsafe", -2),
];
const KEYWORDS: [&str; 20] = [
    "bus",
    "subway",
    "train",
    "transit",
    "metro",
    "station",
    "platform",
    "rail",
    "fare",
    "commute",
    "wheelchair",
    "accessible",
    "accessibility",
    "ramp",
    "elevator",
    "ride",
    "route",
    "driver",
    "ticket",
    "mta",
];
const DECORATIONS: [&str; 6] = ["🚌", "🚇", "😡", "🙂", "#nyc", "@mta"];
const BIOS: [&str; 6] = [
    "daily commuter",
    "coffee first | opinions my own",
    "urbanist, cyclist, reader",
    "nurse on night shift",
    "student 🎓",
    "",
];

/// Block-group design: unemployed, income, disadvantaged, agricultural loss,
/// building loss, energy burden, PM2.5, diesel and low-income flags, then the
/// traffic percentile. The indicator pattern keeps every model's area columns
/// linearly independent.
const GROUP_PATTERNS: [(&str, u32); 12] = [
    ("110000110", 78),
    ("101011111", 85),
    ("010100110", 62),
    ("110110010", 90),
    ("101101101", 71),
    ("010011110", 80),
    ("110001010", 95),
    ("100110111", 55),
    ("001001110", 88),
    ("111010100", 66),
    ("110101111", 74),
    ("010010010", 83),
];
const GROUP_WEIGHTS: [f64; 12] = [1.4, 1.0, 0.8, 1.2, 1.0, 1.1, 0.9, 1.3, 0.7, 1.0, 1.2, 0.8];

/// Multinomial-logit coefficients against the Others category, over
/// `[const, female, white, asian, neutral, negative, U, I, D, T, A, B, E, P, Di, L]`.
const TOPIC_COEFS: [[f64; 16]; 3] = [
    [
        -1.3, 0.8, -0.5, -0.2, 0.2, 0.0, 0.3, 0.5, -0.3, 0.0, -0.5, 0.0, 0.0, 0.6, 0.4, 0.0,
    ],
    [
        -1.3, 0.4, -0.8, 0.1, 0.5, 1.0, -0.5, 0.9, -0.4, 0.3, -0.3, -0.4, -0.1, 0.3, 0.7, 0.0,
    ],
    [
        -2.1, 0.7, 0.1, 0.5, 0.4, 0.8, -0.3, 0.3, -0.2, 0.8, -0.3, -0.8, -0.1, -0.1, 0.9, -0.3,
    ],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixtureSummary {
    pub posts: usize,
    pub users: usize,
    pub block_groups: usize,
    pub malformed: usize,
}

pub fn geoid_for(group: usize) -> String {
    format!("36061{:06}{}", 100 + group / 3, group % 3 + 1)
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

fn cell_origin(group: usize) -> (f64, f64) {
    let (i, j) = (group % GRID_COLS, group / GRID_COLS);
    (LON0 + i as f64 * CELL, LAT0 + j as f64 * CELL)
}

fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> serde_json::Value {
    let (x0, y0, x1, y1) = (round6(x0), round6(y0), round6(x1), round6(y1));
    json!([[x0, y0], [x1, y0], [x1, y1], [x0, y1], [x0, y0]])
}

fn hole_bounds(group: usize) -> (f64, f64, f64, f64) {
    let (x, y) = cell_origin(group);
    (x + 0.004, y + 0.004, x + 0.006, y + 0.006)
}

fn polygons_json() -> String {
    let features: Vec<serde_json::Value> = (0..GRID_COLS * GRID_ROWS)
        .map(|g| {
            let (x, y) = cell_origin(g);
            let geometry = if g == HOLE_GROUP {
                let (hx0, hy0, hx1, hy1) = hole_bounds(g);
                json!({"type": "Polygon", "coordinates": [rect(x, y, x + CELL, y + CELL), rect(hx0, hy0, hx1, hy1)]})
            } else if g == SPLIT_GROUP {
                let mid = x + CELL / 2.0;
                json!({"type": "MultiPolygon", "coordinates": [
                    [rect(x, y, mid, y + CELL)],
                    [rect(mid, y, x + CELL, y + CELL)],
                ]})
            } else {
                json!({"type": "Polygon", "coordinates": [rect(x, y, x + CELL, y + CELL)]})
            };
            json!({"type": "Feature", "properties": {"GEOID": geoid_for(g)}, "geometry": geometry})
        })
        .collect();
    let mut out =
        serde_json::to_string_pretty(&json!({"type": "FeatureCollection", "features": features}))
            .expect("static structure serializes");
    out.push('\n');
    out
}

struct GroupAttrs {
    flags: [bool; 9],
    traffic: f64,
}

fn group_attrs(group: usize) -> GroupAttrs {
    let (bits, traffic) = GROUP_PATTERNS[group];
    let mut flags = [false; 9];
    for (f, c) in flags.iter_mut().zip(bits.chars()) {
        *f = c == '1';
    }
    GroupAttrs {
        flags,
        traffic: f64::from(traffic),
    }
}

fn attributes_csv(rng: &mut ChaCha8Rng) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "geoid",
        "per_capita_income",
        "median_income",
        "percent_unemployed",
        "poverty_rate",
        "mean_travel_time",
        "hs_completion",
        "pm25_pctile",
        "diesel_pctile",
        "traffic_pctile",
        "agri_loss_pctile",
        "building_loss_pctile",
        "energy_burden_pctile",
        "disadvantaged",
        "low_income_nonstudent",
    ])
    .expect("in-memory write");
    for g in 0..GRID_COLS * GRID_ROWS {
        let a = group_attrs(g);
        let [u, i, d, agri, bld, energy, pm, diesel, low] = a.flags;
        let pct = |on: bool, rng: &mut ChaCha8Rng, lo: u32, hi: u32| {
            if on {
                f64::from(rng.gen_range(lo..=hi))
            } else {
                0.0
            }
        };
        let median = if i {
            rng.gen_range(52_000..=150_000)
        } else {
            rng.gen_range(18_000..=49_000)
        };
        let unemployed = if u {
            f64::from(rng.gen_range(50..=900)) / 100.0
        } else {
            0.0
        };
        let row = [
            geoid_for(g),
            format!("{}", median / 2 + rng.gen_range(0..5_000)),
            format!("{median}"),
            format!("{unemployed:.2}"),
            format!("{:.1}", rng.gen_range(40..=350) as f64 / 10.0),
            format!("{:.1}", rng.gen_range(180..=520) as f64 / 10.0),
            format!("{:.1}", rng.gen_range(700..=990) as f64 / 10.0),
            format!("{}", pct(pm, rng, 31, 65)),
            format!("{}", pct(diesel, rng, 40, 99)),
            format!("{}", a.traffic),
            format!("{}", pct(agri, rng, 1, 94)),
            format!("{}", pct(bld, rng, 1, 99)),
            format!("{}", pct(energy, rng, 1, 96)),
            u8::from(d).to_string(),
            u8::from(low).to_string(),
        ];
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("ascii output")
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_ascii_uppercase().to_string() + c.as_str(),
        None => String::new(),
    }
}

fn first_name(rng: &mut ChaCha8Rng, female: bool) -> String {
    let (syl, end) = if female {
        (&FEMALE_SYLLABLES, &FEMALE_ENDINGS)
    } else {
        (&MALE_SYLLABLES, &MALE_ENDINGS)
    };
    let other = if female {
        &MALE_SYLLABLES
    } else {
        &FEMALE_SYLLABLES
    };
    let n = rng.gen_range(1..=2);
    let mut s = String::new();
    for _ in 0..n {
        let pool = if rng.gen_bool(0.2) { other } else { syl };
        s.push_str(pool.choose(rng).expect("nonempty"));
    }
    s.push_str(end.choose(rng).expect("nonempty"));
    capitalize(&s)
}

fn last_name(rng: &mut ChaCha8Rng, race: usize) -> String {
    let n = rng.gen_range(2..=3);
    let s: String = (0..n)
        .map(|_| {
            // borrowed syllables keep the groups from being perfectly separable
            let pool = if rng.gen_bool(0.15) {
                rng.gen_range(0..4)
            } else {
                race
            };
            *RACE_SYLLABLES[pool].choose(rng).expect("nonempty")
        })
        .collect();
    capitalize(&s)
}

fn names_csv(rows: &[(String, &str)]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["name", "label"]).expect("in-memory write");
    for (name, label) in rows {
        w.write_record([name.as_str(), label])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("ascii output")
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mood {
    Positive,
    Neutral,
    Negative,
}

fn pick_mood(rng: &mut ChaCha8Rng) -> Mood {
    let u: f64 = rng.gen();
    if u < 0.37 {
        Mood::Positive
    } else if u < 0.73 {
        Mood::Neutral
    } else {
        Mood::Negative
    }
}

fn decorate(rng: &mut ChaCha8Rng, mut words: Vec<String>) -> String {
    words.shuffle(rng);
    for w in words.iter_mut() {
        if rng.gen_bool(0.15) {
            *w = capitalize(w);
        }
    }
    if rng.gen_bool(0.2) {
        let i = rng.gen_range(0..words.len());
        words[i] = format!("<b>{}</b>", words[i]);
    }
    let mut text = words.join(" ");
    if rng.gen_bool(0.3) {
        text.push(' ');
        text.push_str(DECORATIONS.choose(rng).expect("nonempty"));
    }
    if rng.gen_bool(0.25) {
        text.push_str(&format!(" https://t.co/{:08x}", rng.gen::<u32>()));
    }
    if rng.gen_bool(0.2) {
        text.push('!');
    }
    text
}

fn topic_text(rng: &mut ChaCha8Rng, category: usize, mood: Mood) -> String {
    let mut words = vec![TRANSIT_WORDS.choose(rng).expect("nonempty").to_string()];
    let n = rng.gen_range(3..=4);
    words.extend(
        CATEGORY_WORDS[category]
            .choose_multiple(rng, n)
            .map(|w| w.to_string()),
    );
    let lex: &[(&str, i32)] = match mood {
        Mood::Positive => &POSITIVE_WORDS,
        Mood::Negative => &NEGATIVE_WORDS,
        Mood::Neutral => &[],
    };
    if !lex.is_empty() {
        let n = rng.gen_range(1..=2);
        words.extend(lex.choose_multiple(rng, n).map(|(w, _)| w.to_string()));
    }
    decorate(rng, words)
}

fn off_topic_text(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(3..=5);
    let words = OFF_TOPIC_WORDS
        .choose_multiple(rng, n)
        .map(|w| w.to_string())
        .collect();
    decorate(rng, words)
}

fn choose_topic(rng: &mut ChaCha8Rng, x: &[f64; 16]) -> usize {
    let mut u = [0.0f64; 4];
    for (c, coefs) in TOPIC_COEFS.iter().enumerate() {
        u[c] = coefs.iter().zip(x).map(|(b, v)| b * v).sum();
    }
    let weights: Vec<f64> = u.iter().map(|v| v.exp()).collect();
    WeightedIndex::new(&weights)
        .expect("positive weights")
        .sample(rng)
}

struct User {
    id: String,
    display: String,
    bio: &'static str,
    female: bool,
    race: usize,
    home: usize,
}

fn make_user(
    rng: &mut ChaCha8Rng,
    idx: usize,
    race_dist: &WeightedIndex<f64>,
    home_dist: &WeightedIndex<f64>,
) -> User {
    let female = rng.gen_bool(0.45);
    let race = race_dist.sample(rng);
    let first = first_name(rng, female);
    let last = last_name(rng, race);
    let u: f64 = rng.gen();
    let display = if u < 0.85 {
        format!("{first} {last}")
    } else if u < 0.90 {
        first
    } else if u < 0.95 {
        format!(
            "{first} {} {last}",
            capitalize(MALE_SYLLABLES.choose(rng).expect("nonempty"))
        )
    } else {
        format!(
            "{} {first} {last} {}",
            DECORATIONS[rng.gen_range(0..2)],
            rng.gen_range(1..=99)
        )
    };
    User {
        id: format!("u{:04}", idx + 1),
        display,
        bio: BIOS.choose(rng).expect("nonempty"),
        female,
        race,
        home: home_dist.sample(rng),
    }
}

fn post_point(rng: &mut ChaCha8Rng, group: usize) -> (f64, f64) {
    let (x, y) = cell_origin(group);
    (
        round6(y + rng.gen_range(0.0005..CELL - 0.0005)),
        round6(x + rng.gen_range(0.0005..CELL - 0.0005)),
    )
}

fn timestamp(rng: &mut ChaCha8Rng) -> String {
    let start: DateTime<Utc> = Utc
        .with_ymd_and_hms(2020, 3, 1, 0, 0, 0)
        .single()
        .expect("valid date");
    let t = start + Duration::seconds(rng.gen_range(0..76 * 86_400));
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}

fn posts_jsonl(rng: &mut ChaCha8Rng) -> (String, usize) {
    let race_dist = WeightedIndex::new(RACE_SHARES).expect("positive weights");
    let home_dist = WeightedIndex::new(GROUP_WEIGHTS).expect("positive weights");
    let users: Vec<User> = (0..N_USERS)
        .map(|i| make_user(rng, i, &race_dist, &home_dist))
        .collect();
    let mut lines = Vec::with_capacity(N_POSTS + 3);
    for p in 0..N_POSTS {
        let user = &users[rng.gen_range(0..users.len())];
        let outside = rng.gen_bool(0.04);
        let (lat, lon) = if outside {
            (
                round6(LAT0 + 0.05 + rng.gen_range(0.0..0.01)),
                round6(LON0 + rng.gen_range(0.0..0.04)),
            )
        } else {
            post_point(rng, user.home)
        };
        let mood = pick_mood(rng);
        let text = if rng.gen_bool(0.08) {
            off_topic_text(rng)
        } else {
            let a = group_attrs(user.home);
            let [u, i, d, agri, bld, energy, pm, diesel, low] =
                a.flags.map(|f| if f { 1.0 } else { 0.0 });
            let x = [
                1.0,
                f64::from(u8::from(user.female)),
                f64::from(u8::from(user.race == 3)),
                f64::from(u8::from(user.race == 0)),
                f64::from(u8::from(mood == Mood::Neutral)),
                f64::from(u8::from(mood == Mood::Negative)),
                u,
                i,
                d,
                a.traffic / 100.0,
                agri,
                bld,
                energy,
                pm,
                diesel,
                low,
            ];
            let topic = choose_topic(rng, &x);
            topic_text(rng, topic, mood)
        };
        let id = format!("p{:05}", p + 1);
        // a tenth of the ids are written as bare numbers
        let id_value = if p % 10 == 9 { json!(p + 1) } else { json!(id) };
        let record = json!({
            "id": id_value,
            "user_id": user.id,
            "name": user.display,
            "description": user.bio,
            "text": text,
            "lat": lat,
            "lon": lon,
            "created_at": timestamp(rng),
        });
        lines.push(record.to_string());
    }
    let bad = [
        r#"{"id": "p99001", "user_id": "u0001", "text": "bus station broken"#.to_string(),
        json!({"id": "p99002", "user_id": "u0002", "name": "Lara Smithful", "text": "metro ramp blocked",
               "lat": 95.0, "lon": -74.0, "created_at": "2020-04-01T12:00:00Z"})
        .to_string(),
        lines[3].clone(),
    ];
    let malformed = bad.len();
    lines.insert(500, bad[0].clone());
    lines.insert(1000, bad[1].clone());
    lines.push(bad[2].clone());
    let mut out = lines.join("\n");
    out.push('\n');
    (out, malformed)
}

fn labeled_csv(rng: &mut ChaCha8Rng) -> String {
    let mut rows = Vec::with_capacity(4 * N_LABELED_PER_CATEGORY);
    for c in 0..4 {
        for _ in 0..N_LABELED_PER_CATEGORY {
            let mood = pick_mood(rng);
            rows.push((topic_text(rng, c, mood), c));
        }
    }
    rows.shuffle(rng);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["text", "label"]).expect("in-memory write");
    for (text, c) in rows {
        w.write_record([text, c.to_string()])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8 output")
}

fn lexicon_csv() -> String {
    let mut out = String::from("word,polarity\n");
    for (w, p) in POSITIVE_WORDS.iter().chain(&NEGATIVE_WORDS) {
        out.push_str(&format!("{w},{p}\n"));
    }
    out
}

fn keywords_txt() -> String {
    let mut out = String::from("# transit relevance keywords\n");
    for k in KEYWORDS {
        out.push_str(k);
        out.push('\n');
    }
    out
}

fn config_toml(seed: u64) -> String {
    format!(
        r#"# Synthetic run generated with seed {seed}.
output_dir = "out"

[inputs]
posts = "{POSTS_FILE}"
posts_format = "jsonl"
names_gender = "{GENDER_FILE}"
names_race = "{RACE_FILE}"
polygons = "{POLYGONS_FILE}"
attributes = "{ATTRIBUTES_FILE}"
keywords = "{KEYWORDS_FILE}"
lexicon = "{LEXICON_FILE}"
labeled_categories = "{LABELED_FILE}"

[window]
from = "2020-03-15T00:00:00Z"
to = "2020-05-15T23:59:59Z"

[seeds]
split = 7
cv = 11
lda = 2023

[demographics]
gender_algorithm = "naive_bayes"
race_algorithm = "naive_bayes"
train_fraction = 0.7
folds = 10

[topics]
k_min = 2
k_max = 6
iterations = 100
beta = 0.01
top_n = 10
min_doc_freq = 3

[[models]]
name = "transport_accessibility"
category = 2
recipe = "transport_accessibility"

[[models]]
name = "socioeconomic_disparity"
category = 1
recipe = "socioeconomic_disparity"

[[models]]
name = "public_transport_infrastructure"
category = 0
recipe = "public_transport_infrastructure"
"#
    )
}

/// Writes the full input set into `dir`, creating it if needed. Output is a
/// pure function of `seed`.
pub fn generate(dir: &Path, seed: u64) -> io::Result<FixtureSummary> {
    fs::create_dir_all(dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let gender: Vec<(String, &str)> = (0..N_GENDER_NAMES)
        .map(|i| {
            let female = i % 2 == 0;
            (
                first_name(&mut rng, female),
                if female { "Female" } else { "Male" },
            )
        })
        .collect();
    let race: Vec<(String, &str)> = (0..4 * N_RACE_NAMES_PER_LABEL)
        .map(|i| {
            let r = i % 4;
            (last_name(&mut rng, r), RACE_LABELS[r])
        })
        .collect();
    fs::write(dir.join(GENDER_FILE), names_csv(&gender))?;
    fs::write(dir.join(RACE_FILE), names_csv(&race))?;
    fs::write(dir.join(POLYGONS_FILE), polygons_json())?;
    fs::write(dir.join(ATTRIBUTES_FILE), attributes_csv(&mut rng))?;
    fs::write(dir.join(KEYWORDS_FILE), keywords_txt())?;
    fs::write(dir.join(LEXICON_FILE), lexicon_csv())?;
    fs::write(dir.join(LABELED_FILE), labeled_csv(&mut rng))?;
    let (posts, malformed) = posts_jsonl(&mut rng);
    fs::write(dir.join(POSTS_FILE), posts)?;
    fs::write(dir.join(CONFIG_FILE), config_toml(seed))?;
    Ok(FixtureSummary {
        posts: N_POSTS,
        users: N_USERS,
        block_groups: GRID_COLS * GRID_ROWS,
        malformed,
    })
}
