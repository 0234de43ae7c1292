//! Writes the synthetic mini corpus: five restaurants with 60 reviews each, and a
//! score table covering every sentence pair.
//!
//! ```text
//! cargo run --example gen_mini -- crates/core/tests/data/mini
//! ```

use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use kpa_core::scoring::{MatchEntry, ScoreTable, SentimentDistribution};

#[derive(Clone, Copy, PartialEq)]
enum Pol {
    Pos,
    Neg,
    Neut,
}

struct Line {
    text: &'static str,
    topic: usize,
    pol: Pol,
    quality: f64,
}

const fn line(text: &'static str, topic: usize, pol: Pol, quality: f64) -> Line {
    Line {
        text,
        topic,
        pol,
        quality,
    }
}

use Pol::*;

// topics: 0 food, 1 service, 2 price, 3 ambience, 4 cleanliness, 9 filler
const LINES: &[Line] = &[
    line("The food was delicious.", 0, Pos, 0.93),
    line(
        "Every dish we tried was full of flavor and cooked perfectly.",
        0,
        Pos,
        0.71,
    ),
    line("Great food, especially the pasta.", 0, Pos, 0.8),
    line("The food was bland.", 0, Neg, 0.93),
    line("My steak arrived cold and the fries were soggy.", 0, Neg, 0.64),
    line("Honestly the food tasted like it came from a microwave.", 0, Neg, 0.58),
    line("The staff were very friendly.", 1, Pos, 0.92),
    line(
        "Our waiter checked on us often and gave great recommendations.",
        1,
        Pos,
        0.69,
    ),
    line("Service was quick and attentive.", 1, Pos, 0.81),
    line("The service was painfully slow.", 1, Neg, 0.92),
    line("We waited forty minutes before anyone took our order.", 1, Neg, 0.62),
    line("The hostess was rude to us at the door.", 1, Neg, 0.55),
    line("Prices are very reasonable.", 2, Pos, 0.91),
    line("You get a lot of food for what you pay.", 2, Pos, 0.6),
    line("It is way too expensive.", 2, Neg, 0.91),
    line("Twenty dollars for a small salad is not worth it.", 2, Neg, 0.57),
    line("The place feels cozy.", 3, Pos, 0.9),
    line("Nice music and soft lighting made for a relaxing dinner.", 3, Pos, 0.63),
    line("The dining room was noisy.", 3, Neg, 0.9),
    line("We could barely hear each other over the music.", 3, Neg, 0.59),
    line("The tables were spotless.", 4, Pos, 0.89),
    line("The bathroom was really dirty.", 4, Neg, 0.89),
    line("There were crumbs everywhere and the floor was sticky.", 4, Neg, 0.54),
    // near the sentiment threshold: counted as neutral at 0.79
    line("The desserts were pretty good I guess.", 0, Pos, 0.4),
    line("We came here on a Tuesday night.", 9, Neut, 0.2),
    line("I ordered the lasagna and a side salad.", 9, Neut, 0.25),
    line("Parking is on the street behind the building.", 9, Neut, 0.3),
    line("We had a reservation for four people.", 9, Neut, 0.22),
    line("They open at five in the evening.", 9, Neut, 0.18),
];

/// Per business: how likely each topic is praised rather than criticized.
const BUSINESSES: [(&str, [f64; 5]); 5] = [
    ("b01", [0.9, 0.8, 0.6, 0.7, 0.9]),
    ("b02", [0.3, 0.4, 0.8, 0.5, 0.6]),
    ("b03", [0.7, 0.2, 0.3, 0.8, 0.4]),
    ("b04", [0.5, 0.9, 0.9, 0.2, 0.8]),
    ("b05", [0.8, 0.6, 0.2, 0.6, 0.1]),
];
const REVIEWS_PER_BUSINESS: usize = 60;

fn sentiment(l: &Line) -> SentimentDistribution {
    let (pos, neg, neut) = match l.pol {
        Pos if l.quality < 0.5 => (0.7, 0.1, 0.2),
        Pos => (0.92, 0.03, 0.05),
        Neg => (0.04, 0.9, 0.06),
        Neut => (0.1, 0.08, 0.82),
    };
    SentimentDistribution { pos, neg, neut }
}

/// Deterministic spread in [0, 1) for a pair of line indices.
fn spread(i: usize, j: usize) -> f64 {
    ((i * 7 + j * 13 + i * j) % 17) as f64 / 17.0
}

fn match_score(i: usize, j: usize) -> f64 {
    let (a, b) = (&LINES[i], &LINES[j]);
    if i == j {
        1.0
    } else if a.pol == b.pol && a.topic == b.topic && a.pol != Neut {
        0.991 + 0.008 * spread(i, j)
    } else if a.pol == b.pol && a.pol != Neut {
        0.55 + 0.35 * spread(i, j)
    } else {
        0.1 + 0.3 * spread(i, j)
    }
}

/// Headline sentences (the likely key points) are drawn a third as often as
/// the longer ones, so no single text floods the candidate pool.
fn pick<'a>(rng: &mut ChaCha8Rng, topic: usize, pol: Pol) -> &'a Line {
    let pool: Vec<&Line> = LINES.iter().filter(|l| l.topic == topic && l.pol == pol).collect();
    pool.choose_weighted(rng, |l| if l.quality >= 0.85 { 1 } else { 3 })
        .expect("every topic has lines of both polarities")
}

fn main() -> anyhow::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "tests/data/mini".into()));
    std::fs::create_dir_all(&out)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    let mut reviews = String::new();
    let mut businesses = String::new();
    for (b, (id, praise)) in BUSINESSES.iter().enumerate() {
        businesses.push_str(&format!(
            "{}\n",
            json!({"business_id": id, "categories": ["Restaurants", if b % 2 == 0 { "Italian" } else { "Diner" }], "review_count": REVIEWS_PER_BUSINESS})
        ));
        for r in 0..REVIEWS_PER_BUSINESS {
            let mut topics = [0, 1, 2, 3, 4];
            topics.shuffle(&mut rng);
            let n = rng.gen_range(2..=4);
            let mut sentences: Vec<&str> = Vec::new();
            let mut score = 0.0;
            for &t in &topics[..n] {
                let pol = if rng.gen_bool(praise[t]) { Pos } else { Neg };
                score += if pol == Pos { 1.0 } else { -1.0 };
                sentences.push(pick(&mut rng, t, pol).text);
            }
            if rng.gen_bool(0.5) {
                let filler: Vec<&Line> = LINES.iter().filter(|l| l.pol == Neut).collect();
                sentences.insert(0, filler.choose(&mut rng).unwrap().text);
            }
            if rng.gen_bool(0.1) {
                sentences.push("The desserts were pretty good I guess.");
            }
            let stars = match score / n as f64 {
                x if x > 0.6 => 5,
                x if x > 0.2 => 4,
                x if x >= -0.2 => 3,
                x if x >= -0.6 => 2,
                _ => 1,
            };
            reviews.push_str(&format!(
                "{}\n",
                json!({"review_id": format!("{id}-r{r:02}"), "business_id": id, "stars": stars as f64, "text": sentences.join(" ")})
            ));
        }
    }

    let mut table = ScoreTable {
        backend_id: "mini-table-v1".into(),
        default_match: Some(0.0),
        ..ScoreTable::default()
    };
    for (i, a) in LINES.iter().enumerate() {
        table.quality.insert(a.text.into(), a.quality);
        table
            .kp_quality
            .insert(a.text.into(), (a.quality - 0.3).clamp(0.0, 1.0));
        table.sentiment.insert(a.text.into(), sentiment(a));
        for (j, b) in LINES.iter().enumerate() {
            table.matches.push(MatchEntry {
                sentence: a.text.into(),
                kp: b.text.into(),
                score: match_score(i, j),
            });
        }
    }

    std::fs::write(out.join("reviews.jsonl"), reviews)?;
    std::fs::write(out.join("businesses.jsonl"), businesses)?;
    std::fs::write(out.join("scores.json"), serde_json::to_string_pretty(&table)? + "\n")?;
    Ok(())
}
