//! Building the key point quality dataset from crowd confidences.
//!
//! | criterion        | positive needs | negative if  |
//! |------------------|----------------|--------------|
//! | validity         | > 0.85         | < 0.8        |
//! | clear sentiment  | > 0.6          | < 0.5        |
//! | informativeness  | informative > 0.6 | too specific / uninformative > 0.6 |
//! | multiple aspects | <= 0.57        | >= 0.85      |
//!
//! Positive needs every upper bound, negative any lower bound; the rest is
//! discarded. The per-criterion ranges are disjoint except informativeness,
//! where the two confidences are separate answers: a sentence tripping a
//! negative rule is always negative.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::MiningError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpqAnnotation {
    pub text: String,
    pub validity_conf: f64,
    /// Share of annotators choosing a clear positive or negative sentiment.
    pub sentiment_clear_conf: f64,
    pub informative_conf: f64,
    pub too_specific_or_uninformative_conf: f64,
    pub multi_aspect_conf: f64,
}

impl KpqAnnotation {
    fn confidences(&self) -> [(&'static str, f64); 5] {
        [
            ("validity_conf", self.validity_conf),
            ("sentiment_clear_conf", self.sentiment_clear_conf),
            ("informative_conf", self.informative_conf),
            (
                "too_specific_or_uninformative_conf",
                self.too_specific_or_uninformative_conf,
            ),
            ("multi_aspect_conf", self.multi_aspect_conf),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KpqLabel {
    Pos,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KpqOutcome {
    Positive,
    Negative,
    Discarded,
}

pub fn meets_positive(a: &KpqAnnotation) -> bool {
    a.validity_conf > 0.85 && a.sentiment_clear_conf > 0.6 && a.informative_conf > 0.6 && a.multi_aspect_conf <= 0.57
}

pub fn meets_negative(a: &KpqAnnotation) -> bool {
    a.validity_conf < 0.8
        || a.sentiment_clear_conf < 0.5
        || a.too_specific_or_uninformative_conf > 0.6
        || a.multi_aspect_conf >= 0.85
}

pub fn classify_annotation(a: &KpqAnnotation) -> Result<KpqOutcome, MiningError> {
    for (field, v) in a.confidences() {
        if !(0.0..=1.0).contains(&v) {
            return Err(MiningError::Confidence {
                text: a.text.clone(),
                field,
                value: v,
            });
        }
    }
    Ok(if meets_negative(a) {
        KpqOutcome::Negative
    } else if meets_positive(a) {
        KpqOutcome::Positive
    } else {
        KpqOutcome::Discarded
    })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KpqDataset {
    pub positive: Vec<KpqAnnotation>,
    pub negative: Vec<KpqAnnotation>,
    pub discarded: Vec<KpqAnnotation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KpqExample {
    pub text: String,
    pub label: KpqLabel,
}

impl KpqDataset {
    /// Labeled examples, positives first, each group in input order.
    pub fn examples(&self) -> Vec<KpqExample> {
        let tag = |list: &[KpqAnnotation], label| {
            list.iter()
                .map(|a| KpqExample {
                    text: a.text.clone(),
                    label,
                })
                .collect::<Vec<_>>()
        };
        let mut out = tag(&self.positive, KpqLabel::Pos);
        out.extend(tag(&self.negative, KpqLabel::Neg));
        out
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for ex in self.examples() {
            serde_json::to_writer(&mut w, &ex)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

pub fn build_kpq_dataset(annotations: Vec<KpqAnnotation>) -> Result<KpqDataset, MiningError> {
    let mut ds = KpqDataset::default();
    for a in annotations {
        match classify_annotation(&a)? {
            KpqOutcome::Positive => ds.positive.push(a),
            KpqOutcome::Negative => ds.negative.push(a),
            KpqOutcome::Discarded => ds.discarded.push(a),
        }
    }
    Ok(ds)
}
