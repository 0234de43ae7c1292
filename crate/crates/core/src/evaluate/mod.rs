//! Coverage metrics, the precision-sampling protocol and precision/coverage
//! curves.
//!
//! Match records are stored once at a floor threshold (`t_min`); each metric
//! at a threshold `t` keeps the records with `score > t`. Since a sentence's
//! best key point does not depend on the threshold, this equals re-matching
//! at `t`.

mod agreement;
mod sample;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

pub use agreement::{
    aggregate_pair_label, cohen_kappa, consistency_split_check, Consistency, Judgment, CONSISTENCY_JUDGMENTS,
};
pub use sample::{
    attach_judgments, build_precision_sample, faulty_kp_counts, precision_at, select_eval_businesses, JudgmentRecord,
    PairLabel, PrecisionPair, PrecisionSample, SampleExport,
};

use crate::corpus::Review;
use crate::summarize::MatchRecord;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("no businesses to evaluate")]
    EmptyBusinessSet,
    #[error("business {0} has no reviews")]
    NoReviews(String),
    #[error("a pair needs at least one judgment")]
    NoJudgments,
    #[error("label lists differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("label lists are empty")]
    EmptyLabels,
    #[error("pair #{index} has {got} judgments, expected {expected}")]
    JudgmentCount { index: usize, expected: usize, got: usize },
    #[error("pair {0} is unlabeled")]
    Unlabeled(String),
    #[error("judgment for unknown pair {0}")]
    UnknownPair(String),
    #[error("thresholds must be ascending and at least t_min = {t_min}")]
    Thresholds { t_min: f64 },
    #[error("sample size must be at least 1")]
    EmptySampleRequest,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceUnit {
    pub sentence_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewUnit {
    pub review_id: String,
    pub sentences: Vec<SentenceUnit>,
}

/// One business's reviews together with its floor-threshold match records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusinessMatches {
    pub business_id: String,
    /// Sorted by review id.
    pub reviews: Vec<ReviewUnit>,
    pub records: Vec<MatchRecord>,
}

impl BusinessMatches {
    pub fn from_reviews(business_id: &str, reviews: &[&Review], records: Vec<MatchRecord>) -> Self {
        let mut units: Vec<ReviewUnit> = reviews
            .iter()
            .map(|r| ReviewUnit {
                review_id: r.review_id.clone(),
                sentences: r
                    .sentences
                    .iter()
                    .map(|s| SentenceUnit {
                        sentence_id: s.sentence_id.clone(),
                        text: s.text.clone(),
                    })
                    .collect(),
            })
            .collect();
        units.sort_by(|a, b| a.review_id.cmp(&b.review_id));
        BusinessMatches {
            business_id: business_id.to_string(),
            reviews: units,
            records,
        }
    }

    /// Reviews known only by id; enough for the coverage metrics.
    pub fn from_review_ids<S: AsRef<str>>(business_id: &str, review_ids: &[S], records: Vec<MatchRecord>) -> Self {
        let mut units: Vec<ReviewUnit> = review_ids
            .iter()
            .map(|id| ReviewUnit {
                review_id: id.as_ref().to_string(),
                sentences: Vec::new(),
            })
            .collect();
        units.sort_by(|a, b| a.review_id.cmp(&b.review_id));
        BusinessMatches {
            business_id: business_id.to_string(),
            reviews: units,
            records,
        }
    }

    /// Distinct key points per review among records scoring above `t`.
    fn matched_kps(&self, t: f64) -> BTreeMap<&str, BTreeSet<&str>> {
        let known: BTreeSet<&str> = self.reviews.iter().map(|r| r.review_id.as_str()).collect();
        let mut out: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for r in self
            .records
            .iter()
            .filter(|r| r.score > t && known.contains(r.review_id.as_str()))
        {
            out.entry(r.review_id.as_str()).or_default().insert(r.kp_id.as_str());
        }
        out
    }

    fn review_total(&self) -> Result<usize, EvalError> {
        match self.reviews.len() {
            0 => Err(EvalError::NoReviews(self.business_id.clone())),
            n => Ok(n),
        }
    }

    pub fn coverage(&self, t: f64) -> Result<f64, EvalError> {
        let n = self.review_total()?;
        Ok(self.matched_kps(t).len() as f64 / n as f64)
    }

    pub fn mean_matches(&self, t: f64) -> Result<f64, EvalError> {
        let n = self.review_total()?;
        let total: usize = self.matched_kps(t).values().map(BTreeSet::len).sum();
        Ok(total as f64 / n as f64)
    }

    /// Number of distinct reviews matched to each key point above `t`.
    pub fn kp_review_counts(&self, t: f64) -> BTreeMap<String, usize> {
        let mut out: BTreeMap<String, usize> = BTreeMap::new();
        for kps in self.matched_kps(t).values() {
            for kp in kps {
                *out.entry(kp.to_string()).or_default() += 1;
            }
        }
        out
    }
}

fn macro_average(
    businesses: &[BusinessMatches],
    f: impl Fn(&BusinessMatches) -> Result<f64, EvalError>,
) -> Result<f64, EvalError> {
    if businesses.is_empty() {
        return Err(EvalError::EmptyBusinessSet);
    }
    let mut sum = 0.0;
    for b in businesses {
        sum += f(b)?;
    }
    Ok(sum / businesses.len() as f64)
}

/// Fraction of each business's reviews matched to at least one key point with
/// score above `t`, macro-averaged over businesses.
pub fn review_coverage(businesses: &[BusinessMatches], t: f64) -> Result<f64, EvalError> {
    macro_average(businesses, |b| b.coverage(t))
}

/// Distinct key points matched per review above `t`, macro-averaged over
/// businesses.
pub fn mean_matches_per_review(businesses: &[BusinessMatches], t: f64) -> Result<f64, EvalError> {
    macro_average(businesses, |b| b.mean_matches(t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PcPoint {
    pub t: f64,
    /// `None` when no sampled pair scores above `t`.
    pub precision: Option<f64>,
    pub review_coverage: f64,
    pub mean_matches: f64,
}

pub fn pc_curve(
    sample: &[PrecisionPair],
    businesses: &[BusinessMatches],
    thresholds: &[f64],
    t_min: f64,
) -> Result<Vec<PcPoint>, EvalError> {
    let ascending = thresholds.windows(2).all(|w| w[0] <= w[1]);
    if !ascending || thresholds.first().is_some_and(|&t| t < t_min) {
        return Err(EvalError::Thresholds { t_min });
    }
    thresholds
        .iter()
        .map(|&t| {
            Ok(PcPoint {
                t,
                precision: precision_at(sample, t)?,
                review_coverage: review_coverage(businesses, t)?,
                mean_matches: mean_matches_per_review(businesses, t)?,
            })
        })
        .collect()
}

/// `count` evenly spaced thresholds from `lo` to `hi` inclusive.
pub fn threshold_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

pub fn write_curve<W: Write>(points: &[PcPoint], mut w: W, delimiter: char) -> std::io::Result<()> {
    let d = delimiter;
    writeln!(w, "t{d}precision{d}review_coverage{d}mean_matches")?;
    for p in points {
        let precision = p.precision.map(|v| format!("{v:.6}")).unwrap_or_default();
        writeln!(
            w,
            "{:.6}{d}{precision}{d}{:.6}{d}{:.6}",
            p.t, p.review_coverage, p.mean_matches
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn rec(review: &str, kp: &str, score: f64) -> MatchRecord {
        MatchRecord {
            business_id: "b".into(),
            review_id: review.into(),
            sentence_id: format!("{review}#0"),
            sentence_index: 0,
            kp_id: kp.into(),
            score,
            polarity: None,
        }
    }

    #[test]
    fn coverage_basics() {
        let b = BusinessMatches::from_review_ids(
            "b",
            &["r1", "r2", "r3", "r4"],
            vec![rec("r1", "k1", 0.95), rec("r2", "k2", 0.99)],
        );
        assert_eq!(review_coverage(std::slice::from_ref(&b), 0.9).unwrap(), 0.5);
        assert_eq!(review_coverage(std::slice::from_ref(&b), 0.95).unwrap(), 0.25);
        let full = BusinessMatches::from_review_ids("a", &["x"], vec![rec("x", "k", 1.0)]);
        let none = BusinessMatches::from_review_ids("c", &["y"], vec![]);
        assert_eq!(review_coverage(&[full, none], 0.5).unwrap(), 0.5);
        assert!(matches!(review_coverage(&[], 0.5), Err(EvalError::EmptyBusinessSet)));
    }

    #[test]
    fn mean_matches_counts_distinct_kps() {
        let b = BusinessMatches::from_review_ids(
            "b",
            &["r1"],
            vec![rec("r1", "k1", 0.95), rec("r1", "k2", 0.97), rec("r1", "k1", 0.99)],
        );
        assert_eq!(mean_matches_per_review(&[b], 0.9).unwrap(), 2.0);
    }

    #[test]
    fn grid_and_curve_output() {
        let g = threshold_grid(0.5, 1.0, 6);
        assert_eq!(g.len(), 6);
        assert_eq!((g[0], g[5]), (0.5, 1.0));
        let b = BusinessMatches::from_review_ids("b", &["r1"], vec![rec("r1", "k1", 0.95)]);
        let pts = pc_curve(&[], std::slice::from_ref(&b), &[0.5, 0.96], 0.5).unwrap();
        assert_eq!(pts[0].precision, None);
        assert_eq!(pts[1].review_coverage, 0.0);
        assert!(pc_curve(&[], std::slice::from_ref(&b), &[0.9, 0.6], 0.5).is_err());
        assert!(pc_curve(&[], &[b], &[0.4], 0.5).is_err());
        let mut out = Vec::new();
        write_curve(&pts, &mut out, '\t').unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "t\tprecision\treview_coverage\tmean_matches"
        );
        assert_eq!(text.lines().nth(1).unwrap(), "0.500000\t\t1.000000\t1.000000");
    }
}
