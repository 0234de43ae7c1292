//! Per-business key point summaries.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Review;
use crate::mining::{KeyPoint, KpLibrary};
use crate::scoring::{ScoreError, Scorer};
use crate::sentiment::{label_from_distribution, Polarity};

/// A sentence matched to its best key point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub business_id: String,
    pub review_id: String,
    pub sentence_id: String,
    pub sentence_index: usize,
    pub kp_id: String,
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polarity: Option<Polarity>,
}

/// Matches every sentence of `reviews` to its best key point scoring strictly
/// above `t_match`.
///
/// With `t_s`, sentences are classified first: neutral ones are skipped and
/// the rest only meet key points of their own polarity, whatever the review's
/// stars. Without it (the sentiment-free baseline) every key point is eligible.
/// Equal best scores go to the smaller `kp_id`. Records come out ordered by
/// review id, then sentence index.
pub fn match_business(
    reviews: &[&Review],
    kps: &[KeyPoint],
    scorer: &Scorer,
    t_match: f64,
    t_s: Option<f64>,
) -> Result<Vec<MatchRecord>, ScoreError> {
    let mut ordered: Vec<&Review> = reviews.to_vec();
    ordered.sort_by(|a, b| a.review_id.cmp(&b.review_id));
    let sentences: Vec<(&Review, &crate::corpus::Sentence)> = ordered
        .iter()
        .flat_map(|r| r.sentences.iter().map(move |s| (*r, s)))
        .collect();

    let polarities: Vec<Option<Option<Polarity>>> = match t_s {
        None => vec![Some(None); sentences.len()],
        Some(t) => {
            let texts: Vec<&str> = sentences.iter().map(|(_, s)| s.text.as_str()).collect();
            scorer
                .sentiment_batch(&texts)?
                .iter()
                .map(|d| label_from_distribution(d, t).polarity().map(Some))
                .collect()
        }
    };

    let mut pairs: Vec<(&str, &str)> = Vec::new();
    let mut owners: Vec<(usize, usize)> = Vec::new();
    for (si, ((_, s), pol)) in sentences.iter().zip(&polarities).enumerate() {
        let Some(pol) = pol else { continue };
        for (ki, kp) in kps.iter().enumerate() {
            if t_s.is_none() || kp.polarity == *pol {
                pairs.push((s.text.as_str(), kp.text.as_str()));
                owners.push((si, ki));
            }
        }
    }
    let scores = scorer.match_scores(&pairs)?;

    let mut best: HashMap<usize, (usize, f64)> = HashMap::new();
    for (&(si, ki), score) in owners.iter().zip(scores) {
        let s = score.value();
        if s <= t_match {
            continue;
        }
        let better = match best.get(&si) {
            None => true,
            Some(&(bk, bs)) => s > bs || (s == bs && kps[ki].kp_id < kps[bk].kp_id),
        };
        if better {
            best.insert(si, (ki, s));
        }
    }

    let mut records: Vec<MatchRecord> = best
        .into_iter()
        .map(|(si, (ki, score))| {
            let (r, s) = sentences[si];
            MatchRecord {
                business_id: r.business_id.clone(),
                review_id: r.review_id.clone(),
                sentence_id: s.sentence_id.clone(),
                sentence_index: s.index,
                kp_id: kps[ki].kp_id.clone(),
                score,
                polarity: polarities[si].flatten(),
            }
        })
        .collect();
    records.sort_by(|a, b| {
        a.review_id
            .cmp(&b.review_id)
            .then(a.sentence_index.cmp(&b.sentence_index))
    });
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpStat {
    pub kp_id: String,
    pub text: String,
    pub polarity: Option<Polarity>,
    pub matched_review_count: usize,
    pub matched_review_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub business_id: String,
    pub review_count: usize,
    /// Fraction of reviews matched to at least one key point.
    pub coverage: f64,
    pub positive: Vec<KpStat>,
    pub negative: Vec<KpStat>,
    /// Key points without polarity (sentiment-free baseline).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unpolarized: Vec<KpStat>,
}

fn fraction(count: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        count as f64 / total as f64
    }
}

/// Review-level salience: a review counts once for a key point when any of its
/// sentences matched it. Lists the `top_k` matched key points per polarity by
/// fraction desc, count desc, text asc.
pub fn summarize_business(
    business_id: &str,
    records: &[MatchRecord],
    reviews: &[&Review],
    kps: &[KeyPoint],
    top_k: usize,
) -> Summary {
    let review_ids: BTreeSet<&str> = reviews.iter().map(|r| r.review_id.as_str()).collect();
    let mut per_kp: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut covered: BTreeSet<&str> = BTreeSet::new();
    for rec in records.iter().filter(|r| review_ids.contains(r.review_id.as_str())) {
        per_kp
            .entry(rec.kp_id.as_str())
            .or_default()
            .insert(rec.review_id.as_str());
        covered.insert(rec.review_id.as_str());
    }
    let total = review_ids.len();
    let mut stats: Vec<KpStat> = kps
        .iter()
        .filter_map(|kp| {
            let n = per_kp.get(kp.kp_id.as_str())?.len();
            Some(KpStat {
                kp_id: kp.kp_id.clone(),
                text: kp.text.clone(),
                polarity: kp.polarity,
                matched_review_count: n,
                matched_review_fraction: fraction(n, total),
            })
        })
        .collect();
    stats.sort_by(|a, b| {
        b.matched_review_fraction
            .total_cmp(&a.matched_review_fraction)
            .then(b.matched_review_count.cmp(&a.matched_review_count))
            .then_with(|| a.text.cmp(&b.text))
            .then_with(|| a.kp_id.cmp(&b.kp_id))
    });
    let take = |p: Option<Polarity>| -> Vec<KpStat> {
        stats.iter().filter(|s| s.polarity == p).take(top_k).cloned().collect()
    };
    Summary {
        business_id: business_id.to_string(),
        review_count: total,
        coverage: fraction(covered.len(), total),
        positive: take(Some(Polarity::Pos)),
        negative: take(Some(Polarity::Neg)),
        unpolarized: take(None),
    }
}

/// A business summary with the match records behind it.
pub type BusinessResult = (Summary, Vec<MatchRecord>);

/// Matches and summarizes every business, in parallel across businesses.
/// Results are in business id order.
/// Match records are kept down to `record_floor` (useful for evaluation at
/// lower thresholds); the summary counts only scores above `t_match`.
pub fn summarize_businesses(
    reviews_by_business: &BTreeMap<&str, Vec<&Review>>,
    library: &KpLibrary,
    scorer: &Scorer,
    record_floor: f64,
    t_match: f64,
    t_s: Option<f64>,
    top_k: usize,
) -> Result<Vec<BusinessResult>, (String, ScoreError)> {
    let floor = record_floor.min(t_match);
    reviews_by_business
        .par_iter()
        .map(|(&business_id, reviews)| {
            let kps = library.for_business(business_id);
            let records =
                match_business(reviews, &kps, scorer, floor, t_s).map_err(|e| (business_id.to_string(), e))?;
            let above: Vec<MatchRecord> = records.iter().filter(|r| r.score > t_match).cloned().collect();
            let summary = summarize_business(business_id, &above, reviews, &kps, top_k);
            Ok((summary, records))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderFormat {
    Text,
    Json,
}

#[derive(Debug, thiserror::Error)]
#[error("unknown summary format {0:?} (expected text or json)")]
pub struct UnknownFormat(pub String);

impl FromStr for RenderFormat {
    type Err = UnknownFormat;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(RenderFormat::Text),
            "json" => Ok(RenderFormat::Json),
            other => Err(UnknownFormat(other.to_string())),
        }
    }
}

pub fn percent(fraction: f64) -> String {
    format!("{:.1}%", fraction * 100.0)
}

pub fn render_summary(summary: &Summary, format: RenderFormat) -> String {
    match format {
        RenderFormat::Json => serde_json::to_string_pretty(summary).expect("summary serializes") + "\n",
        RenderFormat::Text => {
            let mut out = String::new();
            let _ = writeln!(
                out,
                "# {} | {} reviews | coverage {}",
                summary.business_id,
                summary.review_count,
                percent(summary.coverage)
            );
            out.push_str("polarity\treviews\tshare\tkey point\n");
            for (tag, list) in [
                ("pos", &summary.positive),
                ("neg", &summary.negative),
                ("-", &summary.unpolarized),
            ] {
                for s in list {
                    let _ = writeln!(
                        out,
                        "{tag}\t{}\t{}\t{}",
                        s.matched_review_count,
                        percent(s.matched_review_fraction),
                        s.text
                    );
                }
            }
            out
        }
    }
}
