//! Label aggregation and annotator agreement.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Judgment {
    Yes,
    No,
    /// The annotator considered the key point itself bad. Counts against the
    /// match when aggregating.
    FaultyKp,
}

impl Judgment {
    pub fn is_yes(self) -> bool {
        self == Judgment::Yes
    }
}

/// Correct iff the share of `yes` judgments reaches `min_agree`.
pub fn aggregate_pair_label(judgments: &[Judgment], min_agree: f64) -> Result<bool, EvalError> {
    if judgments.is_empty() {
        return Err(EvalError::NoJudgments);
    }
    let yes = judgments.iter().filter(|j| j.is_yes()).count();
    Ok(yes as f64 / judgments.len() as f64 >= min_agree)
}

/// Two-rater Cohen's kappa over binary labels.
///
/// Chance agreement reaches 1 only when both raters give one constant, equal
/// label; that case is perfect agreement and returns 1.0.
pub fn cohen_kappa(a: &[bool], b: &[bool]) -> Result<f64, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(EvalError::EmptyLabels);
    }
    let n = a.len() as u64;
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count() as u64;
    let a1 = a.iter().filter(|&&x| x).count() as u64;
    let b1 = b.iter().filter(|&&x| x).count() as u64;
    // everything scaled by n^2 so the only rounding is the final division
    let chance = a1 * b1 + (n - a1) * (n - b1);
    if chance == n * n {
        return Ok(1.0);
    }
    let observed = agree * n;
    Ok((observed as f64 - chance as f64) / ((n * n) as f64 - chance as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Consistency {
    pub pairs: usize,
    pub agreement: f64,
    pub kappa: f64,
}

pub const CONSISTENCY_JUDGMENTS: usize = 16;

/// Splits each pair's 16 judgments at random into two sets of 8, labels
/// each half, and compares the two label vectors.
pub fn consistency_split_check(pairs: &[Vec<Judgment>], min_agree: f64, seed: u64) -> Result<Consistency, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::EmptyLabels);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = CONSISTENCY_JUDGMENTS / 2;
    let mut left = Vec::with_capacity(pairs.len());
    let mut right = Vec::with_capacity(pairs.len());
    for (i, js) in pairs.iter().enumerate() {
        if js.len() != CONSISTENCY_JUDGMENTS {
            return Err(EvalError::JudgmentCount {
                index: i,
                expected: CONSISTENCY_JUDGMENTS,
                got: js.len(),
            });
        }
        let mut shuffled = js.clone();
        shuffled.shuffle(&mut rng);
        left.push(aggregate_pair_label(&shuffled[..half], min_agree)?);
        right.push(aggregate_pair_label(&shuffled[half..], min_agree)?);
    }
    let agree = left.iter().zip(&right).filter(|(a, b)| a == b).count();
    Ok(Consistency {
        pairs: pairs.len(),
        agreement: agree as f64 / pairs.len() as f64,
        kappa: cohen_kappa(&left, &right)?,
    })
}
