//! Greedy key point extraction.
//!
//! 1. candidates arrive pre-selected;
//! 2. every comment maps to its best candidate scoring strictly above
//!    `t_match` (a sentence never matches itself);
//! 3. candidates are ranked by match count;
//! 4. scanning in rank order, a candidate is removed when it matches
//!    (as the comment) some already retained candidate;
//! 5. removed candidates and the comments mapped to them re-map to their best
//!    retained candidate, or stay unmapped;
//! 6. retained candidates are re-ranked and the top `k` returned.
//!
//! Every ordering ties on (count desc, quality desc, text asc, id asc).

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::MiningError;
use crate::scoring::Scorer;
use crate::sentiment::Polarity;

/// A unit matched against candidates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comment {
    pub id: String,
    pub text: String,
    pub polarity: Option<Polarity>,
}

/// A key point candidate: a short, high-quality sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: String,
    pub text: String,
    pub quality: f64,
    pub kp_quality: Option<f64>,
    pub polarity: Option<Polarity>,
}

impl Candidate {
    /// The tie-break order: quality desc, text asc, id asc.
    pub fn tie_order(a: &Candidate, b: &Candidate) -> Ordering {
        b.quality
            .total_cmp(&a.quality)
            .then_with(|| a.text.cmp(&b.text))
            .then_with(|| a.id.cmp(&b.id))
    }

    pub fn as_comment(&self) -> Comment {
        Comment {
            id: self.id.clone(),
            text: self.text.clone(),
            polarity: self.polarity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    pub candidate: Candidate,
    pub match_count: usize,
    /// 1-based.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub comment_id: String,
    /// Id of the candidate the comment maps to, if any.
    pub kp_id: Option<String>,
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    pub key_points: Vec<RankedCandidate>,
    /// One entry per comment plus one per removed candidate that was not a
    /// comment, sorted by comment id. Only returned key points are referenced.
    pub mapping: Vec<Assignment>,
    /// Candidates removed as near-duplicates, in rank order.
    pub removed: Vec<String>,
    /// Every candidate id in the order the duplicate scan visited them (the
    /// first ranking). Re-scanning the key points in this order removes
    /// nothing; the final ranking can differ when scores are asymmetric.
    pub scan_order: Vec<String>,
}

/// Scores of every row (comment or extra candidate) against every candidate.
struct ScoreGrid {
    /// row-major, `rows x cols`; identity cells hold `None`
    cells: Vec<Option<f64>>,
    cols: usize,
}

impl ScoreGrid {
    fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.cells[row * self.cols + col]
    }
}

/// Best column among `allowed` with score strictly above `t_match`; equal
/// scores go to the earlier column (columns are in tie order).
fn best_match(
    grid: &ScoreGrid,
    row: usize,
    allowed: impl Iterator<Item = usize>,
    t_match: f64,
) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for col in allowed {
        if let Some(s) = grid.get(row, col) {
            if s > t_match && best.is_none_or(|(_, b)| s > b) {
                best = Some((col, s));
            }
        }
    }
    best
}

fn rank_order(candidates: &[Candidate], counts: &[usize], cols: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut order: Vec<usize> = cols.collect();
    // columns are already in tie order, so a stable sort on count keeps it
    order.sort_by(|&a, &b| {
        counts[b]
            .cmp(&counts[a])
            .then_with(|| Candidate::tie_order(&candidates[a], &candidates[b]))
    });
    order
}

fn check_unique<'a>(ids: impl Iterator<Item = &'a str>, what: &str) -> Result<(), MiningError> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(MiningError::DuplicateId {
                what: what.to_string(),
                id: id.to_string(),
            });
        }
    }
    Ok(())
}

/// Runs steps 2-6 over `candidates` and `comments`.
pub fn extract_key_points(
    candidates: &[Candidate],
    comments: &[Comment],
    scorer: &Scorer,
    t_match: f64,
    k: usize,
) -> Result<Extraction, MiningError> {
    if candidates.is_empty() {
        let mut mapping: Vec<Assignment> = comments
            .iter()
            .map(|c| Assignment {
                comment_id: c.id.clone(),
                kp_id: None,
                score: None,
            })
            .collect();
        mapping.sort_by(|a, b| a.comment_id.cmp(&b.comment_id));
        return Ok(Extraction {
            key_points: vec![],
            mapping,
            removed: vec![],
            scan_order: vec![],
        });
    }
    check_unique(candidates.iter().map(|c| c.id.as_str()), "candidate")?;
    check_unique(comments.iter().map(|c| c.id.as_str()), "comment")?;
    let polarity = candidates[0].polarity;
    let mixed = candidates
        .iter()
        .map(|c| c.polarity)
        .chain(comments.iter().map(|c| c.polarity))
        .any(|p| p != polarity);
    if mixed {
        return Err(MiningError::MixedPolarity);
    }

    // columns: candidates in tie order
    let mut cands: Vec<Candidate> = candidates.to_vec();
    cands.sort_by(Candidate::tie_order);
    let n_cols = cands.len();

    // rows: comments sorted by id, then candidates that are not comments
    let mut rows: Vec<Comment> = comments.to_vec();
    rows.sort_by(|a, b| a.id.cmp(&b.id));
    let n_comments = rows.len();
    let comment_ids: HashSet<&str> = comments.iter().map(|c| c.id.as_str()).collect();
    let extra: Vec<Comment> = cands
        .iter()
        .filter(|c| !comment_ids.contains(c.id.as_str()))
        .map(Candidate::as_comment)
        .collect();
    rows.extend(extra);
    let row_of: HashMap<&str, usize> = rows.iter().enumerate().map(|(i, r)| (r.id.as_str(), i)).collect();

    let mut pairs: Vec<(&str, &str)> = Vec::new();
    let mut cell_index: Vec<Option<usize>> = Vec::with_capacity(rows.len() * n_cols);
    for row in &rows {
        for cand in &cands {
            if row.id == cand.id {
                cell_index.push(None);
            } else {
                cell_index.push(Some(pairs.len()));
                pairs.push((row.text.as_str(), cand.text.as_str()));
            }
        }
    }
    let scores = scorer.match_scores(&pairs)?;
    let grid = ScoreGrid {
        cells: cell_index.iter().map(|i| i.map(|i| scores[i].value())).collect(),
        cols: n_cols,
    };

    // step 2
    let mut assigned: Vec<Option<usize>> = (0..n_comments)
        .map(|r| best_match(&grid, r, 0..n_cols, t_match).map(|(c, _)| c))
        .collect();
    let mut counts = vec![0usize; n_cols];
    for col in assigned.iter().flatten() {
        counts[*col] += 1;
    }

    // step 3
    let ranked = rank_order(&cands, &counts, 0..n_cols);

    // step 4
    let mut retained: Vec<usize> = Vec::new();
    let mut removed: Vec<usize> = Vec::new();
    for &col in &ranked {
        let row = row_of[cands[col].id.as_str()];
        let duplicate = retained
            .iter()
            .any(|&kept| grid.get(row, kept).is_some_and(|s| s > t_match));
        if duplicate {
            removed.push(col);
        } else {
            retained.push(col);
        }
    }
    let mut is_retained = vec![false; n_cols];
    for &c in &retained {
        is_retained[c] = true;
    }

    // step 5
    let removed_rows: HashSet<usize> = removed.iter().map(|&c| row_of[cands[c].id.as_str()]).collect();
    assigned.resize(rows.len(), None);
    let mut final_scores: Vec<Option<f64>> = vec![None; rows.len()];
    for r in 0..rows.len() {
        let needs_remap = removed_rows.contains(&r) || assigned[r].is_some_and(|c| !is_retained[c]);
        if needs_remap {
            assigned[r] = None;
            if let Some((col, s)) = best_match(&grid, r, (0..n_cols).filter(|&c| is_retained[c]), t_match) {
                assigned[r] = Some(col);
                final_scores[r] = Some(s);
            }
        } else if let Some(col) = assigned[r] {
            final_scores[r] = grid.get(r, col);
        }
    }

    // step 6
    let mut final_counts = vec![0usize; n_cols];
    for col in assigned.iter().flatten() {
        final_counts[*col] += 1;
    }
    let final_rank = rank_order(&cands, &final_counts, retained.iter().copied());
    let top: Vec<usize> = final_rank.into_iter().take(k).collect();
    let in_top: HashSet<usize> = top.iter().copied().collect();

    let key_points = top
        .iter()
        .enumerate()
        .map(|(i, &col)| RankedCandidate {
            candidate: cands[col].clone(),
            match_count: final_counts[col],
            rank: i + 1,
        })
        .collect();
    let mut mapping: Vec<Assignment> = (0..rows.len())
        .filter(|&r| r < n_comments || removed_rows.contains(&r))
        .map(|r| match assigned[r].filter(|c| in_top.contains(c)) {
            Some(col) => Assignment {
                comment_id: rows[r].id.clone(),
                kp_id: Some(cands[col].id.clone()),
                score: final_scores[r],
            },
            None => Assignment {
                comment_id: rows[r].id.clone(),
                kp_id: None,
                score: None,
            },
        })
        .collect();
    mapping.sort_by(|a, b| a.comment_id.cmp(&b.comment_id));

    Ok(Extraction {
        key_points,
        mapping,
        removed: removed.iter().map(|&c| cands[c].id.clone()).collect(),
        scan_order: ranked.iter().map(|&c| cands[c].id.clone()).collect(),
    })
}

/// Step 4 on its own: scans `ranked` in order and drops each candidate whose
/// match score against an already kept one exceeds `t_match`. Returns the
/// kept and removed ids.
pub fn dedup_candidates(
    ranked: &[Candidate],
    scorer: &Scorer,
    t_match: f64,
) -> Result<(Vec<String>, Vec<String>), MiningError> {
    let mut kept: Vec<&Candidate> = Vec::new();
    let mut removed = Vec::new();
    for c in ranked {
        let pairs: Vec<(&str, &str)> = kept
            .iter()
            .filter(|k| k.id != c.id)
            .map(|k| (c.text.as_str(), k.text.as_str()))
            .collect();
        let scores = scorer.match_scores(&pairs)?;
        if scores.iter().any(|s| s.value() > t_match) {
            removed.push(c.id.clone());
        } else {
            kept.push(c);
        }
    }
    Ok((kept.into_iter().map(|c| c.id.clone()).collect(), removed))
}
