use std::collections::HashSet;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::{KeyPoint, MiningError, Provenance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditKind {
    Keep,
    Drop,
    Rephrase,
}

/// One line of a curation script: `{"op": "rephrase", "kp_id": "pos-004", "new_text": "..."}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditOp {
    pub op: EditKind,
    pub kp_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub new_text: Option<String>,
}

pub fn parse_edit_script<R: BufRead>(reader: R) -> Result<Vec<EditOp>, MiningError> {
    let mut ops = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| MiningError::Curation(e.to_string()))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let op: EditOp =
            serde_json::from_str(trimmed).map_err(|e| MiningError::Curation(format!("line {}: {e}", i + 1)))?;
        ops.push(op);
    }
    Ok(ops)
}

/// Applies `script` in order. Key points not named in the script are kept.
/// Every surviving key point becomes `curated` with its count reset; counts
/// are recomputed when summarizing.
pub fn apply_manual_curation(mut kps: Vec<KeyPoint>, script: &[EditOp]) -> Result<Vec<KeyPoint>, MiningError> {
    let known: HashSet<&str> = kps.iter().map(|k| k.kp_id.as_str()).collect();
    let mut unknown: Vec<String> = script
        .iter()
        .filter(|op| !known.contains(op.kp_id.as_str()))
        .map(|op| op.kp_id.clone())
        .collect();
    if !unknown.is_empty() {
        unknown.dedup();
        return Err(MiningError::UnknownKeyPoints(unknown));
    }
    let mut dropped: HashSet<String> = HashSet::new();
    for (i, op) in script.iter().enumerate() {
        if dropped.contains(&op.kp_id) {
            return Err(MiningError::Curation(format!(
                "op {} ({:?}) targets {} which was already dropped",
                i + 1,
                op.op,
                op.kp_id
            )));
        }
        match op.op {
            EditKind::Keep => {}
            EditKind::Drop => {
                dropped.insert(op.kp_id.clone());
            }
            EditKind::Rephrase => {
                let text = op
                    .new_text
                    .as_deref()
                    .map(str::trim)
                    .filter(|t| !t.is_empty())
                    .ok_or_else(|| {
                        MiningError::Curation(format!("op {}: rephrase of {} has no new_text", i + 1, op.kp_id))
                    })?;
                let kp = kps.iter_mut().find(|k| k.kp_id == op.kp_id).expect("validated above");
                kp.text = text.to_string();
            }
        }
    }
    kps.retain(|k| !dropped.contains(&k.kp_id));
    for kp in &mut kps {
        kp.provenance = Provenance::Curated;
        kp.match_count = 0;
    }
    Ok(kps)
}
