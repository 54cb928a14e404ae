//! Gendered probability mass over mask-fill top-k outputs.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::table::{fmt_f64, Table};

pub const MASK_TOKEN: &str = "[MASK]";
pub const DEFAULT_K: usize = 10;

pub const DEFAULT_FEMALE_TOKENS: [&str; 7] =
    ["woman", "female", "f", "she", "girl", "lady", "mother"];
pub const DEFAULT_MALE_TOKENS: [&str; 6] = ["man", "male", "m", "he", "gentleman", "father"];

const MASS_SLACK: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum MaskError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("invalid mask result: {0}")]
    Invalid(String),
    #[error("token sets overlap on {0:?}")]
    Overlap(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TokenProb {
    pub token: String,
    pub prob: f64,
}

/// One sentence with a single `[MASK]` and the model's top-k fills.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskResult {
    pub sentence: String,
    pub model_id: String,
    pub topk: Vec<TokenProb>,
}

impl MaskResult {
    pub fn validate(&self) -> Result<(), MaskError> {
        let masks = self.sentence.matches(MASK_TOKEN).count();
        if masks != 1 {
            return Err(MaskError::Invalid(format!(
                "sentence must contain exactly one {MASK_TOKEN}, found {masks}"
            )));
        }
        if let Some(p) = self.topk.iter().find(|p| !(0.0..=1.0).contains(&p.prob)) {
            return Err(MaskError::Invalid(format!(
                "probability {} for '{}' outside [0, 1]",
                p.prob, p.token
            )));
        }
        let total = self.total_mass();
        if total > 1.0 + MASS_SLACK {
            return Err(MaskError::Invalid(format!("top-k mass {total} exceeds 1")));
        }
        Ok(())
    }

    pub fn total_mass(&self) -> f64 {
        self.topk.iter().map(|p| p.prob).sum()
    }

    /// The `k` most probable entries (stable for ties).
    pub fn truncated(&self, k: usize) -> MaskResult {
        let mut topk = self.topk.clone();
        topk.sort_by(|a, b| b.prob.total_cmp(&a.prob));
        topk.truncate(k);
        MaskResult {
            sentence: self.sentence.clone(),
            model_id: self.model_id.clone(),
            topk,
        }
    }
}

/// Reads mask NDJSON; each record is validated.
pub fn read_mask_ndjson<R: BufRead>(reader: R) -> Result<Vec<MaskResult>, MaskError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let schema = |message: String| MaskError::Schema {
            line: i + 1,
            message,
        };
        let result: MaskResult = serde_json::from_str(&line).map_err(|e| schema(e.to_string()))?;
        result.validate().map_err(|e| schema(e.to_string()))?;
        out.push(result);
    }
    Ok(out)
}

pub fn load_mask_ndjson(path: impl AsRef<Path>) -> Result<Vec<MaskResult>, MaskError> {
    read_mask_ndjson(BufReader::new(File::open(path)?))
}

/// Disjoint, lowercased female and male token sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSets {
    female: BTreeSet<String>,
    male: BTreeSet<String>,
}

impl TokenSets {
    pub fn new<S: AsRef<str>>(
        female: impl IntoIterator<Item = S>,
        male: impl IntoIterator<Item = S>,
    ) -> Result<TokenSets, MaskError> {
        let fold = |it: &mut dyn Iterator<Item = S>| -> BTreeSet<String> {
            it.map(|s| s.as_ref().trim().to_lowercase())
                .filter(|s| !s.is_empty())
                .collect()
        };
        let female = fold(&mut female.into_iter());
        let male = fold(&mut male.into_iter());
        let overlap: Vec<String> = female.intersection(&male).cloned().collect();
        if !overlap.is_empty() {
            return Err(MaskError::Overlap(overlap));
        }
        Ok(TokenSets { female, male })
    }

    pub fn female(&self) -> &BTreeSet<String> {
        &self.female
    }

    pub fn male(&self) -> &BTreeSet<String> {
        &self.male
    }
}

impl Default for TokenSets {
    fn default() -> Self {
        TokenSets::new(DEFAULT_FEMALE_TOKENS, DEFAULT_MALE_TOKENS)
            .expect("default sets are disjoint")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenderMass {
    pub female: f64,
    pub male: f64,
    pub other: f64,
}

impl GenderMass {
    pub fn total(&self) -> f64 {
        self.female + self.male + self.other
    }
}

/// Sums top-k probability over each token set (case-folded); the rest is `other`.
pub fn gender_mass(result: &MaskResult, sets: &TokenSets) -> GenderMass {
    let mut mass = GenderMass {
        female: 0.0,
        male: 0.0,
        other: 0.0,
    };
    for p in &result.topk {
        let token = p.token.trim().to_lowercase();
        if sets.female.contains(&token) {
            mass.female += p.prob;
        } else if sets.male.contains(&token) {
            mass.male += p.prob;
        } else {
            mass.other += p.prob;
        }
    }
    mass
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskRow {
    pub sentence: String,
    pub model_id: String,
    pub mass: GenderMass,
    pub topk_mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskReport {
    pub rows: Vec<MaskRow>,
    pub sets: TokenSets,
    pub k: usize,
}

/// One row per result, in input order, over the top `k` entries of each.
pub fn mask_report(results: &[MaskResult], sets: &TokenSets, k: usize) -> MaskReport {
    let rows = results
        .iter()
        .map(|r| {
            let top = r.truncated(k);
            MaskRow {
                sentence: r.sentence.clone(),
                model_id: r.model_id.clone(),
                mass: gender_mass(&top, sets),
                topk_mass: top.total_mass(),
            }
        })
        .collect();
    MaskReport {
        rows,
        sets: sets.clone(),
        k,
    }
}

impl MaskReport {
    /// Raw masses plus total top-k mass, so renormalized shares can be
    /// recovered. The token sets and `k` are echoed in the preamble.
    pub fn table(&self) -> Table {
        let mut t = Table::new([
            "sentence",
            "model_id",
            "female",
            "male",
            "other",
            "topk_mass",
        ]);
        let join = |s: &BTreeSet<String>| s.iter().cloned().collect::<Vec<_>>().join(" ");
        t.preamble = vec![
            format!("female_tokens: {}", join(&self.sets.female)),
            format!("male_tokens: {}", join(&self.sets.male)),
            format!("k: {}", self.k),
        ];
        for r in &self.rows {
            t.push_row([
                r.sentence.clone(),
                r.model_id.clone(),
                fmt_f64(r.mass.female, 4),
                fmt_f64(r.mass.male, 4),
                fmt_f64(r.mass.other, 4),
                fmt_f64(r.topk_mass, 4),
            ]);
        }
        t
    }
}
