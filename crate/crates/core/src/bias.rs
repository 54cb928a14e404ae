//! Per-term signed bias and per-category Direct Bias.
//!
//! A term's score is the cosine between its vector and the gender direction;
//! positive leans female. Direct Bias for a set of terms is the mean of the
//! absolute scores, so it lies in `[0, 1]` and is 0 when every term vector is
//! orthogonal to the direction.
//!
//! Static stores have no vectors for multi-word terms: the term is split
//! with [`split_term`], each token is looked up (lowercase fallback), and the
//! found vectors are averaged. Tokens that miss are dropped; a term with no
//! hits is skipped and excluded from the Direct Bias denominator.

use indexmap::IndexMap;
use rayon::prelude::*;
use thiserror::Error;

use crate::embed_io::{SourceKind, VectorStore};
use crate::gender::GenderDirection;
use crate::lexicon::{split_term, TermLexicon};
use crate::linalg::{cosine, mean_pool};
use crate::table::{fmt_f64, Table};

#[derive(Debug, Error, PartialEq)]
pub enum BiasError {
    #[error("gender direction has dimension {direction}, store has {store}")]
    Dimension { store: usize, direction: usize },
    #[error("every record was skipped; Direct Bias is undefined")]
    AllSkipped,
    #[error("lexicon is empty")]
    EmptyLexicon,
}

pub const REASON_NO_TOKENS: &str = "no tokens found";
pub const REASON_ZERO_NORM: &str = "zero-norm vector";

/// Outcome of scoring one term.
#[derive(Debug, Clone, PartialEq)]
pub struct TermBias {
    /// Signed cosine against the gender direction; `None` when skipped.
    pub score: Option<f64>,
    pub resolved_tokens: Vec<String>,
    pub skip_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasRecord {
    pub term: String,
    pub category: String,
    pub subgroup: Option<String>,
    pub score: Option<f64>,
    pub resolved_tokens: Vec<String>,
    pub skip_reason: Option<String>,
}

impl BiasRecord {
    pub fn scored(term: &str, category: &str, score: f64) -> BiasRecord {
        BiasRecord {
            term: term.into(),
            category: category.into(),
            subgroup: None,
            score: Some(score),
            resolved_tokens: vec![term.into()],
            skip_reason: None,
        }
    }

    pub fn is_skipped(&self) -> bool {
        self.score.is_none()
    }

    fn from_term_bias(
        term: &str,
        category: &str,
        subgroup: Option<&str>,
        tb: TermBias,
    ) -> BiasRecord {
        BiasRecord {
            term: term.into(),
            category: category.into(),
            subgroup: subgroup.map(Into::into),
            score: tb.score,
            resolved_tokens: tb.resolved_tokens,
            skip_reason: tb.skip_reason,
        }
    }
}

fn skipped(reason: &str, resolved_tokens: Vec<String>) -> TermBias {
    TermBias {
        score: None,
        resolved_tokens,
        skip_reason: Some(reason.into()),
    }
}

/// Scores one term against `g`. Contextual stores are keyed by the whole
/// term; static stores pool the term's tokens.
pub fn term_bias(
    store: &VectorStore,
    term: &str,
    g: &GenderDirection,
) -> Result<TermBias, BiasError> {
    if store.dimension() != g.dimension() {
        return Err(BiasError::Dimension {
            store: store.dimension(),
            direction: g.dimension(),
        });
    }
    let (resolved, pooled) = match store.source_kind() {
        SourceKind::Contextual => match store.lookup(term) {
            Some((t, v)) => (vec![t.to_string()], v.to_vec()),
            None => return Ok(skipped(REASON_NO_TOKENS, Vec::new())),
        },
        SourceKind::Static => {
            let mut resolved = Vec::new();
            let mut found = Vec::new();
            for token in split_term(term) {
                if let Some((t, v)) = store.lookup(token) {
                    resolved.push(t.to_string());
                    found.push(v);
                }
            }
            if found.is_empty() {
                return Ok(skipped(REASON_NO_TOKENS, Vec::new()));
            }
            let pooled = mean_pool(&found).expect("non-empty, equal-length vectors");
            (resolved, pooled)
        }
    };
    Ok(match cosine(&pooled, g.as_slice()) {
        Ok(score) => TermBias {
            score: Some(score),
            resolved_tokens: resolved,
            skip_reason: None,
        },
        Err(_) => skipped(REASON_ZERO_NORM, resolved),
    })
}

/// Mean absolute score over a set of scores.
pub fn direct_bias_of_scores(scores: impl IntoIterator<Item = f64>) -> Result<f64, BiasError> {
    let (sum, n) = scores
        .into_iter()
        .fold((0.0, 0usize), |(s, n), x| (s + x.abs(), n + 1));
    if n == 0 {
        return Err(BiasError::AllSkipped);
    }
    Ok(sum / n as f64)
}

/// Direct Bias over the non-skipped records.
pub fn direct_bias(records: &[BiasRecord]) -> Result<f64, BiasError> {
    direct_bias_of_scores(records.iter().filter_map(|r| r.score))
}

/// Scores every lexicon term, in lexicon order. Terms are scored in parallel.
pub fn score_lexicon(
    store: &VectorStore,
    lex: &TermLexicon,
    g: &GenderDirection,
) -> Result<Vec<BiasRecord>, BiasError> {
    if lex.is_empty() {
        return Err(BiasError::EmptyLexicon);
    }
    let entries: Vec<_> = lex.iter().collect();
    entries
        .par_iter()
        .map(|(category, e)| {
            term_bias(store, &e.term, g)
                .map(|tb| BiasRecord::from_term_bias(&e.term, category, e.subgroup.as_deref(), tb))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extrema {
    pub max_term: String,
    pub max_score: f64,
    pub min_term: String,
    pub min_score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoryBiasReport {
    pub category: String,
    pub n_scored: usize,
    pub n_skipped: usize,
    /// `None` when every term in the category was skipped.
    pub direct_bias: Option<f64>,
    pub subgroup_breakdown: IndexMap<String, f64>,
    /// Terms with the largest and smallest `|score|` (signed scores kept).
    pub extrema: Option<Extrema>,
}

/// Groups records by category (first-seen order) and summarizes each group.
pub fn summarize(records: &[BiasRecord]) -> Vec<CategoryBiasReport> {
    let mut groups: IndexMap<&str, Vec<&BiasRecord>> = IndexMap::new();
    for r in records {
        groups.entry(r.category.as_str()).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(category, rs)| {
            let scored: Vec<(&BiasRecord, f64)> =
                rs.iter().filter_map(|r| r.score.map(|s| (*r, s))).collect();
            let mut subgroups: IndexMap<&str, Vec<f64>> = IndexMap::new();
            for (r, s) in &scored {
                if let Some(sub) = &r.subgroup {
                    subgroups.entry(sub.as_str()).or_default().push(*s);
                }
            }
            let extrema = scored.first().map(|&(first, s0)| {
                let (mut max, mut min) = ((first, s0), (first, s0));
                for &(r, s) in &scored[1..] {
                    if s.abs() > max.1.abs() {
                        max = (r, s);
                    }
                    if s.abs() < min.1.abs() {
                        min = (r, s);
                    }
                }
                Extrema {
                    max_term: max.0.term.clone(),
                    max_score: max.1,
                    min_term: min.0.term.clone(),
                    min_score: min.1,
                }
            });
            CategoryBiasReport {
                category: category.to_string(),
                n_scored: scored.len(),
                n_skipped: rs.len() - scored.len(),
                direct_bias: direct_bias_of_scores(scored.iter().map(|(_, s)| *s)).ok(),
                subgroup_breakdown: subgroups
                    .into_iter()
                    .map(|(k, v)| {
                        (
                            k.to_string(),
                            direct_bias_of_scores(v).expect("non-empty group"),
                        )
                    })
                    .collect(),
                extrema,
            }
        })
        .collect()
}

/// Scores the lexicon and returns one report per category.
pub fn category_report(
    store: &VectorStore,
    lex: &TermLexicon,
    g: &GenderDirection,
) -> Result<Vec<CategoryBiasReport>, BiasError> {
    Ok(summarize(&score_lexicon(store, lex, g)?))
}

const SCORE_DECIMALS: usize = 6;

/// `term,category,subgroup,score,skipped,reason`
pub fn records_table(records: &[BiasRecord]) -> Table {
    let mut t = Table::new(["term", "category", "subgroup", "score", "skipped", "reason"]);
    for r in records {
        t.push_row([
            r.term.clone(),
            r.category.clone(),
            r.subgroup.clone().unwrap_or_default(),
            r.score
                .map(|s| fmt_f64(s, SCORE_DECIMALS))
                .unwrap_or_default(),
            r.is_skipped().to_string(),
            r.skip_reason.clone().unwrap_or_default(),
        ]);
    }
    t
}

/// One row per category; subgroup breakdowns as `name=value` pairs.
pub fn summary_table(reports: &[CategoryBiasReport]) -> Table {
    let mut t = Table::new([
        "category",
        "n",
        "n_skipped",
        "direct_bias",
        "subgroups",
        "max_term",
        "max_score",
        "min_term",
        "min_score",
    ]);
    for r in reports {
        let subgroups = r
            .subgroup_breakdown
            .iter()
            .map(|(k, v)| format!("{k}={}", fmt_f64(*v, SCORE_DECIMALS)))
            .collect::<Vec<_>>()
            .join(";");
        let (max_term, max_score, min_term, min_score) = match &r.extrema {
            Some(e) => (
                e.max_term.clone(),
                fmt_f64(e.max_score, SCORE_DECIMALS),
                e.min_term.clone(),
                fmt_f64(e.min_score, SCORE_DECIMALS),
            ),
            None => Default::default(),
        };
        t.push_row([
            r.category.clone(),
            r.n_scored.to_string(),
            r.n_skipped.to_string(),
            r.direct_bias
                .map(|b| fmt_f64(b, SCORE_DECIMALS))
                .unwrap_or_default(),
            subgroups,
            max_term,
            max_score,
            min_term,
            min_score,
        ]);
    }
    t
}
