//! Accurate vs conflicting bias, judged against literature prevalence.
//!
//! A bias is accurate when the term leans toward the gender in which the
//! condition is more prevalent, and conflicting when it leans the other way
//! or leans at all while the literature reports no gender difference.

use std::fmt;
use std::fs::File;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use indexmap::IndexMap;
use thiserror::Error;

use crate::bias::BiasRecord;
use crate::table::{fmt_f64, Table};

pub const DEFAULT_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExpectedDirection {
    FemaleHigher,
    MaleHigher,
    Equal,
    Unknown,
}

impl FromStr for ExpectedDirection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "female_higher" => Ok(ExpectedDirection::FemaleHigher),
            "male_higher" => Ok(ExpectedDirection::MaleHigher),
            "equal" => Ok(ExpectedDirection::Equal),
            "unknown" => Ok(ExpectedDirection::Unknown),
            other => Err(format!("unknown direction '{other}'")),
        }
    }
}

impl fmt::Display for ExpectedDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExpectedDirection::FemaleHigher => "female_higher",
            ExpectedDirection::MaleHigher => "male_higher",
            ExpectedDirection::Equal => "equal",
            ExpectedDirection::Unknown => "unknown",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrevalenceRow {
    pub direction: ExpectedDirection,
    pub source: String,
}

#[derive(Debug, Error)]
pub enum ConflictError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("prevalence csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(
        "prevalence file must start with header 'term,expected_direction,source', found '{0}'"
    )]
    Header(String),
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("threshold must lie in [0, 1], got {0}")]
    Threshold(f64),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PrevalenceTable {
    rows: IndexMap<String, PrevalenceRow>,
}

impl PrevalenceTable {
    pub fn insert(&mut self, term: &str, direction: ExpectedDirection, source: &str) -> bool {
        let term = term.trim();
        if self.rows.contains_key(term) {
            return false;
        }
        self.rows.insert(
            term.to_string(),
            PrevalenceRow {
                direction,
                source: source.to_string(),
            },
        );
        true
    }

    /// Exact match first, then case-insensitive.
    pub fn get(&self, term: &str) -> Option<&PrevalenceRow> {
        self.rows.get(term).or_else(|| {
            let folded = term.to_lowercase();
            self.rows
                .iter()
                .find(|(k, _)| k.to_lowercase() == folded)
                .map(|(_, v)| v)
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &PrevalenceRow)> + '_ {
        self.rows.iter().map(|(k, v)| (k.as_str(), v))
    }
}

/// Reads a `term,expected_direction,source` CSV.
pub fn read_prevalence<R: Read>(reader: R) -> Result<PrevalenceTable, ConflictError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["term", "expected_direction", "source"] {
        return Err(ConflictError::Header(
            headers.iter().collect::<Vec<_>>().join(","),
        ));
    }
    let mut table = PrevalenceTable::default();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let row = |message: String| ConflictError::Row { line, message };
        if record.len() != 3 {
            return Err(row(format!("expected 3 columns, found {}", record.len())));
        }
        if record[0].is_empty() {
            return Err(row("empty term".into()));
        }
        let direction: ExpectedDirection = record[1].parse().map_err(row)?;
        if !table.insert(&record[0], direction, &record[2]) {
            return Err(row(format!("duplicate term '{}'", &record[0])));
        }
    }
    Ok(table)
}

pub fn load_prevalence(path: impl AsRef<Path>) -> Result<PrevalenceTable, ConflictError> {
    read_prevalence(File::open(path)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Accurate,
    Conflicting,
    Unassessed,
    BelowThreshold,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Accurate => "accurate",
            Verdict::Conflicting => "conflicting",
            Verdict::Unassessed => "unassessed",
            Verdict::BelowThreshold => "below_threshold",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConflictVerdict {
    pub term: String,
    pub score: f64,
    /// `None` when the term has no prevalence row.
    pub expected: Option<ExpectedDirection>,
    pub verdict: Verdict,
}

/// Labels one signed score.
pub fn classify_score(
    term: &str,
    score: f64,
    table: &PrevalenceTable,
    threshold: f64,
) -> ConflictVerdict {
    let expected = table.get(term).map(|r| r.direction);
    let verdict = match expected {
        None | Some(ExpectedDirection::Unknown) => Verdict::Unassessed,
        Some(_) if score.abs() < threshold => Verdict::BelowThreshold,
        Some(ExpectedDirection::Equal) => Verdict::Conflicting,
        Some(ExpectedDirection::FemaleHigher) if score > 0.0 => Verdict::Accurate,
        Some(ExpectedDirection::MaleHigher) if score < 0.0 => Verdict::Accurate,
        Some(_) => Verdict::Conflicting,
    };
    ConflictVerdict {
        term: term.to_string(),
        score,
        expected,
        verdict,
    }
}

/// Labels every scored record, in input order. Skipped records carry no
/// score and are left out.
pub fn classify(
    records: &[BiasRecord],
    table: &PrevalenceTable,
    threshold: f64,
) -> Result<Vec<ConflictVerdict>, ConflictError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(ConflictError::Threshold(threshold));
    }
    Ok(records
        .iter()
        .filter_map(|r| {
            r.score
                .map(|s| classify_score(&r.term, s, table, threshold))
        })
        .collect())
}

/// `term,score,expected,verdict`
pub fn verdicts_table(verdicts: &[ConflictVerdict]) -> Table {
    let mut t = Table::new(["term", "score", "expected", "verdict"]);
    for v in verdicts {
        t.push_row([
            v.term.clone(),
            fmt_f64(v.score, 6),
            v.expected.map(|d| d.to_string()).unwrap_or_default(),
            v.verdict.to_string(),
        ]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn shipped() -> PrevalenceTable {
        read_prevalence(crate::reference::PREVALENCE_CSV.as_bytes()).unwrap()
    }

    #[test]
    fn loads_rows() {
        let t = read_prevalence(
            "term,expected_direction,source\nDepression,female_higher,doering2011\n".as_bytes(),
        )
        .unwrap();
        assert_eq!(
            t.get("Depression").unwrap().direction,
            ExpectedDirection::FemaleHigher
        );
        assert_eq!(t.get("depression").unwrap().source, "doering2011");
        let t = read_prevalence(
            "term,expected_direction,source\nSchizophrenia,equal,gender_stats\n".as_bytes(),
        )
        .unwrap();
        assert_eq!(
            t.get("Schizophrenia").unwrap().direction,
            ExpectedDirection::Equal
        );
    }

    #[test]
    fn load_errors() {
        assert!(matches!(
            read_prevalence("term,expected_direction,source\nX,sideways,s\n".as_bytes()),
            Err(ConflictError::Row { line: 2, .. })
        ));
        assert!(matches!(
            read_prevalence("term,expected_direction,source\nX,equal,s\nX,equal,t\n".as_bytes()),
            Err(ConflictError::Row { line: 3, .. })
        ));
        assert!(matches!(
            read_prevalence("term,dir\n".as_bytes()),
            Err(ConflictError::Header(_))
        ));
    }

    #[test]
    fn shipped_table_rows() {
        let t = shipped();
        assert_eq!(t.len(), 6);
        assert_eq!(
            t.get("Bipolar disorder").unwrap().source,
            "uncited"
        );
        assert_eq!(
            t.get("Antisocial personality disorder").unwrap().direction,
            ExpectedDirection::MaleHigher
        );
        assert_eq!(
            t.get("Breast cancer").unwrap().direction,
            ExpectedDirection::FemaleHigher
        );
    }

    #[test]
    fn literature_examples() {
        let t = shipped();
        assert_eq!(
            classify_score("Depression", -0.11, &t, 0.05).verdict,
            Verdict::Conflicting
        );
        assert_eq!(
            classify_score("Schizophrenia", 0.06, &t, 0.05).verdict,
            Verdict::Conflicting
        );
        assert_eq!(
            classify_score("Antisocial personality disorder", 0.19, &t, 0.05).verdict,
            Verdict::Conflicting
        );
        assert_eq!(
            classify_score("Breast cancer", 0.3, &t, 0.05).verdict,
            Verdict::Accurate
        );
        assert_eq!(
            classify_score("Antisocial personality disorder", -0.2, &t, 0.05).verdict,
            Verdict::Accurate
        );
        assert_eq!(
            classify_score("Depression", -0.01, &t, 0.05).verdict,
            Verdict::BelowThreshold
        );
        assert_eq!(
            classify_score("Anxiety", 0.5, &t, 0.05).verdict,
            Verdict::Unassessed
        );
        let mut u = PrevalenceTable::default();
        u.insert("Gout", ExpectedDirection::Unknown, "none");
        assert_eq!(
            classify_score("Gout", 0.5, &u, 0.05).verdict,
            Verdict::Unassessed
        );
        assert_eq!(
            classify_score("Gout", 0.0, &u, 0.05).verdict,
            Verdict::Unassessed
        );
    }

    #[test]
    fn classify_filters_skipped_and_checks_threshold() {
        let t = shipped();
        let mut skipped = BiasRecord::scored("Depression", "mental_disorders", 0.0);
        skipped.score = None;
        let records = vec![
            BiasRecord::scored("Schizophrenia", "mental_disorders", 0.2),
            skipped,
        ];
        let v = classify(&records, &t, 0.05).unwrap();
        assert_eq!(v.len(), 1);
        assert!(matches!(
            classify(&records, &t, 1.5),
            Err(ConflictError::Threshold(_))
        ));
        assert_eq!(
            verdicts_table(&v).to_csv(),
            "term,score,expected,verdict\nSchizophrenia,0.200000,equal,conflicting\n"
        );
    }

    fn table_with_all_directions() -> PrevalenceTable {
        let mut t = PrevalenceTable::default();
        t.insert("f", ExpectedDirection::FemaleHigher, "s");
        t.insert("m", ExpectedDirection::MaleHigher, "s");
        t.insert("e", ExpectedDirection::Equal, "s");
        t.insert("u", ExpectedDirection::Unknown, "s");
        t
    }

    proptest! {
        #[test]
        fn full_threshold_never_judges(term in prop::sample::select(vec!["f", "m", "e", "u", "x"]), score in -0.999f64..0.999) {
            let v = classify_score(term, score, &table_with_all_directions(), 1.0);
            prop_assert!(matches!(v.verdict, Verdict::BelowThreshold | Verdict::Unassessed));
        }

        #[test]
        fn negation_swaps_directional_verdicts(term in prop::sample::select(vec!["f", "m", "e", "u", "x"]), score in -1.0f64..1.0, threshold in 0.0f64..0.5) {
            prop_assume!(score != 0.0);
            let t = table_with_all_directions();
            let a = classify_score(term, score, &t, threshold).verdict;
            let b = classify_score(term, -score, &t, threshold).verdict;
            let expected = match (term, a) {
                ("f" | "m", Verdict::Accurate) => Verdict::Conflicting,
                ("f" | "m", Verdict::Conflicting) => Verdict::Accurate,
                _ => a,
            };
            prop_assert_eq!(b, expected);
        }
    }
}
