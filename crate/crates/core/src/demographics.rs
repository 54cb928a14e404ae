//! Descriptive statistics over cohort CSV exports.
//!
//! Nothing here knows about a particular hospital schema: callers name the
//! key, category, code and timestamp columns. Missing values (empty cells,
//! "not specified", "unknown" by default) stay out of percentage
//! denominators but are still reported as their own row.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::Read;
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime};
use thiserror::Error;

use crate::table::{fmt_f64, Table};

pub const UNMAPPED: &str = "unmapped";
pub const MISSING_LABEL: &str = "(missing)";
pub const DEFAULT_MISSING: [&str; 3] = ["", "not specified", "unknown"];

#[derive(Debug, Error)]
pub enum DemographicsError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: expected {expected} fields, found {found}")]
    Ragged {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("duplicate column '{0}'")]
    DuplicateColumn(String),
    #[error("unknown column '{0}'")]
    UnknownColumn(String),
    #[error("line {line}: empty key in column '{column}'")]
    EmptyKey { line: u64, column: String },
    #[error("malformed ICD-9 code '{0}'")]
    MalformedCode(String),
    #[error("chapter map line {line}: {message}")]
    ChapterMap { line: u64, message: String },
    #[error("line {line}: cannot parse timestamp '{value}'")]
    Timestamp { line: u64, value: String },
}

type Result<T> = std::result::Result<T, DemographicsError>;

#[derive(Debug, Clone, PartialEq)]
pub struct CohortTable {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
    key: usize,
    missing: HashSet<String>,
}

impl CohortTable {
    /// Builds a table, checking shape and key presence. Row numbers in
    /// errors are 1-based data lines after the header (header is line 1).
    pub fn new<S: Into<String>>(
        columns: impl IntoIterator<Item = S>,
        rows: Vec<Vec<String>>,
        key_column: &str,
    ) -> Result<Self> {
        let columns: Vec<String> = columns.into_iter().map(Into::into).collect();
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.as_str()) {
                return Err(DemographicsError::DuplicateColumn(c.clone()));
            }
        }
        let key = columns
            .iter()
            .position(|c| c == key_column)
            .ok_or_else(|| DemographicsError::UnknownColumn(key_column.to_string()))?;
        for (i, row) in rows.iter().enumerate() {
            let line = i as u64 + 2;
            if row.len() != columns.len() {
                return Err(DemographicsError::Ragged {
                    line,
                    expected: columns.len(),
                    found: row.len(),
                });
            }
            if row[key].trim().is_empty() {
                return Err(DemographicsError::EmptyKey {
                    line,
                    column: key_column.to_string(),
                });
            }
        }
        Ok(CohortTable {
            columns,
            rows,
            key,
            missing: DEFAULT_MISSING.iter().map(|s| s.to_string()).collect(),
        })
    }

    pub fn read<R: Read>(reader: R, key_column: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
        let columns: Vec<String> = rdr
            .headers()?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let rows = rdr
            .records()
            .map(|r| r.map(|rec| rec.iter().map(str::to_string).collect()))
            .collect::<std::result::Result<Vec<Vec<String>>, _>>()?;
        CohortTable::new(columns, rows, key_column)
    }

    pub fn load(path: impl AsRef<Path>, key_column: &str) -> Result<Self> {
        CohortTable::read(File::open(path)?, key_column)
    }

    /// Replaces the set of values treated as missing (compared trimmed and
    /// case-insensitively).
    pub fn with_missing<S: AsRef<str>>(mut self, tokens: impl IntoIterator<Item = S>) -> Self {
        self.missing = tokens
            .into_iter()
            .map(|s| s.as_ref().trim().to_lowercase())
            .collect();
        self
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn key_column(&self) -> &str {
        &self.columns[self.key]
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| DemographicsError::UnknownColumn(name.to_string()))
    }

    pub fn column<'a>(&'a self, name: &str) -> Result<impl Iterator<Item = &'a str> + 'a> {
        let idx = self.column_index(name)?;
        Ok(self.rows.iter().map(move |r| r[idx].as_str()))
    }

    pub fn is_missing(&self, value: &str) -> bool {
        self.missing.contains(&value.trim().to_lowercase())
    }
}

/// Rounds to `decimals` places with ties away from zero.
pub fn round_half_up(x: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    (x * scale).round() / scale
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoryCount {
    pub value: String,
    pub count: usize,
    /// Share of non-missing rows; `None` for the missing row.
    pub percentage: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalSummary {
    pub column: String,
    pub non_missing: usize,
    pub rows: Vec<CategoryCount>,
    pub missing: usize,
}

fn by_count_then_value(a: &(String, usize), b: &(String, usize)) -> Ordering {
    b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0))
}

pub fn summarize_categorical(t: &CohortTable, column: &str) -> Result<CategoricalSummary> {
    let mut counts: HashMap<String, usize> = HashMap::new();
    let mut missing = 0;
    for v in t.column(column)? {
        if t.is_missing(v) {
            missing += 1;
        } else {
            *counts.entry(v.trim().to_string()).or_default() += 1;
        }
    }
    let non_missing = t.len() - missing;
    let mut sorted: Vec<(String, usize)> = counts.into_iter().collect();
    sorted.sort_by(by_count_then_value);
    let mut rows: Vec<CategoryCount> = sorted
        .into_iter()
        .map(|(value, count)| CategoryCount {
            value,
            count,
            percentage: Some(100.0 * count as f64 / non_missing as f64),
        })
        .collect();
    if missing > 0 {
        rows.push(CategoryCount {
            value: MISSING_LABEL.to_string(),
            count: missing,
            percentage: None,
        });
    }
    Ok(CategoricalSummary {
        column: column.to_string(),
        non_missing,
        rows,
        missing,
    })
}

impl CategoricalSummary {
    /// `decimals` controls only the displayed percentage.
    pub fn table(&self, decimals: u32) -> Table {
        let mut t = Table::new(["value", "count", "percentage"]);
        t.preamble = vec![
            format!("column: {}", self.column),
            format!("non_missing: {}", self.non_missing),
        ];
        for r in &self.rows {
            let pct = r
                .percentage
                .map(|p| fmt_f64(round_half_up(p, decimals), decimals as usize))
                .unwrap_or_default();
            t.push_row([r.value.clone(), r.count.to_string(), pct]);
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Crosstab {
    pub row_column: String,
    pub col_column: String,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub counts: Vec<Vec<usize>>,
    /// Row-normalized percentages; the last row is the totals row.
    pub percentages: Vec<Vec<f64>>,
}

/// Rows with a missing value in either column are left out.
pub fn crosstab(t: &CohortTable, row_col: &str, col_col: &str) -> Result<Crosstab> {
    let ri = t.column_index(row_col)?;
    let ci = t.column_index(col_col)?;
    let mut pairs = Vec::new();
    let mut row_totals: HashMap<String, usize> = HashMap::new();
    let mut col_totals: HashMap<String, usize> = HashMap::new();
    for row in &t.rows {
        let (r, c) = (&row[ri], &row[ci]);
        if t.is_missing(r) || t.is_missing(c) {
            continue;
        }
        let (r, c) = (r.trim().to_string(), c.trim().to_string());
        *row_totals.entry(r.clone()).or_default() += 1;
        *col_totals.entry(c.clone()).or_default() += 1;
        pairs.push((r, c));
    }
    let order = |m: HashMap<String, usize>| {
        let mut v: Vec<(String, usize)> = m.into_iter().collect();
        v.sort_by(by_count_then_value);
        v.into_iter().map(|(k, _)| k).collect::<Vec<_>>()
    };
    let row_labels = order(row_totals);
    let col_labels = order(col_totals);
    let r_idx: HashMap<&str, usize> = row_labels
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let c_idx: HashMap<&str, usize> = col_labels
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();

    let mut counts = vec![vec![0usize; col_labels.len()]; row_labels.len() + 1];
    for (r, c) in &pairs {
        let (i, j) = (r_idx[r.as_str()], c_idx[c.as_str()]);
        counts[i][j] += 1;
        counts[row_labels.len()][j] += 1;
    }
    let percentages = counts
        .iter()
        .map(|row| {
            let total: usize = row.iter().sum();
            row.iter()
                .map(|&c| {
                    if total == 0 {
                        0.0
                    } else {
                        100.0 * c as f64 / total as f64
                    }
                })
                .collect()
        })
        .collect();
    Ok(Crosstab {
        row_column: row_col.to_string(),
        col_column: col_col.to_string(),
        row_labels,
        col_labels,
        counts,
        percentages,
    })
}

impl Crosstab {
    pub fn table(&self, decimals: u32) -> Table {
        let mut headers = vec![format!("{} \\ {}", self.row_column, self.col_column)];
        headers.extend(self.col_labels.iter().cloned());
        headers.push("n".to_string());
        let mut t = Table::new(headers);
        let labels = self.row_labels.iter().map(String::as_str).chain(["total"]);
        for ((label, pcts), counts) in labels.zip(&self.percentages).zip(&self.counts) {
            let mut cells = vec![label.to_string()];
            cells.extend(
                pcts.iter()
                    .map(|&p| fmt_f64(round_half_up(p, decimals), decimals as usize)),
            );
            cells.push(counts.iter().sum::<usize>().to_string());
            t.push_row(cells);
        }
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum CodeKind {
    Numeric,
    V,
    E,
}

/// Parses the chapter-defining prefix of an ICD-9 code: three digits for
/// numeric codes, `V` plus two digits, or `E` plus three digits. A dotted
/// or undotted subdivision of up to two digits (one for E codes) may follow.
fn code_prefix(code: &str) -> Option<(CodeKind, u32)> {
    let code = code.trim();
    let (kind, rest, width, max_sub) = match code.chars().next()? {
        'V' | 'v' => (CodeKind::V, &code[1..], 2, 2),
        'E' | 'e' => (CodeKind::E, &code[1..], 3, 1),
        c if c.is_ascii_digit() => (CodeKind::Numeric, code, 3, 2),
        _ => return None,
    };
    let (head, sub) = match rest.split_once('.') {
        Some((h, s)) if !s.is_empty() => (h, s),
        Some(_) => return None,
        None if rest.len() >= width => rest.split_at(width),
        None => return None,
    };
    let all_digits = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
    if head.len() != width || !all_digits(head) || !all_digits(sub) || sub.len() > max_sub {
        return None;
    }
    Some((kind, head.parse().ok()?))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChapterRange {
    kind: CodeKind,
    start: u32,
    end: u32,
    pub label: String,
}

/// Ordered, non-overlapping ICD-9 prefix ranges with labels.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ChapterMap {
    ranges: Vec<ChapterRange>,
}

impl ChapterMap {
    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers: Vec<String> = rdr
            .headers()?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        if headers != ["start", "end", "label"] {
            return Err(DemographicsError::ChapterMap {
                line: 1,
                message: format!(
                    "expected header start,end,label, found {}",
                    headers.join(",")
                ),
            });
        }
        let mut ranges: Vec<ChapterRange> = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = i as u64 + 2;
            let err = |message: String| DemographicsError::ChapterMap { line, message };
            let parse =
                |s: &str| code_prefix(s).ok_or_else(|| err(format!("malformed code '{s}'")));
            let (ks, start) = parse(&rec[0])?;
            let (ke, end) = parse(&rec[1])?;
            if ks != ke || start > end {
                return Err(err(format!("invalid range {}..{}", &rec[0], &rec[1])));
            }
            let label = rec[2].trim().to_string();
            if label.is_empty() {
                return Err(err("empty label".into()));
            }
            if let Some(r) = ranges
                .iter()
                .find(|r| r.kind == ks && r.start <= end && start <= r.end)
            {
                return Err(err(format!(
                    "range {}..{} overlaps '{}'",
                    &rec[0], &rec[1], r.label
                )));
            }
            ranges.push(ChapterRange {
                kind: ks,
                start,
                end,
                label,
            });
        }
        Ok(ChapterMap { ranges })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        ChapterMap::read(File::open(path)?)
    }

    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.ranges.iter().map(|r| r.label.as_str())
    }
}

pub fn icd9_chapter<'a>(code: &str, map: &'a ChapterMap) -> Result<&'a str> {
    let (kind, n) =
        code_prefix(code).ok_or_else(|| DemographicsError::MalformedCode(code.to_string()))?;
    Ok(map
        .ranges
        .iter()
        .find(|r| r.kind == kind && r.start <= n && n <= r.end)
        .map(|r| r.label.as_str())
        .unwrap_or(UNMAPPED))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChapterCount {
    pub chapter: String,
    /// Diagnosis rows coded into this chapter.
    pub diagnoses: usize,
    /// Distinct admissions with at least one diagnosis in this chapter.
    pub admissions: usize,
    pub percentage: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChapterDistribution {
    pub rows: Vec<ChapterCount>,
    pub total_diagnoses: usize,
    pub total_admissions: usize,
    pub missing_codes: usize,
}

/// Counts diagnoses per chapter, both per diagnosis row and per distinct
/// admission. Percentages are over coded diagnosis rows. Rows with a missing
/// code are counted separately; a malformed code is an error.
pub fn chapter_distribution(
    t: &CohortTable,
    code_col: &str,
    admission_col: Option<&str>,
    map: &ChapterMap,
) -> Result<ChapterDistribution> {
    let ci = t.column_index(code_col)?;
    let ai = match admission_col {
        Some(c) => t.column_index(c)?,
        None => t.key,
    };
    let mut diag: HashMap<&str, usize> = HashMap::new();
    let mut adm: HashMap<&str, HashSet<&str>> = HashMap::new();
    let mut all_adm = BTreeSet::new();
    let mut missing_codes = 0;
    for row in &t.rows {
        let code = &row[ci];
        if t.is_missing(code) {
            missing_codes += 1;
            continue;
        }
        let chapter = icd9_chapter(code, map)?;
        *diag.entry(chapter).or_default() += 1;
        adm.entry(chapter).or_default().insert(row[ai].trim());
        all_adm.insert(row[ai].trim());
    }
    let total: usize = diag.values().sum();
    let mut sorted: Vec<(String, usize)> = diag.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    sorted.sort_by(by_count_then_value);
    let rows = sorted
        .into_iter()
        .map(|(chapter, n)| ChapterCount {
            admissions: adm[chapter.as_str()].len(),
            percentage: 100.0 * n as f64 / total as f64,
            diagnoses: n,
            chapter,
        })
        .collect();
    Ok(ChapterDistribution {
        rows,
        total_diagnoses: total,
        total_admissions: all_adm.len(),
        missing_codes,
    })
}

impl ChapterDistribution {
    pub fn table(&self, decimals: u32) -> Table {
        let mut t = Table::new(["chapter", "diagnoses", "admissions", "percentage"]);
        t.preamble = vec![
            format!("diagnoses: {}", self.total_diagnoses),
            format!("admissions: {}", self.total_admissions),
            format!("missing_codes: {}", self.missing_codes),
        ];
        for r in &self.rows {
            t.push_row([
                r.chapter.clone(),
                r.diagnoses.to_string(),
                r.admissions.to_string(),
                fmt_f64(round_half_up(r.percentage, decimals), decimals as usize),
            ]);
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaySummary {
    pub n: usize,
    pub min_days: Option<f64>,
    pub mean_days: Option<f64>,
    pub max_days: Option<f64>,
    /// Stays whose discharge precedes admission. They are excluded from the
    /// statistics and surfaced as a data-quality warning.
    pub negative: usize,
    pub missing: usize,
}

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S")
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S"))
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M"))
        .ok()
        .or_else(|| {
            NaiveDate::parse_from_str(s, "%Y-%m-%d")
                .ok()?
                .and_hms_opt(0, 0, 0)
        })
}

pub fn length_of_stay(
    t: &CohortTable,
    admit_col: &str,
    discharge_col: &str,
) -> Result<StaySummary> {
    let ai = t.column_index(admit_col)?;
    let di = t.column_index(discharge_col)?;
    let mut days = Vec::new();
    let (mut negative, mut missing) = (0, 0);
    for (i, row) in t.rows.iter().enumerate() {
        let (a, d) = (&row[ai], &row[di]);
        if t.is_missing(a) || t.is_missing(d) {
            missing += 1;
            continue;
        }
        let line = i as u64 + 2;
        let parse = |v: &str| {
            parse_timestamp(v).ok_or_else(|| DemographicsError::Timestamp {
                line,
                value: v.to_string(),
            })
        };
        let stay = (parse(d)? - parse(a)?).num_seconds() as f64 / 86_400.0;
        if stay < 0.0 {
            negative += 1;
        } else {
            days.push(stay);
        }
    }
    let n = days.len();
    let (min, max) = days
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &d| {
            (lo.min(d), hi.max(d))
        });
    Ok(StaySummary {
        n,
        min_days: (n > 0).then_some(min),
        mean_days: (n > 0).then(|| days.iter().sum::<f64>() / n as f64),
        max_days: (n > 0).then_some(max),
        negative,
        missing,
    })
}

impl StaySummary {
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.negative > 0 {
            w.push(format!("{} stays end before they begin", self.negative));
        }
        w
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new([
            "n",
            "min_days",
            "mean_days",
            "max_days",
            "negative",
            "missing",
        ]);
        t.preamble = self
            .warnings()
            .into_iter()
            .map(|w| format!("warning: {w}"))
            .collect();
        let cell = |x: Option<f64>| x.map(|v| fmt_f64(v, 2)).unwrap_or_default();
        t.push_row([
            self.n.to_string(),
            cell(self.min_days),
            cell(self.mean_days),
            cell(self.max_days),
            self.negative.to_string(),
            self.missing.to_string(),
        ]);
        t
    }
}
