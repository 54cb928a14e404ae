//! Categorized medical term lists and the template sentences used to obtain
//! contextual vectors for them.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use indexmap::IndexMap;
use serde::Serialize;
use thiserror::Error;

use crate::gender::{gendered_words, GenderPair};

pub const MENTAL_DISORDERS: &str = "mental_disorders";
pub const SEXUALLY_TRANSMITTED_DISEASES: &str = "sexually_transmitted_diseases";
pub const PERSONALITY_TRAITS: &str = "personality_traits";

pub const PERSONALITY_SUBGROUPS: [&str; 3] = ["positive", "neutral", "negative"];
pub const STD_SUBGROUPS: [&str; 4] = ["bacterial", "fungal", "viral", "parasitic"];

/// Placeholder replaced by the term in a template.
pub const PLACEHOLDER: &str = "{X}";

/// Subgroups a built-in category accepts; `None` for user categories.
pub fn allowed_subgroups(category: &str) -> Option<&'static [&'static str]> {
    match category {
        PERSONALITY_TRAITS => Some(&PERSONALITY_SUBGROUPS),
        SEXUALLY_TRANSMITTED_DISEASES => Some(&STD_SUBGROUPS),
        MENTAL_DISORDERS => Some(&[]),
        _ => None,
    }
}

/// Splits a term into lookup tokens on whitespace, hyphens and slashes, and
/// trims surrounding brackets and punctuation ("HIV/AIDS" → ["HIV", "AIDS"]).
pub fn split_term(term: &str) -> Vec<&str> {
    term.split(|c: char| c.is_whitespace() || c == '-' || c == '/')
        .map(|t| {
            t.trim_matches(|c: char| {
                matches!(c, '(' | ')' | '[' | ']' | ',' | ';' | ':' | '.' | '"')
            })
        })
        .filter(|t| !t.is_empty())
        .collect()
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("lexicon csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("lexicon must start with header 'term,category,subgroup', found '{0}'")]
    Header(String),
    #[error("line {line}: expected 3 columns, found {found}")]
    Columns { line: u64, found: usize },
    #[error("line {line}: empty term")]
    EmptyTerm { line: u64 },
    #[error("line {line}: empty category")]
    EmptyCategory { line: u64 },
    #[error("line {line}: duplicate term '{term}' in category '{category}'")]
    DuplicateTerm {
        line: u64,
        term: String,
        category: String,
    },
    #[error(
        "line {line}: unknown subgroup '{subgroup}' for category '{category}' (term '{term}')"
    )]
    UnknownSubgroup {
        line: u64,
        term: String,
        category: String,
        subgroup: String,
    },
    #[error("lexicon holds no terms")]
    Empty,
    #[error("template line {line}: {message}")]
    TemplateSyntax { line: usize, message: String },
    #[error("template for '{category}' must contain {PLACEHOLDER} exactly once, found {found}")]
    Placeholder { category: String, found: usize },
    #[error("template for '{category}' contains gendered word '{word}'")]
    GenderedTemplate { category: String, word: String },
    #[error("no template for category '{0}'")]
    MissingTemplate(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermEntry {
    pub term: String,
    pub subgroup: Option<String>,
}

/// Terms grouped by category, in file order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TermLexicon {
    categories: IndexMap<String, Vec<TermEntry>>,
}

impl TermLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one term, enforcing the category invariants.
    pub fn insert(
        &mut self,
        category: &str,
        term: &str,
        subgroup: Option<&str>,
    ) -> Result<(), LexiconError> {
        self.insert_at(0, category, term, subgroup)
    }

    fn insert_at(
        &mut self,
        line: u64,
        category: &str,
        term: &str,
        subgroup: Option<&str>,
    ) -> Result<(), LexiconError> {
        let term = term.trim();
        let category = category.trim();
        if term.is_empty() {
            return Err(LexiconError::EmptyTerm { line });
        }
        if category.is_empty() {
            return Err(LexiconError::EmptyCategory { line });
        }
        let subgroup = subgroup.map(str::trim).filter(|s| !s.is_empty());
        if let (Some(sub), Some(allowed)) = (subgroup, allowed_subgroups(category)) {
            if !allowed.contains(&sub) {
                return Err(LexiconError::UnknownSubgroup {
                    line,
                    term: term.into(),
                    category: category.into(),
                    subgroup: sub.into(),
                });
            }
        }
        let entries = self.categories.entry(category.to_string()).or_default();
        if entries.iter().any(|e| e.term == term) {
            return Err(LexiconError::DuplicateTerm {
                line,
                term: term.into(),
                category: category.into(),
            });
        }
        entries.push(TermEntry {
            term: term.to_string(),
            subgroup: subgroup.map(str::to_string),
        });
        Ok(())
    }

    pub fn categories(&self) -> impl Iterator<Item = (&str, &[TermEntry])> + '_ {
        self.categories
            .iter()
            .map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn category(&self, name: &str) -> Option<&[TermEntry]> {
        self.categories.get(name).map(Vec::as_slice)
    }

    /// Every `(category, entry)` in lexicon order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &TermEntry)> + '_ {
        self.categories
            .iter()
            .flat_map(|(c, es)| es.iter().map(move |e| (c.as_str(), e)))
    }

    pub fn len(&self) -> usize {
        self.categories.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn counts(&self) -> IndexMap<String, usize> {
        self.categories
            .iter()
            .map(|(k, v)| (k.clone(), v.len()))
            .collect()
    }

    /// Subgroup → count for one category, in first-seen order.
    pub fn subgroup_counts(&self, category: &str) -> IndexMap<String, usize> {
        let mut out = IndexMap::new();
        for e in self.category(category).unwrap_or(&[]) {
            if let Some(s) = &e.subgroup {
                *out.entry(s.clone()).or_insert(0) += 1;
            }
        }
        out
    }

    /// Terms containing a word from the gender pair list. These are kept and
    /// scored, but an auditor should know about them.
    pub fn gendered_terms(&self, pairs: &[GenderPair]) -> Vec<GenderedTerm> {
        let words = gendered_words(pairs);
        self.iter()
            .filter_map(|(category, e)| {
                let hits = gendered_tokens(&e.term, &words);
                (!hits.is_empty()).then(|| GenderedTerm {
                    category: category.to_string(),
                    term: e.term.clone(),
                    words: hits,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenderedTerm {
    pub category: String,
    pub term: String,
    pub words: Vec<String>,
}

fn gendered_tokens(text: &str, words: &HashSet<String>) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '\''))
        .map(str::to_lowercase)
        .filter(|t| words.contains(t))
        .collect()
}

/// Reads a `term,category,subgroup` CSV (subgroup may be empty).
pub fn read_lexicon<R: Read>(reader: R) -> Result<TermLexicon, LexiconError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let names: Vec<&str> = headers.iter().map(str::trim).collect();
    if names != ["term", "category", "subgroup"] {
        return Err(LexiconError::Header(names.join(",")));
    }
    let mut lex = TermLexicon::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            return Err(LexiconError::Columns {
                line,
                found: record.len(),
            });
        }
        lex.insert_at(line, &record[1], &record[0], Some(&record[2]))?;
    }
    if lex.is_empty() {
        return Err(LexiconError::Empty);
    }
    Ok(lex)
}

pub fn load_lexicon(path: impl AsRef<Path>) -> Result<TermLexicon, LexiconError> {
    read_lexicon(File::open(path)?)
}

/// Expected sizes of the shipped reference lexicon.
pub const REFERENCE_COUNTS: [(&str, usize); 3] = [
    (MENTAL_DISORDERS, 221),
    (SEXUALLY_TRANSMITTED_DISEASES, 15),
    (PERSONALITY_TRAITS, 639),
];

pub const REFERENCE_TRAIT_SUBGROUPS: [(&str, usize); 3] =
    [("positive", 236), ("neutral", 111), ("negative", 292)];

/// Warnings for every reference category whose size deviates from the
/// reference counts. Deviations are expected for rebuilt lists.
pub fn check_reference_counts(lex: &TermLexicon) -> Vec<String> {
    let counts = lex.counts();
    let mut warnings = Vec::new();
    for (category, expected) in REFERENCE_COUNTS {
        let found = counts.get(category).copied().unwrap_or(0);
        if found != expected {
            warnings.push(format!(
                "category '{category}' holds {found} terms, reference list has {expected}"
            ));
        }
    }
    if counts.contains_key(PERSONALITY_TRAITS) {
        let subs = lex.subgroup_counts(PERSONALITY_TRAITS);
        for (sub, expected) in REFERENCE_TRAIT_SUBGROUPS {
            let found = subs.get(sub).copied().unwrap_or(0);
            if found != expected {
                warnings.push(format!(
                    "personality_traits/{sub} holds {found} terms, reference list has {expected}"
                ));
            }
        }
    }
    warnings
}

/// Category → template sentence with one `{X}` placeholder.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TemplateSet {
    templates: IndexMap<String, String>,
}

impl TemplateSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, category: &str, template: &str) -> Result<(), LexiconError> {
        let found = template.matches(PLACEHOLDER).count();
        if found != 1 {
            return Err(LexiconError::Placeholder {
                category: category.to_string(),
                found,
            });
        }
        self.templates
            .insert(category.to_string(), template.to_string());
        Ok(())
    }

    pub fn get(&self, category: &str) -> Option<&str> {
        self.templates.get(category).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> + '_ {
        self.templates.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Fails if any template contains a word from the gender pair list.
    pub fn check_gender_neutral(&self, pairs: &[GenderPair]) -> Result<(), LexiconError> {
        let words = gendered_words(pairs);
        for (category, template) in &self.templates {
            if let Some(word) = gendered_tokens(&template.replace(PLACEHOLDER, " "), &words)
                .into_iter()
                .next()
            {
                return Err(LexiconError::GenderedTemplate {
                    category: category.clone(),
                    word,
                });
            }
        }
        Ok(())
    }
}

/// Parses `category = template` lines. Blank lines and `#` comments are skipped.
pub fn read_templates<R: BufRead>(reader: R) -> Result<TemplateSet, LexiconError> {
    let mut set = TemplateSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let syntax = |message: String| LexiconError::TemplateSyntax {
            line: i + 1,
            message,
        };
        let (key, value) = trimmed
            .split_once('=')
            .ok_or_else(|| syntax("expected 'category = template'".into()))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(syntax("empty category".into()));
        }
        if set.templates.contains_key(key) {
            return Err(syntax(format!("duplicate category '{key}'")));
        }
        set.insert(key, value).map_err(|e| syntax(e.to_string()))?;
    }
    Ok(set)
}

pub fn load_templates(path: impl AsRef<Path>) -> Result<TemplateSet, LexiconError> {
    read_templates(BufReader::new(File::open(path)?))
}

/// One extractor input line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RenderedSentence {
    pub term: String,
    pub category: String,
    pub template_id: String,
    pub sentence: String,
}

/// One sentence per lexicon term, `{X}` replaced verbatim. The category name
/// doubles as the template id.
pub fn render_templates(
    lex: &TermLexicon,
    templates: &TemplateSet,
) -> Result<Vec<RenderedSentence>, LexiconError> {
    let mut out = Vec::with_capacity(lex.len());
    for (category, entries) in lex.categories() {
        let template = templates
            .get(category)
            .ok_or_else(|| LexiconError::MissingTemplate(category.to_string()))?;
        for e in entries {
            out.push(RenderedSentence {
                term: e.term.clone(),
                category: category.to_string(),
                template_id: category.to_string(),
                sentence: template.replacen(PLACEHOLDER, &e.term, 1),
            });
        }
    }
    Ok(out)
}
