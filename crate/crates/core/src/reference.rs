//! Reference data shipped with the crate.
//!
//! * `LEXICON_CSV`: mental disorders, sexually transmitted diseases and
//!   personality traits (with subgroups), rebuilt from public sources.
//! * `DEFINITIONAL_PAIRS_CSV`: the ten commonly used definitional gender
//!   pairs, female word first.
//! * `TEMPLATES_TXT`: one neutral sentence template per category.
//! * `PREVALENCE_CSV`: literature-expected gender direction for the few
//!   terms with a published prevalence claim.
//! * `ICD9_CHAPTERS_CSV`: ICD-9-CM chapter ranges plus V and E buckets.

pub const LEXICON_CSV: &str = include_str!("../data/reference_lexicon.csv");
pub const DEFINITIONAL_PAIRS_CSV: &str = include_str!("../data/definitional_pairs.csv");
pub const TEMPLATES_TXT: &str = include_str!("../data/templates.txt");
pub const PREVALENCE_CSV: &str = include_str!("../data/prevalence.csv");
pub const ICD9_CHAPTERS_CSV: &str = include_str!("../data/icd9_chapters.csv");
