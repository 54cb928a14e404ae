//! Oriented gender direction from definitional word pairs.
//!
//! Each resolvable `(female, male)` pair is centered on its midpoint, the
//! centered rows go through [`principal_component`], and the sign of the
//! result is fixed so that the centered female rows have a positive mean
//! cosine with it. A positive cosine against the direction therefore means
//! female-leaning.

use std::collections::HashSet;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use thiserror::Error;

use crate::embed_io::VectorStore;
use crate::linalg::{
    self, cosine, pair_center, principal_component, LinalgError, PowerIterationOptions,
};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GenderPair {
    pub female: String,
    pub male: String,
}

impl GenderPair {
    pub fn new(
        female: impl Into<String>,
        male: impl Into<String>,
    ) -> Result<GenderPair, GenderError> {
        let (female, male) = (female.into(), male.into());
        if female.trim().is_empty() || male.trim().is_empty() {
            return Err(GenderError::InvalidPair(format!(
                "empty word in ({female}, {male})"
            )));
        }
        if female == male {
            return Err(GenderError::InvalidPair(format!(
                "identical words ({female}, {male})"
            )));
        }
        Ok(GenderPair { female, male })
    }

    pub fn swapped(&self) -> GenderPair {
        GenderPair {
            female: self.male.clone(),
            male: self.female.clone(),
        }
    }
}

#[derive(Debug, Error)]
pub enum GenderError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("gender pair file: {0}")]
    Csv(#[from] csv::Error),
    #[error("gender pair file must start with header 'female,male', found '{0}'")]
    Header(String),
    #[error("malformed gender pair at line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("invalid gender pair: {0}")]
    InvalidPair(String),
    #[error("gender pair file holds no pairs")]
    Empty,
    #[error("none of the {0} gender pairs resolve in the vector store")]
    NoResolvablePairs(usize),
    #[error("degenerate gender subspace: {0}")]
    Degenerate(#[from] LinalgError),
    #[error("direction has dimension {found}, expected {expected}")]
    Dimension { expected: usize, found: usize },
}

/// Reads a `female,male` CSV.
pub fn read_gender_pairs<R: Read>(reader: R) -> Result<Vec<GenderPair>, GenderError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() {
        return Err(GenderError::Empty);
    }
    if headers.len() != 2 || &headers[0] != "female" || &headers[1] != "male" {
        return Err(GenderError::Header(
            headers.iter().collect::<Vec<_>>().join(","),
        ));
    }
    let mut pairs = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(GenderError::Row {
                line,
                message: format!("expected 2 columns, found {}", record.len()),
            });
        }
        let pair = GenderPair::new(&record[0], &record[1]).map_err(|e| GenderError::Row {
            line,
            message: e.to_string(),
        })?;
        pairs.push(pair);
    }
    if pairs.is_empty() {
        return Err(GenderError::Empty);
    }
    Ok(pairs)
}

pub fn load_gender_pairs(path: impl AsRef<Path>) -> Result<Vec<GenderPair>, GenderError> {
    read_gender_pairs(File::open(path)?)
}

/// Lowercased set of every word in the pair list.
pub fn gendered_words(pairs: &[GenderPair]) -> HashSet<String> {
    pairs
        .iter()
        .flat_map(|p| [p.female.to_lowercase(), p.male.to_lowercase()])
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DirectionDiagnostics {
    pub top_eigenvalue: f64,
    pub second_eigenvalue: f64,
    /// `λ₂ / λ₁` of the centered pair matrix's Gram matrix.
    pub eigenvalue_ratio: f64,
    pub iterations: usize,
    pub degenerate: bool,
    pub pairs_used: Vec<GenderPair>,
    pub pairs_skipped: Vec<GenderPair>,
    /// Pooling recorded by a contextual store, if any.
    pub pooling: Option<String>,
    pub warnings: Vec<String>,
}

/// Unit vector whose positive side is female-leaning.
#[derive(Debug, Clone, PartialEq)]
pub struct GenderDirection {
    vector: Vec<f64>,
    pub diagnostics: DirectionDiagnostics,
}

impl GenderDirection {
    /// Wraps an externally supplied direction, normalizing it to unit length.
    pub fn from_vector(mut vector: Vec<f64>) -> Result<GenderDirection, GenderError> {
        let n = linalg::norm(&vector);
        if !(n > 0.0 && n.is_finite()) {
            return Err(GenderError::Degenerate(LinalgError::ZeroNorm));
        }
        vector.iter_mut().for_each(|x| *x /= n);
        Ok(GenderDirection {
            vector,
            diagnostics: DirectionDiagnostics::default(),
        })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.vector
    }

    pub fn dimension(&self) -> usize {
        self.vector.len()
    }

    pub fn negated(&self) -> GenderDirection {
        GenderDirection {
            vector: self.vector.iter().map(|x| -x).collect(),
            diagnostics: self.diagnostics.clone(),
        }
    }
}

/// Derives the oriented gender direction. Pairs with a word missing from
/// `store` (after the lowercase fallback) are skipped and listed in the
/// diagnostics.
pub fn gender_direction(
    store: &VectorStore,
    pairs: &[GenderPair],
    opts: &PowerIterationOptions,
) -> Result<GenderDirection, GenderError> {
    let mut used = Vec::new();
    let mut skipped = Vec::new();
    let mut vectors = Vec::new();
    for pair in pairs {
        match (store.lookup(&pair.female), store.lookup(&pair.male)) {
            (Some((_, f)), Some((_, m))) => {
                vectors.push((f, m));
                used.push(pair.clone());
            }
            _ => skipped.push(pair.clone()),
        }
    }
    if vectors.is_empty() {
        return Err(GenderError::NoResolvablePairs(pairs.len()));
    }

    let centered = pair_center(&vectors)?;
    let pc = principal_component(&centered, opts)?;
    let mut vector = pc.vector.clone();

    let mut warnings = Vec::new();
    // Even rows of the centered matrix are the female words.
    let female_cosines: Vec<f64> = centered
        .iter_rows()
        .step_by(2)
        .filter_map(|row| cosine(row, &vector).ok())
        .collect();
    let anchor = female_cosines.iter().sum::<f64>() / female_cosines.len().max(1) as f64;
    if anchor < 0.0 {
        vector.iter_mut().for_each(|x| *x = -*x);
    } else if anchor == 0.0 {
        warnings.push(
            "female rows have zero mean cosine with the component; orientation is arbitrary".into(),
        );
    }
    if pc.degenerate {
        warnings.push(format!(
            "top two eigenvalues are within {:e} relative (ratio {:.12}); gender direction is ill-defined",
            linalg::DEGENERACY_GAP,
            pc.eigenvalue_ratio()
        ));
    }

    Ok(GenderDirection {
        vector,
        diagnostics: DirectionDiagnostics {
            top_eigenvalue: pc.eigenvalue,
            second_eigenvalue: pc.second_eigenvalue,
            eigenvalue_ratio: pc.eigenvalue_ratio(),
            iterations: pc.iterations,
            degenerate: pc.degenerate,
            pairs_used: used,
            pairs_skipped: skipped,
            pooling: store.metadata().get("pooling").cloned(),
            warnings,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed_io::SourceKind;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn opts() -> PowerIterationOptions {
        PowerIterationOptions::default()
    }

    #[test]
    fn reads_pairs() {
        let pairs = read_gender_pairs("female,male\nshe,he\nwoman,man".as_bytes()).unwrap();
        assert_eq!(
            pairs,
            vec![
                GenderPair::new("she", "he").unwrap(),
                GenderPair::new("woman", "man").unwrap()
            ]
        );
    }

    #[test]
    fn rejects_bad_pair_files() {
        assert!(matches!(
            read_gender_pairs("female,male\nshe\n".as_bytes()),
            Err(GenderError::Row { line: 2, .. })
        ));
        assert!(matches!(
            read_gender_pairs("".as_bytes()),
            Err(GenderError::Empty)
        ));
        assert!(matches!(
            read_gender_pairs("female,male\n".as_bytes()),
            Err(GenderError::Empty)
        ));
        assert!(matches!(
            read_gender_pairs("male,female\nhe,she\n".as_bytes()),
            Err(GenderError::Header(_))
        ));
        assert!(matches!(
            read_gender_pairs("female,male\nshe,she\n".as_bytes()),
            Err(GenderError::Row { .. })
        ));
        assert!(matches!(
            read_gender_pairs("female,male\n,he\n".as_bytes()),
            Err(GenderError::Row { .. })
        ));
    }

    #[test]
    fn shipped_pairs_count() {
        let pairs = read_gender_pairs(crate::reference::DEFINITIONAL_PAIRS_CSV.as_bytes()).unwrap();
        assert_eq!(pairs.len(), 10);
        assert!(gendered_words(&pairs).contains("mary"));
    }

    #[test]
    fn hand_worked_direction() {
        let store = VectorStore::from_entries(
            SourceKind::Static,
            [("she", [0.0, 2.0]), ("he", [2.0, 0.0])],
        )
        .unwrap();
        let g =
            gender_direction(&store, &[GenderPair::new("she", "he").unwrap()], &opts()).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((g.as_slice()[0] + s).abs() < 1e-9);
        assert!((g.as_slice()[1] - s).abs() < 1e-9);
        assert!(cosine(&[-1.0, 1.0], g.as_slice()).unwrap() > 0.0);
        assert!((linalg::norm(g.as_slice()) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn missing_words_are_skipped() {
        let store = VectorStore::from_entries(
            SourceKind::Static,
            [
                ("he", [2.0, 0.0]),
                ("woman", [0.0, 1.0]),
                ("man", [1.0, 0.0]),
            ],
        )
        .unwrap();
        let pairs = vec![
            GenderPair::new("she", "he").unwrap(),
            GenderPair::new("Woman", "Man").unwrap(),
        ];
        let g = gender_direction(&store, &pairs, &opts()).unwrap();
        assert_eq!(g.diagnostics.pairs_skipped, vec![pairs[0].clone()]);
        assert_eq!(g.diagnostics.pairs_used, vec![pairs[1].clone()]);

        let err = gender_direction(&store, &pairs[..1], &opts()).unwrap_err();
        assert!(matches!(err, GenderError::NoResolvablePairs(1)));
    }

    #[test]
    fn identical_pair_vectors_are_degenerate() {
        let store = VectorStore::from_entries(
            SourceKind::Static,
            [("she", [1.0, 1.0]), ("he", [1.0, 1.0])],
        )
        .unwrap();
        let err = gender_direction(&store, &[GenderPair::new("she", "he").unwrap()], &opts())
            .unwrap_err();
        assert!(matches!(err, GenderError::Degenerate(LinalgError::AllZero)));
    }

    fn synthetic_store(seed: u64, dim: usize, n_pairs: usize) -> (VectorStore, Vec<GenderPair>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut entries = Vec::new();
        let mut pairs = Vec::new();
        for i in 0..n_pairs {
            for (name, sign) in [(format!("f{i}"), 1.0), (format!("m{i}"), -1.0)] {
                let mut v = vec![0.0; dim];
                v[0] = sign;
                let mut noise: Vec<f64> = (1..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
                let n = linalg::norm(&noise);
                noise.iter_mut().for_each(|x| *x *= 0.1 / n);
                v[1..].copy_from_slice(&noise);
                entries.push((name, v));
            }
            pairs.push(GenderPair::new(format!("f{i}"), format!("m{i}")).unwrap());
        }
        (
            VectorStore::from_entries(SourceKind::Static, entries).unwrap(),
            pairs,
        )
    }

    #[test]
    fn recovers_constructed_axis() {
        let (store, pairs) = synthetic_store(11, 16, 10);
        let g = gender_direction(&store, &pairs, &opts()).unwrap();
        assert!(g.as_slice()[0] >= 0.99, "{:?}", g.as_slice());
    }

    #[test]
    fn scale_swap_and_permutation() {
        let (store, pairs) = synthetic_store(5, 8, 6);
        let g = gender_direction(&store, &pairs, &opts()).unwrap();

        let scaled = store.map_values(|x| x * 3.7);
        let gs = gender_direction(&scaled, &pairs, &opts()).unwrap();
        assert!(g
            .as_slice()
            .iter()
            .zip(gs.as_slice())
            .all(|(a, b)| (a - b).abs() < 1e-9));

        let swapped: Vec<GenderPair> = pairs.iter().map(GenderPair::swapped).collect();
        let gw = gender_direction(&store, &swapped, &opts()).unwrap();
        assert!(g
            .as_slice()
            .iter()
            .zip(gw.as_slice())
            .all(|(a, b)| (a + b).abs() < 1e-9));

        let mut reversed = pairs.clone();
        reversed.reverse();
        let gr = gender_direction(&store, &reversed, &opts()).unwrap();
        assert!(g
            .as_slice()
            .iter()
            .zip(gr.as_slice())
            .all(|(a, b)| (a - b).abs() < 1e-9));
    }
}
