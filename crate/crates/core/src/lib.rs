//! Gender bias auditing for clinical word embeddings.
//!
//! The crate loads static (word2vec) or contextual (NDJSON) vector stores,
//! derives an oriented gender direction from definitional word pairs, and
//! scores medical lexicons with the Direct Bias metric: the mean absolute
//! cosine between each term vector and the gender direction. Signed scores
//! can be checked against literature prevalence to separate accurate from
//! conflicting biases. Two side reports complete the toolkit: gendered
//! probability mass over mask-fill outputs, and descriptive statistics over
//! cohort exports.
//!
//! Sign convention everywhere: a positive score leans female, a negative
//! score leans male.
//!
//! ```
//! use clinbias::embed_io::{SourceKind, VectorStore};
//! use clinbias::gender::{gender_direction, GenderPair};
//! use clinbias::linalg::PowerIterationOptions;
//! use clinbias::bias::term_bias;
//!
//! let store = VectorStore::from_entries(
//!     SourceKind::Static,
//!     vec![
//!         ("she", vec![0.0, 2.0]),
//!         ("he", vec![2.0, 0.0]),
//!         ("anxiety", vec![-1.0, 1.0]),
//!     ],
//! )
//! .unwrap();
//! let pairs = vec![GenderPair::new("she", "he").unwrap()];
//! let g = gender_direction(&store, &pairs, &PowerIterationOptions::default()).unwrap();
//! let scored = term_bias(&store, "anxiety", &g).unwrap();
//! assert!((scored.score.unwrap() - 1.0).abs() < 1e-9);
//! ```

pub mod bias;
pub mod conflict;
pub mod demographics;
pub mod embed_io;
pub mod gender;
pub mod lexicon;
pub mod linalg;
pub mod maskprob;
pub mod reference;
pub mod table;

pub use bias::{BiasRecord, CategoryBiasReport};
pub use conflict::{ConflictVerdict, PrevalenceTable, Verdict};
pub use embed_io::{SourceKind, VectorStore};
pub use gender::{GenderDirection, GenderPair};
pub use lexicon::{TemplateSet, TermLexicon};
