//! Lexical geolocation of micro-posts.
//!
//! The library predicts which administrative location a short text refers
//! to. Author profiles are resolved against a template-expanded gazetteer,
//! post content is classified with TF-IDF / LSI vector-space models, and a
//! stratified cross-validation harness plus corpus analytics round out the
//! full evaluation pipeline.
//!
//! Typical flow:
//!
//! 1. [`gazetteer`] loads the municipality → province → region → country
//!    hierarchy and resolves self-reported profile locations.
//! 2. [`corpus`] ingests JSONL posts, tokenizes them and groups them into
//!    bag-of-words documents.
//! 3. [`vsm`] / [`lsi`] fit the weighting and latent-space models.
//! 4. [`classify`] trains per-location centroid indexes and predicts.
//! 5. [`eval`] runs stratified k-fold cross-validation.
//! 6. [`analytics`] produces the corpus-level reports.
//! 7. [`synth`] generates seeded synthetic corpora for desk-scale testing.

pub mod analytics;
pub mod classify;
pub mod corpus;
pub mod eval;
pub mod gazetteer;
pub mod lsi;
pub mod synth;
pub mod vsm;

pub use classify::{ClassifierSpec, LocationIndex, Prediction, Variant};
pub use corpus::{Document, GroupLevel, GroupingStrategy, MicroPost};
pub use eval::{EvalReport, FoldPlan};
pub use gazetteer::{AdminUnit, Level, LocationHierarchy, NameIndex, ResolvedLocation};
pub use lsi::{LatentVector, LsiModel, TermDocMatrix};
pub use vsm::{TfIdfModel, Vocabulary, WeightedVector};
