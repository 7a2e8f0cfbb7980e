//! Location classifiers over grouped documents.
//!
//! Four content classifiers share one shape: fit a weighting model on
//! documents grouped per strategy (per user, per location, or per frequent
//! hashtag), build one reference document per location from all its
//! training posts, and predict by maximum cosine similarity between the
//! weighted query and the reference vectors. A majority baseline predicts
//! the location with the most training posts regardless of content.
//!
//! Ties, including the all-zero scores of a query with no known terms, are
//! broken by larger training-post count and then lexicographic unit id, so
//! an uninformative query degrades exactly to the baseline answer.

use crate::corpus::{group, tokenize, CorpusError, GroupLevel, GroupingStrategy, MicroPost};
use crate::gazetteer::LocationHierarchy;
use crate::lsi::{cosine_latent, LatentVector, LsiError, LsiModel, TermDocMatrix};
use crate::vsm::{cosine, TfIdfModel, VsmError, WeightedVector};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, VecDeque};
use thiserror::Error;

/// Classifier family. `TfIdfH` ranks hashtags by distinct-post frequency,
/// discards the `skip_top` most frequent, and keeps the top `top_fraction`
/// of all distinct hashtags as model documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
pub enum Variant {
    Baseline,
    TfIdfU,
    TfIdfL,
    TfIdfH { top_fraction: f64, skip_top: usize },
    LsiU { k: usize },
}

impl Variant {
    /// Hashtag variant with the default retention: the top 1% of hashtags
    /// after discarding the single most frequent one.
    pub fn tfidf_h_default() -> Self {
        Variant::TfIdfH {
            top_fraction: 0.01,
            skip_top: 1,
        }
    }

    /// Latent-space user variant with the default 200 dimensions.
    pub fn lsi_u_default() -> Self {
        Variant::LsiU { k: 200 }
    }
}

/// What to train: a classifier family at an administrative level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub variant: Variant,
    pub level: GroupLevel,
}

/// Reference vector of one location, in whichever space the variant uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "space", rename_all = "lowercase")]
pub enum ReferenceVector {
    /// Baseline: no content representation.
    None,
    Sparse(WeightedVector),
    Latent(LatentVector),
}

impl ReferenceVector {
    /// True when the location's training text produced no usable signal.
    pub fn is_degenerate(&self) -> bool {
        match self {
            ReferenceVector::None => false,
            ReferenceVector::Sparse(v) => v.is_empty(),
            ReferenceVector::Latent(v) => v.norm() == 0.0,
        }
    }
}

/// One location's entry in a trained index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationRef {
    pub unit_id: String,
    pub training_posts: usize,
    pub vector: ReferenceVector,
}

/// A trained classifier: fitted model(s) plus one reference per location,
/// sorted by unit id. Immutable after [`train`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationIndex {
    pub spec: ClassifierSpec,
    pub tfidf: Option<TfIdfModel>,
    pub lsi: Option<LsiModel>,
    pub references: Vec<LocationRef>,
}

/// Ranked classification outcome; `chosen` is always the first entry of
/// `ranking`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub chosen: String,
    pub ranking: Vec<(String, f64)>,
}

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("training needs at least 2 locations with posts, found {found}")]
    TooFewLocations { found: usize },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Vsm(#[from] VsmError),
    #[error(transparent)]
    Lsi(#[from] LsiError),
}

impl ClassifierSpec {
    fn grouping(&self) -> Option<GroupingStrategy> {
        match &self.variant {
            Variant::Baseline => None,
            Variant::TfIdfU | Variant::LsiU { .. } => Some(GroupingStrategy::ByUser),
            Variant::TfIdfL => Some(GroupingStrategy::ByLocation(self.level)),
            Variant::TfIdfH {
                top_fraction,
                skip_top,
            } => Some(GroupingStrategy::ByHashtag {
                top_fraction: *top_fraction,
                skip_top: *skip_top,
            }),
        }
    }
}

/// Trains a classifier on pre-filtered posts (no reposts or replies, all
/// carrying a resolved author location at or below the spec's level).
///
/// The seed drives the randomized factorization path of the latent variant
/// and is ignored elsewhere. For large latent dimension requests the model
/// keeps as many dimensions as the document collection can support.
pub fn train(
    posts: &[&MicroPost],
    hierarchy: &LocationHierarchy,
    spec: &ClassifierSpec,
    seed: u64,
) -> Result<LocationIndex, ClassifyError> {
    let location_docs = group(posts, &GroupingStrategy::ByLocation(spec.level), hierarchy)?;
    if location_docs.len() < 2 {
        return Err(ClassifyError::TooFewLocations {
            found: location_docs.len(),
        });
    }

    let mut tfidf = None;
    let mut lsi = None;
    if let Some(strategy) = spec.grouping() {
        let model_docs = group(posts, &strategy, hierarchy)?;
        let model = TfIdfModel::fit(&model_docs)?;
        if let Variant::LsiU { k } = spec.variant {
            let matrix = TermDocMatrix::from_documents(&model, &model_docs);
            let k = k.max(1).min(matrix.n_terms().min(matrix.n_docs()));
            lsi = Some(LsiModel::fit(&matrix, k, seed)?);
        }
        tfidf = Some(model);
    }

    let references = location_docs
        .iter()
        .map(|doc| {
            let vector = match (&tfidf, &lsi) {
                (None, _) => ReferenceVector::None,
                (Some(model), None) => ReferenceVector::Sparse(model.transform_document(doc)),
                (Some(model), Some(lsi)) => {
                    let weighted = model.transform_document(doc);
                    ReferenceVector::Latent(lsi.project(&weighted)?)
                }
            };
            Ok(LocationRef {
                unit_id: doc.doc_id.clone(),
                training_posts: doc.n_posts,
                vector,
            })
        })
        .collect::<Result<Vec<_>, ClassifyError>>()?;

    Ok(LocationIndex {
        spec: spec.clone(),
        tfidf,
        lsi,
        references,
    })
}

impl LocationIndex {
    /// Classifies a query text: weights it with the training models, scores
    /// it against every reference, ranks descending.
    pub fn predict(&self, text: &str) -> Prediction {
        let tokens = tokenize(text);
        let weighted = self
            .tfidf
            .as_ref()
            .map(|m| m.transform_tokens(&tokens))
            .unwrap_or_default();
        let latent = self
            .lsi
            .as_ref()
            .map(|lsi| lsi.project(&weighted).expect("query uses model vocabulary"));

        let scores: Vec<f64> = self
            .references
            .iter()
            .map(|r| match (&r.vector, &latent) {
                (ReferenceVector::None, _) => 0.0,
                (ReferenceVector::Sparse(v), _) => cosine(&weighted, v),
                (ReferenceVector::Latent(v), Some(q)) => cosine_latent(q, v),
                (ReferenceVector::Latent(_), None) => 0.0,
            })
            .collect();
        self.rank(scores)
    }

    /// The majority answer: ranks locations by training-post count alone.
    pub fn predict_baseline(&self) -> Prediction {
        self.rank(vec![0.0; self.references.len()])
    }

    fn rank(&self, scores: Vec<f64>) -> Prediction {
        let mut order: Vec<usize> = (0..self.references.len()).collect();
        order.sort_by(|&a, &b| {
            scores[b]
                .partial_cmp(&scores[a])
                .expect("similarity scores are finite")
                .then_with(|| {
                    self.references[b]
                        .training_posts
                        .cmp(&self.references[a].training_posts)
                })
                .then_with(|| self.references[a].unit_id.cmp(&self.references[b].unit_id))
        });
        let ranking: Vec<(String, f64)> = order
            .into_iter()
            .map(|i| (self.references[i].unit_id.clone(), scores[i]))
            .collect();
        Prediction {
            chosen: ranking[0].0.clone(),
            ranking,
        }
    }

    pub fn locations(&self) -> impl Iterator<Item = &str> {
        self.references.iter().map(|r| r.unit_id.as_str())
    }
}

/// Orders posts into a geographically diverse feed: classifies every post,
/// then emits round-robin across predicted locations (lexicographic cycle
/// order), at most `quota_per_location` posts per location per cycle, input
/// order preserved within each location.
pub fn diverse_timeline<'a>(
    index: &LocationIndex,
    posts: &[&'a MicroPost],
    quota_per_location: usize,
) -> Vec<&'a MicroPost> {
    assert!(quota_per_location >= 1, "quota must be positive");
    let mut queues: BTreeMap<String, VecDeque<&MicroPost>> = BTreeMap::new();
    for post in posts {
        let chosen = index.predict(&post.text).chosen;
        queues.entry(chosen).or_default().push_back(post);
    }

    let mut timeline = Vec::with_capacity(posts.len());
    while queues.values().any(|q| !q.is_empty()) {
        for queue in queues.values_mut() {
            for _ in 0..quota_per_location {
                match queue.pop_front() {
                    Some(post) => timeline.push(post),
                    None => break,
                }
            }
        }
    }
    timeline
}
