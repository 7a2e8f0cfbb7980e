//! Vector space model: vocabulary, TF-IDF weighting, cosine similarity.
//!
//! Weights are raw term frequency times ln(N/df). A term present in every
//! document gets idf 0 and drops out of every vector, which suppresses
//! corpus-specific stopwords without an explicit stopword list. Queries are
//! weighted with the training model's document frequencies; unknown terms
//! are ignored.

use crate::corpus::{Document, Token};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use thiserror::Error;

/// Dense, bijective term ↔ index mapping with lexicographically ordered
/// indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds a vocabulary from the distinct terms of a document collection.
    pub fn from_documents(documents: &[Document]) -> Self {
        let distinct: BTreeSet<&str> = documents
            .iter()
            .flat_map(|d| d.counts.keys().map(String::as_str))
            .collect();
        Self::from(distinct.into_iter().map(String::from).collect::<Vec<_>>())
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, index: usize) -> Option<&str> {
        self.terms.get(index).map(String::as_str)
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }
}

impl From<Vec<String>> for Vocabulary {
    fn from(terms: Vec<String>) -> Self {
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self { terms, index }
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(vocabulary: Vocabulary) -> Self {
        vocabulary.terms
    }
}

/// Fitted TF-IDF weighting model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfIdfModel {
    pub vocabulary: Vocabulary,
    /// Per-term document frequency, indexed like the vocabulary.
    pub df: Vec<u32>,
    /// Total number of fitted documents.
    pub n_docs: usize,
}

/// Sparse non-negative vector with strictly increasing indices and no
/// explicit zeros.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WeightedVector {
    pub entries: Vec<(usize, f64)>,
}

#[derive(Debug, Error)]
pub enum VsmError {
    #[error("cannot fit a model on zero documents")]
    EmptyCorpus,
}

impl TfIdfModel {
    /// Fits the vocabulary and document frequencies over a document
    /// collection.
    pub fn fit(documents: &[Document]) -> Result<Self, VsmError> {
        if documents.is_empty() {
            return Err(VsmError::EmptyCorpus);
        }
        let vocabulary = Vocabulary::from_documents(documents);
        let mut df = vec![0u32; vocabulary.len()];
        for doc in documents {
            for term in doc.counts.keys() {
                let i = vocabulary.index_of(term).expect("vocabulary covers corpus");
                df[i] += 1;
            }
        }
        Ok(Self {
            vocabulary,
            df,
            n_docs: documents.len(),
        })
    }

    fn idf(&self, index: usize) -> f64 {
        (self.n_docs as f64 / self.df[index] as f64).ln()
    }

    /// Weights raw token counts into a sparse TF-IDF vector. Terms outside
    /// the vocabulary and terms appearing in every fitted document are
    /// dropped.
    pub fn transform(&self, token_counts: &BTreeMap<String, u32>) -> WeightedVector {
        let mut entries: Vec<(usize, f64)> = token_counts
            .iter()
            .filter_map(|(term, &tf)| {
                let i = self.vocabulary.index_of(term)?;
                let weight = tf as f64 * self.idf(i);
                (weight > 0.0).then_some((i, weight))
            })
            .collect();
        entries.sort_by_key(|&(i, _)| i);
        WeightedVector { entries }
    }

    /// Convenience for weighting a whole document.
    pub fn transform_document(&self, document: &Document) -> WeightedVector {
        self.transform(&document.counts)
    }

    /// Convenience for weighting a tokenized query.
    pub fn transform_tokens(&self, tokens: &[Token]) -> WeightedVector {
        self.transform(&token_counts(tokens))
    }
}

/// Tallies tokens into the count-map shape shared by documents and queries.
pub fn token_counts(tokens: &[Token]) -> BTreeMap<String, u32> {
    let mut counts = BTreeMap::new();
    for token in tokens {
        *counts.entry(token.surface.clone()).or_insert(0) += 1;
    }
    counts
}

impl WeightedVector {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(_, w)| w * w)
            .sum::<f64>()
            .sqrt()
    }

    pub fn dot(&self, other: &WeightedVector) -> f64 {
        let mut sum = 0.0;
        let (mut i, mut j) = (0, 0);
        while i < self.entries.len() && j < other.entries.len() {
            let (ia, wa) = self.entries[i];
            let (ib, wb) = other.entries[j];
            match ia.cmp(&ib) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    sum += wa * wb;
                    i += 1;
                    j += 1;
                }
            }
        }
        sum
    }

    /// Expands into a dense vector of the given dimension.
    pub fn to_dense(&self, dimension: usize) -> Vec<f64> {
        let mut dense = vec![0.0; dimension];
        for &(i, w) in &self.entries {
            dense[i] = w;
        }
        dense
    }
}

/// Cosine similarity between sparse vectors; 0 when either vector is empty
/// or has zero norm, so an uninformative query carries no signal instead of
/// failing.
pub fn cosine(a: &WeightedVector, b: &WeightedVector) -> f64 {
    let denom = a.norm() * b.norm();
    if denom == 0.0 {
        return 0.0;
    }
    a.dot(b) / denom
}
