//! Latent semantic indexing over the TF-IDF term-document matrix.
//!
//! The matrix M (terms × documents) is factored as M = T·S·Dᵀ and truncated
//! to the top k singular triplets. A vector v over the same vocabulary is
//! projected into the latent space as v·T·S⁻¹, and queries are compared to
//! reference documents by cosine similarity in that space.
//!
//! Matrices small enough for an exact dense factorization (longest side up
//! to 5000) use one; larger ones use a seeded randomized range finder with
//! power iteration, which approximates the same top-k triplets.

use crate::corpus::Document;
use crate::vsm::{TfIdfModel, WeightedVector};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Side length above which the dense factorization gives way to the
/// randomized one.
const DENSE_LIMIT: usize = 5000;

/// Relative cutoff below which a singular value is treated as zero.
const RANK_TOLERANCE: f64 = 1e-10;

/// TF-IDF term-document matrix: one row per vocabulary term, one column per
/// document.
#[derive(Debug, Clone, PartialEq)]
pub struct TermDocMatrix {
    matrix: DMatrix<f64>,
    doc_ids: Vec<String>,
}

impl TermDocMatrix {
    /// Builds the matrix by weighting every document with the fitted model.
    pub fn from_documents(model: &TfIdfModel, documents: &[Document]) -> Self {
        let t = model.vocabulary.len();
        let mut matrix = DMatrix::zeros(t, documents.len());
        for (j, doc) in documents.iter().enumerate() {
            for (i, w) in model.transform_document(doc).entries {
                matrix[(i, j)] = w;
            }
        }
        let doc_ids = documents.iter().map(|d| d.doc_id.clone()).collect();
        Self { matrix, doc_ids }
    }

    /// Wraps an existing dense matrix; entries must be finite and ≥ 0.
    pub fn from_dense(matrix: DMatrix<f64>) -> Self {
        assert!(
            matrix.iter().all(|&x| x.is_finite() && x >= 0.0),
            "term-document entries must be finite and non-negative"
        );
        let doc_ids = (0..matrix.ncols()).map(|j| j.to_string()).collect();
        Self { matrix, doc_ids }
    }

    pub fn n_terms(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_docs(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

/// How the truncated factorization is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SvdStrategy {
    /// Dense up to [`DENSE_LIMIT`], randomized beyond.
    Auto,
    Dense,
    Randomized {
        oversampling: usize,
        power_iters: usize,
    },
}

/// Truncated factorization: orthonormal term factors T (t×k) and singular
/// values S in non-increasing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "LsiModelWire", into = "LsiModelWire")]
pub struct LsiModel {
    term_factors: DMatrix<f64>,
    singular_values: Vec<f64>,
    requested_k: usize,
}

#[derive(Serialize, Deserialize)]
struct LsiModelWire {
    n_terms: usize,
    k: usize,
    /// Column-major term factors.
    term_factors: Vec<f64>,
    singular_values: Vec<f64>,
    requested_k: usize,
}

impl From<LsiModelWire> for LsiModel {
    fn from(wire: LsiModelWire) -> Self {
        LsiModel {
            term_factors: DMatrix::from_column_slice(wire.n_terms, wire.k, &wire.term_factors),
            singular_values: wire.singular_values,
            requested_k: wire.requested_k,
        }
    }
}

impl From<LsiModel> for LsiModelWire {
    fn from(model: LsiModel) -> Self {
        LsiModelWire {
            n_terms: model.term_factors.nrows(),
            k: model.term_factors.ncols(),
            term_factors: model.term_factors.as_slice().to_vec(),
            singular_values: model.singular_values,
            requested_k: model.requested_k,
        }
    }
}

/// Dense vector in the k-dimensional latent space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentVector {
    pub values: Vec<f64>,
}

impl LatentVector {
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Cosine similarity between latent vectors, in [-1, 1]; 0 when either has
/// zero norm.
pub fn cosine_latent(a: &LatentVector, b: &LatentVector) -> f64 {
    let denom = a.norm() * b.norm();
    if denom == 0.0 {
        return 0.0;
    }
    let dot: f64 = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| x * y)
        .sum();
    dot / denom
}

#[derive(Debug, Error)]
pub enum LsiError {
    #[error("latent dimension count {k} out of range (valid: 1..={max})")]
    InvalidK { k: usize, max: usize },
    #[error("cannot factor an all-zero matrix")]
    ZeroMatrix,
    #[error("vector index {index} exceeds the model's {n_terms} terms")]
    VocabularyMismatch { index: usize, n_terms: usize },
}

impl LsiModel {
    /// Fits the top-k factorization, picking dense or randomized
    /// computation by matrix size. The seed only affects the randomized
    /// path.
    pub fn fit(matrix: &TermDocMatrix, k: usize, seed: u64) -> Result<Self, LsiError> {
        Self::fit_with(matrix, k, SvdStrategy::Auto, seed)
    }

    pub fn fit_with(
        matrix: &TermDocMatrix,
        k: usize,
        strategy: SvdStrategy,
        seed: u64,
    ) -> Result<Self, LsiError> {
        let (t, d) = (matrix.n_terms(), matrix.n_docs());
        let max_k = t.min(d);
        if k < 1 || k > max_k {
            return Err(LsiError::InvalidK { k, max: max_k });
        }
        if matrix.as_matrix().iter().all(|&x| x == 0.0) {
            return Err(LsiError::ZeroMatrix);
        }

        let strategy = match strategy {
            SvdStrategy::Auto if t.max(d) <= DENSE_LIMIT => SvdStrategy::Dense,
            SvdStrategy::Auto => SvdStrategy::Randomized {
                oversampling: 10,
                power_iters: 2,
            },
            other => other,
        };

        let (u, sigma) = match strategy {
            SvdStrategy::Dense | SvdStrategy::Auto => dense_svd(matrix.as_matrix()),
            SvdStrategy::Randomized {
                oversampling,
                power_iters,
            } => randomized_svd(matrix.as_matrix(), k, oversampling, power_iters, seed),
        };

        // Truncate to k, then drop dimensions whose singular value is
        // negligible next to the largest (S⁻¹ would explode on them).
        let cutoff = sigma.first().copied().unwrap_or(0.0) * RANK_TOLERANCE;
        let kept = sigma
            .iter()
            .take(k)
            .take_while(|&&s| s > cutoff && s > 0.0)
            .count();
        if kept == 0 {
            return Err(LsiError::ZeroMatrix);
        }
        Ok(Self {
            term_factors: u.columns(0, kept).into_owned(),
            singular_values: sigma[..kept].to_vec(),
            requested_k: k,
        })
    }

    /// Retained latent dimensions (≤ requested when rank fell short).
    pub fn k(&self) -> usize {
        self.singular_values.len()
    }

    /// How many requested dimensions the matrix rank could not provide.
    pub fn shortfall(&self) -> usize {
        self.requested_k - self.k()
    }

    pub fn requested_k(&self) -> usize {
        self.requested_k
    }

    pub fn n_terms(&self) -> usize {
        self.term_factors.nrows()
    }

    pub fn term_factors(&self) -> &DMatrix<f64> {
        &self.term_factors
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    /// Projects a sparse vocabulary-indexed vector into the latent space:
    /// result[j] = Σᵢ v[i]·T[i,j] / S[j].
    pub fn project(&self, v: &WeightedVector) -> Result<LatentVector, LsiError> {
        if let Some(&(index, _)) = v.entries.iter().find(|&&(i, _)| i >= self.n_terms()) {
            return Err(LsiError::VocabularyMismatch {
                index,
                n_terms: self.n_terms(),
            });
        }
        let mut values = vec![0.0; self.k()];
        for &(i, w) in &v.entries {
            for (j, value) in values.iter_mut().enumerate() {
                *value += w * self.term_factors[(i, j)];
            }
        }
        for (j, value) in values.iter_mut().enumerate() {
            *value /= self.singular_values[j];
        }
        Ok(LatentVector { values })
    }
}

/// Full dense factorization; returns left singular vectors and singular
/// values sorted non-increasing.
fn dense_svd(a: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let sigma: Vec<f64> = svd.singular_values.iter().copied().collect();
    (u, sigma)
}

/// Randomized range finder: sample Y = A·Ω, orthonormalize, refine with
/// power iterations, then factor the small projected matrix B = QᵀA
/// exactly.
fn randomized_svd(
    a: &DMatrix<f64>,
    k: usize,
    oversampling: usize,
    power_iters: usize,
    seed: u64,
) -> (DMatrix<f64>, Vec<f64>) {
    let (t, d) = (a.nrows(), a.ncols());
    let l = (k + oversampling).min(t.min(d));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = DMatrix::from_fn(d, l, |_, _| standard_normal(&mut rng));

    let mut q = orthonormal_basis(a * &omega);
    for _ in 0..power_iters {
        let z = orthonormal_basis(a.transpose() * &q);
        q = orthonormal_basis(a * &z);
    }

    let b = q.transpose() * a;
    let (u_small, sigma) = dense_svd(&b);
    (q * u_small, sigma)
}

/// Thin Q factor of the QR decomposition.
fn orthonormal_basis(m: DMatrix<f64>) -> DMatrix<f64> {
    m.qr().q()
}

/// Box-Muller standard normal draw.
fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vsm::TfIdfModel;
    use approx::assert_relative_eq;
    use std::collections::BTreeMap;

    fn random_matrix(t: usize, d: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(t, d, |_, _| rng.gen::<f64>() * 3.0)
    }

    /// Independent oracle: singular values via cyclic Jacobi
    /// eigen-decomposition of MᵀM, no shared code with the production SVD.
    fn jacobi_singular_values(a: &DMatrix<f64>) -> Vec<f64> {
        let mut s = a.transpose() * a;
        let n = s.nrows();
        for _sweep in 0..200 {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += s[(p, q)] * s[(p, q)];
                }
            }
            if off.sqrt() < 1e-14 * s.trace().abs().max(1.0) {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = s[(p, q)];
                    if apq.abs() < 1e-300 {
                        continue;
                    }
                    let theta = 0.5 * (s[(q, q)] - s[(p, p)]) / apq;
                    let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                    let tan = sign / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let cos = 1.0 / (tan * tan + 1.0).sqrt();
                    let sin = tan * cos;
                    for i in 0..n {
                        let aip = s[(i, p)];
                        let aiq = s[(i, q)];
                        s[(i, p)] = cos * aip - sin * aiq;
                        s[(i, q)] = sin * aip + cos * aiq;
                    }
                    for i in 0..n {
                        let api = s[(p, i)];
                        let aqi = s[(q, i)];
                        s[(p, i)] = cos * api - sin * aqi;
                        s[(q, i)] = sin * api + cos * aqi;
                    }
                }
            }
        }
        let mut values: Vec<f64> = (0..n).map(|i| s[(i, i)].max(0.0).sqrt()).collect();
        values.sort_by(|a, b| b.partial_cmp(a).unwrap());
        values
    }

    /// Document factors D = MᵀT·S⁻¹, computed directly from the definition.
    fn document_factors(m: &DMatrix<f64>, model: &LsiModel) -> DMatrix<f64> {
        let mut d = m.transpose() * model.term_factors();
        for j in 0..model.k() {
            for i in 0..d.nrows() {
                d[(i, j)] /= model.singular_values()[j];
            }
        }
        d
    }

    #[test]
    fn identity_matrix_has_unit_singular_values() {
        let m = TermDocMatrix::from_dense(DMatrix::identity(2, 2));
        let model = LsiModel::fit(&m, 2, 0).unwrap();
        assert_eq!(model.k(), 2);
        for &s in model.singular_values() {
            assert_relative_eq!(s, 1.0, epsilon = 1e-12);
        }
        let gram = model.term_factors().transpose() * model.term_factors();
        assert_relative_eq!(gram[(0, 0)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(gram[(0, 1)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn rank_one_matrix_recovers_its_factor() {
        let u = nalgebra::DVector::from_vec(vec![0.6, 0.8, 0.0]);
        let v = nalgebra::DVector::from_vec(vec![0.0, 1.0]);
        let m = TermDocMatrix::from_dense(&u * v.transpose());
        let model = LsiModel::fit(&m, 1, 0).unwrap();
        assert_eq!(model.k(), 1);
        assert_relative_eq!(model.singular_values()[0], 1.0, epsilon = 1e-12);
        let col = model.term_factors().column(0);
        let aligned = (col[0] - 0.6).abs() < 1e-9 || (col[0] + 0.6).abs() < 1e-9;
        assert!(aligned);
        assert_relative_eq!(col[0].abs(), 0.6, epsilon = 1e-9);
        assert_relative_eq!(col[1].abs(), 0.8, epsilon = 1e-9);
    }

    #[test]
    fn dense_singular_values_match_jacobi_oracle() {
        for seed in 0..5 {
            let a = random_matrix(30, 10, seed);
            let model = LsiModel::fit(&TermDocMatrix::from_dense(a.clone()), 5, 0).unwrap();
            let oracle = jacobi_singular_values(&a);
            for (got, want) in model.singular_values().iter().zip(&oracle) {
                assert_relative_eq!(got, want, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn randomized_path_matches_dense_on_low_rank_input() {
        // Rank 5 by construction: product of 100×5 and 5×60 factors.
        let left = random_matrix(100, 5, 11);
        let right = random_matrix(5, 60, 12);
        let a = left * right;
        let m = TermDocMatrix::from_dense(a.clone());
        let dense = LsiModel::fit_with(&m, 5, SvdStrategy::Dense, 0).unwrap();
        let randomized = LsiModel::fit_with(
            &m,
            5,
            SvdStrategy::Randomized {
                oversampling: 10,
                power_iters: 2,
            },
            7,
        )
        .unwrap();
        for (a, b) in dense
            .singular_values()
            .iter()
            .zip(randomized.singular_values())
        {
            assert_relative_eq!(a, b, max_relative = 1e-6);
        }
        let gram = randomized.term_factors().transpose() * randomized.term_factors();
        let identity = DMatrix::identity(5, 5);
        assert!((gram - identity).amax() < 1e-6);
    }

    #[test]
    fn randomized_path_is_seed_deterministic() {
        let a = random_matrix(40, 25, 3);
        let m = TermDocMatrix::from_dense(a);
        let strategy = SvdStrategy::Randomized {
            oversampling: 10,
            power_iters: 2,
        };
        let one = LsiModel::fit_with(&m, 6, strategy, 99).unwrap();
        let two = LsiModel::fit_with(&m, 6, strategy, 99).unwrap();
        assert_eq!(one, two);
    }

    #[test]
    fn rank_shortfall_is_reported() {
        // Third column is the sum of the first two: rank 2.
        let a = DMatrix::from_columns(&[
            nalgebra::DVector::from_vec(vec![1.0, 0.0, 0.0]),
            nalgebra::DVector::from_vec(vec![0.0, 1.0, 0.0]),
            nalgebra::DVector::from_vec(vec![1.0, 1.0, 0.0]),
        ]);
        let model = LsiModel::fit(&TermDocMatrix::from_dense(a), 3, 0).unwrap();
        assert_eq!(model.k(), 2);
        assert_eq!(model.shortfall(), 1);
        assert_eq!(model.requested_k(), 3);
    }

    #[test]
    fn invalid_k_and_zero_matrix_are_rejected() {
        let m = TermDocMatrix::from_dense(DMatrix::identity(3, 3));
        assert!(matches!(
            LsiModel::fit(&m, 0, 0),
            Err(LsiError::InvalidK { .. })
        ));
        assert!(matches!(
            LsiModel::fit(&m, 4, 0),
            Err(LsiError::InvalidK { .. })
        ));
        let zero = TermDocMatrix::from_dense(DMatrix::zeros(3, 3));
        assert!(matches!(
            LsiModel::fit(&zero, 2, 0),
            Err(LsiError::ZeroMatrix)
        ));
    }

    #[test]
    fn projecting_training_columns_reproduces_document_factors() {
        let a = random_matrix(12, 6, 21);
        let m = TermDocMatrix::from_dense(a.clone());
        let model = LsiModel::fit(&m, 6, 0).unwrap();
        let d = document_factors(&a, &model);
        for j in 0..a.ncols() {
            let column = WeightedVector {
                entries: (0..a.nrows()).map(|i| (i, a[(i, j)])).collect(),
            };
            let projected = model.project(&column).unwrap();
            for (dim, &value) in projected.values.iter().enumerate() {
                assert_relative_eq!(value, d[(j, dim)], epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn projection_is_linear_and_sends_zero_to_zero() {
        let a = random_matrix(15, 8, 33);
        let model = LsiModel::fit(&TermDocMatrix::from_dense(a), 4, 0).unwrap();
        let zero = model.project(&WeightedVector::default()).unwrap();
        assert!(zero.values.iter().all(|&v| v == 0.0));

        let u = WeightedVector {
            entries: vec![(0, 1.5), (3, 2.0), (7, 0.25)],
        };
        let v = WeightedVector {
            entries: vec![(1, 3.0), (3, 1.0)],
        };
        let (alpha, beta) = (2.5, -1.25);
        let mut dense = vec![0.0; 15];
        for &(i, w) in &u.entries {
            dense[i] += alpha * w;
        }
        for &(i, w) in &v.entries {
            dense[i] += beta * w;
        }
        let combined = WeightedVector {
            entries: dense
                .iter()
                .enumerate()
                .filter(|(_, &w)| w != 0.0)
                .map(|(i, &w)| (i, w))
                .collect(),
        };
        let pu = model.project(&u).unwrap();
        let pv = model.project(&v).unwrap();
        let pc = model.project(&combined).unwrap();
        for j in 0..model.k() {
            assert_relative_eq!(
                pc.values[j],
                alpha * pu.values[j] + beta * pv.values[j],
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn projection_rejects_vocabulary_mismatch() {
        let model = LsiModel::fit(&TermDocMatrix::from_dense(DMatrix::identity(3, 3)), 2, 0)
            .unwrap();
        let v = WeightedVector {
            entries: vec![(5, 1.0)],
        };
        assert!(matches!(
            model.project(&v),
            Err(LsiError::VocabularyMismatch { index: 5, .. })
        ));
    }

    #[test]
    fn full_rank_reconstruction_and_truncation_monotonicity() {
        let a = random_matrix(10, 7, 44);
        let m = TermDocMatrix::from_dense(a.clone());
        let full = LsiModel::fit(&m, 7, 0).unwrap();
        let d = document_factors(&a, &full);
        let mut sigma = DMatrix::zeros(full.k(), full.k());
        for (i, &s) in full.singular_values().iter().enumerate() {
            sigma[(i, i)] = s;
        }
        let reconstructed = full.term_factors() * sigma * d.transpose();
        let rel = (&a - reconstructed).norm() / a.norm();
        assert!(rel < 1e-6, "relative reconstruction error {rel}");

        let mut previous = 0.0f64;
        for k in (1..=7).rev() {
            let model = LsiModel::fit(&m, k, 0).unwrap();
            let dk = document_factors(&a, &model);
            let mut sk = DMatrix::zeros(model.k(), model.k());
            for (i, &s) in model.singular_values().iter().enumerate() {
                sk[(i, i)] = s;
            }
            let err = (&a - model.term_factors() * sk * dk.transpose()).norm();
            assert!(
                err + 1e-9 >= previous,
                "dropping dimensions must not shrink the reconstruction error"
            );
            previous = err;
        }
    }

    #[test]
    fn matrix_columns_are_weighted_documents() {
        let docs = vec![
            Document {
                doc_id: "d1".into(),
                counts: BTreeMap::from([("alfa".into(), 2), ("beta".into(), 1)]),
                n_posts: 1,
            },
            Document {
                doc_id: "d2".into(),
                counts: BTreeMap::from([("beta".into(), 3), ("gama".into(), 1)]),
                n_posts: 1,
            },
        ];
        let model = TfIdfModel::fit(&docs).unwrap();
        let matrix = TermDocMatrix::from_documents(&model, &docs);
        assert_eq!(matrix.n_terms(), 3);
        assert_eq!(matrix.n_docs(), 2);
        assert_eq!(matrix.doc_ids(), ["d1", "d2"]);
        for (j, doc) in docs.iter().enumerate() {
            let dense = model.transform_document(doc).to_dense(3);
            for (i, &want) in dense.iter().enumerate() {
                assert_relative_eq!(matrix.as_matrix()[(i, j)], want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn model_round_trips_through_json() {
        let a = random_matrix(8, 5, 55);
        let model = LsiModel::fit(&TermDocMatrix::from_dense(a), 3, 0).unwrap();
        let json = serde_json::to_string(&model).unwrap();
        let back: LsiModel = serde_json::from_str(&json).unwrap();
        assert_eq!(model, back);
    }
}
