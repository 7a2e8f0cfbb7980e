//! Evaluation protocol: stratified k-fold cross-validation over geolocated
//! posts, accuracy against the author's location, and per-location accuracy
//! as a geographic-diversity measure.
//!
//! At province level only provinces with at least the median number of
//! posts are eligible; at region level every region with posts is. Folds
//! preserve each location's share of posts to within one post.

use crate::classify::{train, ClassifierSpec, ClassifyError};
use crate::corpus::{location_at, GroupLevel, MicroPost};
use crate::gazetteer::LocationHierarchy;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;
use thiserror::Error;

/// A deterministic partition of post ids into k disjoint folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FoldPlan {
    pub level: GroupLevel,
    /// Post ids per fold.
    pub folds: Vec<Vec<String>>,
}

/// Accuracy of one held-out fold, for the classifier and the majority
/// baseline trained on the same nine-tenths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldOutcome {
    pub fold: usize,
    pub n_test: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub baseline_correct: usize,
    pub baseline_accuracy: f64,
}

/// Pooled accuracy of one location across all folds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocationAccuracy {
    pub unit_id: String,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

/// Cross-validation results: per-fold and per-location accuracies with
/// their means and sample standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub spec: ClassifierSpec,
    pub seed: u64,
    pub n_posts: usize,
    pub eligible_locations: Vec<String>,
    pub folds: Vec<FoldOutcome>,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub baseline_mean: f64,
    pub baseline_std: f64,
    pub locations: Vec<LocationAccuracy>,
    pub location_accuracy_mean: f64,
    pub location_accuracy_std: f64,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("location `{unit_id}` has only {count} posts, fewer than {k} folds")]
    TooFewPosts {
        unit_id: String,
        count: usize,
        k: usize,
    },
    #[error("fold count must be ≥ 2, got {0}")]
    BadFoldCount(usize),
    #[error("no posts with a resolved location at the requested level")]
    NoEligiblePosts,
    #[error("training failed on fold {fold}: {source}")]
    Training {
        fold: usize,
        source: ClassifyError,
    },
}

/// Posts per location at the given level, sorted by unit id.
fn location_counts(
    posts: &[&MicroPost],
    hierarchy: &LocationHierarchy,
    level: GroupLevel,
) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for post in posts {
        if let Some(unit_id) = location_at(post, hierarchy, level) {
            *counts.entry(unit_id).or_insert(0) += 1;
        }
    }
    counts
}

/// The locations evaluation runs on: every region with posts, or the
/// provinces whose post count reaches the median over all provinces with
/// posts.
pub fn select_locations(
    posts: &[&MicroPost],
    hierarchy: &LocationHierarchy,
    level: GroupLevel,
) -> Vec<String> {
    let counts = location_counts(posts, hierarchy, level);
    match level {
        GroupLevel::Region => counts.into_keys().collect(),
        GroupLevel::Province => {
            let mut sorted: Vec<usize> = counts.values().copied().collect();
            sorted.sort_unstable();
            if sorted.is_empty() {
                return Vec::new();
            }
            let median = if sorted.len() % 2 == 1 {
                sorted[sorted.len() / 2] as f64
            } else {
                (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2]) as f64 / 2.0
            };
            counts
                .into_iter()
                .filter(|&(_, count)| count as f64 >= median)
                .map(|(unit_id, _)| unit_id)
                .collect()
        }
    }
}

/// Keeps only posts whose location at `level` is in the eligible set.
pub fn restrict_to<'a>(
    posts: &[&'a MicroPost],
    hierarchy: &LocationHierarchy,
    level: GroupLevel,
    eligible: &[String],
) -> Vec<&'a MicroPost> {
    posts
        .iter()
        .filter(|post| {
            location_at(post, hierarchy, level)
                .is_some_and(|unit| eligible.iter().any(|e| *e == unit))
        })
        .copied()
        .collect()
}

/// Splits posts into k folds, preserving each location's proportions: a
/// location with n posts puts ⌊n/k⌋ in every fold and one extra in n mod k
/// folds, the extras rotating across locations so no fold collects them
/// all. Deterministic for a given seed.
pub fn stratified_folds(
    posts: &[&MicroPost],
    k: usize,
    hierarchy: &LocationHierarchy,
    level: GroupLevel,
    seed: u64,
) -> Result<FoldPlan, EvalError> {
    if k < 2 {
        return Err(EvalError::BadFoldCount(k));
    }
    let mut per_location: BTreeMap<String, Vec<&MicroPost>> = BTreeMap::new();
    for post in posts {
        if let Some(unit_id) = location_at(post, hierarchy, level) {
            per_location.entry(unit_id).or_default().push(post);
        }
    }
    if per_location.is_empty() {
        return Err(EvalError::NoEligiblePosts);
    }
    for (unit_id, members) in &per_location {
        if members.len() < k {
            return Err(EvalError::TooFewPosts {
                unit_id: unit_id.clone(),
                count: members.len(),
                k,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds: Vec<Vec<String>> = vec![Vec::new(); k];
    for (rank, members) in per_location.values_mut().enumerate() {
        members.shuffle(&mut rng);
        let base = members.len() / k;
        let extras = members.len() % k;
        let mut cursor = 0;
        for j in 0..k {
            let mut size = base;
            if (j + k - rank % k) % k < extras {
                size += 1;
            }
            for post in &members[cursor..cursor + size] {
                folds[j].push(post.id.clone());
            }
            cursor += size;
        }
    }
    Ok(FoldPlan { level, folds })
}

/// Runs k train/test iterations: each fold is held out once, the classifier
/// and the majority baseline are trained on the rest, and a prediction
/// counts as correct when it matches the author's location. `jobs` caps
/// concurrent fold evaluations; 0 or 1 runs sequentially.
pub fn cross_validate(
    posts: &[&MicroPost],
    hierarchy: &LocationHierarchy,
    spec: &ClassifierSpec,
    k: usize,
    seed: u64,
    jobs: usize,
) -> Result<EvalReport, EvalError> {
    let plan = stratified_folds(posts, k, hierarchy, spec.level, seed)?;
    let mut seed_rng = ChaCha8Rng::seed_from_u64(seed);
    let fold_seeds: Vec<u64> = (0..k).map(|_| seed_rng.gen()).collect();

    let fold_posts: Vec<Vec<&MicroPost>> = plan
        .folds
        .iter()
        .map(|ids| {
            let members: std::collections::HashSet<&str> =
                ids.iter().map(String::as_str).collect();
            posts
                .iter()
                .filter(|p| members.contains(p.id.as_str()))
                .copied()
                .collect()
        })
        .collect();

    let evaluate_fold = |fold: usize| -> Result<(FoldOutcome, BTreeMap<String, (usize, usize)>), EvalError> {
        let test = &fold_posts[fold];
        let train_posts: Vec<&MicroPost> = fold_posts
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != fold)
            .flat_map(|(_, posts)| posts.iter().copied())
            .collect();
        let index = train(&train_posts, hierarchy, spec, fold_seeds[fold])
            .map_err(|source| EvalError::Training { fold, source })?;
        let baseline_choice = index.predict_baseline().chosen;

        let mut correct = 0;
        let mut baseline_correct = 0;
        let mut per_location: BTreeMap<String, (usize, usize)> = BTreeMap::new();
        for post in test {
            let actual = location_at(post, hierarchy, spec.level)
                .expect("folds contain only located posts");
            let predicted = index.predict(&post.text).chosen;
            let entry = per_location.entry(actual.clone()).or_insert((0, 0));
            entry.1 += 1;
            if predicted == actual {
                correct += 1;
                entry.0 += 1;
            }
            if baseline_choice == actual {
                baseline_correct += 1;
            }
        }
        let n_test = test.len();
        Ok((
            FoldOutcome {
                fold,
                n_test,
                correct,
                accuracy: correct as f64 / n_test as f64,
                baseline_correct,
                baseline_accuracy: baseline_correct as f64 / n_test as f64,
            },
            per_location,
        ))
    };

    let mut outcomes: Vec<(FoldOutcome, BTreeMap<String, (usize, usize)>)> =
        Vec::with_capacity(k);
    if jobs > 1 {
        let mut results: Vec<Option<Result<_, EvalError>>> = (0..k).map(|_| None).collect();
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for chunk in (0..k).collect::<Vec<_>>().chunks(k.div_ceil(jobs)) {
                let chunk = chunk.to_vec();
                let evaluate_fold = &evaluate_fold;
                handles.push(scope.spawn(move || {
                    chunk
                        .into_iter()
                        .map(|fold| (fold, evaluate_fold(fold)))
                        .collect::<Vec<_>>()
                }));
            }
            for handle in handles {
                for (fold, result) in handle.join().expect("fold worker panicked") {
                    results[fold] = Some(result);
                }
            }
        });
        for result in results {
            outcomes.push(result.expect("every fold evaluated")?);
        }
    } else {
        for fold in 0..k {
            outcomes.push(evaluate_fold(fold)?);
        }
    }

    let mut pooled: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for (_, per_location) in &outcomes {
        for (unit_id, &(correct, total)) in per_location {
            let entry = pooled.entry(unit_id.clone()).or_insert((0, 0));
            entry.0 += correct;
            entry.1 += total;
        }
    }
    let locations: Vec<LocationAccuracy> = pooled
        .into_iter()
        .map(|(unit_id, (correct, total))| LocationAccuracy {
            unit_id,
            correct,
            total,
            accuracy: correct as f64 / total as f64,
        })
        .collect();

    let folds: Vec<FoldOutcome> = outcomes.into_iter().map(|(outcome, _)| outcome).collect();
    let fold_accuracies: Vec<f64> = folds.iter().map(|f| f.accuracy).collect();
    let baseline_accuracies: Vec<f64> = folds.iter().map(|f| f.baseline_accuracy).collect();
    let location_accuracies: Vec<f64> = locations.iter().map(|l| l.accuracy).collect();
    let (accuracy_mean, accuracy_std) = mean_std(&fold_accuracies);
    let (baseline_mean, baseline_std) = mean_std(&baseline_accuracies);
    let (location_accuracy_mean, location_accuracy_std) = mean_std(&location_accuracies);

    Ok(EvalReport {
        spec: spec.clone(),
        seed,
        n_posts: posts.len(),
        eligible_locations: locations.iter().map(|l| l.unit_id.clone()).collect(),
        folds,
        accuracy_mean,
        accuracy_std,
        baseline_mean,
        baseline_std,
        locations,
        location_accuracy_mean,
        location_accuracy_std,
    })
}

/// Mean and sample (n−1) standard deviation; std is 0 for fewer than two
/// values.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
        / (values.len() - 1) as f64;
    (mean, variance.sqrt())
}

impl EvalReport {
    /// One CSV row per fold, one per location, then two summary rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut csv_writer = csv::Writer::from_writer(writer);
        csv_writer.write_record(["kind", "key", "accuracy", "baseline_accuracy", "n"])?;
        for fold in &self.folds {
            csv_writer.write_record([
                "fold".to_string(),
                fold.fold.to_string(),
                format!("{:.6}", fold.accuracy),
                format!("{:.6}", fold.baseline_accuracy),
                fold.n_test.to_string(),
            ])?;
        }
        for location in &self.locations {
            csv_writer.write_record([
                "location".to_string(),
                location.unit_id.clone(),
                format!("{:.6}", location.accuracy),
                String::new(),
                location.total.to_string(),
            ])?;
        }
        csv_writer.write_record([
            "summary".to_string(),
            "folds_mean_std".to_string(),
            format!("{:.6}", self.accuracy_mean),
            format!("{:.6}", self.baseline_mean),
            self.folds.len().to_string(),
        ])?;
        csv_writer.write_record([
            "summary".to_string(),
            "locations_mean_std".to_string(),
            format!("{:.6}", self.location_accuracy_mean),
            String::new(),
            self.locations.len().to_string(),
        ])?;
        csv_writer.flush()?;
        Ok(())
    }
}
