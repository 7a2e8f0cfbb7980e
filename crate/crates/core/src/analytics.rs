//! Corpus-level reports: discriminative hashtags per location, census
//! population versus observed accounts, tweets-per-account distributions,
//! binned tweet-volume time series, and geolocation coverage.

use crate::corpus::{location_at, tokenize, GroupLevel, MicroPost, TokenKind};
use crate::gazetteer::{Level, LocationHierarchy};
use chrono::{DateTime, Duration, Utc};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::{Read, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("census has no population for location `{unit_id}`, which has accounts")]
    MissingCensus { unit_id: String },
    #[error("census population for `{unit_id}` must be positive")]
    BadPopulation { unit_id: String },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Loads a census from CSV with header `unit_id,population`.
pub fn load_census<R: Read>(reader: R) -> Result<BTreeMap<String, u64>, AnalyticsError> {
    #[derive(serde::Deserialize)]
    struct Row {
        unit_id: String,
        population: u64,
    }
    let mut csv_reader = csv::Reader::from_reader(reader);
    let mut census = BTreeMap::new();
    for row in csv_reader.deserialize::<Row>() {
        let row = row?;
        census.insert(row.unit_id, row.population);
    }
    Ok(census)
}

// ---------------------------------------------------------------------------
// Discriminative hashtags
// ---------------------------------------------------------------------------

/// Ranked hashtags of one location.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocationHashtags {
    pub unit_id: String,
    /// (hashtag, TF-IDF score), scores non-increasing.
    pub hashtags: Vec<(String, f64)>,
}

/// Per-location hashtag ranking over hashtag-only location documents.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HashtagReport {
    pub level: GroupLevel,
    pub top_k: usize,
    pub min_distinct_tweets: usize,
    pub locations: Vec<LocationHashtags>,
}

/// Ranks the most location-specific hashtags: one hashtag-only document per
/// location, TF-IDF across those documents, hashtags used in fewer than
/// `min_distinct_tweets` distinct posts discarded, top `top_k` per location
/// returned (ties broken lexicographically). Locations whose hashtags are
/// all suppressed get an empty list.
pub fn discriminative_hashtags(
    posts: &[&MicroPost],
    hierarchy: &LocationHierarchy,
    level: GroupLevel,
    top_k: usize,
    min_distinct_tweets: usize,
) -> HashtagReport {
    let mut distinct_posts: HashMap<String, usize> = HashMap::new();
    for post in posts {
        let tags: HashSet<String> = hashtags_of(post);
        for tag in tags {
            *distinct_posts.entry(tag).or_insert(0) += 1;
        }
    }
    let qualifies =
        |tag: &str| distinct_posts.get(tag).copied().unwrap_or(0) >= min_distinct_tweets;

    // Hashtag-only documents, one per location; below-threshold hashtags
    // are dropped from the documents entirely.
    let mut docs: BTreeMap<String, BTreeMap<String, u32>> = BTreeMap::new();
    for post in posts {
        let Some(unit_id) = location_at(post, hierarchy, level) else {
            continue;
        };
        let doc = docs.entry(unit_id).or_default();
        for token in tokenize(&post.text) {
            if token.kind == TokenKind::Hashtag && qualifies(&token.surface) {
                *doc.entry(token.surface).or_insert(0) += 1;
            }
        }
    }

    let n_docs = docs.len() as f64;
    let mut df: HashMap<&str, u32> = HashMap::new();
    for doc in docs.values() {
        for tag in doc.keys() {
            *df.entry(tag).or_insert(0) += 1;
        }
    }

    let locations = docs
        .iter()
        .map(|(unit_id, doc)| {
            let mut scored: Vec<(String, f64)> = doc
                .iter()
                .filter_map(|(tag, &tf)| {
                    let idf = (n_docs / df[tag.as_str()] as f64).ln();
                    let score = tf as f64 * idf;
                    (score > 0.0).then(|| (tag.clone(), score))
                })
                .collect();
            scored.sort_by(|a, b| {
                b.1.partial_cmp(&a.1)
                    .expect("scores are finite")
                    .then_with(|| a.0.cmp(&b.0))
            });
            scored.truncate(top_k);
            LocationHashtags {
                unit_id: unit_id.clone(),
                hashtags: scored,
            }
        })
        .collect();

    HashtagReport {
        level,
        top_k,
        min_distinct_tweets,
        locations,
    }
}

fn hashtags_of(post: &MicroPost) -> HashSet<String> {
    tokenize(&post.text)
        .into_iter()
        .filter(|t| t.kind == TokenKind::Hashtag)
        .map(|t| t.surface)
        .collect()
}

impl HashtagReport {
    /// One CSV row per ranked hashtag.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut csv_writer = csv::Writer::from_writer(writer);
        csv_writer.write_record(["location", "rank", "hashtag", "score"])?;
        for location in &self.locations {
            for (rank, (tag, score)) in location.hashtags.iter().enumerate() {
                csv_writer.write_record([
                    location.unit_id.clone(),
                    (rank + 1).to_string(),
                    tag.clone(),
                    format!("{score:.6}"),
                ])?;
            }
        }
        csv_writer.flush()?;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Population vs accounts
// ---------------------------------------------------------------------------

/// One location's census and account figures.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocationPopulation {
    pub unit_id: String,
    pub population: u64,
    pub accounts: usize,
    pub accounts_per_1000: f64,
}

/// Census population against observed accounts, with the log-log Pearson
/// correlation over locations that have accounts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationReport {
    pub level: GroupLevel,
    pub locations: Vec<LocationPopulation>,
    /// Locations skipped by the correlation because no account resolved
    /// there.
    pub excluded_zero_accounts: Vec<String>,
    /// Pearson r of (ln population, ln accounts); absent with fewer than 3
    /// usable locations or zero variance on either axis.
    pub pearson_r: Option<f64>,
    /// Two-tailed p-value from a t-approximation with n−2 degrees of
    /// freedom.
    pub p_value: Option<f64>,
    pub per_1000_mean: f64,
    pub per_1000_std: f64,
}

/// Distinct accounts per location at the given level.
pub fn accounts_per_location(
    posts: &[&MicroPost],
    hierarchy: &LocationHierarchy,
    level: GroupLevel,
) -> BTreeMap<String, BTreeSet<String>> {
    let mut accounts: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for post in posts {
        if let Some(unit_id) = location_at(post, hierarchy, level) {
            accounts
                .entry(unit_id)
                .or_default()
                .insert(post.author_id.clone());
        }
    }
    accounts
}

/// Compares the virtual population (accounts) with the physical one
/// (census). Covers every unit at `level` present in the census; the
/// correlation and the accounts-per-1000 aggregates use locations with at
/// least one account.
pub fn population_correlation(
    posts: &[&MicroPost],
    hierarchy: &LocationHierarchy,
    level: GroupLevel,
    census: &BTreeMap<String, u64>,
) -> Result<PopulationReport, AnalyticsError> {
    let accounts = accounts_per_location(posts, hierarchy, level);
    for unit_id in accounts.keys() {
        match census.get(unit_id) {
            None => {
                return Err(AnalyticsError::MissingCensus {
                    unit_id: unit_id.clone(),
                })
            }
            Some(0) => {
                return Err(AnalyticsError::BadPopulation {
                    unit_id: unit_id.clone(),
                })
            }
            Some(_) => {}
        }
    }

    let mut locations = Vec::new();
    let mut excluded_zero_accounts = Vec::new();
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    let mut per_1000_values = Vec::new();
    for unit in hierarchy.units_at(level.as_level()) {
        let Some(&population) = census.get(&unit.id) else {
            continue;
        };
        let n_accounts = accounts.get(&unit.id).map_or(0, BTreeSet::len);
        let per_1000 = 1000.0 * n_accounts as f64 / population as f64;
        locations.push(LocationPopulation {
            unit_id: unit.id.clone(),
            population,
            accounts: n_accounts,
            accounts_per_1000: per_1000,
        });
        if n_accounts == 0 {
            excluded_zero_accounts.push(unit.id.clone());
        } else {
            pairs.push(((population as f64).ln(), (n_accounts as f64).ln()));
            per_1000_values.push(per_1000);
        }
    }
    locations.sort_by(|a, b| a.unit_id.cmp(&b.unit_id));

    let pearson_r = pearson(&pairs);
    let p_value = pearson_r.map(|r| pearson_p_value(r, pairs.len()));
    let (per_1000_mean, per_1000_std) = crate::eval::mean_std(&per_1000_values);

    Ok(PopulationReport {
        level,
        locations,
        excluded_zero_accounts,
        pearson_r,
        p_value,
        per_1000_mean,
        per_1000_std,
    })
}

/// Pearson correlation coefficient; `None` for fewer than 3 pairs or a
/// degenerate (zero-variance) axis.
pub fn pearson(pairs: &[(f64, f64)]) -> Option<f64> {
    let n = pairs.len() as f64;
    if pairs.len() < 3 {
        return None;
    }
    let mean_x = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for &(x, y) in pairs {
        cov += (x - mean_x) * (y - mean_y);
        var_x += (x - mean_x).powi(2);
        var_y += (y - mean_y).powi(2);
    }
    if var_x == 0.0 || var_y == 0.0 {
        return None;
    }
    Some(cov / (var_x * var_y).sqrt())
}

/// Two-tailed p-value for r under the t-distribution with n−2 degrees of
/// freedom.
fn pearson_p_value(r: f64, n: usize) -> f64 {
    let df = (n - 2) as f64;
    let denom = 1.0 - r * r;
    if denom <= f64::EPSILON {
        return 0.0;
    }
    let t = r.abs() * (df / denom).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("valid degrees of freedom");
    2.0 * (1.0 - dist.cdf(t))
}

impl PopulationReport {
    /// One CSV row per location plus a summary row.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut csv_writer = csv::Writer::from_writer(writer);
        csv_writer.write_record([
            "location",
            "population",
            "accounts",
            "accounts_per_1000",
        ])?;
        for row in &self.locations {
            csv_writer.write_record([
                row.unit_id.clone(),
                row.population.to_string(),
                row.accounts.to_string(),
                format!("{:.6}", row.accounts_per_1000),
            ])?;
        }
        let r = self
            .pearson_r
            .map_or(String::new(), |r| format!("{r:.6}"));
        csv_writer.write_record([
            "pearson_log_log".to_string(),
            r,
            format!("{:.6}", self.per_1000_mean),
            format!("{:.6}", self.per_1000_std),
        ])?;
        csv_writer.flush()?;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Tweets per account
// ---------------------------------------------------------------------------

/// Boxplot-style summary of one location's tweets-per-account counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocationActivity {
    pub unit_id: String,
    pub accounts: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
    pub std: f64,
    /// Accounts above Q3 + 1.5·IQR, most active first.
    pub outliers: Vec<(String, usize)>,
}

/// Tweets-per-account distribution per location and corpus-wide.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActivityReport {
    pub level: GroupLevel,
    pub locations: Vec<LocationActivity>,
    pub global_mean: f64,
    pub global_std: f64,
    pub global_median: f64,
}

/// Quartiles by the inclusive-median method: with an odd count the median
/// element belongs to both halves.
fn quartiles(sorted: &[f64]) -> (f64, f64, f64) {
    let n = sorted.len();
    let median_of = |slice: &[f64]| {
        let m = slice.len();
        if m % 2 == 1 {
            slice[m / 2]
        } else {
            (slice[m / 2 - 1] + slice[m / 2]) / 2.0
        }
    };
    let median = median_of(sorted);
    let (lower, upper) = if n % 2 == 1 {
        (&sorted[..=n / 2], &sorted[n / 2..])
    } else {
        (&sorted[..n / 2], &sorted[n / 2..])
    };
    (median_of(lower), median, median_of(upper))
}

/// Per-location tweets-per-account distributions with boxplot quartiles and
/// outlier flags; posts without a location at `level` are ignored.
pub fn activity_stats(
    posts: &[&MicroPost],
    hierarchy: &LocationHierarchy,
    level: GroupLevel,
) -> ActivityReport {
    let mut per_location: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    let mut global: BTreeMap<String, usize> = BTreeMap::new();
    for post in posts {
        let Some(unit_id) = location_at(post, hierarchy, level) else {
            continue;
        };
        *per_location
            .entry(unit_id)
            .or_default()
            .entry(post.author_id.clone())
            .or_insert(0) += 1;
        *global.entry(post.author_id.clone()).or_insert(0) += 1;
    }

    let locations = per_location
        .into_iter()
        .map(|(unit_id, by_account)| {
            let mut counts: Vec<f64> = by_account.values().map(|&c| c as f64).collect();
            counts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let (q1, median, q3) = quartiles(&counts);
            let (mean, std) = crate::eval::mean_std(&counts);
            let threshold = q3 + 1.5 * (q3 - q1);
            let mut outliers: Vec<(String, usize)> = by_account
                .into_iter()
                .filter(|&(_, count)| count as f64 > threshold)
                .collect();
            outliers.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            LocationActivity {
                unit_id,
                accounts: counts.len(),
                min: counts[0],
                q1,
                median,
                q3,
                max: counts[counts.len() - 1],
                mean,
                std,
                outliers,
            }
        })
        .collect();

    let mut global_counts: Vec<f64> = global.values().map(|&c| c as f64).collect();
    global_counts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let (global_mean, global_std) = crate::eval::mean_std(&global_counts);
    let global_median = if global_counts.is_empty() {
        0.0
    } else {
        quartiles(&global_counts).1
    };

    ActivityReport {
        level,
        locations,
        global_mean,
        global_std,
        global_median,
    }
}

impl ActivityReport {
    /// One CSV row per location plus a global summary row.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut csv_writer = csv::Writer::from_writer(writer);
        csv_writer.write_record([
            "location", "accounts", "min", "q1", "median", "q3", "max", "mean", "std",
            "outliers",
        ])?;
        for row in &self.locations {
            csv_writer.write_record([
                row.unit_id.clone(),
                row.accounts.to_string(),
                format!("{:.2}", row.min),
                format!("{:.2}", row.q1),
                format!("{:.2}", row.median),
                format!("{:.2}", row.q3),
                format!("{:.2}", row.max),
                format!("{:.4}", row.mean),
                format!("{:.4}", row.std),
                row.outliers.len().to_string(),
            ])?;
        }
        csv_writer.write_record([
            "global".to_string(),
            String::new(),
            String::new(),
            String::new(),
            format!("{:.2}", self.global_median),
            String::new(),
            String::new(),
            format!("{:.4}", self.global_mean),
            format!("{:.4}", self.global_std),
            String::new(),
        ])?;
        csv_writer.flush()?;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Time series
// ---------------------------------------------------------------------------

/// Tweet volume per location over fixed-width, epoch-aligned, half-open
/// time bins covering the corpus span.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSeries {
    pub level: GroupLevel,
    pub bin_width_secs: i64,
    /// Start of the first bin; absent for an empty corpus.
    pub window_start: Option<DateTime<Utc>>,
    pub locations: Vec<String>,
    /// counts[i][j] = posts of locations[i] in bin j.
    pub counts: Vec<Vec<u64>>,
}

/// Bins located posts into a locations × bins matrix. Bin edges are aligned
/// to multiples of the width since the Unix epoch, so identical corpora
/// always produce identical bins.
pub fn time_series(
    posts: &[&MicroPost],
    hierarchy: &LocationHierarchy,
    level: GroupLevel,
    bin_width: Duration,
) -> TimeSeries {
    let width = bin_width.num_seconds().max(1);
    let mut located: Vec<(String, i64)> = Vec::new();
    for post in posts {
        if let Some(unit_id) = location_at(post, hierarchy, level) {
            located.push((unit_id, post.timestamp.timestamp().div_euclid(width)));
        }
    }
    if located.is_empty() {
        return TimeSeries {
            level,
            bin_width_secs: width,
            window_start: None,
            locations: Vec::new(),
            counts: Vec::new(),
        };
    }

    let first_bin = located.iter().map(|&(_, b)| b).min().unwrap();
    let last_bin = located.iter().map(|&(_, b)| b).max().unwrap();
    let n_bins = (last_bin - first_bin + 1) as usize;
    let location_ids: BTreeSet<&str> = located.iter().map(|(u, _)| u.as_str()).collect();
    let locations: Vec<String> = location_ids.into_iter().map(String::from).collect();
    let row_of: HashMap<&str, usize> = locations
        .iter()
        .enumerate()
        .map(|(i, u)| (u.as_str(), i))
        .collect();

    let mut counts = vec![vec![0u64; n_bins]; locations.len()];
    for (unit_id, bin) in &located {
        counts[row_of[unit_id.as_str()]][(bin - first_bin) as usize] += 1;
    }

    TimeSeries {
        level,
        bin_width_secs: width,
        window_start: DateTime::from_timestamp(first_bin * width, 0),
        locations,
        counts,
    }
}

impl TimeSeries {
    pub fn n_bins(&self) -> usize {
        self.counts.first().map_or(0, Vec::len)
    }

    /// Long-form CSV: one row per location × bin.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut csv_writer = csv::Writer::from_writer(writer);
        csv_writer.write_record(["location", "bin_start", "count"])?;
        let Some(start) = self.window_start else {
            csv_writer.flush()?;
            return Ok(());
        };
        for (location, row) in self.locations.iter().zip(&self.counts) {
            for (j, &count) in row.iter().enumerate() {
                let bin_start = start + Duration::seconds(self.bin_width_secs * j as i64);
                csv_writer.write_record([
                    location.clone(),
                    bin_start.to_rfc3339(),
                    count.to_string(),
                ])?;
            }
        }
        csv_writer.flush()?;
        Ok(())
    }

    /// Heat-map SVG: one row per location, one cell per bin, darker cells
    /// for higher counts.
    pub fn to_svg(&self) -> String {
        const CELL_W: usize = 8;
        const CELL_H: usize = 16;
        const GUTTER: usize = 120;
        const HEADER: usize = 24;
        let n_bins = self.n_bins();
        let width = GUTTER + CELL_W * n_bins.max(1) + 8;
        let height = HEADER + CELL_H * self.locations.len().max(1) + 8;
        let max_count = self
            .counts
            .iter()
            .flatten()
            .copied()
            .max()
            .unwrap_or(0)
            .max(1);

        let mut svg = String::new();
        svg.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
             viewBox=\"0 0 {width} {height}\">\n"
        ));
        svg.push_str(&format!(
            "  <rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n"
        ));
        let title = match self.window_start {
            Some(start) => format!(
                "{} bins of {}s from {}",
                n_bins,
                self.bin_width_secs,
                start.to_rfc3339()
            ),
            None => "empty series".to_string(),
        };
        svg.push_str(&format!(
            "  <text x=\"4\" y=\"16\" font-family=\"monospace\" font-size=\"12\">{title}</text>\n"
        ));
        for (i, (location, row)) in self.locations.iter().zip(&self.counts).enumerate() {
            let y = HEADER + i * CELL_H;
            svg.push_str(&format!(
                "  <text x=\"4\" y=\"{}\" font-family=\"monospace\" font-size=\"11\">{}</text>\n",
                y + CELL_H - 4,
                location
            ));
            for (j, &count) in row.iter().enumerate() {
                let shade = 255 - (count as f64 / max_count as f64 * 255.0).round() as u8;
                svg.push_str(&format!(
                    "  <rect x=\"{}\" y=\"{}\" width=\"{CELL_W}\" height=\"{CELL_H}\" \
                     fill=\"rgb({shade},{shade},{shade})\"/>\n",
                    GUTTER + j * CELL_W,
                    y
                ));
            }
        }
        svg.push_str("</svg>\n");
        svg
    }
}

// ---------------------------------------------------------------------------
// Geolocation coverage
// ---------------------------------------------------------------------------

/// Resolution category of an account or post.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CoverageCategory {
    Country,
    Region,
    Province,
    Municipality,
    /// No profile location given at all.
    Empty,
    /// A profile location that matched nothing.
    Unresolved,
}

impl CoverageCategory {
    pub const ALL: [CoverageCategory; 6] = [
        CoverageCategory::Country,
        CoverageCategory::Region,
        CoverageCategory::Province,
        CoverageCategory::Municipality,
        CoverageCategory::Empty,
        CoverageCategory::Unresolved,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CoverageCategory::Country => "country",
            CoverageCategory::Region => "region",
            CoverageCategory::Province => "province",
            CoverageCategory::Municipality => "municipality",
            CoverageCategory::Empty => "empty",
            CoverageCategory::Unresolved => "unresolved",
        }
    }

    fn of(post: &MicroPost) -> Self {
        match (&post.profile_location, &post.author_location) {
            (None, _) => CoverageCategory::Empty,
            (Some(text), _) if text.trim().is_empty() => CoverageCategory::Empty,
            (Some(_), None) => CoverageCategory::Unresolved,
            (Some(_), Some(resolved)) => match resolved.level {
                Level::Country => CoverageCategory::Country,
                Level::Region => CoverageCategory::Region,
                Level::Province => CoverageCategory::Province,
                Level::Municipality => CoverageCategory::Municipality,
            },
        }
    }
}

/// Accounts and posts in one resolution category.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageRow {
    pub category: CoverageCategory,
    pub accounts: usize,
    pub accounts_pct: f64,
    pub posts: usize,
    pub posts_pct: f64,
}

/// How much of the corpus resolved, and how precisely.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub rows: Vec<CoverageRow>,
    pub total_accounts: usize,
    pub total_posts: usize,
}

/// Tallies the resolution level of every account and post. An account is
/// categorized by its first post in input order.
pub fn coverage(posts: &[&MicroPost]) -> CoverageReport {
    let mut post_counts: BTreeMap<CoverageCategory, usize> = BTreeMap::new();
    let mut account_counts: BTreeMap<CoverageCategory, usize> = BTreeMap::new();
    let mut seen_accounts: HashSet<&str> = HashSet::new();
    for post in posts {
        let category = CoverageCategory::of(post);
        *post_counts.entry(category).or_insert(0) += 1;
        if seen_accounts.insert(post.author_id.as_str()) {
            *account_counts.entry(category).or_insert(0) += 1;
        }
    }
    let total_posts = posts.len();
    let total_accounts = seen_accounts.len();
    let pct = |part: usize, whole: usize| {
        if whole == 0 {
            0.0
        } else {
            100.0 * part as f64 / whole as f64
        }
    };
    let rows = CoverageCategory::ALL
        .into_iter()
        .map(|category| {
            let accounts = account_counts.get(&category).copied().unwrap_or(0);
            let posts = post_counts.get(&category).copied().unwrap_or(0);
            CoverageRow {
                category,
                accounts,
                accounts_pct: pct(accounts, total_accounts),
                posts,
                posts_pct: pct(posts, total_posts),
            }
        })
        .collect();
    CoverageReport {
        rows,
        total_accounts,
        total_posts,
    }
}

impl CoverageReport {
    /// One CSV row per category.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut csv_writer = csv::Writer::from_writer(writer);
        csv_writer.write_record([
            "category",
            "accounts",
            "accounts_pct",
            "posts",
            "posts_pct",
        ])?;
        for row in &self.rows {
            csv_writer.write_record([
                row.category.as_str().to_string(),
                row.accounts.to_string(),
                format!("{:.2}", row.accounts_pct),
                row.posts.to_string(),
                format!("{:.2}", row.posts_pct),
            ])?;
        }
        csv_writer.flush()?;
        Ok(())
    }
}
