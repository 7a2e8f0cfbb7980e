//! Synthetic corpus generator. Plants a per-location vocabulary with a
//! controllable population skew and local/shared mixing ratio, then emits
//! the same post JSONL, hierarchy CSV, and census CSV the pipeline ingests.

use crate::corpus::PostRecord;
use crate::gazetteer::{AdminUnit, Level, LocationHierarchy};
use chrono::{Duration, TimeZone, Utc};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::io;
use std::path::Path;
use thiserror::Error;

/// Country name used in every generated hierarchy.
pub const COUNTRY_NAME: &str = "Altiplania";
/// Population assigned to the most-weighted location; the rest scale down
/// by their Zipf weight. Divisible by 1..=5 so small configurations get
/// exact ratios.
const POPULATION_SCALE: f64 = 600_000.0;
/// Posting window: a single day, 08:00 to 22:00 UTC.
const WINDOW_SECONDS: i64 = 14 * 3600;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_locations: usize,
    /// Zipf exponent for the location weights (s = 0 is uniform).
    pub zipf_exponent: f64,
    /// Mean number of users per location; users are spread across
    /// locations proportionally to the Zipf weights.
    pub users_per_location: usize,
    /// Mean of the geometric posts-per-user distribution (support starts
    /// at 1).
    pub posts_per_user_mean: f64,
    pub shared_vocabulary: usize,
    /// Size of each location's private vocabulary; the per-location
    /// vocabularies are pairwise disjoint.
    pub local_vocabulary: usize,
    /// Probability that a token is drawn from the author's local
    /// vocabulary rather than the shared one.
    pub mixing: f64,
    /// Probability that a token is rendered as a hashtag.
    pub hashtag_fraction: f64,
    pub tokens_per_post: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_locations: 5,
            zipf_exponent: 1.0,
            users_per_location: 40,
            posts_per_user_mean: 3.0,
            shared_vocabulary: 400,
            local_vocabulary: 40,
            mixing: 0.3,
            hashtag_fraction: 0.1,
            tokens_per_post: 8,
            seed: 42,
        }
    }
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid generator config: {message}")]
    InvalidConfig { message: String },
}

fn invalid(message: impl Into<String>) -> SynthError {
    SynthError::InvalidConfig {
        message: message.into(),
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<(), SynthError> {
        if self.n_locations == 0 {
            return Err(invalid("n_locations must be at least 1"));
        }
        if self.users_per_location == 0 {
            return Err(invalid("users_per_location must be at least 1"));
        }
        if self.shared_vocabulary == 0 || self.local_vocabulary == 0 {
            return Err(invalid("vocabulary sizes must be at least 1"));
        }
        if self.tokens_per_post == 0 {
            return Err(invalid("tokens_per_post must be at least 1"));
        }
        if !(self.zipf_exponent >= 0.0) {
            return Err(invalid("zipf_exponent must be >= 0"));
        }
        if !(self.posts_per_user_mean >= 1.0) {
            return Err(invalid("posts_per_user_mean must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.mixing) {
            return Err(invalid("mixing must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.hashtag_fraction) {
            return Err(invalid("hashtag_fraction must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// A generated corpus plus its ground truth.
#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub posts: Vec<PostRecord>,
    pub hierarchy: LocationHierarchy,
    /// Province id -> census population.
    pub census: BTreeMap<String, u64>,
    /// Author id -> province id the author was planted in.
    pub user_locations: BTreeMap<String, String>,
    /// Province ids in weight rank order (heaviest first).
    pub provinces: Vec<String>,
}

/// Normalized Zipf weights w_i = (1/i^s) / H for ranks 1..=n.
pub fn zipf_weights(n: usize, s: f64) -> Vec<f64> {
    let raw: Vec<f64> = (1..=n).map(|i| 1.0 / (i as f64).powf(s)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Splits `total` into integer shares proportional to `weights` by largest
/// remainder, extras going to the largest fractional parts (rank order on
/// ties). Every share is forced to at least 1 by borrowing from the
/// current maximum.
pub fn proportional_shares(total: usize, weights: &[f64]) -> Vec<usize> {
    let quotas: Vec<f64> = weights.iter().map(|w| w * total as f64).collect();
    let mut shares: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = shares.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        shares[i] += 1;
    }
    while let Some(zero) = shares.iter().position(|&s| s == 0) {
        let max = (0..shares.len())
            .max_by_key(|&i| shares[i])
            .expect("non-empty shares");
        if shares[max] <= 1 {
            break;
        }
        shares[max] -= 1;
        shares[zero] += 1;
    }
    shares
}

fn build_hierarchy(n_locations: usize) -> LocationHierarchy {
    let mut units = vec![AdminUnit {
        id: "C".into(),
        name: COUNTRY_NAME.into(),
        level: Level::Country,
        parent_id: None,
    }];
    for i in 1..=n_locations {
        units.push(AdminUnit {
            id: format!("R{i:02}"),
            name: format!("Región {i:02}"),
            level: Level::Region,
            parent_id: Some("C".into()),
        });
        units.push(AdminUnit {
            id: format!("P{i:02}"),
            name: format!("Provincia {i:02}"),
            level: Level::Province,
            parent_id: Some(format!("R{i:02}")),
        });
        units.push(AdminUnit {
            id: format!("M{i:02}"),
            name: format!("Villa {i:02}"),
            level: Level::Municipality,
            parent_id: Some(format!("P{i:02}")),
        });
    }
    LocationHierarchy::new(units).expect("generated hierarchy is valid")
}

/// Profile strings for rank `i`; all resolve unambiguously to the user's
/// municipality or province, in mixed case to exercise normalization.
fn profile_surfaces(i: usize) -> [String; 5] {
    [
        format!("Villa {i:02}"),
        format!("Provincia {i:02}"),
        format!("PROVINCIA {i:02}"),
        format!("Villa {i:02}, Provincia {i:02}"),
        format!("Provincia {i:02}, {COUNTRY_NAME}"),
    ]
}

/// Cumulative distribution for Zipf(1)-weighted draws over a vocabulary,
/// mirroring the frequency skew of natural-language unigrams: a handful of
/// very common words and a long tail of rare ones.
struct SkewedSampler {
    cumulative: Vec<f64>,
}

impl SkewedSampler {
    fn new(n: usize) -> Self {
        let mut cumulative = Vec::with_capacity(n);
        let mut total = 0.0;
        for i in 1..=n {
            total += 1.0 / i as f64;
            cumulative.push(total);
        }
        SkewedSampler { cumulative }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> usize {
        let u: f64 = rng.gen::<f64>() * self.cumulative.last().copied().unwrap_or(1.0);
        self.cumulative.partition_point(|&c| c <= u)
    }
}

/// Geometric draw on {1, 2, ...} with the given mean.
fn sample_post_count(rng: &mut ChaCha8Rng, mean: f64) -> usize {
    let p = (1.0 / mean).min(1.0);
    if p >= 1.0 {
        return 1;
    }
    let u: f64 = rng.gen();
    let draws = ((1.0 - u).ln() / (1.0 - p).ln()).ceil() as usize;
    draws.max(1)
}

/// Generates a corpus: users are planted in provinces with Zipf-weighted
/// population shares, every token is drawn from the author's local
/// vocabulary with probability `mixing` and from the shared vocabulary
/// otherwise, and census populations follow the same weights. Local draws
/// are uniform; shared draws are Zipf(1)-skewed like natural-language
/// unigrams. Identical configs produce identical output byte for byte.
pub fn generate(config: &SynthConfig) -> Result<SynthCorpus, SynthError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.n_locations;
    let weights = zipf_weights(n, config.zipf_exponent);
    let hierarchy = build_hierarchy(n);
    let provinces: Vec<String> = (1..=n).map(|i| format!("P{i:02}")).collect();

    let census: BTreeMap<String, u64> = provinces
        .iter()
        .zip(&weights)
        .map(|(id, &w)| {
            let population = (POPULATION_SCALE * w / weights[0]).round() as u64;
            (id.clone(), population.max(1))
        })
        .collect();

    let total_users = n * config.users_per_location;
    let users_per_rank = proportional_shares(total_users, &weights);

    let shared: Vec<String> = (0..config.shared_vocabulary)
        .map(|j| format!("com{j:04}"))
        .collect();
    let locals: Vec<Vec<String>> = (1..=n)
        .map(|i| {
            (0..config.local_vocabulary)
                .map(|j| format!("loc{i:02}w{j:03}"))
                .collect()
        })
        .collect();

    let shared_sampler = SkewedSampler::new(shared.len());
    let window_start = Utc.with_ymd_and_hms(2012, 10, 28, 8, 0, 0).unwrap();
    let mut posts = Vec::new();
    let mut user_locations = BTreeMap::new();
    let mut user_seq = 0usize;
    let mut post_seq = 0usize;

    for (rank_idx, &n_users) in users_per_rank.iter().enumerate() {
        let rank = rank_idx + 1;
        let surfaces = profile_surfaces(rank);
        let local = &locals[rank_idx];
        for _ in 0..n_users {
            user_seq += 1;
            let author_id = format!("u{user_seq:05}");
            let profile = surfaces[rng.gen_range(0..surfaces.len())].clone();
            user_locations.insert(author_id.clone(), provinces[rank_idx].clone());
            let n_posts = sample_post_count(&mut rng, config.posts_per_user_mean);
            for _ in 0..n_posts {
                post_seq += 1;
                let mut words = Vec::with_capacity(config.tokens_per_post);
                for _ in 0..config.tokens_per_post {
                    let word = if rng.gen_bool(config.mixing) {
                        &local[rng.gen_range(0..local.len())]
                    } else {
                        &shared[shared_sampler.draw(&mut rng)]
                    };
                    if rng.gen_bool(config.hashtag_fraction) {
                        words.push(format!("#{word}"));
                    } else {
                        words.push(word.clone());
                    }
                }
                let offset = rng.gen_range(0..WINDOW_SECONDS);
                posts.push(PostRecord {
                    id: format!("t{post_seq:06}"),
                    author_id: author_id.clone(),
                    text: words.join(" "),
                    timestamp: window_start + Duration::seconds(offset),
                    is_repost: false,
                    reply_to: None,
                    author_profile_location: Some(profile.clone()),
                    lat: None,
                    lon: None,
                });
            }
        }
    }

    Ok(SynthCorpus {
        posts,
        hierarchy,
        census,
        user_locations,
        provinces,
    })
}

impl SynthCorpus {
    /// The post corpus as line-delimited JSON.
    pub fn posts_jsonl(&self) -> String {
        let mut out = String::new();
        for post in &self.posts {
            out.push_str(&serde_json::to_string(post).expect("posts serialize"));
            out.push('\n');
        }
        out
    }

    /// The administrative hierarchy as `id,name,level,parent_id` CSV.
    pub fn hierarchy_csv(&self) -> String {
        let mut out = String::from("id,name,level,parent_id\n");
        for unit in self.hierarchy.units() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                unit.id,
                unit.name,
                unit.level,
                unit.parent_id.as_deref().unwrap_or("")
            ));
        }
        out
    }

    /// The census as `unit_id,population` CSV, heaviest province first.
    pub fn census_csv(&self) -> String {
        let mut out = String::from("unit_id,population\n");
        for province in &self.provinces {
            out.push_str(&format!("{},{}\n", province, self.census[province]));
        }
        out
    }

    /// Writes `posts.jsonl`, `hierarchy.csv`, and `census.csv` into `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("posts.jsonl"), self.posts_jsonl())?;
        std::fs::write(dir.join("hierarchy.csv"), self.hierarchy_csv())?;
        std::fs::write(dir.join("census.csv"), self.census_csv())?;
        Ok(())
    }
}
