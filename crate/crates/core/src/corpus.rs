//! Micro-post ingestion, tokenization, and document grouping.
//!
//! Posts arrive as JSON-lines, are tokenized into lowercase NFC words and
//! hashtags (mentions and URLs dropped), and are grouped into bag-of-words
//! documents three ways: one document per author, one per administrative
//! unit, or one per frequently used hashtag.

use crate::gazetteer::{Level, LocationHierarchy, NameIndex, ResolvedLocation};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::BufRead;
use thiserror::Error;

/// Wire format of one post record, as read from and written to JSON-lines.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PostRecord {
    pub id: String,
    pub author_id: String,
    pub text: String,
    pub timestamp: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub is_repost: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reply_to: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub author_profile_location: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lon: Option<f64>,
}

fn is_false(value: &bool) -> bool {
    !*value
}

/// One ingested micro-post. `author_location` is filled by
/// [`resolve_authors`] once a gazetteer index is available;
/// `profile_location` keeps the raw self-reported string for coverage
/// statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicroPost {
    pub id: String,
    pub author_id: String,
    pub text: String,
    pub timestamp: DateTime<Utc>,
    pub is_repost: bool,
    pub reply_to: Option<String>,
    pub profile_location: Option<String>,
    pub author_location: Option<ResolvedLocation>,
    pub lat: Option<f64>,
    pub lon: Option<f64>,
}

impl From<PostRecord> for MicroPost {
    fn from(record: PostRecord) -> Self {
        MicroPost {
            id: record.id,
            author_id: record.author_id,
            text: record.text,
            timestamp: record.timestamp,
            is_repost: record.is_repost,
            reply_to: record.reply_to,
            profile_location: record.author_profile_location,
            author_location: None,
            lat: record.lat,
            lon: record.lon,
        }
    }
}

/// A single normalized token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub kind: TokenKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Word,
    Hashtag,
}

/// A bag-of-words document produced by [`group`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    /// Author id, location unit id, or hashtag surface, per strategy.
    pub doc_id: String,
    pub counts: BTreeMap<String, u32>,
    pub n_posts: usize,
}

/// The administrative level a classifier or report operates at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupLevel {
    Province,
    Region,
}

impl GroupLevel {
    pub fn as_level(self) -> Level {
        match self {
            GroupLevel::Province => Level::Province,
            GroupLevel::Region => Level::Region,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GroupLevel::Province => "province",
            GroupLevel::Region => "region",
        }
    }
}

/// How posts are collapsed into documents.
#[derive(Debug, Clone, PartialEq)]
pub enum GroupingStrategy {
    /// One document per geolocated author.
    ByUser,
    /// One document per administrative unit at the given level.
    ByLocation(GroupLevel),
    /// One document per retained hashtag: hashtags ranked by the number of
    /// distinct posts using them, the `skip_top` most frequent discarded,
    /// then the top `top_fraction` of all distinct hashtags kept.
    ByHashtag { top_fraction: f64, skip_top: usize },
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read post source: {0}")]
    Io(#[from] std::io::Error),
    #[error("{malformed} of {total} lines malformed (>10%); first problems: {sample:?}")]
    TooManyMalformed {
        malformed: usize,
        total: usize,
        sample: Vec<String>,
    },
    #[error("hashtag grouping requested but the corpus contains no hashtags")]
    NoHashtags,
    #[error("top_fraction must be in (0, 1], got {0}")]
    BadTopFraction(f64),
}

/// A skipped input line, with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IngestWarning {
    pub line: usize,
    pub message: String,
}

/// Result of ingesting a JSON-lines source.
#[derive(Debug)]
pub struct Ingested {
    pub posts: Vec<MicroPost>,
    pub warnings: Vec<IngestWarning>,
}

/// Reads posts from a JSON-lines source, preserving input order.
///
/// Blank lines are skipped silently. Malformed lines (bad JSON, missing or
/// empty required fields, invalid timestamps) are skipped with a warning;
/// if they exceed 10% of non-blank lines the whole ingest aborts. A
/// duplicate post id is skipped with a warning but does not count as
/// malformed.
pub fn ingest<R: BufRead>(reader: R) -> Result<Ingested, CorpusError> {
    let mut posts = Vec::new();
    let mut warnings = Vec::new();
    let mut seen_ids = HashSet::new();
    let mut total = 0usize;
    let mut malformed = 0usize;

    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        total += 1;
        match parse_line(&line) {
            Ok(record) => {
                if !seen_ids.insert(record.id.clone()) {
                    warnings.push(IngestWarning {
                        line: line_no,
                        message: format!("duplicate post id `{}`", record.id),
                    });
                    continue;
                }
                posts.push(MicroPost::from(record));
            }
            Err(message) => {
                malformed += 1;
                warnings.push(IngestWarning {
                    line: line_no,
                    message,
                });
            }
        }
    }

    if malformed * 10 > total {
        let sample = warnings
            .iter()
            .take(5)
            .map(|w| format!("line {}: {}", w.line, w.message))
            .collect();
        return Err(CorpusError::TooManyMalformed {
            malformed,
            total,
            sample,
        });
    }
    Ok(Ingested { posts, warnings })
}

fn parse_line(line: &str) -> Result<PostRecord, String> {
    let record: PostRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    if record.id.trim().is_empty() {
        return Err("empty id".into());
    }
    if record.author_id.trim().is_empty() {
        return Err("empty author_id".into());
    }
    if record.text.trim().is_empty() {
        return Err("empty text".into());
    }
    Ok(record)
}

/// Fills `author_location` on every post from its raw profile string.
pub fn resolve_authors(posts: &mut [MicroPost], index: &NameIndex) {
    for post in posts {
        post.author_location = post
            .profile_location
            .as_deref()
            .and_then(|text| index.resolve(text));
    }
}

/// Splits text into normalized tokens: lowercase, Unicode NFC, hashtags
/// kept with their `#`, user mentions and URLs dropped, punctuation-only
/// fragments dropped.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    for raw in text.split_whitespace() {
        if raw.starts_with('@') || is_url(raw) {
            continue;
        }
        if let Some(body) = raw.strip_prefix('#') {
            let surface = crate::gazetteer::normalize(body);
            if !surface.is_empty() {
                tokens.push(Token {
                    surface: format!("#{surface}"),
                    kind: TokenKind::Hashtag,
                });
            }
        } else {
            let surface = crate::gazetteer::normalize(raw);
            if !surface.is_empty() {
                tokens.push(Token {
                    surface,
                    kind: TokenKind::Word,
                });
            }
        }
    }
    tokens
}

fn is_url(raw: &str) -> bool {
    let lower = raw.to_ascii_lowercase();
    lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.")
}

/// The post's author location mapped up to the given level, when the
/// author resolved at or below it.
pub fn location_at(
    post: &MicroPost,
    hierarchy: &LocationHierarchy,
    level: GroupLevel,
) -> Option<String> {
    let resolved = post.author_location.as_ref()?;
    hierarchy
        .ancestor_at(&resolved.unit_id, level.as_level())
        .map(|unit| unit.id.clone())
}

/// Drops reposts and replies, keeping original posts only.
pub fn filter_for_training<'a>(posts: &'a [MicroPost]) -> Vec<&'a MicroPost> {
    posts
        .iter()
        .filter(|p| !p.is_repost && p.reply_to.is_none())
        .collect()
}

/// Collapses posts into bag-of-words documents under the given strategy.
///
/// `ByUser` keeps one document per author with a resolved location;
/// `ByLocation` maps each author's location up to the requested level and
/// keeps one document per unit (posts resolved only to coarser levels are
/// excluded); `ByHashtag` keeps one document per retained hashtag holding
/// every token of every post that mentions it.
pub fn group(
    posts: &[&MicroPost],
    strategy: &GroupingStrategy,
    hierarchy: &LocationHierarchy,
) -> Result<Vec<Document>, CorpusError> {
    match strategy {
        GroupingStrategy::ByUser => {
            let mut docs: BTreeMap<&str, Document> = BTreeMap::new();
            for post in posts {
                if post.author_location.is_none() {
                    continue;
                }
                add_post(docs.entry(&post.author_id).or_insert_with(|| Document {
                    doc_id: post.author_id.clone(),
                    counts: BTreeMap::new(),
                    n_posts: 0,
                }), post);
            }
            Ok(docs.into_values().collect())
        }
        GroupingStrategy::ByLocation(level) => {
            let mut docs: BTreeMap<String, Document> = BTreeMap::new();
            for post in posts {
                let Some(resolved) = &post.author_location else {
                    continue;
                };
                let Some(unit) = hierarchy.ancestor_at(&resolved.unit_id, level.as_level())
                else {
                    continue;
                };
                add_post(
                    docs.entry(unit.id.clone()).or_insert_with(|| Document {
                        doc_id: unit.id.clone(),
                        counts: BTreeMap::new(),
                        n_posts: 0,
                    }),
                    post,
                );
            }
            Ok(docs.into_values().collect())
        }
        GroupingStrategy::ByHashtag {
            top_fraction,
            skip_top,
        } => group_by_hashtag(posts, *top_fraction, *skip_top),
    }
}

fn add_post(doc: &mut Document, post: &MicroPost) {
    for token in tokenize(&post.text) {
        *doc.counts.entry(token.surface).or_insert(0) += 1;
    }
    doc.n_posts += 1;
}

/// Ranks hashtags by distinct-post frequency (ties broken lexicographically)
/// and returns the retained ones, most frequent first.
pub fn ranked_hashtags(posts: &[&MicroPost]) -> Vec<(String, usize)> {
    let mut distinct_posts: HashMap<String, usize> = HashMap::new();
    for post in posts {
        let mut in_post: HashSet<String> = HashSet::new();
        for token in tokenize(&post.text) {
            if token.kind == TokenKind::Hashtag {
                in_post.insert(token.surface);
            }
        }
        for tag in in_post {
            *distinct_posts.entry(tag).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(String, usize)> = distinct_posts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked
}

fn group_by_hashtag(
    posts: &[&MicroPost],
    top_fraction: f64,
    skip_top: usize,
) -> Result<Vec<Document>, CorpusError> {
    if !(top_fraction > 0.0 && top_fraction <= 1.0) {
        return Err(CorpusError::BadTopFraction(top_fraction));
    }
    let ranked = ranked_hashtags(posts);
    if ranked.is_empty() {
        return Err(CorpusError::NoHashtags);
    }
    let take = ((ranked.len() as f64 * top_fraction).floor() as usize).max(1);
    let retained: Vec<&str> = ranked
        .iter()
        .skip(skip_top)
        .take(take)
        .map(|(tag, _)| tag.as_str())
        .collect();

    let mut docs: Vec<Document> = retained
        .iter()
        .map(|tag| Document {
            doc_id: tag.to_string(),
            counts: BTreeMap::new(),
            n_posts: 0,
        })
        .collect();
    let doc_index: HashMap<&str, usize> = retained
        .iter()
        .enumerate()
        .map(|(i, tag)| (*tag, i))
        .collect();

    for post in posts {
        let tokens = tokenize(&post.text);
        let mut mentioned: HashSet<usize> = HashSet::new();
        for token in &tokens {
            if token.kind == TokenKind::Hashtag {
                if let Some(&i) = doc_index.get(token.surface.as_str()) {
                    mentioned.insert(i);
                }
            }
        }
        for &i in &mentioned {
            let doc = &mut docs[i];
            for token in &tokens {
                *doc.counts.entry(token.surface.clone()).or_insert(0) += 1;
            }
            doc.n_posts += 1;
        }
    }
    Ok(docs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gazetteer::{expand_templates, AdminUnit, LocationHierarchy};
    use proptest::prelude::*;

    fn post(id: &str, author: &str, text: &str) -> MicroPost {
        MicroPost {
            id: id.into(),
            author_id: author.into(),
            text: text.into(),
            timestamp: "2012-10-28T10:00:00Z".parse().unwrap(),
            is_repost: false,
            reply_to: None,
            profile_location: None,
            author_location: None,
            lat: None,
            lon: None,
        }
    }

    fn located(id: &str, author: &str, text: &str, unit: &str, level: Level) -> MicroPost {
        let mut p = post(id, author, text);
        p.author_location = Some(ResolvedLocation {
            unit_id: unit.into(),
            level,
        });
        p
    }

    fn two_region_hierarchy() -> LocationHierarchy {
        let unit = |id: &str, name: &str, level, parent: Option<&str>| AdminUnit {
            id: id.into(),
            name: name.into(),
            level,
            parent_id: parent.map(String::from),
        };
        LocationHierarchy::new(vec![
            unit("c", "Land", Level::Country, None),
            unit("r1", "North", Level::Region, Some("c")),
            unit("r2", "South", Level::Region, Some("c")),
            unit("p1", "Upper", Level::Province, Some("r1")),
            unit("p2", "Lower", Level::Province, Some("r2")),
            unit("p3", "Coast", Level::Province, Some("r2")),
            unit("m1", "Alfa", Level::Municipality, Some("p1")),
        ])
        .unwrap()
    }

    #[test]
    fn ingest_preserves_valid_lines_in_order() {
        let lines = r#"{"id":"1","author_id":"u1","text":"hola","timestamp":"2012-10-28T10:00:00Z"}
{"id":"2","author_id":"u2","text":"chao","timestamp":"2012-10-28T10:01:00Z"}

{"id":"3","author_id":"u1","text":"otra","timestamp":"2012-10-28T10:02:00Z","is_repost":true}
"#;
        let out = ingest(lines.as_bytes()).unwrap();
        assert!(out.warnings.is_empty());
        let ids: Vec<&str> = out.posts.iter().map(|p| p.id.as_str()).collect();
        assert_eq!(ids, ["1", "2", "3"]);
        assert!(out.posts[2].is_repost);
    }

    #[test]
    fn missing_text_is_skipped_with_line_number() {
        let lines = r#"{"id":"1","author_id":"u1","text":"ok","timestamp":"2012-10-28T10:00:00Z"}
{"id":"2","author_id":"u2","timestamp":"2012-10-28T10:01:00Z"}
{"id":"3","author_id":"u3","text":"ok","timestamp":"2012-10-28T10:02:00Z"}
{"id":"4","author_id":"u4","text":"ok","timestamp":"2012-10-28T10:03:00Z"}
{"id":"5","author_id":"u5","text":"ok","timestamp":"2012-10-28T10:04:00Z"}
{"id":"6","author_id":"u6","text":"ok","timestamp":"2012-10-28T10:05:00Z"}
{"id":"7","author_id":"u7","text":"ok","timestamp":"2012-10-28T10:06:00Z"}
{"id":"8","author_id":"u8","text":"ok","timestamp":"2012-10-28T10:07:00Z"}
{"id":"9","author_id":"u9","text":"ok","timestamp":"2012-10-28T10:08:00Z"}
{"id":"10","author_id":"u10","text":"ok","timestamp":"2012-10-28T10:09:00Z"}
{"id":"11","author_id":"u11","text":"ok","timestamp":"2012-10-28T10:10:00Z"}"#;
        let out = ingest(lines.as_bytes()).unwrap();
        assert_eq!(out.posts.len(), 10);
        assert_eq!(out.warnings.len(), 1);
        assert_eq!(out.warnings[0].line, 2);
    }

    #[test]
    fn duplicate_id_skipped_but_not_malformed() {
        let lines = r#"{"id":"1","author_id":"u1","text":"a","timestamp":"2012-10-28T10:00:00Z"}
{"id":"1","author_id":"u2","text":"b","timestamp":"2012-10-28T10:01:00Z"}"#;
        let out = ingest(lines.as_bytes()).unwrap();
        assert_eq!(out.posts.len(), 1);
        assert_eq!(out.posts[0].author_id, "u1");
        assert_eq!(out.warnings.len(), 1);
    }

    #[test]
    fn too_many_malformed_lines_abort() {
        let lines = r#"{"id":"1","author_id":"u1","text":"ok","timestamp":"2012-10-28T10:00:00Z"}
not json at all
{"id":"2","author_id":"u2","text":"","timestamp":"2012-10-28T10:01:00Z"}
{"id":"3","author_id":"u3","text":"ok","timestamp":"bad-stamp"}"#;
        let err = ingest(lines.as_bytes()).unwrap_err();
        match err {
            CorpusError::TooManyMalformed {
                malformed, total, ..
            } => {
                assert_eq!(malformed, 3);
                assert_eq!(total, 4);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn exactly_ten_percent_malformed_is_tolerated() {
        let mut lines = String::from("{\"id\":\"0\",\"author_id\":\"u\",\"text\":\"\",\"timestamp\":\"2012-10-28T10:00:00Z\"}\n");
        for i in 1..10 {
            lines.push_str(&format!(
                "{{\"id\":\"{i}\",\"author_id\":\"u\",\"text\":\"ok\",\"timestamp\":\"2012-10-28T10:00:00Z\"}}\n"
            ));
        }
        let out = ingest(lines.as_bytes()).unwrap();
        assert_eq!(out.posts.len(), 9);
        assert_eq!(out.warnings.len(), 1);
    }

    #[test]
    fn tokenize_drops_urls_and_mentions() {
        let tokens = tokenize("Vota #Iquique YA http://t.co/x @medio");
        let surfaces: Vec<&str> = tokens.iter().map(|t| t.surface.as_str()).collect();
        assert_eq!(surfaces, ["vota", "#iquique", "ya"]);
        assert_eq!(tokens[1].kind, TokenKind::Hashtag);
    }

    #[test]
    fn tokenize_case_folds_hashtags_together() {
        let tokens = tokenize("#Municipales2012 #municipales2012");
        let surfaces: Vec<&str> = tokens.iter().map(|t| t.surface.as_str()).collect();
        assert_eq!(surfaces, ["#municipales2012", "#municipales2012"]);
    }

    #[test]
    fn tokenize_edge_cases() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("!!! ... @a @b WWW.site.com HTTPS://x.y").is_empty());
        let tokens = tokenize("VALPARAÍSO, gana.");
        let surfaces: Vec<&str> = tokens.iter().map(|t| t.surface.as_str()).collect();
        assert_eq!(surfaces, ["valparaíso", "gana"]);
        // A bare `#` carries no body and is dropped.
        assert!(tokenize("# #!").is_empty());
    }

    #[test]
    fn training_filter_removes_reposts_and_replies() {
        let mut repost = post("2", "u", "rt contenido");
        repost.is_repost = true;
        let mut reply = post("3", "u", "respuesta");
        reply.reply_to = Some("1".into());
        let posts = vec![post("1", "u", "original"), repost, reply];
        let kept = filter_for_training(&posts);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].id, "1");
    }

    #[test]
    fn group_by_user_counts_documents_and_posts() {
        let h = two_region_hierarchy();
        let posts = vec![
            located("1", "ana", "hola mundo", "p1", Level::Province),
            located("2", "ana", "hola norte", "p1", Level::Province),
            located("3", "ben", "frio sur", "p2", Level::Province),
            located("4", "ben", "mar sur", "p2", Level::Province),
            post("5", "caro", "sin lugar"),
        ];
        let refs: Vec<&MicroPost> = posts.iter().collect();
        let docs = group(&refs, &GroupingStrategy::ByUser, &h).unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[0].doc_id, "ana");
        assert_eq!(docs[0].n_posts, 2);
        assert_eq!(docs[0].counts["hola"], 2);
        assert_eq!(docs[1].doc_id, "ben");
        assert_eq!(docs[1].counts["sur"], 2);
    }

    #[test]
    fn group_by_location_matches_brute_force_tally() {
        let h = two_region_hierarchy();
        let posts = vec![
            located("1", "a", "uno dos", "p1", Level::Province),
            located("2", "b", "dos tres", "p1", Level::Province),
            located("3", "c", "mar", "p2", Level::Province),
            located("4", "d", "mar sol", "p2", Level::Province),
            located("5", "e", "costa", "p3", Level::Province),
            located("6", "f", "alfa", "m1", Level::Municipality),
            located("7", "g", "pais", "c", Level::Country),
            located("8", "h", "norte", "r1", Level::Region),
            located("9", "i", "uno", "p1", Level::Province),
            located("10", "j", "sol", "p2", Level::Province),
        ];
        let refs: Vec<&MicroPost> = posts.iter().collect();
        let docs = group(&refs, &GroupingStrategy::ByLocation(GroupLevel::Province), &h).unwrap();

        // Independent tally: walk each post's resolved unit up by hand.
        let mut expected: BTreeMap<String, BTreeMap<String, u32>> = BTreeMap::new();
        let mut expected_posts: BTreeMap<String, usize> = BTreeMap::new();
        for p in &posts {
            let Some(r) = &p.author_location else { continue };
            let province = match (r.level, r.unit_id.as_str()) {
                (Level::Province, id) => id.to_string(),
                (Level::Municipality, "m1") => "p1".to_string(),
                _ => continue,
            };
            let tally = expected.entry(province.clone()).or_default();
            for t in tokenize(&p.text) {
                *tally.entry(t.surface).or_insert(0) += 1;
            }
            *expected_posts.entry(province).or_insert(0) += 1;
        }
        assert_eq!(docs.len(), expected.len());
        for doc in &docs {
            assert_eq!(doc.counts, expected[&doc.doc_id]);
            assert_eq!(doc.n_posts, expected_posts[&doc.doc_id]);
        }
    }

    #[test]
    fn region_grouping_maps_provinces_up() {
        let h = two_region_hierarchy();
        let posts = vec![
            located("1", "a", "uno", "p1", Level::Province),
            located("2", "b", "dos", "p2", Level::Province),
            located("3", "c", "tres", "p3", Level::Province),
            located("4", "d", "cuatro", "r2", Level::Region),
        ];
        let refs: Vec<&MicroPost> = posts.iter().collect();
        let docs = group(&refs, &GroupingStrategy::ByLocation(GroupLevel::Region), &h).unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[0].doc_id, "r1");
        assert_eq!(docs[0].n_posts, 1);
        assert_eq!(docs[1].doc_id, "r2");
        assert_eq!(docs[1].n_posts, 3);
    }

    #[test]
    fn hashtag_grouping_applies_skip_and_cutoff() {
        let h = two_region_hierarchy();
        // Distinct-post frequencies: #a=4, #b=3, #c=2, #d=1.
        let posts = vec![
            post("1", "u1", "#a #b w1"),
            post("2", "u2", "#a #b w2"),
            post("3", "u3", "#a #b #c w3"),
            post("4", "u4", "#a #c w4"),
            post("5", "u5", "#d w5"),
        ];
        let refs: Vec<&MicroPost> = posts.iter().collect();
        let docs = group(
            &refs,
            &GroupingStrategy::ByHashtag {
                top_fraction: 0.5,
                skip_top: 1,
            },
            &h,
        )
        .unwrap();
        // floor(0.5 x 4) = 2 retained after skipping #a: docs #b and #c.
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[0].doc_id, "#b");
        assert_eq!(docs[0].n_posts, 3);
        assert_eq!(docs[1].doc_id, "#c");
        assert_eq!(docs[1].n_posts, 2);
        // Post 3 mentions both retained hashtags and feeds both documents.
        assert_eq!(docs[0].counts["w3"], 1);
        assert_eq!(docs[1].counts["w3"], 1);
        // Documents keep every token of their posts, hashtags included.
        assert_eq!(docs[0].counts["#a"], 3);
    }

    #[test]
    fn hundred_hashtags_top_percent_is_one_document() {
        let h = two_region_hierarchy();
        let mut posts = Vec::new();
        let mut id = 0;
        // Hashtag #t00 used 101 times, #t01 100 times, ..., #t99 2 times.
        for tag in 0..100 {
            for _ in 0..(101 - tag) {
                id += 1;
                posts.push(post(&id.to_string(), &format!("u{id}"), &format!("#t{tag:02}")));
            }
        }
        let refs: Vec<&MicroPost> = posts.iter().collect();
        let docs = group(
            &refs,
            &GroupingStrategy::ByHashtag {
                top_fraction: 0.01,
                skip_top: 1,
            },
            &h,
        )
        .unwrap();
        assert_eq!(docs.len(), 1);
        assert_eq!(docs[0].doc_id, "#t01");
    }

    #[test]
    fn hashtag_grouping_without_hashtags_errors() {
        let h = two_region_hierarchy();
        let posts = vec![post("1", "u", "sin etiquetas")];
        let refs: Vec<&MicroPost> = posts.iter().collect();
        let err = group(
            &refs,
            &GroupingStrategy::ByHashtag {
                top_fraction: 0.5,
                skip_top: 1,
            },
            &h,
        )
        .unwrap_err();
        assert!(matches!(err, CorpusError::NoHashtags));
    }

    #[test]
    fn resolve_authors_fills_locations() {
        let h = two_region_hierarchy();
        let index = NameIndex::from_generated(&expand_templates(&h), &h);
        let mut posts = vec![post("1", "u1", "x"), post("2", "u2", "y")];
        posts[0].profile_location = Some("Upper, North".into());
        posts[1].profile_location = Some("nowhere special".into());
        resolve_authors(&mut posts, &index);
        assert_eq!(posts[0].author_location.as_ref().unwrap().unit_id, "p1");
        assert!(posts[1].author_location.is_none());
    }

    proptest! {
        /// Conservation: user grouping keeps every geolocated post and every
        /// token occurrence exactly once.
        #[test]
        fn user_grouping_conserves_posts_and_tokens(
            corpus in proptest::collection::vec(
                (0usize..6, proptest::collection::vec("[a-d]{1,3}", 1..6), proptest::bool::ANY),
                1..40,
            )
        ) {
            let h = two_region_hierarchy();
            let posts: Vec<MicroPost> = corpus
                .iter()
                .enumerate()
                .map(|(i, (author, words, has_loc))| {
                    let text = words.join(" ");
                    if *has_loc {
                        located(&i.to_string(), &format!("u{author}"), &text, "p1", Level::Province)
                    } else {
                        post(&i.to_string(), &format!("u{author}"), &text)
                    }
                })
                .collect();
            let refs: Vec<&MicroPost> = posts.iter().collect();
            let docs = group(&refs, &GroupingStrategy::ByUser, &h).unwrap();

            let geolocated: Vec<&&MicroPost> =
                refs.iter().filter(|p| p.author_location.is_some()).collect();
            let doc_posts: usize = docs.iter().map(|d| d.n_posts).sum();
            prop_assert_eq!(doc_posts, geolocated.len());

            let token_total: u64 = geolocated
                .iter()
                .map(|p| tokenize(&p.text).len() as u64)
                .sum();
            let doc_total: u64 = docs
                .iter()
                .map(|d| d.counts.values().map(|&c| c as u64).sum::<u64>())
                .sum();
            prop_assert_eq!(doc_total, token_total);
        }

        /// A post with h retained hashtags contributes to exactly h documents.
        #[test]
        fn hashtag_grouping_fans_out_per_retained_tag(
            corpus in proptest::collection::vec(
                proptest::collection::vec(0u8..6, 1..4),
                1..30,
            )
        ) {
            let h = two_region_hierarchy();
            let posts: Vec<MicroPost> = corpus
                .iter()
                .enumerate()
                .map(|(i, tags)| {
                    let text = tags
                        .iter()
                        .map(|t| format!("#h{t}"))
                        .collect::<Vec<_>>()
                        .join(" ");
                    post(&i.to_string(), &format!("u{i}"), &text)
                })
                .collect();
            let refs: Vec<&MicroPost> = posts.iter().collect();
            let strategy = GroupingStrategy::ByHashtag { top_fraction: 1.0, skip_top: 0 };
            let docs = group(&refs, &strategy, &h).unwrap();
            let retained: HashSet<&str> = docs.iter().map(|d| d.doc_id.as_str()).collect();

            let mut expected_memberships = 0usize;
            for p in &refs {
                let distinct: HashSet<String> = tokenize(&p.text)
                    .into_iter()
                    .filter(|t| t.kind == TokenKind::Hashtag)
                    .map(|t| t.surface)
                    .collect();
                expected_memberships +=
                    distinct.iter().filter(|t| retained.contains(t.as_str())).count();
            }
            let total_doc_posts: usize = docs.iter().map(|d| d.n_posts).sum();
            prop_assert_eq!(total_doc_posts, expected_memberships);

            let again = group(&refs, &strategy, &h).unwrap();
            prop_assert_eq!(docs, again);
        }
    }
}
