//! Administrative-location gazetteer.
//!
//! Loads the municipality → province → region → country hierarchy, expands
//! the twelve location-name templates into a matchable surface list, and
//! resolves free-text self-reported profile locations to hierarchy nodes.
//!
//! Matching is whole-string equality after [`normalize`]; substrings never
//! match. A surface that names two distinct units is ambiguous and resolves
//! to nothing.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::Read;
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

/// Administrative level, ordered finest to coarsest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Municipality,
    Province,
    Region,
    Country,
}

impl Level {
    /// The next-coarser level, `None` for `Country`.
    pub fn parent(self) -> Option<Level> {
        match self {
            Level::Municipality => Some(Level::Province),
            Level::Province => Some(Level::Region),
            Level::Region => Some(Level::Country),
            Level::Country => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Level::Municipality => "municipality",
            Level::Province => "province",
            Level::Region => "region",
            Level::Country => "country",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "municipality" => Ok(Level::Municipality),
            "province" => Ok(Level::Province),
            "region" => Ok(Level::Region),
            "country" => Ok(Level::Country),
            other => Err(format!("unknown level `{other}`")),
        }
    }
}

/// One node of the administrative hierarchy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdminUnit {
    pub id: String,
    pub name: String,
    pub level: Level,
    /// Enclosing unit, absent only for the country.
    pub parent_id: Option<String>,
}

/// A template-generated matchable name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedName {
    /// Normalized surface form.
    pub surface: String,
    /// The unit this name denotes.
    pub target_id: String,
    /// Template number, 1 through 12.
    pub template_id: u8,
}

/// A profile location resolved to a hierarchy node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedLocation {
    pub unit_id: String,
    pub level: Level,
}

#[derive(Debug, Error)]
pub enum GazetteerError {
    #[error("duplicate id `{id}` (record {record})")]
    DuplicateId { id: String, record: usize },
    #[error("dangling parent: unit `{id}` refers to unknown parent `{parent_id}`")]
    DanglingParent { id: String, parent_id: String },
    #[error("cycle detected while walking parents of unit `{id}`")]
    Cycle { id: String },
    #[error("multiple countries: `{first}` and `{second}`")]
    MultipleCountries { first: String, second: String },
    #[error("hierarchy has no country record")]
    NoCountry,
    #[error("unit `{id}` at level {level} must have a parent at level {expected}, found {found}")]
    ParentLevelMismatch {
        id: String,
        level: Level,
        expected: Level,
        found: Level,
    },
    #[error("non-country unit `{id}` has no parent")]
    MissingParent { id: String },
    #[error("country `{id}` must not have a parent")]
    CountryHasParent { id: String },
    #[error("record {record}: {message}")]
    BadRecord { record: usize, message: String },
    #[error("alias `{surface}` refers to unknown unit `{unit_id}`")]
    UnknownAliasUnit { surface: String, unit_id: String },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// The validated administrative hierarchy, immutable after construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocationHierarchy {
    units: Vec<AdminUnit>,
    #[serde(skip)]
    by_id: HashMap<String, usize>,
}

impl LocationHierarchy {
    /// Builds and validates a hierarchy from unit records.
    pub fn new(units: Vec<AdminUnit>) -> Result<Self, GazetteerError> {
        let mut by_id = HashMap::with_capacity(units.len());
        let mut country: Option<&AdminUnit> = None;
        for (i, unit) in units.iter().enumerate() {
            if by_id.insert(unit.id.clone(), i).is_some() {
                return Err(GazetteerError::DuplicateId {
                    id: unit.id.clone(),
                    record: i + 1,
                });
            }
            if unit.level == Level::Country {
                if unit.parent_id.is_some() {
                    return Err(GazetteerError::CountryHasParent {
                        id: unit.id.clone(),
                    });
                }
                if let Some(first) = country {
                    return Err(GazetteerError::MultipleCountries {
                        first: first.id.clone(),
                        second: unit.id.clone(),
                    });
                }
                country = Some(unit);
            } else if unit.parent_id.is_none() {
                return Err(GazetteerError::MissingParent {
                    id: unit.id.clone(),
                });
            }
        }
        if country.is_none() {
            return Err(GazetteerError::NoCountry);
        }

        for unit in &units {
            if let Some(parent_id) = &unit.parent_id {
                let parent = by_id
                    .get(parent_id)
                    .map(|&i| &units[i])
                    .ok_or_else(|| GazetteerError::DanglingParent {
                        id: unit.id.clone(),
                        parent_id: parent_id.clone(),
                    })?;
                let expected = unit.level.parent().expect("non-country has parent level");
                if parent.level != expected {
                    return Err(GazetteerError::ParentLevelMismatch {
                        id: unit.id.clone(),
                        level: unit.level,
                        expected,
                        found: parent.level,
                    });
                }
            }
        }

        let hierarchy = Self { units, by_id };
        // Parent-level enforcement above makes cycles unreachable, but the
        // walk stays as a backstop for the reachability invariant.
        for unit in &hierarchy.units {
            let mut seen = HashSet::new();
            let mut cur = unit;
            while cur.level != Level::Country {
                if !seen.insert(cur.id.as_str()) {
                    return Err(GazetteerError::Cycle {
                        id: unit.id.clone(),
                    });
                }
                let parent_id = cur.parent_id.as_deref().expect("validated above");
                cur = hierarchy.get(parent_id).expect("validated above");
            }
        }
        Ok(hierarchy)
    }

    pub fn get(&self, id: &str) -> Option<&AdminUnit> {
        self.by_id.get(id).map(|&i| &self.units[i])
    }

    pub fn units(&self) -> &[AdminUnit] {
        &self.units
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn country(&self) -> &AdminUnit {
        self.units
            .iter()
            .find(|u| u.level == Level::Country)
            .expect("validated hierarchy has a country")
    }

    pub fn units_at(&self, level: Level) -> impl Iterator<Item = &AdminUnit> {
        self.units.iter().filter(move |u| u.level == level)
    }

    /// The ancestor of `id` at `level`: the unit itself when levels match,
    /// `None` when the unit sits at a coarser level than requested.
    pub fn ancestor_at(&self, id: &str, level: Level) -> Option<&AdminUnit> {
        let mut cur = self.get(id)?;
        while cur.level < level {
            cur = self.get(cur.parent_id.as_deref()?)?;
        }
        (cur.level == level).then_some(cur)
    }

    fn parent_of(&self, unit: &AdminUnit) -> Option<&AdminUnit> {
        unit.parent_id.as_deref().and_then(|p| self.get(p))
    }
}

/// Loads a hierarchy from CSV with header `id,name,level,parent_id`.
pub fn load_hierarchy<R: Read>(reader: R) -> Result<LocationHierarchy, GazetteerError> {
    let mut csv_reader = csv::Reader::from_reader(reader);
    let mut units = Vec::new();
    for (i, row) in csv_reader.deserialize::<HierarchyRow>().enumerate() {
        let record = i + 1;
        let row = row?;
        let id = row.id.trim().to_string();
        if id.is_empty() {
            return Err(GazetteerError::BadRecord {
                record,
                message: "empty id".into(),
            });
        }
        if normalize(&row.name).is_empty() {
            return Err(GazetteerError::BadRecord {
                record,
                message: format!("unit `{id}` has an empty name"),
            });
        }
        let level: Level = row
            .level
            .parse()
            .map_err(|message| GazetteerError::BadRecord { record, message })?;
        let parent_id = row
            .parent_id
            .map(|p| p.trim().to_string())
            .filter(|p| !p.is_empty());
        units.push(AdminUnit {
            id,
            name: row.name.trim().to_string(),
            level,
            parent_id,
        });
    }
    LocationHierarchy::new(units)
}

#[derive(Debug, Deserialize)]
struct HierarchyRow {
    id: String,
    name: String,
    level: String,
    parent_id: Option<String>,
}

/// A manually curated `surface -> unit` alias.
#[derive(Debug, Clone, Deserialize)]
pub struct Alias {
    pub surface: String,
    pub unit_id: String,
}

/// Loads aliases from CSV with header `surface,unit_id`; every unit id must
/// exist in the hierarchy.
pub fn load_aliases<R: Read>(
    reader: R,
    hierarchy: &LocationHierarchy,
) -> Result<Vec<Alias>, GazetteerError> {
    let mut csv_reader = csv::Reader::from_reader(reader);
    let mut aliases = Vec::new();
    for row in csv_reader.deserialize::<Alias>() {
        let alias = row?;
        if hierarchy.get(&alias.unit_id).is_none() {
            return Err(GazetteerError::UnknownAliasUnit {
                surface: alias.surface,
                unit_id: alias.unit_id,
            });
        }
        aliases.push(alias);
    }
    Ok(aliases)
}

/// Normalizes a name or profile string for matching: Unicode NFC,
/// lowercase, leading/trailing punctuation stripped, internal whitespace
/// collapsed. Accents are preserved.
pub fn normalize(text: &str) -> String {
    let folded = text.nfc().collect::<String>().to_lowercase();
    let trimmed = folded.trim_matches(|c: char| !c.is_alphanumeric());
    let mut out = String::with_capacity(trimmed.len());
    for (i, word) in trimmed.split_whitespace().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Expands the twelve name templates over every applicable unit.
///
/// Template numbers:
///  1. municipality                    7. province, country
///  2. province                        8. region, country
///  3. municipality, province          9. municipality de country
///  4. province, region               10. province de country
///  5. region                         11. region de country
///  6. municipality, country          12. country
pub fn expand_templates(hierarchy: &LocationHierarchy) -> Vec<GeneratedName> {
    let country = hierarchy.country();
    let mut names = Vec::new();
    let mut push = |surface: String, target: &AdminUnit, template_id: u8| {
        let surface = normalize(&surface);
        if !surface.is_empty() {
            names.push(GeneratedName {
                surface,
                target_id: target.id.clone(),
                template_id,
            });
        }
    };

    for unit in hierarchy.units() {
        match unit.level {
            Level::Municipality => {
                let province = hierarchy.parent_of(unit).expect("validated parent");
                push(unit.name.clone(), unit, 1);
                push(format!("{}, {}", unit.name, province.name), unit, 3);
                push(format!("{}, {}", unit.name, country.name), unit, 6);
                push(format!("{} de {}", unit.name, country.name), unit, 9);
            }
            Level::Province => {
                let region = hierarchy.parent_of(unit).expect("validated parent");
                push(unit.name.clone(), unit, 2);
                push(format!("{}, {}", unit.name, region.name), unit, 4);
                push(format!("{}, {}", unit.name, country.name), unit, 7);
                push(format!("{} de {}", unit.name, country.name), unit, 10);
            }
            Level::Region => {
                push(unit.name.clone(), unit, 5);
                push(format!("{}, {}", unit.name, country.name), unit, 8);
                push(format!("{} de {}", unit.name, country.name), unit, 11);
            }
            Level::Country => {
                push(unit.name.clone(), unit, 12);
            }
        }
    }
    names
}

/// Exact-match index from normalized surfaces to units.
///
/// A surface mapping to more than one distinct unit is ambiguous and
/// resolves to nothing.
#[derive(Debug, Clone, Default)]
pub struct NameIndex {
    entries: HashMap<String, BTreeMap<String, Level>>,
}

impl NameIndex {
    /// Builds the index from template-generated names.
    pub fn from_generated(names: &[GeneratedName], hierarchy: &LocationHierarchy) -> Self {
        let mut index = Self::default();
        for name in names {
            let unit = hierarchy
                .get(&name.target_id)
                .expect("generated names target hierarchy units");
            index.add(&name.surface, &unit.id, unit.level);
        }
        index
    }

    /// Adds one surface → unit entry; the surface is normalized first and
    /// empty surfaces are ignored.
    pub fn add(&mut self, surface: &str, unit_id: &str, level: Level) {
        let surface = normalize(surface);
        if surface.is_empty() {
            return;
        }
        self.entries
            .entry(surface)
            .or_default()
            .insert(unit_id.to_string(), level);
    }

    /// Adds a manually curated alias, validating the unit against the
    /// hierarchy.
    pub fn add_alias(
        &mut self,
        alias: &Alias,
        hierarchy: &LocationHierarchy,
    ) -> Result<(), GazetteerError> {
        let unit = hierarchy
            .get(&alias.unit_id)
            .ok_or_else(|| GazetteerError::UnknownAliasUnit {
                surface: alias.surface.clone(),
                unit_id: alias.unit_id.clone(),
            })?;
        self.add(&alias.surface, &unit.id, unit.level);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Resolves a free-form profile string. Returns `None` when the
    /// normalized text matches no surface, or when it matches surfaces of
    /// more than one distinct unit.
    pub fn resolve(&self, profile_text: &str) -> Option<ResolvedLocation> {
        let surface = normalize(profile_text);
        if surface.is_empty() {
            return None;
        }
        let targets = self.entries.get(&surface)?;
        if targets.len() != 1 {
            return None;
        }
        let (unit_id, level) = targets.iter().next().expect("len checked");
        Some(ResolvedLocation {
            unit_id: unit_id.clone(),
            level: *level,
        })
    }
}
