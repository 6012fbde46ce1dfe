use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{MatchKind, OrgType};
use crate::country::CountryCode;
use crate::text::funder_key;

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("alias {alias:?} maps to both {first} and {second}")]
    AliasCollision { alias: String, first: String, second: String },
    #[error("duplicate funder id {0:?}")]
    DuplicateFunderId(String),
    #[error("row {row}: {message}")]
    MalformedRow { row: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunderEntry {
    pub funder_id: String,
    pub canonical_name: String,
    #[serde(default)]
    pub aliases: Vec<String>,
    #[serde(default)]
    pub country: Option<CountryCode>,
    pub org_type: OrgType,
}

impl FunderEntry {
    fn names(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.canonical_name.as_str()).chain(self.aliases.iter().map(String::as_str))
    }
}

/// Validated funders with an alias index keyed by [`funder_key`].
#[derive(Debug, Clone, Default)]
pub struct FunderRegistry {
    entries: Vec<FunderEntry>,
    index: HashMap<String, usize>,
    /// Token sets of every indexed key, for token-subset resolution.
    token_keys: Vec<(BTreeSet<String>, usize)>,
}

impl FunderRegistry {
    pub fn new(entries: Vec<FunderEntry>) -> Result<Self, RegistryError> {
        let mut ids = HashSet::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        for (i, entry) in entries.iter().enumerate() {
            if entry.funder_id.trim().is_empty() {
                return Err(RegistryError::MalformedRow {
                    row: i + 1,
                    message: "empty funder_id".into(),
                });
            }
            if !ids.insert(entry.funder_id.clone()) {
                return Err(RegistryError::DuplicateFunderId(entry.funder_id.clone()));
            }
            if funder_key(&entry.canonical_name).is_empty() {
                return Err(RegistryError::MalformedRow {
                    row: i + 1,
                    message: format!("funder {} has an empty canonical name", entry.funder_id),
                });
            }
            for name in entry.names() {
                let key = funder_key(name);
                if key.is_empty() {
                    continue;
                }
                match index.get(&key) {
                    Some(&j) if j != i => {
                        return Err(RegistryError::AliasCollision {
                            alias: name.to_string(),
                            first: entries[j].funder_id.clone(),
                            second: entry.funder_id.clone(),
                        })
                    }
                    Some(_) => {}
                    None => {
                        index.insert(key, i);
                    }
                }
            }
        }
        let mut token_keys: Vec<(BTreeSet<String>, usize)> = index
            .iter()
            .map(|(k, &i)| (k.split(' ').map(str::to_string).collect(), i))
            .collect();
        token_keys.sort();
        Ok(Self {
            entries,
            index,
            token_keys,
        })
    }

    pub fn entries(&self) -> &[FunderEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, funder_id: &str) -> Option<&FunderEntry> {
        self.entries.iter().find(|e| e.funder_id == funder_id)
    }

    /// Resolves a raw organization string. Exact key lookup first; with
    /// `token_subset`, falls back to the indexed name with the most tokens
    /// that are all present in the mention. Ties between different funders
    /// resolve to nothing.
    pub fn resolve(&self, org_text: &str, token_subset: bool) -> Option<(&FunderEntry, MatchKind)> {
        let key = funder_key(org_text);
        if key.is_empty() {
            return None;
        }
        if let Some(&i) = self.index.get(&key) {
            return Some((&self.entries[i], MatchKind::Exact));
        }
        if !token_subset {
            return None;
        }
        let tokens: BTreeSet<&str> = key.split(' ').collect();
        let mut best: Option<(usize, usize)> = None;
        let mut tied = false;
        for (alias_tokens, i) in &self.token_keys {
            if !alias_tokens.iter().all(|t| tokens.contains(t.as_str())) {
                continue;
            }
            let n = alias_tokens.len();
            match best {
                Some((bn, bi)) if n < bn || (n == bn && bi == *i) => {}
                Some((bn, _)) if n == bn => tied = true,
                _ => {
                    best = Some((n, *i));
                    tied = false;
                }
            }
        }
        match best {
            Some((_, i)) if !tied => Some((&self.entries[i], MatchKind::TokenSubset)),
            _ => None,
        }
    }
}

fn split_pipe(cell: &str) -> Vec<String> {
    cell.split('|')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

fn parse_country(cell: &str, row: usize) -> Result<Option<CountryCode>, RegistryError> {
    let t = cell.trim();
    if t.is_empty() || t.eq_ignore_ascii_case("unknown") {
        return Ok(None);
    }
    t.parse().map(Some).map_err(|e: crate::country::InvalidCountryCode| RegistryError::MalformedRow {
        row,
        message: e.to_string(),
    })
}

/// Columns: `funder_id, canonical_name, aliases, country, org_type`.
pub fn parse_registry_csv(content: &str) -> Result<FunderRegistry, RegistryError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(content.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| RegistryError::MalformedRow {
            row: 0,
            message: e.to_string(),
        })?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let cols = ["funder_id", "canonical_name", "aliases", "country", "org_type"].map(col);
    let [Some(i_id), Some(i_name), i_alias, i_country, Some(i_type)] = cols else {
        return Err(RegistryError::MalformedRow {
            row: 0,
            message: "expected columns funder_id, canonical_name, aliases, country, org_type".into(),
        });
    };
    let mut entries = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| RegistryError::MalformedRow {
            row,
            message: e.to_string(),
        })?;
        let get = |idx: Option<usize>| idx.and_then(|i| rec.get(i)).unwrap_or("");
        let org_type = get(Some(i_type))
            .parse::<OrgType>()
            .map_err(|v| RegistryError::MalformedRow {
                row,
                message: format!("unknown org_type {v:?}"),
            })?;
        entries.push(FunderEntry {
            funder_id: get(Some(i_id)).to_string(),
            canonical_name: get(Some(i_name)).to_string(),
            aliases: split_pipe(get(i_alias)),
            country: parse_country(get(i_country), row)?,
            org_type,
        });
    }
    FunderRegistry::new(entries)
}

pub fn parse_registry_json(content: &str) -> Result<FunderRegistry, RegistryError> {
    let entries: Vec<FunderEntry> = serde_json::from_str(content).map_err(|e| RegistryError::MalformedRow {
        row: e.line(),
        message: e.to_string(),
    })?;
    FunderRegistry::new(entries)
}

pub fn load_funder_registry(path: &Path) -> Result<FunderRegistry, RegistryError> {
    let content = fs::read_to_string(path).map_err(|source| RegistryError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("json") => parse_registry_json(&content),
        _ => parse_registry_csv(&content),
    }
}

pub fn write_registry_csv(registry: &FunderRegistry) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["funder_id", "canonical_name", "aliases", "country", "org_type"])
        .expect("in-memory write");
    for e in registry.entries() {
        w.write_record([
            e.funder_id.clone(),
            e.canonical_name.clone(),
            e.aliases.join("|"),
            e.country.map(|c| c.to_string()).unwrap_or_default(),
            e.org_type.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}
