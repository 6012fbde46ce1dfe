//! Rare-disease name registry with synonym handling and ambiguity flags.
//!
//! A term flagged ambiguous is never handed to the matcher. Flags come from
//! the registry file itself and from [`AmbiguityRules`], which catch short
//! terms, common English words and all-caps acronyms that spell a word
//! (`GET`, `SPERM`).

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::text::{normalize_term, FoldOptions};

const COMMON_WORDS: &str = include_str!("../data/common_words.txt");
const SHORT_WORDS: &str = include_str!("../data/short_words.txt");

#[derive(Debug, thiserror::Error)]
pub enum LexiconError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("duplicate disease id {0:?}")]
    DuplicateDiseaseId(String),
    #[error("disease {0:?} has an empty preferred name")]
    EmptyPreferredName(String),
    #[error("row {row}: {message}")]
    MalformedRow { row: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchPolicy {
    #[default]
    PreferredOnly,
    PreferredPlusVettedSynonyms,
}

/// A registry term in its surface form plus its folded key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub surface: String,
    pub key: String,
}

impl Term {
    pub fn new(surface: &str) -> Self {
        let surface = surface.trim().to_string();
        let key = normalize_term(&surface, FoldOptions::default());
        Self { surface, key }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiseaseEntry {
    pub disease_id: String,
    pub preferred: Term,
    pub synonyms: Vec<Term>,
    /// Keys of the entry's own terms that must not be matched.
    pub ambiguous: BTreeSet<String>,
}

impl DiseaseEntry {
    pub fn terms(&self) -> impl Iterator<Item = &Term> {
        std::iter::once(&self.preferred).chain(&self.synonyms)
    }

    pub fn is_ambiguous(&self, term: &Term) -> bool {
        self.ambiguous.contains(&term.key)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DiseaseLexicon {
    pub entries: Vec<DiseaseEntry>,
    pub match_policy: MatchPolicy,
}

/// One registry row before validation.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct LexiconRow {
    pub disease_id: String,
    pub preferred_name: String,
    #[serde(default)]
    pub synonyms: Vec<String>,
    #[serde(default)]
    pub ambiguous: Vec<String>,
}

impl DiseaseLexicon {
    pub fn from_rows(rows: impl IntoIterator<Item = LexiconRow>) -> Result<Self, LexiconError> {
        let mut ids = HashSet::new();
        let mut entries = Vec::new();
        for (i, row) in rows.into_iter().enumerate() {
            let disease_id = row.disease_id.trim().to_string();
            if disease_id.is_empty() {
                return Err(LexiconError::MalformedRow {
                    row: i + 1,
                    message: "empty disease_id".into(),
                });
            }
            if !ids.insert(disease_id.clone()) {
                return Err(LexiconError::DuplicateDiseaseId(disease_id));
            }
            let preferred = Term::new(&row.preferred_name);
            if preferred.key.is_empty() {
                return Err(LexiconError::EmptyPreferredName(disease_id));
            }
            let mut seen: HashSet<String> = HashSet::from([preferred.key.clone()]);
            let synonyms: Vec<Term> = row
                .synonyms
                .iter()
                .map(|s| Term::new(s))
                .filter(|t| !t.key.is_empty() && seen.insert(t.key.clone()))
                .collect();
            let mut ambiguous = BTreeSet::new();
            for a in &row.ambiguous {
                let key = normalize_term(a, FoldOptions::default());
                if key.is_empty() {
                    continue;
                }
                if !seen.contains(&key) {
                    return Err(LexiconError::MalformedRow {
                        row: i + 1,
                        message: format!("ambiguous term {a:?} is not a term of {disease_id}"),
                    });
                }
                ambiguous.insert(key);
            }
            entries.push(DiseaseEntry {
                disease_id,
                preferred,
                synonyms,
                ambiguous,
            });
        }
        Ok(Self {
            entries,
            match_policy: MatchPolicy::default(),
        })
    }

    pub fn with_policy(mut self, policy: MatchPolicy) -> Self {
        self.match_policy = policy;
        self
    }

    pub fn to_rows(&self) -> Vec<LexiconRow> {
        self.entries
            .iter()
            .map(|e| LexiconRow {
                disease_id: e.disease_id.clone(),
                preferred_name: e.preferred.surface.clone(),
                synonyms: e.synonyms.iter().map(|t| t.surface.clone()).collect(),
                ambiguous: e.terms().filter(|t| e.is_ambiguous(t)).map(|t| t.surface.clone()).collect(),
            })
            .collect()
    }
}

fn split_pipe(cell: &str) -> Vec<String> {
    cell.split('|')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

pub fn parse_lexicon_csv(content: &str) -> Result<DiseaseLexicon, LexiconError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(content.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| LexiconError::MalformedRow {
            row: 0,
            message: e.to_string(),
        })?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(i_id), Some(i_name)) = (col("disease_id"), col("preferred_name")) else {
        return Err(LexiconError::MalformedRow {
            row: 0,
            message: "expected columns disease_id, preferred_name, synonyms".into(),
        });
    };
    let i_syn = col("synonyms");
    let i_amb = col("ambiguous");
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| LexiconError::MalformedRow {
            row: i + 1,
            message: e.to_string(),
        })?;
        let get = |idx: Option<usize>| idx.and_then(|i| rec.get(i)).unwrap_or("");
        rows.push(LexiconRow {
            disease_id: get(Some(i_id)).to_string(),
            preferred_name: get(Some(i_name)).to_string(),
            synonyms: split_pipe(get(i_syn)),
            ambiguous: split_pipe(get(i_amb)),
        });
    }
    DiseaseLexicon::from_rows(rows)
}

pub fn parse_lexicon_json(content: &str) -> Result<DiseaseLexicon, LexiconError> {
    let rows: Vec<LexiconRow> = serde_json::from_str(content).map_err(|e| LexiconError::MalformedRow {
        row: e.line(),
        message: e.to_string(),
    })?;
    DiseaseLexicon::from_rows(rows)
}

/// Reads a registry file without applying ambiguity heuristics.
pub fn read_lexicon(path: &Path) -> Result<DiseaseLexicon, LexiconError> {
    let content = fs::read_to_string(path).map_err(|source| LexiconError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("json") => parse_lexicon_json(&content),
        _ => parse_lexicon_csv(&content),
    }
}

/// Reads a registry file and flags ambiguous terms with the default rules.
pub fn load_lexicon(path: &Path) -> Result<DiseaseLexicon, LexiconError> {
    Ok(flag_ambiguous(read_lexicon(path)?, &AmbiguityRules::default()))
}

pub fn write_lexicon_csv(lexicon: &DiseaseLexicon) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["disease_id", "preferred_name", "synonyms", "ambiguous"])
        .expect("in-memory write");
    for row in lexicon.to_rows() {
        w.write_record([
            row.disease_id,
            row.preferred_name,
            row.synonyms.join("|"),
            row.ambiguous.join("|"),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

/// Terms the matcher may use, as `(surface, disease_id)` pairs in registry
/// order.
pub fn effective_terms(lexicon: &DiseaseLexicon) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for entry in &lexicon.entries {
        let terms: Box<dyn Iterator<Item = &Term>> = match lexicon.match_policy {
            MatchPolicy::PreferredOnly => Box::new(std::iter::once(&entry.preferred)),
            MatchPolicy::PreferredPlusVettedSynonyms => Box::new(entry.terms()),
        };
        for term in terms.filter(|t| !entry.is_ambiguous(t)) {
            out.push((term.surface.clone(), entry.disease_id.clone()));
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct AmbiguityRules {
    /// Terms with fewer folded characters than this are ambiguous.
    pub min_len: usize,
    /// Lower-case words that are ambiguous on their own.
    pub common_words: HashSet<String>,
    /// All-caps terms up to this many characters are checked against
    /// `dictionary`.
    pub acronym_max_len: usize,
    pub dictionary: HashSet<String>,
}

fn word_set(list: &str) -> HashSet<String> {
    list.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_lowercase)
        .collect()
}

impl Default for AmbiguityRules {
    fn default() -> Self {
        Self {
            min_len: 4,
            common_words: word_set(COMMON_WORDS),
            acronym_max_len: 5,
            dictionary: word_set(SHORT_WORDS),
        }
    }
}

impl AmbiguityRules {
    pub fn too_short(&self, term: &Term) -> bool {
        term.key.chars().count() < self.min_len
    }

    pub fn common_word(&self, term: &Term) -> bool {
        self.common_words.contains(&term.key)
    }

    pub fn word_acronym(&self, term: &Term) -> bool {
        let s = term.surface.as_str();
        s.chars().any(char::is_alphabetic)
            && !s.chars().any(char::is_lowercase)
            && s.chars().count() <= self.acronym_max_len
            && self.dictionary.contains(&term.key)
    }

    pub fn is_ambiguous(&self, term: &Term) -> bool {
        self.too_short(term) || self.common_word(term) || self.word_acronym(term)
    }
}

/// Flags every term that trips one of `rules`. Existing flags are kept.
pub fn flag_ambiguous(mut lexicon: DiseaseLexicon, rules: &AmbiguityRules) -> DiseaseLexicon {
    for entry in &mut lexicon.entries {
        let newly: Vec<String> = entry
            .terms()
            .filter(|t| rules.is_ambiguous(t))
            .map(|t| t.key.clone())
            .collect();
        entry.ambiguous.extend(newly);
    }
    lexicon
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(id: &str, name: &str, syn: &[&str]) -> LexiconRow {
        LexiconRow {
            disease_id: id.into(),
            preferred_name: name.into(),
            synonyms: syn.iter().map(|s| s.to_string()).collect(),
            ambiguous: vec![],
        }
    }

    #[test]
    fn loads_two_entries() {
        let csv = "disease_id,preferred_name,synonyms\nORPHA:586,cystic fibrosis,\nORPHA:673,malaria,\n";
        let lex = parse_lexicon_csv(csv).unwrap();
        assert_eq!(lex.entries.len(), 2);
        assert_eq!(lex.entries[1].preferred.surface, "malaria");
    }

    #[test]
    fn get_is_flagged_on_load() {
        let csv = "disease_id,preferred_name,synonyms\nORPHA:1,Gerstmann syndrome,GET|Gerstmann-Straussler\n";
        let lex = flag_ambiguous(parse_lexicon_csv(csv).unwrap(), &AmbiguityRules::default())
            .with_policy(MatchPolicy::PreferredPlusVettedSynonyms);
        let terms: Vec<_> = effective_terms(&lex).into_iter().map(|(t, _)| t).collect();
        assert_eq!(terms, ["Gerstmann syndrome", "Gerstmann-Straussler"]);
        assert!(lex.entries[0].ambiguous.contains("get"));
    }

    #[test]
    fn duplicate_ids_and_empty_names_rejected() {
        let csv = "disease_id,preferred_name,synonyms\nORPHA:1,a disease,\nORPHA:1,other disease,\n";
        assert!(matches!(parse_lexicon_csv(csv), Err(LexiconError::DuplicateDiseaseId(id)) if id == "ORPHA:1"));
        let csv = "disease_id,preferred_name,synonyms\nORPHA:1, ,\n";
        assert!(matches!(parse_lexicon_csv(csv), Err(LexiconError::EmptyPreferredName(_))));
        let csv = "disease_id,preferred_name,synonyms,ambiguous\nORPHA:1,foo disease,,bar\n";
        assert!(matches!(parse_lexicon_csv(csv), Err(LexiconError::MalformedRow { row: 1, .. })));
    }

    #[test]
    fn duplicate_terms_collapse_after_folding() {
        let lex = DiseaseLexicon::from_rows([row("X", "Fabry disease", &["fabry-disease", "FABRY  DISEASE", "Anderson-Fabry"])]).unwrap();
        assert_eq!(lex.entries[0].synonyms.len(), 1);
    }

    #[test]
    fn policy_controls_term_count() {
        let mut lex = DiseaseLexicon::from_rows([row("X", "Fabry disease", &["Anderson-Fabry disease", "alpha-galactosidase A deficiency", "angiokeratoma corporis diffusum"])]).unwrap();
        assert_eq!(effective_terms(&lex).len(), 1);
        let key = lex.entries[0].synonyms[2].key.clone();
        lex.entries[0].ambiguous.insert(key);
        let lex = lex.with_policy(MatchPolicy::PreferredPlusVettedSynonyms);
        assert_eq!(effective_terms(&lex).len(), 3);
    }

    #[test]
    fn rules_fire_individually() {
        let rules = AmbiguityRules::default();
        assert!(rules.is_ambiguous(&Term::new("GET")));
        assert!(rules.word_acronym(&Term::new("SPERM")));
        assert!(!rules.too_short(&Term::new("SPERM")));
        assert!(!rules.is_ambiguous(&Term::new("cystic fibrosis")));
        assert!(!rules.is_ambiguous(&Term::new("PKAN")));
        assert!(rules.common_word(&Term::new("Cancer")));
    }

    #[test]
    fn json_mirror_loads() {
        let json = r#"[{"disease_id":"ORPHA:586","preferred_name":"cystic fibrosis","synonyms":["mucoviscidosis"]}]"#;
        let lex = parse_lexicon_json(json).unwrap();
        assert_eq!(lex.entries[0].synonyms[0].key, "mucoviscidosis");
    }

    #[test]
    fn csv_round_trip() {
        let lex = flag_ambiguous(
            DiseaseLexicon::from_rows([row("A", "Pompe disease", &["GSD II", "acid maltase deficiency"]), row("B", "malaria", &["SPERM"])]).unwrap(),
            &AmbiguityRules::default(),
        );
        let back = parse_lexicon_csv(&write_lexicon_csv(&lex)).unwrap();
        assert_eq!(back, lex);
    }
}
