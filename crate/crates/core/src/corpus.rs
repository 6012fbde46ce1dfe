//! Publication records and corpus ingestion.
//!
//! JSON-lines is the canonical format. One record object per line with the
//! fields `id, title, abstract, keywords, doc_type, year, categories,
//! countries, citations, funding, fa_text`. An optional first line
//! `{"census_year": N}` carries the census year.
//!
//! The CSV variant uses the same column names, `;` between values of a
//! multi-value cell, and `org|grant|grant` for each funder mention. A first
//! line `# census_year=N` carries the census year.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::country::CountryCode;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {message}")]
    MalformedRecord { line: usize, message: String },
    #[error("line {line}: duplicate record id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: unknown doc_type {value:?} (expected Article or Review)")]
    UnknownDocType { line: usize, value: String },
    #[error("line {line}: census year {census_year} precedes publication year {pub_year}")]
    CensusYearBeforePubYear { line: usize, census_year: i32, pub_year: i32 },
    #[error("category filtering requested with an empty whitelist")]
    EmptyWhitelist,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DocType {
    Article,
    Review,
}

impl fmt::Display for DocType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DocType::Article => "Article",
            DocType::Review => "Review",
        })
    }
}

impl FromStr for DocType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "article" => Ok(DocType::Article),
            "review" => Ok(DocType::Review),
            _ => Err(s.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunderMention {
    pub org_text: String,
    pub grant_numbers: Vec<String>,
}

impl FunderMention {
    pub fn new(org_text: impl Into<String>) -> Self {
        Self {
            org_text: org_text.into(),
            grant_numbers: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicationRecord {
    pub record_id: String,
    pub title: String,
    pub abstract_text: String,
    pub keywords: Vec<String>,
    pub doc_type: DocType,
    pub pub_year: i32,
    pub subject_categories: BTreeSet<String>,
    pub countries: BTreeSet<CountryCode>,
    pub citation_count: u64,
    pub fa_present: bool,
    pub funder_mentions: Vec<FunderMention>,
    pub fa_raw_text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub records: Vec<PublicationRecord>,
    pub census_year: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    JsonLines,
    Csv,
}

impl CorpusFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => CorpusFormat::Csv,
            _ => CorpusFormat::JsonLines,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct IngestionOptions {
    /// Overrides any census year found in the file.
    pub census_year: Option<i32>,
    /// Inclusive sanity bounds on publication years.
    pub year_bounds: Option<(i32, i32)>,
    pub format: Option<CorpusFormat>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RecordLine {
    id: String,
    title: String,
    #[serde(rename = "abstract", default, deserialize_with = "nullable_string")]
    abstract_text: String,
    #[serde(default)]
    keywords: Vec<String>,
    doc_type: String,
    year: i32,
    #[serde(default)]
    categories: Vec<String>,
    #[serde(default)]
    countries: Vec<String>,
    citations: i64,
    #[serde(default)]
    funding: Option<Vec<FundingLine>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fa_text: Option<String>,
}

fn nullable_string<'de, D: serde::Deserializer<'de>>(d: D) -> Result<String, D::Error> {
    Ok(Option::<String>::deserialize(d)?.unwrap_or_default())
}

#[derive(Debug, Serialize, Deserialize)]
struct FundingLine {
    org: String,
    #[serde(default)]
    grants: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CensusHeader {
    census_year: i32,
}

/// Raw field values shared by the JSON-lines and CSV readers.
struct RawRecord {
    id: String,
    title: String,
    abstract_text: String,
    keywords: Vec<String>,
    doc_type: String,
    year: i32,
    categories: Vec<String>,
    countries: Vec<String>,
    citations: i64,
    funding: Option<Vec<FunderMention>>,
    fa_text: Option<String>,
}

fn malformed(line: usize, message: impl Into<String>) -> CorpusError {
    CorpusError::MalformedRecord {
        line,
        message: message.into(),
    }
}

fn build_record(raw: RawRecord, line: usize, options: &IngestionOptions) -> Result<PublicationRecord, CorpusError> {
    let record_id = raw.id.trim().to_string();
    if record_id.is_empty() {
        return Err(malformed(line, "empty id"));
    }
    let doc_type = raw
        .doc_type
        .parse::<DocType>()
        .map_err(|value| CorpusError::UnknownDocType { line, value })?;
    if raw.citations < 0 {
        return Err(malformed(line, format!("negative citation count {}", raw.citations)));
    }
    if let Some((lo, hi)) = options.year_bounds {
        if raw.year < lo || raw.year > hi {
            return Err(malformed(line, format!("year {} outside {lo}-{hi}", raw.year)));
        }
    }
    let countries = raw
        .countries
        .iter()
        .map(|c| c.parse::<CountryCode>().map_err(|e| malformed(line, e.to_string())))
        .collect::<Result<BTreeSet<_>, _>>()?;
    let subject_categories = raw
        .categories
        .iter()
        .map(|c| c.trim())
        .filter(|c| !c.is_empty())
        .map(str::to_string)
        .collect();
    let funder_mentions = match &raw.funding {
        Some(list) => {
            for m in list {
                if m.org_text.trim().is_empty() {
                    return Err(malformed(line, "funding entry with empty org"));
                }
            }
            list.clone()
        }
        None => Vec::new(),
    };
    let fa_raw_text = raw.fa_text.filter(|t| !t.trim().is_empty());
    let fa_present = raw.funding.is_some() || fa_raw_text.is_some();
    Ok(PublicationRecord {
        record_id,
        title: raw.title,
        abstract_text: raw.abstract_text,
        keywords: raw.keywords,
        doc_type,
        pub_year: raw.year,
        subject_categories,
        countries,
        citation_count: raw.citations as u64,
        fa_present,
        funder_mentions,
        fa_raw_text,
    })
}

/// Accumulates records while enforcing corpus-level invariants.
struct Collector<'a> {
    options: &'a IngestionOptions,
    seen: HashSet<String>,
    records: Vec<PublicationRecord>,
    lines: Vec<usize>,
}

impl<'a> Collector<'a> {
    fn new(options: &'a IngestionOptions) -> Self {
        Self {
            options,
            seen: HashSet::new(),
            records: Vec::new(),
            lines: Vec::new(),
        }
    }

    fn push(&mut self, raw: RawRecord, line: usize) -> Result<(), CorpusError> {
        let record = build_record(raw, line, self.options)?;
        if !self.seen.insert(record.record_id.clone()) {
            return Err(CorpusError::DuplicateId {
                line,
                id: record.record_id,
            });
        }
        self.records.push(record);
        self.lines.push(line);
        Ok(())
    }

    fn finish(self, header_census: Option<i32>) -> Result<Corpus, CorpusError> {
        let max_year = self.records.iter().map(|r| r.pub_year).max();
        let census_year = match self.options.census_year.or(header_census) {
            Some(y) => y,
            None => {
                if let Some(y) = max_year {
                    log::warn!("no census year given; using latest publication year {y}");
                }
                max_year.unwrap_or(0)
            }
        };
        for (record, &line) in self.records.iter().zip(&self.lines) {
            if record.pub_year > census_year {
                return Err(CorpusError::CensusYearBeforePubYear {
                    line,
                    census_year,
                    pub_year: record.pub_year,
                });
            }
        }
        Ok(Corpus {
            records: self.records,
            census_year,
        })
    }
}

pub fn load_corpus(path: &Path, options: &IngestionOptions) -> Result<Corpus, CorpusError> {
    let content = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    match options.format.unwrap_or_else(|| CorpusFormat::from_path(path)) {
        CorpusFormat::JsonLines => parse_jsonl(&content, options),
        CorpusFormat::Csv => parse_csv(&content, options),
    }
}

pub fn parse_jsonl(content: &str, options: &IngestionOptions) -> Result<Corpus, CorpusError> {
    let mut collector = Collector::new(options);
    let mut header_census = None;
    let mut first = true;
    for (idx, line) in content.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        if std::mem::take(&mut first) {
            if let Ok(h) = serde_json::from_str::<CensusHeader>(line) {
                header_census = Some(h.census_year);
                continue;
            }
        }
        let rec: RecordLine = serde_json::from_str(line).map_err(|e| malformed(lineno, e.to_string()))?;
        let raw = RawRecord {
            id: rec.id,
            title: rec.title,
            abstract_text: rec.abstract_text,
            keywords: rec.keywords,
            doc_type: rec.doc_type,
            year: rec.year,
            categories: rec.categories,
            countries: rec.countries,
            citations: rec.citations,
            funding: rec.funding.map(|list| {
                list.into_iter()
                    .map(|f| FunderMention {
                        org_text: f.org,
                        grant_numbers: f.grants,
                    })
                    .collect()
            }),
            fa_text: rec.fa_text,
        };
        collector.push(raw, lineno)?;
    }
    collector.finish(header_census)
}

fn split_multi(cell: &str) -> Vec<String> {
    cell.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

fn parse_funding_cell(cell: &str) -> Vec<FunderMention> {
    split_multi(cell)
        .into_iter()
        .map(|m| {
            let mut parts = m.split('|').map(str::trim);
            let org = parts.next().unwrap_or_default().to_string();
            let grants = parts.filter(|g| !g.is_empty()).map(str::to_string).collect();
            FunderMention {
                org_text: org,
                grant_numbers: grants,
            }
        })
        .collect()
}

pub fn parse_csv(content: &str, options: &IngestionOptions) -> Result<Corpus, CorpusError> {
    let mut header_census = None;
    let mut body = content;
    let mut offset = 0;
    if let Some(first) = content.lines().next() {
        if let Some(rest) = first.trim().strip_prefix('#') {
            let (key, value) = rest.split_once('=').ok_or_else(|| malformed(1, "bad header comment"))?;
            if key.trim() != "census_year" {
                return Err(malformed(1, format!("unknown header key {:?}", key.trim())));
            }
            header_census = Some(value.trim().parse().map_err(|_| malformed(1, "census_year is not an integer"))?);
            body = &content[first.len()..];
            body = body.strip_prefix("\r\n").or_else(|| body.strip_prefix('\n')).unwrap_or(body);
            offset = 1;
        }
    }
    let mut reader = csv::ReaderBuilder::new().flexible(false).from_reader(body.as_bytes());
    let headers = reader.headers().map_err(|e| malformed(1 + offset, e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let required = ["id", "title", "doc_type", "year", "citations"];
    for name in required {
        if col(name).is_none() {
            return Err(malformed(1 + offset, format!("missing column {name:?}")));
        }
    }
    let idx = |name: &str| col(name);
    let (i_id, i_title, i_abs, i_kw, i_dt, i_year, i_cat, i_cty, i_cit, i_fund, i_fa) = (
        idx("id"),
        idx("title"),
        idx("abstract"),
        idx("keywords"),
        idx("doc_type"),
        idx("year"),
        idx("categories"),
        idx("countries"),
        idx("citations"),
        idx("funding"),
        idx("fa_text"),
    );
    let mut collector = Collector::new(options);
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0) + offset;
            malformed(line, e.to_string())
        })?;
        let lineno = row.position().map(|p| p.line() as usize).unwrap_or(0) + offset;
        let get = |i: Option<usize>| i.and_then(|i| row.get(i)).unwrap_or("").to_string();
        let year = get(i_year)
            .trim()
            .parse::<i32>()
            .map_err(|_| malformed(lineno, "year is not an integer"))?;
        let citations = get(i_cit)
            .trim()
            .parse::<i64>()
            .map_err(|_| malformed(lineno, "citations is not an integer"))?;
        let funding_cell = get(i_fund);
        let fa_text = Some(get(i_fa)).filter(|t| !t.trim().is_empty());
        let funding = if funding_cell.trim().is_empty() {
            None
        } else {
            Some(parse_funding_cell(&funding_cell))
        };
        let raw = RawRecord {
            id: get(i_id),
            title: get(i_title),
            abstract_text: get(i_abs),
            keywords: split_multi(&get(i_kw)),
            doc_type: get(i_dt),
            year,
            categories: split_multi(&get(i_cat)),
            countries: split_multi(&get(i_cty)),
            citations,
            funding,
            fa_text,
        };
        collector.push(raw, lineno)?;
    }
    collector.finish(header_census)
}

fn to_line(record: &PublicationRecord) -> RecordLine {
    RecordLine {
        id: record.record_id.clone(),
        title: record.title.clone(),
        abstract_text: record.abstract_text.clone(),
        keywords: record.keywords.clone(),
        doc_type: record.doc_type.to_string(),
        year: record.pub_year,
        categories: record.subject_categories.iter().cloned().collect(),
        countries: record.countries.iter().map(|c| c.to_string()).collect(),
        citations: record.citation_count as i64,
        funding: record.fa_present.then(|| {
            record
                .funder_mentions
                .iter()
                .map(|m| FundingLine {
                    org: m.org_text.clone(),
                    grants: m.grant_numbers.clone(),
                })
                .collect()
        }),
        fa_text: record.fa_raw_text.clone(),
    }
}

/// Writes the canonical JSON-lines form: census header, then one compact
/// object per record in corpus order.
pub fn write_corpus<W: Write>(corpus: &Corpus, mut out: W) -> std::io::Result<()> {
    serde_json::to_writer(
        &mut out,
        &CensusHeader {
            census_year: corpus.census_year,
        },
    )?;
    out.write_all(b"\n")?;
    for record in &corpus.records {
        serde_json::to_writer(&mut out, &to_line(record))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn save_corpus(corpus: &Corpus, path: &Path) -> Result<(), CorpusError> {
    let io = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = fs::File::create(path).map_err(io)?;
    let mut w = std::io::BufWriter::new(file);
    write_corpus(corpus, &mut w).map_err(io)?;
    w.flush().map_err(io)
}

#[derive(Debug, Clone, Default)]
pub struct CorpusFilter {
    /// Inclusive publication-year range.
    pub years: Option<(i32, i32)>,
    pub countries: Option<BTreeSet<CountryCode>>,
    pub subject_category_whitelist: Option<BTreeSet<String>>,
    pub doc_types: Option<BTreeSet<DocType>>,
}

impl CorpusFilter {
    pub fn accepts(&self, r: &PublicationRecord) -> bool {
        if let Some((lo, hi)) = self.years {
            if r.pub_year < lo || r.pub_year > hi {
                return false;
            }
        }
        if let Some(countries) = &self.countries {
            if r.countries.is_disjoint(countries) {
                return false;
            }
        }
        if let Some(whitelist) = &self.subject_category_whitelist {
            if r.subject_categories.is_disjoint(whitelist) {
                return false;
            }
        }
        if let Some(doc_types) = &self.doc_types {
            if !doc_types.contains(&r.doc_type) {
                return false;
            }
        }
        true
    }
}

pub fn filter_corpus(corpus: &Corpus, filter: &CorpusFilter) -> Result<Corpus, CorpusError> {
    if matches!(&filter.subject_category_whitelist, Some(w) if w.is_empty()) {
        return Err(CorpusError::EmptyWhitelist);
    }
    Ok(Corpus {
        records: corpus.records.iter().filter(|r| filter.accepts(r)).cloned().collect(),
        census_year: corpus.census_year,
    })
}

/// Reads a subject-category whitelist: one category per line, `#` comments.
pub fn load_category_whitelist(path: &Path) -> Result<BTreeSet<String>, CorpusError> {
    let content = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let set: BTreeSet<String> = content
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect();
    if set.is_empty() {
        return Err(CorpusError::EmptyWhitelist);
    }
    Ok(set)
}
