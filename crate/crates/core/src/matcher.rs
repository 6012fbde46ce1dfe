//! Dictionary matching of disease terms in titles, abstracts and keywords.
//!
//! Terms and text go through the same folding (see [`crate::text`]). All
//! term occurrences are found in one pass of an Aho-Corasick automaton in
//! overlapping mode. An occurrence counts only when the characters on both
//! sides are non-alphanumeric (or the text edge), and at any start offset
//! only the longest valid occurrence is kept. Occurrences with different
//! starts may overlap and are all reported.

use std::collections::{BTreeMap, BTreeSet};

use aho_corasick::{AhoCorasick, AhoCorasickKind, MatchKind};
use serde::{Deserialize, Serialize};

use crate::corpus::PublicationRecord;
use crate::par::{map_ordered, Execution};
use crate::text::{fold_into, fold_with_offsets, normalize_term, FoldOptions};

#[derive(Debug, thiserror::Error)]
pub enum MatcherError {
    #[error("no terms to compile")]
    EmptyTermSet,
    #[error("term for {disease_id} is empty after normalization")]
    EmptyTerm { disease_id: String },
    #[error("automaton construction failed: {0}")]
    Build(#[from] aho_corasick::BuildError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryRule {
    /// Alphanumeric characters on either side of an occurrence reject it.
    #[default]
    WordBoundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapRule {
    #[default]
    LongestMatchWins,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct MatcherOptions {
    #[serde(flatten)]
    pub fold: FoldOptions,
    pub boundary_rule: BoundaryRule,
    pub overlap_rule: OverlapRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Title,
    Abstract,
    Keyword,
}

/// One term occurrence. `start`/`end` are character offsets into the folded
/// field text; `source_start`/`source_end` are the same span in the
/// original field text.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MatchSpan {
    pub field: Field,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub keyword_index: Option<usize>,
    pub start: usize,
    pub end: usize,
    pub source_start: usize,
    pub source_end: usize,
    pub term: String,
    pub disease_id: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchedPublication<'a> {
    pub record: &'a PublicationRecord,
    pub spans: Vec<MatchSpan>,
    pub disease_ids: BTreeSet<String>,
}

struct Pattern {
    term: String,
    disease_ids: Vec<String>,
}

pub struct Matcher {
    automaton: AhoCorasick,
    patterns: Vec<Pattern>,
    options: MatcherOptions,
}

impl std::fmt::Debug for Matcher {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Matcher")
            .field("patterns", &self.patterns.len())
            .field("options", &self.options)
            .finish()
    }
}

pub fn compile_matcher<S, I>(terms: I, options: MatcherOptions) -> Result<Matcher, MatcherError>
where
    I: IntoIterator<Item = (S, S)>,
    S: AsRef<str>,
{
    // Folded term -> disease ids; BTreeMap keeps pattern order independent
    // of input order.
    let mut by_term: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (term, id) in terms {
        let key = normalize_term(term.as_ref(), options.fold);
        if key.is_empty() {
            return Err(MatcherError::EmptyTerm {
                disease_id: id.as_ref().to_string(),
            });
        }
        by_term.entry(key).or_default().insert(id.as_ref().to_string());
    }
    if by_term.is_empty() {
        return Err(MatcherError::EmptyTermSet);
    }
    let patterns: Vec<Pattern> = by_term
        .into_iter()
        .map(|(term, ids)| Pattern {
            term,
            disease_ids: ids.into_iter().collect(),
        })
        .collect();
    let automaton = AhoCorasick::builder()
        .match_kind(MatchKind::Standard)
        .kind(Some(AhoCorasickKind::ContiguousNFA))
        .build(patterns.iter().map(|p| p.term.as_bytes()))?;
    Ok(Matcher {
        automaton,
        patterns,
        options,
    })
}

#[inline]
fn alnum_before(text: &str, byte: usize) -> bool {
    text[..byte].chars().next_back().is_some_and(char::is_alphanumeric)
}

#[inline]
fn alnum_after(text: &str, byte: usize) -> bool {
    text[byte..].chars().next().is_some_and(char::is_alphanumeric)
}

impl Matcher {
    pub fn options(&self) -> MatcherOptions {
        self.options
    }

    pub fn pattern_count(&self) -> usize {
        self.patterns.len()
    }

    /// Boundary-valid, longest-per-start hits as `(start_byte, end_byte,
    /// pattern)` over already folded text, sorted by start.
    fn hits(&self, folded: &str) -> Vec<(usize, usize, usize)> {
        let mut hits: Vec<(usize, usize, usize)> = Vec::new();
        for m in self.automaton.find_overlapping_iter(folded) {
            let (s, e) = (m.start(), m.end());
            if alnum_before(folded, s) || alnum_after(folded, e) {
                continue;
            }
            hits.push((s, e, m.pattern().as_usize()));
        }
        if hits.len() > 1 {
            // Longest first within a start; keep the first of each start.
            hits.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
            hits.dedup_by_key(|h| h.0);
        }
        hits
    }

    /// Number of occurrences in `text` without building spans.
    pub fn count_in(&self, text: &str, scratch: &mut String) -> usize {
        fold_into(text, self.options.fold, scratch);
        self.hits(scratch).len()
    }

    pub fn find_matches(&self, text: &str, field: Field) -> Vec<MatchSpan> {
        let mut scratch = String::new();
        fold_into(text, self.options.fold, &mut scratch);
        let hits = self.hits(&scratch);
        if hits.is_empty() {
            return Vec::new();
        }
        let folded = fold_with_offsets(text, self.options.fold);
        debug_assert_eq!(folded.text, scratch);

        // Convert byte offsets to char offsets in one sweep.
        let mut positions: Vec<usize> = hits.iter().flat_map(|h| [h.0, h.1]).collect();
        positions.sort_unstable();
        positions.dedup();
        let mut char_at: BTreeMap<usize, usize> = BTreeMap::new();
        let mut want = positions.iter().peekable();
        let total_chars = folded.origin.len();
        for (ci, (bi, _)) in folded.text.char_indices().enumerate() {
            while let Some(&&p) = want.peek() {
                if p == bi {
                    char_at.insert(p, ci);
                    want.next();
                } else {
                    break;
                }
            }
        }
        for &p in want {
            char_at.insert(p, total_chars);
        }

        let mut spans = Vec::new();
        for (sb, eb, pid) in hits {
            let start = char_at[&sb];
            let end = char_at[&eb];
            let (source_start, source_end) = folded.source_range(start, end);
            let pattern = &self.patterns[pid];
            for id in &pattern.disease_ids {
                spans.push(MatchSpan {
                    field,
                    keyword_index: None,
                    start,
                    end,
                    source_start,
                    source_end,
                    term: folded.text[sb..eb].to_string(),
                    disease_id: id.clone(),
                });
            }
        }
        spans.sort_by(|a, b| (a.start, a.end, &a.disease_id).cmp(&(b.start, b.end, &b.disease_id)));
        spans
    }
}

/// Runs the matcher over title, abstract and every keyword.
pub fn tag_publication<'a>(record: &'a PublicationRecord, matcher: &Matcher) -> Option<MatchedPublication<'a>> {
    let mut spans = matcher.find_matches(&record.title, Field::Title);
    spans.extend(matcher.find_matches(&record.abstract_text, Field::Abstract));
    for (i, kw) in record.keywords.iter().enumerate() {
        spans.extend(matcher.find_matches(kw, Field::Keyword).into_iter().map(|mut s| {
            s.keyword_index = Some(i);
            s
        }));
    }
    if spans.is_empty() {
        return None;
    }
    let disease_ids = spans.iter().map(|s| s.disease_id.clone()).collect();
    Some(MatchedPublication {
        record,
        spans,
        disease_ids,
    })
}

/// Tags every record, keeping matched publications in record order.
pub fn tag_records<'a>(
    records: &'a [PublicationRecord],
    matcher: &Matcher,
    execution: Execution,
) -> Vec<MatchedPublication<'a>> {
    map_ordered(records, execution, |r| tag_publication(r, matcher))
        .into_iter()
        .flatten()
        .collect()
}
