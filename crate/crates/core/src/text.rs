//! Text folding shared by the disease matcher and the funder alias index.
//!
//! Folding runs per source character: Unicode default case folding, then
//! canonical decomposition with every non-zero combining class mark removed,
//! then runs of whitespace and dashes collapse into a single ASCII space.
//! Folded offsets can be mapped back to source character offsets.

use caseless::Caseless;
use serde::{Deserialize, Serialize};
use unicode_normalization::char::{canonical_combining_class, decompose_canonical};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct FoldOptions {
    pub case_fold: bool,
    pub diacritic_fold: bool,
}

impl Default for FoldOptions {
    fn default() -> Self {
        Self {
            case_fold: true,
            diacritic_fold: true,
        }
    }
}

/// Folded text plus, for every folded character, the index of the source
/// character that produced it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FoldedText {
    pub text: String,
    pub origin: Vec<u32>,
    pub source_chars: usize,
}

impl FoldedText {
    /// Maps a half-open folded character range onto source characters.
    pub fn source_range(&self, start: usize, end: usize) -> (usize, usize) {
        debug_assert!(start < end && end <= self.origin.len());
        let s = self.origin[start] as usize;
        let e = self.origin[end - 1] as usize + 1;
        (s, e)
    }
}

pub fn is_separator(c: char) -> bool {
    c.is_whitespace()
        || matches!(
            c,
            '-' | '\u{2010}' | '\u{2011}' | '\u{2012}' | '\u{2013}' | '\u{2014}' | '\u{2015}' | '\u{2212}'
        )
}

struct Sink<'a> {
    out: &'a mut String,
    origin: Option<&'a mut Vec<u32>>,
    last_space: bool,
}

impl Sink<'_> {
    #[inline]
    fn push(&mut self, c: char, source: u32) {
        if is_separator(c) {
            if self.last_space {
                return;
            }
            self.out.push(' ');
            self.last_space = true;
        } else {
            self.out.push(c);
            self.last_space = false;
        }
        if let Some(origin) = self.origin.as_deref_mut() {
            origin.push(source);
        }
    }
}

fn fold_impl(text: &str, options: FoldOptions, out: &mut String, origin: Option<&mut Vec<u32>>) -> usize {
    out.clear();
    out.reserve(text.len());
    let mut sink = Sink {
        out,
        origin,
        last_space: false,
    };
    let mut count = 0u32;
    for c in text.chars() {
        let idx = count;
        count += 1;
        if c.is_ascii() {
            let c = if options.case_fold { c.to_ascii_lowercase() } else { c };
            sink.push(c, idx);
            continue;
        }
        let emit = |ch: char, sink: &mut Sink<'_>| {
            if options.diacritic_fold {
                decompose_canonical(ch, |d| {
                    if canonical_combining_class(d) == 0 {
                        sink.push(d, idx);
                    }
                });
            } else {
                sink.push(ch, idx);
            }
        };
        if options.case_fold {
            for ch in std::iter::once(c).default_case_fold() {
                emit(ch, &mut sink);
            }
        } else {
            emit(c, &mut sink);
        }
    }
    count as usize
}

/// Folds `text` into `out`, reusing its allocation.
pub fn fold_into(text: &str, options: FoldOptions, out: &mut String) {
    fold_impl(text, options, out, None);
}

pub fn fold(text: &str, options: FoldOptions) -> String {
    let mut out = String::new();
    fold_impl(text, options, &mut out, None);
    out
}

pub fn fold_with_offsets(text: &str, options: FoldOptions) -> FoldedText {
    let mut out = String::new();
    let mut origin = Vec::with_capacity(text.len());
    let source_chars = fold_impl(text, options, &mut out, Some(&mut origin));
    FoldedText {
        text: out,
        origin,
        source_chars,
    }
}

/// Folds a dictionary term: like [`fold`] but with surrounding spaces trimmed.
pub fn normalize_term(term: &str, options: FoldOptions) -> String {
    let folded = fold(term, options);
    folded.trim_matches(' ').to_string()
}

/// Key used for funder aliases: folded, with every non-alphanumeric run
/// reduced to one space.
pub fn funder_key(name: &str) -> String {
    let folded = fold(name, FoldOptions::default());
    let mut key = String::with_capacity(folded.len());
    let mut pending_space = false;
    for c in folded.chars() {
        if c.is_alphanumeric() {
            if pending_space && !key.is_empty() {
                key.push(' ');
            }
            pending_space = false;
            key.push(c);
        } else {
            pending_space = true;
        }
    }
    key
}
