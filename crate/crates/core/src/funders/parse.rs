//! Splitting free-text funding acknowledgements into funder mentions.
//!
//! Mentions are separated by `;` and `,` outside brackets. Within a comma
//! enumeration the final element is also split on a standalone `and`
//! (`A, B and C`, `A, B, and C`); a lone `X and Y` is left intact because
//! many organisation names contain the word. Trailing `(...)` or `[...]`
//! groups made only of grant-number tokens are moved into `grant_numbers`.

use crate::corpus::FunderMention;

const FILLER: [&str; 10] = ["grant", "grants", "no", "no.", "nos", "nos.", "number", "numbers", "award", "contract"];

fn is_open(c: char) -> bool {
    matches!(c, '(' | '[')
}

fn is_close(c: char) -> bool {
    matches!(c, ')' | ']')
}

/// Splits at depth-0 occurrences of any char in `delims`.
fn split_top_level(text: &str, delims: &[char]) -> Vec<String> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut current = String::new();
    for c in text.chars() {
        if is_open(c) {
            depth += 1;
        } else if is_close(c) {
            depth = depth.saturating_sub(1);
        } else if depth == 0 && delims.contains(&c) {
            parts.push(std::mem::take(&mut current));
            continue;
        }
        current.push(c);
    }
    parts.push(current);
    parts
}

/// Splits at depth-0 standalone words `and` (any case).
fn split_on_and(text: &str) -> Vec<String> {
    let mut parts = Vec::new();
    let mut current = String::new();
    let mut depth = 0usize;
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if is_open(c) {
            depth += 1;
        } else if is_close(c) {
            depth = depth.saturating_sub(1);
        } else if depth == 0
            && (i == 0 || chars[i - 1].is_whitespace())
            && i + 3 <= chars.len()
            && chars[i..i + 3].iter().collect::<String>().eq_ignore_ascii_case("and")
            && (i + 3 == chars.len() || chars[i + 3].is_whitespace())
        {
            parts.push(std::mem::take(&mut current));
            i += 3;
            continue;
        }
        current.push(c);
        i += 1;
    }
    parts.push(current);
    parts
}

fn is_grant_token(t: &str) -> bool {
    !t.is_empty()
        && t.chars().any(|c| c.is_ascii_digit())
        && t.chars().all(|c| c.is_alphanumeric() || matches!(c, '/' | '-' | '.'))
}

/// Peels trailing bracket groups of grant numbers off `segment`.
fn take_grants(segment: &str) -> (String, Vec<String>) {
    let mut org = segment.trim().to_string();
    let mut groups: Vec<Vec<String>> = Vec::new();
    while org.chars().last().is_some_and(is_close) {
        // Find the matching opener of the final group.
        let mut depth = 0usize;
        let mut open_at = None;
        for (i, c) in org.char_indices().rev() {
            if is_close(c) {
                depth += 1;
            } else if is_open(c) {
                depth -= 1;
                if depth == 0 {
                    open_at = Some(i);
                    break;
                }
            }
        }
        let Some(open) = open_at else { break };
        let inner = &org[open + 1..org.len() - 1];
        let tokens: Vec<&str> = inner
            .split(|c: char| c == ',' || c == ';' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .filter(|t| !FILLER.contains(&t.to_ascii_lowercase().as_str()))
            .map(|t| t.trim_end_matches(['.', ':']))
            .collect();
        if tokens.is_empty() || !tokens.iter().all(|t| is_grant_token(t)) {
            break;
        }
        groups.push(tokens.into_iter().map(str::to_string).collect());
        org = org[..open].trim_end().to_string();
    }
    let grants = groups.into_iter().rev().flatten().collect();
    (org, grants)
}

pub fn parse_funding_text(fa_text: &str) -> Vec<FunderMention> {
    let whole = fa_text.trim();
    if whole.is_empty() {
        return Vec::new();
    }
    let mut mentions: Vec<FunderMention> = Vec::new();
    for group in split_top_level(whole, &[';']) {
        let items = split_top_level(&group, &[',']);
        let n = items.len();
        for (k, item) in items.into_iter().enumerate() {
            let pieces = if n > 1 && k == n - 1 { split_on_and(&item) } else { vec![item] };
            for piece in pieces {
                let (org, grants) = take_grants(&piece);
                if !org.is_empty() {
                    mentions.push(FunderMention {
                        org_text: org,
                        grant_numbers: grants,
                    });
                } else if let Some(prev) = mentions.last_mut() {
                    prev.grant_numbers.extend(grants);
                } else if !grants.is_empty() {
                    mentions.push(FunderMention {
                        org_text: piece.trim().to_string(),
                        grant_numbers: Vec::new(),
                    });
                }
            }
        }
    }
    if mentions.is_empty() {
        mentions.push(FunderMention::new(whole));
    }
    mentions
}
