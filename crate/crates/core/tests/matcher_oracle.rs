use std::collections::{BTreeMap, BTreeSet};

use fundscape::matcher::{compile_matcher, Field, MatchSpan, MatcherOptions};
use fundscape::text::{fold_with_offsets, normalize_term, FoldOptions};
use proptest::prelude::*;

/// Every term at every folded position; longest boundary-valid term per start.
fn naive(text: &str, terms: &[(String, String)], options: MatcherOptions) -> Vec<MatchSpan> {
    let folded = fold_with_offsets(text, options.fold);
    let chars: Vec<char> = folded.text.chars().collect();
    let mut ids: BTreeMap<Vec<char>, BTreeSet<String>> = BTreeMap::new();
    for (t, id) in terms {
        ids.entry(normalize_term(t, options.fold).chars().collect())
            .or_default()
            .insert(id.clone());
    }
    let n = chars.len();
    let mut best: BTreeMap<usize, usize> = BTreeMap::new();
    for s in 0..n {
        for key in ids.keys() {
            let e = s + key.len();
            if e > n || chars[s..e] != key[..] {
                continue;
            }
            let before = s > 0 && chars[s - 1].is_alphanumeric();
            let after = e < n && chars[e].is_alphanumeric();
            if !before && !after {
                let slot = best.entry(s).or_insert(e);
                *slot = (*slot).max(e);
            }
        }
    }
    let mut spans = Vec::new();
    for (s, e) in best {
        let (source_start, source_end) = folded.source_range(s, e);
        for id in &ids[&chars[s..e]] {
            spans.push(MatchSpan {
                field: Field::Abstract,
                keyword_index: None,
                start: s,
                end: e,
                source_start,
                source_end,
                term: chars[s..e].iter().collect(),
                disease_id: id.clone(),
            });
        }
    }
    spans.sort_by(|a, b| (a.start, a.end, &a.disease_id).cmp(&(b.start, b.end, &b.disease_id)));
    spans
}

fn term() -> impl Strategy<Value = String> {
    prop::collection::vec("[abAéÉß]{1,4}", 1..=3).prop_map(|w| w.join(" "))
}

fn text() -> impl Strategy<Value = String> {
    "[abAéÉßx1 \\-–\u{301}.]{0,120}"
}

fn lexicon() -> impl Strategy<Value = Vec<(String, String)>> {
    prop::collection::vec((term(), 0u8..6), 1..12)
        .prop_map(|v| v.into_iter().map(|(t, id)| (t, format!("D{id}"))).collect())
}

fn options() -> impl Strategy<Value = MatcherOptions> {
    (any::<bool>(), any::<bool>()).prop_map(|(case_fold, diacritic_fold)| MatcherOptions {
        fold: FoldOptions {
            case_fold,
            diacritic_fold,
        },
        ..Default::default()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn automaton_equals_naive_scan(terms in lexicon(), texts in prop::collection::vec(text(), 1..8), opts in options()) {
        let matcher = compile_matcher(terms.iter().map(|(t, i)| (t.as_str(), i.as_str())), opts).unwrap();
        for t in &texts {
            prop_assert_eq!(matcher.find_matches(t, Field::Abstract), naive(t, &terms, opts));
        }
    }

    #[test]
    fn count_agrees_with_spans(terms in lexicon(), t in text()) {
        let matcher = compile_matcher(terms.iter().map(|(t, i)| (t.as_str(), i.as_str())), MatcherOptions::default()).unwrap();
        let spans = matcher.find_matches(&t, Field::Title);
        let starts: BTreeSet<_> = spans.iter().map(|s| s.start).collect();
        prop_assert_eq!(matcher.count_in(&t, &mut String::new()), starts.len());
    }

    #[test]
    fn source_offsets_cover_the_surface(terms in lexicon(), t in text()) {
        let matcher = compile_matcher(terms.iter().map(|(t, i)| (t.as_str(), i.as_str())), MatcherOptions::default()).unwrap();
        let source: Vec<char> = t.chars().collect();
        for span in matcher.find_matches(&t, Field::Abstract) {
            prop_assert!(span.source_start < span.source_end && span.source_end <= source.len());
            let surface: String = source[span.source_start..span.source_end].iter().collect();
            let refolded = normalize_term(&surface, FoldOptions::default());
            prop_assert!(refolded.contains(span.term.trim()), "{surface:?} vs {:?}", span.term);
        }
    }
}

#[test]
fn adjacent_and_overlapping_terms() {
    let terms = [("fibrosis", "A"), ("cystic fibrosis", "B"), ("cystic", "C"), ("fibrosis cystic", "D")];
    let m = compile_matcher(terms, MatcherOptions::default()).unwrap();
    let got: Vec<_> = m
        .find_matches("Cystic Fibrosis cystic", Field::Abstract)
        .into_iter()
        .map(|s| (s.start, s.end, s.disease_id))
        .collect();
    assert_eq!(
        got,
        vec![(0, 15, "B".into()), (7, 22, "D".into()), (16, 22, "C".into())]
    );
}

#[test]
fn shared_term_emits_one_span_per_disease() {
    let m = compile_matcher([("Fabry disease", "D1"), ("FABRY  DISEASE", "D2")], MatcherOptions::default()).unwrap();
    let ids: Vec<_> = m
        .find_matches("fabry-disease", Field::Keyword)
        .into_iter()
        .map(|s| s.disease_id)
        .collect();
    assert_eq!(ids, ["D1", "D2"]);
}
