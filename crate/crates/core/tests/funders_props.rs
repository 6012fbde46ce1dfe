use std::collections::BTreeSet;

use fundscape::corpus::FunderMention;
use fundscape::country::CountryCode;
use fundscape::funders::{
    assign_funding_category, parse_funding_text, parse_registry_csv, write_registry_csv, FunderClass, FunderEntry,
    FunderRegistry, FundingCategory, MatchKind, OrgType, RegistryError, Scope,
};
use fundscape::text::funder_key;
use proptest::prelude::*;

fn class(scope: Scope) -> FunderClass {
    FunderClass {
        mention: FunderMention::new("x"),
        resolved: None,
        match_kind: None,
        org_type: OrgType::Unknown,
        country: None,
        scope,
    }
}

/// Hand-written precedence table, indexed by the bitmask
/// European | NationalFocal << 1 | ForeignPublic << 2 | OtherOrUnknown << 3.
const TABLE: [FundingCategory; 16] = {
    use FundingCategory::*;
    [
        NonFunded,           // {}
        European,            // {E}
        National,            // {N}
        NationalAndEuropean, // {E,N}
        Other,               // {F}
        European,            // {E,F}
        National,            // {N,F}
        NationalAndEuropean, // {E,N,F}
        Other,               // {O}
        European,            // {E,O}
        National,            // {N,O}
        NationalAndEuropean, // {E,N,O}
        Other,               // {F,O}
        European,            // {E,F,O}
        National,            // {N,F,O}
        NationalAndEuropean, // {E,N,F,O}
    ]
};

#[test]
fn precedence_table_over_all_scope_subsets() {
    #[allow(clippy::needless_range_loop)]
    for mask in 0..16usize {
        let classes: Vec<_> = Scope::ALL
            .iter()
            .enumerate()
            .filter(|(bit, _)| mask & (1 << bit) != 0)
            .map(|(_, &s)| class(s))
            .collect();
        assert_eq!(assign_funding_category(&classes, true), TABLE[mask], "mask {mask:04b}");
        assert_eq!(assign_funding_category(&classes, false), FundingCategory::NonFunded);
    }
}

fn org_word() -> impl Strategy<Value = String> {
    prop::sample::select(vec![
        "Medical", "Research", "Council", "Fondation", "Recherche", "Médicale", "Trust", "Agency", "Instituto",
        "Salud", "ZonMw", "NWO", "Téléthon", "Heart",
    ])
    .prop_map(String::from)
}

fn mention() -> impl Strategy<Value = FunderMention> {
    (
        prop::collection::vec(org_word(), 1..4),
        prop::collection::vec("[A-Z]{0,3}[0-9]{1,6}([/.-][0-9]{1,3})?", 0..3),
    )
        .prop_map(|(words, grant_numbers)| FunderMention {
            org_text: words.join(" "),
            grant_numbers,
        })
}

fn render(m: &FunderMention) -> String {
    if m.grant_numbers.is_empty() {
        m.org_text.clone()
    } else {
        format!("{} ({})", m.org_text, m.grant_numbers.join(", "))
    }
}

fn entry() -> impl Strategy<Value = FunderEntry> {
    (
        prop::collection::vec(org_word(), 1..3),
        prop::collection::vec(prop::collection::vec(org_word(), 1..3), 0..3),
        prop::option::of(prop::sample::select(vec!["GB", "FR", "NL", "ES", "EU"])),
        prop::sample::select(OrgType::ALL.to_vec()),
    )
        .prop_map(|(name, aliases, country, org_type)| FunderEntry {
            funder_id: String::new(),
            canonical_name: name.join(" "),
            aliases: aliases.into_iter().map(|a| a.join(" ")).collect(),
            country: country.map(|c| c.parse::<CountryCode>().unwrap()),
            org_type,
        })
}

/// Drops entries whose names collide with an earlier entry.
fn registry() -> impl Strategy<Value = FunderRegistry> {
    prop::collection::vec(entry(), 1..8).prop_map(|entries| {
        let mut taken = BTreeSet::new();
        let mut kept = Vec::new();
        for mut e in entries {
            let keys: BTreeSet<String> =
                std::iter::once(&e.canonical_name).chain(&e.aliases).map(|n| funder_key(n)).collect();
            if keys.iter().any(|k| taken.contains(k)) {
                continue;
            }
            taken.extend(keys);
            e.funder_id = format!("F{}", kept.len());
            kept.push(e);
        }
        FunderRegistry::new(kept).unwrap()
    })
}

fn names(e: &FunderEntry) -> Vec<&String> {
    std::iter::once(&e.canonical_name).chain(&e.aliases).collect()
}

proptest! {
    #[test]
    fn semicolon_lists_parse_back(mentions in prop::collection::vec(mention(), 1..5)) {
        let text = mentions.iter().map(render).collect::<Vec<_>>().join("; ");
        prop_assert_eq!(parse_funding_text(&text), mentions);
    }

    #[test]
    fn comma_enumerations_parse_back(mentions in prop::collection::vec(mention(), 3..6), oxford in any::<bool>()) {
        let rendered: Vec<_> = mentions.iter().map(render).collect();
        let (head, last) = rendered.split_at(rendered.len() - 1);
        let sep = if oxford { ", and " } else { " and " };
        let text = format!("{}{sep}{}", head.join(", "), last[0]);
        prop_assert_eq!(parse_funding_text(&text), mentions);
    }

    #[test]
    fn registry_csv_round_trip(reg in registry()) {
        let back = parse_registry_csv(&write_registry_csv(&reg)).unwrap();
        prop_assert_eq!(back.entries(), reg.entries());
    }

    #[test]
    fn exact_resolution_is_key_lookup(reg in registry(), words in prop::collection::vec(org_word(), 1..3), punct in "[ .,()-]{0,2}") {
        let text = format!("{punct}{}{punct}", words.join(" "));
        let want = reg.entries().iter().find(|e| names(e).iter().any(|n| funder_key(n) == funder_key(&text)));
        let got = reg.resolve(&text, false);
        prop_assert_eq!(got.map(|(e, _)| &e.funder_id), want.map(|e| &e.funder_id));
        if let Some((_, kind)) = got {
            prop_assert_eq!(kind, MatchKind::Exact);
        }
    }

    #[test]
    fn token_subset_picks_the_unique_largest(reg in registry(), words in prop::collection::vec(org_word(), 1..6)) {
        let text = words.join(" ");
        let tokens: BTreeSet<String> = funder_key(&text).split(' ').map(String::from).collect();
        let got = reg.resolve(&text, true).map(|(e, _)| e.funder_id.clone());
        let exact = reg.resolve(&text, false).map(|(e, _)| e.funder_id.clone());
        if exact.is_some() {
            prop_assert_eq!(got, exact);
        } else {
            let mut best = 0;
            let mut winners = BTreeSet::new();
            for e in reg.entries() {
                for n in names(e) {
                    let nt: BTreeSet<String> = funder_key(n).split(' ').map(String::from).collect();
                    if !nt.is_subset(&tokens) {
                        continue;
                    }
                    if nt.len() > best {
                        best = nt.len();
                        winners.clear();
                    }
                    if nt.len() == best {
                        winners.insert(e.funder_id.clone());
                    }
                }
            }
            let want = (winners.len() == 1).then(|| winners.into_iter().next().unwrap());
            prop_assert_eq!(got, want);
        }
    }
}

#[test]
fn alias_collisions_are_rejected() {
    let header = "funder_id,canonical_name,aliases,country,org_type\n";
    let ok = format!("{header}A,Medical Research Council,MRC,GB,national_agency\nB,Medical Research Council UK,,GB,national_agency\n");
    assert!(parse_registry_csv(&ok).is_ok());
    let clash = format!("{header}A,Medical Research Council,MRC,GB,national_agency\nB,Medical-Research Council.,,GB,national_agency\n");
    assert!(matches!(parse_registry_csv(&clash), Err(RegistryError::AliasCollision { .. })));
}
