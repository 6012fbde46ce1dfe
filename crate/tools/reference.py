#!/usr/bin/env python3
"""Brute-force reference for the golden files: reads a `fundscape run` config and
writes indicators.csv and plot_data.json, searching every term at every position."""
import argparse, csv, json, os, re, unicodedata

CATEGORIES = ["european", "national", "national_and_european", "other", "non_funded"]
DASHES = set("-‐‑‒–—―−")
PUBLIC = {"national_agency", "regional_public", "other_public"}
DOMESTIC = PUBLIC | {"charity"}
DATA = os.path.join(os.path.dirname(__file__), "..", "crates", "core", "data")

def fold(s):
    out, last_space = [], False
    for ch in s:
        for c in ch.casefold():
            for d in unicodedata.normalize("NFD", c):
                if unicodedata.combining(d):
                    continue
                if d.isspace() or d in DASHES:
                    if not last_space:
                        out.append(" ")
                    last_space = True
                else:
                    out.append(d)
                    last_space = False
    return "".join(out)

def funder_key(s):
    return " ".join(w for w in re.split(r"[^\w]+|_", fold(s)) if w)

def words(name):
    return {w.strip().lower() for w in open(os.path.join(DATA, name), encoding="utf-8") if w.strip()}

def ambiguous(surface, common, short):
    key = fold(surface).strip(" ")
    acronym = (any(c.isalpha() for c in surface) and not any(c.islower() for c in surface)
               and len(surface) <= 5 and key in short)
    return len(key) < 4 or key in common or acronym

def load_terms(path, policy):
    common, short, terms = words("common_words.txt"), words("short_words.txt"), []
    for row in csv.DictReader(open(path, encoding="utf-8", newline="")):
        names = [row["preferred_name"]]
        if policy == "preferred_plus_vetted_synonyms":
            names += [s for s in row["synonyms"].split("|") if s.strip()]
        flagged = {fold(a).strip(" ") for a in (row.get("ambiguous") or "").split("|") if a.strip()}
        terms += [fold(n).strip(" ") for n in names
                  if fold(n).strip(" ") not in flagged and not ambiguous(n.strip(), common, short)]
    return terms

def occurs(text, terms):
    t = fold(text)
    for term in terms:
        for i in range(len(t) - len(term) + 1):
            if t[i:i + len(term)] != term:
                continue
            before = i > 0 and t[i - 1].isalnum()
            after = i + len(term) < len(t) and t[i + len(term)].isalnum()
            if not before and not after:
                return True
    return False

def grant_like(tok):
    return any(c.isdigit() for c in tok) and all(c.isalnum() or c in "/-." for c in tok)

def parse_fa(text):
    parts = [p for seg in text.split(";") for p in seg.split(",")]
    if len(parts) > 1:
        parts = parts[:-1] + re.split(r"\s+and\s+", parts[-1], flags=re.I)
    mentions = []
    for p in parts:
        p = p.strip()
        m = re.match(r"^(.*?)\s*\(([^()]*)\)$", p)
        if m and m.group(2).split() and all(grant_like(t) for t in m.group(2).split()):
            p = m.group(1).strip()
        if p:
            mentions.append(p)
    return mentions or [text]

def load_registry(path):
    index = {}
    for row in csv.DictReader(open(path, encoding="utf-8", newline="")):
        for name in [row["canonical_name"]] + row["aliases"].split("|"):
            if funder_key(name):
                index[funder_key(name)] = (row["org_type"], row["country"].strip().upper() or None)
    return index

def scope(entry, focal, embo):
    if entry is None:
        return "other"
    org_type, country = entry
    if org_type == "ec_framework_program" or (org_type == "pan_european_non_ec" and embo):
        return "european"
    if org_type in DOMESTIC and country == focal:
        return "national"
    return "foreign" if org_type in PUBLIC and country else "other"

def category(scopes, fa_present):
    if not fa_present or not scopes:
        return "non_funded"
    eu, nat = "european" in scopes, "national" in scopes
    return "national_and_european" if eu and nat else "european" if eu else "national" if nat else "other"

def sum_in_order(values):
    total = 0.0
    for v in values:
        total += v
    return total

def fixed(x):  # placeholder, unquoted after dumping
    return None if x is None else "@@%.6f@@" % x

def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", required=True)
    ap.add_argument("--out-dir", required=True)
    args = ap.parse_args()
    base = os.path.dirname(os.path.abspath(args.config))
    cfg = json.load(open(args.config, encoding="utf-8"))
    path = lambda k: os.path.join(base, cfg[k])
    start, end = cfg["period"]["start_year"], cfg["period"]["end_year"]
    focal = sorted(set(cfg["focal_countries"]))
    embo = cfg.get("embo_as_european", False)
    doc_cells = cfg.get("normalization", {}).get("doc_type_cells", True)

    lines = open(path("corpus"), encoding="utf-8").read().splitlines()
    records = [json.loads(l) for l in lines if l.strip() and "census_year" not in json.loads(l)]
    whitelist = {l.strip() for l in open(path("category_whitelist"), encoding="utf-8")
                 if l.strip() and not l.startswith("#")}
    terms = load_terms(path("lexicon"), cfg.get("match_policy", "preferred_only"))
    registry = load_registry(path("funders"))

    key = lambda r, c: (c, r["year"], r["doc_type"].lower() if doc_cells else None)
    cells = {}
    for r in records:
        for c in r["categories"]:
            t = cells.setdefault(key(r, c), [0, 0])
            t[0] += r["citations"]
            t[1] += 1

    entries = []
    for r in sorted(records, key=lambda r: r["id"]):
        if not (start <= r["year"] <= end and set(r["countries"]) & set(focal)
                and set(r["categories"]) & whitelist and r["doc_type"].lower() in ("article", "review")):
            continue
        if not any(occurs(t, terms) for t in [r["title"], r["abstract"] or ""] + r["keywords"]):
            continue
        means = [cells[key(r, c)][0] / cells[key(r, c)][1] for c in sorted(r["categories"])]
        expected = sum_in_order(means) / len(means)
        ncs = r["citations"] / expected if expected > 0 else None
        funding = r.get("funding")
        fa_present = funding is not None or bool(r.get("fa_text"))
        orgs = [m["org"] for m in funding or []] or (parse_fa(r["fa_text"]) if r.get("fa_text") else [])
        for country in sorted(set(r["countries"]) & set(focal)):
            scopes = [scope(registry.get(funder_key(o)), country, embo) for o in orgs]
            entries.append((country, r["year"], category(scopes, fa_present), ncs))

    def mean(group):
        if not group or any(v is None for v in group):
            return None
        return sum_in_order(group) / len(group)

    csv_lines = ["country,year,category,p,mncs"]
    for c in focal:
        for y in range(start, end + 1):
            for cat in CATEGORIES:
                g = [e[3] for e in entries if e[:3] == (c, y, cat)]
                if g:
                    m = mean(g)
                    csv_lines.append("%s,%d,%s,%d,%s" % (c, y, cat, len(g), "" if m is None else "%.6f" % m))

    countries = []
    for c in focal:
        mine = [e for e in entries if e[0] == c]
        by_year = lambda y, cat=None: [e[3] for e in mine if e[1] == y and (cat is None or e[2] == cat)]
        years = range(start, end + 1)
        countries.append({
            "country": c,
            "output": [{"year": y, "p": len(by_year(y))} for y in years],
            "category_shares": [{"category": cat, "p": sum(e[2] == cat for e in mine),
                                 "share": fixed(sum(e[2] == cat for e in mine) / len(mine)) if mine else None}
                                for cat in CATEGORIES],
            "impact": [{"year": y, "mncs": fixed(mean(by_year(y)))} for y in years],
            "by_category": [{"category": cat,
                             "output": [{"year": y, "p": len(by_year(y, cat))} for y in years],
                             "impact": [{"year": y, "mncs": fixed(mean(by_year(y, cat)))} for y in years]}
                            for cat in CATEGORIES],
        })
    plot = {"period": {"start_year": start, "end_year": end}, "categories": CATEGORIES, "countries": countries}
    text = re.sub(r'"@@([-0-9.]+)@@"', r"\1", json.dumps(plot, indent=2, ensure_ascii=False)) + "\n"

    os.makedirs(args.out_dir, exist_ok=True)
    for name, body in [("indicators.csv", "\n".join(csv_lines) + "\n"), ("plot_data.json", text)]:
        with open(os.path.join(args.out_dir, name), "w", encoding="utf-8", newline="") as f:
            f.write(body)

if __name__ == "__main__":
    main()
