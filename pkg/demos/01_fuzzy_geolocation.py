#!/usr/bin/env python3
"""Walkthrough: resolving free-text profile locations against a gazetteer.

Builds a small in-memory gazetteer, then shows each stage of the resolver:
name normalization, indel similarity, candidate extraction, and the ordered
match classes (city-country pair, then country, then city) with the strict
0.80 threshold.
"""

from botgeo.gazetteer import build_index, normalize_name
from botgeo.geolocate import extract_candidates, geolocate_user, match_location
from botgeo.records import EntryKind, GazetteerEntry, UserRecord
from botgeo.similarity import similarity

entries = [
    GazetteerEntry(EntryKind.CITY, "paris", "FR", 48.85, 2.35, 2138551,
                   aliases=("lutece", "париж")),
    GazetteerEntry(EntryKind.CITY, "new york city", "US", 40.71, -74.0, 8175133,
                   aliases=("nyc", "new york")),
    GazetteerEntry(EntryKind.CITY, "bangkok", "TH", 13.75, 100.5, 10539000,
                   aliases=("krung thep",)),
    GazetteerEntry(EntryKind.COUNTRY, "france", "FR", 46.0, 2.0),
    GazetteerEntry(EntryKind.COUNTRY, "united states", "US", 39.8, -98.5),
    GazetteerEntry(EntryKind.COUNTRY, "thailand", "TH", 15.8, 101.0),
]
index = build_index(entries)
print("gazetteer:", index.stats())

print("\n--- name normalization folds case, accents, and stray punctuation")
for raw in ["  SÃO   PAULO ", "- ¡París! -", "Bangkok"]:
    print(f"  {raw!r:24} -> {normalize_name(raw)!r}")

print("\n--- indel similarity: 1 - distance / (len(a) + len(b))")
for a, b in [("paris", "paris"), ("londn", "london"), ("berlin", "munich")]:
    print(f"  similarity({a!r}, {b!r}) = {similarity(a, b):.4f}")

print("\n--- candidate extraction from profile text")
for description in [
    "Proud nurse from New York, USA",
    "i live in paris",
    "Bangkok street food lover",
    "just vibes ✨",
]:
    spans = [c.text for c in extract_candidates(description)]
    print(f"  {description!r:38} -> {spans}")

print("\n--- match classes are tried in order: pair, country, city")
for description in ["Paris, France", "France", "Parislol", "Krung Thep"]:
    match = match_location(extract_candidates(description), index)
    if match is None:
        print(f"  {description!r:18} -> no match above 0.80")
    else:
        print(
            f"  {description!r:18} -> {match.country_iso2} via {match.match_class.value}"
            f" (similarity {match.similarity:.3f}, name {match.matched_name!r})"
        )

print("\n--- the threshold is strict: similarity must exceed 0.80")
user = UserRecord("u1", "Francz")  # similarity 5/6 over 'france'
match = geolocate_user(user, index)
print(f"  'Francz' -> {match.country_iso2} at {match.similarity:.4f}")
print(f"  similarity('abcde', 'abcdx') = {similarity('abcde', 'abcdx')}, "
      f"match: {geolocate_user(UserRecord('u2', 'Abcde'), build_index([GazetteerEntry(EntryKind.CITY, 'abcdx', 'AA', 0, 0, 1000)]))}")
