#!/usr/bin/env python3
"""Walkthrough: the full command-line pipeline on generated sample data.

Writes a small city dump, country table, user/tweet files and an external
score file into a temp directory, then drives every pipeline stage:

    gazetteer build -> geolocate -> score import -> analyze -> report
"""

import json
import os
import subprocess
import sys
import tempfile

CITY_COLUMNS = 19


def city_row(name, alts, lat, lon, iso2, pop):
    row = [""] * CITY_COLUMNS
    row[1], row[3], row[4], row[5], row[8], row[14] = (
        name, alts, str(lat), str(lon), iso2, str(pop),
    )
    return "\t".join(row)


def run(*args):
    print(f"\n$ botgeo {' '.join(args)}")
    proc = subprocess.run(
        [sys.executable, "-m", "botgeo.cli", *args], capture_output=True, text=True
    )
    sys.stdout.write(proc.stdout)
    sys.stderr.write(proc.stderr)
    proc.check_returncode()


work = tempfile.mkdtemp(prefix="botgeo-demo-")
print("working directory:", work)
j = lambda name: os.path.join(work, name)

with open(j("cities.tsv"), "w", encoding="utf-8") as fh:
    fh.write("\n".join([
        city_row("Paris", "Lutece", 48.85, 2.35, "FR", 2138551),
        city_row("Berlin", "", 52.52, 13.40, "DE", 3644826),
        city_row("Bangkok", "Krung Thep", 13.75, 100.50, "TH", 10539000),
    ]) + "\n")
with open(j("countries.csv"), "w", encoding="utf-8") as fh:
    fh.write("iso2,name,lat,lon\nFR,France,46.0,2.0\nDE,Germany,51.0,9.0\nTH,Thailand,15.8,101.0\n")

users = [
    {"user_id": "u1", "description": "Paris, France"},
    {"user_id": "u2", "description": "Berlin techno"},
    {"user_id": "u3", "description": "Bangkok street food"},
    {"user_id": "u4", "description": "just vibes"},
]
with open(j("users.ndjson"), "w", encoding="utf-8") as fh:
    fh.writelines(json.dumps(u) + "\n" for u in users)

tweets = []
for i, (uid, lang, tags) in enumerate([
    ("u1", "fr", ["Pfizer", "covid19"]),
    ("u2", "de", ["Impfung"]),
    ("u3", "th", ["SputnikV", "AIMS"]),
    ("u4", "en", []),
]):
    for month in ("2021-01", "2021-02"):
        tweets.append({
            "tweet_id": f"t{i}-{month}", "user_id": uid, "text": f"hello {i}",
            "lang": lang, "created_at": f"{month}-03T09:00:00Z", "hashtags": tags,
        })
with open(j("tweets.ndjson"), "w", encoding="utf-8") as fh:
    fh.writelines(json.dumps(t) + "\n" for t in tweets)

with open(j("scores.csv"), "w", encoding="utf-8") as fh:
    fh.write("user_id,bot_probability\nu1,0.9\nu2,0.2\nu3,0.8\nu4,0.6\n")
with open(j("dominant.csv"), "w", encoding="utf-8") as fh:
    fh.write("iso2,langs\nFR,fr\nDE,de\nTH,th\n")
with open(j("indicators.csv"), "w", encoding="utf-8") as fh:
    fh.write("iso2,gdp_usd,population\nFR,2.6e12,67000000\nDE,3.8e12,83000000\nTH,5.0e11,70000000\n")
with open(j("regions.csv"), "w", encoding="utf-8") as fh:
    fh.write("iso2,region\nFR,Europe\nDE,Europe\nTH,Asia\n")

run("gazetteer", "build", "--cities", j("cities.tsv"), "--countries", j("countries.csv"),
    "--out", j("index.bin"))
run("geolocate", "--users", j("users.ndjson"), "--index", j("index.bin"),
    "--out", j("geo.csv"))
run("score", "import", "--input", j("scores.csv"), "--out", j("scores_valid.csv"))
run("analyze", "country", "--tweets", j("tweets.ndjson"), "--geo", j("geo.csv"),
    "--scores", j("scores_valid.csv"), "--out", j("country.csv"), "--monthly")
run("analyze", "language", "--tweets", j("tweets.ndjson"),
    "--scores", j("scores_valid.csv"), "--out", j("language.csv"))
run("analyze", "dominant-language", "--tweets", j("tweets.ndjson"), "--geo", j("geo.csv"),
    "--scores", j("scores_valid.csv"), "--dominant", j("dominant.csv"),
    "--out", j("dominant_out.csv"), "--breakdown", j("breakdown.csv"))
run("analyze", "regression", "--metric", j("country.csv"),
    "--indicators", j("indicators.csv"), "--out", j("regression.csv"))
run("analyze", "hashtags", "--tweets", j("tweets.ndjson"), "--geo", j("geo.csv"),
    "--scores", j("scores_valid.csv"), "--regions", j("regions.csv"),
    "--out", j("hashtags.csv"))
run("report", "choropleth", "--metric", j("country.csv"), "--countries", j("countries.csv"),
    "--out", j("choropleth.csv"), "--geojson", j("choropleth.geojson"))

print("\n--- geolocation output")
print(open(j("geo.csv")).read())
print("--- aggregate country metrics")
print(open(j("country.csv")).read())
print("--- region hashtags (note: covid19 never appears, it is on the default ignore list)")
print(open(j("hashtags.csv")).read())
