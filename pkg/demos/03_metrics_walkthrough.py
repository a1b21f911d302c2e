#!/usr/bin/env python3
"""Walkthrough: the social-geography metrics on a small labeled corpus.

Hand-built tweets across two months show every metric family: per-country
bot rate and share (median-aggregated), per-language rates (mean-aggregated,
ranked), dominant-language fractions with the under-80% breakdown, the
indicator regression, and region hashtags with the ignore list.
"""

from botgeo.analytics import (
    aggregate_mean,
    aggregate_median,
    bot_tweet_language_counts,
    country_bot_metrics,
    dominant_language_metrics,
    language_bot_metrics,
    linear_regression,
    region_hashtags,
    top_languages,
    under_threshold_breakdown,
)
from botgeo.records import BotLabel, GeoMatch, MatchClass, TweetRecord

M1, M2 = "2021-01", "2021-02"


def tweet(tid, uid, lang, month, tags=()):
    return TweetRecord(tid, uid, f"text {tid}", lang, month, tuple(tags))


matches = {
    "alice": GeoMatch("FR", 48.85, 2.35, 1.0, MatchClass.CITY, "paris"),
    "bob": GeoMatch("FR", 46.0, 2.0, 1.0, MatchClass.COUNTRY, "france"),
    "carol": GeoMatch("FR", 48.85, 2.35, 1.0, MatchClass.CITY, "paris"),
    "dmitri": GeoMatch("RU", 55.75, 37.61, 1.0, MatchClass.CITY, "moscow"),
    "elena": GeoMatch("RU", 61.5, 105.0, 1.0, MatchClass.COUNTRY, "russia"),
}
labels = {
    "alice": BotLabel.from_probability("alice", 0.9),
    "bob": BotLabel.from_probability("bob", 0.1),
    "carol": BotLabel.from_probability("carol", 0.2),
    "dmitri": BotLabel.from_probability("dmitri", 0.95),
    "elena": BotLabel.from_probability("elena", 0.9),
}
tweets = [
    tweet("t1", "alice", "fr", M1, ["Pfizer", "covid19"]),
    tweet("t2", "alice", "fr", M2, ["Pfizer"]),
    tweet("t3", "bob", "fr", M1),
    tweet("t4", "carol", "fr", M1),
    tweet("t5", "carol", "fr", M2),
    tweet("t6", "dmitri", "en", M1, ["SputnikV", "AIMS"]),
    tweet("t7", "dmitri", "en", M2, ["SputnikV"]),
    tweet("t8", "elena", "ru", M1, ["SputnikV", "coronavirus"]),
    tweet("t9", "elena", "en", M2, ["education"]),
]
by_month = {M1: [t for t in tweets if t.month == M1], M2: [t for t in tweets if t.month == M2]}

print("--- per-country unique authors, bot rate, bot share (per month)")
monthly = []
for month, slice_tweets in by_month.items():
    rows = country_bot_metrics(slice_tweets, labels, matches, month)
    monthly.extend(rows)
    for r in rows:
        print(f"  {month} {r.country_iso2}: users={r.n_users} bots={r.n_bots} "
              f"rate={r.bot_rate:.3f} share={r.bot_share:.3f}")

print("\n--- aggregate across months with the median")
for iso2, value in sorted(
    aggregate_median(monthly, key=lambda r: r.country_iso2, value=lambda r: r.bot_rate).items()
):
    print(f"  {iso2}: median bot rate {value:.3f}")

print("\n--- language buckets (a user counts in every language they used)")
per_month_langs = []
for month, slice_tweets in by_month.items():
    per_month_langs.extend(language_bot_metrics(slice_tweets, labels, month))
for row in top_languages(per_month_langs, n=30):
    print(f"  {row.lang}: mean rate {row.bot_rate:.3f} over user-months={row.n_users}")

print("\n--- dominant-language fractions (mean-aggregated), breakdown below 0.8")
dominant = {"FR": ["fr"], "RU": ["ru"]}
per_month_dom = []
for month, slice_tweets in by_month.items():
    per_month_dom.extend(
        dominant_language_metrics(slice_tweets, labels, matches, dominant, month)
    )
fractions = aggregate_mean(
    per_month_dom, key=lambda r: r.country_iso2, value=lambda r: r.fraction
)
for iso2, fraction in sorted(fractions.items()):
    print(f"  {iso2}: {fraction:.3f}")
from botgeo.analytics import DominantLanguageMetrics
from botgeo.records import ALL_MONTHS

aggregated = [DominantLanguageMetrics(i, ALL_MONTHS, f) for i, f in sorted(fractions.items())]
counts = bot_tweet_language_counts(tweets, labels, matches)
for iso2, langs in under_threshold_breakdown(aggregated, counts, 0.8).items():
    print(f"  below 0.8: {iso2} posts in {langs} (most used first)")

print("\n--- bot rate vs country indicators")
result = linear_regression([1e12, 3e12], [0.5, 1.0])
print(f"  slope={result.slope:.3e} intercept={result.intercept:.3f} "
      f"r2={result.r_squared:.3f} n={result.n}")

print("\n--- region hashtags, normalized and ignore-filtered")
regions = {"FR": "Europe", "RU": "Russia"}
for row in region_hashtags(tweets, labels, matches, regions, ignore={"covid19", "coronavirus"}):
    print(f"  {row.region}: {list(row.hashtags)}")
