"""Metrics over geolocated, labeled, month-partitioned tweets.

Everything here is a pure function of its inputs: identical inputs produce
identical (and order-independent) results, so slices can be evaluated in
parallel and merged.  Aggregation across months follows the conventions of
the rest of the pipeline: median for per-country rates, mean for language
rankings and dominant-language fractions.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional, Sequence

from .ingest import normalize_hashtag
from .records import (
    ALL_MONTHS,
    BotLabel,
    CountryMetrics,
    GeoMatch,
    Label,
    RegressionResult,
    TweetRecord,
)


@dataclass(frozen=True)
class LanguageMetrics:
    lang: str
    month: str
    n_users: int
    n_bots: int
    bot_rate: float

    def __post_init__(self):
        if not 0.0 <= self.bot_rate <= 1.0:
            raise ValueError(f"bot_rate out of [0,1]: {self.bot_rate}")


@dataclass(frozen=True)
class DominantLanguageMetrics:
    country_iso2: str
    month: str
    fraction: float

    def __post_init__(self):
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError(f"fraction out of [0,1]: {self.fraction}")


@dataclass(frozen=True)
class RegionHashtagResult:
    region: str
    hashtags: tuple[tuple[str, int], ...]  # (normalized tag, count), counts non-increasing


def _is_bot(labels: Mapping[str, BotLabel], user_id: str) -> bool:
    label = labels.get(user_id)
    return label is not None and label.label is Label.BOT


def country_bot_metrics(
    tweets: Sequence[TweetRecord],
    labels: Mapping[str, BotLabel],
    matches: Mapping[str, Optional[GeoMatch]],
    month: str,
    drop_unlabeled: bool = False,
) -> list[CountryMetrics]:
    """Per-country unique authors and bots for one month slice.

    Users without a label count as Human unless drop_unlabeled excludes them.
    Countries with zero users are omitted; with zero bots in the whole slice,
    bot_share is 0 with the degenerate flag set.
    """
    users_by_country: dict[str, set[str]] = {}
    bots_by_country: dict[str, set[str]] = {}
    for tweet in tweets:
        match = matches.get(tweet.user_id)
        if match is None:
            continue
        if drop_unlabeled and tweet.user_id not in labels:
            continue
        users_by_country.setdefault(match.country_iso2, set()).add(tweet.user_id)
        if _is_bot(labels, tweet.user_id):
            bots_by_country.setdefault(match.country_iso2, set()).add(tweet.user_id)
    total_bots = sum(len(v) for v in bots_by_country.values())
    out = []
    for iso2 in sorted(users_by_country):
        n_users = len(users_by_country[iso2])
        n_bots = len(bots_by_country.get(iso2, ()))
        out.append(
            CountryMetrics(
                country_iso2=iso2,
                month=month,
                n_users=n_users,
                n_bots=n_bots,
                bot_rate=n_bots / n_users,
                bot_share=n_bots / total_bots if total_bots else 0.0,
                share_degenerate=total_bots == 0,
            )
        )
    return out


def median(values: Sequence[float]) -> float:
    """Median; even-length input averages the middle two."""
    if not values:
        raise ValueError("median of empty sequence")
    ordered = sorted(values)
    mid = len(ordered) // 2
    if len(ordered) % 2:
        return float(ordered[mid])
    return (ordered[mid - 1] + ordered[mid]) / 2.0


def mean(values: Sequence[float]) -> float:
    if not values:
        raise ValueError("mean of empty sequence")
    return math.fsum(values) / len(values)


def aggregate_median(rows: Iterable, key: Callable, value: Callable) -> dict:
    """Median of value(row) per key(row), over rows where the key appears."""
    grouped: dict = {}
    for row in rows:
        grouped.setdefault(key(row), []).append(value(row))
    return {k: median(v) for k, v in grouped.items()}


def aggregate_mean(rows: Iterable, key: Callable, value: Callable) -> dict:
    """Mean of value(row) per key(row), over rows where the key appears."""
    grouped: dict = {}
    for row in rows:
        grouped.setdefault(key(row), []).append(value(row))
    return {k: mean(v) for k, v in grouped.items()}


def language_bot_metrics(
    tweets: Sequence[TweetRecord],
    labels: Mapping[str, BotLabel],
    month: str,
    drop_unlabeled: bool = False,
) -> list[LanguageMetrics]:
    """Per-language unique authors and bots; a user counts in every language
    they tweeted in within the slice."""
    users_by_lang: dict[str, set[str]] = {}
    bots_by_lang: dict[str, set[str]] = {}
    for tweet in tweets:
        if drop_unlabeled and tweet.user_id not in labels:
            continue
        users_by_lang.setdefault(tweet.lang, set()).add(tweet.user_id)
        if _is_bot(labels, tweet.user_id):
            bots_by_lang.setdefault(tweet.lang, set()).add(tweet.user_id)
    out = []
    for lang in sorted(users_by_lang):
        n_users = len(users_by_lang[lang])
        n_bots = len(bots_by_lang.get(lang, ()))
        out.append(LanguageMetrics(lang, month, n_users, n_bots, n_bots / n_users))
    return out


def top_languages(
    per_month: Sequence[LanguageMetrics], n: int = 30
) -> list[LanguageMetrics]:
    """Aggregate monthly language rows (mean bot rate) and rank.

    Ordering: mean bot rate descending, then summed user-month count
    descending, then language code.  User and bot counts in the output are
    user-month sums, not cross-month unique users.
    """
    by_lang: dict[str, list[LanguageMetrics]] = {}
    for row in per_month:
        by_lang.setdefault(row.lang, []).append(row)
    aggregated = []
    for lang, rows in by_lang.items():
        aggregated.append(
            LanguageMetrics(
                lang=lang,
                month=ALL_MONTHS,
                n_users=sum(r.n_users for r in rows),
                n_bots=sum(r.n_bots for r in rows),
                bot_rate=mean([r.bot_rate for r in rows]),
            )
        )
    aggregated.sort(key=lambda r: (-r.bot_rate, -r.n_users, r.lang))
    return aggregated[:n]


def dominant_language_fraction(
    country_iso2: str,
    tweets: Sequence[TweetRecord],
    labels: Mapping[str, BotLabel],
    matches: Mapping[str, Optional[GeoMatch]],
    dominant_languages: Mapping[str, Sequence[str]],
    month: str,
) -> Optional[DominantLanguageMetrics]:
    """Fraction of the country's bots with at least one tweet in a dominant
    language; None when the country is untabulated or has no bots."""
    dominant = dominant_languages.get(country_iso2)
    if not dominant:
        return None
    dominant_set = set(dominant)
    bots: set[str] = set()
    bots_in_dominant: set[str] = set()
    for tweet in tweets:
        match = matches.get(tweet.user_id)
        if match is None or match.country_iso2 != country_iso2:
            continue
        if not _is_bot(labels, tweet.user_id):
            continue
        bots.add(tweet.user_id)
        if tweet.lang in dominant_set:
            bots_in_dominant.add(tweet.user_id)
    if not bots:
        return None
    return DominantLanguageMetrics(country_iso2, month, len(bots_in_dominant) / len(bots))


def dominant_language_metrics(
    tweets: Sequence[TweetRecord],
    labels: Mapping[str, BotLabel],
    matches: Mapping[str, Optional[GeoMatch]],
    dominant_languages: Mapping[str, Sequence[str]],
    month: str,
) -> list[DominantLanguageMetrics]:
    countries = sorted(
        {
            m.country_iso2
            for m in matches.values()
            if m is not None and m.country_iso2 in dominant_languages
        }
    )
    out = []
    for iso2 in countries:
        row = dominant_language_fraction(
            iso2, tweets, labels, matches, dominant_languages, month
        )
        if row is not None:
            out.append(row)
    return out


def bot_tweet_language_counts(
    tweets: Sequence[TweetRecord],
    labels: Mapping[str, BotLabel],
    matches: Mapping[str, Optional[GeoMatch]],
) -> dict[str, Counter]:
    """Per-country tweet counts by language, bot-authored tweets only."""
    counts: dict[str, Counter] = {}
    for tweet in tweets:
        match = matches.get(tweet.user_id)
        if match is None or not _is_bot(labels, tweet.user_id):
            continue
        counts.setdefault(match.country_iso2, Counter())[tweet.lang] += 1
    return counts


def under_threshold_breakdown(
    aggregated: Sequence[DominantLanguageMetrics],
    lang_counts: Mapping[str, Counter],
    threshold: float = 0.8,
) -> dict[str, list[str]]:
    """Languages of bot tweets, most-used first, for countries whose
    aggregated dominant-language fraction is strictly below the threshold."""
    out: dict[str, list[str]] = {}
    for row in aggregated:
        if row.fraction < threshold:
            counts = lang_counts.get(row.country_iso2, Counter())
            out[row.country_iso2] = [
                lang for lang, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
            ]
    return out


def linear_regression(x: Sequence[float], y: Sequence[float]) -> RegressionResult:
    """Ordinary least squares with R^2 = 1 - SS_res/SS_tot.

    Constant x is an error; constant y yields R^2 = 0 with the degenerate
    flag set.
    """
    if len(x) != len(y):
        raise ValueError("x and y must have equal length")
    n = len(x)
    if n < 2:
        raise ValueError("need at least 2 points")
    mean_x = math.fsum(x) / n
    mean_y = math.fsum(y) / n
    sxx = math.fsum((xi - mean_x) ** 2 for xi in x)
    if sxx == 0.0:
        raise ValueError("degenerate regressor: x is constant")
    sxy = math.fsum((xi - mean_x) * (yi - mean_y) for xi, yi in zip(x, y))
    slope = sxy / sxx
    intercept = mean_y - slope * mean_x
    ss_tot = math.fsum((yi - mean_y) ** 2 for yi in y)
    if ss_tot == 0.0:
        return RegressionResult(slope, intercept, 0.0, n, degenerate=True)
    ss_res = math.fsum((yi - (intercept + slope * xi)) ** 2 for xi, yi in zip(x, y))
    return RegressionResult(slope, intercept, 1.0 - ss_res / ss_tot, n)


def region_hashtags(
    tweets: Sequence[TweetRecord],
    labels: Mapping[str, BotLabel],
    matches: Mapping[str, Optional[GeoMatch]],
    regions: Mapping[str, str],
    ignore: set[str] = frozenset(),
    top_n: int = 5,
) -> list[RegionHashtagResult]:
    """Top hashtags of bot-authored tweets per region.

    Hashtags are normalized before counting, ignore-list tags dropped, ties
    broken lexicographically.  Every region named in the table gets a row,
    possibly empty.
    """
    counters: dict[str, Counter] = {region: Counter() for region in set(regions.values())}
    for tweet in tweets:
        match = matches.get(tweet.user_id)
        if match is None or not _is_bot(labels, tweet.user_id):
            continue
        region = regions.get(match.country_iso2)
        if region is None:
            continue
        for raw in tweet.hashtags:
            tag = normalize_hashtag(raw)
            if tag and tag not in ignore:
                counters[region][tag] += 1
    out = []
    for region in sorted(counters):
        ranked = sorted(counters[region].items(), key=lambda kv: (-kv[1], kv[0]))[:top_n]
        out.append(RegionHashtagResult(region, tuple(ranked)))
    return out
