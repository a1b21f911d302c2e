"""Dataset and auxiliary-table loading.

Users and tweets arrive as newline-delimited JSON; malformed lines are
skipped and counted, never fatal.  The month partition key is taken from an
explicit "month" field when present, otherwise derived from the ISO-8601
"created_at" timestamp (day-of-month is deliberately ignored).
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import IngestError
from .records import ISO2_RE, MONTH_RE, TweetRecord, UserRecord

log = logging.getLogger(__name__)


@dataclass
class LoadStats:
    lines: int = 0
    loaded: int = 0
    skipped: int = 0
    duplicates: int = 0


@dataclass
class AuxTables:
    dominant_languages: dict[str, list[str]]
    indicators: dict[str, tuple[float, int]]
    regions: dict[str, str]


def _iter_json_lines(path: str):
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    with fh:
        for line in fh:
            line = line.strip()
            if line:
                yield line


def load_users(path: str) -> tuple[list[UserRecord], LoadStats]:
    stats = LoadStats()
    by_id: dict[str, UserRecord] = {}
    for line in _iter_json_lines(path):
        stats.lines += 1
        try:
            obj = json.loads(line)
            record = UserRecord(
                user_id=str(obj["user_id"]),
                description=str(obj.get("description") or ""),
                raw_lang_hint=obj.get("lang"),
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError):
            stats.skipped += 1
            continue
        if record.user_id in by_id:
            stats.duplicates += 1
            log.warning("duplicate user_id %s: last record wins", record.user_id)
        by_id[record.user_id] = record
        stats.loaded += 1
    return list(by_id.values()), stats


def _month_of(obj: Mapping) -> str:
    month = obj.get("month")
    if month is None:
        created = str(obj.get("created_at") or "")
        month = created[:7]
    month = str(month)
    if not MONTH_RE.fullmatch(month):
        raise ValueError(f"unparseable month: {month!r}")
    return month


def _lang_of(obj: Mapping) -> str:
    lang = str(obj.get("lang") or "und").casefold()
    lang = lang.split("-")[0]
    if not (2 <= len(lang) <= 3 and lang.isalpha() and lang.isascii()):
        return "und"
    return lang


def load_tweets(path: str) -> tuple[list[TweetRecord], LoadStats]:
    stats = LoadStats()
    by_id: dict[str, TweetRecord] = {}
    for line in _iter_json_lines(path):
        stats.lines += 1
        try:
            obj = json.loads(line)
            hashtags = tuple(
                h.lstrip("#") for h in (obj.get("hashtags") or []) if h and h.lstrip("#")
            )
            record = TweetRecord(
                tweet_id=str(obj["tweet_id"]),
                user_id=str(obj["user_id"]),
                text=str(obj.get("text") or ""),
                lang=_lang_of(obj),
                month=_month_of(obj),
                hashtags=hashtags,
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError):
            stats.skipped += 1
            continue
        if record.tweet_id in by_id:
            stats.duplicates += 1
            log.warning("duplicate tweet_id %s: last record wins", record.tweet_id)
        by_id[record.tweet_id] = record
        stats.loaded += 1
    return list(by_id.values()), stats


def partition_by_month(tweets: Iterable[TweetRecord]) -> dict[str, list[TweetRecord]]:
    """Disjoint cover of the input; within a month, input order is kept."""
    partitions: dict[str, list[TweetRecord]] = {}
    for tweet in tweets:
        partitions.setdefault(tweet.month, []).append(tweet)
    return partitions


def normalize_hashtag(raw: str) -> str:
    """Casefold and keep only alphanumerics; may return "" (caller discards).

    Collapses spelling variants such as COVID19Vaccine / COVID-19Vaccine
    into one bucket.
    """
    return "".join(c for c in raw.casefold() if c.isalnum())


def _read_csv_rows(path: str):
    import csv

    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    with fh:
        yield from csv.DictReader(fh)


def load_dominant_languages(path: str) -> dict[str, list[str]]:
    """iso2,langs rows with langs semicolon-separated ISO 639-1 codes."""
    table: dict[str, list[str]] = {}
    skipped = 0
    for row in _read_csv_rows(path):
        iso2 = (row.get("iso2") or "").strip().upper()
        langs = [
            code.strip().casefold()
            for code in (row.get("langs") or "").split(";")
            if code.strip()
        ]
        langs = [c for c in langs if 2 <= len(c) <= 3 and c.isalpha()]
        if not ISO2_RE.fullmatch(iso2) or not langs:
            skipped += 1
            continue
        table[iso2] = list(dict.fromkeys(langs))
    if skipped:
        log.warning("dominant-language table %s: skipped %d rows", path, skipped)
    return table


def load_indicators(path: str) -> dict[str, tuple[float, int]]:
    """iso2,gdp_usd,population rows; non-positive values are rejected."""
    table: dict[str, tuple[float, int]] = {}
    skipped = 0
    for row in _read_csv_rows(path):
        iso2 = (row.get("iso2") or "").strip().upper()
        try:
            gdp = float(row.get("gdp_usd") or "")
            population = int(row.get("population") or "")
        except ValueError:
            skipped += 1
            continue
        if not ISO2_RE.fullmatch(iso2) or gdp <= 0 or population <= 0:
            skipped += 1
            continue
        table[iso2] = (gdp, population)
    if skipped:
        log.warning("indicator table %s: skipped %d rows", path, skipped)
    return table


def load_regions(path: str) -> dict[str, str]:
    """iso2,region rows mapping countries onto named analysis regions."""
    table: dict[str, str] = {}
    skipped = 0
    for row in _read_csv_rows(path):
        iso2 = (row.get("iso2") or "").strip().upper()
        region = (row.get("region") or "").strip()
        if not ISO2_RE.fullmatch(iso2) or not region:
            skipped += 1
            continue
        table[iso2] = region
    if skipped:
        log.warning("region table %s: skipped %d rows", path, skipped)
    return table


def load_ignore_list(path: str) -> set[str]:
    """One hashtag per line; each line is normalized on read."""
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise IngestError(f"cannot read ignore list {path}: {exc}") from exc
    tags = set()
    with fh:
        for line in fh:
            tag = normalize_hashtag(line.strip())
            if tag:
                tags.add(tag)
    return tags


def load_auxiliary(
    dominant_languages_path: str, indicators_path: str, regions_path: str
) -> AuxTables:
    return AuxTables(
        dominant_languages=load_dominant_languages(dominant_languages_path),
        indicators=load_indicators(indicators_path),
        regions=load_regions(regions_path),
    )
