"""Core value types shared across the pipeline.

Every type validates its invariants at construction and is immutable
afterwards, so records can be shared freely between workers.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, InitVar
from typing import Iterable, Mapping, Any

MONTH_RE = re.compile(r"^\d{4}-(0[1-9]|1[0-2])$")
ISO2_RE = re.compile(r"^[A-Z]{2}$")

#: Month key used by aggregate (whole-dataset) metric rows.
ALL_MONTHS = "ALL"

DEFAULT_MATCH_THRESHOLD = 0.80
DEFAULT_BOT_THRESHOLD = 0.5


class EntryKind(enum.Enum):
    CITY = "city"
    COUNTRY = "country"


class MatchClass(enum.Enum):
    """Match classes in resolution order: pair first, then country, then city."""

    CITY_COUNTRY_PAIR = "pair"
    COUNTRY = "country"
    CITY = "city"


class Label(enum.Enum):
    BOT = "bot"
    HUMAN = "human"


@dataclass(frozen=True)
class UserRecord:
    user_id: str
    description: str = ""
    raw_lang_hint: str | None = None

    def __post_init__(self):
        if not self.user_id:
            raise ValueError("user_id must be non-empty")


@dataclass(frozen=True)
class TweetRecord:
    tweet_id: str
    user_id: str
    text: str
    lang: str
    month: str
    hashtags: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.tweet_id:
            raise ValueError("tweet_id must be non-empty")
        if not self.user_id:
            raise ValueError("user_id must be non-empty")
        if not re.fullmatch(r"[a-z]{2,3}|und", self.lang):
            raise ValueError(f"lang must be a lowercase 2-3 letter code or 'und': {self.lang!r}")
        if not MONTH_RE.fullmatch(self.month):
            raise ValueError(f"month must be YYYY-MM: {self.month!r}")
        if any(not h for h in self.hashtags):
            raise ValueError("hashtags must be non-empty strings")


@dataclass(frozen=True)
class GazetteerEntry:
    """One place row: a city or a country centroid.

    name_normalized must already be in normalized form (see
    gazetteer.normalize_name); aliases are additional normalized names that
    resolve to this same entry.
    """

    kind: EntryKind
    name_normalized: str
    country_iso2: str
    lat: float
    lon: float
    population: int = 0
    aliases: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.name_normalized:
            raise ValueError("name_normalized must be non-empty")
        if not ISO2_RE.fullmatch(self.country_iso2):
            raise ValueError(f"country_iso2 must match ^[A-Z]{{2}}$: {self.country_iso2!r}")
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"lat out of range: {self.lat}")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"lon out of range: {self.lon}")
        if self.population < 0:
            raise ValueError("population must be non-negative")


@dataclass(frozen=True)
class GeoMatch:
    """A resolved location; cannot be constructed at or below the threshold."""

    country_iso2: str
    lat: float
    lon: float
    similarity: float
    match_class: MatchClass
    matched_name: str
    threshold: InitVar[float] = DEFAULT_MATCH_THRESHOLD

    def __post_init__(self, threshold: float):
        if not self.similarity > threshold:
            raise ValueError(
                f"similarity {self.similarity} must exceed threshold {threshold}"
            )
        if self.similarity > 1.0:
            raise ValueError(f"similarity above 1: {self.similarity}")
        if not ISO2_RE.fullmatch(self.country_iso2):
            raise ValueError(f"country_iso2 must match ^[A-Z]{{2}}$: {self.country_iso2!r}")


@dataclass(frozen=True)
class BotLabel:
    user_id: str
    probability: float
    label: Label
    threshold: InitVar[float] = DEFAULT_BOT_THRESHOLD

    def __post_init__(self, threshold: float):
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError(f"probability out of [0,1]: {self.probability}")
        expected = Label.BOT if self.probability >= threshold else Label.HUMAN
        if self.label is not expected:
            raise ValueError(
                f"label {self.label} inconsistent with probability {self.probability} "
                f"at threshold {threshold}"
            )

    @classmethod
    def from_probability(
        cls, user_id: str, probability: float, threshold: float = DEFAULT_BOT_THRESHOLD
    ) -> "BotLabel":
        label = Label.BOT if probability >= threshold else Label.HUMAN
        return cls(user_id, probability, label, threshold)


@dataclass(frozen=True)
class CountryMetrics:
    country_iso2: str
    month: str  # YYYY-MM or ALL_MONTHS
    n_users: int
    n_bots: int
    bot_rate: float
    bot_share: float
    share_degenerate: bool = False  # True when the slice had zero bots

    def __post_init__(self):
        if not 0.0 <= self.bot_rate <= 1.0:
            raise ValueError(f"bot_rate out of [0,1]: {self.bot_rate}")


@dataclass(frozen=True)
class RegressionResult:
    slope: float
    intercept: float
    r_squared: float
    n: int
    degenerate: bool = False  # constant response; r_squared fixed to 0

    def __post_init__(self):
        if not self.degenerate and not -1e-12 <= self.r_squared <= 1.0 + 1e-12:
            raise ValueError(f"r_squared out of [0,1]: {self.r_squared}")


@dataclass(frozen=True)
class ValidationIssue:
    record_id: str
    reason: str


@dataclass(frozen=True)
class ValidationReport:
    n_valid_users: int
    n_invalid_users: int
    n_valid_tweets: int
    n_invalid_tweets: int
    issues: tuple[ValidationIssue, ...] = ()


def _get(record: Any, name: str, default=None):
    if isinstance(record, Mapping):
        return record.get(name, default)
    return getattr(record, name, default)


def validate_dataset(users: Iterable[Any], tweets: Iterable[Any]) -> ValidationReport:
    """Report-only referential and field checks over loosely-typed records.

    Accepts UserRecord/TweetRecord instances or plain mappings, so raw parsed
    rows can be screened before strict construction.
    """
    issues: list[ValidationIssue] = []
    seen_users: set[str] = set()
    n_valid_users = n_invalid_users = 0
    for u in users:
        uid = _get(u, "user_id") or ""
        if not uid:
            n_invalid_users += 1
            issues.append(ValidationIssue("<missing>", "missing user_id"))
        elif uid in seen_users:
            n_invalid_users += 1
            issues.append(ValidationIssue(uid, "duplicate user_id"))
        else:
            seen_users.add(uid)
            n_valid_users += 1

    n_valid_tweets = n_invalid_tweets = 0
    for t in tweets:
        tid = _get(t, "tweet_id") or "<missing>"
        uid = _get(t, "user_id") or ""
        month = _get(t, "month") or ""
        bad = False
        if not uid:
            issues.append(ValidationIssue(tid, "missing user_id"))
            bad = True
        elif uid not in seen_users:
            issues.append(ValidationIssue(tid, "orphan tweet"))
            bad = True
        if not MONTH_RE.fullmatch(str(month)):
            issues.append(ValidationIssue(tid, "unparseable month"))
            bad = True
        if bad:
            n_invalid_tweets += 1
        else:
            n_valid_tweets += 1

    return ValidationReport(
        n_valid_users, n_invalid_users, n_valid_tweets, n_invalid_tweets, tuple(issues)
    )
