"""Resolve profile descriptions against the gazetteer.

Candidate spans come from an external entity file when one is supplied,
otherwise from a heuristic extractor: maximal runs of capitalized tokens
(lowercase connector words like "de"/"van" are allowed inside a run), with a
stopword-filtered lowercase fallback for descriptions that contain no
capitalized span.  Adjacent candidates additionally synthesize an "A, B"
pair string so the pair match class can fire.

Matching walks the classes strictly in order pair -> country -> city; the
first class in which any candidate scores strictly above the threshold wins,
and within it the best (similarity, population, name) entry is returned.
"""

from __future__ import annotations

import csv
import enum
import importlib.resources
import multiprocessing
import re
import unicodedata
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .errors import IngestError
from .gazetteer import GazetteerIndex, normalize_name
from .records import DEFAULT_MATCH_THRESHOLD, GeoMatch, MatchClass, UserRecord
from .util import atomic_write

GEOLOCATION_CSV_HEADER = ["user_id", "country_iso2", "lat", "lon", "similarity", "match_class"]

_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_SEGMENT_RE = re.compile(r"[,;|]")
_MAX_SPAN_TOKENS = 3

# lowercase words allowed inside a capitalized run ("Rio de Janeiro")
_CONNECTORS = {
    "de", "del", "da", "das", "dos", "di", "du", "la", "le", "el", "al",
    "of", "the", "van", "von", "am", "an", "upon", "sur", "na",
}


def _load_stopwords() -> frozenset[str]:
    text = (
        importlib.resources.files("botgeo")
        .joinpath("data/location_stopwords.txt")
        .read_text(encoding="utf-8")
    )
    words = set()
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line.casefold())
    return frozenset(words)


STOPWORDS = _load_stopwords()


class CandidateSource(enum.Enum):
    ENTITY_EXTRACTOR = "entity_extractor"
    CAPITALIZED_NGRAM = "capitalized_ngram"
    PAIR_SYNTHESIS = "pair_synthesis"


@dataclass(frozen=True)
class CandidateSpan:
    text: str
    source: CandidateSource

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("candidate span text must be non-empty")


def _clean_description(text: str) -> str:
    text = _URL_RE.sub(" ", text)
    # symbols (emoji, dingbats, arrows) never match the gazetteer
    return "".join(
        " " if unicodedata.category(c) in ("So", "Sk", "Cs", "Co") else c for c in text
    )


def _strip_token(token: str) -> str:
    while token and unicodedata.category(token[0]).startswith(("P", "S")):
        token = token[1:]
    while token and unicodedata.category(token[-1]).startswith(("P", "S")):
        token = token[:-1]
    return token


def _is_capitalized(token: str) -> bool:
    for ch in token:
        if ch.isalpha():
            return ch.isupper()
    return False


def _windows(tokens: list[str]) -> list[str]:
    if len(tokens) <= _MAX_SPAN_TOKENS:
        return [" ".join(tokens)]
    return [
        " ".join(tokens[i : i + _MAX_SPAN_TOKENS])
        for i in range(len(tokens) - _MAX_SPAN_TOKENS + 1)
    ]


def _capitalized_spans(segment_tokens: list[str]) -> list[str]:
    spans: list[str] = []
    run: list[str] = []
    pending_connector: list[str] = []
    for tok in segment_tokens:
        if _is_capitalized(tok):
            if pending_connector:
                run.extend(pending_connector)
                pending_connector = []
            run.append(tok)
        elif run and tok.casefold() in _CONNECTORS and not pending_connector:
            pending_connector = [tok]
        else:
            if run:
                spans.extend(_windows(run))
            run, pending_connector = [], []
    if run:
        spans.extend(_windows(run))
    return [s for s in spans if any(t.casefold() not in STOPWORDS for t in s.split())]


def _fallback_spans(segment_tokens: list[str]) -> list[str]:
    # n-grams only inside runs of originally-adjacent non-stopword tokens;
    # pure numbers never name a place
    runs: list[list[str]] = []
    current: list[str] = []
    for t in segment_tokens:
        if t.casefold() in STOPWORDS or t.isdigit():
            if current:
                runs.append(current)
            current = []
        else:
            current.append(t)
    if current:
        runs.append(current)
    spans = []
    for run in runs:
        for n in (1, 2, 3):
            for i in range(len(run) - n + 1):
                spans.append(" ".join(run[i : i + n]))
    return spans


def extract_candidates(
    description: str, entity_spans: Optional[Sequence[str]] = None
) -> list[CandidateSpan]:
    """Ordered, deduplicated location candidates for one description."""
    if entity_spans is not None:
        out = []
        seen = set()
        for span in entity_spans:
            span = span.strip()
            if span and span not in seen:
                seen.add(span)
                out.append(CandidateSpan(span, CandidateSource.ENTITY_EXTRACTOR))
        return out

    cleaned = _clean_description(description)
    segments = [seg for seg in _SEGMENT_RE.split(cleaned)]
    tokenized = []
    for seg in segments:
        toks = [_strip_token(t) for t in seg.split()]
        tokenized.append([t for t in toks if t])

    base: list[str] = []
    for toks in tokenized:
        base.extend(_capitalized_spans(toks))
    if not base:
        for toks in tokenized:
            base.extend(_fallback_spans(toks))

    seen: set[str] = set()
    ordered: list[str] = []
    for span in base:
        if span not in seen:
            seen.add(span)
            ordered.append(span)

    out = [CandidateSpan(s, CandidateSource.CAPITALIZED_NGRAM) for s in ordered]
    for a, b in zip(ordered, ordered[1:]):
        # overlapping spans (n-gram windows of one run) make no sense as pairs
        if set(a.casefold().split()) & set(b.casefold().split()):
            continue
        pair = f"{a}, {b}"
        if pair not in seen:
            seen.add(pair)
            out.append(CandidateSpan(pair, CandidateSource.PAIR_SYNTHESIS))
    return out


def match_location(
    candidates: Sequence[CandidateSpan],
    index: GazetteerIndex,
    threshold: float = DEFAULT_MATCH_THRESHOLD,
) -> Optional[GeoMatch]:
    """First match class with any candidate strictly above threshold wins."""
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0, 1]: {threshold}")
    queries = []
    seen = set()
    for cand in candidates:
        q = normalize_name(cand.text)
        if q and q not in seen:
            seen.add(q)
            queries.append(q)
    if not queries:
        return None
    for match_class in (MatchClass.CITY_COUNTRY_PAIR, MatchClass.COUNTRY, MatchClass.CITY):
        best = None  # (sim, population, name, query order) with best-of ordering
        for order, q in enumerate(queries):
            hit = index.best_match(q, match_class, threshold)
            if hit is None:
                continue
            entry = index.entries[hit.entry_index]
            key = (-hit.similarity, -entry.population, hit.name, order)
            if best is None or key < best[0]:
                best = (key, hit, entry)
        if best is not None:
            _, hit, entry = best
            return GeoMatch(
                country_iso2=entry.country_iso2,
                lat=entry.lat,
                lon=entry.lon,
                similarity=hit.similarity,
                match_class=match_class,
                matched_name=hit.name,
                threshold=threshold,
            )
    return None


def geolocate_user(
    user: UserRecord,
    index: GazetteerIndex,
    threshold: float = DEFAULT_MATCH_THRESHOLD,
    cache: Optional[dict[str, Optional[GeoMatch]]] = None,
    entity_spans: Optional[Sequence[str]] = None,
) -> Optional[GeoMatch]:
    """Resolve one user; results are memoized on the exact description text.

    The memo key is the raw description rather than its normalized form:
    candidate extraction is case-sensitive, so normalizing the key could
    alias descriptions that extract differently.
    """
    if entity_spans is not None:
        return match_location(extract_candidates("", entity_spans), index, threshold)
    if cache is not None and user.description in cache:
        return cache[user.description]
    result = match_location(extract_candidates(user.description), index, threshold)
    if cache is not None:
        cache[user.description] = result
    return result


def _resolve_descriptions(
    descriptions: Sequence[str], index: GazetteerIndex, threshold: float
) -> list[Optional[GeoMatch]]:
    return [
        match_location(extract_candidates(d), index, threshold) for d in descriptions
    ]


_worker_state: dict = {}


def _worker_init(index: GazetteerIndex, threshold: float) -> None:
    _worker_state["index"] = index
    _worker_state["threshold"] = threshold


def _worker_resolve(descriptions: list[str]) -> list[Optional[GeoMatch]]:
    return _resolve_descriptions(descriptions, _worker_state["index"], _worker_state["threshold"])


def geolocate_users(
    users: Sequence[UserRecord],
    index: GazetteerIndex,
    threshold: float = DEFAULT_MATCH_THRESHOLD,
    workers: int = 1,
    entity_spans: Optional[Mapping[str, Sequence[str]]] = None,
) -> dict[str, Optional[GeoMatch]]:
    """Resolve a user set; identical output for any worker count.

    Each distinct description is resolved once.  With workers > 1 the unique
    descriptions are partitioned across processes (fork start method) and the
    per-description results merged deterministically.
    """
    entity_spans = entity_spans or {}
    unique: list[str] = []
    seen: set[str] = set()
    for u in users:
        if u.user_id in entity_spans:
            continue
        if u.description not in seen:
            seen.add(u.description)
            unique.append(u.description)

    resolved: dict[str, Optional[GeoMatch]] = {}
    if workers <= 1 or len(unique) < 2 * workers:
        resolved = dict(zip(unique, _resolve_descriptions(unique, index, threshold)))
    else:
        chunks = [unique[i::workers] for i in range(workers)]
        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(workers, initializer=_worker_init, initargs=(index, threshold)) as pool:
            parts = pool.map(_worker_resolve, chunks)
        for chunk, part in zip(chunks, parts):
            resolved.update(zip(chunk, part))

    out: dict[str, Optional[GeoMatch]] = {}
    for u in users:
        if u.user_id in entity_spans:
            out[u.user_id] = geolocate_user(
                u, index, threshold, entity_spans=entity_spans[u.user_id]
            )
        else:
            out[u.user_id] = resolved[u.description]
    return out


def read_entity_file(path: str) -> dict[str, list[str]]:
    """Read per-user entity spans: user_id<TAB>span1|span2|..."""
    spans: dict[str, list[str]] = {}
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise IngestError(f"cannot read entity file {path}: {exc}") from exc
    with fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            user_id, _, rest = line.partition("\t")
            if not user_id:
                continue
            spans[user_id] = [s.strip() for s in rest.split("|") if s.strip()]
    return spans


def write_geolocation_csv(path: str, results: Mapping[str, Optional[GeoMatch]]) -> int:
    """Write matched users as CSV sorted by user_id; returns rows written."""
    rows = 0
    with atomic_write(path, newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(GEOLOCATION_CSV_HEADER)
        for user_id in sorted(results):
            match = results[user_id]
            if match is None:
                continue
            writer.writerow(
                [
                    user_id,
                    match.country_iso2,
                    repr(match.lat),
                    repr(match.lon),
                    repr(match.similarity),
                    match.match_class.value,
                ]
            )
            rows += 1
    return rows


def read_geolocation_csv(path: str) -> dict[str, GeoMatch]:
    """Read a geolocation file back into per-user matches."""
    out: dict[str, GeoMatch] = {}
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise IngestError(f"cannot read geolocation file {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != GEOLOCATION_CSV_HEADER:
            raise IngestError(f"unexpected geolocation header in {path}: {reader.fieldnames}")
        for row in reader:
            # matched_name is not part of the wire format; empty on round-trip
            out[row["user_id"]] = GeoMatch(
                country_iso2=row["country_iso2"],
                lat=float(row["lat"]),
                lon=float(row["lon"]),
                similarity=float(row["similarity"]),
                match_class=MatchClass(row["match_class"]),
                matched_name="",
            )
    return out
