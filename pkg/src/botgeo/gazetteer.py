"""Gazetteer import, name normalization, and the fuzzy-lookup index.

The index answers "best entry with similarity strictly above t" queries per
match class (city-country pair, country, city).  Entries are bucketed by
(first character, length band of width 4); a lookup visits every first-char
bucket inside the length window the threshold allows, which is complete
because indel distance is at least the length difference.  Inside the
window, parity signatures over characters and bigrams lower-bound the indel
distance per row in a few streaming passes, and only rows whose bound still
permits similarity > t are scored exactly with the bit-parallel LCS.  Every
filter evaluates the same float formula as the final comparison, so pruned
results are identical to a full scan by construction.
"""

from __future__ import annotations

import csv
import gzip
import json
import logging
import unicodedata
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from . import _kernels
from .errors import IngestError
from .records import EntryKind, GazetteerEntry, MatchClass
from .similarity import BatchScorer, length_window
from .util import atomic_write

log = logging.getLogger(__name__)

INDEX_FORMAT_VERSION = 1
LENGTH_BAND_WIDTH = 4
MIN_CITY_POPULATION = 1000

# GeoNames-style city dump column positions (tab-delimited, no header).
CITY_COL_NAME = 1
CITY_COL_ALTNAMES = 3
CITY_COL_LAT = 4
CITY_COL_LON = 5
CITY_COL_ISO2 = 8
CITY_COL_POPULATION = 14
CITY_MIN_COLUMNS = 15


def normalize_name(raw: str) -> str:
    """Canonical matching form: accent-folded, casefolded, tidy whitespace.

    NFKD-decomposes, drops combining marks, casefolds, collapses whitespace
    runs, and strips leading/trailing punctuation.  Applied to a fixpoint so
    the function is idempotent even for characters whose casefold reintroduces
    combining marks.
    """
    s = raw
    for _ in range(8):
        t = unicodedata.normalize("NFKD", s)
        t = "".join(c for c in t if not unicodedata.combining(c))
        t = t.casefold()
        t = " ".join(t.split())
        while t and unicodedata.category(t[0]).startswith("P"):
            t = t[1:]
        while t and unicodedata.category(t[-1]).startswith("P"):
            t = t[:-1]
        t = " ".join(t.split())
        if t == s:
            return t
        s = t
    return s


@dataclass
class ImportStats:
    rows: int = 0
    imported: int = 0
    skipped: int = 0
    filtered_low_population: int = 0
    duplicates: int = 0
    aliases: int = 0


@dataclass
class ImportResult:
    entries: list[GazetteerEntry]
    stats: ImportStats


def import_cities(path: str) -> ImportResult:
    """Parse a tab-delimited city dump into City entries (population >= 1000).

    Malformed rows are skipped and counted; an unreadable file is fatal.
    """
    stats = ImportStats()
    entries: list[GazetteerEntry] = []
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise IngestError(f"cannot read city dump {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh, delimiter="\t", quoting=csv.QUOTE_NONE)
        for row in reader:
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            stats.rows += 1
            if len(row) < CITY_MIN_COLUMNS:
                stats.skipped += 1
                continue
            name = normalize_name(row[CITY_COL_NAME])
            iso2 = row[CITY_COL_ISO2].strip().upper()
            try:
                lat = float(row[CITY_COL_LAT])
                lon = float(row[CITY_COL_LON])
                population = int(row[CITY_COL_POPULATION] or 0)
            except ValueError:
                stats.skipped += 1
                continue
            if not name:
                stats.skipped += 1
                continue
            if population < MIN_CITY_POPULATION:
                stats.filtered_low_population += 1
                continue
            aliases = []
            for alt in row[CITY_COL_ALTNAMES].split(","):
                norm = normalize_name(alt)
                if norm and norm != name:
                    aliases.append(norm)
            aliases = list(dict.fromkeys(aliases))
            try:
                entry = GazetteerEntry(
                    kind=EntryKind.CITY,
                    name_normalized=name,
                    country_iso2=iso2,
                    lat=lat,
                    lon=lon,
                    population=population,
                    aliases=tuple(aliases),
                )
            except ValueError:
                stats.skipped += 1
                continue
            entries.append(entry)
            stats.imported += 1
            stats.aliases += len(aliases)
    if stats.rows == 0:
        log.warning("city dump %s is empty", path)
    if stats.skipped:
        log.warning("city dump %s: skipped %d malformed rows", path, stats.skipped)
    return ImportResult(entries, stats)


def import_countries(path: str) -> ImportResult:
    """Parse a comma-delimited country table with header iso2,name,lat,lon."""
    stats = ImportStats()
    entries: list[GazetteerEntry] = []
    seen: set[str] = set()
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise IngestError(f"cannot read country table {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        for row in reader:
            stats.rows += 1
            iso2 = (row.get("iso2") or "").strip().upper()
            name = normalize_name(row.get("name") or "")
            try:
                lat = float(row.get("lat") or "")
                lon = float(row.get("lon") or "")
            except ValueError:
                stats.skipped += 1
                continue
            if iso2 in seen:
                stats.duplicates += 1
                log.warning("duplicate country iso2 %s: keeping first", iso2)
                continue
            try:
                entry = GazetteerEntry(
                    kind=EntryKind.COUNTRY,
                    name_normalized=name,
                    country_iso2=iso2,
                    lat=lat,
                    lon=lon,
                    population=0,
                )
            except ValueError:
                stats.skipped += 1
                continue
            seen.add(iso2)
            entries.append(entry)
            stats.imported += 1
    if stats.rows == 0:
        log.warning("country table %s is empty", path)
    return ImportResult(entries, stats)


@dataclass(frozen=True)
class EngineHit:
    similarity: float
    name: str
    entry_index: int


_MIX1 = 2654435761
_MIX2 = 0x9E3779B97F4A7C15


def _sketch16(name: str) -> int:
    """16-bit parity signature; first filter stage in the numba kernel."""
    s = 0
    for c in name:
        s ^= 1 << ((ord(c) * _MIX1) >> 27 & 15)
    return s


def _char_signature(name: str) -> tuple[int, int]:
    """Two 64-bit parity signatures over character counts.

    One insert or delete flips exactly one bit in each word, so
    max(popcount(a0 ^ b0), popcount(a1 ^ b1)) <= indel(a, b) regardless of
    hash collisions (a collision merely makes two characters share a bit).
    """
    s0 = s1 = 0
    for c in name:
        o = ord(c)
        s0 ^= 1 << ((o * _MIX1) >> 13 & 63)
        s1 ^= 1 << ((o * _MIX2) >> 7 & 63)
    return s0, s1


def _bigram_signature(name: str) -> tuple[int, int]:
    """Two 64-bit parity signatures over adjacent character pairs.

    One indel changes at most three bigrams (two removed, one added), so
    max(popcount(a0 ^ b0), popcount(a1 ^ b1)) <= 3 * indel(a, b).
    """
    s0 = s1 = 0
    for c1, c2 in zip(name, name[1:]):
        h = ord(c1) * 40503 + ord(c2)
        s0 ^= 1 << ((h * _MIX1) >> 13 & 63)
        s1 ^= 1 << ((h * _MIX2) >> 7 & 63)
    return s0, s1


_caps_cache: dict[tuple[int, float], np.ndarray] = {}


def _max_indel_by_length(query_len: int, lo: int, hi: int, threshold: float) -> np.ndarray:
    """Largest indel distance per other-length that still beats the threshold.

    Evaluated with the production float formula, so signature pruning with
    these caps can never drop a row the exact comparison would accept.
    """
    key = (query_len, threshold)
    cached = _caps_cache.get(key)
    if cached is None:
        caps = np.empty(hi - lo + 1, dtype=np.uint8)
        for i, lb in enumerate(range(lo, hi + 1)):
            total = query_len + lb
            d = int((1.0 - threshold) * total) + 2
            while d > 0 and not (1.0 - d / total > threshold):
                d -= 1
            # popcounts never exceed 64, so larger caps cannot prune anyway
            # (and 3 * cap must stay inside uint8)
            caps[i] = min(d, 64)
        cached = caps
        _caps_cache[key] = caps
    return cached


class _ClassEngine:
    """Vectorized best-match search over the names of one match class.

    Rows are length-sorted so the threshold's length window is a contiguous
    slice.  Two parity signatures give per-row lower bounds on the indel
    distance in a couple of streaming numpy passes; only rows whose bound
    still allows similarity > t are scored exactly.  Both bounds evaluate
    the production float formula, so pruning can never disagree with the
    exact score.
    """

    def __init__(self, units: list[tuple[str, int]], populations: list[int]):
        # units: (normalized name, entry index); sorted by length for banding
        units = sorted(units, key=lambda u: (len(u[0]), u[0], u[1]))
        self.names: list[str] = [u[0] for u in units]
        self.entry_indices = np.array([u[1] for u in units], dtype=np.int64)
        # int64 so searchsorted with python ints never re-casts the array
        self.lengths = np.array([len(n) for n in self.names], dtype=np.int64)
        self.pops = np.array([populations[u[1]] for u in units], dtype=np.int64)
        alphabet = sorted({c for n in self.names for c in n})
        self.codebook = {c: i + 1 for i, c in enumerate(alphabet)}
        width = max(int(self.lengths.max(initial=1)), 1)
        codes = np.zeros((len(self.names), width), dtype=np.uint32)
        for r, n in enumerate(self.names):
            codes[r, : len(n)] = [self.codebook[c] for c in n]
        self.scorer = BatchScorer(codes, self.lengths, len(alphabet))
        csigs = [_char_signature(n) for n in self.names]
        bsigs = [_bigram_signature(n) for n in self.names]
        self.char_sig0 = np.array([s[0] for s in csigs], dtype=np.uint64)
        self.char_sig1 = np.array([s[1] for s in csigs], dtype=np.uint64)
        self.bigram_sig0 = np.array([s[0] for s in bsigs], dtype=np.uint64)
        self.bigram_sig1 = np.array([s[1] for s in bsigs], dtype=np.uint64)
        # length and 16-bit sketch packed into one word for the kernel's
        # cheap first stage (the kernel is only used when the length window
        # stays below 2**16, so the clamp never lies inside a scanned window)
        self.packed = (
            (np.minimum(self.lengths, 0xFFFF).astype(np.uint32) << np.uint32(16))
            | np.array([_sketch16(n) for n in self.names], dtype=np.uint32)
        )
        # exact-name shortcut: best row per name under the (population, name) tie-break
        self.exact: dict[str, int] = {}
        for r, n in enumerate(self.names):
            prev = self.exact.get(n)
            if prev is None or self.pops[r] > self.pops[prev]:
                self.exact[n] = r
        self._memo: dict[tuple[str, float], Optional[EngineHit]] = {}

    def _encode(self, query: str) -> list[int]:
        get = self.codebook.get
        return [get(c, 0) for c in query]

    def candidate_rows(self, query: str, threshold: float) -> np.ndarray:
        """Rows that can still score above threshold (exact filters only)."""
        la = len(query)
        if la == 0 or not self.names:
            return np.empty(0, dtype=np.int64)
        lo, hi = length_window(la, threshold)
        if lo > hi:
            return np.empty(0, dtype=np.int64)
        r0 = int(np.searchsorted(self.lengths, lo, side="left"))
        r1 = int(np.searchsorted(self.lengths, hi, side="right"))
        if r1 <= r0:
            return np.empty(0, dtype=np.int64)
        lut = _max_indel_by_length(la, lo, hi, threshold)
        q0, q1 = _char_signature(query)
        b0, b1 = _bigram_signature(query)
        if _kernels.HAVE_NUMBA and hi <= 0xFFFF:
            out = np.empty(r1 - r0, dtype=np.int64)
            n = _kernels.filter_rows(
                self.packed,
                self.char_sig0,
                self.char_sig1,
                self.bigram_sig0,
                self.bigram_sig1,
                r0,
                r1,
                lut,
                lo,
                np.uint64(_sketch16(query)),
                np.uint64(q0),
                np.uint64(q1),
                np.uint64(b0),
                np.uint64(b1),
                out,
            )
            return out[:n]
        caps = lut[self.lengths[r0:r1] - lo]
        flips = np.bitwise_count(self.char_sig0[r0:r1] ^ np.uint64(q0))
        np.maximum(flips, np.bitwise_count(self.char_sig1[r0:r1] ^ np.uint64(q1)), out=flips)
        sub = np.flatnonzero(flips <= caps)
        if sub.size == 0:
            return sub
        rows = r0 + sub
        # bigram stage on the (usually small) char-stage survivor set only
        bflips = np.bitwise_count(self.bigram_sig0[rows] ^ np.uint64(b0))
        np.maximum(bflips, np.bitwise_count(self.bigram_sig1[rows] ^ np.uint64(b1)), out=bflips)
        return rows[bflips <= 3 * caps[sub]]

    def candidate_names(self, query: str, threshold: float) -> list[str]:
        return [self.names[int(r)] for r in self.candidate_rows(query, threshold)]

    def best(self, query: str, threshold: float) -> Optional[EngineHit]:
        if threshold < 1.0:
            row = self.exact.get(query)
            if row is not None:
                # identical strings are the only similarity-1.0 ties and the
                # per-name best row is precomputed, so this is the answer
                return EngineHit(1.0, query, int(self.entry_indices[row]))
        key = (query, threshold)
        if key in self._memo:
            return self._memo[key]
        hit = self._best_uncached(query, threshold)
        self._memo[key] = hit
        return hit

    def _best_uncached(self, query: str, threshold: float) -> Optional[EngineHit]:
        rows = self.candidate_rows(query, threshold)
        if rows.size == 0:
            return None
        sims = self.scorer.similarity_rows(self._encode(query), rows)
        above = sims > threshold
        if not above.any():
            return None
        rows = rows[above]
        sims = sims[above]
        top = sims == sims.max()
        rows = rows[top]
        best_sim = float(sims[top][0])
        pops = self.pops[rows]
        rows = rows[pops == pops.max()]
        best_row = min((int(r) for r in rows), key=lambda r: (self.names[r], r))
        return EngineHit(best_sim, self.names[best_row], int(self.entry_indices[best_row]))


class GazetteerIndex:
    """Immutable fuzzy-lookup index over city and country entries."""

    def __init__(self, entries: Iterable[GazetteerEntry]):
        self.entries: tuple[GazetteerEntry, ...] = tuple(entries)
        if not self.entries:
            raise ValueError("empty gazetteer")
        populations = [e.population for e in self.entries]
        country_names = {
            e.country_iso2: e.name_normalized
            for e in self.entries
            if e.kind is EntryKind.COUNTRY
        }
        city_units: list[tuple[str, int]] = []
        country_units: list[tuple[str, int]] = []
        pair_units: list[tuple[str, int]] = []
        self._pair_keys: dict[str, GazetteerEntry] = {}
        for i, e in enumerate(self.entries):
            if e.kind is EntryKind.CITY:
                city_units.append((e.name_normalized, i))
                for alias in e.aliases:
                    city_units.append((alias, i))
                cname = country_names.get(e.country_iso2)
                if cname:
                    key = f"{e.name_normalized}, {cname}"
                    pair_units.append((key, i))
                    self._pair_keys.setdefault(key, e)
            else:
                country_units.append((e.name_normalized, i))
                for alias in e.aliases:
                    country_units.append((alias, i))
        self._engines = {
            MatchClass.CITY_COUNTRY_PAIR: _ClassEngine(pair_units, populations),
            MatchClass.COUNTRY: _ClassEngine(country_units, populations),
            MatchClass.CITY: _ClassEngine(city_units, populations),
        }
        self._buckets: dict[tuple[str, int], tuple[int, ...]] | None = None

    @property
    def pair_keys(self) -> dict[str, GazetteerEntry]:
        return dict(self._pair_keys)

    @property
    def buckets(self) -> dict[tuple[str, int], tuple[int, ...]]:
        """(first character, length band) -> entry indices, by primary name."""
        if self._buckets is None:
            buckets: dict[tuple[str, int], list[int]] = {}
            for i, e in enumerate(self.entries):
                name = e.name_normalized
                key = (name[0], len(name) // LENGTH_BAND_WIDTH)
                buckets.setdefault(key, []).append(i)
            self._buckets = {k: tuple(v) for k, v in sorted(buckets.items())}
        return self._buckets

    def best_match(
        self, query_normalized: str, match_class: MatchClass, threshold: float
    ) -> Optional[EngineHit]:
        """Best entry of one class with similarity strictly above threshold."""
        return self._engines[match_class].best(query_normalized, threshold)

    def candidate_names(
        self, query_normalized: str, match_class: MatchClass, threshold: float
    ) -> list[str]:
        return self._engines[match_class].candidate_names(query_normalized, threshold)

    def clear_caches(self) -> None:
        """Drop per-query memos (for benchmarking; results never change)."""
        for engine in self._engines.values():
            engine._memo.clear()

    def stats(self) -> dict[str, int]:
        cities = sum(1 for e in self.entries if e.kind is EntryKind.CITY)
        countries = len(self.entries) - cities
        aliases = sum(len(e.aliases) for e in self.entries)
        return {
            "cities": cities,
            "countries": countries,
            "aliases": aliases,
            "pair_keys": len(self._pair_keys),
        }


def build_index(entries: Iterable[GazetteerEntry]) -> GazetteerIndex:
    entries = list(entries)
    if not entries:
        raise ValueError("empty gazetteer")
    return GazetteerIndex(entries)


def save_index(index: GazetteerIndex, path: str) -> None:
    """Serialize deterministically (gzip mtime pinned, keys sorted)."""
    payload = {
        "format_version": INDEX_FORMAT_VERSION,
        "entries": [
            {
                "kind": e.kind.value,
                "name": e.name_normalized,
                "iso2": e.country_iso2,
                "lat": e.lat,
                "lon": e.lon,
                "population": e.population,
                "aliases": list(e.aliases),
            }
            for e in index.entries
        ],
    }
    raw = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with atomic_write(path, "wb") as fh:
        # pin filename and mtime so identical indexes are byte-identical
        with gzip.GzipFile(filename="", fileobj=fh, mode="wb", mtime=0) as gz:
            gz.write(raw)


def load_index(path: str) -> GazetteerIndex:
    try:
        with gzip.open(path, "rb") as fh:
            payload = json.loads(fh.read().decode("utf-8"))
    except OSError as exc:
        raise IngestError(f"cannot read index {path}: {exc}") from exc
    version = payload.get("format_version")
    if version != INDEX_FORMAT_VERSION:
        raise IngestError(f"unsupported index format version: {version!r}")
    entries = [
        GazetteerEntry(
            kind=EntryKind(d["kind"]),
            name_normalized=d["name"],
            country_iso2=d["iso2"],
            lat=d["lat"],
            lon=d["lon"],
            population=d["population"],
            aliases=tuple(d["aliases"]),
        )
        for d in payload["entries"]
    ]
    return GazetteerIndex(entries)
