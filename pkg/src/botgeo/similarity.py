"""Insert/delete string similarity.

The score between two strings a, b is

    1 - indel(a, b) / (len(a) + len(b))

where indel() is the edit distance restricted to insertions and deletions
(a substitution costs one insert plus one delete).  Because
indel(a, b) = len(a) + len(b) - 2 * lcs(a, b), the score equals the familiar
ratio 2 * lcs / (len(a) + len(b)).

LCS length is computed with the bit-parallel row recurrence

    u = V & mask[c];  V = ((V + u) | (V - u)) & ones

which processes one character of b per machine-word operation.  Python
integers make the scalar path length-unbounded; `batch_lcs` vectorizes the
same recurrence over many strings with numpy uint64 words and therefore
requires the mask-side string to be at most 64 characters.
"""

from __future__ import annotations

import numpy as np

from . import _kernels

_WORD = 64
_U64_ONES = np.uint64(0xFFFFFFFFFFFFFFFF)


def lcs_length(a: str, b: str) -> int:
    """Length of the longest common subsequence of a and b."""
    if not a or not b:
        return 0
    if len(a) > len(b):  # masks over the shorter string keep the int small
        a, b = b, a
    masks: dict[str, int] = {}
    for i, ch in enumerate(a):
        masks[ch] = masks.get(ch, 0) | (1 << i)
    ones = (1 << len(a)) - 1
    v = ones
    for ch in b:
        m = masks.get(ch)
        if m is None:
            continue
        u = v & m
        v = ((v + u) | (v - u)) & ones
    return len(a) - bin(v).count("1")


def indel_distance(a: str, b: str) -> int:
    """Edit distance with insertions and deletions only."""
    return len(a) + len(b) - 2 * lcs_length(a, b)


def similarity(a: str, b: str) -> float:
    """Indel similarity in [0, 1]; 1.0 for two empty strings, 0.0 if only one is empty."""
    total = len(a) + len(b)
    if total == 0:
        return 1.0
    if not a or not b:
        return 0.0
    return 1.0 - indel_distance(a, b) / total


_window_cache: dict[tuple[int, float], tuple[int, int]] = {}


def length_window(query_len: int, threshold: float) -> tuple[int, int]:
    """Inclusive [lo, hi] of other-string lengths that can still score above threshold.

    Uses the same float arithmetic as similarity(), so the bound is exact with
    respect to the production comparison: a length outside the window cannot
    produce similarity > threshold because indel >= |len difference|.
    """
    if query_len == 0:
        return (1, 0)  # empty window; empty queries never match
    key = (query_len, threshold)
    cached = _window_cache.get(key)
    if cached is not None:
        return cached

    def ok(other: int) -> bool:
        return 1.0 - abs(query_len - other) / (query_len + other) > threshold

    if not ok(query_len):
        window = (1, 0)
    else:
        lo = query_len
        while lo > 1 and ok(lo - 1):
            lo -= 1
        hi = query_len
        while ok(hi + 1):
            hi += 1
        window = (lo, hi)
    _window_cache[key] = window
    return window


class BatchScorer:
    """Scores one query against a preencoded matrix of strings at once.

    The owner supplies dense character codes (0 is reserved for padding) and a
    row-major matrix of encoded strings.  One BatchScorer call runs the
    bit-parallel recurrence over all selected rows simultaneously.
    """

    def __init__(self, codes: np.ndarray, lengths: np.ndarray, n_codes: int):
        if codes.dtype != np.uint32:
            raise ValueError("codes matrix must be uint32")
        self.codes = np.ascontiguousarray(codes)
        self.lengths = np.ascontiguousarray(lengths.astype(np.int64))
        self.n_codes = n_codes

    def lcs_rows(self, query_codes: list[int], rows: np.ndarray) -> np.ndarray:
        """LCS lengths of the query against the selected rows."""
        la = len(query_codes)
        if la == 0 or rows.size == 0:
            return np.zeros(rows.size, dtype=np.int64)
        if la > _WORD:
            return self._lcs_rows_scalar(query_codes, rows)
        ones = _U64_ONES if la == _WORD else np.uint64((1 << la) - 1)
        pm = np.zeros(self.n_codes + 1, dtype=np.uint64)
        for i, code in enumerate(query_codes):
            if code:
                pm[code] |= np.uint64(1 << i)
        sub = self.codes[rows]
        width = int(self.lengths[rows].max())
        v = np.full(rows.size, ones, dtype=np.uint64)
        with np.errstate(over="ignore"):
            for j in range(width):
                m = pm[sub[:, j]]
                u = v & m
                v = ((v + u) | (v - u)) & ones
        return la - np.bitwise_count(v).astype(np.int64)

    def _lcs_rows_scalar(self, query_codes: list[int], rows: np.ndarray) -> np.ndarray:
        # queries longer than one word are rare; plain ints handle any length
        masks: dict[int, int] = {}
        for i, code in enumerate(query_codes):
            if code:
                masks[code] = masks.get(code, 0) | (1 << i)
        la = len(query_codes)
        ones = (1 << la) - 1
        out = np.zeros(rows.size, dtype=np.int64)
        for k, r in enumerate(rows):
            v = ones
            row = self.codes[r, : self.lengths[r]]
            for code in row:
                m = masks.get(int(code))
                if m is None:
                    continue
                u = v & m
                v = ((v + u) | (v - u)) & ones
            out[k] = la - bin(v).count("1")
        return out

    def similarity_rows(self, query_codes: list[int], rows: np.ndarray) -> np.ndarray:
        """Indel similarity of the query against the selected rows."""
        la = len(query_codes)
        if (
            _kernels.HAVE_NUMBA
            and 0 < la <= _WORD
            and rows.size
            and rows.dtype == np.int64
        ):
            ones = _U64_ONES if la == _WORD else np.uint64((1 << la) - 1)
            pm = np.zeros(self.n_codes + 1, dtype=np.uint64)
            for i, code in enumerate(query_codes):
                if code:
                    pm[code] |= np.uint64(1 << i)
            out = np.empty(rows.size, dtype=np.float64)
            _kernels.score_rows(
                self.codes, self.lengths, np.ascontiguousarray(rows), pm, la, ones, out
            )
            return out
        lcs = self.lcs_rows(query_codes, rows)
        totals = la + self.lengths[rows]
        dist = totals - 2 * lcs
        return 1.0 - dist / totals
