"""Small shared helpers: seed derivation and atomic file writes."""

from __future__ import annotations

import hashlib
import os
import tempfile
from contextlib import contextmanager


def derive_seed(seed: int, *stage: str) -> int:
    """Deterministic 63-bit sub-seed for a named pipeline stage."""
    material = ":".join([str(seed), *stage]).encode("utf-8")
    return int.from_bytes(hashlib.sha256(material).digest()[:8], "big") >> 1


@contextmanager
def atomic_write(path: str, mode: str = "w", **kwargs):
    """Write to a temp file and rename into place; no partial outputs on failure."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    os.close(fd)
    try:
        if "b" not in mode:
            kwargs.setdefault("encoding", "utf-8")
        with open(tmp, mode, **kwargs) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
