"""Optional numba kernels for the gazetteer hot path.

Both kernels are drop-in accelerations of the numpy implementations in
gazetteer/similarity: the filter prunes with the same sound signature bounds
(plus one extra 16-bit sketch stage, itself a parity signature and therefore
sound), and the scorer runs the identical bit-parallel recurrence with the
identical float arithmetic.  Setting BOTGEO_NO_NUMBA=1 (or not having numba
installed) selects the numpy paths; results are bit-identical either way.
"""

from __future__ import annotations

import os

HAVE_NUMBA = False

if not os.environ.get("BOTGEO_NO_NUMBA"):
    try:
        import numpy as np
        from llvmlite import ir
        from numba import njit, types
        from numba.extending import intrinsic

        @intrinsic
        def _ctpop64(typingctx, x):
            sig = types.uint64(types.uint64)

            def codegen(context, builder, signature, args):
                fn = builder.module.declare_intrinsic("llvm.ctpop", [ir.IntType(64)])
                return builder.call(fn, args)

            return sig, codegen

        @njit(
            "int64(uint32[::1], uint64[::1], uint64[::1], uint64[::1], uint64[::1],"
            " int64, int64, uint8[::1], int64, uint64, uint64, uint64, uint64, uint64,"
            " int64[::1])",
            cache=True,
            nogil=True,
        )
        def filter_rows(packed, s0, s1, b0, b1, r0, r1, caps, lo, qsk, q0, q1, qb0, qb1, out):
            """Survivor rows of the signature filters within [r0, r1)."""
            n = 0
            sketch_mask = np.uint64(0xFFFF)
            for r in range(r0, r1):
                v = packed[r]
                cap = np.uint64(caps[np.int64(v >> np.uint32(16)) - lo])
                if _ctpop64((np.uint64(v) ^ qsk) & sketch_mask) > cap:
                    continue
                f = _ctpop64(s0[r] ^ q0)
                f1 = _ctpop64(s1[r] ^ q1)
                if f1 > f:
                    f = f1
                if f > cap:
                    continue
                bf = _ctpop64(b0[r] ^ qb0)
                bf1 = _ctpop64(b1[r] ^ qb1)
                if bf1 > bf:
                    bf = bf1
                if bf > np.uint64(3) * cap:
                    continue
                out[n] = r
                n += 1
            return n

        @njit(
            "void(uint32[:, ::1], int64[::1], int64[::1], uint64[::1], int64, uint64,"
            " float64[::1])",
            cache=True,
            nogil=True,
        )
        def score_rows(codes, lengths, rows, pm, la, ones, out_sim):
            """Indel similarity of one query (masks in pm) against rows."""
            for k in range(rows.shape[0]):
                r = rows[k]
                v = ones
                w = lengths[r]
                for j in range(w):
                    m = pm[codes[r, j]]
                    u = v & m
                    v = ((v + u) | (v - u)) & ones
                lcs = la - np.int64(_ctpop64(v))
                total = la + w
                out_sim[k] = 1.0 - (total - 2 * lcs) / total

        HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - exercised via BOTGEO_NO_NUMBA instead
        pass

if not HAVE_NUMBA:
    filter_rows = None
    score_rows = None
