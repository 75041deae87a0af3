"""Hot-kernel backend selection.

The compiled Cython extension is preferred; a pure numpy/heapq fallback
keeps everything working without a build step. Set RADIOCHART_PURE=1 to
force the fallback (used by the benchmark and the equivalence tests).
"""

from __future__ import annotations

import os

from . import pure

_compiled = None
if os.environ.get("RADIOCHART_PURE", "") != "1":
    try:
        from . import _ckernels as _compiled
    except ImportError:
        _compiled = None

_active = _compiled if _compiled is not None else pure

BACKEND = "compiled" if _compiled is not None else "pure"


def backend_name() -> str:
    return BACKEND


def has_compiled() -> bool:
    return _compiled is not None


def pairwise_l1(x):
    return _active.pairwise_l1(x)


def dijkstra_all_pairs(indptr, indices, weights, n):
    return _active.dijkstra_all_pairs(indptr, indices, weights, n)


def implementations():
    """Mapping backend name -> module, for benchmarks and cross-checks."""
    impls = {"pure": pure}
    if _compiled is not None:
        impls["compiled"] = _compiled
    return impls
