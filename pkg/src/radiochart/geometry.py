"""2-D segment geometry used by the multipath simulator."""

from __future__ import annotations

import numpy as np

# Segment endpoints grazing another segment do not count as a crossing.
_EDGE_EPS = 1e-12


def mirror_point(point, a, b):
    """Reflect `point` across the infinite line through segment (a, b)."""
    p = np.asarray(point, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = b - a
    nn = d @ d
    if nn == 0.0:
        raise ValueError("cannot mirror across a zero-length segment")
    t = (p - a) @ d / nn
    foot = a + t * d
    return 2.0 * foot - p


def segment_intersection(p, q, a, b):
    """Parameters (t, u) where p + t*(q - p) meets a + u*(b - a), or None.

    Both parameters are returned unclamped; callers decide which ranges
    count as a hit. Parallel (including collinear) segments yield None.
    """
    p = np.asarray(p, dtype=float)
    r = np.asarray(q, dtype=float) - p
    a = np.asarray(a, dtype=float)
    s = np.asarray(b, dtype=float) - a
    denom = r[0] * s[1] - r[1] * s[0]
    if denom == 0.0:
        return None
    w = a - p
    t = (w[0] * s[1] - w[1] * s[0]) / denom
    u = (w[0] * r[1] - w[1] * r[0]) / denom
    return t, u


def segment_blocked(p, q, blockers):
    """True when the open segment (p, q) crosses any blocker segment.

    Touching a blocker exactly at one of the segment's own endpoints (e.g.
    a reflection point sitting on a wall that doubles as a blocker) is not
    treated as a crossing.
    """
    for a, b in blockers:
        hit = segment_intersection(p, q, a, b)
        if hit is None:
            continue
        t, u = hit
        if _EDGE_EPS < t < 1.0 - _EDGE_EPS and -_EDGE_EPS <= u <= 1.0 + _EDGE_EPS:
            return True
    return False
