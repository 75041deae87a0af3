"""CSI preprocessing tensor and the local distance metrics.

Each snapshot becomes an aligned magnitude tensor: station k's CIR is
shifted right by its measured ToF/TDoA (rounded to the nearest sample), so
that path positions across stations share one time origin. The local CIR
distance is the summed absolute difference of two such tensors; the
true-delay distance is its simulation-only oracle computed from exact path
delays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .environment import MODE_TDOA, MODE_TOF
from .sim import Dataset, CirSnapshot, MpcList


@dataclass
class AlignedTensor:
    """ToF/TDoA-aligned CIR magnitudes, one row per base station."""

    values: np.ndarray  # [n_stations, window_length] float64, >= 0
    sample_rate: float
    window_origin: float = 0.0  # absolute time of column 0, seconds

    @property
    def shape(self):
        return self.values.shape

    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)


def window_length_for(env, radio, margin: int = 2) -> int:
    """Aligned-window width that fits any in-bounds shift plus the CIR."""
    max_shift = int(round(env.diagonal / radio.c * radio.sample_rate))
    return radio.cir_length + max_shift + margin


def preprocess(snapshot: CirSnapshot, sample_rate: float, window_length: int) -> AlignedTensor:
    """Place each station's CIR at its measured-delay offset in a wide window.

    Raises when a shift is negative or would push the CIR past
    `window_length` (no silent truncation).
    """
    n_b, t = snapshot.cirs.shape
    values = np.zeros((n_b, window_length))
    for k in range(n_b):
        shift = int(round(snapshot.measured_toa[k] * sample_rate))
        if shift < 0:
            raise ValueError(f"station {k}: negative alignment shift {shift}")
        if shift + t > window_length:
            raise ValueError(
                f"station {k}: shift {shift} needs window_length >= {shift + t}, "
                f"got {window_length}"
            )
        values[k, shift : shift + t] = snapshot.cirs[k]
    return AlignedTensor(values, sample_rate)


def preprocess_dataset(dataset: Dataset, window_length: int | None = None) -> list[AlignedTensor]:
    """Aligned tensors for every snapshot, with a shared window width.

    The default width is derived from the environment diagonal so that
    independently generated splits of the same environment agree on shape.
    """
    if window_length is None:
        window_length = window_length_for(dataset.environment, dataset.radio)
    return [
        preprocess(s, dataset.radio.sample_rate, window_length) for s in dataset.snapshots
    ]


def cir_distance(a: AlignedTensor, b: AlignedTensor) -> float:
    """Summed absolute difference of two aligned magnitude tensors.

    A weighted L1 distance, so nonnegativity, symmetry, identity and the
    triangle inequality all hold exactly.
    """
    if a.values.shape != b.values.shape:
        raise ValueError(f"shape mismatch {a.values.shape} vs {b.values.shape}")
    if a.sample_rate != b.sample_rate:
        raise ValueError("sample_rate mismatch")
    return float(np.abs(a.values - b.values).sum())


def _first_delays(mpcs_per_station) -> np.ndarray:
    out = np.empty(len(mpcs_per_station))
    for k, m in enumerate(mpcs_per_station):
        if len(m) == 0:
            raise ValueError(f"station {k} has no multipath components")
        out[k] = m.delays[0]
    return out


def true_delay_distance(a, b, mode: str = MODE_TOF) -> float:
    """Exact-delay distance between two positions' component lists.

    `a` and `b` are per-station MpcList sequences. Components are paired by
    sorted-delay index up to the shared count per station. In 'tof' mode
    the distance is the summed absolute delay difference; in 'tdoa' mode
    each delay is first taken relative to the snapshot's own reference
    station (smallest first-path delay, ties to the lowest index).
    """
    if len(a) != len(b):
        raise ValueError("station count mismatch")
    if mode not in (MODE_TOF, MODE_TDOA):
        raise ValueError(f"unknown mode {mode!r}")
    offset_a = offset_b = 0.0
    if mode == MODE_TDOA:
        fa, fb = _first_delays(a), _first_delays(b)
        offset_a = fa[int(np.argmin(fa))]
        offset_b = fb[int(np.argmin(fb))]
    total = 0.0
    for k, (ma, mb) in enumerate(zip(a, b)):
        if len(ma) == 0 or len(mb) == 0:
            raise ValueError(f"station {k} has no multipath components")
        n = min(len(ma), len(mb))
        da = ma.delays[:n] - offset_a
        db = mb.delays[:n] - offset_b
        total += float(np.abs(da - db).sum())
    return total
