"""Radio environment and radio-system configuration.

An environment is a 2-D axis-aligned area containing base stations,
reflective wall segments (they mirror signal paths but do not attenuate
them) and blocker segments (they cut any path that crosses them without
producing reflections). A solid obstacle that both reflects and shadows is
modelled by co-locating a wall and a blocker.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

C_LIGHT = 299792458.0  # m/s

MODE_TOF = "tof"
MODE_TDOA = "tdoa"


@dataclass(frozen=True)
class Wall:
    """Line segment that mirrors radio paths when `reflective` is set."""

    p1: tuple[float, float]
    p2: tuple[float, float]
    reflective: bool = True

    def length(self) -> float:
        return math.hypot(self.p2[0] - self.p1[0], self.p2[1] - self.p1[1])

    def to_dict(self):
        return {"p1": list(self.p1), "p2": list(self.p2), "reflective": self.reflective}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["p1"]), tuple(d["p2"]), bool(d.get("reflective", True)))


@dataclass(frozen=True)
class BaseStation:
    id: int
    position: tuple[float, float]

    def to_dict(self):
        return {"id": self.id, "position": list(self.position)}

    @classmethod
    def from_dict(cls, d):
        return cls(int(d["id"]), tuple(d["position"]))


@dataclass
class EnvironmentSpec:
    """Rectangular 2-D radio environment.

    bounds is (xmin, ymin, xmax, ymax) in meters. Blockers are bare
    segments ((x1, y1), (x2, y2)).
    """

    bounds: tuple[float, float, float, float]
    base_stations: list[BaseStation]
    walls: list[Wall] = field(default_factory=list)
    blockers: list = field(default_factory=list)

    def __post_init__(self):
        xmin, ymin, xmax, ymax = self.bounds
        if not (xmax > xmin and ymax > ymin):
            raise ValueError(f"degenerate bounds {self.bounds}")
        if len(self.base_stations) < 2:
            raise ValueError("at least 2 base stations are required")
        ids = [bs.id for bs in self.base_stations]
        if len(set(ids)) != len(ids):
            raise ValueError("base station ids must be unique")
        for bs in self.base_stations:
            if not self.contains(bs.position):
                raise ValueError(f"base station {bs.id} at {bs.position} outside bounds")
        for w in self.walls:
            if w.length() == 0.0:
                raise ValueError(f"zero-length wall {w}")
            if not (self.contains(w.p1) and self.contains(w.p2)):
                raise ValueError(f"wall {w} outside bounds")

    def contains(self, point) -> bool:
        xmin, ymin, xmax, ymax = self.bounds
        x, y = float(point[0]), float(point[1])
        return xmin <= x <= xmax and ymin <= y <= ymax

    @property
    def diagonal(self) -> float:
        xmin, ymin, xmax, ymax = self.bounds
        return math.hypot(xmax - xmin, ymax - ymin)

    def station_index(self, bs_id: int) -> int:
        for i, bs in enumerate(self.base_stations):
            if bs.id == bs_id:
                return i
        raise KeyError(f"unknown base station id {bs_id}")

    def station_positions(self) -> np.ndarray:
        return np.array([bs.position for bs in self.base_stations], dtype=float)

    def to_dict(self):
        return {
            "bounds": list(self.bounds),
            "base_stations": [bs.to_dict() for bs in self.base_stations],
            "walls": [w.to_dict() for w in self.walls],
            "blockers": [[list(a), list(b)] for a, b in self.blockers],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            bounds=tuple(d["bounds"]),
            base_stations=[BaseStation.from_dict(b) for b in d["base_stations"]],
            walls=[Wall.from_dict(w) for w in d.get("walls", [])],
            blockers=[(tuple(a), tuple(b)) for a, b in d.get("blockers", [])],
        )


@dataclass
class RadioConfig:
    """Sampling and propagation parameters of the simulated radio system."""

    bandwidth: float  # Hz
    sample_rate: float  # Hz, >= 2x bandwidth
    cir_length: int  # samples per CIR window
    max_reflection_order: int = 1
    noise_std: float = 0.0  # linear amplitude std of complex CIR noise
    mode: str = MODE_TOF
    toa_noise_std: float = 1e-9  # seconds
    reflection_loss: float = 0.7  # amplitude factor per wall bounce
    window_lead: int = 8  # pre-cursor samples recorded before the first path
    c: float = C_LIGHT

    def __post_init__(self):
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        if self.sample_rate < 2.0 * self.bandwidth:
            raise ValueError(
                f"sample_rate {self.sample_rate:g} below 2x bandwidth {self.bandwidth:g}"
            )
        if self.cir_length < 1:
            raise ValueError("cir_length must be >= 1")
        if self.max_reflection_order < 0:
            raise ValueError("max_reflection_order must be >= 0")
        if self.mode not in (MODE_TOF, MODE_TDOA):
            raise ValueError(f"mode must be '{MODE_TOF}' or '{MODE_TDOA}', got {self.mode!r}")
        if self.noise_std < 0 or self.toa_noise_std < 0:
            raise ValueError("noise levels must be nonnegative")
        if not 0 <= self.window_lead < self.cir_length:
            raise ValueError("window_lead must be in [0, cir_length)")
        if not 0.0 < self.reflection_loss <= 1.0:
            raise ValueError("reflection_loss must be in (0, 1]")

    @property
    def sample_period(self) -> float:
        return 1.0 / self.sample_rate

    @property
    def window_seconds(self) -> float:
        return self.cir_length / self.sample_rate

    def validate_for(self, env: EnvironmentSpec):
        """The CIR window must cover every delay the environment can produce."""
        reach = self.window_seconds * self.c
        if reach <= env.diagonal:
            raise ValueError(
                f"CIR window covers {reach:.2f} m but the environment diagonal is "
                f"{env.diagonal:.2f} m; increase cir_length or sample slower"
            )

    def to_dict(self):
        return {
            "bandwidth": self.bandwidth,
            "sample_rate": self.sample_rate,
            "cir_length": self.cir_length,
            "max_reflection_order": self.max_reflection_order,
            "noise_std": self.noise_std,
            "mode": self.mode,
            "toa_noise_std": self.toa_noise_std,
            "reflection_loss": self.reflection_loss,
            "window_lead": self.window_lead,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(**d)
