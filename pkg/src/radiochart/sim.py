"""Multipath CIR simulator based on the 2-D image-source method.

Each base station is mirrored recursively across the reflective walls up to
a configurable order. A candidate image contributes a multipath component
when the folded-back ray hits every generating wall inside its segment and
no leg of the physical path crosses a blocker. Path delay equals distance
to the image source over c; amplitude follows free-space 1/d decay with a
constant per-bounce loss; the phase of each component is drawn uniformly at
random to emulate fast fading.

Dataset CIR windows are stored relative to the first arriving path of each
station, as a real receiver would align them; the absolute timing survives
in the per-station ToF (or TDoA) measurement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .environment import MODE_TDOA, MODE_TOF, EnvironmentSpec, RadioConfig
from .geometry import mirror_point, segment_blocked, segment_intersection
from .io import read_f32, read_f64, read_json, write_f32, write_f64, write_json


@dataclass(frozen=True)
class ImageSource:
    """Virtual transmitter: base station mirrored across `wall_chain` in order."""

    position: np.ndarray
    order: int
    wall_chain: tuple[int, ...]


@dataclass
class MpcList:
    """Multipath components for one (station, position) pair.

    Delays are strictly increasing; components whose geometric delays
    coincide exactly are merged by summing their complex gains.
    """

    delays: np.ndarray  # seconds, ascending
    gains: np.ndarray  # complex

    def __post_init__(self):
        self.delays = np.asarray(self.delays, dtype=float)
        self.gains = np.asarray(self.gains, dtype=complex)
        if self.delays.shape != self.gains.shape:
            raise ValueError("delays and gains must have matching shapes")
        if self.delays.size:
            if np.any(self.delays < 0):
                raise ValueError("negative path delay")
            if np.any(np.diff(self.delays) <= 0):
                raise ValueError("delays must be strictly increasing")

    def __len__(self) -> int:
        return int(self.delays.size)


@dataclass
class CirSnapshot:
    """One measurement burst: per-station CIR magnitudes plus timing."""

    index: int
    position: np.ndarray  # ground truth, evaluation only
    cirs: np.ndarray  # [n_stations, cir_length] float32 magnitudes
    measured_toa: np.ndarray  # [n_stations] seconds
    timestamp: float


@dataclass
class Dataset:
    environment: EnvironmentSpec
    radio: RadioConfig
    snapshots: list[CirSnapshot]
    rng_seed: int

    def __post_init__(self):
        if self.snapshots:
            shape = self.snapshots[0].cirs.shape
            for s in self.snapshots:
                if s.cirs.shape != shape:
                    raise ValueError("snapshots disagree on CIR shape")
            ts = np.array([s.timestamp for s in self.snapshots])
            if np.any(np.diff(ts) <= 0):
                raise ValueError("timestamps must be strictly increasing")

    def __len__(self) -> int:
        return len(self.snapshots)

    @property
    def n_stations(self) -> int:
        return len(self.environment.base_stations)

    def positions(self) -> np.ndarray:
        return np.array([s.position for s in self.snapshots], dtype=float)

    def save(self, directory):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        n = len(self.snapshots)
        n_b = self.n_stations
        t = self.radio.cir_length
        write_json(
            directory / "meta.json",
            {
                "environment": self.environment.to_dict(),
                "radio": self.radio.to_dict(),
                "rng_seed": self.rng_seed,
                "n": n,
                "n_b": n_b,
                "t": t,
                "mode": self.radio.mode,
            },
        )
        write_f32(directory / "cirs.f32", np.stack([s.cirs for s in self.snapshots]))
        write_f64(directory / "toa.f64", np.stack([s.measured_toa for s in self.snapshots]))
        write_f64(directory / "pos.f64", self.positions())
        write_f64(directory / "ts.f64", np.array([s.timestamp for s in self.snapshots]))

    @classmethod
    def load(cls, directory) -> "Dataset":
        directory = Path(directory)
        meta = read_json(directory / "meta.json")
        env = EnvironmentSpec.from_dict(meta["environment"])
        radio = RadioConfig.from_dict(meta["radio"])
        n, n_b, t = meta["n"], meta["n_b"], meta["t"]
        cirs = read_f32(directory / "cirs.f32", (n, n_b, t))
        toa = read_f64(directory / "toa.f64", (n, n_b))
        pos = read_f64(directory / "pos.f64", (n, 2))
        ts = read_f64(directory / "ts.f64", (n,))
        snapshots = [
            CirSnapshot(i, pos[i], cirs[i], toa[i], float(ts[i])) for i in range(n)
        ]
        return cls(env, radio, snapshots, int(meta["rng_seed"]))


def image_sources(env: EnvironmentSpec, bs_id: int, max_order: int) -> list[ImageSource]:
    """Enumerate image sources of a base station up to `max_order` bounces.

    Order 0 is the station itself; an order-k image mirrors an order-(k-1)
    image across one reflective wall, never the wall it was just mirrored
    across (that mirror is an involution). Geometric validity against a
    concrete receiver is checked later, at path-evaluation time.
    """
    if max_order < 0:
        raise ValueError("max_order must be >= 0")
    bs = env.base_stations[env.station_index(bs_id)]
    root = ImageSource(np.asarray(bs.position, dtype=float), 0, ())
    result = [root]
    frontier = [root]
    reflective = [(i, w) for i, w in enumerate(env.walls) if w.reflective]
    for _ in range(max_order):
        nxt = []
        for src in frontier:
            for wi, wall in reflective:
                if src.wall_chain and src.wall_chain[-1] == wi:
                    continue
                pos = mirror_point(src.position, wall.p1, wall.p2)
                nxt.append(ImageSource(pos, src.order + 1, src.wall_chain + (wi,)))
        result.extend(nxt)
        frontier = nxt
    return result


def _chain_images(env, bs_pos, chain):
    """Cumulative image positions for wall-chain prefixes (index k = k bounces)."""
    images = [np.asarray(bs_pos, dtype=float)]
    for wi in chain:
        wall = env.walls[wi]
        images.append(mirror_point(images[-1], wall.p1, wall.p2))
    return images


def _trace_path(env, source: ImageSource, receiver, bs_pos):
    """Fold the receiver->image ray back into physical legs.

    Returns the list of path vertices receiver -> ... -> base station, or
    None when some reflection point misses its generating wall segment.
    """
    chain = source.wall_chain
    images = _chain_images(env, bs_pos, chain)
    vertices = [np.asarray(receiver, dtype=float)]
    point = vertices[0]
    for k in range(len(chain), 0, -1):
        wall = env.walls[chain[k - 1]]
        hit = segment_intersection(point, images[k], wall.p1, wall.p2)
        if hit is None:
            return None
        t, u = hit
        if not (0.0 <= u <= 1.0) or not (0.0 < t <= 1.0):
            return None
        point = point + t * (images[k] - point)
        vertices.append(point)
    vertices.append(np.asarray(bs_pos, dtype=float))
    return vertices


def multipath(env: EnvironmentSpec, radio: RadioConfig, pos, rng=None) -> list[MpcList]:
    """Per-station multipath components at a receiver position.

    Returns one MpcList per base station, ordered as env.base_stations.
    Component phases are drawn from `rng` (uniform over the circle); pass
    None for deterministic zero phases.
    """
    pos = np.asarray(pos, dtype=float)
    if not env.contains(pos):
        raise ValueError(f"position {pos.tolist()} outside environment bounds")
    radio.validate_for(env)
    min_dist = radio.c / radio.sample_rate  # clamp: one sample of range resolution
    out = []
    for bs in env.base_stations:
        sources = image_sources(env, bs.id, radio.max_reflection_order)
        delays, gains = [], []
        for src in sources:
            if src.order == 0:
                if segment_blocked(pos, src.position, env.blockers):
                    continue
                dist = float(np.linalg.norm(pos - src.position))
            else:
                vertices = _trace_path(env, src, pos, bs.position)
                if vertices is None:
                    continue
                if any(
                    segment_blocked(a, b, env.blockers)
                    for a, b in zip(vertices[:-1], vertices[1:])
                ):
                    continue
                dist = float(np.linalg.norm(pos - src.position))
            amp = (radio.reflection_loss ** src.order) / max(dist, min_dist)
            phase = 0.0 if rng is None else rng.uniform(0.0, 2.0 * math.pi)
            delays.append(dist / radio.c)
            gains.append(amp * complex(math.cos(phase), math.sin(phase)))
        out.append(_merge_components(delays, gains))
    return out


def _merge_components(delays, gains) -> MpcList:
    if not delays:
        return MpcList(np.empty(0), np.empty(0, dtype=complex))
    order = np.argsort(delays, kind="stable")
    d = np.asarray(delays, dtype=float)[order]
    g = np.asarray(gains, dtype=complex)[order]
    keep_d, keep_g = [d[0]], [g[0]]
    for k in range(1, d.size):
        if d[k] == keep_d[-1]:
            keep_g[-1] += g[k]
        else:
            keep_d.append(d[k])
            keep_g.append(g[k])
    return MpcList(np.array(keep_d), np.array(keep_g, dtype=complex))


def simulate_cir(mpcs: MpcList, radio: RadioConfig, rng=None, origin: float = 0.0):
    """Sample the band-limited CIR of a component list.

    The complex CIR is sum_n gain_n * sinc(bandwidth * (t - delay_n)) on the
    sample grid, plus circularly-symmetric complex noise of std `noise_std`.
    `origin` (seconds) shifts the window start: sample t sits at absolute
    time origin + t / sample_rate. Returns (magnitude vector [cir_length],
    first_path_toa). An empty component list yields an all-zero vector and
    NaN ToA so the caller can decide how to treat dead spots.
    """
    if len(mpcs) == 0:
        return np.zeros(radio.cir_length), math.nan
    rel = mpcs.delays - origin
    over = np.nonzero(rel >= radio.window_seconds)[0]
    under = np.nonzero(rel < -radio.sample_period)[0]
    if over.size or under.size:
        k = int(over[0]) if over.size else int(under[0])
        raise ValueError(
            f"component {k} (delay {mpcs.delays[k]:.4e} s) falls outside the "
            f"[{origin:.4e}, {origin + radio.window_seconds:.4e}] s CIR window"
        )
    t_axis = np.arange(radio.cir_length) / radio.sample_rate
    cir = (mpcs.gains[:, None] * np.sinc(radio.bandwidth * (t_axis[None, :] - rel[:, None]))).sum(axis=0)
    if radio.noise_std > 0.0:
        if rng is None:
            raise ValueError("noise_std > 0 requires an rng")
        scale = radio.noise_std / math.sqrt(2.0)
        cir = cir + rng.normal(0.0, scale, radio.cir_length) + 1j * rng.normal(
            0.0, scale, radio.cir_length
        )
    toa = float(mpcs.delays[0])
    if radio.toa_noise_std > 0.0:
        if rng is None:
            raise ValueError("toa_noise_std > 0 requires an rng")
        toa += rng.normal(0.0, radio.toa_noise_std)
    return np.abs(cir), toa


def generate_trajectory(env: EnvironmentSpec, kind: str, n: int, speed: float, dt: float, rng,
                        area=None):
    """Positions and timestamps of a simulated receiver run.

    kind 'grid' rasters the area with a near-square lattice of exactly n
    points (timestamps advance by dt in scan order). kind 'random_waypoint'
    draws waypoints uniformly in the area and moves toward them at most
    `speed` meters per second. `area` restricts the run to a sub-rectangle
    of the environment (receivers usually cover less ground than the radio
    reaches); it defaults to the full bounds.
    """
    if n < 1:
        raise ValueError("need at least one trajectory point")
    if area is None:
        area = env.bounds
    else:
        if not (env.contains(area[:2]) and env.contains(area[2:])):
            raise ValueError(f"trajectory area {area} outside environment bounds")
    xmin, ymin, xmax, ymax = area
    if kind == "grid":
        w, h = xmax - xmin, ymax - ymin
        ny = max(1, round(math.sqrt(n * h / w)))
        nx = math.ceil(n / ny)
        xs = np.linspace(xmin, xmax, nx)
        ys = np.linspace(ymin, ymax, ny)
        pts = [(x, y) for y in ys for x in xs][:n]
        positions = np.array(pts, dtype=float)
    elif kind == "random_waypoint":
        if speed <= 0 or dt <= 0:
            raise ValueError("random_waypoint needs positive speed and dt")
        positions = np.empty((n, 2))
        point = np.array(
            [rng.uniform(xmin, xmax), rng.uniform(ymin, ymax)], dtype=float
        )
        target = None
        step = speed * dt
        for i in range(n):
            positions[i] = point
            while target is None or np.linalg.norm(target - point) < 1e-9:
                target = np.array(
                    [rng.uniform(xmin, xmax), rng.uniform(ymin, ymax)], dtype=float
                )
            gap = np.linalg.norm(target - point)
            move = min(step, gap)
            point = point + (target - point) / gap * move
            if move == gap:
                target = None
    else:
        raise ValueError(f"unknown trajectory kind {kind!r}")
    timestamps = np.arange(n, dtype=float) * dt
    return positions, timestamps


def snapshot_rng(seed: int, index: int) -> np.random.Generator:
    """Per-snapshot RNG stream; (seed, index) keyed so workers can partition."""
    return np.random.default_rng([int(seed), int(index)])


def generate_dataset(env: EnvironmentSpec, radio: RadioConfig, trajectory, rng_seed: int) -> Dataset:
    """Simulate one CirSnapshot per trajectory point.

    `trajectory` is a (positions [n, 2], timestamps [n]) pair. Each CIR
    window starts at the sample-grid point nearest the station's first
    arriving path, the way a real receiver snaps its acquisition window to
    the detected leading edge (sub-sample path structure stays intact).
    measured_toa carries the absolute ToF (mode 'tof') or the difference
    against the snapshot's reference station (mode 'tdoa', reference =
    smallest true first-path delay, ties to the lowest station index).
    """
    positions, timestamps = trajectory
    positions = np.asarray(positions, dtype=float)
    if positions.ndim != 2 or positions.shape[0] == 0:
        raise ValueError("trajectory must be nonempty")
    radio.validate_for(env)
    n_b = len(env.base_stations)
    snapshots = []
    for i in range(positions.shape[0]):
        rng = snapshot_rng(rng_seed, i)
        per_station = multipath(env, radio, positions[i], rng)
        cirs = np.empty((n_b, radio.cir_length), dtype=np.float32)
        true_toa = np.empty(n_b)
        meas = np.empty(n_b)
        for k, mpcs in enumerate(per_station):
            if len(mpcs) == 0:
                raise ValueError(
                    f"snapshot {i}: no propagation path to station "
                    f"{env.base_stations[k].id}"
                )
            true_toa[k] = mpcs.delays[0]
            # snap the window to the sample grid, a few pre-cursor samples
            # ahead of the first path so its left flank is captured
            origin = (
                round(true_toa[k] * radio.sample_rate) - radio.window_lead
            ) / radio.sample_rate
            try:
                mag, _ = simulate_cir(mpcs, radio, rng, origin=origin)
            except ValueError as exc:
                raise ValueError(f"snapshot {i}, station {env.base_stations[k].id}: {exc}") from exc
            cirs[k] = mag.astype(np.float32)
            noise = rng.normal(0.0, radio.toa_noise_std) if radio.toa_noise_std > 0 else 0.0
            meas[k] = true_toa[k] + noise
        if radio.mode == MODE_TOF:
            measured = np.abs(meas)
        else:
            ref = int(np.argmin(true_toa))
            measured = np.abs(meas - meas[ref])
            measured[ref] = 0.0
        snapshots.append(
            CirSnapshot(i, positions[i].copy(), cirs, measured, float(timestamps[i]))
        )
    return Dataset(env, radio, snapshots, int(rng_seed))
