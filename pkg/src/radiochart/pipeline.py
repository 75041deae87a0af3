"""End-to-end orchestration: simulate, preprocess, distances, charts, reports.

A pipeline run owns one output directory (guarded by a lock file), writes
the datasets it simulated, one subdirectory per chart method with the raw
and registered charts, and a results.csv with one row per method and split.
The run directory is self-describing: the resolved configuration, the seed
and a content hash are stored next to the outputs, and re-running from the
stored config reproduces the results bit-identically.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .charting import (
    Embedding,
    PcaModel,
    StressConfig,
    TrainConfig,
    embed_dataset,
    mds_embed,
    place_out_of_sample,
    sammon_embed,
    train,
)
from .csi import preprocess_dataset, window_length_for
from .environment import EnvironmentSpec, RadioConfig
from .evaluation import (
    EvalReport,
    default_k,
    evaluate_chart,
    fit_affine,
)
from .graphs import (
    DistanceMatrix,
    connected_components,
    cross_l1,
    geodesic_matrix,
    knn_graph,
    minimal_connecting_k,
    pairwise_matrix,
)
from .io import read_json, sha256_of_files, write_json
from .kernels import backend_name
from .sim import Dataset, generate_dataset, generate_trajectory

METHODS = ("siamese_geo", "isomap_mds", "pca", "sammon")


class StageError(RuntimeError):
    """A pipeline stage failed; the message names the stage."""


@dataclass
class TrajectorySpec:
    kind: str = "random_waypoint"
    n: int = 2000
    speed: float = 1.0
    dt: float = 0.25
    area: tuple | None = None  # (xmin, ymin, xmax, ymax) within the bounds

    def to_dict(self):
        d = self.__dict__.copy()
        if d["area"] is not None:
            d["area"] = list(d["area"])
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if d.get("area") is not None:
            d["area"] = tuple(d["area"])
        return cls(**d)


@dataclass
class PipelineConfig:
    environment: EnvironmentSpec
    radio: RadioConfig
    train_trajectory: TrajectorySpec
    test_trajectory: TrajectorySpec
    graph_k: int = 12
    train_config: TrainConfig = field(default_factory=TrainConfig)
    methods: tuple = METHODS
    seed: int = 0
    out_dir: str = "run"
    stress: StressConfig = field(default_factory=StressConfig)

    def __post_init__(self):
        if not self.methods:
            raise ValueError("at least one method is required")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ValueError(f"unknown methods {unknown}; choose from {list(METHODS)}")

    def to_dict(self):
        return {
            "environment": self.environment.to_dict(),
            "radio": self.radio.to_dict(),
            "trajectories": {
                "train": self.train_trajectory.to_dict(),
                "test": self.test_trajectory.to_dict(),
            },
            "graph_k": self.graph_k,
            "train": self.train_config.to_dict(),
            "methods": list(self.methods),
            "seed": self.seed,
            "out_dir": str(self.out_dir),
        }

    @classmethod
    def from_dict(cls, d, base_dir: Path | None = None):
        env = d["environment"]
        if isinstance(env, str):
            path = Path(env) if base_dir is None else base_dir / env
            if not path.exists():
                raise FileNotFoundError(f"environment file {path} does not exist")
            env = read_json(path)
        trajs = d.get("trajectories", {})
        return cls(
            environment=EnvironmentSpec.from_dict(env),
            radio=RadioConfig.from_dict(d["radio"]),
            train_trajectory=TrajectorySpec.from_dict(trajs.get("train", {})),
            test_trajectory=TrajectorySpec.from_dict(trajs.get("test", {})),
            graph_k=d.get("graph_k", 12),
            train_config=TrainConfig.from_dict(d.get("train", {})),
            methods=tuple(d.get("methods", METHODS)),
            seed=int(d.get("seed", 0)),
            out_dir=d.get("out_dir", "run"),
        )


def default_environment() -> EnvironmentSpec:
    """Default synthetic hall: a 20 m x 20 m measurement area centered at
    (10, 10), six stations on a surrounding ring with well-spread bearing
    axes, two distant reflective walls at staggered ranges (their echoes
    stay resolvable from the direct pulses), and two shelf-like barriers
    inside the area that both reflect and shadow (NLoS regions).
    """
    import math as _math

    center, ring = 10.0, 40.0
    stations = []
    for k in range(6):
        a = _math.radians(10.0 + 30.0 * k)
        stations.append(
            {"id": k, "position": [center + ring * _math.cos(a), center + ring * _math.sin(a)]}
        )
    walls = [
        {"p1": [-22.0, -8.0], "p2": [30.0, -8.0], "reflective": True},
        {"p1": [24.0, -14.0], "p2": [24.0, 34.0], "reflective": True},
        {"p1": [-20.0, 27.0], "p2": [32.0, 27.0], "reflective": True},
        {"p1": [-14.0, -12.0], "p2": [-14.0, 32.0], "reflective": True},
        {"p1": [7.0, 5.0], "p2": [7.0, 8.0], "reflective": True},
        {"p1": [13.0, 12.0], "p2": [13.0, 15.0], "reflective": True},
    ]
    blockers = [
        [[7.0, 5.0], [7.0, 8.0]],
        [[13.0, 12.0], [13.0, 15.0]],
    ]
    return EnvironmentSpec.from_dict(
        {
            "bounds": [-31.0, -31.0, 51.0, 51.0],
            "base_stations": stations,
            "walls": walls,
            "blockers": blockers,
        }
    )


def default_radio() -> RadioConfig:
    return RadioConfig(
        bandwidth=500e6,
        sample_rate=2e9,
        cir_length=800,
        max_reflection_order=2,
        noise_std=0.0,
        mode="tof",
        toa_noise_std=1e-9,
        reflection_loss=0.85,
        window_lead=8,
    )


DEFAULT_AREA = (0.0, 0.0, 20.0, 20.0)


def default_config(out_dir="run", seed=0) -> PipelineConfig:
    return PipelineConfig(
        environment=default_environment(),
        radio=default_radio(),
        train_trajectory=TrajectorySpec("random_waypoint", 2000, 1.0, 0.25, DEFAULT_AREA),
        test_trajectory=TrajectorySpec("random_waypoint", 500, 1.0, 0.25, DEFAULT_AREA),
        out_dir=str(out_dir),
        seed=seed,
    )


class _RunLock:
    def __init__(self, directory: Path):
        self.path = directory / ".lock"

    def __enter__(self):
        try:
            self.path.touch(exist_ok=False)
        except FileExistsError:
            raise StageError(
                f"setup: run directory {self.path.parent} is locked by another process "
                f"(remove {self.path} if stale)"
            ) from None
        return self

    def __exit__(self, *exc):
        self.path.unlink(missing_ok=True)
        return False


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except Exception as exc:
        raise StageError(f"{name}: {exc}") from exc


def simulate_split(cfg: PipelineConfig, spec: TrajectorySpec, seed: int) -> Dataset:
    rng = np.random.default_rng(seed)
    trajectory = generate_trajectory(
        cfg.environment, spec.kind, spec.n, spec.speed, spec.dt, rng, area=spec.area
    )
    return generate_dataset(cfg.environment, cfg.radio, trajectory, seed)


def dataset_hash(directory) -> str:
    directory = Path(directory)
    return sha256_of_files([directory / "meta.json", directory / "cirs.f32"])


def _geodesics_to_anchors(cross, d_geo: DistanceMatrix, k: int) -> np.ndarray:
    """Shortest-path distance from held-out points to every graph node.

    Each held-out point is attached to its k nearest graph nodes by local
    distance; the best route is one attachment edge plus an in-graph
    shortest path. Held-out points never modify the graph.
    """
    order = np.argsort(cross, axis=1, kind="stable")[:, :k]
    out = np.empty_like(cross)
    for m in range(cross.shape[0]):
        nbrs = order[m]
        out[m] = (cross[m, nbrs, None] + d_geo.values[nbrs, :]).min(axis=0)
    return out


def _method_charts(cfg, tensors_train, tensors_test, d_pw_train, d_geo_train):
    """Train/test Embedding pairs for every requested method."""
    charts = {}
    for method in cfg.methods:
        if method == "siamese_geo":
            params, history = _stage(
                "train-siamese", train, tensors_train, d_geo_train, cfg.train_config
            )
            emb_train = embed_dataset(params, tensors_train)
            emb_test = embed_dataset(params, tensors_test)
            charts[method] = (emb_train, emb_test, {"loss_history": history, "params": params})
        elif method == "pca":
            x_train = np.stack([t.flat() for t in tensors_train])
            x_test = np.stack([t.flat() for t in tensors_test])
            model = _stage("pca", PcaModel().fit, x_train)
            emb_train = Embedding(model.transform(x_train), "pca")
            emb_test = Embedding(model.transform(x_test), "pca")
            charts[method] = (emb_train, emb_test, {})
        elif method == "isomap_mds":
            emb_train = _stage("isomap-mds", mds_embed, d_geo_train, cfg.stress)
            cross = cross_l1(tensors_test, tensors_train)
            d_geo_test = _geodesics_to_anchors(cross, d_geo_train, cfg.graph_k)
            pts = place_out_of_sample(emb_train.points, d_geo_test, "uniform")
            emb_test = Embedding(pts, "isomap_mds")
            charts[method] = (emb_train, emb_test, {})
        elif method == "sammon":
            emb_train = _stage("sammon", sammon_embed, d_pw_train, cfg.stress)
            cross = cross_l1(tensors_test, tensors_train)
            pts = place_out_of_sample(emb_train.points, cross, "inverse")
            emb_test = Embedding(pts, "sammon")
            charts[method] = (emb_train, emb_test, {})
    return charts


def _write_scatter(path, registered: np.ndarray, gt: np.ndarray):
    lines = ["x,y,gt_x,gt_y"]
    for (x, y), (gx, gy) in zip(registered, gt):
        lines.append(f"{x:.9g},{y:.9g},{gx:.9g},{gy:.9g}")
    Path(path).write_text("\n".join(lines) + "\n")


def run_pipeline(cfg: PipelineConfig, save_matrices: bool = False):
    """Execute the full charting pipeline; returns {method: {split: EvalReport}}.

    Splits are simulated independently (trajectory seeds differ); geodesic
    targets and every fitted model see only the training split, and the
    affine registration fitted on training ground truth is reused verbatim
    on the test split.
    """
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with _RunLock(out):
        write_json(out / "config.json", cfg.to_dict())
        config_hash = hashlib.sha256(
            json.dumps(cfg.to_dict(), sort_keys=True).encode()
        ).hexdigest()
        write_json(
            out / "run_meta.json",
            {
                "seed": cfg.seed,
                "version": __version__,
                "config_sha256": config_hash,
                "kernel_backend": backend_name(),
            },
        )
        try:
            reports = _run_stages(cfg, out, save_matrices)
        except Exception as exc:
            (out / "FAILED").write_text(f"{exc}\n")
            raise
        (out / "FAILED").unlink(missing_ok=True)
    return reports


def _run_stages(cfg: PipelineConfig, out: Path, save_matrices: bool):
    ds_train = _stage("simulate-train", simulate_split, cfg, cfg.train_trajectory, cfg.seed)
    ds_test = _stage("simulate-test", simulate_split, cfg, cfg.test_trajectory, cfg.seed + 1)
    ds_train.save(out / "dataset_train")
    ds_test.save(out / "dataset_test")
    # the f32 files are the dataset of record; reload so staged CLI runs agree
    ds_train = Dataset.load(out / "dataset_train")
    ds_test = Dataset.load(out / "dataset_test")

    # shared aligned-window width, sized from the measured delays of both
    # splits (the environment-diagonal default is far too generous when the
    # receivers cover only part of the bounds)
    fs = cfg.radio.sample_rate
    max_shift = max(
        int(round(s.measured_toa.max() * fs))
        for d in (ds_train, ds_test)
        for s in d.snapshots
    )
    window = cfg.radio.cir_length + max_shift + 2
    tensors_train = _stage("preprocess", preprocess_dataset, ds_train, window)
    tensors_test = _stage("preprocess", preprocess_dataset, ds_test, window)

    d_pw_train = _stage("pairwise", pairwise_matrix, tensors_train)
    d_pw_test = _stage("pairwise", pairwise_matrix, tensors_test)

    graph = _stage("knn-graph", knn_graph, d_pw_train, cfg.graph_k)
    if len(connected_components(graph)) > 1:
        k_min = minimal_connecting_k(d_pw_train, cfg.graph_k + 1)
        raise StageError(
            f"knn-graph: graph disconnected at k={cfg.graph_k}; smallest connecting "
            f"k is {k_min}"
        )
    d_geo_train = _stage("geodesic", geodesic_matrix, graph)
    if save_matrices:
        h = dataset_hash(out / "dataset_train")
        d_pw_train.save(out, "dpw", {"dataset_sha256": h})
        d_geo_train.save(out, "dgeo", {"dataset_sha256": h, "k": cfg.graph_k})

    charts = _method_charts(cfg, tensors_train, tensors_test, d_pw_train, d_geo_train)

    gt_train = ds_train.positions()
    gt_test = ds_test.positions()
    reports = {}
    rows = [f"method,split,{EvalReport.CSV_HEADER.split(',', 1)[1]}"]
    for method, (emb_train, emb_test, artifacts) in charts.items():
        transform = _stage(f"affine-{method}", fit_affine, emb_train, gt_train)
        rep_train = _stage(
            f"evaluate-{method}", evaluate_chart,
            emb_train, gt_train, d_pw_train, None, transform,
        )
        rep_test = _stage(
            f"evaluate-{method}", evaluate_chart,
            emb_test, gt_test, d_pw_test, None, transform,
        )
        reports[method] = {"train": rep_train, "test": rep_test}
        for split, emb, rep, gt in (
            ("train", emb_train, rep_train, gt_train),
            ("test", emb_test, rep_test, gt_test),
        ):
            mdir = out / method / split
            emb.save(mdir)
            rep.save(mdir / "report.json")
            _write_scatter(mdir / "scatter.csv", transform.apply(emb.points), gt)
            rows.append(f"{method},{split},{rep.csv_row().split(',', 1)[1]}")
        if "params" in artifacts:
            artifacts["params"].save(out / method / "encoder")
            write_json(
                out / method / "loss_history.json",
                {"epoch_mean_loss": artifacts["loss_history"]},
            )
    (out / "results.csv").write_text("\n".join(rows) + "\n")
    return reports


def distance_study(dataset: Dataset, n_pairs: int, seed: int, graph_k: int = 15,
                   bin_width: float = 1.0):
    """Sample snapshot pairs and relate their metric values.

    Returns (triples [m, 3] of (euclidean, local CIR, geodesic) distances,
    summary dict with per-bin and overall Pearson correlations). The pair
    count is clamped to the number of distinct pairs.
    """
    n = len(dataset)
    total = n * (n - 1) // 2
    clamped = n_pairs > total
    m = min(n_pairs, total)
    tensors = preprocess_dataset(dataset)
    d_pw = pairwise_matrix(tensors)
    graph = knn_graph(d_pw, graph_k)
    if len(connected_components(graph)) > 1:
        raise ValueError(f"knn graph disconnected at k={graph_k}")
    d_geo = geodesic_matrix(graph)
    pos = dataset.positions()
    diff = pos[:, None, :] - pos[None, :, :]
    d_euc = np.sqrt((diff * diff).sum(axis=2))

    rng = np.random.default_rng(seed)
    iu = np.triu_indices(n, 1)
    chosen = rng.choice(total, size=m, replace=False) if m else np.empty(0, dtype=int)
    chosen.sort()
    ii, jj = iu[0][chosen], iu[1][chosen]
    triples = np.column_stack([d_euc[ii, jj], d_pw.values[ii, jj], d_geo.values[ii, jj]])

    def _pearson(x, y):
        if x.size < 3 or np.std(x) == 0 or np.std(y) == 0:
            return None
        return float(np.corrcoef(x, y)[0, 1])

    edges = np.arange(0.0, dataset.environment.diagonal + bin_width, bin_width)
    bins = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (triples[:, 0] >= lo) & (triples[:, 0] < hi)
        bins.append(
            {
                "lo": float(lo),
                "hi": float(hi),
                "pairs": int(sel.sum()),
                "r_cir": _pearson(triples[sel, 0], triples[sel, 1]),
            }
        )
    summary = {
        "n_pairs": int(m),
        "clamped": bool(clamped),
        "r_cir_overall": _pearson(triples[:, 0], triples[:, 1]),
        "r_geo_overall": _pearson(triples[:, 0], triples[:, 2]),
        "bins": bins,
    }
    return triples, summary


def write_study(out_dir, triples: np.ndarray, summary: dict):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["d_euc,d_cir,d_geo"]
    for e, c, g in triples:
        lines.append(f"{e:.9g},{c:.9g},{g:.9g}")
    (out / "pairs.csv").write_text("\n".join(lines) + "\n")
    write_json(out / "correlations.json", summary)
