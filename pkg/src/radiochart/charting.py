"""Chart learning: Siamese encoder on geodesic targets, plus PCA, stress
majorization (metric MDS) and Sammon mapping baselines.

The encoder is a fully-connected network mapping a flattened aligned tensor
to a 2-D chart point. Two weight-shared branches are trained so that the
Euclidean distance between their outputs matches the geodesic target of the
pair; pairs are sampled uniformly at random from the target matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .csi import AlignedTensor
from .graphs import KIND_GEODESIC, DistanceMatrix
from .io import read_f64, read_json, write_f64, write_json


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class EncoderParams:
    """Weights of the fully-connected chart encoder.

    Hidden layers use a rectifier; the 2-D output layer is linear. The
    input/target normalization constants travel with the weights so a saved
    encoder embeds raw tensors consistently.
    """

    weights: list  # [out, in] float64 per layer
    biases: list  # [out] float64 per layer
    input_scale: float = 1.0
    target_scale: float = 1.0

    @property
    def layer_sizes(self) -> list[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    def copy(self) -> "EncoderParams":
        return EncoderParams(
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.input_scale,
            self.target_scale,
        )

    def check_finite(self):
        for w, b in zip(self.weights, self.biases):
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise TrainingDiverged("non-finite encoder parameters")

    def save(self, directory):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        write_json(
            directory / "params.json",
            {
                "layer_sizes": self.layer_sizes,
                "activation": "relu",
                "input_scale": self.input_scale,
                "target_scale": self.target_scale,
            },
        )
        blob = np.concatenate(
            [np.concatenate([w.ravel(), b]) for w, b in zip(self.weights, self.biases)]
        )
        write_f64(directory / "weights.f64", blob)

    @classmethod
    def load(cls, directory) -> "EncoderParams":
        directory = Path(directory)
        meta = read_json(directory / "params.json")
        sizes = meta["layer_sizes"]
        total = sum(sizes[i + 1] * sizes[i] + sizes[i + 1] for i in range(len(sizes) - 1))
        blob = read_f64(directory / "weights.f64", (total,))
        weights, biases, off = [], [], 0
        for i in range(len(sizes) - 1):
            n_out, n_in = sizes[i + 1], sizes[i]
            weights.append(blob[off : off + n_out * n_in].reshape(n_out, n_in).copy())
            off += n_out * n_in
            biases.append(blob[off : off + n_out].copy())
            off += n_out
        return cls(weights, biases, meta["input_scale"], meta["target_scale"])


@dataclass
class TrainConfig:
    hidden: tuple = (128, 64)
    epochs: int = 150
    pairs_per_epoch: int = 8192
    batch_size: int = 256
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    early_stop_rel: float = 5e-4
    early_stop_patience: int = 15

    def __post_init__(self):
        if self.epochs < 0 or self.pairs_per_epoch < 1 or self.batch_size < 1:
            raise ValueError("counts must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")

    def to_dict(self):
        d = self.__dict__.copy()
        d["hidden"] = list(self.hidden)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "hidden" in d:
            d["hidden"] = tuple(d["hidden"])
        return cls(**d)


@dataclass
class Embedding:
    """2-D chart coordinates for a list of snapshots."""

    points: np.ndarray  # [n, 2]
    method: str

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 2 or self.points.shape[1] != 2:
            raise ValueError(f"chart points must be [n, 2], got {self.points.shape}")
        if not np.isfinite(self.points).all():
            raise ValueError("chart contains non-finite points")

    def save(self, directory):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        write_f64(directory / "chart.f64", self.points)
        write_json(directory / "chart.json", {"n": len(self.points), "method": self.method})

    @classmethod
    def load(cls, directory) -> "Embedding":
        directory = Path(directory)
        meta = read_json(directory / "chart.json")
        return cls(read_f64(directory / "chart.f64", (meta["n"], 2)), meta["method"])


def init_encoder(layer_sizes, seed: int) -> EncoderParams:
    """Fan-in-scaled uniform weights, zero biases, reproducible per seed."""
    sizes = list(layer_sizes)
    if len(sizes) < 2 or any(s < 1 for s in sizes):
        raise ValueError(f"invalid layer sizes {sizes}")
    if sizes[-1] != 2:
        raise ValueError("output dimension must be 2")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        limit = 1.0 / math.sqrt(n_in)
        weights.append(rng.uniform(-limit, limit, size=(n_out, n_in)))
        biases.append(np.zeros(n_out))
    return EncoderParams(weights, biases)


def _forward_batch(params: EncoderParams, x: np.ndarray):
    """Returns (outputs [b, 2], caches) for backprop."""
    a = x * params.input_scale
    caches = []
    last = len(params.weights) - 1
    for li, (w, b) in enumerate(zip(params.weights, params.biases)):
        pre = a @ w.T + b
        if li < last:
            caches.append((a, pre > 0.0))
            a = np.maximum(pre, 0.0)
        else:
            caches.append((a, None))
            a = pre
    return a, caches


def _backward_batch(params: EncoderParams, caches, d_out: np.ndarray):
    grads_w = [None] * len(params.weights)
    grads_b = [None] * len(params.weights)
    delta = d_out
    for li in range(len(params.weights) - 1, -1, -1):
        inputs, _ = caches[li]
        grads_w[li] = delta.T @ inputs
        grads_b[li] = delta.sum(axis=0)
        if li > 0:
            delta = (delta @ params.weights[li]) * caches[li - 1][1]
    return grads_w, grads_b


def _as_flat(x) -> np.ndarray:
    if isinstance(x, AlignedTensor):
        return x.flat()
    return np.asarray(x, dtype=float).reshape(-1)


def forward(params: EncoderParams, x) -> np.ndarray:
    """Chart point for one aligned tensor (or pre-flattened vector)."""
    flat = _as_flat(x)
    expected = params.weights[0].shape[1]
    if flat.size != expected:
        raise ValueError(f"input size {flat.size} does not match encoder input {expected}")
    out, _ = _forward_batch(params, flat[None, :])
    return out[0]


def _pair_loss_grads(params: EncoderParams, xa: np.ndarray, xb: np.ndarray, targets: np.ndarray):
    """Mean absolute distance-mismatch loss and its parameter gradients."""
    za, ca = _forward_batch(params, xa)
    zb, cb = _forward_batch(params, xb)
    diff = za - zb
    dist = np.sqrt((diff * diff).sum(axis=1))
    resid = targets - dist
    loss = float(np.abs(resid).mean())
    b = xa.shape[0]
    # subgradient 0 both at resid == 0 and at coincident outputs
    scale = -np.sign(resid) / b
    unit = np.zeros_like(diff)
    nz = dist > 0.0
    unit[nz] = diff[nz] / dist[nz, None]
    d_za = scale[:, None] * unit
    gw_a, gb_a = _backward_batch(params, ca, d_za)
    gw_b, gb_b = _backward_batch(params, cb, -d_za)
    grads_w = [ga + gb for ga, gb in zip(gw_a, gw_b)]
    grads_b = [ga + gb for ga, gb in zip(gb_a, gb_b)]
    return loss, grads_w, grads_b


def siamese_step(params: EncoderParams, pair, d_target: float):
    """Loss |d_target - ||z_i - z_j||| and gradients for one input pair.

    Gradients flow through both weight-shared branches and are summed.
    Returns (loss, (grads_weights, grads_biases)).
    """
    if d_target < 0:
        raise ValueError("target distance must be nonnegative")
    xa, xb = (_as_flat(p)[None, :] for p in pair)
    loss, gw, gb = _pair_loss_grads(params, xa, xb, np.array([float(d_target)]))
    return loss, (gw, gb)


class _Adam:
    def __init__(self, params: EncoderParams, cfg: TrainConfig):
        self.cfg = cfg
        self.t = 0
        self.m_w = [np.zeros_like(w) for w in params.weights]
        self.v_w = [np.zeros_like(w) for w in params.weights]
        self.m_b = [np.zeros_like(b) for b in params.biases]
        self.v_b = [np.zeros_like(b) for b in params.biases]

    def update(self, params: EncoderParams, grads_w, grads_b):
        c = self.cfg
        self.t += 1
        corr1 = 1.0 - c.beta1**self.t
        corr2 = 1.0 - c.beta2**self.t
        for i in range(len(params.weights)):
            for p, g, m, v in (
                (params.weights[i], grads_w[i], self.m_w[i], self.v_w[i]),
                (params.biases[i], grads_b[i], self.m_b[i], self.v_b[i]),
            ):
                m *= c.beta1
                m += (1.0 - c.beta1) * g
                v *= c.beta2
                v += (1.0 - c.beta2) * g * g
                p -= c.learning_rate * (m / corr1) / (np.sqrt(v / corr2) + c.adam_eps)


def train(tensors: list[AlignedTensor], d_geo: DistanceMatrix, cfg: TrainConfig):
    """Fit the Siamese encoder to geodesic targets.

    Inputs are scaled by the dataset-wide magnitude maximum and targets by
    the target-matrix maximum; both constants are stored in the returned
    parameters (a later affine registration absorbs the target scale).
    Returns (params, per-epoch mean loss history).
    """
    if d_geo.kind != KIND_GEODESIC:
        raise ValueError(f"expected a geodesic matrix, got kind {d_geo.kind!r}")
    n = len(tensors)
    if d_geo.n != n:
        raise ValueError(f"matrix size {d_geo.n} does not match {n} tensors")
    x = np.stack([t.flat() for t in tensors]).astype(float)
    max_mag = float(np.abs(x).max())
    max_target = float(d_geo.values.max())

    sizes = [x.shape[1], *cfg.hidden, 2]
    params = init_encoder(sizes, cfg.seed)
    params.input_scale = 1.0 / max_mag if max_mag > 0 else 1.0
    params.target_scale = 1.0 / max_target if max_target > 0 else 1.0
    targets_all = d_geo.values * params.target_scale

    rng = np.random.default_rng(cfg.seed)
    opt = _Adam(params, cfg)
    history = []
    best = math.inf
    stall = 0
    steps = max(1, cfg.pairs_per_epoch // cfg.batch_size)
    for epoch in range(cfg.epochs):
        epoch_losses = np.empty(steps)
        for step in range(steps):
            i = rng.integers(0, n, size=cfg.batch_size)
            j = (i + rng.integers(1, n, size=cfg.batch_size)) % n
            loss, gw, gb = _pair_loss_grads(params, x[i], x[j], targets_all[i, j])
            if not math.isfinite(loss):
                raise TrainingDiverged(f"non-finite loss at epoch {epoch}, step {step}")
            opt.update(params, gw, gb)
            epoch_losses[step] = loss
        mean_loss = float(epoch_losses.mean())
        history.append(mean_loss)
        if best - mean_loss < cfg.early_stop_rel * best:
            stall += 1
            if stall >= cfg.early_stop_patience:
                break
        else:
            stall = 0
        best = min(best, mean_loss)
    params.check_finite()
    return params, history


def embed_dataset(params: EncoderParams, tensors: list[AlignedTensor]) -> Embedding:
    """Chart points for every tensor, in input order."""
    expected = params.weights[0].shape[1]
    x = np.stack([_as_flat(t) for t in tensors])
    if x.shape[1] != expected:
        raise ValueError(f"input size {x.shape[1]} does not match encoder input {expected}")
    out, _ = _forward_batch(params, x)
    return Embedding(out, "siamese_geo")


# ---------------------------------------------------------------------------
# classical baselines


class PcaModel:
    """Top-2 principal directions of mean-centered flattened tensors."""

    def __init__(self):
        self.mean = None
        self.components = None  # [2, d]
        self.variances = None

    def fit(self, x: np.ndarray) -> "PcaModel":
        x = np.asarray(x, dtype=float)
        n, d = x.shape
        if n < 3:
            raise ValueError("PCA needs at least 3 samples")
        self.mean = x.mean(axis=0)
        xc = x - self.mean
        # eigen-solve whichever Gram side is smaller
        if d <= n:
            cov = xc.T @ xc / (n - 1)
            evals, evecs = np.linalg.eigh(cov)
            evals, evecs = evals[::-1], evecs[:, ::-1]
            comps = evecs[:, :2].T.copy()
        else:
            gram = xc @ xc.T / (n - 1)
            evals, evecs = np.linalg.eigh(gram)
            evals, evecs = evals[::-1], evecs[:, ::-1]
            comps = np.empty((2, d))
            for r in range(2):
                v = xc.T @ evecs[:, r]
                norm = np.linalg.norm(v)
                if norm > 0:
                    v /= norm
                comps[r] = v
        if evals.size < 2 or evals[0] <= 0.0 or evals[1] <= evals[0] * 1e-12:
            raise ValueError("input rank below 2: no plane to project onto")
        for r in range(2):  # deterministic sign: first non-tiny loading positive
            nz = np.nonzero(np.abs(comps[r]) > 1e-12)[0]
            if nz.size and comps[r, nz[0]] < 0:
                comps[r] = -comps[r]
        self.components = comps
        self.variances = evals[:2].copy()
        return self

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.mean) @ self.components.T


def pca_embed(tensors: list[AlignedTensor]) -> Embedding:
    """Project flattened tensors onto their top-2 principal directions."""
    x = np.stack([_as_flat(t) for t in tensors])
    model = PcaModel().fit(x)
    return Embedding(model.transform(x), "pca")


@dataclass
class StressConfig:
    """Shared knobs of the iterative stress-minimizing embeddings."""

    seed: int = 0
    max_iter: int = 500
    tol: float = 1e-12
    step: float = 0.3  # initial Sammon step size
    max_halves: int = 16
    eps_floor: float = 1e-12


def _init_points(n: int, scale: float, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.normal(0.0, max(scale, 1e-12), size=(n, 2))


def _euclidean(points: np.ndarray) -> np.ndarray:
    g = points @ points.T
    sq = np.diag(g)
    d2 = sq[:, None] + sq[None, :] - 2.0 * g
    np.maximum(d2, 0.0, out=d2)
    e = np.sqrt(d2)
    np.fill_diagonal(e, 0.0)
    return e


def smacof(d: np.ndarray, cfg: StressConfig):
    """Stress majorization for metric MDS.

    Minimizes sum_{i<j} (D_ij - |z_i - z_j|)^2 with the Guttman transform;
    the stress sequence is non-increasing. Returns (points, stresses).
    """
    d = np.asarray(d, dtype=float)
    n = d.shape[0]
    z = _init_points(n, d.max() / math.sqrt(max(n, 2)), cfg.seed)
    stresses = []
    prev = math.inf
    for _ in range(cfg.max_iter):
        e = _euclidean(z)
        stress = float(((d - e) ** 2).sum()) / 2.0
        stresses.append(stress)
        ratio = np.zeros_like(e)
        np.divide(d, e, out=ratio, where=e > 0)
        np.fill_diagonal(ratio, 0.0)
        b = -ratio
        np.fill_diagonal(b, ratio.sum(axis=1))
        z = b @ z / n
        if math.isfinite(prev) and prev - stress <= cfg.tol * max(prev, 1e-300):
            break
        prev = stress
    return z, stresses


def mds_embed(matrix: DistanceMatrix, cfg: StressConfig | None = None) -> Embedding:
    """Metric MDS chart of a (typically geodesic) distance matrix."""
    cfg = cfg or StressConfig()
    points, _ = smacof(matrix.values, cfg)
    return Embedding(points, "isomap_mds")


def _sammon_stress(d: np.ndarray, e: np.ndarray, off: np.ndarray, c: float) -> float:
    q = np.zeros_like(d)
    np.divide((d - e) ** 2, d, out=q, where=off)
    return float(q.sum()) / 2.0 / c


def sammon(d: np.ndarray, cfg: StressConfig):
    """Sammon mapping by gradient descent with step-halving line search.

    Zero off-diagonal targets are floored to cfg.eps_floor. Returns
    (points, stresses); the stress sequence is non-increasing.
    """
    d = np.asarray(d, dtype=float).copy()
    n = d.shape[0]
    off = ~np.eye(n, dtype=bool)
    d[off & (d < cfg.eps_floor)] = cfg.eps_floor
    c = float(d[off].sum()) / 2.0
    z = _init_points(n, d.max() / math.sqrt(max(n, 2)), cfg.seed)
    e = np.maximum(_euclidean(z), cfg.eps_floor)
    stress = _sammon_stress(d, e, off, c)
    stresses = [stress]
    step = cfg.step
    for _ in range(cfg.max_iter):
        coef = np.zeros((n, n))
        np.divide(d - e, d * e, out=coef, where=off)
        grad = -(2.0 / c) * (coef.sum(axis=1)[:, None] * z - coef @ z)
        if float(np.abs(grad).max()) == 0.0:
            break
        accepted = False
        trial = step
        for _ in range(cfg.max_halves):
            cand = z - trial * grad
            e_cand = np.maximum(_euclidean(cand), cfg.eps_floor)
            s_cand = _sammon_stress(d, e_cand, off, c)
            if s_cand < stress:
                z, e, stress = cand, e_cand, s_cand
                step = trial * 1.5
                accepted = True
                break
            trial *= 0.5
        stresses.append(stress)
        if not accepted:
            break
        if len(stresses) > 2 and stresses[-2] - stress <= cfg.tol * max(stresses[-2], 1e-300):
            break
    return z, stresses


def sammon_embed(matrix: DistanceMatrix, cfg: StressConfig | None = None) -> Embedding:
    """Sammon-mapping chart of a pairwise distance matrix."""
    cfg = cfg or StressConfig()
    points, _ = sammon(matrix.values, cfg)
    return Embedding(points, "sammon")


def place_out_of_sample(
    anchors: np.ndarray,
    dists: np.ndarray,
    weighting: str = "uniform",
    iterations: int = 100,
) -> np.ndarray:
    """Embed new points against a fixed chart by per-point stress majorization.

    `dists[m, j]` is the target distance of new point m to anchor j.
    weighting 'uniform' minimizes squared mismatch (MDS flavor); 'inverse'
    weights by 1/target (Sammon flavor). Each point starts at its closest
    anchor; anchors never move.
    """
    anchors = np.asarray(anchors, dtype=float)
    dists = np.asarray(dists, dtype=float)
    if weighting == "uniform":
        w = np.ones_like(dists)
    elif weighting == "inverse":
        w = 1.0 / np.maximum(dists, 1e-12)
    else:
        raise ValueError(f"unknown weighting {weighting!r}")
    wsum = w.sum(axis=1)
    out = anchors[np.argmin(dists, axis=1)].copy()
    for _ in range(iterations):
        diff = out[:, None, :] - anchors[None, :, :]  # [m, n, 2]
        e = np.sqrt((diff * diff).sum(axis=2))
        unit = np.zeros_like(diff)
        nz = e > 0
        unit[nz] = diff[nz] / e[nz, None]
        out = (w[:, :, None] * (anchors[None, :, :] + dists[:, :, None] * unit)).sum(
            axis=1
        ) / wsum[:, None]
    return out
