"""Command-line interface.

Subcommands mirror the pipeline stages so runs can be scripted end-to-end
(`pipeline`) or stage by stage (`simulate` -> `distances` -> `geodesic` ->
`train` -> `embed` -> `evaluate`). `study` reproduces the distance-metric
correlation analysis on a synthetic dataset. Configuration is one JSON file
(see README); --seed and --out override the config values.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .charting import Embedding, EncoderParams, TrainConfig, embed_dataset, train
from .csi import preprocess_dataset, window_length_for
from .environment import EnvironmentSpec, RadioConfig
from .evaluation import evaluate_chart
from .graphs import (
    DistanceMatrix,
    connected_components,
    geodesic_matrix,
    knn_graph,
    minimal_connecting_k,
    pairwise_matrix,
)
from .io import read_json, write_json
from .pipeline import (
    PipelineConfig,
    StageError,
    TrajectorySpec,
    dataset_hash,
    default_config,
    distance_study,
    run_pipeline,
    simulate_split,
    write_study,
)
from .sim import Dataset


def _load_config(path: str | None) -> PipelineConfig:
    if path is None:
        return default_config()
    p = Path(path)
    if not p.exists():
        raise StageError(f"config: file {p} does not exist")
    return PipelineConfig.from_dict(read_json(p), base_dir=p.parent)


def _apply_overrides(cfg: PipelineConfig, args) -> PipelineConfig:
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "out", None) is not None:
        cfg.out_dir = args.out
    return cfg


def cmd_simulate(args) -> int:
    cfg = _apply_overrides(_load_config(args.config), args)
    spec = cfg.train_trajectory
    dataset = simulate_split(cfg, spec, cfg.seed)
    out = Path(cfg.out_dir)
    dataset.save(out)
    print(
        f"dataset: N={len(dataset)} snapshots, N_b={dataset.n_stations} stations, "
        f"T={cfg.radio.cir_length} samples, bandwidth={cfg.radio.bandwidth / 1e6:.1f} MHz, "
        f"mode={cfg.radio.mode} -> {out}"
    )
    return 0


def cmd_distances(args) -> int:
    dataset = Dataset.load(args.dataset)
    tensors = preprocess_dataset(dataset)
    d_pw = pairwise_matrix(tensors)
    d_pw.save(args.out, "dpw", {"dataset_sha256": dataset_hash(args.dataset)})
    print(f"pairwise matrix [{d_pw.n} x {d_pw.n}] -> {args.out}/dpw.f64")
    return 0


def cmd_geodesic(args) -> int:
    d_pw = DistanceMatrix.load(args.distances, "dpw")
    graph = knn_graph(d_pw, args.k)
    comps = connected_components(graph)
    if len(comps) > 1:
        k_min = minimal_connecting_k(d_pw, args.k + 1)
        raise StageError(
            f"geodesic: graph disconnected at k={args.k} "
            f"({len(comps)} components); smallest connecting k is {k_min}"
        )
    d_geo = geodesic_matrix(graph)
    meta = read_json(Path(args.distances) / "dpw.json")
    d_geo.save(args.out, "dgeo", {"k": args.k, "dataset_sha256": meta.get("dataset_sha256")})
    print(f"geodesic matrix [{d_geo.n} x {d_geo.n}] (k={args.k}) -> {args.out}/dgeo.f64")
    return 0


def cmd_train(args) -> int:
    cfg = _load_config(args.config)
    if args.seed is not None:
        cfg.train_config.seed = args.seed
    dataset = Dataset.load(args.dataset)
    tensors = preprocess_dataset(dataset)
    d_geo = DistanceMatrix.load(args.geodesic, "dgeo")
    params, history = train(tensors, d_geo, cfg.train_config)
    params.save(args.out)
    write_json(Path(args.out) / "loss_history.json", {"epoch_mean_loss": history})
    final = history[-1] if history else float("nan")
    print(f"encoder trained for {len(history)} epochs (final loss {final:.6g}) -> {args.out}")
    return 0


def cmd_embed(args) -> int:
    params = EncoderParams.load(args.params)
    dataset = Dataset.load(args.dataset)
    tensors = preprocess_dataset(dataset)
    embedding = embed_dataset(params, tensors)
    embedding.save(args.out)
    print(f"chart [{len(embedding.points)} x 2] -> {args.out}/chart.f64")
    return 0


def cmd_evaluate(args) -> int:
    chart = Embedding.load(args.chart)
    dataset = Dataset.load(args.dataset)
    if args.distances:
        d_orig = DistanceMatrix.load(args.distances, "dpw").values
    else:
        d_orig = pairwise_matrix(preprocess_dataset(dataset)).values
    report = evaluate_chart(chart, dataset.positions(), d_orig)
    report.save(args.out)
    if args.csv:
        Path(args.csv).write_text(report.CSV_HEADER + "\n" + report.csv_row() + "\n")
    print(
        f"{report.method}: CT={report.ct:.3f} TW={report.tw:.3f} "
        f"MAE={report.mae:.3f} m CE90={report.ce90:.3f} m -> {args.out}"
    )
    return 0


def cmd_pipeline(args) -> int:
    cfg = _apply_overrides(_load_config(args.config), args)
    reports = run_pipeline(cfg, save_matrices=args.save_matrices)
    for method, splits in reports.items():
        for split, rep in splits.items():
            print(
                f"{method:12s} {split:5s} CT={rep.ct:.3f} TW={rep.tw:.3f} "
                f"MAE={rep.mae:.3f} m CE90={rep.ce90:.3f} m"
            )
    print(f"results -> {Path(cfg.out_dir) / 'results.csv'}")
    return 0


def cmd_study(args) -> int:
    cfg = _apply_overrides(_load_config(args.config), args)
    if args.dataset:
        dataset = Dataset.load(args.dataset)
    else:
        dataset = simulate_split(cfg, cfg.train_trajectory, cfg.seed)
    n = len(dataset)
    total = n * (n - 1) // 2
    if args.pairs > total:
        print(
            f"warning: requested {args.pairs} pairs but only {total} exist; clamping",
            file=sys.stderr,
        )
    triples, summary = distance_study(dataset, args.pairs, cfg.seed, cfg.graph_k)
    write_study(cfg.out_dir, triples, summary)
    r_cir = summary["r_cir_overall"]
    r_geo = summary["r_geo_overall"]
    fmt = lambda r: "n/a" if r is None else f"{r:.3f}"
    print(
        f"{summary['n_pairs']} pairs: r(euclidean, cir)={fmt(r_cir)} "
        f"r(euclidean, geodesic)={fmt(r_geo)} -> {cfg.out_dir}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="radiochart",
        description="Channel charting toolkit: simulate CSI, build geodesic "
        "distances, learn charts, evaluate them.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(fn=fn)
        return p

    p = add("simulate", cmd_simulate, "simulate a dataset onto disk")
    p.add_argument("--config", help="pipeline config JSON (defaults built in)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="dataset output directory")

    p = add("distances", cmd_distances, "pairwise CIR distance matrix of a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)

    p = add("geodesic", cmd_geodesic, "k-NN graph geodesic distances of a pairwise matrix")
    p.add_argument("--distances", required=True, help="directory containing dpw.f64")
    p.add_argument("--k", type=int, default=15)
    p.add_argument("--out", required=True)

    p = add("train", cmd_train, "train the Siamese encoder on geodesic targets")
    p.add_argument("--config", help="pipeline config JSON (train section used)")
    p.add_argument("--dataset", required=True)
    p.add_argument("--geodesic", required=True, help="directory containing dgeo.f64")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)

    p = add("embed", cmd_embed, "embed a dataset with a trained encoder")
    p.add_argument("--params", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)

    p = add("evaluate", cmd_evaluate, "CT/TW and registered positioning error of a chart")
    p.add_argument("--chart", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--distances", help="reuse a saved dpw matrix")
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--csv", help="also write a one-row CSV")

    p = add("pipeline", cmd_pipeline, "full run: simulate, charts, reports")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--save-matrices", action="store_true")

    p = add("study", cmd_study, "distance-metric correlation study")
    p.add_argument("--config")
    p.add_argument("--dataset", help="reuse an existing dataset directory")
    p.add_argument("--pairs", type=int, default=20000)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (StageError, OSError, ValueError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
