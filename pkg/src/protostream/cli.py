"""Command-line pipeline: simulate, calibrate, stream, regions, eval, bench.

Every command is a pure function of its input files and configuration;
outputs are byte-identical across repeated runs (bench, which reports
wall-clock latency, is the one obvious exception).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import artifacts
from .calibration import (
    LabeledSupportSet,
    build_class_prototypes,
    calibrate_all,
    select_base_references,
)
from .engine import ROUTE_BASE_ONLY, StreamState, step
from .errors import (
    DimMismatch,
    LengthMismatch,
    ProtostreamError,
    UnlabeledSupport,
)
from .evaluation import StreamResult, evaluate_stream
from .geometry import (
    SpaceConfig,
    compute_support_stats,
    standardize,
    standardize_batch,
)
from .pacf import read_feature_file, write_feature_file
from .synthetic import BenchmarkSpec, generate_benchmark

_CONFIG_KEYS = (
    "d",
    "epsilon",
    "temperature_T",
    "dirichlet_alpha",
    "maturity_beta",
    "spread_c",
    "replay_passes",
    "replay_seed",
)


@dataclass
class RunConfig:
    """Flat run configuration: space hyperparameters plus replay settings."""

    d: int | None = None
    epsilon: float = 1e-5
    temperature_T: float = 1.0
    dirichlet_alpha: float = 1e6
    maturity_beta: float = 0.5
    spread_c: float = 1.0
    replay_passes: int = 3
    replay_seed: int = 0

    def space_config(self, d: int) -> SpaceConfig:
        if self.d is not None and self.d != d:
            raise DimMismatch(f"configured d={self.d} but data has d={d}")
        return SpaceConfig(
            d=d,
            epsilon=self.epsilon,
            temperature_T=self.temperature_T,
            dirichlet_alpha=self.dirichlet_alpha,
            maturity_beta=self.maturity_beta,
            spread_c=self.spread_c,
        )


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, overlaid by --config JSON, overlaid by explicit flags."""
    cfg = RunConfig()
    config_path = getattr(args, "config", None)
    if config_path:
        data = json.loads(Path(config_path).read_text(encoding="utf-8"))
        unknown = set(data) - set(_CONFIG_KEYS)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        for key in _CONFIG_KEYS:
            if key in data:
                setattr(cfg, key, data[key])
    overrides = {
        "d": getattr(args, "dim", None),
        "epsilon": getattr(args, "epsilon", None),
        "temperature_T": getattr(args, "temperature", None),
        "dirichlet_alpha": getattr(args, "dirichlet_alpha", None),
        "maturity_beta": getattr(args, "maturity_beta", None),
        "spread_c": getattr(args, "spread_c", None),
        "replay_passes": getattr(args, "passes", None),
        "replay_seed": getattr(args, "seed", None),
    }
    for key, value in overrides.items():
        if value is not None:
            setattr(cfg, key, value)
    cfg.replay_passes = int(cfg.replay_passes)
    cfg.replay_seed = int(cfg.replay_seed)
    return cfg


def _add_space_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat JSON configuration file")
    parser.add_argument("--dim", type=int, help="expected embedding dimension")
    parser.add_argument("--epsilon", type=float, help="variance floor")
    parser.add_argument("--temperature", type=float, help="cosine temperature")
    parser.add_argument("--dirichlet-alpha", type=float, dest="dirichlet_alpha")
    parser.add_argument("--maturity-beta", type=float, dest="maturity_beta")
    parser.add_argument("--spread-c", type=float, dest="spread_c")
    parser.add_argument("--seed", type=int, help="replay shuffle seed")
    parser.add_argument("--passes", type=int, help="replay pass count")


def _read_labeled_support(path):
    features, labels = read_feature_file(path)
    if labels is None:
        raise UnlabeledSupport(f"{path}: support file carries no labels")
    if np.any(labels < 0):
        bad = int(np.flatnonzero(labels < 0)[0])
        raise UnlabeledSupport(f"{path}: record {bad} is unlabeled (-1)")
    return features, labels


def cmd_calibrate(args: argparse.Namespace) -> int:
    run_cfg = resolve_config(args)
    raw, labels = _read_labeled_support(args.support)
    cfg = run_cfg.space_config(raw.shape[1])
    stats = compute_support_stats(raw)
    embeddings = standardize_batch(raw, stats, cfg)
    support = LabeledSupportSet(
        embeddings=embeddings,
        labels=labels.astype(np.int64),
        num_classes=int(labels.max()) + 1,
    )
    prototypes = build_class_prototypes(support)
    classifier_dirs = None
    if getattr(args, "classifier", None):
        weights, _ = read_feature_file(args.classifier, expected_dim=cfg.d)
        # Classifier rows are whitened without centering, then normalized.
        whitened = np.asarray(weights, dtype=np.float64) / np.sqrt(
            stats.variance + cfg.epsilon
        )
        norms = np.linalg.norm(whitened, axis=1)
        classifier_dirs = whitened / norms[:, None]
    bank = select_base_references(support, prototypes, classifier_dirs)
    thresholds, report = calibrate_all(
        support,
        bank,
        cfg,
        passes=run_cfg.replay_passes,
        seed=run_cfg.replay_seed,
    )
    artifact = artifacts.calibration_artifact_dict(cfg, stats, bank, thresholds, report)
    artifacts.write_json(args.out, artifact)
    return 0


def _run_stream(calibration_path, stream_path):
    """Shared engine loop for stream / regions / bench."""
    cfg, stats, bank, thresholds, _ = artifacts.load_calibration_artifact(
        calibration_path
    )
    raw, _ = read_feature_file(stream_path, expected_dim=cfg.d)
    state = StreamState.initial(bank, thresholds, cfg)
    traces = []
    for row in np.asarray(raw, dtype=np.float64):
        u = standardize(row, stats, cfg)
        _, trace = step(u, state)
        traces.append(trace)
    return state, traces


def cmd_stream(args: argparse.Namespace) -> int:
    state, traces = _run_stream(args.calibration, args.stream)
    lines = [json.dumps(t.to_json_dict()) for t in traces]
    Path(args.out).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    decision_counts: dict = {}
    for t in traces:
        decision_counts[t.decision] = decision_counts.get(t.decision, 0) + 1
    snapshot_path = args.snapshot or f"{args.out}.snapshot.json"
    artifacts.write_json(snapshot_path, artifacts.snapshot_dict(state, decision_counts))
    return 0


def cmd_regions(args: argparse.Namespace) -> int:
    _, traces = _run_stream(args.calibration, args.stream)
    rows = ["g_cos,g_mar,birth_statistic,attach_score,route,decision"]
    for t in traces:
        birth = "" if t.birth_statistic is None else repr(t.birth_statistic)
        attach = "" if t.attach_score is None else repr(t.attach_score)
        assert not (t.route == ROUTE_BASE_ONLY and birth != "")
        rows.append(
            f"{t.g_cos!r},{t.g_mar!r},{birth},{attach},{t.route},{t.decision}"
        )
    Path(args.out).write_text("\n".join(rows) + "\n", encoding="utf-8")
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    cfg, stats, bank, thresholds, _ = artifacts.load_calibration_artifact(
        args.calibration
    )
    raw, _ = read_feature_file(args.stream, expected_dim=cfg.d)
    state = StreamState.initial(bank, thresholds, cfg)
    latencies = []
    for row in np.asarray(raw, dtype=np.float64):
        started = time.perf_counter()
        u = standardize(row, stats, cfg)
        step(u, state)
        latencies.append(time.perf_counter() - started)
    ms = np.asarray(latencies) * 1e3
    summary = {
        "samples": int(ms.size),
        "mean_ms": float(ms.mean()),
        "p50_ms": float(np.percentile(ms, 50)),
        "p90_ms": float(np.percentile(ms, 90)),
        "p99_ms": float(np.percentile(ms, 99)),
        "max_ms": float(ms.max()),
    }
    text = artifacts.dump_json(summary)
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    truth = artifacts.load_json(args.truth)
    predictions = []
    with open(args.trace, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                predictions.append(int(json.loads(line)["label"]))
    truths = truth["truths"]
    if len(predictions) != len(truths):
        raise LengthMismatch(
            f"{len(predictions)} trace lines vs {len(truths)} truth labels"
        )
    result = StreamResult(
        predictions=np.asarray(predictions, dtype=np.int64),
        truths=np.asarray(truths, dtype=np.int64),
        num_total_labels=int(truth["num_total_labels"]),
        base_label_set=frozenset(int(b) for b in truth["base_label_set"]),
    )
    report = evaluate_stream(result)
    text = artifacts.dump_json(report.to_json_dict())
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    spec_data = artifacts.load_json(args.spec)
    if args.seed is not None:
        spec_data["seed"] = args.seed
    spec = BenchmarkSpec(**spec_data)
    bench = generate_benchmark(spec)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_feature_file(
        out_dir / "support.pacf", bench.support_features, bench.support_labels
    )
    write_feature_file(out_dir / "stream.pacf", bench.stream_features)
    labels = set(int(t) for t in bench.stream_labels)
    artifacts.write_json(
        out_dir / "truth.json",
        artifacts.truth_sidecar_dict(
            bench.stream_labels,
            range(spec.num_base_classes),
            len(labels),
        ),
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="protostream",
        description="Streaming prototype discovery pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic benchmark")
    p.add_argument("--spec", required=True, help="benchmark spec JSON")
    p.add_argument("--out-dir", required=True, dest="out_dir")
    p.add_argument("--seed", type=int, help="override the spec seed")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", help="calibrate thresholds from support")
    p.add_argument("--support", required=True, help="labeled support PACF")
    p.add_argument("--classifier", help="optional raw classifier directions PACF")
    p.add_argument("--out", required=True, help="calibration artifact JSON")
    _add_space_flags(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("stream", help="run the engine over a query stream")
    p.add_argument("--calibration", required=True)
    p.add_argument("--stream", required=True, help="query stream PACF")
    p.add_argument("--out", required=True, help="decision trace JSONL")
    p.add_argument("--snapshot", help="final memory snapshot JSON")
    p.set_defaults(func=cmd_stream)

    p = sub.add_parser("regions", help="per-sample decision-region CSV")
    p.add_argument("--calibration", required=True)
    p.add_argument("--stream", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_regions)

    p = sub.add_parser("eval", help="score a decision trace against truth")
    p.add_argument("--trace", required=True, help="decision trace JSONL")
    p.add_argument("--truth", required=True, help="ground-truth sidecar JSON")
    p.add_argument("--out", help="evaluation report JSON")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="per-sample latency percentiles")
    p.add_argument("--calibration", required=True)
    p.add_argument("--stream", required=True)
    p.add_argument("--out", help="latency summary JSON")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ProtostreamError as exc:
        print(f"error: {exc.__class__.__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
