#!/usr/bin/env python3
"""Run the full pipeline on one synthetic benchmark and print the report.

Example:
    python scripts/run_synthetic.py --d 16 --base 10 --novel 10 \
        --kappa 50 --per-class 100 --seed 0 --scheme uniform-random
"""

import argparse
import sys

import numpy as np

from protostream import (
    BenchmarkSpec,
    LabeledSupportSet,
    SpaceConfig,
    StreamResult,
    StreamState,
    build_class_prototypes,
    calibrate_all,
    compute_support_stats,
    evaluate_stream,
    generate_benchmark,
    select_base_references,
    standardize,
    standardize_batch,
    step,
)


def parse_args(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--d", type=int, default=16)
    parser.add_argument("--base", type=int, default=10)
    parser.add_argument("--novel", type=int, default=10)
    parser.add_argument("--kappa", type=float, default=50.0)
    parser.add_argument("--per-class", type=int, default=100, dest="per_class")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument(
        "--scheme",
        default="uniform-random",
        choices=["uniform-random", "random-orthonormal"],
    )
    parser.add_argument("--passes", type=int, default=3)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    args = parse_args(argv)
    spec = BenchmarkSpec(
        d=args.d,
        num_base_classes=args.base,
        num_novel_classes=args.novel,
        kappa_true=args.kappa,
        samples_per_class_support=args.per_class,
        samples_per_class_stream=args.per_class,
        support_fraction=0.5,
        seed=args.seed,
        mean_direction_scheme=args.scheme,
    )
    bench = generate_benchmark(spec)
    cfg = SpaceConfig(d=spec.d)
    stats = compute_support_stats(bench.support_features)
    support = LabeledSupportSet(
        embeddings=standardize_batch(bench.support_features, stats, cfg),
        labels=bench.support_labels,
        num_classes=spec.num_base_classes,
    )
    bank = select_base_references(support, build_class_prototypes(support))
    thresholds, cal_report = calibrate_all(
        support, bank, cfg, passes=args.passes, seed=args.seed
    )
    print(f"support: {support.size} samples, {spec.num_base_classes} classes")
    print(
        "thresholds: "
        f"tau_hi={thresholds.tau_hi:.4f} tau_lo={thresholds.tau_lo:.4f} "
        f"tau_birth_sup={thresholds.tau_birth_sup:.4f} "
        f"tau_create={thresholds.tau_create:.4f}"
    )
    print(
        "proxy balanced accuracy: "
        f"routing={cal_report.routing_balanced_accuracy:.3f} "
        f"birth={cal_report.birth_balanced_accuracy:.3f} "
        f"create={cal_report.create_balanced_accuracy:.3f}"
    )

    state = StreamState.initial(bank, thresholds, cfg)
    predictions = []
    decisions: dict = {}
    for row in bench.stream_features:
        label, trace = step(standardize(row, stats, cfg), state)
        predictions.append(label)
        decisions[trace.decision] = decisions.get(trace.decision, 0) + 1

    result = StreamResult(
        predictions=np.asarray(predictions),
        truths=bench.stream_labels,
        num_total_labels=int(np.unique(bench.stream_labels).size),
        base_label_set=frozenset(range(spec.num_base_classes)),
    )
    report = evaluate_stream(result)
    print(f"stream: {result.size} samples, decisions {decisions}")
    print(
        f"clusters: estimated={report.estimated_cluster_count} "
        f"retained={report.retained_count} "
        f"dropped_samples={report.dropped_sample_count}"
    )
    print(
        f"strict: all={report.strict_all:.4f} "
        f"old={report.strict_old:.4f} new={report.strict_new:.4f}"
    )
    print(
        f"greedy: all={report.greedy_all:.4f} "
        f"old={report.greedy_old:.4f} new={report.greedy_new:.4f}"
    )
    print(
        f"final birth threshold: {state.tau_birth_current:.4f} "
        f"(supervised {thresholds.tau_birth_sup:.4f}, eta {state.eta:.3f})"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
