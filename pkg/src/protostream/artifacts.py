"""Deterministic JSON artifacts shared between CLI commands.

Key order is fixed by construction and floats go through Python's
shortest round-trip repr, so identical inputs always serialize to
identical bytes.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .calibration import (
    BaseReferenceBank,
    CalibrationReport,
    ThresholdSet,
)
from .engine import StreamState
from .geometry import SpaceConfig, SupportStats


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dump_json(obj), encoding="utf-8")


def load_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _floats(values) -> list:
    return [float(v) for v in np.asarray(values, dtype=np.float64).ravel()]


def _float_rows(matrix) -> list:
    return [_floats(row) for row in np.asarray(matrix, dtype=np.float64)]


def space_config_dict(cfg: SpaceConfig) -> dict:
    return {
        "d": cfg.d,
        "epsilon": cfg.epsilon,
        "temperature_T": cfg.temperature_T,
        "dirichlet_alpha": cfg.dirichlet_alpha,
        "maturity_beta": cfg.maturity_beta,
        "spread_c": cfg.spread_c,
    }


def space_config_from_dict(data: dict) -> SpaceConfig:
    return SpaceConfig(
        d=int(data["d"]),
        epsilon=float(data["epsilon"]),
        temperature_T=float(data["temperature_T"]),
        dirichlet_alpha=float(data["dirichlet_alpha"]),
        maturity_beta=float(data["maturity_beta"]),
        spread_c=float(data["spread_c"]),
    )


def calibration_artifact_dict(
    cfg: SpaceConfig,
    stats: SupportStats,
    bank: BaseReferenceBank,
    thresholds: ThresholdSet,
    report: CalibrationReport,
) -> dict:
    return {
        "space": space_config_dict(cfg),
        "support_stats": {
            "mean": _floats(stats.mean),
            "variance": _floats(stats.variance),
        },
        "reference_bank": {
            "references": _float_rows(bank.references),
            "class_sizes": [int(s) for s in bank.class_sizes],
            "median_class_size": float(bank.median_class_size),
            "source_flags": list(bank.source_flags),
        },
        "thresholds": {
            "tau_hi": thresholds.tau_hi,
            "tau_lo": thresholds.tau_lo,
            "tau_birth_raw": thresholds.tau_birth_raw,
            "sigma_pos": thresholds.sigma_pos,
            "tau_birth_sup": thresholds.tau_birth_sup,
            "tau_create": thresholds.tau_create,
        },
        "report": {
            "margin_positive": report.margin_positive,
            "margin_negative": report.margin_negative,
            "base_affinity_positive": report.base_affinity_positive,
            "birth_positive": report.birth_positive,
            "birth_negative": report.birth_negative,
            "create_positive": report.create_positive,
            "create_negative": report.create_negative,
            "routing_balanced_accuracy": report.routing_balanced_accuracy,
            "birth_balanced_accuracy": report.birth_balanced_accuracy,
            "create_balanced_accuracy": report.create_balanced_accuracy,
            "routing_candidate_count": report.routing_candidate_count,
            "birth_candidate_count": report.birth_candidate_count,
            "create_candidate_count": report.create_candidate_count,
            "replay_passes": report.replay_passes,
            "replay_seed": report.replay_seed,
        },
    }


def load_calibration_artifact(path) -> tuple:
    """Returns (cfg, stats, bank, thresholds, report)."""
    data = load_json(path)
    cfg = space_config_from_dict(data["space"])
    stats = SupportStats(
        mean=np.asarray(data["support_stats"]["mean"], dtype=np.float64),
        variance=np.asarray(data["support_stats"]["variance"], dtype=np.float64),
    )
    bank_data = data["reference_bank"]
    bank = BaseReferenceBank(
        references=np.asarray(bank_data["references"], dtype=np.float64),
        class_sizes=np.asarray(bank_data["class_sizes"], dtype=np.int64),
        median_class_size=float(bank_data["median_class_size"]),
        source_flags=tuple(bank_data["source_flags"]),
    )
    thr = data["thresholds"]
    thresholds = ThresholdSet(
        tau_hi=float(thr["tau_hi"]),
        tau_lo=float(thr["tau_lo"]),
        tau_birth_raw=float(thr["tau_birth_raw"]),
        sigma_pos=float(thr["sigma_pos"]),
        tau_birth_sup=float(thr["tau_birth_sup"]),
        tau_create=float(thr["tau_create"]),
    )
    rep = data["report"]
    report = CalibrationReport(
        margin_positive=rep["margin_positive"],
        margin_negative=rep["margin_negative"],
        base_affinity_positive=rep["base_affinity_positive"],
        birth_positive=rep["birth_positive"],
        birth_negative=rep["birth_negative"],
        create_positive=rep["create_positive"],
        create_negative=rep["create_negative"],
        routing_balanced_accuracy=float(rep["routing_balanced_accuracy"]),
        birth_balanced_accuracy=float(rep["birth_balanced_accuracy"]),
        create_balanced_accuracy=float(rep["create_balanced_accuracy"]),
        routing_candidate_count=int(rep["routing_candidate_count"]),
        birth_candidate_count=int(rep["birth_candidate_count"]),
        create_candidate_count=int(rep["create_candidate_count"]),
        replay_passes=int(rep["replay_passes"]),
        replay_seed=int(rep["replay_seed"]),
    )
    return cfg, stats, bank, thresholds, report


def snapshot_dict(state: StreamState, decision_counts: dict) -> dict:
    mem = state.memory
    return {
        "num_base": mem.num_base,
        "num_novel": mem.num_novel,
        "total_prototypes": mem.size,
        "steps": state.step_index,
        "base_counts": [int(c) for c in mem.base_counts],
        "novel_prototypes": [
            {
                "count": int(mem.novel_counts[i]),
                "resultant": _floats(mem.novel_resultants[i]),
                "direction": _floats(mem.novel_directions[i]),
            }
            for i in range(mem.num_novel)
        ],
        "tau_birth_final": state.tau_birth_current,
        "eta_final": state.eta,
        "decision_counts": {
            "AssignBase": int(decision_counts.get("AssignBase", 0)),
            "AssignNovel": int(decision_counts.get("AssignNovel", 0)),
            "Create": int(decision_counts.get("Create", 0)),
        },
    }


def truth_sidecar_dict(truths, base_label_set, num_total_labels: int) -> dict:
    return {
        "truths": [int(t) for t in truths],
        "base_label_set": sorted(int(b) for b in base_label_set),
        "num_total_labels": int(num_total_labels),
    }
