"""JSON artifact round trips."""

import numpy as np

from protostream.artifacts import (
    calibration_artifact_dict,
    dump_json,
    load_calibration_artifact,
    load_json,
    snapshot_dict,
    truth_sidecar_dict,
    write_json,
)
from protostream.calibration import (
    LabeledSupportSet,
    build_class_prototypes,
    calibrate_all,
    select_base_references,
)
from protostream.engine import StreamState, step
from protostream.geometry import SpaceConfig, SupportStats


def _toy_calibration():
    support = LabeledSupportSet(np.eye(3), np.arange(3), 3)
    bank = select_base_references(support, build_class_prototypes(support))
    cfg = SpaceConfig(d=3)
    thresholds, report = calibrate_all(support, bank, cfg, passes=2, seed=1)
    stats = SupportStats(mean=np.zeros(3), variance=np.ones(3))
    return cfg, stats, bank, thresholds, report


def test_calibration_artifact_round_trip(tmp_path):
    cfg, stats, bank, thresholds, report = _toy_calibration()
    path = tmp_path / "calib.json"
    write_json(path, calibration_artifact_dict(cfg, stats, bank, thresholds, report))
    cfg2, stats2, bank2, thresholds2, report2 = load_calibration_artifact(path)
    assert cfg2 == cfg
    np.testing.assert_array_equal(stats2.mean, stats.mean)
    np.testing.assert_array_equal(stats2.variance, stats.variance)
    np.testing.assert_array_equal(bank2.references, bank.references)
    np.testing.assert_array_equal(bank2.class_sizes, bank.class_sizes)
    assert bank2.median_class_size == bank.median_class_size
    assert bank2.source_flags == bank.source_flags
    assert thresholds2 == thresholds
    assert report2 == report


def test_json_is_stable_and_newline_terminated(tmp_path):
    payload = {"b": 1.5, "a": [1, 2]}
    text = dump_json(payload)
    assert text.endswith("\n")
    path = tmp_path / "x.json"
    write_json(path, payload)
    assert path.read_text(encoding="utf-8") == text
    assert load_json(path) == payload


def test_snapshot_dict_counts():
    cfg, _, bank, thresholds, _ = _toy_calibration()
    state = StreamState.initial(bank, thresholds, cfg)
    counts = {"AssignBase": 0, "AssignNovel": 0, "Create": 0}
    rng = np.random.default_rng(0)
    for _ in range(50):
        u = rng.normal(size=3)
        u /= np.linalg.norm(u)
        _, trace = step(u, state)
        counts[trace.decision] += 1
    snap = snapshot_dict(state, counts)
    assert snap["num_base"] == 3
    assert snap["steps"] == 50
    assert snap["total_prototypes"] == snap["num_base"] + snap["num_novel"]
    assert sum(snap["decision_counts"].values()) == 50
    assert len(snap["novel_prototypes"]) == snap["num_novel"]
    for proto in snap["novel_prototypes"]:
        direction = np.asarray(proto["direction"])
        resultant = np.asarray(proto["resultant"])
        np.testing.assert_allclose(
            direction, resultant / np.linalg.norm(resultant), atol=1e-12
        )


def test_truth_sidecar_dict():
    payload = truth_sidecar_dict(np.array([0, 2, 1]), range(2), 3)
    assert payload == {
        "truths": [0, 2, 1],
        "base_label_set": [0, 1],
        "num_total_labels": 3,
    }
