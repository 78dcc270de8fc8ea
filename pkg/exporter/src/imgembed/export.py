"""The export run: scan, embed, split, write.

Features are written raw (no standardization, no normalization): the
consuming pipeline owns the whitening-and-normalize transform and
calibrates it on the support split alone.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from math import floor
from pathlib import Path

import numpy as np
import torch

from protostream import write_feature_file

from .corpus import load_image, scan_corpus
from .manifest import ExportManifest
from .model import FeatureExtractor

SUPPORT_FILE = "support.pacf"
STREAM_FILE = "stream.pacf"
LABEL_MAP_FILE = "label_map.json"
TRUTH_FILE = "truth.json"


@dataclass(frozen=True)
class ExportResult:
    """What one export run produced."""

    support_count: int
    stream_count: int
    dim: int
    skipped: tuple
    support_path: Path
    stream_path: Path
    label_map_path: Path
    truth_path: Path


def split_count(total: int, fraction: float) -> int:
    """Support share of a base class: fraction of `total`, half rounded up.

    At the default fraction 0.5 this keeps every base class represented
    in the support file, single-image classes included.
    """
    return int(floor(total * fraction + 0.5))


def export_features(manifest: ExportManifest, extractor: FeatureExtractor | None = None) -> ExportResult:
    """Embed every readable image and write the four output files.

    Unreadable images are skipped with a warning and recorded (relative
    paths) in the label-map sidecar. Pass `extractor` to reuse an already
    loaded model; otherwise the manifest's checkpoint is loaded.
    """
    if extractor is None:
        extractor = FeatureExtractor.from_identifiers(
            manifest.checkpoint, manifest.projection
        )
    records = scan_corpus(manifest.dataset_root, manifest.class_to_id)

    tensors = []
    kept = []
    skipped = []
    for path, name, label in records:
        try:
            tensors.append(load_image(path, manifest.image_size))
        except Exception as exc:
            warnings.warn(f"skipping unreadable image: {exc}")
            skipped.append(str(path.relative_to(manifest.dataset_root)))
            continue
        kept.append((name, label))
    if not kept:
        raise ValueError("no readable images in the corpus")

    features = np.concatenate(
        [
            extractor.extract(torch.stack(tensors[i : i + manifest.batch_size]))
            for i in range(0, len(tensors), manifest.batch_size)
        ],
        axis=0,
    )
    dim = features.shape[1]

    base = set(manifest.effective_base_classes())
    support_idx: list = []
    stream_idx: list = []
    by_class: dict = {}
    for i, (name, _) in enumerate(kept):
        by_class.setdefault(name, []).append(i)
    for name in sorted(by_class):
        indices = by_class[name]  # already in sorted-filename order
        if name in base:
            n_support = split_count(len(indices), manifest.support_fraction)
            support_idx.extend(indices[:n_support])
            stream_idx.extend(indices[n_support:])
        else:
            stream_idx.extend(indices)

    labels = np.array([label for _, label in kept], dtype=np.int32)
    out_dir = Path(manifest.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    support_path = out_dir / SUPPORT_FILE
    stream_path = out_dir / STREAM_FILE
    write_feature_file(support_path, features[support_idx], labels[support_idx])
    write_feature_file(stream_path, features[stream_idx])

    label_map_path = out_dir / LABEL_MAP_FILE
    label_map = {
        "classes": {name: int(i) for name, i in sorted(manifest.class_to_id.items())},
        "base_classes": sorted(base),
        "dim": int(dim),
        "checkpoint": manifest.checkpoint,
        "projection": manifest.projection,
        "image_size": manifest.image_size,
        "support_count": len(support_idx),
        "stream_count": len(stream_idx),
        "skipped": skipped,
    }
    label_map_path.write_text(json.dumps(label_map, indent=2) + "\n", encoding="utf-8")

    stream_truths = [int(labels[i]) for i in stream_idx]
    truth_path = out_dir / TRUTH_FILE
    truth = {
        "truths": stream_truths,
        "base_label_set": sorted(int(manifest.class_to_id[n]) for n in base),
        "num_total_labels": len(set(stream_truths)),
    }
    truth_path.write_text(json.dumps(truth, indent=2) + "\n", encoding="utf-8")

    return ExportResult(
        support_count=len(support_idx),
        stream_count=len(stream_idx),
        dim=int(dim),
        skipped=tuple(skipped),
        support_path=support_path,
        stream_path=stream_path,
        label_map_path=label_map_path,
        truth_path=truth_path,
    )
