"""Export manifest: everything one export run depends on, in one place."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

DEFAULT_CHECKPOINT = "hub:facebookresearch/dino:main#dino_vitb16"


@dataclass(frozen=True)
class ExportManifest:
    """Declarative description of one feature-export run.

    `class_to_id` must assign dense integer ids starting at 0.
    `base_classes` names the classes whose samples are split between the
    labeled support file and the query stream (fraction `support_fraction`
    to support, per class, in sorted-filename order); classes not listed
    are treated as novel and contribute every sample to the stream. The
    default (None) treats every class as base.
    """

    dataset_root: Path
    class_to_id: dict
    output_dir: Path
    checkpoint: str = DEFAULT_CHECKPOINT
    projection: str | None = None
    base_classes: tuple | None = None
    support_fraction: float = 0.5
    batch_size: int = 16
    image_size: int = 224

    def __post_init__(self) -> None:
        object.__setattr__(self, "dataset_root", Path(self.dataset_root))
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        if not self.class_to_id:
            raise ValueError("class_to_id must name at least one class")
        ids = sorted(int(v) for v in self.class_to_id.values())
        if ids != list(range(len(self.class_to_id))):
            raise ValueError(
                f"class ids must be dense from 0, got {ids}"
            )
        if not 0.0 < self.support_fraction < 1.0:
            raise ValueError("support_fraction must lie strictly in (0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.image_size < 1:
            raise ValueError("image_size must be >= 1")
        if self.base_classes is not None:
            base = tuple(self.base_classes)
            unknown = set(base) - set(self.class_to_id)
            if unknown:
                raise ValueError(f"base classes not in class map: {sorted(unknown)}")
            if not base:
                raise ValueError("base_classes, when given, must be non-empty")
            object.__setattr__(self, "base_classes", base)

    @property
    def num_classes(self) -> int:
        return len(self.class_to_id)

    def effective_base_classes(self) -> tuple:
        if self.base_classes is None:
            return tuple(sorted(self.class_to_id))
        return tuple(sorted(self.base_classes))


def manifest_from_root(root, output_dir, **overrides) -> ExportManifest:
    """Build a manifest by scanning `root` for class subdirectories.

    Classes are the immediate subdirectory names, assigned dense ids in
    sorted order (the conventional image-folder layout).
    """
    root = Path(root)
    names = sorted(p.name for p in root.iterdir() if p.is_dir())
    if not names:
        raise ValueError(f"{root}: no class subdirectories found")
    class_to_id = {name: i for i, name in enumerate(names)}
    return ExportManifest(
        dataset_root=root,
        class_to_id=class_to_id,
        output_dir=Path(output_dir),
        **overrides,
    )


def load_manifest(path) -> ExportManifest:
    """Read a manifest from flat JSON."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if "base_classes" in data and data["base_classes"] is not None:
        data["base_classes"] = tuple(data["base_classes"])
    return ExportManifest(**data)
