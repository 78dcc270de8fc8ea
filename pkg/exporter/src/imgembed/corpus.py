"""Image-folder scanning and deterministic preprocessing."""

from __future__ import annotations

from pathlib import Path

import torch
from PIL import Image
from torchvision.transforms import functional as TF

from .errors import UnreadableImage

IMAGE_EXTENSIONS = (".jpg", ".jpeg", ".png", ".bmp", ".webp")

# Standard ImageNet statistics, the conventional eval-time normalization
# for self-supervised ViT backbones.
NORM_MEAN = (0.485, 0.456, 0.406)
NORM_STD = (0.229, 0.224, 0.225)


def scan_corpus(root: Path, class_to_id: dict) -> list:
    """List (path, class_name, label) for every image of every mapped class.

    Classes come from the manifest map; each must exist as a subdirectory
    holding at least one image. Extra subdirectories under `root` that the
    map does not mention are ignored (partial exports are legitimate).
    Order is deterministic: classes sorted by name, files sorted by name.
    """
    root = Path(root)
    records = []
    for name in sorted(class_to_id):
        class_dir = root / name
        if not class_dir.is_dir():
            raise ValueError(f"{class_dir}: class directory missing")
        files = sorted(
            p
            for p in class_dir.iterdir()
            if p.is_file() and p.suffix.lower() in IMAGE_EXTENSIONS
        )
        if not files:
            raise ValueError(f"{class_dir}: no image files")
        label = int(class_to_id[name])
        records.extend((path, name, label) for path in files)
    return records


def load_image(path: Path, image_size: int) -> torch.Tensor:
    """Decode one image to a normalized float32 tensor (3, S, S)."""
    try:
        with Image.open(path) as img:
            rgb = img.convert("RGB")
    except Exception as exc:  # PIL raises a zoo of decode errors
        raise UnreadableImage(f"{path}: {exc}") from exc
    resized = TF.resize(
        rgb,
        [image_size, image_size],
        interpolation=TF.InterpolationMode.BILINEAR,
        antialias=True,
    )
    tensor = TF.to_tensor(resized)
    return TF.normalize(tensor, NORM_MEAN, NORM_STD)
