"""Image-embedding exporter: pretrained backbone -> binary feature files."""

from .corpus import IMAGE_EXTENSIONS, load_image, scan_corpus
from .errors import ImgembedError, MissingCheckpoint, UnreadableImage
from .export import ExportResult, export_features, split_count
from .manifest import (
    DEFAULT_CHECKPOINT,
    ExportManifest,
    load_manifest,
    manifest_from_root,
)
from .model import FeatureExtractor, load_module

__all__ = [
    "DEFAULT_CHECKPOINT",
    "ExportManifest",
    "ExportResult",
    "FeatureExtractor",
    "IMAGE_EXTENSIONS",
    "ImgembedError",
    "MissingCheckpoint",
    "UnreadableImage",
    "export_features",
    "load_image",
    "load_manifest",
    "load_module",
    "manifest_from_root",
    "scan_corpus",
    "split_count",
]

__version__ = "0.1.0"
