"""Checkpoint loading and batched feature extraction."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch

from .errors import MissingCheckpoint

HUB_PREFIX = "hub:"


def load_module(identifier: str) -> torch.nn.Module:
    """Load a model by identifier.

    Two forms are accepted:
    * ``hub:<repo>#<entry>`` — a torch.hub repository and entrypoint
      (e.g. the default ``hub:facebookresearch/dino:main#dino_vitb16``);
    * anything else — a local TorchScript file path.

    Either way the module is returned in eval mode; any load failure
    (missing file, unreachable hub host, bad archive) is reported as
    MissingCheckpoint so callers can branch on it.
    """
    if identifier.startswith(HUB_PREFIX):
        spec = identifier[len(HUB_PREFIX):]
        repo, sep, entry = spec.partition("#")
        if not sep or not repo or not entry:
            raise MissingCheckpoint(
                f"{identifier!r}: hub identifiers look like hub:<repo>#<entry>"
            )
        try:
            module = torch.hub.load(repo, entry)
        except Exception as exc:
            raise MissingCheckpoint(f"{identifier!r}: {exc}") from exc
    else:
        path = Path(identifier)
        if not path.is_file():
            raise MissingCheckpoint(f"{path}: no such checkpoint file")
        try:
            module = torch.jit.load(str(path), map_location="cpu")
        except Exception as exc:
            raise MissingCheckpoint(f"{path}: {exc}") from exc
    module.eval()
    return module


class FeatureExtractor:
    """Backbone plus optional projection head, run batch by batch.

    The projection defaults to identity: untrained projection weights
    would only rotate the space, and the downstream pipeline standardizes
    features itself.
    """

    def __init__(self, backbone: torch.nn.Module, projection: torch.nn.Module | None = None):
        self.backbone = backbone.eval()
        self.projection = projection.eval() if projection is not None else None

    @classmethod
    def from_identifiers(cls, checkpoint: str, projection: str | None = None) -> "FeatureExtractor":
        head = load_module(projection) if projection else None
        return cls(load_module(checkpoint), head)

    @torch.no_grad()
    def extract(self, batch: torch.Tensor) -> np.ndarray:
        """Map an image batch (B, 3, S, S) to float32 features (B, d)."""
        out = self.backbone(batch)
        if self.projection is not None:
            out = self.projection(out)
        if out.ndim != 2:
            raise ValueError(
                f"model produced shape {tuple(out.shape)}, expected (batch, dim)"
            )
        return out.detach().cpu().to(torch.float32).numpy()
