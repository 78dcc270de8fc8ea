import numpy as np
import pytest
import torch
from PIL import Image


class TinyBackbone(torch.nn.Module):
    """Pool to 2x2, flatten, project: (B, 3, S, S) -> (B, 12)."""

    def __init__(self):
        super().__init__()
        self.pool = torch.nn.AdaptiveAvgPool2d(2)
        self.proj = torch.nn.Linear(12, 12)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        pooled = self.pool(x).flatten(1)
        return self.proj(pooled)


@pytest.fixture(scope="session")
def checkpoint_path(tmp_path_factory):
    """A deterministic TorchScript checkpoint on disk."""
    torch.manual_seed(0)
    module = TinyBackbone().eval()
    scripted = torch.jit.script(module)
    path = tmp_path_factory.mktemp("ckpt") / "tiny.pt"
    scripted.save(str(path))
    return path


def make_image(path, seed, size=32):
    """A deterministic RGB image with per-seed texture."""
    rng = np.random.default_rng(seed)
    pixels = rng.integers(0, 256, size=(size, size, 3), dtype=np.uint8)
    # A strong per-seed color cast so classes are separable.
    cast = np.zeros(3, dtype=np.uint8)
    cast[seed % 3] = 200
    pixels = ((pixels.astype(np.int32) + cast) // 2).astype(np.uint8)
    Image.fromarray(pixels, "RGB").save(path)


@pytest.fixture(scope="session")
def corpus_root(tmp_path_factory):
    """20-image toy corpus: 5 classes x 4 images."""
    root = tmp_path_factory.mktemp("corpus")
    for cls in range(5):
        class_dir = root / f"class{cls}"
        class_dir.mkdir()
        for i in range(4):
            make_image(class_dir / f"img{i}.png", seed=cls * 10 + i)
    return root
