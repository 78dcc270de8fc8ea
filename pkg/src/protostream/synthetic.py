"""Synthetic benchmarks: von Mises-Fisher class clusters on the sphere.

Benchmarks mirror the streaming protocol: base classes contribute a
labeled support split plus a stream split, novel classes appear only in
the stream. Features are emitted raw; the pipeline is expected to
standardize them exactly as it would real embeddings.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SpecInfeasible
from .geometry import ZERO_NORM_TOL

SCHEME_ORTHONORMAL = "random-orthonormal"
SCHEME_UNIFORM = "uniform-random"


@dataclass(frozen=True)
class BenchmarkSpec:
    """Declarative description of one synthetic streaming benchmark.

    samples_per_class_support counts support draws per base class;
    samples_per_class_stream counts stream draws per class (base classes
    contribute that many on top of their support draws, novel classes are
    stream-only). support_fraction documents the base-class split and must
    agree with the two counts.
    """

    d: int
    num_base_classes: int
    num_novel_classes: int
    kappa_true: object
    samples_per_class_support: int
    samples_per_class_stream: int
    support_fraction: float = 0.5
    seed: int = 0
    mean_direction_scheme: str = SCHEME_ORTHONORMAL

    def __post_init__(self) -> None:
        if self.d < 2:
            raise SpecInfeasible(f"d must be >= 2, got {self.d}")
        if self.num_base_classes < 1:
            raise SpecInfeasible("need at least one base class")
        if self.num_novel_classes < 0:
            raise SpecInfeasible("novel class count cannot be negative")
        if self.samples_per_class_support < 1:
            raise SpecInfeasible("support draws per base class must be >= 1")
        if self.samples_per_class_stream < 1:
            raise SpecInfeasible("stream draws per class must be >= 1")
        if not 0.0 < self.support_fraction < 1.0:
            raise SpecInfeasible("support_fraction must lie strictly in (0, 1)")
        declared = self.samples_per_class_support / (
            self.samples_per_class_support + self.samples_per_class_stream
        )
        if abs(self.support_fraction - declared) > 1e-9:
            raise SpecInfeasible(
                f"support_fraction {self.support_fraction} disagrees with the "
                f"per-class counts (implied {declared:.6f})"
            )
        if self.mean_direction_scheme not in (SCHEME_ORTHONORMAL, SCHEME_UNIFORM):
            raise SpecInfeasible(
                f"unknown mean_direction_scheme {self.mean_direction_scheme!r}"
            )
        if (
            self.mean_direction_scheme == SCHEME_ORTHONORMAL
            and self.num_classes > self.d
        ):
            raise SpecInfeasible(
                f"{self.num_classes} orthonormal class means do not fit in d={self.d}"
            )
        kappas = np.asarray(self.kappa_true, dtype=np.float64)
        if kappas.ndim == 0:
            kappas = np.full(self.num_classes, float(kappas))
        if kappas.shape != (self.num_classes,):
            raise SpecInfeasible(
                f"kappa_true must be a scalar or one value per class "
                f"({self.num_classes}), got shape {kappas.shape}"
            )
        if np.any(kappas < 0) or not np.all(np.isfinite(kappas)):
            raise SpecInfeasible("kappa_true entries must be finite and >= 0")
        object.__setattr__(self, "kappa_true", tuple(float(k) for k in kappas))

    @property
    def num_classes(self) -> int:
        return self.num_base_classes + self.num_novel_classes


@dataclass(frozen=True)
class Benchmark:
    """Realised draws: raw unit features plus integer labels."""

    support_features: np.ndarray
    support_labels: np.ndarray
    stream_features: np.ndarray
    stream_labels: np.ndarray
    class_means: np.ndarray


def _unit_orthogonal_noise(mu: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    """Unit tangent directions orthogonal to mu, uniformly distributed."""
    d = mu.shape[0]
    out = np.empty((count, d), dtype=np.float64)
    pending = np.arange(count)
    while pending.size:
        g = rng.standard_normal((pending.size, d))
        g -= np.outer(g @ mu, mu)
        norms = np.linalg.norm(g, axis=1)
        good = norms > ZERO_NORM_TOL
        out[pending[good]] = g[good] / norms[good, None]
        pending = pending[~good]
    return out


def _sample_axial(kappa: float, d: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Draw the cosine-to-mean component by rejection sampling.

    Standard scheme for the von Mises-Fisher marginal: envelope built
    from a symmetric Beta variate, accepted against the exact density.
    kappa = 0 degenerates to the uniform-sphere marginal and accepts
    every proposal.
    """
    m = d - 1
    b = m / (np.sqrt(4.0 * kappa * kappa + m * m) + 2.0 * kappa)
    x = (1.0 - b) / (1.0 + b)
    c = kappa * x + m * np.log(1.0 - x * x)
    out = np.empty(count, dtype=np.float64)
    pending = count
    while pending:
        z = rng.beta(m / 2.0, m / 2.0, size=pending)
        w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z)
        u = rng.uniform(size=pending)
        with np.errstate(divide="ignore"):
            accept = kappa * w + m * np.log(1.0 - x * w) - c >= np.log(u)
        n_ok = int(accept.sum())
        if n_ok:
            out[count - pending : count - pending + n_ok] = w[accept][:n_ok]
            pending -= n_ok
    return out


def sample_vmf(mu, kappa: float, count: int, rng: np.random.Generator) -> np.ndarray:
    """Draw `count` unit vectors from vMF(mu, kappa)."""
    mean = np.asarray(mu, dtype=np.float64)
    if mean.ndim != 1 or mean.shape[0] < 2:
        raise ValueError("mu must be a 1-D unit vector with d >= 2")
    if abs(float(np.linalg.norm(mean)) - 1.0) > 1e-6:
        raise ValueError("mu must have unit norm")
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    if count < 0:
        raise ValueError("count must be >= 0")
    if count == 0:
        return np.zeros((0, mean.shape[0]), dtype=np.float64)
    w = _sample_axial(float(kappa), mean.shape[0], count, rng)
    v = _unit_orthogonal_noise(mean, count, rng)
    return w[:, None] * mean + np.sqrt(np.maximum(1.0 - w * w, 0.0))[:, None] * v


def _class_means(spec: BenchmarkSpec, rng: np.random.Generator) -> np.ndarray:
    k = spec.num_classes
    if spec.mean_direction_scheme == SCHEME_ORTHONORMAL:
        g = rng.standard_normal((spec.d, k))
        q, r = np.linalg.qr(g)
        q = q * np.sign(np.diag(r))  # fix the sign convention
        return q.T.copy()
    means = np.empty((k, spec.d), dtype=np.float64)
    for i in range(k):
        while True:
            g = rng.standard_normal(spec.d)
            norm = float(np.linalg.norm(g))
            if norm > ZERO_NORM_TOL:
                means[i] = g / norm
                break
    return means


def generate_benchmark(spec: BenchmarkSpec) -> Benchmark:
    """Materialise a benchmark deterministically from its seed.

    Each class consumes an independent child of the seed sequence, so
    per-class generation order cannot leak across classes; the stream
    shuffle consumes its own child.
    """
    seed_seq = np.random.SeedSequence(spec.seed)
    children = seed_seq.spawn(spec.num_classes + 2)
    means = _class_means(spec, np.random.default_rng(children[0]))

    support_parts: list = []
    support_labels: list = []
    stream_parts: list = []
    stream_labels: list = []
    for cls in range(spec.num_classes):
        cls_rng = np.random.default_rng(children[2 + cls])
        kappa = spec.kappa_true[cls]
        if cls < spec.num_base_classes:
            n_total = spec.samples_per_class_support + spec.samples_per_class_stream
            draws = sample_vmf(means[cls], kappa, n_total, cls_rng)
            support_parts.append(draws[: spec.samples_per_class_support])
            support_labels.extend([cls] * spec.samples_per_class_support)
            stream_parts.append(draws[spec.samples_per_class_support :])
            stream_labels.extend([cls] * spec.samples_per_class_stream)
        else:
            draws = sample_vmf(means[cls], kappa, spec.samples_per_class_stream, cls_rng)
            stream_parts.append(draws)
            stream_labels.extend([cls] * spec.samples_per_class_stream)

    support = np.concatenate(support_parts, axis=0)
    stream = np.concatenate(stream_parts, axis=0)
    stream_lab = np.asarray(stream_labels, dtype=np.int64)
    shuffle_rng = np.random.default_rng(children[1])
    perm = shuffle_rng.permutation(stream.shape[0])
    return Benchmark(
        support_features=support,
        support_labels=np.asarray(support_labels, dtype=np.int64),
        stream_features=stream[perm],
        stream_labels=stream_lab[perm],
        class_means=means,
    )
