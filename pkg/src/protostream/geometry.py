"""Spherical embedding space primitives.

All downstream scoring happens on the unit sphere obtained by whitening
raw feature vectors with diagonal support statistics and normalizing.
This module owns those coordinates plus the two closed forms the
decision scores are built from: the log density of the uniform
distribution on S^(d-1) and the shrunk maximum-likelihood concentration
of a von Mises-Fisher cluster summarised by (count, resultant norm).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import lgamma, log, pi

import numpy as np

from .errors import DimMismatch, EmptyInput, ZeroVector

# Norm below which a whitened vector is considered degenerate.
ZERO_NORM_TOL = 1e-12
# Mean resultant lengths are clamped strictly inside [0, 1) so the
# concentration estimate stays finite even for perfectly tight clusters.
R_BAR_CLAMP = 1.0 - 1e-6


@dataclass(frozen=True)
class SpaceConfig:
    """Hyperparameters of the standardized embedding space.

    d               embedding dimensionality (>= 2)
    epsilon         variance floor added inside the inverse square root
    temperature_T   softmax temperature dividing every cosine score
    dirichlet_alpha symmetric Dirichlet pseudo-count for size priors
    maturity_beta   exponent mapping median base size to maturity cutoff
    spread_c        multiplier on the support spread correction
    """

    d: int
    epsilon: float = 1e-5
    temperature_T: float = 1.0
    dirichlet_alpha: float = 1e6
    maturity_beta: float = 0.5
    spread_c: float = 1.0

    def __post_init__(self) -> None:
        if self.d < 2:
            raise ValueError(f"d must be >= 2, got {self.d}")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not self.temperature_T > 0:
            raise ValueError("temperature_T must be positive")
        if not self.dirichlet_alpha > 0:
            raise ValueError("dirichlet_alpha must be positive")
        if not 0.0 < self.maturity_beta <= 1.0:
            raise ValueError("maturity_beta must lie in (0, 1]")
        if self.spread_c < 0:
            raise ValueError("spread_c must be non-negative")


@dataclass(frozen=True)
class SupportStats:
    """Per-coordinate mean and population variance of the raw support set."""

    mean: np.ndarray
    variance: np.ndarray

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=np.float64)
        variance = np.asarray(self.variance, dtype=np.float64)
        if mean.ndim != 1 or variance.shape != mean.shape:
            raise DimMismatch("mean and variance must be 1-D with equal shape")
        if np.any(variance < 0):
            raise ValueError("variance entries must be non-negative")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "variance", variance)

    @property
    def d(self) -> int:
        return self.mean.shape[0]


def compute_support_stats(features) -> SupportStats:
    """Arithmetic mean and population variance (divide by N) per coordinate."""
    arr = np.asarray(features, dtype=np.float64)
    if arr.ndim != 2:
        raise DimMismatch(f"expected a 2-D array of features, got ndim={arr.ndim}")
    if arr.shape[0] == 0:
        raise EmptyInput("support statistics need at least one feature vector")
    return SupportStats(mean=arr.mean(axis=0), variance=arr.var(axis=0))


def _inv_std(stats: SupportStats, cfg: SpaceConfig) -> np.ndarray:
    # The floor sits inside the inverse square root: (variance + eps)^(-1/2).
    return 1.0 / np.sqrt(stats.variance + cfg.epsilon)


def standardize(h, stats: SupportStats, cfg: SpaceConfig) -> np.ndarray:
    """Whiten one raw feature vector and project it to the unit sphere."""
    vec = np.asarray(h, dtype=np.float64)
    if vec.shape != (stats.d,):
        raise DimMismatch(f"feature has shape {vec.shape}, expected ({stats.d},)")
    if stats.d != cfg.d:
        raise DimMismatch(f"stats dimension {stats.d} != configured d {cfg.d}")
    scaled = (vec - stats.mean) * _inv_std(stats, cfg)
    norm = float(np.linalg.norm(scaled))
    if norm < ZERO_NORM_TOL:
        raise ZeroVector(f"whitened vector norm {norm:.3e} below {ZERO_NORM_TOL}")
    return scaled / norm


def standardize_batch(features, stats: SupportStats, cfg: SpaceConfig) -> np.ndarray:
    """Vectorized `standardize` over the rows of a (N, d) array."""
    arr = np.asarray(features, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != stats.d:
        raise DimMismatch(f"expected (N, {stats.d}) features, got {arr.shape}")
    if stats.d != cfg.d:
        raise DimMismatch(f"stats dimension {stats.d} != configured d {cfg.d}")
    scaled = (arr - stats.mean) * _inv_std(stats, cfg)
    norms = np.linalg.norm(scaled, axis=1)
    bad = np.flatnonzero(norms < ZERO_NORM_TOL)
    if bad.size:
        raise ZeroVector(f"whitened vector at row {int(bad[0])} has near-zero norm")
    return scaled / norms[:, None]


def log_uniform_density(d: int) -> float:
    """Log density of the uniform distribution on the unit sphere in R^d.

    This is minus the log surface area of S^(d-1):
    log Gamma(d/2) - log 2 - (d/2) log pi.
    """
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    return lgamma(d / 2.0) - log(2.0) - (d / 2.0) * log(pi)


def vmf_concentration(resultant_norm: float, n: int, d: int) -> float:
    """Shrunk concentration estimate for a cluster of n unit vectors.

    Uses the standard approximation kappa = r(d - r^2) / (1 - r^2) on the
    clamped mean resultant length r = |R| / n, multiplied by the shrinkage
    factor (n - 1) / (n + 1). A singleton therefore has concentration
    exactly zero: one observation carries no directional spread evidence.
    """
    if n < 1:
        raise ValueError(f"cluster size must be >= 1, got {n}")
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    if n == 1:
        return 0.0
    r_bar = min(max(resultant_norm / n, 0.0), R_BAR_CLAMP)
    base = r_bar * (d - r_bar * r_bar) / (1.0 - r_bar * r_bar)
    return base * (n - 1) / (n + 1)


def vmf_concentration_rows(resultant_norms: np.ndarray, counts: np.ndarray, d: int) -> np.ndarray:
    """Vectorized `vmf_concentration` over parallel arrays."""
    counts = np.asarray(counts, dtype=np.int64)
    if np.any(counts < 1):
        raise ValueError("cluster sizes must be >= 1")
    with np.errstate(divide="ignore", invalid="ignore"):
        r_bar = np.clip(np.asarray(resultant_norms, dtype=np.float64) / counts, 0.0, R_BAR_CLAMP)
        base = r_bar * (d - r_bar * r_bar) / (1.0 - r_bar * r_bar)
    kappa = base * (counts - 1) / (counts + 1)
    kappa[counts == 1] = 0.0
    return kappa
