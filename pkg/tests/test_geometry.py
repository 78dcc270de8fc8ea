"""Geometry primitives: whitening, densities, concentration estimates."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from protostream.errors import DimMismatch, EmptyInput, ZeroVector
from protostream.geometry import (
    SpaceConfig,
    SupportStats,
    compute_support_stats,
    log_uniform_density,
    standardize,
    standardize_batch,
    vmf_concentration,
    vmf_concentration_rows,
)


def test_space_config_defaults():
    cfg = SpaceConfig(d=768)
    assert cfg.epsilon == 1e-5
    assert cfg.temperature_T == 1.0
    assert cfg.dirichlet_alpha == 1e6
    assert cfg.maturity_beta == 0.5
    assert cfg.spread_c == 1.0


@pytest.mark.parametrize(
    "kwargs",
    [
        {"d": 1},
        {"d": 4, "epsilon": 0.0},
        {"d": 4, "temperature_T": 0.0},
        {"d": 4, "dirichlet_alpha": -1.0},
        {"d": 4, "maturity_beta": 0.0},
        {"d": 4, "maturity_beta": 1.5},
        {"d": 4, "spread_c": -0.1},
    ],
)
def test_space_config_rejects_bad_values(kwargs):
    with pytest.raises(ValueError):
        SpaceConfig(**kwargs)


def test_support_stats_population_variance():
    # Population variance divides by N, not N - 1.
    stats = compute_support_stats([[0.0], [2.0]])
    assert stats.mean[0] == 1.0
    assert stats.variance[0] == 1.0


def test_support_stats_errors():
    with pytest.raises(EmptyInput):
        compute_support_stats(np.zeros((0, 3)))
    with pytest.raises(DimMismatch):
        compute_support_stats(np.zeros(3))


def test_standardize_known_direction():
    # Zero mean, unit variance: whitening only rescales by (1 + eps)^(-1/2),
    # which cancels under normalization.
    cfg = SpaceConfig(d=2)
    stats = SupportStats(mean=np.zeros(2), variance=np.ones(2))
    u = standardize(np.array([3.0, 4.0]), stats, cfg)
    np.testing.assert_allclose(u, [0.6, 0.8], atol=1e-9)


def test_standardize_zero_vector():
    cfg = SpaceConfig(d=3)
    stats = SupportStats(mean=np.array([1.0, 2.0, 3.0]), variance=np.ones(3))
    with pytest.raises(ZeroVector):
        standardize(np.array([1.0, 2.0, 3.0]), stats, cfg)


def test_standardize_dim_mismatch():
    cfg = SpaceConfig(d=3)
    stats = SupportStats(mean=np.zeros(3), variance=np.ones(3))
    with pytest.raises(DimMismatch):
        standardize(np.zeros(4), stats, cfg)
    with pytest.raises(DimMismatch):
        standardize(np.zeros(4), SupportStats(np.zeros(4), np.ones(4)), cfg)


def test_standardize_batch_matches_single():
    rng = np.random.default_rng(0)
    raw = rng.normal(size=(20, 5))
    stats = compute_support_stats(raw)
    cfg = SpaceConfig(d=5)
    batch = standardize_batch(raw, stats, cfg)
    for i in range(raw.shape[0]):
        np.testing.assert_allclose(batch[i], standardize(raw[i], stats, cfg))


def test_whitened_support_is_centered():
    # Before normalization the whitened support has exactly zero mean.
    rng = np.random.default_rng(3)
    raw = rng.normal(size=(64, 7)) * 3.0 + 5.0
    stats = compute_support_stats(raw)
    cfg = SpaceConfig(d=7)
    whitened = (raw - stats.mean) / np.sqrt(stats.variance + cfg.epsilon)
    assert np.abs(whitened.mean(axis=0)).max() < 1e-9


@given(
    st.lists(
        st.lists(st.floats(-1e3, 1e3), min_size=4, max_size=4),
        min_size=2,
        max_size=32,
    )
)
def test_standardize_returns_unit_or_raises(rows):
    raw = np.asarray(rows, dtype=np.float64)
    stats = compute_support_stats(raw)
    cfg = SpaceConfig(d=4)
    for row in raw:
        try:
            u = standardize(row, stats, cfg)
        except ZeroVector:
            continue
        assert abs(np.linalg.norm(u) - 1.0) <= 1e-9


def test_log_uniform_density_closed_forms():
    assert log_uniform_density(2) == pytest.approx(-math.log(2 * math.pi), abs=1e-12)
    assert log_uniform_density(3) == pytest.approx(-math.log(4 * math.pi), abs=1e-12)
    assert log_uniform_density(4) == pytest.approx(
        -math.log(2 * math.pi**2), abs=1e-12
    )


def test_log_uniform_density_high_dim_finite():
    for d in (16, 768, 4096):
        assert math.isfinite(log_uniform_density(d))
    with pytest.raises(ValueError):
        log_uniform_density(1)


def test_vmf_concentration_singleton_is_zero():
    assert vmf_concentration(1.0, 1, 3) == 0.0
    assert vmf_concentration(0.0, 1, 100) == 0.0


def test_vmf_concentration_worked_example():
    # r = 0.8, n = 2, d = 3: 0.8 * (3 - 0.64) / (1 - 0.64) * (1 / 3)
    assert vmf_concentration(1.6, 2, 3) == pytest.approx(1.7481481481481, abs=1e-9)


def test_vmf_concentration_clamped_tight_cluster():
    kappa = vmf_concentration(2.0, 2, 3)
    assert math.isfinite(kappa)
    assert kappa > 1e5


def test_vmf_concentration_monotone_in_resultant():
    for n in (2, 5, 40):
        values = [vmf_concentration(r * n, n, 8) for r in np.linspace(0.0, 0.99, 34)]
        assert all(b >= a for a, b in zip(values, values[1:]))


@given(
    st.integers(min_value=2, max_value=1000),
    st.integers(min_value=3, max_value=64),
    st.floats(min_value=0.0, max_value=1.0),
)
def test_vmf_concentration_rows_matches_scalar(n, d, r_bar):
    norm = r_bar * n
    rows = vmf_concentration_rows(np.array([norm, 0.0]), np.array([n, 1]), d)
    assert rows[0] == pytest.approx(vmf_concentration(norm, n, d), rel=1e-12)
    assert rows[1] == 0.0


def test_vmf_concentration_rejects_bad_counts():
    with pytest.raises(ValueError):
        vmf_concentration(0.5, 0, 3)
    with pytest.raises(ValueError):
        vmf_concentration(0.5, 2, 1)
