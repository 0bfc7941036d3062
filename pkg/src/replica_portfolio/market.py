"""Random return matrices with independent entries of mean 0 and variance s_i."""

from __future__ import annotations

import enum

import numpy as np

from .core import ReturnMatrix
from .variance_model import VarianceSpec, sample_variances

_ENTRY_STREAM = 0x5245_5455


class ReturnDistribution(str, enum.Enum):
    GAUSSIAN = "gaussian"
    RADEMACHER = "rademacher"
    UNIFORM_CENTERED = "uniform"

    @classmethod
    def parse(cls, name: str | "ReturnDistribution") -> "ReturnDistribution":
        if isinstance(name, cls):
            return name
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise ValueError(
                f"unknown return distribution {name!r}; choose from "
                + ", ".join(d.value for d in cls)
            ) from None


def row_rng(seed: int, asset: int) -> np.random.Generator:
    """Independent stream for row ``asset`` of the matrix built from ``seed``."""
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence([seed, _ENTRY_STREAM, asset]))
    )


def _unit_row(rng: np.random.Generator, dist: ReturnDistribution, p: int) -> np.ndarray:
    if dist is ReturnDistribution.GAUSSIAN:
        return rng.standard_normal(p)
    if dist is ReturnDistribution.RADEMACHER:
        return np.where(rng.random(p) < 0.5, -1.0, 1.0)
    return rng.uniform(-np.sqrt(3.0), np.sqrt(3.0), p)


def generate(
    n_assets: int,
    n_scenarios: int,
    spec: VarianceSpec,
    dist: ReturnDistribution | str = ReturnDistribution.GAUSSIAN,
    seed: int = 0,
) -> ReturnMatrix:
    """Draw variances from ``spec`` and an ``n_assets x n_scenarios`` return matrix.

    Row ``i`` comes from its own stream keyed by ``(seed, i)``, so rows can be
    produced in any order or in parallel with identical results.
    """
    if n_assets < 1 or n_scenarios < 1:
        raise ValueError("n_assets and n_scenarios must be >= 1")
    dist = ReturnDistribution.parse(dist)
    s = sample_variances(spec, n_assets, seed)
    x = np.empty((n_assets, n_scenarios))
    for i in range(n_assets):
        x[i] = _unit_row(row_rng(seed, i), dist, n_scenarios)
    x *= np.sqrt(s)[:, None]
    return ReturnMatrix(x, s)


def rescale(X: ReturnMatrix, gamma: float) -> ReturnMatrix:
    """Multiply every return by ``sqrt(gamma)`` (variances by ``gamma``)."""
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if gamma == 1:
        return X
    return ReturnMatrix(X.entries * np.sqrt(gamma), X.variances * gamma)
