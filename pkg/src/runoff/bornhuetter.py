"""Bornhuetter-Ferguson reserves on the chain-ladder development pattern.

Priors are a frozen snapshot: once constructed they are plain numbers and
never move with the triangle, even when they were initialized from the
chain-ladder ultimates. Sensitivity analysis depends on this.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from runoff.chainladder import DevelopmentFactors, project_ultimates
from runoff.triangle import CumulativeTriangle


@dataclass(frozen=True)
class PriorUltimates:
    """Exogenous prior ultimates mu_i > 0, one per accident year."""

    dimension: int
    values: np.ndarray

    def prior(self, i: int) -> float:
        if not 1 <= i <= self.dimension:
            raise IndexError(f"accident year {i} out of range 1..{self.dimension}")
        return float(self.values[i - 1])


def default_priors(cum: CumulativeTriangle, factors: DevelopmentFactors) -> PriorUltimates:
    """Priors set to the chain-ladder ultimates, then frozen."""
    return PriorUltimates(cum.dimension, np.array(project_ultimates(cum, factors)))


def bf_reserves(
    cum: CumulativeTriangle,
    factors: DevelopmentFactors,
    priors: PriorUltimates,
):
    """Per-year BF reserves mu_i (1 - 1/(f_{I-i+1} ... f_{I-1})) and their total."""
    dim = cum.dimension
    if priors.dimension != dim:
        raise ValueError(
            f"priors cover {priors.dimension} accident years, triangle has {dim}"
        )
    by_year = np.empty(dim)
    for i in range(1, dim + 1):
        fprod = factors.product(dim - i + 1, dim - 1)
        mu = priors.values[i - 1]
        if fprod != 1.0 and not (np.isfinite(mu) and mu > 0):
            raise ValueError(f"missing or non-positive prior for accident year {i}")
        by_year[i - 1] = mu - mu / fprod if np.isfinite(mu) else 0.0
    return by_year, float(np.sum(by_year))
