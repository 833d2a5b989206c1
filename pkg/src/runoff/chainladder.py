"""Chain-ladder point estimates and Mack prediction errors.

Development factors are volume-weighted column ratios; prediction MSE
splits into process variance and estimation error, with the usual
minimum rule supplying the variance scale for the last development year.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from runoff.triangle import CumulativeTriangle, column_partial_sum


@dataclass(frozen=True)
class DevelopmentFactors:
    """Estimated factors f_j for j = 1..I-1."""

    dimension: int
    values: np.ndarray

    def factor(self, j: int) -> float:
        if not 1 <= j <= self.dimension - 1:
            raise IndexError(f"factor index {j} out of range 1..{self.dimension - 1}")
        return float(self.values[j - 1])

    def product(self, a: int, b: int) -> float:
        """f_a * ... * f_b; empty products (a > b) are 1."""
        if a > b:
            return 1.0
        return float(np.prod(self.values[a - 1 : b]))


@dataclass(frozen=True)
class SigmaEstimates:
    """Variance scales sigma^2_j for j = 1..I-1."""

    dimension: int
    values: np.ndarray

    def sigma2(self, j: int) -> float:
        if not 1 <= j <= self.dimension - 1:
            raise IndexError(f"sigma index {j} out of range 1..{self.dimension - 1}")
        return float(self.values[j - 1])


@dataclass(frozen=True)
class MackSummary:
    factors: DevelopmentFactors
    sigmas: SigmaEstimates
    ultimates: np.ndarray
    reserves_by_year: np.ndarray
    reserve_total: float
    mse_by_year: np.ndarray
    mse_total: float


def estimate_development_factors(cum: CumulativeTriangle) -> DevelopmentFactors:
    """f_j = sum(C_{i,j+1}, i<=I-j) / sum(C_{i,j}, i<=I-j)."""
    dim = cum.dimension
    out = np.empty(dim - 1)
    for j in range(1, dim):
        den = column_partial_sum(cum, j, dim - j)
        if den == 0.0:
            raise ZeroDivisionError(f"zero denominator for development factor {j}")
        num = column_partial_sum(cum, j + 1, dim - j)
        out[j - 1] = num / den
    return DevelopmentFactors(dim, out)


def project_ultimates(cum: CumulativeTriangle, factors: DevelopmentFactors) -> np.ndarray:
    """Ultimate claims per accident year: latest cumulative times remaining factors."""
    dim = cum.dimension
    out = np.empty(dim)
    for i in range(1, dim + 1):
        latest = cum.cell(i, dim - i + 1)
        out[i - 1] = latest * factors.product(dim - i + 1, dim - 1)
    return out


def reserves(cum: CumulativeTriangle, factors: DevelopmentFactors):
    """Per-year reserves (ultimate minus latest cumulative) and their total."""
    dim = cum.dimension
    ult = project_ultimates(cum, factors)
    by_year = np.empty(dim)
    for i in range(1, dim + 1):
        by_year[i - 1] = ult[i - 1] - cum.cell(i, dim - i + 1)
    return by_year, float(np.sum(by_year))


def estimate_sigmas(cum: CumulativeTriangle, factors: DevelopmentFactors) -> SigmaEstimates:
    """Weighted squared-ratio residual variances, with the min rule at I-1.

    sigma^2_k for k <= I-2 averages C_{i,k} (C_{i,k+1}/C_{i,k} - f_k)^2
    over i <= I-k with divisor I-k-1. The last scale is
    min(sigma^4_{I-2}/sigma^2_{I-3}, min(sigma^2_{I-3}, sigma^2_{I-2})),
    reading 0/0 as 0 so all-proportional triangles yield zero throughout.
    """
    dim = cum.dimension
    if dim < 4:
        raise ValueError(f"sigma estimation needs I >= 4, got I={dim}")
    out = np.empty(dim - 1)
    for k in range(1, dim - 1):
        fk = factors.factor(k)
        acc = 0.0
        for i in range(1, dim - k + 1):
            cik = cum.cell(i, k)
            if cik == 0.0:
                raise ZeroDivisionError(
                    f"zero cumulative cell ({i}, {k}) in sigma estimation"
                )
            ratio = cum.cell(i, k + 1) / cik
            acc += cik * (ratio - fk) ** 2
        out[k - 1] = acc / (dim - k - 1)
    a, b = out[dim - 4], out[dim - 3]
    if a > 0.0:
        out[dim - 2] = min(b * b / a, min(a, b))
    else:
        out[dim - 2] = 0.0  # min(a, b) = 0 dominates whatever 0/0 would mean
    return SigmaEstimates(dim, out)


def mse_accident_year(
    cum: CumulativeTriangle,
    factors: DevelopmentFactors,
    sigmas: SigmaEstimates,
    i: int,
) -> float:
    """Prediction MSE for accident year i, process plus estimation error.

    Plug-in form: the process term is the latest cumulative times a
    factor-weighted sum of sigma^2, and the estimation term is
    (latest * remaining factor product)^2 times the column-sum weighted
    sum of sigma^2/f^2. Algebraically identical to the standard
    two-reciprocal estimator (asserted in tests).
    """
    dim = cum.dimension
    if i == 1:
        return 0.0
    if not 2 <= i <= dim:
        raise IndexError(f"accident year {i} out of range 2..{dim}")
    latest = cum.cell(i, dim - i + 1)
    process = 0.0
    for jp in range(dim - i + 1, dim):
        lead = factors.product(dim - i + 1, jp - 1)
        trail = factors.product(jp + 1, dim - 1) ** 2
        process += lead * sigmas.sigma2(jp) * trail
    process *= latest
    fprod = factors.product(dim - i + 1, dim - 1)
    estimation = latest**2 * fprod**2 * _sum_w(cum, factors, sigmas, i)
    return process + estimation


def _sum_w(cum, factors, sigmas, i):
    """sum over s = I-i+1..I-1 of (sigma^2_s / f_s^2) / sum(C_{n,s}, n<=I-s)."""
    dim = cum.dimension
    acc = 0.0
    for s in range(dim - i + 1, dim):
        acc += (sigmas.sigma2(s) / factors.factor(s) ** 2) / column_partial_sum(
            cum, s, dim - s
        )
    return acc


def _cross_v(cum, factors, sigmas, i):
    """sum over r = I-i+1..I-1 of (2 sigma^2_r / f_r^2) / sum(C_{n,r}, n<=I-r)."""
    dim = cum.dimension
    acc = 0.0
    for r in range(dim - i + 1, dim):
        acc += (2.0 * sigmas.sigma2(r) / factors.factor(r) ** 2) / column_partial_sum(
            cum, r, dim - r
        )
    return acc


def mse_total(
    cum: CumulativeTriangle,
    factors: DevelopmentFactors,
    sigmas: SigmaEstimates,
) -> float:
    """Prediction MSE of the total reserve: per-year MSEs plus cross covariances."""
    dim = cum.dimension
    ult = project_ultimates(cum, factors)
    acc = 0.0
    for i in range(2, dim + 1):
        acc += mse_accident_year(cum, factors, sigmas, i)
        later = float(np.sum(ult[i:]))
        acc += ult[i - 1] * later * _cross_v(cum, factors, sigmas, i)
    return acc


def mack_summary(cum: CumulativeTriangle) -> MackSummary:
    """Convenience bundle of all chain-ladder and Mack estimates."""
    dim = cum.dimension
    factors = estimate_development_factors(cum)
    sigmas = estimate_sigmas(cum, factors)
    ult = project_ultimates(cum, factors)
    by_year, total = reserves(cum, factors)
    mse_by_year = np.array(
        [mse_accident_year(cum, factors, sigmas, i) for i in range(1, dim + 1)]
    )
    return MackSummary(
        factors=factors,
        sigmas=sigmas,
        ultimates=ult,
        reserves_by_year=by_year,
        reserve_total=total,
        mse_by_year=mse_by_year,
        mse_total=mse_total(cum, factors, sigmas),
    )
