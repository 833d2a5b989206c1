"""Impact functions: per-cell first derivatives of reserve statistics.

Every operation returns an ImpactTriangle holding d(statistic)/dX_{k,j}
for each observed incremental cell (k, j). Reserve impacts use the
indicator master formula built from d_ln_f; MSE impacts treat the
variance scales sigma^2 as fixed constants and differentiate the
development factors and cumulative cells they multiply.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from runoff.bornhuetter import PriorUltimates
from runoff.chainladder import (
    DevelopmentFactors,
    SigmaEstimates,
    _cross_v,
    _sum_w,
    mse_accident_year,
    project_ultimates,
)
from runoff.triangle import CumulativeTriangle, IncrementalTriangle, column_partial_sum

# Statistics that are homogeneous of order 1 in the increments, for which
# the Euler allocation sum(IF * X) equals the statistic exactly. BF with
# frozen priors is excluded: mu does not scale with X.
ORDER_ONE_STATISTICS = ("reserve-ay", "reserve-total")


@dataclass(frozen=True)
class ImpactTriangle:
    """Per-cell derivative values for one statistic.

    statistic: tag such as "reserve-total" or "mse-ay".
    target: accident year for per-year statistics, else None.
    values: (I, I) array, NaN outside the observed region.
    """

    statistic: str
    target: int | None
    dimension: int
    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def cell(self, k: int, j: int) -> float:
        if not (1 <= k <= self.dimension and 1 <= j <= self.dimension - k + 1):
            raise IndexError(f"cell ({k}, {j}) is not observed for I={self.dimension}")
        return float(self.values[k - 1, j - 1])

    def observed_cells(self):
        for k in range(1, self.dimension + 1):
            for j in range(1, self.dimension - k + 2):
                yield k, j


def _blank(dim: int) -> np.ndarray:
    arr = np.full((dim, dim), np.nan)
    for k in range(1, dim + 1):
        arr[k - 1, : dim - k + 1] = 0.0
    return arr


def d_ln_f(cum: CumulativeTriangle, s: int, k: int, j: int) -> float:
    """d ln f_s / dX_{k,j}.

    Zero when k > I - s (the cell is outside both column sums); otherwise
    the reciprocal of the numerator sum when j <= s+1 minus the
    reciprocal of the denominator sum when j <= s.
    """
    dim = cum.dimension
    if not 1 <= s <= dim - 1:
        raise IndexError(f"factor index {s} out of range 1..{dim - 1}")
    if k > dim - s:
        return 0.0
    out = 0.0
    if j <= s + 1:
        out += 1.0 / column_partial_sum(cum, s + 1, dim - s)
    if j <= s:
        out -= 1.0 / column_partial_sum(cum, s, dim - s)
    return out


def _reserve_row_sum(cum: CumulativeTriangle, i: int, k: int, j: int) -> float:
    """sum over p = k..i-1 of the two indicator reciprocals for IF(R_i)."""
    dim = cum.dimension
    acc = 0.0
    for p in range(k, i):
        if j <= dim - p + 1:
            acc += 1.0 / column_partial_sum(cum, dim - p + 1, p)
        if j <= dim - p:
            acc -= 1.0 / column_partial_sum(cum, dim - p, p)
    return acc


def impact_reserve_ay(
    cum: CumulativeTriangle, factors: DevelopmentFactors, i: int
) -> ImpactTriangle:
    """IF_{k,j}(R_i): zero for k > i, flat (f-product - 1) for k = i,
    ultimate times indicator reciprocal sums for k < i."""
    dim = cum.dimension
    if not 1 <= i <= dim:
        raise IndexError(f"accident year {i} out of range 1..{dim}")
    arr = _blank(dim)
    if i == 1:
        return ImpactTriangle("reserve-ay", i, dim, arr)
    fprod = factors.product(dim - i + 1, dim - 1)
    ult_i = cum.cell(i, dim - i + 1) * fprod
    for k in range(1, dim + 1):
        for j in range(1, dim - k + 2):
            if k > i:
                continue
            if k == i:
                arr[k - 1, j - 1] = fprod - 1.0
            else:
                arr[k - 1, j - 1] = ult_i * _reserve_row_sum(cum, i, k, j)
    return ImpactTriangle("reserve-ay", i, dim, arr)


def impact_reserve_total(
    cum: CumulativeTriangle, factors: DevelopmentFactors
) -> ImpactTriangle:
    """IF_{k,j}(R) = sum over accident years of IF_{k,j}(R_i)."""
    dim = cum.dimension
    acc = _blank(dim)
    for i in range(2, dim + 1):
        acc = acc + np.nan_to_num(impact_reserve_ay(cum, factors, i).values, nan=0.0)
    acc[np.isnan(_blank(dim))] = np.nan
    return ImpactTriangle("reserve-total", None, dim, acc)


def impact_bf_ay(
    cum: CumulativeTriangle,
    factors: DevelopmentFactors,
    priors: PriorUltimates,
    i: int,
) -> ImpactTriangle:
    """IF_{k,j}(R_i^BF) with frozen priors: zero for k >= i, otherwise the
    prior discounted by the factor product times the indicator sums."""
    dim = cum.dimension
    if not 1 <= i <= dim:
        raise IndexError(f"accident year {i} out of range 1..{dim}")
    arr = _blank(dim)
    if i == 1:
        return ImpactTriangle("bf-ay", i, dim, arr)
    fprod = factors.product(dim - i + 1, dim - 1)
    scale = priors.prior(i) / fprod
    for k in range(1, i):
        for j in range(1, dim - k + 2):
            arr[k - 1, j - 1] = scale * _reserve_row_sum(cum, i, k, j)
    return ImpactTriangle("bf-ay", i, dim, arr)


def impact_bf_total(
    cum: CumulativeTriangle,
    factors: DevelopmentFactors,
    priors: PriorUltimates,
) -> ImpactTriangle:
    dim = cum.dimension
    acc = _blank(dim)
    for i in range(2, dim + 1):
        acc = acc + np.nan_to_num(impact_bf_ay(cum, factors, priors, i).values, nan=0.0)
    acc[np.isnan(_blank(dim))] = np.nan
    return ImpactTriangle("bf-total", None, dim, acc)


def impact_mse_ay(
    cum: CumulativeTriangle,
    factors: DevelopmentFactors,
    sigmas: SigmaEstimates,
    i: int,
) -> ImpactTriangle:
    """IF_{k,j}(mse(R_i)) with sigma^2 held constant.

    For k = i the value is the process sum plus twice the estimation
    term over the latest cumulative (flat in j). For k <= i-1 it is a
    negative constant times IF_{k,j}(R_i): the estimation error shrinks
    when the reserve impact grows.
    """
    dim = cum.dimension
    if not 1 <= i <= dim:
        raise IndexError(f"accident year {i} out of range 1..{dim}")
    arr = _blank(dim)
    if i == 1:
        return ImpactTriangle("mse-ay", i, dim, arr)
    latest = cum.cell(i, dim - i + 1)
    fprod = factors.product(dim - i + 1, dim - 1)
    w = _sum_w(cum, factors, sigmas, i)
    process_per_latest = 0.0
    for jp in range(dim - i + 1, dim):
        lead = factors.product(dim - i + 1, jp - 1)
        trail = factors.product(jp + 1, dim - 1) ** 2
        process_per_latest += lead * sigmas.sigma2(jp) * trail
    diag_value = process_per_latest + 2.0 * latest * fprod**2 * w
    shrink = -2.0 * latest * fprod * np.sqrt(w)
    reserve_if = impact_reserve_ay(cum, factors, i)
    for k in range(1, i + 1):
        for j in range(1, dim - k + 2):
            if k == i:
                arr[k - 1, j - 1] = diag_value
            else:
                arr[k - 1, j - 1] = shrink * reserve_if.values[k - 1, j - 1]
    return ImpactTriangle("mse-ay", i, dim, arr)


def impact_rmse(mse_value: float, mse_impacts: ImpactTriangle) -> ImpactTriangle:
    """Map MSE impacts to RMSE impacts: v -> v / (2 sqrt(mse))."""
    if mse_value <= 0.0:
        raise ValueError("rmse impact undefined for mse_value <= 0")
    scale = 1.0 / (2.0 * np.sqrt(mse_value))
    tag = mse_impacts.statistic.replace("mse", "rmse", 1)
    return ImpactTriangle(
        tag, mse_impacts.target, mse_impacts.dimension, mse_impacts.values * scale
    )


def _d_column_sum(cum: CumulativeTriangle, r: int, k: int, j: int) -> float:
    """d/dX_{k,j} of sum(C_{n,r}, n <= I-r): 1 iff row k contributes and j <= r."""
    return 1.0 if (k <= cum.dimension - r and j <= r) else 0.0


def impact_mse_total(
    cum: CumulativeTriangle,
    factors: DevelopmentFactors,
    sigmas: SigmaEstimates,
) -> ImpactTriangle:
    """IF_{k,j}(mse(R)) with sigma^2 held constant.

    Sum over accident years of the per-year MSE impact plus the product
    rule applied to the cross covariance u_i * v_i, where
    u_i = Chat_i * sum(Chat_q, q > i) and v_i collects the column-sum
    weighted 2 sigma^2_r / f_r^2 terms. The derivative of v_i
    differentiates both the factors and the column sums; the derivative
    of u_i reduces to reserve impacts plus latest-diagonal indicators.
    """
    dim = cum.dimension
    ult = project_ultimates(cum, factors)
    reserve_ifs = {
        q: impact_reserve_ay(cum, factors, q).values for q in range(1, dim + 1)
    }
    arr = _blank(dim)
    for i in range(2, dim + 1):
        arr += np.nan_to_num(impact_mse_ay(cum, factors, sigmas, i).values, nan=0.0)
        u_i = ult[i - 1] * float(np.sum(ult[i:]))
        v_i = _cross_v(cum, factors, sigmas, i)
        for k in range(1, dim + 1):
            for j in range(1, dim - k + 2):
                # dv: each r-term has derivative
                # -2 sigma^2_r [sum_n C_{n,r} dlnC_{n,r} + 2 dlnf_r sum_n C_{n,r}]
                #             / (f_r^2 (sum_n C_{n,r})^2)
                # where sum_n C_{n,r} dlnC_{n,r} collapses to the membership
                # indicator of (k, j) in the column sum.
                dv = 0.0
                for r in range(dim - i + 1, dim):
                    s_r = column_partial_sum(cum, r, dim - r)
                    f_r = factors.factor(r)
                    dv += (
                        -2.0
                        * sigmas.sigma2(r)
                        * (
                            _d_column_sum(cum, r, k, j)
                            + 2.0 * d_ln_f(cum, r, k, j) * s_r
                        )
                        / (f_r**2 * s_r**2)
                    )
                # du: d(Chat_q)/dX = IF(R_q) + 1{k=q}
                later_d = 0.0
                for q in range(i + 1, dim + 1):
                    later_d += reserve_ifs[q][k - 1, j - 1] + (1.0 if k == q else 0.0)
                own_d = reserve_ifs[i][k - 1, j - 1] + (1.0 if k == i else 0.0)
                du = ult[i - 1] * later_d + float(np.sum(ult[i:])) * own_d
                arr[k - 1, j - 1] += u_i * dv + v_i * du
    return ImpactTriangle("mse-total", None, dim, arr)


def marginal_contributions(
    impacts: ImpactTriangle,
    inc: IncrementalTriangle,
    expected_total: float | None = None,
) -> ImpactTriangle:
    """Cellwise IF_{k,j} * X_{k,j}, the Euler allocation of the statistic.

    When expected_total is given the statistic must be homogeneous of
    order 1 (per-year or total chain-ladder reserves); the allocation of
    any other statistic does not sum to its value and the check is
    refused rather than silently reported.
    """
    if impacts.dimension != inc.dimension:
        raise ValueError("impact triangle and data triangle dimensions differ")
    if expected_total is not None and impacts.statistic not in ORDER_ONE_STATISTICS:
        raise ValueError(
            f"Euler sum-check refused: {impacts.statistic!r} is not homogeneous "
            "of order 1 in the increments, its allocation does not sum to the "
            "statistic"
        )
    return ImpactTriangle(
        impacts.statistic + "-contribution",
        impacts.target,
        impacts.dimension,
        impacts.values * inc.values,
    )
