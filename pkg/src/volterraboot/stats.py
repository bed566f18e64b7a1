"""Sample autocovariances, generalized means, cumulants and the asymptotic
variance of the lag-1 sample autocorrelation.

All estimators center by the sample mean and divide by ``n``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .procgen import as_array

VARIANCE_FLOOR = 1e-8


class DegenerateSeriesError(ValueError):
    """Raised when a series has zero sample variance."""


class StatisticError(ArithmeticError):
    pass


def _centered(x) -> np.ndarray:
    v = as_array(x)
    if v.size and np.all(v == v[0]):
        return np.zeros_like(v)
    return v - v.mean()


def autocovariance(x, h: int) -> float:
    v = _centered(x)
    n = v.size
    if not 0 <= h < n:
        raise ValueError(f"lag h={h} outside [0, {n - 1}]")
    return float(np.dot(v[: n - h], v[h:]) / n)


def autocorrelation(x, h: int) -> float:
    v = _centered(x)
    n = v.size
    if not 0 <= h < n:
        raise ValueError(f"lag h={h} outside [0, {n - 1}]")
    g0 = np.dot(v, v)
    if g0 <= 0:
        raise DegenerateSeriesError("series has zero sample variance")
    return float(np.dot(v[: n - h], v[h:]) / g0)


def autocorrelation_columns(paths: np.ndarray, h: int) -> np.ndarray:
    """Lag-``h`` sample autocorrelation of every column of ``paths``."""
    c = paths - paths.mean(axis=0)
    n = c.shape[0]
    g0 = np.einsum("ij,ij->j", c, c)
    if np.any(g0 <= 0):
        raise DegenerateSeriesError("a column has zero sample variance")
    return np.einsum("ij,ij->j", c[: n - h], c[h:]) / g0


@dataclass(frozen=True)
class GeneralizedStatistic:
    """``w`` applied to the average of ``g`` over all length-``m`` windows."""

    m: int
    g: Callable[[np.ndarray], Sequence[float]]
    w: Callable[[np.ndarray], float]
    d: int = 1


def generalized_statistic(x, s: GeneralizedStatistic) -> float:
    v = as_array(x)
    n = v.size
    if n < s.m:
        raise ValueError(f"series length {n} shorter than window m={s.m}")
    windows = sliding_window_view(v, s.m)
    gbar = np.zeros(s.d)
    for win in windows:
        gv = np.atleast_1d(np.asarray(s.g(win), dtype=float))
        if gv.shape != (s.d,):
            raise ValueError(f"g returned shape {gv.shape}, expected ({s.d},)")
        gbar += gv
    gbar /= n - s.m + 1
    try:
        with np.errstate(divide="raise", invalid="raise"):
            out = float(s.w(gbar))
    except (ZeroDivisionError, FloatingPointError) as exc:
        raise StatisticError(f"w undefined at {gbar}: {exc}") from None
    if not np.isfinite(out):
        raise StatisticError(f"w undefined at {gbar}")
    return out


def sample_mean_statistic() -> GeneralizedStatistic:
    return GeneralizedStatistic(m=1, g=lambda win: win, w=lambda z: z[0], d=1)


def lag1_ratio_statistic() -> GeneralizedStatistic:
    """sum X_{t+1} X_t / sum X_t^2 as a generalized mean."""
    return GeneralizedStatistic(
        m=2,
        g=lambda win: (win[1] * win[0], win[0] * win[0]),
        w=lambda z: z[0] / z[1],
        d=2,
    )


def joint_cumulant4(x, a: int, b: int, c: int) -> float:
    """Plug-in fourth joint cumulant of (X_0, X_a, X_b, X_c).

    Moments are taken over the index range on which all four lagged copies
    exist; lags may be negative.
    """
    v = _centered(x)
    n = v.size
    offsets = (0, a, b, c)
    lo, hi = min(offsets), max(offsets)
    count = n - (hi - lo)
    if count < 4:
        raise ValueError(
            f"lags {offsets} leave {max(count, 0)} common observations, need >= 4"
        )
    z = [v[o - lo : o - lo + count] for o in offsets]
    m4 = np.mean(z[0] * z[1] * z[2] * z[3])
    pair = lambda i, j: np.mean(z[i] * z[j])  # noqa: E731
    return float(
        m4
        - pair(0, 1) * pair(2, 3)
        - pair(0, 2) * pair(1, 3)
        - pair(0, 3) * pair(1, 2)
    )


@dataclass(frozen=True)
class VarianceEstimate:
    value: float
    truncation_lag: int
    floored: bool = False
    raw: float | None = None


def _summed_cross_cov(u: np.ndarray, v: np.ndarray, L: int, n: int) -> float:
    # sum_{h=-L}^{L} n^{-1} sum_t u_t v_{t+h}
    full = np.correlate(v, u, mode="full")
    zero = u.size - 1
    return float(full[zero - L : zero + L + 1].sum() / n)


def romano_variance(x, L: int = 10, floor: float = VARIANCE_FLOOR) -> VarianceEstimate:
    """Asymptotic variance of sqrt(n) * (rho_hat(1) - rho(1)).

    Plug-in version of the general (fourth-cumulant aware) formula, with
    the long-run covariances of the lag-0 and lag-1 product series summed
    over lags ``-L..L``.
    """
    v = _centered(x)
    n = v.size
    if L < 0:
        raise ValueError(f"L must be >= 0, got {L}")
    if n <= 2 * L + 2:
        raise ValueError(
            f"series length {n} too short for truncation lag L={L}; "
            f"need n > {2 * L + 2}, use a smaller L"
        )
    g0 = np.dot(v, v) / n
    if g0 <= 0:
        raise DegenerateSeriesError("series has zero sample variance")
    y0 = v * v
    y1 = v[:-1] * v[1:]
    y0 = y0 - y0.mean()
    y1 = y1 - y1.mean()
    rho = float(np.dot(v[:-1], v[1:]) / n / g0)
    c11 = _summed_cross_cov(y0, y0, L, n)
    c22 = _summed_cross_cov(y1, y1, L, n)
    c12 = _summed_cross_cov(y0, y1, L, n)
    raw = (c22 - 2.0 * rho * c12 + rho * rho * c11) / (g0 * g0)
    if not raw >= floor:
        return VarianceEstimate(floor, L, True, raw)
    return VarianceEstimate(raw, L, False, raw)


def bartlett_variance_lag1(rho: Sequence[float]) -> float:
    """Bartlett's asymptotic variance of rho_hat(1) from rho(1..H).

    Valid only when fourth cumulants vanish (Gaussian or linear processes).
    """
    r = np.asarray(rho, dtype=float).ravel()
    if r.size == 0:
        raise ValueError("need at least one autocorrelation")
    if np.any(np.abs(r) > 1):
        raise ValueError("autocorrelations must lie in [-1, 1]")
    H = r.size
    ext = np.concatenate(([1.0], r, [0.0]))  # rho(0..H+1)
    h = np.arange(1, H + 1)
    terms = ext[h + 1] + ext[h - 1] - 2.0 * r[0] * ext[h]
    return float(np.sum(terms * terms))
