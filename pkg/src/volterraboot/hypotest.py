"""Studentized two-sided bootstrap test of H0: rho(1) = c0."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import bootstrap as bs
from .bootstrap import Method
from .procgen import as_array
from .stats import autocorrelation, romano_variance
from .volterra import KernelSpec


@dataclass(frozen=True)
class TestConfig:
    c0: float
    alpha: float = 0.05
    B: int = 250
    method: Method = Method.VOLTERRA
    variance_lag: int = 10

    __test__ = False  # not a pytest class

    def __post_init__(self):
        object.__setattr__(self, "method", Method.parse(self.method))
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.B < 1:
            raise ValueError(f"B must be >= 1, got {self.B}")
        if not -1 <= self.c0 <= 1:
            raise ValueError(f"c0 must lie in [-1, 1], got {self.c0}")
        if self.variance_lag < 0:
            raise ValueError(f"variance_lag must be >= 0, got {self.variance_lag}")


@dataclass
class TestResult:
    D_n: float
    p_value: float
    reject: bool
    replicates_D: np.ndarray
    method: Method
    n: int
    c0: float
    alpha: float
    theta_star: float
    model: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    __test__ = False

    @property
    def B(self) -> int:
        return len(self.replicates_D)

    def to_dict(self, include_replicates: bool = False) -> dict:
        d = {
            "method": self.method.value,
            "n": self.n,
            "c0": self.c0,
            "alpha": self.alpha,
            "B": self.B,
            "D_n": self.D_n,
            "p_value": self.p_value,
            "reject": self.reject,
            "theta_star": self.theta_star,
            "model": self.model,
            "flags": list(self.flags),
        }
        if include_replicates:
            d["replicates_D"] = [float(v) for v in self.replicates_D]
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(**kw), indent=2)


def _studentize(x, center: float, L: int) -> tuple[float, bool]:
    v = as_array(x)
    var = romano_variance(v, L)
    d = math.sqrt(v.size) * abs(autocorrelation(v, 1) - center) / math.sqrt(var.value)
    return d, var.floored


def studentized_stat(x, c0: float, L: int = 10) -> float:
    """sqrt(n) |rho_hat(1) - c0| / sqrt(tau_hat)."""
    return _studentize(x, c0, L)[0]


def bootstrap_pvalue(D_n: float, replicates_D: Sequence[float]) -> float:
    reps = np.asarray(replicates_D, dtype=float)
    if reps.size < 1:
        raise ValueError("need at least one bootstrap replicate")
    return (int(np.count_nonzero(reps > D_n)) + 1) / (reps.size + 1)


def run_test(
    x,
    cfg: TestConfig,
    grid_or_pmax: Sequence[KernelSpec] | int | None = None,
    seed: int = 0,
) -> TestResult:
    """Run the full bootstrap test.

    ``grid_or_pmax`` is the model grid for the Volterra method (default
    grid when None) or the maximal AR order for the sieve (default 20).
    Replicates are Studentized around theta*, the statistic's value on a
    long path of the fitted bootstrap process.
    """
    v = as_array(x)
    n = v.size
    L = cfg.variance_lag
    D_n, floored = _studentize(v, cfg.c0, L)
    flags = ["variance_floor:data"] if floored else []

    if cfg.method is Method.VOLTERRA:
        if isinstance(grid_or_pmax, int):
            raise TypeError("the Volterra method needs a KernelSpec grid, not an AR order")
        model = bs.fit_volterra_companion(v, grid_or_pmax, seed)
        theta = bs.volterra_theta_star(model, bs.lag1_autocorrelation, seed)
        series = bs.volterra_replicates(model, n, cfg.B, seed)
        meta = model.meta()
        if model.escalations:
            flags.append(f"ridge_escalations:{len(model.escalations)}")
    else:
        p_max = bs.DEFAULT_P_MAX if grid_or_pmax is None else grid_or_pmax
        if not isinstance(p_max, (int, np.integer)):
            raise TypeError("the AR-sieve method needs an integer p_max")
        model = bs.ar_sieve_fit(v, int(p_max))
        theta = bs.ar_sieve_theta_star(model, bs.lag1_autocorrelation, seed)
        series = bs.ar_sieve_replicates(model, n, cfg.B, seed)
        meta = model.meta()

    reps = np.empty(cfg.B)
    n_floored = 0
    for b, s in enumerate(series):
        reps[b], fl = _studentize(s, theta, L)
        n_floored += fl
    if n_floored:
        flags.append(f"variance_floor:replicates={n_floored}")
    p = bootstrap_pvalue(D_n, reps)
    return TestResult(
        D_n=D_n,
        p_value=p,
        reject=p < cfg.alpha,
        replicates_D=reps,
        method=cfg.method,
        n=n,
        c0=cfg.c0,
        alpha=cfg.alpha,
        theta_star=theta,
        model=meta,
        flags=flags,
    )
