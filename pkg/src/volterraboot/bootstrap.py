"""Volterra bootstrap and the AR-sieve baseline.

Seed discipline for both engines, given a base ``seed``:

* model fitting / selection uses ``derive_seed(seed, FIT)``
* the long reference path for theta* uses ``derive_seed(seed, THETA)``
* replicate ``b`` uses ``derive_seed(seed, BOOTSTRAP, b)``
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterator, Sequence

import numpy as np
import scipy.signal

from . import rng
from .procgen import DEFAULT_BURN_IN, TimeSeries, as_array
from .stats import DegenerateSeriesError, autocorrelation, autocovariance, joint_cumulant4
from .volterra import KernelSpec, VolterraModel, innovation_windows, make_grid, predict_many, select_model

THETA_LENGTH = 20_000
DEFAULT_P_MAX = 20

Statistic = Callable[[TimeSeries], float]


class Method(str, Enum):
    VOLTERRA = "VOLTERRA"
    AR_SIEVE = "AR_SIEVE"

    @classmethod
    def parse(cls, text) -> "Method":
        if isinstance(text, Method):
            return text
        key = str(text).strip().upper().replace("-", "_")
        aliases = {"ARSIEVE": cls.AR_SIEVE, "SIEVE": cls.AR_SIEVE, "AR": cls.AR_SIEVE}
        return aliases.get(key) or cls(key)


def lag1_autocorrelation(x) -> float:
    return autocorrelation(x, 1)


@dataclass
class BootstrapDistribution:
    replicates: np.ndarray
    theta_star: float
    method: Method
    model_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.replicates = np.asarray(self.replicates, dtype=float)
        if self.replicates.size < 1:
            raise ValueError("need at least one replicate")
        if not np.all(np.isfinite(self.replicates)) or not math.isfinite(self.theta_star):
            raise ValueError("bootstrap replicates and theta* must be finite")

    @property
    def B(self) -> int:
        return self.replicates.size

    def header(self) -> dict:
        return {"method": self.method.value, "theta_star": self.theta_star, "B": self.B, "model": self.model_meta}

    def to_csv(self, path) -> None:
        """CSV ``replicate,value`` preceded by a ``#``-prefixed JSON header line."""
        with open(path, "w", newline="") as fh:
            fh.write("# " + json.dumps(self.header(), sort_keys=True) + "\n")
            fh.write("replicate,value\n")
            for b, v in enumerate(self.replicates):
                fh.write(f"{b},{float(v)!r}\n")

    @classmethod
    def from_csv(cls, path) -> "BootstrapDistribution":
        with open(path) as fh:
            first = fh.readline()
            if not first.startswith("# "):
                raise ValueError(f"{path}:1: missing JSON header line")
            head = json.loads(first[2:])
            if fh.readline().strip() != "replicate,value":
                raise ValueError(f"{path}:2: expected 'replicate,value'")
            values = [float(line.split(",")[1]) for line in fh if line.strip()]
        return cls(np.array(values), float(head["theta_star"]), Method(head["method"]), head.get("model", {}))


# -- Volterra engine ---------------------------------------------------------


def volterra_bootstrap_sample(model: VolterraModel, n: int, seed: int) -> TimeSeries:
    """Pseudo-series driven by a fresh iid N(0, 1) stream of length n + m - 1."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    m = model.memory
    stream = rng.generator(seed).standard_normal(n + m - 1)
    values = predict_many(model, innovation_windows(stream, m))
    bad = ~np.isfinite(values)
    if bad.any():
        raise ArithmeticError(f"non-finite bootstrap value at index {int(np.flatnonzero(bad)[0])}")
    return TimeSeries(values, seed=seed)


def fit_volterra_companion(x, grid: Sequence[KernelSpec] | None, seed: int) -> VolterraModel:
    _, model = select_model(x, grid or make_grid(), rng.derive_seed(seed, rng.FIT))
    return model


def volterra_replicates(model: VolterraModel, n: int, B: int, seed: int) -> Iterator[TimeSeries]:
    for b in range(B):
        yield volterra_bootstrap_sample(model, n, rng.derive_seed(seed, rng.BOOTSTRAP, b))


def volterra_theta_star(model: VolterraModel, statistic: Statistic, seed: int) -> float:
    long = volterra_bootstrap_sample(model, THETA_LENGTH, rng.derive_seed(seed, rng.THETA))
    return float(statistic(long))


def volterra_bootstrap_distribution(
    x,
    grid: Sequence[KernelSpec] | None,
    statistic: Statistic,
    B: int,
    seed: int,
) -> BootstrapDistribution:
    if B < 1:
        raise ValueError(f"B must be >= 1, got {B}")
    n = len(as_array(x))
    model = fit_volterra_companion(x, grid, seed)
    theta = volterra_theta_star(model, statistic, seed)
    reps = [statistic(s) for s in volterra_replicates(model, n, B, seed)]
    return BootstrapDistribution(np.array(reps), theta, Method.VOLTERRA, model.meta())


# -- AR sieve ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ARModel:
    order: int
    coefficients: np.ndarray
    residuals: np.ndarray
    innovation_variance: float
    aic: np.ndarray = field(default=None, repr=False)

    def meta(self) -> dict:
        return {"p": self.order, "coefficients": [float(c) for c in self.coefficients],
                "innovation_variance": self.innovation_variance}


def levinson_durbin(gamma: np.ndarray, p_max: int) -> tuple[list[np.ndarray], np.ndarray]:
    """Yule-Walker solutions for orders 0..p_max from autocovariances.

    Returns the coefficient vectors and the innovation variances per order.
    """
    if gamma[0] <= 0:
        raise DegenerateSeriesError("zero sample variance; autocovariance system is singular")
    coefs = [np.zeros(0)]
    sig2 = np.empty(p_max + 1)
    sig2[0] = gamma[0]
    phi = np.zeros(0)
    for k in range(1, p_max + 1):
        acc = gamma[k] - np.dot(phi, gamma[k - 1 : 0 : -1]) if k > 1 else gamma[1]
        refl = acc / sig2[k - 1]
        phi = np.concatenate((phi - refl * phi[::-1], [refl]))
        sig2[k] = sig2[k - 1] * (1.0 - refl * refl)
        if not sig2[k] > 0:
            raise DegenerateSeriesError(
                f"autocovariance system singular at order {k}; input looks degenerate"
            )
        coefs.append(phi)
    return coefs, sig2


def ar_sieve_fit(x, p_max: int = DEFAULT_P_MAX) -> ARModel:
    """Yule-Walker AR fit with AIC order choice over 0..p_max.

    AIC(p) = n log(sigma2_p) + 2p, where sigma2_p is the Levinson-Durbin
    prediction variance with the n / (n - p - 1) degrees-of-freedom factor
    (the ``ar.yw`` convention).
    """
    v = as_array(x)
    n = v.size
    if p_max < 0:
        raise ValueError(f"p_max must be >= 0, got {p_max}")
    if n <= p_max + 1:
        raise ValueError(f"need n > p_max + 1, got n={n}, p_max={p_max}")
    gamma = np.array([autocovariance(v, h) for h in range(p_max + 1)])
    coefs, pred_var = levinson_durbin(gamma, p_max)
    orders = np.arange(p_max + 1)
    sig2 = pred_var * n / (n - orders - 1)
    aic = n * np.log(sig2) + 2 * orders
    p = int(np.argmin(aic))
    phi = coefs[p]
    c = v - v.mean()
    if p:
        resid = c[p:] - sum(phi[j] * c[p - 1 - j : n - 1 - j] for j in range(p))
    else:
        resid = c.copy()
    resid = resid - resid.mean()
    return ARModel(p, phi, resid, float(sig2[p]), aic)


def _check_stationary(phi: np.ndarray) -> None:
    if phi.size == 0:
        return
    roots = np.roots(np.concatenate(([1.0], -phi)))
    if np.any(np.abs(roots) >= 1):
        raise RuntimeError(
            "fitted AR polynomial is not stationary; Yule-Walker should prevent this"
        )


def ar_sieve_bootstrap_sample(
    model: ARModel, n: int, burn_in: int = DEFAULT_BURN_IN, seed: int = 0
) -> TimeSeries:
    """AR(p) recursion from zero start driven by resampled residuals."""
    if model.residuals.size == 0:
        raise ValueError("empty residual pool")
    _check_stationary(model.coefficients)
    gen = rng.generator(seed)
    e = model.residuals[gen.integers(0, model.residuals.size, n + burn_in)]
    if model.order:
        path = scipy.signal.lfilter([1.0], np.concatenate(([1.0], -model.coefficients)), e)
    else:
        path = e
    return TimeSeries(path[burn_in:], seed=seed)


def ar_sieve_replicates(model: ARModel, n: int, B: int, seed: int) -> Iterator[TimeSeries]:
    for b in range(B):
        yield ar_sieve_bootstrap_sample(model, n, DEFAULT_BURN_IN, rng.derive_seed(seed, rng.BOOTSTRAP, b))


def ar_sieve_theta_star(model: ARModel, statistic: Statistic, seed: int) -> float:
    long = ar_sieve_bootstrap_sample(model, THETA_LENGTH, DEFAULT_BURN_IN, rng.derive_seed(seed, rng.THETA))
    return float(statistic(long))


def ar_sieve_bootstrap_distribution(
    x, p_max: int, statistic: Statistic, B: int, seed: int
) -> BootstrapDistribution:
    if B < 1:
        raise ValueError(f"B must be >= 1, got {B}")
    n = len(as_array(x))
    model = ar_sieve_fit(x, p_max)
    theta = ar_sieve_theta_star(model, statistic, seed)
    reps = [statistic(s) for s in ar_sieve_replicates(model, n, B, seed)]
    return BootstrapDistribution(np.array(reps), theta, Method.AR_SIEVE, model.meta())


# -- diagnostics -------------------------------------------------------------


def moment_summary(x) -> dict:
    v = as_array(x)
    return {
        "mean": float(v.mean()),
        "variance": autocovariance(v, 0),
        "rho1": autocorrelation(v, 1),
        "kappa_1_0_1": joint_cumulant4(v, 1, 0, 1),
    }


def cumulant_diagnostic(x, model: VolterraModel, seed: int, length: int = THETA_LENGTH) -> dict:
    """Low-order moments and a fourth cumulant of the data next to those of a
    long pseudo-series from ``model``."""
    long = volterra_bootstrap_sample(model, length, seed)
    return {"original": moment_summary(x), "bootstrap": moment_summary(long), "length": length}
