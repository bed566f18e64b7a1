"""Simulation of the stationary test processes.

The four benchmark processes (AR(1), GARCH(1,1), bilinear, EXPAR) plus a
generic finite moving average.  All recursions are written so that they run
over a batch of independent innovation columns at once; :func:`simulate`
is the single-column case, which keeps :func:`true_rho1` bit-compatible with
it.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from . import rng

DEFAULT_BURN_IN = 100

_SQRT3 = math.sqrt(3.0)


class ProcessKind(str, Enum):
    AR1 = "AR1"
    GARCH11 = "GARCH11"
    BILINEAR = "BILINEAR"
    EXPAR = "EXPAR"
    LINEAR_MA = "LINEAR_MA"


class Innovation(str, Enum):
    GAUSSIAN_STD = "GAUSSIAN_STD"
    UNIFORM_SQRT3 = "UNIFORM_SQRT3"


class NonStationaryError(ValueError):
    pass


class SimulationOverflowError(ArithmeticError):
    def __init__(self, index: int):
        super().__init__(f"non-finite value at index {index} of the simulated path")
        self.index = index


_N_PARAMS = {
    ProcessKind.AR1: 1,
    ProcessKind.GARCH11: 3,
    ProcessKind.BILINEAR: 2,
    ProcessKind.EXPAR: 3,
}


@dataclass(frozen=True)
class ProcessSpec:
    """Data-generating process.

    Parameters by kind: AR1 ``(phi,)``; GARCH11 ``(omega, beta, alpha)``;
    BILINEAR ``(a, b)``; EXPAR ``(a, b, c)``; LINEAR_MA ``(b_0, b_1, ...)``.
    """

    kind: ProcessKind
    parameters: tuple[float, ...]
    innovation: Innovation = Innovation.GAUSSIAN_STD
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "kind", ProcessKind(self.kind))
        object.__setattr__(self, "innovation", Innovation(self.innovation))
        object.__setattr__(self, "parameters", tuple(float(v) for v in self.parameters))
        self.validate()

    def validate(self) -> None:
        k, par = self.kind, self.parameters
        if not all(math.isfinite(v) for v in par):
            raise NonStationaryError(f"{k.value}: parameters must be finite, got {par}")
        if k in _N_PARAMS and len(par) != _N_PARAMS[k]:
            raise ValueError(f"{k.value} takes {_N_PARAMS[k]} parameters, got {len(par)}")
        if k is ProcessKind.AR1 and not abs(par[0]) < 1:
            raise NonStationaryError(f"AR1 needs |phi| < 1, got phi={par[0]}")
        if k is ProcessKind.GARCH11:
            omega, beta, alpha = par
            if omega <= 0 or beta < 0 or alpha < 0:
                raise NonStationaryError(
                    f"GARCH11 needs omega > 0 and beta, alpha >= 0, got {par}"
                )
            if not beta + alpha < 1:
                raise NonStationaryError(
                    f"GARCH11 needs beta + alpha < 1, got {beta} + {alpha} = {beta + alpha}"
                )
        if k is ProcessKind.LINEAR_MA and len(par) == 0:
            raise ValueError("LINEAR_MA needs at least one coefficient")

    @property
    def depth(self) -> int:
        """Extra innovations consumed before the first output value."""
        if self.kind is ProcessKind.LINEAR_MA:
            return len(self.parameters) - 1
        return 0

    def label(self) -> str:
        return self.name or self.kind.value.lower()


P1 = ProcessSpec(ProcessKind.AR1, (0.75,), Innovation.GAUSSIAN_STD, "P1")
P2 = ProcessSpec(ProcessKind.GARCH11, (1.0, 0.2, 0.65), Innovation.GAUSSIAN_STD, "P2")
P3 = ProcessSpec(ProcessKind.BILINEAR, (0.6, 0.75), Innovation.UNIFORM_SQRT3, "P3")
P4 = ProcessSpec(ProcessKind.EXPAR, (0.45, 0.48, 0.96), Innovation.UNIFORM_SQRT3, "P4")

# iid N(0, 1): exact null for rho(1) = 0
WHITE_NOISE = ProcessSpec(ProcessKind.AR1, (0.0,), Innovation.GAUSSIAN_STD, "iid")

BENCHMARK_PROCESSES = {"P1": P1, "P2": P2, "P3": P3, "P4": P4}
# CLI names
NAMED_PROCESSES = {"ar1": P1, "garch11": P2, "bilinear": P3, "expar": P4, "iid": WHITE_NOISE, **BENCHMARK_PROCESSES}


def get_process(name: str) -> ProcessSpec:
    try:
        return NAMED_PROCESSES[name] if name in NAMED_PROCESSES else NAMED_PROCESSES[name.lower()]
    except KeyError:
        raise KeyError(
            f"unknown process {name!r}; choose from {sorted(NAMED_PROCESSES)}"
        ) from None


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Finite real sample path; ``values`` is a read-only float array."""

    values: np.ndarray
    seed: int | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        if v.size < 1:
            raise ValueError("a time series needs at least one value")
        if not np.all(np.isfinite(v)):
            bad = int(np.flatnonzero(~np.isfinite(v))[0])
            raise ValueError(f"non-finite value at index {bad}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    __hash__ = None

    def to_csv(self, path) -> None:
        write_csv(self, path)


def as_array(x) -> np.ndarray:
    if isinstance(x, TimeSeries):
        return x.values
    return np.asarray(x, dtype=float).ravel()


def write_csv(x, path) -> None:
    """Single column ``x``; ``repr`` gives the shortest round-trip decimal."""
    values = as_array(x)
    with open(path, "w", newline="") as fh:
        fh.write("x\n")
        fh.writelines(f"{float(v)!r}\n" for v in values)


def read_csv(path) -> TimeSeries:
    path = Path(path)
    values = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["x"]:
            raise ValueError(f"{path}:1: expected header 'x', got {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row or not "".join(row).strip():
                continue
            if len(row) != 1:
                raise ValueError(f"{path}:{lineno}: expected one column, got {len(row)}")
            try:
                v = float(row[0])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: not a number: {row[0]!r}") from None
            if not math.isfinite(v):
                raise ValueError(f"{path}:{lineno}: non-finite value {row[0]!r}")
            values.append(v)
    if not values:
        raise ValueError(f"{path}: no data rows")
    return TimeSeries(np.array(values), provenance={"path": str(path)})


def draw_innovations(innovation: Innovation, size, gen: np.random.Generator) -> np.ndarray:
    if innovation is Innovation.GAUSSIAN_STD:
        return gen.standard_normal(size)
    return gen.uniform(-_SQRT3, _SQRT3, size)


def _run_recursion(spec: ProcessSpec, eps: np.ndarray) -> np.ndarray:
    """Run the recursion over innovation columns ``eps`` of shape (T, k).

    Returns the full path of shape (T - depth, k), burn-in included.
    """
    kind, par = spec.kind, spec.parameters
    T, k = eps.shape
    if kind is ProcessKind.LINEAR_MA:
        b = np.asarray(par)
        q = b.size
        out = np.zeros((T - q + 1, k))
        for j in range(q):
            out += b[j] * eps[q - 1 - j : T - j]
        return out

    out = np.empty((T, k))
    x_prev = np.zeros(k)
    with np.errstate(over="ignore", invalid="ignore"):
        if kind is ProcessKind.AR1:
            phi = par[0]
            for t in range(T):
                x_prev = phi * x_prev + eps[t]
                out[t] = x_prev
        elif kind is ProcessKind.GARCH11:
            omega, beta, alpha = par
            sig2 = np.full(k, omega / (1.0 - beta - alpha))
            e_prev = np.zeros(k)  # X_0 = 0 implies eps_0 = 0
            for t in range(T):
                sig2 = omega + beta * sig2 + alpha * e_prev * e_prev
                e_prev = eps[t]
                out[t] = np.sqrt(sig2) * e_prev
        elif kind is ProcessKind.BILINEAR:
            a, b = par
            e_prev = np.zeros(k)
            for t in range(T):
                x_prev = a * x_prev + eps[t] + b * x_prev * e_prev
                e_prev = eps[t]
                out[t] = x_prev
        elif kind is ProcessKind.EXPAR:
            a, b, c = par
            for t in range(T):
                x_prev = (a + b * np.exp(-c * x_prev * x_prev)) * x_prev + eps[t]
                out[t] = x_prev
        else:  # pragma: no cover
            raise ValueError(f"unsupported process kind {kind}")
    return out


def _check_finite(path: np.ndarray, burn_in: int) -> None:
    bad = ~np.isfinite(path)
    if bad.any():
        first = int(np.flatnonzero(bad.any(axis=1))[0])
        raise SimulationOverflowError(first - burn_in)


def simulate(
    spec: ProcessSpec,
    n: int,
    burn_in: int = DEFAULT_BURN_IN,
    seed: int = 0,
    innovation_override: Sequence[float] | None = None,
) -> TimeSeries:
    """Simulate ``n`` values of ``spec`` after discarding ``burn_in`` values.

    With ``innovation_override`` the first ``n + burn_in + spec.depth``
    entries replace the random innovations.  A ``SimulationOverflowError``
    carries the output index of the first non-finite value (negative indices
    fall inside the burn-in).
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if burn_in < 0:
        raise ValueError(f"burn_in must be >= 0, got {burn_in}")
    spec.validate()
    total = n + burn_in + spec.depth
    if innovation_override is not None:
        eps = np.asarray(innovation_override, dtype=float).ravel()
        if eps.size < total:
            raise ValueError(
                f"innovation_override has {eps.size} values, need at least {total}"
            )
        eps = eps[:total]
    else:
        eps = draw_innovations(spec.innovation, total, rng.generator(seed))
    path = _run_recursion(spec, eps[:, None])
    _check_finite(path, burn_in)
    return TimeSeries(
        path[burn_in:, 0].copy(),
        seed=seed,
        provenance={"process": spec.label(), "burn_in": burn_in},
    )


def simulate_batch(
    spec: ProcessSpec, n: int, seeds: Sequence[int], burn_in: int = DEFAULT_BURN_IN
) -> np.ndarray:
    """Simulate one path per seed; returns shape (n, len(seeds)).

    Column ``j`` equals ``simulate(spec, n, burn_in, seeds[j]).values``.
    """
    spec.validate()
    total = n + burn_in + spec.depth
    eps = np.empty((total, len(seeds)))
    for j, s in enumerate(seeds):
        eps[:, j] = draw_innovations(spec.innovation, total, rng.generator(s))
    path = _run_recursion(spec, eps)
    _check_finite(path, burn_in)
    return path[burn_in:]


def true_rho1(
    spec: ProcessSpec,
    reps: int = 20_000,
    n: int = 100,
    seed: int = 0,
    burn_in: int = DEFAULT_BURN_IN,
    chunk: int = 2_000,
) -> float:
    """Monte-Carlo mean of the lag-1 sample autocorrelation.

    Replicate ``r`` is ``simulate(spec, n, burn_in, derive_seed(seed, r))``.
    """
    from .stats import autocorrelation_columns

    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    total = 0.0
    for start in range(0, reps, chunk):
        seeds = [rng.derive_seed(seed, r) for r in range(start, min(reps, start + chunk))]
        paths = simulate_batch(spec, n, seeds, burn_in)
        total += float(np.sum(autocorrelation_columns(paths, 1)))
    return total / reps
