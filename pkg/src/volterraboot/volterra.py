"""Truncated Volterra models fitted by polynomial kernel ridge regression.

A model of order ``p`` and memory ``m`` maps an innovation window
``(e_t, e_{t-1}, ..., e_{t-m+1})`` to

    sum_{i=0}^{p} a_i^2 (window . w')^i   summed against dual coefficients,

which is the kernel form of the weighted stacked monomial expansion.  The
explicit Volterra kernels can be recovered from the dual coefficients as
long as ``m**i`` stays small.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
import scipy.linalg
from numpy.lib.stride_tricks import sliding_window_view

from . import rng
from .procgen import TimeSeries, as_array

EXPANSION_BUDGET = 10**7
MAX_ESCALATIONS = 3
RESIDUAL_TOL = 1e-8

DEFAULT_ORDERS = (1, 2, 3, 4, 5)
DEFAULT_MEMORIES = tuple(range(2, 31, 2))
DEFAULT_RIDGES = (1e-7, 1e-6, 1e-5)


class ExpansionTooLargeError(MemoryError):
    pass


class FitError(RuntimeError):
    pass


@dataclass(frozen=True)
class KernelSpec:
    """Order ``p``, memory ``m``, ridge penalty and per-order weights.

    ``weights=None`` selects ``a_i = m**(-i/2)``, which keeps every order of
    the kernel O(1) for standard normal windows.
    """

    order: int
    memory: int
    ridge: float = 1e-6
    weights: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.order < 1:
            raise ValueError(f"order must be >= 1, got {self.order}")
        if self.memory < 1:
            raise ValueError(f"memory must be >= 1, got {self.memory}")
        if not self.ridge > 0:
            raise ValueError(f"ridge must be > 0, got {self.ridge}")
        if self.weights is None:
            w = tuple(self.memory ** (-i / 2) for i in range(self.order + 1))
        else:
            w = tuple(float(a) for a in self.weights)
            if len(w) != self.order + 1:
                raise ValueError(f"need {self.order + 1} weights, got {len(w)}")
        if not all(a > 0 and math.isfinite(a) for a in w):
            raise ValueError(f"weights must be positive, got {w}")
        object.__setattr__(self, "weights", w)

    @property
    def feature_dim(self) -> int:
        m, p = self.memory, self.order
        return p + 1 if m == 1 else (m ** (p + 1) - 1) // (m - 1)

    @classmethod
    def unit_weights(cls, order: int, memory: int, ridge: float = 1e-6) -> "KernelSpec":
        return cls(order, memory, ridge, (1.0,) * (order + 1))

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "memory": self.memory,
            "ridge": self.ridge,
            "weights": list(self.weights),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        w = d.get("weights")
        return cls(int(d["order"]), int(d["memory"]), float(d["ridge"]), None if w is None else tuple(w))


def make_grid(
    orders: Sequence[int] = DEFAULT_ORDERS,
    memories: Sequence[int] = DEFAULT_MEMORIES,
    ridges: Sequence[float] = DEFAULT_RIDGES,
) -> list[KernelSpec]:
    """Cartesian grid in (order, memory, ridge) order."""
    grid = [KernelSpec(p, m, lam) for p in orders for m in memories for lam in ridges]
    if not grid:
        raise ValueError("empty model grid")
    return grid


def _check_budget(m: int, i: int, budget: int) -> None:
    if m**i > budget:
        raise ExpansionTooLargeError(
            f"explicit order-{i} expansion with memory {m} has {m**i} entries "
            f"(budget {budget}); use the kernel form instead"
        )


def phi_map(i: int, window, budget: int = EXPANSION_BUDGET) -> np.ndarray:
    """All degree-``i`` monomials of ``window``, as the flattened i-fold
    outer product (first factor varies slowest)."""
    w = np.asarray(window, dtype=float).ravel()
    _check_budget(w.size, i, budget)
    out = np.ones(1)
    for _ in range(i):
        out = np.outer(out, w).ravel()
    return out


def phi_matrix(i: int, windows: np.ndarray, budget: int = EXPANSION_BUDGET) -> np.ndarray:
    """Row ``t`` is ``phi_map(i, windows[t])``."""
    W = np.atleast_2d(np.asarray(windows, dtype=float))
    n, m = W.shape
    _check_budget(m, i, budget)
    out = np.ones((n, 1))
    for _ in range(i):
        out = (out[:, :, None] * W[:, None, :]).reshape(n, -1)
    return out


def _kernel_from_dots(D: np.ndarray, spec: KernelSpec) -> np.ndarray:
    a2 = np.square(spec.weights)
    K = np.full_like(D, a2[0])
    power = np.ones_like(D)
    for i in range(1, spec.order + 1):
        power = power * D
        K += a2[i] * power
    return K


def poly_kernel(x, y, spec: KernelSpec) -> float:
    """sum_i a_i^2 (x . y)^i."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    d = float(np.dot(x, y))
    total, power = 0.0, 1.0
    for i, a in enumerate(spec.weights):
        if i:
            power *= d
        total += a * a * power
    return total


def kernel_matrix(A: np.ndarray, B: np.ndarray, spec: KernelSpec) -> np.ndarray:
    """Cross-kernel between rows of ``A`` and rows of ``B``."""
    return _kernel_from_dots(np.asarray(A) @ np.asarray(B).T, spec)


def gram(inputs: np.ndarray, spec: KernelSpec) -> np.ndarray:
    """Gram matrix of the rows of ``inputs``; exactly symmetric."""
    E = np.atleast_2d(np.asarray(inputs, dtype=float))
    D = E @ E.T
    D = np.triu(D) + np.triu(D, 1).T
    return _kernel_from_dots(D, spec)


def innovation_windows(stream, m: int) -> np.ndarray:
    """Windows ``(e_t, e_{t-1}, ..., e_{t-m+1})`` for every full window.

    A stream of length ``n + m - 1`` gives ``n`` rows; row ``t`` ends at
    stream index ``t + m - 1``.
    """
    e = np.asarray(stream, dtype=float).ravel()
    if e.size < m:
        raise ValueError(f"stream of length {e.size} is shorter than memory {m}")
    return np.ascontiguousarray(sliding_window_view(e, m)[:, ::-1])


@dataclass(frozen=True, eq=False)
class VolterraModel:
    """Fitted model in dual form.

    ``spec`` carries the ridge actually used; ``requested_ridge`` the one
    asked for.  They differ only after escalations.
    """

    spec: KernelSpec
    training_inputs: np.ndarray
    dual_coefficients: np.ndarray
    training_targets: np.ndarray
    in_sample_mse: float
    seed: int
    requested_ridge: float
    escalations: tuple[dict, ...] = ()
    fitted_values: np.ndarray = field(default=None, repr=False)

    @property
    def order(self) -> int:
        return self.spec.order

    @property
    def memory(self) -> int:
        return self.spec.memory

    @property
    def n(self) -> int:
        return self.training_targets.size

    def meta(self) -> dict:
        return {
            "p": self.spec.order,
            "m": self.spec.memory,
            "lambda": self.spec.ridge,
            "requested_lambda": self.requested_ridge,
            "in_sample_mse": self.in_sample_mse,
            "escalations": list(self.escalations),
        }

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "requested_ridge": self.requested_ridge,
            "seed": self.seed,
            "in_sample_mse": self.in_sample_mse,
            "escalations": list(self.escalations),
            "dual_coefficients": [float(v) for v in self.dual_coefficients],
            "training_inputs": [[float(v) for v in row] for row in self.training_inputs],
            "training_targets": [float(v) for v in self.training_targets],
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=1)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    @classmethod
    def from_dict(cls, d: dict) -> "VolterraModel":
        return cls(
            spec=KernelSpec.from_dict(d["spec"]),
            training_inputs=np.array(d["training_inputs"], dtype=float),
            dual_coefficients=np.array(d["dual_coefficients"], dtype=float),
            training_targets=np.array(d["training_targets"], dtype=float),
            in_sample_mse=float(d["in_sample_mse"]),
            seed=int(d["seed"]),
            requested_ridge=float(d["requested_ridge"]),
            escalations=tuple(d.get("escalations", ())),
        )

    @classmethod
    def from_json(cls, text_or_path) -> "VolterraModel":
        text = str(text_or_path)
        if not text.lstrip().startswith("{"):
            with open(text) as fh:
                text = fh.read()
        return cls.from_dict(json.loads(text))


def _solve_spd(K: np.ndarray, X: np.ndarray, lam: float) -> np.ndarray:
    A = K + lam * np.eye(K.shape[0])
    factor = scipy.linalg.cho_factor(A, lower=True, check_finite=False)
    alpha = scipy.linalg.cho_solve(factor, X, check_finite=False)
    # one step of iterative refinement
    alpha = alpha + scipy.linalg.cho_solve(factor, X - A @ alpha, check_finite=False)
    resid = np.max(np.abs(A @ alpha - X))
    if not np.isfinite(resid) or resid >= RESIDUAL_TOL * max(1.0, np.max(np.abs(X))):
        raise np.linalg.LinAlgError(f"residual {resid:.3g} above tolerance")
    return alpha


def fit_windows(
    windows: np.ndarray, targets, spec: KernelSpec, seed: int = 0
) -> VolterraModel:
    """Kernel ridge fit on given innovation windows."""
    X = as_array(targets)
    E = np.asarray(windows, dtype=float)
    if E.shape != (X.size, spec.memory):
        raise ValueError(f"windows shape {E.shape} does not match ({X.size}, {spec.memory})")
    K = gram(E, spec)
    lam = spec.ridge
    escalations = []
    for attempt in range(MAX_ESCALATIONS + 1):
        try:
            alpha = _solve_spd(K, X, lam)
            break
        except (np.linalg.LinAlgError, ValueError) as exc:
            if attempt == MAX_ESCALATIONS:
                raise FitError(
                    f"factorization failed for p={spec.order}, m={spec.memory} "
                    f"after {MAX_ESCALATIONS} ridge escalations (last lambda={lam:g}): {exc}"
                ) from None
            escalations.append({"from": lam, "to": lam * 10, "reason": str(exc)})
            lam *= 10
    fitted = K @ alpha
    mse = float(np.mean((fitted - X) ** 2))
    fitted.setflags(write=False)
    return VolterraModel(
        spec=replace(spec, ridge=lam),
        training_inputs=E,
        dual_coefficients=alpha,
        training_targets=np.array(X),
        in_sample_mse=mse,
        seed=seed,
        requested_ridge=spec.ridge,
        escalations=tuple(escalations),
        fitted_values=fitted,
    )


def fit(x, spec: KernelSpec, seed: int) -> VolterraModel:
    """Regress the series on a freshly drawn iid N(0, 1) innovation stream.

    The stream has length ``n + m - 1`` so that each of the ``n`` targets
    gets a full window.
    """
    X = as_array(x)
    n = X.size
    if n < 2:
        raise ValueError(f"need at least 2 observations, got {n}")
    stream = rng.generator(seed).standard_normal(n + spec.memory - 1)
    return fit_windows(innovation_windows(stream, spec.memory), X, spec, seed)


def predict_many(model: VolterraModel, windows: np.ndarray, chunk: int = 4096) -> np.ndarray:
    W = np.atleast_2d(np.asarray(windows, dtype=float))
    if W.shape[1] != model.memory:
        raise ValueError(f"window length {W.shape[1]} != memory {model.memory}")
    out = np.empty(W.shape[0])
    for s in range(0, W.shape[0], chunk):
        K = kernel_matrix(W[s : s + chunk], model.training_inputs, model.spec)
        out[s : s + chunk] = K @ model.dual_coefficients
    return out


def predict(model: VolterraModel, window) -> float:
    w = np.asarray(window, dtype=float).ravel()
    if w.size != model.memory:
        raise ValueError(f"window length {w.size} != memory {model.memory}")
    return float(predict_many(model, w[None, :])[0])


def extract_kernels(
    model: VolterraModel, i: int, stacked: bool = False, budget: int = EXPANSION_BUDGET
) -> np.ndarray:
    """Order-``i`` coefficients recovered from the dual solution.

    ``stacked=True`` returns the coefficient on the weighted feature block
    ``a_i * phi_i``, i.e. ``a_i Phi_i^T alpha``.  The default returns the
    Volterra kernel proper, ``a_i^2 Phi_i^T alpha``, so that the order-``i``
    term equals ``kernel . phi_i(window)``.  The two agree for unit weights.
    """
    if not 0 <= i <= model.order:
        raise ValueError(f"order index {i} outside [0, {model.order}]")
    Phi = phi_matrix(i, model.training_inputs, budget)
    a = model.spec.weights[i]
    eta = a * (Phi.T @ model.dual_coefficients)
    return eta if stacked else a * eta


def all_kernels(model: VolterraModel, budget: int = EXPANSION_BUDGET) -> list[np.ndarray]:
    return [extract_kernels(model, i, budget=budget) for i in range(model.order + 1)]


def evaluate_explicit(kernels: Sequence[np.ndarray], innovation_stream, n: int | None = None) -> TimeSeries:
    """Evaluate sum_i kernels[i] . phi_i(window_t) directly.

    ``kernels[0]`` is the constant (length 1); ``kernels[i]`` must have
    length ``m**i``.  Output length defaults to ``len(stream) - m + 1``.
    """
    ks = [np.asarray(k, dtype=float).ravel() for k in kernels]
    if not ks or ks[0].size != 1:
        raise ValueError("kernels[0] must be a single constant")
    m = ks[1].size if len(ks) > 1 else 1
    for i, k in enumerate(ks):
        if k.size != m**i:
            raise ValueError(f"kernel of order {i} has {k.size} entries, expected {m}**{i}={m**i}")
    e = np.asarray(innovation_stream, dtype=float).ravel()
    n_avail = e.size - m + 1
    if n is None:
        n = n_avail
    if n < 1 or n > n_avail:
        raise ValueError(f"stream of length {e.size} cannot give {n} outputs with memory {m}")
    W = innovation_windows(e[: n + m - 1], m)
    out = np.full(n, ks[0][0])
    for i in range(1, len(ks)):
        out += phi_matrix(i, W) @ ks[i]
    return TimeSeries(out)


def in_sample_mse(model: VolterraModel) -> float:
    fitted = model.fitted_values
    if fitted is None:
        fitted = gram(model.training_inputs, model.spec) @ model.dual_coefficients
    return float(np.mean((fitted - model.training_targets) ** 2))


def _selection_key(model: VolterraModel):
    s = model.spec
    return (model.in_sample_mse, s.order, s.memory, -model.requested_ridge)


def select_model(x, grid: Sequence[KernelSpec], seed: int) -> tuple[KernelSpec, VolterraModel]:
    """Fit every candidate and keep the smallest in-sample MSE.

    Candidate ``k`` is fitted with ``derive_seed(seed, k)``.  Ties go to
    smaller order, then smaller memory, then larger ridge.
    """
    if not grid:
        raise ValueError("empty model grid")
    X = as_array(x)
    best, best_spec = None, None
    failures = []
    for k, spec in enumerate(grid):
        try:
            model = fit(X, spec, rng.derive_seed(seed, k))
        except FitError as exc:
            failures.append(str(exc))
            continue
        if best is None or _selection_key(model) < _selection_key(best):
            best, best_spec = model, spec
    if best is None:
        raise FitError(f"all {len(grid)} candidates failed; first: {failures[0]}")
    return best_spec, best
