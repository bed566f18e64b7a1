"""Monte-Carlo type-I-error study.

Seed path per run: ``derive_seed(base_seed, process_index, run, role[, method])``
with roles from :mod:`volterraboot.rng`.  Rows are emitted sorted by
(process, run, method) whatever the worker count.
"""

from __future__ import annotations

import csv
import datetime as _dt
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import rng
from .bootstrap import Method
from .hypotest import TestConfig, run_test
from .procgen import DEFAULT_BURN_IN, ProcessSpec, get_process, simulate, true_rho1
from .volterra import DEFAULT_MEMORIES, DEFAULT_ORDERS, DEFAULT_RIDGES, make_grid

WORKERS_ENV = "VOLTERRABOOT_WORKERS"
MAX_ERROR_FRACTION = 0.05
ROW_COLUMNS = ("process", "method", "run", "p", "m", "lambda", "D_n", "p_value", "reject", "flags")
_METHOD_TAG = {Method.VOLTERRA: 1, Method.AR_SIEVE: 2}


@dataclass
class GridConfig:
    orders: list[int] = field(default_factory=lambda: list(DEFAULT_ORDERS))
    memories: list[int] = field(default_factory=lambda: list(DEFAULT_MEMORIES))
    ridges: list[float] = field(default_factory=lambda: list(DEFAULT_RIDGES))

    def build(self, restrict_order_to_one: bool = False):
        orders = [1] if restrict_order_to_one else self.orders
        return make_grid(orders, self.memories, self.ridges)


@dataclass
class ExperimentConfig:
    processes: list[str] = field(default_factory=lambda: ["P1", "P2", "P3", "P4"])
    n: int = 100
    runs: int = 200
    B: int = 250
    alpha: float = 0.05
    methods: list[Method] = field(default_factory=lambda: [Method.AR_SIEVE, Method.VOLTERRA])
    volterra_grid: GridConfig = field(default_factory=GridConfig)
    restrict_order_to_one: dict[str, bool] = field(default_factory=lambda: {"P1": True})
    sieve_p_max: int = 20
    burn_in: int = DEFAULT_BURN_IN
    variance_lag: int = 10
    true_rho_reps: int = 20_000
    base_seed: int = 20240601
    # fixed c0 per process; skips the Monte-Carlo approximation when given
    c0: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        self.methods = [Method.parse(m) for m in self.methods]
        if isinstance(self.volterra_grid, dict):
            self.volterra_grid = GridConfig(**self.volterra_grid)
        self.validate()

    def validate(self) -> None:
        for name in ("n", "runs", "B", "true_rho_reps"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.burn_in < 0 or self.variance_lag < 0 or self.sieve_p_max < 0:
            raise ValueError("burn_in, variance_lag and sieve_p_max must be nonnegative")
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.processes:
            raise ValueError("no processes configured")
        if not self.methods:
            raise ValueError("no methods configured")
        if Method.VOLTERRA in self.methods:
            g = self.volterra_grid
            if not (g.orders and g.memories and g.ridges):
                raise ValueError("VOLTERRA method enabled but the Volterra grid is empty")
        for name in self.processes:
            self.process_spec(name)

    def process_spec(self, name: str) -> ProcessSpec:
        return get_process(name)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["methods"] = [m.value for m in self.methods]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class RunRow:
    process: str
    method: Method
    run: int
    p: int | None = None
    m: int | None = None
    lam: float | None = None
    D_n: float | None = None
    p_value: float | None = None
    reject: bool | None = None
    flags: list[str] = field(default_factory=list)

    @property
    def failed(self) -> bool:
        return self.reject is None

    def csv_fields(self) -> list[str]:
        fmt = lambda v: "" if v is None else repr(float(v))  # noqa: E731
        return [
            self.process,
            self.method.value,
            str(self.run),
            "" if self.p is None else str(self.p),
            "" if self.m is None else str(self.m),
            fmt(self.lam),
            fmt(self.D_n),
            fmt(self.p_value),
            "" if self.reject is None else str(int(self.reject)),
            ";".join(self.flags),
        ]


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    c0: dict[str, float]
    rows: list[RunRow]

    def summary(self) -> dict:
        out: dict = {}
        for proc in self.config.processes:
            out[proc] = {"c0": self.c0[proc]}
            for method in self.config.methods:
                rows = [r for r in self.rows if r.process == proc and r.method is method]
                ok = [r for r in rows if not r.failed]
                rate = float(np.mean([r.reject for r in ok])) if ok else float("nan")
                ps = [r.p for r in ok if r.p is not None]
                ms = [r.m for r in ok if r.m is not None]
                out[proc][method.value] = {
                    "rejection_rate": rate,
                    "se": math.sqrt(rate * (1 - rate) / len(ok)) if ok else float("nan"),
                    "avg_p": float(np.mean(ps)) if ps else None,
                    "avg_m": float(np.mean(ms)) if ms else None,
                    "runs": len(rows),
                    "errors": len(rows) - len(ok),
                }
        return out

    def rejection_rate(self, process: str, method) -> float:
        return self.summary()[process][Method.parse(method).value]["rejection_rate"]

    def write_rows_csv(self, path, timestamp: bool = True) -> None:
        with open(path, "w", newline="") as fh:
            if timestamp:
                fh.write(f"# generated {_dt.datetime.now(_dt.timezone.utc).isoformat()}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(ROW_COLUMNS)
            for r in self.rows:
                w.writerow(r.csv_fields())

    def write_summary_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump({"config": self.config.to_dict(), "summary": self.summary()}, fh, indent=2, sort_keys=True)
            fh.write("\n")

    def write(self, out_dir) -> tuple[Path, Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        rows, summary = out_dir / "rows.csv", out_dir / "summary.json"
        self.write_rows_csv(rows)
        self.write_summary_json(summary)
        return rows, summary


def read_rows_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(lines))


def _one_run(cfg: ExperimentConfig, proc_index: int, proc: str, c0: float, run: int) -> list[RunRow]:
    spec = cfg.process_spec(proc)
    rows = []
    try:
        x = simulate(spec, cfg.n, cfg.burn_in, rng.derive_seed(cfg.base_seed, proc_index, run, rng.SIMULATE))
    except Exception as exc:  # recorded, not dropped
        return [RunRow(proc, m, run, flags=[f"error:simulate:{exc}"]) for m in cfg.methods]
    for method in cfg.methods:
        seed = rng.derive_seed(cfg.base_seed, proc_index, run, rng.TEST, _METHOD_TAG[method])
        tc = TestConfig(c0=c0, alpha=cfg.alpha, B=cfg.B, method=method, variance_lag=cfg.variance_lag)
        if method is Method.VOLTERRA:
            arg = cfg.volterra_grid.build(cfg.restrict_order_to_one.get(proc, False))
        else:
            arg = cfg.sieve_p_max
        try:
            res = run_test(x, tc, arg, seed)
        except Exception as exc:
            rows.append(RunRow(proc, method, run, flags=[f"error:{type(exc).__name__}:{exc}"]))
            continue
        rows.append(
            RunRow(
                proc,
                method,
                run,
                p=res.model.get("p"),
                m=res.model.get("m"),
                lam=res.model.get("lambda"),
                D_n=res.D_n,
                p_value=res.p_value,
                reject=res.reject,
                flags=res.flags,
            )
        )
    return rows


def _run_star(args):
    return _one_run(*args)


def resolve_workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    return max(1, workers)


def compute_c0(cfg: ExperimentConfig) -> dict[str, float]:
    out = {}
    for i, proc in enumerate(cfg.processes):
        if proc in cfg.c0:
            out[proc] = float(cfg.c0[proc])
        else:
            seed = rng.derive_seed(cfg.base_seed, i, rng.TRUE_RHO)
            out[proc] = true_rho1(cfg.process_spec(proc), cfg.true_rho_reps, cfg.n, seed, cfg.burn_in)
    return out


def run_experiment(
    cfg: ExperimentConfig,
    workers: int | None = None,
    out_dir=None,
    progress: bool = False,
) -> ExperimentReport:
    """Run every (process, run, method) test and aggregate rejection rates.

    Raises RuntimeError when more than 5% of the runs of any
    (process, method) pair failed; the report is still written first.
    """
    cfg.validate()
    c0 = compute_c0(cfg)
    jobs = [
        (cfg, i, proc, c0[proc], run)
        for i, proc in enumerate(cfg.processes)
        for run in range(cfg.runs)
    ]
    workers = resolve_workers(workers)
    results: list[list[RunRow]] = []
    if workers == 1:
        it = map(_run_star, jobs)
        pool = None
    else:
        pool = ProcessPoolExecutor(max_workers=workers)
        it = pool.map(_run_star, jobs, chunksize=4)
    try:
        for k, rows in enumerate(it, start=1):
            results.append(rows)
            if progress:
                print(f"\r{k}/{len(jobs)} runs", end="", file=sys.stderr, flush=True)
    finally:
        if pool is not None:
            pool.shutdown()
    if progress:
        print(file=sys.stderr)

    order = {m: k for k, m in enumerate(cfg.methods)}
    proc_order = {p: k for k, p in enumerate(cfg.processes)}
    rows = sorted(
        (r for batch in results for r in batch),
        key=lambda r: (proc_order[r.process], r.run, order[r.method]),
    )
    report = ExperimentReport(cfg, c0, rows)
    if out_dir is not None:
        report.write(out_dir)
    for proc, per in report.summary().items():
        for method in cfg.methods:
            s = per[method.value]
            if s["errors"] > MAX_ERROR_FRACTION * s["runs"]:
                raise RuntimeError(
                    f"{proc}/{method.value}: {s['errors']} of {s['runs']} runs failed "
                    f"(limit {MAX_ERROR_FRACTION:.0%})"
                )
    return report


def smoke_config(**overrides) -> ExperimentConfig:
    """Small configuration: 50 runs, B=99, coarse grid."""
    cfg = ExperimentConfig(
        runs=50,
        B=99,
        volterra_grid=GridConfig(orders=[1, 2, 3], memories=[5, 10, 20, 30], ridges=[1e-6]),
        true_rho_reps=5_000,
    )
    return replace(cfg, **overrides) if overrides else cfg
