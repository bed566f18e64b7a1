"""Command-line interface: ``simulate``, ``fit``, ``test``, ``experiment``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bootstrap as bs
from .bootstrap import Method
from .experiment import ExperimentConfig, GridConfig, run_experiment
from .hypotest import TestConfig, run_test
from .procgen import DEFAULT_BURN_IN, ProcessSpec, get_process, read_csv, simulate
from .volterra import DEFAULT_MEMORIES, DEFAULT_ORDERS, DEFAULT_RIDGES, extract_kernels, make_grid, select_model


class ConfigError(ValueError):
    pass


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _add_grid_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--orders", type=_ints, default=None, help="comma list of Volterra orders p")
    p.add_argument("--memories", type=_ints, default=None, help="comma list of memories m")
    p.add_argument("--ridges", type=_floats, default=None, help="comma list of ridge penalties")


def _grid_from_args(args):
    orders = list(DEFAULT_ORDERS) if args.orders is None else args.orders
    memories = list(DEFAULT_MEMORIES) if args.memories is None else args.memories
    ridges = list(DEFAULT_RIDGES) if args.ridges is None else args.ridges
    if not (orders and memories and ridges):
        raise ConfigError("the Volterra method needs a non-empty grid (--orders/--memories/--ridges)")
    return make_grid(orders, memories, ridges)


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def cmd_simulate(args) -> int:
    spec = get_process(args.process)
    if args.params:
        spec = ProcessSpec(spec.kind, tuple(args.params), spec.innovation, spec.name)
    x = simulate(spec, args.n, args.burn_in, args.seed)
    if args.out:
        try:
            x.to_csv(args.out)
        except OSError as exc:
            raise OSError(f"cannot write {args.out}: {exc}") from None
    else:
        sys.stdout.write("x\n" + "".join(f"{v!r}\n" for v in x.values.tolist()))
    return 0


def cmd_fit(args) -> int:
    x = read_csv(args.input)
    grid = _grid_from_args(args)
    spec, model = select_model(x, grid, args.seed)
    report = {
        "n": len(x),
        "seed": args.seed,
        "grid_size": len(grid),
        "selected": {"p": spec.order, "m": spec.memory, "lambda": spec.ridge},
        "effective_lambda": model.spec.ridge,
        "in_sample_mse": model.in_sample_mse,
        "escalations": list(model.escalations),
    }
    if args.extract_kernels is not None:
        eta = extract_kernels(model, args.extract_kernels)
        report["kernel"] = {"order": args.extract_kernels, "length": int(eta.size), "values": eta.tolist()}
    if args.model_out:
        model.to_json(args.model_out)
    _emit(json.dumps(report, indent=2), args.out)
    return 0


def cmd_test(args) -> int:
    method = Method.parse(args.method)
    if method is Method.VOLTERRA:
        arg = _grid_from_args(args)
    else:
        if any(getattr(args, k) is not None for k in ("orders", "memories", "ridges")):
            raise ConfigError("grid flags apply only to --method volterra")
        arg = args.p_max
    cfg = TestConfig(c0=args.c0, alpha=args.alpha, B=args.B, method=method, variance_lag=args.variance_lag)
    x = read_csv(args.input)
    res = run_test(x, cfg, arg, args.seed)
    _emit(res.to_json(include_replicates=args.replicates), args.out)
    return 0


def cmd_experiment(args) -> int:
    data = {}
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
    overrides = {
        "n": args.n,
        "runs": args.runs,
        "B": args.B,
        "alpha": args.alpha,
        "base_seed": args.seed,
        "true_rho_reps": args.true_rho_reps,
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    if args.processes:
        data["processes"] = args.processes.split(",")
    if args.methods:
        data["methods"] = args.methods.split(",")
    grid = dict(data.get("volterra_grid", {}))
    for key in ("orders", "memories", "ridges"):
        if getattr(args, key) is not None:
            grid[key] = getattr(args, key)
    if grid:
        data["volterra_grid"] = GridConfig(**grid)
    try:
        cfg = ExperimentConfig.from_dict(data)
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"invalid experiment config: {exc}") from None
    report = run_experiment(cfg, workers=args.workers, out_dir=args.out, progress=not args.quiet)
    print(json.dumps(report.summary(), indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="volterraboot", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a process to CSV")
    p.add_argument("--process", required=True, help="ar1, garch11, bilinear, expar (or P1..P4)")
    p.add_argument("--params", type=_floats, default=None, help="override process parameters")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--burn-in", type=int, default=DEFAULT_BURN_IN)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="select and fit a Volterra model")
    p.add_argument("--input", required=True)
    _add_grid_flags(p)
    p.add_argument("--extract-kernels", type=int, default=None, metavar="I")
    p.add_argument("--model-out", default=None, help="write the fitted model as JSON")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("test", help="bootstrap test of rho(1) = c0")
    p.add_argument("--input", required=True)
    p.add_argument("--method", default="volterra", help="volterra or arsieve")
    p.add_argument("--c0", type=float, default=0.0)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--B", type=int, default=250)
    p.add_argument("--variance-lag", type=int, default=10)
    p.add_argument("--p-max", type=int, default=bs.DEFAULT_P_MAX)
    p.add_argument("--replicates", action="store_true", help="include D* replicates in the output")
    _add_grid_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("experiment", help="Monte-Carlo type I error study")
    p.add_argument("--config", default=None, help="JSON experiment config")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--processes", default=None)
    p.add_argument("--methods", default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--B", type=int, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--true-rho-reps", type=int, default=None)
    _add_grid_flags(p)
    p.add_argument("--quiet", action="store_true")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="output directory for rows.csv and summary.json")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, KeyError, OSError) as exc:
        print(f"volterraboot {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
