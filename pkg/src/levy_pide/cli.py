"""Command-line driver.

Subcommands: ``price``, ``converge``, ``compare-cos``, ``bench``. Exit status is 0
on success, 2 on a domain error and 3 when an iterative method fails to converge.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time

import numpy as np

from .cos import COSConfig, cos_price
from .errors import ConvergenceError, DomainError, LevyPideError
from .grid import build_grid
from .harness import load_config, preset, run_convergence, timing_regression
from .meixner import build_meixner_factors, meixner_step_interp
from .params import MeixnerParams
from .splitting import experiment_price, make_jump_stage

log = logging.getLogger("levy_pide")


def _config(args):
    cfg = load_config(args.config) if args.config else preset(args.model or "nig")
    if args.width is not None:
        cfg.width = args.width
    if args.method is not None:
        cfg.method = args.method
    if args.p is not None:
        cfg.p = args.p
    if getattr(args, "nodes", None):
        cfg.nodes = tuple(int(x) for x in args.nodes.split(","))
    return cfg


def _emit(text: str, out) -> None:
    if out:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_price(args) -> None:
    cfg = _config(args)
    h = args.h if args.h is not None else cfg.ladder()[-1][1]
    price = experiment_price(cfg.model, cfg.market, h, cfg.width, cfg.method, cfg.p,
                             cfg.payoff, cfg.boundary)
    _emit(f"{price!r}\n", args.out)


def cmd_converge(args) -> None:
    report = run_convergence(_config(args))
    if args.out:
        report.write(args.out)
    else:
        sys.stdout.write(report.to_csv())


def cmd_compare_cos(args) -> None:
    cfg = _config(args)
    h = args.h if args.h is not None else cfg.ladder()[-1][1]
    pde = experiment_price(cfg.model, cfg.market, h, cfg.width, cfg.method, cfg.p,
                           cfg.payoff, cfg.boundary)
    ref = cos_price(cfg.model, cfg.market, cfg.payoff, cfg.market.maturity,
                    COSConfig(cfg.cos_terms, cfg.cos_width))
    _emit("h,pde,cos,rel_gap\n"
          f"{h!r},{pde!r},{ref!r},{(pde - ref) / ref!r}\n", args.out)


def cmd_bench(args) -> None:
    """Time one jump step across the node ladder and regress time against N."""
    cfg = _config(args)
    rows = ["N,wall_ms"]
    nodes, times = [], []
    for n, h in cfg.ladder():
        grid = build_grid(h, cfg.width)
        vec = np.maximum(np.exp(grid.nodes) - 1.0, 0.0)
        if isinstance(cfg.model, MeixnerParams) and (cfg.method or "interp") == "interp":
            fs = build_meixner_factors(cfg.model, grid, cfg.market.dt, cfg.p, method="interp")
            fs.lu_first(), fs.lu_second()
            step = lambda v, fs=fs: meixner_step_interp(fs, v)  # noqa: E731
        else:
            step = make_jump_stage(cfg.model, grid, cfg.market.dt, cfg.method, cfg.p)
        reps = max(1, args.repeat)
        t0 = time.perf_counter()
        for _ in range(reps):
            step(vec)
        ms = 1e3 * (time.perf_counter() - t0) / reps
        nodes.append(n)
        times.append(ms)
        rows.append(f"{n},{ms!r}")
    fit = timing_regression(times, nodes)
    rows.append(f"# slope = {fit.slope!r} (advisory)")
    rows.append("# per_step = " + ",".join(f"{b:.3f}" for b in fit.per_step))
    _emit("\n".join(rows) + "\n", args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="levy-pide", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    handlers = {"price": cmd_price, "converge": cmd_converge,
                "compare-cos": cmd_compare_cos, "bench": cmd_bench}
    for name, fn in handlers.items():
        p = sub.add_parser(name)
        p.set_defaults(func=fn)
        p.add_argument("--model", help="preset name, e.g. nig-negskew, gh-lowlam, meixner-interp")
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--h", type=float, help="space step (price, compare-cos)")
        p.add_argument("--width", type=float, help="log-domain width of the grid")
        p.add_argument("--p", type=int, help="Meixner truncation order")
        p.add_argument("--method", choices=("expm", "pade", "product", "interp"))
        p.add_argument("--nodes", help="comma-separated node counts for the ladder")
        p.add_argument("--out", help="output path (default stdout)")
        if name == "bench":
            p.add_argument("--repeat", type=int, default=20)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        args.func(args)
    except ConvergenceError as exc:
        log.error("%s", exc)
        return 3
    except DomainError as exc:
        log.error("%s", exc)
        return 2
    except LevyPideError as exc:
        log.error("%s", exc)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
