"""Command-line entry point.

    twistlab verify [--config PATH] [--seed U64] [--json PATH] [--dims 1,2,3] [--sigs 1,3] [--tol 1e-10]
    twistlab demo torus2d|lorentz4d [--N LIST] [--scheme central|spectral] [--json PATH]
    twistlab report PATH [--format text|json]

Exit codes: 0 all checks pass, 1 check failures, 2 usage or config errors, 3 internal errors.
TWISTLAB_THREADS caps the number of worker threads.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone

from . import __version__
from .checks import FAULTS, Check, CheckResult, lorentz4d_checks, torus2d_checks, verify_checks
from .config import ConfigError, RunConfig, load_config
from .lattice import DEFAULT_BUDGET, LatticeError, TorusLattice
from .report import ReportError, build_report, dumps, exit_code, load_report, render_text, write_json

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3
log = logging.getLogger("twistlab")


class UsageError(ValueError):
    pass


def worker_count() -> int:
    raw = os.environ.get("TWISTLAB_THREADS")
    if raw is None:
        return min(4, os.cpu_count() or 1)
    try:
        value = int(raw)
    except ValueError as err:
        raise UsageError(f"TWISTLAB_THREADS must be a positive integer, got {raw!r}") from err
    if value < 1:
        raise UsageError(f"TWISTLAB_THREADS must be a positive integer, got {raw!r}")
    return value


def run_checks(checks: list[Check], workers: int) -> tuple[list[CheckResult], dict]:
    """Run on a bounded pool; results come back ordered by check key."""
    keys = [c.key for c in checks]
    if len(set(keys)) != len(keys):
        raise RuntimeError("duplicate check keys")

    def timed(check: Check):
        start = time.perf_counter()
        result = check.run()
        return result, time.perf_counter() - start

    with ThreadPoolExecutor(max_workers=workers) as pool:
        outcomes = list(pool.map(timed, checks))
    per_check = {r.key: round(dt, 6) for r, dt in outcomes}
    results = sorted((r for r, _ in outcomes), key=lambda r: r.key)
    return results, per_check


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from err


def _u64(text: str) -> int:
    try:
        value = int(text)
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from err
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="twistlab", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"twistlab {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    verify = sub.add_parser("verify", help="run the algebraic verification suites")
    verify.add_argument("--config", help="TOML config file")
    verify.add_argument("--seed", type=_u64)
    verify.add_argument("--json", help="write the JSON report here")
    verify.add_argument("--dims", type=_int_list, help="m values, e.g. 1,2,3")
    verify.add_argument("--sigs", type=_int_list, help="n values, e.g. 1,3")
    verify.add_argument("--tol", type=float, help="algebraic tolerance")
    verify.add_argument("--inject-fault", choices=FAULTS, help="negative control (test mode)")

    demo = sub.add_parser("demo", help="lattice demonstrations")
    demo.add_argument("name", choices=("torus2d", "lorentz4d"))
    demo.add_argument("--config", help="TOML config file")
    demo.add_argument("--seed", type=_u64)
    demo.add_argument("--N", dest="n_list", type=_int_list, help="sites per axis, e.g. 16,32,64")
    demo.add_argument("--scheme", choices=("central", "spectral"))
    demo.add_argument("--json", help="write the JSON report here")

    rep = sub.add_parser("report", help="render a saved JSON report")
    rep.add_argument("path")
    rep.add_argument("--format", choices=("text", "json"), default="text")
    return parser


def _emit(report: dict, json_path: str | None) -> int:
    if json_path:
        write_json(report, json_path)
    sys.stdout.write(render_text(report))
    return exit_code(report)


def _timing(started: datetime, wall: float, per_check: dict) -> dict:
    return {"started_utc": started.isoformat(timespec="seconds"), "wall_time_s": round(wall, 6),
            "per_check_s": per_check}


def _execute(command: str, cfg: RunConfig, checks: list[Check], json_path: str | None,
             extra_config: dict | None = None) -> int:
    started = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    results, per_check = run_checks(checks, worker_count())
    config = cfg.to_dict()
    config.update(extra_config or {})
    report = build_report(command, config, results,
                          _timing(started, time.perf_counter() - t0, per_check))
    return _emit(report, json_path)


def cmd_verify(args) -> int:
    cfg = load_config(args.config, seed=args.seed, dims=args.dims, sigs=args.sigs, tau_alg=args.tol)
    fault = args.inject_fault
    return _execute("verify", cfg, verify_checks(cfg, fault), args.json,
                    {"inject_fault": fault} if fault else None)


def _check_lattice(m: int, n_list) -> None:
    for n in n_list:
        try:
            TorusLattice(m, n, DEFAULT_BUDGET)
        except LatticeError as err:
            raise UsageError(str(err)) from err


def cmd_demo(args) -> int:
    cfg = load_config(args.config, seed=args.seed, scheme=args.scheme)
    if args.name == "torus2d":
        n_list = tuple(args.n_list) if args.n_list else cfg.lattice_n
        if len(n_list) < 3 or list(n_list) != sorted(set(n_list)):
            raise UsageError("torus2d needs at least three ascending distinct N values")
        _check_lattice(1, n_list)
        checks = torus2d_checks(cfg, n_list, cfg.scheme)
        extra = {"demo": "torus2d", "demo_n": list(n_list)}
    else:
        n_list = tuple(args.n_list) if args.n_list else (4,)
        _check_lattice(2, n_list)
        checks = [c for n in n_list for c in lorentz4d_checks(cfg, n, cfg.scheme)]
        extra = {"demo": "lorentz4d", "demo_n": list(n_list)}
    return _execute(f"demo {args.name}", cfg, checks, args.json, extra)


def cmd_report(args) -> int:
    report = load_report(args.path)
    if args.format == "json":
        sys.stdout.write(dumps(report))
    else:
        sys.stdout.write(render_text(report))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"verify": cmd_verify, "demo": cmd_demo, "report": cmd_report}
    try:
        return handlers[args.command](args)
    except (ConfigError, UsageError, ReportError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as err:  # noqa: BLE001 - any other failure is an internal error
        log.exception("internal error")
        print(f"internal error: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
