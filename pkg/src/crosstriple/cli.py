"""Command line entry point.

    crosstriple run --config demo:two_point_z --suite all --out results/
    crosstriple sweep --config my.json --out results/

Exit codes: 0 when every check passes, 2 when some check fails, 1 for
configuration and resource errors.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .config import DEMO_NAMES, ConfigError, load_config
from .crossed import BoundaryError
from .groups import ResourceError
from .report import build_report, sweep_records, sweep_result, write_outputs
from .suites import Runner, select

OUT_ENV = "CROSSTRIPLE_OUT"
EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2

log = logging.getLogger("crosstriple")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="crosstriple", description=__doc__.split("\n\n")[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True,
                        help=f"JSON config path, or demo:<name> with name in {', '.join(DEMO_NAMES)}")
    common.add_argument("--out", default=None,
                        help=f"output directory (default: ${OUT_ENV} or ./crosstriple-out)")
    common.add_argument("--threads", type=int, default=1, help="worker threads for suite items")
    common.add_argument("--cap-dim", type=int, default=None,
                        help="largest allowed n*|B_R| (overrides the config)")
    common.add_argument("-q", "--quiet", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", parents=[common], help="run verification suites")
    run.add_argument("--suite", default="all",
                     help="all, or a comma list of: spectrum, bounds, contractivity, "
                          "abelian-isometry, coaction-identity, distance")
    sub.add_parser("sweep", parents=[common], help="long-form CSV of monitored quantities vs R")
    return p


def _out_dir(arg: str | None) -> Path:
    return Path(arg or os.environ.get(OUT_ENV) or "crosstriple-out")


def cmd_run(args) -> int:
    try:
        names = select(args.suite)
        cfg = load_config(args.config, args.cap_dim)
    except (ConfigError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_ERROR
    runner = Runner(cfg, args.threads)
    results, error = [], None
    for name in names:
        log.info("suite %s", name)
        try:
            results.append(runner.run(name))
        except (ResourceError, BoundaryError, ValueError) as exc:
            error = f"{name}: {exc}"
            log.error("%s", error)
            if runner.partial is not None:
                runner.partial.note = f"aborted: {exc}"
                results.append(runner.partial)
            break
    report = build_report(cfg, results, error)
    out = _out_dir(args.out)
    for path in write_outputs(out, report, results):
        log.info("wrote %s", path)
    for name, s in report["summary"].items():
        log.info("%-18s %-7s rows=%d failures=%d", name, s["verdict"], s["rows"], s["failures"])
    if error is not None:
        return EXIT_ERROR
    return EXIT_OK if report["passed"] else EXIT_FAIL


def cmd_sweep(args) -> int:
    try:
        cfg = load_config(args.config, args.cap_dim)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_ERROR
    if len(cfg.radii) < 2:
        log.error("sweep needs at least two radii, got %s", cfg.radii)
        return EXIT_ERROR
    try:
        records = sweep_records(Runner(cfg, args.threads), cfg)
    except (ResourceError, BoundaryError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_ERROR
    out = _out_dir(args.out)
    for path in write_outputs(out, build_report(cfg, []), [sweep_result(records)]):
        log.info("wrote %s", path)
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    if args.threads < 1:
        log.error("--threads must be positive")
        return EXIT_ERROR
    return cmd_run(args) if args.command == "run" else cmd_sweep(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
