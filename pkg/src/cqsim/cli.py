"""Command line entry point: ``cqsim <subcommand> --config <path> [--out <dir>]``."""
from __future__ import annotations

import argparse
import logging
import sys
import time
import warnings
from pathlib import Path

from . import _kernels
from .config import ConfigError, parse_config, serialize
from .experiments import run_experiment
from .rng import worker_count
from .superpotential import warn_if_not_normalizable

SUBCOMMANDS = {
    "validate": "validate",
    "mc-vs-pde": "mc_vs_pde",
    "schrodinger-check": "schrodinger_check",
    "spectrum": "spectrum",
    "bath-correlation": "bath_correlation",
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cqsim", description="Stochastic field simulations and their checks.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path, help="JSON experiment config")
        p.add_argument("--out", type=Path, default=None, help="output directory (overrides output_dir)")
    return ap


def _setup_log(out: Path) -> logging.Logger:
    log = logging.getLogger("cqsim")
    log.setLevel(logging.INFO)
    for h in list(log.handlers):
        log.removeHandler(h)
        h.close()
    fh = logging.FileHandler(out / "run.log", mode="w")
    fh.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    log.addHandler(fh)
    err = logging.StreamHandler(sys.stderr)
    err.setLevel(logging.WARNING)
    err.setFormatter(logging.Formatter("cqsim: %(levelname)s: %(message)s"))
    log.addHandler(err)
    log.propagate = False
    return log


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    kind = SUBCOMMANDS[args.command]
    try:
        text = args.config.read_text()
    except OSError as exc:
        print(f"cqsim: cannot read config: {exc}", file=sys.stderr)
        return 2
    try:
        cfg, defaults = parse_config(text, kind=kind)
    except ConfigError as exc:
        print(f"cqsim: invalid config: {exc}", file=sys.stderr)
        return 2
    out = args.out if args.out is not None else Path(cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"cqsim: cannot create output directory: {exc}", file=sys.stderr)
        return 2
    log = _setup_log(out)
    log.info("cqsim %s, backend %s, %d worker(s)", args.command, _kernels.BACKEND, worker_count())
    for key, value in defaults:
        log.info("default %s = %r", key, value)
    log.info("resolved config:\n%s", serialize(cfg))
    if kind != "validate":
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            warn_if_not_normalizable(cfg.superpotential_obj())
        for w in caught:
            log.warning("%s", w.message)

    t0 = time.perf_counter()
    try:
        checks = run_experiment(cfg, out)
    except (ValueError, FloatingPointError, RuntimeError, OSError) as exc:
        log.error("%s failed: %s: %s", args.command, type(exc).__name__, exc)
        return 2
    failed = [c.name for c in checks if not c.passed]
    log.info("finished in %.1f s: %d check(s), %d failed", time.perf_counter() - t0, len(checks), len(failed))
    for c in checks:
        print(f"{c.name},{'pass' if c.passed else 'fail'}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
