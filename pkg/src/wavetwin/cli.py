"""Command line interface: ``wavetwin {truth,observe,run,compare}``.

Exit codes: 0 success, 1 configuration or usage error, 2 numerical failure.
"""
import argparse
import contextlib
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .config import SELECTOR_NAMES, load_config
from .exceptions import (
    ConfigError,
    DegenerateEnsembleError,
    InvalidInputError,
    NumericalInstabilityError,
)
from .harness import merge_wave_errors, observe, run_experiment, run_truth, write_csv
from .hos import significant_steepness

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2
log = logging.getLogger("wavetwin")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", help="experiment config file (defaults apply if omitted)")
    common.add_argument("--seed", type=_u64, help="run seed (overrides [run] seed)")
    common.add_argument("--out", help="output directory (overrides [run] output_dir)")
    common.add_argument("--selector", choices=SELECTOR_NAMES,
                        help="assimilated data (overrides [observation] selector)")
    parser = _Parser(prog="wavetwin", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("truth", parents=[common], help="reference run: truth_ship.csv, truth_fields.npz")
    sub.add_parser("observe", parents=[common], help="synthetic measurements: observations.csv")
    sub.add_parser("run", parents=[common], help="DA and no-DA forecasts with all CSV outputs")
    sub.add_parser("compare", parents=[common],
                   help="wave, heave, roll and all runs merged into compare.csv")
    return parser


def _u64(text):
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def thread_limit():
    """Worker cap from ``WAVETWIN_THREADS`` (``None`` means automatic)."""
    raw = os.environ.get("WAVETWIN_THREADS", "").strip()
    if not raw:
        return None
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"WAVETWIN_THREADS must be a non-negative integer, got {raw!r}") from None
    if n < 0:
        raise ConfigError(f"WAVETWIN_THREADS must be a non-negative integer, got {raw!r}")
    return n or None


def _threads(n):
    if n is None:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=n)


def _load(args):
    cfg = load_config(args.config)
    over = {}
    if args.seed is not None:
        over.setdefault("run", {})["seed"] = args.seed
    if args.out is not None:
        over.setdefault("run", {})["output_dir"] = args.out
    if args.selector is not None:
        over["observation"] = {"selector": args.selector}
    return cfg.with_overrides(**over) if over else cfg


@contextlib.contextmanager
def _run_log(out):
    out.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(out / "run.log", mode="w", encoding="utf-8")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    handler.setLevel(logging.DEBUG)
    log.addHandler(handler)
    try:
        yield
    finally:
        log.removeHandler(handler)
        handler.close()


def cmd_truth(cfg, out):
    truth = run_truth(cfg)
    kp = cfg.jonswap.kp * cfg.k0
    steep = significant_steepness(truth.eta, truth.grid, kp)
    write_csv(out / "truth_ship.csv", ("t_over_Tp", "S3", "S4", "V3", "V4", "steepness"),
              np.column_stack([truth.times, truth.ship, steep]))
    np.savez(out / "truth_fields.npz", t_over_Tp=truth.times, x=truth.grid.x,
             eta=truth.eta, psi=truth.psi)


def cmd_observe(cfg, out):
    times, values, names = observe(cfg)
    write_csv(out / "observations.csv", ["t_over_Tp"] + names,
              np.column_stack([times, values]) if times.size else np.empty((0, len(names) + 1)))


def cmd_run(cfg, out):
    (out / "config_used.cfg").write_text(cfg.to_text(), encoding="utf-8")
    run_experiment(cfg, out_dir=out)


def cmd_compare(cfg, out):
    runs = {}
    for name in SELECTOR_NAMES:
        sub = out / name
        path = sub / "wave_error.csv"
        if path.is_file():
            log.info("reusing %s", path)
        else:
            with _run_log(sub):
                cmd_run(cfg.with_overrides(observation={"selector": name}), sub)
        runs[name] = path
    header, table = merge_wave_errors(runs)
    write_csv(out / "compare.csv", header, table)


COMMANDS = {"truth": cmd_truth, "observe": cmd_observe, "run": cmd_run, "compare": cmd_compare}


def main(argv=None):
    args = build_parser().parse_args(argv)
    if not log.handlers:
        stream = logging.StreamHandler(sys.stderr)
        stream.setFormatter(logging.Formatter("%(message)s"))
        stream.setLevel(logging.INFO)
        log.addHandler(stream)
    log.setLevel(logging.DEBUG)
    try:
        cfg = _load(args)
        threads = thread_limit()
        out = Path(cfg.run.output_dir)
        with _threads(threads), _run_log(out):
            log.info("command=%s config=%s threads=%s", args.command, args.config or "<defaults>",
                     threads or "auto")
            COMMANDS[args.command](cfg, out)
    except (ConfigError, InvalidInputError) as err:
        print(f"wavetwin: configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalInstabilityError, DegenerateEnsembleError) as err:
        print(f"wavetwin: numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
