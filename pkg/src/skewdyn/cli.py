"""Command line front end.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 output I/O error.
"""

import argparse
import logging
import os
import sys
import tempfile
from pathlib import Path

from .core import KMH, ConfigError, load_config
from .eigen import MODELS, EigenError, find_modes
from .loads import Train, hslm_a1, load_train_file, train_summary
from .quadrature import QuadratureError
from .response import ResponseError, daf, default_workers, envelope, resonance_speeds, \
    time_history
from .studies import RATIO_GRID, SKEW_GRID_DEG, SweepSpec, load_span_fixtures, sweep_skew, \
    sweep_span, sweep_stiffness

__all__ = ["main", "run", "emit_plotdata", "format_value"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

MODES_HEADER = ("mode", "freq_hz", "beta", "lambda", "Mf", "Mt")
HISTORY_HEADER = ("t", "u", "udot2", "theta")
ENVELOPE_HEADER = ("v_kmh", "max_u_m", "max_a_ms2")
SWEEP_HEADER = ("param_value", "f1_hz", "max_u_m", "max_a_ms2")
BUILTIN_TRAINS = {"hslm_a1": hslm_a1, "hslm-a1": hslm_a1}


class OutputError(OSError):
    pass


def format_value(value):
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return format(float(value), ".9g")


def emit_plotdata(header, rows, path=None):
    """Write a CSV with LF line endings; atomically replaces ``path`` if given."""
    lines = [",".join(header)]
    lines += [",".join(format_value(v) for v in row) for row in rows]
    text = "\n".join(lines) + "\n"
    if path is None:
        sys.stdout.write(text)
        return
    path = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _config(args):
    return load_config(args.config, args.set or ())


def _train(cfg, config_path):
    source = cfg.train.file
    if source is None:
        if cfg.train.load is None:
            raise ConfigError("[train] needs 'file' or 'P'")
        return Train.single(cfg.train.load)
    if source.lower() in BUILTIN_TRAINS:
        return BUILTIN_TRAINS[source.lower()]()
    path = Path(source)
    if not path.is_absolute():
        path = Path(config_path).parent / path
    return load_train_file(path)


def _speed(args, cfg):
    if getattr(args, "speed", None) is not None:
        return args.speed * KMH
    if cfg.train.speed is None:
        raise ConfigError("no speed: set 'v' in [train] or pass --speed")
    return cfg.train.speed


def _workers(args):
    return args.threads if args.threads is not None else default_workers()


def cmd_modes(args):
    cfg = _config(args)
    modes = find_modes(cfg.deck, args.model, cfg.run.n_modes, flexural_only=args.flexural_only)
    rows = [(md.index, md.freq_hz, md.beta, md.lam, md.modal_mass_flex,
             md.modal_mass_tors) for md in modes]
    emit_plotdata(MODES_HEADER, rows, args.output)


def cmd_history(args):
    cfg = _config(args)
    convoy = _train(cfg, args.config).at_speed(_speed(args, cfg), cfg.train.eccentricity)
    h = time_history(cfg.deck, args.model, convoy, cfg.run)
    theta = h.theta if h.theta is not None else [None] * len(h.times)
    emit_plotdata(HISTORY_HEADER, zip(h.times, h.u, h.u_ddot, theta), args.output)


def cmd_envelope(args):
    cfg = _config(args)
    env = envelope(cfg.deck, args.model, _train(cfg, args.config), args.vmin * KMH,
                   args.vmax * KMH, args.vstep * KMH, cfg.run, workers=_workers(args),
                   eccentricity=cfg.train.eccentricity)
    emit_plotdata(ENVELOPE_HEADER, zip(env.speeds_kmh, env.max_abs_u, env.max_abs_u_ddot),
                  args.output)


def cmd_resonance(args):
    speeds = resonance_speeds(args.f0, args.D, args.imax)
    emit_plotdata(("i", "v_ms", "v_kmh"),
                  [(i, v, v / KMH) for i, v in enumerate(speeds, start=1)], args.output)


def cmd_daf(args):
    cfg = _config(args)
    speed = _speed(args, cfg)
    value = daf(cfg.deck, args.model, _train(cfg, args.config), speed, cfg.run,
                eccentricity=cfg.train.eccentricity)
    emit_plotdata(("v_kmh", "daf"), [(speed / KMH, value)], args.output)


def cmd_sweep(args):
    cfg = _config(args)
    train = _train(cfg, args.config)
    speed_range = (args.vmin * KMH, args.vmax * KMH, args.vstep * KMH)
    common = dict(base_deck=cfg.deck, train=train, speed_range=speed_range,
                  settings=cfg.run, model=args.model)
    workers = _workers(args)
    if args.param == "skew":
        spec = SweepSpec("skew_angle", tuple(SKEW_GRID_DEG), **common)
        points = sweep_skew(spec, workers)
        rows = [(p.value, p.f1_hz, p.max_u, p.max_a) for p in points]
        header = SWEEP_HEADER
    elif args.param == "ratio":
        spec = SweepSpec("stiffness_ratio", tuple(RATIO_GRID), **common)
        points = sweep_stiffness(spec, workers)
        rows = [(p.value, p.f1_hz, p.max_u, p.max_a) for p in points]
        header = SWEEP_HEADER
    else:
        spans = tuple(fx.L for fx in load_span_fixtures())
        spec = SweepSpec("span_length", spans, **common)
        results = sweep_span(spec, v_step=args.vstep * KMH, workers=workers)
        rows = [(r.fixture.L, r.second_resonance.f1_hz, r.second_resonance.max_u,
                 r.second_resonance.max_a, r.second_resonance.daf) for r in results]
        header = SWEEP_HEADER + ("daf",)
    emit_plotdata(header, rows, args.output)


def cmd_train_check(args):
    summary = train_summary(load_train_file(args.file))
    out = sys.stdout
    out.write(f"axles: {summary['axles']}\n")
    out.write(f"total_load_kN: {summary['total_load'] / 1000.0:.9g}\n")
    out.write(f"length_m: {summary['length']:.9g}\n")
    out.write("spacing_m,count\n")
    for spacing, count in summary["spacings"].items():
        out.write(f"{spacing:.9g},{count}\n")


def build_parser():
    parser = argparse.ArgumentParser(prog="skewdyn",
                                     description="Moving-load dynamics of skew bridge decks.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="verb", required=True)

    def with_config(p, model_default="analytical"):
        p.add_argument("--config", required=True, help="configuration file")
        p.add_argument("--model", choices=MODELS, default=model_default)
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a configuration key (repeatable)")
        p.add_argument("-o", "--output", help="output CSV (default: stdout)")
        return p

    def with_threads(p):
        p.add_argument("--threads", type=int, default=None,
                       help="worker processes (default: SKEWDYN_THREADS or CPU count)")

    def with_speeds(p, vstep=5.0):
        p.add_argument("--vmin", type=float, default=100.0, help="km/h")
        p.add_argument("--vmax", type=float, default=300.0, help="km/h")
        p.add_argument("--vstep", type=float, default=vstep, help="km/h")

    p = with_config(sub.add_parser("modes", help="natural frequencies and modal masses"))
    p.add_argument("--flexural-only", action="store_true",
                   help="skip torsion-dominated modes")
    p.set_defaults(func=cmd_modes)

    p = with_config(sub.add_parser("history", help="time history at the evaluation point"))
    p.add_argument("--speed", type=float, help="km/h (overrides [train] v)")
    p.set_defaults(func=cmd_history)

    p = with_config(sub.add_parser("envelope", help="maximum response over a speed range"))
    with_speeds(p)
    with_threads(p)
    p.set_defaults(func=cmd_envelope)

    p = sub.add_parser("resonance", help="resonance speeds f0 D / i")
    p.add_argument("--f0", type=float, required=True, help="fundamental frequency [Hz]")
    p.add_argument("--D", type=float, required=True, help="regular axle spacing [m]")
    p.add_argument("--imax", type=int, default=3)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_resonance)

    p = with_config(sub.add_parser("daf", help="dynamic amplification factor"))
    p.add_argument("--speed", type=float, help="km/h (overrides [train] v)")
    p.set_defaults(func=cmd_daf)

    p = with_config(sub.add_parser("sweep", help="parametric study"), "simplified")
    p.add_argument("--param", choices=("skew", "ratio", "span"), required=True)
    with_speeds(p)
    with_threads(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("train-check", help="summarize a train file")
    p.add_argument("file")
    p.set_defaults(func=cmd_train_check)
    return parser


def run(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv[:2] == ["train", "check"]:
        argv = ["train-check"] + argv[2:]
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"skewdyn: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OutputError as exc:
        print(f"skewdyn: {exc}", file=sys.stderr)
        return EXIT_IO
    except (EigenError, QuadratureError, ResponseError, ArithmeticError) as exc:
        print(f"skewdyn: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"skewdyn: invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
