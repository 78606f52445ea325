"""Command-line surface: validate, jump, integrate, compare.

Exit codes: 0 success, 1 validation/comparison/config failure, 2 numerical
guard (step size too large for the model's rates).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np
import yaml

from .configio import (
    ConfigError,
    emit_csv,
    load_config,
    parse_config,
    parse_model_file,
    read_csv,
)
from .engine import StepTooLargeError, TrajectoryFailureError, TrajectoryState, run_ensemble
from .model import validate
from .reference import density_expectations, rk4_integrate
from .stats import compare_series

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_STEP_GUARD = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qjump",
        description="Stochastic jump and deterministic integration of "
        "coupled-component Lindblad master equations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a config or model file")
    p.add_argument("config", help="path to a simulation config or model file")

    p = sub.add_parser("jump", help="run a trajectory ensemble and write CSV")
    p.add_argument("config", help="path to a simulation config")
    p.add_argument("--traj", type=int, help="override trajectory count")
    p.add_argument("--seed", type=int, help="override master seed")
    p.add_argument("--dt", type=float, help="override time step")
    p.add_argument("--tmax", type=float, help="override total time")
    p.add_argument("--workers", type=int, help="override worker count")
    p.add_argument("--out", help="override output CSV path")

    p = sub.add_parser("integrate", help="integrate the master equation and write CSV")
    p.add_argument("config", help="path to a simulation config")
    p.add_argument("--dt", type=float, help="override time step")
    p.add_argument("--tmax", type=float, help="override total time")
    p.add_argument("--out", help="override output CSV path")

    p = sub.add_parser("compare", help="compare two CSV time series")
    p.add_argument("csv_a")
    p.add_argument("csv_b")
    p.add_argument("--abs-tol", type=float, default=0.05)
    p.add_argument("--z-max", type=float, default=3.0)
    return parser


def _cmd_validate(args) -> int:
    with open(args.config, encoding="utf-8") as fh:
        text = fh.read()
    try:
        root = yaml.safe_load(text)
    except yaml.YAMLError:
        root = None
    if isinstance(root, dict) and "dimensions" in root and "model" not in root:
        model = parse_model_file(text)
        report = validate(model)
        print(report)
        return EXIT_OK if report.ok else EXIT_FAIL
    _, model = parse_config(text)
    print(validate(model))
    return EXIT_OK


def _cmd_jump(args) -> int:
    config, model = load_config(args.config)
    n_traj = args.traj if args.traj is not None else config.n_traj
    seed = args.seed if args.seed is not None else config.master_seed
    dt = args.dt if args.dt is not None else config.dt
    t_max = args.tmax if args.tmax is not None else config.t_max
    workers = args.workers if args.workers is not None else config.workers
    out = args.out if args.out is not None else config.output
    if out is None:
        print("error: no output path (set 'output' in the config or pass --out)",
              file=sys.stderr)
        return EXIT_FAIL
    result = run_ensemble(
        model,
        TrajectoryState(0.0, config.initial),
        dt=dt,
        t_max=t_max,
        n_traj=n_traj,
        master_seed=seed,
        observables=config.observables,
        workers=workers,
        sample_stride=config.sample_stride,
    )
    emit_csv(result, out)
    print(f"wrote {out}: {n_traj} trajectories, seed {seed}, "
          f"{result.times.size} samples, {len(result.names)} observables")
    return EXIT_OK


def _cmd_integrate(args) -> int:
    config, model = load_config(args.config)
    dt = args.dt if args.dt is not None else config.dt
    t_max = args.tmax if args.tmax is not None else config.t_max
    out = args.out if args.out is not None else config.output
    if out is None:
        print("error: no output path (set 'output' in the config or pass --out)",
              file=sys.stderr)
        return EXIT_FAIL
    initial = np.array([np.outer(psi, psi.conj()) for psi in config.initial])
    series = rk4_integrate(model, initial, dt=dt, t_max=t_max,
                           sample_stride=config.sample_stride)
    emit_csv(density_expectations(series, config.observables), out)
    print(f"wrote {out}: {series.times.size} samples, "
          f"{len(config.observables)} observables")
    return EXIT_OK


def _cmd_compare(args) -> int:
    times_a, names_a, values_a, stderr_a = read_csv(args.csv_a)
    times_b, names_b, values_b, stderr_b = read_csv(args.csv_b)
    if times_a.shape != times_b.shape or not np.array_equal(times_a, times_b):
        print("error: grid mismatch between the two files", file=sys.stderr)
        return EXIT_FAIL
    common = [n for n in names_a if n in names_b]
    if not common:
        print("error: no common observable columns", file=sys.stderr)
        return EXIT_FAIL
    all_ok = True
    for name in common:
        a = values_a[:, names_a.index(name)]
        b = values_b[:, names_b.index(name)]
        stderr = np.maximum(
            stderr_a[:, names_a.index(name)], stderr_b[:, names_b.index(name)]
        )
        report = compare_series(a, b, stderr, abs_tol=args.abs_tol,
                                z_max=args.z_max, times=times_a)
        print(f"{name}: {report}")
        all_ok = all_ok and report.passed
    return EXIT_OK if all_ok else EXIT_FAIL


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_FAIL
    handlers = {
        "validate": _cmd_validate,
        "jump": _cmd_jump,
        "integrate": _cmd_integrate,
        "compare": _cmd_compare,
    }
    try:
        return handlers[args.command](args)
    except StepTooLargeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STEP_GUARD
    except TrajectoryFailureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if isinstance(exc.__cause__, StepTooLargeError):
            return EXIT_STEP_GUARD
        return EXIT_FAIL
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
