"""Command-line entry point.

Subcommands: ``run`` (one trajectory), ``ensemble`` (many seeds + summary),
``presets`` (list the built-in regimes), ``validate-config`` (check a
config without running). Exit codes: 0 success, 2 usage/config error,
3 numerical failure. ``CATTRACK_OUT_DIR`` sets the default output
directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import fields

from .errors import ConfigError, NumericalError
from .params import PRESETS
from .records import RunConfig, write_records

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


def _parse_set(items: list[str] | None) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        try:
            out[key.strip()] = float(value)
        except ValueError:
            raise ConfigError(f"--set {key}: not a number: {value!r}") from None
    return out


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", default=None, help="parameter regime (see `presets`)")
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument(
        "--set",
        action="append",
        metavar="KEY=VALUE",
        help="override a physical or feedback parameter (repeatable)",
    )
    p.add_argument("--duration", type=float, default=None, help="run length in periods")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--decimation", type=int, default=None, help="samples per period")
    p.add_argument("--out", default=None, help="output NDJSON path")
    p.add_argument("--no-x2", action="store_true", help="disable the x^2 channel")
    p.add_argument("--no-qubit", action="store_true", help="disable the qubit channel")
    p.add_argument("--no-feedback", action="store_true", help="disable the controller")


def _build_config(args) -> RunConfig:
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                cfg = RunConfig.from_dict(json.load(fh))
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    else:
        cfg = RunConfig()
    updates = dict(
        preset=args.preset,
        overrides=_parse_set(args.set),
        duration=args.duration,
        seed=args.seed,
        decimation=args.decimation,
        out=args.out,
    )
    if getattr(args, "n_traj", None) is not None:
        updates["n_traj"] = args.n_traj
    if getattr(args, "seeds", None):
        updates["seeds"] = [int(s) for s in args.seeds.split(",")]
    cfg = cfg.merged(**updates)
    if args.no_x2:
        cfg.measure_x2 = False
    if args.no_qubit:
        cfg.measure_qubit = False
    if args.no_feedback:
        cfg.feedback_on = False
    return cfg.validate()


def _default_out(cfg: RunConfig, stem: str) -> str:
    if cfg.out:
        return cfg.out
    outdir = os.environ.get("CATTRACK_OUT_DIR", ".")
    os.makedirs(outdir, exist_ok=True)
    return os.path.join(outdir, f"{stem}_{cfg.preset}_seed{cfg.seed}.ndjson")


def _cmd_run(args) -> int:
    from .orchestrator import parity_agreement, run_trajectory, tracking_rms

    cfg = _build_config(args)
    record = run_trajectory(cfg)
    path = _default_out(cfg, "run")
    write_records([record], path)
    print(
        f"wrote {path}: {len(record.t)} samples, "
        f"{len(record.jumps)} jumps, "
        f"tracking_rms={tracking_rms(record):.3f}, "
        f"parity_agreement={parity_agreement(record):.3f}"
    )
    return EXIT_OK


def _cmd_ensemble(args) -> int:
    from .orchestrator import ensemble_run

    cfg = _build_config(args)
    result = ensemble_run(
        cfg, parallelism=args.jobs, keep_records=not args.summary_only
    )
    if not args.summary_only:
        path = _default_out(cfg, "ensemble")
        write_records(result.records, path)
        print(f"wrote {path}: {len(result.records)} trajectories")
    print(json.dumps(result.to_dict(), indent=2))
    return EXIT_OK if not result.failures else EXIT_NUMERICAL


def _cmd_presets(_args) -> int:
    for name, pars in sorted(PRESETS.items()):
        print(
            f"{name}: Q_eff={pars.q_eff:g} n_T={pars.n_T:g} k={pars.k:.6g} "
            f"mu={pars.mu:g} g={pars.g:g} corr_period={pars.corr_period:g}"
        )
    return EXIT_OK


def _cmd_validate(args) -> int:
    cfg = _build_config(args)
    pars = cfg.physical()
    payload = {"config": cfg.to_dict(), "physical": {
        f.name: getattr(pars, f.name) for f in fields(type(pars)) if f.name != "feedback"
    }}
    print(json.dumps(payload, indent=2, default=str))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cattrack",
        description="Track and stabilize a two-packet oscillator superposition "
        "under continuous monitoring.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one closed-loop trajectory")
    _add_common(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_ens = sub.add_parser("ensemble", help="run an ensemble of seeds")
    _add_common(p_ens)
    p_ens.add_argument("--n-traj", type=int, default=None, dest="n_traj")
    p_ens.add_argument("--seeds", default=None, help="comma-separated seed list")
    p_ens.add_argument("--jobs", type=int, default=1, help="parallel workers")
    p_ens.add_argument(
        "--summary-only", action="store_true", help="skip writing trajectory files"
    )
    p_ens.set_defaults(func=_cmd_ensemble)

    p_pre = sub.add_parser("presets", help="list built-in parameter regimes")
    p_pre.set_defaults(func=_cmd_presets)

    p_val = sub.add_parser("validate-config", help="validate without running")
    _add_common(p_val)
    p_val.set_defaults(func=_cmd_validate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors already; normalize others
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
