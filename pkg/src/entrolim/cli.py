"""Command-line front end.

Subcommands:
    bound      analytic error floors per model and norm, with cross-route checks
    simulate   generate closed-loop traces and write them to CSV
    verify     audit controllers for causality, then confront floors with data
    sweep      Monte Carlo grid over models x controllers x norms
    audit      causality audits only (open loop and closed loop)

All subcommands read one JSON config (see the package README for the schema)
and share --seed (master seed override) and --out (output directory) where
applicable.  Thread count comes from --threads or the ENTROLIM_THREADS
environment variable.

Exit codes:
    0   success
    2   configuration problem (bad JSON, unknown kinds, invalid values)
    3   filesystem problem (unreadable config, unwritable output)
    4   a bound was violated, or analytic routes disagreed
    5   a controller failed a causality audit
"""

from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from . import bounds as _bounds
from .processes import DisturbanceModel, NotAnalyticError, model_from_config
from .simulator import (
    causality_audit,
    closed_loop_causality_check,
    run_loop,
    save_trace,
)
from .spectral import SpectralIntegralError
from .verify import (
    CellRow,
    resolve_controller,
    spawn_seeds,
    sweep,
    verify_bound,
    verify_mimo_bound,
    write_rows_csv,
)

__all__ = [
    "main",
    "ExperimentConfig",
    "ConfigError",
    "load_config",
    "config_from_dict",
    "EXIT_OK",
    "EXIT_CONFIG",
    "EXIT_IO",
    "EXIT_VIOLATION",
    "EXIT_CAUSALITY",
]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_VIOLATION = 4
EXIT_CAUSALITY = 5

_ROUTE_AGREEMENT = 1e-8
_CONTROLLER_KINDS = {"zero", "predictor", "random", "learned", "anticipatory"}
_CONFIG_KEYS = {"models", "controllers", "p_values", "horizon", "trials", "seed"}


class ConfigError(ValueError):
    """Raised for malformed or inconsistent experiment configs."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description shared by every subcommand."""

    models: tuple[DisturbanceModel, ...]
    model_names: tuple[str, ...]
    controllers: tuple[dict, ...]
    p_values: tuple[float, ...]
    horizon: int
    trials: int
    master_seed: int


def _parse_p(value) -> float:
    if isinstance(value, str):
        if value.strip().lower() in {"inf", "infinity"}:
            return math.inf
        raise ConfigError(f"p_values: cannot parse {value!r} as a norm exponent")
    try:
        p = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"p_values: cannot parse {value!r} as a norm exponent")
    if not p >= 1.0:
        raise ConfigError(f"p_values: exponent must be >= 1, got {p}")
    return p


def config_from_dict(raw) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError(f"config root must be an object, got {type(raw).__name__}")
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    models_raw = raw.get("models")
    if not isinstance(models_raw, list) or not models_raw:
        raise ConfigError("models: need a non-empty list of model objects")
    models, names = [], []
    for i, spec in enumerate(models_raw):
        if not isinstance(spec, dict):
            raise ConfigError(f"models[{i}]: must be an object")
        try:
            model = model_from_config({k: v for k, v in spec.items() if k != "name"})
        except ValueError as exc:
            raise ConfigError(f"models[{i}]: {exc}") from exc
        models.append(model)
        names.append(str(spec.get("name", f"model{i}")))
    if len(set(names)) != len(names):
        raise ConfigError("models: names must be unique")

    controllers_raw = raw.get("controllers", [{"kind": "zero"}])
    if not isinstance(controllers_raw, list) or not controllers_raw:
        raise ConfigError("controllers: need a non-empty list of controller objects")
    controllers = []
    for i, spec in enumerate(controllers_raw):
        if not isinstance(spec, dict):
            raise ConfigError(f"controllers[{i}]: must be an object")
        kind = spec.get("kind")
        if kind not in _CONTROLLER_KINDS:
            raise ConfigError(
                f"controllers[{i}]: unknown kind {kind!r}, "
                f"expected one of {sorted(_CONTROLLER_KINDS)}"
            )
        controllers.append(dict(spec))

    p_raw = raw.get("p_values", [2])
    if not isinstance(p_raw, list) or not p_raw:
        raise ConfigError("p_values: need a non-empty list")
    p_values = tuple(_parse_p(v) for v in p_raw)

    try:
        horizon = int(raw.get("horizon", 20_000))
        trials = int(raw.get("trials", 1))
        master_seed = int(raw.get("seed", 0))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"horizon/trials/seed must be integers: {exc}") from exc
    if horizon < 2:
        raise ConfigError(f"horizon: must be >= 2, got {horizon}")
    if trials < 1:
        raise ConfigError(f"trials: must be >= 1, got {trials}")

    return ExperimentConfig(
        models=tuple(models),
        model_names=tuple(names),
        controllers=tuple(controllers),
        p_values=p_values,
        horizon=horizon,
        trials=trials,
        master_seed=master_seed,
    )


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as handle:
            raw = json.load(handle)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return config_from_dict(raw)


def _resolve_threads(value) -> int:
    if value is None:
        value = os.environ.get("ENTROLIM_THREADS", "1")
    try:
        threads = int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"threads: expected an integer, got {value!r}")
    if threads < 1:
        raise ConfigError(f"threads: must be >= 1, got {threads}")
    return threads


def _p_label(p: float) -> str:
    return "inf" if math.isinf(p) else f"{p:g}"


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.+-]+", "_", text)


def _controller_label(spec: dict) -> str:
    return str(spec.get("name", spec.get("kind", "controller")))


# ---------------------------------------------------------------------------
# subcommands


def cmd_bound(config: ExperimentConfig, out_dir: Optional[str]) -> int:
    """Print analytic floors per (model, p); compare independent routes."""
    header = (
        f"{'model':<16} {'p':>5} {'h_bits':>12} {'C_p':>12} "
        f"{'direct':>14} {'spectral':>14} {'gw':>14} {'agree':>6}"
    )
    print(header)
    rows = []
    disagreement = False
    for name, model in zip(config.model_names, config.models):
        if model.dim != 1:
            print(
                f"note: {name} is a vector model; "
                "use verify/sweep for its determinant floor",
                file=sys.stderr,
            )
            continue
        for p in config.p_values:
            direct = _bounds.lp_bound_asymptotic(model, p)
            try:
                spectral = _bounds.spectral_lp_bound(model, p).value
            except (NotAnalyticError, SpectralIntegralError):
                spectral = None
            try:
                gw = _bounds.gw_lp_bound(model, p).value
            except NotAnalyticError:
                gw = None
            deltas = [
                abs(v - direct.value) for v in (spectral, gw) if v is not None
            ]
            agree = all(delta <= _ROUTE_AGREEMENT for delta in deltas)
            disagreement = disagreement or not agree
            rows.append(
                {
                    "model": name,
                    "p": _p_label(p),
                    "h_bits": direct.h_bits,
                    "C_p": direct.constant,
                    "direct": direct.value,
                    "spectral": spectral,
                    "gw": gw,
                    "agree": agree,
                }
            )
            fmt = lambda v: "-".rjust(14) if v is None else f"{v:>14.10g}"
            print(
                f"{name:<16} {_p_label(p):>5} {direct.h_bits:>12.8g} "
                f"{direct.constant:>12.10g} {direct.value:>14.10g} "
                f"{fmt(spectral)} {fmt(gw)} {'yes' if agree else 'NO':>6}"
            )
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / "bounds.csv"
        with open(path, "w", newline="") as handle:
            handle.write("model,p,h_bits,C_p,direct,spectral,gw,agree\n")
            for r in rows:
                cells = [
                    r["model"],
                    r["p"],
                    f"{r['h_bits']:.12g}",
                    f"{r['C_p']:.12g}",
                    f"{r['direct']:.12g}",
                    "" if r["spectral"] is None else f"{r['spectral']:.12g}",
                    "" if r["gw"] is None else f"{r['gw']:.12g}",
                    "true" if r["agree"] else "false",
                ]
                handle.write(",".join(cells) + "\n")
        print(f"wrote {path}")
    if disagreement:
        print("error: analytic routes disagree beyond 1e-8", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_simulate(config: ExperimentConfig, out_dir: str) -> int:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n_runs = len(config.models) * len(config.controllers) * config.trials
    seeds = spawn_seeds(config.master_seed, 2 * n_runs)
    idx = 0
    count = 0
    for name, model in zip(config.model_names, config.models):
        for cspec in config.controllers:
            label = _controller_label(cspec)
            for trial in range(config.trials):
                trace_seed, ctrl_seed = seeds[idx], seeds[idx + 1]
                idx += 2
                controller = resolve_controller(cspec, model, ctrl_seed)
                trace = run_loop(model, controller, config.horizon, trace_seed)
                path = out / f"{_slug(name)}__{_slug(label)}__t{trial}.csv"
                save_trace(trace, path)
                count += 1
    print(f"wrote {count} trace(s) to {out}")
    return EXIT_OK


def _audit_pairs(config: ExperimentConfig):
    """(name, model, label, controller, seed) per model x controller."""
    n_pairs = len(config.models) * len(config.controllers)
    seeds = spawn_seeds(config.master_seed ^ 0x5EED, 2 * n_pairs)
    idx = 0
    for name, model in zip(config.model_names, config.models):
        for cspec in config.controllers:
            ctrl_seed, audit_seed = seeds[idx], seeds[idx + 1]
            idx += 2
            controller = resolve_controller(cspec, model, ctrl_seed)
            yield name, model, _controller_label(cspec), controller, audit_seed


def cmd_audit(config: ExperimentConfig) -> int:
    failed = False
    for name, model, label, controller, audit_seed in _audit_pairs(config):
        open_rep = causality_audit(controller, seed=audit_seed)
        closed_rep = closed_loop_causality_check(model, controller, seed=audit_seed)
        ok = open_rep.passed and closed_rep.passed
        failed = failed or not ok
        detail = ""
        if not open_rep.passed:
            detail += f" open-loop violations at {list(open_rep.violations[:3])}"
        if not closed_rep.passed:
            detail += f" closed-loop violations at {list(closed_rep.violations[:3])}"
        print(
            f"{'ok' if ok else 'FAILED':6s} {name} / {label}: "
            f"open {open_rep.trials} trials, closed {closed_rep.trials} trials"
            f"{detail}"
        )
    return EXIT_CAUSALITY if failed else EXIT_OK


def cmd_verify(config: ExperimentConfig, out_dir: Optional[str]) -> int:
    # controllers must prove causality before any bound is scored
    audit_failures = []
    for name, model, label, controller, audit_seed in _audit_pairs(config):
        open_rep = causality_audit(controller, seed=audit_seed)
        closed_rep = closed_loop_causality_check(model, controller, seed=audit_seed)
        if not (open_rep.passed and closed_rep.passed):
            audit_failures.append((name, label))
            print(f"causality FAILED: {name} / {label}", file=sys.stderr)
    if audit_failures:
        return EXIT_CAUSALITY

    n_pairs = len(config.models) * len(config.controllers)
    seeds = spawn_seeds(config.master_seed, 2 * n_pairs)
    idx = 0
    rows: list[CellRow] = []
    violations = 0
    cell = 0
    for name, model in zip(config.model_names, config.models):
        for cspec in config.controllers:
            trace_seed, ctrl_seed = seeds[idx], seeds[idx + 1]
            idx += 2
            label = _controller_label(cspec)
            controller = resolve_controller(cspec, model, ctrl_seed)
            if model.dim == 1:
                for p in config.p_values:
                    rep = verify_bound(
                        model,
                        controller,
                        p,
                        horizon=config.horizon,
                        seed=trace_seed,
                        trials=config.trials,
                    )
                    rows.append(
                        CellRow(
                            cell_id=f"v{cell:05d}",
                            model=name,
                            controller=label,
                            p=p,
                            report=rep,
                        )
                    )
                    cell += 1
                    violations += rep.violation
                    print(
                        f"{'VIOLATION' if rep.violation else 'ok':9s} "
                        f"{name} / {label} p={_p_label(p):<4} "
                        f"bound={rep.bound.value:.6g} "
                        f"empirical={rep.empirical:.6g} "
                        f"gap={rep.gap_ratio:.4f}"
                    )
            else:
                rep = verify_mimo_bound(
                    model,
                    controller,
                    horizon=config.horizon,
                    seed=trace_seed,
                    trials=config.trials,
                )
                rows.append(
                    CellRow(
                        cell_id=f"v{cell:05d}",
                        model=name,
                        controller=label,
                        p=2.0,
                        report=rep,
                    )
                )
                cell += 1
                bad = rep.violation or (rep.product is not None and rep.product.violation)
                violations += bad
                print(
                    f"{'VIOLATION' if bad else 'ok':9s} "
                    f"{name} / {label} det-floor "
                    f"bound={rep.bound.value:.6g} "
                    f"empirical={rep.empirical:.6g} "
                    f"gap={rep.gap_ratio:.4f}"
                )
    print(f"{violations} violation(s) across {len(rows)} cell(s)")
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_rows_csv(rows, out / "verify.csv")
        print(f"wrote {out / 'verify.csv'}")
    return EXIT_VIOLATION if violations else EXIT_OK


def cmd_sweep(config: ExperimentConfig, out_dir: str, threads: int) -> int:
    result = sweep(config, threads=threads, out_dir=out_dir)
    print(json.dumps(result.summary, indent=2, sort_keys=True))
    if result.summary["violations"]:
        return EXIT_VIOLATION
    if result.errors:
        return EXIT_CONFIG
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="entrolim",
        description="entropy floors on feedback error: bounds, simulation, "
        "verification",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, out_required=False, out=True, threads=False):
        sp.add_argument("--config", required=True, help="path to a JSON config")
        sp.add_argument(
            "--seed", type=int, default=None, help="override the config master seed"
        )
        if out:
            sp.add_argument(
                "--out",
                required=out_required,
                default=None,
                help="output directory",
            )
        if threads:
            sp.add_argument(
                "--threads",
                type=int,
                default=None,
                help="worker threads (default: ENTROLIM_THREADS or 1)",
            )

    common(sub.add_parser("bound", help="print analytic floors per model and p"))
    common(
        sub.add_parser("simulate", help="write closed-loop traces to CSV"),
        out_required=True,
    )
    common(sub.add_parser("verify", help="audit causality, then score bounds"))
    common(
        sub.add_parser("sweep", help="Monte Carlo grid with CSV/JSON output"),
        out_required=True,
        threads=True,
    )
    common(sub.add_parser("audit", help="causality audits only"), out=False)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG

    try:
        try:
            config = load_config(args.config)
        except FileNotFoundError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_IO
        if args.seed is not None:
            config = replace(config, master_seed=int(args.seed))

        if args.command == "bound":
            return cmd_bound(config, args.out)
        if args.command == "simulate":
            return cmd_simulate(config, args.out)
        if args.command == "verify":
            return cmd_verify(config, args.out)
        if args.command == "sweep":
            threads = _resolve_threads(args.threads)
            return cmd_sweep(config, args.out, threads)
        if args.command == "audit":
            return cmd_audit(config)
        raise AssertionError(f"unhandled command {args.command!r}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
