"""Monte Carlo confrontation of the analytic bounds with simulated loops.

A verification cell pairs one disturbance model, one controller, and one
norm exponent; the harness simulates the loop, estimates the error norm,
and compares it against the analytic floor.  A cell *violates* only when
the empirical norm undershoots the bound by more than three standard
errors; anything closer is sampling noise by contract.  The gap_ratio
(empirical / bound) doubles as a tightness certificate: ratios near 1 must
come with white, GG-shaped errors or something is wrong, and that is
checked, not assumed.

Asymptotic cells measure within-trace statistics after a burn-in of
max(10 x model memory, 1000) steps; per-step cells (k fixed) measure
across independent trials at exactly index k, where the stationary start
makes the analytic conditional entropy exact.

``sweep`` runs a Cartesian grid {model x controller x p x seed} with
per-cell seeds split off a master seed, optional thread parallelism, and
deterministic CSV/JSON output (rows in enumeration order; identical config
and seed reproduce identical bytes except for the wall-clock runtime_ms
column).
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Optional

import numpy as np

from . import bounds as _bounds
from . import estimators as _estimators
from .processes import (
    DisturbanceModel,
    NotAnalyticError,
    VectorGaussAR,
)
from .simulator import (
    ControllerPolicy,
    SimulationTrace,
    anticipatory_double,
    learned_controller,
    predictor_controller,
    random_causal_controller,
    run_loop,
    zero_controller,
)

if TYPE_CHECKING:  # pragma: no cover - typing only, avoids an import cycle
    from .cli import ExperimentConfig

__all__ = [
    "TightnessReport",
    "VerificationReport",
    "ProductBoundCheck",
    "SweepResult",
    "verify_bound",
    "verify_mimo_bound",
    "tightness_report",
    "sweep",
    "resolve_controller",
    "spawn_seeds",
    "default_burn_in",
    "write_rows_csv",
    "CSV_COLUMNS",
]

_SIGMA_GUARD = 3.0

CSV_COLUMNS = [
    "cell_id",
    "model",
    "controller",
    "p",
    "k_or_asymptotic",
    "h_bits",
    "bound",
    "empirical",
    "std_error",
    "gap_ratio",
    "violation",
    "whiteness_pass",
    "ggfit_pass",
    "mi_lag1_bits",
    "seed",
    "runtime_ms",
]


def spawn_seeds(master_seed: int, count: int) -> list[int]:
    """Independent child seeds split deterministically off a master seed."""
    root = np.random.SeedSequence(master_seed)
    return [int(child.generate_state(1)[0]) for child in root.spawn(count)]


def default_burn_in(model: DisturbanceModel) -> int:
    return max(10 * model.effective_memory(), 1000)


@dataclass(frozen=True)
class TightnessReport:
    """Diagnostics that must accompany any equality claim.

    The two lag-1 mutual informations are the estimator-level proxies for
    the matched pair I(e_k; past d) and I(e_k; past e); they agree within
    combined error on every honest trace.
    """

    whiteness: _estimators.WhitenessReport
    whiteness_pass: bool
    gg_fit: _estimators.GGFitReport
    gg_fit_pass: bool
    mi_err_lag1_bits: float
    mi_err_lag1_se: float
    mi_dist_lag1_bits: float
    mi_dist_lag1_se: float
    mi_identity_consistent: bool


@dataclass(frozen=True)
class ProductBoundCheck:
    """Hadamard product-of-variances comparison for vector cells."""

    bound: float
    empirical: float
    gap_ratio: float
    violation: bool


@dataclass(frozen=True)
class VerificationReport:
    """One cell's outcome: analytic floor vs empirical norm plus diagnostics."""

    bound: _bounds.BoundReport
    empirical: float
    std_error: float
    gap_ratio: float
    violation: bool
    tightness: Optional[TightnessReport]
    seeds: tuple[int, ...]
    runtime_ms: int
    h_source: str = "analytic"
    product: Optional[ProductBoundCheck] = None


def _serial_diagnostics(
    e: np.ndarray,
    d: np.ndarray,
    *,
    max_lag: int = 10,
    seed=0,
) -> tuple[_estimators.WhitenessReport, float, float, bool]:
    """The norm-independent half of a tightness certificate.

    Returns the whiteness report plus the lag-1 mutual information between
    the error and the raw disturbance, and whether the two lag-1 MI reads
    (error vs own past, error vs disturbance past) agree within combined
    error.  Split out so a sweep can amortise it across p values.
    """
    white = _estimators.whiteness_stats(e, max_lag=max_lag, seed=seed)
    cap = min(e.size - 1, 20_000)
    if cap >= 10_000:
        mi_dist, mi_dist_se, _ = _estimators.mutual_information_estimate(
            e[1 : cap + 1], d[:cap], seed=seed
        )
    else:
        mi_dist, mi_dist_se = math.nan, math.nan
    mi_err, mi_err_se = white.mi_lag1_bits, white.mi_lag1_se
    if math.isnan(mi_err) or math.isnan(mi_dist):
        consistent = True
    else:
        consistent = abs(mi_err - mi_dist) <= _SIGMA_GUARD * math.hypot(
            mi_err_se, mi_dist_se
        )
    return white, mi_dist, mi_dist_se, consistent


def _assemble_tightness(
    serial: tuple[_estimators.WhitenessReport, float, float, bool],
    fit: _estimators.GGFitReport,
    whiteness_alpha: float,
) -> TightnessReport:
    white, mi_dist, mi_dist_se, consistent = serial
    return TightnessReport(
        whiteness=white,
        whiteness_pass=white.passed(whiteness_alpha),
        gg_fit=fit,
        gg_fit_pass=fit.passed,
        mi_err_lag1_bits=white.mi_lag1_bits,
        mi_err_lag1_se=white.mi_lag1_se,
        mi_dist_lag1_bits=mi_dist,
        mi_dist_lag1_se=mi_dist_se,
        mi_identity_consistent=consistent,
    )


def tightness_report(
    trace: SimulationTrace,
    p: float,
    *,
    burn_in: int = 0,
    whiteness_alpha: float = 0.005,
    max_lag: int = 10,
    seed=0,
) -> TightnessReport:
    """Whiteness, GG(p) shape, and past-independence checks for one trace."""
    e = np.asarray(trace.e, dtype=float).reshape(-1)[burn_in:]
    d = np.asarray(trace.d, dtype=float).reshape(-1)[burn_in:]
    serial = _serial_diagnostics(e, d, max_lag=max_lag, seed=seed)
    fit = _estimators.density_fit_gg(e, p)
    return _assemble_tightness(serial, fit, whiteness_alpha)


def _estimated_step_entropy(
    model: DisturbanceModel, k: int, horizon: int, seed: int
) -> float:
    """Estimator fallback for models whose small-k entropy is not analytic."""
    if model.dim != 1:
        raise NotAnalyticError("the estimator fallback covers scalar models only")
    if k > 3:
        raise NotAnalyticError(
            f"no analytic conditional entropy at step {k} and the estimator "
            "fallback only reaches memory 3"
        )
    path = np.asarray(model.sample_path(max(horizon, 20_000), seed), dtype=float)
    series = path.reshape(-1)
    if k == 0:
        return _estimators.entropy_estimate_1d(series).value_bits
    est = _estimators.conditional_entropy_estimate(series, memory=k, seed=seed)
    return est.value_bits


def verify_bound(
    model: DisturbanceModel,
    controller: ControllerPolicy,
    p: float,
    *,
    horizon: int,
    seed: int,
    trials: int = 1,
    k: Optional[int] = None,
    burn_in: Optional[int] = None,
    tightness: bool = True,
) -> VerificationReport:
    """Check one scalar cell.

    k = None (asymptotic): pools post-burn-in samples from ``trials``
    independent traces of ``horizon`` steps against the entropy-rate floor.
    k fixed: collects e_k across ``trials`` traces of k+1 steps against the
    step-k floor (the tightness block is skipped there; across-trial
    samples carry no serial structure to test).
    """
    start = time.perf_counter()
    if model.dim != 1:
        raise ValueError("verify_bound is scalar; use verify_mimo_bound")
    seeds = spawn_seeds(seed, trials + 1)
    trial_seeds, aux_seed = seeds[:trials], seeds[trials]
    h_source = "analytic"
    if k is None:
        if burn_in is None:
            burn_in = default_burn_in(model)
        if horizon <= burn_in:
            raise ValueError(
                f"horizon {horizon} does not clear the burn-in window {burn_in}"
            )
        report = _bounds.lp_bound_asymptotic(model, p)
        traces = [run_loop(model, controller, horizon, s) for s in trial_seeds]
        samples = np.concatenate([t.e[burn_in:] for t in traces])
        tight = (
            tightness_report(traces[0], p, burn_in=burn_in, seed=aux_seed)
            if tightness
            else None
        )
    else:
        try:
            report = _bounds.lp_bound_at_step(model, p, k)
        except NotAnalyticError:
            h_est = _estimated_step_entropy(model, k, horizon, aux_seed)
            c = _bounds.lp_constant(p)
            report = _bounds.BoundReport(
                form="at_step",
                p=float(p),
                k=int(k),
                h_bits=h_est,
                constant=c,
                value=2.0**h_est / c,
            )
            h_source = "estimated"
        traces = [run_loop(model, controller, k + 1, s) for s in trial_seeds]
        samples = np.array([t.e[k] for t in traces])
        tight = None
    empirical, std_error = _estimators.lp_norm_estimate(samples, p)
    violation = empirical < report.value - _SIGMA_GUARD * std_error
    runtime_ms = int(1000 * (time.perf_counter() - start))
    return VerificationReport(
        bound=report,
        empirical=empirical,
        std_error=std_error,
        gap_ratio=empirical / report.value,
        violation=bool(violation),
        tightness=tight,
        seeds=tuple(trial_seeds),
        runtime_ms=runtime_ms,
        h_source=h_source,
    )


def verify_mimo_bound(
    model: VectorGaussAR,
    controller: ControllerPolicy,
    *,
    horizon: int,
    seed: int,
    trials: int = 1,
    k: Optional[int] = None,
    burn_in: Optional[int] = None,
) -> VerificationReport:
    """Determinant and per-channel-product floors for a vector cell.

    The determinant of the pooled second-moment matrix is compared against
    the 2^(2h) / (2 pi e)^m floor; the product of per-channel second
    moments is compared against the same value (Hadamard), reported in the
    ``product`` block.
    """
    start = time.perf_counter()
    if model.dim < 2:
        raise ValueError("vector model required; verify_bound handles scalar cells")
    seeds = spawn_seeds(seed, trials)
    if k is None:
        if burn_in is None:
            burn_in = default_burn_in(model)
        if horizon <= burn_in:
            raise ValueError(
                f"horizon {horizon} does not clear the burn-in window {burn_in}"
            )
        report = _bounds.mimo_det_bound_asymptotic(model)
        traces = [run_loop(model, controller, horizon, s) for s in seeds]
        samples = np.concatenate([t.e[burn_in:] for t in traces], axis=0)
    else:
        report = _bounds.mimo_det_bound_at_step(model, k)
        traces = [run_loop(model, controller, k + 1, s) for s in seeds]
        samples = np.stack([t.e[k] for t in traces], axis=0)
    det = _estimators.covariance_det_estimate(samples)
    violation = det.value < report.value - _SIGMA_GUARD * det.std_error
    channel_power = np.mean(np.asarray(samples) ** 2, axis=0)
    product_empirical = float(np.prod(channel_power))
    product_bound = _bounds.mimo_product_bound(report.h_bits, model.dim)
    # Hadamard: product >= det >= bound, so the determinant's standard error
    # is a conservative guard for the product as well.
    product = ProductBoundCheck(
        bound=product_bound,
        empirical=product_empirical,
        gap_ratio=product_empirical / product_bound,
        violation=bool(
            product_empirical < product_bound - _SIGMA_GUARD * det.std_error
        ),
    )
    runtime_ms = int(1000 * (time.perf_counter() - start))
    return VerificationReport(
        bound=report,
        empirical=det.value,
        std_error=det.std_error,
        gap_ratio=det.value / report.value,
        violation=bool(violation),
        tightness=None,
        seeds=tuple(seeds),
        runtime_ms=runtime_ms,
        product=product,
    )


# ---------------------------------------------------------------------------
# controller resolution (shared by sweep and the CLI)


def resolve_controller(
    spec: dict, model: DisturbanceModel, seed: int
) -> ControllerPolicy:
    """Instantiate a controller described by a config dictionary.

    Kinds: zero, predictor, random (memory, gain_cap), learned (memory,
    train_steps), anticipatory (negative-control fixture that fails the
    causality audit on purpose).
    """
    if not isinstance(spec, dict):
        raise ValueError(f"controller spec must be an object, got {type(spec).__name__}")
    kind = spec.get("kind")
    if kind == "zero":
        return zero_controller(model.dim)
    if kind == "predictor":
        return predictor_controller(model)
    if kind == "random":
        if model.dim != 1:
            raise ValueError("random controllers support scalar models only")
        return random_causal_controller(
            int(spec.get("seed", seed)),
            memory=int(spec.get("memory", 3)),
            gain_cap=float(spec.get("gain_cap", 2.0)),
        )
    if kind == "learned":
        if model.dim != 1:
            raise ValueError("learned controllers support scalar models only")
        memory = int(spec.get("memory", 2))
        train_steps = int(spec.get("train_steps", 50_000))
        train_seed, _ = spawn_seeds(seed, 2)
        trace = run_loop(model, zero_controller(model.dim), train_steps, train_seed)
        return learned_controller([trace], memory)
    if kind == "anticipatory":
        return anticipatory_double()
    raise ValueError(f"kind: unknown controller kind {kind!r}")


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class CellRow:
    """One CSV row of a sweep (one model x controller x seed x p)."""

    cell_id: str
    model: str
    controller: str
    p: float
    report: VerificationReport


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[CellRow, ...]
    errors: tuple[tuple[str, str], ...]
    summary: dict
    csv_path: Optional[Path]
    summary_path: Optional[Path]


def _format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        if math.isinf(value):
            return "inf"
        return f"{value:.12g}"
    return str(value)


def write_rows_csv(rows, path) -> None:
    """Write verification rows in the fixed sweep schema."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            record = _row_record(row)
            writer.writerow([_format_value(record[col]) for col in CSV_COLUMNS])


def _row_record(row: CellRow) -> dict:
    rep = row.report
    tight = rep.tightness
    return {
        "cell_id": row.cell_id,
        "model": row.model,
        "controller": row.controller,
        "p": row.p,
        "k_or_asymptotic": "asymptotic" if rep.bound.k is None else rep.bound.k,
        "h_bits": rep.bound.h_bits,
        "bound": rep.bound.value,
        "empirical": rep.empirical,
        "std_error": rep.std_error,
        "gap_ratio": rep.gap_ratio,
        "violation": rep.violation,
        "whiteness_pass": None if tight is None else tight.whiteness_pass,
        "ggfit_pass": None if tight is None else tight.gg_fit_pass,
        "mi_lag1_bits": None if tight is None else tight.mi_err_lag1_bits,
        "seed": rep.seeds[0] if rep.seeds else "",
        "runtime_ms": rep.runtime_ms,
    }


def _model_label(config, index: int, model: DisturbanceModel) -> str:
    names = getattr(config, "model_names", None)
    if names is not None and index < len(names):
        return names[index]
    return getattr(model, "descriptor", str(model))


def sweep(
    config: "ExperimentConfig",
    *,
    threads: int = 1,
    out_dir=None,
    tightness: bool = True,
) -> SweepResult:
    """Cartesian sweep over {model x controller x seed x p}.

    Each (model, controller, seed) triple simulates one trace and is scored
    at every requested p.  Cells that raise are recorded in the summary and
    skipped, the sweep continues.  Output rows are written in enumeration
    order, so reruns with the same config and master seed are reproducible.
    """
    start = time.perf_counter()
    cells = []
    for mi, model in enumerate(config.models):
        for cspec in config.controllers:
            for _trial in range(config.trials):
                cells.append((mi, model, cspec))
    cell_seeds = spawn_seeds(config.master_seed, 2 * len(cells))

    def run_cell(index: int):
        mi, model, cspec = cells[index]
        trace_seed = cell_seeds[2 * index]
        ctrl_seed = cell_seeds[2 * index + 1]
        if isinstance(cspec, dict):
            label = cspec.get("name", cspec.get("kind", "controller"))
        else:
            label = "controller"
        model_label = _model_label(config, mi, model)
        try:
            controller = resolve_controller(cspec, model, ctrl_seed)
            rows = []
            if model.dim > 1:
                # the determinant floor is norm-independent: one row per cell
                report = verify_mimo_bound(
                    model, controller, horizon=config.horizon, seed=trace_seed
                )
                rows.append(
                    CellRow(
                        cell_id=f"c{index:05d}det",
                        model=model_label,
                        controller=label,
                        p=2.0,
                        report=report,
                    )
                )
                return rows, None
            burn = default_burn_in(model)
            if config.horizon <= burn:
                raise ValueError(
                    f"horizon {config.horizon} does not clear the "
                    f"burn-in window {burn}"
                )
            t_last = time.perf_counter()
            trace = run_loop(model, controller, config.horizon, trace_seed)
            e_post = np.asarray(trace.e, dtype=float).reshape(-1)[burn:]
            d_post = np.asarray(trace.d, dtype=float).reshape(-1)[burn:]
            serial = (
                _serial_diagnostics(e_post, d_post, seed=trace_seed)
                if tightness
                else None
            )
            for pi, p in enumerate(config.p_values):
                bound_rep = _bounds.lp_bound_asymptotic(model, p)
                empirical, std_error = _estimators.lp_norm_estimate(e_post, p)
                tight = None
                if serial is not None:
                    fit = _estimators.density_fit_gg(e_post, p)
                    tight = _assemble_tightness(serial, fit, 0.005)
                now = time.perf_counter()
                report = VerificationReport(
                    bound=bound_rep,
                    empirical=empirical,
                    std_error=std_error,
                    gap_ratio=empirical / bound_rep.value,
                    violation=bool(
                        empirical < bound_rep.value - _SIGMA_GUARD * std_error
                    ),
                    tightness=tight,
                    seeds=(trace_seed,),
                    runtime_ms=int(1000 * (now - t_last)),
                )
                t_last = now
                rows.append(
                    CellRow(
                        cell_id=f"c{index:05d}p{pi}",
                        model=model_label,
                        controller=label,
                        p=p,
                        report=report,
                    )
                )
            return rows, None
        except Exception as exc:  # noqa: BLE001 - cell isolation is the point
            return [], (f"c{index:05d}", f"{type(exc).__name__}: {exc}")

    if threads > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(run_cell, range(len(cells))))
    else:
        outcomes = [run_cell(i) for i in range(len(cells))]

    rows: list[CellRow] = []
    errors: list[tuple[str, str]] = []
    for cell_rows, error in outcomes:
        rows.extend(cell_rows)
        if error is not None:
            errors.append(error)

    wall_ms = int(1000 * (time.perf_counter() - start))
    violations = sum(1 for row in rows if row.report.violation)
    worst = min((row.report.gap_ratio for row in rows), default=math.nan)
    summary = {
        "cells": len(rows),
        "violations": violations,
        "worst_gap_ratio": worst,
        "wall_time_ms": wall_ms,
        "errors": [{"cell_id": cid, "message": msg} for cid, msg in errors],
    }

    csv_path = summary_path = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_path = out_dir / "report.csv"
        write_rows_csv(rows, csv_path)
        summary_path = out_dir / "summary.json"
        with open(summary_path, "w") as handle:
            json.dump(summary, handle, indent=2, sort_keys=True)
            handle.write("\n")

    return SweepResult(
        rows=tuple(rows),
        errors=tuple(errors),
        summary=summary,
        csv_path=csv_path,
        summary_path=summary_path,
    )
