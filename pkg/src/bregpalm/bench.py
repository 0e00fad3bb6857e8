"""Suite orchestration: assemble runs from a config, write traces and summaries.

Each run produces one trace CSV (columns k, L, H, delta, Ek, inner_x,
inner_y, elapsed_ms, preceded by ``#`` metadata lines); a suite additionally
writes one summary CSV, one long-format series CSV for plotting, and the
rendered figures. Given the same configuration the CSVs are reproduced
exactly except for the timestamp header and the wall-clock columns.
"""

from __future__ import annotations

import csv
import statistics
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .config import RunConfig
from .engine import CoefficientSeq, InertialSchedule, RunTrace, StoppingRule, compute_rho, run
from .errors import ConfigError
from .geometry import geometry_from_token
from .linalg import load_matrix
from .problems import (
    SparseNmfProblem,
    load_qfp_problem1,
    make_random_qfp,
    make_signal_recovery,
    make_synthetic_nmf,
)

__all__ = ["RunResult", "SuiteResult", "run_suite", "emit_figure_series", "read_trace"]

TRACE_COLUMNS = ("k", "L", "H", "delta", "Ek", "inner_x", "inner_y", "elapsed_ms")
SERIES_METRICS = (("objective", "L"), ("H", "H"), ("Ek", "Ek"), ("delta", "delta"))

_QFP_INDEX = {"kl": "1", "is": "2", "euclid": "3"}


@dataclass
class RunResult:
    label: str
    seed: int
    trace: RunTrace
    path: Path


@dataclass
class SuiteResult:
    kind: str
    out_dir: Path
    runs: list[RunResult] = field(default_factory=list)
    summary_path: Path | None = None
    series_path: Path | None = None
    figure_paths: list[Path] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        """0 if every run converged, 2 on any solver fault, else 1."""
        if any(r.trace.reason == "fault" for r in self.runs):
            return 2
        if all(r.trace.reason == "converged" for r in self.runs):
            return 0
        return 1


# ---------------------------------------------------------------------------
# Inertial recipes: the per-kind reference coefficients, used wherever a
# config coefficient is the token "reference".
# ---------------------------------------------------------------------------


def reference_recipe(kind: str, variant: str, rho: float, schedule_label: str | None = None):
    """(alpha1, alpha2, beta1, beta2) reference values for one run."""
    if kind == "sigrec":
        if variant in ("tibpalm", "tibam"):
            q = 0.99 * rho / 4.0
            return (q, q, q, q)
        if variant in ("ibpalm", "ipalm", "gipalm"):
            h = 0.99 * rho / 2.0
            return (h, 0.0, h, 0.0)
        return (0.0, 0.0, 0.0, 0.0)
    if kind == "nmf":
        if variant in ("tibpalm", "tibam"):
            return (0.2, 0.3, 0.2, 0.3)
        if variant in ("ibpalm", "ipalm", "gipalm"):
            return (0.5, 0.0, 0.5, 0.0)
        return (0.0, 0.0, 0.0, 0.0)
    if kind == "qfp":
        if schedule_label == "one-step":
            return (0.5, 0.0, 0.5, 0.0)
        return (0.2, 0.3, 0.2, 0.3)
    raise ConfigError(f"unknown kind {kind!r}")


def build_schedule(cfg: RunConfig, variant: str, rho: float, schedule_label=None) -> InertialSchedule:
    recipe = dict(
        zip(("alpha1", "alpha2", "beta1", "beta2"),
            reference_recipe(cfg.kind, variant, rho, schedule_label))
    )
    coeffs = {}
    for name, fallback in recipe.items():
        token = cfg.values[name]
        coeffs[name] = CoefficientSeq(fallback if token == "reference" else _coeff_value(token))
    return InertialSchedule(
        coeffs["alpha1"], coeffs["alpha2"], coeffs["beta1"], coeffs["beta2"], rho
    )


def _coeff_value(token: str):
    return token if token == "(k-1)/(k+2)" else float(token)


# ---------------------------------------------------------------------------
# Trace CSV I/O
# ---------------------------------------------------------------------------


def write_trace(trace: RunTrace, path: Path, label: str) -> None:
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write(f"# generated: {datetime.now(timezone.utc).isoformat(timespec='seconds')}\n")
        fh.write(f"# algorithm: {label}\n")
        fh.write(f"# seed: {trace.seed}\n")
        fh.write(f"# theory-supported: {str(trace.theory_supported).lower()}\n")
        fh.write(f"# reason: {trace.reason}\n")
        if trace.fault:
            fh.write(f"# fault: {trace.fault}\n")
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for r in trace.records:
            writer.writerow(
                [
                    r.k,
                    repr(r.objective),
                    repr(r.benefit),
                    repr(r.delta),
                    repr(r.ek),
                    r.inner_x,
                    r.inner_y,
                    repr(r.elapsed_ms),
                ]
            )


def read_trace(path) -> tuple[dict, list[dict]]:
    """Parse a trace CSV back into (metadata, rows of floats/ints)."""
    meta, rows = {}, []
    with open(path, "r", encoding="ascii") as fh:
        header = None
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                if ":" in line:
                    key, value = line[1:].split(":", 1)
                    meta[key.strip()] = value.strip()
                continue
            if header is None:
                header = tuple(line.split(","))
                if header != TRACE_COLUMNS:
                    raise ConfigError(
                        f"{path}: unexpected trace columns {header}; "
                        f"expected {TRACE_COLUMNS}"
                    )
                continue
            parts = line.split(",")
            rows.append(
                {
                    "k": int(parts[0]),
                    "L": float(parts[1]),
                    "H": float(parts[2]),
                    "delta": float(parts[3]),
                    "Ek": float(parts[4]),
                    "inner_x": int(parts[5]),
                    "inner_y": int(parts[6]),
                    "elapsed_ms": float(parts[7]),
                }
            )
    if header is None:
        raise ConfigError(f"{path}: no header row found")
    return meta, rows


def emit_figure_series(trace_paths, out_path) -> Path:
    """Long-format CSV (algorithm, k, metric, value) for the plotting step.

    Row 0 of each trace describes the initial point and carries no stopping
    value, so the series starts at k = 1 and holds iterations x 4 rows per
    trace.
    """
    out_path = Path(out_path)
    with open(out_path, "w", encoding="ascii", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("algorithm", "k", "metric", "value"))
        for path in trace_paths:
            meta, rows = read_trace(path)
            label = meta.get("algorithm", Path(path).stem)
            for row in rows[1:]:
                for metric, column in SERIES_METRICS:
                    writer.writerow((label, row["k"], metric, repr(row[column])))
    return out_path


# ---------------------------------------------------------------------------
# Suites
# ---------------------------------------------------------------------------


def run_suite(cfg: RunConfig) -> SuiteResult:
    """Execute every run of the configured suite and write all output files."""
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if cfg.kind == "sigrec":
        result = _run_sigrec(cfg, out_dir)
    elif cfg.kind == "qfp":
        result = _run_qfp(cfg, out_dir)
    elif cfg.kind == "nmf":
        result = _run_nmf(cfg, out_dir)
    else:
        raise ConfigError(f"unknown kind {cfg.kind!r}")

    result.series_path = emit_figure_series(
        [r.path for r in result.runs], out_dir / f"{cfg.kind}_series.csv"
    )
    if cfg.plot:
        from . import report  # matplotlib import deferred until needed

        result.figure_paths = report.render_figures(
            result.runs, out_dir / "figures", prefix=cfg.kind
        )
    return result


def _stop(cfg) -> StoppingRule:
    return StoppingRule(tol=cfg.tol, max_iter=cfg.max_iter)


def _run_sigrec(cfg: RunConfig, out_dir: Path) -> SuiteResult:
    result = SuiteResult("sigrec", out_dir)
    for rep in range(cfg.repetitions):
        seed = cfg.seed + rep
        problem = make_signal_recovery(
            cfg.n, cfg.m, seed,
            noisy=cfg.noisy, sparsity=cfg.sparsity,
            gamma=cfg.gamma, mu=cfg.mu, lambda_y=cfg.lambda_y,
        )
        geoms = problem.default_geometries()
        rho = compute_rho(problem, *geoms)
        for variant in cfg.variants:
            sched = build_schedule(cfg, variant, rho)
            trace = run(
                problem, sched, variant,
                geoms=geoms, stop=_stop(cfg), seed=seed,
                override_theory=cfg.override_theory,
            )
            path = out_dir / f"sigrec_{variant}_seed{seed:03d}.csv"
            write_trace(trace, path, variant)
            result.runs.append(RunResult(variant, seed, trace, path))
    _write_sigrec_summary(result, out_dir / "sigrec_summary.csv", cfg.variants)
    return result


def _run_qfp(cfg: RunConfig, out_dir: Path) -> SuiteResult:
    result = SuiteResult("qfp", out_dir)
    box = (cfg.box_lo, cfg.box_hi)
    if cfg.problem == 1:
        problem = load_qfp_problem1(box=box, gamma=cfg.gamma)
    elif cfg.problem == 2:
        problem = make_random_qfp(cfg.m, cfg.seed, box=box, gamma=cfg.gamma)
    else:
        raise ConfigError(f"qfp problem must be 1 or 2, got {cfg.problem}")

    group_order = []
    for tok_x, tok_y in cfg.geometries:
        geom_x = geometry_from_token(tok_x, cfg.mu, box)
        geom_y = geometry_from_token(tok_y, cfg.mu, box)
        rho = compute_rho(problem, geom_x, geom_y)
        pair = f"alg{_QFP_INDEX[tok_x]}{_QFP_INDEX[tok_y]}"
        for schedule_label in cfg.schedules:
            sched = build_schedule(cfg, "tibpalm", rho, schedule_label)
            label = f"{pair}-{schedule_label}"
            group_order.append((pair, schedule_label, label))
            for rep in range(cfg.repetitions):
                seed = cfg.seed + rep
                trace = run(
                    problem, sched, "tibpalm",
                    geoms=(geom_x, geom_y), stop=_stop(cfg), seed=seed,
                    override_theory=cfg.override_theory,
                )
                path = out_dir / f"qfp_{pair}_{schedule_label}_seed{seed:03d}.csv"
                write_trace(trace, path, label)
                result.runs.append(RunResult(label, seed, trace, path))
    _write_qfp_summary(result, out_dir / "qfp_summary.csv", group_order)
    return result


def _run_nmf(cfg: RunConfig, out_dir: Path) -> SuiteResult:
    result = SuiteResult("nmf", out_dir)
    if cfg.matrix_file:
        problem = SparseNmfProblem(load_matrix(cfg.matrix_file), cfg.rank, cfg.s, lam=cfg.lam)
    else:
        problem = make_synthetic_nmf(cfg.n, cfg.d, cfg.rank, cfg.seed, budget=cfg.s, lam=cfg.lam)
    for rep in range(cfg.repetitions):
        seed = cfg.seed + rep
        for variant in cfg.variants:
            sched = build_schedule(cfg, variant, rho=0.0)
            trace = run(
                problem, sched, variant,
                stop=_stop(cfg), seed=seed,
                override_theory=cfg.override_theory,
            )
            path = out_dir / f"nmf_{variant}_seed{seed:03d}.csv"
            write_trace(trace, path, variant)
            result.runs.append(RunResult(variant, seed, trace, path))
    _write_nmf_summary(result, out_dir / "nmf_summary.csv")
    return result


# ---------------------------------------------------------------------------
# Summaries
# ---------------------------------------------------------------------------


def _write_sigrec_summary(result: SuiteResult, path: Path, variants) -> None:
    with open(path, "w", encoding="ascii", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ("algorithm", "runs", "converged", "median_iter", "mean_iter",
             "mean_time_s", "mean_terminal_gap")
        )
        for variant in variants:
            group = [r for r in result.runs if r.label == variant]
            iters = [r.trace.iterations for r in group]
            gaps = [r.trace.terminal_block_gap for r in group]
            writer.writerow(
                (
                    variant,
                    len(group),
                    sum(r.trace.reason == "converged" for r in group),
                    repr(float(statistics.median(iters))),
                    repr(statistics.fmean(iters)),
                    repr(statistics.fmean(r.trace.total_time_s for r in group)),
                    repr(statistics.fmean(gaps)),
                )
            )
    result.summary_path = path


def _write_qfp_summary(result: SuiteResult, path: Path, group_order) -> None:
    with open(path, "w", encoding="ascii", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ("algorithm", "schedule", "runs", "converged", "median_iter", "mean_iter",
             "mean_inner_x", "mean_inner_y", "mean_time_s")
        )
        for pair, schedule_label, label in group_order:
            group = [r for r in result.runs if r.label == label]
            iters = [r.trace.iterations for r in group]
            inner_x = [sum(rec.inner_x for rec in r.trace.records) for r in group]
            inner_y = [sum(rec.inner_y for rec in r.trace.records) for r in group]
            writer.writerow(
                (
                    pair,
                    schedule_label,
                    len(group),
                    sum(r.trace.reason == "converged" for r in group),
                    repr(float(statistics.median(iters))),
                    repr(statistics.fmean(iters)),
                    repr(statistics.fmean(inner_x)),
                    repr(statistics.fmean(inner_y)),
                    repr(statistics.fmean(r.trace.total_time_s for r in group)),
                )
            )
    result.summary_path = path


def _write_nmf_summary(result: SuiteResult, path: Path) -> None:
    with open(path, "w", encoding="ascii", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("algorithm", "seed", "iterations", "reason", "final_objective", "trace_file"))
        for r in result.runs:
            writer.writerow(
                (
                    r.label,
                    r.seed,
                    r.trace.iterations,
                    r.trace.reason,
                    repr(r.trace.records[-1].objective),
                    r.path.name,
                )
            )
    result.summary_path = path
