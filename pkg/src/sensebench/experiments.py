"""Experiment drivers behind ``sensebench run``.

Each driver turns an ``ExperimentConfig`` into one or more tables. Tables
are written as CSV with ``repr``-formatted floats so identical inputs give
byte-identical files; wall-clock details live only in the run manifest.
"""

from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import math
import os
import subprocess
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import bounds as _bounds
from .config import ExperimentConfig
from .inference import inference_error_bound, infer_response, logfactor, max_grid_error, node_errors
from .noise import make_source
from .protocols import (
    INFERENCE_KINDS,
    PhasePrior,
    ProtocolSpec,
    SensingSystem,
    monte_carlo_bmse,
    trial_streams,
)
from .zne import allocate_shots, exact_mitigated_response, tune_hyperparameters

BMSE_COLUMNS = ["protocol", "bmse", "bmse_stderr", "bias_sq", "variance", "sql", "hl", "trials", "seed"]


@dataclass
class Table:
    name: str
    columns: list
    rows: list

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _protocol(cfg: ExperimentConfig, kind: str, shots: int, inference_shots: int | None = None) -> ProtocolSpec:
    ni = inference_shots
    if ni is None and kind in ("inference", "zne-inference"):
        if cfg.inference_shots:
            ni = cfg.inference_shots[0]
        elif cfg.inference_fraction is not None:
            ni = max(1, int(round(cfg.inference_fraction * shots)))
    if ni is None and kind == "precharacterized-inference" and cfg.inference_shots:
        ni = cfg.inference_shots[0]
    if kind not in INFERENCE_KINDS:
        ni = None
    return ProtocolSpec(kind, shots, ni, cfg.c_pre, cfg.zne, cfg.freeze_inference)


def _bmse_row(summary, n, shots, kind, seed):
    return [kind, summary.bmse, summary.stderr, summary.bias_sq, summary.variance,
            _bounds.sql(n, shots), _bounds.hl(n, shots), summary.trials, seed]


# --------------------------------------------------------------------------
# drivers
# --------------------------------------------------------------------------


def run_response_scan(cfg: ExperimentConfig, workers: int) -> list[Table]:
    theta = 2.0 * math.pi * np.arange(cfg.theta_points) / cfg.theta_points
    rows = []
    for n in cfg.n_values:
        for level in cfg.noise.levels_for(n):
            src = make_source(n, cfg.noise.spec(level), cfg.noise.simulated)
            for x in cfg.boosts:
                vals = src.boosted(x)(theta)
                rows += [[n, level, x, t, v] for t, v in zip(theta, vals)]
    return [Table("response-scan", ["n", "noise_level", "boost", "theta", "response"], rows)]


def run_zne_demo(cfg: ExperimentConfig, workers: int) -> list[Table]:
    theta = 2.0 * math.pi * np.arange(cfg.theta_points) / cfg.theta_points
    zne = cfg.zne
    rows = []
    for n in cfg.n_values:
        for level in cfg.noise.levels_for(n):
            src = make_source(n, cfg.noise.spec(level), cfg.noise.simulated)
            for shots in cfg.shots_for(n):
                alloc = allocate_shots(shots, zne.gammas)
                rng = trial_streams(cfg.seed, 0)[1]
                exact = exact_mitigated_response(src, theta, zne)
                node_vals = [src.boosted(x)(theta) for x in zne.nodes]
                for i, t in enumerate(theta):
                    est = np.zeros(cfg.trials)
                    for g, vals, nj in zip(zne.gammas, node_vals, alloc.shots):
                        k = rng.binomial(nj, 0.5 * (1.0 + np.clip(vals[i], -1, 1)), size=cfg.trials)
                        est += g * (2.0 * k / nj - 1.0)
                    mean = math.fsum(est) / cfg.trials
                    se = float(np.std(est, ddof=1) / math.sqrt(cfg.trials)) if cfg.trials > 1 else None
                    rows.append([n, level, shots, t, math.cos(n * t), src(t), exact[i], mean, se, cfg.trials, cfg.seed])
    cols = ["n", "noise_level", "shots", "theta", "ideal", "noisy", "mitigated_exact",
            "mitigated_mean", "mitigated_stderr", "trials", "seed"]
    return [Table("zne-demo", cols, rows)]


def run_zne_tune(cfg: ExperimentConfig, workers: int) -> list[Table]:
    rows = []
    for n in cfg.n_values:
        for level in cfg.noise.levels_for(n):
            src = make_source(n, cfg.noise.spec(level), cfg.noise.simulated)
            for shots in cfg.shots_for(n):
                res = tune_hyperparameters(src, shots, cfg.zne_orders, cfg.zne_x1_values, cfg.trials,
                                           cfg.seed, cfg.theta_points)
                rows += [[n, level, shots, m, x1, obj, cfg.trials, cfg.seed] for m, x1, obj in res]
    cols = ["n", "noise_level", "shots", "order", "x1", "objective", "trials", "seed"]
    return [Table("zne-tune", cols, rows)]


def run_inference_demo(cfg: ExperimentConfig, workers: int) -> list[Table]:
    budgets = cfg.inference_shots or (2_000, 20_000, 200_000)
    theta = 2.0 * math.pi * np.arange(cfg.theta_points) / cfg.theta_points
    stats, curves = [], []
    for n in cfg.n_values:
        for level in cfg.noise.levels_for(n):
            src = make_source(n, cfg.noise.spec(level), cfg.noise.simulated)
            for b_idx, ni in enumerate(budgets):
                errs, violations = [], 0
                for t in range(cfg.trials):
                    rng = trial_streams(cfg.seed, t)[2]
                    inf = infer_response(src, n, ni, rng)
                    err = max_grid_error(inf.poly, src)
                    eps = float(node_errors(inf, src).max())
                    violations += err > inference_error_bound(eps, n)
                    errs.append(err)
                    if t == 0:
                        curves += [[n, level, ni, th, ex, fi] for th, ex, fi in zip(theta, src(theta), inf.poly(theta))]
                errs = np.array(errs)
                se = float(np.std(errs, ddof=1) / math.sqrt(errs.size)) if errs.size > 1 else None
                stats.append([n, level, ni, float(np.median(errs)), math.fsum(errs) / errs.size, se,
                              violations, cfg.trials, cfg.seed])
    return [
        Table("inference-demo", ["n", "noise_level", "inference_shots", "median_max_error", "mean_max_error",
                                 "max_error_stderr", "bound_violations", "trials", "seed"], stats),
        Table("inference-demo-curves", ["n", "noise_level", "inference_shots", "theta", "exact", "inferred"], curves),
    ]


def run_compare_protocols(cfg: ExperimentConfig, workers: int) -> list[Table]:
    rows = []
    for n in cfg.n_values:
        for level in cfg.noise.levels_for(n):
            system = SensingSystem(n, cfg.noise.spec(level), cfg.noise.simulated)
            for shots in cfg.shots_for(n):
                for kind in cfg.protocols:
                    s = monte_carlo_bmse(_protocol(cfg, kind, shots), system, cfg.prior, cfg.trials, cfg.seed, workers)
                    rows.append([n, shots, level] + _bmse_row(s, n, shots, kind, cfg.seed))
    return [Table("compare-protocols", ["n", "shots", "noise_level"] + BMSE_COLUMNS, rows)]


def bounds_rows(cfg: ExperimentConfig) -> list[list]:
    rows = []
    offset = cfg.prior.eps_b if cfg.theta_offset is None else cfg.theta_offset
    for n in cfg.n_values:
        for level in cfg.noise.levels_for(n):
            for shots in cfg.shots_for(n):
                inp = _bounds.BoundInputs(n, shots, level, math.pi / (2 * n) + offset, cfg.zne, cfg.c_pre)
                for kind in cfg.protocols:
                    b = _bounds.bound_terms(kind, inp, cfg.prior_average)
                    rows.append([n, shots, level, kind, b.total, 0.0, b.bias_sq, b.variance,
                                 _bounds.sql(n, shots), _bounds.hl(n, shots), 0, cfg.seed])
    return rows


def run_bounds_scan(cfg: ExperimentConfig, workers: int) -> list[Table]:
    return [Table("bounds-scan", ["n", "shots", "noise_level"] + BMSE_COLUMNS, bounds_rows(cfg))]


def run_precharacterization_sweep(cfg: ExperimentConfig, workers: int) -> list[Table]:
    rows = []
    for n in cfg.n_values:
        budgets = cfg.inference_shots
        for level in cfg.noise.levels_for(n):
            system = SensingSystem(n, cfg.noise.spec(level), cfg.noise.simulated)
            for ne in cfg.shots_for(n):
                sweep = budgets or tuple(int(round(c * n * ne)) for c in (0.01, 0.1, 1.0, 10.0))
                for kind in cfg.protocols:
                    if kind == "precharacterized-inference":
                        for ni in sweep:
                            p = ProtocolSpec(kind, ne, int(ni), cfg.c_pre, cfg.zne, cfg.freeze_inference)
                            s = monte_carlo_bmse(p, system, cfg.prior, cfg.trials, cfg.seed, workers)
                            rows.append([n, level, ne, int(ni)] + _bmse_row(s, n, ne, kind, cfg.seed))
                    else:
                        s = monte_carlo_bmse(_protocol(cfg, kind, ne), system, cfg.prior, cfg.trials, cfg.seed, workers)
                        rows.append([n, level, ne, None] + _bmse_row(s, n, ne, kind, cfg.seed))
    cols = ["n", "noise_level", "estimation_shots", "inference_shots"] + BMSE_COLUMNS
    return [Table("precharacterization-sweep", cols, rows)]


def run_interrogation_sweep(cfg: ExperimentConfig, workers: int) -> list[Table]:
    rows = []
    for n in cfg.n_values:
        for level in cfg.noise.levels_for(n):
            for t in cfg.noise.interaction_times:
                system = SensingSystem(n, cfg.noise.spec(level, t), cfg.noise.simulated)
                prior = PhasePrior(cfg.prior.alpha_prior, t, 0.0, cfg.prior.bits)
                for shots in cfg.shots_for(n):
                    for kind in cfg.protocols:
                        s = monte_carlo_bmse(_protocol(cfg, kind, shots), system, prior, cfg.trials, cfg.seed, workers)
                        rows.append([n, shots, level, t, cfg.noise.k_rate]
                                    + _bmse_row(s, n, shots, kind, cfg.seed)[:7]
                                    + [s.alpha_bmse, s.alpha_stderr, s.trials, cfg.seed])
    cols = (["n", "shots", "noise_level", "interaction_time", "k_rate"] + BMSE_COLUMNS[:7]
            + ["alpha_bmse", "alpha_stderr", "trials", "seed"])
    return [Table("interrogation-sweep", cols, rows)]


DRIVERS: dict[str, Callable[[ExperimentConfig, int], list[Table]]] = {
    "response-scan": run_response_scan,
    "zne-demo": run_zne_demo,
    "zne-tune": run_zne_tune,
    "inference-demo": run_inference_demo,
    "compare-protocols": run_compare_protocols,
    "bounds-scan": run_bounds_scan,
    "precharacterization-sweep": run_precharacterization_sweep,
    "interrogation-sweep": run_interrogation_sweep,
}


def version_string() -> str:
    """Package version, with ``git describe`` output appended when the
    source tree is a git checkout."""
    try:
        from importlib.metadata import version

        base = version("sensebench")
    except Exception:
        base = "0+unknown"
    here = os.path.dirname(os.path.abspath(__file__))
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=here, capture_output=True, text=True, timeout=5, check=True,
        ).stdout.strip()
    except (OSError, subprocess.SubprocessError):
        out = ""
    return f"{base}+g{out}" if out else base


def run_experiment(cfg: ExperimentConfig, out_dir: str, workers: int = 1) -> list[str]:
    """Run ``cfg`` and write its CSV files plus ``manifest.json`` to
    ``out_dir``; returns the written paths."""
    tables = DRIVERS[cfg.experiment](cfg, workers)
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for table in tables:
        path = os.path.join(out_dir, f"{table.name}.csv")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(table.to_csv())
        paths.append(path)
    manifest = {
        "experiment": cfg.experiment,
        "seed": cfg.seed,
        "threads": workers,
        "version": version_string(),
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "outputs": [os.path.basename(p) for p in paths],
        "config": cfg.raw,
    }
    mpath = os.path.join(out_dir, "manifest.json")
    with open(mpath, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    return paths + [mpath]
