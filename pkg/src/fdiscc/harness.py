"""Experiment runner: seeded Monte-Carlo sweeps, CSV emission and aggregation.

CSV schemas (all linear units: watts, Hz, bits, joules, seconds):

* run metrics row: ``RUN_CSV_COLUMNS`` -- seed, scheme, the swept scenario
  parameters, the Metrics projection, constraint residuals, iterations and
  status.  Deliberately excludes timing so identical (config, seed) runs give
  byte-identical files.
* sweep row: ``SWEEP_CSV_COLUMNS`` = run columns + wall_time_s.
* trace row: ``TRACE_CSV_COLUMNS`` -- per-iteration surrogate objective,
  utility and residuals (timing lives in the JSON result dump).
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .channels import draw_channels
from .config import ConfigError, SystemConfig, config_from_dict, with_overrides
from .orchestrator import SCHEMES, RunResult, evaluate_baseline
from .sysmodel import METRICS_CSV_COLUMNS, metrics_csv_row

SWEEP_PARAMETERS = ("m_passive", "p_bs_watt", "gamma_tar_linear",
                    "backhaul_rate", "skew", "n_tx")

SCENARIO_COLUMNS = ("m_passive", "m_active", "n_tx", "n_rx", "n_cm", "n_cp",
                    "p_bs_watt", "gamma_tar_linear", "backhaul_rate", "skew")

RUN_CSV_COLUMNS = (
    ("seed", "scheme") + SCENARIO_COLUMNS + METRICS_CSV_COLUMNS
    + ("res_power", "res_radar", "res_modulus", "res_energy", "res_cache",
       "iterations", "status")
)

SWEEP_CSV_COLUMNS = RUN_CSV_COLUMNS + ("wall_time_s",)

TRACE_CSV_COLUMNS = ("iteration", "objective", "utility", "res_power",
                     "res_radar", "res_modulus", "res_energy", "res_cache")


@dataclass(frozen=True)
class SweepSpec:
    """One-parameter sweep over schemes and seeds."""

    parameter: str
    values: tuple
    schemes: tuple = ("proposed",)
    n_seeds: int = 10
    output: str = "sweep.csv"
    seed_base: int = 0
    max_iter: int = 50
    base_config: dict | None = None

    def validate(self) -> None:
        if self.parameter not in SWEEP_PARAMETERS:
            raise ConfigError(
                f"unknown sweep parameter '{self.parameter}'; one of {SWEEP_PARAMETERS}")
        if len(self.values) == 0:
            raise ConfigError("sweep needs at least one value")
        if any(v <= 0 for v in self.values):
            raise ConfigError("sweep values must be positive")
        if self.parameter in ("m_passive", "n_tx") and any(int(v) != v or v < 1 for v in self.values):
            raise ConfigError(f"{self.parameter} values must be integers >= 1")
        for s in self.schemes:
            if s not in SCHEMES:
                raise ConfigError(f"unknown scheme '{s}'; one of {SCHEMES}")
        if self.n_seeds < 1:
            raise ConfigError("n_seeds must be >= 1")


def load_sweep_spec(path: str | Path) -> SweepSpec:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"sweep spec {path} is not valid JSON: {exc}") from exc
    known = {"parameter", "values", "schemes", "n_seeds", "output",
             "seed_base", "max_iter", "base_config"}
    for key in data:
        if key not in known:
            raise ConfigError(f"unknown key '{key}' in sweep spec")
    for key in ("values", "schemes"):
        if key in data:
            data[key] = tuple(data[key])
    spec = SweepSpec(**data)
    spec.validate()
    return spec


def apply_parameter(cfg: SystemConfig, name: str, value) -> SystemConfig:
    """Return a config with one swept parameter replaced."""
    if name in ("backhaul_rate", "skew"):
        cache = replace(cfg.cache, **{name: value})
        return with_overrides(cfg, cache=cache)
    if name in ("m_passive", "n_tx"):
        value = int(value)
    return with_overrides(cfg, **{name: value})


def scenario_values(cfg: SystemConfig) -> list:
    rate = cfg.cache.rate_array(max(cfg.n_cp, 1))
    return [cfg.m_passive, cfg.m_active, cfg.n_tx, cfg.n_rx, cfg.n_cm, cfg.n_cp,
            cfg.p_bs_watt, cfg.gamma_tar_linear, float(rate[0]), cfg.cache.skew]


def result_row(cfg: SystemConfig, result: RunResult, wall_s: float | None = None) -> dict:
    row = dict(zip(("seed", "scheme"), (cfg.seed, result.scheme)))
    row.update(zip(SCENARIO_COLUMNS, scenario_values(cfg)))
    row.update(zip(METRICS_CSV_COLUMNS,
                   metrics_csv_row(result.metrics, cfg.coherence_time_s)))
    if result.trace:
        last = result.trace[-1]
        res = {"res_power": last.res_power, "res_radar": last.res_radar,
               "res_modulus": last.res_modulus, "res_energy": last.res_energy,
               "res_cache": last.res_cache}
    else:
        res = {k: float("nan") for k in
               ("res_power", "res_radar", "res_modulus", "res_energy", "res_cache")}
    row.update(res)
    row["iterations"] = result.iterations
    row["status"] = result.status
    if wall_s is not None:
        row["wall_time_s"] = wall_s
    return row


def run_cell(cfg: SystemConfig, parameter: str, value, scheme: str, seed: int,
             max_iter: int = 50) -> dict:
    """One sweep cell: draw channels for the seed, run the scheme, build a row."""
    cell_cfg = apply_parameter(with_overrides(cfg, seed=seed), parameter, value)
    ch = draw_channels(cell_cfg)
    t0 = time.perf_counter()
    result = evaluate_baseline(cell_cfg, ch, scheme, max_iter=max_iter)
    return result_row(cell_cfg, result, wall_s=time.perf_counter() - t0)


def _cell_args(spec: SweepSpec, cfg: SystemConfig):
    for value in spec.values:
        for scheme in spec.schemes:
            for i in range(spec.n_seeds):
                yield (cfg, spec.parameter, value, scheme, spec.seed_base + i,
                       spec.max_iter)


def run_sweep(spec: SweepSpec, base_cfg: SystemConfig | None = None,
              workers: int = 1) -> list[dict]:
    """Execute every (value, scheme, seed) cell; rows come back in a
    deterministic order regardless of worker scheduling."""
    spec.validate()
    if base_cfg is None:
        base_cfg = config_from_dict(spec.base_config or {})
    args = list(_cell_args(spec, base_cfg))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_cell_star, args))
    else:
        rows = [_run_cell_star(a) for a in args]
    rows.sort(key=lambda r: (r[spec.parameter], r["scheme"], r["seed"]))
    return rows


def _run_cell_star(args):
    return run_cell(*args)


def write_csv(rows: list[dict], columns: tuple, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns), extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def write_trace_csv(result: RunResult, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_CSV_COLUMNS)
        for row in result.trace:
            writer.writerow([row.iteration, repr(row.objective), repr(row.utility),
                             repr(row.res_power), repr(row.res_radar),
                             repr(row.res_modulus), repr(row.res_energy),
                             repr(row.res_cache)])


def aggregate(rows: list[dict], field: str = "utility_bits") -> list[dict]:
    """Median and interquartile range of one field per (scheme, swept value).

    The swept value is inferred as any scenario column that varies; falls back
    to grouping by scheme only.
    """
    if not rows:
        raise ValueError("aggregate needs at least one row")
    varying = [c for c in SCENARIO_COLUMNS
               if len({row[c] for row in rows}) > 1]
    key_col = varying[0] if varying else None
    groups: dict = {}
    for row in rows:
        key = (row["scheme"], row[key_col] if key_col else None)
        groups.setdefault(key, []).append(float(row[field]))
    out = []
    for (scheme, value), vals in sorted(groups.items(), key=lambda kv: (str(kv[0][1]), kv[0][0])):
        arr = np.asarray(vals)
        q1, q3 = np.percentile(arr, [25.0, 75.0])
        out.append({
            "scheme": scheme, "value": value, "n": len(vals),
            f"{field}_median": float(np.median(arr)),
            f"{field}_iqr": float(q3 - q1),
        })
    return out
