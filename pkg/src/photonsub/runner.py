"""Experiment execution: sweeps, oracle cross-checks, result tables.

Every sweep point runs a seeded MCWF ensemble and is reduced to rows of
(coordinates, observable, channel, estimate, stderr, provenance).  When
the oracle gate allows it, the Lindblad flux integrals are computed for
the same point and each channel's mean count is checked against them;
disagreement beyond 3 sigma marks the point `oracle_mismatch` without
aborting the sweep.  Output files are written atomically and are
byte-identical across reruns of the same config and seed.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import os
import time
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .config import ExperimentConfig, build_point_params
from .errors import ConfigError, PhotonsubError
from .lindblad import channel_flux_integrals
from .model import build_model, default_dt_max, default_layout
from .observables import (detection_probabilities, g2_zero, mean_output_photons,
                          ordered_two_photon_probs, photon_number_histogram)
from .trajectories import run_ensemble

__all__ = ["ResultTable", "run_experiment", "emit", "read_table_json"]

FIXED_COLUMNS = ("observable", "channel", "n", "estimate", "stderr",
                 "n_traj", "master_seed", "method", "oracle", "fingerprint")

ORACLE_AUTO_DIM_CAP = 512        # auto never runs the oracle above this
ORACLE_AUTO_STEP_CAP = 1_200_000


def _r12(x: float) -> float:
    return float(f"{float(x):.12g}")


@dataclass(frozen=True)
class ResultTable:
    """Flat result rows with a fixed, format-independent column order."""

    columns: tuple[str, ...]
    rows: tuple[tuple, ...]

    def column(self, name: str) -> list:
        k = self.columns.index(name)
        return [row[k] for row in self.rows]


def _oracle_wanted(config: ExperimentConfig, n_points: int, total_dim: int,
                   est_steps: float) -> bool:
    if config.oracle == "on":
        return True          # the oracle itself enforces its dimension cap
    if config.oracle == "off":
        return False
    # auto: cross-check spot runs, skip sweeps and anything expensive
    return (n_points == 1 and total_dim <= ORACLE_AUTO_DIM_CAP
            and est_steps <= ORACLE_AUTO_STEP_CAP)


def _point_rows(config: ExperimentConfig, coords: dict, n_points: int):
    params = build_point_params(config, coords)
    layout = default_layout(params, target_dim=config.target_dim)
    model = build_model(params, layout=layout)
    t_end = config.t_end_lifetimes / params.kappa_s
    record = run_ensemble(model, config.n_traj, config.master_seed,
                          workers=config.workers, controls=config.controls,
                          t_end=t_end)

    est_steps = t_end / (0.5 * default_dt_max(params))
    oracle_status = "skipped"
    fluxes = None
    if _oracle_wanted(config, n_points, layout.total_dim, est_steps):
        fluxes = channel_flux_integrals(model, t_end)
        nbar = mean_output_photons(record)
        oracle_status = "ok"
        for lab, flux in fluxes.items():
            mean, err = nbar[lab]
            if abs(mean - flux) > 3.0 * err + 1e-9:
                oracle_status = "oracle_mismatch"

    coord_vals = tuple(_r12(v) for v in coords.values())
    rows: list[tuple] = []

    def emit_row(observable, channel, estimate, stderr, n=""):
        rows.append(coord_vals + (
            observable, channel, n, _r12(estimate), _r12(stderr),
            config.n_traj, config.master_seed, record.method,
            oracle_status, record.params_fingerprint))
    if "detection" in config.observables:
        for cls, (p, err) in detection_probabilities(record).items():
            emit_row("P", cls, p, err)
    if "pairs" in config.observables:
        pairs, eff = ordered_two_photon_probs(record)
        for cls, (p, err) in pairs.items():
            emit_row("P_pair", cls, p, err)
        emit_row("P_c", "", eff[0], eff[1])
    if "nbar" in config.observables:
        for lab, (m, err) in mean_output_photons(record).items():
            emit_row("nbar_out", lab, m, err)
    if "g2" in config.observables:
        nbar = mean_output_photons(record)
        for lab in record.channel_labels:
            if lab.startswith("Out") and nbar[lab][0] > 0.0:
                g2, err = g2_zero(record, lab, seed=config.master_seed)
                emit_row("g2_zero", lab, g2, err)
    if "histogram" in config.observables:
        for lab in record.channel_labels:
            if lab.startswith("Out"):
                hist = photon_number_histogram(record, lab)
                for k, p in enumerate(hist):
                    emit_row("p_n", lab, p, 0.0, n=k)
    if fluxes is not None:
        for lab, flux in fluxes.items():
            emit_row("oracle_flux", lab, flux, 0.0)
    return rows


def run_experiment(config: ExperimentConfig):
    """Execute the sweep; returns (ResultTable, timing dict).

    Point order is the cartesian product of the sweep axes in config
    order, so output rows are deterministic regardless of runtime.
    """
    t0 = time.perf_counter()
    axes = config.sweep
    names = [ax.name for ax in axes]
    points = (list(itertools.product(*[ax.values for ax in axes]))
              if axes else [()])
    rows: list[tuple] = []
    for values in points:
        coords = dict(zip(names, values))
        try:
            rows.extend(_point_rows(config, coords, len(points)))
        except PhotonsubError as exc:
            raise type(exc)(f"at sweep point {coords}: {exc}") from exc
    if not rows:
        raise ConfigError("experiment produced no result rows")
    table = ResultTable(columns=tuple(names) + FIXED_COLUMNS, rows=tuple(rows))
    timing = {"wall_clock_s": round(time.perf_counter() - t0, 3),
              "points": len(points), "rows": len(rows)}
    return table, timing


def _csv_cell(value) -> str:
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def emit(table: ResultTable, fmt: str, out_dir: str | Path,
         stem: str = "results", metadata: dict | None = None) -> Path:
    """Write the table as CSV or JSON (12 significant digits); returns the path."""
    if not table.rows:
        raise ConfigError("refusing to emit an empty table")
    if fmt not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {fmt!r}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([_csv_cell(v) for v in row])
        path = out_dir / f"{stem}.csv"
        _atomic_write(path, buf.getvalue())
    else:
        doc = {
            "metadata": {"tool": "photonsub", "version": __version__,
                         **(metadata or {})},
            "columns": list(table.columns),
            "rows": [list(row) for row in table.rows],
        }
        path = out_dir / f"{stem}.json"
        _atomic_write(path, json.dumps(doc, indent=1) + "\n")
    return path


def read_table_json(path: str | Path):
    """Inverse of emit(..., 'json'): returns (ResultTable, metadata)."""
    doc = json.loads(Path(path).read_text())
    table = ResultTable(columns=tuple(doc["columns"]),
                        rows=tuple(tuple(row) for row in doc["rows"]))
    return table, doc["metadata"]
