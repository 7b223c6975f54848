"""Experiment orchestration and persistence.

CSV is the canonical output.  Floats are written with ``repr`` so a value
round-trips exactly and two identical runs give byte-identical files.  The
JSON bundle carries the config echo; only ``metadata`` holds run-dependent
fields (timestamp, wall clock).
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .config import SCHEMA_VERSION, ExperimentConfig, parse_config_dict
from .core_model import WRENCH_LABELS, ActuationSystem
from .dual import DualSystem
from .fiber import EmptyFiberError, fiber_of
from .solvers import ParetoFront, SolveReport, SweepCell, pareto_front, solve_cell

ALLOCATION_COLUMNS_TAIL = ("rotor", "u_energy", "u_promptness")
COST_COLUMNS_TAIL = (
    "status",
    "j1_at_energy_opt", "j2_at_energy_opt",
    "j1_at_promptness_opt", "j2_at_promptness_opt",
    "kkt_energy", "kkt_promptness",
    "active_energy", "active_promptness",
    "kappa_at_energy_opt", "kappa_at_promptness_opt",
    "error",
)


@dataclass
class FrontResult:
    regime_index: int
    wrench: np.ndarray
    front: ParetoFront | None
    error: str | None = None
    certificate: np.ndarray | None = None


@dataclass
class ResultBundle:
    config: ExperimentConfig | None
    system: ActuationSystem | None = None
    wrenches: list[np.ndarray] = field(default_factory=list)
    cells: list[SweepCell] = field(default_factory=list)
    fronts: list[FrontResult] = field(default_factory=list)
    dual: DualSystem | None = None
    dual_box: float | None = None
    dual_t_max: float = 4.0
    started_at: str = ""
    wall_clock_s: float = 0.0
    schema: int = SCHEMA_VERSION

    @property
    def failed(self) -> bool:
        return any(not c.ok for c in self.cells) or any(f.error is not None for f in self.fronts)

    def regime_labels(self) -> list[str]:
        return [r.label for r in self.config.regimes] if self.config else []

    def wrench_labels(self) -> list[str]:
        m = self.system.m if self.system is not None else 0
        return list(WRENCH_LABELS) if m == 4 else [f"w{i}" for i in range(m)]


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _indices(ix) -> str:
    return ";".join(str(i) for i in ix)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([r if isinstance(r, str) else _fmt(r) for r in row])
    return buf.getvalue()


def _status(cell: SweepCell) -> str:
    if cell.error is not None:
        return "failed"
    return "ok" if cell.ok else "unconverged"


def _cells_by_regime(bundle: ResultBundle):
    n_w = len(bundle.wrenches)
    for k, cell in enumerate(bundle.cells):
        yield bundle.regime_labels()[k // n_w], cell


def allocation_rows(bundle: ResultBundle):
    header = ["regime", *bundle.wrench_labels(), *ALLOCATION_COLUMNS_TAIL]
    rows = []
    for label, cell in _cells_by_regime(bundle):
        for i in range(bundle.system.n):
            en = cell.energy.u_star[i] if cell.energy is not None else None
            pr = cell.promptness.u_star[i] if cell.promptness is not None else None
            rows.append([label, *cell.wrench, i, en, pr])
    return header, rows


def cost_rows(bundle: ResultBundle):
    header = ["regime", *bundle.wrench_labels(), *COST_COLUMNS_TAIL]
    rows = []
    for label, cell in _cells_by_regime(bundle):
        en, pr = cell.energy, cell.promptness
        rows.append([
            label, *cell.wrench, _status(cell),
            en.objective.j1 if en else None, cell.j2_at_energy,
            cell.j1_at_promptness, pr.objective.j2 if pr else None,
            en.kkt_scaled if en else None, pr.kkt_scaled if pr else None,
            _indices(en.active_set) if en else "", _indices(pr.active_set) if pr else "",
            cell.kappa_energy, cell.kappa_promptness,
            cell.error or "",
        ])
    return header, rows


def front_rows(bundle: ResultBundle):
    header = ["regime", *bundle.wrench_labels(), "point", "j1", "j2", "epsilon", "status", "kkt_residual", "extent"]
    rows = []
    for fr in bundle.fronts:
        if fr.front is None:
            continue
        label = bundle.regime_labels()[fr.regime_index]
        for k, p in enumerate(fr.front.points):
            rows.append([label, *fr.wrench, k, p.j1, p.j2, p.epsilon, p.status, p.kkt_residual, fr.front.extent])
    return header, rows


# --------------------------------------------------------------------------
# JSON


def _vec(a):
    return None if a is None else [float(x) for x in np.asarray(a).ravel()]


def report_to_dict(r: SolveReport | None):
    if r is None:
        return None
    return {
        "kind": r.kind,
        "u_star": _vec(r.u_star),
        "j1": r.objective.j1,
        "j2": r.objective.j2,
        "min_eig": r.objective.min_eig,
        "multipliers": _vec(r.multipliers),
        "bound_multipliers": _vec(r.bound_multipliers),
        "kkt_residual": r.kkt_residual,
        "kkt_scale": r.kkt_scale,
        "active_set": list(r.active_set),
        "seeds_tried": r.seeds_tried,
        "converged": bool(r.converged),
        "iterations": r.iterations,
        "message": r.message,
    }


def bundle_to_dict(bundle: ResultBundle) -> dict:
    labels = bundle.regime_labels()
    cells = []
    for label, cell in _cells_by_regime(bundle):
        cells.append({
            "regime": label,
            "regime_detail": cell.regime.describe(),
            "wrench": _vec(cell.wrench),
            "status": _status(cell),
            "energy": report_to_dict(cell.energy),
            "promptness": report_to_dict(cell.promptness),
            "j1_at_promptness_opt": cell.j1_at_promptness,
            "j2_at_energy_opt": cell.j2_at_energy,
            "kappa_at_energy_opt": cell.kappa_energy,
            "kappa_at_promptness_opt": cell.kappa_promptness,
            "error": cell.error,
        })
    fronts = []
    for fr in bundle.fronts:
        entry = {"regime": labels[fr.regime_index], "wrench": _vec(fr.wrench), "error": fr.error,
                 "certificate": _vec(fr.certificate)}
        if fr.front is not None:
            entry["extent"] = fr.front.extent
            entry["points"] = [
                {"j1": p.j1, "j2": p.j2, "u": _vec(p.u), "epsilon": p.epsilon,
                 "status": p.status, "kkt_residual": p.kkt_residual}
                for p in fr.front.points
            ]
            entry["failed_points"] = len(fr.front.failed)
        fronts.append(entry)
    return {
        "schema": bundle.schema,
        "config": bundle.config.to_dict() if bundle.config else None,
        "cells": cells,
        "fronts": fronts,
        "metadata": {"started_at": bundle.started_at, "wall_clock_s": bundle.wall_clock_s},
    }


def _json_safe(obj):
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_json_safe(v) for v in obj]
    return obj


def bundle_json(bundle: ResultBundle) -> str:
    return json.dumps(_json_safe(bundle_to_dict(bundle)), indent=2, sort_keys=True) + "\n"


def config_from_bundle(data: dict) -> ExperimentConfig:
    """Rebuild the config echoed in a JSON bundle."""
    cfg = dict(data["config"])
    return parse_config_dict(cfg)


# --------------------------------------------------------------------------
# runs


def _stamp(bundle: ResultBundle, t0: float):
    bundle.wall_clock_s = time.perf_counter() - t0


def run_experiment(config: ExperimentConfig, with_fronts: bool = False) -> ResultBundle:
    """Both optima for every (regime, wrench) cell; Pareto fronts on request."""
    t0 = time.perf_counter()
    system = config.vehicle.build()
    wrenches = config.task.wrench_list(system)
    regimes = [r.build() for r in config.regimes]
    options = config.solver.options()
    bundle = ResultBundle(
        config=config, system=system, wrenches=wrenches,
        started_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )
    for regime in regimes:
        for w in wrenches:
            bundle.cells.append(solve_cell(system, w, regime, options))
    if with_fronts:
        for j, regime in enumerate(regimes):
            for w in wrenches:
                try:
                    front = pareto_front(fiber_of(system, w, regime), config.solver.n_points, options)
                    bundle.fronts.append(FrontResult(j, w, front))
                except EmptyFiberError as exc:
                    bundle.fronts.append(FrontResult(j, w, None, str(exc), exc.fiber.least_violating_point))
                except (ValueError, np.linalg.LinAlgError) as exc:
                    bundle.fronts.append(FrontResult(j, w, None, str(exc)))
    _stamp(bundle, t0)
    return bundle


def run_sweep(config: ExperimentConfig) -> ResultBundle:
    """Wrench-component sweep: both optima and their cross-evaluated costs per regime and sample."""
    if config.task.kind != "sweep":
        raise ValueError("run_sweep needs a sweep task")
    return run_experiment(config)


def dual_bundle(ds: DualSystem, box: float | None = None, t_max: float = 4.0) -> ResultBundle:
    return ResultBundle(
        config=None, dual=ds, dual_box=box, dual_t_max=t_max,
        started_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )


def write_bundle(bundle: ResultBundle, out_dir, formats=("csv", "json")) -> list[Path]:
    """Write tables and the JSON bundle; returns the paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in formats and bundle.cells:
        for name, (header, rows) in (("allocations.csv", allocation_rows(bundle)), ("costs.csv", cost_rows(bundle))):
            p = out / name
            p.write_text(csv_text(header, rows), encoding="utf-8")
            written.append(p)
        if bundle.fronts:
            p = out / "pareto.csv"
            p.write_text(csv_text(*front_rows(bundle)), encoding="utf-8")
            written.append(p)
    if "json" in formats and bundle.config is not None:
        p = out / "bundle.json"
        p.write_text(bundle_json(bundle), encoding="utf-8")
        written.append(p)
    return written
