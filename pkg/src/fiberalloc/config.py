"""Experiment configuration: TOML text in, validated dataclasses out.

Every problem in a file is collected before raising, so a user sees the full
list at once.  See ``docs/config.md`` for the grammar.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .core_model import GRAVITY, ActuationSystem, build_hexarotor
from .fiber import BidirectionalBox, Unidirectional
from .solvers import SolverOptions

SCHEMA_VERSION = 1
SWEEP_COMPONENTS = ("tau_x", "tau_y", "tau_z", "F_z")


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {e}" for e in self.errors))


@dataclass
class VehicleSpec:
    kind: str = "hexarotor"
    mass_kg: float | None = None
    arm_radius_m: float | None = None
    k_f: float | None = None
    k_m: float | None = None
    angle_offset_rad: float = 0.0
    spins: str | list[int] = "alternating"
    energy_weights: float | list[float] = 1.0
    A: list[list[float]] | None = None

    def build(self) -> ActuationSystem:
        if self.kind == "hexarotor":
            return build_hexarotor(
                self.mass_kg, self.arm_radius_m, self.k_f, self.k_m,
                angle_offset_rad=self.angle_offset_rad, spin_pattern=self.spins,
                energy_weights=self.energy_weights,
            )
        return ActuationSystem(A=self.A, c=self.energy_weights, mass_kg=self.mass_kg)


@dataclass
class RegimeSpec:
    kind: str
    bound: float | list[float] | None = None

    def build(self):
        if self.kind == "unidirectional":
            return Unidirectional()
        return BidirectionalBox(self.bound)

    @property
    def label(self) -> str:
        return self.kind


@dataclass
class TaskSpec:
    kind: str
    wrench: list[float] | None = None
    wrenches: list[list[float]] | None = None
    component: str = "tau_x"
    start: float = 0.0
    stop: float = 1.0
    step: float = 0.05
    base: list[float] | None = None

    def sweep_values(self) -> np.ndarray:
        count = int(round((self.stop - self.start) / self.step)) + 1
        return np.round(self.start + self.step * np.arange(count), 12)

    def wrench_list(self, system: ActuationSystem) -> list[np.ndarray]:
        if self.kind == "wrench":
            return [np.asarray(self.wrench, dtype=float)]
        if self.kind == "wrenches":
            return [np.asarray(w, dtype=float) for w in self.wrenches]
        base = self.base
        if base is None:
            base = [0.0, 0.0, 0.0, system.hover_thrust]
        j = SWEEP_COMPONENTS.index(self.component)
        out = []
        for x in self.sweep_values():
            w = np.array(base, dtype=float)
            w[j] = x
            out.append(w)
        return out


@dataclass
class SolverSpec:
    seed: int = 0
    kkt_tol: float = 1e-7
    n_random_seeds: int = 16
    n_points: int = 11

    def options(self) -> SolverOptions:
        return SolverOptions(kkt_tol=self.kkt_tol, seed=self.seed, n_random_seeds=self.n_random_seeds)


@dataclass
class OutputSpec:
    directory: str = "results"
    formats: list[str] = field(default_factory=lambda: ["csv", "json", "svg"])


@dataclass
class ExperimentConfig:
    vehicle: VehicleSpec
    regimes: list[RegimeSpec]
    task: TaskSpec
    solver: SolverSpec = field(default_factory=SolverSpec)
    output: OutputSpec = field(default_factory=OutputSpec)
    name: str = "experiment"

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["schema"] = SCHEMA_VERSION
        task_keys = {
            "wrench": ("kind", "wrench"),
            "wrenches": ("kind", "wrenches"),
            "sweep": ("kind", "component", "start", "stop", "step", "base"),
        }[self.task.kind]
        d["task"] = {k: d["task"][k] for k in task_keys}
        if self.vehicle.kind == "matrix":
            d["vehicle"] = {k: d["vehicle"][k] for k in ("kind", "A", "energy_weights", "mass_kg")}
        else:
            d["vehicle"].pop("A")
        return _strip_none(d)


def _strip_none(obj):
    if isinstance(obj, dict):
        return {k: _strip_none(v) for k, v in obj.items() if v is not None}
    if isinstance(obj, list):
        return [_strip_none(v) for v in obj]
    return obj


# --------------------------------------------------------------------------
# validation helpers


class _Collector:
    def __init__(self):
        self.errors: list[str] = []

    def add(self, path: str, msg: str):
        self.errors.append(f"{path}: {msg}")

    def unknown(self, path: str, table: dict, allowed: set[str]):
        for key in sorted(set(table) - allowed):
            self.add(f"{path}.{key}" if path else key, "unknown key")

    def number(self, path, value, positive=False, nonneg=False, integer=False):
        ok_type = int if integer else (int, float)
        if isinstance(value, bool) or not isinstance(value, ok_type):
            self.add(path, f"expected {'an integer' if integer else 'a number'}, got {value!r}")
            return None
        if not math.isfinite(value):
            self.add(path, "must be finite")
            return None
        if positive and not value > 0:
            self.add(path, f"must be positive, got {value}")
            return None
        if nonneg and value < 0:
            self.add(path, f"must be nonnegative, got {value}")
            return None
        return value

    def vector(self, path, value, length=None, positive=False):
        if not isinstance(value, list) or not value:
            self.add(path, f"expected a non-empty list of numbers, got {value!r}")
            return None
        out = [self.number(f"{path}[{i}]", v, positive=positive) for i, v in enumerate(value)]
        if any(v is None for v in out):
            return None
        if length is not None and len(out) != length:
            self.add(path, f"expected {length} entries, got {len(out)}")
            return None
        return out

    def scalar_or_vector(self, path, value, positive=True):
        if isinstance(value, list):
            return self.vector(path, value, positive=positive)
        return self.number(path, value, positive=positive)


def _vehicle(c: _Collector, t: Any) -> VehicleSpec | None:
    if not isinstance(t, dict):
        c.add("vehicle", "expected a table")
        return None
    kind = t.get("kind", "hexarotor")
    if kind == "hexarotor":
        c.unknown("vehicle", t, {"kind", "mass_kg", "arm_radius_m", "k_f", "k_m",
                                 "angle_offset_rad", "spins", "energy_weights"})
        spec = VehicleSpec(kind=kind)
        for key in ("mass_kg", "arm_radius_m", "k_f", "k_m"):
            if key not in t:
                c.add(f"vehicle.{key}", "required field missing")
            else:
                setattr(spec, key, c.number(f"vehicle.{key}", t[key], positive=True))
        if "angle_offset_rad" in t:
            spec.angle_offset_rad = c.number("vehicle.angle_offset_rad", t["angle_offset_rad"])
        spins = t.get("spins", "alternating")
        if spins == "alternating":
            spec.spins = spins
        elif isinstance(spins, list) and len(spins) == 6 and all(s in (1, -1) and not isinstance(s, bool) for s in spins):
            spec.spins = list(spins)
        else:
            c.add("vehicle.spins", f"expected \"alternating\" or six entries of +1/-1, got {spins!r}")
        if "energy_weights" in t:
            spec.energy_weights = c.scalar_or_vector("vehicle.energy_weights", t["energy_weights"])
            if isinstance(spec.energy_weights, list) and len(spec.energy_weights) != 6:
                c.add("vehicle.energy_weights", "expected 6 entries")
        return spec
    if kind == "matrix":
        c.unknown("vehicle", t, {"kind", "A", "energy_weights", "mass_kg"})
        spec = VehicleSpec(kind=kind)
        A = t.get("A")
        if A is None:
            c.add("vehicle.A", "required field missing")
        elif not isinstance(A, list) or not A:
            c.add("vehicle.A", "expected a list of rows")
        else:
            rows = [c.vector(f"vehicle.A[{i}]", r) for i, r in enumerate(A)]
            if all(r is not None for r in rows):
                if len({len(r) for r in rows}) != 1:
                    c.add("vehicle.A", "rows have different lengths")
                else:
                    spec.A = rows
        if "energy_weights" in t:
            spec.energy_weights = c.scalar_or_vector("vehicle.energy_weights", t["energy_weights"])
        if "mass_kg" in t:
            spec.mass_kg = c.number("vehicle.mass_kg", t["mass_kg"], positive=True)
        return spec
    c.add("vehicle.kind", f"expected \"hexarotor\" or \"matrix\", got {kind!r}")
    return None


def _regimes(c: _Collector, t: Any) -> list[RegimeSpec]:
    if not isinstance(t, list) or not t:
        c.add("regimes", "expected a non-empty array of tables ([[regimes]])")
        return []
    out = []
    for i, r in enumerate(t):
        path = f"regimes[{i}]"
        if not isinstance(r, dict):
            c.add(path, "expected a table")
            continue
        kind = r.get("kind")
        if kind == "unidirectional":
            c.unknown(path, r, {"kind"})
            out.append(RegimeSpec(kind))
        elif kind == "box":
            c.unknown(path, r, {"kind", "bound"})
            if "bound" not in r:
                c.add(f"{path}.bound", "required field missing")
                continue
            b = c.scalar_or_vector(f"{path}.bound", r["bound"])
            if b is not None:
                out.append(RegimeSpec(kind, b))
        else:
            c.add(f"{path}.kind", f"expected \"unidirectional\" or \"box\", got {kind!r}")
    return out


def _task(c: _Collector, t: Any, m: int | None) -> TaskSpec | None:
    if not isinstance(t, dict):
        c.add("task", "expected a table")
        return None
    kind = t.get("kind")
    if kind == "wrench":
        c.unknown("task", t, {"kind", "wrench"})
        if "wrench" not in t:
            c.add("task.wrench", "required field missing")
            return None
        w = c.vector("task.wrench", t["wrench"], length=m)
        return None if w is None else TaskSpec(kind, wrench=w)
    if kind == "wrenches":
        c.unknown("task", t, {"kind", "wrenches"})
        ws = t.get("wrenches")
        if not isinstance(ws, list) or not ws:
            c.add("task.wrenches", "expected a non-empty list of wrenches")
            return None
        vs = [c.vector(f"task.wrenches[{i}]", w, length=m) for i, w in enumerate(ws)]
        return None if any(v is None for v in vs) else TaskSpec(kind, wrenches=vs)
    if kind == "sweep":
        c.unknown("task", t, {"kind", "component", "start", "stop", "step", "base"})
        spec = TaskSpec(kind)
        comp = t.get("component", "tau_x")
        if comp not in SWEEP_COMPONENTS:
            c.add("task.component", f"expected one of {list(SWEEP_COMPONENTS)}, got {comp!r}")
        spec.component = comp
        for key in ("start", "stop"):
            if key not in t:
                c.add(f"task.{key}", "required field missing")
            else:
                setattr(spec, key, c.number(f"task.{key}", t[key]))
        if "step" in t:
            spec.step = c.number("task.step", t["step"], positive=True)
        if None not in (spec.start, spec.stop) and spec.stop < spec.start:
            c.add("task.stop", "must not be below task.start")
        if "base" in t:
            spec.base = c.vector("task.base", t["base"], length=4)
        return spec
    c.add("task.kind", f"expected \"wrench\", \"wrenches\" or \"sweep\", got {kind!r}")
    return None


def parse_config_dict(data: dict[str, Any]) -> ExperimentConfig:
    c = _Collector()
    c.unknown("", data, {"name", "schema", "vehicle", "regimes", "task", "solver", "output"})
    if "schema" in data and data["schema"] != SCHEMA_VERSION:
        c.add("schema", f"unsupported schema version {data['schema']!r}")
    vehicle = regimes = task = None
    for key in ("vehicle", "regimes", "task"):
        if key not in data:
            c.add(key, "required field missing")
    vehicle_ok = False
    if "vehicle" in data:
        before = len(c.errors)
        vehicle = _vehicle(c, data["vehicle"])
        vehicle_ok = vehicle is not None and len(c.errors) == before
    if "regimes" in data:
        regimes = _regimes(c, data["regimes"])
    m = None
    if vehicle is not None:
        m = 4 if vehicle.kind == "hexarotor" else (len(vehicle.A) if vehicle.A else None)
    if "task" in data:
        task = _task(c, data["task"], m)
        if (task is not None and task.kind == "sweep" and vehicle is not None
                and vehicle.kind == "matrix" and m != 4):
            c.add("task", "sweeps need the 4-component wrench (tau_x, tau_y, tau_z, F_z)")
        if (task is not None and task.kind == "sweep" and task.base is None
                and vehicle is not None and vehicle.mass_kg is None):
            c.add("task.base", "required when the vehicle has no mass (hover thrust unknown)")

    solver = SolverSpec()
    s = data.get("solver", {})
    if not isinstance(s, dict):
        c.add("solver", "expected a table")
    else:
        c.unknown("solver", s, {"seed", "kkt_tol", "n_random_seeds", "n_points"})
        if "seed" in s:
            solver.seed = c.number("solver.seed", s["seed"], nonneg=True, integer=True)
        if "kkt_tol" in s:
            solver.kkt_tol = c.number("solver.kkt_tol", s["kkt_tol"], positive=True)
        if "n_random_seeds" in s:
            solver.n_random_seeds = c.number("solver.n_random_seeds", s["n_random_seeds"], nonneg=True, integer=True)
        if "n_points" in s:
            n_points = c.number("solver.n_points", s["n_points"], integer=True)
            if n_points is not None and n_points < 2:
                c.add("solver.n_points", "must be at least 2")
            solver.n_points = n_points

    output = OutputSpec()
    o = data.get("output", {})
    if not isinstance(o, dict):
        c.add("output", "expected a table")
    else:
        c.unknown("output", o, {"directory", "formats"})
        if "directory" in o:
            if isinstance(o["directory"], str) and o["directory"]:
                output.directory = o["directory"]
            else:
                c.add("output.directory", "expected a non-empty string")
        if "formats" in o:
            f = o["formats"]
            if not isinstance(f, list) or any(x not in ("csv", "json", "svg") for x in f):
                c.add("output.formats", f"expected a list drawn from csv, json, svg, got {f!r}")
            else:
                output.formats = list(f)
    name = data.get("name", "experiment")
    if not isinstance(name, str):
        c.add("name", "expected a string")

    if vehicle_ok:
        try:
            vehicle.build()
        except ValueError as exc:
            c.add("vehicle", str(exc))
    if c.errors:
        raise ConfigError(c.errors)
    return ExperimentConfig(vehicle=vehicle, regimes=regimes, task=task,
                            solver=solver, output=output, name=name)


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate TOML configuration text; raises :class:`ConfigError` listing every problem."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"syntax error: {exc}"]) from None
    return parse_config_dict(data)


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def hover_wrench(mass_kg: float) -> list[float]:
    return [0.0, 0.0, 0.0, mass_kg * GRAVITY]
