"""Plot data: every kind is written as a CSV series plus an SVG rendering.

SVGs are rendered with matplotlib using a fixed hash salt and no date stamp,
so identical data gives identical files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .config import SWEEP_COMPONENTS  # noqa: E402
from .dual import antagonistic_profiles, cooperative_profiles, ray_limit  # noqa: E402
from .reports import ResultBundle, csv_text, front_rows  # noqa: E402

PLOT_KINDS = ("allocation-vs-sweep", "cost-vs-sweep", "pareto-front", "dual-fields", "dual-profiles")
FIELD_GRID_N = 61


class MissingSeriesError(ValueError):
    pass


def _save(fig, path: Path):
    with plt.rc_context({"svg.hashsalt": "fiberalloc", "svg.fonttype": "none"}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _sweep_axis(bundle: ResultBundle):
    task = bundle.config.task
    if task.kind == "sweep":
        j = SWEEP_COMPONENTS.index(task.component)
        return task.component, np.array([w[j] for w in bundle.wrenches])
    return "cell", np.arange(len(bundle.wrenches), dtype=float)


def _need_cells(bundle: ResultBundle):
    if not bundle.cells:
        raise MissingSeriesError("bundle has no solved cells")


def _allocation_vs_sweep(bundle: ResultBundle, out: Path) -> list[Path]:
    _need_cells(bundle)
    xlabel, x = _sweep_axis(bundle)
    labels = bundle.regime_labels()
    n_w, n = len(x), bundle.system.n
    rows = []
    for k, cell in enumerate(bundle.cells):
        for i in range(n):
            rows.append([
                labels[k // n_w], x[k % n_w], i,
                cell.energy.u_star[i] if cell.energy else None,
                cell.promptness.u_star[i] if cell.promptness else None,
            ])
    csv_path = out / "allocation_vs_sweep.csv"
    csv_path.write_text(csv_text(["regime", xlabel, "rotor", "u_energy", "u_promptness"], rows), encoding="utf-8")

    fig, axes = plt.subplots(1, len(labels), figsize=(5 * len(labels), 4), squeeze=False)
    for j, label in enumerate(labels):
        ax = axes[0, j]
        block = bundle.cells[j * n_w:(j + 1) * n_w]
        for i in range(n):
            color = f"C{i % 10}"
            en = [c.energy.u_star[i] if c.energy else np.nan for c in block]
            pr = [c.promptness.u_star[i] if c.promptness else np.nan for c in block]
            ax.plot(x, en, color=color, label=f"rotor {i} energy")
            ax.plot(x, pr, color=color, linestyle="--", label=f"rotor {i} promptness")
        ax.set_title(label)
        ax.set_xlabel(xlabel)
        ax.set_ylabel("effort u")
    axes[0, -1].legend(fontsize=6, ncol=2)
    svg_path = out / "allocation_vs_sweep.svg"
    _save(fig, svg_path)
    return [csv_path, svg_path]


def _cost_vs_sweep(bundle: ResultBundle, out: Path) -> list[Path]:
    _need_cells(bundle)
    xlabel, x = _sweep_axis(bundle)
    labels = bundle.regime_labels()
    n_w = len(x)
    rows = []
    for k, c in enumerate(bundle.cells):
        rows.append([
            labels[k // n_w], x[k % n_w],
            c.energy.objective.j1 if c.energy else None, c.j2_at_energy,
            c.j1_at_promptness, c.promptness.objective.j2 if c.promptness else None,
        ])
    header = ["regime", xlabel, "j1_at_energy_opt", "j2_at_energy_opt", "j1_at_promptness_opt", "j2_at_promptness_opt"]
    csv_path = out / "cost_vs_sweep.csv"
    csv_path.write_text(csv_text(header, rows), encoding="utf-8")

    def col(j, idx):
        return [np.nan if r[idx] is None else r[idx] for r in rows[j * n_w:(j + 1) * n_w]]

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    for j, label in enumerate(labels):
        ax1.plot(x, col(j, 2), color=f"C{j}", label=f"{label} at energy opt")
        ax1.plot(x, col(j, 4), color=f"C{j}", linestyle="--", label=f"{label} at promptness opt")
        ax2.plot(x, col(j, 3), color=f"C{j}", label=f"{label} at energy opt")
        ax2.plot(x, col(j, 5), color=f"C{j}", linestyle="--", label=f"{label} at promptness opt")
    ax1.set_ylabel("energy cost J1")
    ax2.set_ylabel("promptness cost J2")
    for ax in (ax1, ax2):
        ax.set_xlabel(xlabel)
        ax.legend(fontsize=7)
    svg_path = out / "cost_vs_sweep.svg"
    _save(fig, svg_path)
    return [csv_path, svg_path]


def _pareto_front(bundle: ResultBundle, out: Path) -> list[Path]:
    if not any(f.front is not None for f in bundle.fronts):
        raise MissingSeriesError("bundle has no Pareto fronts")
    header, rows = front_rows(bundle)
    csv_path = out / "pareto_front.csv"
    csv_path.write_text(csv_text(header, rows), encoding="utf-8")
    fig, ax = plt.subplots(figsize=(5, 4))
    labels = bundle.regime_labels()
    for k, fr in enumerate(bundle.fronts):
        if fr.front is None:
            continue
        xy = np.array([[p.j1, p.j2] for p in fr.front.points])
        style = "o-" if len(xy) > 1 else "o"
        ax.plot(xy[:, 0], xy[:, 1], style, color=f"C{k % 10}", label=f"{labels[fr.regime_index]} #{k}")
    ax.set_xlabel("energy cost J1")
    ax.set_ylabel("promptness cost J2")
    ax.legend(fontsize=7)
    svg_path = out / "pareto_front.svg"
    _save(fig, svg_path)
    return [csv_path, svg_path]


def _need_dual(bundle: ResultBundle):
    if bundle.dual is None:
        raise MissingSeriesError("bundle has no dual-actuator system")
    return bundle.dual


def _dual_fields(bundle: ResultBundle, out: Path) -> list[Path]:
    ds = _need_dual(bundle)
    u_span = 1.5 * max(ds.w / ds.a1, ds.w / ds.a2, bundle.dual_box or 0.0)
    v_span = np.sqrt(u_span)
    planes = {
        "v": (np.linspace(-v_span, v_span, FIELD_GRID_N), ds.energy_v, ds.surrogate_v),
        "u": (np.linspace(-u_span, u_span, FIELD_GRID_N), ds.energy, ds.surrogate),
    }
    rows, grids = [], {}
    for name, (axis, j1f, df) in planes.items():
        X, Y = np.meshgrid(axis, axis)
        J1, D = j1f(X, Y), df(X, Y)
        grids[name] = (X, Y, J1, D)
        rows.extend([name, x, y, a, b] for x, y, a, b in zip(X.ravel(), Y.ravel(), J1.ravel(), D.ravel()))
    csv_path = out / "dual_fields.csv"
    csv_path.write_text(csv_text(["plane", "x1", "x2", "j1", "d"], rows), encoding="utf-8")

    fig, axes = plt.subplots(2, 2, figsize=(9, 8))
    for r, name in enumerate(("v", "u")):
        X, Y, J1, D = grids[name]
        for col, (Z, title) in enumerate(((J1, "energy J1"), (D, "surrogate D"))):
            ax = axes[r, col]
            ax.contourf(X, Y, Z, levels=20)
            ax.contour(X, Y, Z, levels=20, colors="k", linewidths=0.3)
            # the task fiber
            if name == "u":
                ax.plot(X[0], (ds.w - ds.a1 * X[0]) / ds.a2, "r-", linewidth=1)
            else:
                v1 = X[0]
                u2 = (ds.w - ds.a1 * v1 * np.abs(v1)) / ds.a2
                ax.plot(v1, np.sign(u2) * np.sqrt(np.abs(u2)), "r-", linewidth=1)
            ax.set_xlim(X[0, 0], X[0, -1])
            ax.set_ylim(X[0, 0], X[0, -1])
            ax.set_title(f"{title}, {name}-plane")
            ax.set_xlabel(f"{name}1")
            ax.set_ylabel(f"{name}2")
    svg_path = out / "dual_fields.svg"
    _save(fig, svg_path)
    return [csv_path, svg_path]


def _dual_profiles(bundle: ResultBundle, out: Path) -> list[Path]:
    ds = _need_dual(bundle)
    t_max = bundle.dual_t_max if bundle.dual_box is None else ray_limit(ds, bundle.dual_box)
    coop = cooperative_profiles(ds)
    anta = antagonistic_profiles(ds, t_max)
    header = ["t", "u1", "u2", "j1", "d", "j2"]
    paths = []
    for name, prof in (("cooperative", coop), ("antagonistic", anta)):
        p = out / f"dual_profile_{name}.csv"
        p.write_text(csv_text(header, prof.rows()), encoding="utf-8")
        paths.append(p)
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    for ax, (name, prof) in zip(axes, (("cooperative", coop), ("antagonistic", anta))):
        ax.plot(prof.t, prof.j1, label="energy J1")
        ax.plot(prof.t, prof.d, label="surrogate D")
        ax.set_title(name)
        ax.set_xlabel("u1" if name == "cooperative" else "t")
        ax.legend(fontsize=7)
    svg_path = out / "dual_profiles.svg"
    _save(fig, svg_path)
    return paths + [svg_path]


_EMITTERS = {
    "allocation-vs-sweep": _allocation_vs_sweep,
    "cost-vs-sweep": _cost_vs_sweep,
    "pareto-front": _pareto_front,
    "dual-fields": _dual_fields,
    "dual-profiles": _dual_profiles,
}


def emit_plotdata(bundle: ResultBundle, kind: str, out_dir) -> list[Path]:
    """Write the CSV series and SVG figure for ``kind``; returns the paths written."""
    if kind not in _EMITTERS:
        raise ValueError(f"unknown plot kind {kind!r}; expected one of {list(PLOT_KINDS)}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return _EMITTERS[kind](bundle, out)
