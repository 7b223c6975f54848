"""Energy and promptness programs on feasible fibers.

Every program is solved in null-space coordinates ``u = u_p + N z`` so the
wrench equality disappears and only bound inequalities remain.  The effort
space is split into sign cells (orthants).  Inside one cell ``|u_i| = s_i u_i``
is linear, so both objectives are smooth and convex there:

* energy ``sum c_i (s_i u_i)^{3/2}`` is convex,
* ``-1/2 log det(sum s_i u_i a_i a_i^T)`` is convex (log det of an affine map).

Each cell is solved with a log-barrier Newton method and the best cell wins.
The unidirectional regime is a single cell.  In the box regime the cells are
enumerated exhaustively for small ``n`` and otherwise taken from the sign
patterns of a multi-seed set spread over the null space.

Multiplier convention for every report: stationarity reads
``grad J(u) - A^T lam + nu = 0`` with ``nu_i >= 0`` on an active upper bound and
``nu_i <= 0`` on an active lower bound.  For energy this is the familiar
``(3/2) c_i sqrt(u_i) = lam^T a_i`` on free rotors; for promptness the
marginal-gain form ``a_i^T S^{-1} a_i = eta^T a_i`` has ``eta = -2 lam``.
"""

from __future__ import annotations

import itertools
import weakref
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import linprog

from .core_model import ActuationSystem
from .fiber import (
    BidirectionalBox,
    EmptyFiberError,
    FeasibleFiber,
    Unidirectional,
    fiber_of,
    is_feasible,
    restricted_gradients,
)
from .objectives import (
    ObjectiveValue,
    energy_grad_u,
    energy_u,
    evaluate,
    promptness_grad_u,
)


class RankDeficientStateError(ValueError):
    """No feasible allocation has a positive definite Gramian."""


@dataclass(frozen=True)
class SolverOptions:
    kkt_tol: float = 1e-7
    seed: int = 0
    n_random_seeds: int = 16
    seed_radii: tuple[float, ...] = (0.5, 1.0, 2.0, 4.0)
    max_enum_n: int = 10
    gap_tol: float = 1e-11
    active_tol: float = 1e-7
    merge_tol: float = 1e-9


DEFAULT_OPTIONS = SolverOptions()


@dataclass
class SolveReport:
    kind: str
    u_star: np.ndarray
    objective: ObjectiveValue
    multipliers: np.ndarray
    bound_multipliers: np.ndarray
    kkt_residual: float
    kkt_scale: float
    active_set: tuple[int, ...]
    seeds_tried: int
    converged: bool
    iterations: int
    signs: np.ndarray | None = None
    message: str = ""

    @property
    def kkt_scaled(self) -> float:
        return self.kkt_residual / self.kkt_scale

    @property
    def eta(self) -> np.ndarray:
        """Promptness multiplier in marginal-gain form ``a_i^T S^{-1} a_i = eta^T a_i``."""
        return -2.0 * self.multipliers


# --------------------------------------------------------------------------
# cells and seeds


@dataclass
class _Cell:
    signs: np.ndarray
    G: np.ndarray
    h: np.ndarray
    row_index: np.ndarray   # actuator index of each row
    row_dir: np.ndarray     # d g_j / d u_i for the row's actuator (+-1)
    row_regime: np.ndarray  # row is a bound of the regime (not just a sign split)
    z0: np.ndarray


def _cell_rows(fiber: FeasibleFiber, s: np.ndarray):
    N, up = fiber.N, fiber.u_particular
    unidir = isinstance(fiber.regime, Unidirectional)
    ub = fiber.upper
    G, h, idx, drc, reg = [], [], [], [], []
    for i in range(fiber.system.n):
        # s_i u_i >= 0
        G.append(-s[i] * N[i])
        h.append(s[i] * up[i])
        idx.append(i)
        drc.append(-s[i])
        reg.append(unidir)
        if np.isfinite(ub[i]):
            # s_i u_i <= ubar_i
            G.append(s[i] * N[i])
            h.append(ub[i] - s[i] * up[i])
            idx.append(i)
            drc.append(s[i])
            reg.append(True)
    return (np.array(G), np.array(h), np.array(idx), np.array(drc, dtype=float), np.array(reg))


def _interior_point(G: np.ndarray, h: np.ndarray) -> tuple[np.ndarray, float]:
    k = G.shape[1]
    norms = np.linalg.norm(G, axis=1)
    cost = np.zeros(k + 1)
    cost[-1] = -1.0
    res = linprog(
        cost,
        A_ub=np.hstack([G, norms[:, None]]),
        b_ub=h,
        bounds=[(None, None)] * k + [(None, 1e3)],
        method="highs",
    )
    if res.status != 0:
        return np.zeros(k), -np.inf
    return res.x[:k], float(res.x[-1])


def null_space_seeds(fiber: FeasibleFiber, options: SolverOptions = DEFAULT_OPTIONS) -> np.ndarray:
    """Seed points ``z`` spread over the null space: origin, axis rays and random box-slice samples."""
    k = fiber.k
    n = fiber.system.n
    if isinstance(fiber.regime, BidirectionalBox):
        scale = float(np.median(fiber.regime.bound_vector(n)))
    else:
        scale = float(np.linalg.norm(fiber.u_particular)) or 1.0
    seeds = [np.zeros(k)]
    for r in options.seed_radii:
        for j in range(k):
            e = np.zeros(k)
            e[j] = r * scale
            seeds.extend([e, -e])
    rng = np.random.default_rng(options.seed)
    lo, hi = fiber.lower, fiber.upper
    if options.n_random_seeds and np.all(np.isfinite(hi)):
        # sample the box slice by rejection from its bounding box in z
        G, hh = _regime_rows(fiber)
        zmin, zmax = [], []
        for j in range(k):
            e = np.zeros(k)
            e[j] = 1.0
            r1 = linprog(e, A_ub=G, b_ub=hh, bounds=[(None, None)] * k, method="highs")
            r2 = linprog(-e, A_ub=G, b_ub=hh, bounds=[(None, None)] * k, method="highs")
            if r1.status != 0 or r2.status != 0:
                break
            zmin.append(r1.x[j])
            zmax.append(r2.x[j])
        else:
            got, tries = 0, 0
            while got < options.n_random_seeds and tries < 200 * options.n_random_seeds:
                z = rng.uniform(zmin, zmax)
                tries += 1
                u = fiber.point(z)
                if np.all(u >= lo) and np.all(u <= hi):
                    seeds.append(z)
                    got += 1
    return np.array(seeds)


def _regime_rows(fiber: FeasibleFiber):
    N, up = fiber.N, fiber.u_particular
    lo, hi = fiber.lower, fiber.upper
    G, h = [], []
    for i in range(fiber.system.n):
        if np.isfinite(lo[i]):
            G.append(-N[i])
            h.append(up[i] - lo[i])
        if np.isfinite(hi[i]):
            G.append(N[i])
            h.append(hi[i] - up[i])
    return np.array(G), np.array(h)


_CELL_CACHE: "weakref.WeakKeyDictionary[FeasibleFiber, dict]" = weakref.WeakKeyDictionary()


def _cells(fiber: FeasibleFiber, options: SolverOptions) -> list[_Cell]:
    per_fiber = _CELL_CACHE.setdefault(fiber, {})
    key = (options.seed, options.n_random_seeds, options.seed_radii, options.max_enum_n)
    if key in per_fiber:
        return per_fiber[key]
    n = fiber.system.n
    if isinstance(fiber.regime, Unidirectional):
        patterns = [tuple([1] * n)]
    else:
        patterns = []
        for z in null_space_seeds(fiber, options):
            u = fiber.point(z)
            patterns.append(tuple(int(x) for x in np.where(u < 0, -1, 1)))
        if n <= options.max_enum_n:
            patterns.extend(itertools.product((1, -1), repeat=n))
        patterns = list(dict.fromkeys(patterns))
    cells = []
    for p in patterns:
        s = np.array(p, dtype=float)
        G, h, idx, drc, reg = _cell_rows(fiber, s)
        z0, margin = _interior_point(G, h)
        if margin > 1e-9:
            cells.append(_Cell(s, G, h, idx, drc, reg, z0))
    per_fiber[key] = cells
    return cells


# --------------------------------------------------------------------------
# smooth cell objectives: value, gradient and Hessian in u


def _energy_terms(sys: ActuationSystem, u: np.ndarray, s: np.ndarray, need_hess: bool = True):
    mag = np.maximum(s * u, 0.0)
    r = np.sqrt(mag)
    val = float(np.sum(sys.c * mag * r))
    if not need_hess:
        return val, None, None
    grad = 1.5 * sys.c * s * r
    with np.errstate(divide="ignore"):
        hess = np.diag(0.75 * sys.c / np.maximum(r, 1e-300))
    return val, grad, hess


def _promptness_terms(sys: ActuationSystem, u: np.ndarray, s: np.ndarray, need_hess: bool = True):
    A = sys.A
    S = (A * (s * u)) @ A.T
    try:
        cf = cho_factor(S)
    except np.linalg.LinAlgError:
        return np.inf, None, None
    val = -float(np.sum(np.log(np.diag(cf[0]))))
    if not need_hess:
        return val, None, None
    K = A.T @ cho_solve(cf, A)
    grad = -0.5 * s * np.diag(K)
    hess = 0.5 * np.outer(s, s) * K ** 2
    return val, grad, hess


_TERMS = {"energy": _energy_terms, "promptness": _promptness_terms}


@dataclass
class _CellResult:
    cell: _Cell
    z: np.ndarray
    u: np.ndarray
    value: float
    mu: np.ndarray
    gamma: float
    iterations: int
    ok: bool


def _solve_cell(
    fiber: FeasibleFiber,
    cell: _Cell,
    kind: str,
    options: SolverOptions,
    eps: float | None = None,
    z_start: np.ndarray | None = None,
) -> _CellResult:
    """Barrier path-following for one cell; ``eps`` adds the constraint ``J1 <= eps``."""
    sys = fiber.system
    N, up = fiber.N, fiber.u_particular
    G, h, s = cell.G, cell.h, cell.signs
    terms = _TERMS[kind]
    z = cell.z0.copy() if z_start is None else np.array(z_start, dtype=float)
    n_con = len(h) + (eps is not None)

    def phi(zz, t, need_hess):
        slack = h - G @ zz
        if np.any(slack <= 0):
            return np.inf, None, None
        u = up + N @ zz
        f, gf, Hf = terms(sys, u, s, need_hess)
        if not np.isfinite(f):
            return np.inf, None, None
        val = t * f - np.sum(np.log(slack))
        if eps is not None:
            e, ge, He = _energy_terms(sys, u, s, need_hess)
            if e >= eps:
                return np.inf, None, None
            val -= np.log(eps - e)
        if not need_hess:
            return val, None, None
        inv = 1.0 / slack
        g = t * (N.T @ gf) + G.T @ inv
        H = t * (N.T @ Hf @ N) + (G.T * inv ** 2) @ G
        if eps is not None:
            d = eps - e
            ge_z = N.T @ ge
            g = g + ge_z / d
            H = H + np.outer(ge_z, ge_z) / d ** 2 + (N.T @ He @ N) / d
        return val, g, H

    t = 1.0
    iterations = 0
    ok = True
    while True:
        best_dec, stall = np.inf, 0
        for _ in range(100):
            val, g, H = phi(z, t, True)
            if not np.isfinite(val):
                ok = False
                break
            try:
                dz = -np.linalg.solve(H, g)
            except np.linalg.LinAlgError:
                dz = -np.linalg.lstsq(H, g, rcond=None)[0]
            dec = -float(g @ dz)
            iterations += 1
            if dec <= 1e-14 or np.linalg.norm(dz) <= 1e-15 * (1.0 + np.linalg.norm(z)):
                break
            # decrement stuck at the rounding floor of the gradient
            if dec < 0.5 * best_dec:
                best_dec, stall = dec, 0
            else:
                stall += 1
                if stall >= 3:
                    break
            if dec < 0.25:
                # quadratic-convergence region: function values are below
                # float resolution at large t, so take the (damped) Newton step
                if np.isfinite(phi(z + dz, t, False)[0]):
                    z = z + dz
                    continue
                step = 1.0 / (1.0 + np.sqrt(dec))
                if not np.isfinite(phi(z + step * dz, t, False)[0]):
                    break
                z = z + step * dz
                continue
            alpha = 1.0
            while alpha > 1e-14:
                trial, _, _ = phi(z + alpha * dz, t, False)
                if trial <= val - 0.25 * alpha * dec:
                    break
                alpha *= 0.5
            else:
                break
            z = z + alpha * dz
        if not ok or n_con / t <= options.gap_tol:
            break
        t *= 10.0
    u = up + N @ z
    slack = h - G @ z
    mu = 1.0 / (t * slack)
    gamma = 0.0
    if eps is not None:
        gamma = 1.0 / (t * (eps - _energy_terms(sys, u, s, False)[0]))
    value = terms(sys, u, s, False)[0]
    return _CellResult(cell, z, u, value, mu, gamma, iterations, ok and np.isfinite(value))


# --------------------------------------------------------------------------
# KKT certificates


def _bound_kkt_violation(fiber: FeasibleFiber, u: np.ndarray, nu: np.ndarray) -> float:
    lo, hi = fiber.lower, fiber.upper
    worst = 0.0
    for i, v in enumerate(nu):
        if v > 0:
            worst = max(worst, v * (hi[i] - u[i]) if np.isfinite(hi[i]) else v)
        elif v < 0:
            worst = max(worst, -v * (u[i] - lo[i]) if np.isfinite(lo[i]) else -v)
    primal = max(0.0, float(np.max(lo - u)), float(np.max(u - hi)))
    return max(worst, primal, fiber.residual(u))


def _kkt_residual(fiber, u, grad, lam, nu) -> float:
    u = np.asarray(u, dtype=float)
    r = grad - fiber.system.A.T @ np.asarray(lam, dtype=float) + np.asarray(nu, dtype=float)
    return max(float(np.max(np.abs(r))), _bound_kkt_violation(fiber, u, nu))


def kkt_residual_energy(fiber: FeasibleFiber, u, lam, bound_multipliers) -> float:
    """Max-norm KKT violation of the energy program: stationarity, complementarity, sign and primal feasibility."""
    return _kkt_residual(fiber, u, energy_grad_u(fiber.system, u), lam, bound_multipliers)


def kkt_residual_promptness(fiber: FeasibleFiber, u, eta, bound_multipliers, signs=None) -> float:
    """Same aggregate for the promptness program.

    ``eta`` here follows the report convention (``grad J2 = A^T eta - nu``).
    Raises :class:`~fiberalloc.objectives.SingularGramianError` when ``S(u)`` is singular.
    """
    grad = promptness_grad_u(fiber.system, u, signs=signs)
    return _kkt_residual(fiber, u, grad, eta, bound_multipliers)


def estimate_multipliers(fiber: FeasibleFiber, u, grad, active_tol: float = 1e-7):
    """Least-squares multipliers ``(lam, nu)`` using the bounds active at ``u``."""
    u = np.asarray(u, dtype=float)
    A = fiber.system.A
    lo, hi = fiber.lower, fiber.upper
    active = np.flatnonzero((u - lo <= active_tol) | (hi - u <= active_tol))
    E = np.zeros((fiber.system.n, len(active)))
    E[active, np.arange(len(active))] = 1.0
    sol = np.linalg.lstsq(np.hstack([A.T, -E]), grad, rcond=None)[0]
    nu = np.zeros(fiber.system.n)
    nu[active] = sol[A.shape[0]:]
    return sol[: A.shape[0]], nu


def _energy_dual_polish(fiber: FeasibleFiber, lam, max_iter: int = 60) -> np.ndarray | None:
    """Exact energy minimizer from the smooth dual, started at ``lam``.

    The energy program is separable with box bounds, so for a multiplier
    ``lam`` each effort minimizes ``c_i |u_i|^{3/2} - (a_i^T lam) u_i`` in
    closed form.  Newton on ``A u(lam) = w`` then resolves optima that sit
    at a zero crossing, where the primal Hessian is unbounded.  Returns
    ``None`` if the iteration does not converge.
    """
    sys = fiber.system
    A, c, w = sys.A, sys.c, fiber.w
    lo, hi = fiber.lower, fiber.upper

    def primal(lam):
        s = A.T @ lam
        u = np.sign(s) * (s / (1.5 * c)) ** 2
        uc = np.clip(u, lo, hi)
        return uc, s, uc == u

    def dual_value(lam):
        u, s, _ = primal(lam)
        return float(lam @ w + np.sum(c * np.abs(u) ** 1.5 - s * u))

    tol = 1e-13 * (1.0 + float(np.linalg.norm(w)))
    lam = np.asarray(lam, dtype=float).copy()
    for _ in range(max_iter):
        u, s, free = primal(lam)
        F = w - A @ u
        fn = float(np.linalg.norm(F))
        if fn <= tol:
            return u
        H = (A * (2.0 * np.abs(s) / (1.5 * c) ** 2 * free)) @ A.T
        d = np.linalg.lstsq(H + 1e-14 * (1.0 + np.trace(H)) * np.eye(len(w)), F, rcond=None)[0]
        if not F @ d > 0:
            d = F
        q0, step = dual_value(lam), 1.0
        while step > 1e-12:
            cand = lam + step * d
            if (dual_value(cand) >= q0 + 1e-4 * step * (F @ d)
                    or np.linalg.norm(w - A @ primal(cand)[0]) < fn):
                break
            step *= 0.5
        lam = cand
    return None


def _energy_scale(fiber: FeasibleFiber) -> float:
    return 1.0 + float(np.linalg.norm(energy_grad_u(fiber.system, fiber.u_particular)))


# --------------------------------------------------------------------------
# single-objective programs


def _pick_best(results: list[_CellResult], merge_tol: float) -> _CellResult:
    best = min(r.value for r in results)
    tied = [r for r in results if r.value <= best + merge_tol * (1.0 + abs(best))]
    return min(tied, key=lambda r: tuple(np.round(r.u, 9)))


def _report_from_cell(fiber, res: _CellResult, kind, n_cells, iterations, options) -> SolveReport:
    sys = fiber.system
    u = res.u
    cell = res.cell
    if kind == "energy":
        grad = energy_grad_u(sys, u)
        scale = _energy_scale(fiber)
    else:
        grad = promptness_grad_u(sys, u, signs=cell.signs)
        scale = 1.0 + float(np.linalg.norm(grad))
    # barrier multipliers 1/(t*slack) lose accuracy as slacks reach rounding
    # level, so refit them on the active set
    lam, nu = estimate_multipliers(fiber, u, grad, options.active_tol)
    if kind == "energy":
        resid = kkt_residual_energy(fiber, u, lam, nu)
    else:
        resid = kkt_residual_promptness(fiber, u, lam, nu, signs=cell.signs)
    lo, hi = fiber.lower, fiber.upper
    active = tuple(
        int(i) for i in np.flatnonzero((u - lo <= options.active_tol) | (hi - u <= options.active_tol))
    )
    feas = is_feasible(fiber, u)
    converged = bool(res.ok and feas.feasible and resid < options.kkt_tol * scale)
    msg = "" if converged else f"kkt residual {resid:.3e} (scale {scale:.3g}), feasible={feas.feasible}"
    return SolveReport(
        kind=kind, u_star=u, objective=evaluate(sys, u), multipliers=lam, bound_multipliers=nu,
        kkt_residual=resid, kkt_scale=scale, active_set=active, seeds_tried=n_cells,
        converged=converged, iterations=iterations, signs=cell.signs, message=msg,
    )


def _degenerate_report(fiber: FeasibleFiber, kind: str, options: SolverOptions) -> SolveReport:
    """Feasible set without relative interior: the feasibility point is the only candidate."""
    sys = fiber.system
    u = np.array(fiber.feasible_point, dtype=float)
    u[np.abs(u) < 1e-12] = 0.0
    obj = evaluate(sys, u)
    if kind == "promptness":
        if obj.singular:
            raise RankDeficientStateError(
                "no feasible allocation with a positive definite Gramian on this fiber"
            )
        grad = promptness_grad_u(sys, u, signs=np.ones(sys.n))
        scale = 1.0 + float(np.linalg.norm(grad))
    else:
        grad = energy_grad_u(sys, u)
        scale = _energy_scale(fiber)
    lam, nu = estimate_multipliers(fiber, u, grad, options.active_tol)
    resid = _kkt_residual(fiber, u, grad, lam, nu)
    lo, hi = fiber.lower, fiber.upper
    active = tuple(int(i) for i in np.flatnonzero((u - lo <= options.active_tol) | (hi - u <= options.active_tol)))
    return SolveReport(
        kind=kind, u_star=u, objective=obj, multipliers=lam, bound_multipliers=nu,
        kkt_residual=resid, kkt_scale=scale, active_set=active, seeds_tried=0,
        converged=bool(resid < options.kkt_tol * scale), iterations=0,
        message="feasible set has no relative interior",
    )


def _solve(fiber: FeasibleFiber, kind: str, options: SolverOptions | None) -> SolveReport:
    options = options or DEFAULT_OPTIONS
    if fiber.empty:
        raise EmptyFiberError(fiber)
    cells = _cells(fiber, options)
    if not cells:
        return _degenerate_report(fiber, kind, options)
    results = [_solve_cell(fiber, c, kind, options) for c in cells]
    iterations = sum(r.iterations for r in results)
    good = [r for r in results if r.ok]
    if not good:
        r = results[0]
        rep = _report_from_cell(fiber, r, kind, len(cells), iterations, options)
        rep.converged = False
        rep.message = "all cells failed"
        return rep
    best = _pick_best(good, options.merge_tol)
    if kind == "energy":
        best = _polish_energy_result(fiber, best, options)
    return _report_from_cell(fiber, best, kind, len(cells), iterations, options)


def _polish_energy_result(fiber: FeasibleFiber, res: _CellResult, options: SolverOptions) -> _CellResult:
    lam0, _ = estimate_multipliers(fiber, res.u, energy_grad_u(fiber.system, res.u), options.active_tol)
    u = _energy_dual_polish(fiber, lam0)
    if u is None or not is_feasible(fiber, u):
        return res
    signs = np.where(u > 0, 1.0, np.where(u < 0, -1.0, res.cell.signs))
    cell = replace(res.cell, signs=signs)
    return replace(res, cell=cell, u=u, z=fiber.coordinates(u), value=energy_u(fiber.system, u))


def min_energy(fiber: FeasibleFiber, options: SolverOptions | None = None) -> SolveReport:
    """Unique minimizer of ``sum c_i |u_i|^{3/2}`` on the feasible fiber."""
    return _solve(fiber, "energy", options)


def max_promptness(fiber: FeasibleFiber, options: SolverOptions | None = None) -> SolveReport:
    """Best maximizer of ``log det S(u)`` over all sign cells of the feasible fiber.

    Raises :class:`RankDeficientStateError` when no feasible allocation has a
    positive definite Gramian.
    """
    return _solve(fiber, "promptness", options)


# --------------------------------------------------------------------------
# Pareto fronts


@dataclass
class ParetoPoint:
    j1: float
    j2: float
    u: np.ndarray
    epsilon: float | None
    status: str
    kkt_residual: float = 0.0


@dataclass
class ParetoFront:
    points: list[ParetoPoint]
    extent: float
    endpoints: tuple[SolveReport, SolveReport]
    failed: list[ParetoPoint] = field(default_factory=list)


def _epsilon_point(fiber, cells, eps, energy_by_cell, options) -> ParetoPoint:
    """Minimize promptness cost subject to ``J1 <= eps`` over all cells."""
    sys = fiber.system
    results = []
    for cell, e_res in zip(cells, energy_by_cell):
        if not e_res.ok or e_res.value >= eps:
            continue
        # blend the cell's energy minimizer toward its interior point until strictly inside
        target = e_res.value + 0.5 * (eps - e_res.value)
        theta, z = 0.5, None
        while theta > 1e-12:
            cand = e_res.z + theta * (cell.z0 - e_res.z)
            if energy_u(sys, fiber.point(cand)) < target and np.all(cell.h - cell.G @ cand > 0):
                z = cand
                break
            theta *= 0.5
        if z is None:
            continue
        results.append(_solve_cell(fiber, cell, "promptness", options, eps=eps, z_start=z))
    good = [r for r in results if r.ok]
    if not good:
        return ParetoPoint(np.nan, np.nan, np.full(sys.n, np.nan), eps, "failed")
    best = _pick_best(good, options.merge_tol)
    u = best.u
    g2 = promptness_grad_u(sys, u, signs=best.cell.signs)
    g1 = energy_grad_u(sys, u)
    j1 = energy_u(sys, u)
    budget_active = eps - j1 <= options.active_tol * (1.0 + abs(eps))
    lam, nu, gamma = _fit_epsilon_multipliers(fiber, u, g1, g2, budget_active, options.active_tol)
    grad = g2 + gamma * g1
    resid = max(
        _kkt_residual(fiber, u, grad, lam, nu),
        max(0.0, -gamma),
        gamma * max(0.0, eps - j1),
        max(0.0, j1 - eps),
    )
    scale = 1.0 + float(np.linalg.norm(g2))
    status = "ok" if resid < options.kkt_tol * scale and is_feasible(fiber, u) else "unconverged"
    return ParetoPoint(j1, float(best.value), u, eps, status, resid / scale)


def _fit_epsilon_multipliers(fiber, u, g1, g2, budget_active, active_tol):
    """Least-squares ``(lam, nu, gamma)`` for ``g2 + gamma g1 - A^T lam + nu = 0``."""
    A = fiber.system.A
    n, m = fiber.system.n, A.shape[0]
    lo, hi = fiber.lower, fiber.upper
    active = np.flatnonzero((u - lo <= active_tol) | (hi - u <= active_tol))
    E = np.zeros((n, len(active)))
    E[active, np.arange(len(active))] = 1.0
    cols = [A.T, -E] + ([-g1[:, None]] if budget_active else [])
    sol = np.linalg.lstsq(np.hstack(cols), g2, rcond=None)[0]
    nu = np.zeros(n)
    nu[active] = sol[m:m + len(active)]
    gamma = float(sol[-1]) if budget_active else 0.0
    return sol[:m], nu, gamma


def pareto_front(fiber: FeasibleFiber, n_points: int = 11, options: SolverOptions | None = None) -> ParetoFront:
    """Front between the energy and promptness optima by the epsilon-constraint method.

    Interior points minimize promptness cost subject to ``J1 <= eps`` for
    ``eps`` evenly spaced between the two endpoint energies.  Dominated points
    are pruned and the extent is the polyline length in ``(J1, J2)``.
    """
    if n_points < 2:
        raise ValueError("n_points must be at least 2")
    options = options or DEFAULT_OPTIONS
    en = min_energy(fiber, options)
    pr = max_promptness(fiber, options)
    e_lo, e_hi = en.objective.j1, pr.objective.j1
    tol = options.merge_tol * (1.0 + abs(e_lo))
    start = ParetoPoint(e_lo, en.objective.j2, en.u_star, None, "ok" if en.converged else "unconverged", en.kkt_scaled)
    end = ParetoPoint(e_hi, pr.objective.j2, pr.u_star, None, "ok" if pr.converged else "unconverged", pr.kkt_scaled)
    if start.j2 is None:
        start = ParetoPoint(e_lo, np.inf, en.u_star, None, "singular")
    if e_hi - e_lo <= tol and abs(start.j2 - end.j2) <= tol:
        return ParetoFront(points=[start], extent=0.0, endpoints=(en, pr))
    cells = _cells(fiber, options)
    energy_by_cell = [_solve_cell(fiber, c, "energy", options) for c in cells]
    candidates = [start]
    failed = []
    for k in range(1, n_points - 1):
        eps = e_lo + (e_hi - e_lo) * k / (n_points - 1)
        p = _epsilon_point(fiber, cells, eps, energy_by_cell, options)
        (candidates if p.status != "failed" else failed).append(p)
    candidates.append(end)
    candidates = [p for p in candidates if np.isfinite(p.j2)]
    candidates.sort(key=lambda p: (p.j1, p.j2))
    kept: list[ParetoPoint] = []
    for p in candidates:
        if not kept or p.j2 < kept[-1].j2 - tol:
            kept.append(p)
    xy = np.array([[p.j1, p.j2] for p in kept])
    extent = float(np.sum(np.linalg.norm(np.diff(xy, axis=0), axis=1))) if len(kept) > 1 else 0.0
    return ParetoFront(points=kept, extent=extent, endpoints=(en, pr), failed=failed)


# --------------------------------------------------------------------------
# sweeps


@dataclass
class SweepCell:
    wrench: np.ndarray
    regime: object
    energy: SolveReport | None = None
    promptness: SolveReport | None = None
    j1_at_promptness: float | None = None
    j2_at_energy: float | None = None
    kappa_energy: float | None = None
    kappa_promptness: float | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return (
            self.error is None
            and self.energy is not None and self.energy.converged
            and self.promptness is not None and self.promptness.converged
        )


def solve_cell(sys: ActuationSystem, w, regime, options: SolverOptions | None = None) -> SweepCell:
    cell = SweepCell(wrench=np.asarray(w, dtype=float), regime=regime)
    try:
        fiber = fiber_of(sys, w, regime)
        cell.energy = min_energy(fiber, options)
        cell.promptness = max_promptness(fiber, options)
    except (EmptyFiberError, RankDeficientStateError, np.linalg.LinAlgError, RuntimeError) as exc:
        cell.error = str(exc)
        return cell
    cell.j1_at_promptness = energy_u(sys, cell.promptness.u_star)
    cell.j2_at_energy = cell.energy.objective.j2
    cell.kappa_energy = _kappa_at(sys, fiber, cell.energy)
    cell.kappa_promptness = _kappa_at(sys, fiber, cell.promptness)
    return cell


def _kappa_at(sys, fiber, report: SolveReport) -> float | None:
    if report.objective.singular:
        return None
    return restricted_gradients(sys, fiber, report.u_star, signs=report.signs).kappa


def sweep(sys: ActuationSystem, wrench_list, regimes, options: SolverOptions | None = None) -> list[SweepCell]:
    """Both optima plus cross-evaluations for every (regime, wrench) pair, regime-major."""
    return [solve_cell(sys, w, r, options) for r in regimes for w in wrench_list]
