"""Fibers of the allocation map, their parametrization and local conflict geometry.

In effort coordinates the fiber ``{u : A u = w}`` is the affine plane
``u_p + N z`` with ``N`` an orthonormal basis of ``ker(A)``.  The regime adds
either nonnegativity (unidirectional ESCs) or a symmetric box (reversible
propellers).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .core_model import ActuationSystem, jacobian
from .objectives import energy_grad_u, promptness_grad_u

FEAS_TOL = 1e-9
GRAD_TOL = 1e-8


class OffFiberError(ValueError):
    pass


class EmptyFiberError(ValueError):
    """The requested wrench cannot be produced under the actuation regime."""

    def __init__(self, fiber: "FeasibleFiber"):
        self.fiber = fiber
        super().__init__(
            f"wrench {np.round(fiber.w, 9).tolist()} is infeasible under {fiber.regime.describe()}; "
            f"minimal bound violation {fiber.violation:.6g}"
        )


@dataclass(frozen=True)
class Unidirectional:
    """``u >= 0``."""

    def lower(self, n: int) -> np.ndarray:
        return np.zeros(n)

    def upper(self, n: int) -> np.ndarray:
        return np.full(n, np.inf)

    def describe(self) -> str:
        return "unidirectional"


@dataclass(frozen=True)
class BidirectionalBox:
    """``|u_i| <= bounds_i``; a scalar bound applies to every actuator."""

    bounds: tuple[float, ...] | float

    def __post_init__(self):
        b = np.atleast_1d(np.asarray(self.bounds, dtype=float))
        if not np.all(b > 0):
            raise ValueError(f"box bounds must be positive, got {b}")
        object.__setattr__(self, "bounds", tuple(float(x) for x in b))

    def bound_vector(self, n: int) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.bounds), (n,)).astype(float)

    def lower(self, n: int) -> np.ndarray:
        return -self.bound_vector(n)

    def upper(self, n: int) -> np.ndarray:
        return self.bound_vector(n)

    def describe(self) -> str:
        b = self.bounds
        return f"box |u|<={b[0]:g}" if len(set(b)) == 1 else f"box |u|<={list(b)}"


Regime = Unidirectional | BidirectionalBox


def null_space_basis(sys: ActuationSystem) -> np.ndarray:
    """Orthonormal basis of ``ker(A)`` with a reproducible sign and column order.

    The basis is built from the (unique) kernel projector by Gram-Schmidt over
    its columns, so it does not depend on the rotation an SVD happens to
    return.  Columns are then ordered by decreasing magnitude of their first
    nonzero entry, which is made positive.
    """
    A = sys.A
    k = sys.n - sys.m
    _, _, Vt = np.linalg.svd(A)
    N0 = Vt[sys.m:].T
    P = N0 @ N0.T
    cols = []
    for j in range(sys.n):
        v = P[:, j].copy()
        for q in cols:
            v -= (q @ v) * q
        for q in cols:  # second pass for orthogonality at machine precision
            v -= (q @ v) * q
        nv = np.linalg.norm(v)
        if nv > 1e-8:
            cols.append(v / nv)
        if len(cols) == k:
            break
    N = np.column_stack(cols)
    lead = []
    for j in range(k):
        idx = np.flatnonzero(np.abs(N[:, j]) > 1e-12)[0]
        if N[idx, j] < 0:
            N[:, j] = -N[:, j]
        lead.append(abs(N[idx, j]))
    order = sorted(range(k), key=lambda j: (-round(lead[j], 12), j))
    return N[:, order]


@dataclass(frozen=True, eq=False)
class FeasibleFiber:
    system: ActuationSystem
    w: np.ndarray
    regime: Regime
    u_particular: np.ndarray
    N: np.ndarray
    empty: bool = False
    violation: float = 0.0
    feasible_point: np.ndarray | None = field(default=None, compare=False)
    least_violating_point: np.ndarray | None = field(default=None, compare=False)

    @property
    def k(self) -> int:
        return self.N.shape[1]

    @property
    def lower(self) -> np.ndarray:
        return self.regime.lower(self.system.n)

    @property
    def upper(self) -> np.ndarray:
        return self.regime.upper(self.system.n)

    def point(self, z) -> np.ndarray:
        return self.u_particular + self.N @ np.asarray(z, dtype=float)

    def coordinates(self, u) -> np.ndarray:
        return self.N.T @ (np.asarray(u, dtype=float) - self.u_particular)

    def residual(self, u) -> float:
        return float(np.linalg.norm(self.system.A @ np.asarray(u, dtype=float) - self.w))

    def eq_tol(self) -> float:
        return 1e-9 * (1.0 + float(np.linalg.norm(self.w)))


def _bound_rows(fiber_N: np.ndarray, u_p: np.ndarray, lo: np.ndarray, hi: np.ndarray):
    """Rows of ``G z <= h`` encoding ``lo <= u_p + N z <= hi`` (infinite bounds dropped)."""
    G, h = [], []
    for i in range(len(u_p)):
        if np.isfinite(lo[i]):
            G.append(-fiber_N[i])
            h.append(u_p[i] - lo[i])
        if np.isfinite(hi[i]):
            G.append(fiber_N[i])
            h.append(hi[i] - u_p[i])
    return np.array(G).reshape(-1, fiber_N.shape[1]), np.array(h)


def fiber_of(sys: ActuationSystem, w, regime: Regime) -> FeasibleFiber:
    """Affine fiber of ``w`` with an emptiness verdict for the regime.

    Emptiness comes from a linear program in null-space coordinates that
    minimizes the largest bound violation; its optimum is kept as the
    certificate.
    """
    w = np.asarray(w, dtype=float)
    if w.shape != (sys.m,):
        raise ValueError(f"wrench must have length {sys.m}, got shape {w.shape}")
    A = sys.A
    u_p = A.T @ np.linalg.solve(A @ A.T, w)
    N = null_space_basis(sys)
    lo, hi = regime.lower(sys.n), regime.upper(sys.n)
    k = N.shape[1]
    G, h = _bound_rows(N, u_p, lo, hi)
    # variables (z, s): min s  s.t.  G z - s <= h,  s >= 0
    cost = np.zeros(k + 1)
    cost[-1] = 1.0
    res = linprog(
        cost,
        A_ub=np.hstack([G, -np.ones((G.shape[0], 1))]),
        b_ub=h,
        bounds=[(None, None)] * k + [(0, None)],
        method="highs",
    )
    if res.status != 0:
        raise RuntimeError(f"feasibility program failed: {res.message}")
    violation = float(res.x[-1])
    point = u_p + N @ res.x[:k]
    empty = violation > FEAS_TOL
    for arr in (w, u_p, N, point):
        arr.setflags(write=False)
    return FeasibleFiber(
        system=sys, w=w, regime=regime, u_particular=u_p, N=N,
        empty=empty, violation=violation, feasible_point=None if empty else point,
        least_violating_point=point,
    )


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    residual: float
    violations: dict[int, float]

    def __bool__(self) -> bool:
        return self.feasible


def is_feasible(fiber: FeasibleFiber, u, feas_tol: float = FEAS_TOL) -> FeasibilityReport:
    u = np.asarray(u, dtype=float)
    res = fiber.residual(u)
    lo, hi = fiber.lower, fiber.upper
    excess = np.maximum(lo - u, u - hi)
    violations = {int(i): float(excess[i]) for i in np.flatnonzero(excess > feas_tol)}
    ok = res <= fiber.eq_tol() and not violations
    return FeasibilityReport(feasible=ok, residual=res, violations=violations)


def projector_at(sys: ActuationSystem, v) -> np.ndarray:
    """Orthogonal projector ``I - J^T (J J^T)^{-1} J`` onto the fiber tangent space at ``v``."""
    v = np.asarray(v, dtype=float)
    J = jacobian(sys, v)
    s = np.linalg.svd(J, compute_uv=False)
    if s[0] == 0.0 or s[-1] <= 1e-9 * s[0]:
        dead = np.flatnonzero(v == 0.0).tolist()
        raise np.linalg.LinAlgError(
            f"Jacobian is rank deficient at v (sigma_min={s[-1]:.3e}); vanishing columns {dead}"
        )
    P = np.eye(sys.n) - J.T @ np.linalg.solve(J @ J.T, J)
    return 0.5 * (P + P.T)


@dataclass(frozen=True)
class ConflictSample:
    u: np.ndarray
    kappa: float | None
    restricted_grad_energy: np.ndarray
    restricted_grad_promptness: np.ndarray


def conflict_index(g1, g2, tol1: float = 0.0, tol2: float = 0.0) -> float | None:
    """Cosine between the two descent directions ``-g1`` and ``-g2``.

    Returns 1 when both vanish and ``None`` when only one does.
    """
    n1, n2 = np.linalg.norm(g1), np.linalg.norm(g2)
    small1, small2 = n1 <= tol1, n2 <= tol2
    if small1 and small2:
        return 1.0
    if small1 or small2:
        return None
    return float(np.clip(np.dot(g1, g2) / (n1 * n2), -1.0, 1.0))


def restricted_gradients(sys: ActuationSystem, fiber: FeasibleFiber, u, signs=None) -> ConflictSample:
    u = np.asarray(u, dtype=float)
    if fiber.residual(u) > fiber.eq_tol():
        raise OffFiberError(f"point is off the fiber, |Au - w| = {fiber.residual(u):.3e}")
    g1 = energy_grad_u(sys, u)
    g2 = promptness_grad_u(sys, u, signs=signs)
    P = fiber.N @ fiber.N.T
    r1, r2 = P @ g1, P @ g2
    kappa = conflict_index(
        r1, r2,
        GRAD_TOL * (1.0 + np.linalg.norm(g1)),
        GRAD_TOL * (1.0 + np.linalg.norm(g2)),
    )
    return ConflictSample(u=u, kappa=kappa, restricted_grad_energy=r1, restricted_grad_promptness=r2)


@dataclass(frozen=True)
class OrthantVerdict:
    trivial: bool
    witness: np.ndarray | None
    value: float


def orthant_nullspace_intersection(sys: ActuationSystem) -> OrthantVerdict:
    """Decide whether ``ker(A)`` meets the nonnegative orthant only at zero.

    Solves ``max 1^T N y`` over ``0 <= N y <= 1``; a positive optimum yields a
    nonnegative kernel vector, returned normalized as the witness.
    """
    N = null_space_basis(sys)
    k = N.shape[1]
    res = linprog(
        -N.sum(axis=0),
        A_ub=np.vstack([-N, N]),
        b_ub=np.concatenate([np.zeros(sys.n), np.ones(sys.n)]),
        bounds=[(None, None)] * k,
        method="highs",
    )
    if res.status != 0:
        raise RuntimeError(f"orthant program failed: {res.message}")
    value = -float(res.fun)
    if value <= 1e-9:
        return OrthantVerdict(trivial=True, witness=None, value=value)
    d = N @ res.x
    d = np.where(np.abs(d) < 1e-12, 0.0, d)
    return OrthantVerdict(trivial=False, witness=d / np.linalg.norm(d), value=value)


class ConicClass(enum.Enum):
    ELLIPSE = "ellipse"
    HYPERBOLA = "hyperbola"
    EMPTY = "empty"
    LINES = "lines"
    POINT = "point"


_QUADRANT_SIGNS = {1: (1, 1), 2: (-1, 1), 3: (-1, -1), 4: (1, -1)}


def classify_dual_fiber(a1: float, a2: float, w: float, quadrant: int | str) -> ConicClass:
    """Shape of ``a1 v1|v1| + a2 v2|v2| = w`` inside one open quadrant of the speed plane."""
    if not (a1 > 0 and a2 > 0):
        raise ValueError("gains a1, a2 must be positive")
    if isinstance(quadrant, str):
        quadrant = {"QI": 1, "QII": 2, "QIII": 3, "QIV": 4}[quadrant.upper()]
    s1, s2 = _QUADRANT_SIGNS[quadrant]
    if s1 != s2:
        return ConicClass.LINES if w == 0 else ConicClass.HYPERBOLA
    if w == 0:
        return ConicClass.POINT
    return ConicClass.ELLIPSE if np.sign(w) == s1 else ConicClass.EMPTY
