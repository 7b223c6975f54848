"""Energy and promptness objectives in speed and effort coordinates.

Energy is ``sum c_i |v_i|^3 = sum c_i |u_i|^{3/2}``.  Inverse promptness is
``-1/2 log det S(u)`` with ``S(u) = A diag(|u|) A^T``; when ``S`` is singular
the value is reported as ``None`` instead of ``+inf``.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core_model import ActuationSystem, gramian, jacobian

PD_TOL = 1e-10
SMOOTHNESS_TOL = 1e-8


class SingularGramianError(ValueError):
    """Raised when the promptness gradient is requested at a rank-deficient actuation state."""


class NonsmoothPointWarning(RuntimeWarning):
    """An effort sits at a zero crossing where ``|u_i|`` has a kink."""


@dataclass(frozen=True)
class ObjectiveValue:
    j1: float
    j2: float | None
    gramian_logdet: float | None
    min_eig: float

    @property
    def singular(self) -> bool:
        return self.j2 is None

    def sort_key(self) -> tuple[bool, float]:
        # singular states sort after every finite promptness value
        return (self.singular, 0.0 if self.j2 is None else self.j2)


def energy_v(sys: ActuationSystem, v) -> float:
    return float(np.sum(sys.c * np.abs(np.asarray(v, dtype=float)) ** 3))


def energy_u(sys: ActuationSystem, u) -> float:
    return float(np.sum(sys.c * np.abs(np.asarray(u, dtype=float)) ** 1.5))


def energy_grad_u(sys: ActuationSystem, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return 1.5 * sys.c * np.sign(u) * np.sqrt(np.abs(u))


def _gramian_logdet(S: np.ndarray) -> tuple[float | None, float]:
    m = S.shape[0]
    eig = np.linalg.eigvalsh(S)
    tr = float(np.trace(S))
    if tr <= 0.0 or eig[0] <= PD_TOL * tr / m:
        return None, float(eig[0])
    L = np.linalg.cholesky(S)
    return 2.0 * float(np.sum(np.log(np.diag(L)))), float(eig[0])


def gramian_logdet(sys: ActuationSystem, u) -> float | None:
    """``log det S(u)`` via Cholesky, or ``None`` if ``S(u)`` is not positive definite."""
    return _gramian_logdet(gramian(sys, u))[0]


def promptness_u(sys: ActuationSystem, u) -> float | None:
    """``-1/2 log det S(u)``; ``None`` flags a rank-deficient actuation state."""
    ld = gramian_logdet(sys, u)
    return None if ld is None else -0.5 * ld


def promptness_v(sys: ActuationSystem, v) -> float | None:
    """``-1/2 ln det(J_f J_f^T)`` in speed coordinates."""
    J = jacobian(sys, v)
    G = J @ J.T
    ld = _gramian_logdet(0.5 * (G + G.T))[0]
    return None if ld is None else -0.5 * ld


def speed_effort_promptness_offset(m: int) -> float:
    """Constant ``J2(v) - J2~(u(v))``: ``J_f J_f^T = 4 S`` gives ``-(m/2) ln 4``."""
    return -0.5 * m * math.log(4.0)


def evaluate(sys: ActuationSystem, u) -> ObjectiveValue:
    ld, min_eig = _gramian_logdet(gramian(sys, u))
    return ObjectiveValue(
        j1=energy_u(sys, u),
        j2=None if ld is None else -0.5 * ld,
        gramian_logdet=ld,
        min_eig=min_eig,
    )


def promptness_grad_u(sys: ActuationSystem, u, signs=None) -> np.ndarray:
    """Gradient ``-1/2 sign(u_i) a_i^T S^{-1} a_i``.

    ``signs`` picks the one-sided derivative at zero efforts (the side of the
    orthant being optimized over).  Without it, a zero effort triggers a
    :class:`NonsmoothPointWarning` and contributes a zero entry.
    """
    u = np.asarray(u, dtype=float)
    S = gramian(sys, u)
    if _gramian_logdet(S)[0] is None:
        raise SingularGramianError("rank-deficient actuation state: S(u) is singular")
    lev = leverages(sys, S)
    s = np.sign(u)
    kink = np.abs(u) <= SMOOTHNESS_TOL
    if signs is not None:
        s = np.where(kink, np.asarray(signs, dtype=float), s)
    elif np.any(kink):
        warnings.warn(
            f"promptness gradient at nonsmooth point, efforts {np.flatnonzero(kink).tolist()} near zero",
            NonsmoothPointWarning,
            stacklevel=2,
        )
    return -0.5 * s * lev


def leverages(sys: ActuationSystem, S: np.ndarray) -> np.ndarray:
    """Marginal promptness gains ``a_i^T S^{-1} a_i`` for every column."""
    X = np.linalg.solve(S, sys.A)
    return np.einsum("ij,ij->j", sys.A, X)


def cauchy_binet_det(sys: ActuationSystem, u) -> float:
    """``det S(u)`` expanded over all m-column minors of ``A``."""
    u = np.abs(np.asarray(u, dtype=float))
    A = sys.A
    total = 0.0
    for K in itertools.combinations(range(sys.n), sys.m):
        weight = float(np.prod(u[list(K)]))
        if weight == 0.0:
            continue
        total += np.linalg.det(A[:, K]) ** 2 * weight
    return float(total)
