"""Two actuators, one task: closed forms and brute-force references.

The system ``a1 v1|v1| + a2 v2|v2| = w`` reads ``a1 u1 + a2 u2 = w`` in effort
coordinates.  With ``w > 0`` the first quadrant holds a bounded cooperative
segment and the second quadrant an unbounded antagonistic ray ``u1 = -t``.
Negative tasks are mapped onto this case by the symmetry ``u -> -u``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core_model import ActuationSystem


@dataclass(frozen=True)
class DualSystem:
    a1: float
    a2: float
    c1: float = 1.0
    c2: float = 1.0
    w: float = 1.0

    def __post_init__(self):
        if min(self.a1, self.a2, self.c1, self.c2) <= 0:
            raise ValueError("gains and energy weights must be positive")

    def as_actuation_system(self) -> ActuationSystem:
        return ActuationSystem(A=[[self.a1, self.a2]], c=[self.c1, self.c2])

    def energy(self, u1, u2):
        return self.c1 * np.abs(u1) ** 1.5 + self.c2 * np.abs(u2) ** 1.5

    def surrogate(self, u1, u2):
        """``D(u) = a1^2 |u1| + a2^2 |u2|``, the argument of the log in the promptness cost."""
        return self.a1 ** 2 * np.abs(u1) + self.a2 ** 2 * np.abs(u2)

    def promptness(self, u1, u2):
        """``-ln 2 - 1/2 ln D(u)``: the gradient-norm form for a scalar task."""
        return -math.log(2.0) - 0.5 * np.log(self.surrogate(u1, u2))

    def energy_v(self, v1, v2):
        return self.c1 * np.abs(v1) ** 3 + self.c2 * np.abs(v2) ** 3

    def surrogate_v(self, v1, v2):
        return self.a1 ** 2 * np.square(v1) + self.a2 ** 2 * np.square(v2)

    def _canonical(self) -> tuple["DualSystem", float]:
        if self.w >= 0:
            return self, 1.0
        return DualSystem(self.a1, self.a2, self.c1, self.c2, -self.w), -1.0


def sharing_ratio(ds: DualSystem) -> float:
    """Optimal ``u1/u2`` on the cooperative segment."""
    return (ds.a1 * ds.c2 / (ds.a2 * ds.c1)) ** 2


def cooperative_energy_optimum(ds: DualSystem) -> tuple[float, float]:
    base, sign = ds._canonical()
    r = sharing_ratio(base)
    u2 = base.w / (base.a1 * r + base.a2)
    return sign * r * u2, sign * u2


def cooperative_multiplier(ds: DualSystem) -> float:
    """Wrench multiplier at the cooperative optimum, ``(3/2) c1 sqrt(u1) / a1``.

    Sign follows the ``grad J = lam a`` convention used by the solvers.
    """
    u1, _ = cooperative_energy_optimum(ds)
    return math.copysign(1.5 * ds.c1 * math.sqrt(abs(u1)) / ds.a1, u1)


@dataclass
class Profile:
    """Costs sampled along one piece of the fiber."""

    t: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    j1: np.ndarray
    d: np.ndarray
    j2: np.ndarray

    def rows(self):
        return zip(self.t, self.u1, self.u2, self.j1, self.d, self.j2)


def _profile(ds: DualSystem, t, u1, u2) -> Profile:
    return Profile(t, u1, u2, ds.energy(u1, u2), ds.surrogate(u1, u2), ds.promptness(u1, u2))


def antagonistic_ray(ds: DualSystem, t):
    """Points ``u1 = -t``, ``|u2| = w/a2 + (a1/a2) t`` of the second-quadrant ray (w > 0)."""
    t = np.asarray(t, dtype=float)
    return -t, ds.w / ds.a2 + ds.a1 / ds.a2 * t


def antagonistic_profiles(ds: DualSystem, t_max: float, n_samples: int = 101) -> Profile:
    if not ds.w > 0:
        raise ValueError("antagonistic profiles are defined for w > 0")
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    t = np.linspace(0.0, t_max, n_samples)
    u1, u2 = antagonistic_ray(ds, t)
    return _profile(ds, t, u1, u2)


def cooperative_profiles(ds: DualSystem, n_samples: int = 101) -> Profile:
    """Costs along the segment ``u1 in [0, w/a1]`` (w > 0)."""
    if not ds.w > 0:
        raise ValueError("cooperative profiles are defined for w > 0")
    u1 = np.linspace(0.0, ds.w / ds.a1, n_samples)
    u2 = (ds.w - ds.a1 * u1) / ds.a2
    return _profile(ds, u1, u1, u2)


def antagonistic_surrogate_slope(ds: DualSystem) -> float:
    return ds.a1 ** 2 + ds.a1 * ds.a2


def cooperative_surrogate_slope(ds: DualSystem) -> float:
    return ds.a1 * (ds.a1 - ds.a2)


def ray_limit(ds: DualSystem, box: float) -> float:
    """Largest ``t`` on the antagonistic ray with ``|u1|, |u2| <= box``."""
    t_u2 = (box - ds.w / ds.a2) * ds.a2 / ds.a1
    t = min(box, t_u2)
    if t < 0:
        raise ValueError(f"box {box} cannot contain the ray origin u2 = w/a2 = {ds.w / ds.a2}")
    return t


def brute_force_optimum(
    ds: DualSystem,
    objective: str,
    piece: str = "cooperative",
    grid_n: int = 100_000,
    box: float | None = None,
) -> tuple[float, float, float]:
    """Exhaustive grid search over one piece of the fiber.

    ``objective`` is ``"energy"`` (minimized) or ``"promptness"`` (the
    surrogate ``D`` is maximized, the returned value is the promptness cost).
    ``piece`` is ``"cooperative"`` or ``"antagonistic"``; the antagonistic ray
    needs ``box`` to be compact.  Both pieces are straight in ``u`` so a
    uniform grid in ``u1`` is uniform in arc length.
    """
    base, sign = ds._canonical()
    if piece == "cooperative":
        t = np.linspace(0.0, base.w / base.a1, grid_n + 1)
        u1, u2 = t, (base.w - base.a1 * t) / base.a2
        if box is not None:
            keep = (np.abs(u1) <= box) & (np.abs(u2) <= box)
            u1, u2 = u1[keep], u2[keep]
    elif piece == "antagonistic":
        if box is None:
            raise ValueError("the antagonistic ray is unbounded; pass a box bound")
        t = np.linspace(0.0, ray_limit(base, box), grid_n + 1)
        u1, u2 = antagonistic_ray(base, t)
    else:
        raise ValueError(f"unknown fiber piece {piece!r}")
    if objective == "energy":
        vals = base.energy(u1, u2)
        k = int(np.argmin(vals))
    elif objective == "promptness":
        vals = base.promptness(u1, u2)
        k = int(np.argmin(vals))
    else:
        raise ValueError(f"unknown objective {objective!r}")
    return sign * float(u1[k]), sign * float(u2[k]), float(vals[k])
