"""Actuation systems and the signed-quadratic propulsion model.

Rotor speeds ``v`` and generalized efforts ``u`` are linked elementwise by
``u = v|v|``.  In effort coordinates the wrench map is linear, ``w = A u``,
which is what every solver in this package works with.

Speed, effort and wrench vectors are plain 1-D float arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

GRAVITY = 9.81

#: Ratio to the largest singular value below which ``A`` is declared rank deficient.
RANK_TOL = 1e-9

WRENCH_LABELS = ("tau_x", "tau_y", "tau_z", "F_z")


class RankDeficientError(ValueError):
    """Raised when an allocation matrix does not have full row rank."""


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class RotorGeometry:
    """Planar rotor layout: arm positions, spin directions and aerodynamic gains."""

    positions: tuple[tuple[float, float], ...]
    spins: tuple[int, ...]
    k_f: float
    k_m: float

    def __post_init__(self):
        if len(self.positions) == 0 or len(self.positions) != len(self.spins):
            raise ValueError(
                f"need n >= 1 positions and as many spins, got {len(self.positions)} and {len(self.spins)}"
            )
        if any(s not in (1, -1) for s in self.spins):
            raise ValueError(f"spins must be +1 or -1, got {self.spins}")
        if not self.k_f > 0 or not self.k_m > 0:
            raise ValueError(f"k_f and k_m must be positive, got {self.k_f}, {self.k_m}")

    @property
    def n(self) -> int:
        return len(self.spins)

    def allocation_matrix(self) -> np.ndarray:
        """Rows ``[k_f y_i; -k_f x_i; k_m sigma_i; k_f]`` (roll, pitch, yaw, thrust)."""
        xy = np.asarray(self.positions, dtype=float)
        sigma = np.asarray(self.spins, dtype=float)
        return np.vstack([
            self.k_f * xy[:, 1],
            -self.k_f * xy[:, 0],
            self.k_m * sigma,
            self.k_f * np.ones(self.n),
        ])


@dataclass(frozen=True)
class ActuationSystem:
    """A linear allocation map ``A`` (m x n, full row rank, m < n) and energy weights ``c``."""

    A: np.ndarray
    c: np.ndarray
    geometry: RotorGeometry | None = field(default=None, compare=False)
    mass_kg: float | None = field(default=None, compare=False)

    def __post_init__(self):
        A = _frozen(self.A)
        if A.ndim == 1:
            A = _frozen(A[None, :])
        if A.ndim != 2:
            raise ValueError(f"A must be a matrix, got shape {A.shape}")
        m, n = A.shape
        if not m < n:
            raise ValueError(f"allocation must be redundant (m < n), got {m}x{n}")
        if not np.all(np.isfinite(A)):
            raise ValueError("A has non-finite entries")
        c = np.broadcast_to(np.asarray(self.c, dtype=float), (n,))
        if not np.all(c > 0):
            raise ValueError(f"energy weights must be positive, got {c}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "c", _frozen(c))
        check_full_row_rank(A)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def hover_thrust(self) -> float:
        if self.mass_kg is None:
            raise ValueError("system has no mass attached")
        return self.mass_kg * GRAVITY


def check_full_row_rank(A: np.ndarray, rank_tol: float = RANK_TOL) -> None:
    U, s, _ = np.linalg.svd(A)
    if s[-1] <= rank_tol * s[0]:
        # left singular vector of the smallest singular value: the row combination that vanishes
        combo = U[:, -1]
        combo = combo / combo[np.argmax(np.abs(combo))]
        raise RankDeficientError(
            f"allocation matrix is rank deficient (sigma_min/sigma_max = {s[-1] / s[0]:.3e}); "
            f"rows combine to zero with coefficients {np.round(combo, 6).tolist()}"
        )


def alternating_spins(n: int) -> tuple[int, ...]:
    return tuple(1 if i % 2 == 0 else -1 for i in range(n))


def build_hexarotor(
    mass_kg: float,
    arm_radius_m: float,
    k_f: float,
    k_m: float,
    angle_offset_rad: float = 0.0,
    spin_pattern: str | Sequence[int] = "alternating",
    energy_weights: float | Sequence[float] = 1.0,
) -> ActuationSystem:
    """Coplanar hexarotor for the 4-DoF task ``(tau_x, tau_y, tau_z, F_z)``.

    Rotor ``i`` (0-based) sits at angle ``angle_offset_rad + i*pi/3`` on a circle
    of radius ``arm_radius_m``.  ``spin_pattern="alternating"`` starts with +1 at
    rotor 0.
    """
    if not mass_kg > 0:
        raise ValueError(f"mass_kg must be positive, got {mass_kg}")
    if not arm_radius_m > 0:
        raise ValueError(f"arm_radius_m must be positive, got {arm_radius_m}")
    if isinstance(spin_pattern, str):
        if spin_pattern != "alternating":
            raise ValueError(f"unknown spin pattern {spin_pattern!r}")
        spins = alternating_spins(6)
    else:
        spins = tuple(int(s) for s in spin_pattern)
        if len(spins) != 6:
            raise ValueError(f"hexarotor needs 6 spins, got {len(spins)}")
    angles = angle_offset_rad + np.arange(6) * np.pi / 3
    positions = tuple(
        (float(arm_radius_m * np.cos(t)), float(arm_radius_m * np.sin(t))) for t in angles
    )
    geom = RotorGeometry(positions=positions, spins=spins, k_f=k_f, k_m=k_m)
    return ActuationSystem(
        A=geom.allocation_matrix(), c=energy_weights, geometry=geom, mass_kg=mass_kg
    )


def speed_to_effort(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v * np.abs(v)


def effort_to_speed(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return np.sign(u) * np.sqrt(np.abs(u))


def wrench_of(sys: ActuationSystem, u) -> np.ndarray:
    return sys.A @ np.asarray(u, dtype=float)


def jacobian(sys: ActuationSystem, v) -> np.ndarray:
    """``J_f(v) = 2 A diag(|v|)``; a zero speed gives a zero column."""
    return 2.0 * sys.A * np.abs(np.asarray(v, dtype=float))[None, :]


def gramian(sys: ActuationSystem, u) -> np.ndarray:
    """``S(u) = A diag(|u|) A^T``, symmetric positive semidefinite."""
    Au = sys.A * np.abs(np.asarray(u, dtype=float))[None, :]
    S = Au @ sys.A.T
    return 0.5 * (S + S.T)
