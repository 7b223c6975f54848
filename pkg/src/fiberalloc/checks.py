"""A fast invariant suite, runnable from the command line.

Each check returns ``(passed, detail)``.  The hexarotor used throughout is
the reference vehicle: 0.5 kg, 0.25 m arms, unit thrust gain, 0.05 drag gain.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .core_model import build_hexarotor, effort_to_speed, gramian, jacobian, speed_to_effort
from .dual import DualSystem, antagonistic_profiles, cooperative_energy_optimum
from .fiber import BidirectionalBox, Unidirectional, fiber_of, orthant_nullspace_intersection, restricted_gradients
from .objectives import cauchy_binet_det, energy_grad_u, energy_u, promptness_grad_u, promptness_u
from .solvers import max_promptness, min_energy, pareto_front


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _hex():
    return build_hexarotor(0.5, 0.25, 1.0, 0.05)


def check_roundtrip(rng):
    v = rng.normal(size=(1000, 6)) * 3
    err = float(np.max(np.abs(effort_to_speed(speed_to_effort(v)) - v)))
    return err < 1e-12, f"max roundtrip error {err:.2e}"


def check_gramian_identity(rng):
    sys = _hex()
    worst = 0.0
    for _ in range(200):
        v = rng.normal(size=6)
        J = jacobian(sys, v)
        S4 = 4.0 * gramian(sys, speed_to_effort(v))
        worst = max(worst, np.linalg.norm(J @ J.T - S4) / np.linalg.norm(S4))
    return worst <= 1e-12, f"max relative error {worst:.2e}"


def check_cauchy_binet(rng):
    sys = _hex()
    worst = 0.0
    for _ in range(50):
        u = rng.uniform(-3, 3, size=6)
        d = np.linalg.det(gramian(sys, u))
        worst = max(worst, abs(cauchy_binet_det(sys, u) - d) / max(1.0, abs(d)))
    return worst <= 1e-10, f"max scaled error {worst:.2e}"


def _fd(f, u, h=1e-6):
    g = np.zeros_like(u)
    for i in range(len(u)):
        e = np.zeros_like(u)
        e[i] = h
        g[i] = (f(u + e) - f(u - e)) / (2 * h)
    return g


def check_gradients(rng):
    sys = _hex()
    worst = 0.0
    for _ in range(50):
        u = rng.uniform(0.5, 3, size=6) * rng.choice([-1, 1], size=6)
        for f, g in ((energy_u, energy_grad_u), (promptness_u, promptness_grad_u)):
            exact = g(sys, u)
            approx = _fd(lambda x: f(sys, x), u)
            worst = max(worst, np.linalg.norm(exact - approx) / np.linalg.norm(exact))
    return worst < 1e-5, f"max relative error {worst:.2e}"


def check_orthant(rng):
    verdict = orthant_nullspace_intersection(_hex())
    return verdict.trivial, f"trivial={verdict.trivial}, LP value {verdict.value:.2e}"


def check_isotropic_hover(rng):
    sys = _hex()
    fiber = fiber_of(sys, [0, 0, 0, 4.905], Unidirectional())
    en, pr = min_energy(fiber), max_promptness(fiber)
    err = max(np.max(np.abs(en.u_star - 0.8175)), np.max(np.abs(pr.u_star - 0.8175)))
    front = pareto_front(fiber)
    ok = err < 1e-6 and front.extent < 1e-8 and en.converged and pr.converged
    return ok, f"max deviation {err:.2e}, front extent {front.extent:.2e}"


def check_dual_sharing(rng):
    worst = 0.0
    for _ in range(20):
        a1, a2, c1, c2 = rng.uniform(0.2, 5, size=4)
        ds = DualSystem(a1, a2, c1, c2, rng.uniform(0.1, 10))
        rep = min_energy(fiber_of(ds.as_actuation_system(), [ds.w], Unidirectional()))
        worst = max(worst, float(np.max(np.abs(rep.u_star - cooperative_energy_optimum(ds)))))
    return worst < 1e-6, f"max deviation {worst:.2e}"


def check_antagonistic_conflict(rng):
    ds = DualSystem(1.0, 1.0)
    prof = antagonistic_profiles(ds, 4.0, 41)
    mono = bool(np.all(np.diff(prof.j1) > 0) and np.all(np.diff(prof.d) > 0))
    fiber = fiber_of(ds.as_actuation_system(), [1.0], BidirectionalBox(10.0))
    kappas = [restricted_gradients(fiber.system, fiber, [a, b]).kappa for a, b in zip(prof.u1[1:], prof.u2[1:])]
    worst = max(abs(k + 1.0) for k in kappas)
    return mono and worst < 1e-6, f"monotone={mono}, max |kappa+1| {worst:.2e}"


def check_regime_contrast(rng):
    sys = _hex()
    w = [1.0, 0.0, 0.0, 4.905]
    pu = max_promptness(fiber_of(sys, w, Unidirectional()))
    pb = max_promptness(fiber_of(sys, w, BidirectionalBox(5.0)))
    ok = pb.objective.j2 <= pu.objective.j2 and pb.converged and pu.converged
    return ok, f"J2 box {pb.objective.j2:.6f} <= unidirectional {pu.objective.j2:.6f}"


CHECKS = (
    ("speed/effort roundtrip", check_roundtrip),
    ("Jacobian Gram identity", check_gramian_identity),
    ("Cauchy-Binet expansion", check_cauchy_binet),
    ("gradients vs finite differences", check_gradients),
    ("kernel meets orthant only at 0", check_orthant),
    ("isotropic hover optimum", check_isotropic_hover),
    ("dual cooperative sharing rule", check_dual_sharing),
    ("antagonistic total conflict", check_antagonistic_conflict),
    ("box beats unidirectional promptness", check_regime_contrast),
)


def run_checks(seed: int = 0) -> list[CheckResult]:
    out = []
    for name, fn in CHECKS:
        rng = np.random.default_rng(seed)
        t0 = time.perf_counter()
        try:
            passed, detail = fn(rng)
        except Exception as exc:  # a crashing check is a failing check
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, bool(passed), detail, time.perf_counter() - t0))
    return out
