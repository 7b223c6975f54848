import numpy as np
import pytest
from scipy.optimize import brentq, linprog

from fiberalloc.core_model import ActuationSystem, build_hexarotor
from fiberalloc.dual import DualSystem, brute_force_optimum, cooperative_multiplier
from fiberalloc.fiber import BidirectionalBox, EmptyFiberError, Unidirectional, fiber_of, is_feasible
from fiberalloc.objectives import energy_u, leverages, promptness_u
from fiberalloc.core_model import gramian
from fiberalloc.solvers import (
    DEFAULT_OPTIONS,
    RankDeficientStateError,
    _cells,
    _solve_cell,
    kkt_residual_energy,
    kkt_residual_promptness,
    max_promptness,
    min_energy,
    pareto_front,
    sweep,
)

HEX = build_hexarotor(0.5, 0.25, 1.0, 0.05)
HOVER = np.array([0.0, 0.0, 0.0, 4.905])
PAIR = ActuationSystem(A=[[1.0, 1.0]], c=1.0)


def roll(tx):
    return np.array([tx, 0.0, 0.0, 4.905])


def grid_optimum(fiber, objective, n=601):
    """Brute-force minimum of ``objective`` over a grid covering the 2-D feasible slice."""
    lo, hi = fiber.lower, fiber.upper
    hi = np.where(np.isfinite(hi), hi, 10.0)
    span = []
    for j in range(fiber.k):
        # bounding box of the feasible slice along each null-space coordinate
        c = np.zeros(fiber.k)
        c[j] = 1.0
        A_ub = np.vstack([fiber.N, -fiber.N])
        b_ub = np.concatenate([hi - fiber.u_particular, fiber.u_particular - lo])
        a = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * fiber.k).fun
        b = -linprog(-c, A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * fiber.k).fun
        span.append(np.linspace(a, b, n))
    Z = np.stack(np.meshgrid(*span), axis=-1).reshape(-1, fiber.k)
    U = fiber.u_particular + Z @ fiber.N.T
    ok = np.all((U >= lo - 1e-12) & (U <= hi + 1e-12), axis=1)
    U = U[ok]
    vals = objective(U)
    k = int(np.nanargmin(vals))
    return U[k], vals[k]


def energy_batch(U):
    return np.sum(np.abs(U) ** 1.5, axis=1)


def promptness_batch(U):
    S = np.einsum("ik,nk,jk->nij", HEX.A, np.abs(U), HEX.A)
    sign, ld = np.linalg.slogdet(S)
    return np.where(sign > 0, -0.5 * ld, np.inf)


# ---------------------------------------------------------------- single solves


def test_isotropic_hover_both_objectives():
    f = fiber_of(HEX, HOVER, Unidirectional())
    en, pr = min_energy(f), max_promptness(f)
    for r in (en, pr):
        np.testing.assert_allclose(r.u_star, 0.8175, atol=1e-6)
        assert r.converged and r.active_set == ()
    assert en.objective.j1 == pytest.approx(6 * 0.8175 ** 1.5, rel=1e-10)


def test_isotropic_promptness_marginal_gains_equal():
    f = fiber_of(HEX, HOVER, Unidirectional())
    pr = max_promptness(f)
    lev = leverages(HEX, gramian(HEX, pr.u_star))
    np.testing.assert_allclose(lev, lev[0], rtol=1e-9)
    # marginal-gain form a_i^T S^{-1} a_i = eta^T a_i
    np.testing.assert_allclose(HEX.A.T @ pr.eta, lev, rtol=1e-8)
    assert kkt_residual_promptness(f, pr.u_star, pr.multipliers, pr.bound_multipliers) < 1e-10


@pytest.mark.parametrize("a,expected", [((1.0, 1.0), (0.5, 0.5)), ((2.0, 1.0), (4 / 9, 1 / 9))])
def test_dual_energy_examples(a, expected):
    sys = ActuationSystem(A=[list(a)], c=1.0)
    rep = min_energy(fiber_of(sys, [1.0], Unidirectional()))
    np.testing.assert_allclose(rep.u_star, expected, atol=1e-9)
    g = brute_force_optimum(DualSystem(*a), "energy", grid_n=100_000)
    np.testing.assert_allclose(g[:2], expected, atol=2 / 100_000)


def test_box_promptness_saturates_at_moderate_roll():
    rep = max_promptness(fiber_of(HEX, roll(0.6), BidirectionalBox(5.0)))
    assert rep.converged
    assert np.any(np.isclose(np.abs(rep.u_star), 5.0, atol=1e-7))
    # frozen regression values from the first verified run
    np.testing.assert_allclose(rep.u_star, [-5, 4.41907, 4.41907, -5, 3.03343, 3.03343], atol=1e-5)
    assert rep.active_set == (0, 3)


def test_unidirectional_promptness_interior_at_small_roll():
    rep = max_promptness(fiber_of(HEX, roll(0.3), Unidirectional()))
    assert rep.converged and rep.active_set == ()
    assert np.all(rep.u_star > 0)


@pytest.mark.parametrize("regime", [Unidirectional(), BidirectionalBox(5.0)])
@pytest.mark.parametrize("tx", [0.0, 0.45, 1.0])
def test_solvers_beat_grid_search(regime, tx):
    f = fiber_of(HEX, roll(tx), regime)
    en, pr = min_energy(f), max_promptness(f)
    _, e_grid = grid_optimum(f, energy_batch)
    _, p_grid = grid_optimum(f, promptness_batch)
    assert en.objective.j1 <= e_grid + 1e-12
    assert pr.objective.j2 <= p_grid + 1e-12
    # and the grid gets close, so the solver is not reporting a spurious value
    assert e_grid - en.objective.j1 < 1e-2
    assert p_grid - pr.objective.j2 < 1e-2


def test_energy_unique_from_random_starts(rng):
    f = fiber_of(HEX, roll(0.5), Unidirectional())
    (cell,) = _cells(f, DEFAULT_OPTIONS)
    ref = min_energy(f).u_star
    for _ in range(10):
        # random point of the open feasible slice: shrink a random direction toward the interior point
        d = rng.normal(size=2)
        t = 1.0
        while np.any(cell.h - cell.G @ (cell.z0 + t * d) <= 0):
            t *= 0.5
        res = _solve_cell(f, cell, "energy", DEFAULT_OPTIONS, z_start=cell.z0 + 0.9 * t * d)
        np.testing.assert_allclose(res.u, ref, atol=1e-6)


def test_unidirectional_promptness_unique_from_random_starts(rng):
    f = fiber_of(HEX, roll(0.3), Unidirectional())
    (cell,) = _cells(f, DEFAULT_OPTIONS)
    ref = max_promptness(f).u_star
    for _ in range(10):
        d = rng.normal(size=2)
        t = 1.0
        while np.any(cell.h - cell.G @ (cell.z0 + t * d) <= 0):
            t *= 0.5
        res = _solve_cell(f, cell, "promptness", DEFAULT_OPTIONS, z_start=cell.z0 + 0.9 * t * d)
        np.testing.assert_allclose(res.u, ref, atol=1e-5)


def test_determinism():
    f1 = fiber_of(HEX, roll(0.7), BidirectionalBox(5.0))
    f2 = fiber_of(HEX, roll(0.7), BidirectionalBox(5.0))
    a, b = max_promptness(f1), max_promptness(f2)
    assert a.u_star.tobytes() == b.u_star.tobytes()
    assert a.multipliers.tobytes() == b.multipliers.tobytes()


def test_empty_and_rank_deficient_fibers():
    with pytest.raises(EmptyFiberError, match="violation"):
        min_energy(fiber_of(HEX, [0, 0, 0, -1.0], Unidirectional()))
    zero = fiber_of(HEX, np.zeros(4), Unidirectional())
    rep = min_energy(zero)
    np.testing.assert_array_equal(rep.u_star, 0.0)
    assert rep.converged
    with pytest.raises(RankDeficientStateError):
        max_promptness(zero)


# ---------------------------------------------------------------- KKT certificates


def test_kkt_energy_closed_form_multiplier():
    ds = DualSystem(2.0, 1.0)
    f = fiber_of(ds.as_actuation_system(), [1.0], Unidirectional())
    lam = [cooperative_multiplier(ds)]
    assert kkt_residual_energy(f, [4 / 9, 1 / 9], lam, np.zeros(2)) < 1e-9


def test_kkt_energy_detects_perturbation():
    f = fiber_of(PAIR, [1.0], Unidirectional())
    rep = min_energy(f)
    assert kkt_residual_energy(f, rep.u_star, rep.multipliers, rep.bound_multipliers) < 1e-7
    u = rep.u_star + 0.01 * f.N[:, 0]
    assert kkt_residual_energy(f, u, rep.multipliers, rep.bound_multipliers) > 1e-4


def test_kkt_promptness_rejects_non_optimal_point(rng):
    f = fiber_of(HEX, roll(0.3), Unidirectional())
    rep = max_promptness(f)
    u = rep.u_star + f.N @ np.array([0.2, -0.1])
    assert is_feasible(f, u)
    from fiberalloc.solvers import estimate_multipliers
    from fiberalloc.objectives import promptness_grad_u
    lam, nu = estimate_multipliers(f, u, promptness_grad_u(HEX, u))
    assert kkt_residual_promptness(f, u, lam, nu) > 1e-3


def test_kkt_sign_violation_is_reported():
    # an upper bound multiplier with the wrong sign counts as a violation
    f = fiber_of(HEX, roll(0.6), BidirectionalBox(5.0))
    rep = max_promptness(f)
    assert rep.bound_multipliers[0] < 0  # lower bound at -5 active
    flipped = rep.bound_multipliers.copy()
    flipped[0] = -flipped[0]
    assert kkt_residual_promptness(f, rep.u_star, rep.multipliers, flipped) > 1e-3


@pytest.mark.parametrize("tx", [0.0, 0.25, 0.5, 0.85, 1.0])
@pytest.mark.parametrize("regime", [Unidirectional(), BidirectionalBox(5.0)])
def test_reports_are_certified_independently(tx, regime):
    f = fiber_of(HEX, roll(tx), regime)
    en, pr = min_energy(f), max_promptness(f)
    assert en.converged and pr.converged
    assert kkt_residual_energy(f, en.u_star, en.multipliers, en.bound_multipliers) / en.kkt_scale < 1e-7
    r = kkt_residual_promptness(f, pr.u_star, pr.multipliers, pr.bound_multipliers, signs=pr.signs)
    assert r / pr.kkt_scale < 1e-7
    for rep in (en, pr):
        assert is_feasible(f, rep.u_star)
        lo, hi = f.lower, f.upper
        for i in rep.active_set:
            assert min(rep.u_star[i] - lo[i], hi[i] - rep.u_star[i]) <= 1e-7


# ---------------------------------------------------------------- Pareto fronts


def _check_front(front, fiber):
    pts = front.points
    j1 = [p.j1 for p in pts]
    j2 = [p.j2 for p in pts]
    assert j1 == sorted(j1)
    assert all(b < a for a, b in zip(j2, j2[1:]))
    for p in pts:
        assert p.status == "ok"
        assert is_feasible(fiber, p.u)
        assert p.kkt_residual < 1e-7
    assert (front.extent == 0.0) == (len(pts) == 1)


def test_front_collapses_at_hover():
    f = fiber_of(HEX, HOVER, Unidirectional())
    front = pareto_front(f)
    assert len(front.points) == 1 and front.extent < 1e-8
    _check_front(front, f)


def test_front_interior_for_pitch_torque():
    f = fiber_of(HEX, [0.0, 0.4, 0.0, 4.905], Unidirectional())
    front = pareto_front(f)
    assert front.extent > 0
    _check_front(front, f)
    for p in front.points:
        assert np.all(p.u > 0)


def test_dual_box_front_matches_brute_force():
    f = fiber_of(PAIR, [1.0], BidirectionalBox(5.0))
    front = pareto_front(f, n_points=9)
    _check_front(front, f)
    np.testing.assert_allclose(front.points[0].u, [0.5, 0.5], atol=1e-7)
    np.testing.assert_allclose(front.points[-1].u, [-4.0, 5.0], atol=1e-7)
    # brute force: the fiber is the line u2 = 1 - u1, |u_i| <= 5
    u1 = np.linspace(-4.0, 5.0, 900_001)
    U = np.column_stack([u1, 1.0 - u1])
    J1 = np.sum(np.abs(U) ** 1.5, axis=1)
    J2 = -0.5 * np.log(np.sum(np.abs(U), axis=1))
    for p in front.points[1:-1]:
        # the grid never beats the solver, and on the ray (J1 increasing with |u1|)
        # the budget-constrained optimum is the root of J1 = eps
        assert p.j2 <= J2[J1 <= p.epsilon].min() + 1e-12
        t = brentq(lambda t: t ** 1.5 + (1 + t) ** 1.5 - p.epsilon, 0.0, 4.0, xtol=1e-14)
        assert p.j2 == pytest.approx(-0.5 * np.log(1 + 2 * t), abs=1e-9)
        assert p.u[0] < 0  # interior front points sit on the antagonistic ray


def test_front_rejects_bad_n_points():
    with pytest.raises(ValueError):
        pareto_front(fiber_of(HEX, HOVER, Unidirectional()), n_points=1)


# ---------------------------------------------------------------- sweeps


@pytest.fixture(scope="module")
def sweep_cells():
    ws = [roll(t) for t in np.round(np.arange(0.0, 1.0001, 0.1), 12)]
    return ws, sweep(HEX, ws, [Unidirectional(), BidirectionalBox(5.0)])


def test_sweep_cross_evaluation_orderings(sweep_cells):
    _, cells = sweep_cells
    for c in cells:
        assert c.ok
        assert c.j1_at_promptness >= c.energy.objective.j1 - 1e-12
        assert c.j2_at_energy >= c.promptness.objective.j2 - 1e-12


def test_sweep_zero_torque_cell_coincides(sweep_cells):
    _, cells = sweep_cells
    c = cells[0]
    np.testing.assert_allclose(c.energy.u_star, c.promptness.u_star, atol=1e-7)
    assert c.j1_at_promptness == pytest.approx(c.energy.objective.j1, rel=1e-9)


def test_sweep_regime_inclusion(sweep_cells):
    ws, cells = sweep_cells
    # the box contains the unidirectional polygon when every hover-range effort fits under 5
    assert 4.905 / 1.0 <= 5.0
    n = len(ws)
    for uni, box in zip(cells[:n], cells[n:]):
        assert box.promptness.objective.j2 <= uni.promptness.objective.j2 + 1e-12
        assert box.energy.objective.j1 <= uni.energy.objective.j1 + 1e-12


def test_sweep_energy_monotone(sweep_cells):
    ws, cells = sweep_cells
    n = len(ws)
    for block in (cells[:n], cells[n:]):
        j1 = [c.energy.objective.j1 for c in block]
        assert all(b >= a - 1e-12 for a, b in zip(j1, j1[1:]))


def test_box_promptness_saturated_from_small_roll(sweep_cells):
    ws, cells = sweep_cells
    n = len(ws)
    for w, c in zip(ws, cells[n:]):
        if w[0] >= 0.2:
            assert c.promptness.active_set


def test_sweep_records_failures_inline():
    cells = sweep(HEX, [HOVER, [0, 0, 0, -1.0]], [Unidirectional()])
    assert cells[0].ok
    assert not cells[1].ok and "infeasible" in cells[1].error
