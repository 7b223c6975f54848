import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fiberalloc.dual import (
    DualSystem,
    antagonistic_profiles,
    antagonistic_surrogate_slope,
    brute_force_optimum,
    cooperative_energy_optimum,
    cooperative_profiles,
    cooperative_surrogate_slope,
    ray_limit,
    sharing_ratio,
)
from fiberalloc.fiber import BidirectionalBox, Unidirectional, fiber_of, restricted_gradients
from fiberalloc.solvers import min_energy

gain = st.floats(0.2, 5.0)


@pytest.mark.parametrize("args,expected", [
    ((1, 1, 1, 1, 1), (0.5, 0.5)),
    ((2, 1, 1, 1, 1), (4 / 9, 1 / 9)),
    ((1, 1, 1, 4, 1), (16 / 17, 1 / 17)),
])
def test_cooperative_closed_form(args, expected):
    ds = DualSystem(*args)
    u = cooperative_energy_optimum(ds)
    np.testing.assert_allclose(u, expected, rtol=1e-14)
    assert ds.a1 * u[0] + ds.a2 * u[1] == pytest.approx(ds.w)
    g = brute_force_optimum(ds, "energy", grid_n=100_000)
    np.testing.assert_allclose(g[:2], expected, atol=2 / 100_000 * ds.w / ds.a1)


def test_cheaper_actuator_carries_load():
    u1, u2 = cooperative_energy_optimum(DualSystem(1, 1, 1, 4))
    assert u1 > u2


def test_negative_task_by_symmetry():
    pos = cooperative_energy_optimum(DualSystem(2, 1, 1, 3, 2.0))
    neg = cooperative_energy_optimum(DualSystem(2, 1, 1, 3, -2.0))
    np.testing.assert_allclose(neg, -np.array(pos))
    g = brute_force_optimum(DualSystem(2, 1, 1, 3, -2.0), "energy", grid_n=100_000)
    np.testing.assert_allclose(g[:2], neg, atol=1e-4)


@given(gain, gain, gain, gain, st.floats(0.1, 10.0))
def test_solver_reproduces_closed_form(a1, a2, c1, c2, w):
    ds = DualSystem(a1, a2, c1, c2, w)
    rep = min_energy(fiber_of(ds.as_actuation_system(), [w], Unidirectional()))
    np.testing.assert_allclose(rep.u_star, cooperative_energy_optimum(ds), atol=1e-6)
    assert rep.u_star[0] / rep.u_star[1] == pytest.approx(sharing_ratio(ds), rel=1e-6)


def test_antagonistic_profile_values():
    ds = DualSystem(1, 1, 1, 1, 1)
    p = antagonistic_profiles(ds, t_max=1.0, n_samples=2)
    assert p.j1[0] == pytest.approx(1.0) and p.d[0] == pytest.approx(1.0)
    assert p.u2[1] == pytest.approx(2.0)
    assert p.j1[1] == pytest.approx(1 + 2 ** 1.5)
    assert p.d[1] == pytest.approx(3.0)


@given(gain, gain, gain, gain, st.floats(0.1, 10.0))
def test_antagonistic_profiles_strictly_increasing(a1, a2, c1, c2, w):
    ds = DualSystem(a1, a2, c1, c2, w)
    p = antagonistic_profiles(ds, t_max=5.0, n_samples=101)
    assert np.all(np.diff(p.j1) > 0) and np.all(np.diff(p.d) > 0)
    assert p.j1[0] == pytest.approx(c2 * (w / a2) ** 1.5)
    assert p.d[0] == pytest.approx(a2 * w)
    # D grows affinely with the stated slope
    np.testing.assert_allclose(np.diff(p.d) / np.diff(p.t), antagonistic_surrogate_slope(ds), rtol=1e-9)


@given(gain, gain, st.floats(0.1, 10.0))
def test_cooperative_surrogate_affine(a1, a2, w):
    ds = DualSystem(a1, a2, 1.0, 1.0, w)
    p = cooperative_profiles(ds, 51)
    coef = np.polyfit(p.u1, p.d, 1)
    assert np.max(np.abs(np.polyval(coef, p.u1) - p.d)) < 1e-10 * (1 + np.max(np.abs(p.d)))
    assert coef[0] == pytest.approx(cooperative_surrogate_slope(ds), rel=1e-8, abs=1e-10)


def test_equal_gains_flat_promptness_on_segment():
    p = cooperative_profiles(DualSystem(1.5, 1.5), 101)
    assert np.ptp(p.d) < 1e-12 and np.ptp(p.j2) < 1e-12


def test_antagonistic_total_conflict():
    ds = DualSystem(1, 1, 1, 1, 1)
    prof = antagonistic_profiles(ds, 4.0, 41)
    f = fiber_of(ds.as_actuation_system(), [1.0], BidirectionalBox(10.0))
    for u1, u2 in zip(prof.u1[1:], prof.u2[1:]):
        assert restricted_gradients(f.system, f, [u1, u2]).kappa == pytest.approx(-1.0, abs=1e-6)


def test_box_truncated_ray_optimum_at_corner():
    ds = DualSystem(1, 1, 1, 1, 1)
    # |u2| = 1 + t reaches the box first, at t = 4
    assert ray_limit(ds, 5.0) == pytest.approx(4.0)
    u1, u2, val = brute_force_optimum(ds, "promptness", piece="antagonistic", box=5.0)
    assert (u1, u2) == pytest.approx((-4.0, 5.0))
    assert val == pytest.approx(ds.promptness(-4.0, 5.0))


def test_brute_force_errors():
    ds = DualSystem(1, 1)
    with pytest.raises(ValueError, match="box"):
        brute_force_optimum(ds, "promptness", piece="antagonistic")
    with pytest.raises(ValueError):
        brute_force_optimum(ds, "speed")
    with pytest.raises(ValueError):
        DualSystem(-1, 1)
    with pytest.raises(ValueError):
        antagonistic_profiles(DualSystem(1, 1, w=-1.0), 1.0)
