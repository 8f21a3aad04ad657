import numpy as np
import pytest
from hypothesis import given, strategies as st

from setcbf.dynamics import EULER, RK4, ControlAffineDynamics, UnicycleAgent, integrate_step, modified_g, \
    unicycle_kinematics, unicycle_transform
from setcbf.errors import InvalidInput, NumericalFailure
from setcbf.sets import ParamVector, rigid_pose

angles = st.floats(-10, 10)


def test_transform_at_zero():
    assert unicycle_transform(0.0, 0.25) == pytest.approx(np.array([[1, 0], [0, 4]]))
    with pytest.raises(InvalidInput):
        unicycle_transform(0.0, 0.0)
    with pytest.raises(InvalidInput):
        UnicycleAgent(np.zeros(3), b=-1.0)


@given(angles, st.floats(0.05, 3))
def test_transform_inverts_output_map(theta, b):
    # y_dot = T (v, omega) with T = [[c, -b s], [s, b c]]
    c, s = np.cos(theta), np.sin(theta)
    T = np.array([[c, -b * s], [s, b * c]])
    assert unicycle_transform(theta, b) @ T == pytest.approx(np.eye(2), abs=1e-12)


@given(angles, st.floats(0.05, 3))
def test_modified_g_closed_form(theta, b):
    c, s = np.cos(theta), np.sin(theta)
    ref = np.array([[c * c, c * s], [c * s, s * s], [-s / b, c / b]])
    g = modified_g(UnicycleAgent(np.array([1.0, 2.0, theta]), b))
    assert g == pytest.approx(ref, abs=1e-12)
    assert unicycle_kinematics(theta) @ unicycle_transform(theta, b) == pytest.approx(g)


@given(angles, st.floats(0.05, 3), st.integers(0, 2))
def test_input_matrix_locally_lipschitz(theta, b, k):
    # entrywise slope of g is at most max(1, 1/b); quotients over shrinking steps respect it
    dyn = UnicycleAgent(np.array([0.3, -0.7, theta]), b).dynamics()
    lam = np.array([0.3, -0.7, theta])
    g0 = dyn.g(lam)
    assert np.isfinite(g0).all() and np.isfinite(dyn.f(lam)).all()
    for h in 10.0 ** -np.arange(1, 7):
        step = np.zeros(3)
        step[k] = h
        q = np.abs(dyn.g(lam + step) - g0).max() / h
        assert q <= max(1.0, 1.0 / b) * (1 + 1e-6) + 1e-8


@given(angles, st.lists(st.floats(-3, 3), min_size=2, max_size=2))
def test_output_moves_with_input(theta, u):
    a = UnicycleAgent(np.array([0.5, -1.0, theta]), 0.4)
    lam = integrate_step(a.dynamics(), a.lam, np.array(u), 0.01)
    # with u held constant the output travels in a straight line: y(dt) = y0 + u dt,
    # up to the local RK4 error of the heading (omega up to 7.5 rad/s here)
    assert a.output(lam) == pytest.approx(a.output() + 0.01 * np.array(u), abs=1e-7)


def test_rk4_beats_euler():
    a = UnicycleAgent(np.array([0.0, 0.0, 0.3]), 0.25)
    u = np.array([0.0, 1.0])
    exact = a.output() + 0.1 * u
    rk = a.output(integrate_step(a.dynamics(), a.lam, u, 0.1, RK4))
    eu = a.output(integrate_step(a.dynamics(), a.lam, u, 0.1, EULER))
    assert np.linalg.norm(rk - exact) < 1e-3 * np.linalg.norm(eu - exact)


def test_integrate_step_errors_and_kind():
    dyn = UnicycleAgent(np.zeros(3)).dynamics()
    out = integrate_step(dyn, rigid_pose(0, 0, 0), [1.0, 0.0], 0.02)
    assert isinstance(out, ParamVector) and out.kind == "rigid-pose-2d"
    assert out.values == pytest.approx([0.02, 0.0, 0.0])
    with pytest.raises(InvalidInput):
        integrate_step(dyn, np.zeros(3), [1.0, 0.0], 0.0)
    with pytest.raises(InvalidInput):
        integrate_step(dyn, np.zeros(3), [1.0, 0.0], 0.02, "midpoint")
    bad = ControlAffineDynamics(lambda lam: np.full(3, np.nan), lambda lam: np.zeros((3, 2)), 2)
    with pytest.raises(NumericalFailure):
        integrate_step(bad, np.zeros(3), [0.0, 0.0], 0.02, EULER)


def test_drift_free():
    a = UnicycleAgent(np.array([3.0, 4.0, 1.0]))
    assert a.dynamics().rate(a.lam, np.zeros(2)) == pytest.approx(np.zeros(3))
