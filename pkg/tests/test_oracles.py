import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from setcbf.cbf import SafetyConstraintRow
from setcbf.corpus import random_disjoint_pair, random_polygon, uniform_in_polygon
from setcbf.errors import InvalidInput
from setcbf.oracles import compare, exact_polytope_distance, exhaustive_qp, \
    finite_difference_gradient, project_polytope
from setcbf.render import point_in_polygon
from setcbf.sets import box


def test_compare():
    assert compare([1.0, 2.0], [1.0, 2.0 + 1e-9], atol=1e-8).passed
    rep = compare([1.0, 100.0], [1.0, 100.1], atol=0.0, rtol=1e-4)
    assert not rep.passed and rep.abs_err == pytest.approx(0.1)
    assert compare([100.0], [100.001], atol=0.0, rtol=1e-4).passed
    assert not compare([1.0], [np.nan], atol=1.0).passed
    with pytest.raises(InvalidInput):
        compare([1.0], [1.0, 2.0], atol=1.0)


def test_projection():
    A, b = box().A, box().b
    assert project_polytope([3.0, 0.5], A, b) == pytest.approx([1.0, 0.5])
    assert project_polytope([3.0, 4.0], A, b) == pytest.approx([1.0, 1.0])
    assert project_polytope([0.2, 0.1], A, b) == pytest.approx([0.2, 0.1])


def test_exact_distance_boxes():
    b = box()
    assert exact_polytope_distance(b.A, b.b, (0, 0, 0), b.A, b.b, (5, 0, 0)) == \
        pytest.approx(3.0, abs=1e-9)
    # diagonal: corner to corner after a quarter turn changes nothing for squares
    d = exact_polytope_distance(b.A, b.b, (0, 0, 0), b.A, b.b, (4, 4, np.pi / 2))
    assert d == pytest.approx(np.sqrt(8), abs=1e-8)
    # rotated by 45 degrees the corner points at the other box
    d = exact_polytope_distance(b.A, b.b, (0, 0, 0), b.A, b.b, (5, 0, np.pi / 4))
    assert d == pytest.approx(5 - 1 - np.sqrt(2), abs=1e-8)
    assert exact_polytope_distance(b.A, b.b, (0, 0, 0), b.A, b.b, (1, 1, 0.3)) == 0.0


def test_exact_distance_rejects_unbounded():
    with pytest.raises(InvalidInput):
        exact_polytope_distance([[1.0, 0.0]], [1.0], (0, 0, 0), box().A, box().b, (5, 0, 0))


def test_finite_difference_gradient():
    def f(x):
        return x[0] ** 2 + 3 * x[0] * x[1]

    assert finite_difference_gradient(f, np.array([1.0, 2.0])) == pytest.approx([8.0, 3.0],
                                                                               rel=1e-8)


def test_exhaustive_qp_examples():
    rows = [SafetyConstraintRow(np.array([-1.0, 0]), 0.0), SafetyConstraintRow(np.array([0, -1.0]), 0.0)]
    assert exhaustive_qp([1.0, 1.0], rows).u == pytest.approx([0, 0], abs=1e-12)
    assert exhaustive_qp([2.0, -1.0], []).u.tolist() == [2.0, -1.0]


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_corpus_pairs_are_disjoint_and_valid(seed):
    rng = np.random.default_rng(seed)
    p = random_disjoint_pair(rng)
    assert 3 <= p.ego.n_constraints <= 8
    d = exact_polytope_distance(p.ego.A, p.ego.b, p.lam_E, p.obstacle.A, p.obstacle.b, p.lam_j)
    assert d >= 0.3 - 1e-9


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(3, 8))
def test_uniform_samples_inside(seed, q):
    rng = np.random.default_rng(seed)
    P = random_polygon(rng, q)
    lam = rng.normal(size=3)
    pts = uniform_in_polygon(rng, P, lam, 50)
    assert pts.shape == (50, 2)
    assert (np.array([P.values(x, lam).max() for x in pts]) <= 0).all()
    poly = P.vertices(lam)
    assert all(point_in_polygon(x, poly) for x in pts)
