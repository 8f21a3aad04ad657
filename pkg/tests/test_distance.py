import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from setcbf.corpus import random_disjoint_pair
from setcbf.distance import DistanceProblem, SolverOptions, Status, smoothed_sets_intersect, \
    solve_distance
from setcbf.errors import InvalidInput
from setcbf.oracles import exact_polytope_distance
from setcbf.sets import box, find_interior_point, membership_margin, regular_polygon


def boxes(gap_x=5.0, eps=200.0, theta=0.0):
    return DistanceProblem(box(1.0, epsilon=eps), box(1.0, epsilon=eps),
                           np.zeros(3), np.array([gap_x, 0.0, theta]))


def test_two_unit_boxes():
    sol = solve_distance(boxes())
    assert sol.optimal
    # exact gap 3, so d = 3^2 / 2; the smoothed sets bulge by at most log(5)/200 per side
    assert sol.value == pytest.approx(4.5, abs=0.05)
    assert sol.value < 4.5
    assert sol.kkt_residual <= 1e-8
    assert np.abs(sol.constraint_residuals).max() <= 1e-6
    assert (sol.mu >= 1e-10).all()
    assert sol.value == pytest.approx(0.5 * np.sum((sol.z_E - sol.z_j) ** 2), rel=1e-14)


def test_witness_points_on_boundaries():
    p = boxes(eps=20)
    sol = solve_distance(p)
    assert membership_margin(p.ego, sol.z_E, p.lam_E) == pytest.approx(0, abs=1e-8)
    assert membership_margin(p.obstacle, sol.z_j, p.lam_j) == pytest.approx(0, abs=1e-8)
    # by symmetry the witness points lie on the x axis
    assert sol.z_E[1] == pytest.approx(0, abs=1e-8)
    assert sol.z_E[0] + sol.z_j[0] == pytest.approx(5.0, abs=1e-8)


def test_tightening_in_epsilon():
    vals = [solve_distance(boxes(eps=e)).value for e in 2.0 ** np.arange(9)]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


def test_overlap_is_reported():
    sol = solve_distance(boxes(gap_x=1.5))
    assert sol.status is Status.INTERSECTING
    assert sol.value == 0.0
    assert smoothed_sets_intersect(boxes(gap_x=1.5)) is not None
    assert smoothed_sets_intersect(boxes(gap_x=5.0)) is None


def test_touching_smoothed_sets_overlap():
    # exact boxes 0.01 apart, but each smoothed set bulges further at eps = 1
    sol = solve_distance(boxes(gap_x=2.01, eps=1.0))
    assert sol.status is Status.INTERSECTING


def test_symmetry_translation_rotation():
    p = boxes(gap_x=4.0, eps=20, theta=0.3)
    v = solve_distance(p).value
    swapped = DistanceProblem(p.obstacle, p.ego, p.lam_j, p.lam_E)
    assert solve_distance(swapped).value == pytest.approx(v, rel=1e-9)
    shift = np.array([10.0, -7.0, 0.0])
    moved = DistanceProblem(p.ego, p.obstacle, p.lam_E + shift, p.lam_j + shift)
    assert solve_distance(moved).value == pytest.approx(v, rel=1e-9)
    a = 0.9
    c, s = np.cos(a), np.sin(a)
    rot = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
    turned = DistanceProblem(p.ego, p.obstacle, rot @ p.lam_E + [0, 0, a], rot @ p.lam_j + [0, 0, a])
    assert solve_distance(turned).value == pytest.approx(v, rel=1e-9)


def test_warm_start_matches_cold():
    p = boxes(gap_x=4.0, eps=20, theta=0.3)
    cold = solve_distance(p)
    nudged = DistanceProblem(p.ego, p.obstacle, p.lam_E, p.lam_j + [0.01, 0.02, 0.01])
    warm = solve_distance(nudged, warm_start=(cold.z_E, cold.z_j, cold.mu))
    ref = solve_distance(nudged)
    assert warm.optimal
    assert warm.value == pytest.approx(ref.value, rel=1e-10)
    assert warm.iterations == 0


def test_init_must_be_feasible():
    p = boxes()
    with pytest.raises(InvalidInput):
        solve_distance(p, init=(np.array([3.0, 0]), np.array([5.0, 0])))


def test_problem_shape_checks():
    with pytest.raises(InvalidInput):
        DistanceProblem(box(), box(), np.zeros(2), np.zeros(3))


def test_iteration_cap():
    sol = solve_distance(boxes(eps=20), SolverOptions(max_iter=1, polish_iters=0))
    assert sol.status in (Status.MAX_ITERATIONS, Status.OPTIMAL)
    assert sol.status is Status.MAX_ITERATIONS or sol.kkt_residual <= 1e-8


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([20.0, 400.0]))
def test_random_pairs_close_to_exact(seed, eps):
    pair = random_disjoint_pair(np.random.default_rng(seed), epsilon=eps)
    p = DistanceProblem(pair.ego, pair.obstacle, pair.lam_E, pair.lam_j)
    sol = solve_distance(p)
    assert sol.optimal
    exact = exact_polytope_distance(pair.ego.A, pair.ego.b, pair.lam_E,
                                    pair.obstacle.A, pair.obstacle.b, pair.lam_j)
    n_min = min(np.linalg.norm(pair.ego.A, axis=1).min(),
                np.linalg.norm(pair.obstacle.A, axis=1).min())
    q = max(pair.ego.n_constraints, pair.obstacle.n_constraints)
    smoothed = np.sqrt(2 * sol.value)
    # smoothed sets contain the exact ones, so the smoothed gap never exceeds the exact one
    assert smoothed <= exact + 1e-9
    assert exact - smoothed <= 2 * np.log(q + 1) / (eps * n_min)


def test_restarts_agree():
    p = DistanceProblem(regular_polygon(5, 1.0), regular_polygon(7, 0.8),
                        np.array([0.0, 0.0, 0.2]), np.array([3.0, 1.0, -0.4]))
    ref = solve_distance(p)
    rng = np.random.default_rng(0)
    cE = find_interior_point(p.ego, p.lam_E, smoothed=True)
    cJ = find_interior_point(p.obstacle, p.lam_j, smoothed=True)
    for _ in range(5):
        zE = cE + rng.uniform(-0.3, 0.3, 2)
        zJ = cJ + rng.uniform(-0.3, 0.3, 2)
        sol = solve_distance(p, init=(zE, zJ))
        assert sol.value == pytest.approx(ref.value, abs=1e-9)
        assert sol.z_E == pytest.approx(ref.z_E, abs=1e-6)
