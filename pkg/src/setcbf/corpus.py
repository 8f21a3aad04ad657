"""Seeded random polygons and disjoint placements for tests and experiments."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sets import RigidPolytope


@dataclass(frozen=True)
class PolygonPair:
    ego: RigidPolytope
    obstacle: RigidPolytope
    lam_E: np.ndarray
    lam_j: np.ndarray


def random_polygon(rng: np.random.Generator, q: int, epsilon: float = 20.0,
                   radius=(0.6, 1.4), scale=(0.5, 2.0)) -> RigidPolytope:
    """Convex ``q``-gon around the origin with unequal normal scalings.

    Vertices lie on a circle with angular gaps in ``[0.5, 1.5] * 2 pi / q``,
    which keeps interior angles away from zero.
    """
    gaps = rng.uniform(0.5, 1.5, q)
    gaps *= 2 * np.pi / gaps.sum()
    ang = rng.uniform(0, 2 * np.pi) + np.concatenate([[0.0], np.cumsum(gaps[:-1])])
    r = rng.uniform(*radius)
    V = r * np.column_stack([np.cos(ang), np.sin(ang)])
    E = np.roll(V, -1, axis=0) - V
    N = np.column_stack([E[:, 1], -E[:, 0]])
    N /= np.linalg.norm(N, axis=1, keepdims=True)
    off = np.einsum("ij,ij->i", N, V)
    k = rng.uniform(*scale, q)
    return RigidPolytope(N * k[:, None], off * k, epsilon=epsilon)


def _support(P: RigidPolytope, lam, direction) -> float:
    return float((P.vertices(lam) @ direction).max())


def random_disjoint_pair(rng: np.random.Generator, epsilon: float = 400.0,
                         q_range=(3, 8), gap=(0.3, 2.0)) -> PolygonPair:
    """Two random polygons whose exact bodies are separated by ``gap`` along a line."""
    P1 = random_polygon(rng, int(rng.integers(q_range[0], q_range[1] + 1)), epsilon)
    P2 = random_polygon(rng, int(rng.integers(q_range[0], q_range[1] + 1)), epsilon)
    th1, th2 = rng.uniform(-np.pi, np.pi, 2)
    c1 = rng.uniform(-2, 2, 2)
    lam1 = np.array([*c1, th1])
    phi = rng.uniform(0, 2 * np.pi)
    u = np.array([np.cos(phi), np.sin(phi)])
    lam2 = np.array([0.0, 0.0, th2])
    # place P2 so its extent along u starts past P1's extent plus the gap
    s = _support(P1, lam1, u) + _support(P2, lam2, -u) + rng.uniform(*gap)
    lam2[:2] = s * u
    return PolygonPair(P1, P2, lam1, lam2)


def uniform_in_polygon(rng: np.random.Generator, P: RigidPolytope, lam, n: int) -> np.ndarray:
    """``n`` uniform samples from the exact polygon by rejection from its bounding box."""
    V = P.vertices(lam)
    lo, hi = V.min(axis=0), V.max(axis=0)
    out = []
    while len(out) < n:
        x = rng.uniform(lo, hi, size=(4 * n, 2))
        keep = np.array([(P.values(p, lam) < 0).all() for p in x])
        out.extend(x[keep])
    return np.array(out[:n])
