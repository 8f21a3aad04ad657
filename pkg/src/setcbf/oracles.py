"""Brute-force references for testing. Production code never imports this."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linprog

from .cbf import FilteredInput, QPStatus
from .errors import InvalidInput


@dataclass(frozen=True)
class OracleReport:
    reference: np.ndarray
    production: np.ndarray
    abs_err: float
    rel_err: float
    atol: float
    rtol: float
    passed: bool


def compare(reference, production, atol: float, rtol: float = 0.0) -> OracleReport:
    """Pass when every entry has ``|p - r| <= atol + rtol * |r|``."""
    r = np.atleast_1d(np.asarray(reference, dtype=float))
    p = np.atleast_1d(np.asarray(production, dtype=float))
    if r.shape != p.shape:
        raise InvalidInput(f"shape mismatch {r.shape} vs {p.shape}")
    err = np.abs(p - r)
    rel = err / np.maximum(np.abs(r), np.finfo(float).tiny)
    ok = bool(np.isfinite(p).all() and (err <= atol + rtol * np.abs(r)).all())
    return OracleReport(r, p, float(err.max(initial=0.0)), float(rel.max(initial=0.0)),
                        atol, rtol, ok)


def _world(A, b, pose):
    """World-frame halfspaces of a body-frame polytope.

    ``pose`` is ``(x, y, theta)`` in the plane or ``(rotation, translation)``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).reshape(-1)
    if isinstance(pose, tuple) and len(pose) == 2:
        R = np.asarray(pose[0], dtype=float)
        t = np.asarray(pose[1], dtype=float)
    else:
        x, y, th = np.asarray(pose, dtype=float)
        c, s = np.cos(th), np.sin(th)
        R = np.array([[c, -s], [s, c]])
        t = np.array([x, y])
    Aw = A @ R.T
    return Aw, b + Aw @ t


def _bounded(A) -> bool:
    # compact iff no nonzero direction d has A d <= 0; test each signed axis
    n = A.shape[1]
    for k in range(n):
        for sgn in (1.0, -1.0):
            res = linprog(-sgn * np.eye(n)[k], A_ub=A, b_ub=np.zeros(A.shape[0]),
                          bounds=[(-1, 1)] * n, method="highs")
            if res.status == 0 and -res.fun > 1e-9:
                return False
    return True


def project_polytope(p, A, b):
    """Euclidean projection onto ``{x : A x <= b}`` by enumerating active facets."""
    p = np.asarray(p, dtype=float)
    if (A @ p <= b + 1e-12).all():
        return p.copy()
    n = p.size
    best, best_d = None, np.inf
    for size in range(1, min(n, A.shape[0]) + 1):
        for S in itertools.combinations(range(A.shape[0]), size):
            AS = A[list(S)]
            G = AS @ AS.T
            if np.linalg.matrix_rank(G) < size:
                continue
            lam = np.linalg.solve(G, AS @ p - b[list(S)])
            if (lam < -1e-12).any():
                continue
            x = p - AS.T @ lam
            if (A @ x <= b + 1e-9).all():
                dist = np.linalg.norm(x - p)
                if dist < best_d:
                    best, best_d = x, dist
    if best is None:
        raise InvalidInput("projection failed; polytope may be empty")
    return best


def exact_polytope_distance(A1, b1, pose1, A2, b2, pose2, tol: float = 1e-10,
                            max_iter: int = 100000) -> float:
    """Euclidean distance between two exact polytopes, 0 when they overlap."""
    P1 = _world(A1, b1, pose1)
    P2 = _world(A2, b2, pose2)
    for A, _ in (P1, P2):
        if not _bounded(A):
            raise InvalidInput("polytope is not compact")
    n = P1[0].shape[1]
    lp = linprog(np.zeros(n), A_ub=np.vstack([P1[0], P2[0]]),
                 b_ub=np.concatenate([P1[1], P2[1]]), bounds=[(None, None)] * n,
                 method="highs")
    if lp.status == 0:
        return 0.0
    x = project_polytope(np.zeros(n), *P1)
    prev = np.inf
    for _ in range(max_iter):
        y = project_polytope(x, *P2)
        x = project_polytope(y, *P1)
        dist = float(np.linalg.norm(x - y))
        if prev - dist <= tol:
            return dist
        prev = dist
    return dist


def finite_difference_gradient(fn: Callable, theta, step: float = 1e-5) -> np.ndarray:
    theta = np.asarray(theta, dtype=float).reshape(-1)
    out = np.empty(theta.size)
    for k in range(theta.size):
        e = np.zeros(theta.size)
        e[k] = step
        out[k] = (fn(theta + e) - fn(theta - e)) / (2 * step)
    return out


def exhaustive_qp(u_nom, rows: Sequence, tol: float = 1e-9) -> FilteredInput:
    """Projection of ``u_nom`` onto the rows' halfspaces over all 2^J active sets."""
    u_nom = np.asarray(u_nom, dtype=float).reshape(-1)
    J = len(rows)
    if J > 12:
        raise InvalidInput("exhaustive_qp supports at most 12 rows")
    if J == 0:
        return FilteredInput(u_nom.copy(), QPStatus.OPTIMAL, (), np.zeros(0))
    A = np.array([np.asarray(r.coeff, dtype=float).reshape(-1) for r in rows])
    b = np.array([float(r.offset) for r in rows])
    best = None
    for mask in range(1 << J):
        S = [k for k in range(J) if mask >> k & 1]
        lam = np.zeros(J)
        if S:
            AS = A[S]
            rhs = -(AS @ u_nom + b[S])
            sol, *_ = np.linalg.lstsq(AS @ AS.T, rhs, rcond=None)
            u = u_nom + AS.T @ sol
            if np.abs(AS @ u + b[S]).max() > tol * (1 + np.abs(b[S]).max()):
                continue
            if (sol < -tol).any():
                continue
            lam[S] = sol
        else:
            u = u_nom.copy()
        if (A @ u + b < -tol * (1 + np.abs(b))).any():
            continue
        cost = float((u - u_nom) @ (u - u_nom))
        if best is None or cost < best[0]:
            best = (cost, u, lam, S)
    if best is None:
        return FilteredInput(np.zeros_like(u_nom), QPStatus.INFEASIBLE, ())
    _, u, lam, S = best
    return FilteredInput(u, QPStatus.OPTIMAL, tuple(rows[k].obstacle_id for k in S), lam)
