"""Barrier functions, affine safety constraints and the safety-filter QP.

``h_j = d_eps^+(lam_E, lam_j) - R`` for each unsafe component ``j``. Each
barrier contributes one row ``coeff . u + offset >= 0`` with

    coeff  = dh/dlam_E . g(lam_E)
    offset = dh/dlam_E . f(lam_E) + dh/dlam_j . lam_j_dot + alpha(h)

and the filter returns the input closest to ``u_nom`` satisfying every row.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .distance import DistanceSolution, Status
from .errors import InvalidInput

ENUMERATION_MAX_ROWS = 8


@dataclass(frozen=True)
class ClassK:
    """Extended class-K function ``gamma * h`` (linear) or ``gamma * h**3`` (cubic)."""

    kind: str = "linear"
    gamma: float = 1.0

    def __post_init__(self):
        if self.kind not in ("linear", "cubic"):
            raise InvalidInput(f"unknown class-K kind {self.kind!r}")
        if not self.gamma > 0:
            raise InvalidInput("class-K gain must be positive")

    def __call__(self, h: float) -> float:
        return self.gamma * h if self.kind == "linear" else self.gamma * h ** 3


@dataclass(frozen=True)
class BarrierConfig:
    R: float = 0.0
    alpha: ClassK = field(default_factory=ClassK)

    def __post_init__(self):
        if not self.R >= 0:
            raise InvalidInput("safety margin R must be nonnegative")

    @classmethod
    def from_margin_distance(cls, r: float, alpha: Optional[ClassK] = None):
        """Margin given as a distance ``r``; ``R = r**2 / 2`` matches ``d_eps^+`` units."""
        return cls(0.5 * r * r, alpha or ClassK())


@dataclass(frozen=True)
class SafetyConstraintRow:
    coeff: np.ndarray
    offset: float
    obstacle_id: object = None
    h_value: float = np.nan

    def slack(self, u) -> float:
        return float(self.coeff @ u + self.offset)


class QPStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class FilteredInput:
    u: np.ndarray
    status: QPStatus
    active_rows: tuple = ()
    multipliers: Optional[np.ndarray] = None

    @property
    def optimal(self):
        return self.status is QPStatus.OPTIMAL


def barrier_value(d: DistanceSolution, cfg: BarrierConfig) -> float:
    if d.status is Status.INTERSECTING:
        return -cfg.R
    if d.status is not Status.OPTIMAL:
        raise InvalidInput(f"barrier undefined for distance status {d.status}")
    return d.value - cfg.R


def assemble_rows(grads_E: Sequence, grads_j: Sequence, h: Sequence, f, g,
                  lam_dots: Sequence, cfg: BarrierConfig,
                  obstacle_ids: Optional[Sequence] = None,
                  alphas: Optional[Sequence[ClassK]] = None) -> list:
    """One safety row per obstacle.

    ``grads_E[j]`` and ``grads_j[j]`` are ``dh_j/dlam_E`` and ``dh_j/dlam_j``;
    ``f`` (M_E,) and ``g`` (M_E, P_E) are the ego dynamics evaluated at the
    current ``lam_E``; ``lam_dots[j]`` is the obstacle parameter rate.
    """
    f = np.asarray(f, dtype=float).reshape(-1)
    g = np.atleast_2d(np.asarray(g, dtype=float))
    if g.shape[0] != f.size:
        raise InvalidInput("f and g disagree on the ego parameter dimension")
    J = len(h)
    if not (len(grads_E) == len(grads_j) == len(lam_dots) == J):
        raise InvalidInput("per-obstacle inputs have different lengths")
    ids = list(range(J)) if obstacle_ids is None else list(obstacle_ids)
    rows = []
    for k in range(J):
        gE = np.asarray(grads_E[k], dtype=float).reshape(-1)
        gj = np.asarray(grads_j[k], dtype=float).reshape(-1)
        ld = np.asarray(lam_dots[k], dtype=float).reshape(-1)
        if gE.size != f.size or gj.size != ld.size:
            raise InvalidInput(f"gradient/dynamics dimension mismatch for obstacle {ids[k]}")
        alpha = cfg.alpha if alphas is None else alphas[k]
        offset = float(gE @ f + gj @ ld + alpha(h[k]))
        rows.append(SafetyConstraintRow(gE @ g, offset, ids[k], float(h[k])))
    return rows


def _enumerate(u_nom, A, b, tol):
    """Exact active-set search over linearly independent subsets."""
    J, P = A.shape
    best = None
    for size in range(0, min(J, P) + 1):
        for S in itertools.combinations(range(J), size):
            S = list(S)
            if size:
                AS = A[S]
                G = AS @ AS.T
                if np.linalg.matrix_rank(G) < size:
                    continue
                lam = np.linalg.solve(G, -(AS @ u_nom + b[S]))
                if (lam < -tol).any():
                    continue
                u = u_nom + AS.T @ lam
            else:
                lam = np.zeros(0)
                u = u_nom.copy()
            if (A @ u + b >= -tol * (1 + np.abs(b))).all():
                full = np.zeros(J)
                full[S] = np.maximum(lam, 0.0)
                cand = (float((u - u_nom) @ (u - u_nom)), u, full, tuple(S))
                if best is None or cand[0] < best[0] - 1e-15:
                    best = cand
        if best is not None:
            # the KKT point is unique; smaller active sets are found first
            return best
    return best


def _dual_ascent(u_nom, A, b, tol, max_sweeps=20000):
    """Hildreth-style coordinate ascent on the dual of the projection QP."""
    J = A.shape[0]
    norms = (A * A).sum(axis=1)
    lam = np.zeros(J)
    u = u_nom.copy()
    for _ in range(max_sweeps):
        change = 0.0
        for k in range(J):
            if norms[k] == 0:
                continue
            new = max(0.0, lam[k] - (A[k] @ u + b[k]) / norms[k])
            delta = new - lam[k]
            if delta:
                u = u + delta * A[k]
                lam[k] = new
                change = max(change, abs(delta) * np.sqrt(norms[k]))
        if not np.isfinite(lam).all() or lam.max(initial=0.0) > 1e12:
            return None
        if change < 1e-14 and (A @ u + b >= -tol * (1 + np.abs(b))).all():
            break
    else:
        return None
    # refine on the identified active set
    S = np.flatnonzero(lam > 0)
    if S.size and S.size <= A.shape[1]:
        AS = A[S]
        try:
            lamS = np.linalg.solve(AS @ AS.T, -(AS @ u_nom + b[S]))
            uS = u_nom + AS.T @ lamS
            if (lamS >= -tol).all() and (A @ uS + b >= -tol * (1 + np.abs(b))).all():
                u = uS
                lam = np.zeros(J)
                lam[S] = np.maximum(lamS, 0.0)
        except np.linalg.LinAlgError:
            pass
    return float((u - u_nom) @ (u - u_nom)), u, lam, tuple(np.flatnonzero(lam > 0))


def solve_filter_qp(u_nom, rows: Sequence[SafetyConstraintRow],
                    tol: float = 1e-10) -> FilteredInput:
    """Minimize ``||u - u_nom||^2`` subject to ``coeff . u + offset >= 0`` per row."""
    u_nom = np.asarray(u_nom, dtype=float).reshape(-1)
    if not rows:
        return FilteredInput(u_nom.copy(), QPStatus.OPTIMAL, (), np.zeros(0))
    A = np.array([np.asarray(r.coeff, dtype=float).reshape(-1) for r in rows])
    b = np.array([float(r.offset) for r in rows])
    if A.shape[1] != u_nom.size:
        raise InvalidInput("row coefficients do not match the input dimension")
    if not (np.isfinite(A).all() and np.isfinite(b).all()):
        raise InvalidInput("non-finite safety row")
    if (A @ u_nom + b >= 0).all():
        return FilteredInput(u_nom.copy(), QPStatus.OPTIMAL, (), np.zeros(len(rows)))
    if len(rows) <= ENUMERATION_MAX_ROWS:
        best = _enumerate(u_nom, A, b, tol)
    else:
        best = _dual_ascent(u_nom, A, b, tol)
    if best is None:
        return FilteredInput(np.zeros_like(u_nom), QPStatus.INFEASIBLE, ())
    _, u, lam, S = best
    ids = tuple(rows[k].obstacle_id for k in S)
    return FilteredInput(u, QPStatus.OPTIMAL, ids, lam)
