"""Parameterized convex sets defined by stacks of convex constraints.

A set is ``S(lam) = {x : F(x, lam) <= 0}`` where ``F`` stacks ``n_F``
functions convex in ``x``. Its smoothed overapproximation is
``S_eps^+(lam) = {x : LSE_eps^+(F(x, lam)) <= log(n_F) / eps}``.

Two kinds are provided: :class:`RigidPolytope`, a body-frame polytope moved
by a planar pose ``(x_c1, x_c2, theta)``, and :class:`ConstraintStack`, which
wraps user-supplied callables.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import EmptyInterior, InvalidInput
from .lse import lse_eps_plus, lse_eps_plus_value

RIGID_POSE_2D = "rigid-pose-2d"
GENERIC = "generic"


@dataclass(frozen=True)
class ParamVector:
    """Set parameters with a kind tag; rigid poses are ``(x_c1, x_c2, theta)``."""

    values: np.ndarray
    kind: str = GENERIC

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if not np.isfinite(v).all():
            raise InvalidInput("parameter vector has non-finite entries")
        if self.kind == RIGID_POSE_2D and v.size != 3:
            raise InvalidInput(f"rigid-pose-2d needs 3 entries, got {v.size}")
        if self.kind not in (RIGID_POSE_2D, GENERIC):
            raise InvalidInput(f"unknown parameter kind {self.kind!r}")
        object.__setattr__(self, "values", v)

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __len__(self):
        return self.values.size


def rigid_pose(x, y, theta) -> ParamVector:
    return ParamVector(np.array([x, y, theta], dtype=float), RIGID_POSE_2D)


def as_params(lam) -> np.ndarray:
    if isinstance(lam, ParamVector):
        return lam.values
    v = np.asarray(lam, dtype=float).reshape(-1)
    if not np.isfinite(v).all():
        raise InvalidInput("parameter vector has non-finite entries")
    return v


@dataclass(frozen=True)
class StackEval:
    """Constraint values and derivative blocks at one ``(x, lam)``.

    Shapes: ``F`` (n_F,), ``dF_dx`` (n_F, N), ``dF_dlam`` (n_F, M),
    ``d2F_dx2`` (n_F, N, N), ``d2F_dxdlam`` (n_F, N, M).
    """

    F: np.ndarray
    dF_dx: np.ndarray
    dF_dlam: np.ndarray
    d2F_dx2: np.ndarray
    d2F_dxdlam: np.ndarray


class ConvexSet:
    """Interface shared by all set kinds."""

    dim: int
    n_constraints: int
    param_dim: int
    epsilon: float
    affine: bool = False

    def values(self, x, lam) -> np.ndarray:
        raise NotImplementedError

    def jacobian_x(self, x, lam) -> np.ndarray:
        raise NotImplementedError

    def evaluate(self, x, lam) -> StackEval:
        raise NotImplementedError

    def start_point(self, lam) -> np.ndarray:
        return np.zeros(self.dim)

    @property
    def threshold(self) -> float:
        """Right-hand side ``log(n_F) / eps`` of the smoothed membership test."""
        return np.log(self.n_constraints) / self.epsilon

    def _check(self, x, lam):
        x = np.asarray(x, dtype=float).reshape(-1)
        lam = as_params(lam)
        if x.size != self.dim:
            raise InvalidInput(f"point has dimension {x.size}, set lives in R^{self.dim}")
        if not np.isfinite(x).all():
            raise InvalidInput("point has non-finite entries")
        if lam.size != self.param_dim:
            raise InvalidInput(f"expected {self.param_dim} parameters, got {lam.size}")
        return x, lam


def rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


class RigidPolytope(ConvexSet):
    """Body-frame polytope ``A0 y <= b0`` placed at pose ``(x_c1, x_c2, theta)``.

    ``F(x, lam) = A0 R(theta)^T (x - x_c) - b0``. The constructor rejects
    non-compact or empty-interior base polytopes unless ``validate=False``.
    """

    affine = True

    def __init__(self, A, b, epsilon: float = 20.0, validate: bool = True):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.asarray(b, dtype=float).reshape(-1)
        if A.ndim != 2 or A.shape[1] != 2:
            raise InvalidInput(f"base halfspace matrix must be q x 2, got {A.shape}")
        if b.size != A.shape[0]:
            raise InvalidInput("base-b length must match the number of halfspaces")
        if not (np.isfinite(A).all() and np.isfinite(b).all()):
            raise InvalidInput("non-finite polytope data")
        if not np.isfinite(epsilon) or epsilon <= 0:
            raise InvalidInput(f"epsilon must be positive, got {epsilon}")
        self.A = A
        self.b = b
        self.epsilon = float(epsilon)
        self.dim = 2
        self.param_dim = 3
        self.n_constraints = A.shape[0]
        self._center = None
        if validate:
            if not base_is_bounded(A):
                raise InvalidInput("base polytope is unbounded")
            if chebyshev_radius(A, b) <= 0:
                raise InvalidInput("base polytope has empty interior")

    def __repr__(self):
        return f"RigidPolytope(q={self.n_constraints}, epsilon={self.epsilon})"

    def with_epsilon(self, epsilon: float) -> "RigidPolytope":
        return RigidPolytope(self.A, self.b, epsilon, validate=False)

    def values(self, x, lam):
        lam = np.asarray(lam, dtype=float)
        c, s = np.cos(lam[2]), np.sin(lam[2])
        dx = x[0] - lam[0]
        dy = x[1] - lam[1]
        # body-frame coordinates R^T (x - x_c)
        return self.A @ np.array([c * dx + s * dy, -s * dx + c * dy]) - self.b

    def jacobian_x(self, x, lam):
        return self.A @ rotation(lam[2]).T

    def evaluate(self, x, lam):
        x, lam = self._check(x, lam)
        q = self.n_constraints
        rt = rotation(lam[2]).T
        drt = np.array([[-np.sin(lam[2]), np.cos(lam[2])],
                        [-np.cos(lam[2]), -np.sin(lam[2])]])
        d = x - lam[:2]
        jx = self.A @ rt
        a_drt = self.A @ drt
        dlam = np.empty((q, 3))
        dlam[:, :2] = -jx
        dlam[:, 2] = a_drt @ d
        xl = np.zeros((q, 2, 3))
        xl[:, :, 2] = a_drt
        return StackEval(self.A @ (rt @ d) - self.b, jx, dlam, np.zeros((q, 2, 2)), xl)

    def start_point(self, lam):
        """Chebyshev centre of the placed polytope (the body origin may lie outside)."""
        if self._center is None:
            self._center = chebyshev_center(self.A, self.b)
        lam = as_params(lam)
        return rotation(lam[2]) @ self._center + lam[:2]

    def vertices(self, lam=(0.0, 0.0, 0.0)) -> np.ndarray:
        """Exact polygon vertices in world frame, counterclockwise."""
        lam = as_params(lam)
        v = polygon_vertices(self.A, self.b)
        return v @ rotation(lam[2]).T + lam[:2]


class ConstraintStack(ConvexSet):
    """Generic constraint stack backed by callables.

    ``fun(x, lam) -> (n_F,)``, ``jac_x -> (n_F, N)``, ``jac_lam -> (n_F, M)``;
    optional ``hess_xx -> (n_F, N, N)`` and ``hess_xlam -> (n_F, N, M)``
    default to zero (affine in ``x`` / no mixed dependence).
    """

    def __init__(self, fun: Callable, jac_x: Callable, jac_lam: Callable, *,
                 dim: int, n_constraints: int, param_dim: int, epsilon: float,
                 hess_xx: Optional[Callable] = None,
                 hess_xlam: Optional[Callable] = None,
                 start: Optional[Callable] = None):
        if epsilon <= 0:
            raise InvalidInput(f"epsilon must be positive, got {epsilon}")
        self.fun, self.jac_x, self.jac_lam = fun, jac_x, jac_lam
        self.hess_xx, self.hess_xlam = hess_xx, hess_xlam
        self.dim, self.n_constraints, self.param_dim = dim, n_constraints, param_dim
        self.epsilon = float(epsilon)
        self.affine = hess_xx is None
        self._start = start

    def values(self, x, lam):
        return np.asarray(self.fun(x, lam), dtype=float)

    def jacobian_x(self, x, lam):
        return np.asarray(self.jac_x(x, lam), dtype=float)

    def evaluate(self, x, lam):
        x, lam = self._check(x, lam)
        n, q, m = self.dim, self.n_constraints, self.param_dim
        xx = (np.zeros((q, n, n)) if self.hess_xx is None
              else np.asarray(self.hess_xx(x, lam), dtype=float))
        xl = (np.zeros((q, n, m)) if self.hess_xlam is None
              else np.asarray(self.hess_xlam(x, lam), dtype=float))
        out = StackEval(self.values(x, lam), self.jacobian_x(x, lam),
                        np.asarray(self.jac_lam(x, lam), dtype=float), xx, xl)
        if out.F.shape != (q,) or out.dF_dx.shape != (q, n) or out.dF_dlam.shape != (q, m):
            raise InvalidInput("constraint callables returned inconsistent shapes")
        return out

    def start_point(self, lam):
        if self._start is not None:
            return np.asarray(self._start(lam), dtype=float)
        return np.zeros(self.dim)


# ---------------------------------------------------------------- builders

def box(half_width: float = 1.0, half_height: Optional[float] = None,
        epsilon: float = 20.0) -> RigidPolytope:
    """Axis-aligned box centered on the body origin (rows +x, -x, +y, -y)."""
    hh = half_width if half_height is None else half_height
    A = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    return RigidPolytope(A, [half_width, half_width, hh, hh], epsilon)


def regular_polygon(k: int, radius: float, epsilon: float = 20.0,
                    phase: float = 0.0) -> RigidPolytope:
    """Regular ``k``-gon with circumradius ``radius`` and unit face normals.

    Face normals sit at angles ``phase + 2*pi*i/k``, so ``k=4`` with
    ``radius=sqrt(2)`` is the unit box.
    """
    if k < 3 or radius <= 0:
        raise InvalidInput("regular polygon needs k >= 3 and radius > 0")
    ang = phase + 2 * np.pi * np.arange(k) / k
    A = np.column_stack([np.cos(ang), np.sin(ang)])
    return RigidPolytope(A, np.full(k, radius * np.cos(np.pi / k)), epsilon)


# ------------------------------------------------------- polytope geometry

def base_is_bounded(A) -> bool:
    """True iff the recession cone ``{d : A d <= 0}`` is ``{0}``."""
    A = np.asarray(A, dtype=float)
    n = A.shape[1]
    for i in range(n):
        for sign in (1.0, -1.0):
            c = np.zeros(n)
            c[i] = -sign
            res = linprog(c, A_ub=A, b_ub=np.zeros(A.shape[0]),
                          bounds=[(-1, 1)] * n, method="highs")
            if res.status != 0 or -res.fun > 1e-12:
                return False
    return True


def _chebyshev(A, b):
    A = np.asarray(A, dtype=float)
    norms = np.linalg.norm(A, axis=1)
    n = A.shape[1]
    c = np.zeros(n + 1)
    c[-1] = -1.0
    res = linprog(c, A_ub=np.column_stack([A, norms]), b_ub=b,
                  bounds=[(None, None)] * n + [(None, 1e6)], method="highs")
    if res.status != 0:
        return None, -np.inf
    return res.x[:n], float(res.x[-1])


def chebyshev_radius(A, b) -> float:
    """Radius of the largest ball inside ``A x <= b`` (``-inf`` if empty)."""
    return _chebyshev(A, b)[1]


def chebyshev_center(A, b) -> np.ndarray:
    """Centre of the largest ball inside ``A x <= b``."""
    x, r = _chebyshev(A, b)
    if x is None:
        raise EmptyInterior("polytope is empty")
    return x


def polygon_vertices(A, b, tol: float = 1e-9) -> np.ndarray:
    """Vertices of a bounded 2D polygon ``A x <= b``, counterclockwise."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    pts = []
    for i in range(len(b)):
        for j in range(i + 1, len(b)):
            M = A[[i, j]]
            if abs(np.linalg.det(M)) < 1e-12:
                continue
            p = np.linalg.solve(M, b[[i, j]])
            if (A @ p - b <= tol * (1 + np.abs(b))).all():
                pts.append(p)
    pts = np.array(pts)
    # merge duplicates from degenerate vertices
    uniq = []
    for p in pts:
        if not any(np.linalg.norm(p - u) < 1e-9 for u in uniq):
            uniq.append(p)
    pts = np.array(uniq)
    c = pts.mean(axis=0)
    order = np.argsort(np.arctan2(pts[:, 1] - c[1], pts[:, 0] - c[0]))
    return pts[order]


# --------------------------------------------------------------- operations

def eval_stack(s: ConvexSet, x, lam) -> StackEval:
    return s.evaluate(x, lam)


def membership_margin(s: ConvexSet, x, lam) -> float:
    """``LSE_eps^+(F(x, lam)) - log(n_F)/eps``; nonpositive inside ``S_eps^+``."""
    x, lam = s._check(x, lam)
    return lse_eps_plus_value(s.values(x, lam), s.epsilon) - s.threshold


def _lse_newton(s: ConvexSet, lam, x0, done, max_iter=200):
    """Damped Newton on ``LSE_eps^+(F(x, lam))`` until ``done(x, F)``."""
    lam = as_params(lam)
    x = np.asarray(x0, dtype=float).copy()
    eps = s.epsilon
    for _ in range(max_iter):
        F = s.values(x, lam)
        if done(x, F):
            return x
        ev = s.evaluate(x, lam)
        e = lse_eps_plus(F, eps)
        g = ev.dF_dx.T @ e.gradient
        H = ev.dF_dx.T @ e.hessian @ ev.dF_dx
        if not s.affine:
            H = H + np.einsum("k,kij->ij", e.gradient, ev.d2F_dx2)
        try:
            step = -np.linalg.solve(H + 1e-14 * np.eye(s.dim), g)
        except np.linalg.LinAlgError:
            step = -g
        slope = g @ step
        if slope > -1e-30:
            break  # stationary: the minimizer of the smoothed max is not feasible
        t = 1.0
        f0 = e.value
        while t > 1e-12:
            xn = x + t * step
            if lse_eps_plus_value(s.values(xn, lam), eps) <= f0 + 1e-4 * t * slope:
                break
            t *= 0.5
        else:
            break
        x = xn
    F = s.values(x, lam)
    if done(x, F):
        return x
    return None


def find_interior_point(s: ConvexSet, lam, *, smoothed: bool = False,
                        max_iter: int = 200) -> np.ndarray:
    """Strictly feasible point of ``S(lam)`` (or of ``S_eps^+(lam)`` if ``smoothed``).

    Starts from ``x_c`` for rigid polytopes and the origin otherwise. The
    plain variant guarantees ``max F <= -1e-9``; the smoothed variant
    guarantees a membership margin below ``-1e-12``.
    """
    lam = as_params(lam)
    if smoothed:
        thr = s.threshold
        eps = s.epsilon

        def done(x, F):
            return lse_eps_plus_value(F, eps) - thr < -1e-12
    else:
        def done(x, F):
            return F.max() <= -1e-9

    x = _lse_newton(s, lam, s.start_point(lam), done, max_iter)
    if x is None:
        raise EmptyInterior("no strictly feasible point found "
                            + ("in the smoothed set" if smoothed else "in the set"))
    return x


@dataclass
class SampleCheck:
    lam: np.ndarray
    rank: int
    rank_ok: bool
    convex_ok: bool
    compact_ok: bool
    interior_ok: bool

    @property
    def ok(self):
        return self.rank_ok and self.convex_ok and self.compact_ok and self.interior_ok


@dataclass
class StandardConditionsReport:
    samples: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.samples)

    def failures(self) -> list:
        out = []
        for c in self.samples:
            for name in ("rank_ok", "convex_ok", "compact_ok", "interior_ok"):
                if not getattr(c, name):
                    out.append((tuple(c.lam), name.removesuffix("_ok")))
        return out


def _compact_generic(s: ConvexSet, lam, x0, radius=1e6) -> bool:
    for d in np.vstack([np.eye(s.dim), -np.eye(s.dim)]):
        if s.values(x0 + radius * d, lam).max() <= 0:
            return False
    return True


def verify_standard_conditions(s: ConvexSet, lam_samples: Sequence,
                               n_convexity: int = 20,
                               seed: int = 0) -> StandardConditionsReport:
    """Sampled checks of convexity, compactness, interior and column rank."""
    if len(lam_samples) == 0:
        raise InvalidInput("need at least one parameter sample")
    rng = np.random.default_rng(seed)
    report = StandardConditionsReport()
    for lam in lam_samples:
        lam = as_params(lam)
        if isinstance(s, RigidPolytope):
            compact = base_is_bounded(s.A)
            interior = chebyshev_radius(s.A, s.b) > 0
        else:
            try:
                x_in = find_interior_point(s, lam)
                interior = True
                compact = _compact_generic(s, lam, x_in)
            except EmptyInterior:
                interior = compact = False
        center = s.start_point(lam)
        scale = 1.0 + np.abs(center).max()
        x = center + rng.normal(scale=scale, size=s.dim)
        sv = np.linalg.svd(s.jacobian_x(x, lam), compute_uv=False)
        rank = int((sv > 1e-10 * sv.max()).sum()) if sv.size and sv.max() > 0 else 0
        convex = True
        for _ in range(n_convexity):
            x1 = center + rng.normal(scale=scale, size=s.dim)
            x2 = center + rng.normal(scale=scale, size=s.dim)
            f1, f2 = s.values(x1, lam), s.values(x2, lam)
            fm = s.values(0.5 * (x1 + x2), lam)
            tol = 1e-9 * (1 + np.abs(f1) + np.abs(f2))
            if (fm > 0.5 * (f1 + f2) + tol).any():
                convex = False
                break
        report.samples.append(SampleCheck(lam.copy(), rank, rank == s.dim,
                                          convex, compact, interior))
    return report
