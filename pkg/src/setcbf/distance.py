"""Smoothed minimum distance between two parameterized convex sets.

Solves::

    min_{z_E, z_j}  1/2 ||z_E - z_j||^2
    s.t.            c_E(z_E) = LSE_eps^+(F_E(z_E, lam_E)) - log(n_E)/eps_E <= 0
                    c_j(z_j) = LSE_eps^+(F_j(z_j, lam_j)) - log(n_j)/eps_j <= 0

with a primal log-barrier Newton method (barrier weight continuation) and a
final Newton polish on the KKT system with both constraints active.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidInput
from .lse import lse_eps_plus, lse_eps_plus_value
from .sets import ConvexSet, RigidPolytope, as_params, find_interior_point


_TRACE = None


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    INTERSECTING = "Intersecting"
    MAX_ITERATIONS = "MaxIterations"
    NUMERICAL_FAILURE = "NumericalFailure"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class DistanceProblem:
    ego: ConvexSet
    obstacle: ConvexSet
    lam_E: np.ndarray
    lam_j: np.ndarray

    def __post_init__(self):
        if self.ego.dim != self.obstacle.dim:
            raise InvalidInput("ego and obstacle live in different dimensions")
        object.__setattr__(self, "lam_E", as_params(self.lam_E).copy())
        object.__setattr__(self, "lam_j", as_params(self.lam_j).copy())
        if self.lam_E.size != self.ego.param_dim or self.lam_j.size != self.obstacle.param_dim:
            raise InvalidInput("parameter vector length does not match its set")

    @property
    def dim(self):
        return self.ego.dim


@dataclass
class SolverOptions:
    max_iter: int = 100
    t0: float = 1.0
    t_factor: float = 10.0
    gap_tol: float = 1e-10
    center_tol: float = 1e-10
    armijo: float = 1e-4
    kkt_tol: float = 1e-8
    activity_tol: float = 1e-6
    mu_min: float = 1e-10
    polish_iters: int = 8


@dataclass(frozen=True)
class DistanceSolution:
    z_E: np.ndarray
    z_j: np.ndarray
    mu: np.ndarray
    value: float
    kkt_residual: float
    constraint_residuals: np.ndarray
    iterations: int
    status: Status
    polish_iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL

    def as_dict(self) -> dict:
        return {
            "status": str(self.status),
            "value": self.value,
            "z_E": self.z_E.tolist(),
            "z_j": self.z_j.tolist(),
            "mu": self.mu.tolist(),
            "kkt_residual": self.kkt_residual,
            "constraint_residuals": self.constraint_residuals.tolist(),
            "iterations": self.iterations,
            "polish_iterations": self.polish_iterations,
        }


class _Side:
    """One smoothed constraint ``c(z)`` with cached affine data when possible."""

    def __init__(self, s: ConvexSet, lam):
        self.s = s
        self.lam = lam
        self.eps = s.epsilon
        self.thr = s.threshold
        if s.affine:
            self.J = s.jacobian_x(np.zeros(s.dim), lam)
            self.r = s.values(np.zeros(s.dim), lam)
        else:
            self.J = None

    def F(self, z):
        return self.J @ z + self.r if self.J is not None else self.s.values(z, self.lam)

    def value(self, z):
        return lse_eps_plus_value(self.F(z), self.eps) - self.thr

    def full(self, z):
        """``(c, grad c, hess c)`` at ``z``."""
        if self.J is not None:
            e = lse_eps_plus(self.J @ z + self.r, self.eps)
            return e.value - self.thr, self.J.T @ e.gradient, self.J.T @ e.hessian @ self.J
        ev = self.s.evaluate(z, self.lam)
        e = lse_eps_plus(ev.F, self.eps)
        hess = ev.dF_dx.T @ e.hessian @ ev.dF_dx + np.einsum("k,kij->ij", e.gradient, ev.d2F_dx2)
        return e.value - self.thr, ev.dF_dx.T @ e.gradient, hess


def _bounding_radius(s: ConvexSet) -> Optional[float]:
    """Radius about ``x_c`` enclosing ``S_eps^+`` (rigid polytopes only)."""
    if not isinstance(s, RigidPolytope):
        return None
    cached = getattr(s, "_smoothed_radius", None)
    if cached is None:
        from .sets import polygon_vertices
        # S_eps^+ lies inside {max F <= log(q)/eps}
        pad = s.threshold
        cached = float(np.linalg.norm(polygon_vertices(s.A, s.b + pad), axis=1).max())
        s._smoothed_radius = cached
    return cached


def _common_point(a: _Side, b: _Side, x0, kappas=(1.0, 10.0, 100.0, 1e3, 1e4),
                  iters_per_stage=40):
    """Search for ``x`` with ``c_a(x) < 0`` and ``c_b(x) < 0``.

    Damped Newton on the smooth maximum ``(1/k) log(e^{k c_a} + e^{k c_b})``
    with continuation in ``k``; returns the first jointly feasible iterate
    or ``None``.
    """
    x = np.asarray(x0, dtype=float).copy()
    n = x.size
    for kap in kappas:
        for _ in range(iters_per_stage):
            ca, ga, Ha = a.full(x)
            cb, gb, Hb = b.full(x)
            if max(ca, cb) < 0:
                return x
            m = max(ca, cb)
            wa, wb = np.exp(kap * (ca - m)), np.exp(kap * (cb - m))
            s = wa + wb
            wa, wb = wa / s, wb / s
            g = wa * ga + wb * gb
            dg = ga - gb
            H = wa * Ha + wb * Hb + kap * wa * wb * np.outer(dg, dg)
            try:
                step = -np.linalg.solve(H + 1e-14 * np.eye(n), g)
            except np.linalg.LinAlgError:
                return None
            slope = g @ step
            if -slope < 1e-14:
                break
            phi0 = m + np.log(s) / kap

            def phi(y):
                va, vb = a.value(y), b.value(y)
                mm = max(va, vb)
                return mm + np.log(np.exp(kap * (va - mm)) + np.exp(kap * (vb - mm))) / kap

            t = 1.0
            while t > 1e-10:
                xn = x + t * step
                if phi(xn) <= phi0 + 1e-4 * t * slope:
                    break
                t *= 0.5
            else:
                break
            x = xn
    ca, cb = a.value(x), b.value(x)
    return x if max(ca, cb) < 0 else None


def _kkt_parts(sE: _Side, sJ: _Side, zE, zj, mu):
    cE, gE, HE = sE.full(zE)
    cJ, gJ, HJ = sJ.full(zj)
    diff = zE - zj
    stat = np.concatenate([diff + mu[0] * gE, -diff + mu[1] * gJ])
    return np.array([cE, cJ]), stat, (gE, HE, gJ, HJ)


def _kkt_residual(stat, c, mu):
    return float(max(np.abs(stat).max(), np.abs(mu * c).max(), max(c.max(), 0.0)))


def _robust_solve(K, rhs):
    """LU solve, falling back to a minimum-norm least-squares step.

    Parallel flat faces make the KKT matrix numerically singular along the
    joint sliding direction, which leaves the distance unchanged.
    """
    try:
        x = np.linalg.solve(K, rhs)
        if np.isfinite(x).all() and np.abs(x).max() < 1e6 * (1.0 + np.abs(rhs).max()):
            return x
    except np.linalg.LinAlgError:
        pass
    x = np.linalg.lstsq(K, rhs, rcond=1e-13)[0]
    return x if np.isfinite(x).all() else None


def _polish(sE, sJ, zE, zj, mu, iters):
    """Newton on ``[grad_z L; c_E; c_J] = 0`` (both constraints as equalities)."""
    n = zE.size
    c, stat, (gE, HE, gJ, HJ) = _kkt_parts(sE, sJ, zE, zj, mu)
    res = np.concatenate([stat, c])
    best = np.abs(res).max()
    used = 0
    for _ in range(iters):
        if best < 1e-15:
            break
        K = np.zeros((2 * n + 2, 2 * n + 2))
        I = np.eye(n)
        K[:n, :n] = I + mu[0] * HE
        K[:n, n:2 * n] = -I
        K[n:2 * n, :n] = -I
        K[n:2 * n, n:2 * n] = I + mu[1] * HJ
        K[:n, 2 * n] = gE
        K[n:2 * n, 2 * n + 1] = gJ
        K[2 * n, :n] = gE
        K[2 * n + 1, n:2 * n] = gJ
        step = _robust_solve(K, -res)
        if step is None:
            break
        zE_n, zj_n, mu_n = zE + step[:n], zj + step[n:2 * n], mu + step[2 * n:]
        if not np.isfinite(step).all() or (mu_n <= 0).any():
            break
        c_n, stat_n, parts_n = _kkt_parts(sE, sJ, zE_n, zj_n, mu_n)
        res_n = np.concatenate([stat_n, c_n])
        r_n = np.abs(res_n).max()
        if not r_n < best:
            break
        zE, zj, mu, res, best = zE_n, zj_n, mu_n, res_n, r_n
        gE, HE, gJ, HJ = parts_n
        used += 1
    return zE, zj, mu, used


def _finish(sE, sJ, zE, zj, mu, iterations, polish_used, opts) -> DistanceSolution:
    c, stat, _ = _kkt_parts(sE, sJ, zE, zj, mu)
    kkt = _kkt_residual(stat, c, mu)
    value = 0.5 * float((zE - zj) @ (zE - zj))
    ok = (kkt <= opts.kkt_tol and np.abs(c).max() <= opts.activity_tol
          and mu.min() >= opts.mu_min)
    status = Status.OPTIMAL if ok else Status.NUMERICAL_FAILURE
    return DistanceSolution(zE, zj, mu, value, kkt, c, iterations, status, polish_used)


def _intersecting(x, iterations=0) -> DistanceSolution:
    return DistanceSolution(x.copy(), x.copy(), np.zeros(2), 0.0, 0.0,
                            np.zeros(2), iterations, Status.INTERSECTING)


def smoothed_sets_intersect(problem: DistanceProblem) -> Optional[np.ndarray]:
    """Return a point strictly inside both smoothed sets, or ``None``."""
    sE = _Side(problem.ego, problem.lam_E)
    sJ = _Side(problem.obstacle, problem.lam_j)
    rE, rJ = _bounding_radius(problem.ego), _bounding_radius(problem.obstacle)
    if rE is not None and rJ is not None:
        if np.linalg.norm(problem.lam_E[:2] - problem.lam_j[:2]) > rE + rJ:
            return None
    zE = find_interior_point(problem.ego, problem.lam_E, smoothed=True)
    zj = find_interior_point(problem.obstacle, problem.lam_j, smoothed=True)
    return _common_point(sE, sJ, 0.5 * (zE + zj))


def solve_distance(problem: DistanceProblem, opts: Optional[SolverOptions] = None, *,
                   init=None, warm_start=None) -> DistanceSolution:
    """Solve the smoothed distance program.

    ``init=(z_E, z_j)`` overrides the phase-I start (must be strictly
    feasible). ``warm_start=(z_E, z_j, mu)`` first tries a pure KKT polish
    from a nearby primal-dual point and falls back to a cold solve when
    that does not certify optimality.
    """
    opts = opts or SolverOptions()
    sE = _Side(problem.ego, problem.lam_E)
    sJ = _Side(problem.obstacle, problem.lam_j)

    if warm_start is not None:
        zE, zj, mu = (np.asarray(v, dtype=float).copy() for v in warm_start)
        if (mu > 0).all() and np.linalg.norm(zE - zj) > 0:
            zE, zj, mu, used = _polish(sE, sJ, zE, zj, mu, max(opts.polish_iters, 3))
            sol = _finish(sE, sJ, zE, zj, mu, 0, used, opts)
            if sol.optimal and sol.value > 0:
                return sol

    if init is not None:
        zE, zj = (np.asarray(v, dtype=float).copy() for v in init)
        if not (sE.value(zE) < 0 and sJ.value(zj) < 0):
            raise InvalidInput("initial points are not strictly feasible")
    else:
        zE = find_interior_point(problem.ego, problem.lam_E, smoothed=True)
        zj = find_interior_point(problem.obstacle, problem.lam_j, smoothed=True)

    rE, rJ = _bounding_radius(problem.ego), _bounding_radius(problem.obstacle)
    far_apart = (rE is not None and rJ is not None
                 and np.linalg.norm(problem.lam_E[:2] - problem.lam_j[:2]) > rE + rJ)
    if not far_apart:
        common = _common_point(sE, sJ, 0.5 * (zE + zj))
        if common is not None:
            return _intersecting(common)

    n = zE.size
    z = np.concatenate([zE, zj])
    t = opts.t0
    iterations = 0

    def barrier(zz, tt):
        cE = sE.value(zz[:n])
        cJ = sJ.value(zz[n:])
        if not (cE < 0 and cJ < 0):
            return np.inf
        d = zz[:n] - zz[n:]
        return tt * 0.5 * d @ d - np.log(-cE) - np.log(-cJ)

    while True:
        # centering
        prev_dec = None
        while True:
            if iterations >= opts.max_iter:
                mu = np.array([1.0 / (t * -sE.value(z[:n])), 1.0 / (t * -sJ.value(z[n:]))])
                sol = _finish(sE, sJ, z[:n], z[n:], mu, iterations, 0, opts)
                return DistanceSolution(**{**sol.__dict__, "status": Status.MAX_ITERATIONS})
            cE, gE, HE = sE.full(z[:n])
            cJ, gJ, HJ = sJ.full(z[n:])
            d = z[:n] - z[n:]
            grad = np.concatenate([t * d - gE / cE, -t * d - gJ / cJ])
            H = np.empty((2 * n, 2 * n))
            I = np.eye(n)
            H[:n, :n] = t * I + HE / -cE + np.outer(gE, gE) / cE ** 2
            H[n:, n:] = t * I + HJ / -cJ + np.outer(gJ, gJ) / cJ ** 2
            H[:n, n:] = -t * I
            H[n:, :n] = -t * I
            # the objective is flat along joint translations (v, v); barrier
            # curvature there can underflow deep inside the sets
            H[np.diag_indices(2 * n)] += 1e-10 * (1.0 + t)
            try:
                step = -np.linalg.solve(H, grad)
            except np.linalg.LinAlgError:
                return _failure(z, n, iterations)
            if not np.isfinite(step).all():
                return _failure(z, n, iterations)
            dec = -grad @ step
            if dec / 2 <= opts.center_tol:
                break
            if _TRACE is not None:
                _TRACE.append((t, iterations, dec))
            if prev_dec is not None and dec >= prev_dec * 0.999 and dec / 2 <= 1e-6:
                break  # decrement stuck at the rounding floor of the barrier
            prev_dec = dec
            f0 = barrier(z, t)
            s = 1.0
            while s >= 1e-14:
                zn = z + s * step
                if barrier(zn, t) <= f0 + opts.armijo * s * (grad @ step):
                    break
                s *= 0.5
            else:
                # Armijo can stall at the rounding level of a large barrier value
                if dec / 2 <= 1e-9 * max(1.0, abs(f0)):
                    break
                return _failure(z, n, iterations)
            z = zn
            iterations += 1
        # any KKT point with mu > 0 and both constraints active is the global
        # optimum of this convex program, so a successful polish ends early
        zE, zj = z[:n].copy(), z[n:].copy()
        mu = np.array([1.0 / (t * -sE.value(zE)), 1.0 / (t * -sJ.value(zj))])
        zE, zj, mu, used = _polish(sE, sJ, zE, zj, mu, opts.polish_iters)
        sol = _finish(sE, sJ, zE, zj, mu, iterations, used, opts)
        if sol.optimal:
            return sol
        if 2.0 / t <= opts.gap_tol:
            break
        t *= opts.t_factor

    zE, zj = z[:n].copy(), z[n:].copy()
    mu = np.array([1.0 / (t * -sE.value(zE)), 1.0 / (t * -sJ.value(zj))])
    zE, zj, mu, used = _polish(sE, sJ, zE, zj, mu, opts.polish_iters)
    sol = _finish(sE, sJ, zE, zj, mu, iterations, used, opts)
    if not sol.optimal and sol.value < 1e-14:
        return _intersecting(0.5 * (zE + zj), iterations)
    return sol


def _failure(z, n, iterations) -> DistanceSolution:
    zE, zj = z[:n].copy(), z[n:].copy()
    return DistanceSolution(zE, zj, np.zeros(2), 0.5 * float((zE - zj) @ (zE - zj)),
                            np.inf, np.full(2, np.nan), iterations, Status.NUMERICAL_FAILURE)
