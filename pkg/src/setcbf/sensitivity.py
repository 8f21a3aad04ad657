"""Gradient of the smoothed distance with respect to both sets' parameters.

The optimal primal-dual point ``nu = (z_E, z_j, mu)`` is defined implicitly
by ``G(nu, theta) = [grad_z L; diag(mu) c] = 0`` with ``theta = (lam_E,
lam_j)``. Differentiating gives ``dnu/dtheta = -(dG/dnu)^{-1} dG/dtheta``
and the chain rule ``dd/dtheta = (z_E - z_j)^T (dz_E/dtheta - dz_j/dtheta)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgWarning, lapack, lu_factor, lu_solve

from .distance import DistanceProblem, DistanceSolution, Status
from .errors import InvalidInput, SingularJacobian
from .lse import lse_eps_plus

COND_MAX = 1e12


@dataclass(frozen=True)
class KktSystem:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    G_theta: np.ndarray
    z_E: np.ndarray
    z_j: np.ndarray
    mu: np.ndarray
    # dc/dtheta per constraint; mu @ dc_dtheta equals dd/dtheta at the optimum
    dc_dtheta: np.ndarray
    m_E: int

    @property
    def jacobian(self) -> np.ndarray:
        """``dG/dnu`` with the activity block ``D`` replaced by zeros."""
        k = self.B.shape[0]
        top = np.hstack([self.A, self.B.T])
        bottom = np.hstack([self.C @ self.B, np.zeros((k, k))])
        return np.vstack([top, bottom])


@dataclass(frozen=True)
class DistanceGradient:
    d_dlambdaE: np.ndarray
    d_dlambdaJ: np.ndarray
    condition_estimate: float
    degenerate: bool = False

    @property
    def full(self) -> np.ndarray:
        return np.concatenate([self.d_dlambdaE, self.d_dlambdaJ])


def _side_blocks(s, z, lam):
    """``(grad c, hess c, dc/dlam, d(grad c)/dlam)`` for one smoothed constraint."""
    ev = s.evaluate(z, lam)
    e = lse_eps_plus(ev.F, s.epsilon)
    p, H = e.gradient, e.hessian
    J, Jl = ev.dF_dx, ev.dF_dlam
    grad = J.T @ p
    hess = J.T @ H @ J + np.einsum("k,kij->ij", p, ev.d2F_dx2)
    dc = p @ Jl
    dgrad = J.T @ H @ Jl + np.einsum("k,kij->ij", p, ev.d2F_dxdlam)
    c = e.value - s.threshold
    return c, grad, hess, dc, dgrad


def assemble_kkt_system(problem: DistanceProblem, sol: DistanceSolution) -> KktSystem:
    if sol.status is not Status.OPTIMAL:
        raise InvalidInput(f"sensitivity needs an Optimal solution, got {sol.status}")
    n = problem.dim
    mE, mJ = problem.ego.param_dim, problem.obstacle.param_dim
    cE, gE, HE, dcE, dgE = _side_blocks(problem.ego, sol.z_E, problem.lam_E)
    cJ, gJ, HJ, dcJ, dgJ = _side_blocks(problem.obstacle, sol.z_j, problem.lam_j)
    mu1, mu2 = sol.mu
    I = np.eye(n)
    A = np.block([[I + mu1 * HE, -I], [-I, I + mu2 * HJ]])
    B = np.zeros((2, 2 * n))
    B[0, :n] = gE
    B[1, n:] = gJ
    Gt = np.zeros((2 * n + 2, mE + mJ))
    Gt[:n, :mE] = mu1 * dgE
    Gt[n:2 * n, mE:] = mu2 * dgJ
    Gt[2 * n, :mE] = mu1 * dcE
    Gt[2 * n + 1, mE:] = mu2 * dcJ
    dc = np.zeros((2, mE + mJ))
    dc[0, :mE] = dcE
    dc[1, mE:] = dcJ
    return KktSystem(A, B, np.diag(sol.mu), np.diag([cE, cJ]), Gt,
                     sol.z_E.copy(), sol.z_j.copy(), sol.mu.copy(), dc, mE)


def _condition_1norm(K, lu) -> float:
    anorm = np.abs(K).sum(axis=0).max()
    rcond, info = lapack.dgecon(lu[0], anorm, norm="1")
    if info != 0 or rcond <= 0:
        return np.inf
    return 1.0 / rcond


def solve_sensitivity(k: KktSystem, cond_max: float = COND_MAX):
    """Return ``(dnu/dtheta, DistanceGradient)``.

    Parallel flat faces leave the Jacobian numerically singular only along
    joint sliding of both optimal points, a direction that does not change
    the distance; such systems are solved in the least-squares sense and
    flagged ``degenerate`` provided the resulting gradient agrees with the
    multiplier identity ``dd/dtheta = mu . dc/dtheta``. Any other
    ill-conditioned system raises :class:`SingularJacobian`.
    """
    K = k.jacobian
    if not np.isfinite(K).all() or not np.isfinite(k.G_theta).all():
        raise SingularJacobian("non-finite KKT data")
    n = k.z_E.size
    mE = k.m_E
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        lu = lu_factor(K, check_finite=False)
    cond = _condition_1norm(K, lu)
    degenerate = not cond < cond_max
    if degenerate:
        dnu = -np.linalg.lstsq(K, k.G_theta, rcond=1e-13)[0]
    else:
        dnu = -lu_solve(lu, k.G_theta, check_finite=False)
    diff = k.z_E - k.z_j
    grad = diff @ (dnu[:n] - dnu[n:2 * n])
    if degenerate:
        reference = k.mu @ k.dc_dtheta
        scale = max(1.0, np.abs(reference).max())
        if not (np.isfinite(grad).all() and np.abs(grad - reference).max() <= 1e-6 * scale):
            raise SingularJacobian(f"KKT Jacobian singular to tolerance (cond ~ {cond:.3g})")
    return dnu, DistanceGradient(grad[:mE].copy(), grad[mE:].copy(), float(cond), degenerate)


def distance_gradient(problem: DistanceProblem, sol: DistanceSolution) -> DistanceGradient:
    return solve_sensitivity(assemble_kkt_system(problem, sol))[1]
