"""Log-sum-exp smooth maximum and its strictly convex, tightened variant.

``lse_eps_plus(x, eps)`` evaluates ``(1/eps) * log(1 + sum(exp(eps * x)))``
together with its gradient and Hessian. The implicit zero term makes the
function strictly convex and keeps it above ``max(0, max(x))``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput


@dataclass(frozen=True)
class SmoothMaxParams:
    epsilon: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.epsilon) or self.epsilon <= 0:
            raise InvalidInput(f"epsilon must be positive, got {self.epsilon}")


@dataclass(frozen=True)
class LseEval:
    value: float
    gradient: np.ndarray
    hessian: np.ndarray
    # value - max(0, max x) and 1 - sum(gradient), both free of cancellation
    excess: float = np.nan
    zero_weight: float = np.nan
    epsilon: float = np.nan


def _as_vector(x) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size == 0:
        raise InvalidInput("log-sum-exp of an empty vector")
    if np.isnan(x).any():
        raise InvalidInput("NaN entry in log-sum-exp input")
    return x


def lse(x) -> float:
    """Stable ``log(sum(exp(x)))``."""
    x = _as_vector(x)
    m = x.max()
    return float(m + np.log(np.exp(x - m).sum()))


def _epsilon(p) -> float:
    if isinstance(p, SmoothMaxParams):
        return p.epsilon
    return SmoothMaxParams(float(p)).epsilon


def lse_eps_plus_value(x, eps: float) -> float:
    """Value-only fast path of :func:`lse_eps_plus`."""
    x = np.asarray(x, dtype=float)
    y = eps * x
    k = int(np.argmax(y))
    if y[k] <= 0.0:
        return float(np.log1p(np.exp(y).sum()) / eps)
    w = np.exp(y - y[k])
    w[k] = np.exp(-y[k])
    return float(x[k] + np.log1p(w.sum()) / eps)


def lse_eps_plus(x, p=1.0) -> LseEval:
    """Evaluate LSE_eps^+ with gradient and dense Hessian.

    ``p`` is a :class:`SmoothMaxParams` or a bare positive epsilon.
    Gradient entries are the softmax weights of ``eps * x`` against the
    implicit zero term; they underflow to exactly 0 once
    ``eps * (x_i - m) < -745``.
    """
    x = _as_vector(x)
    eps = _epsilon(p)
    y = eps * x
    m = max(0.0, y.max())
    w0 = np.exp(-m)
    w = np.exp(y - m)
    s = w0 + w.sum()
    g = w / s
    # after the shift the largest term is exactly 1; sum the rest on its own so
    # the excess over max(0, max x) keeps its digits, and add it in x units
    one_minus = (s - w) / s
    if m == 0.0:
        top, rest = 0.0, w.sum()
    else:
        k = int(np.argmax(y))
        top, rest = x[k], w0 + np.delete(w, k).sum()
        one_minus[k] = rest / s
    hess = -eps * np.outer(g, g)
    # diagonal eps * g (1 - g) without forming 1 - g by subtraction
    hess[np.diag_indices_from(hess)] = eps * g * one_minus
    excess = float(np.log1p(rest) / eps)
    return LseEval(float(top + excess), g, hess, excess, float(w0 / s), eps)


def _secular_min(p, p0, eps, iters=200) -> float:
    """Smallest eigenvalue of ``eps * (diag(p) - p p^T)`` without cancellation.

    An eigenvalue ``mu < min(p)`` solves ``mu * sum(p / (p - mu)) = p0``
    where ``p0 = 1 - sum(p)`` is the weight of the implicit zero term. The
    left side increases on ``(0, min p)``, so bisect in log space.
    """
    pmin = p.min()
    lo, hi = np.log(p0 * pmin / (1 + p.size)) - 1.0, np.log(pmin)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        mu = np.exp(mid)
        if mu >= pmin or mu * (p / (p - mu)).sum() >= p0:
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-15:
            break
    return float(eps * np.exp(0.5 * (lo + hi)))


def hessian_min_eigenvalue(e) -> float:
    """Smallest eigenvalue of an :class:`LseEval` Hessian (or a bare matrix).

    For an :class:`LseEval` with positive weights the secular equation of the
    rank-one update is solved directly, which resolves eigenvalues far below
    the rounding level of a dense eigensolve.
    """
    if isinstance(e, LseEval) and e.zero_weight > 0 and (e.gradient > 0).all():
        return _secular_min(np.asarray(e.gradient, dtype=float), e.zero_weight, e.epsilon)
    h = np.asarray(e.hessian if isinstance(e, LseEval) else e, dtype=float)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise InvalidInput(f"expected a square matrix, got shape {h.shape}")
    if not np.isfinite(h).all():
        raise InvalidInput("non-finite Hessian")
    if np.abs(h - h.T).max(initial=0.0) > 1e-12:
        raise InvalidInput("Hessian is not symmetric")
    return float(np.linalg.eigvalsh(h)[0])
