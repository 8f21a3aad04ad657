"""Control-affine parameter dynamics and fixed-step integration.

Set parameters evolve as ``lam_dot = f(lam) + g(lam) u``. The unicycle is
driven through the offset output ``y = x_c + b (cos theta, sin theta)``,
whose rate equals the linearized input ``u``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidInput, NumericalFailure
from .sets import ParamVector, as_params

EULER = "euler"
RK4 = "rk4"
DEFAULT_OFFSET = 0.25
DEFAULT_DT = 0.02


@dataclass(frozen=True)
class ControlAffineDynamics:
    f: Callable
    g: Callable
    P_E: int

    def rate(self, lam, u) -> np.ndarray:
        lam = as_params(lam)
        return np.asarray(self.f(lam), dtype=float) + np.asarray(self.g(lam), dtype=float) @ u


def unicycle_transform(theta: float, b: float) -> np.ndarray:
    """Map the linearized input ``u = y_dot`` to ``(v, omega)``."""
    if not b > 0:
        raise InvalidInput("offset b must be positive")
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, s], [-s / b, c / b]])


def unicycle_kinematics(theta: float) -> np.ndarray:
    """``lam_dot`` as a function of ``(v, omega)``."""
    return np.array([[np.cos(theta), 0.0], [np.sin(theta), 0.0], [0.0, 1.0]])


@dataclass(frozen=True)
class UnicycleAgent:
    lam: np.ndarray
    b: float = DEFAULT_OFFSET

    def __post_init__(self):
        if not self.b > 0:
            raise InvalidInput("offset b must be positive")
        v = as_params(self.lam)
        if v.size != 3:
            raise InvalidInput("unicycle pose needs (x_c1, x_c2, theta)")
        object.__setattr__(self, "lam", v.copy())

    def output(self, lam=None) -> np.ndarray:
        x1, x2, th = self.lam if lam is None else as_params(lam)
        return np.array([x1 + self.b * np.cos(th), x2 + self.b * np.sin(th)])

    def dynamics(self) -> ControlAffineDynamics:
        b = self.b
        return ControlAffineDynamics(lambda lam: np.zeros(3),
                                     lambda lam: _modified_g(lam[2], b), 2)


def _modified_g(theta, b):
    return unicycle_kinematics(theta) @ unicycle_transform(theta, b)


def modified_g(agent: UnicycleAgent) -> np.ndarray:
    """3x2 input matrix taking the linearized input straight to ``lam_dot``."""
    return _modified_g(agent.lam[2], agent.b)


def integrate_step(dyn: ControlAffineDynamics, lam, u, dt: float,
                   method: str = RK4):
    """One explicit step with ``u`` held constant over ``dt``."""
    if not dt > 0:
        raise InvalidInput("dt must be positive")
    kind = lam.kind if isinstance(lam, ParamVector) else None
    x = as_params(lam)
    u = np.asarray(u, dtype=float).reshape(-1)
    method = method.lower()
    if method == EULER:
        out = x + dt * dyn.rate(x, u)
    elif method == RK4:
        k1 = dyn.rate(x, u)
        k2 = dyn.rate(x + 0.5 * dt * k1, u)
        k3 = dyn.rate(x + 0.5 * dt * k2, u)
        k4 = dyn.rate(x + dt * k3, u)
        out = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    else:
        raise InvalidInput(f"unknown integrator {method!r}")
    if not np.isfinite(out).all():
        raise NumericalFailure("integration produced non-finite parameters")
    return ParamVector(out, kind) if kind is not None else out
