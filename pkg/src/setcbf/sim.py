"""Closed-loop multi-agent simulation with per-agent safety filters.

Every tick, each agent treats all other agents' smoothed bodies as unsafe
sets, builds one barrier row per neighbour, filters its go-to-goal input
through the QP and integrates. All agents act on the same tick's poses.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .cbf import QPStatus, assemble_rows, solve_filter_qp
from .config import SimConfig
from .distance import DistanceProblem, Status, solve_distance
from .dynamics import UnicycleAgent, integrate_step, unicycle_transform
from .errors import ConfigError, SetCBFError
from .sensitivity import distance_gradient

OPTIMAL = "Optimal"
INFEASIBLE = "Infeasible"
UNSAFE = "Unsafe"
NUMERICAL_FAILURE = "NumericalFailure"
BAD_STATUSES = (INFEASIBLE, UNSAFE, NUMERICAL_FAILURE)
RATE_SPIKE = 100.0       # |du|/dt above this is reported as a possible loss of Lipschitzness

log = logging.getLogger(__name__)


@dataclass
class SimTrace:
    config: SimConfig
    agent_ids: list
    t: np.ndarray            # (K,)
    lam: np.ndarray          # (K, n, 3) pose at each tick
    vw: np.ndarray           # (K, n, 2) applied (v, omega)
    u: np.ndarray            # (K, n, 2) applied linearized input
    u_nom: np.ndarray        # (K, n, 2)
    h_min: np.ndarray        # (K, n), inf when an agent has no neighbours
    status: list             # K lists of n status strings
    pair_h: dict             # (agent id, obstacle id) -> (K,) barrier values
    timings: dict = field(default_factory=dict)

    @property
    def n_ticks(self) -> int:
        return self.t.size

    def bad_ticks(self) -> int:
        return sum(s in BAD_STATUSES for row in self.status for s in row)

    def input_rate(self) -> np.ndarray:
        """``|u(t_k) - u(t_{k-1})| / dt`` per agent, shape (K-1, n)."""
        return np.linalg.norm(np.diff(self.u, axis=0), axis=2) / np.diff(self.t)[:, None]

    def rate_spikes(self, threshold: float = RATE_SPIKE) -> list:
        """(tick, agent id, rate) wherever the input rate exceeds ``threshold``."""
        r = self.input_rate()
        return [(int(k) + 1, self.agent_ids[i], float(r[k, i]))
                for k, i in zip(*np.nonzero(r > threshold))]


def _agent_sets(cfg: SimConfig):
    return [a.shape.build(cfg.agent_epsilon(a)) for a in cfg.agents]


def check_initial_disjoint(cfg: SimConfig):
    sets = _agent_sets(cfg)
    lam = [np.array(a.initial) for a in cfg.agents]
    for i in range(len(sets)):
        for k in range(i + 1, len(sets)):
            sol = solve_distance(DistanceProblem(sets[i], sets[k], lam[i], lam[k]))
            if not (sol.optimal and sol.value > 0):
                raise ConfigError(
                    f"agents {cfg.agents[i].id!r} and {cfg.agents[k].id!r} are not disjoint "
                    f"at t0 (distance status {sol.status})", "agents")


def run_simulation(cfg: SimConfig) -> SimTrace:
    check_initial_disjoint(cfg)
    n = len(cfg.agents)
    K = cfg.n_ticks
    sets = _agent_sets(cfg)
    bodies = [UnicycleAgent(np.array(a.initial), a.b) for a in cfg.agents]
    dyns = [b.dynamics() for b in bodies]
    ids = [a.id for a in cfg.agents]
    goals = [np.array(a.goal) for a in cfg.agents]
    barrier = cfg.barrier

    lam = np.array([a.initial for a in cfg.agents], dtype=float)
    trace = SimTrace(cfg, ids, np.arange(K) * cfg.dt, np.zeros((K, n, 3)),
                     np.zeros((K, n, 2)), np.zeros((K, n, 2)), np.zeros((K, n, 2)),
                     np.full((K, n), np.inf), [],
                     {(ids[i], ids[k]): np.full(K, np.nan)
                      for i in range(n) for k in range(n) if i != k})
    clock = dict.fromkeys(("distance", "sensitivity", "qp", "integrate"), 0.0)
    warm = {}
    lam_dot = np.zeros((n, 3))

    for tick in range(K):
        trace.lam[tick] = lam
        # one solve per unordered pair; the distance is symmetric in the roles
        grads, hval, failed = {}, {}, set()
        for i in range(n):
            for k in range(i + 1, n):
                prob = DistanceProblem(sets[i], sets[k], lam[i], lam[k])
                t0 = time.perf_counter()
                sol = solve_distance(prob, warm_start=warm.get((i, k)))
                clock["distance"] += time.perf_counter() - t0
                if sol.status is Status.INTERSECTING:
                    hval[i, k] = -barrier.R
                    warm.pop((i, k), None)
                    continue
                if not sol.optimal:
                    failed.update((i, k))
                    warm.pop((i, k), None)
                    continue
                warm[i, k] = (sol.z_E, sol.z_j, sol.mu)
                hval[i, k] = sol.value - barrier.R
                t0 = time.perf_counter()
                try:
                    g = distance_gradient(prob, sol)
                except SetCBFError:
                    failed.update((i, k))
                    continue
                finally:
                    clock["sensitivity"] += time.perf_counter() - t0
                grads[i, k] = (g.d_dlambdaE, g.d_dlambdaJ)

        statuses, prepared = [], {}
        for i in range(n):
            x_c = lam[i, :2]
            u_nom = -cfg.agents[i].k_u * (x_c - goals[i])
            trace.u_nom[tick, i] = u_nom
            others = [k for k in range(n) if k != i]
            hs = []
            for k in others:
                key = (i, k) if i < k else (k, i)
                if key in hval:
                    trace.pair_h[ids[i], ids[k]][tick] = hval[key]
                    hs.append(hval[key])
            if hs:
                trace.h_min[tick, i] = min(hs)
            if i in failed:
                statuses.append(NUMERICAL_FAILURE)
            elif any(((i, k) if i < k else (k, i)) not in grads for k in others):
                # an intersecting pair has no gradient to build a row from
                statuses.append(UNSAFE)
            else:
                statuses.append(UNSAFE if hs and min(hs) <= 0 else OPTIMAL)
                gE, gJ, hrow = [], [], []
                for k in others:
                    a, b = grads[(i, k)] if i < k else grads[(k, i)][::-1]
                    gE.append(a)
                    gJ.append(b)
                    hrow.append(hval[(i, k) if i < k else (k, i)])
                prepared[i] = (u_nom, others, gE, gJ, hrow)

        t0 = time.perf_counter()
        if cfg.lam_dot_mode == "oracle":
            u_all, qp_ok = _consistent_inputs(prepared, dyns, lam, barrier, ids, n,
                                              trace.u[tick - 1] if tick else None)
        elif cfg.lam_dot_mode == "zero":
            u_all, qp_ok = _filter_inputs(prepared, dyns, lam, barrier, ids, n,
                                          np.zeros((n, 3)))
        else:
            u_all, qp_ok = _filter_inputs(prepared, dyns, lam, barrier, ids, n, lam_dot)
        clock["qp"] += time.perf_counter() - t0
        for i in range(n):
            if i in prepared and not qp_ok[i]:
                statuses[i] = INFEASIBLE
            trace.u[tick, i] = u_all[i]
            trace.vw[tick, i] = unicycle_transform(lam[i, 2], bodies[i].b) @ u_all[i]
        trace.status.append(statuses)

        if tick == K - 1:
            break
        t0 = time.perf_counter()
        new = np.array([integrate_step(dyns[i], lam[i], trace.u[tick, i], cfg.dt,
                                       cfg.integrator) for i in range(n)])
        clock["integrate"] += time.perf_counter() - t0
        lam_dot = (new - lam) / cfg.dt
        lam = new

    trace.timings = clock
    spikes = trace.rate_spikes()
    if spikes:
        k, aid, r = max(spikes, key=lambda e: e[2])
        log.warning("input rate above %g on %d agent-ticks (worst %.3g at tick %d, agent %s)",
                    RATE_SPIKE, len(spikes), r, k, aid)
    return trace


FIXED_POINT_ITERS = 500
FIXED_POINT_TOL = 1e-10
FIXED_POINT_DAMPING = 0.5


def _filter_inputs(prepared, dyns, lam, barrier, ids, n, lam_dot):
    """Each agent's QP with neighbour rates taken from ``lam_dot``."""
    u = np.zeros((n, 2))
    ok = [True] * n
    for i, (u_nom, others, gE, gJ, hrow) in prepared.items():
        rows = assemble_rows(gE, gJ, hrow, dyns[i].f(lam[i]), dyns[i].g(lam[i]),
                             [lam_dot[k] for k in others], barrier,
                             obstacle_ids=[ids[k] for k in others])
        res = solve_filter_qp(u_nom, rows)
        u[i] = res.u
        ok[i] = res.status is QPStatus.OPTIMAL
    return u, ok


def _consistent_inputs(prepared, dyns, lam, barrier, ids, n, u_prev):
    """Inputs for which every agent's QP uses its neighbours' actual rates.

    Damped fixed-point iteration on ``u -> QP(u)``; the plain iteration
    oscillates when two agents share one constraint.
    """
    u = np.zeros((n, 2)) if u_prev is None else u_prev.copy()
    for i in range(n):
        if i not in prepared:
            u[i] = 0.0
    for _ in range(FIXED_POINT_ITERS):
        rates = np.array([dyns[k].rate(lam[k], u[k]) for k in range(n)])
        best, ok = _filter_inputs(prepared, dyns, lam, barrier, ids, n, rates)
        step = np.abs(best - u).max()
        u = u + FIXED_POINT_DAMPING * (best - u)
        if step <= FIXED_POINT_TOL:
            break
    return best, ok
