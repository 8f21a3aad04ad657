"""Simulation configuration: YAML in, validated dataclasses out.

Schema (unknown keys are rejected)::

    epsilon: 20.0              # default smoothing for every agent body
    margin_distance: 0.2       # or R: 0.02 (squared-length units), not both
    alpha: {kind: linear, gamma: 1.0}
    dt: 0.02
    t_final: 25.0
    lam_dot_mode: oracle       # oracle | finite-difference | zero
    integrator: rk4            # rk4 | euler
    seed: 0
    output: {dir: out/run}
    agents:
      - id: north
        shape: {type: box, half_width: 0.5, half_height: 0.4}
        # or {type: polygon, sides: 6, radius: 0.6, phase: 0.0}
        # or {type: halfspaces, A: [[1, 0], ...], b: [1, ...]}
        initial: [0.0, 4.0, -1.5708]
        goal: [0.0, -4.0]
        k_u: 1.0               # optional, default 1
        b: 0.25                # optional, default 0.25
        epsilon: 20.0          # optional per-agent override
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .cbf import BarrierConfig, ClassK
from .dynamics import DEFAULT_DT, DEFAULT_OFFSET, EULER, RK4
from .errors import ConfigError, InvalidInput
from .sets import RigidPolytope, box, regular_polygon

LAM_DOT_MODES = ("oracle", "finite-difference", "zero")


@dataclass(frozen=True)
class ShapeSpec:
    type: str
    params: dict

    def build(self, epsilon: float) -> RigidPolytope:
        p = self.params
        if self.type == "box":
            return box(p["half_width"], p.get("half_height"), epsilon)
        if self.type == "polygon":
            return regular_polygon(int(p["sides"]), p["radius"], epsilon, p.get("phase", 0.0))
        return RigidPolytope(p["A"], p["b"], epsilon)

    def as_dict(self):
        return {"type": self.type, **self.params}


@dataclass(frozen=True)
class AgentSpec:
    id: str
    shape: ShapeSpec
    initial: tuple
    goal: tuple
    k_u: float = 1.0
    b: float = DEFAULT_OFFSET
    epsilon: Optional[float] = None


@dataclass(frozen=True)
class SimConfig:
    agents: tuple
    epsilon: float = 20.0
    R: float = 0.0
    margin_distance: Optional[float] = None
    alpha: ClassK = field(default_factory=ClassK)
    dt: float = DEFAULT_DT
    t_final: float = 25.0
    lam_dot_mode: str = "oracle"
    integrator: str = RK4
    seed: int = 0
    output_dir: Optional[str] = None

    def __post_init__(self):
        if not self.agents:
            raise ConfigError("at least one agent is required", "agents")
        ids = [a.id for a in self.agents]
        for i in ids:
            if ids.count(i) > 1:
                raise ConfigError(f"duplicate agent id {i!r}", "agents.id")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ConfigError("must be positive", "dt")
        if not (math.isfinite(self.t_final) and self.t_final >= self.dt):
            raise ConfigError("must be at least dt", "t_final")
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise ConfigError("must be positive", "epsilon")
        if not self.R >= 0:
            raise ConfigError("must be nonnegative", "R")
        if self.lam_dot_mode not in LAM_DOT_MODES:
            raise ConfigError(f"must be one of {LAM_DOT_MODES}", "lam_dot_mode")
        if self.integrator not in (RK4, EULER):
            raise ConfigError("must be rk4 or euler", "integrator")

    @property
    def n_ticks(self) -> int:
        """Ticks including ``t = 0``: ``floor(t_final / dt) + 1``."""
        return int(math.floor(self.t_final / self.dt + 1e-9)) + 1

    @property
    def barrier(self) -> BarrierConfig:
        return BarrierConfig(self.R, self.alpha)

    def agent_epsilon(self, a: AgentSpec) -> float:
        return self.epsilon if a.epsilon is None else a.epsilon

    def replace(self, **kw) -> "SimConfig":
        return dataclasses.replace(self, **kw)

    def as_dict(self) -> dict:
        out = {
            "epsilon": self.epsilon,
            "alpha": {"kind": self.alpha.kind, "gamma": self.alpha.gamma},
            "dt": self.dt, "t_final": self.t_final, "lam_dot_mode": self.lam_dot_mode,
            "integrator": self.integrator, "seed": self.seed,
            "agents": [{"id": a.id, "shape": a.shape.as_dict(), "initial": list(a.initial),
                        "goal": list(a.goal), "k_u": a.k_u, "b": a.b,
                        **({"epsilon": a.epsilon} if a.epsilon is not None else {})}
                       for a in self.agents],
        }
        if self.margin_distance is not None:
            out["margin_distance"] = self.margin_distance
        else:
            out["R"] = self.R
        return out


_TOP_KEYS = {"agents", "epsilon", "R", "margin_distance", "alpha", "dt", "t_final",
             "lam_dot_mode", "integrator", "seed", "output"}
_AGENT_KEYS = {"id", "shape", "initial", "goal", "k_u", "b", "epsilon"}
_SHAPE_KEYS = {"box": ({"half_width"}, {"half_height"}),
               "polygon": ({"sides", "radius"}, {"phase"}),
               "halfspaces": ({"A", "b"}, set())}


def _reject_unknown(d, allowed, where):
    if not isinstance(d, dict):
        raise ConfigError("expected a mapping", where or "<root>")
    extra = sorted(set(d) - set(allowed))
    if extra:
        path = f"{where}.{extra[0]}" if where else extra[0]
        raise ConfigError("unknown key", path)


def _number(v, where, positive=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"expected a number, got {v!r}", where)
    v = float(v)
    if not math.isfinite(v) or (positive and v <= 0):
        raise ConfigError("must be a positive finite number" if positive
                          else "must be finite", where)
    return v


def _vector(v, n, where):
    if not isinstance(v, (list, tuple)) or len(v) != n:
        raise ConfigError(f"expected a list of {n} numbers", where)
    return tuple(_number(x, f"{where}[{k}]") for k, x in enumerate(v))


def _shape(d, where) -> ShapeSpec:
    if not isinstance(d, dict) or "type" not in d:
        raise ConfigError("shape needs a type", where)
    kind = d["type"]
    if kind not in _SHAPE_KEYS:
        raise ConfigError(f"unknown shape type {kind!r}", f"{where}.type")
    req, opt = _SHAPE_KEYS[kind]
    _reject_unknown(d, req | opt | {"type"}, where)
    for k in sorted(req - set(d)):
        raise ConfigError("missing", f"{where}.{k}")
    params = {}
    if kind == "halfspaces":
        try:
            A = np.asarray(d["A"], dtype=float)
            b = np.asarray(d["b"], dtype=float)
        except (TypeError, ValueError):
            raise ConfigError("A and b must be numeric arrays", where) from None
        if A.ndim != 2 or A.shape[1] != 2 or b.shape != (A.shape[0],):
            raise ConfigError("A must be q x 2 and b length q", where)
        params = {"A": A.tolist(), "b": b.tolist()}
    else:
        for k in sorted(req | opt):
            if k in d:
                params[k] = _number(d[k], f"{where}.{k}", positive=(k != "phase"))
        if kind == "polygon":
            if params["sides"] != int(params["sides"]) or params["sides"] < 3:
                raise ConfigError("must be an integer >= 3", f"{where}.sides")
            params["sides"] = int(params["sides"])
    spec = ShapeSpec(kind, params)
    try:
        spec.build(1.0)
    except InvalidInput as e:
        raise ConfigError(str(e), where) from None
    return spec


def parse_config(raw: dict) -> SimConfig:
    _reject_unknown(raw, _TOP_KEYS, "")
    if "agents" not in raw:
        raise ConfigError("missing", "agents")
    if "R" in raw and "margin_distance" in raw:
        raise ConfigError("give R or margin_distance, not both", "margin_distance")
    if not isinstance(raw["agents"], list):
        raise ConfigError("expected a list", "agents")
    agents = []
    for k, a in enumerate(raw["agents"]):
        where = f"agents[{k}]"
        _reject_unknown(a, _AGENT_KEYS, where)
        for key in ("id", "shape", "initial", "goal"):
            if key not in a:
                raise ConfigError("missing", f"{where}.{key}")
        agents.append(AgentSpec(
            id=str(a["id"]),
            shape=_shape(a["shape"], f"{where}.shape"),
            initial=_vector(a["initial"], 3, f"{where}.initial"),
            goal=_vector(a["goal"], 2, f"{where}.goal"),
            k_u=_number(a.get("k_u", 1.0), f"{where}.k_u", positive=True),
            b=_number(a.get("b", DEFAULT_OFFSET), f"{where}.b", positive=True),
            epsilon=(_number(a["epsilon"], f"{where}.epsilon", positive=True)
                     if "epsilon" in a else None),
        ))
    kw = {}
    for key in ("epsilon", "dt", "t_final"):
        if key in raw:
            kw[key] = _number(raw[key], key)
    margin = None
    if "margin_distance" in raw:
        margin = _number(raw["margin_distance"], "margin_distance")
        if margin < 0:
            raise ConfigError("must be nonnegative", "margin_distance")
        kw["R"] = 0.5 * margin * margin
    elif "R" in raw:
        kw["R"] = _number(raw["R"], "R")
    if "alpha" in raw:
        al = raw["alpha"]
        _reject_unknown(al, {"kind", "gamma"}, "alpha")
        try:
            kw["alpha"] = ClassK(al.get("kind", "linear"),
                                 _number(al.get("gamma", 1.0), "alpha.gamma"))
        except InvalidInput as e:
            raise ConfigError(str(e), "alpha") from None
    for key in ("lam_dot_mode", "integrator"):
        if key in raw:
            kw[key] = str(raw[key]).lower()
    if "seed" in raw:
        if isinstance(raw["seed"], bool) or not isinstance(raw["seed"], int):
            raise ConfigError("expected an integer", "seed")
        kw["seed"] = raw["seed"]
    if "output" in raw:
        _reject_unknown(raw["output"], {"dir"}, "output")
        kw["output_dir"] = raw["output"].get("dir")
    return SimConfig(agents=tuple(agents), margin_distance=margin, **kw)


def load_config(path) -> SimConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror}", "path") from None
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"YAML parse error: {e}", "path") from None
    return parse_config(raw if raw is not None else {})
