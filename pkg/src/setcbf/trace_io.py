"""Trace persistence: CSV rows, per-pair barrier sidecar, run metadata."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import SimConfig, parse_config
from .errors import ConfigError, IoError
from .sim import RATE_SPIKE

CSV_HEADER = "t,agent_id,xc1,xc2,theta,v,omega,u1,u2,h_min,qp_status"
CSV_NAME = "trace.csv"
PAIRS_NAME = "pairs.json"
META_NAME = "metadata.json"


def _g(x) -> str:
    return "%.9g" % x


def trace_csv_text(trace) -> str:
    lines = [CSV_HEADER]
    for k in range(trace.n_ticks):
        for i, aid in enumerate(trace.agent_ids):
            x1, x2, th = trace.lam[k, i]
            v, w = trace.vw[k, i]
            u1, u2 = trace.u[k, i]
            lines.append(",".join([_g(trace.t[k]), aid, _g(x1), _g(x2), _g(th), _g(v), _g(w),
                                   _g(u1), _g(u2), _g(trace.h_min[k, i]),
                                   trace.status[k][i]]))
    return "\n".join(lines) + "\n"


def _write(path: Path, text: str):
    try:
        path.write_text(text)
    except OSError as e:
        raise IoError(f"cannot write {path}: {e.strerror}") from None


def _rate_summary(trace) -> dict:
    if trace.n_ticks < 2:
        return {}
    r = trace.input_rate()
    return {"input_rate": {"max": float(r.max()), "spike_threshold": RATE_SPIKE,
                           "spikes": [[k, a, round(v, 6)] for k, a, v in trace.rate_spikes()]}}


def write_trace(trace, out_dir, extra_meta=None) -> dict:
    """Write ``trace.csv``, ``pairs.json`` and ``metadata.json`` into ``out_dir``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise IoError(f"cannot create {out}: {e.strerror}") from None
    paths = {"csv": out / CSV_NAME, "pairs": out / PAIRS_NAME, "metadata": out / META_NAME}
    _write(paths["csv"], trace_csv_text(trace))
    pairs = {
        "t": [float(t) for t in trace.t],
        "pairs": [{"agent": a, "obstacle": o, "h": [float(h) for h in hs]}
                  for (a, o), hs in trace.pair_h.items()],
    }
    _write(paths["pairs"], json.dumps(pairs, indent=1) + "\n")
    meta = {
        "version": __version__,
        "config": trace.config.as_dict(),
        "n_ticks": trace.n_ticks,
        "agents": list(trace.agent_ids),
        "wall_clock_s": {k: round(v, 6) for k, v in trace.timings.items()},
        **_rate_summary(trace),
        **(extra_meta or {}),
    }
    _write(paths["metadata"], json.dumps(meta, indent=1, sort_keys=True) + "\n")
    return paths


@dataclass
class LoadedTrace:
    """A trace read back from disk, shaped like the in-memory one."""

    config: SimConfig
    agent_ids: list
    t: np.ndarray
    lam: np.ndarray
    vw: np.ndarray
    u: np.ndarray
    h_min: np.ndarray
    status: list
    pair_h: dict

    @property
    def n_ticks(self) -> int:
        return self.t.size


def read_trace(trace_dir) -> LoadedTrace:
    d = Path(trace_dir)
    try:
        meta = json.loads((d / META_NAME).read_text())
        pairs = json.loads((d / PAIRS_NAME).read_text())
        with open(d / CSV_NAME, newline="") as fh:
            header = fh.readline().strip()
            rows = list(csv.reader(fh))
    except OSError as e:
        raise IoError(f"cannot read trace in {d}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise IoError(f"corrupt trace sidecar in {d}: {e}") from None
    if header != CSV_HEADER:
        raise IoError(f"unexpected CSV header in {d / CSV_NAME}")
    try:
        cfg = parse_config(meta["config"])
    except (ConfigError, KeyError) as e:
        raise IoError(f"metadata does not hold a usable config: {e}") from None
    ids = list(meta["agents"])
    n, K = len(ids), len(rows) // max(len(ids), 1)
    if K * n != len(rows):
        raise IoError("CSV row count is not a multiple of the agent count")
    num = np.array([[float(r[k]) for k in (0, 2, 3, 4, 5, 6, 7, 8, 9)] for r in rows])
    num = num.reshape(K, n, 9)
    status = [[rows[k * n + i][10] for i in range(n)] for k in range(K)]
    pair_h = {(p["agent"], p["obstacle"]): np.array(p["h"], dtype=float)
              for p in pairs["pairs"]}
    return LoadedTrace(cfg, ids, num[:, 0, 0], num[:, :, 1:4], num[:, :, 4:6],
                       num[:, :, 6:8], num[:, :, 8], status, pair_h)
