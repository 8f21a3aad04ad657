"""Command-line entry point: simulate, distance, grad-check, render."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time

import numpy as np

from .config import load_config
from .errors import SetCBFError


def _override(cfg, args):
    kw = {}
    if args.dt is not None:
        kw["dt"] = args.dt
    if args.tf is not None:
        kw["t_final"] = args.tf
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.lam_dot_mode is not None:
        kw["lam_dot_mode"] = args.lam_dot_mode
    if args.epsilon is not None:
        # a command-line epsilon applies to every body
        kw["epsilon"] = args.epsilon
        kw["agents"] = tuple(dataclasses.replace(a, epsilon=None) for a in cfg.agents)
    return cfg.replace(**kw) if kw else cfg


def cmd_simulate(args) -> int:
    from .render import render_frames
    from .sim import run_simulation
    from .trace_io import write_trace

    cfg = _override(load_config(args.config), args)
    out = args.out or cfg.output_dir
    if out is None:
        print("error: no output directory (use --out or output.dir)", file=sys.stderr)
        return 2
    start = time.perf_counter()
    trace = run_simulation(cfg)
    wall = time.perf_counter() - start
    paths = write_trace(trace, out, {"wall_clock_total_s": round(wall, 3)})
    if args.render_every:
        render_frames(trace, cfg, args.render_every, f"{out}/frames")
    bad = trace.bad_ticks()
    print(f"ticks={trace.n_ticks} agents={len(trace.agent_ids)} "
          f"min_h={np.min(trace.h_min):.6g} bad_ticks={bad} wall={wall:.1f}s")
    print(f"trace: {paths['csv']}")
    return 0 if bad == 0 else 1


def _agent_index(cfg, key):
    ids = [a.id for a in cfg.agents]
    if key in ids:
        return ids.index(key)
    try:
        k = int(key)
    except ValueError:
        raise SetCBFError(f"no agent {key!r}; known ids: {', '.join(ids)}") from None
    if not 0 <= k < len(ids):
        raise SetCBFError(f"agent index {k} out of range")
    return k


def cmd_distance(args) -> int:
    from .distance import DistanceProblem, solve_distance
    from .sensitivity import distance_gradient

    cfg = load_config(args.config)
    i, j = (_agent_index(cfg, k) for k in args.pair)
    a, b = cfg.agents[i], cfg.agents[j]
    prob = DistanceProblem(a.shape.build(cfg.agent_epsilon(a)), b.shape.build(cfg.agent_epsilon(b)),
                           np.array(a.initial), np.array(b.initial))
    sol = solve_distance(prob)
    out = {"ego": a.id, "obstacle": b.id, **sol.as_dict()}
    if sol.optimal:
        g = distance_gradient(prob, sol)
        out["d_dlambdaE"] = g.d_dlambdaE.tolist()
        out["d_dlambdaJ"] = g.d_dlambdaJ.tolist()
        out["condition_estimate"] = g.condition_estimate
    print(json.dumps(out, indent=1))
    return 0 if sol.optimal else 1


def cmd_grad_check(args) -> int:
    from .corpus import random_disjoint_pair
    from .distance import DistanceProblem, solve_distance
    from .oracles import compare, finite_difference_gradient
    from .sensitivity import distance_gradient

    failures = 0
    for seed in range(args.seeds):
        p = random_disjoint_pair(np.random.default_rng(seed), epsilon=args.epsilon)
        prob = DistanceProblem(p.ego, p.obstacle, p.lam_E, p.lam_j)
        sol = solve_distance(prob)
        if not sol.optimal:
            print(f"seed {seed}: solver status {sol.status}")
            failures += 1
            continue
        g = distance_gradient(prob, sol).full

        def value(theta):
            return solve_distance(DistanceProblem(p.ego, p.obstacle, theta[:3], theta[3:])).value

        fd = finite_difference_gradient(value, np.concatenate([p.lam_E, p.lam_j]), args.step)
        rep = compare(fd, g, atol=1e-7, rtol=1e-4)
        failures += not rep.passed
        print(f"seed {seed}: {'pass' if rep.passed else 'FAIL'} "
              f"max_abs_err={rep.abs_err:.3g} max_rel_err={rep.rel_err:.3g}")
    print(f"{args.seeds - failures}/{args.seeds} passed")
    return 0 if failures == 0 else 1


def cmd_render(args) -> int:
    from .render import render_frames
    from .trace_io import read_trace

    trace = read_trace(args.trace)
    paths = render_frames(trace, trace.config, args.every, args.out or f"{args.trace}/frames")
    print(f"wrote {len(paths)} SVG files to {paths[-1].parent}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="setcbf", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a multi-agent scenario and write its trace")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--dt", type=float)
    p.add_argument("--tf", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--lam-dot-mode", choices=["oracle", "finite-difference", "zero"])
    p.add_argument("--render-every", type=int, default=0,
                   help="also render SVG frames every K ticks")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("distance", help="smoothed distance between two agents at t0")
    p.add_argument("--config", required=True)
    p.add_argument("--pair", nargs=2, required=True, metavar=("I", "J"),
                   help="agent ids or zero-based indices")
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("grad-check", help="compare distance gradients with finite differences")
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--epsilon", type=float, default=400.0)
    p.add_argument("--step", type=float, default=1e-5)
    p.set_defaults(func=cmd_grad_check)

    p = sub.add_parser("render", help="draw SVG frames and the min-h chart from a trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--every", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_render)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SetCBFError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
