import numpy as np
import pytest

from setcbf.config import parse_config
from setcbf.errors import ConfigError
from setcbf.sim import OPTIMAL, run_simulation
from setcbf.trace_io import trace_csv_text

SQUARE = {"type": "box", "half_width": 0.4}


def agent(aid, initial, goal, **kw):
    return {"id": aid, "shape": kw.pop("shape", SQUARE), "initial": list(initial),
            "goal": list(goal), **kw}


def config(agents, **kw):
    return parse_config({"epsilon": 20.0, "margin_distance": 0.2, "agents": agents, **kw})


def test_single_agent_straight_approach():
    # heading aligned with the goal keeps omega = 0; the input is held over each
    # tick, so the distance follows the sampled loop (1 - k_u dt)^k exactly
    cfg = config([agent("a", [0.0, 0.0, np.arctan2(3.0, 4.0)], [4.0, 3.0])], t_final=3.0)
    tr = run_simulation(cfg)
    dist = np.linalg.norm(tr.lam[:, 0, :2] - [4.0, 3.0], axis=1)
    k = np.arange(tr.n_ticks)
    assert dist == pytest.approx(5.0 * (1 - cfg.dt) ** k, rel=1e-12)
    assert tr.lam[:, 0, 2] == pytest.approx(np.arctan2(3.0, 4.0), abs=1e-12)
    # and within O(dt) of the continuous-time exponential
    assert np.abs(dist - 5.0 * np.exp(-tr.t)).max() < 5.0 * cfg.dt
    assert np.isinf(tr.h_min).all()
    assert all(s == [OPTIMAL] for s in tr.status)
    assert (tr.u == tr.u_nom).all()


def test_k_u_sets_the_rate():
    cfg = config([agent("a", [0.0, 0.0, 0.0], [2.0, 0.0], k_u=2.0)], t_final=1.0)
    tr = run_simulation(cfg)
    assert tr.lam[-1, 0, 0] == pytest.approx(2.0 - 2.0 * (1 - 2.0 * cfg.dt) ** 50, rel=1e-12)


def test_input_rate_of_the_sampled_loop():
    # u_k - u_{k-1} = -k_u dt u_{k-1}, so the rate is k_u |u_{k-1}|
    cfg = config([agent("a", [0.0, 0.0, 0.0], [2.0, 0.0], k_u=2.0)], t_final=1.0)
    tr = run_simulation(cfg)
    assert tr.input_rate()[:, 0] == pytest.approx(2.0 * np.linalg.norm(tr.u[:-1, 0], axis=1),
                                                  rel=1e-9)
    assert tr.rate_spikes() == []


def test_rate_spikes_reported():
    cfg = config([agent("a", [0.0, 0.0, 0.0], [2.0, 0.0])], t_final=0.2)
    tr = run_simulation(cfg)
    tr.u[5, 0] += [3.0, 0.0]
    spikes = tr.rate_spikes()
    assert [(k, a) for k, a, _ in spikes] == [(5, "a"), (6, "a")]
    assert spikes[0][2] == pytest.approx(3.0 / cfg.dt, rel=0.05)
    assert tr.rate_spikes(threshold=1e6) == []


def test_dispersing_agents_keep_nominal_input():
    cfg = config([agent("a", [-2.0, 0.0, np.pi], [-8.0, 0.0]),
                  agent("b", [2.0, 0.0, 0.0], [8.0, 0.0])], t_final=2.0)
    tr = run_simulation(cfg)
    assert tr.bad_ticks() == 0
    assert np.abs(tr.u - tr.u_nom).max() <= 1e-9
    h = tr.pair_h["a", "b"]
    assert (np.diff(h) > 0).all()
    assert h == pytest.approx(tr.pair_h["b", "a"])


def test_overlapping_start_rejected():
    cfg = config([agent("a", [0.0, 0.0, 0.0], [1.0, 0.0]),
                  agent("b", [0.5, 0.0, 0.0], [2.0, 0.0])])
    with pytest.raises(ConfigError) as e:
        run_simulation(cfg)
    assert e.value.field == "agents"


@pytest.mark.parametrize("mode", ["oracle", "finite-difference", "zero"])
def test_approach_keeps_barrier_positive(mode):
    # b drives straight at a parked a; the filter must stop it short
    cfg = config([agent("a", [0.0, 0.0, 0.0], [0.0, 0.0]),
                  agent("b", [3.0, 0.0, np.pi], [0.0, 0.0],
                        shape={"type": "polygon", "sides": 8, "radius": 0.45})],
                 t_final=6.0, lam_dot_mode=mode)
    tr = run_simulation(cfg)
    assert tr.bad_ticks() == 0
    assert tr.h_min.min() > 0
    # the bodies never meet: centres stay further apart than the inscribed radii
    assert (tr.lam[:, 1, 0] - tr.lam[:, 0, 0]).min() > 0.8
    assert (tr.u != tr.u_nom).any()


def test_trace_shapes_and_determinism():
    cfg = config([agent("a", [-2.0, 0.3, 0.0], [2.0, 0.3]),
                  agent("b", [2.0, -0.3, np.pi], [-2.0, -0.3])], t_final=0.5)
    t1, t2 = run_simulation(cfg), run_simulation(cfg)
    assert t1.n_ticks == cfg.n_ticks == 26
    assert t1.lam.shape == (26, 2, 3) and t1.vw.shape == (26, 2, 2)
    assert t1.t[-1] == pytest.approx(0.5)
    assert trace_csv_text(t1) == trace_csv_text(t2)
    assert set(t1.timings) == {"distance", "sensitivity", "qp", "integrate"}


def _head_on(offset, t_final=20.0):
    from pathlib import Path
    from setcbf.config import load_config
    sq = load_config(Path(__file__).parents[1] / "configs" / "four_agent_swap.yaml") \
        .agents[0].shape.as_dict()
    return config([agent("a", [-4.0, offset, 0.0], [4.0, offset], shape=sq, b=0.5),
                   agent("b", [4.0, -offset, np.pi], [-4.0, -offset], shape=sq, b=0.5)],
                  t_final=t_final, lam_dot_mode="zero")


def test_head_on_swap_in_separate_lanes():
    tr = run_simulation(_head_on(1.0))
    assert tr.bad_ticks() == 0 and tr.h_min.min() > 0
    for i, a in enumerate(tr.config.agents):
        assert np.linalg.norm(tr.lam[-1, i, :2] - a.goal) < 0.1


def test_exact_head_on_is_safe_but_stalls():
    # the filter keeps h positive but the symmetric standoff never resolves
    tr = run_simulation(_head_on(0.0, t_final=10.0))
    assert tr.bad_ticks() == 0 and tr.h_min.min() > 0
    assert tr.h_min[-1].max() < 1e-3
    assert np.abs(tr.lam[-1, :, 0]).max() < 1.5
