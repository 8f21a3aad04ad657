import copy

import pytest
import yaml

from setcbf.config import SimConfig, load_config, parse_config
from setcbf.errors import ConfigError

BASE = {
    "epsilon": 20.0,
    "margin_distance": 0.2,
    "agents": [
        {"id": "a", "shape": {"type": "box", "half_width": 0.5},
         "initial": [0.0, 0.0, 0.0], "goal": [1.0, 0.0]},
        {"id": "b", "shape": {"type": "polygon", "sides": 6, "radius": 0.5},
         "initial": [3.0, 0.0, 3.14], "goal": [-1.0, 0.0], "b": 0.5, "epsilon": 40},
    ],
}


def raw(**kw):
    d = copy.deepcopy(BASE)
    d.update(kw)
    return d


def field_of(d):
    with pytest.raises(ConfigError) as e:
        parse_config(d)
    return e.value.field


def test_parse_defaults():
    cfg = parse_config(raw())
    assert cfg.R == pytest.approx(0.02)
    assert cfg.dt == 0.02 and cfg.t_final == 25.0 and cfg.lam_dot_mode == "oracle"
    assert cfg.agents[0].b == 0.25 and cfg.agents[0].k_u == 1.0
    assert cfg.agent_epsilon(cfg.agents[0]) == 20.0
    assert cfg.agent_epsilon(cfg.agents[1]) == 40.0
    assert cfg.n_ticks == 1251
    assert cfg.agents[1].shape.build(40.0).n_constraints == 6


def test_round_trip():
    cfg = parse_config(raw())
    assert parse_config(cfg.as_dict()) == cfg
    d = raw(R=0.1)
    del d["margin_distance"]
    cfg = parse_config(d)
    assert cfg.R == 0.1 and parse_config(cfg.as_dict()) == cfg


def test_n_ticks_rounding():
    cfg = parse_config(raw(dt=0.1, t_final=0.3))
    assert cfg.n_ticks == 4


@pytest.mark.parametrize("mutate,expected", [
    (lambda d: d.update(bogus=1), "bogus"),
    (lambda d: d["agents"][0]["shape"].update(foo=1), "agents[0].shape.foo"),
    (lambda d: d["agents"][1].update(speed=2), "agents[1].speed"),
    (lambda d: d["agents"][0].pop("goal"), "agents[0].goal"),
    (lambda d: d["agents"][0].update(initial=[0, 0]), "agents[0].initial"),
    (lambda d: d["agents"][0].update(goal=[0, "x"]), "agents[0].goal[1]"),
    (lambda d: d["agents"][0].update(b=0), "agents[0].b"),
    (lambda d: d["agents"][0]["shape"].update(type="circle"), "agents[0].shape.type"),
    (lambda d: d["agents"][1]["shape"].update(sides=2.5), "agents[1].shape.sides"),
    (lambda d: d.update(R=0.1), "margin_distance"),
    (lambda d: d.update(dt=0.0), "dt"),
    (lambda d: d.update(t_final=0.001), "t_final"),
    (lambda d: d.update(epsilon=-1.0), "epsilon"),
    (lambda d: d.update(lam_dot_mode="psychic"), "lam_dot_mode"),
    (lambda d: d.update(integrator="leapfrog"), "integrator"),
    (lambda d: d.update(seed=1.5), "seed"),
    (lambda d: d.update(alpha={"kind": "quadratic"}), "alpha"),
    (lambda d: d["agents"][1].update(id="a"), "agents.id"),
    (lambda d: d.update(agents=[]), "agents"),
])
def test_errors_name_the_field(mutate, expected):
    d = raw()
    mutate(d)
    assert field_of(d) == expected


def test_unbounded_halfspace_shape():
    d = raw()
    d["agents"][0]["shape"] = {"type": "halfspaces", "A": [[1, 0], [0, 1]], "b": [1, 1]}
    assert field_of(d) == "agents[0].shape"


def test_duplicate_id_message():
    d = raw()
    d["agents"][1]["id"] = "a"
    with pytest.raises(ConfigError, match="'a'"):
        parse_config(d)


def test_load_config(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text(yaml.safe_dump(raw()))
    assert isinstance(load_config(p), SimConfig)
    with pytest.raises(ConfigError) as e:
        load_config(tmp_path / "missing.yaml")
    assert e.value.field == "path"
    p.write_text("agents: [unclosed")
    with pytest.raises(ConfigError):
        load_config(p)


def test_shipped_scenario_parses():
    from pathlib import Path
    cfg = load_config(Path(__file__).parents[1] / "configs" / "four_agent_swap.yaml")
    assert len(cfg.agents) == 4
    assert cfg.epsilon == 20.0 and cfg.dt == 0.02 and cfg.t_final == 25.0
    assert cfg.R == pytest.approx(0.02)
