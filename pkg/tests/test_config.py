import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hyperwave.config import load_config, parse_config, save_config
from hyperwave.errors import CFLViolation, ConfigError
from hyperwave.forward import solve_forward
from hyperwave.grid import Grid
from hyperwave.io import save_field

MINIMAL = {"grid": {"d": 1, "n": 16, "T": 0.5, "m": 64},
           "dictionary": [{"family": "quadratic", "params": {"a": 1.0}}],
           "alpha": [1.0]}


def _write(tmp_path, cfg, name="c.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return p


def test_minimal_config_gets_defaults(tmp_path):
    cfg = load_config(_write(tmp_path, MINIMAL))
    assert cfg["material"] == {"rho": 1.0}
    assert cfg["inversion"]["max_iter"] == 500 and cfg["inversion"]["tau_disc"] == 1.5
    assert cfg["dictionary"][0]["weight"] == {"type": "constant"}
    assert cfg["seed"] == 0
    s = cfg.setup()
    assert s.grid == Grid(1, 16, 0.5, 64)
    assert np.allclose(s.u0[:, 0], 0.4 * np.sin(np.pi * s.grid.nodes()[:, 0]))


def test_all_violations_reported_with_locators():
    bad = {"grid": {"d": 1, "n": 1, "T": -1.0}, "dictionary": [{"family": "cubic"}],
           "alpha": [0.0], "seed": "x", "bogus": 1}
    with pytest.raises(ConfigError) as err:
        parse_config(bad)
    msgs = err.value.errors
    for loc in ("/grid/n", "/grid/T", "/grid:", "/dictionary/0/family", "/alpha/0", "/seed", "bogus"):
        assert any(loc in m for m in msgs), loc
    assert len(msgs) >= 7


def test_semantic_checks():
    cfg = dict(MINIMAL, alpha=[1.0, 2.0], direction=[1.0],
               dictionary=[{"family": "quadratic", "params": {"eps": 0.1},
                            "weight": {"type": "partition", "index": 3, "of": 2}}])
    with pytest.raises(ConfigError) as err:
        parse_config(cfg)
    msgs = " ".join(err.value.errors)
    assert "/alpha: expected 1" in msgs
    assert "/dictionary/0/weight/index" in msgs
    assert "/dictionary/0/params/eps" in msgs


def test_missing_file_reported(tmp_path):
    cfg = dict(MINIMAL, data={"file": "nowhere.hwf"})
    with pytest.raises(ConfigError, match="file not found"):
        load_config(_write(tmp_path, cfg))


def test_unreadable_and_invalid_json(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "absent.json")
    p = tmp_path / "x.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_config(p)


def test_cfl_is_checked_by_solver_not_loader(tmp_path):
    cfg = load_config(_write(tmp_path, dict(MINIMAL, grid={"d": 1, "n": 16, "T": 0.5, "m": 4})))
    with pytest.raises(CFLViolation):
        solve_forward(cfg.setup())


def test_file_sources_resolved_relative_to_config(tmp_path):
    g = Grid(1, 16, 0.5, 64)
    u = np.random.default_rng(0).standard_normal(g.field_shape)
    (tmp_path / "sub").mkdir()
    save_field(tmp_path / "sub" / "u0.hwf", u, g)
    cfg = dict(MINIMAL, initial={"u0": {"file": "u0.hwf"}})
    loaded = load_config(_write(tmp_path / "sub", cfg))
    assert np.array_equal(loaded.setup().u0, u[0])


def test_weights_and_thresholds(tmp_path):
    cfg = {"grid": {"d": 2, "n": 6, "T": 0.2, "m": 16},
           "dictionary": [{"family": "saturating", "params": {"a": 1.0, "eps": 0.5},
                           "weight": {"type": "partition", "index": k, "of": 2}} for k in range(2)]
           + [{"family": "quadratic", "weight": {"type": "bump", "lower": [0.2, 0.2], "upper": [0.4, 0.5],
                                                 "ramp": 0.05, "floor": 0.1}}],
           "alpha": [1.0, 1.0, 0.5],
           "thresholds": {"kappa": [0.01, 0.01], "mu": [100] * 7}}
    c = parse_config(cfg)
    D = c.dictionary()
    assert len(D) == 3 and D[2].weight.floor == 0.1
    assert c.thresholds().kappa == (0.01, 0.01)
    assert c.inversion().thresholds is not None


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.integers(2, 20), st.floats(0.01, 5), st.integers(2, 500),
       st.lists(st.floats(0.1, 5), min_size=1, max_size=3), st.integers(0, 1000))
def test_save_load_round_trip(tmp_path_factory, d, n, T, m, alpha, seed):
    raw = {"grid": {"d": d, "n": n, "T": T, "m": m},
           "dictionary": [{"family": "saturating", "params": {"a": 1.0, "eps": 0.2}}] * len(alpha),
           "alpha": alpha, "seed": seed}
    tmp = tmp_path_factory.mktemp("rt")
    c1 = load_config(_write(tmp, raw))
    save_config(tmp / "saved.json", c1)
    c2 = load_config(tmp / "saved.json")
    assert c1.to_dict() == c2.to_dict()
