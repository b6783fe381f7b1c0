import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from nonholo import config
from nonholo.errors import ConfigError


def test_defaults_resolve_and_round_trip():
    cfg = config.resolve({})
    assert cfg["system"]["coupling"] == "linear" and cfg["system"]["subsystem"] == "harmonic"
    text = config.dumps(cfg)
    again = config.loads(text, "json")
    assert config.dumps(again) == text


@given(
    st.floats(0.1, 10), st.floats(0.1, 10), st.sampled_from(["contact", "cvt", "decoupled"]),
    st.sampled_from(["none", "q1_quartic", "p1_quadratic", "mixed_nonreversible"]),
    st.floats(0, 1e-2), st.lists(st.floats(0.01, 3), max_size=4),
)
def test_round_trip_is_bitwise(m1, k2, preset, g, eps, grid):
    raw = {"system": {"preset": preset, "params": {"m1": m1, "k2": k2}},
           "perturbation": {"name": g, "epsilon": 0.0 if g == "none" else eps},
           "experiment": {"a_grid": grid}}
    cfg = config.resolve(raw)
    text = config.dumps(cfg)
    assert config.dumps(config.loads(text, "json")) == text
    assert json.loads(text)["system"]["params"]["m1"] == m1


def test_toml_config(tmp_path):
    p = tmp_path / "run.toml"
    p.write_text('[system]\npreset = "cvt"\n[integrator]\nmethod = "rk4"\nh = 0.1\n')
    cfg = config.load(p)
    assert cfg["system"]["coupling"] == "cvt" and cfg["integrator"]["method"] == "rk4"
    assert config.stepper(cfg).h == 0.1


def test_shipped_config_by_name():
    assert "mcpe-repro" in config.shipped_configs()
    cfg = config.load("mcpe-repro")
    assert cfg["experiment"]["epsilons"] == [0.0, 1e-3, 1e-2]


@pytest.mark.parametrize(
    "raw,match",
    [
        ({"sytem": {}}, "unknown key"),
        ({"system": {"colour": 1}}, r"unknown key.*system"),
        ({"system": {"params": {"m1": -1.0}}}, "m1 must be > 0"),
        ({"system": {"params": {"k1": "one"}}}, "finite number"),
        ({"system": {"preset": "pendulum"}}, "preset"),
        ({"system": {"preset": None}}, "coupling is required"),
        ({"system": {"coupling": "polynomial"}}, "coupling_coeffs"),
        ({"perturbation": {"name": "q9"}}, "unknown perturbation"),
        ({"perturbation": {"epsilon": 0.1}}, "must be 0"),
        ({"integrator": {"method": "euler"}}, "method"),
        ({"integrator": {"h": 0.0}}, "h must be > 0"),
        ({"integrator": {"newton_max_iters": 2.5}}, "integer"),
        ({"experiment": {"initial_state": [1, 2]}}, "5 entries"),
        ({"experiment": {"seeds": []}}, "seeds"),
        ({"experiment": {"methods": ["leapfrog"]}}, "methods"),
        ({"experiment": {"epsilons": [-1e-3]}}, ">= 0"),
    ],
)
def test_invalid_configs(raw, match):
    with pytest.raises(ConfigError, match=match):
        config.resolve(raw)


def test_parse_errors(tmp_path):
    with pytest.raises(ConfigError, match="cannot parse"):
        config.loads("[system\n")
    with pytest.raises(ConfigError, match="cannot read"):
        config.load(tmp_path / "missing.toml")


def test_header_lines():
    cfg = config.resolve({})
    lines = config.header_lines(cfg, "scan")
    assert lines[0] == f"format: {config.FORMAT_VERSION}"
    assert json.loads(lines[2][len("config: "):]) == cfg
