"""
Tests for configuration loading and block validation.
"""

import json
from pathlib import Path

import pytest
import yaml
from pydantic import ValidationError

from src.models import ConfigError, MatchConfig, OpponentKind, SimConfig, load_config


def test_defaults_without_file():
    config = load_config()
    assert config == MatchConfig()
    assert config.sim.dt == 0.02
    assert config.shot.weights.p_min == 0.2
    assert config.mpc.n_candidates == 128


def test_yaml_file_overrides_blocks(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text(
        yaml.safe_dump(
            {
                "seed": 9,
                "opponent": "StaticWall",
                "mpc": {"n_candidates": 32},
                "tactics": {"min_dwell": 0.0},
            }
        )
    )
    config = load_config(path)
    assert config.seed == 9
    assert config.opponent == OpponentKind.STATIC_WALL
    assert config.mpc.n_candidates == 32
    assert config.mpc.sigma == 0.4
    assert config.tactics.min_dwell == 0.0


def test_json_file_is_accepted(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"duration": 3.5}))
    assert load_config(path).duration == 3.5


def test_keyword_overrides_win(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump({"seed": 1, "artifact_dir": "a"}))
    config = load_config(path, seed=4, artifact_dir=None)
    assert config.seed == 4
    assert config.artifact_dir == "a"


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "nope.yaml")


def test_invalid_yaml(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text("sim: [unclosed\n")
    with pytest.raises(ConfigError, match="not valid"):
        load_config(path)


def test_non_mapping_file(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError, match="mapping"):
        load_config(path)


def test_unknown_and_invalid_fields(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump({"mpc": {"n_candidates": 0}}))
    with pytest.raises(ConfigError):
        load_config(path)
    path.write_text(yaml.safe_dump({"simulator": {}}))
    with pytest.raises(ConfigError):
        load_config(path)


def test_mallet_bounds():
    config = SimConfig()
    x_min, x_max, y_max = config.mallet_bounds()
    g = config.geometry
    assert x_min == pytest.approx(-g.length / 2 + g.mallet_radius)
    assert x_max == -0.02
    assert y_max == pytest.approx(g.width / 2 - g.mallet_radius)


def test_blocks_are_frozen():
    config = MatchConfig()
    with pytest.raises(ValidationError):
        config.seed = 3


def test_example_config_matches_defaults():
    path = Path(__file__).resolve().parent.parent / "config" / "config.example.yaml"
    assert load_config(path) == MatchConfig()
