import json
from pathlib import Path

import pytest

from weaktime.config import OUTPUT_ENV, config_from_dict, load_config, reference_config
from weaktime.errors import ConfigError

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _raw(**over):
    raw = reference_config().to_dict()
    raw.update(over)
    return raw


def test_round_trip():
    cfg = reference_config()
    again = config_from_dict(json.loads(cfg.to_json()))
    assert again == cfg
    assert again.config_hash == cfg.config_hash


def test_hash_ignores_output_and_threads():
    base = reference_config()
    moved = config_from_dict(_raw(output_dir="/tmp/elsewhere"))
    threaded = reference_config(workers=4)
    assert moved.config_hash == base.config_hash == threaded.config_hash
    assert reference_config(time_samples=4097).config_hash != base.config_hash
    assert base.with_gamma(0.00025).config_hash != base.config_hash


def test_problems_are_aggregated():
    raw = _raw(bogus=1)
    raw["state"] = {"gamma": -1.0, "x_center": -100.0, "p_incident": 0.25}
    raw["grid"] = {"window": 3, "panels": 0}
    raw["x"] = "far"
    with pytest.raises(ConfigError) as exc:
        config_from_dict(raw)
    problems = exc.value.problems
    assert len(problems) >= 4
    text = "\n".join(problems)
    assert "bogus" in text and "gamma" in text and "window" in text and "x must" in text


def test_unknown_section_keys_reported():
    raw = _raw()
    raw["barrier"] = {"height": 1.0, "width": 2.0}
    with pytest.raises(ConfigError, match="width"):
        config_from_dict(raw)


@pytest.mark.parametrize("x", [1.5, -2.0, 2.1])
def test_detector_must_clear_barrier(x):
    with pytest.raises(ConfigError, match="margin"):
        config_from_dict(_raw(x=x))


def test_free_particle_detector_anywhere():
    raw = _raw(x=0.0)
    raw["barrier"] = {"height": 0.0, "half_width": 1.0}
    assert config_from_dict(raw).x == 0.0


def test_bool_rejected_as_number():
    raw = _raw()
    raw["physics"] = {"hbar": True, "mass": 0.5}
    with pytest.raises(ConfigError, match="hbar"):
        config_from_dict(raw)


def test_bad_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_config(p)
    with pytest.raises(OSError):
        load_config(tmp_path / "missing.json")


def test_non_object_rejected():
    with pytest.raises(ConfigError):
        config_from_dict([1, 2])


@pytest.mark.parametrize("name", ["reference", "narrow", "free"])
def test_shipped_configs_load(name):
    cfg = load_config(CONFIGS / f"{name}.json")
    assert cfg.name == name
    assert cfg.scenario.state.p_incident == 0.25


def test_reference_file_matches_builtin():
    assert load_config(CONFIGS / "reference.json").config_hash == reference_config().config_hash


def test_output_dir_precedence(monkeypatch):
    cfg = config_from_dict(_raw(output_dir="from_config"))
    monkeypatch.delenv(OUTPUT_ENV, raising=False)
    assert cfg.resolve_output_dir() == Path("from_config")
    assert reference_config().resolve_output_dir() == Path("out")
    monkeypatch.setenv(OUTPUT_ENV, "from_env")
    assert cfg.resolve_output_dir() == Path("from_env")
    assert cfg.resolve_output_dir("cli") == Path("cli")


def test_variants():
    cfg = reference_config()
    assert cfg.free_particle().scenario.barrier.is_free
    assert cfg.with_gamma(0.00025).scenario.state.gamma == 0.00025
    assert cfg.sweep_gammas == (0.001, 0.00025)
