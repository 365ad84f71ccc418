import pytest

from levyscore.config import config_hash, load_config, validate_config

GOOD = {
    "model": {"alpha": 0.5},
    "drift": {"name": "linear", "theta_lo": 0.1, "theta_hi": 3.0},
    "simulation": {"theta": 1.0},
}


def _nested_copy(d):
    return {k: dict(v) for k, v in d.items()}


def test_defaults_fill_in():
    cfg = validate_config(_nested_copy(GOOD))
    assert cfg["run"]["seed"] == 12345
    assert cfg["simulation"]["n_paths"] == 100_000
    assert cfg["perturbation"]["u0"] == 1.0
    # u1 defaults to half of u0
    assert cfg.build_spec().u1 == 0.5
    assert cfg["density"]["rep"] == "both"


def test_required_keys_enforced():
    raw = _nested_copy(GOOD)
    del raw["model"]["alpha"]
    with pytest.raises(ValueError, match="model.alpha"):
        validate_config(raw)
    raw = _nested_copy(GOOD)
    del raw["simulation"]
    with pytest.raises(ValueError, match="simulation"):
        validate_config(raw)


def test_unknown_names_rejected():
    raw = _nested_copy(GOOD)
    raw["simulation"]["n_path"] = 10
    with pytest.raises(ValueError, match="n_path"):
        validate_config(raw)
    raw = _nested_copy(GOOD)
    raw["extra_section"] = {}
    with pytest.raises(ValueError, match="extra_section"):
        validate_config(raw)


def test_type_and_range_checks():
    raw = _nested_copy(GOOD)
    raw["model"]["alpha"] = 2.5
    with pytest.raises(ValueError, match="alpha"):
        validate_config(raw)
    raw = _nested_copy(GOOD)
    raw["simulation"]["n_paths"] = "many"
    with pytest.raises(ValueError, match="n_paths"):
        validate_config(raw)
    raw = _nested_copy(GOOD)
    raw["simulation"]["assumption_policy"] = "ignore"
    with pytest.raises(ValueError, match="assumption_policy"):
        validate_config(raw)


def test_cross_field_checks():
    raw = _nested_copy(GOOD)
    raw["perturbation"] = {"u0": 1.0, "u1": 1.5}
    with pytest.raises(ValueError, match="u1"):
        validate_config(raw)
    raw = _nested_copy(GOOD)
    raw["drift"]["theta_lo"] = 2.0
    raw["drift"]["theta_hi"] = 0.5
    with pytest.raises(ValueError):
        validate_config(raw)
    # theta outside the drift interval
    raw = _nested_copy(GOOD)
    raw["simulation"]["theta"] = 5.0
    with pytest.raises(ValueError):
        validate_config(raw)


def test_hash_tracks_content():
    a = validate_config(_nested_copy(GOOD))
    b = validate_config(_nested_copy(GOOD))
    assert config_hash(a) == config_hash(b)
    raw = _nested_copy(GOOD)
    raw["simulation"]["theta"] = 1.5
    c = validate_config(raw)
    assert config_hash(a) != config_hash(c)
    assert len(config_hash(a)) == 16


def test_load_config_file(tmp_path):
    p = tmp_path / "cfg.toml"
    p.write_text("""
[model]
alpha = 0.5

[drift]
name = "linear"

[simulation]
theta = 1.0
""")
    cfg = load_config(str(p))
    assert cfg["model"]["alpha"] == 0.5
    assert cfg.build_drift().name == "linear"
    with pytest.raises(FileNotFoundError):
        load_config(str(tmp_path / "missing.toml"))
