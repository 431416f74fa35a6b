import json

import numpy as np
import pytest

from quasicycles.io import (ConfigError, ExperimentConfig, csv_text, patch_text, read_csv,
                            read_patch, write_atomic, write_patch)


def test_config_defaults_and_hash():
    a = ExperimentConfig.from_dict({"scheme": "fibonacci", "R": 100})
    b = ExperimentConfig.from_dict({"R": 100.0, "scheme": "fibonacci"})
    assert a.hash() == b.hash() and len(a.hash()) == 16
    assert a.hash() != ExperimentConfig.from_dict({"scheme": "fibonacci", "R": 101}).hash()


@pytest.mark.parametrize("data", [
    {"R": -1},
    {"R": "big"},
    {"seed": -3},
    {"seed": 2**64},
    {"gaussians": {"center": [0]}},
    {"unknown": 1},
    [1, 2],
])
def test_bad_configs(data):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(data)


@pytest.mark.parametrize("spec", [{"centre": [0.0]}, {"center": [0.0], "sigma": 0.0}])
def test_bad_gaussian_spec(spec):
    cfg = ExperimentConfig.from_dict({"gaussians": [[spec]]})
    with pytest.raises(ConfigError):
        cfg.build_gaussians()


def test_patch_file_round_trip(tmp_path, fib_small_patch):
    path = tmp_path / "p.txt"
    write_patch(path, fib_small_patch, "abc")
    back = read_patch(path)
    assert np.array_equal(back.coords, fib_small_patch.coords)
    assert np.array_equal(back.points, fib_small_patch.points)
    assert back.hull == fib_small_patch.hull and back.R == fib_small_patch.R
    assert patch_text(back, "abc") == path.read_text()


def test_bad_patch_header(tmp_path):
    path = tmp_path / "p.txt"
    path.write_text("# R=10\n0 0\t0.0\n")
    with pytest.raises(ConfigError):
        read_patch(path)


def test_csv_round_trip(tmp_path):
    text = csv_text(["a", "b"], [[1, np.float64(0.1)], [2, 1 / 3]], comment="hash=x")
    assert "np.float64" not in text
    write_atomic(tmp_path / "t.csv", text)
    rows = read_csv(tmp_path / "t.csv")
    assert float(rows[0]["b"]) == 0.1 and float(rows[1]["b"]) == 1 / 3
    assert not list(tmp_path.glob(".*"))


def test_config_load(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"scheme": "z-fixture", "R": 50}))
    cfg = ExperimentConfig.load(path)
    assert cfg.build_scheme().label == "z-fixture" and cfg.build_window(cfg.build_scheme()).volume == 1
