import json

import numpy as np
import pytest

from snls_mix.energy import energy
from snls_mix.experiments import (
    ConfigError,
    build_coupling,
    build_noise,
    build_params,
    load_config,
    make_context,
    initial_states,
)
from snls_mix.main import main
from snls_mix.coupling import read_cycle_log
from snls_mix.utils.helpers import config_hash, make_json_serializable, read_artifact_header
from snls_mix.utils.rng import make_stream

TINY = """
[equation]
sigma = 1.0
lambda = -1
alpha = 0.0

[discretization]
M = 8
dt = 0.001
T_horizon = 0.05

[noise]
n_star = 2
scale = 0.0

[constants]
G = 0.0
G1 = 0.0

[coupling]
T = 0.05
R0 = 1.0

[initial]
modes = [1]
amplitude_1 = 0.2
amplitude_2 = 0.2

[run]
n_trajectories = 4
n_cycles = 2
mix_cycles = 2
record_every = 1
"""


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "tiny.toml"
    path.write_text(TINY)
    return path


def _report(out, name):
    (path,) = out.glob(f"{name}-*.json")
    return json.loads(path.read_text())


def test_reference_scenario_loads():
    cfg = load_config(scenario="reference")
    assert cfg.scenario == "reference"
    assert cfg.equation.lam == -1
    assert build_noise(cfg).n_star == 16
    assert build_coupling(cfg).N_star == 16


def test_initial_state_hits_the_target_energy():
    cfg = load_config(scenario="reference")
    params = build_params(cfg)
    u1, u2 = initial_states(cfg, params)
    assert energy(u1, params) == 0.0
    assert energy(u2, params) == pytest.approx(20.0, rel=1e-8)


def test_invalid_value_names_its_key():
    with pytest.raises(ConfigError) as info:
        load_config(scenario="reference", overrides={"equation": {"sigma": -1.0}})
    assert info.value.key == "equation.sigma"


def test_unknown_key_is_rejected():
    with pytest.raises(ConfigError) as info:
        load_config(scenario="reference", overrides={"equation": {"beta": 1.0}})
    assert info.value.key.startswith("equation")


def test_focusing_exponent_is_bounded():
    with pytest.raises(ConfigError) as info:
        load_config(scenario="reference", overrides={"equation": {"sigma": 2.5, "lambda": 1}})
    assert info.value.key == "equation"


def test_unforced_low_mode_is_rejected(tiny_config):
    b = [1.0, 0.0, 0.1, 0.0, 0.0, 0.0, 0.0, 0.0]
    with pytest.raises(ConfigError) as info:
        load_config(tiny_config, overrides={"noise": {"b": b}})
    assert info.value.key == "noise"
    # vanishing noise everywhere is the deterministic limit and stays allowed
    assert not np.any(build_noise(load_config(tiny_config)).b_coeffs)


def test_missing_sources_are_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config()
    with pytest.raises(ConfigError) as info:
        load_config(scenario="nope")
    assert info.value.key == "scenario"
    with pytest.raises(ConfigError) as info:
        load_config(tmp_path / "absent.toml")
    assert info.value.key == "config"


def test_file_overrides_scenario(tiny_config):
    cfg = load_config(tiny_config, scenario="reference")
    assert cfg.discretization.M == 8
    assert cfg.scenario == "reference"


def test_constants_key_ignores_threads_and_out(tiny_config, tmp_path):
    cfg = load_config(tiny_config)
    one = make_context(cfg, threads=1, out=tmp_path / "a")
    two = make_context(cfg, threads=4, out=tmp_path / "b")
    assert one.key == two.key
    assert make_context(cfg, seed=7, out=tmp_path / "c").key != one.key


def test_simulate_conserves_without_damping_or_noise(tiny_config, tmp_path):
    out = tmp_path / "out"
    assert main(["simulate", "--config", str(tiny_config), "--out", str(out)]) == 0
    report = _report(out, "simulate")
    assert report["verdicts"]["conservation"] is True
    assert report["config"]["equation"]["lambda"] == -1
    assert list(out.glob("trajectory-*.snap"))


def test_conservation_scenario_at_full_scale(tmp_path):
    out = tmp_path / "out"
    assert main(["simulate", "--scenario", "conservation", "--out", str(out)]) == 0
    report = _report(out, "simulate")
    assert report["verdicts"]["conservation"] is True
    assert report["config"]["discretization"]["M"] == 128
    assert report["report"]["mass_drift"] < 1e-8
    assert report["report"]["h_star_drift"] < 1e-4


def test_cycle_logs_embed_seed_and_config(tiny_config, tmp_path):
    forced = tmp_path / "forced.toml"
    forced.write_text(TINY.replace("scale = 0.0", "scale = 0.1"))
    out = tmp_path / "out"
    assert main(["couple", "--config", str(forced), "--out", str(out), "--seed", "5"]) in (0, 1)
    logs = sorted(out.glob("cycles-*/chain-*.jsonl"))
    assert len(logs) == 4
    header = read_artifact_header(logs[0].read_text().splitlines()[0])
    assert header["seed"] == 5
    assert header["config"]["coupling"]["R0"] == 1.0
    assert len(read_cycle_log(logs[0])) == 2


def test_calibrate_is_reproducible(tiny_config, tmp_path):
    out = tmp_path / "out"
    assert main(["calibrate", "--config", str(tiny_config), "--out", str(out)]) == 0
    (path,) = out.glob("constants-*.json")
    first = path.read_text()
    assert main(["calibrate", "--config", str(tiny_config), "--out", str(out)]) == 0
    assert path.read_text() == first
    constants = json.loads(first)
    assert constants["G"] == 0.0
    assert set(constants["C_prime"]) == {"1.0", "2.0"}
    # Agmon caps the cubic interpolation ratio at 1
    assert 0.0 < constants["gagliardo_nirenberg"] <= 1.0 + 1e-9


def test_mix_of_identical_states_is_flat(tiny_config, tmp_path):
    out = tmp_path / "out"
    assert main(["mix", "--config", str(tiny_config), "--out", str(out)]) == 0
    report = _report(out, "mix")
    assert report["report"]["flat"] is True
    assert report["verdicts"] == {"reduction": True, "rate": None}


def test_invalid_config_exits_with_2(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text(TINY.replace("sigma = 1.0", "sigma = -1.0"))
    assert main(["simulate", "--config", str(path), "--out", str(tmp_path)]) == 2
    assert main(["simulate", "--scenario", "conservation", "--seed", str(2 ** 64)]) == 2


def test_streams_are_keyed_by_ids():
    a = make_stream(5, 1, 2).standard_normal(4)
    assert np.array_equal(a, make_stream(5, 1, 2).standard_normal(4))
    assert not np.array_equal(a, make_stream(5, 2, 1).standard_normal(4))


def test_json_helpers():
    payload = {"z": 1 + 2j, "x": np.arange(2), "nan": float("nan"), 3: np.float64(0.5)}
    assert make_json_serializable(payload) == {"z": [1.0, 2.0], "x": [0, 1], "nan": None, "3": 0.5}
    assert config_hash({"a": 1, "b": 2}) == config_hash({"b": 2, "a": 1})
    assert len(config_hash({"a": 1})) == 12
