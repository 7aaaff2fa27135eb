import json

import pytest

from econosim.config import (
    CONFIG_KEYS,
    ConfigError,
    SimConfig,
    TradeParams,
    dump_config,
    load_config,
    parse_config_text,
)


def test_defaults():
    cfg = SimConfig()
    assert (cfg.n, cfg.k0, cfg.q, cfg.w, cfg.seed) == (1000, 1, 1.0, 1.0, 0)
    assert cfg.warmup_steps == 10_000


def test_key_value_and_json_agree():
    kv = parse_config_text("n = 500  # agents\nc_th = -0.6\nsteps = 2e4\nturnover_mode = 'in_only'\n")
    js = parse_config_text(json.dumps({"n": 500, "c_th": -0.6, "steps": 20000, "turnover_mode": "in_only"}))
    assert kv == js


@pytest.mark.parametrize("text", ["nodes = 4", "n = many", "n = 1.5", "just words"])
def test_bad_text(text):
    with pytest.raises(ConfigError):
        parse_config_text(text)


@pytest.mark.parametrize("kw", [{"n": 5}, {"k0": 0}, {"c_th": 1.0}, {"steps": -1},
                                {"turnover_mode": "gross"}, {"delta": 0.0}])
def test_invalid_configs(kw):
    with pytest.raises(ConfigError):
        SimConfig(**kw)


def test_flags_override_file(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("n = 300\nseed = 4\n")
    cfg = load_config(p, seed=9, steps=None)
    assert (cfg.n, cfg.seed, cfg.steps) == (300, 9, SimConfig().steps)


def test_dump_round_trip(tmp_path):
    cfg = SimConfig(n=321, c_th=-0.61, turnover_mode="in_only", warmup=7, seed=5)
    dump_config(cfg, tmp_path / "c.cfg")
    assert load_config(tmp_path / "c.cfg") == cfg
    assert set(cfg.to_dict()) == set(CONFIG_KEYS)


@pytest.mark.parametrize("mode,c_th,omega", [("total", -0.5, 1 / 3), ("total", 0.0, 1.0),
                                             ("in_only", -0.71, 0.29)])
def test_omega(mode, c_th, omega):
    assert TradeParams(c_th=c_th, turnover_mode=mode).omega == pytest.approx(omega, abs=1e-15)
