import math

import pytest

from rles.config import (PRESETS, config_digest, config_from_json, config_to_json, format_config,
                         parse_config, read_config_file)
from rles.errors import ConfigurationError


def _write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_flag_overrides_file(tmp_path):
    p = _write(tmp_path, "run.dt = 1e-3\nsgs.model = gradient\n")
    cfg = parse_config(p, {"sgs.model": "rles"})
    assert cfg.sgs.model == "rles"
    assert parse_config(p).sgs.model == "gradient"


def test_missing_dt_is_named(tmp_path):
    p = _write(tmp_path, "run.re = 180\n")
    with pytest.raises(ConfigurationError) as exc:
        parse_config(p)
    assert "run.dt" in str(exc.value)


def test_re180_preset():
    cfg = parse_config(preset="re180")
    g = cfg.grid
    assert (g.Lx, g.Lz) == (4 * math.pi, 4 * math.pi / 3)
    assert (g.Nx, g.Ny, g.Nz) == (36, 37, 36)
    assert cfg.u_m == 15.63 and cfg.dt == 0.0002 and cfg.re == 180


def test_re395_preset():
    cfg = parse_config(preset="re395")
    assert (cfg.grid.Nx, cfg.grid.Ny, cfg.grid.Nz) == (72, 55, 54)
    assert cfg.u_m == 17.54 and cfg.dt == 0.00025


def test_unknown_key_lists_valid_keys(tmp_path):
    p = _write(tmp_path, "run.dt = 1e-3\nrun.dtt = 2\n")
    with pytest.raises(ConfigurationError) as exc:
        read_config_file(p)
    assert "run.dtt" in str(exc.value)
    assert "run.n_steps" in str(exc.value) and "sgs.model" in str(exc.value)


def test_type_error_cites_line(tmp_path):
    p = _write(tmp_path, "# header\nrun.dt = 1e-3\n\ngrid.Nx = lots\n")
    with pytest.raises(ConfigurationError) as exc:
        read_config_file(p)
    assert "line 4" in str(exc.value)
    assert exc.value.field == "grid.Nx"


@pytest.mark.parametrize("text", ["grid.Nx = 16.5", "run.dealias = maybe", "sgs.model = dynamic",
                                  "run.dt = 1e-3 +", "run.seed = __import__('os')"])
def test_bad_values_rejected(tmp_path, text):
    with pytest.raises(ConfigurationError):
        read_config_file(_write(tmp_path, text + "\n"))


def test_missing_equals(tmp_path):
    with pytest.raises(ConfigurationError) as exc:
        read_config_file(_write(tmp_path, "run.dt 1e-3\n"))
    assert "line 1" in str(exc.value)


def test_expressions_and_special_values(tmp_path):
    p = _write(tmp_path, "run.dt = 2e-4\ngrid.Lx = 4*pi\ngrid.Lz = 4*pi/3\nrun.u_m = none\nrun.re = inf\n"
                         "run.dealias = off  # comment\n")
    cfg = parse_config(p)
    assert cfg.grid.Lx == 4 * math.pi and cfg.grid.Lz == 4 * math.pi / 3
    assert cfg.u_m is None and math.isinf(cfg.re) and cfg.dealias is False


def test_file_overrides_preset(tmp_path):
    p = _write(tmp_path, "run.dt = 1e-4\n")
    cfg = parse_config(p, preset="re180")
    assert cfg.dt == 1e-4 and cfg.grid.Nx == 36


def test_echo_round_trip(tmp_path):
    cfg = parse_config(preset="re395", overrides={"sgs.model": "smagorinsky", "sgs.cs": "0.12",
                                                  "run.seed": 9})
    p = _write(tmp_path, format_config(cfg), "echo.cfg")
    again = parse_config(p)
    assert again == cfg
    assert config_from_json(config_to_json(cfg)) == cfg
    assert config_digest(again) == config_digest(cfg)


def test_digest_changes_with_settings():
    a = parse_config(preset="re180")
    b = parse_config(preset="re180", overrides={"sgs.model": "rles"})
    assert config_digest(a) != config_digest(b)


def test_unknown_preset():
    with pytest.raises(ConfigurationError):
        parse_config(preset="re590")
    assert set(PRESETS) == {"re180", "re395"}
