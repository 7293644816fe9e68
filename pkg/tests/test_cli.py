import math
import subprocess
import sys

import numpy as np
import pytest

from wavecontrol.cli import main
from wavecontrol.config import (MODES, PRESETS, RunConfig, dispersion_settings, load_config,
                                parse_config, preset_path, read_config)
from wavecontrol.errors import ConfigError
from wavecontrol.geometry import write_mesh

SMALL = """\
mode = {mode}
wave.period = 1.2
wave.depth = 2.5
body.r = 0.5
geometry.half_width = 3.0
geometry.mesh_size = 0.25
optimizer.max_iter = 4
check.directions = 2
output.dir = {out}
"""


def _cfg(tmp_path, mode="pressure", name="c.cfg", extra=""):
    p = tmp_path / name
    p.write_text(SMALL.format(mode=mode, out=tmp_path / ("out_" + mode)) + extra)
    return p


def test_parse_config_comments_and_errors():
    raw = parse_config("# comment\nmode = plate  # trailing\n\nwave.period=1.2\n")
    assert raw == {"mode": "plate", "wave.period": "1.2"}
    with pytest.raises(ConfigError) as e:
        parse_config("mode = plate\nmode = membrane\n")
    assert e.value.key == "mode"
    with pytest.raises(ConfigError):
        parse_config("this is not a pair\n")


@pytest.mark.parametrize("text,key", [
    ("mode = pressure\nwave.period = 1.2\n", "body.r"),
    ("mode = pressure\nbody.r = 0.5\n", "wave.period"),
    ("mode = sailing\nwave.period = 1.2\nbody.r = 0.5\n", "mode"),
    ("mode = pressure\nwave.period = -1\nbody.r = 0.5\n", "wave.period"),
    ("mode = pressure\nwave.period = 1.2\nbody.r = 0.5\nwave.colour = blue\n", "wave.colour"),
    ("mode = pressure\nwave.period = abc\nbody.r = 0.5\n", "wave.period"),
])
def test_config_errors_name_the_key(text, key):
    with pytest.raises(ConfigError) as e:
        RunConfig.from_mapping(parse_config(text))
    assert e.value.key == key
    assert key in str(e.value) or e.value.key == key


def test_missing_radius_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.cfg"
    p.write_text("mode = pressure\nwave.period = 1.2\n")
    assert main(["run", str(p)]) == 1
    assert "body.r" in capsys.readouterr().err


def test_buoyancy_imbalance_is_config_error(tmp_path):
    p = _cfg(tmp_path, extra="body.density = 900\n")
    assert main(["run", str(p)]) == 1


@pytest.mark.parametrize("name", PRESETS)
def test_presets_parse(name):
    raw = read_config(preset_path(name))
    if name == "dispersion":
        omega, depths, g = dispersion_settings(raw)
        assert any(w == pytest.approx(2 * math.pi / 1.2) for w in omega)
    else:
        cfg = RunConfig.from_mapping(raw)
        assert cfg.mode in MODES


def test_pressure_defaults_and_passive_weights():
    raw = read_config(preset_path("sphere2d_pressure"))
    cfg = RunConfig.from_mapping(raw)
    assert cfg.cost.alpha_u == 1e-10 and cfg.cost.beta_u == 1e-10
    cfg = load_config(preset_path("sphere2d_membrane"))
    assert (cfg.cost.alpha_v, cfg.cost.beta_v) == (1e-4, 4e-2)
    assert cfg.optimizer.max_iter == 500


def test_dispersion_verb(tmp_path):
    p = tmp_path / "d.cfg"
    p.write_text("dispersion.omega = 1.0, 6.0, 11\ndispersion.depths = 1.0, 2.5\n"
                 "wave.period = 1.2\n")
    assert main(["dispersion", str(p), "-o", str(tmp_path / "d")]) == 0
    rows = np.loadtxt(tmp_path / "d" / "dispersion.csv", delimiter=",", skiprows=1)
    assert rows.shape == (24, 5)
    assert rows[:, 4].max() < 1e-12
    hit = rows[(np.abs(rows[:, 0] - 2 * math.pi / 1.2) < 1e-9) & (rows[:, 1] == 2.5)]
    assert 2.23 <= hit[0, 3] <= 2.27


@pytest.mark.parametrize("mode", ["baseline", "pressure", "membrane"])
def test_run_writes_outputs(tmp_path, mode):
    p = _cfg(tmp_path, mode)
    out = tmp_path / "o"
    assert main(["run", str(p), "-o", str(out)]) == 0
    for f in ("mesh.txt", "history.csv", "field.csv", "summary.txt"):
        assert (out / f).exists()
    summary = (out / "summary.txt").read_text()
    assert "motion_term uncontrolled" in summary
    assert "warning: truncation lines" in summary  # L - r < 1.5 lambda here
    hist = np.loadtxt(out / "history.csv", delimiter=",", skiprows=1, ndmin=2)
    assert np.all(np.diff(hist[:, 1]) < 0)
    if mode != "baseline":
        assert (out / "control_u.csv").exists()
    if mode == "membrane":
        assert (out / "control_v.csv").exists() and (out / "eta.csv").exists()


def test_run_is_deterministic(tmp_path):
    p = _cfg(tmp_path, "plate")
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", str(p), "-o", str(a)]) == 0
    assert main(["run", str(p), "-o", str(b)]) == 0
    files = sorted(f.name for f in a.iterdir() if f.suffix == ".csv")
    assert {"history.csv", "control_u.csv", "control_v.csv", "field.csv", "eta.csv"} <= set(files)
    for f in files:
        assert (a / f).read_bytes() == (b / f).read_bytes(), f


def test_check_gradient_verb(tmp_path):
    p = _cfg(tmp_path, "membrane")
    assert main(["check-gradient", str(p), "-o", str(tmp_path / "g")]) == 0
    rows = np.loadtxt(tmp_path / "g" / "gradient_check.csv", delimiter=",", skiprows=1)
    assert rows.shape == (2 * 5, 4)
    p = _cfg(tmp_path, "baseline", "b.cfg")
    assert main(["check-gradient", str(p)]) == 1


def test_validate_mesh_verb(tmp_path, coarse_mesh, capsys):
    good = tmp_path / "m.txt"
    write_mesh(coarse_mesh, good)
    assert main(["validate-mesh", str(good)]) == 0
    assert main(["validate-mesh", str(good), "--control-intervals", "1"]) == 2
    bad = tmp_path / "bad.txt"
    bad.write_text("nonsense\n")
    assert main(["validate-mesh", str(bad)]) == 2
    assert main(["validate-mesh", str(tmp_path / "missing.txt")]) == 1


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "wavecontrol.cli", "--version"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip()
