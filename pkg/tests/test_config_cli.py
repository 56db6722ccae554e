import random

import numpy as np
import pytest

from hybrid_inverter import cli
from hybrid_inverter.config import Config, ConfigError, load_config, parse_config

SHORT = "t_end_s = 0.05\n"


def write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


# --- config ---

def test_defaults_are_reference_setup():
    cfg = parse_config("")
    assert cfg == Config()
    prm = cfg.params()
    assert (prm.R, prm.L, prm.C, prm.V_dc) == (50.0, 450e-6, 2.5e-3, 1200.0)
    assert cfg.initial_state() == (70.0, 0.0)


def test_comments_and_whitespace():
    cfg = parse_config("# header\n  r_ohm =  60   # load\n\nstart_on_reference = yes\n")
    assert cfg.r_ohm == 60.0 and cfg.initial_state() is None


@pytest.mark.parametrize("text,key,line", [
    ("r_ohm = -5\n", "r_ohm", 1),
    ("\nbogus = 1\n", "bogus", 2),
    ("r_ohm = 1\nr_ohm = 2\n", "r_ohm", 2),
    ("c_farad = lots\n", "c_farad", 1),
    ("load_known = maybe\n", "load_known", 1),
    ("decimation = 0\n", "decimation", 1),
    ("integrator = euler\n", "integrator", 1),
    ("f_hz\n", "f_hz", 1),
])
def test_errors_name_key_and_line(text, key, line):
    with pytest.raises(ConfigError) as exc:
        parse_config(text, "x.cfg")
    assert exc.value.key == key and exc.value.line == line
    assert f"x.cfg:{line}" in str(exc.value) and key in str(exc.value)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.cfg")


def test_sweep_values_inclusive():
    cfg = parse_config("sweep_start = 10\nsweep_stop = 90\nsweep_step = 10\n")
    assert cfg.sweep_values() == [10.0 * k for k in range(1, 10)]


# --- cli ---

def test_simulate_writes_outputs(tmp_path, capsys):
    cfg = write(tmp_path, SHORT)
    out = tmp_path / "o"
    code = cli.main(["simulate", "--config", str(cfg), "--out", str(out), "--plot"])
    assert code == 0
    assert {p.name for p in out.iterdir()} == {"trace.csv", "metrics.txt", "voltage.svg", "error.svg"}
    assert "rms_error_final_period_v" in capsys.readouterr().out


def test_rerun_is_identical(tmp_path):
    cfg = write(tmp_path, SHORT)
    for d in ("a", "b"):
        assert cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path / d), "--seed-free"]) == 0
    for f in ("trace.csv", "metrics.txt"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_decimation_flag(tmp_path):
    cfg = write(tmp_path, SHORT)
    cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path), "--decimation", "100"])
    rows = np.loadtxt(tmp_path / "trace.csv", delimiter=",", skiprows=2)
    assert len(rows) == 50_000 // 100 + 1


def test_invalid_config_exits_2_without_output(tmp_path, capsys):
    cfg = write(tmp_path, "r_ohm = -5\n")
    out = tmp_path / "o"
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(out)]) == 2
    assert "r_ohm" in capsys.readouterr().err
    assert not out.exists()


@pytest.mark.parametrize("argv,flag", [
    (["sweep", "--range", "90:10:10"], "--range"),
    (["sweep", "--range", "1:2"], "--range"),
    (["droop", "--k-p", "-0.01"], "--k-p"),
    (["droop", "--k-q", "-1"], "--k-q"),
    (["loadstep", "--r-new", "0"], "--r-new"),
    (["loadstep", "--t-event", "99"], "--t-event"),
    (["simulate", "--decimation", "0"], "--decimation"),
])
def test_flag_validation(tmp_path, capsys, argv, flag):
    out = tmp_path / "o"
    assert cli.main(argv + ["--out", str(out)]) == 2
    assert flag in capsys.readouterr().err
    assert not out.exists()


def test_internal_error_exit_code(tmp_path, monkeypatch):
    def broken(scn):
        raise RuntimeError("boom")
    monkeypatch.setattr(cli, "run", broken)
    assert cli.main(["simulate", "--out", str(tmp_path)]) == 4


def test_seed_free_blocks_rng():
    with cli.forbid_rng():
        with pytest.raises(RuntimeError):
            random.random()
        with pytest.raises(RuntimeError):
            np.random.default_rng(0)
    random.random()  # restored


def test_loadstep_noop_matches_simulate(tmp_path):
    cfg = write(tmp_path, SHORT)
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "s")]) == 0
    assert cli.main(["loadstep", "--config", str(cfg), "--out", str(tmp_path / "l"),
                     "--r-new", "50", "--t-event", "0.02"]) == 0
    assert (tmp_path / "s" / "trace.csv").read_bytes() == (tmp_path / "l" / "trace.csv").read_bytes()


@pytest.mark.slow
def test_loadstep_unknown_eighty_ohm_diverges(tmp_path):
    assert cli.main(["loadstep", "--r-new", "80", "--unknown", "--out", str(tmp_path)]) == 3
    text = (tmp_path / "metrics.txt").read_text()
    assert "diverged_by_growth = True" in text


@pytest.mark.slow
def test_loadstep_known_sixty_ohm(tmp_path):
    assert cli.main(["loadstep", "--r-new", "60", "--known", "--out", str(tmp_path)]) == 0


def test_sweep_with_cutoff_overlay(tmp_path):
    cfg = write(tmp_path, "t_end_s = 0.02\nstart_on_reference = true\n")
    out = tmp_path / "o"
    assert cli.main(["sweep", "--config", str(cfg), "--axis", "v_m", "--range", "600:800:100",
                     "--out", str(out), "--plot"]) == 0
    assert (out / "sweep.csv").read_text().startswith("v_m,rms_error")
    assert "stroke-dasharray" in (out / "sweep.svg").read_text()


def test_droop_reports_settled_point(tmp_path):
    cfg = write(tmp_path, "t_end_s = 0.3\n")
    out = tmp_path / "o"
    assert cli.main(["droop", "--config", str(cfg), "--t-event", "0.1", "--out", str(out), "--plot"]) == 0
    items = dict(line.split(" = ") for line in (out / "metrics.txt").read_text().splitlines())
    assert 177.0 < float(items["settled_v_m_v"]) <= 185.0
    assert (out / "droop.svg").exists()


def test_boundary_command(capsys):
    assert cli.main(["boundary", "--axis", "v_m"]) == 0
    value = float(capsys.readouterr().out.split("=")[1])
    assert value == pytest.approx(714.2, abs=0.05)
    assert cli.main(["boundary", "--axis", "omega", "--fixed", "177"]) == 0
    assert float(capsys.readouterr().out.split("=")[1]) == pytest.approx(1.97e3, rel=5e-3)
