import subprocess
import sys

import pytest

from perflab import config
from perflab.cli import main, parse_values
from perflab.errors import ArgumentError, ConfigError

SMALL = """\
[experiment]
name = "small"
seed = 3
output_dir = "{out}"
methods = ["np2m2", "rgd_lr"]

[dataset]
kind = "circles"
n_per_class = 15
noise_std = 0.2

[kernel]
kind = "rbf"
sigma = 0.3

[map]
kind = "feature_simulated"
d = [0.2, 0.4]
n_candidates = 5

[rrm]
alpha = 0.3
T_max = 5
trials = 2
burn_in = 1
"""


def line_of(text, key):
    return next(i for i, ln in enumerate(text.splitlines(), 1) if ln.startswith(key + " "))


@pytest.fixture
def small(tmp_path):
    p = tmp_path / "small.toml"
    p.write_text(SMALL.format(out=(tmp_path / "out").as_posix()))
    return p


def test_bundled_configs_load():
    from perflab.cli import bundled_configs
    names = bundled_configs()
    assert {"circles_featuresim", "circles_labelflip", "linear_featureshift", "bankruptcy"} <= set(names)
    for p in names.values():
        config.load(p)


def test_defaults_filled(small):
    c = config.load(small)
    assert c["solver"]["tol"] == 1e-6 and c["rrm"]["C_init"] == 1.0


def test_unknown_key_reports_line(small, capsys):
    text = small.read_text().replace("noise_std = 0.2", "noise_std = 0.2\nnoise_sd = 0.1")
    small.write_text(text)
    assert main(["run", str(small)]) == 2
    err = capsys.readouterr().err
    assert f"line {line_of(text, 'noise_sd')}" in err and "dataset.noise_sd" in err


def test_alpha_out_of_range_rejected(small):
    small.write_text(small.read_text().replace("alpha = 0.3", "alpha = 0.6"))
    with pytest.raises(ConfigError) as e:
        config.load(small)
    assert e.value.line == line_of(small.read_text(), "alpha")


def test_wrong_type_rejected(small):
    small.write_text(small.read_text().replace("T_max = 5", 'T_max = "5"'))
    with pytest.raises(ConfigError, match="rrm.T_max must be a int"):
        config.load(small)


def test_toml_syntax_error_has_line(small):
    small.write_text(small.read_text().replace("sigma = 0.3", "sigma = = 0.3"))
    with pytest.raises(ConfigError) as e:
        config.load(small)
    assert e.value.line == line_of(small.read_text(), "sigma")


def test_missing_section():
    with pytest.raises(ConfigError, match=r"missing section \[map\]"):
        config.parse('[experiment]\nname="a"\noutput_dir="b"\n[dataset]\nkind="circles"\nn_per_class=2\n')


def test_values_parsing():
    assert parse_values("0.2, 0.3,0.49") == [0.2, 0.3, 0.49]
    for bad in ("", " , ", "a,b"):
        with pytest.raises(ArgumentError):
            parse_values(bad)


def test_sweep_empty_values_exit_2(small):
    assert main(["sweep", str(small), "--param", "alpha", "--values", ""]) == 2
    assert main(["sweep", str(small), "--param", "sigma", "--values", "0.1"]) == 2
    assert main(["sweep", str(small), "--param", "alpha", "--values", "0.7"]) == 2


def test_run_report_roundtrip_and_tamper(small, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", str(small)]) == 0
    stored = (out / "summary.csv").read_text()
    assert len(stored.splitlines()) == 1 + 2 * 2
    capsys.readouterr()
    assert main(["report", str(out)]) == 0
    assert capsys.readouterr().out == stored
    trace = out / "traces/np2m2/d=0.2/alpha=0.3/trial_001.csv"
    lines = trace.read_text().splitlines(keepends=True)
    cells = lines[3].split(",")
    cells[4] = "0.123"
    lines[3] = ",".join(cells)
    trace.write_text("".join(lines))
    assert main(["report", str(out)]) == 1
    assert "trial_001.csv" in capsys.readouterr().err


def test_report_detects_edited_summary(small, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", str(small)]) == 0
    s = out / "summary.csv"
    lines = s.read_text().splitlines(keepends=True)
    lines[2] = lines[2].replace("np2m2", "np2m2 ")
    s.write_text("".join(lines))
    assert main(["report", str(out)]) == 1
    assert "line 3" in capsys.readouterr().err


def test_rerun_byte_identical_and_workers(small, tmp_path, monkeypatch):
    out = tmp_path / "out"
    assert main(["run", str(small)]) == 0
    first = {p.relative_to(out): p.read_bytes() for p in out.rglob("*.csv")}
    monkeypatch.setenv("PERFLAB_WORKERS", "2")
    assert main(["run", str(small), "--output-dir", str(tmp_path / "out2")]) == 0
    second = {p.relative_to(tmp_path / "out2"): p.read_bytes() for p in (tmp_path / "out2").rglob("*.csv")}
    assert first == second
    monkeypatch.setenv("PERFLAB_WORKERS", "0")
    assert main(["run", str(small)]) == 2


def test_sweep_alpha_layout(small, tmp_path):
    out = tmp_path / "sw"
    assert main(["sweep", str(small), "--param", "alpha", "--values", "0.2,0.4", "--output-dir", str(out)]) == 0
    assert (out / "traces/np2m2/d=0.4/alpha=0.2/trial_000.csv").exists()
    assert len((out / "summary.csv").read_text().splitlines()) == 1 + 2 * 2 * 2


def test_module_entry_exit_code(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[nope]\n")
    res = subprocess.run([sys.executable, "-m", "perflab", "run", str(bad)], capture_output=True, text=True)
    assert res.returncode == 2
    assert "line 1" in res.stderr
