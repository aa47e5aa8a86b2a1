import json

import pytest

from potcap.cli import COLUMNS, main, run, validate
from potcap.config import EXPERIMENTS, ConfigError, default_config, parse_config


def test_parse_dotted_keys_and_json_values():
    cfg = parse_config("experiment = capacity\nschedule.j = [16, 64]\npotential.terms[0].m = 2.5  # comment\n")
    assert cfg.get("schedule.j") == [16, 64]
    assert cfg.get("potential.terms[0].m") == 2.5
    assert cfg.get("potential.terms[0].b") == 1.0  # merged from the defaults
    assert cfg.where("schedule.j") == "<config>:2"


def test_parse_errors_carry_line_numbers():
    with pytest.raises(ConfigError) as e:
        parse_config("experiment = capacity\nno equals here\n9bad = 1\nx =\nschedule.j = 1\nschedule.j = 2\n", "c.cfg")
    msgs = e.value.messages
    assert msgs[0].startswith("c.cfg:2:") and msgs[1].startswith("c.cfg:3:")
    assert msgs[2].startswith("c.cfg:4:") and "duplicate" in msgs[3]
    with pytest.raises(ConfigError, match="unknown experiment"):
        parse_config("experiment = nonsense")
    with pytest.raises(ConfigError, match="missing required"):
        parse_config("domain.h = 0.1")


@pytest.mark.parametrize("exp", EXPERIMENTS)
def test_defaults_validate_cleanly(exp):
    assert validate(default_config(exp)) == []


def test_set_touching_the_boundary_is_reported():
    cfg = parse_config("experiment = capacity\nset.point = [1.0, 0.0, 0.0]\n", "t.cfg")
    diags = validate(cfg)
    assert any(d.startswith("t.cfg:2: set:") and "clearance" in d for d in diags)


def test_wide_boundary_collar_is_reported():
    cfg = parse_config("experiment = density\nschedule.mu = 0.5\n", "t.cfg")
    assert any(d.startswith("t.cfg:2: schedule.mu:") for d in validate(cfg))


def test_coarse_grid_is_reported():
    cfg = parse_config("experiment = capacity\nset.point = [0.7, 0.0, 0.0]\ndomain.h = 0.1\n", "t.cfg")
    assert any(d.startswith("t.cfg:3: domain.h:") for d in validate(cfg))


def _write(tmp_path, text):
    p = tmp_path / "exp.cfg"
    p.write_text(text)
    return str(p)


def test_main_writes_outputs(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["capacity", "--out", str(out)]) == 0
    header = (out / "trace.csv").read_text().splitlines()[0]
    assert header == ",".join(COLUMNS["capacity"])
    report = json.loads((out / "report.json").read_text())
    assert report["verdicts"][0]["value"] == "zero_detected"
    assert "zero_detected" in capsys.readouterr().out


def test_reruns_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["kato", "--out", str(d)]) == 0
    assert (a / "trace.csv").read_bytes() == (b / "trace.csv").read_bytes()


def test_summary_numbers_appear_in_the_report(tmp_path):
    report = run(default_config("dichotomy"), str(tmp_path))
    stored = json.loads((tmp_path / "report.json").read_text())
    for k, v in report["summary"].items():
        assert k in stored["summary"]
        if isinstance(v, float):
            assert stored["summary"][k] == pytest.approx(v, rel=1e-15)


def test_invalid_config_exits_2_without_outputs(tmp_path, capsys):
    cfg = _write(tmp_path, "experiment = capacity\nschedule.j = []\n")
    out = tmp_path / "out"
    assert main(["capacity", "--config", cfg, "--out", str(out)]) == 2
    assert not out.exists()
    assert "exp.cfg:2" in capsys.readouterr().err


def test_validate_subcommand(tmp_path, capsys):
    good = _write(tmp_path, "experiment = rates\n")
    assert main(["validate", "--config", good]) == 0
    bad = _write(tmp_path, "experiment = rates\npotential.terms[0].m = 1.5\n")
    assert main(["validate", "--config", bad]) == 1
    assert "potential" in capsys.readouterr().out


def test_experiment_mismatch(tmp_path):
    cfg = _write(tmp_path, "experiment = rates\n")
    assert main(["capacity", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


def test_kato_and_lorentz_runs(tmp_path):
    rep = run(default_config("kato"), str(tmp_path / "k"))
    assert rep["summary"]["worst_violation"] <= 1e-12
    rep = run(default_config("lorentz"), str(tmp_path / "l"))
    assert rep["summary"]["classification"] == "finite"


def test_output_directory_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("POTCAP_OUT", str(tmp_path))
    assert main(["rates"]) == 0
    assert (tmp_path / "rates" / "trace.csv").exists()
