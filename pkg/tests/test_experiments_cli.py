import json
import subprocess
import sys

import pytest

from islab.cli import main
from islab.experiments import (PRESETS, ExperimentConfig, parse_aseq, parse_damping, parse_int,
                               parse_real, report, run, validate)
from islab.operators import StepDamping

SMALL = {
    "ex52": {"steps": "500", "samples": "10"},
    "ex53": {"steps": "500", "samples": "5", "cert-samples": "100"},
    "thm46-growth": {},
    "thm44-ensemble": {"samples": "10", "steps": "40"},
    "sR-scan": {"modes": "16", "n-grid": "201"},
    "cox-eigs": {"modes": "32"},
    "sola-backward-growth": {"modes": "16", "t-end": "2"},
    "shift-optimality": {"cells": "256"},
}


def test_every_preset_has_a_small_config():
    assert set(SMALL) == set(PRESETS)


def test_parsers():
    assert parse_real("2^-8") == 2.0 ** -8
    assert parse_real("1/4") == 0.25
    assert parse_int("1e4") == 10000
    with pytest.raises(ValueError):
        parse_int("2.5")
    b = parse_damping("step:2,0")
    assert isinstance(b, StepDamping) and b.integral() == 1.0
    assert parse_damping("1") == 1.0
    assert parse_aseq("power:2")(1) == 0.25
    with pytest.raises(ValueError):
        parse_aseq("geometric")


@pytest.mark.parametrize("name", sorted(SMALL))
def test_preset_runs_and_names_anchor(name, tmp_path):
    res = run(ExperimentConfig(name, SMALL[name], 0, str(tmp_path)))
    assert res.status == 0, res.summary
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["anchor"] == PRESETS[name].anchor and summary["anchor"]
    assert summary["checks"] and all("margin" in c for c in summary["checks"])
    eff = json.loads((tmp_path / "effective_config.json").read_text())
    assert eff["preset"] == name
    script = (tmp_path / "plot.gp").read_text()
    for line in script.splitlines():
        if line.startswith("plot "):
            assert (tmp_path / line.split("'")[1]).exists()


@pytest.mark.parametrize("name", ["ex52", "ex53", "thm44-ensemble", "sola-backward-growth", "thm46-growth"])
def test_determinism_byte_identical_csv(name, tmp_path):
    outs = []
    for d in ("a", "b"):
        out = tmp_path / d
        run(ExperimentConfig(name, SMALL[name], 7, str(out), jobs=2 if d == "b" else 1))
        outs.append({p.name: p.read_bytes() for p in sorted(out.glob("*.csv"))})
    assert outs[0] and outs[0] == outs[1]


def test_seed_changes_samples(tmp_path):
    for s in (1, 2):
        run(ExperimentConfig("ex52", SMALL["ex52"], s, str(tmp_path / str(s))))
    a = (tmp_path / "1" / "ex52_samples.csv").read_bytes()
    b = (tmp_path / "2" / "ex52_samples.csv").read_bytes()
    assert a != b


def test_validate_defaults():
    val = validate(ExperimentConfig("ex52"))
    assert val.ok
    assert val.effective["params"] == {k: v[1] for k, v in PRESETS["ex52"].params.items()}


def test_validate_eps_rule():
    val = validate(ExperimentConfig("ex52", {"eps": "0.5"}))
    assert "eps must be < 2^-7" in val.errors


def test_validate_aggregates_errors():
    val = validate(ExperimentConfig("ex52", {"bogus": "1", "eps": "0.5"}))
    assert len(val.errors) == 2
    assert any("bogus" in e for e in val.errors)
    val = validate(ExperimentConfig("ex52", {"steps": "abc", "samples": "x"}))
    assert len(val.errors) == 2


def test_validate_unknown_preset():
    val = validate(ExperimentConfig("nope"))
    assert not val.ok and "nope" in val.errors[0]


def test_validate_dt_gate_warning():
    val = validate(ExperimentConfig("sola-backward-growth", {"dt": "0.1"}))
    assert val.ok and any("suggested dt" in w for w in val.warnings)


def test_validate_dimension_cap(monkeypatch):
    monkeypatch.setenv("ISLAB_MAX_DIM", "64")
    val = validate(ExperimentConfig("cox-eigs", {"modes": "64"}))
    assert any("ISLAB_MAX_DIM" in e for e in val.errors)


def test_cli_dry_run(capsys, tmp_path):
    code = main(["ex52", "--eps", "2^-9", "--dry-run", "--out", str(tmp_path)])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["params"]["eps"] == "2^-9"
    assert not (tmp_path / "summary.json").exists()


def test_cli_validate_command(capsys):
    assert main(["validate", "cox-eigs", "--modes", "64"]) == 0
    assert main(["validate", "ex52", "--eps", "0.5"]) == 2
    assert "eps must be < 2^-7" in capsys.readouterr().err


def test_cli_config_errors(capsys):
    assert main(["no-such-preset"]) == 2
    assert main(["ex52", "--steps"]) == 2
    assert main(["run"]) == 2


def test_cli_run_and_report(capsys, tmp_path):
    ok = tmp_path / "ok"
    assert main(["run", "ex52", "--steps", "200", "--samples", "5", "--out", str(ok)]) == 0
    out = capsys.readouterr().out
    assert "[PASS]" in out and PRESETS["ex52"].anchor in out
    assert main(["report", str(ok)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert len(doc["checks"]) == 3 and all(c["pass"] for c in doc["checks"])


def test_report_empty():
    doc, status = report([])
    assert status == 0 and doc["warnings"] == ["no artifacts found"] and doc["checks"] == []


def test_report_mixed_and_missing(tmp_path):
    good, bad = tmp_path / "good", tmp_path / "bad"
    assert run(ExperimentConfig("ex52", SMALL["ex52"], 0, str(good))).status == 0
    # a 64-cell truncation cannot resolve the shift's s_R to one grid step
    assert run(ExperimentConfig("shift-optimality", {"cells": "64"}, 0, str(bad))).status == 1
    doc, status = report([good, bad, tmp_path / "absent"])
    assert status == 1
    assert doc["missing"] == [str(tmp_path / "absent")]
    assert {r["preset"] for r in doc["runs"]} == {"ex52", "shift-optimality"}
    failing = [c for c in doc["checks"] if not c["pass"]]
    assert failing and all(float(c["margin"]) < 0 for c in failing)


def test_cli_prints_non_finite_values(capsys, tmp_path):
    assert main(["shift-optimality", "--cells", "64", "--out", str(tmp_path)]) == 1
    out = capsys.readouterr().out
    assert "[FAIL]" in out and "value=inf" in out


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "islab.cli", "validate", "ex52"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and '"preset": "ex52"' in proc.stdout
