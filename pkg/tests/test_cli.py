import json
import subprocess
import sys
from pathlib import Path

import jsonschema
import pytest

from branched_rough import schemas
from branched_rough.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "demos" / "configs"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
    return str(p)


class TestLift:
    def test_config(self, capsys):
        code, out, err = run(capsys, "lift", "--config", str(CONFIGS / "smooth_integrate.json"))
        assert code == 0 and "lifted 513 samples" in err
        report = json.loads(out)
        jsonschema.validate(report, schemas.LIFT_REPORT)
        assert report["path"]["d"] == 2

    def test_csv(self, capsys):
        code, out, _ = run(capsys, "lift", "--csv", str(CONFIGS / "zigzag.csv"), "--p", "2.0")
        assert code == 0
        vals = json.loads(out)["path"]["values"]
        assert [e["value"] for e in vals[-1]["trees"][:2]] == [0.0, 1.0]

    def test_bad_csv_row(self, capsys, tmp_path):
        path = write(tmp_path, "bad.csv", "t,x1\n0,0\n0.5,oops\n1,1\n")
        code, _, err = run(capsys, "lift", "--csv", path)
        assert code == 2 and "row 3" in err

    def test_missing_input(self, capsys):
        code, _, err = run(capsys, "lift")
        assert code == 2 and "--config" in err

    @pytest.mark.parametrize(
        "cfg,match",
        [
            ({"path": {"generator": "spiral"}}, "generator"),
            ({"path": {"generator": "linear"}, "p": 0.5}, "p must be"),
            ({"path": {"generator": "linear"}, "p": 4.5}, "floor"),
            ({"path": {"generator": "linear"}, "lift": {"kind": "magic"}}, "lift kind"),
            ({"path": {"generator": "linear"}, "p": 3.0, "lift": {"kind": "ito"}}, "p_floor"),
            ({"nothing": 1}, "missing"),
        ],
    )
    def test_config_errors(self, capsys, tmp_path, cfg, match):
        code, _, err = run(capsys, "lift", "--config", write(tmp_path, "c.json", cfg))
        assert code == 2 and match in err

    def test_malformed_json(self, capsys, tmp_path):
        code, _, err = run(capsys, "lift", "--config", write(tmp_path, "c.json", "{oops"))
        assert code == 2 and "invalid JSON" in err


class TestIntegrate:
    def test_linear_young(self, capsys):
        code, out, _ = run(capsys, "integrate", "--config", str(CONFIGS / "linear_young.json"))
        assert code == 0
        report = json.loads(out)
        jsonschema.validate(report, schemas.INTEGRATE_REPORT)
        assert report["Y"]["trees"][0]["value"] == pytest.approx(0.5, abs=1e-6)

    def test_smooth_report(self, capsys, tmp_path):
        out_file = tmp_path / "r.json"
        code, out, _ = run(capsys, "integrate", "--config", str(CONFIGS / "smooth_integrate.json"), "--out", str(out_file))
        assert code == 0 and out == ""
        report = json.loads(out_file.read_text())
        jsonschema.validate(report, schemas.INTEGRATE_REPORT)
        assert set(report["y_tilde"]) >= {"1", "2", "1(2)", "1 2"}
        assert len(report["errors"]) == 4

    def test_gamma_not_above_p(self, capsys, tmp_path):
        cfg = json.loads((CONFIGS / "linear_young.json").read_text())
        cfg["gamma"] = 1.0
        code, _, err = run(capsys, "integrate", "--config", write(tmp_path, "c.json", cfg))
        assert code == 2 and "gamma" in err

    def test_off_grid_interval(self, capsys, tmp_path):
        cfg = json.loads((CONFIGS / "linear_young.json").read_text())
        cfg["interval"] = [0.0, 0.3]
        code, _, err = run(capsys, "integrate", "--config", write(tmp_path, "c.json", cfg))
        assert code == 2 and "grid" in err

    def test_non_convergence_exit_code(self, capsys, tmp_path):
        rows = "\n".join(f"{k / 64},{k % 2}" for k in range(65))
        write(tmp_path, "osc.csv", "t,x1\n" + rows + "\n")
        cfg = {"path": {"csv": "osc.csv"}, "p": 1.0, "gamma": 1.5, "one_form": {"d": 1, "e": 1, "components": [[[{"monomial": [1], "coeff": 1}]]]}}
        code, _, err = run(capsys, "integrate", "--config", write(tmp_path, "c.json", cfg))
        assert code == 3 and "contracting" in err


class TestVerify:
    def test_pi_suite(self, capsys):
        code, out, err = run(capsys, "verify", "--config", str(CONFIGS / "ito_pi.json"))
        report = json.loads(out)
        jsonschema.validate(report, schemas.VERIFY_REPORT)
        assert code == 0 and report["passed"] and "checks passed" in err

    def test_small_algebra_suite(self, capsys, tmp_path):
        cfg = write(tmp_path, "c.json", {"d": 1, "n": 2, "instances": 5})
        code, out, _ = run(capsys, "verify", "--suite", "algebra", "--config", cfg)
        assert code == 0
        jsonschema.validate(json.loads(out), schemas.VERIFY_REPORT)

    def test_unknown_suite(self, capsys):
        code, _, err = run(capsys, "verify", "--suite", "bogus")
        assert code == 2 and "unknown suite" in err

    def test_failed_check_exit_code(self, capsys, tmp_path, monkeypatch):
        from branched_rough import cli
        from branched_rough.verification import Check

        monkeypatch.setattr(cli, "run_suite", lambda name, **kw: [Check("always_red", False, 1.0, 0.0)])
        code, out, err = run(capsys, "verify", "--suite", "algebra")
        assert code == 1 and json.loads(out)["passed"] is False and "always_red" in err


class TestMetrics:
    def test_report(self, capsys):
        code, out, _ = run(capsys, "metrics", "--config", str(CONFIGS / "metrics.json"))
        report = json.loads(out)
        jsonschema.validate(report, schemas.METRICS_REPORT)
        assert code == 0 and report["dp"] == pytest.approx(0.1, rel=1e-6)

    def test_same_path(self, capsys, tmp_path):
        cfg = write(tmp_path, "c.json", {"path": {"generator": "zigzag", "d": 1, "n": 32}, "p": 1.0})
        code, out, _ = run(capsys, "metrics", "--config", cfg)
        report = json.loads(out)
        assert code == 0 and report["dp"] == 0.0 and report["pvar_1"] == pytest.approx(2.0)

    def test_grid_mismatch(self, capsys, tmp_path):
        cfg = write(tmp_path, "c.json", {"path": {"generator": "linear", "n": 8}, "path2": {"generator": "linear", "n": 16}, "p": 1.0})
        code, _, err = run(capsys, "metrics", "--config", cfg)
        assert code == 2 and "same grid" in err


def test_help_lists_subcommands():
    out = subprocess.run([sys.executable, "-m", "branched_rough", "--help"], capture_output=True, text=True, check=True).stdout
    for cmd in ("lift", "integrate", "verify", "metrics"):
        assert cmd in out


def test_seed_changes_generated_path(capsys):
    _, a, _ = run(capsys, "lift", "--config", str(CONFIGS / "smooth_integrate.json"), "--seed", "1")
    _, b, _ = run(capsys, "lift", "--config", str(CONFIGS / "smooth_integrate.json"), "--seed", "2")
    assert a != b
