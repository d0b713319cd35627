import json

import pytest

from superhs.cli import main
from superhs.reporting import VerificationReport


def write_config(path, **overrides):
    config = {
        "n_modes": 64,
        "dt": 2e-3,
        "t_end": 0.1,
        "n_grassmann": 2,
        "sample_stride": 10,
        "initial": {
            "u": [{"level": [], "cos": {"1": 1.0}}],
            "xi": [
                {"level": [1], "cos": {"1": 0.1}},
                {"level": [2], "sin": {"1": 0.1}},
            ],
        },
    }
    config.update(overrides)
    path.write_text(json.dumps(config))
    return path


def _strip_nondeterministic(text):
    payload = json.loads(text)
    payload["metadata"].pop("timestamp", None)
    for entry in payload["entries"]:
        entry.pop("elapsed", None)
    return payload


def test_verify_single_suite(tmp_path, capsys):
    out = tmp_path / "report.json"
    assert main(["verify", "--suite", "susy", "--out", str(out)]) == 0
    report = VerificationReport.from_json(out.read_text())
    assert [e.check_id for e in report.entries] == ["susy"]
    assert report.all_passed()
    captured = capsys.readouterr()
    assert "PASS" in captured.out


def test_verify_unknown_suite_exits_2(capsys):
    assert main(["verify", "--suite", "bogus"]) == 2
    assert "unknown suite" in capsys.readouterr().err


def test_verify_empty_suite_exits_2():
    assert main(["verify", "--suite", ""]) == 2


def test_verify_all_runs_ten_checks(tmp_path):
    out = tmp_path / "all.json"
    assert main(["verify", "--suite", "all", "--out", str(out)]) == 0
    report = VerificationReport.from_json(out.read_text())
    assert len(report.entries) == 10
    assert {e.check_id for e in report.entries} == {
        "bracket", "geodesic", "biham", "lagrangian", "susy",
        "superspace", "lax", "recursion", "conservation", "jacobi",
    }
    assert all(e.residual == "" for e in report.entries)


def test_verify_reports_deterministic(tmp_path):
    out1 = tmp_path / "r1.json"
    out2 = tmp_path / "r2.json"
    assert main(["verify", "--suite", "geodesic,biham", "--out", str(out1)]) == 0
    assert main(["verify", "--suite", "geodesic,biham", "--out", str(out2)]) == 0
    assert _strip_nondeterministic(out1.read_text()) == _strip_nondeterministic(out2.read_text())


def test_simulate_zero_data(tmp_path):
    cfg = write_config(tmp_path / "cfg.json", initial={})
    out_dir = tmp_path / "out"
    assert main(["simulate", "--config", str(cfg), "--out-dir", str(out_dir)]) == 0
    summary = json.loads((out_dir / "summary.json").read_text())
    assert summary["status"] == "ok"
    for record in summary["conservation"].values():
        assert record["max_abs_drift"] == 0.0
    assert (out_dir / "series.csv").exists()
    assert (out_dir / "final_state.csv").exists()


def test_simulate_records_conservation(tmp_path):
    cfg = write_config(tmp_path / "cfg.json")
    out_dir = tmp_path / "out"
    assert main(["simulate", "--config", str(cfg), "--out-dir", str(out_dir)]) == 0
    summary = json.loads((out_dir / "summary.json").read_text())
    assert summary["status"] == "ok"
    assert summary["conservation"]["H1_body"]["max_rel_drift"] < 1e-8
    assert "residual_check" in summary


def test_simulate_blowup_exits_3(tmp_path):
    cfg = write_config(tmp_path / "cfg.json", dt=50.0, t_end=500.0)
    out_dir = tmp_path / "boom"
    with pytest.warns(RuntimeWarning):
        code = main(["simulate", "--config", str(cfg), "--out-dir", str(out_dir)])
    assert code == 3
    summary = json.loads((out_dir / "summary.json").read_text())
    assert summary["status"] == "blowup"
    assert summary["blowup_time"] > 0


def test_simulate_malformed_config_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["simulate", "--config", str(bad), "--out-dir", str(tmp_path / "o")]) == 2
    assert "bad configuration" in capsys.readouterr().err

    wrong = write_config(tmp_path / "wrong.json", n_modes=77)
    assert main(["simulate", "--config", str(wrong), "--out-dir", str(tmp_path / "o2")]) == 2


def test_simulate_missing_config_exits_2(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "nope.json"), "--out-dir", str(tmp_path)]) == 2


def test_report_passing_file(tmp_path, capsys):
    out = tmp_path / "rep.json"
    main(["verify", "--suite", "geodesic", "--out", str(out)])
    assert main(["report", str(out)]) == 0
    assert "PASS" in capsys.readouterr().out


def test_report_failing_entry_exits_1(tmp_path, capsys):
    out = tmp_path / "rep.json"
    main(["verify", "--suite", "geodesic", "--out", str(out)])
    payload = json.loads(out.read_text())
    payload["entries"][0]["passed"] = False
    payload["entries"][0]["residual"] = "(sum (term 1))"
    doctored = tmp_path / "doctored.json"
    doctored.write_text(json.dumps(payload))
    assert main(["report", str(doctored)]) == 1
    captured = capsys.readouterr()
    assert "FAIL" in captured.out
    assert "residual" in captured.out


def test_report_unreadable_exits_2(tmp_path, capsys):
    assert main(["report", str(tmp_path / "missing.json")]) == 2
    assert "cannot read" in capsys.readouterr().err


def test_report_requires_files():
    with pytest.raises(SystemExit) as info:
        main(["report"])
    assert info.value.code == 2
