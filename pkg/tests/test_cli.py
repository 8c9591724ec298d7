import json

import pytest

from catpulse import cli


def run(tmp_path, *args):
    return cli.main([*args, "--out", str(tmp_path)])


def test_phase_trace_default(tmp_path, capsys):
    assert run(tmp_path, "phase-trace") == 0
    lines = (tmp_path / "phase_trace.csv").read_text().splitlines()
    assert lines[0] == ("t_s,re_theta_minus,im_theta_minus_unwrapped,re_theta_plus,"
                        "im_theta_plus_unwrapped,f_minus,f_plus")
    summary = json.loads((tmp_path / "phase_trace_summary.json").read_text())
    assert len(lines) == summary["rows"] + 1
    assert "Im theta-(t_op)" in capsys.readouterr().out


def test_phase_trace_calibration_failure_exits_3(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"phase_trace": {"calibrate": {"free_parameter": "phi"}}}))
    assert run(tmp_path, "phase-trace", "--config", str(cfg)) == 3


def test_config_error_exits_2(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"bogus": 1}')
    assert run(tmp_path, "decoherence", "--config", str(cfg)) == 2
    assert "bogus" in capsys.readouterr().err


def test_numerical_error_exits_3(tmp_path):
    assert run(tmp_path, "wigner", "--nmax", "5") == 3


def test_decoherence_scaled(tmp_path):
    assert run(tmp_path, "decoherence", "--scale-delta-e", "1000") == 0
    text = (tmp_path / "decoherence.csv").read_text().splitlines()
    assert text[0].startswith("# tau_r=1.00") and "scale=1000" in text[0]
    assert text[1] == "t_s,p0,p1,re_pt,im_pt,coherence"
    assert text[2].split(",")[1] == "1.000000000000e+00"


def test_pt_halved_flag(tmp_path):
    assert run(tmp_path, "decoherence", "--pt-halved", "true") == 0
    halved = (tmp_path / "decoherence.csv").read_text().splitlines()[4].split(",")
    assert run(tmp_path, "decoherence", "--pt-halved", "false") == 0
    nominal = (tmp_path / "decoherence.csv").read_text().splitlines()[4].split(",")
    assert float(halved[4]) == pytest.approx(0.5 * float(nominal[4]))


def test_sequential_deterministic(tmp_path):
    assert run(tmp_path, "sequential", "--seed", "5", "--scale-delta-e", "1000") == 0
    first = (tmp_path / "sequential.jsonl").read_bytes()
    summary = json.loads((tmp_path / "sequential_summary.json").read_text())
    assert abs(summary["z_score"]) < 3
    assert run(tmp_path, "sequential", "--seed", "5", "--scale-delta-e", "1000") == 0
    assert (tmp_path / "sequential.jsonl").read_bytes() == first


def test_wigner_outputs(tmp_path):
    assert run(tmp_path, "wigner", "--scale-delta-e", "1000") == 0
    diags = json.loads((tmp_path / "wigner_diagnostics.json").read_text())
    assert diags[0]["parity"] == pytest.approx(1.0, abs=1e-9)
    assert all(abs(d["wigner_integral"] - 1) < 1e-3 for d in diags)
    # origin fringe follows the coherence coefficient of the mixture
    s = pytest.approx
    for d in diags:
        c, e = d["coherence"], 2.718281828459045 ** -2
        assert d["parity"] == s((e + c) / (1 + c * e), abs=1e-9)
    assert (tmp_path / "wigner_000.csv").read_text().startswith("x,p,w\n")


def test_exact_compare_small_g(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"pulse": {"duration": 5e-10}, "exact_compare": {"nmax": 16}}))
    assert run(tmp_path, "exact-compare", "--config", str(cfg)) == 0
    report = json.loads((tmp_path / "exact_compare.json").read_text())
    assert tuple(report) == cli.EXACT_KEYS
    assert report["norm_drift"] < 1e-9
    first = (tmp_path / "exact_compare.json").read_bytes()
    assert run(tmp_path, "exact-compare", "--config", str(cfg)) == 0
    assert (tmp_path / "exact_compare.json").read_bytes() == first


def test_exact_compare_zero_coupling(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"pulse": {"duration": 5e-10},
                               "exact_compare": {"nmax": 16, "g": 0.0}}))
    assert run(tmp_path, "exact-compare", "--config", str(cfg)) == 0
    report = json.loads((tmp_path / "exact_compare.json").read_text())
    for b in ("minus", "plus"):
        assert report[f"exact_phase_{b}"] == pytest.approx(0.0, abs=1e-12)
        assert report[f"rotation_fidelity_{b}"] == pytest.approx(1.0, abs=1e-6)
        assert report[f"second_order_phase_{b}"] == 0.0


def test_audit_sections(tmp_path, capsys):
    assert run(tmp_path, "audit") == 0
    text = (tmp_path / "audit.txt").read_text()
    for key in ("[conjugacy]", "[positivity]", "[timescales]", "[hierarchy]", "[pulse_timing]"):
        assert key in text
    data = json.loads((tmp_path / "audit.json").read_text())
    assert data["conjugacy"]["max_deviation"] < 1e-10
    assert data["positivity"]["nominal"]["min_eigenvalue"] < 0
    assert data["positivity"]["halved"]["min_eigenvalue"] >= -1e-12
    first = (tmp_path / "audit.txt").read_bytes()
    run(tmp_path, "audit")
    assert (tmp_path / "audit.txt").read_bytes() == first


def test_audit_survives_failing_check(tmp_path, monkeypatch):
    def boom(cfg):
        raise RuntimeError("broken")

    monkeypatch.setattr(cli.audit, "SECTIONS", (boom,) + cli.audit.SECTIONS[2:3])
    assert run(tmp_path, "audit") == 0
    assert "check failed to run" in (tmp_path / "audit.txt").read_text()


def test_bad_bool_flag():
    with pytest.raises(SystemExit):
        cli.main(["decoherence", "--pt-halved", "maybe"])
