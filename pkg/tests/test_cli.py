import json
import shutil
from pathlib import Path

import numpy as np
import pytest

from meqoc.cli import EXIT_BUDGET, EXIT_CHECK, EXIT_ERROR, EXIT_OK, EXIT_SOLVER, main, run
from meqoc.config import ConfigError, load_config, parse_config
from meqoc.poly import VarId

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def cfg(name):
    return str(CONFIGS / name)


def write(tmp_path, doc, name="c.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def small(**kw):
    doc = {
        "schema_version": 1,
        "system": {"dim": 2, "terms": [{"matrix": {"pauli": "x", "scale": 0.5}}]},
        "horizon": {"T": 4.0, "K": 4},
        "magnus_order": 1,
        "relax_order": 1,
        "bounds": [0.0, 1.0],
    }
    doc.update(kw)
    return doc


@pytest.mark.parametrize(
    "name, dim, code",
    [
        ("two_transmon.json", 10, EXIT_CHECK),
        ("two_transmon_zz.json", 15, EXIT_OK),
        ("drift_drive.json", 3, EXIT_OK),
        ("divergent_qubit.json", 3, EXIT_CHECK),
    ],
)
def test_check(name, dim, code):
    report, rc = run(["check", "--config", cfg(name)])
    assert report["lie_dimension"] == dim and rc == code


def test_check_divergent_reports_bound():
    report, _ = run(["check", "--config", cfg("divergent_qubit.json")])
    assert report["controllable"] and not report["convergent"]
    assert report["convergence_bound"] == pytest.approx(7 * 0.5 + 7 * 0.1 * 0.5)


def test_build_rotation(tmp_path):
    report, rc = run(["build", "--config", cfg("rotation.json"), "--out", str(tmp_path)])
    assert rc == EXIT_OK
    # 4 variables, r = 1: C(4 + 2, 2) moments
    assert report["mDIM"] == 15
    text = Path(report["sdpa"]).read_text()
    assert [l for l in text.splitlines() if not l.startswith(('"', "*"))][0] == "15"
    index = Path(report["index"]).read_text().splitlines()
    assert index[0] == "position\tmonomial" and index[1] == "1\t1" and len(index) == 16


def test_build_deterministic(tmp_path):
    a, _ = run(["build", "--config", cfg("drift_drive.json"), "--out", str(tmp_path / "a.dat-s")])
    b, _ = run(["build", "--config", cfg("drift_drive.json"), "--out", str(tmp_path / "b.dat-s")])
    assert Path(a["sdpa"]).read_bytes() == Path(b["sdpa"]).read_bytes()


def test_build_budget(tmp_path):
    doc = small(solver={"max_basis": 4})  # the basis needs 1 + 4 words
    report, rc = run(["build", "--config", write(tmp_path, doc), "--out", str(tmp_path)])
    assert rc == EXIT_BUDGET and report["status"] == "budget-exceeded"


def test_build_rejects_empty_control(tmp_path):
    doc = small()
    doc["system"]["terms"][0]["pinned"] = 1.0
    report, rc = run(["build", "--config", write(tmp_path, doc), "--out", str(tmp_path)])
    assert rc == EXIT_ERROR and "no free control" in report["error"]


def test_solve_rotation(tmp_path):
    report, rc = run(["solve", "--config", cfg("rotation.json"), "--out", str(tmp_path)])
    assert rc == EXIT_OK
    assert sum(report["pulses"][0]) * 1.0 == pytest.approx(np.pi / 2, abs=1e-3)
    assert (tmp_path / "pulses.csv").read_text().startswith("control,knot,value\n")
    assert (tmp_path / "report.txt").exists()


def test_solve_identity_zero_pulse(tmp_path):
    report, rc = run(["solve", "--config", cfg("identity.json")])
    assert rc == EXIT_OK
    assert np.allclose(report["pulses"][0] + report["pulses"][1], 0, atol=1e-6)


def test_solve_drift_drive(tmp_path):
    report, rc = run(["solve", "--config", cfg("drift_drive.json"), "--format", "json", "--out", str(tmp_path)])
    assert rc == EXIT_OK and report["achieved"] <= 1e-6
    assert json.loads((tmp_path / "report.json").read_text())["label"] == "certified"


def test_solve_max_iter(tmp_path):
    doc = small(solver={"max_iter": 1})
    _, rc = run(["solve", "--config", write(tmp_path, doc)])
    assert rc == EXIT_SOLVER


def test_verify_from_solve(tmp_path):
    run(["solve", "--config", cfg("drift_drive.json"), "--out", str(tmp_path)])
    report, rc = run(["verify", "--config", cfg("drift_drive.json"), "--pulses", str(tmp_path / "pulses.csv")])
    assert rc == EXIT_OK and report["orders"] == [1, 2] and report["non_increasing"]


def test_verify_zero_pulses_driftless(tmp_path):
    (tmp_path / "p.csv").write_text("control,knot,value\n" + "".join(f"0,{k},0.0\n" for k in range(1, 5)))
    doc = small(magnus_order=3)
    report, _ = run(["verify", "--config", write(tmp_path, doc), "--pulses", str(tmp_path / "p.csv")])
    assert report["errors"] == [0.0, 0.0, 0.0]


def test_verify_mismatch(tmp_path):
    (tmp_path / "p.csv").write_text("control,knot,value\n0,1,0.0\n")
    report, rc = run(["verify", "--config", cfg("rotation.json"), "--pulses", str(tmp_path / "p.csv")])
    assert rc == EXIT_ERROR and "does not match" in report["error"]


def test_oracle_commuting_exact():
    report, rc = run(["oracle", "--a", "0.5", "--b", "0", "--steps", "100"])
    assert rc == EXIT_OK and report["unitary_error"] < 1e-12


def test_oracle_divergence_warning():
    report, _ = run(["oracle", "--a", "7", "--T", "1", "--b", "0.1", "--steps", "200"])
    assert "warning" in report


def test_oracle_term_limit():
    report, rc = run(["oracle", "--n-terms", "6"])
    assert rc == EXIT_ERROR


def test_config_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"schema_version": 1,\n "system": }')
    report, rc = run(["check", "--config", str(bad)])
    assert rc == EXIT_ERROR and "line 2" in report["error"]
    doc = small()
    doc["system"]["terms"][0]["matrix"] = {"pauli": "xx"}
    report, rc = run(["check", "--config", write(tmp_path, doc)])
    assert rc == EXIT_ERROR and "system/terms/0/matrix" in report["error"]
    with pytest.raises(ConfigError, match="horizon"):
        parse_config(json.dumps(small(horizon={"T": -1, "K": 2})))
    with pytest.raises(ConfigError):
        parse_config(json.dumps(small(schema_version=2)))
    report, rc = run(["check", "--config", str(tmp_path / "missing.json")])
    assert rc == EXIT_ERROR


def test_overrides():
    c = load_config((CONFIGS / "drift_drive.json").read_text(), {"K": 3, "magnus_order": 1, "tol": 1e-6})
    assert c.sys.K == 3 and c.magnus_order == 1 and c.tol == 1e-6


def test_forward_target_via_propagation():
    c = load_config((CONFIGS / "linear_drive.json").read_text())
    assert np.allclose(c.target() @ c.target().conj().T, np.eye(2))
    assert c.substeps == 50


def test_pairs_matrix_literal(tmp_path):
    c = load_config((CONFIGS / "rotation.json").read_text())
    assert np.allclose(c.target(), [[1 / np.sqrt(2), -1j / np.sqrt(2)], [-1j / np.sqrt(2), 1 / np.sqrt(2)]])


def test_main_prints_json(capsys):
    code = main(["check", "--config", cfg("two_transmon_zz.json"), "--format", "json"])
    out = json.loads(capsys.readouterr().out)
    assert code == 0 and out["lie_dimension"] == 15


def test_error_report_is_structured(capsys):
    code = main(["check", "--config", "/nonexistent.json", "--format", "json"])
    assert code == EXIT_ERROR and json.loads(capsys.readouterr().out)["status"] == "error"


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("QOC_THREADS", "1")
    _, rc = run(["check", "--config", cfg("drift_drive.json")])
    assert rc == EXIT_OK
