import json
import subprocess
import sys

import numpy as np
import pytest

from weaktime.cli import run
from weaktime.config import OUTPUT_ENV, config_from_dict, reference_config
from weaktime.harness import read_csv


def _write_config(tmp_path, name="cfg", **grid):
    raw = reference_config(**grid).to_dict()
    raw["name"] = name
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(raw))
    return path


def test_fig1_csv(tmp_path, capsys):
    assert run(["fig1", "--out", str(tmp_path)]) == 0
    path = tmp_path / "reference_fig1.csv"
    assert str(path) in capsys.readouterr().out
    meta, cols, data = read_csv(path)
    assert cols == ["t", "P_exact", "P_SD"]
    assert meta["artifact"] == "fig1"
    assert meta["tail_mass"] < 1e-6
    assert "sd_cutoff" in meta
    assert data.shape == (meta["time_samples"], 3)
    assert np.trapezoid(data[:, 1], data[:, 0]) == pytest.approx(1.0, abs=1e-9)
    # the header carries the full config
    again = config_from_dict(meta["config"])
    assert again.config_hash == meta["config_hash"] == reference_config().config_hash


def test_fig_outputs_reproducible_across_threads(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(["fig2", "--out", str(a)]) == 0
    assert run(["fig2", "--out", str(b), "--threads", "2"]) == 0
    ma, cols, da = read_csv(a / "reference_fig2.csv")
    mb, _, db = read_csv(b / "reference_fig2.csv")
    assert cols == ["t", "Re_dpw_exact", "Re_dpw_SD", "Im_pw_exact", "Im_pw_SD"]
    assert ma["config_hash"] == mb["config_hash"]
    finite = np.isfinite(da)
    assert np.array_equal(finite, np.isfinite(db))
    assert np.max(np.abs(da[finite] - db[finite])) <= 1e-12 * np.max(np.abs(da[finite]))
    assert run(["fig2", "--out", str(a)]) == 0
    _, _, dc = read_csv(a / "reference_fig2.csv")
    assert np.array_equal(da[finite], dc[finite])


def test_table_json(tmp_path, capsys):
    assert run(["table", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "time-averaged weak momentum" in out and "drift" in out
    rec = json.loads((tmp_path / "reference_table.json").read_text())
    assert rec["summary"]["mean_p"] == pytest.approx(0.2522, abs=5e-5)
    assert rec["arrival_momentum"] == pytest.approx(0.2502, abs=1e-3)
    assert rec["summary"]["commutator"][1] == pytest.approx(1.0, abs=1e-2)
    assert set(rec["resolution"]) >= {"mean_p", "std_p", "arrival_momentum", "var_t"}
    assert max(r["rel_drift"] for r in rec["resolution"].values()) < 1e-8
    assert rec["steepest_descent"]["uncertainty_product"] == pytest.approx(0.251, rel=1e-3)


def test_sweep(tmp_path, capsys):
    cfg = _write_config(tmp_path, "sw")
    assert run(["sweep", "--config", str(cfg), "--gammas", "0.001", "0.00025", "--out", str(tmp_path)]) == 0
    meta, cols, data = read_csv(tmp_path / "sw_sweep.csv")
    assert meta["gammas"] == [0.001, 0.00025]
    assert data.shape == (2, len(cols))
    std = data[:, cols.index("std_p")]
    assert std[0] == pytest.approx(0.02228, abs=5e-6)
    assert std[1] == pytest.approx(0.01117, abs=5e-6)
    records = json.loads((tmp_path / "sw_sweep.json").read_text())
    assert len(records) == 2


def test_verify_free_config(tmp_path, capsys):
    assert run(["verify", "--config", "configs/free.json", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out
    report = json.loads((tmp_path / "free_verify.json").read_text())
    assert report["passed"] is True
    assert any("spatial average" in c["name"] for c in report["checks"])


def test_invalid_config_exit_code(tmp_path, capsys):
    raw = reference_config().to_dict()
    raw["x"] = 1.2
    raw["state"]["gamma"] = -1
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(raw))
    assert run(["table", "--config", str(path), "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "gamma" in err and "margin" in err


def test_bad_threads_exit_code(tmp_path):
    assert run(["fig1", "--threads", "0", "--out", str(tmp_path)]) == 2


def test_convergence_failure_exit_code(tmp_path, capsys):
    cfg = _write_config(tmp_path, "coarse", time_samples=16)
    assert run(["fig1", "--config", str(cfg), "--out", str(tmp_path), "--resolution-check"]) == 3
    assert "drift" in capsys.readouterr().err


def test_io_failure_exit_code(tmp_path):
    assert run(["fig1", "--config", str(tmp_path / "missing.json")]) == 4
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert run(["fig1", "--out", str(blocker / "sub")]) == 4


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "env"))
    assert run(["fig1"]) == 0
    assert (tmp_path / "env" / "reference_fig1.csv").exists()


def test_module_help():
    res = subprocess.run([sys.executable, "-m", "weaktime", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for sub in ("fig1", "fig2", "table", "verify", "sweep"):
        assert sub in res.stdout
