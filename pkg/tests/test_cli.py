# -*- coding: utf-8 -*-
import json

import pandas as pd
import pytest

from fbcap.cli import main


def _records(capsys) -> list[dict]:
    out = capsys.readouterr().out
    return [json.loads(line) for line in out.splitlines() if line.startswith("{")]


def _exit_code(argv) -> int:
    with pytest.raises(SystemExit) as exc:
        main(argv)
    return exc.value.code


def test_info_writes_table_and_manifest(out_dir, capsys):
    main(["info", "--qary", "--out-dir", str(out_dir)])
    rec = _records(capsys)[-1]
    assert rec["command"] == "info"
    assert rec["log_base"] == "bits"
    assert rec["rho_star"] == pytest.approx(0.5755215742, abs=1e-9)
    df = pd.read_csv(out_dir / "qary_ising.csv")
    assert len(df) == 7
    man = json.loads((out_dir / "manifest_info.json").read_text(encoding="utf-8"))
    assert man["outputs"] == ["qary_ising.csv"]
    assert man["seed"] == 0


def test_ba_on_bsc(out_dir, capsys):
    main(["ba", "--builtin", "bsc:0.1", "--n", "1", "--out-dir", str(out_dir)])
    rec = _records(capsys)[-1]
    assert rec["I_L"] == pytest.approx(0.531004, abs=1e-5)
    assert (out_dir / "ba_history.csv").exists()


def test_missing_channel_file_is_config_error(out_dir, tmp_path):
    code = _exit_code(["ba", "--channel", str(tmp_path / "nao_existe.json"), "--out-dir", str(out_dir)])
    assert code == 2


def test_duality_with_explicit_test_distribution(out_dir, tmp_path, capsys):
    g = tmp_path / "um_no.json"
    g.write_text(json.dumps({"Q": 1, "Y": 2, "phi": [[0, 0]]}), encoding="utf-8")
    bad = tmp_path / "T_ruim.csv"
    bad.write_text("1,0\n", encoding="utf-8")
    base = ["duality", "--builtin", "bsc:0.1", "--qgraph", str(g), "--out-dir", str(out_dir)]
    assert _exit_code(base + ["--test-dist", str(bad)]) == 4

    good = tmp_path / "T.csv"
    good.write_text("0.5,0.5\n", encoding="utf-8")
    main(base + ["--test-dist", str(good)])
    rec = _records(capsys)[-1]
    assert rec["dmc_bound_bits"] == pytest.approx(0.531004, abs=1e-6)
    assert rec["rho_bits"] == pytest.approx(0.531004, abs=1e-6)


def test_reducible_qgraph_is_rejected(out_dir, tmp_path):
    g = tmp_path / "redutivel.json"
    g.write_text(json.dumps({"Q": 2, "Y": 2, "phi": [[0, 0], [0, 0]]}), encoding="utf-8")
    assert _exit_code(["qbound", "--qgraph", str(g), "--out-dir", str(out_dir)]) == 2


def test_estimate_on_copy_delay(out_dir, capsys):
    main(["estimate", "--source", "copy-delay", "--n", "5000", "--ctw", "2", "--out-dir", str(out_dir)])
    rec = _records(capsys)[-1]
    assert rec["exact_bits"] == pytest.approx(1.0)
    df = pd.read_csv(out_dir / "estimates.csv")
    assert len(df) == 6
    assert {"estimator", "value_bits", "exact_bits"} <= set(df.columns)


def test_kkt_policy_needs_ising(out_dir):
    code = _exit_code(["simulate", "--builtin", "bsc:0.1", "--policy", "kkt", "--out-dir", str(out_dir)])
    assert code == 2


def test_capacity_vi_small_grid(out_dir, capsys):
    main(["capacity-vi", "--grid", "200", "--iters", "30", "--sim-steps", "2000", "--plot-data",
          "--out-dir", str(out_dir)])
    rec = _records(capsys)[-1]
    assert rec["rho_low"] <= rec["rho_high"]
    assert rec["rho_low"] == pytest.approx(0.5755215742, abs=0.02)
    plot = pd.read_csv(out_dir / "vi_plot.csv")
    assert list(plot.columns) == ["z", "h", "hstar"]
    man = json.loads((out_dir / "manifest_capacity_vi.json").read_text(encoding="utf-8"))
    assert "vi_trace.csv" in man["outputs"]


def test_qbound_on_memoryless_channel(out_dir, tmp_path, capsys):
    g = tmp_path / "um_no.json"
    g.write_text(json.dumps({"Q": 1, "Y": 2, "phi": [[0, 0]]}), encoding="utf-8")
    main(["qbound", "--builtin", "bsc:0.1", "--qgraph", str(g), "--out-dir", str(out_dir)])
    rec = _records(capsys)[-1]
    assert rec["bound_bits"] == pytest.approx(0.531004, abs=1e-5)
    assert rec["matched"]
    assert (out_dir / "qbound_policy.csv").exists()


def test_simulate_writes_error_curve(out_dir, capsys):
    main(["simulate", "--n", "8", "--trials", "20", "--out-dir", str(out_dir)])
    df = pd.read_csv(out_dir / "coding_error.csv")
    assert df["n"].tolist() == [8]
    assert df["trials"].iloc[0] == 20
    assert 0.0 <= df["p_hat"].iloc[0] <= 1.0
    assert _records(capsys)[-1]["qgraph"] == "ising_q1"


def test_qbound_ising_bounds_match(out_dir, capsys):
    main(["qbound", "--builtin", "ising2", "--qgraph", "ising_q1", "--mode", "both", "--out-dir", str(out_dir)])
    rec = _records(capsys)[-1]
    assert rec["matched"] is True
    assert rec["invariance_residual"] <= 1e-6
    assert rec["lower_bits"] == pytest.approx(0.5755215742, abs=1e-3)
    assert rec["bound_bits"] == pytest.approx(0.5755215742, abs=1e-3)


def test_ragged_channel_file_is_config_error(out_dir, tmp_path):
    path = tmp_path / "irregular.json"
    path.write_text(json.dumps({"S": 1, "X": 2, "Y": 2,
                                "kernel": [[[0.9], [0.1]], [[0.1], [0.9]]],
                                "next_state": [[[0, 0], [0]]]}), encoding="utf-8")
    assert _exit_code(["ba", "--channel", str(path), "--out-dir", str(out_dir)]) == 2
