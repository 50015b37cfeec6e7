# -*- coding: utf-8 -*-
"""Banco DuckDB consolidado e relatório PDF a partir de saídas pequenas da CLI."""

import duckdb
import pandas as pd
import pytest

import doc
from fbcap.cli import main
from scripts.build_duckdb import build_duckdb, load_manifests


@pytest.fixture
def filled_out_dir(out_dir):
    main(["info", "--qary", "--out-dir", str(out_dir)])
    main(["ba", "--builtin", "bsc:0.1", "--n", "1", "--out-dir", str(out_dir)])
    pd.DataFrame({"k": [0, 1, 2], "rho_low": [0.3, 0.55, 0.575], "rho_high": [1.0, 0.6, 0.576]}) \
        .to_csv(out_dir / "vi_trace.csv", index=False, encoding="utf-8")
    pd.DataFrame({"n": [8, 16], "trials": [50, 50], "errors": [10, 4], "p_hat": [0.2, 0.08],
                  "ci_low": [0.11, 0.03], "ci_high": [0.33, 0.19], "messages": [4, 16],
                  "rate": [0.26, 0.26], "realized_rate": [0.25, 0.25]}) \
        .to_csv(out_dir / "coding_error.csv", index=False, encoding="utf-8")
    return out_dir


def test_manifests_become_runs(filled_out_dir):
    runs = load_manifests(filled_out_dir)
    assert sorted(runs["command"]) == ["ba", "info"]
    assert (runs["log_base"] == "bits").all()


def test_build_duckdb_tables(filled_out_dir, capsys):
    db = build_duckdb(filled_out_dir)
    assert "[OK] DuckDB criado em:" in capsys.readouterr().out
    con = duckdb.connect(db.as_posix(), read_only=True)
    try:
        names = set(con.execute("SELECT table_name FROM information_schema.tables;").fetchdf()["table_name"])
        assert {"qary_ising", "ba", "ba_history", "vi_trace", "coding_error", "runs"} <= names
        assert "duality" not in names
        n = con.execute("SELECT COUNT(*) FROM qary_ising;").fetchone()[0]
        assert n == 7
    finally:
        con.close()


def test_build_duckdb_without_manifests(out_dir):
    db = build_duckdb(out_dir)
    tables = doc.load_tables(db)
    assert list(tables) == ["runs"]
    assert tables["runs"].empty


def test_pdf_bytes(filled_out_dir):
    db = build_duckdb(filled_out_dir)
    pdf = doc.build_pdf_bytes(db)
    assert pdf.startswith(b"%PDF")
    bullets = doc.summary_bullets(doc.load_tables(db))
    assert any("BA-DI" in b for b in bullets)


def test_pdf_missing_db(tmp_path):
    with pytest.raises(FileNotFoundError):
        doc.build_pdf_bytes(tmp_path / "nao_existe.duckdb")


def test_bounds_table_against_rho_star():
    t = {"duality": pd.DataFrame([{"channel": "ising2", "rho_bits": 0.5755215742 + 1e-6}]),
         "ba": pd.DataFrame([{"channel": "bsc:0.1", "n": 1, "I_L": 0.531004}])}
    bt = doc.bounds_table(t)
    assert bt["fonte"].tolist() == ["Dual", "BA-DI n=1 (I_L)"]
    assert bt["diff_rho_star"].iloc[0] == pytest.approx(1e-6, abs=1e-9)
    assert pd.isna(bt["diff_rho_star"].iloc[1])
