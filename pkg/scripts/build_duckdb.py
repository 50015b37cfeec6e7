#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
build_duckdb.py
Cria um banco DuckDB com as tabelas geradas pela CLI (outputs/*.csv) e uma
tabela `runs` com os manifestos de execução.
Uso: python scripts/build_duckdb.py [--out-dir outputs] [--db outputs/fbcap.duckdb]
"""

from pathlib import Path
import argparse
import json
import sys

import duckdb
import pandas as pd

PROJ = Path(__file__).resolve().parents[1]
if str(PROJ) not in sys.path:
    sys.path.insert(0, str(PROJ))

from fbcap.utils import OUT_DIR, info, warn  # noqa: E402

DB_NAME = "fbcap.duckdb"

# tabela -> CSV de origem
TABLES = {
    "vi_value_function": "vi_value_function.csv",
    "vi_trace": "vi_trace.csv",
    "vi_histogram": "vi_histogram.csv",
    "vi_plot": "vi_plot.csv",
    "qbound": "qbound.csv",
    "qbound_policy": "qbound_policy.csv",
    "duality": "duality.csv",
    "duality_value": "duality_value.csv",
    "duality_gaps": "duality_gaps.csv",
    "duality_sweep": "duality_sweep.csv",
    "coding_error": "coding_error.csv",
    "estimates": "estimates.csv",
    "ba": "ba.csv",
    "ba_history": "ba_history.csv",
    "qary_ising": "qary_ising.csv",
}


def load_manifests(out_dir: Path) -> pd.DataFrame:
    rows = []
    for p in sorted(out_dir.glob("manifest_*.json")):
        try:
            m = json.loads(p.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            warn(f"Manifesto ilegível ignorado: {p.name} ({e})")
            continue
        rows.append({
            "command": m.get("command"),
            "seed": m.get("seed"),
            "version": m.get("version"),
            "log_base": m.get("log_base"),
            "wall_time_s": m.get("wall_time_s"),
            "outputs": ";".join(m.get("outputs", [])),
            "config": json.dumps(m.get("config", {}), ensure_ascii=False),
            "manifest": p.name,
        })
    return pd.DataFrame(rows, columns=["command", "seed", "version", "log_base", "wall_time_s",
                                       "outputs", "config", "manifest"])


def build_duckdb(out_dir: Path = OUT_DIR, db_path: Path | None = None) -> Path:
    out_dir = Path(out_dir)
    if not out_dir.exists():
        raise FileNotFoundError(f"Pasta de saídas não encontrada: {out_dir}\nRode antes: python -m fbcap.cli ...")
    db_path = Path(db_path) if db_path else out_dir / DB_NAME

    con = duckdb.connect(db_path.as_posix())
    try:
        loaded = []
        for table, fname in TABLES.items():
            csv = out_dir / fname
            if not csv.exists():
                warn(f"{fname} ausente; tabela '{table}' não criada.")
                continue
            con.execute(f"CREATE OR REPLACE TABLE {table} AS SELECT * FROM read_csv_auto('{csv.as_posix()}', header=true);")
            loaded.append(table)

        runs = load_manifests(out_dir)
        if runs.empty:
            con.execute("""
            CREATE OR REPLACE TABLE runs (command VARCHAR, seed BIGINT, version VARCHAR, log_base VARCHAR,
                                          wall_time_s DOUBLE, outputs VARCHAR, config VARCHAR, manifest VARCHAR);
            """)
        else:
            con.register("runs_df", runs)
            con.execute("CREATE OR REPLACE TABLE runs AS SELECT * FROM runs_df;")
            con.unregister("runs_df")
        info(f"Tabelas carregadas: {', '.join(loaded) or '(nenhuma)'}; execuções: {len(runs)}")
    finally:
        con.close()
    print("[OK] DuckDB criado em:", db_path)
    return db_path


def main():
    ap = argparse.ArgumentParser(description="Consolida as saídas da CLI em um banco DuckDB")
    ap.add_argument("--out-dir", type=Path, default=OUT_DIR, help="Pasta com os CSVs e manifestos")
    ap.add_argument("--db", type=Path, default=None, help=f"Arquivo do banco (padrão: <out-dir>/{DB_NAME})")
    args = ap.parse_args()
    build_duckdb(args.out_dir, args.db)


if __name__ == "__main__":
    main()
