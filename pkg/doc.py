#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
doc.py — Gera um PDF com os resultados de capacidade com realimentação (fbcap).

Entrada esperada (projeto):
- outputs/fbcap.duckdb     # criado por scripts/build_duckdb.py a partir dos CSVs da CLI

Seções só aparecem quando a tabela correspondente existe no banco.

Saída (padrão):
- reports/relatorio_fbcap.pdf
"""

from pathlib import Path
import argparse
import io
import sys
import datetime as dt

import duckdb
import pandas as pd

# ReportLab
from reportlab.lib.pagesizes import A4
from reportlab.platypus import SimpleDocTemplate, Paragraph, Spacer, Table, TableStyle, Image, PageBreak
from reportlab.lib.styles import getSampleStyleSheet, ParagraphStyle
from reportlab.lib import colors
from reportlab.lib.units import cm

# Matplotlib (gráficos)
import matplotlib
matplotlib.use("Agg")  # backend headless
import matplotlib.pyplot as plt

sys.path.insert(0, str(Path(__file__).resolve().parent))
from fbcap.belief_mdp import IsingSolution  # noqa: E402

PAGE_IMG_W = 16*cm
PAGE_IMG_H = 9*cm

PROJ = Path(__file__).resolve().parent
OUT_DIR = PROJ / "outputs"
DB_PATH = OUT_DIR / "fbcap.duckdb"

BOUND_COLORS = {"low": "#1f77b4", "high": "#d62728", "ref": "#6b7280"}

RHO_STAR = IsingSolution.solve().rho_star
ISING_NAME = "ising2"


# ----------------------------
# Utils
# ----------------------------
def fmt_int_br(x) -> str:
    try:
        return f"{int(round(float(x))):,}".replace(",", ".")
    except Exception:
        return str(x)

def fmt_float_br(x, nd: int = 6) -> str:
    try:
        return f"{float(x):,.{nd}f}".replace(",", "X").replace(".", ",").replace("X", ".")
    except Exception:
        return str(x)

def ensure_dir(p: Path):
    p.mkdir(parents=True, exist_ok=True)

def load_tables(db_path: Path) -> dict[str, pd.DataFrame]:
    """Todas as tabelas do banco como DataFrames (nome -> df)."""
    con = duckdb.connect(Path(db_path).as_posix(), read_only=True)
    try:
        names = con.execute("SELECT table_name FROM information_schema.tables;").fetchdf()["table_name"].tolist()
        return {n: con.execute(f'SELECT * FROM "{n}";').fetchdf() for n in names}
    finally:
        con.close()

def draw_png(fig, width_px=1200, dpi=150):
    buf = io.BytesIO()
    fig.set_size_inches(width_px/dpi, (width_px/dpi)*0.56)
    fig.savefig(buf, format="png", dpi=dpi, bbox_inches="tight")
    plt.close(fig)
    buf.seek(0)
    return buf

def styled_table(rows: list[list], col_widths) -> Table:
    t = Table(rows, hAlign="LEFT", colWidths=col_widths)
    t.setStyle(TableStyle([
        ("BACKGROUND", (0,0), (-1,0), colors.HexColor("#E5E7EB")),
        ("FONTNAME", (0,0), (-1,0), "Helvetica-Bold"),
        ("ALIGN", (1,1), (-1,-1), "RIGHT"),
        ("INNERGRID", (0,0), (-1,-1), 0.25, colors.HexColor("#D1D5DB")),
        ("BOX", (0,0), (-1,-1), 0.5, colors.HexColor("#9CA3AF")),
    ]))
    return t


# ----------------------------
# Gráficos
# ----------------------------
def plot_value_function(df: pd.DataFrame) -> io.BytesIO:
    """df: ['z','h'] e opcionalmente 'hstar' (mesma normalização h(0)=0)."""
    fig, ax = plt.subplots()
    ax.plot(df["z"], df["h"] - df["h"].iloc[0], label="h (iteração de valor)", color=BOUND_COLORS["low"])
    if "hstar" in df.columns:
        ax.plot(df["z"], df["hstar"], "--", label="h* (forma fechada)", color=BOUND_COLORS["high"])
    ax.set_xlabel("z = P(S=0 | y^{t-1})")
    ax.set_ylabel("h(z) − h(0)  [bits]")
    ax.set_title("Função valor relativa do MDP de crença")
    ax.grid(True, alpha=.3)
    ax.legend()
    return draw_png(fig)

def plot_vi_trace(df: pd.DataFrame) -> io.BytesIO:
    """df: ['k','rho_low','rho_high']"""
    fig, ax = plt.subplots()
    ax.plot(df["k"], df["rho_low"], marker=".", label="ρ inferior", color=BOUND_COLORS["low"])
    ax.plot(df["k"], df["rho_high"], marker=".", label="ρ superior", color=BOUND_COLORS["high"])
    ax.set_xlabel("Iteração k")
    ax.set_ylabel("bits/uso")
    ax.set_ylim(max(0.0, df["rho_low"].min() - 0.05), df["rho_high"].iloc[min(3, len(df)-1)] + 0.05)
    ax.set_title("Envelope de ρ ao longo da iteração de valor")
    ax.grid(True, alpha=.3)
    ax.legend()
    return draw_png(fig)

def plot_duality_sweep(df: pd.DataFrame) -> io.BytesIO:
    """df: ['a','rho_bits']"""
    i = int(df["rho_bits"].idxmin())
    fig, ax = plt.subplots()
    ax.plot(df["a"], df["rho_bits"], color=BOUND_COLORS["high"])
    ax.axvline(df.loc[i, "a"], ls=":", color=BOUND_COLORS["ref"])
    ax.set_xlabel("Parâmetro a da distribuição de teste")
    ax.set_ylabel("Limitante dual (bits/uso)")
    ax.set_title(f"Varredura do limitante dual (mínimo {df.loc[i, 'rho_bits']:.6f} em a = {df.loc[i, 'a']:.4f})")
    ax.grid(True, alpha=.3)
    return draw_png(fig)

def plot_error_curve(df: pd.DataFrame) -> io.BytesIO:
    """df: ['n','p_hat','ci_low','ci_high']"""
    fig, ax = plt.subplots()
    ax.fill_between(df["n"], df["ci_low"], df["ci_high"], alpha=.25, color=BOUND_COLORS["low"], label="IC 95% (Wilson)")
    ax.plot(df["n"], df["p_hat"], marker="o", color=BOUND_COLORS["low"], label="erro estimado")
    ax.set_xlabel("Comprimento do bloco n")
    ax.set_ylabel("Probabilidade de erro")
    ax.set_title("Esquema de casamento de posterior")
    ax.grid(True, alpha=.3)
    ax.legend()
    return draw_png(fig)

def plot_ba_history(df: pd.DataFrame) -> io.BytesIO:
    """df: ['k','I_L','I_U']"""
    fig, ax = plt.subplots()
    ax.plot(df["k"], df["I_L"], label="I_L", color=BOUND_COLORS["low"])
    ax.plot(df["k"], df["I_U"], label="I_U", color=BOUND_COLORS["high"])
    ax.set_xlabel("Iteração")
    ax.set_ylabel("bits/símbolo")
    ax.set_title("Blahut–Arimoto para informação dirigida")
    ax.grid(True, alpha=.3)
    ax.legend()
    return draw_png(fig)


# ----------------------------
# Conteúdo
# ----------------------------
def summary_bullets(t: dict[str, pd.DataFrame]) -> list[str]:
    out = []
    if "vi_trace" in t and len(t["vi_trace"]):
        last = t["vi_trace"].iloc[-1]
        out.append(f"Iteração de valor: ρ ∈ [<b>{fmt_float_br(last['rho_low'])}</b>, "
                   f"<b>{fmt_float_br(last['rho_high'])}</b>] bits/uso")
    if "qbound" in t and len(t["qbound"]):
        r = t["qbound"].iloc[0]
        if pd.notna(r.get("bound_bits")):
            out.append(f"Limitante superior por Q-grafo: <b>{fmt_float_br(r['bound_bits'])}</b> bits/uso")
        if pd.notna(r.get("lower_bits")):
            out.append(f"Limitante inferior por Q-grafo: <b>{fmt_float_br(r['lower_bits'])}</b> bits/uso")
    if "duality" in t and len(t["duality"]):
        out.append(f"Limitante dual: <b>{fmt_float_br(t['duality']['rho_bits'].iloc[0])}</b> bits/uso")
    if "ba" in t and len(t["ba"]):
        r = t["ba"].iloc[0]
        out.append(f"BA-DI (n={fmt_int_br(r['n'])}): I_L = <b>{fmt_float_br(r['I_L'])}</b>, "
                   f"I_U = <b>{fmt_float_br(r['I_U'])}</b> bits/símbolo")
    if "runs" in t:
        out.append(f"Execuções registradas: <b>{fmt_int_br(len(t['runs']))}</b>")
    return out


def bounds_table(t: dict[str, pd.DataFrame]) -> pd.DataFrame:
    """Limitantes disponíveis lado a lado; diferença a ρ* só para o Ising binário."""
    rows = []
    def add(fonte, canal, valor):
        if valor is None or pd.isna(valor):
            return
        diff = float(valor) - RHO_STAR if canal == ISING_NAME else None
        rows.append({"fonte": fonte, "canal": canal, "valor_bits": float(valor), "diff_rho_star": diff})

    for r in t.get("qbound", pd.DataFrame()).to_dict("records"):
        add("Q-grafo (superior)", r.get("channel"), r.get("bound_bits"))
        add("Q-grafo (inferior)", r.get("channel"), r.get("lower_bits"))
    for r in t.get("duality", pd.DataFrame()).to_dict("records"):
        add("Dual", r.get("channel"), r.get("rho_bits"))
    for r in t.get("ba", pd.DataFrame()).to_dict("records"):
        add(f"BA-DI n={int(r['n'])} (I_L)", r.get("channel"), r.get("I_L"))
    return pd.DataFrame(rows, columns=["fonte", "canal", "valor_bits", "diff_rho_star"])


def build_story(t: dict[str, pd.DataFrame]) -> list:
    styles = getSampleStyleSheet()
    H1 = ParagraphStyle('H1', parent=styles['Heading1'], fontSize=18, spaceAfter=10)
    H2 = ParagraphStyle('H2', parent=styles['Heading2'], fontSize=14, spaceAfter=8)
    P  = styles['BodyText']

    hoje = dt.datetime.now().strftime("%d/%m/%Y %H:%M")
    story = [
        Spacer(1, 1.0*cm),
        Paragraph("Capacidade com Realimentação de Canais de Estados Finitos Unifilares", H1),
        Paragraph("Limitantes, dualidade, esquemas de codificação e estimadores de informação dirigida", P),
        Spacer(1, 0.2*cm),
        Paragraph("Unidade: bits (log na base 2).", P),
        Spacer(1, 0.2*cm),
        Paragraph(f"Geração: {hoje}", P),
        PageBreak(),
    ]

    sec = 1
    story += [Paragraph(f"{sec}. Sumário geral", H1)]
    bullets = summary_bullets(t) or ["Nenhum resultado encontrado no banco."]
    story += [Paragraph("• " + b, P) for b in bullets]
    bt = bounds_table(t)
    if len(bt):
        rows = [["Fonte", "Canal", "Valor (bits/uso)", "Valor − ρ*"]]
        for r in bt.itertuples(index=False):
            rows.append([r.fonte, r.canal, fmt_float_br(r.valor_bits),
                         "—" if pd.isna(r.diff_rho_star) else f"{r.diff_rho_star:+.2e}"])
        story += [Spacer(1, 0.4*cm), Paragraph(f"ρ* (Ising binário) = {fmt_float_br(RHO_STAR, 10)} bits/uso", P),
                  styled_table(rows, [5.5*cm, 3*cm, 4*cm, 3.5*cm])]
    if "runs" in t and len(t["runs"]):
        rows = [["Comando", "Semente", "Tempo (s)", "Saídas"]]
        for r in t["runs"].itertuples(index=False):
            rows.append([r.command, r.seed, fmt_float_br(r.wall_time_s, 2), Paragraph(str(r.outputs), P)])
        story += [Spacer(1, 0.4*cm), styled_table(rows, [3*cm, 2*cm, 2.5*cm, 8.5*cm])]
    story += [PageBreak()]

    if "vi_trace" in t or "vi_plot" in t:
        sec += 1
        story += [Paragraph(f"{sec}. MDP de crença (iteração de valor)", H1)]
        vf = t.get("vi_plot", t.get("vi_value_function"))
        if vf is not None and {"z", "h"} <= set(vf.columns):
            story += [Image(plot_value_function(vf), width=PAGE_IMG_W, height=PAGE_IMG_H), Spacer(1, 0.5*cm)]
        if "vi_trace" in t and len(t["vi_trace"]):
            story += [Image(plot_vi_trace(t["vi_trace"]), width=PAGE_IMG_W, height=PAGE_IMG_H)]
        story += [PageBreak()]

    if any(k in t for k in ("qbound", "duality", "duality_sweep")):
        sec += 1
        story += [Paragraph(f"{sec}. Limitantes por Q-grafo e dualidade", H1)]
        if "qbound" in t and len(t["qbound"]):
            r = t["qbound"].iloc[0]
            rows = [["Grandeza", "Valor"]]
            for col, label in (("bound_bits", "Limitante superior (bits/uso)"),
                               ("lower_bits", "Limitante inferior (bits/uso)"),
                               ("matched", "Limitantes casados")):
                if col in r.index and pd.notna(r[col]):
                    rows.append([label, fmt_float_br(r[col]) if col != "matched" else str(r[col])])
            story += [Paragraph(f"{sec}.1. Q-grafo", H2), styled_table(rows, [9*cm, 5*cm]), Spacer(1, 0.4*cm)]
        if "duality" in t and len(t["duality"]):
            r = t["duality"].iloc[0]
            rows = [["Grandeza", "Valor"], ["Limitante dual ρ (bits/uso)", fmt_float_br(r["rho_bits"])],
                    ["Violação de Bellman", f"{float(r['bellman_violation']):.1e}"]]
            if "a" in r.index and pd.notna(r["a"]):
                rows.append(["Parâmetro a", fmt_float_br(r["a"], 8)])
            story += [Paragraph(f"{sec}.2. Limitante dual", H2), styled_table(rows, [9*cm, 5*cm]), Spacer(1, 0.4*cm)]
        if "duality_sweep" in t and len(t["duality_sweep"]):
            story += [Image(plot_duality_sweep(t["duality_sweep"]), width=PAGE_IMG_W, height=PAGE_IMG_H)]
        story += [PageBreak()]

    if "coding_error" in t and len(t["coding_error"]):
        sec += 1
        ce = t["coding_error"].sort_values("n")
        story += [Paragraph(f"{sec}. Esquema de codificação", H1),
                  Paragraph(f"Taxa simulada: {fmt_float_br(ce['rate'].iloc[0], 4)} bits/uso; "
                            f"{fmt_int_br(ce['trials'].iloc[0])} ensaios por comprimento.", P),
                  Image(plot_error_curve(ce), width=PAGE_IMG_W, height=PAGE_IMG_H), PageBreak()]

    if "estimates" in t and len(t["estimates"]):
        sec += 1
        est = t["estimates"]
        rows = [["Estimador", "Valor (bits/símbolo)", "Exato"]]
        for r in est.itertuples(index=False):
            exact = getattr(r, "exact_bits", None)
            rows.append([r.estimator, fmt_float_br(r.value_bits, 4), "—" if pd.isna(exact) else fmt_float_br(exact, 4)])
        story += [Paragraph(f"{sec}. Estimadores de informação dirigida", H1),
                  Paragraph(f"Amostra com n = {fmt_int_br(est['n'].iloc[0])} símbolos.", P),
                  styled_table(rows, [5*cm, 5*cm, 4*cm]), PageBreak()]

    if "ba_history" in t and len(t["ba_history"]):
        sec += 1
        story += [Paragraph(f"{sec}. Blahut–Arimoto em n letras", H1),
                  Image(plot_ba_history(t["ba_history"]), width=PAGE_IMG_W, height=PAGE_IMG_H), PageBreak()]

    if "qary_ising" in t and len(t["qary_ising"]):
        sec += 1
        rows = [["q", "p", "Capacidade (bits/uso)"]]
        for r in t["qary_ising"].itertuples(index=False):
            rows.append([r.q, fmt_float_br(r.p, 8), fmt_float_br(r.capacity_bits, 8)])
        story += [Paragraph(f"{sec}. Canal de Ising q-ário", H1), styled_table(rows, [2*cm, 6*cm, 6*cm]), PageBreak()]

    sec += 1
    story += [Paragraph(f"{sec}. Metodologia (resumo)", H1)]
    metod = (
        "A capacidade com realimentação de um canal unifilar é o ganho ótimo de um MDP cujo estado é a crença "
        "sobre o estado do canal. A iteração de valor em grade fornece um intervalo para esse ganho. Um Q-grafo "
        "quantiza a história de saídas e dá um problema convexo de tamanho finito cujo ótimo é um limitante superior. "
        "A política extraída gera um limitante inferior quando a crença dentro de cada nó é invariante. "
        "Uma distribuição de teste nas saídas dá um MDP finito cujo ganho é outro limitante superior. "
        "O esquema de casamento de posterior é avaliado por simulação com intervalos de Wilson. "
        "As taxas de informação dirigida são estimadas por plug-in e por CTW."
    )
    story += [Paragraph(metod, P), Spacer(1, 0.2*cm),
              Paragraph("Obs.: relatório gerado automaticamente. Para reproduzir, rode a CLI e depois "
                        "scripts/build_duckdb.py.", P)]
    return story


# ----------------------------
# Construção do PDF
# ----------------------------
def _doc(target) -> SimpleDocTemplate:
    return SimpleDocTemplate(target, pagesize=A4,
                             leftMargin=1.6*cm, rightMargin=1.6*cm, topMargin=1.2*cm, bottomMargin=1.2*cm)

def build_pdf(output_path: Path, db_path: Path = DB_PATH):
    if not Path(db_path).exists():
        print(f"[ERRO] DuckDB não encontrado: {db_path}", file=sys.stderr); sys.exit(2)
    story = build_story(load_tables(db_path))
    ensure_dir(output_path.parent)
    _doc(output_path.as_posix()).build(story)
    print(f"[OK] PDF gerado em: {output_path}")


def build_pdf_bytes(db_path: Path = DB_PATH) -> bytes:
    """PDF em memória (para o Streamlit)."""
    if not Path(db_path).exists():
        raise FileNotFoundError(f"DuckDB não encontrado: {db_path}")
    buf = io.BytesIO()
    _doc(buf).build(build_story(load_tables(db_path)))
    buf.seek(0)
    return buf.read()


# ----------------------------
# CLI
# ----------------------------
def main():
    ap = argparse.ArgumentParser(description="Gera relatório PDF dos resultados do fbcap")
    ap.add_argument("--out", type=str, default=str(PROJ / "reports" / "relatorio_fbcap.pdf"),
                    help="Caminho do PDF de saída (padrão: reports/relatorio_fbcap.pdf)")
    ap.add_argument("--db", type=str, default=str(DB_PATH), help="Banco DuckDB de entrada")
    args = ap.parse_args()
    build_pdf(Path(args.out), Path(args.db))

if __name__ == "__main__":
    main()
