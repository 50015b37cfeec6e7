# app.py — painel dos resultados do fbcap (DuckDB) com cards, tabelas e gráficos
# Requisitos (venv):
#   pip install -r requirements.txt
# Execução (depois de rodar a CLI e scripts/build_duckdb.py):
#   streamlit run app.py --server.fileWatcherType=none

from pathlib import Path
import base64

import streamlit as st
import duckdb
import pandas as pd
import altair as alt

# -------- formatos e paleta --------
def fmt_int_br(x: float) -> str:
    try:
        return f"{int(round(float(x))):,}".replace(",", ".")
    except Exception:
        return str(x)

def fmt_float_br(x: float, nd: int = 6) -> str:
    try:
        return f"{float(x):,.{nd}f}".replace(",", "X").replace(".", ",").replace("X", ".")
    except Exception:
        return "—"

BOUND_DOMAIN = ["inferior", "superior"]
BOUND_RANGE = ["#1f77b4", "#d62728"]


# -----------------------
# Caminhos do projeto
# -----------------------
PROJ = Path(__file__).resolve().parent
OUT_DIR = PROJ / "outputs"
DB_PATH = OUT_DIR / "fbcap.duckdb"     # criado por scripts/build_duckdb.py

st.set_page_config(page_title="fbcap — Capacidade com realimentação de canais unifilares", layout="wide")


# -----------------------
# Helpers
# -----------------------
def duck_query(sql: str, params=None) -> pd.DataFrame:
    con = duckdb.connect(DB_PATH.as_posix(), read_only=True)
    try:
        df = con.execute(sql, params or []).fetchdf()
    finally:
        con.close()
    return df

@st.cache_data(show_spinner=False)
def table_names(db_mtime: float) -> list[str]:
    return duck_query("SELECT table_name FROM information_schema.tables ORDER BY 1;")["table_name"].tolist()

def _cfg(c):
    return (
        c.configure_axis(labelFontSize=12, titleFontSize=13, gridColor="#2a2a2a")
         .configure_legend(labelFontSize=12, titleFontSize=13)
         .configure_view(strokeOpacity=0)
    )

def csv_button(df: pd.DataFrame, label: str, fname: str):
    st.download_button(label, df.to_csv(index=False).encode("utf-8"), file_name=fname,
                       mime="text/csv", use_container_width=True)


# -----------------------
# Cargas fixas
# -----------------------
if not DB_PATH.exists():
    st.error(f"Banco DuckDB não encontrado: {DB_PATH}\nRode a CLI (python -m fbcap.cli ...) e depois: python scripts/build_duckdb.py")
    st.stop()

tables = set(table_names(DB_PATH.stat().st_mtime))
runs = duck_query("SELECT * FROM runs;") if "runs" in tables else pd.DataFrame()

SECTIONS = {
    "MDP de crença": {"vi_trace", "vi_value_function"},
    "Q-grafo e dualidade": {"qbound", "duality", "duality_sweep"},
    "Esquema de codificação": {"coding_error"},
    "Estimadores de DI": {"estimates"},
    "Blahut–Arimoto": {"ba", "ba_history"},
    "Ising q-ário": {"qary_ising"},
}
available = [s for s, need in SECTIONS.items() if need & tables]


# -----------------------
# Sidebar com FORM (evita rerun a cada mudança)
# -----------------------
with st.sidebar:
    st.subheader("Filtros")
    est_opts = (duck_query("SELECT DISTINCT estimator FROM estimates ORDER BY 1;")["estimator"].tolist()
                if "estimates" in tables else [])
    cmd_opts = sorted(runs["command"].dropna().unique().tolist()) if not runs.empty else []
    a_lim = (tuple(duck_query("SELECT MIN(a) AS lo, MAX(a) AS hi FROM duality_sweep;").iloc[0])
             if "duality_sweep" in tables else (0.0, 1.0))
    n_lim = (tuple(int(v) for v in duck_query("SELECT MIN(n) AS lo, MAX(n) AS hi FROM coding_error;").iloc[0])
             if "coding_error" in tables else (1, 2))

    if "applied_filters" not in st.session_state:
        st.session_state.applied_filters = {
            "sections": available, "estimators": est_opts, "commands": cmd_opts,
            "a_range": (float(a_lim[0]), float(a_lim[1])), "n_range": n_lim, "log_y": False,
        }
    f = st.session_state.applied_filters

    with st.form("filters_form", clear_on_submit=False):
        sec_sel = st.multiselect("Seções", available, default=f["sections"])
        cmd_sel = st.multiselect("Execuções (comando)", cmd_opts, default=f["commands"])
        est_sel = st.multiselect("Estimadores", est_opts, default=f["estimators"])
        a_range = (st.slider("Parâmetro a (varredura dual)", float(a_lim[0]), float(a_lim[1]), value=f["a_range"])
                   if a_lim[1] > a_lim[0] else a_lim)
        n_range = (st.slider("Comprimento n (curva de erro)", n_lim[0], n_lim[1], value=f["n_range"])
                   if n_lim[1] > n_lim[0] else n_lim)
        log_y = st.checkbox("Erro em escala log", value=f["log_y"])
        submitted = st.form_submit_button("Aplicar filtros", use_container_width=True, type="primary")

    if submitted:
        st.session_state.applied_filters = {
            "sections": sec_sel if sec_sel else available,
            "commands": cmd_sel if cmd_sel else cmd_opts,
            "estimators": est_sel if est_sel else est_opts,
            "a_range": (float(a_range[0]), float(a_range[1])),
            "n_range": (int(n_range[0]), int(n_range[1])),
            "log_y": bool(log_y),
        }

sec_sel = st.session_state.applied_filters["sections"]
cmd_sel = st.session_state.applied_filters["commands"]
est_sel = st.session_state.applied_filters["estimators"]
a_min, a_max = st.session_state.applied_filters["a_range"]
n_min, n_max = st.session_state.applied_filters["n_range"]
log_y = st.session_state.applied_filters["log_y"]


# ==========================
# Relatório (PDF) — gerar e baixar/abrir
# ==========================
st.markdown("### Relatório (PDF)")
try:
    import doc

    if st.button("Gerar PDF", type="primary"):
        with st.spinner("Gerando relatório em PDF..."):
            pdf_bytes = doc.build_pdf_bytes(DB_PATH)
        st.success("Relatório gerado!")
        st.download_button("Baixar PDF", data=pdf_bytes, file_name="relatorio_fbcap.pdf",
                           mime="application/pdf", use_container_width=True)
        b64 = base64.b64encode(pdf_bytes).decode("utf-8")
        st.markdown(
            f"<a href='data:application/pdf;base64,{b64}' target='_blank' "
            f"style='text-decoration:none; padding:8px 12px; background:#2563eb; "
            f"color:#fff; border-radius:8px; display:inline-block; margin-top:8px;'>"
            f"Abrir em nova guia</a>",
            unsafe_allow_html=True
        )
except Exception as e:
    st.warning(f"Não foi possível gerar o PDF a partir do app: {e}")


# --- indicadores (3 cards lado a lado) ---
st.markdown("""
<style>
.cards-row{
  display:grid;
  grid-template-columns: repeat(3, minmax(220px, 1fr));
  gap:14px; margin: 6px 0 18px 0;
}
.card{padding:12px 16px; border-radius:12px; color:#fff;}
.card .t{font-size:.9rem; opacity:.9; margin:0 0 6px 0;}
.card .v{font-size:1.6rem; font-weight:800; margin:0;}
.bg-blue {background: linear-gradient(135deg,#2563eb,#1d4ed8);}
.bg-green{background: linear-gradient(135deg,#059669,#047857);}
.bg-purple{background: linear-gradient(135deg,#7c3aed,#6d28d9);}
</style>
""", unsafe_allow_html=True)

best_upper = None
for t, col in (("qbound", "bound_bits"), ("duality", "rho_bits")):
    if t in tables:
        v = duck_query(f"SELECT MIN({col}) AS v FROM {t};")["v"].iloc[0]
        if pd.notna(v):
            best_upper = v if best_upper is None else min(best_upper, v)
best_lower = None
if "qbound" in tables:
    qb = duck_query("SELECT * FROM qbound;")
    if "lower_bits" in qb.columns and qb["lower_bits"].notna().any():
        best_lower = float(qb["lower_bits"].max())

st.markdown(
    f"""
<div class="cards-row">
  <div class="card bg-blue">
    <div class="t">Melhor limitante superior (bits/uso)</div>
    <div class="v">{fmt_float_br(best_upper)}</div>
  </div>
  <div class="card bg-green">
    <div class="t">Melhor limitante inferior (bits/uso)</div>
    <div class="v">{fmt_float_br(best_lower)}</div>
  </div>
  <div class="card bg-purple">
    <div class="t">Execuções</div>
    <div class="v">{fmt_int_br(len(runs))}</div>
  </div>
</div>
""",
    unsafe_allow_html=True,
)

alt.data_transformers.disable_max_rows()

# ---------------- MDP de crença ----------------
if "MDP de crença" in sec_sel:
    st.markdown("## MDP de crença (iteração de valor)")
    if "vi_trace" in tables:
        tr = duck_query("SELECT k, rho_low, rho_high FROM vi_trace ORDER BY k;")
        long = tr.melt("k", var_name="lado", value_name="ρ (bits/uso)")
        long["lado"] = long["lado"].map({"rho_low": "inferior", "rho_high": "superior"})
        chart = (
            alt.Chart(long, height=320)
            .mark_line(point=True)
            .encode(
                x=alt.X("k:Q", title="Iteração"),
                y=alt.Y("ρ (bits/uso):Q", scale=alt.Scale(zero=False)),
                color=alt.Color("lado:N", scale=alt.Scale(domain=BOUND_DOMAIN, range=BOUND_RANGE), title="Envelope"),
                tooltip=["k:Q", "lado:N", alt.Tooltip("ρ (bits/uso):Q", format=".6f")]
            )
        )
        st.altair_chart(_cfg(chart), use_container_width=True)
    vf_table = "vi_plot" if "vi_plot" in tables else "vi_value_function"
    if vf_table in tables:
        vf = duck_query(f"SELECT * FROM {vf_table};")
        if {"z", "h"} <= set(vf.columns):
            cols = ["z", "h"] + (["hstar"] if "hstar" in vf.columns else [])
            long = vf[cols].melt("z", var_name="função", value_name="valor")
            chart = (
                alt.Chart(long, height=320)
                .mark_line()
                .encode(x=alt.X("z:Q", title="z = P(S=0 | y^{t-1})"), y=alt.Y("valor:Q", title="h(z)"),
                        color=alt.Color("função:N", title=None))
            )
            st.altair_chart(_cfg(chart), use_container_width=True)
        csv_button(vf, "Baixar CSV — função valor", "vi_value_function.csv")

# ---------------- Q-grafo e dualidade ----------------
if "Q-grafo e dualidade" in sec_sel:
    st.markdown("## Limitantes por Q-grafo e dualidade")
    c1, c2 = st.columns(2)
    with c1:
        if "qbound" in tables:
            st.markdown("**Q-grafo**")
            st.dataframe(duck_query("SELECT * FROM qbound;"), use_container_width=True)
    with c2:
        if "duality" in tables:
            st.markdown("**Limitante dual**")
            st.dataframe(duck_query("SELECT * FROM duality;"), use_container_width=True)
    if "duality_sweep" in tables:
        sw = duck_query("SELECT a, rho_bits FROM duality_sweep WHERE a BETWEEN ? AND ? ORDER BY a;", [a_min, a_max])
        chart = (
            alt.Chart(sw, height=340)
            .mark_line()
            .encode(x=alt.X("a:Q", title="Parâmetro a"),
                    y=alt.Y("rho_bits:Q", title="Limitante dual (bits/uso)", scale=alt.Scale(zero=False)),
                    tooltip=[alt.Tooltip("a:Q", format=".4f"), alt.Tooltip("rho_bits:Q", format=".6f")])
        )
        st.altair_chart(_cfg(chart), use_container_width=True)
        csv_button(sw, "Baixar CSV — varredura dual", "duality_sweep.csv")
    if "duality_gaps" in tables:
        with st.expander("Folgas de Bellman por ação"):
            st.dataframe(duck_query("SELECT * FROM duality_gaps ORDER BY s, q, x;"), use_container_width=True)

# ---------------- Esquema de codificação ----------------
if "Esquema de codificação" in sec_sel and "coding_error" in tables:
    st.markdown("## Esquema de casamento de posterior")
    ce = duck_query("SELECT * FROM coding_error WHERE n BETWEEN ? AND ? ORDER BY n;", [n_min, n_max])
    y_scale = alt.Scale(type="symlog", constant=1e-3) if log_y else alt.Scale()
    band = alt.Chart(ce).mark_area(opacity=.25).encode(
        x=alt.X("n:Q", title="Comprimento do bloco n"), y=alt.Y("ci_low:Q", scale=y_scale), y2="ci_high:Q")
    line = alt.Chart(ce).mark_line(point=True).encode(
        x="n:Q", y=alt.Y("p_hat:Q", title="Probabilidade de erro", scale=y_scale),
        tooltip=["n:Q", "messages:Q", alt.Tooltip("p_hat:Q", format=".4f"),
                 alt.Tooltip("ci_low:Q", format=".4f"), alt.Tooltip("ci_high:Q", format=".4f")])
    st.altair_chart(_cfg((band + line).properties(height=340)), use_container_width=True)
    st.dataframe(ce, use_container_width=True)
    csv_button(ce, "Baixar CSV — curva de erro", "coding_error.csv")

# ---------------- Estimadores ----------------
if "Estimadores de DI" in sec_sel and "estimates" in tables:
    st.markdown("## Estimadores de informação dirigida")
    est = duck_query("SELECT * FROM estimates;")
    est = est[est["estimator"].isin(est_sel)] if est_sel else est
    chart = (
        alt.Chart(est, height=300)
        .mark_bar()
        .encode(x=alt.X("estimator:N", title="Estimador"), y=alt.Y("value_bits:Q", title="bits/símbolo"),
                tooltip=["estimator:N", alt.Tooltip("value_bits:Q", format=".4f"), "flags:N"])
    )
    if "exact_bits" in est.columns and est["exact_bits"].notna().any():
        rule = alt.Chart(pd.DataFrame({"y": [float(est["exact_bits"].dropna().iloc[0])]})) \
            .mark_rule(color="#d62728", strokeDash=[6, 4]).encode(y="y:Q")
        chart = chart + rule
    st.altair_chart(_cfg(chart), use_container_width=True)
    st.dataframe(est, use_container_width=True)
    csv_button(est, "Baixar CSV — estimativas", "estimates.csv")

# ---------------- BA ----------------
if "Blahut–Arimoto" in sec_sel:
    st.markdown("## Blahut–Arimoto em n letras")
    if "ba" in tables:
        st.dataframe(duck_query("SELECT * FROM ba;"), use_container_width=True)
    if "ba_history" in tables:
        hist = duck_query("SELECT k, I_L, I_U FROM ba_history ORDER BY k;")
        long = hist.melt("k", var_name="lado", value_name="bits/símbolo")
        long["lado"] = long["lado"].map({"I_L": "inferior", "I_U": "superior"})
        chart = (
            alt.Chart(long, height=300)
            .mark_line()
            .encode(x=alt.X("k:Q", title="Iteração"), y=alt.Y("bits/símbolo:Q", scale=alt.Scale(zero=False)),
                    color=alt.Color("lado:N", scale=alt.Scale(domain=BOUND_DOMAIN, range=BOUND_RANGE), title=None))
        )
        st.altair_chart(_cfg(chart), use_container_width=True)

# ---------------- q-ário ----------------
if "Ising q-ário" in sec_sel and "qary_ising" in tables:
    st.markdown("## Canal de Ising q-ário")
    qa = duck_query("SELECT q, p, capacity_bits FROM qary_ising ORDER BY q;")
    c1, c2 = st.columns([1, 2])
    with c1:
        st.dataframe(qa, use_container_width=True)
        csv_button(qa, "Baixar CSV — Ising q-ário", "qary_ising.csv")
    with c2:
        chart = alt.Chart(qa, height=300).mark_line(point=True).encode(
            x=alt.X("q:O", title="q"), y=alt.Y("capacity_bits:Q", title="Capacidade (bits/uso)"))
        st.altair_chart(_cfg(chart), use_container_width=True)

# ---------------- execuções ----------------
if not runs.empty:
    with st.expander("Execuções registradas (manifestos)"):
        sel = runs[runs["command"].isin(cmd_sel)] if cmd_sel else runs
        st.dataframe(sel, use_container_width=True)
        csv_button(sel, "Baixar CSV — execuções", "runs.csv")

st.caption("Unidade: bits. Fonte: saídas da CLI do fbcap consolidadas em DuckDB.")
