#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
cli.py — linha de comando do fbcap.

Subcomandos:
  capacity-vi  iteração de valor no MDP de crença  -> vi_value_function.csv, vi_trace.csv, vi_histogram.csv
  qbound       limitantes por Q-grafo (upper/lower) -> qbound.csv, qbound_policy.csv
  duality      limitante dual por MDP finito        -> duality.csv, duality_value.csv, duality_gaps.csv [, duality_sweep.csv]
  simulate     esquema de casamento de posterior    -> coding_error.csv
  estimate     estimadores de DI sobre amostras     -> estimates.csv
  ba           Blahut–Arimoto para DI em n letras   -> ba.csv, ba_history.csv
  info         constantes do Ising e tabela q-ária  -> qary_ising.csv (com --qary)

Cada execução grava manifest_<subcomando>.json e imprime um registro JSON por linha.
Códigos de saída: 0 ok, 2 configuração, 3 numérico, 4 limitante inaplicável.

Uso (na raiz do projeto):
  python -m fbcap.cli capacity-vi --builtin ising2 --grid 1000 --iters 50
  python -m fbcap.cli qbound --builtin ising2 --qgraph q1 --mode both
  python -m fbcap.cli duality --builtin ising2 --qgraph q1 --sweep 0.3:0.6:0.001
  python -m fbcap.cli simulate --rate-fraction 0.9 --n 16,32,64,128
  python -m fbcap.cli estimate --source ising-optimal --n 100000 --ctw 3
  python -m fbcap.cli ba --builtin bsc:0.1 --n 1
  python -m fbcap.cli info --qary
"""

from __future__ import annotations

import argparse
import json
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np
import pandas as pd

from fbcap import __version__
from fbcap.ba_di import BaConfig, ba_iterate, unroll_channel
from fbcap.belief_mdp import IsingSolution, ViConfig, ising_hstar, is_binary_ising, simulate_policy, value_iteration
from fbcap.channels import UnifilarFsc, resolve_channel
from fbcap.coding import error_curve
from fbcap.duality import (TEST_FAMILIES, action_gaps, bellman_verify, build_dual_mdp, dmc_dual_bound,
                           load_test_dist, optimize_test_param, policy_iteration, sweep_test_param)
from fbcap.estimators import (SamplePath, copy_delay_kernel, ctw_di_all, exact_di_rate, fsc_di_rate,
                              independent_kernel, plugin_di_rate, read_path_csv, sample_fsc_path,
                              sample_pair_chain, sticky_copy_kernel)
from fbcap.ising_qary import qary_ising_table
from fbcap.qbound import UpperConfig, bound_report, kkt_ising_policy, solve_upper
from fbcap.qgraph import QGraph, resolve_qgraph
from fbcap.utils import LOG_BASE, OUT_DIR, ConfigError, FbcapError, ensure_dir, err, info, ok

PAIR_SOURCES = {
    "independent": independent_kernel,
    "copy-delay": copy_delay_kernel,
    "sticky-copy": sticky_copy_kernel,
}


# ---------- manifesto ----------
class RunManifest:
    def __init__(self, command: str, config: dict, seed: int | None, out_dir: Path):
        self.command = command
        self.config = config
        self.seed = seed
        self.out_dir = out_dir
        self.outputs: list[str] = []
        self._t0 = time.perf_counter()

    def save_csv(self, df: pd.DataFrame, name: str) -> Path:
        path = self.out_dir / name
        df.to_csv(path, index=False, encoding="utf-8")
        self.outputs.append(path.name)
        info(f"Tabela salva: {path}")
        return path

    def to_dict(self) -> dict:
        return {"command": self.command, "config": self.config, "seed": self.seed,
                "version": __version__, "log_base": LOG_BASE,
                "wall_time_s": round(time.perf_counter() - self._t0, 3), "outputs": self.outputs}

    def write(self) -> Path:
        path = self.out_dir / f"manifest_{self.command.replace('-', '_')}.json"
        path.write_text(json.dumps(self.to_dict(), indent=2, default=str), encoding="utf-8")
        return path


def emit(record: dict) -> None:
    """Registro estruturado de uma linha no stdout."""
    print(json.dumps({**record, "log_base": LOG_BASE, "version": __version__}, default=_jsonable))


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    return str(v)


# ---------- argumentos ----------
def _channel_args(ap: argparse.ArgumentParser, default: str | None = "ising2"):
    grp = ap.add_mutually_exclusive_group()
    grp.add_argument("--builtin", default=None,
                     help=f"Canal embutido: ising2, ising:q, bsc:p, noiseless[:k], useless (padrão: {default})")
    grp.add_argument("--channel", type=Path, default=None, help="Arquivo JSON do canal")
    ap.set_defaults(default_channel=default)


def _common_args(ap: argparse.ArgumentParser):
    ap.add_argument("--out-dir", type=Path, default=OUT_DIR, help=f"Pasta de saída (padrão: {OUT_DIR})")
    ap.add_argument("--seed", type=int, default=0, help="Semente (64 bits, padrão: 0)")


def _int_list(s: str) -> list[int]:
    try:
        return [int(t) for t in s.split(",") if t.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"Lista de inteiros inválida: {s}") from e


def _float_range(s: str) -> tuple[float, float, float]:
    try:
        lo, hi, step = (float(t) for t in s.split(":"))
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"Use lo:hi:passo; recebeu {s}") from e
    return lo, hi, step


def _float_pair(s: str) -> tuple[float, float]:
    try:
        lo, hi = (float(t) for t in s.split(","))
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"Use lo,hi; recebeu {s}") from e
    return lo, hi


def parse_args(argv=None):
    ap = argparse.ArgumentParser(prog="fbcap", description="Capacidade com realimentação de canais unifilares.",
                                 formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("capacity-vi", help="Iteração de valor no MDP de crença",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _channel_args(p)
    _common_args(p)
    p.add_argument("--grid", type=int, default=ViConfig.grid, help="Pontos da grade de crença")
    p.add_argument("--iters", type=int, default=ViConfig.iters, help="Iterações de valor")
    p.add_argument("--inner-grid", type=int, default=ViConfig.inner_grid, help="Grade inicial da busca de ação")
    p.add_argument("--sim-steps", type=int, default=100_000, help="Passos da simulação da política gulosa")
    p.add_argument("--plot-data", action="store_true", help="Grava também vi_plot.csv (h e h* lado a lado)")

    p = sub.add_parser("qbound", help="Limitantes superior/inferior por Q-grafo",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _channel_args(p)
    _common_args(p)
    p.add_argument("--qgraph", default="q1", help="Q-grafo: q1, debruijn:m ou arquivo JSON")
    p.add_argument("--mode", choices=["upper", "lower", "both"], default="both", help="Limitantes a calcular")

    p = sub.add_parser("duality", help="Limitante dual com distribuição de teste em Q-grafo",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _channel_args(p)
    _common_args(p)
    p.add_argument("--qgraph", default="q1", help="Q-grafo: q1, debruijn:m ou arquivo JSON")
    p.add_argument("--family", choices=sorted(TEST_FAMILIES), default="ising", help="Família a um parâmetro de T(y|q)")
    p.add_argument("--test-dist", type=Path, default=None, help="CSV com T(y|q) explícito (linha q, coluna y)")
    p.add_argument("--param", type=float, default=None, help="Avalia um único parâmetro em vez de otimizar")
    p.add_argument("--range", type=_float_pair, default=(0.05, 0.95), help="Intervalo de busca lo,hi")
    p.add_argument("--sweep", type=_float_range, default=None, help="Varredura lo:hi:passo -> duality_sweep.csv")

    p = sub.add_parser("simulate", help="Curva de erro do esquema de casamento de posterior",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _channel_args(p)
    _common_args(p)
    p.add_argument("--qgraph", default="q1", help="Q-grafo: q1, debruijn:m ou arquivo JSON")
    p.add_argument("--policy", choices=["kkt", "upper"], default="kkt",
                   help="kkt: política fechada do Ising em Q1; upper: política extraída do limitante superior")
    p.add_argument("--rate-fraction", type=float, default=0.9, help="Fração de I(X,S;Y|Q) usada como taxa")
    p.add_argument("--n", type=_int_list, default=[16, 32, 64, 128], help="Comprimentos de bloco (lista)")
    p.add_argument("--trials", type=int, default=1000, help="Ensaios por comprimento")
    p.add_argument("--max-messages", type=int, default=None, help="Limite opcional do número de mensagens")

    p = sub.add_parser("estimate", help="Estimadores de DI (plug-in e CTW)",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _common_args(p)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--source", choices=["ising-optimal", *PAIR_SOURCES], default="ising-optimal",
                     help="Fonte sintética")
    src.add_argument("--input", type=Path, default=None, help="CSV com colunas x,y")
    p.add_argument("--n", type=int, default=100_000, help="Tamanho da amostra sintética")
    p.add_argument("--plugin", type=int, default=1, help="Ordem ℓ do plug-in (negativo desliga)")
    p.add_argument("--ctw", type=int, default=3, help="Profundidade D do CTW (negativo desliga)")
    p.add_argument("--non-overlapping", action="store_true", help="Plug-in com janelas disjuntas")

    p = sub.add_parser("ba", help="Blahut–Arimoto para DI em n letras",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _channel_args(p)
    _common_args(p)
    p.add_argument("--n", type=int, default=4, help="Horizonte n")
    p.add_argument("--s0", type=int, default=0, help="Estado inicial")
    p.add_argument("--eps", type=float, default=BaConfig.eps, help="Tolerância I_U − I_L (bits/símbolo)")
    p.add_argument("--max-iter", type=int, default=BaConfig.max_iter, help="Máximo de iterações")

    p = sub.add_parser("info", help="Constantes do Ising e tabela q-ária",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _common_args(p)
    p.add_argument("--qary", action="store_true", help="Tabela de capacidades do Ising q-ário (q=2..8)")

    return ap.parse_args(argv)


def _channel(args) -> UnifilarFsc:
    if args.channel is not None:
        return resolve_channel(str(args.channel))
    return resolve_channel(args.builtin or args.default_channel)


def _config_echo(args) -> dict:
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items()}


# ---------- subcomandos ----------
def cmd_capacity_vi(args, man: RunManifest) -> dict:
    ch = _channel(args)
    cfg = ViConfig(grid=args.grid, iters=args.iters, inner_grid=args.inner_grid)
    man.config["vi"] = asdict(cfg)
    info(f"Iteração de valor em '{ch.name}' (grade {cfg.grid}, {cfg.iters} iterações)…")
    res = value_iteration(ch, cfg)
    man.save_csv(res.to_frame(), "vi_value_function.csv")
    man.save_csv(res.trace, "vi_trace.csv")
    _, hist, avg = simulate_policy(ch, res, steps=args.sim_steps, seed=args.seed,
                                   burn_in=min(1000, args.sim_steps // 10))
    man.save_csv(hist, "vi_histogram.csv")
    top4 = float(np.sort(hist["frequency"].to_numpy())[-4:].sum())
    if args.plot_data and is_binary_ising(ch):
        plot = res.to_frame()[["z", "h"]].copy()
        sol = IsingSolution.solve()
        hstar = ising_hstar(plot["z"].to_numpy(), sol)
        plot["hstar"] = hstar - hstar[0]
        man.save_csv(plot, "vi_plot.csv")
    ok(f"ρ ∈ [{res.rho_low:.6f}, {res.rho_high:.6f}] bits/uso; recompensa média simulada {avg:.4f}")
    return {"channel": ch.name, "rho_low": res.rho_low, "rho_high": res.rho_high,
            "simulated_reward": avg, "top4_mass": top4}


def cmd_qbound(args, man: RunManifest) -> dict:
    ch = _channel(args)
    g = resolve_qgraph(args.qgraph, ch.output_count)
    cfg = UpperConfig()
    man.config["upper"] = asdict(cfg)
    info(f"Limitantes por Q-grafo: canal '{ch.name}', grafo '{g.name}' ({g.node_count} nós), modo {args.mode}…")
    up = solve_upper(ch, g, cfg)
    rec = bound_report(ch, g, args.mode, cfg, up)
    man.save_csv(pd.DataFrame([{k: v for k, v in rec.items() if k != "support"}
                               | {"support": ";".join(map(str, rec["support"]))}]), "qbound.csv")
    if args.mode != "upper":
        S, Q, X = up.policy.shape
        rows = [{"s": s, "q": q, "x": x, "p": float(up.policy[s, q, x])}
                for s in range(S) for q in range(Q) for x in range(X)]
        man.save_csv(pd.DataFrame(rows), "qbound_policy.csv")
    if rec.get("bound_bits") is not None:
        ok(f"Limitante superior: {rec['bound_bits']:.6f} bits/uso")
    if rec.get("lower_bits") is not None:
        ok(f"Limitante inferior: {rec['lower_bits']:.6f} bits/uso (casado: {rec['matched']})")
    return rec


def _test_dist(args):
    if args.test_dist is not None:
        return load_test_dist(args.test_dist), "file"
    fam = TEST_FAMILIES[args.family]
    return fam, args.family


def cmd_duality(args, man: RunManifest) -> dict:
    ch = _channel(args)
    g = resolve_qgraph(args.qgraph, ch.output_count)
    T, label = _test_dist(args)
    rec = {"channel": ch.name, "qgraph": g.name, "test_dist": label}

    if args.sweep is not None and label != "file":
        lo, hi, step = args.sweep
        grid = np.round(np.arange(lo, hi + step / 2, step), 12)
        df = sweep_test_param(ch, g, T, grid)
        man.save_csv(df, "duality_sweep.csv")
        i = int(df["rho_bits"].idxmin())
        rec.update({"sweep_argmin": float(df.loc[i, "a"]), "sweep_min_bits": float(df.loc[i, "rho_bits"])})
        ok(f"Varredura: mínimo ρ = {rec['sweep_min_bits']:.6f} em a = {rec['sweep_argmin']:.4f}")

    if label == "file":
        mdp = build_dual_mdp(ch, g, T)
        if ch.state_count == 1 and g.node_count == 1:
            rec["dmc_bound_bits"] = dmc_dual_bound(ch, T[0])
        sol = policy_iteration(mdp)
    elif args.param is not None:
        rec["a"] = args.param
        mdp = build_dual_mdp(ch, g, T(args.param))
        sol = policy_iteration(mdp)
    else:
        res = optimize_test_param(ch, g, T, bounds=tuple(args.range))
        rec.update({"a": res.a, "at_boundary": res.at_boundary})
        mdp = build_dual_mdp(ch, g, T(res.a))
        sol = res.solution if res.solution is not None else policy_iteration(mdp)

    rec["rho_bits"] = sol.rho
    rec["bellman_violation"] = bellman_verify(mdp, sol)
    man.save_csv(sol.to_frame(), "duality_value.csv")
    man.save_csv(action_gaps(mdp, sol), "duality_gaps.csv")
    man.save_csv(pd.DataFrame([rec]), "duality.csv")
    ok(f"Limitante dual ρ = {sol.rho:.6f} bits/uso (violação de Bellman {rec['bellman_violation']:.1e})")
    return rec


def _input_policy(args, ch: UnifilarFsc, g: QGraph) -> np.ndarray:
    if args.policy == "kkt":
        if not (is_binary_ising(ch) and g.name == "ising_q1"):
            raise ConfigError("Política 'kkt' só existe para ising2 com Q-grafo q1; use --policy upper.")
        return kkt_ising_policy(IsingSolution.solve().a)
    return solve_upper(ch, g).policy


def cmd_simulate(args, man: RunManifest) -> dict:
    ch = _channel(args)
    g = resolve_qgraph(args.qgraph, ch.output_count)
    if args.trials < 1:
        raise ConfigError(f"Número de ensaios deve ser ≥ 1; recebeu {args.trials}")
    pol = _input_policy(args, ch, g)
    info(f"Simulando {args.trials} ensaios por n em {args.n} a {args.rate_fraction}·I(X,S;Y|Q)…")
    df = error_curve(ch, g, pol, args.rate_fraction, args.n, args.trials, args.seed, args.max_messages)
    man.save_csv(df, "coding_error.csv")
    for r in df.itertuples():
        ok(f"n={r.n}: erro {r.p_hat:.4f} [{r.ci_low:.4f}, {r.ci_high:.4f}] com {r.messages:.4g} mensagens")
    return {"channel": ch.name, "qgraph": g.name, "rate_fraction": args.rate_fraction,
            "rate_bits": float(df["rate"].iloc[0]) if len(df) else None,
            "p_hat": df["p_hat"].tolist()}


def _estimate_input(args) -> tuple[SamplePath, float | None]:
    if args.input is not None:
        return read_path_csv(args.input), None
    if args.source == "ising-optimal":
        ch = resolve_channel("ising2")
        g = resolve_qgraph("q1")
        pol = kkt_ising_policy(IsingSolution.solve().a)
        return sample_fsc_path(ch, g, pol, args.n, args.seed), fsc_di_rate(ch, g, pol)
    K = PAIR_SOURCES[args.source]()
    return sample_pair_chain(K, args.n, args.seed), exact_di_rate(K, 1)


def cmd_estimate(args, man: RunManifest) -> dict:
    path, exact = _estimate_input(args)
    info(f"Estimando DI sobre n={path.n} amostras…")
    reports = []
    if args.plugin >= 0:
        reports.append(plugin_di_rate(path, args.plugin, overlapping=not args.non_overlapping))
        reports.append(plugin_di_rate(path, args.plugin, reverse=True, overlapping=not args.non_overlapping))
    if args.ctw >= 0:
        reports.extend(ctw_di_all(path, args.ctw))
    df = pd.DataFrame([r.to_record() for r in reports])
    df["exact_bits"] = exact
    man.save_csv(df, "estimates.csv")
    for r in reports:
        ok(f"{r.estimator}: {r.value:.4f} bits/símbolo")
    return {"n": path.n, "exact_bits": exact, **{r.estimator: r.value for r in reports}}


def cmd_ba(args, man: RunManifest) -> dict:
    ch = _channel(args)
    cfg = BaConfig(eps=args.eps, max_iter=args.max_iter)
    table = unroll_channel(ch, args.n, args.s0)
    info(f"BA-DI em '{ch.name}' com n={args.n}…")
    st = ba_iterate(table, cfg)
    man.save_csv(pd.DataFrame(st.history, columns=["k", "I_L", "I_U"]), "ba_history.csv")
    rec = {"channel": ch.name, **st.to_record(args.n)}
    man.save_csv(pd.DataFrame([rec]), "ba.csv")
    ok(f"I_L = {st.i_low:.6f}, I_U = {st.i_up:.6f} bits/símbolo após {st.iterations} iterações")
    return rec


def cmd_info(args, man: RunManifest) -> dict:
    sol = IsingSolution.solve()
    ok(f"Ising binário: a* = {sol.a:.10f}, ρ* = {sol.rho_star:.10f} bits/uso")
    rec = {"a_star": sol.a, "rho_star": sol.rho_star}
    if args.qary:
        df = qary_ising_table()
        man.save_csv(df, "qary_ising.csv")
        print(df.to_string(index=False))
        rec["qary_capacity_bits"] = df["capacity_bits"].tolist()
    return rec


COMMANDS = {
    "capacity-vi": cmd_capacity_vi,
    "qbound": cmd_qbound,
    "duality": cmd_duality,
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "ba": cmd_ba,
    "info": cmd_info,
}


def main(argv=None):
    args = parse_args(argv)
    try:
        out = ensure_dir(Path(args.out_dir))
        man = RunManifest(args.command, _config_echo(args), args.seed, out)
        rec = COMMANDS[args.command](args, man)
        path = man.write()
        emit({"command": args.command, "seed": args.seed, **rec})
        info(f"Manifesto salvo: {path}")
    except FbcapError as e:
        err(str(e), e.exit_code)


if __name__ == "__main__":
    main()
