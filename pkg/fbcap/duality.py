#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
duality.py — limitante dual via MDP finito em (s,q) com ações determinísticas x.

Recompensa r(s,q,x) = KL(P(·|x,s) || T(·|q)) em bits; transição
(s,q) --x--> (f(s,x,y), Φ(q,y)) com prob. P(y|x,s). O ganho médio ótimo ρ
é um limitante superior da capacidade com realimentação para qualquer T.

Entradas: canal unifilar, Q-grafo e T(y|q) (família a um parâmetro ou tabela).
Saídas: ρ, V(s,q), política x*(s,q), violação de Bellman, folgas por ação.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import pandas as pd
from scipy.optimize import linprog, minimize_scalar
from scipy.special import rel_entr

from fbcap.channels import UnifilarFsc
from fbcap.probcore import LN2
from fbcap.qgraph import QGraph, recurrent_class
from fbcap.utils import ConfigError, MultichainError, NumericError, SupportError, check_pmf, warn

SOLVE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class DualMdp:
    ch: UnifilarFsc
    g: QGraph
    T: np.ndarray                 # T(y|q), (Q, Y)
    rewards: np.ndarray           # (SQ, X)
    trans: np.ndarray             # (SQ, X, SQ)

    @property
    def shape(self) -> tuple[int, int]:
        return self.ch.state_count, self.g.node_count

    @property
    def n_states(self) -> int:
        return self.rewards.shape[0]


@dataclass
class DualSolution:
    rho: float
    V: np.ndarray                 # (S, Q)
    policy: np.ndarray            # (S, Q) inteiros

    def regauge(self, state: tuple[int, int], value: float) -> "DualSolution":
        """V definido a menos de constante: fixa V[state] = value."""
        return DualSolution(self.rho, self.V - self.V[state] + value, self.policy)

    def to_frame(self) -> pd.DataFrame:
        S, Q = self.V.shape
        return pd.DataFrame([{"s": s, "q": q, "V": float(self.V[s, q]), "x": int(self.policy[s, q])}
                             for s in range(S) for q in range(Q)])


# ---------- construção ----------
def build_dual_mdp(ch: UnifilarFsc, g: QGraph, T) -> DualMdp:
    T = np.asarray(T, dtype=float)
    S, X, Y = ch.kernel.shape
    Q = g.node_count
    if T.shape != (Q, Y):
        raise ConfigError(f"T(y|q) com forma {T.shape}; esperado {(Q, Y)}")
    check_pmf(T, axis=1, tol=1e-12, label="T(y|q)")
    W = ch.kernel
    bad = np.argwhere((W[:, None, :, :] > 0) & (T[None, :, None, :] <= 0))    # (s,q,x,y)
    if bad.size:
        s, q, x, y = (int(i) for i in bad[0])
        raise SupportError(f"Suporte violado: T(y={y}|q={q}) = 0 mas P(y={y}|x={x},s={s}) > 0")

    n = S * Q
    r = np.zeros((n, X))
    P = np.zeros((n, X, n))
    for s in range(S):
        for q in range(Q):
            i = s * Q + q
            for x in range(X):
                r[i, x] = rel_entr(W[s, x], T[q]).sum() / LN2
                for y in range(Y):
                    if W[s, x, y] > 0:
                        P[i, x, ch.next_state[s, x, y] * Q + g.phi[q, y]] += W[s, x, y]
    return DualMdp(ch, g, T, r, P)


def ising_test_dist(a: float) -> np.ndarray:
    """T(y|q) para o Q-grafo Q1 do Ising: T(0|q) = [(1−a)/2, (1−a)/(1+a), 2a/(1+a), (1+a)/2]."""
    if not (0.0 < a < 1.0):
        raise ConfigError(f"Parâmetro a deve estar em (0,1); recebeu {a}")
    t0 = np.array([(1 - a) / 2, (1 - a) / (1 + a), 2 * a / (1 + a), (1 + a) / 2])
    return np.column_stack([t0, 1.0 - t0])


def bernoulli_test_dist(t: float) -> np.ndarray:
    """T(y) = (t, 1−t) em um Q-grafo de um nó."""
    if not (0.0 < t < 1.0):
        raise ConfigError(f"Parâmetro t deve estar em (0,1); recebeu {t}")
    return np.array([[t, 1.0 - t]])


def ising_proof_policy() -> np.ndarray:
    """x*(s,q) que certifica ρ = −½·log2(a) no Q1 (linhas s=0, s=1)."""
    return np.array([[0, 0, 0, 0], [0, 1, 1, 1]])


TEST_FAMILIES: dict[str, Callable[[float], np.ndarray]] = {
    "ising": ising_test_dist,
    "bernoulli": bernoulli_test_dist,
}


def load_test_dist(path) -> np.ndarray:
    """CSV com uma linha por nó q e uma coluna por saída y (sem cabeçalho de índice)."""
    try:
        df = pd.read_csv(path, header=None, comment="#")
    except FileNotFoundError as e:
        raise ConfigError(f"Arquivo de T(y|q) não encontrado: {path}") from e
    return df.to_numpy(dtype=float)


# ---------- política fixa ----------
def _q_values(mdp: DualMdp, V: np.ndarray) -> np.ndarray:
    return mdp.rewards + np.einsum("ixj,j->ix", mdp.trans, V)


def fixed_policy_solve(mdp: DualMdp, policy, gauge_state: int | None = None,
                       gauge_value: float = 0.0) -> DualSolution:
    """
    Resolve ρ + V(i) = r(i, x*) + Σ_j P(j|i,x*) V(j) com V(gauge) = gauge_value.
    Gauge padrão: primeiro estado (lexicográfico) da classe recorrente.
    """
    S, Q = mdp.shape
    pol = np.asarray(policy, dtype=int).reshape(-1)
    n = mdp.n_states
    if pol.shape != (n,):
        raise ConfigError(f"Política com {pol.size} entradas; esperado {n}")
    idx = np.arange(n)
    K = mdp.trans[idx, pol]
    rec = recurrent_class(K)
    g0 = rec[0] if gauge_state is None else int(gauge_state)

    A = np.zeros((n + 1, n + 1))
    b = np.zeros(n + 1)
    A[:n, 0] = 1.0
    A[:n, 1:] = np.eye(n) - K
    b[:n] = mdp.rewards[idx, pol]
    A[n, 1 + g0] = 1.0
    b[n] = gauge_value
    try:
        sol = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as e:
        raise NumericError(f"Sistema da política fixa singular além do gauge: {e}") from e
    res = float(np.max(np.abs(A @ sol - b)))
    if res > SOLVE_TOL:
        raise NumericError(f"Resíduo da política fixa {res:.2e} acima de {SOLVE_TOL:.0e}")
    return DualSolution(float(sol[0]), sol[1:].reshape(S, Q), pol.reshape(S, Q))


def bellman_verify(mdp: DualMdp, sol: DualSolution) -> float:
    """max_i [max_x (r + PV)(i,x) − (ρ + V(i))]; ≤ tolerância certifica ρ."""
    V = sol.V.reshape(-1)
    qv = _q_values(mdp, V)
    return float(np.max(qv.max(axis=1) - (sol.rho + V)))


def action_gaps(mdp: DualMdp, sol: DualSolution) -> pd.DataFrame:
    """Folga ρ + V(s,q) − (r + PV)(s,q,x) por ação (≥ 0 numa solução certificada)."""
    S, Q = mdp.shape
    V = sol.V.reshape(-1)
    qv = _q_values(mdp, V)
    rows = []
    for s in range(S):
        for q in range(Q):
            i = s * Q + q
            for x in range(qv.shape[1]):
                rows.append({"s": s, "q": q, "x": x, "gap": float(sol.rho + V[i] - qv[i, x]),
                             "chosen": bool(sol.policy[s, q] == x)})
    return pd.DataFrame(rows)


# ---------- otimização ----------
def policy_iteration(mdp: DualMdp, tie_tol: float = 1e-9, max_iter: int = 1000) -> DualSolution:
    """Howard: parte de x ≡ 0 e mantém a ação corrente em empates (até tie_tol)."""
    n = mdp.n_states
    pol = np.zeros(n, dtype=int)
    idx = np.arange(n)
    for _ in range(max_iter):
        sol = fixed_policy_solve(mdp, pol)
        qv = _q_values(mdp, sol.V.reshape(-1))
        best = qv.argmax(axis=1)
        keep = qv[idx, pol] >= qv[idx, best] - tie_tol
        new = np.where(keep, pol, best)
        if np.array_equal(new, pol):
            viol = bellman_verify(mdp, sol)
            if viol > 1e-9:
                raise NumericError(f"Iteração de política terminou com violação de Bellman {viol:.2e}")
            return sol
        pol = new
    raise NumericError(f"Iteração de política não convergiu em {max_iter} passos.")


def optimal_gain_lp(mdp: DualMdp) -> float:
    """min ρ  s.a.  ρ + V(i) − Σ_j P(j|i,x) V(j) ≥ r(i,x)  (HiGHS)."""
    n, X = mdp.rewards.shape
    rows = []
    rhs = []
    for i in range(n):
        for x in range(X):
            row = np.zeros(n + 1)
            row[0] = -1.0
            row[1 + i] -= 1.0
            row[1:] += mdp.trans[i, x]
            rows.append(row)
            rhs.append(-mdp.rewards[i, x])
    c = np.zeros(n + 1)
    c[0] = 1.0
    res = linprog(c, A_ub=np.array(rows), b_ub=np.array(rhs), bounds=[(None, None)] * (n + 1),
                  method="highs")
    if res.status != 0:
        raise NumericError(f"LP do ganho ótimo falhou: {res.message}")
    return float(res.x[0])


def dmc_dual_bound(ch: UnifilarFsc, T) -> float:
    """max_x KL(P(·|x) || T) para canal sem memória (|S| = 1)."""
    if ch.state_count != 1:
        raise ConfigError("Limitante dual de DMC exige |S| = 1.")
    T = np.asarray(T, dtype=float).reshape(-1)
    W = ch.kernel[0]
    bad = np.argwhere((W > 0) & (T[None, :] <= 0))
    if bad.size:
        x, y = (int(i) for i in bad[0])
        raise SupportError(f"Suporte violado: T(y={y}) = 0 mas P(y={y}|x={x}) > 0")
    return float(max(rel_entr(W[x], T).sum() / LN2 for x in range(W.shape[0])))


@dataclass
class ParamSearchResult:
    a: float
    rho: float
    at_boundary: bool
    solution: DualSolution | None


def sweep_test_param(ch: UnifilarFsc, g: QGraph, family: Callable, grid) -> pd.DataFrame:
    rows = [{"a": float(a), "rho_bits": optimal_gain_lp(build_dual_mdp(ch, g, family(a)))} for a in grid]
    return pd.DataFrame(rows)


def _local_minima(vals: np.ndarray, tol: float = 1e-9) -> int:
    d = np.diff(vals)
    sgn = np.sign(np.where(np.abs(d) <= tol, 0.0, d))
    sgn = sgn[sgn != 0]
    return int(np.sum((sgn[:-1] < 0) & (sgn[1:] > 0)))


def optimize_test_param(ch: UnifilarFsc, g: QGraph, family: Callable = ising_test_dist,
                        bounds: tuple[float, float] = (0.05, 0.95), xatol: float = 1e-8,
                        scan: int = 41) -> ParamSearchResult:
    """
    Minimiza ρ(a) (ganho ótimo do MDP dual) em um intervalo por busca escalar limitada
    (seção áurea + interpolação parabólica); varredura grossa rejeita ρ não unimodal.
    """
    lo, hi = bounds
    if not (lo < hi):
        raise ConfigError(f"Intervalo inválido: {bounds}")

    def gain(a):
        return optimal_gain_lp(build_dual_mdp(ch, g, family(a)))

    coarse = np.array([gain(a) for a in np.linspace(lo, hi, scan)])
    if _local_minima(coarse) > 1:
        raise NumericError("ρ(a) não é unimodal no intervalo (varredura grossa com mais de um mínimo).")
    res = minimize_scalar(gain, bounds=bounds, method="bounded", options={"xatol": xatol})
    a = float(res.x)
    at_boundary = bool(min(a - lo, hi - a) <= 1e3 * xatol)
    if at_boundary:
        warn(f"Minimizador na borda do intervalo ({a:.6f}); amplie --range.")
    try:
        sol = policy_iteration(build_dual_mdp(ch, g, family(a)))
        rho = sol.rho
    except MultichainError as e:
        warn(f"Iteração de política indisponível no minimizador ({e}); ρ do LP.")
        sol, rho = None, float(res.fun)
    return ParamSearchResult(a, rho, at_boundary, sol)
