#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
ba_di.py — Blahut–Arimoto estendido para informação dirigida em n letras.

Tabelas densas com eixos (x1..xn, y1..yn); eixos que uma grandeza não usa
ficam com tamanho 1 para broadcast.

Iteração k:
  1) q_{k-1}(x^n|y^n) ∝ r_{k-1}(x^n||y^{n-1}) P(y^n||x^n)
  2) r_k(x_i|x^{i-1},y^{i-1}) para i = n..1, forma geométrica reversa:
       E_n = Σ_{y_n} P(y_n|·) log q,   E_i = Σ_{y_i} P(y_i|·) V_{i+1}
       r_i ∝ 2^{E_i},  V_i = log Σ_{x_i} 2^{E_i}
  3) I_L (soma dupla com q_k) e I_U (max/soma alternados) em bits/símbolo
Para quando I_U − I_L ≤ ε ou ao fim de max_iter.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from fbcap.channels import UnifilarFsc
from fbcap.probcore import LN2
from fbcap.utils import ConfigError, check_pmf, warn

MAX_ENTRIES = 2 * 10 ** 6


@dataclass(frozen=True)
class BaConfig:
    eps: float = 1e-5
    max_iter: int = 10_000


@dataclass(frozen=True, eq=False)
class CcKernelTable:
    """P(y_i | x^i, y^{i-1}) para i = 1..n; nível i tem eixos (x1..xi, y1..yi)."""
    levels: tuple
    x_card: int
    y_card: int

    def __post_init__(self):
        if not self.levels:
            raise ConfigError("Tabela causal vazia (n = 0).")
        n = len(self.levels)
        if self.x_card ** n * self.y_card ** n > MAX_ENTRIES:
            raise ConfigError(f"Tabela com {self.x_card}^{n}·{self.y_card}^{n} entradas excede {MAX_ENTRIES}.")
        levels = []
        for i, lv in enumerate(self.levels, start=1):
            lv = np.asarray(lv, dtype=float)
            want = (self.x_card,) * i + (self.y_card,) * i
            if lv.shape != want:
                raise ConfigError(f"Nível {i} com forma {lv.shape}; esperado {want}")
            check_pmf(lv, axis=-1, tol=1e-9, label=f"P(y_{i}|x^{i},y^{i - 1})")
            lv.setflags(write=False)
            levels.append(lv)
        object.__setattr__(self, "levels", tuple(levels))

    @property
    def n(self) -> int:
        return len(self.levels)

    def expanded(self, i: int) -> np.ndarray:
        """Nível i (1-indexado) com a forma completa de broadcast."""
        n, X, Y = self.n, self.x_card, self.y_card
        return self.levels[i - 1].reshape((X,) * i + (1,) * (n - i) + (Y,) * i + (1,) * (n - i))

    def full(self) -> np.ndarray:
        """P(y^n || x^n)."""
        out = self.expanded(1)
        for i in range(2, self.n + 1):
            out = out * self.expanded(i)
        return out


def unroll_channel(ch: UnifilarFsc, n: int, s0: int = 0) -> CcKernelTable:
    """Materializa P(y_i|y^{i-1},x^i) = P(y_i|x_i, s_{i-1}) seguindo o estado determinístico."""
    if n < 1:
        raise ConfigError(f"Horizonte n deve ser ≥ 1; recebeu {n}")
    if not (0 <= s0 < ch.state_count):
        raise ConfigError(f"Estado inicial s0={s0} fora de [0,{ch.state_count})")
    X, Y = ch.input_count, ch.output_count
    if X ** n * Y ** n > MAX_ENTRIES:
        raise ConfigError(f"Desenrolar até n={n} gera {X ** n * Y ** n} entradas (> {MAX_ENTRIES}).")
    states = np.array(s0)
    levels = []
    for i in range(1, n + 1):
        # estados s_{i-1} com eixos (x1..x_{i-1}, y1..y_{i-1}); abre x_i e y_i
        s = states.reshape((X,) * (i - 1) + (1,) + (Y,) * (i - 1) + (1,))
        xi = np.arange(X).reshape((1,) * (i - 1) + (X,) + (1,) * i)
        yi = np.arange(Y).reshape((1,) * (2 * i - 1) + (Y,))
        levels.append(np.broadcast_to(ch.kernel[s, xi, yi], (X,) * i + (Y,) * i).copy())
        states = np.broadcast_to(ch.next_state[s, xi, yi], (X,) * i + (Y,) * i)
    return CcKernelTable(tuple(levels), X, Y)


@dataclass
class BaState:
    r: list                 # r_i expandidos, i = 1..n
    q: np.ndarray           # q(x^n|y^n)
    iterations: int
    i_low: float
    i_up: float
    converged: bool
    history: list = field(default_factory=list)   # (k, I_L, I_U)

    @property
    def gap(self) -> float:
        return self.i_up - self.i_low

    def to_record(self, n: int) -> dict:
        return {"n": n, "iterations": self.iterations, "I_L": self.i_low, "I_U": self.i_up,
                "converged": self.converged, "gap": self.gap}


def _x_axes(n: int) -> tuple:
    return tuple(range(n))


def _uniform_r(table: CcKernelTable) -> list:
    n, X, Y = table.n, table.x_card, table.y_card
    return [np.full((X,) * i + (1,) * (n - i) + (Y,) * (i - 1) + (1,) * (n - i + 1), 1.0 / X)
            for i in range(1, n + 1)]


def _causal_r(r: list) -> np.ndarray:
    out = r[0]
    for ri in r[1:]:
        out = out * ri
    return out


def _safe_log2(a: np.ndarray) -> np.ndarray:
    return np.log2(a, out=np.zeros_like(a), where=a > 0)


def posterior_q(r: list, table: CcKernelTable) -> np.ndarray:
    joint = _causal_r(r) * table.full()
    den = joint.sum(axis=_x_axes(table.n), keepdims=True)
    return np.divide(joint, den, out=np.zeros_like(joint), where=den > 0)


def update_r(q: np.ndarray, table: CcKernelTable) -> list:
    """Atualização reversa i = n..1 de r_k a partir de q_{k-1}."""
    n = table.n
    value = _safe_log2(q)
    r = [None] * n
    for i in range(n, 0, -1):
        e = (table.expanded(i) * value).sum(axis=n + i - 1, keepdims=True)
        v = logsumexp(e * LN2, axis=i - 1, keepdims=True) / LN2
        r[i - 1] = np.exp2(e - v)
        value = v
    return r


def di_bounds(state: BaState, table: CcKernelTable) -> tuple[float, float]:
    return _lower(state.r, state.q, table), _upper(state.r, table)


def _lower(r: list, q: np.ndarray, table: CcKernelTable) -> float:
    rr = _causal_r(r)
    w = rr * table.full()
    mask = w > 0
    terms = np.zeros_like(w)
    terms[mask] = w[mask] * (np.log2(q[mask]) - np.log2(np.broadcast_to(rr, w.shape)[mask]))
    return float(terms.sum() / table.n)


def _upper(r: list, table: CcKernelTable) -> float:
    n = table.n
    P = table.full()
    p_y = (_causal_r(r) * P).sum(axis=_x_axes(n), keepdims=True)
    value = np.zeros_like(P)
    mask = P > 0
    value[mask] = np.log2(P[mask]) - np.log2(np.broadcast_to(p_y, P.shape)[mask])
    for i in range(n, 0, -1):
        u = (table.expanded(i) * value).sum(axis=n + i - 1, keepdims=True)
        value = u.max(axis=i - 1, keepdims=True)
    return float(value.reshape(-1)[0] / n)


def ba_iterate(table: CcKernelTable, cfg: BaConfig = BaConfig()) -> BaState:
    if cfg.eps <= 0 or cfg.max_iter < 1:
        raise ConfigError(f"Parâmetros inválidos: eps={cfg.eps}, max_iter={cfg.max_iter}")
    r = _uniform_r(table)
    q = posterior_q(r, table)
    low, up = _lower(r, q, table), _upper(r, table)
    history = [(0, low, up)]
    k = 0
    while up - low > cfg.eps and k < cfg.max_iter:
        k += 1
        r = update_r(q, table)
        q = posterior_q(r, table)
        low, up = _lower(r, q, table), _upper(r, table)
        history.append((k, low, up))
    converged = up - low <= cfg.eps
    if not converged:
        warn(f"BA-DI sem convergência após {k} iterações (gap={up - low:.3e}).")
    return BaState(r, q, k, low, up, converged, history)
