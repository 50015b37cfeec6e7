#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
probcore.py — primitivas exatas de probabilidade e informação (em bits).

- entropias, divergência KL, informação mútua condicional genérica
- I(X,S;Y|Q) de um tensor P(s,q,x,y)
- informação dirigida exata, reversa e MI sobre a tabela P(x^n, y^n)
- InfoMat I(X_i;Y_j|X^{i-1},Y^{j-1}) e suas decomposições

Convenções: 0·log0 = 0; p(x)>0 com q(x)=0 é erro (SupportError), nunca +inf.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.special import entr, rel_entr

from fbcap.utils import ConfigError, SupportError, check_pmf

LN2 = np.log(2.0)

# tabela binária com n=8 tem 2^16 entradas
MAX_TABLE_ENTRIES = 4 ** 8


# ---------- entropias ----------
def entropy(p) -> float:
    p = np.asarray(p, dtype=float)
    return float(entr(p).sum() / LN2)


def binary_entropy(p):
    """H2(p) em bits; aceita escalar ou array."""
    arr = np.asarray(p, dtype=float)
    if np.any((arr < 0.0) | (arr > 1.0)) or np.any(~np.isfinite(arr)):
        raise ConfigError(f"Probabilidade fora de [0,1]: {p}")
    h = (entr(arr) + entr(1.0 - arr)) / LN2
    return float(h) if h.ndim == 0 else h


def kl_divergence(p, q) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ConfigError(f"Alfabetos diferentes em KL: {p.shape} vs {q.shape}")
    bad = np.argwhere((p > 0) & (q <= 0))
    if bad.size:
        raise SupportError(f"KL infinita: p>0 e q=0 no símbolo {tuple(int(i) for i in bad[0])}")
    return float(rel_entr(p, q).sum() / LN2)


def _marginal_entropy(table: np.ndarray, keep: Sequence[int]) -> float:
    keep = sorted(set(keep))
    if not keep:
        return 0.0
    drop = tuple(ax for ax in range(table.ndim) if ax not in keep)
    return entropy(table.sum(axis=drop) if drop else table)


def cmi(table: np.ndarray, a: Iterable[int], b: Iterable[int], c: Iterable[int] = ()) -> float:
    """I(A;B|C) = H(A,C) + H(B,C) − H(A,B,C) − H(C), com A,B,C listas de eixos."""
    a, b, c = list(a), list(b), list(c)
    if not a or not b:
        return 0.0
    return (_marginal_entropy(table, a + c) + _marginal_entropy(table, b + c)
            - _marginal_entropy(table, a + b + c) - _marginal_entropy(table, c))


def conditional_mi_xsq(joint: np.ndarray) -> float:
    """I(X,S;Y|Q) = H(Y|Q) − H(Y|X,S,Q) para o tensor P(s,q,x,y)."""
    joint = np.asarray(joint, dtype=float)
    if joint.ndim != 4:
        raise ConfigError(f"Tensor P(s,q,x,y) deve ter 4 eixos, recebeu {joint.ndim}.")
    check_pmf(joint.ravel(), label="P(s,q,x,y)")
    # eixos: 0=s 1=q 2=x 3=y
    return cmi(joint, a=[0, 2], b=[3], c=[1])


# ---------- sequências ----------
@dataclass(frozen=True)
class JointSequencePmf:
    """
    P(x^n, y^n) como tabela densa com eixos (x1..xn, y1..yn).
    """
    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table, dtype=float)
        if t.ndim < 2 or t.ndim % 2:
            raise ConfigError(f"Tabela deve ter 2n eixos, recebeu {t.ndim}.")
        n = t.ndim // 2
        if len(set(t.shape[:n])) != 1 or len(set(t.shape[n:])) != 1:
            raise ConfigError(f"Alfabetos inconsistentes ao longo do horizonte: {t.shape}")
        if t.size > MAX_TABLE_ENTRIES:
            raise ConfigError(f"Horizonte grande demais para enumeração exata ({t.size} > {MAX_TABLE_ENTRIES}).")
        check_pmf(t.ravel(), label="P(x^n,y^n)")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    @property
    def n(self) -> int:
        return self.table.ndim // 2

    @property
    def x_card(self) -> int:
        return self.table.shape[0]

    @property
    def y_card(self) -> int:
        return self.table.shape[self.n]

    def x_axes(self, upto: int) -> list[int]:
        return list(range(upto))

    def y_axes(self, upto: int) -> list[int]:
        return list(range(self.n, self.n + upto))

    @classmethod
    def from_items(cls, n: int, x_card: int, y_card: int, items) -> "JointSequencePmf":
        """items: iterável de (x_tuple, y_tuple, prob); probabilidades repetidas acumulam."""
        t = np.zeros((x_card,) * n + (y_card,) * n)
        for xs, ys, p in items:
            t[tuple(xs) + tuple(ys)] += p
        return cls(t)


class DirectedInfo(NamedTuple):
    di: float
    reverse_di: float
    mi: float


def exact_directed_info(joint: JointSequencePmf) -> DirectedInfo:
    t, n = joint.table, joint.n
    di = sum(cmi(t, joint.x_axes(i), [n + i - 1], joint.y_axes(i - 1)) for i in range(1, n + 1))
    rev = sum(cmi(t, joint.y_axes(i - 1), [i - 1], joint.x_axes(i - 1)) for i in range(1, n + 1))
    mi = cmi(t, joint.x_axes(n), joint.y_axes(n))
    return DirectedInfo(float(di), float(rev), float(mi))


@dataclass(frozen=True)
class InfoMat:
    entries: np.ndarray

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def di(self) -> float:
        return float(np.triu(self.entries).sum())

    def reverse_di(self) -> float:
        return float(np.tril(self.entries, k=-1).sum())

    def delayed_di(self) -> float:
        """I(X^{n-1} → Y^n): informação que flui com atraso de ao menos um passo."""
        return float(np.triu(self.entries, k=1).sum())

    def instantaneous(self) -> float:
        return float(np.trace(self.entries))

    def row_sums(self) -> np.ndarray:
        return self.entries.sum(axis=1)

    def col_sums(self) -> np.ndarray:
        return self.entries.sum(axis=0)

    def total(self) -> float:
        return float(self.entries.sum())


def infomat(joint: JointSequencePmf) -> InfoMat:
    t, n = joint.table, joint.n
    m = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            m[i, j] = cmi(t, [i], [n + j], joint.x_axes(i) + joint.y_axes(j))
    if m.min() < -1e-10:
        raise ConfigError(f"InfoMat com entrada negativa ({m.min():.3e}); tabela inválida?")
    m = np.maximum(m, 0.0)
    m.setflags(write=False)
    return InfoMat(m)


def causal_conditioning(joint: JointSequencePmf) -> tuple[np.ndarray, np.ndarray]:
    """
    Retorna (P(y^n||x^n), P(x^n||y^{n-1})) na forma de tabelas com os eixos da
    conjunta. Onde o condicionante tem massa zero o fator vale 0.
    """
    t, n = joint.table, joint.n

    def marg(keep):
        drop = tuple(ax for ax in range(t.ndim) if ax not in keep)
        return t.sum(axis=drop, keepdims=True) if drop else t

    y_cc = np.ones_like(t)
    x_cc = np.ones_like(t)
    for i in range(1, n + 1):
        num = marg(joint.x_axes(i) + joint.y_axes(i))
        den = marg(joint.x_axes(i) + joint.y_axes(i - 1))
        y_cc = y_cc * np.divide(num, den, out=np.zeros(np.broadcast_shapes(num.shape, den.shape)), where=den > 0)
        num = marg(joint.x_axes(i) + joint.y_axes(i - 1))
        den = marg(joint.x_axes(i - 1) + joint.y_axes(i - 1))
        x_cc = x_cc * np.divide(num, den, out=np.zeros(np.broadcast_shapes(num.shape, den.shape)), where=den > 0)
    return y_cc, x_cc
