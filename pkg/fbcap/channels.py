#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
channels.py — canais de estados finitos unifilares (FSC).

Representação interna:
    kernel[s, x, y]     = P(y | x, s)
    next_state[s, x, y] = f(s, x, y)

Arquivo de canal (JSON, 0-indexado):
    {"name": "...", "S": 2, "X": 2, "Y": 2,
     "kernel":     [[[...s...] ...x...] ...y...],   # kernel[y][x][s]
     "next_state": [[[...y...] ...x...] ...s...]}   # next_state[s][x][y]
Entradas do kernel podem ser números ou strings decimais/frações ("1/3").

Embutidos: ising2, ising:q (2..8), bsc:p, noiseless[:k], useless.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import networkx as nx
import numpy as np

from fbcap.utils import ConfigError

ROW_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class UnifilarFsc:
    kernel: np.ndarray
    next_state: np.ndarray
    name: str = "canal"

    def __post_init__(self):
        k = np.array(self.kernel, dtype=float)
        f = np.array(self.next_state, dtype=int)
        if k.ndim != 3:
            raise ConfigError(f"kernel deve ter eixos (S,X,Y); recebeu shape {k.shape}")
        if f.shape != k.shape:
            raise ConfigError(f"next_state {f.shape} incompatível com kernel {k.shape}")
        if np.any(k < 0):
            s, x, y = (int(i) for i in np.argwhere(k < 0)[0])
            raise ConfigError(f"Probabilidade negativa em P(y={y}|x={x},s={s})")
        sums = k.sum(axis=2)
        bad = np.argwhere(np.abs(sums - 1.0) > ROW_TOL)
        if bad.size:
            s, x = (int(i) for i in bad[0])
            raise ConfigError(f"Linha do kernel (x={x}, s={s}) soma {sums[s, x]:.12g}, esperado 1")
        S = k.shape[0]
        bad = np.argwhere((f < 0) | (f >= S))
        if bad.size:
            s, x, y = (int(i) for i in bad[0])
            raise ConfigError(f"next_state[s={s}][x={x}][y={y}] = {f[s, x, y]} fora de [0,{S})")
        k.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "kernel", k)
        object.__setattr__(self, "next_state", f)

    @property
    def state_count(self) -> int:
        return self.kernel.shape[0]

    @property
    def input_count(self) -> int:
        return self.kernel.shape[1]

    @property
    def output_count(self) -> int:
        return self.kernel.shape[2]

    def prob(self, y: int, x: int, s: int) -> float:
        return float(self.kernel[s, x, y])

    def f(self, s: int, x: int, y: int) -> int:
        return int(self.next_state[s, x, y])

    def same_tables(self, other: "UnifilarFsc") -> bool:
        return (self.kernel.shape == other.kernel.shape
                and np.array_equal(self.kernel, other.kernel)
                and np.array_equal(self.next_state, other.next_state))


# ---------- construtores ----------
def make_binary_ising() -> UnifilarFsc:
    # kernel[s][x] = (P(y=0), P(y=1))
    kernel = [[[1.0, 0.0], [0.5, 0.5]],
              [[0.5, 0.5], [0.0, 1.0]]]
    next_state = [[[0, 0], [1, 1]],
                  [[0, 0], [1, 1]]]
    return UnifilarFsc(np.array(kernel), np.array(next_state), name="ising2")


def make_qary_ising(q: int) -> UnifilarFsc:
    if not (2 <= q <= 8):
        raise ConfigError(f"Alfabeto do Ising q-ário deve estar em [2,8]; recebeu {q}")
    eye = np.eye(q)
    # Y = X com prob. 1/2, Y = S com prob. 1/2
    kernel = 0.5 * eye[None, :, :] + 0.5 * eye[:, None, :]
    next_state = np.broadcast_to(np.arange(q)[None, :, None], (q, q, q)).copy()
    return UnifilarFsc(kernel, next_state, name=f"ising{q}")


def make_memoryless(w, name: str = "dmc") -> UnifilarFsc:
    """Embrulha uma matriz W[x, y] como FSC de um estado."""
    w = np.asarray(w, dtype=float)
    if w.ndim != 2:
        raise ConfigError(f"Matriz do canal sem memória deve ser (X,Y); recebeu {w.shape}")
    return UnifilarFsc(w[None, :, :], np.zeros((1,) + w.shape, dtype=int), name=name)


def make_bsc(eps: float) -> UnifilarFsc:
    if not (0.0 <= eps <= 1.0):
        raise ConfigError(f"Probabilidade de cruzamento fora de [0,1]: {eps}")
    return make_memoryless([[1 - eps, eps], [eps, 1 - eps]], name=f"bsc:{eps:g}")


def make_noiseless(k: int = 2) -> UnifilarFsc:
    return make_memoryless(np.eye(k), name=f"noiseless:{k}")


def make_useless() -> UnifilarFsc:
    return make_memoryless(np.full((2, 2), 0.5), name="useless")


def resolve_channel(spec: str) -> UnifilarFsc:
    """Nome embutido ('ising2', 'ising:3', 'bsc:0.1', 'noiseless', 'useless') ou caminho JSON."""
    name, _, arg = spec.partition(":")
    try:
        if name == "ising2" and not arg:
            return make_binary_ising()
        if name == "ising":
            return make_qary_ising(int(arg or 2))
        if name == "bsc":
            return make_bsc(float(arg))
        if name == "noiseless":
            return make_noiseless(int(arg or 2))
        if name == "useless" and not arg:
            return make_useless()
    except ValueError as e:
        raise ConfigError(f"Canal embutido inválido '{spec}': {e}") from e
    return load_channel(Path(spec))


# ---------- conectividade ----------
def state_graph(ch: UnifilarFsc) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(range(ch.state_count))
    for s, x, y in np.argwhere(ch.kernel > 0):
        g.add_edge(int(s), int(ch.next_state[s, x, y]))
    return g


def is_strongly_connected(ch: UnifilarFsc) -> bool:
    return nx.is_strongly_connected(state_graph(ch))


# ---------- arquivo ----------
def _num(v, where: str) -> float:
    try:
        return float(Fraction(str(v)))
    except (ValueError, ZeroDivisionError) as e:
        raise ConfigError(f"Valor inválido em {where}: {v!r}") from e


def load_channel(path: Path) -> UnifilarFsc:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Arquivo de canal não encontrado: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"Erro de parse em {path}: {e}") from e
    for field in ("S", "X", "Y", "kernel", "next_state"):
        if field not in doc:
            raise ConfigError(f"Campo obrigatório ausente em {path}: '{field}'")
    S, X, Y = int(doc["S"]), int(doc["X"]), int(doc["Y"])

    kernel = np.zeros((S, X, Y))
    rows = doc["kernel"]
    try:
        ragged = len(rows) != Y or any(len(r) != X or any(len(c) != S for c in r) for r in rows)
    except TypeError:
        ragged = True
    if ragged:
        raise ConfigError(f"'kernel' deve ter forma [Y={Y}][X={X}][S={S}]")
    for y in range(Y):
        for x in range(X):
            for s in range(S):
                kernel[s, x, y] = _num(rows[y][x][s], f"kernel[{y}][{x}][{s}]")

    try:
        nxt = np.asarray(doc["next_state"])
    except ValueError as e:
        raise ConfigError(f"'next_state' irregular (listas de tamanhos diferentes) em {path}") from e
    if nxt.shape != (S, X, Y):
        raise ConfigError(f"'next_state' deve ter forma [S={S}][X={X}][Y={Y}]; recebeu {nxt.shape}")
    if not np.issubdtype(nxt.dtype, np.integer):
        raise ConfigError("'next_state' deve conter apenas inteiros")
    return UnifilarFsc(kernel, nxt.astype(int), name=str(doc.get("name", path.stem)))


def channel_to_dict(ch: UnifilarFsc) -> dict:
    S, X, Y = ch.kernel.shape
    return {
        "name": ch.name, "S": S, "X": X, "Y": Y,
        "kernel": [[[float(ch.kernel[s, x, y]) for s in range(S)] for x in range(X)] for y in range(Y)],
        "next_state": ch.next_state.tolist(),
    }


def save_channel(ch: UnifilarFsc, path: Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(channel_to_dict(ch), indent=2), encoding="utf-8")
    return path
