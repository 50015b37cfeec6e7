#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
qgraph.py — Q-grafos (autômatos que quantizam históricos de saída).

Arquivo de Q-grafo (JSON, 0-indexado):
    {"name": "...", "Q": 4, "Y": 2, "phi": [[q'(y=0), q'(y=1)], ...], "q0": 0}

Cadeia induzida em S×Q com índice s*Q + q:
    P(s',q' | s,q) = Σ_{x,y: f(s,x,y)=s', Φ(q,y)=q'} P(x|s,q) P(y|x,s)
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import networkx as nx
import numpy as np

from fbcap.channels import UnifilarFsc
from fbcap.utils import ConfigError, MultichainError, NumericError, check_pmf

MAX_NODES = 10 ** 6
STATIONARY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class QGraph:
    phi: np.ndarray
    q0: int = 0
    name: str = "qgraph"

    def __post_init__(self):
        phi = np.array(self.phi, dtype=int)
        if phi.ndim != 2:
            raise ConfigError(f"phi deve ter forma [Q][Y]; recebeu {phi.shape}")
        Q = phi.shape[0]
        bad = np.argwhere((phi < 0) | (phi >= Q))
        if bad.size:
            q, y = (int(i) for i in bad[0])
            raise ConfigError(f"phi[{q}][{y}] = {phi[q, y]} fora de [0,{Q})")
        if not (0 <= self.q0 < Q):
            raise ConfigError(f"q0={self.q0} fora de [0,{Q})")
        phi.setflags(write=False)
        object.__setattr__(self, "phi", phi)
        if not nx.is_strongly_connected(self.to_networkx()):
            raise ConfigError(f"Q-grafo '{self.name}' é redutível (não fortemente conexo).")

    @property
    def node_count(self) -> int:
        return self.phi.shape[0]

    @property
    def output_count(self) -> int:
        return self.phi.shape[1]

    def step(self, q: int, y: int) -> int:
        return int(self.phi[q, y])

    def to_networkx(self) -> nx.MultiDiGraph:
        g = nx.MultiDiGraph()
        g.add_nodes_from(range(self.phi.shape[0]))
        for q in range(self.phi.shape[0]):
            for y in range(self.phi.shape[1]):
                g.add_edge(q, int(self.phi[q, y]), y=y)
        return g

    def quantize(self, ys, q0: int | None = None) -> np.ndarray:
        """Sequência de nós q_t após cada saída y_t."""
        q = self.q0 if q0 is None else q0
        out = np.empty(len(ys), dtype=int)
        for t, y in enumerate(ys):
            q = self.phi[q, int(y)]
            out[t] = q
        return out


# ---------- construtores ----------
def ising_q1() -> QGraph:
    # nós 0..3; Φ(·,0) = [3,3,3,2], Φ(·,1) = [1,0,0,0]
    return QGraph(np.array([[3, 1], [3, 0], [3, 0], [2, 0]]), q0=0, name="ising_q1")


def debruijn(order: int, y_card: int = 2) -> QGraph:
    """Nó = últimas `order` saídas (mais antiga no dígito mais significativo)."""
    if order < 1:
        raise ConfigError(f"Ordem do grafo de de Bruijn deve ser ≥ 1; recebeu {order}")
    if y_card ** order > MAX_NODES:
        raise ConfigError(f"de Bruijn com {y_card}^{order} nós excede o limite de {MAX_NODES}")
    Q = y_card ** order
    q = np.arange(Q)[:, None]
    y = np.arange(y_card)[None, :]
    return QGraph((q * y_card + y) % Q, q0=0, name=f"debruijn{order}")


def resolve_qgraph(spec: str, y_card: int = 2) -> QGraph:
    """'q1', 'debruijn:m' ou caminho JSON."""
    name, _, arg = spec.partition(":")
    if name in ("q1", "ising_q1") and not arg:
        return ising_q1()
    if name == "debruijn":
        try:
            return debruijn(int(arg or 1), y_card)
        except ValueError as e:
            raise ConfigError(f"Ordem inválida em '{spec}'") from e
    return load_qgraph(Path(spec))


# ---------- arquivo ----------
def load_qgraph(path: Path) -> QGraph:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Arquivo de Q-grafo não encontrado: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"Erro de parse em {path}: {e}") from e
    for field in ("Q", "Y", "phi"):
        if field not in doc:
            raise ConfigError(f"Campo obrigatório ausente em {path}: '{field}'")
    phi = np.asarray(doc["phi"])
    if phi.shape != (int(doc["Q"]), int(doc["Y"])):
        raise ConfigError(f"'phi' deve ter forma [Q={doc['Q']}][Y={doc['Y']}]; recebeu {phi.shape}")
    return QGraph(phi, q0=int(doc.get("q0", 0)), name=str(doc.get("name", path.stem)))


def save_qgraph(g: QGraph, path: Path) -> Path:
    doc = {"name": g.name, "Q": g.node_count, "Y": g.output_count,
           "phi": g.phi.tolist(), "q0": g.q0}
    Path(path).write_text(json.dumps(doc, indent=2), encoding="utf-8")
    return Path(path)


def export_edgelist(g: QGraph, path: Path) -> Path:
    nx.write_edgelist(g.to_networkx(), Path(path).as_posix(), data=["y"])
    return Path(path)


# ---------- cadeia (S, Q) ----------
def uniform_policy(ch: UnifilarFsc, g: QGraph) -> np.ndarray:
    S, X = ch.state_count, ch.input_count
    return np.full((S, g.node_count, X), 1.0 / X)


def check_policy(pol, ch: UnifilarFsc, g: QGraph) -> np.ndarray:
    pol = np.asarray(pol, dtype=float)
    want = (ch.state_count, g.node_count, ch.input_count)
    if pol.shape != want:
        raise ConfigError(f"Política P(x|s,q) com forma {pol.shape}; esperado {want}")
    if g.output_count != ch.output_count:
        raise ConfigError(f"Q-grafo com |Y|={g.output_count} e canal com |Y|={ch.output_count}")
    check_pmf(pol, axis=-1, tol=1e-9, label="P(x|s,q)")
    return pol


def sq_kernel(ch: UnifilarFsc, g: QGraph, pol) -> np.ndarray:
    pol = check_policy(pol, ch, g)
    S, X, Y = ch.kernel.shape
    Q = g.node_count
    K = np.zeros((S * Q, S * Q))
    for s in range(S):
        for q in range(Q):
            for x in range(X):
                for y in range(Y):
                    w = pol[s, q, x] * ch.kernel[s, x, y]
                    if w > 0:
                        K[s * Q + q, ch.next_state[s, x, y] * Q + g.phi[q, y]] += w
    return K


def chain_graph(K: np.ndarray, tol: float = 0.0) -> nx.DiGraph:
    dg = nx.DiGraph()
    dg.add_nodes_from(range(K.shape[0]))
    dg.add_edges_from((int(i), int(j)) for i, j in np.argwhere(K > tol))
    return dg


def recurrent_class(K: np.ndarray) -> list[int]:
    """Única classe recorrente da cadeia (estados transitórios são permitidos)."""
    dg = chain_graph(K)
    classes = [sorted(c) for c in nx.attracting_components(dg)]
    if len(classes) != 1:
        raise MultichainError(f"Cadeia com {len(classes)} classes recorrentes; "
                              f"distribuição estacionária não é única.")
    return classes[0]


def stationary_distribution(K) -> np.ndarray:
    """π com πᵀK = πᵀ, por solução densa de (Kᵀ − I)π = 0 com Σπ = 1."""
    K = np.asarray(K, dtype=float)
    n = K.shape[0]
    if K.shape != (n, n):
        raise ConfigError(f"Kernel deve ser quadrado; recebeu {K.shape}")
    check_pmf(K, axis=1, tol=1e-9, label="kernel da cadeia")
    rec = recurrent_class(K)
    if not nx.is_aperiodic(chain_graph(K).subgraph(rec)):
        raise NumericError("Cadeia periódica na classe recorrente; estacionária não é limite.")
    A = np.vstack([K.T - np.eye(n), np.ones((1, n))])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    res = float(np.max(np.abs(pi @ K - pi)))
    if res > STATIONARY_TOL:
        raise NumericError(f"Resíduo da estacionária {res:.2e} acima de {STATIONARY_TOL:.0e}")
    return pi


def sq_stationary(ch: UnifilarFsc, g: QGraph, pol) -> np.ndarray:
    """π(s,q) como array (S, Q)."""
    return stationary_distribution(sq_kernel(ch, g, pol)).reshape(ch.state_count, g.node_count)
