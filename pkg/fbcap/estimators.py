#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
estimators.py — estimadores de informação dirigida a partir de amostras (x^n, y^n).

- plug-in de ordem ℓ sobre janelas de ℓ+1 pares (sobrepostas por padrão)
- CTW (KT + pesos ½/½) com três árvores:
    árvore de Y:        P̂(y_i | y^{i-1})
    árvore condicional: P̂(y_i | y^{i-1}, x^i), contexto (x_i, z_{i-1}, z_{i-2}, ...)
    árvore de X:        P̂(x_i | x^{i-1}, y^{i-1}), contexto (z_{i-1}, ...)
  com z = x·|Y| + y; contextos antes do início são preenchidos com 0
- oráculo exato da taxa de DI para cadeias de pares (X,Y) e para canais
  unifilares com Q-grafo

Entrada CSV: duas colunas inteiras `x,y`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from fbcap.channels import UnifilarFsc
from fbcap.probcore import DirectedInfo, JointSequencePmf, cmi, exact_directed_info
from fbcap.qbound import mutual_info_of_policy
from fbcap.qgraph import QGraph, check_policy, stationary_distribution
from fbcap.utils import ConfigError, check_pmf, child_rngs, warn

MAX_DEPTH = 16
MAX_ALPHABET = 16
MAX_WINDOW_ENTRIES = 2 * 10 ** 6
COVERAGE_FACTOR = 10


# ---------- amostras ----------
@dataclass(frozen=True)
class SamplePath:
    x: np.ndarray
    y: np.ndarray
    x_card: int = 0
    y_card: int = 0

    def __post_init__(self):
        x = np.asarray(self.x, dtype=int)
        y = np.asarray(self.y, dtype=int)
        if x.ndim != 1 or x.shape != y.shape:
            raise ConfigError(f"x e y devem ser vetores de mesmo tamanho ({x.shape} vs {y.shape}).")
        xc = self.x_card or (int(x.max()) + 1 if x.size else 1)
        yc = self.y_card or (int(y.max()) + 1 if y.size else 1)
        for name, v, card in (("x", x, xc), ("y", y, yc)):
            if v.size and (v.min() < 0 or v.max() >= card):
                raise ConfigError(f"Símbolo de {name} fora do alfabeto [0,{card}).")
            if card > MAX_ALPHABET:
                raise ConfigError(f"Alfabeto de {name} com {card} símbolos excede {MAX_ALPHABET}.")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x_card", max(xc, 1))
        object.__setattr__(self, "y_card", max(yc, 1))

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def pairs(self) -> np.ndarray:
        return self.x * self.y_card + self.y

    def swapped(self) -> "SamplePath":
        return SamplePath(self.y, self.x, self.y_card, self.x_card)


def read_path_csv(path: Path) -> SamplePath:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Arquivo de amostras não encontrado: {path}")
    df = pd.read_csv(path)
    missing = [c for c in ("x", "y") if c not in df.columns]
    if missing:
        raise ConfigError(f"Colunas ausentes em {path}: {missing}")
    if df[["x", "y"]].isna().any().any():
        bad = int(df[["x", "y"]].isna().any(axis=1).idxmax())
        raise ConfigError(f"Valor vazio em {path}, linha {bad + 2}")
    return SamplePath(df["x"].to_numpy(), df["y"].to_numpy())


def write_path_csv(p: SamplePath, path: Path) -> Path:
    pd.DataFrame({"x": p.x, "y": p.y}).to_csv(path, index=False)
    return Path(path)


@dataclass
class DiEstimateReport:
    estimator: str
    value: float
    n: int
    params: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    def to_record(self) -> dict:
        return {"estimator": self.estimator, "value_bits": self.value, "n": self.n,
                **self.params, "flags": ";".join(self.flags)}


# ---------- geração ----------
def sample_fsc_path(ch: UnifilarFsc, g: QGraph, pol, n: int, seed: int = 0,
                    s0: int = 0, burn_in: int = 1000) -> SamplePath:
    """(x,y) de um canal unifilar com entrada P(x|s,q) e nó q = Φ(q,y)."""
    pol = check_policy(pol, ch, g)
    rng = child_rngs(seed, 1)[0]
    u = rng.random((burn_in + n, 2))
    cx = np.cumsum(pol, axis=-1)
    cy = np.cumsum(ch.kernel, axis=-1)
    s, q = s0, g.q0
    xs = np.empty(n, dtype=int)
    ys = np.empty(n, dtype=int)
    for t in range(burn_in + n):
        x = min(int(np.searchsorted(cx[s, q], u[t, 0], side="right")), ch.input_count - 1)
        y = min(int(np.searchsorted(cy[s, x], u[t, 1], side="right")), ch.output_count - 1)
        if t >= burn_in:
            xs[t - burn_in], ys[t - burn_in] = x, y
        s, q = int(ch.next_state[s, x, y]), int(g.phi[q, y])
    return SamplePath(xs, ys, ch.input_count, ch.output_count)


def _check_pair_kernel(kernel, x_card: int, y_card: int) -> np.ndarray:
    K = np.asarray(kernel, dtype=float)
    m = x_card * y_card
    if K.shape != (m, m):
        raise ConfigError(f"Kernel de pares deve ser {m}×{m}; recebeu {K.shape}")
    check_pmf(K, axis=1, tol=1e-9, label="kernel de pares")
    return K


def sample_pair_chain(kernel, n: int, seed: int = 0, x_card: int = 2, y_card: int = 2) -> SamplePath:
    """Cadeia de Markov em z = x·|Y| + y, iniciada na estacionária."""
    K = _check_pair_kernel(kernel, x_card, y_card)
    pi = stationary_distribution(K)
    rng = child_rngs(seed, 1)[0]
    cum = np.cumsum(K, axis=1)
    u = rng.random(n)
    z = np.empty(n, dtype=int)
    cur = min(int(np.searchsorted(np.cumsum(pi), rng.random(), side="right")), len(pi) - 1)
    for t in range(n):
        cur = min(int(np.searchsorted(cum[cur], u[t], side="right")), len(pi) - 1)
        z[t] = cur
    return SamplePath(z // y_card, z % y_card, x_card, y_card)


# ---------- janelas ----------
def _window_table(joint_z: np.ndarray, w: int, x_card: int, y_card: int) -> np.ndarray:
    """Tabela sobre w pares z → eixos (x1..xw, y1..yw)."""
    t = joint_z.reshape((x_card, y_card) * w)
    order = [2 * i for i in range(w)] + [2 * i + 1 for i in range(w)]
    return t.transpose(order)


def _windowed_rates(t: np.ndarray, w: int) -> tuple[float, float]:
    xs = list(range(w))
    ys = list(range(w, 2 * w))
    fwd = cmi(t, xs, [ys[-1]], ys[:-1])
    rev = cmi(t, ys[:-1], [xs[-1]], xs[:-1])
    return float(fwd), float(rev)


def _empirical_windows(path: SamplePath, w: int, overlapping: bool) -> np.ndarray:
    m = path.x_card * path.y_card
    if m ** w > MAX_WINDOW_ENTRIES:
        raise ConfigError(f"Janela de {w} pares sobre alfabeto {m} excede {MAX_WINDOW_ENTRIES} entradas.")
    z = path.pairs
    if path.n < w:
        raise ConfigError(f"Amostra com n={path.n} menor que a janela {w}.")
    starts = np.arange(0, path.n - w + 1, 1 if overlapping else w)
    idx = np.zeros(len(starts), dtype=np.int64)
    for k in range(w):
        idx = idx * m + z[starts + k]
    counts = np.bincount(idx, minlength=m ** w).astype(float)
    return _window_table(counts / counts.sum(), w, path.x_card, path.y_card)


def plugin_di_rate(path: SamplePath, order: int = 1, reverse: bool = False,
                   overlapping: bool = True) -> DiEstimateReport:
    """
    I(X_{t-ℓ..t}; Y_t | Y_{t-ℓ..t-1}) sob a distribuição empírica das janelas.
    Com reverse=True: I(Y_{t-ℓ..t-1}; X_t | X_{t-ℓ..t-1}).
    """
    if order < 0:
        raise ConfigError(f"Ordem ℓ deve ser ≥ 0; recebeu {order}")
    w = order + 1
    t = _empirical_windows(path, w, overlapping)
    fwd, rev = _windowed_rates(t, w)
    flags = []
    need = COVERAGE_FACTOR * (path.x_card * path.y_card) ** w
    if path.n <= need:
        flags.append("low_coverage")
        warn(f"n={path.n} abaixo da cobertura recomendada ({need}) para ℓ={order}.")
    return DiEstimateReport("plugin_reverse" if reverse else "plugin", rev if reverse else fwd, path.n,
                            {"order": order, "overlapping": overlapping}, flags)


def plugin_conservation(path: SamplePath, order: int = 1) -> DirectedInfo:
    """(di, reverse_di, mi) totais da conjunta empírica de ℓ+1 pares."""
    w = order + 1
    return exact_directed_info(JointSequencePmf(_empirical_windows(path, w, True)))


# ---------- oráculos exatos ----------
def exact_di_rate(kernel, order: int = 1, x_card: int = 2, y_card: int = 2) -> float:
    """Taxa de DI por símbolo da cadeia de pares estacionária, janela de ℓ+1 pares."""
    K = _check_pair_kernel(kernel, x_card, y_card)
    w = order + 1
    m = x_card * y_card
    if m ** w > MAX_WINDOW_ENTRIES:
        raise ConfigError(f"Janela de {w} pares sobre alfabeto {m} excede {MAX_WINDOW_ENTRIES} entradas.")
    joint = stationary_distribution(K)
    for _ in range(order):
        joint = joint[..., None] * K
    return _windowed_rates(_window_table(joint, w, x_card, y_card), w)[0]


def fsc_di_rate(ch: UnifilarFsc, g: QGraph, pol) -> float:
    """DI por símbolo de um canal unifilar sob P(x|s,q) na cadeia (S,Q)."""
    return mutual_info_of_policy(pol, ch, g)


# ---------- CTW ----------
class _Node:
    __slots__ = ("counts", "log2pe", "log2kc", "log2pw", "children")

    def __init__(self, k: int):
        self.counts = [0] * k
        self.log2pe = 0.0
        self.log2kc = 0.0
        self.log2pw = 0.0
        self.children: dict[int, _Node] = {}


def _log2_mix(a: float, b: float) -> float:
    """log2(½·2^a + ½·2^b)."""
    hi, lo = (a, b) if a >= b else (b, a)
    return hi + math.log2(1.0 + 2.0 ** (lo - hi)) - 1.0


class ContextTree:
    """Árvore CTW de profundidade fixa para um alfabeto de k símbolos."""

    def __init__(self, k: int, depth: int):
        if not (0 <= depth <= MAX_DEPTH):
            raise ConfigError(f"Profundidade D={depth} fora de [0,{MAX_DEPTH}]")
        if not (2 <= k <= MAX_ALPHABET * MAX_ALPHABET):
            raise ConfigError(f"Alfabeto de predição com {k} símbolos não suportado.")
        self.k = k
        self.depth = depth
        self.root = _Node(k)

    @property
    def log2_prob(self) -> float:
        return self.root.log2pw

    def _path(self, ctx, create: bool) -> list[_Node]:
        nodes = [self.root]
        node = self.root
        for c in ctx[: self.depth]:
            child = node.children.get(c)
            if child is None:
                if not create:
                    break
                child = node.children[c] = _Node(self.k)
            nodes.append(child)
            node = child
        return nodes

    def node(self, ctx) -> _Node | None:
        nodes = self._path(list(ctx), create=False)
        return nodes[-1] if len(nodes) == len(ctx) + 1 else None

    def _kt(self, node: _Node) -> list[float]:
        tot = sum(node.counts) + self.k / 2.0
        return [(c + 0.5) / tot for c in node.counts]

    def predict(self, ctx) -> list[float]:
        nodes = self._path(ctx, create=False)
        if len(nodes) - 1 == self.depth:
            p = self._kt(nodes[-1])
            nodes = nodes[:-1]
        else:
            p = [1.0 / self.k] * self.k
        for node in reversed(nodes):
            w = 1.0 / (1.0 + 2.0 ** min(node.log2kc - node.log2pe, 1000.0))
            p = [w * a + (1.0 - w) * b for a, b in zip(self._kt(node), p)]
        return p

    def update(self, ctx, a: int) -> None:
        nodes = self._path(ctx, create=True)
        old_child = new_child = 0.0
        for d in range(len(nodes) - 1, -1, -1):
            node = nodes[d]
            old = node.log2pw
            node.log2pe += math.log2((node.counts[a] + 0.5) / (sum(node.counts) + self.k / 2.0))
            node.counts[a] += 1
            if d == self.depth:
                node.log2pw = node.log2pe
            else:
                node.log2kc += new_child - old_child
                node.log2pw = _log2_mix(node.log2pe, node.log2kc)
            old_child, new_child = old, node.log2pw


@dataclass
class CtwModel:
    """Predições sequenciais (antes de cada atualização) das três árvores."""
    depth: int
    y_tree: ContextTree
    cond_tree: ContextTree
    x_tree: ContextTree
    py: np.ndarray    # (n, Y)
    pyx: np.ndarray   # (n, X, Y)
    px: np.ndarray    # (n, X)
    x: np.ndarray
    y: np.ndarray

    @property
    def n(self) -> int:
        return len(self.y)


def ctw_process(path: SamplePath, depth: int = 3) -> CtwModel:
    X, Y = path.x_card, path.y_card
    X, Y = max(X, 2), max(Y, 2)
    y_tree = ContextTree(Y, depth)
    cond_tree = ContextTree(Y, depth + 1)
    x_tree = ContextTree(X, depth)
    n = path.n
    py = np.empty((n, Y))
    pyx = np.empty((n, X, Y))
    px = np.empty((n, X))
    ys = [0] * depth + path.y.tolist()
    zs = [0] * depth + (path.x * Y + path.y).tolist()
    xs = path.x.tolist()
    for i in range(n):
        # contextos: mais recente primeiro
        y_ctx = ys[i:i + depth][::-1]
        z_ctx = zs[i:i + depth][::-1]
        xi, yi = xs[i], ys[i + depth]
        py[i] = y_tree.predict(y_ctx)
        px[i] = x_tree.predict(z_ctx)
        for xc in range(X):
            pyx[i, xc] = cond_tree.predict([xc] + z_ctx)
        y_tree.update(y_ctx, yi)
        x_tree.update(z_ctx, xi)
        cond_tree.update([xi] + z_ctx, yi)
    return CtwModel(depth, y_tree, cond_tree, x_tree, py, pyx, px, path.x, path.y)


def _row_entropy(p: np.ndarray) -> np.ndarray:
    return -(p * np.log2(p)).sum(axis=-1)


def _row_kl(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    return (p * (np.log2(p) - np.log2(q))).sum(axis=-1)


def ctw_values(model: CtwModel) -> dict[int, float]:
    """As quatro estimativas Î₁..Î₄ em bits/símbolo."""
    n = model.n
    if n == 0:
        return {1: 0.0, 2: 0.0, 3: 0.0, 4: 0.0}
    idx = np.arange(n)
    i1 = (model.cond_tree.log2_prob - model.y_tree.log2_prob) / n
    h_y = _row_entropy(model.py)
    h_y_given_x = (model.px * _row_entropy(model.pyx)).sum(axis=1)
    i2 = float(np.mean(h_y - h_y_given_x))
    # Î₃ usa o x_i observado; Î₄ faz a média sob P̂(x_i | passado)
    i3 = float(np.mean(_row_kl(model.pyx[idx, model.x], model.py)))
    i4 = float(np.mean((model.px * _row_kl(model.pyx, model.py[:, None, :])).sum(axis=1)))
    return {1: float(i1), 2: i2, 3: i3, 4: i4}


def ctw_di(path: SamplePath, depth: int = 3, variant: int = 1,
           model: CtwModel | None = None) -> DiEstimateReport:
    if variant not in (1, 2, 3, 4):
        raise ConfigError(f"Variante CTW inválida: {variant} (use 1..4)")
    model = model if model is not None else ctw_process(path, depth)
    flags = []
    if path.n <= 2 ** depth:
        flags.append("short_path")
        warn(f"n={path.n} curto para profundidade D={depth}.")
    value = ctw_values(model)[variant]
    bound = math.log2(max(path.y_card, 2))
    if variant == 2 and abs(value) > bound + 1e-12:
        raise ConfigError(f"Î₂ = {value} fora de [−{bound}, {bound}]")
    return DiEstimateReport(f"ctw{variant}", value, path.n, {"depth": depth}, flags)


def ctw_di_all(path: SamplePath, depth: int = 3) -> list[DiEstimateReport]:
    model = ctw_process(path, depth)
    return [ctw_di(path, depth, v, model) for v in (1, 2, 3, 4)]


def log_loss(tree: ContextTree, n: int) -> float:
    """Perda logarítmica por símbolo, −log2 P̂ / n."""
    return -tree.log2_prob / n if n else 0.0


# ---------- fontes sintéticas (kernels de pares, z = x·2 + y) ----------
def independent_kernel(px: float = 0.5, py: float = 0.5) -> np.ndarray:
    """X e Y iid e independentes."""
    row = np.outer([1 - px, px], [1 - py, py]).reshape(-1)
    return np.tile(row, (4, 1))


def copy_delay_kernel() -> np.ndarray:
    """X iid Ber(½) e Y_t = X_{t-1}."""
    K = np.zeros((4, 4))
    for z in range(4):
        x_prev = z // 2
        for x in range(2):
            K[z, x * 2 + x_prev] = 0.5
    return K


def sticky_copy_kernel(stay: float = 0.1) -> np.ndarray:
    """X iid Ber(½); Y_t = X_t com prob. 1−stay, senão repete Y_{t-1}."""
    K = np.zeros((4, 4))
    for z in range(4):
        y_prev = z % 2
        for x in range(2):
            K[z, x * 2 + x] += 0.5 * (1 - stay)
            K[z, x * 2 + y_prev] += 0.5 * stay
    return K
