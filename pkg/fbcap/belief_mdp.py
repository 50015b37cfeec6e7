#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
belief_mdp.py — MDP da capacidade com realimentação sobre a crença do decodificador.

Estado: β (pmf sobre S). Ação: matriz estocástica Π (|S|×|X|).
Recompensa: I(X,S;Y | β, Π). Iteração de valor relativa com limitantes de span.

Dois caminhos:
- Ising binário: operador especializado em (δ, γ), com busca interna
  (grade 32×32 + refinamento local) e verificação da solução fechada h*.
- genérico (|S| ≤ 4): reticulado de ações por linha de Π e, para |S| > 2,
  reticulado no simplex de crenças com vizinho mais próximo.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Callable

import numpy as np
import pandas as pd
from scipy.optimize import bisect
from scipy.spatial import cKDTree
from scipy.special import entr

from fbcap.channels import UnifilarFsc, make_binary_ising
from fbcap.probcore import LN2
from fbcap.utils import ConfigError, ZeroProbabilityError, child_rngs

MAX_GENERIC_STATES = 4


@dataclass(frozen=True)
class ViConfig:
    grid: int = 1000            # pontos da grade em z (|S|=2)
    iters: int = 50
    inner_grid: int = 32        # grade inicial da busca em (δ, γ)
    inner_tol: float = 1e-7
    lattice: int = 12           # resolução do simplex de crenças (|S|>2)
    action_lattice: int = 20    # resolução das linhas de Π (caminho genérico)


# ---------- tipos ----------
@dataclass(frozen=True)
class IsingSolution:
    a: float
    rho_star: float

    @classmethod
    def solve(cls) -> "IsingSolution":
        a = bisect(lambda t: t ** 3 - (1.0 - t) ** 4, 0.0, 1.0, xtol=1e-14)
        return cls(a=float(a), rho_star=float(-0.5 * np.log2(a)))

    def sink_beliefs(self) -> np.ndarray:
        a = self.a
        return np.array([0.0, (1 - a) / (1 + a), 2 * a / (1 + a), 1.0])


@dataclass(frozen=True, eq=False)
class GridValueFunction:
    """Valores h em pontos de crença (M, S); para |S|=2 a grade é z = β(0)."""
    points: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise ConfigError("Função valor com entradas não finitas.")
        if self.points.shape[1] == 2 and np.any(np.diff(self.grid) <= 0):
            raise ConfigError("Grade em z deve ser estritamente crescente.")

    @property
    def grid(self) -> np.ndarray:
        return self.points[:, 0]

    @classmethod
    def on_interval(cls, grid, values) -> "GridValueFunction":
        z = np.asarray(grid, dtype=float)
        return cls(np.column_stack([z, 1.0 - z]), np.asarray(values, dtype=float))

    def __call__(self, z):
        return np.interp(z, self.grid, self.values)


@dataclass
class ViResult:
    rho_low: float
    rho_high: float
    h: GridValueFunction
    policy: np.ndarray                      # Π por ponto de crença, (M, S, X)
    trace: pd.DataFrame                     # k, rho_low, rho_high
    delta: np.ndarray | None = None         # só no caminho Ising
    gamma: np.ndarray | None = None

    def to_frame(self) -> pd.DataFrame:
        pts = self.h.points
        if pts.shape[1] == 2:
            df = pd.DataFrame({"z": pts[:, 0], "h": self.h.values})
        else:
            df = pd.DataFrame({f"b{s}": pts[:, s] for s in range(pts.shape[1])})
            df["h"] = self.h.values
        if self.delta is not None:
            df["delta"] = self.delta
            df["gamma"] = self.gamma
        else:
            S, X = self.policy.shape[1:]
            for s in range(S):
                for x in range(X):
                    df[f"pi_{s}_{x}"] = self.policy[:, s, x]
        return df


# ---------- primitivas ----------
def _check_shapes(beta, Pi, ch: UnifilarFsc):
    beta = np.asarray(beta, dtype=float)
    Pi = np.asarray(Pi, dtype=float)
    if beta.shape != (ch.state_count,) or Pi.shape != (ch.state_count, ch.input_count):
        raise ConfigError(f"Formas incompatíveis: β{beta.shape}, Π{Pi.shape} para canal "
                          f"S={ch.state_count}, X={ch.input_count}")
    return beta, Pi


def disturbance_dist(beta, Pi, ch: UnifilarFsc) -> np.ndarray:
    beta, Pi = _check_shapes(beta, Pi, ch)
    return np.einsum("s,sx,sxy->y", beta, Pi, ch.kernel)


def belief_update(beta, Pi, y: int, ch: UnifilarFsc) -> np.ndarray:
    beta, Pi = _check_shapes(beta, Pi, ch)
    mass = beta[:, None] * Pi * ch.kernel[:, :, y]
    py = mass.sum()
    if py <= 0.0:
        raise ZeroProbabilityError(f"Saída y={y} tem probabilidade zero sob (β, Π).")
    out = np.zeros(ch.state_count)
    np.add.at(out, ch.next_state[:, :, y], mass)
    return out / py


def reward(beta, Pi, ch: UnifilarFsc) -> float:
    beta, Pi = _check_shapes(beta, Pi, ch)
    py = disturbance_dist(beta, Pi, ch)
    h_cond = entr(ch.kernel).sum(axis=2) / LN2          # H(P_{Y|x,s})
    return float(entr(py).sum() / LN2 - np.sum(beta[:, None] * Pi * h_cond))


# ---------- Ising binário ----------
def _h2(p):
    p = np.clip(p, 0.0, 1.0)
    return (entr(p) + entr(1.0 - p)) / LN2


def ising_reward(z, delta, gamma):
    return _h2(0.5 + (delta - gamma) / 2.0) + delta + gamma - 1.0


def _ising_next(z, delta, gamma):
    """Próximas crenças (z0', z1') e P(y=0); denominadores nulos protegidos."""
    d0 = 1.0 + delta - gamma
    d1 = 1.0 + gamma - delta
    z0 = np.where(d0 > 0, 1.0 + (delta - z) / np.where(d0 > 0, d0, 1.0), 1.0)
    z1 = np.where(d1 > 0, (1.0 - z - gamma) / np.where(d1 > 0, d1, 1.0), 0.0)
    return np.clip(z0, 0.0, 1.0), np.clip(z1, 0.0, 1.0), d0 / 2.0


def ising_state_update(z: float, delta: float, gamma: float, y: int) -> float:
    tol = 1e-12
    if not (-tol <= delta <= z + tol and -tol <= gamma <= 1.0 - z + tol):
        raise ConfigError(f"Ação (δ={delta}, γ={gamma}) fora da caixa para z={z}")
    den = 1.0 + delta - gamma if y == 0 else 1.0 + gamma - delta
    if den <= 0.0:
        raise ZeroProbabilityError(f"Saída y={y} tem probabilidade zero em z={z}")
    if y == 0:
        return float(1.0 + (delta - z) / den)
    return float((1.0 - z - gamma) / den)


def ising_policy_from_actions(z: float, delta: float, gamma: float) -> np.ndarray:
    p00 = delta / z if z > 0 else 1.0
    p11 = gamma / (1.0 - z) if z < 1 else 1.0
    return np.array([[p00, 1.0 - p00], [1.0 - p11, p11]])


def _ising_objective(h: Callable, z, u, v):
    delta = u * z
    gamma = v * (1.0 - z)
    z0, z1, p0 = _ising_next(z, delta, gamma)
    return ising_reward(z, delta, gamma) + p0 * h(z0) + (1.0 - p0) * h(z1)


def ising_bellman_operator(h: Callable, grid, inner_grid: int = 32, tol: float = 1e-7):
    """
    (Th)(z) = sup_{δ,γ} [H2(1/2 + (δ−γ)/2) + δ + γ − 1 + P0·h(z0') + P1·h(z1')].

    A caixa 0 ≤ δ ≤ z, 0 ≤ γ ≤ 1−z é parametrizada por (u, v) ∈ [0,1]²
    (δ = u·z, γ = v·(1−z)), que são exatamente Π(0,0) e Π(1,1).
    Retorna (Th, u*, v*) nos pontos da grade.
    """
    z = np.asarray(grid, dtype=float)[:, None]
    # 1) grade grossa
    axis = np.linspace(0.0, 1.0, inner_grid)
    uu, vv = (m.ravel()[None, :] for m in np.meshgrid(axis, axis, indexing="ij"))
    vals = _ising_objective(h, z, uu, vv)
    best = np.argmax(vals, axis=1)
    u_best, v_best = uu[0, best], vv[0, best]
    val_best = vals[np.arange(len(best)), best]

    # 2) refinamento local: grades 9×9 com raio caindo pela metade
    offs = np.linspace(-1.0, 1.0, 9)
    du, dv = (m.ravel()[None, :] for m in np.meshgrid(offs, offs, indexing="ij"))
    r = 1.0 / (inner_grid - 1)
    while r > tol:
        uc = np.clip(u_best[:, None] + r * du, 0.0, 1.0)
        vc = np.clip(v_best[:, None] + r * dv, 0.0, 1.0)
        vals = _ising_objective(h, z, uc, vc)
        k = np.argmax(vals, axis=1)
        idx = np.arange(len(k))
        better = vals[idx, k] > val_best
        u_best = np.where(better, uc[idx, k], u_best)
        v_best = np.where(better, vc[idx, k], v_best)
        val_best = np.where(better, vals[idx, k], val_best)
        r /= 2.0
    return val_best, u_best, v_best


def ising_hstar(z, sol: IsingSolution):
    """Solução fechada h* da equação de Bellman do Ising binário (três trechos)."""
    a, rho = sol.a, sol.rho_star
    z = np.asarray(z, dtype=float)

    def eta(t):
        w = 2 * a + (1 - a) * t
        return (_h2(w / 2) / (1 - a) - t - (4 * a + (1 - a) * t) / (2 * (1 - a)) * rho
                + w / (2 * (1 - a)) * _h2(2 * a / w))

    lo, hi = (1 - a) / (1 + a), 2 * a / (1 + a)
    out = np.where(z < lo, eta(1.0 - z), np.where(z > hi, eta(z), _h2(z)))
    return float(out) if out.ndim == 0 else out


def bellman_residual_hstar(sol: IsingSolution, points: int = 2000, tol: float = 1e-7) -> float:
    """max_z |(Th*)(z) − h*(z) − ρ*| na grade uniforme."""
    z = np.linspace(0.0, 1.0, points)
    th, _, _ = ising_bellman_operator(lambda t: ising_hstar(t, sol), z, tol=tol)
    return float(np.max(np.abs(th - ising_hstar(z, sol) - sol.rho_star)))


def is_binary_ising(ch: UnifilarFsc) -> bool:
    return ch.same_tables(make_binary_ising())


# ---------- caminho genérico ----------
def simplex_lattice(dim: int, resolution: int) -> np.ndarray:
    """Pontos k/L do simplex de dimensão `dim` (ordem lexicográfica)."""
    if dim == 1:
        return np.ones((1, 1))
    pts = [c for c in product(range(resolution + 1), repeat=dim - 1) if sum(c) <= resolution]
    arr = np.array([list(c) + [resolution - sum(c)] for c in pts], dtype=float)
    return arr / resolution


def _belief_points(S: int, cfg: ViConfig) -> np.ndarray:
    if S == 1:
        return np.ones((1, 1))
    if S == 2:
        z = np.linspace(0.0, 1.0, cfg.grid)
        return np.column_stack([z, 1.0 - z])
    return simplex_lattice(S, cfg.lattice)


def _action_set(S: int, X: int, resolution: int) -> np.ndarray:
    rows = simplex_lattice(X, resolution)
    return np.array([np.stack(c) for c in product(rows, repeat=S)])     # (A, S, X)


@dataclass
class _GenericTables:
    points: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray          # (M, A)
    py: np.ndarray               # (M, A, Y)
    nxt: np.ndarray              # z' (|S|=2) ou índice do vizinho (|S|>2), (M, A, Y)
    interp: bool = field(default=False)


def _generic_tables(ch: UnifilarFsc, cfg: ViConfig) -> _GenericTables:
    S, X, Y = ch.kernel.shape
    if S > MAX_GENERIC_STATES:
        raise ConfigError(f"Caminho genérico limitado a |S| ≤ {MAX_GENERIC_STATES} (custo exponencial em |S|).")
    pts = _belief_points(S, cfg)
    acts = _action_set(S, X, cfg.action_lattice)
    M, A = len(pts), len(acts)
    h_cond = entr(ch.kernel).sum(axis=2) / LN2

    rewards = np.empty((M, A))
    py = np.empty((M, A, Y))
    nb = np.empty((M, A, Y, S))
    block = max(1, int(4e6 // max(1, A * S * X * Y)))
    for i in range(0, M, block):
        b = pts[i:i + block]
        mass = b[:, None, :, None] * acts[None, :, :, :]                   # (m, A, S, X)
        joint = mass[..., None] * ch.kernel[None, None]                     # (m, A, S, X, Y)
        p = joint.sum(axis=(2, 3))
        py[i:i + block] = p
        rewards[i:i + block] = entr(p).sum(axis=-1) / LN2 - np.einsum("masx,sx->ma", mass, h_cond)
        nxt = np.zeros(p.shape + (S,))
        for s in range(S):
            for x in range(X):
                for y in range(Y):
                    nxt[:, :, y, ch.next_state[s, x, y]] += joint[:, :, s, x, y]
        nb[i:i + block] = np.divide(nxt, p[..., None], out=np.zeros_like(nxt), where=p[..., None] > 0)

    if S == 2:
        return _GenericTables(pts, acts, rewards, py, nb[..., 0], interp=True)
    if S == 1:
        return _GenericTables(pts, acts, rewards, py, np.zeros((M, A, Y), dtype=int))
    _, idx = cKDTree(pts).query(nb.reshape(-1, S))
    return _GenericTables(pts, acts, rewards, py, idx.reshape(M, A, Y))


def _generic_operator(t: _GenericTables, values: np.ndarray):
    if t.interp:
        hv = np.interp(t.nxt, t.points[:, 0], values)
    else:
        hv = values[t.nxt]
    q = t.rewards + np.sum(t.py * hv, axis=-1)
    best = np.argmax(q, axis=1)
    return q[np.arange(len(best)), best], best


def _interp_error(pts: np.ndarray, h: np.ndarray) -> float:
    """
    Estimativa do erro de avaliar h fora da grade: para |S|=2, limitante de corda
    max|Δ²h|/8 da interpolação linear; para |S|>2, metade do maior salto para o vizinho.
    """
    S = pts.shape[1]
    if S == 1 or len(h) < 3:
        return 0.0
    if S == 2:
        return float(np.max(np.abs(np.diff(h, 2)))) / 8.0
    _, nn = cKDTree(pts).query(pts, k=2)
    return 0.5 * float(np.max(np.abs(h - h[nn[:, 1]])))


# ---------- iteração de valor ----------
def value_iteration(ch: UnifilarFsc, cfg: ViConfig = ViConfig()) -> ViResult:
    """
    Iteração de valor relativa h_{k+1} = T h_k − (T h_k)(ponto 0), partindo de h_0 ≡ 0.
    rho_low/rho_high = min/max de T h_{K-1} − h_{K-1} (limitantes de span), alargados
    por 2ε, com ε o erro de interpolação de h_{K-1} entre pontos da grade.
    O traço guarda os limitantes da grade, sem alargamento.
    """
    if cfg.iters < 1:
        raise ConfigError(f"Número de iterações deve ser ≥ 1; recebeu {cfg.iters}")
    if cfg.grid < 2:
        raise ConfigError(f"Grade deve ter ≥ 2 pontos; recebeu {cfg.grid}")

    ising = is_binary_ising(ch)
    if ising:
        pts = _belief_points(2, cfg)
        tables = None
    else:
        tables = _generic_tables(ch, cfg)
        pts = tables.points
    h = np.zeros(len(pts))
    h_prev = h
    rows = []
    u = v = best = None
    for k in range(1, cfg.iters + 1):
        if ising:
            th, u, v = ising_bellman_operator(GridValueFunction(pts, h), pts[:, 0],
                                              cfg.inner_grid, cfg.inner_tol)
        else:
            th, best = _generic_operator(tables, h)
        diff = th - h
        rows.append({"k": k, "rho_low": float(diff.min()), "rho_high": float(diff.max())})
        h_prev = h
        h = th - th[0]
    trace = pd.DataFrame(rows)

    if ising:
        policy = np.stack([np.column_stack([u, 1 - u]), np.column_stack([1 - v, v])], axis=1)
        delta, gamma = u * pts[:, 0], v * (1 - pts[:, 0])
    else:
        policy = tables.actions[best]
        delta = gamma = None
    eps = _interp_error(pts, h_prev)
    last = trace.iloc[-1]
    return ViResult(float(last.rho_low) - 2 * eps, float(last.rho_high) + 2 * eps,
                    GridValueFunction(pts, h), policy, trace, delta, gamma)


# ---------- simulação ----------
def _policy_at(result: ViResult, beta: np.ndarray, tree) -> tuple[np.ndarray, int]:
    """Ação do ponto de grade mais próximo de β (sem interpolar entre células)."""
    pts = result.h.points
    if pts.shape[1] == 1:
        return result.policy[0], 0
    if pts.shape[1] == 2:
        g = pts[:, 0]
        j = int(np.clip(np.searchsorted(g, beta[0]), 1, len(g) - 1))
        cell = j if g[j] - beta[0] < beta[0] - g[j - 1] else j - 1
        return result.policy[cell], cell
    _, cell = tree.query(beta)
    return result.policy[int(cell)], int(cell)


def simulate_policy(ch: UnifilarFsc, result: ViResult, steps: int = 100_000, seed: int = 0,
                    burn_in: int = 1000):
    """
    Evolui a crença sob a política gulosa com saídas sorteadas de P(y|β,Π).
    Retorna (trajetória (steps, S), histograma por célula da grade, recompensa média).
    """
    if burn_in < 0 or steps <= burn_in:
        raise ConfigError(f"Passos ({steps}) devem exceder o aquecimento ({burn_in}).")
    rng = child_rngs(seed, 1)[0]
    pts = result.h.points
    tree = cKDTree(pts) if pts.shape[1] > 2 else None
    beta = pts[len(pts) // 2].copy()
    traj = np.empty((steps, ch.state_count))
    counts = np.zeros(len(pts), dtype=np.int64)
    total = 0.0
    for t in range(steps):
        Pi, cell = _policy_at(result, beta, tree)
        py = disturbance_dist(beta, Pi, ch)
        y = int(rng.choice(ch.output_count, p=py / py.sum()))
        if t >= burn_in:
            counts[cell] += 1
            total += reward(beta, Pi, ch)
        beta = belief_update(beta, Pi, y, ch)
        beta = np.clip(beta, 0.0, 1.0)
        beta /= beta.sum()
        traj[t] = beta
    n_eff = max(1, steps - burn_in)
    hist = pd.DataFrame({"cell_center": pts[:, 0], "frequency": counts / n_eff})
    return traj, hist, total / n_eff


__all__ = [
    "ViConfig", "IsingSolution", "GridValueFunction", "ViResult",
    "disturbance_dist", "belief_update", "reward", "ising_state_update",
    "ising_bellman_operator", "value_iteration", "ising_hstar", "simulate_policy",
]
