#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
qbound.py — limitantes de Q-grafo para a capacidade com realimentação.

Superior: sup I(X,S;Y|Q) sobre P(s,q,x,y) com estacionariedade e lei do canal,
problema convexo resolvido por Lagrangiano aumentado (gradiente projetado no
simplex) seguido de polimento SLSQP. A variável é u(s,q,x) e P = u·P(y|x,s),
então a lei do canal vale por construção.

O conjunto de maximizadores pode ter mais de um ponto (Ising + Q1 tem uma face
inteira). Quando a política extraída não é BCJR-invariante, um segundo SLSQP
minimiza a violação das arestas (q,y) -> Φ(q,y) dentro da face
{A u = 0, Σu = 1, I(u) ≥ V − folga} e a política passa a ser a do ponto
invariante encontrado.

Inferior: I(X,S;Y|Q) de uma política BCJR-invariante.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import entr

from fbcap.channels import UnifilarFsc, is_strongly_connected
from fbcap.probcore import LN2, binary_entropy, conditional_mi_xsq
from fbcap.qgraph import QGraph, check_policy, sq_stationary
from fbcap.utils import (ConfigError, ConvergenceError, FbcapError, LowerBoundInapplicable,
                         ZeroProbabilityError, check_pmf, info, warn)


@dataclass(frozen=True)
class UpperConfig:
    feas_tol: float = 1e-8
    obj_tol: float = 1e-9
    max_outer: int = 100
    max_inner: int = 1000
    mu: float = 10.0
    polish: bool = True
    min_mass: float = 1e-9
    invariance_tol: float = 1e-6
    select: bool = True
    select_slack: float = 1e-7
    select_rounds: int = 3


@dataclass(frozen=True)
class ConstraintResiduals:
    stationarity: float
    channel_law: float

    def max(self) -> float:
        return max(self.stationarity, self.channel_law)


@dataclass
class UpperResult:
    bound: float
    joint: np.ndarray                       # P(s,q,x,y)
    residuals: ConstraintResiduals
    iterations: int
    policy: np.ndarray                      # P(x|s,q) extraída
    support: list[int] = field(default_factory=list)   # nós q com massa positiva


# ---------- projeção no simplex ----------
def euclidean_proj_simplex(v, s: float = 1.0) -> np.ndarray:
    """
    Projeção euclidiana de v no simplex {w ≥ 0, Σw = s} (ordenação, O(n log n)).
    """
    if s <= 0:
        raise ConfigError(f"Raio do simplex deve ser positivo; recebeu {s}")
    v = np.asarray(v, dtype=float)
    n, = v.shape
    # já está no simplex
    if v.sum() == s and np.all(v >= 0):
        return v
    u = np.sort(v)[::-1]
    cssv = np.cumsum(u)
    rho = np.nonzero(u * np.arange(1, n + 1) > (cssv - s))[0][-1]
    theta = (cssv[rho] - s) / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


# ---------- operadores lineares ----------
def joint_from_u(u: np.ndarray, ch: UnifilarFsc) -> np.ndarray:
    """P(s,q,x,y) = u(s,q,x) P(y|x,s)."""
    return u[:, :, :, None] * ch.kernel[:, None, :, :]


def stationarity_operator(ch: UnifilarFsc, g: QGraph) -> np.ndarray:
    """Matriz (SQ × SQX) com Λ_st(u) = A u (fluxo de entrada menos massa de (s',q'))."""
    S, X, Y = ch.kernel.shape
    Q = g.node_count
    A = np.zeros((S * Q, S * Q * X))
    for s in range(S):
        for q in range(Q):
            for x in range(X):
                col = (s * Q + q) * X + x
                A[s * Q + q, col] -= 1.0
                for y in range(Y):
                    A[ch.next_state[s, x, y] * Q + g.phi[q, y], col] += ch.kernel[s, x, y]
    return A


def residuals(P, ch: UnifilarFsc, g: QGraph) -> ConstraintResiduals:
    P = np.asarray(P, dtype=float)
    S, X, Y = ch.kernel.shape
    Q = g.node_count
    if P.shape != (S, Q, X, Y):
        raise ConfigError(f"P(s,q,x,y) com forma {P.shape}; esperado {(S, Q, X, Y)}")
    inflow = np.zeros((S, Q))
    for s in range(S):
        for x in range(X):
            for y in range(Y):
                np.add.at(inflow, (ch.next_state[s, x, y], g.phi[:, y]), P[s, :, x, y])
    st = inflow - P.sum(axis=(2, 3))
    chl = P - ch.kernel[:, None, :, :] * P.sum(axis=3, keepdims=True)
    return ConstraintResiduals(float(np.max(np.abs(st))), float(np.max(np.abs(chl))))


def objective(P) -> float:
    """−I(X,S;Y|Q) (convenção de minimização)."""
    return -conditional_mi_xsq(P)


# ---------- informação e gradiente em u ----------
def _info_and_grad(u: np.ndarray, ch: UnifilarFsc, shape) -> tuple[float, np.ndarray]:
    S, Q, X = shape
    W = ch.kernel
    U = u.reshape(S, Q, X)
    h_cond = entr(W).sum(axis=2) / LN2                          # (S, X)
    pqy = np.einsum("sqx,sxy->qy", U, W)
    pq = pqy.sum(axis=1)
    info = (entr(pqy).sum() - entr(pq).sum()) / LN2 - np.einsum("sqx,sx->", U, h_cond)
    pyq = np.where(pq[:, None] > 0, pqy / np.where(pq[:, None] > 0, pq[:, None], 1.0), 1.0 / W.shape[2])
    log_pyq = np.log2(np.maximum(pyq, 1e-300))
    # ∂I/∂u = KL(P(·|x,s) || P(·|q)) em bits
    grad = -h_cond[:, None, :] - np.einsum("sxy,qy->sqx", W, log_pyq)
    return float(info), grad.ravel()


# ---------- seleção do ponto BCJR-invariante ----------
def edge_operators(ch: UnifilarFsc, g: QGraph) -> tuple[np.ndarray, ...]:
    """
    Matrizes (QYS × SQX) das massas que entram na violação da aresta (q,y) -> q2 = Φ(q,y)
    no estado s': num = Σ u W [f(s,x,y)=s'], den = Σ_{s,x} u(s,q,x) W(y|x,s),
    alvo = Σ_x u(s',q2,x) e total = Σ_{s,x} u(s,q2,x).
    """
    S, X, Y = ch.kernel.shape
    Q = g.node_count
    rows = Q * Y * S
    num, den, tgt, tot = (np.zeros((rows, S * Q * X)) for _ in range(4))
    for q in range(Q):
        for y in range(Y):
            q2 = g.phi[q, y]
            for s2 in range(S):
                r = (q * Y + y) * S + s2
                for s in range(S):
                    for x in range(X):
                        w = ch.kernel[s, x, y]
                        den[r, (s * Q + q) * X + x] = w
                        if ch.next_state[s, x, y] == s2:
                            num[r, (s * Q + q) * X + x] = w
                        tot[r, (s * Q + q2) * X + x] = 1.0
                for x in range(X):
                    tgt[r, (s2 * Q + q2) * X + x] = 1.0
    return num, den, tgt, tot


def invariance_violation(u: np.ndarray, ops) -> tuple[np.ndarray, np.ndarray]:
    """v = num·total − alvo·den por linha (zero ⇔ aresta invariante) e seu jacobiano."""
    num, den, tgt, tot = ops
    a, b, c, d = num @ u, tot @ u, tgt @ u, den @ u
    v = a * b - c * d
    jac = num * b[:, None] + a[:, None] * tot - tgt * d[:, None] - c[:, None] * den
    return v, jac


def _select_invariant(u0: np.ndarray, ch: UnifilarFsc, g: QGraph, A: np.ndarray, shape,
                      floor: float, rounds: int) -> np.ndarray:
    ops = edge_operators(ch, g)
    n = u0.size
    cons = [{"type": "eq", "fun": lambda v: A @ v, "jac": lambda v: A},
            {"type": "eq", "fun": lambda v: v.sum() - 1.0, "jac": lambda v: np.ones_like(v)},
            {"type": "ineq",
             "fun": lambda v: _info_and_grad(np.clip(v, 0, None), ch, shape)[0] - floor,
             "jac": lambda v: _info_and_grad(np.clip(v, 0, None), ch, shape)[1]}]
    u = u0
    for _ in range(rounds):
        v0, _ = invariance_violation(u, ops)
        phi0 = float(v0 @ v0)
        if phi0 <= 1e-30:
            break
        scale = 1.0 / phi0

        def fun(w):
            v, jac = invariance_violation(w, ops)
            return scale * float(v @ v), 2.0 * scale * (jac.T @ v)

        res = minimize(fun, u, jac=True, method="SLSQP", bounds=[(0.0, 1.0)] * n,
                       constraints=cons, options={"ftol": 1e-16, "maxiter": 1000})
        cand = euclidean_proj_simplex(np.clip(res.x, 0.0, None))
        if fun(cand)[0] >= 1.0:
            break
        u = cand
    return u


def solve_upper(ch: UnifilarFsc, g: QGraph, cfg: UpperConfig = UpperConfig()) -> UpperResult:
    if g.output_count != ch.output_count:
        raise ConfigError(f"Q-grafo com |Y|={g.output_count} e canal com |Y|={ch.output_count}")
    if not is_strongly_connected(ch):
        raise ConfigError(f"Canal '{ch.name}' não é fortemente conexo.")
    S, X = ch.state_count, ch.input_count
    Q = g.node_count
    shape = (S, Q, X)
    n = S * Q * X
    A = stationarity_operator(ch, g)

    lam = np.zeros(A.shape[0])
    mu = cfg.mu

    def aug(v):
        info, gi = _info_and_grad(v, ch, shape)
        r = A @ v
        val = -info + lam @ r + 0.5 * mu * (r @ r)
        return val, -gi + A.T @ (lam + mu * r), info, r

    # 1) Lagrangiano aumentado com gradiente projetado
    u = np.full(n, 1.0 / n)
    f_prev = np.inf
    feas_prev = np.inf
    it = 0
    converged = False
    for outer in range(cfg.max_outer):
        t = 1.0
        for _ in range(cfg.max_inner):
            it += 1
            val, grad, _, _ = aug(u)
            while True:
                un = euclidean_proj_simplex(u - t * grad)
                d = un - u
                if aug(un)[0] <= val + grad @ d + (d @ d) / (2 * t) + 1e-15 or t < 1e-14:
                    break
                t *= 0.5
            u = un
            if np.max(np.abs(d)) < 1e-13:
                break
            t = min(t * 2.0, 1e3)
        _, _, mi, r = aug(u)
        feas = float(np.max(np.abs(r)))
        lam = lam + mu * r
        f = -mi
        if feas <= cfg.feas_tol and abs(f - f_prev) <= cfg.obj_tol * max(1.0, abs(f)):
            converged = True
            break
        if feas > 0.25 * feas_prev:
            mu = min(mu * 10.0, 1e8)
        f_prev, feas_prev = f, feas

    # 2) polimento SLSQP (aceito só se melhora e continua viável)
    if cfg.polish:
        cons = [{"type": "eq", "fun": lambda v: A @ v, "jac": lambda v: A},
                {"type": "eq", "fun": lambda v: v.sum() - 1.0, "jac": lambda v: np.ones_like(v)}]
        res = minimize(lambda v: tuple(-z for z in _info_and_grad(np.clip(v, 0, None), ch, shape)),
                       u, jac=True, method="SLSQP", bounds=[(0.0, 1.0)] * n, constraints=cons,
                       options={"ftol": 1e-14, "maxiter": 500})
        cand = euclidean_proj_simplex(np.clip(res.x, 0.0, None))
        cand_feas = float(np.max(np.abs(A @ cand)))
        if (cand_feas <= max(cfg.feas_tol, float(np.max(np.abs(A @ u))))
                and _info_and_grad(cand, ch, shape)[0] >= _info_and_grad(u, ch, shape)[0]):
            u = cand
            converged = converged or cand_feas <= cfg.feas_tol

    # 3) política extraída e P reconstruída pela estacionária (viável exata)
    pol, joint = _rebuild(u, ch, g, shape, cfg.min_mass)
    resid = residuals(joint, ch, g)
    if resid.max() > cfg.feas_tol:
        raise ConvergenceError(
            f"Limitante superior não convergiu em {it} iterações (resíduos {resid}).",
            best=joint, residuals=resid)
    if not converged:
        warn(f"Critério de objetivo não atingido em {it} iterações; ponto viável reportado.")
    bound = conditional_mi_xsq(joint)

    # 4) entre os maximizadores, o ponto BCJR-invariante
    if cfg.select:
        inv = _safe_invariance(pol, ch, g)
        if inv > cfg.invariance_tol:
            u_sel = _select_invariant(joint.sum(axis=3).ravel(), ch, g, A, shape,
                                      bound - cfg.select_slack, cfg.select_rounds)
            pol_sel, joint_sel = _rebuild(u_sel, ch, g, shape, cfg.min_mass)
            resid_sel = residuals(joint_sel, ch, g)
            value_sel = conditional_mi_xsq(joint_sel)
            inv_sel = _safe_invariance(pol_sel, ch, g)
            if (inv_sel < inv and resid_sel.max() <= cfg.feas_tol
                    and value_sel >= bound - 10 * cfg.select_slack):
                info(f"Ponto invariante selecionado: resíduo {inv:.2e} -> {inv_sel:.2e}")
                pol, joint, resid = pol_sel, joint_sel, resid_sel
                bound = max(bound, value_sel)
            else:
                warn(f"Seleção invariante não melhorou o resíduo ({inv:.2e}).")
    support = [int(q) for q in np.nonzero(joint.sum(axis=(0, 2, 3)) > cfg.min_mass)[0]]
    return UpperResult(bound, joint, resid, it, pol, support)


def _rebuild(u: np.ndarray, ch: UnifilarFsc, g: QGraph, shape, min_mass: float):
    raw = joint_from_u(u.reshape(shape), ch)
    pol = policy_from_joint(raw, min_mass)
    try:
        pi = sq_stationary(ch, g, pol)
        joint = pi[:, :, None, None] * pol[:, :, :, None] * ch.kernel[:, None, :, :]
    except FbcapError as e:
        warn(f"Reconstrução estacionária falhou ({e}); usando o iterado bruto.")
        joint = raw / raw.sum()
    return pol, joint


def _safe_invariance(pol, ch: UnifilarFsc, g: QGraph) -> float:
    try:
        return bcjr_invariance_residual(pol, ch, g)
    except FbcapError:
        return np.inf


# ---------- extração / BCJR ----------
def policy_from_joint(P, min_mass: float = 1e-9) -> np.ndarray:
    """P(x|s,q) onde a massa de (s,q) ≥ min_mass; linhas uniformes fora do suporte."""
    P = np.asarray(P, dtype=float)
    pqsx = P.sum(axis=3)
    m = pqsx.sum(axis=2, keepdims=True)
    X = P.shape[2]
    return np.where(m >= min_mass, pqsx / np.where(m > 0, m, 1.0), 1.0 / X)


def bcjr_map(pi_s_given_q, y: int, pol, ch: UnifilarFsc, g: QGraph, q: int) -> np.ndarray:
    beta = np.asarray(pi_s_given_q, dtype=float)
    pol = np.asarray(pol, dtype=float)
    mass = beta[:, None] * pol[:, q, :] * ch.kernel[:, :, y]
    tot = mass.sum()
    if tot <= 0:
        raise ZeroProbabilityError(f"Saída y={y} tem probabilidade zero no nó q={q}.")
    out = np.zeros(ch.state_count)
    np.add.at(out, ch.next_state[:, :, y], mass)
    return out / tot


def bcjr_invariance_residual(pol, ch: UnifilarFsc, g: QGraph) -> float:
    pol = check_policy(pol, ch, g)
    pi = sq_stationary(ch, g, pol)
    pq = pi.sum(axis=0)
    worst = 0.0
    for q in range(g.node_count):
        if pq[q] <= 0:
            continue
        beta = pi[:, q] / pq[q]
        py = np.einsum("s,sx,sxy->y", beta, pol[:, q, :], ch.kernel)
        for y in range(ch.output_count):
            if py[y] <= 0:
                continue
            q2 = g.phi[q, y]
            target = pi[:, q2] / pq[q2]
            worst = max(worst, float(np.max(np.abs(bcjr_map(beta, y, pol, ch, g, q) - target))))
    return worst


def policy_joint(pol, ch: UnifilarFsc, g: QGraph) -> np.ndarray:
    pol = check_policy(pol, ch, g)
    pi = sq_stationary(ch, g, pol)
    return pi[:, :, None, None] * pol[:, :, :, None] * ch.kernel[:, None, :, :]


def mutual_info_of_policy(pol, ch: UnifilarFsc, g: QGraph) -> float:
    """I(X,S;Y|Q) sob π(s,q)P(x|s,q)P(y|x,s), sem checar invariância."""
    return conditional_mi_xsq(policy_joint(pol, ch, g))


def lower_bound(pol, ch: UnifilarFsc, g: QGraph, tol: float = 1e-6) -> float:
    res = bcjr_invariance_residual(pol, ch, g)
    if res > tol:
        raise LowerBoundInapplicable(
            f"Limitante inferior inaplicável: política não é BCJR-invariante (resíduo {res:.2e} > {tol:.0e}).")
    return mutual_info_of_policy(pol, ch, g)


# ---------- Ising: parametrização KKT do ótimo em Q1 ----------
def kkt_ising_joint(p: float) -> np.ndarray:
    """
    P(s,q,x,y) de uma família a um parâmetro para Ising binário + Q1,
    com b = (1−p)/(2p+6) e A = (1/2 − 3b)/2. Viável para todo p em (0,1);
    I(X,S;Y|Q) = 2·H2(p)/(p+3), máximo em p = a*.
    """
    if not (0.0 < p < 1.0):
        raise ConfigError(f"Parâmetro p deve estar em (0,1); recebeu {p}")
    b = (1.0 - p) / (2.0 * p + 6.0)
    A = (0.5 - 3.0 * b) / 2.0
    P = np.zeros((2, 4, 2, 2))
    P[0, 1, 0, 0] = b
    P[0, 2, 0, 0] = A
    P[0, 3, 0, 0] = A
    P[0, 3, 1, 0] = P[0, 3, 1, 1] = b
    P[1, 0, 0, 0] = P[1, 0, 0, 1] = b
    P[1, 0, 1, 1] = A
    P[1, 1, 1, 1] = A
    P[1, 2, 1, 1] = b
    check_pmf(P.ravel(), tol=1e-12, label="P KKT")
    return P


def kkt_ising_value(p: float) -> float:
    return 2.0 * binary_entropy(p) / (p + 3.0)


def kkt_ising_policy(p: float) -> np.ndarray:
    return policy_from_joint(kkt_ising_joint(p))


def bound_report(ch: UnifilarFsc, g: QGraph, mode: str = "both", cfg: UpperConfig = UpperConfig(),
                 up: UpperResult | None = None) -> dict:
    """Registro {bound_bits, resíduos, iterações, invariance_residual, lower_bits, matched}."""
    if mode not in ("upper", "lower", "both"):
        raise ConfigError(f"Modo inválido: {mode}")
    up = up if up is not None else solve_upper(ch, g, cfg)
    rec = {
        "channel": ch.name, "qgraph": g.name, "mode": mode,
        "bound_bits": up.bound if mode != "lower" else None,
        "stationarity_residual": up.residuals.stationarity,
        "channel_law_residual": up.residuals.channel_law,
        "iterations": up.iterations,
        "support": up.support,
    }
    if mode == "upper":
        return rec
    inv = bcjr_invariance_residual(up.policy, ch, g)
    rec["invariance_residual"] = inv
    try:
        low = lower_bound(up.policy, ch, g, cfg.invariance_tol)
    except LowerBoundInapplicable:
        if mode == "lower":
            raise
        low = None
    rec["lower_bits"] = low
    rec["matched"] = bool(low is not None and abs(up.bound - low) <= 1e-3)
    return rec

