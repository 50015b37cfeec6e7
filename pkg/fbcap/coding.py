#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
coding.py — simulador do esquema de casamento de posterior (posterior matching)
para canais unifilares com Q-grafo e política BCJR-invariante.

A cada uso do canal:
  1) o codificador calcula Λ(m*) e envia x = F^{-1}_{X|S=s(m*),Q=q}[Λ(m*)]
  2) o canal sorteia y a partir do estado verdadeiro
  3) λ(m) ← λ(m)·P(y|x(m),s(m)) / P(y|q), renormalizado
  4) q ← Φ(q,y); s(m) ← f(s(m), x(m), y)
Decodificação: argmax λ (empates para o menor índice).

O posterior é guardado por segmentos de mensagens contíguas com o mesmo λ e o
mesmo estado hipotético. Cada uso corta cada classe de estado em no máximo
|X|−1 limiares da CDF, então o número de segmentos cresce linearmente em n e
M = ⌊2^{nR}⌋ não precisa de limite (índices são inteiros Python).

Sem dithering e sem divisão de mensagens: o simulador mede tendências de erro.
"""

from __future__ import annotations

import math
import os
from bisect import bisect_right
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.stats import norm

from fbcap.channels import UnifilarFsc
from fbcap.qbound import mutual_info_of_policy
from fbcap.qgraph import QGraph, check_policy, sq_stationary
from fbcap.utils import ConfigError, NumericError, ZeroProbabilityError, child_rngs, warn

LAMBDA_FLOOR = 1e-300
MAX_BITS = 1000             # 2^{nR} ainda representável em float
EXPAND_LIMIT = 2 ** 20


@dataclass(frozen=True, eq=False)
class SchemeConfig:
    n: int
    rate: float
    ch: UnifilarFsc
    g: QGraph
    pol: np.ndarray
    seed: int = 0
    max_messages: int | None = None

    @property
    def messages(self) -> int:
        return message_count(self.n, self.rate, self.max_messages)

    @property
    def realized_rate(self) -> float:
        return math.log2(self.messages) / self.n if self.n > 0 else 0.0


@dataclass
class PosteriorVector:
    """
    Segmento i cobre as mensagens starts[i] .. starts[i]+counts[i]−1, todas com
    λ = lam[i] (por mensagem) e estado hipotético states[i]. Mensagens fora de
    qualquer segmento têm λ = 0.
    """
    M: int
    starts: list[int]
    counts: list[int]
    lam: np.ndarray
    states: np.ndarray

    @property
    def segment_count(self) -> int:
        return len(self.starts)

    @property
    def total(self) -> float:
        return float(np.dot(_as_float(self.counts), self.lam))

    def locate(self, m: int) -> int | None:
        i = bisect_right(self.starts, m) - 1
        if i < 0 or m >= self.starts[i] + self.counts[i]:
            return None
        return i

    def lam_of(self, m: int) -> float:
        i = self.locate(m)
        return 0.0 if i is None else float(self.lam[i])

    def state_of(self, m: int) -> int:
        i = self.locate(m)
        if i is None:
            raise NumericError(f"Mensagem {m} sem massa posterior.")
        return int(self.states[i])

    def argmax(self) -> int:
        """Menor índice com λ máximo."""
        return self.starts[int(np.argmax(self.lam))]

    def expand(self) -> tuple[np.ndarray, np.ndarray]:
        """(λ(m), s(m)) por mensagem; s = −1 onde não há massa. Só para M pequeno."""
        if self.M > EXPAND_LIMIT:
            raise ConfigError(f"M = {self.M} grande demais para expandir por mensagem.")
        lam = np.zeros(self.M)
        states = np.full(self.M, -1, dtype=int)
        for st, c, l, s in zip(self.starts, self.counts, self.lam, self.states):
            lam[st:st + c] = l
            states[st:st + c] = s
        return lam, states


def _as_float(counts) -> np.ndarray:
    return np.array([float(c) for c in counts])


def message_count(n: int, rate: float, max_messages: int | None = None) -> int:
    """M = ⌊2^{nR}⌋ (precisão dupla acima de 2^53), ao menos 2 se R > 0."""
    if n < 0 or rate < 0:
        raise ConfigError(f"n e R devem ser não negativos (n={n}, R={rate})")
    if rate == 0 or n == 0:
        return 1
    bits = n * rate
    if max_messages is not None and bits >= math.log2(max_messages):
        if bits > math.log2(max_messages):
            warn(f"2^(nR) = 2^{bits:.2f} mensagens excede o limite; usando {max_messages}.")
        return int(max_messages)
    if bits > MAX_BITS:
        raise ConfigError(f"nR = {bits:.1f} bits excede o máximo suportado ({MAX_BITS}).")
    return max(2, int(math.floor(2.0 ** bits)))


def state_posteriors(ch: UnifilarFsc, g: QGraph, pol) -> np.ndarray:
    """π_{S|Q}(s|q) como (S, Q); colunas de nós sem massa ficam zeradas."""
    pi = sq_stationary(ch, g, pol)
    pq = pi.sum(axis=0)
    return np.divide(pi, pq[None, :], out=np.zeros_like(pi), where=pq[None, :] > 0)


def initial_posterior(M: int, pi_s_q: np.ndarray, q0: int) -> PosteriorVector:
    """λ uniforme; s(m) dividido em blocos contíguos na proporção de π_{S|Q=q0}."""
    w = pi_s_q[:, q0]
    if w.sum() <= 0:
        raise NumericError(f"Nó inicial q0={q0} sem massa estacionária.")
    cw = np.cumsum(w) / w.sum()
    edges = [min(M, int(math.floor(M * float(c) + 1e-12))) for c in cw]
    edges[-1] = M
    starts, counts, states = [], [], []
    prev = 0
    for s, e in enumerate(edges):
        if e > prev:
            starts.append(prev)
            counts.append(e - prev)
            states.append(s)
        prev = max(prev, e)
    return PosteriorVector(M, starts, counts, np.full(len(starts), 1.0 / M), np.array(states, dtype=int))


def _first_at_or_above(v: float) -> int:
    """⌈v⌉ com folga relativa, para empates de ponto flutuante irem ao x maior."""
    return math.ceil(v - 1e-9 * max(1.0, abs(v)))


def split_by_input(pp: PosteriorVector, q: int, pol: np.ndarray,
                   pi_s_q: np.ndarray) -> tuple[PosteriorVector, np.ndarray]:
    """
    Refina os segmentos para que cada um tenha um único x(m) e retorna (pp refinado, x).
    Na classe s, Λ(m)·π(s|q) = massa das mensagens anteriores de estado s; a mensagem j
    do segmento recebe x = #{k : F_k ≤ Λ} com F a CDF de P(x|s,q).
    """
    X = pol.shape[2]
    cum = np.zeros(pi_s_q.shape[0])
    starts, counts, lam, states, xs = [], [], [], [], []
    for st, c, l, s in zip(pp.starts, pp.counts, pp.lam, pp.states):
        s = int(s)
        ps = pi_s_q[s, q]
        if ps <= 0:
            raise NumericError(f"π(s={s}|q={q}) = 0 com mensagens vivas nesse estado.")
        thr = np.cumsum(pol[s, q])[:-1] * ps
        cuts = [0] + [min(c, max(0, _first_at_or_above((t - cum[s]) / l))) for t in thr] + [c]
        for x in range(X):
            k = cuts[x + 1] - cuts[x]
            if k > 0:
                starts.append(st + cuts[x])
                counts.append(k)
                lam.append(l)
                states.append(s)
                xs.append(x)
        cum[s] += float(c) * l
    split = PosteriorVector(pp.M, starts, counts, np.array(lam), np.array(states, dtype=int))
    return split, np.array(xs, dtype=int)


def _update_split(split: PosteriorVector, x: np.ndarray, q: int, y: int, ch: UnifilarFsc) -> PosteriorVector:
    lik = ch.kernel[split.states, x, y]
    cnt = _as_float(split.counts)
    agg = float(np.dot(cnt * split.lam, lik))
    if agg <= 0:
        raise ZeroProbabilityError(f"Saída y={y} com probabilidade agregada zero no nó q={q}.")
    lam = split.lam * lik / agg
    lam[lam < LAMBDA_FLOOR] = 0.0
    keep = np.nonzero(lam > 0)[0]
    lam = lam[keep] / np.dot(cnt[keep], lam[keep])
    return PosteriorVector(split.M, [split.starts[i] for i in keep], [split.counts[i] for i in keep],
                           lam, ch.next_state[split.states[keep], x[keep], y])


def encode_step(pp: PosteriorVector, q: int, m_star: int, pol, pi_s_q: np.ndarray) -> int:
    s = pp.state_of(m_star)
    if pi_s_q[s, q] <= 0:
        raise NumericError(f"Configuração inalcançável: π(s={s}|q={q}) = 0.")
    split, x = split_by_input(pp, q, np.asarray(pol), pi_s_q)
    return int(x[split.locate(m_star)])


def pp_update(pp: PosteriorVector, q: int, y: int, ch: UnifilarFsc, pol, pi_s_q: np.ndarray) -> PosteriorVector:
    split, x = split_by_input(pp, q, np.asarray(pol), pi_s_q)
    return _update_split(split, x, q, y, ch)


@dataclass
class TrialResult:
    decoded: int
    message: int
    correct: bool


def draw_message(rng: np.random.Generator, M: int) -> int:
    """Mensagem uniforme em [0, M), também para M acima de 2^63."""
    if M <= 2 ** 62:
        return int(rng.integers(M))
    nbits = (M - 1).bit_length()
    words = -(-nbits // 32)
    while True:
        m = 0
        for w in rng.integers(0, 2 ** 32, size=words):
            m = (m << 32) | int(w)
        m >>= words * 32 - nbits
        if m < M:
            return m


def run_trial(cfg: SchemeConfig, m_star: int | None = None,
              rng: np.random.Generator | None = None) -> TrialResult:
    pol = check_policy(cfg.pol, cfg.ch, cfg.g)
    rng = rng if rng is not None else child_rngs(cfg.seed, 1)[0]
    pi_s_q = state_posteriors(cfg.ch, cfg.g, pol)
    M = cfg.messages
    q = cfg.g.q0
    pp = initial_posterior(M, pi_s_q, q)
    m_star = draw_message(rng, M) if m_star is None else int(m_star)
    s_true = pp.state_of(m_star)
    for _ in range(cfg.n):
        split, xs = split_by_input(pp, q, pol, pi_s_q)
        x = int(xs[split.locate(m_star)])
        y = int(rng.choice(cfg.ch.output_count, p=cfg.ch.kernel[s_true, x]))
        pp = _update_split(split, xs, q, y, cfg.ch)
        q = cfg.g.step(q, y)
        s_true = cfg.ch.f(s_true, x, y)
        if pp.locate(m_star) is None:
            # λ(m*) abaixo do piso: a mensagem verdadeira saiu do posterior
            break
    decoded = pp.argmax()
    return TrialResult(decoded, m_star, decoded == m_star)


def wilson_interval(errors: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    if trials <= 0:
        return 0.0, 1.0
    z = norm.ppf(0.5 + level / 2)
    p = errors / trials
    den = 1 + z * z / trials
    center = (p + z * z / (2 * trials)) / den
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / den
    return max(0.0, center - half), min(1.0, center + half)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("FBCAP_THREADS", "1")))
    except ValueError:
        return 1


def error_curve(ch: UnifilarFsc, g: QGraph, pol, rate_fraction: float, n_list, trials: int,
                seed: int = 0, max_messages: int | None = None) -> pd.DataFrame:
    """
    Erro empírico por n a R = rate_fraction · I(X,S;Y|Q).
    Semente do ensaio k no bloco n: SeedSequence([seed, n]).spawn(trials)[k].
    A coluna messages é float (M passa de 2^64 em blocos longos).
    """
    if rate_fraction < 0:
        raise ConfigError(f"Fração de taxa negativa: {rate_fraction}")
    pol = check_policy(pol, ch, g)
    base = mutual_info_of_policy(pol, ch, g)
    rate = rate_fraction * base
    if rate_fraction >= 1:
        warn(f"Taxa {rate:.4f} ≥ I(X,S;Y|Q) = {base:.4f}: erro não deve cair com n.")
    rows = []
    for n in n_list:
        cfg = SchemeConfig(int(n), rate, ch, g, pol, seed, max_messages)
        rngs = child_rngs(seed, trials, int(n))
        with ThreadPoolExecutor(max_workers=_threads()) as ex:
            res = list(ex.map(lambda r: run_trial(cfg, rng=r), rngs))
        errors = int(sum(not r.correct for r in res))
        lo, hi = wilson_interval(errors, trials)
        rows.append({"n": int(n), "trials": trials, "errors": errors, "p_hat": errors / trials,
                     "ci_low": lo, "ci_high": hi, "messages": float(cfg.messages),
                     "rate": rate, "realized_rate": cfg.realized_rate})
    return pd.DataFrame(rows)
