#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
ising_qary.py — capacidade com realimentação do canal de Ising q-ário (2 ≤ q ≤ 8).

p é a raiz em [0,1] de x⁴ − ((q−1)⁴ + 4)x³ + 6x² − 4x + 1 e
    C = ½·log2(1/p) = max_p 2(H2(p) + (1−p)·log2(q−1)) / (p + 3).
"""

from __future__ import annotations

import math

import pandas as pd
from scipy.optimize import brentq

from fbcap.probcore import binary_entropy
from fbcap.utils import ConfigError

Q_MIN, Q_MAX = 2, 8


def _check_q(q: int) -> None:
    if not (Q_MIN <= int(q) <= Q_MAX):
        raise ConfigError(f"Alfabeto q={q} fora de [{Q_MIN},{Q_MAX}]")


def _quartic(x: float, q: int) -> float:
    return x ** 4 - ((q - 1) ** 4 + 4) * x ** 3 + 6 * x ** 2 - 4 * x + 1


def qary_ising_root(q: int) -> float:
    _check_q(q)
    # f(0) = 1 > 0 e f(1) = −(q−1)⁴ < 0
    return float(brentq(_quartic, 0.0, 1.0, args=(int(q),), xtol=1e-15, rtol=1e-15))


def qary_ising_capacity(q: int) -> float:
    return 0.5 * math.log2(1.0 / qary_ising_root(q))


def qary_ising_objective(p: float, q: int) -> float:
    _check_q(q)
    return 2.0 * (binary_entropy(p) + (1.0 - p) * math.log2(q - 1)) / (p + 3.0)


def qary_ising_table(qs=range(Q_MIN, Q_MAX + 1)) -> pd.DataFrame:
    rows = []
    for q in qs:
        p = qary_ising_root(q)
        cap = 0.5 * math.log2(1.0 / p)
        obj = qary_ising_objective(p, q)
        rows.append({"q": int(q), "p": p, "capacity_bits": cap, "objective_bits": obj,
                     "gap": abs(obj - cap)})
    return pd.DataFrame(rows)
