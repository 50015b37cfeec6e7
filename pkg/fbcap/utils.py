#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
utils.py — helpers comuns do pacote (console, caminhos, erros, sementes).
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

PROJ_ROOT = Path(__file__).resolve().parents[1]
OUT_DIR = PROJ_ROOT / "outputs"

LOG_BASE = "bits"


# ---------- console ----------
def info(m): print(f"[INFO] {m}")
def warn(m): print(f"[AVISO] {m}")
def ok(m): print(f"[OK] {m}")
def err(m, code: int = 1):
    print(f"[ERRO] {m}", file=sys.stderr); sys.exit(code)


def ensure_dir(p: Path) -> Path:
    p.mkdir(parents=True, exist_ok=True)
    return p


# ---------- erros ----------
class FbcapError(Exception):
    """Erro base do pacote; `exit_code` é o código usado pela CLI."""
    exit_code = 1


class ConfigError(FbcapError):
    exit_code = 2


class NumericError(FbcapError):
    exit_code = 3


class ConvergenceError(NumericError):
    """Orçamento de iterações esgotado; guarda o melhor iterado e os resíduos."""

    def __init__(self, msg: str, best=None, residuals=None):
        super().__init__(msg)
        self.best = best
        self.residuals = residuals


class MultichainError(NumericError):
    pass


class ZeroProbabilityError(NumericError):
    pass


class BoundError(FbcapError):
    exit_code = 4


class SupportError(BoundError):
    pass


class LowerBoundInapplicable(BoundError):
    pass


# ---------- sementes ----------
def child_rngs(seed: int, k: int, *key: int) -> list[np.random.Generator]:
    """
    k geradores independentes derivados de (seed, *key) por SeedSequence.spawn.
    A ordem dos filhos é fixa, então o resultado não depende de paralelismo.
    """
    ss = np.random.SeedSequence([int(seed), *[int(x) for x in key]])
    return [np.random.default_rng(c) for c in ss.spawn(k)]


def check_pmf(p: np.ndarray, axis=-1, tol: float = 1e-12, label: str = "pmf") -> None:
    p = np.asarray(p, dtype=float)
    if np.any(p < -tol):
        raise ConfigError(f"{label} com entradas negativas (mín={p.min():.3e}).")
    s = np.atleast_1d(p.sum(axis=axis))
    bad = np.argwhere(np.abs(s - 1.0) > tol)
    if bad.size:
        idx = tuple(int(i) for i in bad[0])
        raise ConfigError(f"{label} não soma 1 em {idx}: soma={s[idx]:.12g}")
