# -*- coding: utf-8 -*-
"""Fixtures compartilhadas: Ising binário, Q1 e a política KKT no ótimo."""

from pathlib import Path
import sys

import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from fbcap.belief_mdp import IsingSolution  # noqa: E402
from fbcap.channels import make_binary_ising  # noqa: E402
from fbcap.qbound import kkt_ising_policy  # noqa: E402
from fbcap.qgraph import ising_q1  # noqa: E402

A_STAR = 0.4502995221
RHO_STAR = 0.5755215742


@pytest.fixture(scope="session")
def ising():
    return make_binary_ising()


@pytest.fixture(scope="session")
def q1():
    return ising_q1()


@pytest.fixture(scope="session")
def sol():
    return IsingSolution.solve()


@pytest.fixture(scope="session")
def kkt_policy(sol):
    return kkt_ising_policy(sol.a)


@pytest.fixture
def out_dir(tmp_path):
    d = tmp_path / "outputs"
    d.mkdir()
    return d
