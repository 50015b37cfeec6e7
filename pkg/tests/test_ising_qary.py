# -*- coding: utf-8 -*-
import pytest

from fbcap.ising_qary import qary_ising_capacity, qary_ising_objective, qary_ising_root, qary_ising_table
from fbcap.utils import ConfigError

from conftest import A_STAR, RHO_STAR

CAPACITIES = {2: 0.57552157, 3: 0.96122719, 4: 1.24513616, 5: 1.46801343,
              6: 1.65080443, 7: 1.80544010, 8: 1.93928951}


@pytest.mark.parametrize("q,cap", sorted(CAPACITIES.items()))
def test_capacity_values(q, cap):
    assert qary_ising_capacity(q) == pytest.approx(cap, abs=1e-7)


def test_binary_case_matches_closed_form():
    p = qary_ising_root(2)
    assert p == pytest.approx(A_STAR, abs=1e-10)
    assert (1 - p) ** 4 == pytest.approx(p ** 3, abs=1e-13)
    assert qary_ising_capacity(2) == pytest.approx(RHO_STAR, abs=1e-10)


def test_table_objective_equals_capacity():
    df = qary_ising_table()
    assert df["q"].tolist() == list(range(2, 9))
    assert (df["gap"] <= 1e-9).all()
    assert df["capacity_bits"].is_monotonic_increasing


def test_objective_is_maximized_at_root():
    for q in (3, 5):
        p = qary_ising_root(q)
        best = qary_ising_objective(p, q)
        for d in (-0.05, 0.05):
            assert qary_ising_objective(p + d, q) < best


def test_alphabet_limits():
    with pytest.raises(ConfigError):
        qary_ising_capacity(1)
    with pytest.raises(ConfigError):
        qary_ising_objective(0.5, 9)
