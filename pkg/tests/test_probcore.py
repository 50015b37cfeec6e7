# -*- coding: utf-8 -*-
from itertools import product
import math

import numpy as np
import pytest

from fbcap.probcore import (JointSequencePmf, binary_entropy, causal_conditioning, cmi,
                            conditional_mi_xsq, entropy, exact_directed_info, infomat, kl_divergence)
from fbcap.qbound import kkt_ising_joint, kkt_ising_value
from fbcap.utils import ConfigError, SupportError


def _random_joint(rng, n=2, x_card=2, y_card=2):
    t = rng.dirichlet(np.ones(x_card ** n * y_card ** n))
    return JointSequencePmf(t.reshape((x_card,) * n + (y_card,) * n))


def _shifted_copy(n=3):
    # X iid Ber(1/2); Y_i = X_{i+1} e Y_n = 0
    items = []
    for xs in product((0, 1), repeat=n):
        ys = tuple(xs[1:]) + (0,)
        items.append((xs, ys, 1.0 / 2 ** n))
    return JointSequencePmf.from_items(n, 2, 2, items)


def test_entropies_basic():
    assert entropy([0.5, 0.5]) == pytest.approx(1.0)
    assert entropy([1.0, 0.0]) == 0.0
    assert binary_entropy(0.11) == pytest.approx(0.4999, abs=1e-3)
    assert np.allclose(binary_entropy(np.array([0.0, 0.5, 1.0])), [0.0, 1.0, 0.0])


def test_binary_entropy_rejects_out_of_range():
    with pytest.raises(ConfigError):
        binary_entropy(1.2)


def test_kl_divergence_support():
    assert kl_divergence([0.5, 0.5], [0.5, 0.5]) == pytest.approx(0.0)
    assert kl_divergence([1.0, 0.0], [0.5, 0.5]) == pytest.approx(1.0)
    with pytest.raises(SupportError):
        kl_divergence([0.5, 0.5], [1.0, 0.0])


def test_cmi_of_independent_pair_is_zero():
    t = np.outer([0.3, 0.7], [0.6, 0.4])
    assert cmi(t, [0], [1]) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_conservation_on_random_joints(n):
    rng = np.random.default_rng(123 + n)
    for _ in range(200 if n < 3 else 40):
        d = exact_directed_info(_random_joint(rng, n))
        assert d.di + d.reverse_di == pytest.approx(d.mi, abs=1e-10)
        assert -1e-12 <= d.di <= d.mi + 1e-12


def test_shifted_copy_has_no_forward_flow():
    d = exact_directed_info(_shifted_copy(3))
    assert d.di == pytest.approx(0.0, abs=1e-12)
    assert d.reverse_di == pytest.approx(2.0)
    assert d.mi == pytest.approx(2.0)


def test_infomat_decompositions():
    rng = np.random.default_rng(7)
    joint = _random_joint(rng, 3)
    m = infomat(joint)
    d = exact_directed_info(joint)
    assert m.total() == pytest.approx(d.mi, abs=1e-10)
    assert m.di() == pytest.approx(d.di, abs=1e-10)
    assert m.reverse_di() == pytest.approx(d.reverse_di, abs=1e-10)
    assert m.delayed_di() + m.instantaneous() == pytest.approx(m.di(), abs=1e-12)
    t = joint.table
    # linha i: I(X_i; Y^n | X^{i-1})
    for i in range(3):
        want = cmi(t, [i], joint.y_axes(3), joint.x_axes(i))
        assert m.row_sums()[i] == pytest.approx(want, abs=1e-10)
    # coluna j: I(X^n; Y_j | Y^{j-1})
    for j in range(3):
        want = cmi(t, joint.x_axes(3), [3 + j], joint.y_axes(j))
        assert m.col_sums()[j] == pytest.approx(want, abs=1e-10)


def test_causal_conditioning_factorizes_joint():
    rng = np.random.default_rng(11)
    joint = _random_joint(rng, 2)
    y_cc, x_cc = causal_conditioning(joint)
    assert np.allclose(y_cc * x_cc, joint.table, atol=1e-12)


def test_joint_validation():
    with pytest.raises(ConfigError):
        JointSequencePmf(np.full((2, 2), 0.3))
    with pytest.raises(ConfigError):
        JointSequencePmf(np.full((2, 2, 2), 0.125))


def test_conditional_mi_of_kkt_family():
    for p in (0.2, 0.4502995221, 0.7):
        assert conditional_mi_xsq(kkt_ising_joint(p)) == pytest.approx(kkt_ising_value(p), abs=1e-10)
    assert kkt_ising_value(0.4502995221) == pytest.approx(-0.5 * math.log2(0.4502995221), abs=1e-9)
