# -*- coding: utf-8 -*-
import math

import numpy as np
import pytest

from fbcap.estimators import (ContextTree, SamplePath, copy_delay_kernel, ctw_di, ctw_di_all, ctw_process,
                              exact_di_rate, fsc_di_rate, independent_kernel, log_loss, plugin_conservation,
                              plugin_di_rate, read_path_csv, sample_fsc_path, sample_pair_chain,
                              sticky_copy_kernel, write_path_csv)
from fbcap.probcore import binary_entropy
from fbcap.utils import ConfigError

from conftest import RHO_STAR

STICKY_DI = binary_entropy(0.55) - 0.5 * binary_entropy(0.1)


def _shifted_copy_path(n, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.integers(0, 2, n)
    y = np.append(x[1:], 0)
    return SamplePath(x, y, 2, 2)


@pytest.fixture(scope="module")
def sticky_path():
    return sample_pair_chain(sticky_copy_kernel(0.1), 20_000, seed=4)


def test_sample_path_validation():
    p = SamplePath([0, 1, 1], [1, 0, 1])
    assert (p.x_card, p.y_card, p.n) == (2, 2, 3)
    assert p.pairs.tolist() == [1, 2, 3]
    assert p.swapped().x.tolist() == [1, 0, 1]
    with pytest.raises(ConfigError):
        SamplePath([0, 1], [0])
    with pytest.raises(ConfigError):
        SamplePath([0, 2], [0, 1], x_card=2)


def test_csv_roundtrip_and_errors(tmp_path):
    p = SamplePath([0, 1, 0, 1], [1, 1, 0, 0])
    back = read_path_csv(write_path_csv(p, tmp_path / "amostras.csv"))
    assert back.x.tolist() == p.x.tolist()
    assert back.y.tolist() == p.y.tolist()
    (tmp_path / "ruim.csv").write_text("x,z\n0,1\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="y"):
        read_path_csv(tmp_path / "ruim.csv")


def test_exact_rates_of_synthetic_sources():
    assert exact_di_rate(independent_kernel()) == pytest.approx(0.0, abs=1e-12)
    assert exact_di_rate(copy_delay_kernel()) == pytest.approx(1.0, abs=1e-12)
    assert exact_di_rate(sticky_copy_kernel(0.1)) == pytest.approx(STICKY_DI, abs=1e-12)
    # Y é Markov de ordem 1: janelas maiores não mudam a taxa
    assert exact_di_rate(sticky_copy_kernel(0.1), order=2) == pytest.approx(STICKY_DI, abs=1e-12)


def test_fsc_rate_of_optimal_ising_input(ising, q1, kkt_policy):
    assert fsc_di_rate(ising, q1, kkt_policy) == pytest.approx(RHO_STAR, abs=1e-9)


def test_plugin_on_independent_source():
    path = sample_pair_chain(independent_kernel(), 100_000, seed=1)
    rep = plugin_di_rate(path, 1)
    assert abs(rep.value) <= 0.01
    assert rep.flags == []


def test_plugin_forward_and_reverse_on_shifted_copy():
    path = _shifted_copy_path(100_000)
    assert abs(plugin_di_rate(path, 1).value) <= 0.01
    assert plugin_di_rate(path, 1, reverse=True).value == pytest.approx(1.0, abs=0.02)


def test_plugin_tracks_sticky_copy(sticky_path):
    assert plugin_di_rate(sticky_path, 1).value == pytest.approx(STICKY_DI, abs=0.02)
    assert plugin_di_rate(sticky_path, 1, overlapping=False).value == pytest.approx(STICKY_DI, abs=0.04)


def test_plugin_conservation_is_exact(sticky_path):
    d = plugin_conservation(sticky_path, 1)
    assert d.di + d.reverse_di == pytest.approx(d.mi, abs=1e-12)


def test_plugin_flags_low_coverage():
    path = sample_pair_chain(independent_kernel(), 50, seed=0)
    assert "low_coverage" in plugin_di_rate(path, 1).flags
    with pytest.raises(ConfigError):
        plugin_di_rate(path, -1)


def test_ctw_counts_partition():
    seq = [int(c) for c in "000110100010"]
    tree = ContextTree(2, 3)
    ctx = [0, 0, 0]
    for a in seq:
        tree.update(ctx, a)
        ctx = [a] + ctx[:-1]
    assert tree.root.counts == [8, 4]
    kids = tree.root.children.values()
    assert [sum(c.counts[i] for c in kids) for i in range(2)] == tree.root.counts
    assert tree.node([0]) is not None
    assert tree.log2_prob < 0


def test_ctw_log_loss():
    rng = np.random.default_rng(0)
    zeros = ContextTree(2, 3)
    for _ in range(1000):
        zeros.update([0, 0, 0], 0)
    assert log_loss(zeros, 1000) < 0.02

    fair = ContextTree(2, 3)
    bits = rng.integers(0, 2, 20_000).tolist()
    ctx = [0, 0, 0]
    for a in bits:
        fair.update(ctx, a)
        ctx = [a] + ctx[:-1]
    assert log_loss(fair, len(bits)) == pytest.approx(1.0, abs=0.02)


def test_ctw_prediction_is_distribution():
    tree = ContextTree(3, 2)
    for a in (0, 1, 2, 2, 1):
        tree.update([a, 0], a)
    p = tree.predict([2, 0])
    assert sum(p) == pytest.approx(1.0)
    assert min(p) > 0


def test_ctw_on_independent_source():
    path = sample_pair_chain(independent_kernel(), 20_000, seed=3)
    for rep in ctw_di_all(path, 3):
        assert abs(rep.value) <= 0.02, rep.estimator


def test_ctw_on_sticky_copy(sticky_path):
    model = ctw_process(sticky_path, 2)
    reps = [ctw_di(sticky_path, 2, v, model) for v in (1, 2, 3, 4)]
    for rep in reps:
        assert rep.value == pytest.approx(STICKY_DI, abs=0.03), rep.estimator
    assert reps[2].value >= -1e-12
    assert reps[3].value >= -1e-12
    assert abs(reps[1].value) <= math.log2(2)


def test_ctw_flags_short_path():
    path = sample_pair_chain(independent_kernel(), 6, seed=0)
    assert "short_path" in ctw_di(path, 3).flags
    with pytest.raises(ConfigError):
        ctw_di(path, 3, variant=5)


def test_fsc_sampler_matches_channel(ising, q1, kkt_policy):
    path = sample_fsc_path(ising, q1, kkt_policy, 5000, seed=2)
    assert (path.x_card, path.y_card) == (2, 2)
    # Ising: se x repete o estado anterior, y = x
    same = path.x[1:] == path.x[:-1]
    assert np.all(path.y[1:][same] == path.x[1:][same])
    assert plugin_di_rate(path, 1).value > 0.4


def test_ctw_variants_on_optimal_ising_input(ising, q1, kkt_policy):
    path = sample_fsc_path(ising, q1, kkt_policy, 100_000, seed=7)
    reps = ctw_di_all(path, depth=3)
    assert [r.estimator for r in reps] == ["ctw1", "ctw2", "ctw3", "ctw4"]
    for rep in reps:
        assert rep.value == pytest.approx(RHO_STAR, abs=0.03)
