# -*- coding: utf-8 -*-
"""Simulador de casamento de posterior; taxas e blocos reduzidos para rodar rápido."""

import numpy as np
import pytest

from fbcap.channels import make_noiseless, make_useless
from fbcap.coding import (SchemeConfig, draw_message, encode_step, error_curve, initial_posterior,
                          message_count, pp_update, run_trial, split_by_input, state_posteriors,
                          wilson_interval)
from fbcap.qgraph import QGraph, uniform_policy
from fbcap.utils import ConfigError, child_rngs

from conftest import RHO_STAR


@pytest.fixture(scope="module")
def one_node():
    return QGraph(np.array([[0, 0]]), name="um_no")


def test_message_count():
    assert message_count(10, 0.0) == 1
    assert message_count(0, 0.5) == 1
    assert message_count(4, 0.1) == 2
    assert message_count(8, 1.0) == 256
    assert message_count(128, 0.5) == 2 ** 64
    assert message_count(128, 0.9, max_messages=2 ** 16) == 2 ** 16
    with pytest.raises(ConfigError):
        message_count(-1, 0.5)
    with pytest.raises(ConfigError):
        message_count(4000, 0.5)


def test_two_message_encoder(one_node):
    ch = make_noiseless()
    pol = uniform_policy(ch, one_node)
    pi = state_posteriors(ch, one_node, pol)
    pp = initial_posterior(2, pi, 0)
    split, x = split_by_input(pp, 0, pol, pi)
    assert x.tolist() == [0, 1]
    assert split.counts == [1, 1]
    assert encode_step(pp, 0, 1, pol, pi) == 1


def test_noiseless_update_keeps_consistent_messages(one_node):
    ch = make_noiseless()
    pol = uniform_policy(ch, one_node)
    pi = state_posteriors(ch, one_node, pol)
    pp = initial_posterior(4, pi, 0)
    nxt = pp_update(pp, 0, 1, ch, pol, pi)
    lam, _ = nxt.expand()
    assert np.allclose(lam, [0.0, 0.0, 0.5, 0.5])
    assert nxt.segment_count == 1


def test_useless_channel_leaves_posterior(one_node):
    ch = make_useless()
    pol = uniform_policy(ch, one_node)
    pi = state_posteriors(ch, one_node, pol)
    pp = initial_posterior(8, pi, 0)
    nxt = pp_update(pp, 0, 0, ch, pol, pi)
    assert np.allclose(nxt.expand()[0], pp.expand()[0])


def test_initial_blocks_follow_state_posterior(ising, q1, kkt_policy):
    pi = state_posteriors(ising, q1, kkt_policy)
    assert np.allclose(pi.sum(axis=0), 1.0)
    pp = initial_posterior(1000, pi, 0)
    # no nó 0 só o estado 1 tem massa
    assert set(pp.states.tolist()) == {1}
    assert pp.total == pytest.approx(1.0)


def test_noiseless_rate_one_always_decodes(one_node):
    ch = make_noiseless()
    pol = uniform_policy(ch, one_node)
    cfg = SchemeConfig(8, 1.0, ch, one_node, pol)
    for r in child_rngs(3, 20):
        assert run_trial(cfg, rng=r).correct


def test_rate_zero_never_errs(ising, q1, kkt_policy):
    df = error_curve(ising, q1, kkt_policy, 0.0, [8, 16], trials=20, seed=1)
    assert (df["errors"] == 0).all()
    assert (df["messages"] == 1).all()


def test_posterior_sums_to_one_and_true_message_is_submartingale(ising, q1, kkt_policy):
    rng = np.random.default_rng(9)
    pi = state_posteriors(ising, q1, kkt_policy)
    cfg = SchemeConfig(24, 0.5 * RHO_STAR, ising, q1, kkt_policy)
    M = cfg.messages
    for _ in range(20):
        q = q1.q0
        pp = initial_posterior(M, pi, q)
        m = draw_message(rng, M)
        s_true = pp.state_of(m)
        for _ in range(cfg.n):
            x = encode_step(pp, q, m, kkt_policy, pi)
            w = ising.kernel[s_true, x]
            expected = 0.0
            for y in range(2):
                if w[y] > 0:
                    expected += w[y] * pp_update(pp, q, y, ising, kkt_policy, pi).lam_of(m)
            assert expected >= pp.lam_of(m) - 1e-12
            y = int(rng.choice(2, p=w))
            pp = pp_update(pp, q, y, ising, kkt_policy, pi)
            assert pp.total == pytest.approx(1.0, abs=1e-12)
            q = q1.step(q, y)
            s_true = ising.f(s_true, x, y)


def test_error_decreases_below_capacity(ising, q1, kkt_policy):
    df = error_curve(ising, q1, kkt_policy, 0.5, [8, 16, 24, 32], trials=200, seed=0)
    assert df["rate"].iloc[0] == pytest.approx(0.5 * RHO_STAR, abs=1e-9)
    assert df["p_hat"].iloc[-1] <= df["p_hat"].iloc[0]
    for lo_next, hi_prev in zip(df["ci_low"].iloc[1:], df["ci_high"].iloc[:-1]):
        assert lo_next <= hi_prev


def test_error_stays_high_above_capacity(ising, q1, kkt_policy):
    df = error_curve(ising, q1, kkt_policy, 1.5, [16], trials=100, seed=2)
    assert df["p_hat"].iloc[0] > 0.2


def test_error_curve_is_reproducible(ising, q1, kkt_policy):
    a = error_curve(ising, q1, kkt_policy, 0.8, [8], trials=30, seed=5)
    b = error_curve(ising, q1, kkt_policy, 0.8, [8], trials=30, seed=5)
    assert a.equals(b)


def test_wilson_interval():
    lo, hi = wilson_interval(0, 100)
    assert lo == pytest.approx(0.0, abs=1e-12)
    assert 0.0 < hi < 0.05
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi
    assert wilson_interval(0, 0) == (0.0, 1.0)



def test_huge_message_set_keeps_few_segments(ising, q1, kkt_policy):
    pi = state_posteriors(ising, q1, kkt_policy)
    M = message_count(128, 0.9 * RHO_STAR)
    assert M > 2 ** 64
    rng = np.random.default_rng(4)
    q = q1.q0
    pp = initial_posterior(M, pi, q)
    m = draw_message(rng, M)
    assert 0 <= m < M
    s_true = pp.state_of(m)
    first = pp.segment_count
    for k in range(1, 41):
        x = encode_step(pp, q, m, kkt_policy, pi)
        y = int(rng.choice(2, p=ising.kernel[s_true, x]))
        pp = pp_update(pp, q, y, ising, kkt_policy, pi)
        q = q1.step(q, y)
        s_true = ising.f(s_true, x, y)
        # cada uso corta no máximo |S|(|X|−1) segmentos
        assert pp.segment_count <= first + 2 * k
        assert pp.total == pytest.approx(1.0, abs=1e-12)
        assert pp.state_of(m) == s_true
    assert all(c > 0 for c in pp.counts)
    assert sum(pp.counts) <= M


def test_draw_message_beyond_int64():
    rng = np.random.default_rng(0)
    M = 3 * 2 ** 100 + 7
    ms = [draw_message(rng, M) for _ in range(200)]
    assert all(0 <= m < M for m in ms)
    assert max(ms) > 2 ** 64


def test_error_trend_at_ninety_percent_of_capacity(ising, q1, kkt_policy):
    df = error_curve(ising, q1, kkt_policy, 0.9, [16, 32, 64], trials=100, seed=3)
    assert df["rate"].iloc[0] == pytest.approx(0.9 * RHO_STAR, abs=1e-9)
    # sem limite em M: taxa realizada a menos de 1/n da pedida
    assert np.all(df["rate"] - df["realized_rate"] <= 1.0 / df["n"] + 1e-12)
    assert df["messages"].iloc[-1] > 2 ** 16
    for lo_next, hi_prev in zip(df["ci_low"].iloc[1:], df["ci_high"].iloc[:-1]):
        assert lo_next <= hi_prev
