# -*- coding: utf-8 -*-
import numpy as np
import pytest

from fbcap.ba_di import BaConfig, CcKernelTable, ba_iterate, di_bounds, posterior_q, unroll_channel
from fbcap.channels import make_bsc, make_noiseless, make_useless
from fbcap.utils import ConfigError

from conftest import RHO_STAR


@pytest.fixture(scope="module")
def ising_n4(ising):
    return ba_iterate(unroll_channel(ising, 4), BaConfig(eps=1e-6, max_iter=2000))


def test_unroll_first_level_is_kernel(ising):
    t = unroll_channel(ising, 1, s0=1)
    assert np.allclose(t.levels[0], ising.kernel[1])


def test_unroll_tracks_state(ising):
    t = unroll_channel(ising, 2, s0=0)
    lv = t.levels[1]
    # estado após o primeiro uso é x1
    for x1 in range(2):
        for x2 in range(2):
            for y1 in range(2):
                assert np.allclose(lv[x1, x2, y1], ising.kernel[x1, x2])


def test_unroll_memoryless_ignores_history():
    t = unroll_channel(make_bsc(0.2), 3)
    lv = t.levels[2]
    assert np.allclose(lv[0, 1, 0, 1, 0, :], [0.8, 0.2])
    assert np.allclose(lv[1, 0, 1, 0, 1, :], [0.2, 0.8])


def test_table_validation(ising):
    with pytest.raises(ConfigError):
        unroll_channel(ising, 0)
    with pytest.raises(ConfigError):
        unroll_channel(ising, 2, s0=5)
    with pytest.raises(ConfigError):
        unroll_channel(ising, 12)
    with pytest.raises(ConfigError):
        CcKernelTable((np.full((2, 2), 0.7),), 2, 2)


def test_bsc_single_letter_capacity():
    st = ba_iterate(unroll_channel(make_bsc(0.1), 1))
    assert st.converged
    assert st.i_low == pytest.approx(0.531004, abs=1e-5)
    assert st.i_up == pytest.approx(0.531004, abs=1e-5)


def test_bsc_three_letters_equals_single_letter():
    st = ba_iterate(unroll_channel(make_bsc(0.1), 3), BaConfig(eps=1e-7))
    assert st.i_low == pytest.approx(0.531004, abs=1e-5)


def test_degenerate_channels_close_immediately():
    st = ba_iterate(unroll_channel(make_useless(), 2))
    assert st.iterations == 0
    assert st.history[0][1] == pytest.approx(0.0, abs=1e-12)
    assert st.history[0][2] == pytest.approx(0.0, abs=1e-12)
    st = ba_iterate(unroll_channel(make_noiseless(), 1))
    assert st.i_low == pytest.approx(1.0, abs=1e-12)
    assert st.i_up == pytest.approx(1.0, abs=1e-12)


def test_uniform_start_on_noiseless_with_posterior():
    t = unroll_channel(make_noiseless(), 1)
    r = [np.full((2, 1), 0.5)]
    q = posterior_q(r, t)
    assert np.allclose(q[:, 0], [1.0, 0.0])


def test_ising_bounds_sandwich_and_monotone(ising_n4):
    hist = np.array(ising_n4.history)
    lows, ups = hist[:, 1], hist[:, 2]
    assert np.all(lows <= ups + 1e-12)
    assert np.all(np.diff(lows) >= -1e-10)
    assert 0.45 < ising_n4.i_low <= ising_n4.i_up


def test_ising_n4_close_to_capacity(ising_n4):
    # horizonte curto com estado inicial conhecido fica abaixo do limite assintótico
    assert ising_n4.i_low == pytest.approx(0.5525, abs=5e-3)
    assert ising_n4.i_low < RHO_STAR + 0.05


def test_di_bounds_recomputed_from_state(ising):
    t = unroll_channel(ising, 2)
    st = ba_iterate(t, BaConfig(eps=1e-6, max_iter=500))
    low, up = di_bounds(st, t)
    assert low == pytest.approx(st.i_low)
    assert up == pytest.approx(st.i_up)
    rec = st.to_record(2)
    assert set(rec) == {"n", "iterations", "I_L", "I_U", "converged", "gap"}
