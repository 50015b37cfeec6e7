# -*- coding: utf-8 -*-
import json

import numpy as np
import pytest

from fbcap.channels import (UnifilarFsc, is_strongly_connected, load_channel, make_binary_ising, make_bsc,
                            make_qary_ising, resolve_channel, save_channel)
from fbcap.utils import ConfigError


def test_binary_ising_tables(ising):
    assert (ising.state_count, ising.input_count, ising.output_count) == (2, 2, 2)
    assert ising.prob(0, 0, 0) == 1.0
    assert ising.prob(1, 1, 0) == 0.5
    assert ising.prob(1, 1, 1) == 1.0
    # próximo estado é a entrada
    for s in range(2):
        for x in range(2):
            for y in range(2):
                assert ising.f(s, x, y) == x
    assert is_strongly_connected(ising)


def test_qary_ising_is_uniform_over_x_and_s():
    ch = make_qary_ising(3)
    assert ch.kernel.shape == (3, 3, 3)
    assert ch.prob(2, 2, 2) == 1.0
    assert ch.prob(1, 0, 2) == 0.0
    assert ch.prob(0, 0, 2) == 0.5
    with pytest.raises(ConfigError):
        make_qary_ising(9)


@pytest.mark.parametrize("spec,name,shape", [
    ("ising2", "ising2", (2, 2, 2)),
    ("ising:4", "ising4", (4, 4, 4)),
    ("bsc:0.1", "bsc:0.1", (1, 2, 2)),
    ("noiseless", "noiseless:2", (1, 2, 2)),
    ("noiseless:3", "noiseless:3", (1, 3, 3)),
    ("useless", "useless", (1, 2, 2)),
])
def test_resolve_builtin(spec, name, shape):
    ch = resolve_channel(spec)
    assert ch.name == name
    assert ch.kernel.shape == shape


def test_resolve_rejects_bad_builtin(tmp_path):
    with pytest.raises(ConfigError):
        resolve_channel("bsc:abc")
    with pytest.raises(ConfigError):
        resolve_channel(str(tmp_path / "nao_existe.json"))


def test_kernel_row_must_sum_to_one():
    k = np.array([[[0.6, 0.6], [0.5, 0.5]]])
    with pytest.raises(ConfigError, match=r"x=0, s=0"):
        UnifilarFsc(k, np.zeros((1, 2, 2), dtype=int))


def test_next_state_out_of_range():
    with pytest.raises(ConfigError):
        UnifilarFsc(np.full((1, 2, 2), 0.5), np.ones((1, 2, 2), dtype=int))


def test_save_and_load_preserve_tables(tmp_path, ising):
    path = save_channel(ising, tmp_path / "ising.json")
    back = load_channel(path)
    assert back.same_tables(ising)
    assert back.name == "ising2"


def test_load_accepts_fraction_strings(tmp_path):
    doc = {"name": "bsc_terco", "S": 1, "X": 2, "Y": 2,
           "kernel": [[["2/3"], ["1/3"]], [["1/3"], ["2/3"]]],
           "next_state": [[[0, 0], [0, 0]]]}
    path = tmp_path / "bsc.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    ch = load_channel(path)
    assert ch.prob(0, 0, 0) == pytest.approx(2 / 3)
    assert ch.prob(0, 1, 0) == pytest.approx(1 / 3)


def test_load_reports_missing_field(tmp_path):
    path = tmp_path / "ruim.json"
    path.write_text(json.dumps({"S": 1, "X": 2, "Y": 2}), encoding="utf-8")
    with pytest.raises(ConfigError, match="kernel"):
        load_channel(path)


def test_bsc_is_memoryless():
    ch = make_bsc(0.25)
    assert ch.state_count == 1
    assert np.allclose(ch.kernel[0], [[0.75, 0.25], [0.25, 0.75]])
    assert not ch.same_tables(make_binary_ising())


@pytest.mark.parametrize("field, value", [
    ("next_state", [[[0, 0], [0]]]),
    ("kernel", [[["2/3"], ["1/3"]], [["1/3"], "2/3"]]),
])
def test_load_rejects_ragged_tables(tmp_path, field, value):
    doc = {"name": "bsc_terco", "S": 1, "X": 2, "Y": 2,
           "kernel": [[["2/3"], ["1/3"]], [["1/3"], ["2/3"]]],
           "next_state": [[[0, 0], [0, 0]]]}
    doc[field] = value
    path = tmp_path / "irregular.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    with pytest.raises(ConfigError, match=field):
        load_channel(path)
