import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cia_sim.channel import (RNG_ALGORITHM, ChannelRealization, CompoundChannelConfig,
                             ScalarField, make_rng, sample_channel, validate_genericity)
from cia_sim.errors import ConfigError

dims = st.tuples(st.integers(1, 3), st.integers(1, 3)).flatmap(
    lambda mk: st.tuples(st.just(mk[0]), st.just(mk[1]),
                         st.lists(st.integers(1, 3), min_size=mk[1], max_size=mk[1])))


def test_shape_and_distinct_entries():
    ch = sample_channel(CompoundChannelConfig(M=2, K=2, J=(1, 1), seed=7))
    assert [a.shape for a in ch.h] == [(2, 1), (2, 1)]
    vals = ch.flat()
    assert len(vals) == 4
    assert len(set(vals.tolist())) == 4


def test_same_seed_is_bit_identical():
    cfg = CompoundChannelConfig(M=2, K=2, J=(2, 2), seed=99)
    a, b = sample_channel(cfg), sample_channel(cfg)
    for x, y in zip(a.h, b.h):
        assert x.tobytes() == y.tobytes()


def test_different_seeds_differ():
    a = sample_channel(CompoundChannelConfig(M=2, K=2, J=(2, 2), seed=1))
    b = sample_channel(CompoundChannelConfig(M=2, K=2, J=(2, 2), seed=2))
    assert not np.array_equal(a.flat(), b.flat())


def test_thousand_seeds_are_generic():
    bad = 0
    for seed in range(1000):
        ch = sample_channel(CompoundChannelConfig(M=2, K=2, J=(2, 2), seed=seed))
        bad += not validate_genericity(ch, 1e-12).is_generic
    assert bad == 0


@given(dims, st.integers(0, 2**64 - 1), st.sampled_from(list(ScalarField)))
def test_magnitude_floor_and_dtype(d, seed, field):
    M, K, J = d
    ch = sample_channel(CompoundChannelConfig(M=M, K=K, J=tuple(J), field=field, seed=seed))
    assert all(np.abs(a).min() >= 1e-3 for a in ch.h)
    assert all(a.dtype == field.dtype for a in ch.h)
    assert len(ch.flat()) == M * sum(J)


def test_floor_forces_resampling():
    cfg = CompoundChannelConfig(M=3, K=3, J=(3, 3, 3), seed=5, magnitude_floor=1.5)
    ch = sample_channel(cfg)
    assert np.abs(ch.flat()).min() >= 1.5


def test_impossible_floor_is_config_error():
    with pytest.raises(ConfigError):
        sample_channel(CompoundChannelConfig(M=1, K=1, J=(1,), magnitude_floor=50.0))


def test_complex_is_circular_unit_variance():
    cfg = CompoundChannelConfig(M=50, K=20, J=(20,) * 20, field="complex", seed=3,
                                magnitude_floor=1e-12)
    v = sample_channel(cfg).flat()
    assert abs(np.mean(np.abs(v) ** 2) - 1) < 0.02
    assert abs(np.mean(v.real ** 2) - np.mean(v.imag ** 2)) < 0.02
    assert abs(np.mean(v ** 2)) < 0.02  # circular: E[h^2] = 0


@pytest.mark.parametrize("kw", [
    dict(M=0, K=1, J=(1,)), dict(M=1, K=0, J=()), dict(M=1, K=2, J=(1,)),
    dict(M=1, K=1, J=(0,)), dict(M=1, K=1, J=(1,), magnitude_floor=0.0),
    dict(M=1, K=1, J=(1,), field="quaternion"),
])
def test_invalid_configs(kw):
    with pytest.raises(ConfigError):
        CompoundChannelConfig(**kw)


def test_accessors_reject_out_of_range():
    ch = sample_channel(CompoundChannelConfig(M=2, K=2, J=(1, 2), seed=0))
    assert ch.coeff(1, 1, 1) == ch.h[1][1, 1]
    for idx in [(2, 0, 0), (0, 2, 0), (0, 0, 1), (-1, 0, 0)]:
        with pytest.raises(IndexError):
            ch.coeff(*idx)
    with pytest.raises(IndexError):
        ch.vector(0, 1)
    with pytest.raises(ValueError):
        ch.h[0][0, 0] = 1.0  # realizations are read-only


def test_genericity_reports_constructed_collision():
    cfg = CompoundChannelConfig(M=2, K=1, J=(1,))
    ch = ChannelRealization(cfg, (np.array([[1.0], [1.0]]),))
    rep = validate_genericity(ch, 1e-9)
    assert rep.collisions == [((0, 0, 0), (0, 1, 0))]
    assert not rep.is_generic


def test_genericity_huge_tolerance_reports_all_pairs():
    ch = sample_channel(CompoundChannelConfig(M=2, K=2, J=(2, 1), seed=4))
    n = len(ch.flat())
    assert len(validate_genericity(ch, 1e9).collisions) == n * (n - 1) // 2


def test_genericity_flags_small_magnitudes():
    cfg = CompoundChannelConfig(M=2, K=1, J=(1,), magnitude_floor=0.1)
    ch = ChannelRealization(cfg, (np.array([[0.01], [2.0]]),))
    assert validate_genericity(ch, 1e-12).small == [(0, 0, 0)]


@given(dims, st.integers(0, 10**6), st.sampled_from(list(ScalarField)))
def test_json_round_trip(d, seed, field):
    M, K, J = d
    ch = sample_channel(CompoundChannelConfig(M=M, K=K, J=tuple(J), field=field, seed=seed))
    doc = json.loads(json.dumps(ch.to_json()))
    assert doc["rng"] == RNG_ALGORITHM
    back = ChannelRealization.from_json(doc)
    assert back.config == ch.config
    for a, b in zip(ch.h, back.h):
        assert np.array_equal(a, b)


def test_complex_serialised_as_pairs():
    ch = sample_channel(CompoundChannelConfig(M=1, K=1, J=(1,), field="complex", seed=2))
    v = ch.to_json()["h"][0][0][0]
    assert v == [ch.h[0][0, 0].real, ch.h[0][0, 0].imag]


def test_config_rejects_unknown_fields():
    d = CompoundChannelConfig(M=1, K=1, J=(1,)).to_dict()
    d["colour"] = "red"
    with pytest.raises(ConfigError):
        CompoundChannelConfig.from_dict(d)


def test_rng_streams_are_keyed():
    a = make_rng(5, 1, 2).standard_normal(4)
    assert np.array_equal(a, make_rng(5, 1, 2).standard_normal(4))
    assert not np.array_equal(a, make_rng(5, 2, 1).standard_normal(4))
