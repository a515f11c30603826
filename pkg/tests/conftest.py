import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cia_sim import codec
from cia_sim.channel import CompoundChannelConfig, ScalarField, sample_channel

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def tiny_channel(seed=0, field=ScalarField.REAL):
    """M=2, K=2, one state each: the smallest instance with interference."""
    return sample_channel(CompoundChannelConfig(M=2, K=2, J=(1, 1), field=field, seed=seed))


def tiny_setup(seed=0, P=1e6, q_fixed=2, field=ScalarField.REAL):
    ch = tiny_channel(seed, field)
    bases = codec.build_bases(ch.config.dims, (1, 1))
    params = codec.make_params(ch, P=P, n_list=(1, 1), q_fixed=q_fixed, bases=bases)
    return ch, bases, params


@pytest.fixture
def tiny():
    return tiny_setup()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
