import numpy as np
import pytest
from hypothesis import settings

from usc_trio.model import SystemParams, validate_bound_state

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

# Figure configurations (unit frequencies)
FIG1_CAPTION = dict(J12=0.1, J13=0.0, J23=0.1)
FIG1_PROSE = dict(J12=0.1, J13=0.1, J23=0.0)
OPEN_CHAIN = dict(J12=0.1, J13=0.0, J23=0.1)
DECOUPLED_C = dict(J12=0.1, J13=0.0, J23=0.0)


def unit_params(gamma=50.0, **couplings):
    return SystemParams(1.0, 1.0, 1.0, gamma=gamma, **couplings)


def random_params(rng, n, coupling=0.6, spread=(0.5, 2.0)):
    out = []
    while len(out) < n:
        w = rng.uniform(*spread, 3)
        J = rng.uniform(-coupling, coupling, 3)
        p = SystemParams(*w, *J, gamma=float(rng.uniform(1.0, 100.0)))
        if validate_bound_state(p):
            out.append(p)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
