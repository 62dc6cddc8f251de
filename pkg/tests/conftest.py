import warnings

import numpy as np
import pytest

from aoii_sched.model import ModelAssumptionWarning, UserParams, validate
from aoii_sched.verify import sample_params

# parameter sets reused across tests, all in the persistent-source regime
BASIC = validate(UserParams(n_states=2, p_remain=0.8, p_success=0.7))
THREE_STATE = validate(UserParams(n_states=3, p_remain=0.6, p_success=0.5))
SLOW_MIX = validate(UserParams(n_states=2, p_remain=0.99, p_success=0.999))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_params(rng, n_states=None, with_query=True):
    return sample_params(rng, n_states=n_states, with_query=with_query)


def table1_users():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ModelAssumptionWarning)
        return (validate(UserParams(2, 0.05, p_success=0.95, q_query=0.20)),
                validate(UserParams(2, 0.50, p_success=0.50, q_query=0.50)),
                validate(UserParams(2, 0.95, p_success=0.05, q_query=0.80)))
