import dataclasses

import pytest
import numpy

from areapo.dynamics import ActuationConfig, ModelParams
from areapo.environment import EnvSpec, ResetSpec
from areapo.learner import LearnerConfig


@pytest.fixture
def params():
    return ModelParams(
        mass_1=0.5234,
        mass_2=0.6755,
        length_1=0.3,
        length_2=0.2,
        com_1=0.3,
        com_2=0.2,
        inertia_1=0.0475,
        inertia_2=0.0283,
    )


@pytest.fixture
def rough_params(params):
    # Friction and motor inertia switched on
    return dataclasses.replace(
        params,
        damping_1=0.01,
        damping_2=0.02,
        coulomb_1=0.005,
        coulomb_2=0.003,
        motor_inertia=1e-3,
    )


@pytest.fixture
def env_spec(params):
    return EnvSpec(task=ActuationConfig.PENDUBOT, params=params)


@pytest.fixture
def quiet_env_spec(params):
    # No reset noise and no random truncation
    return EnvSpec(
        task=ActuationConfig.PENDUBOT,
        params=params,
        reset=ResetSpec(noise_std=(0.0, 0.0, 0.0, 0.0), p_trunc=0.0),
    )


@pytest.fixture
def tiny_config():
    return LearnerConfig(
        n_envs=2,
        rollout_steps=8,
        n_epochs=2,
        batch_size=8,
        total_frames=32,
        eval_interval=1,
        policy_hidden=(8, 8),
        critic_hidden=(8, 8),
    )


@pytest.fixture
def rng():
    return numpy.random.default_rng(1234)
