#!/usr/bin/env python
# Copyright 2024 areapo developers
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Continuing-task environments over the pendulum dynamics

The swing-up task never terminates. "Episodes" only end by truncation, either
at the step cap or at random with probability ``p_trunc`` each step, which
decorrelates the members of a :class:`VectorPendulumEnv`. A truncated step
still has a successor state for bootstrapping, exposed as the terminal
observation.

Observations are scaled with :func:`scale_observation` then normalised with a
shared :class:`RunningStats`.
"""

import dataclasses
import logging
import typing as T

import numpy

from .dynamics import (
    ActuationConfig,
    ModelParams,
    PendulumState,
    apply_actuation,
    integrate,
)
from .errors import InvalidInputError
from .helpers import require_finite, wrap_angle

logger = logging.getLogger(__name__)

GOAL = (numpy.pi, 0.0, 0.0, 0.0)


@dataclasses.dataclass(frozen=True)
class RewardSpec:
    """Quadratic reward ``-alpha * [(s-g)^T Q (s-g) + a R a]``"""

    Q_diag: T.Tuple[float, float, float, float] = (50.0, 50.0, 4.0, 2.0)
    R: float = 1.0
    alpha: float = 0.001
    goal: T.Tuple[float, float, float, float] = GOAL

    def __post_init__(self):
        if len(self.Q_diag) != 4 or len(self.goal) != 4:
            raise InvalidInputError("Q_diag and goal must have 4 entries")
        if min(self.Q_diag) < 0 or self.R < 0:
            raise InvalidInputError("Q_diag and R must be non-negative")
        if not self.alpha > 0:
            raise InvalidInputError("alpha must be positive")


@dataclasses.dataclass(frozen=True)
class ResetSpec:
    """Noisy reset and truncation settings

    Attributes:
        start_state: Mean reset state
        noise_std: Gaussian reset noise per state component
        episode_cap: Steps after which an episode is always truncated
        p_trunc: Chance of truncating after any step. 1 is accepted, it
            truncates every step
    """

    start_state: T.Tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    noise_std: T.Tuple[float, float, float, float] = (0.01, 0.01, 0.05, 0.05)
    episode_cap: int = 1000
    p_trunc: float = 1e-3

    def __post_init__(self):
        if len(self.start_state) != 4 or len(self.noise_std) != 4:
            raise InvalidInputError("start_state and noise_std must have 4 entries")
        if min(self.noise_std) < 0:
            raise InvalidInputError("noise_std must be non-negative")
        if not 0 <= self.p_trunc <= 1:
            raise InvalidInputError("p_trunc must be in [0, 1]")
        if self.episode_cap < 1:
            raise InvalidInputError("episode_cap must be at least 1")


@dataclasses.dataclass(frozen=True)
class ObservationSpec:
    """Observation scaling and normalisation constants"""

    #: Velocity scale (rad/s)
    v_max: float = 20.0
    #: Normalised observations are clipped to +- this
    clip: float = 10.0


@dataclasses.dataclass(frozen=True)
class EnvSpec:
    """Everything needed to build an environment for one task"""

    task: ActuationConfig
    params: ModelParams
    reward: RewardSpec = RewardSpec()
    reset: ResetSpec = ResetSpec()
    observation: ObservationSpec = ObservationSpec()
    #: Control interval (s), 100 Hz
    control_dt: float = 0.01
    #: Integration substeps per control interval
    substeps: int = 5

    @property
    def substep(self) -> float:
        return self.control_dt / self.substeps


class RunningStats:
    """Streaming mean and variance of observations

    Batches are merged with the parallel form of Welford's algorithm, so a
    batch update gives the same statistics as adding the rows one at a time
    (up to rounding)
    """

    def __init__(self, size: int = 4):
        self.count = 0.0
        self.mean = numpy.zeros(size, dtype="f8")
        self.m2 = numpy.zeros(size, dtype="f8")

    @property
    def var(self) -> numpy.ndarray:
        if self.count == 0:
            return numpy.ones_like(self.m2)
        return self.m2 / self.count

    @property
    def std(self) -> numpy.ndarray:
        return numpy.sqrt(self.var + 1e-8)

    def update(self, batch: numpy.ndarray) -> None:
        """
        Add a batch of observations ``[n, size]`` to the statistics
        """
        batch = numpy.asarray(batch, dtype="f8").reshape(-1, self.mean.size)
        n = batch.shape[0]
        if n == 0:
            return
        batch_mean = batch.mean(axis=0)
        batch_m2 = ((batch - batch_mean) ** 2).sum(axis=0)

        total = self.count + n
        delta = batch_mean - self.mean
        self.mean = self.mean + delta * (n / total)
        self.m2 = self.m2 + batch_m2 + delta ** 2 * (self.count * n / total)
        self.count = total

    def copy(self) -> "RunningStats":
        other = RunningStats(self.mean.size)
        other.count = self.count
        other.mean = self.mean.copy()
        other.m2 = self.m2.copy()
        return other


@dataclasses.dataclass
class StepOutcome:
    """Result of resetting or stepping a single environment"""

    observation: numpy.ndarray
    reward: float
    truncated: bool
    raw_state: PendulumState
    applied_torque: float


@dataclasses.dataclass
class VectorOutcome:
    """Result of resetting or stepping a :class:`VectorPendulumEnv`

    Attributes:
        observations: Normalised observations ``[n, 4]``, for truncated
            members these are from the fresh reset state
        rewards: Step rewards ``[n]``
        truncated: Truncation flags ``[n]``
        raw_states: Unscaled states ``[n, 4]`` matching 'observations'
        applied_torques: Motor torque at the active joint ``[n]``
        terminal_observations: Normalised pre-reset observations ``[n, 4]``,
            NaN where the member was not truncated
    """

    observations: numpy.ndarray
    rewards: numpy.ndarray
    truncated: numpy.ndarray
    raw_states: numpy.ndarray
    applied_torques: numpy.ndarray
    terminal_observations: numpy.ndarray

    def unbatch(self, t: float = 0.0) -> T.List[StepOutcome]:
        """Split into one :class:`StepOutcome` per member"""
        return [
            StepOutcome(
                observation=self.observations[i],
                reward=float(self.rewards[i]),
                truncated=bool(self.truncated[i]),
                raw_state=PendulumState.from_array(self.raw_states[i], t),
                applied_torque=float(self.applied_torques[i]),
            )
            for i in range(self.rewards.shape[0])
        ]


def reward(state, action, spec: RewardSpec = RewardSpec()):
    """
    Quadratic distance-to-goal reward

    Angle differences to the goal are wrapped, so the distance is to the
    nearest upright configuration.

    >>> round(float(reward([0, 0, 0, 0], 0.0)), 5)
    -0.49348
    >>> float(reward([numpy.pi, 0, 0, 0], 1.0))
    -0.001

    Args:
        state: Unscaled state ``[..., 4]``
        action: Normalised action, broadcastable against ``state[..., 0]``
        spec: Reward constants

    Returns:
        Reward, always <= 0
    """
    state = numpy.asarray(state, dtype="f8")
    action = numpy.asarray(action, dtype="f8")
    d = state - numpy.asarray(spec.goal, dtype="f8")
    d = numpy.concatenate([wrap_angle(d[..., :2]), d[..., 2:]], axis=-1)
    cost = numpy.sum(d * d * numpy.asarray(spec.Q_diag), axis=-1) + action * spec.R * action
    return -spec.alpha * cost


def scale_observation(state, v_max: float = 20.0) -> numpy.ndarray:
    """
    Scale a state into roughly unit range

    Angles are wrapped to (-pi, pi] and divided by pi, velocities are divided
    by v_max.

    >>> scale_observation(PendulumState(3 * numpy.pi, 0, 0, 0))
    array([1., 0., 0., 0.])

    Args:
        state: :class:`PendulumState` or unscaled state array ``[..., 4]``
        v_max: Velocity scale (rad/s)

    Returns:
        Scaled observation ``[..., 4]``
    """
    if isinstance(state, PendulumState):
        x = state.to_array()
    else:
        x = numpy.asarray(state, dtype="f8")
    require_finite("state", x)
    return numpy.concatenate(
        [wrap_angle(x[..., :2]) / numpy.pi, x[..., 2:] / v_max], axis=-1
    )


def normalize_and_update(
    obs, stats: RunningStats, freeze: bool = False, clip: float = 10.0
) -> numpy.ndarray:
    """
    Normalise observations with running statistics

    Unless 'freeze' is set the statistics are first updated with 'obs'.
    Frozen statistics are never modified.

    Args:
        obs: Scaled observation(s) ``[..., 4]``
        stats: Running statistics
        freeze: Don't update 'stats'
        clip: Clip normalised values to +- clip

    Returns:
        ``(obs - mean) / std`` clipped
    """
    obs = numpy.asarray(obs, dtype="f8")
    if not freeze:
        stats.update(obs)
    return numpy.clip((obs - stats.mean) / stats.std, -clip, clip)


def reset_state(spec: ResetSpec, rng: numpy.random.Generator) -> numpy.ndarray:
    """
    Draw a noisy start state ``start_state + N(0, noise_std)``
    """
    return numpy.asarray(spec.start_state, dtype="f8") + rng.normal(
        0.0, numpy.asarray(spec.noise_std, dtype="f8")
    )


def _actions_to_torque(spec: EnvSpec, actions):
    actions = numpy.clip(numpy.asarray(actions, dtype="f8"), -1.0, 1.0)
    command = actions * spec.params.torque_limit
    torques = apply_actuation(spec.task, command, spec.params.torque_limit)
    return actions, command, torques


class PendulumEnv:
    """A single continuing swing-up environment

    Args:
        spec: Environment definition
        seed: Seed for the reset noise and random truncation
        stats: Observation statistics (a new :class:`RunningStats` if None)
        freeze: Don't update 'stats'
        rng: Use this generator rather than seeding a new one
    """

    def __init__(
        self,
        spec: EnvSpec,
        seed: T.Optional[int] = None,
        stats: RunningStats = None,
        freeze: bool = False,
        rng: numpy.random.Generator = None,
    ):
        self.spec = spec
        self.rng = rng if rng is not None else numpy.random.default_rng(seed)
        self.stats = stats if stats is not None else RunningStats()
        self.freeze = freeze
        self.x = numpy.asarray(spec.reset.start_state, dtype="f8")
        self.t = 0.0
        self.steps = 0

    @property
    def state(self) -> PendulumState:
        return PendulumState.from_array(self.x, self.t)

    def _observe(self, x):
        obs = scale_observation(x, self.spec.observation.v_max)
        return normalize_and_update(
            obs, self.stats, self.freeze, self.spec.observation.clip
        )

    def reset(self, seed: T.Optional[int] = None) -> StepOutcome:
        """
        Reset to a noisy start state, zeroing the step counter

        Args:
            seed: Reseed the environment's generator first
        """
        if seed is not None:
            self.rng = numpy.random.default_rng(seed)
        self.x = reset_state(self.spec.reset, self.rng)
        self.t = 0.0
        self.steps = 0
        return StepOutcome(
            observation=self._observe(self.x),
            reward=0.0,
            truncated=False,
            raw_state=self.state,
            applied_torque=0.0,
        )

    def step(self, action: float) -> StepOutcome:
        """
        Apply an action in [-1, 1] for one control interval

        The caller must :meth:`reset` once a step reports truncation.
        """
        action = numpy.asarray(action, dtype="f8")
        if action.size != 1:
            raise InvalidInputError(f"expected a scalar action, got {action!r}")
        require_finite("action", action)
        action = action.reshape(())

        a, command, torques = _actions_to_torque(self.spec, action)
        self.x = integrate(
            self.x, torques, self.spec.control_dt, self.spec.params, self.spec.substep
        )
        self.t += self.spec.control_dt
        self.steps += 1

        r = float(reward(self.x, a, self.spec.reward))
        truncated = bool(self.rng.random() < self.spec.reset.p_trunc)
        truncated = truncated or self.steps >= self.spec.reset.episode_cap

        return StepOutcome(
            observation=self._observe(self.x),
            reward=r,
            truncated=truncated,
            raw_state=self.state,
            applied_torque=float(command),
        )


class VectorPendulumEnv:
    """A set of environments stepped together

    Members share one :class:`RunningStats`. Each member has its own random
    generator, so the trajectory of a member does not depend on the others.
    Truncated members are reset automatically.

    Args:
        spec: Environment definition
        n_envs: Number of members
        seed: Base seed, member generators are spawned from it
        seeds: Explicit per-member seeds (overrides 'seed' and 'n_envs')
        stats: Shared observation statistics
        freeze: Don't update 'stats'
    """

    def __init__(
        self,
        spec: EnvSpec,
        n_envs: int = 1,
        seed: T.Optional[int] = None,
        seeds: T.Sequence[int] = None,
        stats: RunningStats = None,
        freeze: bool = False,
    ):
        if seeds is not None:
            self.rngs = [numpy.random.default_rng(s) for s in seeds]
        else:
            children = numpy.random.SeedSequence(seed).spawn(n_envs)
            self.rngs = [numpy.random.default_rng(c) for c in children]

        self.spec = spec
        self.n_envs = len(self.rngs)
        self.stats = stats if stats is not None else RunningStats()
        self.freeze = freeze

        self.x = numpy.tile(
            numpy.asarray(spec.reset.start_state, dtype="f8"), (self.n_envs, 1)
        )
        self.t = numpy.zeros(self.n_envs)
        self.steps = numpy.zeros(self.n_envs, dtype="i8")

    def _scale(self, x):
        return scale_observation(x, self.spec.observation.v_max)

    def _normalize(self, obs, update: bool):
        return normalize_and_update(
            obs,
            self.stats,
            freeze=self.freeze or not update,
            clip=self.spec.observation.clip,
        )

    def reset(self) -> VectorOutcome:
        """Reset every member"""
        for i, rng in enumerate(self.rngs):
            self.x[i] = reset_state(self.spec.reset, rng)
        self.t[:] = 0.0
        self.steps[:] = 0

        obs = self._normalize(self._scale(self.x), update=True)
        n = self.n_envs
        return VectorOutcome(
            observations=obs,
            rewards=numpy.zeros(n),
            truncated=numpy.zeros(n, dtype=bool),
            raw_states=self.x.copy(),
            applied_torques=numpy.zeros(n),
            terminal_observations=numpy.full((n, 4), numpy.nan),
        )

    def step(self, actions) -> VectorOutcome:
        """
        Step every member with its own action, auto-resetting truncated members

        Statistics are updated with the post-step observations, then with the
        observations of any fresh reset states.
        """
        actions = numpy.asarray(actions, dtype="f8").reshape(-1)
        if actions.shape[0] != self.n_envs:
            raise InvalidInputError(
                f"expected {self.n_envs} actions, got {actions.shape[0]}"
            )
        require_finite("actions", actions)

        a, command, torques = _actions_to_torque(self.spec, actions)
        self.x = integrate(
            self.x, torques, self.spec.control_dt, self.spec.params, self.spec.substep
        )
        self.t += self.spec.control_dt
        self.steps += 1

        rewards = reward(self.x, a, self.spec.reward)
        draws = numpy.array([rng.random() for rng in self.rngs])
        truncated = (draws < self.spec.reset.p_trunc) | (
            self.steps >= self.spec.reset.episode_cap
        )

        post_obs = self._scale(self.x)
        post_norm = self._normalize(post_obs, update=True)

        terminal = numpy.full((self.n_envs, 4), numpy.nan)
        done = numpy.nonzero(truncated)[0]
        if done.size > 0:
            terminal[done] = post_norm[done]
            for i in done:
                self.x[i] = reset_state(self.spec.reset, self.rngs[i])
            self.t[done] = 0.0
            self.steps[done] = 0
            fresh = self._scale(self.x[done])
            self._normalize(fresh, update=True)
            post_obs = self._scale(self.x)
            obs = self._normalize(post_obs, update=False)
            logger.debug("auto-reset members %s", done.tolist())
        else:
            obs = post_norm

        return VectorOutcome(
            observations=obs,
            rewards=rewards,
            truncated=truncated,
            raw_states=self.x.copy(),
            applied_torques=command,
            terminal_observations=terminal,
        )


def vector_env_step(actions, env: VectorPendulumEnv) -> VectorOutcome:
    """Step all members of 'env', see :meth:`VectorPendulumEnv.step`"""
    return env.step(actions)
