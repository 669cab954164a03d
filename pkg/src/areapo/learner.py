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

"""Average-reward entropy-advantage policy optimisation

One training iteration is

1. :func:`collect_rollouts` - step every environment ``rollout_steps`` times
2. :func:`dual_gae` - advantages of the reward and entropy objectives,
   without discounting, relative to the current gain estimates
3. :func:`update_gains` - move the gain estimates by the mean advantages
4. :func:`ppo_update` - clipped surrogate policy update on the combined
   advantage plus regression of both critic heads

:func:`train` loops these, evaluating the deterministic policy every
``eval_interval`` iterations.
"""

import dataclasses
import logging
import pathlib
import typing as T

import numpy
import pandas
import tqdm.auto

from .environment import EnvSpec, RunningStats, VectorPendulumEnv
from .errors import AreapoError, ConfigError, InvalidBatchError, InvalidInputError, NumericalError
from .evaluation import (
    CriteriaReport,
    CriteriaThresholds,
    PolicyController,
    ScoreNormalizers,
    evaluate,
)
from .io import Checkpoint, append_csv_row, save_checkpoint
from .network import (
    CriticHead,
    OptimizerState,
    PolicyHead,
    gaussian_entropy,
    gaussian_log_prob,
    log_prob_backward,
    optimizer_step,
    policy_sample,
)

logger = logging.getLogger(__name__)

LOG_COLUMNS = [
    "iter",
    "frames",
    "rho_hat",
    "rho_H_hat",
    "policy_loss",
    "value_loss",
    "clip_frac",
    "eval_score",
]

DIAGNOSTIC_COLUMNS = [
    "iter",
    "entropy",
    "approx_kl",
    "ratio_mean",
    "ratio_max",
    "grad_norm",
    "mean_reward",
    "mean_entropy_reward",
    "reward_entropy_ratio",
]


@dataclasses.dataclass(frozen=True)
class LearnerConfig:
    """Training hyperparameters

    Attributes:
        tau: Entropy temperature
        lambda_reward: Trace parameter of the reward advantage
        lambda_entropy: Trace parameter of the entropy advantage
        clip_epsilon: Surrogate clip range
        eta: Gain estimate step size
        learning_rate: Optimiser learning rate
        c2: Weight of the entropy advantage in the combined advantage
        vf_coef: Critic loss weight
        n_envs: Parallel environments
        rollout_steps: Steps per environment per iteration
        n_epochs: Passes over each batch
        batch_size: Minibatch size
        adv_minibatch_norm: Normalise the combined advantage per minibatch
        max_grad_norm: Global gradient clip
        log_std_init: Initial policy log standard deviation
        total_frames: Environment steps to train for
        eval_interval: Iterations between evaluations
        policy_hidden: Hidden layer widths of the policy
        critic_hidden: Hidden layer widths of the critic
    """

    tau: float = 2.0
    lambda_reward: float = 0.8
    lambda_entropy: float = 0.6
    clip_epsilon: float = 0.05
    eta: float = 0.01
    learning_rate: float = 5e-4
    c2: float = 0.5
    vf_coef: float = 0.25
    n_envs: int = 64
    rollout_steps: int = 128
    n_epochs: int = 6
    batch_size: int = 1024
    adv_minibatch_norm: bool = True
    max_grad_norm: float = 10.0
    log_std_init: float = -1.0
    total_frames: int = 30_000_000
    eval_interval: int = 100
    policy_hidden: T.Tuple[int, ...] = (256, 256)
    critic_hidden: T.Tuple[int, ...] = (512, 512)

    def __post_init__(self):
        for name in [
            "learning_rate",
            "vf_coef",
            "n_envs",
            "rollout_steps",
            "n_epochs",
            "batch_size",
            "max_grad_norm",
            "total_frames",
            "eval_interval",
            "eta",
        ]:
            if not getattr(self, name) > 0:
                raise ConfigError(f"learner.{name} must be positive")
        for name in ["tau", "c2"]:
            if not getattr(self, name) >= 0:
                raise ConfigError(f"learner.{name} must be non-negative")
        for name in ["lambda_reward", "lambda_entropy"]:
            if not 0 <= getattr(self, name) <= 1:
                raise ConfigError(f"learner.{name} must be in [0, 1]")
        if not 0 < self.clip_epsilon < 1:
            raise ConfigError("learner.clip_epsilon must be in (0, 1)")
        if (self.n_envs * self.rollout_steps) % self.batch_size != 0:
            raise ConfigError(
                f"learner.batch_size {self.batch_size} must divide "
                f"n_envs * rollout_steps = {self.n_envs * self.rollout_steps}"
            )

    @property
    def frames_per_iteration(self) -> int:
        return self.n_envs * self.rollout_steps


@dataclasses.dataclass(frozen=True)
class GainEstimates:
    """Running estimates of the gain and entropy gain"""

    rho_hat: float = 0.0
    rho_H_hat: float = 0.0


@dataclasses.dataclass
class RolloutBatch:
    """Transitions from :func:`collect_rollouts`, arrays are ``[steps, n_envs, ...]``

    Attributes:
        observations: Normalised observations the actions were taken at
        actions: Clamped actions
        pre_clamp: Gaussian samples before clamping
        log_prob_old: Log probability of 'pre_clamp' under the sampling policy
        rewards: Environment rewards
        entropy_rewards: ``-tau * log_prob_old``
        values: Critic output at 'observations', ``[..., 2]``
        truncated: Step ended with a truncation
        bootstrap_observations: Pre-reset observation of truncated steps,
            NaN elsewhere
        bootstrap_values: Critic output at 'bootstrap_observations', NaN
            elsewhere
        last_values: Critic output at the observation after the last step,
            ``[n_envs, 2]``
        tau: Temperature used for 'entropy_rewards'
    """

    observations: numpy.ndarray
    actions: numpy.ndarray
    pre_clamp: numpy.ndarray
    log_prob_old: numpy.ndarray
    rewards: numpy.ndarray
    entropy_rewards: numpy.ndarray
    values: numpy.ndarray
    truncated: numpy.ndarray
    bootstrap_observations: numpy.ndarray
    bootstrap_values: numpy.ndarray
    last_values: numpy.ndarray
    tau: float

    @property
    def steps(self) -> int:
        return self.rewards.shape[0]

    @property
    def n_envs(self) -> int:
        return self.rewards.shape[1]


@dataclasses.dataclass
class AdvantageSet:
    """Output of :func:`dual_gae`, arrays are ``[steps, n_envs]``"""

    advantages: numpy.ndarray
    entropy_advantages: numpy.ndarray
    combined: numpy.ndarray
    returns: numpy.ndarray
    entropy_returns: numpy.ndarray


def collect_rollouts(
    policy: PolicyHead,
    critic: CriticHead,
    env: VectorPendulumEnv,
    obs: numpy.ndarray,
    steps: int,
    tau: float,
    rng: numpy.random.Generator,
) -> T.Tuple[RolloutBatch, numpy.ndarray]:
    """
    Step every environment 'steps' times with the sampling policy

    Args:
        policy: Policy to sample from
        critic: Critic to evaluate the visited observations
        env: Environments, truncated members are reset automatically
        obs: Current normalised observations ``[n_envs, 4]``
        steps: Steps per environment
        tau: Entropy temperature
        rng: Generator for the action noise

    Returns:
        The batch, and the observations to continue from
    """
    n = env.n_envs
    batch = RolloutBatch(
        observations=numpy.zeros((steps, n, 4)),
        actions=numpy.zeros((steps, n)),
        pre_clamp=numpy.zeros((steps, n)),
        log_prob_old=numpy.zeros((steps, n)),
        rewards=numpy.zeros((steps, n)),
        entropy_rewards=numpy.zeros((steps, n)),
        values=numpy.zeros((steps, n, 2)),
        truncated=numpy.zeros((steps, n), dtype=bool),
        bootstrap_observations=numpy.full((steps, n, 4), numpy.nan),
        bootstrap_values=numpy.full((steps, n, 2), numpy.nan),
        last_values=numpy.zeros((n, 2)),
        tau=tau,
    )

    for t in range(steps):
        sample = policy_sample(policy, obs, rng)
        values, _ = critic.values(obs)

        try:
            outcome = env.step(sample.action)
        except InvalidInputError as e:
            bad = numpy.flatnonzero(~numpy.isfinite(sample.action)).tolist()
            raise InvalidInputError(f"step {t}, envs {bad}: {e}") from e

        batch.observations[t] = obs
        batch.actions[t] = sample.action
        batch.pre_clamp[t] = sample.pre_clamp
        batch.log_prob_old[t] = sample.log_prob
        batch.rewards[t] = outcome.rewards
        batch.entropy_rewards[t] = -tau * sample.log_prob
        batch.values[t] = values
        batch.truncated[t] = outcome.truncated

        done = numpy.flatnonzero(outcome.truncated)
        if done.size > 0:
            terminal = outcome.terminal_observations[done]
            batch.bootstrap_observations[t, done] = terminal
            batch.bootstrap_values[t, done], _ = critic.values(terminal)

        obs = outcome.observations

    batch.last_values, _ = critic.values(obs)
    return batch, obs


def _gae(
    rewards: numpy.ndarray,
    values: numpy.ndarray,
    bootstrap: numpy.ndarray,
    last_values: numpy.ndarray,
    truncated: numpy.ndarray,
    gain: float,
    lam: float,
) -> numpy.ndarray:
    # Undiscounted backward recursion, restarting at truncations where the
    # next value comes from the pre-reset observation
    steps = rewards.shape[0]
    adv = numpy.zeros_like(rewards)
    next_adv = numpy.zeros_like(last_values)
    for t in range(steps - 1, -1, -1):
        next_value = last_values if t == steps - 1 else values[t + 1]
        next_value = numpy.where(truncated[t], bootstrap[t], next_value)
        carry = numpy.where(truncated[t], 0.0, next_adv)
        delta = rewards[t] - gain + next_value - values[t]
        adv[t] = delta + lam * carry
        next_adv = adv[t]
    return adv


def dual_gae(
    batch: RolloutBatch, gains: GainEstimates, config: LearnerConfig
) -> AdvantageSet:
    """
    Differential advantages of the reward and entropy objectives

    >>> batch = RolloutBatch(
    ...     observations=numpy.zeros((3, 1, 4)), actions=numpy.zeros((3, 1)),
    ...     pre_clamp=numpy.zeros((3, 1)), log_prob_old=numpy.zeros((3, 1)),
    ...     rewards=numpy.array([[1.0], [0.0], [2.0]]),
    ...     entropy_rewards=numpy.zeros((3, 1)),
    ...     values=numpy.array([[[0.5, 0]], [[1.0, 0]], [[0.0, 0]]]),
    ...     truncated=numpy.zeros((3, 1), dtype=bool),
    ...     bootstrap_observations=numpy.full((3, 1, 4), numpy.nan),
    ...     bootstrap_values=numpy.full((3, 1, 2), numpy.nan),
    ...     last_values=numpy.array([[0.25, 0]]), tau=0.0)
    >>> adv = dual_gae(batch, GainEstimates(0.5, 0.0), LearnerConfig(lambda_reward=0.8))
    >>> adv.advantages[:, 0].round(12)
    array([ 0.92, -0.1 ,  1.75])

    Args:
        batch: Rollouts
        gains: Current gain estimates
        config: Trace parameters and the entropy advantage weight

    Returns:
        :class:`AdvantageSet` with value targets ``advantage + old value``
    """
    missing = batch.truncated & numpy.any(numpy.isnan(batch.bootstrap_values), axis=-1)
    if numpy.any(missing):
        where = numpy.argwhere(missing)[:5].tolist()
        raise InvalidBatchError(f"truncated steps {where} have no bootstrap value")

    adv = _gae(
        batch.rewards,
        batch.values[..., 0],
        batch.bootstrap_values[..., 0],
        batch.last_values[..., 0],
        batch.truncated,
        gains.rho_hat,
        config.lambda_reward,
    )
    adv_h = _gae(
        batch.entropy_rewards,
        batch.values[..., 1],
        batch.bootstrap_values[..., 1],
        batch.last_values[..., 1],
        batch.truncated,
        gains.rho_H_hat,
        config.lambda_entropy,
    )

    return AdvantageSet(
        advantages=adv,
        entropy_advantages=adv_h,
        combined=adv + config.c2 * adv_h,
        returns=adv + batch.values[..., 0],
        entropy_returns=adv_h + batch.values[..., 1],
    )


def update_gains(gains: GainEstimates, adv: AdvantageSet, eta: float = 0.01) -> GainEstimates:
    """
    Move the gain estimates by the batch mean of the raw advantages

    >>> adv = AdvantageSet(numpy.ones((2, 2)), numpy.zeros((2, 2)), None, None, None)
    >>> update_gains(GainEstimates(), adv, eta=0.01)
    GainEstimates(rho_hat=0.01, rho_H_hat=0.0)
    """
    return GainEstimates(
        rho_hat=float(gains.rho_hat + eta * numpy.mean(adv.advantages)),
        rho_H_hat=float(gains.rho_H_hat + eta * numpy.mean(adv.entropy_advantages)),
    )


def surrogate_loss(
    policy: PolicyHead,
    obs: numpy.ndarray,
    pre_clamp: numpy.ndarray,
    log_prob_old: numpy.ndarray,
    advantages: numpy.ndarray,
    clip_epsilon: float,
) -> T.Tuple[float, T.Dict[str, numpy.ndarray], T.Dict[str, float]]:
    """
    Clipped surrogate loss ``-mean(min(r A, clip(r, 1-eps, 1+eps) A))``

    Args:
        policy: Current policy
        obs: Observations ``[n, 4]``
        pre_clamp: Unclamped actions ``[n]``
        log_prob_old: Log probabilities under the sampling policy ``[n]``
        advantages: Advantages, already normalised if wanted ``[n]``
        clip_epsilon: Clip range

    Returns:
        Loss, its gradient w.r.t. the policy parameters and ratio statistics
    """
    n = advantages.shape[0]
    mean, cache = policy.mean(obs)
    lp = gaussian_log_prob(pre_clamp, mean, policy.log_std[0])
    ratio = numpy.exp(lp - log_prob_old)

    unclipped = ratio * advantages
    clipped = numpy.clip(ratio, 1 - clip_epsilon, 1 + clip_epsilon) * advantages
    loss = -float(numpy.mean(numpy.minimum(unclipped, clipped)))

    # The clipped branch is constant in the parameters
    d_ratio = -numpy.where(unclipped <= clipped, advantages, 0.0) / n
    grads = log_prob_backward(policy, cache, mean, pre_clamp, d_ratio * ratio)

    stats = {
        "clip_frac": float(numpy.mean(numpy.abs(ratio - 1) > clip_epsilon)),
        "approx_kl": float(numpy.mean((ratio - 1) - numpy.log(ratio))),
        "ratio_mean": float(numpy.mean(ratio)),
        "ratio_max": float(numpy.max(ratio)),
    }
    return loss, grads, stats


def critic_loss(
    critic: CriticHead,
    obs: numpy.ndarray,
    returns: numpy.ndarray,
    entropy_returns: numpy.ndarray,
    vf_coef: float,
) -> T.Tuple[float, T.Dict[str, numpy.ndarray]]:
    """
    ``vf_coef * mean((v - target)^2 + (v_H - target_H)^2)`` and its gradient
    """
    n = returns.shape[0]
    values, cache = critic.values(obs)
    error = values - numpy.stack([returns, entropy_returns], axis=-1)
    loss = vf_coef * float(numpy.mean(numpy.sum(error ** 2, axis=-1)))
    grads = critic.backward(cache, 2.0 * vf_coef * error / n)
    return loss, grads


def normalize_advantages(adv: numpy.ndarray) -> numpy.ndarray:
    """
    >>> normalize_advantages(numpy.array([1.0, 3.0])).round(6)
    array([-1.,  1.])
    """
    return (adv - adv.mean()) / (adv.std() + 1e-8)


def ppo_update(
    batch: RolloutBatch,
    adv: AdvantageSet,
    policy: PolicyHead,
    critic: CriticHead,
    opt: OptimizerState,
    config: LearnerConfig,
    rng: numpy.random.Generator,
) -> T.Dict[str, float]:
    """
    Several epochs of minibatch updates of the policy and both critic heads

    Both losses are summed and share one optimiser step per minibatch. If a
    loss is not finite the update stops with :class:`NumericalError` before
    that minibatch changes any parameter.

    Args:
        batch: Rollouts
        adv: Advantages from :func:`dual_gae`
        policy: Policy, updated in place
        critic: Critic, updated in place
        opt: Optimiser state, updated in place
        config: Hyperparameters
        rng: Generator for the minibatch shuffle

    Returns:
        Mean diagnostics over all minibatches
    """
    n = batch.steps * batch.n_envs
    obs = batch.observations.reshape(n, -1)
    pre_clamp = batch.pre_clamp.reshape(n)
    log_prob_old = batch.log_prob_old.reshape(n)
    combined = adv.combined.reshape(n)
    returns = adv.returns.reshape(n)
    entropy_returns = adv.entropy_returns.reshape(n)

    batch_size = min(config.batch_size, n)
    history: T.Dict[str, T.List[float]] = {}

    for epoch in range(config.n_epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]

            a = combined[idx]
            if config.adv_minibatch_norm:
                a = normalize_advantages(a)

            p_loss, p_grads, stats = surrogate_loss(
                policy, obs[idx], pre_clamp[idx], log_prob_old[idx], a, config.clip_epsilon
            )
            v_loss, v_grads = critic_loss(
                critic, obs[idx], returns[idx], entropy_returns[idx], config.vf_coef
            )

            if not numpy.isfinite(p_loss + v_loss):
                raise NumericalError(
                    "non-finite loss, update aborted",
                    {"epoch": epoch, "policy_loss": p_loss, "value_loss": v_loss, **stats},
                )

            params = {**policy.parameters(), **critic.parameters()}
            new = optimizer_step(
                opt, params, {**p_grads, **v_grads}, config.max_grad_norm
            )
            policy.set_parameters(new)
            critic.set_parameters(new)

            record = {
                "policy_loss": p_loss,
                "value_loss": v_loss,
                "grad_norm": opt.last_grad_norm,
                **stats,
            }
            for k, v in record.items():
                history.setdefault(k, []).append(v)

    out = {k: float(numpy.mean(v)) for k, v in history.items()}
    out["entropy"] = float(gaussian_entropy(policy.log_std[0]))
    return out


@dataclasses.dataclass
class TrainResult:
    """Summary of a :func:`train` run"""

    best_score: float
    best_iteration: int
    iterations: int
    frames: int
    gains: GainEstimates
    best_report: T.Optional[CriteriaReport]
    output: pathlib.Path


def _seeds(seed: int, n: int) -> T.List[int]:
    return [int(s) for s in numpy.random.SeedSequence(seed).generate_state(n)]


def train(
    config: LearnerConfig,
    env_spec: EnvSpec,
    seed: int,
    output: T.Union[str, pathlib.Path],
    thresholds: CriteriaThresholds = CriteriaThresholds(),
    normalizers: ScoreNormalizers = ScoreNormalizers(),
    eval_duration: float = 10.0,
    config_text: str = "",
    show_progress: bool = True,
) -> TrainResult:
    """
    Train a policy and critic

    Writes to 'output':

    * ``training_log.csv``, one row per iteration, appended as training goes
    * ``diagnostics.csv``, further per-iteration diagnostics
    * ``checkpoint_last.nc``, refreshed at every evaluation
    * ``checkpoint_best.nc``, the best evaluation so far
    * ``checkpoint_final.nc``, at the end of training

    If an iteration fails the error is raised and the checkpoints already
    written are left as they are.

    Args:
        config: Hyperparameters
        env_spec: Task and plant
        seed: Seed for every random draw in the run
        output: Output directory
        thresholds: Evaluation success condition
        normalizers: Evaluation score normalisation
        eval_duration: Length of each evaluation episode (s)
        config_text: Resolved configuration, stored in the checkpoints
        show_progress: Show a progress bar

    Returns:
        :class:`TrainResult`
    """
    output = pathlib.Path(output)
    output.mkdir(parents=True, exist_ok=True)
    for name in ["training_log.csv", "diagnostics.csv"]:
        if (output / name).exists():
            (output / name).unlink()

    init_seed, env_seed, policy_seed, shuffle_seed = _seeds(seed, 4)
    init_rng = numpy.random.default_rng(init_seed)
    policy_rng = numpy.random.default_rng(policy_seed)
    shuffle_rng = numpy.random.default_rng(shuffle_seed)

    policy = PolicyHead.init(init_rng, hidden=config.policy_hidden, log_std=config.log_std_init)
    critic = CriticHead.init(init_rng, hidden=config.critic_hidden)
    opt = OptimizerState(learning_rate=config.learning_rate)
    stats = RunningStats()
    env = VectorPendulumEnv(env_spec, config.n_envs, seed=env_seed, stats=stats)
    gains = GainEstimates()

    iterations = max(1, config.total_frames // config.frames_per_iteration)
    logger.info(
        "training %s for %d iterations (%d frames), seed %d",
        env_spec.task.value,
        iterations,
        iterations * config.frames_per_iteration,
        seed,
    )

    def checkpoint(iteration: int) -> Checkpoint:
        return Checkpoint(
            policy=policy,
            critic=critic,
            stats=stats,
            optimizer=opt,
            rho_hat=gains.rho_hat,
            rho_H_hat=gains.rho_H_hat,
            task=env_spec.task.value,
            iteration=iteration,
            frames=iteration * config.frames_per_iteration,
            config=config_text,
        )

    best_score = -numpy.inf
    best_iteration = 0
    best_report = None

    obs = env.reset().observations
    progress = tqdm.auto.tqdm(range(1, iterations + 1), disable=not show_progress)
    for iteration in progress:
        try:
            batch, obs = collect_rollouts(
                policy, critic, env, obs, config.rollout_steps, config.tau, policy_rng
            )
            adv = dual_gae(batch, gains, config)
            gains = update_gains(gains, adv, config.eta)
            diag = ppo_update(batch, adv, policy, critic, opt, config, shuffle_rng)
        except AreapoError:
            logger.error(
                "iteration %d failed, checkpoints in %s are from the last evaluation",
                iteration,
                output,
            )
            raise

        eval_score = numpy.nan
        if iteration % config.eval_interval == 0 or iteration == iterations:
            report, _ = evaluate(
                PolicyController(policy, stats, env_spec.observation.clip),
                env_spec,
                thresholds=thresholds,
                normalizers=normalizers,
                duration=eval_duration,
            )
            eval_score = report.score
            logger.info(
                "iteration %d: score %.4f success %s swingup %.2fs",
                iteration,
                report.score,
                report.success,
                report.swingup_time,
            )
            save_checkpoint(checkpoint(iteration), output / "checkpoint_last.nc")
            if report.score > best_score:
                best_score = report.score
                best_iteration = iteration
                best_report = report
                save_checkpoint(checkpoint(iteration), output / "checkpoint_best.nc")

        frames = iteration * config.frames_per_iteration
        mean_r = float(numpy.mean(batch.rewards))
        mean_h = float(numpy.mean(batch.entropy_rewards))
        append_csv_row(
            output / "training_log.csv",
            {
                "iter": iteration,
                "frames": frames,
                "rho_hat": gains.rho_hat,
                "rho_H_hat": gains.rho_H_hat,
                "policy_loss": diag["policy_loss"],
                "value_loss": diag["value_loss"],
                "clip_frac": diag["clip_frac"],
                "eval_score": eval_score,
            },
            LOG_COLUMNS,
        )
        append_csv_row(
            output / "diagnostics.csv",
            {
                "iter": iteration,
                "entropy": diag["entropy"],
                "approx_kl": diag["approx_kl"],
                "ratio_mean": diag["ratio_mean"],
                "ratio_max": diag["ratio_max"],
                "grad_norm": diag["grad_norm"],
                "mean_reward": mean_r,
                "mean_entropy_reward": mean_h,
                "reward_entropy_ratio": abs(mean_r) / abs(mean_h) if mean_h != 0 else numpy.inf,
            },
            DIAGNOSTIC_COLUMNS,
        )
        logger.debug(
            "iteration %d: rho %.5f rho_H %.5f kl %.2e clip %.3f",
            iteration,
            gains.rho_hat,
            gains.rho_H_hat,
            diag["approx_kl"],
            diag["clip_frac"],
        )
        progress.set_postfix(rho=f"{gains.rho_hat:.4f}", best=f"{best_score:.3f}")

    save_checkpoint(checkpoint(iterations), output / "checkpoint_final.nc")

    return TrainResult(
        best_score=float(best_score),
        best_iteration=best_iteration,
        iterations=iterations,
        frames=iterations * config.frames_per_iteration,
        gains=gains,
        best_report=best_report,
        output=output,
    )


def read_training_log(path: T.Union[str, pathlib.Path]) -> pandas.DataFrame:
    """Read ``training_log.csv``"""
    df = pandas.read_csv(path)
    missing = set(LOG_COLUMNS) - set(df.columns)
    if missing:
        raise InvalidInputError(f"{path} is not a training log, missing {sorted(missing)}")
    return df
