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

"""Scoring of swing-up controllers

A controller is run for a fixed time from the hanging position with
:func:`run_episode`, which returns the trajectory as a
:class:`xarray.Dataset`. :func:`compute_criteria` turns a trajectory into a
:class:`CriteriaReport`, and :func:`robustness_suite` repeats the episode
under a grid of disturbances to get a pass rate for each disturbance
category.
"""

import collections
import dataclasses
import logging
import pathlib
import typing as T

import numpy
import pandas
import xarray
from typing_extensions import Protocol

from .dynamics import ActuationConfig, ModelParams, apply_actuation, integrate
from .environment import (
    EnvSpec,
    RunningStats,
    normalize_and_update,
    reward,
    scale_observation,
)
from .errors import AreapoError, ConfigError, InvalidInputError, NumericalError
from .event import final_event
from .helpers import compute_delayed, map_to_delayed, wrap_angle
from .io import Checkpoint
from .network import PolicyHead
from . import plot

logger = logging.getLogger(__name__)

#: Robustness categories, in report order
CATEGORIES = [
    "model",
    "velocity_noise",
    "torque_noise",
    "torque_response",
    "delay",
    "perturbations",
]

CRITERIA = ["swingup_time", "energy", "torque_cost", "torque_smoothness", "velocity_cost"]


@dataclasses.dataclass(frozen=True)
class CriteriaThresholds:
    """When the pendulum counts as swung up

    Attributes:
        angle_tol: Largest angle from upright, for both joints (rad)
        velocity_tol: Largest joint speed (rad/s)
        hold_time: The upright condition must hold for at least this long at
            the end of the episode (s)
    """

    angle_tol: float = 0.1
    velocity_tol: float = 0.5
    hold_time: float = 1.0

    def __post_init__(self):
        if not (self.angle_tol > 0 and self.velocity_tol > 0 and self.hold_time >= 0):
            raise ConfigError("criteria thresholds must be positive")


@dataclasses.dataclass(frozen=True)
class ScoreNormalizers:
    """Cost at which each criterion's share of the score reaches zero"""

    swingup_time: float = 10.0
    energy: float = 100.0
    torque_cost: float = 10.0
    torque_smoothness: float = 0.1
    velocity_cost: float = 1000.0

    def __post_init__(self):
        for name in CRITERIA:
            if not getattr(self, name) > 0:
                raise ConfigError(f"score normalizer '{name}' must be positive")


def _check_plant_names(names: T.Iterable[str], where: str) -> None:
    unknown = set(names) - {f.name for f in dataclasses.fields(ModelParams)}
    if unknown:
        raise ConfigError(f"unknown plant parameters {sorted(unknown)} in {where}")


@dataclasses.dataclass(frozen=True)
class Impulse:
    """A torque pulse added to one joint

    Attributes:
        time: Start time (s)
        joint: 0 for the shoulder, 1 for the elbow
        magnitude: Torque (N m)
        duration: Length of the pulse (s)
    """

    time: float
    joint: int
    magnitude: float
    duration: float

    def __post_init__(self):
        if self.joint not in (0, 1):
            raise ConfigError(f"impulse joint must be 0 or 1, got {self.joint}")
        if self.duration < 0 or self.time < 0:
            raise ConfigError("impulse time and duration must be non-negative")


@dataclasses.dataclass
class NoiseSpec:
    """Disturbances applied during an evaluation episode

    Attributes:
        velocity_noise_std: Gaussian noise on measured joint velocities (rad/s)
        torque_noise_std: Gaussian noise on the commanded torque (N m)
        torque_response: Responsiveness of the motor, in (0, 1]. Each step the
            applied torque moves this fraction of the way to the command
        delay_steps: Control steps between command and application
        impulses: Torque pulses
        model_scaling: Factors applied to :class:`~areapo.dynamics.ModelParams`
            fields
        seed: Seed for the noise generators
    """

    velocity_noise_std: float = 0.0
    torque_noise_std: float = 0.0
    torque_response: float = 1.0
    delay_steps: int = 0
    impulses: T.List[Impulse] = dataclasses.field(default_factory=list)
    model_scaling: T.Dict[str, float] = dataclasses.field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        self.impulses = [i if isinstance(i, Impulse) else Impulse(**i) for i in self.impulses]
        if self.velocity_noise_std < 0 or self.torque_noise_std < 0:
            raise ConfigError("noise standard deviations must be non-negative")
        if not 0 < self.torque_response <= 1:
            raise ConfigError("torque_response must be in (0, 1]")
        if self.delay_steps < 0:
            raise ConfigError("delay_steps must be non-negative")
        _check_plant_names(self.model_scaling, "model_scaling")
        for k, v in self.model_scaling.items():
            if not v > 0:
                raise ConfigError(f"model scaling for '{k}' must be positive")


@dataclasses.dataclass
class CriteriaReport:
    """Performance of one episode"""

    success: bool
    swingup_time: float
    energy: float
    torque_cost: float
    torque_smoothness: float
    velocity_cost: float
    score: float

    def to_dict(self) -> T.Dict[str, T.Any]:
        return dataclasses.asdict(self)


@dataclasses.dataclass
class RobustnessReport:
    """Pass rate of each robustness category

    Attributes:
        categories: Pass fraction for each category that was run, in report
            order
        overall: Mean of the category fractions
        points: One row per sweep point with its category, severity, result
            and any error raised
    """

    categories: T.Dict[str, float]
    overall: float
    points: pandas.DataFrame


class Controller(Protocol):
    """Anything mapping a normalised observation to an action in [-1, 1]"""

    def __call__(self, obs: numpy.ndarray) -> float:
        ...


class PolicyController:
    """Deterministic controller from a policy's mean action

    Observations are normalised with frozen statistics
    """

    def __init__(self, policy: PolicyHead, stats: RunningStats, clip: float = 10.0):
        self.policy = policy
        self.stats = stats
        self.clip = clip

    def normalize(self, obs: numpy.ndarray) -> numpy.ndarray:
        return normalize_and_update(obs, self.stats, freeze=True, clip=self.clip)

    def __call__(self, obs: numpy.ndarray) -> float:
        mean, _ = self.policy.mean(self.normalize(obs))
        return float(numpy.clip(mean, -1.0, 1.0))

    @classmethod
    def from_checkpoint(cls, ckpt: Checkpoint, clip: float = 10.0) -> "PolicyController":
        return cls(ckpt.policy, ckpt.stats, clip)


class ConstantController:
    """Always returns the same action"""

    def __init__(self, action: float = 0.0):
        self.action = action

    def __call__(self, obs: numpy.ndarray) -> float:
        return self.action


def make_trajectory(
    x: numpy.ndarray,
    torque: numpy.ndarray,
    rewards: numpy.ndarray,
    dt: float,
    task: ActuationConfig,
) -> xarray.Dataset:
    """
    Build a trajectory dataset from post-step samples

    Row k (from 0) is the state after control step k+1, so ``time = (k+1) dt``

    Args:
        x: States ``[n, 4]``
        torque: Torque applied at the active joint during each step ``[n]``
        rewards: Reward of each step ``[n]``
        dt: Control interval (s)
        task: Which joint is actuated
    """
    x = numpy.asarray(x, dtype="f8").reshape(-1, 4)
    n = x.shape[0]
    time = dt * numpy.arange(1, n + 1)
    ds = xarray.Dataset(
        {
            "q1": ("time", x[:, 0]),
            "q2": ("time", x[:, 1]),
            "qd1": ("time", x[:, 2]),
            "qd2": ("time", x[:, 3]),
            "torque": ("time", numpy.asarray(torque, dtype="f8")),
            "reward": ("time", numpy.asarray(rewards, dtype="f8")),
        },
        coords={"time": time},
        attrs={"task": ActuationConfig(task).value, "dt": dt},
    )
    ds["q1"].attrs["units"] = "rad"
    ds["q2"].attrs["units"] = "rad"
    ds["qd1"].attrs["units"] = "rad/s"
    ds["qd2"].attrs["units"] = "rad/s"
    ds["torque"].attrs["units"] = "N m"
    return ds


class _DelayLine:
    # FIFO of commands, a zero length line passes values straight through
    def __init__(self, steps: int):
        self.queue: T.Deque[float] = collections.deque([0.0] * steps)

    def push(self, value: float) -> float:
        if not self.queue:
            return value
        self.queue.append(value)
        return self.queue.popleft()


def run_episode(
    controller: T.Union[Controller, Checkpoint],
    env_spec: EnvSpec,
    noise: NoiseSpec = None,
    duration: float = 10.0,
) -> xarray.Dataset:
    """
    Run a controller from the noiseless hanging position

    Disturbances are applied in this order each control step: velocity
    measurement noise before observation scaling, then torque noise, the
    motor response filter and the delay line after the controller, then the
    torque limit and actuation mask, then impulses on the joint torques.
    Model scaling changes the simulated plant only.

    Args:
        controller: Controller, or a checkpoint whose policy mean is used
        env_spec: Task, plant and control settings
        noise: Disturbances (none by default)
        duration: Episode length (s)

    Returns:
        Trajectory from :func:`make_trajectory`
    """
    if isinstance(controller, Checkpoint):
        controller = PolicyController.from_checkpoint(
            controller, env_spec.observation.clip
        )
    if noise is None:
        noise = NoiseSpec()

    dt = env_spec.control_dt
    n_steps = int(round(duration / dt))
    if n_steps < 1:
        raise InvalidInputError(f"duration {duration} is shorter than one step")

    rng = numpy.random.default_rng(noise.seed)
    plant = env_spec.params.scaled(**noise.model_scaling)
    limit = env_spec.params.torque_limit
    active = env_spec.task.active_joint
    delay = _DelayLine(noise.delay_steps)

    x = numpy.asarray(env_spec.reset.start_state, dtype="f8")
    previous = 0.0

    states = numpy.zeros((n_steps, 4))
    torques_out = numpy.zeros(n_steps)
    rewards = numpy.zeros(n_steps)

    for k in range(n_steps):
        t = k * dt

        measured = x.copy()
        if noise.velocity_noise_std > 0:
            measured[2:] += rng.normal(0.0, noise.velocity_noise_std, 2)
        obs = scale_observation(measured, env_spec.observation.v_max)
        action = float(numpy.clip(controller(obs), -1.0, 1.0))

        command = action * limit
        if noise.torque_noise_std > 0:
            command += rng.normal(0.0, noise.torque_noise_std)
        command = previous + noise.torque_response * (command - previous)
        previous = command
        command = delay.push(command)

        torques = apply_actuation(env_spec.task, command, limit)
        applied = torques[active]
        for imp in noise.impulses:
            if imp.time <= t < imp.time + imp.duration:
                torques[imp.joint] += imp.magnitude

        x = integrate(x, torques, dt, plant, env_spec.substep)
        if not numpy.all(numpy.isfinite(x)):
            raise NumericalError("simulation diverged", {"time": t + dt})

        states[k] = x
        torques_out[k] = applied
        rewards[k] = reward(x, action, env_spec.reward)

    return make_trajectory(states, torques_out, rewards, dt, env_spec.task)


def upright_mask(traj: xarray.Dataset, thresholds: CriteriaThresholds) -> xarray.DataArray:
    """Samples where both links are upright and nearly still"""
    return (
        (numpy.abs(wrap_angle(traj["q1"] - numpy.pi)) < thresholds.angle_tol)
        & (numpy.abs(wrap_angle(traj["q2"])) < thresholds.angle_tol)
        & (numpy.abs(traj["qd1"]) < thresholds.velocity_tol)
        & (numpy.abs(traj["qd2"]) < thresholds.velocity_tol)
    )


def aggregate_score(
    criteria: CriteriaReport, normalizers: ScoreNormalizers = ScoreNormalizers()
) -> float:
    """
    Combine the criteria into one score in [0, 1]

    Each criterion contributes ``1 - min(cost / normalizer, 1)``, averaged over
    the five criteria. Unsuccessful episodes score 0.

    >>> report = CriteriaReport(True, 5.0, 50.0, 5.0, 0.05, 500.0, score=0.0)
    >>> aggregate_score(report)
    0.5

    Args:
        criteria: Episode criteria
        normalizers: Cost scale of each criterion

    Returns:
        Score
    """
    for name in CRITERIA:
        if not getattr(normalizers, name) > 0:
            raise ConfigError(f"score normalizer '{name}' must be positive")
    if not criteria.success:
        return 0.0

    parts = [
        1.0 - min(getattr(criteria, name) / getattr(normalizers, name), 1.0)
        for name in CRITERIA
    ]
    return float(sum(parts) / len(parts))


def compute_criteria(
    traj: xarray.Dataset,
    thresholds: CriteriaThresholds = CriteriaThresholds(),
    normalizers: ScoreNormalizers = ScoreNormalizers(),
) -> CriteriaReport:
    """
    Performance criteria of a trajectory

    Integrals use the rectangle rule over the control interval. Energy is the
    magnitude of the mechanical work done by the motor.

    Args:
        traj: Trajectory from :func:`run_episode` or :func:`make_trajectory`
        thresholds: Success condition
        normalizers: Score normalisation

    Returns:
        :class:`CriteriaReport`
    """
    n = traj.sizes.get("time", 0)
    if n == 0:
        raise InvalidInputError("trajectory is empty")

    if "task" not in traj.attrs:
        raise InvalidInputError("trajectory has no 'task' attribute")
    if "dt" in traj.attrs:
        dt = float(traj.attrs["dt"])
    elif n >= 2:
        dt = float(traj["time"].values[1] - traj["time"].values[0])
    else:
        raise InvalidInputError("trajectory has one row and no 'dt' attribute")
    active = ActuationConfig(traj.attrs["task"]).active_joint
    tau = traj["torque"].values
    qd_active = traj["qd1" if active == 0 else "qd2"].values

    hold = final_event(upright_mask(traj, thresholds))
    success = hold is not None and hold.event_duration * dt >= thresholds.hold_time - 1e-9
    if success:
        swingup_time = float(traj["time"].values[int(hold.time)])
    else:
        swingup_time = n * dt

    report = CriteriaReport(
        success=bool(success),
        swingup_time=swingup_time,
        energy=float(numpy.sum(numpy.abs(tau * qd_active)) * dt),
        torque_cost=float(numpy.sum(tau ** 2) * dt),
        torque_smoothness=float(numpy.mean(numpy.abs(numpy.diff(tau)))) if n > 1 else 0.0,
        velocity_cost=float(
            numpy.sum(traj["qd1"].values ** 2 + traj["qd2"].values ** 2) * dt
        ),
        score=0.0,
    )
    report.score = aggregate_score(report, normalizers)
    return report


def evaluate(
    controller: T.Union[Controller, Checkpoint],
    env_spec: EnvSpec,
    noise: NoiseSpec = None,
    thresholds: CriteriaThresholds = CriteriaThresholds(),
    normalizers: ScoreNormalizers = ScoreNormalizers(),
    duration: float = 10.0,
) -> T.Tuple[CriteriaReport, xarray.Dataset]:
    """Run an episode and score it"""
    traj = run_episode(controller, env_spec, noise, duration)
    return compute_criteria(traj, thresholds, normalizers), traj


@dataclasses.dataclass(frozen=True)
class SweepConfig:
    """Severity grids for :func:`robustness_suite`

    Attributes:
        model_parameters: Plant parameters scaled one at a time
        model_factors: Scale factors for each of 'model_parameters'
        velocity_noise: Velocity noise standard deviations (rad/s)
        torque_noise: Torque noise standard deviations (N m)
        torque_response: Motor responsiveness factors
        delay_steps: Control delays (steps)
        perturbation_seeds: Number of random impulse schedules
        perturbation_count: Impulses per schedule
        perturbation_magnitude: Impulse torque (N m), sign is random
        perturbation_duration: Impulse length (s)
        perturbation_window: Impulse start times are uniform in this range (s)
        noise_repeats: Noise seeds per velocity or torque noise level
        duration: Episode length (s)
        seed: Base seed for every random draw in the sweep
    """

    model_parameters: T.Tuple[str, ...] = (
        "mass_1",
        "mass_2",
        "com_1",
        "com_2",
        "inertia_1",
        "inertia_2",
    )
    model_factors: T.Tuple[float, ...] = (0.8, 0.9, 1.1, 1.2)
    velocity_noise: T.Tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5)
    torque_noise: T.Tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5)
    torque_response: T.Tuple[float, ...] = (0.3, 0.5, 0.7, 0.9)
    delay_steps: T.Tuple[int, ...] = (1, 2, 3, 4, 5)
    perturbation_seeds: int = 10
    perturbation_count: int = 2
    perturbation_magnitude: float = 0.5
    perturbation_duration: float = 0.05
    perturbation_window: T.Tuple[float, float] = (1.0, 8.0)
    noise_repeats: int = 1
    duration: float = 10.0
    seed: int = 0

    def __post_init__(self):
        _check_plant_names(self.model_parameters, "sweep.model_parameters")
        if any(f <= 0 for f in self.model_factors):
            raise ConfigError("model factors must be positive")
        if any(s < 0 for s in self.velocity_noise + self.torque_noise):
            raise ConfigError("noise levels must be non-negative")
        if any(not 0 < k <= 1 for k in self.torque_response):
            raise ConfigError("torque response factors must be in (0, 1]")
        if any(d < 0 for d in self.delay_steps):
            raise ConfigError("delays must be non-negative")
        if self.perturbation_seeds < 1 or self.noise_repeats < 1:
            raise ConfigError("perturbation_seeds and noise_repeats must be at least 1")
        lo, hi = self.perturbation_window
        if not 0 <= lo <= hi:
            raise ConfigError("perturbation_window must be an increasing pair")

    @classmethod
    def zero(cls, **kwargs) -> "SweepConfig":
        """A sweep whose every point is the undisturbed episode"""
        defaults = dict(
            model_factors=(1.0,),
            velocity_noise=(0.0,),
            torque_noise=(0.0,),
            torque_response=(1.0,),
            delay_steps=(0,),
            perturbation_seeds=1,
            perturbation_magnitude=0.0,
        )
        defaults.update(kwargs)
        return cls(**defaults)


@dataclasses.dataclass(frozen=True)
class SweepPoint:
    category: str
    parameter: str
    severity: float
    noise: NoiseSpec = dataclasses.field(hash=False, compare=False)


def _random_impulses(sweep: SweepConfig, rng: numpy.random.Generator) -> T.List[Impulse]:
    lo, hi = sweep.perturbation_window
    impulses = []
    for _ in range(sweep.perturbation_count):
        sign = 1.0 if rng.random() < 0.5 else -1.0
        impulses.append(
            Impulse(
                time=float(rng.uniform(lo, hi)),
                joint=int(rng.integers(0, 2)),
                magnitude=sign * sweep.perturbation_magnitude,
                duration=sweep.perturbation_duration,
            )
        )
    return impulses


def sweep_points(
    sweep: SweepConfig, categories: T.Sequence[str] = CATEGORIES
) -> T.List[SweepPoint]:
    """
    Every disturbance setting of a sweep, grouped by category in report order

    Seeds are fixed per point, so results don't depend on evaluation order
    """
    points = []
    for category in [c for c in CATEGORIES if c in categories]:
        if category == "model":
            for name in sweep.model_parameters:
                for f in sweep.model_factors:
                    points.append(
                        SweepPoint(category, name, f, NoiseSpec(model_scaling={name: f}))
                    )
        elif category == "velocity_noise":
            for s in sweep.velocity_noise:
                for r in range(sweep.noise_repeats):
                    points.append(
                        SweepPoint(
                            category,
                            "velocity_noise_std",
                            s,
                            NoiseSpec(velocity_noise_std=s, seed=sweep.seed + r),
                        )
                    )
        elif category == "torque_noise":
            for s in sweep.torque_noise:
                for r in range(sweep.noise_repeats):
                    points.append(
                        SweepPoint(
                            category,
                            "torque_noise_std",
                            s,
                            NoiseSpec(torque_noise_std=s, seed=sweep.seed + r),
                        )
                    )
        elif category == "torque_response":
            for k in sweep.torque_response:
                points.append(
                    SweepPoint(category, "torque_response", k, NoiseSpec(torque_response=k))
                )
        elif category == "delay":
            for d in sweep.delay_steps:
                points.append(
                    SweepPoint(category, "delay_steps", d, NoiseSpec(delay_steps=d))
                )
        elif category == "perturbations":
            for s in range(sweep.perturbation_seeds):
                rng = numpy.random.default_rng([sweep.seed, s])
                points.append(
                    SweepPoint(
                        category,
                        "perturbation_magnitude",
                        sweep.perturbation_magnitude,
                        NoiseSpec(impulses=_random_impulses(sweep, rng)),
                    )
                )
    return points


def _evaluate_point(
    point: SweepPoint,
    controller: Controller,
    env_spec: EnvSpec,
    thresholds: CriteriaThresholds,
    normalizers: ScoreNormalizers,
    duration: float,
) -> T.Dict[str, T.Any]:
    row = {
        "category": point.category,
        "parameter": point.parameter,
        "severity": point.severity,
        "success": False,
        "score": 0.0,
        "error": "",
    }
    try:
        report, _ = evaluate(controller, env_spec, point.noise, thresholds, normalizers, duration)
        row["success"] = report.success
        row["score"] = report.score
    except (AreapoError, ArithmeticError, ValueError) as e:
        logger.warning(
            "sweep point %s %s=%s failed: %s", point.category, point.parameter, point.severity, e
        )
        row["error"] = f"{type(e).__name__}: {e}"
    return row


def robustness_suite(
    controller: T.Union[Controller, Checkpoint],
    env_spec: EnvSpec,
    sweep: SweepConfig = SweepConfig(),
    thresholds: CriteriaThresholds = CriteriaThresholds(),
    normalizers: ScoreNormalizers = ScoreNormalizers(),
    categories: T.Sequence[str] = None,
    parallel: bool = True,
) -> RobustnessReport:
    """
    Pass rate of a controller under each category of disturbance

    Sweep points are run as :obj:`dask.delayed` tasks. A point passes if its
    episode is a success, points that raise count as failures.

    Args:
        controller: Controller, or a checkpoint whose policy mean is used
        env_spec: Nominal task and plant
        sweep: Severity grids
        thresholds: Success condition
        normalizers: Score normalisation (for the per-point score column)
        categories: Subset of :data:`CATEGORIES` to run, all by default
        parallel: Use the threaded scheduler rather than running serially

    Returns:
        :class:`RobustnessReport`
    """
    if isinstance(controller, Checkpoint):
        controller = PolicyController.from_checkpoint(
            controller, env_spec.observation.clip
        )

    if categories is None:
        categories = list(CATEGORIES)
    if not categories:
        raise ConfigError("no robustness categories selected")
    unknown = set(categories) - set(CATEGORIES)
    if unknown:
        raise ConfigError(
            f"unknown robustness categories {sorted(unknown)}, choose from {CATEGORIES}"
        )
    if set(categories) != set(CATEGORIES):
        logger.warning(
            "running only %s, the overall score is the mean of these categories",
            [c for c in CATEGORIES if c in categories],
        )

    points = sweep_points(sweep, categories)
    tasks = map_to_delayed(
        _evaluate_point,
        points,
        name="robustness-point",
        args=(controller, env_spec, thresholds, normalizers, sweep.duration),
    )
    rows = compute_delayed(tasks, parallel=parallel)

    table = pandas.DataFrame(
        rows, columns=["category", "parameter", "severity", "success", "score", "error"]
    )
    scores = {}
    for c in [c for c in CATEGORIES if c in categories]:
        sel = table[table.category == c]
        scores[c] = float(sel.success.mean()) if len(sel) > 0 else 0.0
        logger.info("robustness %s: %.3f", c, scores[c])

    overall = float(numpy.mean(list(scores.values())))
    return RobustnessReport(categories=scores, overall=overall, points=table)


def criteria_table(
    reports: T.Sequence[CriteriaReport], labels: T.Sequence[str] = None
) -> pandas.DataFrame:
    """One row per report, columns 'label' and the report fields"""
    if labels is None:
        labels = [str(i) for i in range(len(reports))]
    columns = ["label", "success", *CRITERIA, "score"]
    rows = [{"label": label, **r.to_dict()} for label, r in zip(labels, reports)]
    return pandas.DataFrame(rows, columns=columns)


def robustness_table(
    reports: T.Sequence[RobustnessReport], labels: T.Sequence[str] = None
) -> pandas.DataFrame:
    """One row per report, a column per category plus 'overall'"""
    if labels is None:
        labels = [str(i) for i in range(len(reports))]
    columns = ["label", *CATEGORIES, "overall"]
    rows = [
        {"label": label, **r.categories, "overall": r.overall}
        for label, r in zip(labels, reports)
    ]
    return pandas.DataFrame(rows, columns=columns)


def export_report(
    path: T.Union[str, pathlib.Path],
    criteria: T.Sequence[CriteriaReport] = (),
    robustness: T.Sequence[RobustnessReport] = (),
    labels: T.Sequence[str] = None,
) -> T.List[pathlib.Path]:
    """
    Write report tables and charts to a directory

    Writes ``criteria.csv`` and ``robustness.csv`` (header only if there are
    no reports). For each robustness report a chart ``robustness[-label].svg``
    and the per-point log ``robustness_points[-label].csv`` are written too.

    Args:
        path: Output directory, created if needed
        criteria: Performance reports
        robustness: Robustness reports
        labels: Label for each report (report index by default)

    Returns:
        Paths written
    """
    out = pathlib.Path(path)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    crit_labels = labels if labels is not None and len(labels) == len(criteria) else None
    rob_labels = labels if labels is not None and len(labels) == len(robustness) else None

    criteria_table(criteria, crit_labels).to_csv(out / "criteria.csv", index=False)
    written.append(out / "criteria.csv")
    robustness_table(robustness, rob_labels).to_csv(out / "robustness.csv", index=False)
    written.append(out / "robustness.csv")

    for i, r in enumerate(robustness):
        suffix = "" if len(robustness) == 1 else f"-{rob_labels[i] if rob_labels else i}"
        chart = out / f"robustness{suffix}.svg"
        plot.robustness_chart(r.categories, chart, title=f"Overall {100 * r.overall:.1f}%")
        r.points.to_csv(out / f"robustness_points{suffix}.csv", index=False)
        written += [chart, out / f"robustness_points{suffix}.csv"]

    return written
