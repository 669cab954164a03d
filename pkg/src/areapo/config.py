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

"""Run configuration

Configuration is layered, later layers override earlier ones:

1. dataclass defaults
2. the shipped plant file ``areapo/data/plant.yaml``
3. user YAML files, in the order given
4. ``section.key=value`` overrides
5. dedicated command line flags (task, seed, frame budget)

A YAML file holds any of the top level sections ``task``, ``plant``,
``environment``, ``learner``, ``evaluation``, ``sweep`` and ``run``::

    task: pendubot
    plant:
      torque_limit: 6.0
    learner:
      total_frames: 5000000
    run:
      seed: 1

:meth:`RunConfig.resolved` gives the configuration with every default filled
in, in the same layout, so that writing it out and loading it back reproduces
the run.
"""

import dataclasses
import os
import pathlib
import pkgutil
import typing as T

import yaml

from .dynamics import ActuationConfig, ModelParams
from .environment import EnvSpec, ObservationSpec, ResetSpec, RewardSpec
from .errors import AreapoError, ConfigError
from .evaluation import CriteriaThresholds, NoiseSpec, ScoreNormalizers, SweepConfig
from .learner import LearnerConfig

#: Environment variable giving the default output root
OUTPUT_ENV = "AREAPO_OUTPUT"

SECTIONS = ["task", "plant", "environment", "learner", "evaluation", "sweep", "run"]


@dataclasses.dataclass(frozen=True)
class RunSettings:
    """Settings of a single invocation

    Attributes:
        seed: Random seed, None picks one at random
        output: Output directory
        seeds: Train one run per seed
        parallel: Use the threaded scheduler for robustness sweeps
    """

    seed: T.Optional[int] = None
    output: T.Optional[str] = None
    seeds: T.Tuple[int, ...] = ()
    parallel: bool = True


@dataclasses.dataclass(frozen=True)
class EvaluationSettings:
    thresholds: CriteriaThresholds = CriteriaThresholds()
    normalizers: ScoreNormalizers = ScoreNormalizers()
    duration: float = 10.0


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """The full configuration of one invocation"""

    task: ActuationConfig
    env: EnvSpec
    learner: LearnerConfig
    evaluation: EvaluationSettings
    sweep: SweepConfig
    run: RunSettings

    @property
    def plant(self) -> ModelParams:
        return self.env.params

    def output_dir(self, default: str = "areapo-output") -> pathlib.Path:
        """Output directory, from the config, then $AREAPO_OUTPUT, then 'default'"""
        if self.run.output is not None:
            return pathlib.Path(self.run.output)
        return pathlib.Path(os.environ.get(OUTPUT_ENV, default))

    def resolved(self) -> T.Dict[str, T.Any]:
        """Every setting, defaults included, in the YAML file layout"""
        env = self.env
        return _plain(
            {
                "task": self.task.value,
                "plant": dataclasses.asdict(env.params),
                "environment": {
                    "reward": dataclasses.asdict(env.reward),
                    "reset": dataclasses.asdict(env.reset),
                    "observation": dataclasses.asdict(env.observation),
                    "control_dt": env.control_dt,
                    "substeps": env.substeps,
                },
                "learner": dataclasses.asdict(self.learner),
                "evaluation": dataclasses.asdict(self.evaluation),
                "sweep": dataclasses.asdict(self.sweep),
                "run": dataclasses.asdict(self.run),
            }
        )

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.resolved(), sort_keys=False)

    def write(self, path: T.Union[str, pathlib.Path]) -> None:
        """Write the resolved configuration snapshot"""
        with open(path, "w") as f:
            f.write(self.to_yaml())


def _plain(value):
    # Convert tuples, enums and numpy scalars to what yaml.safe_dump accepts
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, ActuationConfig):
        return value.value
    if hasattr(value, "item") and not isinstance(value, (str, bytes)):
        return value.item()
    return value


def merge(base: T.Dict[str, T.Any], update: T.Mapping[str, T.Any]) -> T.Dict[str, T.Any]:
    """
    Recursively merge 'update' into a copy of 'base'

    >>> merge({'a': {'b': 1, 'c': 2}}, {'a': {'c': 3}})
    {'a': {'b': 1, 'c': 3}}
    """
    out = dict(base)
    for k, v in update.items():
        if isinstance(v, T.Mapping) and isinstance(out.get(k), T.Mapping):
            out[k] = merge(out[k], v)
        else:
            out[k] = v
    return out


def _parse_yaml(text: str, source: str) -> T.Dict[str, T.Any]:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        where = f"{source}:{mark.line + 1}:{mark.column + 1}" if mark else source
        problem = getattr(e, "problem", None) or str(e)
        raise ConfigError(f"{where}: {problem}") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: expected a mapping of sections, got {type(data).__name__}")
    return data


def read_yaml(path: T.Union[str, pathlib.Path]) -> T.Dict[str, T.Any]:
    """
    Read a YAML config file

    Raises:
        :class:`ConfigError` naming the file (and line, for syntax errors)
    """
    path = pathlib.Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} does not exist")
    return _parse_yaml(path.read_text(), str(path))


def default_plant() -> T.Dict[str, T.Any]:
    """Plant parameters shipped with the package"""
    data = pkgutil.get_data("areapo", "data/plant.yaml")
    if data is None:
        raise ConfigError("could not find the packaged plant.yaml")
    return _parse_yaml(data.decode("utf-8"), "areapo/data/plant.yaml").get("plant", {})


def parse_override(text: str) -> T.Dict[str, T.Any]:
    """
    Convert ``section.key=value`` to a nested mapping, the value is parsed as
    YAML

    >>> parse_override('learner.tau=1.5')
    {'learner': {'tau': 1.5}}
    >>> parse_override('environment.reward.Q_diag=[1, 1, 1, 1]')
    {'environment': {'reward': {'Q_diag': [1, 1, 1, 1]}}}
    """
    if "=" not in text:
        raise ConfigError(f"override '{text}' is not of the form section.key=value")
    key, value = text.split("=", 1)
    parts = [p for p in key.strip().split(".") if p]
    if not parts:
        raise ConfigError(f"override '{text}' has an empty key")
    out: T.Any = _parse_yaml(f"v: {value}", f"--set {text}")["v"]
    for p in reversed(parts):
        out = {p: out}
    return out


def _build(cls, data: T.Any, section: str):
    # Construct a dataclass from a mapping, rejecting unknown keys
    if data is None:
        data = {}
    if not isinstance(data, T.Mapping):
        raise ConfigError(f"'{section}' must be a mapping, got {data!r}")

    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(fields)
    if unknown:
        raise ConfigError(
            f"unknown keys {sorted(unknown)} in '{section}', expected some of {sorted(fields)}"
        )

    kwargs = {}
    for k, v in data.items():
        if isinstance(v, list) and k != "impulses":
            v = tuple(v)
        kwargs[k] = v
    try:
        return cls(**kwargs)
    except (AreapoError, TypeError, ValueError) as e:
        raise ConfigError(f"'{section}': {e}") from e


def build_config(data: T.Mapping[str, T.Any]) -> RunConfig:
    """
    Build a :class:`RunConfig` from a (merged) mapping of sections
    """
    unknown = set(data) - set(SECTIONS)
    if unknown:
        raise ConfigError(f"unknown config sections {sorted(unknown)}, expected {SECTIONS}")

    try:
        task = ActuationConfig(data.get("task", "pendubot"))
    except ValueError:
        raise ConfigError(
            f"unknown task {data.get('task')!r}, choose from "
            f"{[a.value for a in ActuationConfig]}"
        )

    plant = _build(ModelParams, data.get("plant"), "plant")

    env_data = dict(data.get("environment") or {})
    env_fields = {"reward", "reset", "observation", "control_dt", "substeps"}
    unknown = set(env_data) - env_fields
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)} in 'environment'")
    try:
        env = EnvSpec(
            task=task,
            params=plant,
            reward=_build(RewardSpec, env_data.get("reward"), "environment.reward"),
            reset=_build(ResetSpec, env_data.get("reset"), "environment.reset"),
            observation=_build(
                ObservationSpec, env_data.get("observation"), "environment.observation"
            ),
            control_dt=float(env_data.get("control_dt", 0.01)),
            substeps=int(env_data.get("substeps", 5)),
        )
    except (TypeError, ValueError) as e:
        raise ConfigError(f"'environment': {e}") from e
    if not (env.control_dt > 0 and env.substeps >= 1):
        raise ConfigError("'environment': control_dt and substeps must be positive")

    eval_data = dict(data.get("evaluation") or {})
    unknown = set(eval_data) - {"thresholds", "normalizers", "duration"}
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)} in 'evaluation'")
    evaluation = EvaluationSettings(
        thresholds=_build(CriteriaThresholds, eval_data.get("thresholds"), "evaluation.thresholds"),
        normalizers=_build(ScoreNormalizers, eval_data.get("normalizers"), "evaluation.normalizers"),
        duration=float(eval_data.get("duration", 10.0)),
    )

    return RunConfig(
        task=task,
        env=env,
        learner=_build(LearnerConfig, data.get("learner"), "learner"),
        evaluation=evaluation,
        sweep=_build(SweepConfig, data.get("sweep"), "sweep"),
        run=_build(RunSettings, data.get("run"), "run"),
    )


def load_config(
    paths: T.Sequence[T.Union[str, pathlib.Path]] = (),
    overrides: T.Sequence[str] = (),
    task: T.Optional[str] = None,
    seed: T.Optional[int] = None,
    frames: T.Optional[int] = None,
    output: T.Optional[str] = None,
) -> RunConfig:
    """
    Load a layered configuration

    Args:
        paths: YAML files, later files override earlier ones
        overrides: ``section.key=value`` strings
        task: Task override
        seed: Seed override
        frames: Frame budget override
        output: Output directory override

    Returns:
        :class:`RunConfig`
    """
    data: T.Dict[str, T.Any] = {"plant": default_plant()}
    for p in paths:
        data = merge(data, read_yaml(p))
    for o in overrides:
        data = merge(data, parse_override(o))

    flags: T.Dict[str, T.Any] = {}
    if task is not None:
        flags["task"] = task
    if seed is not None:
        flags.setdefault("run", {})["seed"] = seed
    if output is not None:
        flags.setdefault("run", {})["output"] = str(output)
    if frames is not None:
        flags["learner"] = {"total_frames": frames}
    data = merge(data, flags)

    return build_config(data)


def load_noise_config(path: T.Union[str, pathlib.Path]) -> NoiseSpec:
    """
    Read a :class:`~areapo.evaluation.NoiseSpec` from YAML, either at the top
    level or under a ``noise`` key
    """
    data = read_yaml(path)
    if "noise" in data:
        data = data["noise"]
    return _build(NoiseSpec, data, f"{path}")
