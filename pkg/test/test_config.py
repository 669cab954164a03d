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

from areapo.config import *
from areapo.dynamics import ActuationConfig
from areapo.errors import ConfigError
from areapo.evaluation import Impulse

import pathlib

import pytest


def test_merge():
    base = {"learner": {"tau": 1.0, "n_envs": 4}, "task": "acrobot"}
    out = merge(base, {"learner": {"tau": 2.0}, "run": {"seed": 3}})

    assert out == {
        "learner": {"tau": 2.0, "n_envs": 4},
        "task": "acrobot",
        "run": {"seed": 3},
    }
    # Input is left alone
    assert base["learner"]["tau"] == 1.0


def test_parse_override():
    assert parse_override("run.seed=4") == {"run": {"seed": 4}}
    assert parse_override("task=acrobot") == {"task": "acrobot"}
    assert parse_override("sweep.delay_steps=[1, 2]") == {"sweep": {"delay_steps": [1, 2]}}

    with pytest.raises(ConfigError, match="section.key=value"):
        parse_override("learner.tau")
    with pytest.raises(ConfigError, match="empty key"):
        parse_override("=1")


def test_read_yaml(tmpdir):
    with pytest.raises(ConfigError, match="does not exist"):
        read_yaml(tmpdir / "missing.yaml")

    (tmpdir / "empty.yaml").write("")
    assert read_yaml(tmpdir / "empty.yaml") == {}

    (tmpdir / "list.yaml").write("- 1\n- 2\n")
    with pytest.raises(ConfigError, match="expected a mapping"):
        read_yaml(tmpdir / "list.yaml")

    (tmpdir / "bad.yaml").write("learner:\n  tau: [1, 2\n")
    with pytest.raises(ConfigError, match="bad.yaml:"):
        read_yaml(tmpdir / "bad.yaml")


def test_defaults():
    config = load_config()

    assert config.task == ActuationConfig.PENDUBOT
    # Values from the packaged plant file
    assert config.plant.mass_1 == 0.5234
    assert config.plant.torque_limit == 6.0
    assert config.learner.tau == 2.0
    assert config.env.control_dt == 0.01
    assert config.env.substeps == 5
    assert config.run.seed is None


def test_layering(tmpdir):
    (tmpdir / "a.yaml").write("learner:\n  tau: 1.0\n  n_envs: 4\n  batch_size: 128\nrun:\n  seed: 1\n")
    (tmpdir / "b.yaml").write("task: acrobot\nlearner:\n  tau: 1.5\n")

    config = load_config([tmpdir / "a.yaml", tmpdir / "b.yaml"])
    assert config.learner.tau == 1.5
    assert config.learner.n_envs == 4
    assert config.task == ActuationConfig.ACROBOT
    assert config.env.task == ActuationConfig.ACROBOT
    assert config.run.seed == 1

    config = load_config(
        [tmpdir / "a.yaml", tmpdir / "b.yaml"],
        ["learner.tau=3", "plant.damping_1=0.01"],
        task="pendubot",
        seed=7,
        frames=2048,
    )
    assert config.learner.tau == 3
    assert config.plant.damping_1 == 0.01
    # Untouched plant values still come from the packaged file
    assert config.plant.mass_2 == 0.6755
    assert config.task == ActuationConfig.PENDUBOT
    assert config.run.seed == 7
    assert config.learner.total_frames == 2048


def test_invalid():
    with pytest.raises(ConfigError, match="unknown keys"):
        load_config(overrides=["learner.temperature=1"])
    with pytest.raises(ConfigError, match="unknown config sections"):
        load_config(overrides=["optimiser.lr=1"])
    with pytest.raises(ConfigError, match="unknown task"):
        load_config(task="cartpole")
    with pytest.raises(ConfigError, match="tau"):
        load_config(overrides=["learner.tau=-1"])
    with pytest.raises(ConfigError, match="environment.reset"):
        load_config(overrides=["environment.reset.p_trunc=2"])
    with pytest.raises(ConfigError, match="'plant' must be a mapping"):
        load_config(overrides=["plant=3"])


def test_output_dir(monkeypatch, tmpdir):
    monkeypatch.delenv(OUTPUT_ENV, raising=False)
    assert load_config().output_dir() == pathlib.Path("areapo-output")

    monkeypatch.setenv(OUTPUT_ENV, str(tmpdir / "env"))
    assert load_config().output_dir() == pathlib.Path(tmpdir / "env")
    assert load_config(output=str(tmpdir / "flag")).output_dir() == pathlib.Path(
        tmpdir / "flag"
    )


def test_resolved_round_trip(tmpdir):
    config = load_config(
        overrides=["learner.tau=0.5", "sweep.delay_steps=[2, 4]", "environment.reset.p_trunc=0.01"],
        task="acrobot",
        seed=11,
    )
    config.write(tmpdir / "config.yaml")

    again = load_config([tmpdir / "config.yaml"])
    assert again == config

    resolved = read_yaml(tmpdir / "config.yaml")
    assert list(resolved.keys()) == SECTIONS
    assert resolved["task"] == "acrobot"
    assert resolved["sweep"]["delay_steps"] == [2, 4]


def test_load_noise_config(tmpdir):
    (tmpdir / "noise.yaml").write(
        "noise:\n"
        "  velocity_noise_std: 0.2\n"
        "  delay_steps: 2\n"
        "  impulses:\n"
        "    - {time: 1.0, joint: 1, magnitude: 0.5, duration: 0.05}\n"
        "  model_scaling: {mass_2: 1.1}\n"
    )
    noise = load_noise_config(tmpdir / "noise.yaml")
    assert noise.velocity_noise_std == 0.2
    assert noise.delay_steps == 2
    assert noise.impulses == [Impulse(1.0, 1, 0.5, 0.05)]
    assert noise.model_scaling == {"mass_2": 1.1}

    (tmpdir / "flat.yaml").write("torque_response: 0.5\n")
    assert load_noise_config(tmpdir / "flat.yaml").torque_response == 0.5

    (tmpdir / "bad.yaml").write("torque_response: 2.0\n")
    with pytest.raises(ConfigError, match="torque_response"):
        load_noise_config(tmpdir / "bad.yaml")
