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

from areapo.evaluation import *
from areapo.dynamics import ActuationConfig
from areapo.environment import EnvSpec, ResetSpec, RunningStats
from areapo.errors import ConfigError, InvalidInputError
from areapo.io import Checkpoint
from areapo.network import CriticHead, PolicyHead

import dataclasses
import numpy
import pandas
import pytest
import xarray


@pytest.fixture
def upright_spec(params):
    # Starts balanced at the unstable equilibrium
    return EnvSpec(
        task=ActuationConfig.PENDUBOT,
        params=params,
        reset=ResetSpec(start_state=(numpy.pi, 0.0, 0.0, 0.0)),
    )


def synthetic(torque, qd_active, task=ActuationConfig.PENDUBOT, dt=0.01, upright=None):
    torque = numpy.asarray(torque, dtype="f8")
    n = torque.size
    x = numpy.zeros((n, 4))
    x[:, 2 + task.active_joint] = qd_active
    if upright is not None:
        x[upright, 0] = numpy.pi
        x[upright, 2 + task.active_joint] = 0.0
    return make_trajectory(x, torque, numpy.zeros(n), dt, task)


def test_make_trajectory():
    traj = synthetic(numpy.ones(5), 0.0)

    assert isinstance(traj, xarray.Dataset)
    numpy.testing.assert_allclose(traj.time, [0.01, 0.02, 0.03, 0.04, 0.05])
    assert traj.attrs["task"] == "pendubot"
    assert traj.attrs["dt"] == 0.01
    assert traj["qd1"].attrs["units"] == "rad/s"


def test_criteria_closed_form():
    traj = synthetic(numpy.ones(100), 2.0)
    report = compute_criteria(traj)

    assert report.energy == pytest.approx(2.0, abs=1e-9)
    assert report.torque_cost == pytest.approx(1.0, abs=1e-9)
    assert report.torque_smoothness == pytest.approx(0.0, abs=1e-9)
    assert report.velocity_cost == pytest.approx(4.0, abs=1e-9)
    assert not report.success
    assert report.score == 0.0


def test_criteria_acrobot_energy():
    traj = synthetic(numpy.full(100, -1.0), 2.0, task=ActuationConfig.ACROBOT)
    assert compute_criteria(traj).energy == pytest.approx(2.0, abs=1e-9)


def test_criteria_smoothness():
    traj = synthetic(numpy.tile([0.0, 1.0], 50), 0.0)
    assert compute_criteria(traj).torque_smoothness == pytest.approx(1.0, abs=1e-9)


def test_criteria_hanging():
    traj = synthetic(numpy.zeros(1000), 0.0)
    report = compute_criteria(traj)

    assert not report.success
    assert report.score == 0
    assert report.swingup_time == pytest.approx(10.0)
    for name in CRITERIA:
        assert getattr(report, name) >= 0


def test_criteria_swingup_time():
    traj = synthetic(numpy.zeros(500), 0.0, upright=slice(300, None))
    report = compute_criteria(traj)

    assert report.success
    assert report.swingup_time == pytest.approx(3.01)
    assert 0 < report.score <= 1

    # Upright for the last 0.5 s only
    traj = synthetic(numpy.zeros(500), 0.0, upright=slice(450, None))
    assert not compute_criteria(traj).success

    # Upright in the middle, fallen at the end
    traj = synthetic(numpy.zeros(500), 0.0, upright=slice(100, 400))
    assert not compute_criteria(traj).success


def test_criteria_wrapped_angles():
    traj = synthetic(numpy.zeros(200), 0.0, upright=slice(None))
    traj["q1"] = traj["q1"] - 4 * numpy.pi
    traj["q2"] = traj["q2"] + 2 * numpy.pi

    report = compute_criteria(traj)
    assert report.success
    assert report.swingup_time == pytest.approx(0.01)


def test_criteria_empty():
    traj = make_trajectory(numpy.zeros((0, 4)), [], [], 0.01, "pendubot")
    with pytest.raises(InvalidInputError):
        compute_criteria(traj)


def test_criteria_missing_attrs():
    # As read back from a CSV file
    traj = synthetic(numpy.ones(10), 0.0)
    traj.attrs = {}
    with pytest.raises(InvalidInputError, match="task"):
        compute_criteria(traj)

    # dt comes from the time axis when there are two rows or more
    traj.attrs = {"task": "pendubot"}
    assert compute_criteria(traj).torque_cost == pytest.approx(0.1)

    one = synthetic([1.0], 0.0)
    one.attrs = {"task": "pendubot"}
    with pytest.raises(InvalidInputError, match="dt"):
        compute_criteria(one)

    one.attrs["dt"] = 0.01
    assert compute_criteria(one).torque_cost == pytest.approx(0.01)


def test_aggregate_score():
    failed = CriteriaReport(False, 0, 0, 0, 0, 0, score=0.0)
    assert aggregate_score(failed) == 0.0

    perfect = CriteriaReport(True, 0, 0, 0, 0, 0, score=0.0)
    assert aggregate_score(perfect) == 1.0

    n = ScoreNormalizers()
    half = CriteriaReport(
        True,
        n.swingup_time / 2,
        n.energy / 2,
        n.torque_cost / 2,
        n.torque_smoothness / 2,
        n.velocity_cost / 2,
        score=0.0,
    )
    assert aggregate_score(half, n) == 0.5

    # Costs beyond the normalizer saturate
    worst = CriteriaReport(True, 1e9, 1e9, 1e9, 1e9, 1e9, score=0.0)
    assert aggregate_score(worst) == 0.0


def test_aggregate_score_monotone():
    base = CriteriaReport(True, 2.0, 20.0, 2.0, 0.02, 200.0, score=0.0)
    score = aggregate_score(base)

    for name in CRITERIA:
        worse = dataclasses.replace(base, **{name: getattr(base, name) * 1.5})
        assert aggregate_score(worse) < score


def test_normalizers_invalid():
    with pytest.raises(ConfigError):
        ScoreNormalizers(energy=0.0)
    with pytest.raises(ConfigError):
        ScoreNormalizers(swingup_time=-1.0)


def test_noise_spec_invalid():
    with pytest.raises(ConfigError):
        NoiseSpec(velocity_noise_std=-0.1)
    with pytest.raises(ConfigError):
        NoiseSpec(delay_steps=-1)
    with pytest.raises(ConfigError):
        NoiseSpec(torque_response=0.0)
    with pytest.raises(ConfigError):
        NoiseSpec(impulses=[{"time": 1.0, "joint": 2, "magnitude": 1.0, "duration": 0.1}])

    with pytest.raises(ConfigError, match="mass1"):
        NoiseSpec(model_scaling={"mass1": 1.1})
    assert NoiseSpec(model_scaling={"mass_1": 1.1}).model_scaling == {"mass_1": 1.1}

    spec = NoiseSpec(impulses=[{"time": 1.0, "joint": 1, "magnitude": 1.0, "duration": 0.1}])
    assert spec.impulses == [Impulse(1.0, 1, 1.0, 0.1)]


def test_run_episode_deterministic(env_spec):
    rng = numpy.random.default_rng(0)
    policy = PolicyHead.init(rng, hidden=(8, 8))
    stats = RunningStats()
    stats.update(rng.normal(size=(20, 4)))
    ckpt = Checkpoint(policy, CriticHead.init(rng, hidden=(8, 8)), stats)

    a = run_episode(ckpt, env_spec, duration=1.0)
    b = run_episode(PolicyController(policy, stats), env_spec, duration=1.0)

    xarray.testing.assert_identical(a, b)
    assert a.sizes["time"] == 100
    # Frozen statistics
    assert stats.count == 20


def test_run_episode_zero_delay(env_spec):
    controller = ConstantController(0.3)
    a = run_episode(controller, env_spec, duration=1.0)
    b = run_episode(controller, env_spec, NoiseSpec(delay_steps=0), duration=1.0)
    xarray.testing.assert_identical(a, b)


def test_run_episode_delay(env_spec):
    traj = run_episode(ConstantController(0.5), env_spec, NoiseSpec(delay_steps=2), duration=0.1)
    numpy.testing.assert_allclose(traj.torque.values[:4], [0.0, 0.0, 3.0, 3.0])


def test_run_episode_torque_response(env_spec):
    traj = run_episode(
        ConstantController(1.0), env_spec, NoiseSpec(torque_response=0.5), duration=0.05
    )
    numpy.testing.assert_allclose(traj.torque.values[:3], [3.0, 4.5, 5.25])


def test_run_episode_actuation(params):
    spec = EnvSpec(task=ActuationConfig.ACROBOT, params=params)
    traj = run_episode(ConstantController(-2.0), spec, duration=0.5)

    # Clamped to the torque limit
    numpy.testing.assert_allclose(traj.torque.values, -6.0)
    assert traj.attrs["task"] == "acrobot"


def test_run_episode_velocity_noise(env_spec):
    controller = PolicyController(
        PolicyHead.init(numpy.random.default_rng(1), hidden=(8, 8)), RunningStats()
    )
    a = run_episode(controller, env_spec, NoiseSpec(velocity_noise_std=0.3, seed=4), duration=0.5)
    b = run_episode(controller, env_spec, NoiseSpec(velocity_noise_std=0.3, seed=4), duration=0.5)
    c = run_episode(controller, env_spec, NoiseSpec(velocity_noise_std=0.3, seed=5), duration=0.5)

    xarray.testing.assert_identical(a, b)
    assert not numpy.array_equal(a.torque.values, c.torque.values)


def test_run_episode_disturbances(env_spec):
    controller = ConstantController(0.0)
    nominal = run_episode(controller, env_spec, duration=1.0)

    kicked = run_episode(
        controller,
        env_spec,
        NoiseSpec(impulses=[Impulse(time=0.2, joint=1, magnitude=1.0, duration=0.05)]),
        duration=1.0,
    )
    # Nothing happens before the impulse
    xarray.testing.assert_identical(nominal.isel(time=slice(0, 20)), kicked.isel(time=slice(0, 20)))
    assert not numpy.allclose(nominal.q2.values, kicked.q2.values)
    # The reported torque is the motor's, not the impulse
    numpy.testing.assert_array_equal(kicked.torque.values, 0.0)

    heavier = run_episode(
        ConstantController(0.5), env_spec, NoiseSpec(model_scaling={"mass_2": 1.2}), duration=1.0
    )
    normal = run_episode(ConstantController(0.5), env_spec, duration=1.0)
    assert not numpy.allclose(heavier.q1.values, normal.q1.values)


def test_run_episode_invalid(env_spec):
    with pytest.raises(InvalidInputError):
        run_episode(ConstantController(0.0), env_spec, duration=0.001)


def test_evaluate_upright(upright_spec):
    report, traj = evaluate(ConstantController(0.0), upright_spec, duration=2.0)

    assert report.success
    assert report.swingup_time == pytest.approx(0.01)
    assert report.score > 0.9
    assert traj.sizes["time"] == 200


def test_sweep_points():
    sweep = SweepConfig(noise_repeats=2, perturbation_seeds=3)
    points = sweep_points(sweep)

    counts = pandas.Series([p.category for p in points]).value_counts()
    assert counts["model"] == 6 * 4
    assert counts["velocity_noise"] == 5 * 2
    assert counts["torque_noise"] == 5 * 2
    assert counts["torque_response"] == 4
    assert counts["delay"] == 5
    assert counts["perturbations"] == 3

    # Same seeds, same impulses
    again = sweep_points(sweep, ["perturbations"])
    assert [p.noise.impulses for p in again] == [
        p.noise.impulses for p in points if p.category == "perturbations"
    ]
    for p in again:
        for imp in p.noise.impulses:
            assert 1.0 <= imp.time <= 8.0
            assert abs(imp.magnitude) == 0.5


def test_sweep_config_invalid():
    with pytest.raises(ConfigError):
        SweepConfig(model_factors=(0.0,))
    with pytest.raises(ConfigError):
        SweepConfig(torque_response=(1.5,))
    with pytest.raises(ConfigError):
        SweepConfig(perturbation_window=(5.0, 1.0))
    with pytest.raises(ConfigError, match="mass1"):
        SweepConfig(model_parameters=("mass_2", "mass1"))


def test_robustness_zero_severity(upright_spec):
    report = robustness_suite(
        ConstantController(0.0), upright_spec, SweepConfig.zero(duration=2.0), parallel=False
    )

    assert list(report.categories) == CATEGORIES
    for c in CATEGORIES:
        assert report.categories[c] == 1.0
    assert report.overall == 1.0
    assert (report.points.error == "").all()


def test_robustness_zero_torque(env_spec):
    sweep = SweepConfig(
        model_parameters=("mass_1",),
        model_factors=(0.9,),
        velocity_noise=(0.1,),
        torque_noise=(0.1,),
        torque_response=(0.5,),
        delay_steps=(1,),
        perturbation_seeds=2,
        perturbation_window=(0.2, 1.0),
        duration=1.5,
    )
    report = robustness_suite(ConstantController(0.0), env_spec, sweep)

    for c in CATEGORIES:
        assert report.categories[c] == 0.0
    assert report.overall == 0.0


def test_robustness_overall(upright_spec):
    sweep = SweepConfig.zero(
        velocity_noise=(0.0, 0.5),
        torque_noise=(0.0, 2.0),
        duration=3.0,
    )
    report = robustness_suite(
        PolicyController(PolicyHead.init(numpy.random.default_rng(0), hidden=(4,)), RunningStats()),
        upright_spec,
        sweep,
        parallel=False,
    )

    by_category = report.points.groupby("category").success.mean()
    for c in CATEGORIES:
        assert report.categories[c] == pytest.approx(by_category[c], abs=1e-12)
    assert report.overall == pytest.approx(
        numpy.mean([by_category[c] for c in CATEGORIES]), abs=1e-12
    )


def test_robustness_parallel_matches_serial(env_spec):
    sweep = SweepConfig(
        model_parameters=("mass_2",),
        model_factors=(0.8, 1.2),
        velocity_noise=(0.2,),
        torque_noise=(0.2,),
        torque_response=(0.5,),
        delay_steps=(2,),
        perturbation_seeds=2,
        duration=1.0,
    )
    controller = ConstantController(0.4)

    serial = robustness_suite(controller, env_spec, sweep, parallel=False)
    threaded = robustness_suite(controller, env_spec, sweep, parallel=True)

    pandas.testing.assert_frame_equal(serial.points, threaded.points)


def test_robustness_categories(env_spec, caplog):
    sweep = SweepConfig.zero(duration=0.5)

    report = robustness_suite(
        ConstantController(0.0), env_spec, sweep, categories=["delay", "model"], parallel=False
    )
    assert list(report.categories) == ["model", "delay"]
    assert "running only" in caplog.text

    with pytest.raises(ConfigError):
        robustness_suite(ConstantController(0.0), env_spec, sweep, categories=["wind"])
    with pytest.raises(ConfigError, match="no robustness categories"):
        robustness_suite(ConstantController(0.0), env_spec, sweep, categories=[])


def test_robustness_failed_point(env_spec):
    class Exploding:
        def __call__(self, obs):
            return numpy.nan

    sweep = SweepConfig.zero(duration=0.5)
    report = robustness_suite(Exploding(), env_spec, sweep, categories=["delay"], parallel=False)

    assert report.categories == {"delay": 0.0}
    assert report.points.error.iloc[0] != ""


def test_export_report(tmp_path, upright_spec):
    criteria, _ = evaluate(ConstantController(0.0), upright_spec, duration=2.0)
    robustness = robustness_suite(
        ConstantController(0.0), upright_spec, SweepConfig.zero(duration=2.0), parallel=False
    )

    written = export_report(tmp_path / "out", [criteria], [robustness], labels=["zero"])

    names = sorted(p.name for p in written)
    assert names == ["criteria.csv", "robustness.csv", "robustness.svg", "robustness_points.csv"]

    table = pandas.read_csv(tmp_path / "out" / "robustness.csv")
    assert list(table.columns) == ["label", *CATEGORIES, "overall"]
    assert table.label[0] == "zero"
    assert table.overall[0] == 1.0

    crit = pandas.read_csv(tmp_path / "out" / "criteria.csv")
    assert bool(crit.success[0])
    assert crit.score[0] == pytest.approx(criteria.score)


def test_export_report_empty(tmp_path):
    export_report(tmp_path)

    assert (tmp_path / "criteria.csv").read_text().strip() == ",".join(
        ["label", "success", *CRITERIA, "score"]
    )
    assert pandas.read_csv(tmp_path / "robustness.csv").empty
