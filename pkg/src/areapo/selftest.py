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

"""Health checks runnable from an installed package

Each check returns a :class:`CheckResult`. Checks are grouped as ``oracle``,
``physics``, ``gradient``, ``gae`` and ``reward``, and :func:`run_selftest`
can be limited to some groups.
"""

import dataclasses
import logging
import pathlib
import typing as T

import numpy

from . import oracle
from .dynamics import ModelParams, PendulumState, energy, forward_dynamics, integrate
from .environment import reward
from .errors import AreapoError
from .learner import GainEstimates, LearnerConfig, RolloutBatch, dual_gae
from .network import CriticHead, MlpParams, PolicyHead, log_prob_backward, mlp_backward, mlp_forward

logger = logging.getLogger(__name__)

FIXTURE_DIR = pathlib.Path(__file__).parent / "data" / "fixtures"

#: Fixtures checked when none are given
DEFAULT_FIXTURES = ["two_state_cycle.mdp", "three_state_choice.mdp"]

GROUPS = ["oracle", "physics", "gradient", "gae", "reward"]


@dataclasses.dataclass
class CheckResult:
    group: str
    name: str
    passed: bool
    detail: str = ""


def fixture_path(name: T.Union[str, pathlib.Path]) -> pathlib.Path:
    """A fixture file, either a path or the name of a packaged fixture"""
    path = pathlib.Path(name)
    if path.exists():
        return path
    packaged = FIXTURE_DIR / path.name
    if packaged.exists():
        return packaged
    raise FileNotFoundError(f"no MDP fixture {name}")


def _check(group: str, name: str, func: T.Callable[[], T.Tuple[bool, str]]) -> CheckResult:
    try:
        passed, detail = func()
    except (AreapoError, ArithmeticError, ValueError) as e:
        passed, detail = False, f"{type(e).__name__}: {e}"
    return CheckResult(group, name, bool(passed), detail)


def oracle_checks(
    fixtures: T.Sequence[T.Union[str, pathlib.Path]] = DEFAULT_FIXTURES,
    n_random: int = 20,
    seed: int = 0,
) -> T.List[CheckResult]:
    results = []

    for f in fixtures:
        path = fixture_path(f)

        def gain_check(path=path):
            mdp = oracle.load_mdp(path)
            policy = oracle.TabularPolicy.uniform(mdp.n_states, mdp.n_actions)
            gain = oracle.exact_gain(mdp, policy)
            if mdp.expected_gain is None:
                return True, f"gain {gain:.12g} (no expected value)"
            err = abs(gain - mdp.expected_gain)
            return err < 1e-9, f"gain {gain:.12g}, expected {mdp.expected_gain:.12g}"

        results.append(_check("oracle", f"fixture gain {path.name}", gain_check))

    rng = numpy.random.default_rng(seed)

    def random_checks():
        worst = {"bias residual": 0.0, "decomposition": 0.0, "mean advantage": 0.0}
        for _ in range(n_random):
            n_s = int(rng.integers(2, 11))
            n_a = int(rng.integers(1, 5))
            mdp = oracle.random_mdp(n_s, n_a, rng)
            policy = oracle.random_policy(n_s, n_a, rng)
            tau = float(rng.uniform(0.1, 2.0))
            res = oracle.exact_soft_advantage(mdp, policy, tau)

            p_pi = oracle.policy_transition(mdp, policy)
            r_pi = numpy.sum(policy.probs * mdp.reward, axis=1)
            h_pi = numpy.sum(policy.probs * oracle.entropy_reward(policy, tau), axis=1)
            worst["bias residual"] = max(
                worst["bias residual"],
                numpy.max(numpy.abs(res.bias + res.gain - r_pi - p_pi @ res.bias)),
                numpy.max(
                    numpy.abs(res.entropy_bias + res.entropy_gain - h_pi - p_pi @ res.entropy_bias)
                ),
            )
            worst["decomposition"] = max(
                worst["decomposition"],
                numpy.max(
                    numpy.abs(res.soft_advantage - res.reward_advantage - res.entropy_advantage)
                ),
            )
            worst["mean advantage"] = max(
                worst["mean advantage"],
                numpy.max(numpy.abs(numpy.sum(policy.probs * res.reward_advantage, axis=1))),
            )
        passed = (
            worst["bias residual"] < 1e-10
            and worst["decomposition"] < 1e-12
            and worst["mean advantage"] < 1e-10
        )
        return passed, ", ".join(f"{k} {v:.2e}" for k, v in worst.items())

    results.append(_check("oracle", f"{n_random} random MDPs", random_checks))
    return results


def _default_params() -> ModelParams:
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


def physics_checks(params: ModelParams = None) -> T.List[CheckResult]:
    if params is None:
        params = _default_params()
    params = ModelParams(
        **{
            **dataclasses.asdict(params),
            "damping_1": 0.0,
            "damping_2": 0.0,
            "coulomb_1": 0.0,
            "coulomb_2": 0.0,
        }
    )

    def equilibria():
        hanging = forward_dynamics(PendulumState(0, 0, 0, 0), [0, 0], params)
        upright = forward_dynamics(PendulumState(numpy.pi, 0, 0, 0), [0, 0], params)
        worst = max(numpy.max(numpy.abs(hanging)), numpy.max(numpy.abs(upright)))
        return worst < 1e-12, f"largest acceleration {worst:.2e}"

    def conservation():
        x = numpy.array([0.1, 0.0, 0.0, 0.0])
        e0 = energy(x, params)
        drift = 0.0
        for _ in range(10000):
            x = integrate(x, numpy.zeros(2), 1e-3, params)
            drift = max(drift, abs(energy(x, params) - e0))
        return drift < 1e-3, f"energy drift {drift:.2e} J over 10 s"

    return [
        _check("physics", "equilibria", equilibria),
        _check("physics", "energy conservation", conservation),
    ]


def _relative_error(a: numpy.ndarray, b: numpy.ndarray) -> float:
    # Gradients smaller than 1e-4 are compared absolutely, finite difference
    # rounding dominates there
    scale = numpy.maximum(numpy.abs(a) + numpy.abs(b), 1e-4)
    return float(numpy.max(numpy.abs(a - b) / scale))


def gradient_checks(seed: int = 0, h: float = 1e-5) -> T.List[CheckResult]:
    rng = numpy.random.default_rng(seed)
    obs = rng.normal(size=(8, 4))

    def mlp_check():
        net = MlpParams.init([4, 16, 16, 2], rng, output_gain=1.0)
        weights = rng.normal(size=(8, 2))

        def f():
            return float(numpy.sum(mlp_forward(net, obs)[0] * weights))

        _, cache = mlp_forward(net, obs)
        grads, _ = mlp_backward(net, cache, weights)
        worst = 0.0
        for k, p in net.parameters().items():
            fd = numpy.zeros_like(p)
            for i in numpy.ndindex(p.shape):
                old = p[i]
                p[i] = old + h
                up = f()
                p[i] = old - h
                down = f()
                p[i] = old
                fd[i] = (up - down) / (2 * h)
            worst = max(worst, _relative_error(grads[k], fd))
        return worst < 1e-4, f"max relative error {worst:.2e}"

    def policy_check():
        policy = PolicyHead(MlpParams.init([4, 16, 16, 1], rng, output_gain=1.0), -0.5)
        u = rng.normal(size=8)
        weights = rng.normal(size=8)

        def f():
            mean, _ = policy.mean(obs)
            z = (u - mean) * numpy.exp(-policy.log_std[0])
            lp = -0.5 * z ** 2 - policy.log_std[0] - 0.5 * numpy.log(2 * numpy.pi)
            return float(numpy.sum(weights * lp))

        mean, cache = policy.mean(obs)
        grads = log_prob_backward(policy, cache, mean, u, weights)
        worst = 0.0
        for k, p in policy.parameters().items():
            fd = numpy.zeros_like(p)
            for i in numpy.ndindex(p.shape):
                old = p[i]
                p[i] = old + h
                up = f()
                p[i] = old - h
                down = f()
                p[i] = old
                fd[i] = (up - down) / (2 * h)
            worst = max(worst, _relative_error(grads[k], fd))
        return worst < 1e-4, f"max relative error {worst:.2e}"

    def critic_check():
        critic = CriticHead(MlpParams.init([4, 16, 16, 2], rng, output_gain=1.0))
        targets = rng.normal(size=(8, 2))

        def f():
            v, _ = critic.values(obs)
            return float(numpy.sum((v - targets) ** 2))

        v, cache = critic.values(obs)
        grads = critic.backward(cache, 2 * (v - targets))
        worst = 0.0
        for k, p in critic.parameters().items():
            fd = numpy.zeros_like(p)
            for i in numpy.ndindex(p.shape):
                old = p[i]
                p[i] = old + h
                up = f()
                p[i] = old - h
                down = f()
                p[i] = old
                fd[i] = (up - down) / (2 * h)
            worst = max(worst, _relative_error(grads[k], fd))
        return worst < 1e-4, f"max relative error {worst:.2e}"

    return [
        _check("gradient", "mlp", mlp_check),
        _check("gradient", "policy log probability", policy_check),
        _check("gradient", "critic heads", critic_check),
    ]


def gae_checks() -> T.List[CheckResult]:
    def batch(rewards, values, last):
        steps = len(rewards)
        v = numpy.zeros((steps, 1, 2))
        v[:, 0, 0] = values
        lv = numpy.zeros((1, 2))
        lv[0, 0] = last
        return RolloutBatch(
            observations=numpy.zeros((steps, 1, 4)),
            actions=numpy.zeros((steps, 1)),
            pre_clamp=numpy.zeros((steps, 1)),
            log_prob_old=numpy.zeros((steps, 1)),
            rewards=numpy.asarray(rewards, dtype="f8").reshape(steps, 1),
            entropy_rewards=numpy.zeros((steps, 1)),
            values=v,
            truncated=numpy.zeros((steps, 1), dtype=bool),
            bootstrap_observations=numpy.full((steps, 1, 4), numpy.nan),
            bootstrap_values=numpy.full((steps, 1, 2), numpy.nan),
            last_values=lv,
            tau=0.0,
        )

    def hand_example():
        adv = dual_gae(
            batch([1.0, 0.0, 2.0], [0.5, 1.0, 0.0], 0.25),
            GainEstimates(0.5, 0.0),
            LearnerConfig(lambda_reward=0.8),
        )
        expected = numpy.array([0.92, -0.1, 1.75])
        err = float(numpy.max(numpy.abs(adv.advantages[:, 0] - expected)))
        return err < 1e-12, f"max error {err:.2e}"

    def zero_lambda():
        b = batch([1.0, 0.0, 2.0], [0.5, 1.0, 0.0], 0.25)
        adv = dual_gae(b, GainEstimates(0.5, 0.0), LearnerConfig(lambda_reward=0.0))
        delta = numpy.array([1.0 - 0.5 + 1.0 - 0.5, 0.0 - 0.5 + 0.0 - 1.0, 2.0 - 0.5 + 0.25])
        err = float(numpy.max(numpy.abs(adv.advantages[:, 0] - delta)))
        return err == 0.0, f"max error {err:.2e}"

    return [
        _check("gae", "hand example", hand_example),
        _check("gae", "zero lambda", zero_lambda),
    ]


def reward_checks() -> T.List[CheckResult]:
    def examples():
        values = [
            (reward([numpy.pi, 0, 0, 0], 0.0), 0.0),
            (reward([0, 0, 0, 0], 0.0), -0.001 * 50 * numpy.pi ** 2),
            (reward([numpy.pi, 0, 0, 0], 1.0), -0.001),
        ]
        err = max(abs(float(a) - b) for a, b in values)
        return err < 1e-15, f"max error {err:.2e}"

    return [_check("reward", "quadratic reward examples", examples)]


def run_selftest(
    groups: T.Sequence[str] = None,
    fixtures: T.Sequence[T.Union[str, pathlib.Path]] = None,
) -> T.List[CheckResult]:
    """
    Run the health checks

    Args:
        groups: Groups to run (all of :data:`GROUPS` by default)
        fixtures: MDP fixture files for the oracle group (the packaged ones
            by default)

    Returns:
        One :class:`CheckResult` per check
    """
    if groups is None:
        groups = GROUPS
    unknown = set(groups) - set(GROUPS)
    if unknown:
        raise ValueError(f"unknown self test groups {sorted(unknown)}, choose from {GROUPS}")

    results: T.List[CheckResult] = []
    if "oracle" in groups:
        results += oracle_checks(fixtures if fixtures else DEFAULT_FIXTURES)
    if "physics" in groups:
        results += physics_checks()
    if "gradient" in groups:
        results += gradient_checks()
    if "gae" in groups:
        results += gae_checks()
    if "reward" in groups:
        results += reward_checks()

    for r in results:
        log = logger.info if r.passed else logger.error
        log("%s: %s %s (%s)", r.group, r.name, "ok" if r.passed else "FAILED", r.detail)
    return results
