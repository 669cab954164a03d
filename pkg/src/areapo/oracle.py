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

"""Exact average-reward quantities on small finite MDPs

For a recurrent MDP and a stationary policy this computes the gain, the bias
value function, their entropy counterparts and the per-objective advantages
by dense linear solves. These are the ground truth the learner's estimators
are checked against.

Bias functions are only defined up to a constant, they are pinned with
``v[reference_state] = 0``.

MDP fixture files
=================

Plain text, ``#`` starts a comment::

    n_states = 2
    n_actions = 1
    expected_gain = 0.5      # optional, used by the self test
    transition
    0 1                      # p(.|s=0, a=0)
    1 0                      # p(.|s=1, a=0)
    reward
    0                        # r(s=0, .)
    1                        # r(s=1, .)

The transition block has one row per (state, action) pair in state-major
order, the reward block one row per state.
"""

import dataclasses
import logging
import pathlib
import typing as T

import numpy
import scipy.linalg
import scipy.sparse
import scipy.sparse.csgraph
import scipy.special

from .errors import NumericalError, PreconditionError

logger = logging.getLogger(__name__)

#: Tolerance on probability rows summing to one
PROBABILITY_TOL = 1e-12
#: Largest acceptable Bellman residual
RESIDUAL_TOL = 1e-10


@dataclasses.dataclass
class TabularMDP:
    """A finite MDP

    Attributes:
        transition: ``P[s, a, s']`` probabilities
        reward: ``r[s, a]``
        expected_gain: Optional known gain of the uniform policy, carried by
            fixtures
    """

    transition: numpy.ndarray
    reward: numpy.ndarray
    expected_gain: T.Optional[float] = None

    def __post_init__(self):
        self.transition = numpy.asarray(self.transition, dtype="f8")
        self.reward = numpy.asarray(self.reward, dtype="f8")

        if self.transition.ndim != 3 or self.transition.shape[0] != self.transition.shape[2]:
            raise PreconditionError(
                f"transition must have shape (S, A, S), got {self.transition.shape}"
            )
        if self.reward.shape != self.transition.shape[:2]:
            raise PreconditionError(
                f"reward must have shape {self.transition.shape[:2]}, got {self.reward.shape}"
            )
        if numpy.any(self.transition < 0):
            raise PreconditionError("transition probabilities must be non-negative")
        sums = self.transition.sum(axis=2)
        if numpy.max(numpy.abs(sums - 1)) > PROBABILITY_TOL:
            raise PreconditionError("transition rows must sum to 1")
        if not numpy.all(numpy.isfinite(self.reward)):
            raise PreconditionError("rewards must be finite")

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transition.shape[1]


@dataclasses.dataclass
class TabularPolicy:
    """A stationary policy ``probs[s, a]``"""

    probs: numpy.ndarray

    def __post_init__(self):
        self.probs = numpy.asarray(self.probs, dtype="f8")
        if self.probs.ndim != 2:
            raise PreconditionError("policy table must be 2 dimensional")
        if numpy.any(self.probs < 0):
            raise PreconditionError("policy probabilities must be non-negative")
        if numpy.max(numpy.abs(self.probs.sum(axis=1) - 1)) > PROBABILITY_TOL:
            raise PreconditionError("policy rows must sum to 1")

    @classmethod
    def uniform(cls, n_states: int, n_actions: int) -> "TabularPolicy":
        return cls(numpy.full((n_states, n_actions), 1.0 / n_actions))

    @classmethod
    def deterministic(cls, actions: T.Sequence[int], n_actions: int) -> "TabularPolicy":
        probs = numpy.zeros((len(actions), n_actions))
        probs[numpy.arange(len(actions)), actions] = 1.0
        return cls(probs)


@dataclasses.dataclass
class OracleResult:
    """Exact quantities for one MDP, policy and temperature

    Attributes:
        stationary: Stationary state distribution
        gain: Average reward
        bias: Bias value function, ``bias[reference] = 0``
        entropy_gain: Average of ``-tau log pi``
        entropy_bias: Entropy bias function
        reward_advantage: ``A[s, a]``
        entropy_advantage: ``A_H[s, a]``
        soft_advantage: ``A + A_H``, computed from 'soft_reward' and
            'soft_bias'
        soft_reward: ``r - tau log pi - (gain + entropy_gain)``
        soft_bias: ``bias + entropy_bias``
    """

    stationary: numpy.ndarray
    gain: float
    bias: numpy.ndarray
    entropy_gain: float
    entropy_bias: numpy.ndarray
    reward_advantage: numpy.ndarray
    entropy_advantage: numpy.ndarray
    soft_advantage: numpy.ndarray
    soft_reward: numpy.ndarray
    soft_bias: numpy.ndarray


def _check_shapes(mdp: TabularMDP, policy: TabularPolicy) -> None:
    if policy.probs.shape != (mdp.n_states, mdp.n_actions):
        raise PreconditionError(
            f"policy shape {policy.probs.shape} does not match MDP "
            f"({mdp.n_states}, {mdp.n_actions})"
        )


def policy_transition(mdp: TabularMDP, policy: TabularPolicy) -> numpy.ndarray:
    """State transition matrix ``P_pi[s, s']`` induced by the policy"""
    _check_shapes(mdp, policy)
    return numpy.einsum("sa,sat->st", policy.probs, mdp.transition)


def check_irreducible(p_pi: numpy.ndarray) -> None:
    """
    Raise :class:`PreconditionError` unless the chain is irreducible

    The error names the states that can't be reached from state 0 (or, if
    everything is reachable, the states that can't get back to it)
    """
    graph = scipy.sparse.csr_matrix(p_pi > 0)
    n_components, _ = scipy.sparse.csgraph.connected_components(
        graph, directed=True, connection="strong"
    )
    if n_components == 1:
        return

    n = p_pi.shape[0]
    reached = scipy.sparse.csgraph.breadth_first_order(
        graph, 0, directed=True, return_predecessors=False
    )
    unreachable = sorted(set(range(n)) - set(reached.tolist()))
    if unreachable:
        raise PreconditionError(
            f"policy-induced chain is reducible, states {unreachable} "
            "are unreachable from state 0"
        )

    back = scipy.sparse.csgraph.breadth_first_order(
        graph.T.tocsr(), 0, directed=True, return_predecessors=False
    )
    stuck = sorted(set(range(n)) - set(back.tolist()))
    raise PreconditionError(
        f"policy-induced chain is reducible, state 0 is unreachable from states {stuck}"
    )


def _solve(a: numpy.ndarray, b: numpy.ndarray, what: str) -> numpy.ndarray:
    try:
        lu = scipy.linalg.lu_factor(a, check_finite=True)
    except (ValueError, scipy.linalg.LinAlgError) as e:
        raise NumericalError(f"could not factor the {what} system", {"error": e})
    if numpy.any(numpy.abs(numpy.diag(lu[0])) < 1e-14):
        raise NumericalError(
            f"singular {what} system", {"min_pivot": numpy.min(numpy.abs(numpy.diag(lu[0])))}
        )
    return scipy.linalg.lu_solve(lu, b)


def stationary_distribution(mdp: TabularMDP, policy: TabularPolicy) -> numpy.ndarray:
    """
    Stationary distribution d of the policy-induced chain

    Solves ``d^T P_pi = d^T`` with ``sum(d) = 1``

    >>> mdp = TabularMDP([[[0, 1]], [[1, 0]]], [[0], [1]])
    >>> stationary_distribution(mdp, TabularPolicy.uniform(2, 1))
    array([0.5, 0.5])
    """
    p_pi = policy_transition(mdp, policy)
    check_irreducible(p_pi)

    n = mdp.n_states
    a = p_pi.T - numpy.eye(n)
    a[-1, :] = 1.0
    b = numpy.zeros(n)
    b[-1] = 1.0
    return _solve(a, b, "stationary distribution")


def _policy_reward(policy: TabularPolicy, reward: numpy.ndarray) -> numpy.ndarray:
    # Expected reward per state, zero-probability actions contribute nothing
    return numpy.sum(numpy.where(policy.probs > 0, policy.probs * reward, 0.0), axis=1)


def entropy_reward(policy: TabularPolicy, tau: float) -> numpy.ndarray:
    """
    Entropy pseudo-reward ``-tau log pi(a|s)``, 0 where ``pi(a|s) = 0``
    """
    probs = policy.probs
    safe = numpy.where(probs > 0, probs, 1.0)
    return numpy.where(probs > 0, -tau * numpy.log(safe), 0.0)


def exact_gain(mdp: TabularMDP, policy: TabularPolicy, reward: numpy.ndarray = None) -> float:
    """
    Average reward of the policy

    >>> mdp = TabularMDP([[[0, 1]], [[1, 0]]], [[0], [1]])
    >>> exact_gain(mdp, TabularPolicy.uniform(2, 1))
    0.5

    Args:
        mdp: Recurrent MDP
        policy: Stationary policy
        reward: Use this reward table instead of the MDP's

    Returns:
        Gain, independent of the start state
    """
    if reward is None:
        reward = mdp.reward
    d = stationary_distribution(mdp, policy)
    return float(d @ _policy_reward(policy, reward))


def _bias(
    mdp: TabularMDP,
    policy: TabularPolicy,
    reward: numpy.ndarray,
    gain: float,
    reference_state: int,
    what: str,
) -> numpy.ndarray:
    p_pi = policy_transition(mdp, policy)
    r_pi = _policy_reward(policy, reward)
    n = mdp.n_states

    # (I - P) v = r - gain has rank n-1, swap one equation for v[ref] = 0
    a = numpy.eye(n) - p_pi
    b = r_pi - gain
    a[reference_state, :] = 0.0
    a[reference_state, reference_state] = 1.0
    b[reference_state] = 0.0
    v = _solve(a, b, what)

    residual = numpy.max(numpy.abs(v + gain - (r_pi + p_pi @ v)))
    if residual > RESIDUAL_TOL:
        raise NumericalError(
            f"{what} Bellman residual too large",
            {"residual": residual, "gain": gain},
        )
    return v


def exact_bias(
    mdp: TabularMDP,
    policy: TabularPolicy,
    gain: float = None,
    reference_state: int = 0,
    reward: numpy.ndarray = None,
) -> numpy.ndarray:
    """
    Bias value function v solving ``v(s) + gain = E[r + v(s')]``

    Args:
        mdp: Recurrent MDP
        policy: Stationary policy
        gain: Previously computed gain (computed if None)
        reference_state: State pinned to ``v = 0``
        reward: Use this reward table instead of the MDP's

    Returns:
        Per-state bias
    """
    if reward is None:
        reward = mdp.reward
    if gain is None:
        gain = exact_gain(mdp, policy, reward)
    else:
        check_irreducible(policy_transition(mdp, policy))
    return _bias(mdp, policy, reward, gain, reference_state, "bias")


def exact_entropy_gain(mdp: TabularMDP, policy: TabularPolicy, tau: float) -> float:
    """
    Average of ``-tau log pi`` under the policy

    >>> mdp = TabularMDP([[[1], [1]]], [[0, 0]])
    >>> round(exact_entropy_gain(mdp, TabularPolicy.uniform(1, 2), 1.0), 6)
    0.693147
    """
    d = stationary_distribution(mdp, policy)
    per_state = -tau * numpy.sum(scipy.special.xlogy(policy.probs, policy.probs), axis=1)
    return float(d @ per_state)


def exact_entropy_bias(
    mdp: TabularMDP,
    policy: TabularPolicy,
    tau: float,
    entropy_gain: float = None,
    reference_state: int = 0,
) -> numpy.ndarray:
    """
    Entropy bias function, :func:`exact_bias` with reward ``-tau log pi``
    """
    if entropy_gain is None:
        entropy_gain = exact_entropy_gain(mdp, policy, tau)
    else:
        check_irreducible(policy_transition(mdp, policy))
    h = entropy_reward(policy, tau)
    return _bias(mdp, policy, h, entropy_gain, reference_state, "entropy bias")


def advantage(
    mdp: TabularMDP, reward: numpy.ndarray, gain: float, bias: numpy.ndarray
) -> numpy.ndarray:
    """
    Bias advantage ``A[s, a] = r(s, a) - gain + E[v(s')] - v(s)``
    """
    return reward - gain + mdp.transition @ bias - bias[:, None]


def exact_soft_advantage(
    mdp: TabularMDP, policy: TabularPolicy, tau: float, reference_state: int = 0
) -> OracleResult:
    """
    Soft bias advantage and every quantity it is built from

    Both objectives are solved separately, the soft advantage is then
    recomputed from the soft differential reward and soft bias and checked
    against ``A + A_H``.

    Args:
        mdp: Recurrent MDP
        policy: Stationary policy
        tau: Entropy temperature
        reference_state: State where both bias functions are pinned to 0

    Returns:
        :class:`OracleResult`
    """
    d = stationary_distribution(mdp, policy)
    gain = float(d @ _policy_reward(policy, mdp.reward))
    bias = _bias(mdp, policy, mdp.reward, gain, reference_state, "bias")

    h = entropy_reward(policy, tau)
    entropy_gain = float(d @ _policy_reward(policy, h))
    entropy_bias = _bias(mdp, policy, h, entropy_gain, reference_state, "entropy bias")

    a = advantage(mdp, mdp.reward, gain, bias)
    a_h = advantage(mdp, h, entropy_gain, entropy_bias)

    soft_reward = mdp.reward + h - (gain + entropy_gain)
    soft_bias = bias + entropy_bias
    soft = soft_reward + mdp.transition @ soft_bias - soft_bias[:, None]

    mismatch = numpy.max(numpy.abs(soft - (a + a_h)))
    if mismatch > 1e-12:
        raise NumericalError(
            "soft advantage does not decompose into reward and entropy parts",
            {"mismatch": mismatch},
        )

    return OracleResult(
        stationary=d,
        gain=gain,
        bias=bias,
        entropy_gain=entropy_gain,
        entropy_bias=entropy_bias,
        reward_advantage=a,
        entropy_advantage=a_h,
        soft_advantage=soft,
        soft_reward=soft_reward,
        soft_bias=soft_bias,
    )


def random_mdp(
    n_states: int, n_actions: int, rng: numpy.random.Generator
) -> TabularMDP:
    """
    A random MDP with strictly positive transitions, so every policy is
    recurrent

    Rewards are uniform on [0, 1)
    """
    transition = rng.dirichlet(numpy.ones(n_states), size=(n_states, n_actions))
    # Dirichlet rows can underflow to 0, keep them strictly positive
    transition = transition + 1e-3
    transition /= transition.sum(axis=2, keepdims=True)
    return TabularMDP(transition, rng.random((n_states, n_actions)))


def random_policy(
    n_states: int, n_actions: int, rng: numpy.random.Generator
) -> TabularPolicy:
    """A random stochastic policy with every action probability positive"""
    probs = rng.dirichlet(numpy.ones(n_actions), size=n_states) + 1e-3
    return TabularPolicy(probs / probs.sum(axis=1, keepdims=True))


def _sample_rows(cdf: numpy.ndarray, rng: numpy.random.Generator) -> numpy.ndarray:
    u = rng.random(cdf.shape[0])
    idx = numpy.sum(cdf < u[:, None], axis=1)
    return numpy.minimum(idx, cdf.shape[1] - 1)


def sample_rollout(
    mdp: TabularMDP,
    policy: TabularPolicy,
    states: numpy.ndarray,
    steps: int,
    rng: numpy.random.Generator,
) -> T.Dict[str, numpy.ndarray]:
    """
    Simulate independent chains in parallel

    Args:
        mdp: MDP to simulate
        policy: Policy to act with
        states: Start state of each chain, ``[n]``
        steps: Steps to simulate
        rng: Random generator

    Returns:
        Dict with ``states``, ``actions``, ``rewards`` and ``log_probs``, each
        ``[steps, n]``, and ``next_states``, ``[steps, n]`` (the last row is
        where each chain ends up)
    """
    states = numpy.asarray(states, dtype="i8")
    n = states.shape[0]
    policy_cdf = numpy.cumsum(policy.probs, axis=1)
    transition_cdf = numpy.cumsum(mdp.transition, axis=2)

    out = {
        k: numpy.zeros((steps, n), dtype=t)
        for k, t in [
            ("states", "i8"),
            ("actions", "i8"),
            ("rewards", "f8"),
            ("log_probs", "f8"),
            ("next_states", "i8"),
        ]
    }

    s = states
    for t in range(steps):
        a = _sample_rows(policy_cdf[s], rng)
        s_next = _sample_rows(transition_cdf[s, a], rng)
        out["states"][t] = s
        out["actions"][t] = a
        out["rewards"][t] = mdp.reward[s, a]
        out["log_probs"][t] = numpy.log(policy.probs[s, a])
        out["next_states"][t] = s_next
        s = s_next

    return out


def load_mdp(path: T.Union[str, pathlib.Path]) -> TabularMDP:
    """
    Read an MDP fixture file (see the module documentation for the format)
    """
    header: T.Dict[str, str] = {}
    blocks: T.Dict[str, T.List[T.List[float]]] = {"transition": [], "reward": []}
    current = None

    with open(path) as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line in blocks:
                current = line
                continue
            if "=" in line:
                key, value = (x.strip() for x in line.split("=", 1))
                header[key] = value
                continue
            if current is None:
                raise PreconditionError(f"{path}:{lineno}: unexpected line {line!r}")
            try:
                blocks[current].append([float(x) for x in line.split()])
            except ValueError:
                raise PreconditionError(f"{path}:{lineno}: could not parse {line!r}")

    try:
        n_states = int(header["n_states"])
        n_actions = int(header["n_actions"])
    except KeyError as e:
        raise PreconditionError(f"{path}: missing header {e}")

    try:
        transition = numpy.array(blocks["transition"]).reshape(
            n_states, n_actions, n_states
        )
        reward = numpy.array(blocks["reward"]).reshape(n_states, n_actions)
    except ValueError:
        raise PreconditionError(
            f"{path}: tables don't match n_states = {n_states}, n_actions = {n_actions}"
        )
    expected = header.get("expected_gain")

    return TabularMDP(
        transition, reward, None if expected is None else float(expected)
    )


def save_mdp(mdp: TabularMDP, path: T.Union[str, pathlib.Path]) -> None:
    """
    Write an MDP in the fixture format read by :func:`load_mdp`
    """
    with open(path, "w") as f:
        f.write(f"n_states = {mdp.n_states}\n")
        f.write(f"n_actions = {mdp.n_actions}\n")
        if mdp.expected_gain is not None:
            f.write(f"expected_gain = {mdp.expected_gain!r}\n")
        f.write("transition\n")
        for row in mdp.transition.reshape(-1, mdp.n_states):
            f.write(" ".join(repr(float(x)) for x in row) + "\n")
        f.write("reward\n")
        for row in mdp.reward:
            f.write(" ".join(repr(float(x)) for x in row) + "\n")
