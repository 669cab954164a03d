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

"""Small fully connected networks with hand written backpropagation

Everything is double precision. Parameters of a model are exposed as a flat
``{name: array}`` mapping (see :meth:`MlpParams.parameters`), which is the
form the optimiser and the checkpoint writer work with.

Weights are stored ``[n_in, n_out]`` so a layer is ``x @ w + b`` for inputs
with any number of leading batch dimensions.
"""

import dataclasses
import logging
import typing as T

import numpy

from .errors import InvalidInputError, NumericalError
from .helpers import require_finite

logger = logging.getLogger(__name__)

LOG_2PI = numpy.log(2 * numpy.pi)


def orthogonal(
    n_in: int, n_out: int, gain: float, rng: numpy.random.Generator
) -> numpy.ndarray:
    """
    Random ``[n_in, n_out]`` matrix with orthonormal rows or columns, scaled by
    'gain'
    """
    a = rng.standard_normal((max(n_in, n_out), min(n_in, n_out)))
    q, r = numpy.linalg.qr(a)
    # Sign fix so the distribution is uniform over orthogonal matrices
    q = q * numpy.sign(numpy.diag(r))
    if n_in < n_out:
        q = q.T
    return gain * q


@dataclasses.dataclass
class MlpParams:
    """Weights of a ReLU network with an identity output layer

    >>> net = MlpParams([numpy.eye(2)], [numpy.zeros(2)])
    >>> net.sizes
    [2, 2]
    """

    weights: T.List[numpy.ndarray]
    biases: T.List[numpy.ndarray]
    #: Incremented whenever the parameters are replaced
    version: int = 0

    def __post_init__(self):
        self.weights = [numpy.asarray(w, dtype="f8") for w in self.weights]
        self.biases = [numpy.asarray(b, dtype="f8") for b in self.biases]

        if len(self.weights) == 0 or len(self.weights) != len(self.biases):
            raise InvalidInputError("need one bias per weight matrix")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise InvalidInputError(
                    f"layer {i}: weight {w.shape} and bias {b.shape} do not match"
                )
            if i > 0 and w.shape[0] != self.weights[i - 1].shape[1]:
                raise InvalidInputError(
                    f"layer {i} expects {w.shape[0]} inputs, "
                    f"previous layer gives {self.weights[i - 1].shape[1]}"
                )
            require_finite(f"layer {i} parameters", w, b)

    @classmethod
    def init(
        cls,
        sizes: T.Sequence[int],
        rng: numpy.random.Generator,
        hidden_gain: float = numpy.sqrt(2),
        output_gain: float = 1.0,
    ) -> "MlpParams":
        """
        Orthogonally initialised network with zero biases

        Args:
            sizes: Layer widths including input and output, e.g. [4, 256, 256, 1]
            rng: Random generator
            hidden_gain: Gain of the hidden layers
            output_gain: Gain of the output layer
        """
        weights = []
        biases = []
        for i, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            gain = output_gain if i == len(sizes) - 2 else hidden_gain
            weights.append(orthogonal(n_in, n_out, gain, rng))
            biases.append(numpy.zeros(n_out))
        return cls(weights, biases)

    @property
    def sizes(self) -> T.List[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def parameters(self, prefix: str = "") -> T.Dict[str, numpy.ndarray]:
        out = {}
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            out[f"{prefix}w{i}"] = w
            out[f"{prefix}b{i}"] = b
        return out

    def set_parameters(self, values: T.Mapping[str, numpy.ndarray], prefix: str = ""):
        """Replace the weights from a :meth:`parameters` style mapping"""
        weights = [numpy.array(values[f"{prefix}w{i}"], dtype="f8") for i in range(len(self.weights))]
        biases = [numpy.array(values[f"{prefix}b{i}"], dtype="f8") for i in range(len(self.biases))]
        for old, new in zip(self.weights + self.biases, weights + biases):
            if old.shape != new.shape:
                raise InvalidInputError(f"shape {new.shape} does not match {old.shape}")
        self.weights = weights
        self.biases = biases
        self.version += 1


@dataclasses.dataclass
class ActivationCache:
    """Values saved by :func:`mlp_forward` for :func:`mlp_backward`"""

    #: Input to each layer
    inputs: T.List[numpy.ndarray]
    #: Pre-activation of each layer
    pre_activations: T.List[numpy.ndarray]
    owner: int
    version: int


def mlp_forward(
    params: MlpParams, x: numpy.ndarray
) -> T.Tuple[numpy.ndarray, ActivationCache]:
    """
    Evaluate the network

    >>> net = MlpParams([numpy.eye(3)], [numpy.zeros(3)])
    >>> mlp_forward(net, numpy.array([1.0, -2.0, 3.0]))[0]
    array([ 1., -2.,  3.])

    Args:
        params: Network weights
        x: Input, ``[..., n_in]``

    Returns:
        Output ``[..., n_out]`` and the cache needed by :func:`mlp_backward`
    """
    x = numpy.asarray(x, dtype="f8")
    if x.ndim == 0 or x.shape[-1] != params.sizes[0]:
        raise InvalidInputError(
            f"network expects {params.sizes[0]} inputs, got shape {x.shape}"
        )

    inputs = []
    pre = []
    h = x
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        inputs.append(h)
        z = h @ w + b
        pre.append(z)
        h = z if i == last else numpy.maximum(z, 0.0)

    return h, ActivationCache(inputs, pre, id(params), params.version)


def mlp_backward(
    params: MlpParams, cache: ActivationCache, grad_output: numpy.ndarray, prefix: str = ""
) -> T.Tuple[T.Dict[str, numpy.ndarray], numpy.ndarray]:
    """
    Reverse-mode gradients of a scalar through the network

    Leading batch dimensions are summed over, so 'grad_output' should already
    include any 1/N of a mean.

    Args:
        params: Network weights used in the forward pass
        cache: Cache returned by :func:`mlp_forward`
        grad_output: Gradient of the scalar w.r.t. the output, ``[..., n_out]``
        prefix: Prefix for the gradient names

    Returns:
        Gradients named like :meth:`MlpParams.parameters` and the gradient
        w.r.t. the input
    """
    if cache.owner != id(params) or cache.version != params.version:
        raise InvalidInputError("activation cache is stale, run mlp_forward again")

    g = numpy.asarray(grad_output, dtype="f8")
    if g.shape != cache.pre_activations[-1].shape:
        raise InvalidInputError(
            f"output gradient shape {g.shape} does not match output "
            f"{cache.pre_activations[-1].shape}"
        )

    grads = {}
    last = len(params.weights) - 1
    for i in range(last, -1, -1):
        if i != last:
            g = g * (cache.pre_activations[i] > 0)
        x = cache.inputs[i]
        n_in, n_out = params.weights[i].shape
        grads[f"{prefix}w{i}"] = x.reshape(-1, n_in).T @ g.reshape(-1, n_out)
        grads[f"{prefix}b{i}"] = g.reshape(-1, n_out).sum(axis=0)
        g = g @ params.weights[i].T

    return grads, g


def gaussian_log_prob(u, mean, log_std):
    """
    Log density of a normal distribution

    >>> float(gaussian_log_prob(0.0, 0.0, -1.0)) == 1 - 0.5 * numpy.log(2 * numpy.pi)
    True
    """
    z = (u - mean) * numpy.exp(-log_std)
    return -0.5 * z ** 2 - log_std - 0.5 * LOG_2PI


def gaussian_entropy(log_std):
    """Differential entropy of a normal distribution"""
    return 0.5 * (LOG_2PI + 1.0) + log_std


class PolicyHead:
    """Gaussian policy over one action with a state independent log std

    Args:
        mean_net: Network from observation to action mean
        log_std: Initial log standard deviation
    """

    def __init__(self, mean_net: MlpParams, log_std: float = -1.0):
        if mean_net.sizes[-1] != 1:
            raise InvalidInputError("policy mean network must have one output")
        self.mean_net = mean_net
        self.log_std = numpy.array([float(log_std)])
        require_finite("log_std", self.log_std)

    @classmethod
    def init(
        cls,
        rng: numpy.random.Generator,
        obs_size: int = 4,
        hidden: T.Sequence[int] = (256, 256),
        log_std: float = -1.0,
    ) -> "PolicyHead":
        net = MlpParams.init([obs_size, *hidden, 1], rng, output_gain=0.01)
        return cls(net, log_std)

    @property
    def version(self) -> int:
        return self.mean_net.version

    def parameters(self) -> T.Dict[str, numpy.ndarray]:
        out = self.mean_net.parameters("policy.mean.")
        out["policy.log_std"] = self.log_std
        return out

    def set_parameters(self, values: T.Mapping[str, numpy.ndarray]) -> None:
        log_std = numpy.array(values["policy.log_std"], dtype="f8").reshape(1)
        require_finite("log_std", log_std)
        self.mean_net.set_parameters(values, "policy.mean.")
        self.log_std = log_std

    def mean(self, obs) -> T.Tuple[numpy.ndarray, ActivationCache]:
        """Action mean for observations ``[..., 4]``, shape ``[...]``"""
        out, cache = mlp_forward(self.mean_net, obs)
        return out[..., 0], cache


@dataclasses.dataclass
class PolicySample:
    """An action drawn from :func:`policy_sample`"""

    #: Clamped action in [-1, 1]
    action: numpy.ndarray
    #: Log density of 'pre_clamp'
    log_prob: numpy.ndarray
    #: Gaussian sample before clamping
    pre_clamp: numpy.ndarray
    mean: numpy.ndarray


def policy_sample(
    head: PolicyHead, obs, rng: numpy.random.Generator
) -> PolicySample:
    """
    Sample actions for observations ``[..., 4]``

    The action is the Gaussian sample clamped to [-1, 1]. The log probability
    is that of the unclamped sample, which is what the policy ratio uses.
    """
    obs = numpy.asarray(obs, dtype="f8")
    require_finite("observation", obs)
    mean, _ = head.mean(obs)
    u = mean + numpy.exp(head.log_std[0]) * rng.standard_normal(mean.shape)
    return PolicySample(
        action=numpy.clip(u, -1.0, 1.0),
        log_prob=gaussian_log_prob(u, mean, head.log_std[0]),
        pre_clamp=u,
        mean=mean,
    )


def log_prob(head: PolicyHead, obs, action_pre_clamp) -> numpy.ndarray:
    """Log density of unclamped actions under the current policy"""
    mean, _ = head.mean(obs)
    return gaussian_log_prob(
        numpy.asarray(action_pre_clamp, dtype="f8"), mean, head.log_std[0]
    )


def log_prob_backward(
    head: PolicyHead,
    cache: ActivationCache,
    mean: numpy.ndarray,
    action_pre_clamp: numpy.ndarray,
    grad_log_prob: numpy.ndarray,
) -> T.Dict[str, numpy.ndarray]:
    """
    Parameter gradients of ``sum(grad_log_prob * log_prob)``

    Args:
        head: Policy
        cache: Cache from :meth:`PolicyHead.mean`
        mean: Action means from the same call
        action_pre_clamp: Actions the log probabilities were taken at
        grad_log_prob: Weight of each log probability

    Returns:
        Gradients named like :meth:`PolicyHead.parameters`
    """
    log_std = head.log_std[0]
    z = (action_pre_clamp - mean) * numpy.exp(-log_std)
    # d lp / d mean = z / sigma, d lp / d log_std = z^2 - 1
    d_mean = grad_log_prob * z * numpy.exp(-log_std)
    d_log_std = numpy.sum(grad_log_prob * (z ** 2 - 1.0))

    grads, _ = mlp_backward(head.mean_net, cache, d_mean[..., None], "policy.mean.")
    grads["policy.log_std"] = numpy.array([d_log_std])
    return grads


class CriticHead:
    """Two headed value network: column 0 reward bias, column 1 entropy bias"""

    def __init__(self, net: MlpParams):
        if net.sizes[-1] != 2:
            raise InvalidInputError("critic network must have two outputs")
        self.net = net

    @classmethod
    def init(
        cls,
        rng: numpy.random.Generator,
        obs_size: int = 4,
        hidden: T.Sequence[int] = (512, 512),
    ) -> "CriticHead":
        return cls(MlpParams.init([obs_size, *hidden, 2], rng, output_gain=1.0))

    @property
    def version(self) -> int:
        return self.net.version

    def parameters(self) -> T.Dict[str, numpy.ndarray]:
        return self.net.parameters("critic.")

    def set_parameters(self, values: T.Mapping[str, numpy.ndarray]) -> None:
        self.net.set_parameters(values, "critic.")

    def values(self, obs) -> T.Tuple[numpy.ndarray, ActivationCache]:
        """Values ``[..., 2]`` for observations ``[..., 4]``"""
        return mlp_forward(self.net, obs)

    def backward(self, cache: ActivationCache, grad_values) -> T.Dict[str, numpy.ndarray]:
        grads, _ = mlp_backward(self.net, cache, grad_values, "critic.")
        return grads


@dataclasses.dataclass
class OptimizerState:
    """Adaptive moment estimation state

    Moments are created lazily, shaped like the parameters they follow
    """

    learning_rate: float = 5e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: T.Dict[str, numpy.ndarray] = dataclasses.field(default_factory=dict)
    v: T.Dict[str, numpy.ndarray] = dataclasses.field(default_factory=dict)
    #: Norm of the last gradient before clipping
    last_grad_norm: float = 0.0


def global_norm(grads: T.Mapping[str, numpy.ndarray]) -> float:
    """
    >>> global_norm({'a': numpy.array([3.0]), 'b': numpy.array([4.0])})
    5.0
    """
    return float(numpy.sqrt(sum(numpy.sum(g ** 2) for g in grads.values())))


def optimizer_step(
    opt: OptimizerState,
    params: T.Mapping[str, numpy.ndarray],
    grads: T.Mapping[str, numpy.ndarray],
    max_grad_norm: T.Optional[float] = 10.0,
) -> T.Dict[str, numpy.ndarray]:
    """
    Clip gradients by their global norm then take one Adam step

    Neither 'params' nor 'opt' are modified if a gradient is non-finite.

    Args:
        opt: Optimiser state, updated in place
        params: Current parameters
        grads: Gradient for each parameter
        max_grad_norm: Clip threshold, None to disable

    Returns:
        New parameter arrays
    """
    missing = set(params) - set(grads)
    if missing:
        raise InvalidInputError(f"no gradient for {sorted(missing)}")

    bad = [k for k in params if not numpy.all(numpy.isfinite(grads[k]))]
    if bad:
        raise NumericalError("non-finite gradient, update aborted", {"parameters": bad})

    norm = global_norm({k: grads[k] for k in params})
    scale = 1.0
    if max_grad_norm is not None and norm > max_grad_norm:
        scale = max_grad_norm / norm
    opt.last_grad_norm = norm

    opt.step += 1
    c1 = 1.0 - opt.beta1 ** opt.step
    c2 = 1.0 - opt.beta2 ** opt.step

    out = {}
    for k, p in params.items():
        g = grads[k] * scale
        m = opt.m.get(k, numpy.zeros_like(p))
        v = opt.v.get(k, numpy.zeros_like(p))
        m = opt.beta1 * m + (1 - opt.beta1) * g
        v = opt.beta2 * v + (1 - opt.beta2) * g ** 2
        opt.m[k] = m
        opt.v[k] = v
        out[k] = p - opt.learning_rate * (m / c1) / (numpy.sqrt(v / c2) + opt.eps)

    return out
