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

from areapo.network import *
from areapo.errors import InvalidInputError, NumericalError

import numpy
import pytest


def assert_gradients(analytic, numeric, tol=1e-4):
    # Compare absolutely where both are tiny
    error = numpy.abs(analytic - numeric) / numpy.maximum(
        numpy.abs(analytic) + numpy.abs(numeric), 1e-4
    )
    assert numpy.max(error) < tol


def finite_difference(func, values, h=1e-5):
    """Central differences of the scalar 'func()' w.r.t. each array in 'values'"""
    out = {}
    for k, v in values.items():
        g = numpy.zeros_like(v)
        for idx in numpy.ndindex(v.shape):
            old = v[idx]
            v[idx] = old + h
            up = func()
            v[idx] = old - h
            down = func()
            v[idx] = old
            g[idx] = (up - down) / (2 * h)
        out[k] = g
    return out


def random_net(sizes, rng):
    net = MlpParams.init(sizes, rng, output_gain=1.0)
    # Non-zero biases so every layer is exercised
    for b in net.biases:
        b[...] = rng.normal(scale=0.1, size=b.shape)
    return net


def test_orthogonal():
    rng = numpy.random.default_rng(0)

    w = orthogonal(8, 3, 2.0, rng)
    assert w.shape == (8, 3)
    numpy.testing.assert_allclose(w.T @ w, 4 * numpy.eye(3), atol=1e-12)

    w = orthogonal(3, 8, 1.0, rng)
    assert w.shape == (3, 8)
    numpy.testing.assert_allclose(w @ w.T, numpy.eye(3), atol=1e-12)


def test_mlp_invalid():
    with pytest.raises(InvalidInputError):
        MlpParams([numpy.ones((2, 3))], [numpy.zeros(2)])

    with pytest.raises(InvalidInputError):
        MlpParams([numpy.ones((2, 3)), numpy.ones((2, 1))], [numpy.zeros(3), numpy.zeros(1)])

    net = MlpParams.init([3, 4, 1], numpy.random.default_rng(0))
    with pytest.raises(InvalidInputError):
        mlp_forward(net, numpy.ones(4))


def test_mlp_forward():
    rng = numpy.random.default_rng(1)
    net = random_net([3, 5, 4, 2], rng)
    x = rng.normal(size=3)

    out, _ = mlp_forward(net, x)

    # Neuron by neuron re-evaluation
    h = list(x)
    for layer, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = []
        for j in range(w.shape[1]):
            total = b[j]
            for i in range(w.shape[0]):
                total += h[i] * w[i, j]
            z.append(total)
        if layer < len(net.weights) - 1:
            z = [max(v, 0.0) for v in z]
        h = z

    numpy.testing.assert_allclose(out, h, rtol=0, atol=1e-12)


def test_mlp_forward_batch():
    rng = numpy.random.default_rng(2)
    net = random_net([4, 6, 2], rng)
    x = rng.normal(size=(3, 5, 4))

    out, _ = mlp_forward(net, x)
    assert out.shape == (3, 5, 2)
    numpy.testing.assert_allclose(out[1, 2], mlp_forward(net, x[1, 2])[0], atol=1e-14)


@pytest.mark.parametrize("sizes", [[4, 8, 1], [4, 16, 16, 2]])
def test_mlp_gradients(sizes):
    rng = numpy.random.default_rng(3)
    net = random_net(sizes, rng)
    x = rng.normal(size=(6, 4))
    weight = rng.normal(size=(6, sizes[-1]))

    def loss():
        return numpy.sum(weight * mlp_forward(net, x)[0])

    _, cache = mlp_forward(net, x)
    grads, grad_input = mlp_backward(net, cache, weight)
    numeric = finite_difference(loss, net.parameters())

    assert set(grads) == set(numeric)
    for k in grads:
        assert grads[k].shape == numeric[k].shape
        assert_gradients(grads[k], numeric[k])

    # Gradient w.r.t. the input too
    numeric_input = finite_difference(loss, {"x": x})["x"]
    assert_gradients(grad_input, numeric_input)


def test_mlp_stale_cache():
    rng = numpy.random.default_rng(4)
    net = random_net([4, 8, 1], rng)
    other = random_net([4, 8, 1], rng)
    _, cache = mlp_forward(net, numpy.ones(4))

    with pytest.raises(InvalidInputError):
        mlp_backward(other, cache, numpy.ones(1))

    net.set_parameters(net.parameters())
    assert net.version == 1
    with pytest.raises(InvalidInputError, match="stale"):
        mlp_backward(net, cache, numpy.ones(1))


def test_set_parameters_shape():
    net = random_net([4, 8, 1], numpy.random.default_rng(5))
    values = net.parameters()
    values["w0"] = numpy.zeros((4, 9))

    with pytest.raises(InvalidInputError):
        net.set_parameters(values)


def test_policy_head():
    head = PolicyHead.init(numpy.random.default_rng(6), hidden=(16, 16))

    assert sorted(head.parameters()) == [
        "policy.log_std",
        "policy.mean.b0",
        "policy.mean.b1",
        "policy.mean.b2",
        "policy.mean.w0",
        "policy.mean.w1",
        "policy.mean.w2",
    ]
    numpy.testing.assert_array_equal(head.log_std, [-1.0])

    mean, _ = head.mean(numpy.zeros((5, 4)))
    assert mean.shape == (5,)

    with pytest.raises(InvalidInputError):
        PolicyHead(MlpParams.init([4, 8, 2], numpy.random.default_rng(0)))


def test_policy_sample_statistics():
    head = PolicyHead.init(numpy.random.default_rng(7), hidden=(16, 16))
    head.mean_net.biases[-1][...] = 0.3
    obs = numpy.broadcast_to(numpy.array([0.1, -0.5, 0.2, 0.0]), (10 ** 6, 4))

    sample = policy_sample(head, obs, numpy.random.default_rng(8))
    mean = sample.mean[0]
    sigma = numpy.exp(-1.0)

    assert abs(sample.pre_clamp.mean() - mean) < 0.01 * sigma
    assert sample.pre_clamp.std() == pytest.approx(sigma, rel=0.01)
    assert numpy.all(numpy.abs(sample.action) <= 1.0)
    numpy.testing.assert_array_equal(
        sample.action, numpy.clip(sample.pre_clamp, -1, 1)
    )

    # Negative mean log probability estimates the entropy
    assert -sample.log_prob.mean() == pytest.approx(
        float(gaussian_entropy(-1.0)), rel=0.01
    )
    numpy.testing.assert_allclose(
        log_prob(head, obs[:10], sample.pre_clamp[:10]), sample.log_prob[:10], atol=1e-12
    )


def test_log_prob_normalised():
    mean = 0.4
    log_std = -1.0
    sigma = numpy.exp(log_std)
    x, w = numpy.polynomial.hermite.hermgauss(40)

    u = mean + numpy.sqrt(2) * sigma * x
    density = numpy.exp(gaussian_log_prob(u, mean, log_std))
    total = numpy.sum(w * numpy.exp(x ** 2) * density) * numpy.sqrt(2) * sigma

    assert total == pytest.approx(1.0, abs=1e-6)


def test_log_prob_gradients():
    rng = numpy.random.default_rng(9)
    head = PolicyHead(random_net([4, 16, 16, 1], rng), log_std=-0.7)
    obs = rng.normal(size=(8, 4))
    u = rng.normal(size=8)
    weight = rng.normal(size=8)

    def loss():
        return numpy.sum(weight * log_prob(head, obs, u))

    mean, cache = head.mean(obs)
    grads = log_prob_backward(head, cache, mean, u, weight)

    values = head.parameters()
    numeric = finite_difference(loss, values)

    assert set(grads) == set(values)
    for k in grads:
        assert_gradients(grads[k], numeric[k])


def test_critic_gradients():
    rng = numpy.random.default_rng(10)
    critic = CriticHead(random_net([4, 16, 16, 2], rng))
    obs = rng.normal(size=(8, 4))
    weight = rng.normal(size=(8, 2))

    def loss():
        return numpy.sum(weight * critic.values(obs)[0])

    _, cache = critic.values(obs)
    grads = critic.backward(cache, weight)
    numeric = finite_difference(loss, critic.parameters())

    for k in grads:
        assert k.startswith("critic.")
        assert_gradients(grads[k], numeric[k])


def test_critic_outputs():
    critic = CriticHead.init(numpy.random.default_rng(0), hidden=(8,))
    values, _ = critic.values(numpy.zeros((3, 4)))
    assert values.shape == (3, 2)

    with pytest.raises(InvalidInputError):
        CriticHead(MlpParams.init([4, 8, 1], numpy.random.default_rng(0)))


def test_adam_recurrence():
    opt = OptimizerState(learning_rate=5e-4)
    params = {"x": numpy.array([0.0])}
    grads = {"x": numpy.array([1.0])}

    params = optimizer_step(opt, params, grads)
    # m = 0.1, v = 0.001, both bias corrected to 1
    numpy.testing.assert_allclose(params["x"], [-5e-4 / (1 + 1e-8)], rtol=1e-12)

    params = optimizer_step(opt, params, grads)
    numpy.testing.assert_allclose(opt.m["x"], [0.19], rtol=1e-12)
    numpy.testing.assert_allclose(opt.v["x"], [0.001999], rtol=1e-12)
    numpy.testing.assert_allclose(params["x"], [-1e-3 / (1 + 1e-8)], rtol=1e-12)
    assert opt.step == 2


def test_gradient_clipping():
    opt = OptimizerState()
    params = {"a": numpy.zeros(2)}
    grads = {"a": numpy.array([12.0, 16.0])}

    optimizer_step(opt, params, grads, max_grad_norm=10.0)

    assert opt.last_grad_norm == pytest.approx(20.0)
    # Moments see the clipped gradient
    numpy.testing.assert_allclose(opt.m["a"], [0.6, 0.8], rtol=1e-12)


def test_optimizer_non_finite():
    opt = OptimizerState()
    params = {"a": numpy.zeros(2), "b": numpy.zeros(1)}
    grads = {"a": numpy.array([1.0, numpy.nan]), "b": numpy.ones(1)}

    with pytest.raises(NumericalError):
        optimizer_step(opt, params, grads)

    assert opt.step == 0
    assert opt.m == {}
    numpy.testing.assert_array_equal(params["a"], 0)

    with pytest.raises(InvalidInputError):
        optimizer_step(opt, params, {"a": numpy.ones(2)})
