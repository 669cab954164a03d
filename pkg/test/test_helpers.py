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

from areapo.helpers import *
from areapo.errors import InvalidInputError

import threading

import numpy
import pytest


def test_wrap_angle():
    x = numpy.array([0.0, numpy.pi, -numpy.pi, 3 * numpy.pi, 2 * numpy.pi, -0.5])
    numpy.testing.assert_allclose(
        wrap_angle(x), [0.0, numpy.pi, numpy.pi, numpy.pi, 0.0, -0.5], atol=1e-12
    )

    x = numpy.random.default_rng(0).uniform(-50, 50, size=1000)
    w = wrap_angle(x)
    assert numpy.all(w > -numpy.pi) and numpy.all(w <= numpy.pi)
    numpy.testing.assert_allclose(numpy.sin(w), numpy.sin(x), atol=1e-12)
    numpy.testing.assert_allclose(numpy.cos(w), numpy.cos(x), atol=1e-12)


def test_require_finite():
    require_finite("x", 1.0, numpy.ones(3))

    with pytest.raises(InvalidInputError, match="x must be finite"):
        require_finite("x", 1.0, numpy.array([0.0, numpy.inf]))

    with pytest.raises(ValueError):
        require_finite("x", numpy.nan)


def test_map_to_delayed():
    tasks = map_to_delayed(lambda x, y, z=0: x * y + z, [1, 2, 3], args=(10,), kwargs={"z": 1})

    assert [i for i, _ in tasks] == [0, 1, 2]
    assert compute_delayed(tasks, parallel=True) == [11, 21, 31]
    assert compute_delayed(tasks, parallel=False) == [11, 21, 31]
    assert compute_delayed([]) == []


def test_compute_delayed_order():
    # Results come back in index order even when given out of order
    tasks = map_to_delayed(lambda x: x, ["a", "b", "c"])
    assert compute_delayed(list(reversed(tasks))) == ["a", "b", "c"]


def test_compute_delayed_serial():
    threads = set()

    def record(x):
        threads.add(threading.get_ident())
        return x

    compute_delayed(map_to_delayed(record, range(8)), parallel=False)
    assert threads == {threading.get_ident()}
