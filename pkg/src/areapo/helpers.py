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

"""Helper functions

These functions are low-level, and mainly intended for internal use
"""

import typing as T

import dask
import dask.delayed
import numpy
from dask.base import tokenize

from .errors import InvalidInputError


def wrap_angle(x):
    """
    Wrap angles to the interval (-pi, pi]

    >>> wrap_angle(numpy.array([0.0, 3 * numpy.pi, -numpy.pi])) / numpy.pi
    array([0., 1., 1.])

    Args:
        x: Angle or array of angles in radians

    Returns:
        Angles of the same shape, wrapped
    """
    return numpy.pi - numpy.mod(numpy.pi - x, 2 * numpy.pi)


def require_finite(name: str, *values) -> None:
    """
    Raise :class:`InvalidInputError` if any of 'values' contains NaN or inf
    """
    for v in values:
        if not numpy.all(numpy.isfinite(v)):
            raise InvalidInputError(f"{name} must be finite, got {v!r}")


def map_to_delayed(
    func: T.Callable,
    items: T.Sequence[T.Any],
    name: str = "point-to-delayed",
    args=(),
    kwargs={},
) -> T.List[T.Tuple[int, T.Any]]:
    """
    Run some function 'func' on each of 'items' as a :obj:`dask.delayed`

    The function is called like `func(item, *args, **kwargs)`.
    :func:`map_to_delayed` returns a list of (index, delayed result) for each
    item, in the order of 'items', so the results can be reduced in a fixed
    order regardless of how the scheduler ran them

    >>> results = map_to_delayed(lambda x: x * 2, [1, 2, 3])
    >>> compute_delayed(results, parallel=False)
    [2, 4, 6]

    Args:
        func: Function to run
        items: Values to run 'func' on
        args, kwargs: Passed to func

    Returns:
        List of tuples with the item index and a delayed result of running
        `func` on that item
    """
    results = []
    for i, item in enumerate(items):
        key = f"{name}-{i}-{tokenize(item)}"
        results.append((i, dask.delayed(func, name=key)(item, *args, **kwargs)))
    return results


def compute_delayed(
    tasks: T.List[T.Tuple[int, T.Any]], parallel: bool = True
) -> T.List[T.Any]:
    """
    Compute the output of :func:`map_to_delayed`, returning results in index
    order

    Args:
        tasks: List of (index, delayed) pairs
        parallel: Use the threaded scheduler if True, otherwise run serially

    Returns:
        List of computed results sorted by index
    """
    if len(tasks) == 0:
        return []

    scheduler = "threads" if parallel else "synchronous"
    indices = [i for i, _ in tasks]
    (values,) = dask.compute([d for _, d in tasks], scheduler=scheduler)

    return [v for _, v in sorted(zip(indices, values), key=lambda iv: iv[0])]
