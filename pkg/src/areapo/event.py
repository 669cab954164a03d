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

"""Functions for locating 'events' within a trajectory

An event is a run of consecutive samples where a mask is true, e.g. the
pendulum being held upright. Locate them with :func:`find_events`, then
pick out the run still active at the end with :func:`final_event`.
"""

import typing as T

import numpy
import pandas
import xarray


def find_events(da: xarray.DataArray, min_duration: int = 1) -> pandas.DataFrame:
    """Find 'events' in a DataArray mask

    Events are active when the array value is truthy. You should generally
    pass in the results of a comparison against some kind of threshold

    >>> da = xarray.DataArray([0,1,1,1,0,1,1], dims=['time'])
    >>> find_events(da > 0)
       time  event_duration
    0     1               3
    1     5               2

    Args:
        da (:class:`xarray.DataArray`): Input mask with a single 'time'
            dimension
        min_duration (:class:`int`): Minimum event duration to return

    Returns:
        A :class:`pandas.DataFrame` with the start index ('time') and
        length ('event_duration') of each event
    """
    if da.dims != ("time",):
        raise ValueError(f"expected a 1d mask over 'time', got dims {da.dims}")

    active = numpy.asarray(da.values, dtype=bool).astype("i1")
    edges = numpy.diff(numpy.concatenate([[0], active, [0]]))
    starts = numpy.flatnonzero(edges == 1)
    ends = numpy.flatnonzero(edges == -1)

    events = pandas.DataFrame(
        {"time": starts.astype("int64"), "event_duration": (ends - starts).astype("int64")}
    )
    return events[events.event_duration >= min_duration].reset_index(drop=True)


def final_event(da: xarray.DataArray) -> T.Optional[pandas.Series]:
    """
    The event still active at the last sample of 'da', if any

    >>> da = xarray.DataArray([0,1,0,1,1], dims=['time'])
    >>> final_event(da > 0).tolist()
    [3, 2]
    >>> final_event(da < 0) is None
    True
    """
    events = find_events(da)
    if len(events) == 0:
        return None
    last = events.iloc[-1]
    if last.time + last.event_duration != da.sizes["time"]:
        return None
    return last
