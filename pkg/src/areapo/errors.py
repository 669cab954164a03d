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
"""Exceptions raised by areapo

All errors derive from :class:`AreapoError`, so callers that only care about
"something in the package failed" can catch that.
"""

import typing as T


class AreapoError(Exception):
    """Base class for areapo errors"""


class InvalidInputError(AreapoError, ValueError):
    """An argument was non-finite, of the wrong shape or otherwise unusable"""


class PreconditionError(AreapoError):
    """A mathematical precondition (e.g. recurrence of a chain) does not hold"""


class NumericalError(AreapoError, ArithmeticError):
    """A numeric computation failed its own consistency checks

    Args:
        message: Description of the failure
        diagnostics: Values useful for working out what went wrong
    """

    def __init__(self, message: str, diagnostics: T.Dict[str, T.Any] = None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})

    def __str__(self):
        base = super().__str__()
        if not self.diagnostics:
            return base
        extra = ", ".join(f"{k}={v}" for k, v in self.diagnostics.items())
        return f"{base} ({extra})"


class InvalidBatchError(AreapoError):
    """A rollout batch is missing data needed for advantage estimation"""


class ConfigError(AreapoError):
    """A configuration file or value could not be used"""


class CheckpointError(AreapoError):
    """A checkpoint could not be read, or was written by an incompatible version"""
