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

"""Rigid-body dynamics of the two-link pendulum

The plant is the usual two-link manipulator

.. math::

    M(q)\\ddot{q} + C(q, \\dot{q})\\dot{q} + G(q) + F(\\dot{q}) = \\tau

with ``q1`` measured from the hanging-down position (so upright is
``q1 = pi, q2 = 0``) and ``q2`` relative to the first link. Only one joint is
actuated: the elbow for the acrobot, the shoulder for the pendubot.

The array functions (:func:`derivative`, :func:`integrate`,
:func:`energy`) work on state arrays ``[..., 4]`` ordered ``q1, q2, qd1,
qd2`` and broadcast over any leading dimensions, so a whole set of
environments advances in one call. :func:`forward_dynamics`,
:func:`step_rk4` and :func:`total_energy` are the :class:`PendulumState`
versions of the same thing.
"""

import dataclasses
import enum
import math

import numpy

from .errors import InvalidInputError
from .helpers import require_finite

#: Slope of the tanh approximation to Coulomb friction (s/rad)
COULOMB_SMOOTHING = 100.0


@dataclasses.dataclass(frozen=True)
class ModelParams:
    """Physical constants of the double pendulum

    Attributes:
        mass_1, mass_2: Link masses (kg)
        length_1, length_2: Link lengths (m)
        com_1, com_2: Distance from each joint to its link's centre of mass (m)
        inertia_1, inertia_2: Link inertias about their joints (kg m^2)
        gravity: Gravitational acceleration (m/s^2)
        damping_1, damping_2: Viscous friction (N m s/rad)
        coulomb_1, coulomb_2: Coulomb friction (N m)
        torque_limit: Motor torque limit (N m)
        motor_inertia: Rotor inertia added to each joint (kg m^2)
    """

    mass_1: float
    mass_2: float
    length_1: float
    length_2: float
    com_1: float
    com_2: float
    inertia_1: float
    inertia_2: float
    gravity: float = 9.81
    damping_1: float = 0.0
    damping_2: float = 0.0
    coulomb_1: float = 0.0
    coulomb_2: float = 0.0
    torque_limit: float = 6.0
    motor_inertia: float = 0.0

    def __post_init__(self):
        for name in [
            "mass_1",
            "mass_2",
            "length_1",
            "length_2",
            "inertia_1",
            "inertia_2",
            "torque_limit",
        ]:
            if not getattr(self, name) > 0:
                raise InvalidInputError(f"{name} must be positive")
        for name in ["damping_1", "damping_2", "coulomb_1", "coulomb_2"]:
            if not getattr(self, name) >= 0:
                raise InvalidInputError(f"{name} must be non-negative")
        if not self.motor_inertia >= 0:
            raise InvalidInputError("motor_inertia must be non-negative")
        for f in dataclasses.fields(self):
            require_finite(f.name, getattr(self, f.name))

    def scaled(self, **factors: float) -> "ModelParams":
        """
        Copy of the parameters with some fields multiplied by a factor

        >>> p = ModelParams(1, 1, 1, 1, 1, 1, 1, 1)
        >>> p.scaled(mass_1=1.5).mass_1
        1.5
        """
        unknown = set(factors) - {f.name for f in dataclasses.fields(self)}
        if unknown:
            raise InvalidInputError(f"unknown plant parameters {sorted(unknown)}")
        return dataclasses.replace(
            self, **{k: getattr(self, k) * v for k, v in factors.items()}
        )


@dataclasses.dataclass(frozen=True)
class PendulumState:
    """Joint angles (rad), velocities (rad/s) and simulation clock (s)

    Angles are unwrapped, they accumulate as the links rotate
    """

    q1: float
    q2: float
    qd1: float
    qd2: float
    t: float = 0.0

    def __post_init__(self):
        require_finite("PendulumState", self.q1, self.q2, self.qd1, self.qd2, self.t)

    def to_array(self) -> numpy.ndarray:
        """State as an array ``[q1, q2, qd1, qd2]``"""
        return numpy.array([self.q1, self.q2, self.qd1, self.qd2], dtype="f8")

    @classmethod
    def from_array(cls, x, t: float = 0.0) -> "PendulumState":
        x = numpy.asarray(x, dtype="f8")
        return cls(float(x[0]), float(x[1]), float(x[2]), float(x[3]), float(t))


class ActuationConfig(enum.Enum):
    """Which joint carries the motor"""

    #: Shoulder passive, elbow actuated
    ACROBOT = "acrobot"
    #: Shoulder actuated, elbow passive
    PENDUBOT = "pendubot"

    @property
    def active_joint(self) -> int:
        """Index of the actuated joint"""
        return 1 if self is ActuationConfig.ACROBOT else 0


def apply_actuation(config: ActuationConfig, command, limit: float) -> numpy.ndarray:
    """
    Place a (clamped) motor command at the active joint

    >>> apply_actuation(ActuationConfig.ACROBOT, 2.0, 6.0)
    array([0., 2.])
    >>> apply_actuation(ActuationConfig.PENDUBOT, -9.0, 6.0)
    array([-6.,  0.])

    Args:
        config: Actuation mode
        command: Scalar or array of commands (N m)
        limit: Torque limit (N m)

    Returns:
        Joint torques, shape ``command.shape + (2,)``, exactly zero at the
        passive joint
    """
    command = numpy.clip(numpy.asarray(command, dtype="f8"), -limit, limit)
    torques = numpy.zeros(command.shape + (2,), dtype="f8")
    torques[..., config.active_joint] = command
    return torques


def mass_matrix(q2, params: ModelParams) -> numpy.ndarray:
    """
    Mass matrix M(q), which depends only on the elbow angle

    Args:
        q2: Elbow angle, scalar or array
        params: Plant parameters

    Returns:
        Array ``q2.shape + (2, 2)``
    """
    q2 = numpy.asarray(q2, dtype="f8")
    p = params
    c2 = numpy.cos(q2)
    m11 = (
        p.inertia_1
        + p.inertia_2
        + p.mass_2 * p.length_1 ** 2
        + 2 * p.mass_2 * p.length_1 * p.com_2 * c2
        + p.motor_inertia
    )
    m12 = p.inertia_2 + p.mass_2 * p.length_1 * p.com_2 * c2
    m22 = numpy.full_like(c2, p.inertia_2 + p.motor_inertia)

    return numpy.stack(
        [numpy.stack([m11, m12], axis=-1), numpy.stack([m12, m22], axis=-1)],
        axis=-2,
    )


def derivative(x: numpy.ndarray, torques: numpy.ndarray, params: ModelParams):
    """
    Time derivative of the state array

    Args:
        x: States ``[..., 4]``
        torques: Joint torques ``[..., 2]``
        params: Plant parameters

    Returns:
        ``[qd1, qd2, qdd1, qdd2]`` with the same shape as x
    """
    p = params
    q1 = x[..., 0]
    q2 = x[..., 1]
    qd1 = x[..., 2]
    qd2 = x[..., 3]

    s1 = numpy.sin(q1)
    s12 = numpy.sin(q1 + q2)
    c2 = numpy.cos(q2)
    h = p.mass_2 * p.length_1 * p.com_2 * numpy.sin(q2)

    m11 = (
        p.inertia_1
        + p.inertia_2
        + p.mass_2 * p.length_1 ** 2
        + 2 * p.mass_2 * p.length_1 * p.com_2 * c2
        + p.motor_inertia
    )
    m12 = p.inertia_2 + p.mass_2 * p.length_1 * p.com_2 * c2
    m22 = p.inertia_2 + p.motor_inertia

    # Coriolis/centrifugal, gravity and friction
    coriolis_1 = -2 * h * qd1 * qd2 - h * qd2 ** 2
    coriolis_2 = h * qd1 ** 2
    gravity_1 = p.gravity * (p.mass_1 * p.com_1 * s1 + p.mass_2 * (p.length_1 * s1 + p.com_2 * s12))
    gravity_2 = p.gravity * p.mass_2 * p.com_2 * s12
    friction_1 = p.damping_1 * qd1 + p.coulomb_1 * numpy.tanh(COULOMB_SMOOTHING * qd1)
    friction_2 = p.damping_2 * qd2 + p.coulomb_2 * numpy.tanh(COULOMB_SMOOTHING * qd2)

    b1 = torques[..., 0] - coriolis_1 - gravity_1 - friction_1
    b2 = torques[..., 1] - coriolis_2 - gravity_2 - friction_2

    # M is symmetric positive definite, solve the 2x2 system directly
    det = m11 * m22 - m12 * m12
    qdd1 = (m22 * b1 - m12 * b2) / det
    qdd2 = (m11 * b2 - m12 * b1) / det

    return numpy.stack([qd1, qd2, qdd1, qdd2], axis=-1)


def forward_dynamics(state: PendulumState, torques, params: ModelParams) -> numpy.ndarray:
    """
    Joint accelerations for a state and applied torques

    Args:
        state: Current state
        torques: Joint torques, length 2 (N m)
        params: Plant parameters

    Returns:
        Accelerations ``[qdd1, qdd2]`` (rad/s^2)
    """
    torques = numpy.asarray(torques, dtype="f8")
    if torques.shape != (2,):
        raise InvalidInputError(f"torques must have shape (2,), got {torques.shape}")
    require_finite("torques", torques)
    return derivative(state.to_array(), torques, params)[2:]


def integrate(
    x: numpy.ndarray,
    torques: numpy.ndarray,
    dt: float,
    params: ModelParams,
    substep: float = None,
) -> numpy.ndarray:
    """
    Advance state arrays by dt with classic RK4, holding the torques constant

    Args:
        x: States ``[..., 4]``
        torques: Joint torques ``[..., 2]``
        dt: Interval to advance (s)
        params: Plant parameters
        substep: Largest integration step (s), defaults to dt

    Returns:
        New state array
    """
    if not dt > 0:
        raise InvalidInputError(f"dt must be positive, got {dt}")
    if substep is None:
        substep = dt
    if not substep > 0:
        raise InvalidInputError(f"substep must be positive, got {substep}")

    n = max(1, int(math.ceil(dt / substep - 1e-9)))
    h = dt / n

    for _ in range(n):
        k1 = derivative(x, torques, params)
        k2 = derivative(x + 0.5 * h * k1, torques, params)
        k3 = derivative(x + 0.5 * h * k2, torques, params)
        k4 = derivative(x + h * k3, torques, params)
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)

    return x


def step_rk4(
    state: PendulumState,
    torques,
    dt: float,
    params: ModelParams,
    substep: float = None,
) -> PendulumState:
    """
    Advance a :class:`PendulumState` by dt

    Torques are held constant over the interval (zero-order hold). The
    interval is split into equal RK4 steps no longer than 'substep'.

    Args:
        state: Start state
        torques: Joint torques, length 2 (N m)
        dt: Control interval (s)
        params: Plant parameters
        substep: Largest integration step (s), defaults to dt

    Returns:
        State at ``state.t + dt``
    """
    torques = numpy.asarray(torques, dtype="f8")
    require_finite("torques", torques)
    x = integrate(state.to_array(), torques, dt, params, substep)
    return PendulumState.from_array(x, state.t + dt)


def energy(x: numpy.ndarray, params: ModelParams) -> numpy.ndarray:
    """
    Total mechanical energy of state arrays ``[..., 4]``, zero at hanging rest
    """
    p = params
    q1 = x[..., 0]
    q2 = x[..., 1]
    qd = x[..., 2:]

    m = mass_matrix(q2, params)
    kinetic = 0.5 * numpy.einsum("...i,...ij,...j->...", qd, m, qd)

    height_1 = -p.com_1 * numpy.cos(q1)
    height_2 = -p.length_1 * numpy.cos(q1) - p.com_2 * numpy.cos(q1 + q2)
    rest = p.mass_1 * p.com_1 + p.mass_2 * (p.length_1 + p.com_2)
    potential = p.gravity * (p.mass_1 * height_1 + p.mass_2 * height_2 + rest)

    return kinetic + potential


def total_energy(state: PendulumState, params: ModelParams) -> float:
    """
    Kinetic plus potential energy (J), with the potential zero at hanging rest
    """
    return float(energy(state.to_array(), params))
