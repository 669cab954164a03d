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

"""Functions for reading and saving data

Checkpoints are netCDF files holding one variable per parameter tensor, the
optimiser moments and the observation statistics, with scalar state in the
global attributes. Trajectories and tables are CSV.
"""

import dataclasses
import logging
import pathlib
import typing as T

import numpy
import pandas
import xarray

from .environment import RunningStats
from .errors import CheckpointError, InvalidInputError
from .network import CriticHead, MlpParams, OptimizerState, PolicyHead

logger = logging.getLogger(__name__)

#: Bump when the checkpoint layout changes
CHECKPOINT_VERSION = 1

TRAJECTORY_COLUMNS = ["t", "q1", "q2", "qd1", "qd2", "torque", "reward"]


@dataclasses.dataclass
class Checkpoint:
    """Everything needed to resume training or run the trained controller"""

    policy: PolicyHead
    critic: CriticHead
    stats: RunningStats
    optimizer: OptimizerState = dataclasses.field(default_factory=OptimizerState)
    rho_hat: float = 0.0
    rho_H_hat: float = 0.0
    task: str = "pendubot"
    iteration: int = 0
    frames: int = 0
    #: Resolved configuration the checkpoint was trained with, as YAML
    config: str = ""


def _ds_encoding(ds: xarray.Dataset, complevel: int) -> T.Dict[str, T.Dict[str, T.Any]]:
    # Lossless compression for every variable
    encoding = {}
    for k, v in ds.data_vars.items():
        encoding[k] = {
            "zlib": complevel > 0,
            "shuffle": complevel > 0,
            "complevel": complevel,
            "dtype": v.dtype,
        }
    return encoding


def _var_name(key: str) -> str:
    return key.replace(".", "__")


def _key_name(var: str) -> str:
    return var.replace("__", ".")


def _array_var(name: str, value: numpy.ndarray) -> xarray.DataArray:
    value = numpy.asarray(value)
    return xarray.DataArray(value, dims=[f"{name}_d{i}" for i in range(value.ndim)])


def checkpoint_to_dataset(ckpt: Checkpoint) -> xarray.Dataset:
    """
    Convert a :class:`Checkpoint` to a :class:`xarray.Dataset`
    """
    data_vars = {}
    params = {**ckpt.policy.parameters(), **ckpt.critic.parameters()}
    for k, v in params.items():
        name = _var_name(k)
        data_vars[name] = _array_var(name, v)
    for k, v in ckpt.optimizer.m.items():
        name = "adam_m__" + _var_name(k)
        data_vars[name] = _array_var(name, v)
    for k, v in ckpt.optimizer.v.items():
        name = "adam_v__" + _var_name(k)
        data_vars[name] = _array_var(name, v)

    data_vars["obs_mean"] = xarray.DataArray(ckpt.stats.mean, dims=["obs"])
    data_vars["obs_m2"] = xarray.DataArray(ckpt.stats.m2, dims=["obs"])

    attrs = {
        "format_version": CHECKPOINT_VERSION,
        "task": ckpt.task,
        "iteration": ckpt.iteration,
        "frames": ckpt.frames,
        "rho_hat": ckpt.rho_hat,
        "rho_H_hat": ckpt.rho_H_hat,
        "obs_count": ckpt.stats.count,
        "adam_step": ckpt.optimizer.step,
        "adam_learning_rate": ckpt.optimizer.learning_rate,
        "adam_beta1": ckpt.optimizer.beta1,
        "adam_beta2": ckpt.optimizer.beta2,
        "adam_eps": ckpt.optimizer.eps,
        "config": ckpt.config,
    }
    return xarray.Dataset(data_vars, attrs=attrs)


def _mlp_from(values: T.Mapping[str, numpy.ndarray], prefix: str) -> MlpParams:
    weights = []
    biases = []
    i = 0
    while f"{prefix}w{i}" in values:
        weights.append(values[f"{prefix}w{i}"])
        biases.append(values[f"{prefix}b{i}"])
        i += 1
    if i == 0:
        raise CheckpointError(f"no '{prefix}' weights in checkpoint")
    return MlpParams(weights, biases)


def checkpoint_from_dataset(ds: xarray.Dataset) -> Checkpoint:
    """
    Convert a :class:`xarray.Dataset` created by :func:`checkpoint_to_dataset`
    back to a :class:`Checkpoint`
    """
    version = ds.attrs.get("format_version")
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"checkpoint format version {version} is not supported "
            f"(expected {CHECKPOINT_VERSION})"
        )

    values = {}
    m = {}
    v = {}
    for name, da in ds.data_vars.items():
        if name.startswith("adam_m__"):
            m[_key_name(name[len("adam_m__") :])] = da.values.copy()
        elif name.startswith("adam_v__"):
            v[_key_name(name[len("adam_v__") :])] = da.values.copy()
        elif name not in ("obs_mean", "obs_m2"):
            values[_key_name(name)] = da.values.copy()

    try:
        policy = PolicyHead(_mlp_from(values, "policy.mean."))
        policy.log_std = numpy.array(values["policy.log_std"], dtype="f8").reshape(1)
        critic = CriticHead(_mlp_from(values, "critic."))

        stats = RunningStats(ds["obs_mean"].size)
        stats.count = float(ds.attrs["obs_count"])
        stats.mean = ds["obs_mean"].values.copy()
        stats.m2 = ds["obs_m2"].values.copy()

        optimizer = OptimizerState(
            learning_rate=float(ds.attrs["adam_learning_rate"]),
            beta1=float(ds.attrs["adam_beta1"]),
            beta2=float(ds.attrs["adam_beta2"]),
            eps=float(ds.attrs["adam_eps"]),
            step=int(ds.attrs["adam_step"]),
            m=m,
            v=v,
        )

        return Checkpoint(
            policy=policy,
            critic=critic,
            stats=stats,
            optimizer=optimizer,
            rho_hat=float(ds.attrs["rho_hat"]),
            rho_H_hat=float(ds.attrs["rho_H_hat"]),
            task=str(ds.attrs["task"]),
            iteration=int(ds.attrs["iteration"]),
            frames=int(ds.attrs["frames"]),
            config=str(ds.attrs.get("config", "")),
        )
    except KeyError as e:
        raise CheckpointError(f"checkpoint is missing {e}") from e
    except (InvalidInputError, TypeError, ValueError) as e:
        raise CheckpointError(f"checkpoint tensors are inconsistent: {e}") from e


def save_checkpoint(
    ckpt: Checkpoint, path: T.Union[str, pathlib.Path], complevel: int = 4
) -> None:
    """
    Write a checkpoint to a netCDF file

    The file is written next to 'path' then moved into place, so an
    interrupted write never replaces a good checkpoint.

    Args:
        ckpt: Checkpoint to save
        path: Output path
        complevel: NetCDF compression level
    """
    path = pathlib.Path(path)
    ds = checkpoint_to_dataset(ckpt)
    tmp = path.with_name(path.name + ".tmp")
    ds.to_netcdf(str(tmp), engine="netcdf4", encoding=_ds_encoding(ds, complevel))
    tmp.replace(path)
    logger.info("wrote checkpoint %s", path)


def load_checkpoint(path: T.Union[str, pathlib.Path]) -> Checkpoint:
    """
    Read a checkpoint written by :func:`save_checkpoint`

    Raises:
        :class:`CheckpointError` if the file can't be read or has the wrong
        format version
    """
    path = pathlib.Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint {path} does not exist")
    try:
        with xarray.open_dataset(str(path), engine="netcdf4") as ds:
            ds.load()
    except (OSError, ValueError) as e:
        raise CheckpointError(f"could not read checkpoint {path}: {e}") from e
    return checkpoint_from_dataset(ds)


def trajectory_to_dataframe(traj: xarray.Dataset) -> pandas.DataFrame:
    """
    Convert a trajectory to a table with columns ``t,q1,q2,qd1,qd2,torque,reward``
    """
    df = traj[TRAJECTORY_COLUMNS[1:]].to_dataframe()
    df.index.name = "t"
    return df.reset_index()[TRAJECTORY_COLUMNS]


def save_trajectory_csv(traj: xarray.Dataset, path: T.Union[str, pathlib.Path]) -> None:
    trajectory_to_dataframe(traj).to_csv(path, index=False)


def load_trajectory_csv(path: T.Union[str, pathlib.Path]) -> xarray.Dataset:
    """
    Read a trajectory CSV back into a :class:`xarray.Dataset` on 'time'
    """
    df = pandas.read_csv(path)
    missing = set(TRAJECTORY_COLUMNS) - set(df.columns)
    if missing:
        raise InvalidInputError(f"{path} is missing columns {sorted(missing)}")
    ds = df.set_index("t")[TRAJECTORY_COLUMNS[1:]].to_xarray()
    return ds.rename({"t": "time"})


def append_csv_row(
    path: T.Union[str, pathlib.Path], row: T.Mapping[str, T.Any], columns: T.Sequence[str]
) -> None:
    """
    Append one row to a CSV file, writing the header if the file is new
    """
    path = pathlib.Path(path)
    df = pandas.DataFrame([row], columns=list(columns))
    df.to_csv(path, mode="a", header=not path.exists(), index=False)
