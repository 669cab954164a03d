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

"""SVG figures of trajectories, training curves and robustness scores

Figures are rendered with the non-interactive Agg backend. SVG metadata
dates are dropped and element ids are salted with a constant so the same
data always gives the same file.
"""

import pathlib
import typing as T

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import pandas  # noqa: E402
import xarray  # noqa: E402

#: Fixed figure layout, inches
FIGSIZE = (8.0, 6.0)


def _save(fig, path: T.Union[str, pathlib.Path]) -> None:
    with matplotlib.rc_context({"svg.hashsalt": "areapo", "svg.fonttype": "none"}):
        fig.savefig(str(path), format="svg", metadata={"Date": None})
    plt.close(fig)


def robustness_figure(scores: T.Mapping[str, float], title: str = ""):
    """
    Bar chart of robustness category pass rates

    The value axis always runs from 0 to 100%, whatever the data

    Args:
        scores: Pass fraction in [0, 1] for each category, in display order
        title: Figure title

    Returns:
        The :class:`matplotlib.figure.Figure`
    """
    fig, ax = plt.subplots(figsize=FIGSIZE)
    names = list(scores.keys())
    values = [100.0 * float(scores[k]) for k in names]

    ax.bar(range(len(names)), values, color="tab:blue")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels([n.replace("_", " ") for n in names], rotation=30, ha="right")
    ax.set_ylim(0.0, 100.0)
    ax.set_ylabel("Pass rate [%]")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return fig


def robustness_chart(
    scores: T.Mapping[str, float], path: T.Union[str, pathlib.Path], title: str = ""
) -> None:
    """Write :func:`robustness_figure` to an SVG file"""
    _save(robustness_figure(scores, title), path)


def trajectory_chart(
    traj: xarray.Dataset, path: T.Union[str, pathlib.Path], title: str = ""
) -> None:
    """
    Joint positions, velocities and applied torque against time

    Args:
        traj: Trajectory with variables q1, q2, qd1, qd2 and torque on 'time'
        path: Output SVG path
        title: Figure title
    """
    fig, axes = plt.subplots(3, 1, sharex=True, figsize=FIGSIZE)
    t = traj["time"].values

    axes[0].plot(t, traj["q1"].values, label="q1")
    axes[0].plot(t, traj["q2"].values, label="q2")
    axes[0].set_ylabel("Position [rad]")
    axes[0].legend(loc="upper right")

    axes[1].plot(t, traj["qd1"].values, label="qd1")
    axes[1].plot(t, traj["qd2"].values, label="qd2")
    axes[1].set_ylabel("Velocity [rad/s]")
    axes[1].legend(loc="upper right")

    axes[2].plot(t, traj["torque"].values, color="tab:red")
    axes[2].set_ylabel("Torque [Nm]")
    axes[2].set_xlabel("Time [s]")

    if title:
        axes[0].set_title(title)
    fig.tight_layout()
    _save(fig, path)


def learning_curve_chart(
    log: pandas.DataFrame, path: T.Union[str, pathlib.Path], title: str = ""
) -> None:
    """
    Gain estimates and evaluation scores against training frames

    Args:
        log: Training log with columns frames, rho_hat, rho_H_hat, eval_score
        path: Output SVG path
        title: Figure title
    """
    fig, axes = plt.subplots(2, 1, sharex=True, figsize=FIGSIZE)

    axes[0].plot(log["frames"], log["rho_hat"], label="gain")
    axes[0].plot(log["frames"], log["rho_H_hat"], label="entropy gain")
    axes[0].set_ylabel("Estimate")
    axes[0].legend(loc="lower right")

    evals = log.dropna(subset=["eval_score"])
    axes[1].plot(evals["frames"], evals["eval_score"], marker="o")
    axes[1].set_ylim(0.0, 1.0)
    axes[1].set_ylabel("Evaluation score")
    axes[1].set_xlabel("Frames")

    if title:
        axes[0].set_title(title)
    fig.tight_layout()
    _save(fig, path)
