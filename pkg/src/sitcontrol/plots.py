"""Render run figures to SVG files next to the CSV output."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .experiments import RunResult  # noqa: E402


def render_run_figures(result: RunResult, out_dir: str | Path) -> dict[str, Path]:
    """Write the three standard figures for one run.

    states.svg shows the four compartments with the reference overlaid on
    the egg panel; control_continuous.svg compares the continuous stock
    command with the realized stock; control_impulse.svg shows the release
    pulses.

    Returns:
        Mapping from figure name to the written file path.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    traj = result.trajectory
    paths: dict[str, Path] = {}

    fig, axes = plt.subplots(2, 2, figsize=(11, 7), sharex=True)
    panels = [
        (axes[0, 0], traj.x1, "eggs x1"),
        (axes[0, 1], traj.x2, "wild males x2"),
        (axes[1, 0], traj.x3, "fertilized females x3"),
        (axes[1, 1], traj.x4, "sterile males x4"),
    ]
    for ax, series, label in panels:
        ax.plot(traj.day, series, label=label)
        ax.set_ylabel("individuals")
        ax.grid(True, alpha=0.3)
    axes[0, 0].plot(traj.day, traj.y_ref, "--", label="reference")
    for ax, _, label in panels:
        ax.legend(loc="best", fontsize=9)
    for ax in axes[1]:
        ax.set_xlabel("day")
    fig.suptitle("State evolution")
    fig.tight_layout()
    paths["states"] = out / "states.svg"
    fig.savefig(paths["states"])
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(8, 5))
    ax.plot(traj.day, traj.v_continuous, label="continuous command V")
    ax.plot(traj.day, traj.x4, label="realized stock x4")
    ax.set_xlabel("day")
    ax.set_ylabel("sterile males")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best")
    ax.set_title("Continuous control and its impulsive realization")
    fig.tight_layout()
    paths["control_continuous"] = out / "control_continuous.svg"
    fig.savefig(paths["control_continuous"])
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(8, 5))
    days = [d for d, _ in result.pulses.entries]
    amps = [a for _, a in result.pulses.entries]
    if days:
        ax.stem(days, amps, basefmt=" ")
    ax.set_xlabel("day")
    ax.set_ylabel("release amplitude")
    ax.grid(True, alpha=0.3)
    ax.set_title("Impulse control")
    fig.tight_layout()
    paths["control_impulse"] = out / "control_impulse.svg"
    fig.savefig(paths["control_impulse"])
    plt.close(fig)

    return paths
