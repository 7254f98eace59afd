"""Multi-panel trajectory figures.

The standard layout follows the run regime: three panels (|position|,
parity, phonon number) for a zero-temperature record, two panels
(|position|, parity) for a thermal one. The controller mode is drawn as a
dashed step line on the phonon panel: high while heating, middle while
dormant, low while cooling. Jump markers are vertical ticks at logged
emission/absorption times.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .reader import Trajectory, load_trajectories

TWO_PI = 2.0 * np.pi

MODE_LEVEL = {"heating": 1.0, "dormant": 0.5, "cooling": 0.0}

TRUE_COLOR = "#1f4e9c"
EST_COLOR = "#d1495b"


@dataclass(frozen=True)
class PanelSpec:
    """One panel: which series to draw and how."""

    fields: tuple            # sample fields, truth first
    ylabel: str
    mode_shading: bool = False
    jump_markers: bool = False
    labels: tuple = field(default=())

    def validate(self, traj: Trajectory) -> None:
        missing = [f for f in self.fields if not traj.has_fields([f])]
        if missing:
            raise KeyError(
                f"fields {missing} not present in schema version "
                f"{traj.header.get('schema_version')}"
            )


POSITION_PANEL = PanelSpec(
    fields=("x_true", "x_est"),
    ylabel="|displacement|",
    labels=("true", "estimate"),
)
PARITY_PANEL = PanelSpec(
    fields=("parity_true", "parity_est"),
    ylabel="parity",
    jump_markers=True,
    labels=("true", "estimate"),
)
PHONON_PANEL = PanelSpec(
    fields=("n_true", "n_est"),
    ylabel="phonon number",
    mode_shading=True,
    labels=("true", "estimate"),
)


def panels_for(traj: Trajectory, n_panels: int | None = None) -> list[PanelSpec]:
    """Standard panel set: 3 for a T=0 record, 2 for a thermal one."""
    if n_panels is None:
        n_panels = 2 if traj.is_thermal else 3
    if n_panels == 2:
        return [POSITION_PANEL, PARITY_PANEL]
    if n_panels == 3:
        return [POSITION_PANEL, PARITY_PANEL, PHONON_PANEL]
    raise ValueError(f"n_panels must be 2 or 3, got {n_panels}")


def _draw_panel(ax, traj: Trajectory, spec: PanelSpec, show_jumps: bool, show_modes: bool):
    t = traj.column("t") / TWO_PI
    truth, est = spec.fields
    ax.plot(t, traj.column(truth), color=TRUE_COLOR, lw=1.0,
            label=spec.labels[0] if spec.labels else truth)
    ax.plot(t, traj.column(est), color=EST_COLOR, lw=0.9, alpha=0.85,
            label=spec.labels[1] if spec.labels else est)
    ax.set_ylabel(spec.ylabel)
    if spec.jump_markers and show_jumps:
        for ev in traj.jumps:
            ax.axvline(ev["t"] / TWO_PI, color="0.55", lw=0.6, alpha=0.6, zorder=0)
    if spec.mode_shading and show_modes:
        modes = np.array([MODE_LEVEL.get(m, 0.5) for m in traj.modes()])
        twin = ax.twinx()
        twin.step(t, modes, where="post", color="0.3", ls="--", lw=0.8)
        twin.set_ylim(-0.2, 1.4)
        twin.set_yticks([0.0, 0.5, 1.0], labels=["cool", "idle", "heat"], fontsize=7)
    ax.legend(loc="upper right", fontsize=8, framealpha=0.6)


def render_fig1(
    record_path,
    out_path,
    n_panels: int | None = None,
    show_jumps: bool = True,
    show_modes: bool = True,
    trajectory_index: int = 0,
):
    """Render the standard multi-panel figure for one trajectory.

    Returns the matplotlib Figure. Raises SchemaVersionError on version
    mismatch and ValueError on a record with no samples; no image file is
    written in either case.
    """
    trajs = load_trajectories(record_path)
    traj = trajs[trajectory_index]
    if not traj.samples:
        raise ValueError(f"{record_path}: trajectory {trajectory_index} has no samples")
    specs = panels_for(traj, n_panels)
    for spec in specs:
        spec.validate(traj)

    fig, axes = plt.subplots(
        len(specs), 1, figsize=(7.0, 2.1 * len(specs)), sharex=True
    )
    axes = np.atleast_1d(axes)
    for ax, spec in zip(axes, specs):
        _draw_panel(ax, traj, spec, show_jumps, show_modes)
    axes[-1].set_xlabel("time (periods)")
    pars = traj.physical
    title = (
        f"seed {traj.seed}  Q_eff={1.0/pars['gamma']:.0f}  n_T={pars['n_T']:g}"
        if {"gamma", "n_T"} <= set(pars) and pars.get("gamma")
        else f"seed {traj.seed}"
    )
    axes[0].set_title(title, fontsize=9)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return fig


def render_ensemble_summary(record_path, out_path):
    """Per-trajectory tracking and parity summaries for an ensemble file."""
    trajs = [tr for tr in load_trajectories(record_path) if tr.samples]
    if not trajs:
        raise ValueError(f"{record_path}: no non-empty trajectories")
    seeds, rms, agree = [], [], []
    for tr in trajs:
        x2t, x2e = tr.column("x2_true"), tr.column("x2_est")
        seeds.append(tr.seed)
        rms.append(float(np.sqrt(np.mean((x2e - x2t) ** 2)) / np.mean(x2t)))
        agree.append(
            float(np.mean(tr.column("parity_true") * tr.column("parity_est") > 0))
        )

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.0, 3.0))
    pos = np.arange(len(seeds))
    ax1.bar(pos, rms, color=TRUE_COLOR)
    ax1.set_xticks(pos, labels=[str(s) for s in seeds], fontsize=7)
    ax1.set_xlabel("seed")
    ax1.set_ylabel("relative x^2 RMS error")
    ax2.bar(pos, agree, color=EST_COLOR)
    ax2.set_xticks(pos, labels=[str(s) for s in seeds], fontsize=7)
    ax2.set_ylim(0.0, 1.0)
    ax2.set_xlabel("seed")
    ax2.set_ylabel("parity sign agreement")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return fig
