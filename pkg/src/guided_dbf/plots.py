"""Figure rendering for sweep results.

One PNG per scenario, written next to the delimited output. Rendering is
a presentation layer over the tables: the CSV stays the data contract.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .channel import CarrierConfig
from .experiments import SweepResult
from .geometry import separation_bound

_STRATEGY_STYLE = {
    "guided": dict(color="tab:blue", marker="o"),
    "guided-perfect-guide": dict(color="tab:cyan", marker="s"),
    "guided-nonreciprocal": dict(color="tab:orange", marker="v"),
    "location": dict(color="tab:red", marker="d"),
    "feedback": dict(color="tab:green", marker="^"),
    "feedback-ideal": dict(color="tab:green", marker="^"),
    "random": dict(color="tab:gray", marker="x"),
    "protocol": dict(color="tab:blue", marker="o"),
}


def _style(name: str) -> dict:
    return dict(_STRATEGY_STYLE.get(name, {"marker": "o"}))


def _rows_by(rows, key):
    groups: dict = {}
    for r in rows:
        groups.setdefault(key(r), []).append(r)
    return groups


def render(result: SweepResult, path) -> None:
    """Render the scenario's figure to ``path``."""
    fn = _RENDERERS[result.config.scenario]
    fig = fn(result)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def _fig_separation(result: SweepResult):
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for ly, rows in sorted(_rows_by(result.rows, lambda r: r.x2).items()):
        rows = sorted(rows, key=lambda r: r.x1)
        dx = [r.x1 for r in rows]
        ax.errorbar(dx, [r.mean_gain for r in rows],
                    yerr=[r.std_gain for r in rows],
                    label=f"$L_y$ = {ly} m", capsize=2, lw=1.2)
        marker_dx = result.extras.get(f"marker_dx_m.ly_{ly:.10g}")
        if marker_dx is not None:
            near = min(rows, key=lambda r: abs(r.x1 - marker_dx))
            if abs(near.x1 - marker_dx) < 1e-9:
                ax.plot([near.x1], [near.mean_gain], "ko", ms=8, mfc="k",
                        zorder=5)
    ax.set_xlabel("guide separation $d_x$ (m)")
    ax.set_ylabel("mean combining gain")
    ax.set_ylim(0, 1.05)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    ax.set_title("Gain vs. guide separation (dots: closed-form separation)")
    return fig


def _fig_delta(result: SweepResult):
    cfg = result.config
    carrier = CarrierConfig(cfg.fc_hz)
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 7), sharex=True)
    for frac in cfg.delta_frac:
        lys, gains, errs, seps = [], [], [], []
        for ly in cfg.ly_m:
            dx = separation_bound(ly, frac * carrier.wavelength_m)
            row = next(r for r in result.rows
                       if r.x1 == ly and r.x2 == dx)
            lys.append(ly)
            gains.append(row.mean_gain)
            errs.append(row.std_gain)
            seps.append(dx)
        label = f"$\\delta$ = {frac:g}$\\lambda$"
        ax1.errorbar(lys, gains, yerr=errs, label=label, capsize=2, lw=1.2)
        ax2.plot(lys, np.maximum(seps, 1e-3), lw=1.2, label=label)
    ax1.set_ylabel("mean combining gain")
    ax1.set_ylim(0, 1.05)
    ax1.grid(alpha=0.3)
    ax1.legend(fontsize=8)
    ax2.set_yscale("log")
    ax2.set_xlabel("vertical spread $L_y$ (m)")
    ax2.set_ylabel("required separation (m)")
    ax2.grid(alpha=0.3, which="both")
    return fig


def _fig_localization(result: SweepResult):
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 7), sharex=True)
    for strategy, rows in _rows_by(result.rows, lambda r: r.strategy).items():
        rows = sorted(rows, key=lambda r: r.x1)
        ax1.errorbar([r.x1 for r in rows], [r.mean_gain for r in rows],
                     yerr=[r.std_gain for r in rows], label=strategy,
                     capsize=2, lw=1.2, **_style(strategy))
    rows = sorted({r.x1: r for r in result.rows}.values(), key=lambda r: r.x1)
    ax2.plot([r.x1 for r in rows], [r.x2 for r in rows], "o-", lw=1.2)
    ax1.set_ylabel("mean combining gain")
    ax1.set_ylim(0, 1.05)
    ax1.grid(alpha=0.3)
    ax1.legend(fontsize=8)
    ax2.set_xlabel("localization error range $\\Delta P$ (m)")
    ax2.set_ylabel("guide separation used (m)")
    ax2.grid(alpha=0.3)
    return fig


def _fig_kfactor(result: SweepResult):
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for strategy, rows in _rows_by(result.rows, lambda r: r.strategy).items():
        rows = sorted(rows, key=lambda r: r.x1)
        ax.errorbar([r.x1 for r in rows], [r.mean_gain for r in rows],
                    yerr=[r.std_gain for r in rows], label=strategy,
                    capsize=2, lw=1.2, **_style(strategy))
    ax.set_xlabel("Ricean K-factor (dB)")
    ax.set_ylabel("mean combining gain")
    ax.set_ylim(0, 1.05)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    return fig


def _fig_distance(result: SweepResult):
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for strategy, rows in _rows_by(result.rows, lambda r: r.strategy).items():
        rows = sorted(rows, key=lambda r: r.x1)
        ax.errorbar([r.x1 for r in rows], [r.mean_gain for r in rows],
                    yerr=[r.std_gain for r in rows], label=strategy,
                    capsize=2, lw=1.2, **_style(strategy))
    ax.set_xlabel("destination distance (km)")
    ax.set_ylabel("mean combining gain")
    ax.set_ylim(0, 1.05)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    ax.set_title("Guided vs. feedback vs. random phasing over distance")
    return fig


def _fig_beampattern(result: SweepResult):
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for preset, rows in _rows_by(result.rows, lambda r: r.strategy).items():
        rows = sorted(rows, key=lambda r: r.x1)
        ang = np.array([r.x1 for r in rows])
        mean = np.array([r.mean_gain for r in rows])
        std = np.array([r.std_gain for r in rows])
        line, = ax.plot(ang, mean, lw=1.2, label=preset)
        ax.plot(ang, mean + std, ":", lw=0.8, color=line.get_color())
        ax.plot(ang, np.maximum(mean - std, 0), ":", lw=0.8,
                color=line.get_color())
    ax.set_xlabel("angle from beam direction (deg)")
    ax.set_ylabel("mean combining gain")
    ax.set_xlim(-180, 180)
    ax.set_ylim(0, 1.05)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    return fig


def _fig_protocol(result: SweepResult):
    fig, ax = plt.subplots(figsize=(7, 4.5))
    rows = sorted(result.rows, key=lambda r: r.x1)
    ax.errorbar([r.x1 for r in rows], [r.mean_gain for r in rows],
                yerr=[r.std_gain for r in rows], capsize=2, lw=1.2,
                **_style("protocol"))
    ax.set_xlabel("feedback link SNR (dB)")
    ax.set_ylabel("mean combining gain at the feedback radio")
    ax.set_ylim(0, 1.05)
    ax.grid(alpha=0.3)
    return fig


_RENDERERS = {
    "separation-sweep": _fig_separation,
    "delta-sweep": _fig_delta,
    "localization": _fig_localization,
    "kfactor": _fig_kfactor,
    "distance-comparison": _fig_distance,
    "beampattern": _fig_beampattern,
    "protocol-round": _fig_protocol,
}
