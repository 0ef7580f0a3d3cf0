"""Figure rendering for maps and calibration reports (files only, no GUI)."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .forward import ComplexMap  # noqa: E402
from .mapops import RealMap, to_db  # noqa: E402

_RC = {
    "font.size": 9,
    "axes.titlesize": 9,
    "axes.labelsize": 9,
    "image.origin": "lower",
    "savefig.dpi": 150,
}


def _extent(grid):
    return (0.0, (grid.n_u - 1) * grid.step_u, 0.0, (grid.n_v - 1) * grid.step_v)


def _display(m):
    """Values and colorbar label for a map: magnitudes go to dB re. their maximum."""
    if isinstance(m, ComplexMap):
        m = RealMap(np.abs(m.data), m.grid, "linear", m.frequency)
    if m.unit == "dB":
        return m.data, "attenuation [dB]"
    peak = m.data.max()
    if peak > 0:
        m = RealMap(m.data / peak, m.grid, "normalized")
    return to_db(m), "normalized magnitude [dB]"


def _panel(ax, m, title):
    values, label = _display(m)
    im = ax.imshow(values, extent=_extent(m.grid), aspect="equal", cmap="viridis")
    ax.set_title(title)
    ax.set_xlabel("u [m]")
    ax.set_ylabel("v [m]")
    return im, label


def plot_map(m, path, title=None):
    """Save a single map as an image."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6.0, 3.6))
        im, label = _panel(ax, m, title or "")
        fig.colorbar(im, ax=ax, label=label, shrink=0.8)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def plot_comparison(panels, path, suptitle=None):
    """Side-by-side panels; ``panels`` is a list of ``(map, title)`` pairs."""
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(1, len(panels), figsize=(4.2 * len(panels), 3.2), squeeze=False)
        for ax, (m, title) in zip(axes[0], panels):
            im, label = _panel(ax, m, title)
            fig.colorbar(im, ax=ax, label=label, shrink=0.8)
        if suptitle:
            fig.suptitle(suptitle)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def plot_calibration(reference, initial, calibrated, result, path):
    """Reference, initial model and calibrated model plus the per-restart correlations."""
    with plt.rc_context(_RC):
        fig = plt.figure(figsize=(13.0, 3.4))
        grid = fig.add_gridspec(1, 4, width_ratios=[1, 1, 1, 0.6])
        panels = [
            (reference, "reference"),
            (initial, f"initial model, rho = {result.initial_rho:.3f}"),
            (calibrated, f"calibrated model, rho = {result.rho_achieved:.3f}"),
        ]
        for k, (m, title) in enumerate(panels):
            ax = fig.add_subplot(grid[0, k])
            im, label = _panel(ax, m, title)
            fig.colorbar(im, ax=ax, label=label, shrink=0.8)
        ax = fig.add_subplot(grid[0, 3])
        idx = [t.index for t in result.restarts]
        ax.bar(idx, [t.final_rho for t in result.restarts], color="0.6", label="final")
        ax.plot(idx, [t.init_rho for t in result.restarts], "o", color="k", ms=3, label="start")
        ax.set_xlabel("restart")
        ax.set_ylabel("rho")
        ax.set_ylim(min(-0.05, min(t.init_rho for t in result.restarts)), 1.05)
        ax.legend(loc="lower center", bbox_to_anchor=(0.5, 1.0), ncol=2, frameon=False)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
